#include "cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>

#include <json.hpp>

#include "cli/parallel.hpp"
#include "cli/svg.hpp"
#include "gflow/diagnostics.hpp"
#include "gflow/extensions.hpp"
#include "gflow/schemes.hpp"

namespace gflow::cli {

using Json = nlohmann::ordered_json;

namespace {

constexpr int kFormatVersion = 1;

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw Error(ErrorCode::ParseError, "not a number: '" + s + "'");
  return v;
}

struct Mode {
  enum class Kind { Hilbert, Generalized, Generic, Metric } kind = Kind::Hilbert;
  double p = 2.0;
  double beta = 1.0;
  double gamma = 0.0;
  double scale = 1.0;
};

Mode parse_mode(const std::string& spec) {
  Mode m;
  if (spec.empty() || spec == "hilbert") return m;
  const auto parts = split(spec, ':');
  if (parts[0] == "gen" && parts.size() == 3) {
    m.kind = Mode::Kind::Generalized;
    m.p = parse_number(parts[1]);
    m.beta = parse_number(parts[2]);
    if (!(m.p > 1.0)) throw Error(ErrorCode::OutOfRange, "gen mode needs p > 1");
    if (!(m.beta > 0.0)) throw Error(ErrorCode::NonPositiveParameter, "gen mode needs beta > 0");
    return m;
  }
  if (parts[0] == "generic" && parts.size() == 2) {
    m.kind = Mode::Kind::Generic;
    m.gamma = parse_number(parts[1]);
    if (!(m.gamma >= 0.0)) throw Error(ErrorCode::NonPositiveParameter, "generic mode needs gamma >= 0");
    return m;
  }
  if (parts[0] == "metric" && parts.size() == 2 && parts[1] == "euclid") {
    m.kind = Mode::Kind::Metric;
    return m;
  }
  if (parts[0] == "metric" && parts.size() == 3 && parts[1] == "scaled") {
    m.kind = Mode::Kind::Metric;
    m.scale = parse_number(parts[2]);
    if (!(m.scale > 0.0)) throw Error(ErrorCode::NonPositiveParameter, "metric scale must be positive");
    return m;
  }
  throw Error(ErrorCode::ParseError, "unknown mode '" + spec + "'");
}

std::ofstream open_file(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::InvalidArgument, "cannot open '" + path + "' for writing");
  return f;
}

// Writes to `path`, or to `fallback` when the path is empty.
void emit(const std::string& path, std::ostream& fallback, const std::function<void(std::ostream&)>& body) {
  if (path.empty()) {
    body(fallback);
    return;
  }
  std::ofstream f = open_file(path);
  body(f);
}

Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v[i]));
  return a;
}

Vector initial_state(const ExperimentConfig& cfg, int dim, const Vector& fallback) {
  if (cfg.u0.empty()) return fallback;
  if (static_cast<int>(cfg.u0.size()) != dim)
    throw Error(ErrorCode::DimensionMismatch,
                "--u0 has " + std::to_string(cfg.u0.size()) + " entries, model dimension is " + std::to_string(dim));
  return Eigen::Map<const Vector>(cfg.u0.data(), dim);
}

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitSolver;
  }
}

std::string single_scheme(const ExperimentConfig& cfg, const char* fallback) {
  if (cfg.schemes.size() > 1) throw Error(ErrorCode::InvalidArgument, "run takes a single --scheme");
  return cfg.schemes.empty() ? fallback : cfg.schemes.front();
}

Json status_counts(const Trajectory& t) {
  std::map<std::string, int> counts;
  for (const auto& r : t.records()) ++counts[std::string(to_string(r.status))];
  if (t.failure()) ++counts["Failed"];
  Json j = Json::object();
  for (const auto& [k, v] : counts) j[k] = v;
  return j;
}

Vector random_vector(std::mt19937_64& rng, int dim, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v[i] = u(rng);
  return v;
}

constexpr int kSamples = 200;

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveHorizon:
    case ErrorCode::ZeroSteps:
    case ErrorCode::OutOfRange:
    case ErrorCode::NonPositiveParameter:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::InvalidArgument:
    case ErrorCode::GradientUnavailable:
    case ErrorCode::HessianUnavailable:
    case ErrorCode::MissingRegularityMetadata:
    case ErrorCode::ParseError:
      return kExitConfig;
    default:
      return kExitSolver;
  }
}

// ---------------------------------------------------------------------------

int cmd_run(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    cfg.solver.validate();
    const Mode mode = parse_mode(cfg.mode);
    const Partition part = make_uniform_partition(cfg.horizon, cfg.steps);
    std::mt19937_64 rng(cfg.seed);

    Json summary;
    summary["format_version"] = kFormatVersion;
    summary["command"] = "run";
    summary["mode"] = cfg.mode.empty() ? "hilbert" : cfg.mode;

    std::optional<Trajectory> traj;
    std::function<double(const Vector&)> energy, slope;
    std::vector<ExtraColumn> extra;
    double dissipation = 0.0;
    Json checks = Json::object();

    auto increments = [&](const Trajectory& t, const std::function<double(const Vector&, const Vector&)>& d) {
      for (std::size_t i = 1; i < t.states().size(); ++i) {
        const double di = d(t.states()[i], t.states()[i - 1]);
        dissipation += di * di / part.step(i);
      }
    };
    auto euclid = [](const Vector& a, const Vector& b) { return (a - b).norm(); };

    switch (mode.kind) {
      case Mode::Kind::Hilbert: {
        const PotentialModel p = parse_potential(cfg.potential);
        const SchemeKind kind = parse_scheme(single_scheme(cfg, "euler"));
        summary["scheme"] = to_string(kind);
        summary["potential"] = cfg.potential;
        traj = run_scheme(kind, p, initial_state(cfg, p.dim, Vector::Ones(p.dim)), part, cfg.solver);
        energy = p.value;
        if (p.has_gradient()) slope = [p](const Vector& u) { return p.grad(u).norm(); };
        increments(*traj, euclid);
        if (p.has_hessian()) {
          std::vector<std::pair<Vector, Vector>> samples;
          for (int k = 0; k < kSamples; ++k) samples.emplace_back(random_vector(rng, p.dim, 2.0), random_vector(rng, p.dim, 1.0));
          const auto ph = check_parallel_hessian(p, samples);
          checks["parallel_hessian"] = ph.parallel;
          checks["parallel_hessian_worst_defect"] = ph.worst_defect;
        }
        break;
      }
      case Mode::Kind::Generalized: {
        const PotentialModel p = parse_potential(cfg.potential);
        const std::string name = single_scheme(cfg, "dg-root:near");
        GeneralizedMethod method;
        if (name == "euler") {
          method = GeneralizedMethod::Euler;
        } else if (name == "dg-root:near" || name == "dg-root") {
          method = GeneralizedMethod::DeGiorgi;
        } else {
          throw Error(ErrorCode::InvalidArgument, "gen mode supports --scheme euler or dg-root:near");
        }
        summary["scheme"] = name;
        summary["potential"] = cfg.potential;
        const auto psi = DissipationPotential::constant(mode.p, mode.beta);
        traj = run_generalized(method, p, psi, initial_state(cfg, p.dim, Vector::Ones(p.dim)), part, cfg.solver);
        energy = p.value;
        slope = [p](const Vector& u) { return p.grad(u).norm(); };
        for (std::size_t i = 1; i < traj->states().size(); ++i) {
          const double tau = part.step(i);
          const Vector& v = traj->states()[i - 1];
          const Vector& u = traj->states()[i];
          dissipation += tau * (psi.value(v, (u - v) / tau) + psi.conjugate(v, -p.grad(u)));
        }
        double min_gap = std::numeric_limits<double>::infinity();
        for (int k = 0; k < kSamples; ++k) {
          const Vector u = random_vector(rng, p.dim, 2.0);
          min_gap = std::min(min_gap, psi.fenchel_gap(u, random_vector(rng, p.dim, 2.0), random_vector(rng, p.dim, 2.0)));
        }
        checks["fenchel_gap_min"] = min_gap;
        break;
      }
      case Mode::Kind::Generic: {
        const GenericSystem sys = damped_oscillator(mode.gamma);
        summary["system"] = sys.name;
        GenericTrajectory gt = run_generic(sys, initial_state(cfg, sys.dim, Vector{{1.0, 0.0, 0.0}}), part, cfg.solver);
        energy = sys.entropy;
        slope = [sys](const Vector& u) { return sys.entropy_gradient(u).norm(); };
        extra = {{"energy_E", gt.energy}, {"entropy_phi", gt.entropy}, {"compat_defect", gt.compat_defect}};
        traj = std::move(gt.trajectory);
        increments(*traj, euclid);
        StructureDefects worst;
        worst.min_eigenvalue = std::numeric_limits<double>::infinity();
        for (int k = 0; k < kSamples; ++k) {
          const StructureDefects d = structure_defects(sys, random_vector(rng, sys.dim, 2.0));
          worst.antisymmetry = std::max(worst.antisymmetry, d.antisymmetry);
          worst.symmetry = std::max(worst.symmetry, d.symmetry);
          worst.min_eigenvalue = std::min(worst.min_eigenvalue, d.min_eigenvalue);
          worst.compatibility = std::max(worst.compatibility, d.compatibility);
        }
        checks["antisymmetry"] = worst.antisymmetry;
        checks["onsager_symmetry"] = worst.symmetry;
        checks["onsager_min_eigenvalue"] = worst.min_eigenvalue;
        checks["compatibility"] = worst.compatibility;
        break;
      }
      case Mode::Kind::Metric: {
        const PotentialModel p = parse_potential(cfg.potential);
        const MetricSpaceModel m = cfg.mode == "metric:euclid" ? euclidean_metric(p) : scaled_metric(p, mode.scale);
        const std::string name = single_scheme(cfg, "dg-min");
        MetricMethod method;
        if (name == "euler") {
          method = MetricMethod::Euler;
        } else if (name == "dg-min") {
          method = MetricMethod::DeGiorgi;
        } else {
          throw Error(ErrorCode::InvalidArgument, "metric mode supports --scheme euler or dg-min");
        }
        summary["scheme"] = name;
        summary["potential"] = cfg.potential;
        traj = run_metric(method, m, initial_state(cfg, m.dim, Vector::Ones(m.dim)), part, cfg.solver);
        energy = m.phi;
        slope = m.local_slope;
        increments(*traj, m.distance);
        double tri = 0.0, sym = 0.0, geo = 0.0;
        for (int k = 0; k < kSamples; ++k) {
          const Vector x = random_vector(rng, m.dim, 2.0), y = random_vector(rng, m.dim, 2.0),
                       z = random_vector(rng, m.dim, 2.0);
          sym = std::max(sym, std::abs(m.distance(x, y) - m.distance(y, x)));
          tri = std::max(tri, m.distance(x, z) - m.distance(x, y) - m.distance(y, z));
          std::uniform_real_distribution<double> th(0.0, 1.0);
          const double a = th(rng), b = th(rng);
          geo = std::max(geo, std::abs(m.distance(m.segment(x, y, a), m.segment(x, y, b)) -
                                       std::abs(a - b) * m.distance(x, y)));
        }
        checks["distance_symmetry"] = sym;
        checks["triangle_excess"] = tri;
        checks["geodesic_defect"] = geo;
        break;
      }
    }

    const Trajectory& t = *traj;
    emit(cfg.out_path, out, [&](std::ostream& os) { write_trajectory_csv(os, t, energy, slope, extra); });

    double residual_total = 0.0, residual_pos = 0.0;
    for (const auto& r : t.records()) {
      residual_total += r.residual;
      residual_pos += std::max(0.0, r.residual);
    }
    summary["u0"] = vector_json(t.states().front());
    summary["T"] = cfg.horizon;
    summary["steps"] = cfg.steps;
    summary["completed_steps"] = t.records().size();
    summary["status_counts"] = status_counts(t);
    summary["final_time"] = t.last_time();
    summary["final_state"] = vector_json(t.states().back());
    const double e0 = energy(t.states().front()), e1 = energy(t.states().back());
    summary["energy_initial"] = number(e0);
    summary["energy_final"] = number(e1);
    summary["energy_drop"] = number(e0 - e1);
    summary["total_dissipation"] = number(dissipation);
    summary["residual_total"] = number(residual_total);
    summary["residual_positive_total"] = number(residual_pos);
    summary["failure"] = t.failure() ? Json(t.failure()->message) : Json(nullptr);
    summary["seed"] = cfg.seed;
    summary["sampled_checks"] = checks;
    emit(cfg.summary_path, err, [&](std::ostream& os) { os << summary.dump(2) << "\n"; });

    if (t.failure()) {
      err << "solver failure: " << t.failure()->message << "\n";
      return static_cast<int>(kExitSolver);
    }
    return static_cast<int>(kExitOk);
  });
}

// ---------------------------------------------------------------------------

int cmd_rates(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    cfg.solver.validate();
    if (!cfg.mode.empty() && cfg.mode != "hilbert")
      throw Error(ErrorCode::InvalidArgument, "rates only supports the Hilbert schemes");
    if (cfg.k_min < 0 || cfg.k_max > 24 || cfg.k_max - cfg.k_min + 1 < 4)
      throw Error(ErrorCode::InvalidArgument, "need at least 4 refinement levels with 0 <= k-min, k-max <= 24");
    if (!cfg.svg_path.empty() && cfg.csv_path.empty())
      throw Error(ErrorCode::InvalidArgument, "--svg needs --csv (plots must be backed by data)");
    const PotentialModel p = parse_potential(cfg.potential);
    if (!p.exact_flow) throw Error(ErrorCode::InvalidArgument, p.name + " has no exact flow to measure errors against");
    std::vector<SchemeKind> kinds;
    const std::vector<std::string> names =
        cfg.schemes.empty() ? std::vector<std::string>{"euler", "gonzalez", "dg-root:far", "dg-min"} : cfg.schemes;
    for (const auto& n : names) kinds.push_back(parse_scheme(n));
    const Vector u0 = initial_state(cfg, p.dim, Vector::Ones(p.dim));

    std::vector<double> taus;
    std::vector<int> counts;
    for (int k = cfg.k_min; k <= cfg.k_max; ++k) {
      counts.push_back(1 << k);
      taus.push_back(cfg.horizon / counts.back());
    }
    const std::size_t levels = taus.size();
    std::vector<double> errors(kinds.size() * levels, 0.0);
    std::vector<std::string> failures(kinds.size() * levels);
    parallel_for(errors.size(), [&](std::size_t job) {
      const std::size_t s = job / levels, l = job % levels;
      const Trajectory t = run_scheme(kinds[s], p, u0, make_uniform_partition(cfg.horizon, counts[l]), cfg.solver);
      if (t.failure()) {
        failures[job] = t.failure()->message;
        return;
      }
      errors[job] = grid_sup_error(t, [&](double time) { return p.exact_flow(u0, time); }).state;
    });
    for (std::size_t job = 0; job < failures.size(); ++job) {
      if (!failures[job].empty()) {
        err << "solver failure (" << names[job / levels] << ", tau=" << format_double(taus[job % levels])
            << "): " << failures[job] << "\n";
        return static_cast<int>(kExitSolver);
      }
    }

    struct Row {
      std::string name;
      std::vector<double> errors;
    };
    std::vector<Row> rows;
    for (std::size_t s = 0; s < kinds.size(); ++s)
      rows.push_back({to_string(kinds[s]), std::vector<double>(errors.begin() + s * levels,
                                                               errors.begin() + (s + 1) * levels)});
    if (cfg.planted) {
      Row r{"planted", {}};
      for (double tau : taus) r.errors.push_back(cfg.planted->first * std::pow(tau, cfg.planted->second));
      rows.push_back(std::move(r));
    }

    Json result;
    result["format_version"] = kFormatVersion;
    result["command"] = "rates";
    result["potential"] = cfg.potential;
    result["u0"] = vector_json(u0);
    result["T"] = cfg.horizon;
    result["tau"] = taus;
    Json series = Json::array();
    for (const auto& r : rows) {
      Json entry;
      entry["scheme"] = r.name;
      entry["errors"] = r.errors;
      const RateReport rep = estimate_rate(taus, r.errors);
      entry["slope"] = rep.slope;
      entry["r_squared"] = rep.r_squared;
      series.push_back(entry);
    }
    result["series"] = series;

    if (!cfg.csv_path.empty()) {
      emit(cfg.csv_path, out, [&](std::ostream& os) {
        os << "tau";
        for (const auto& r : rows) os << ',' << r.name;
        os << '\n';
        for (std::size_t l = 0; l < levels; ++l) {
          os << format_double(taus[l]);
          for (const auto& r : rows) os << ',' << format_double(r.errors[l]);
          os << '\n';
        }
      });
    }
    if (!cfg.json_path.empty()) emit(cfg.json_path, out, [&](std::ostream& os) { os << result.dump(2) << "\n"; });
    if (!cfg.svg_path.empty()) {
      SvgPlot plot("error vs tau (" + cfg.potential + ")", "tau", "sup-norm error", true, true);
      for (const auto& r : rows) plot.add_series(r.name, taus, r.errors);
      // Reference orders anchored at the coarsest error of the first series.
      const double anchor = rows.front().errors.front();
      for (double order : {0.5, 1.0, 2.0}) {
        std::vector<double> guide;
        for (double tau : taus) guide.push_back(anchor * std::pow(tau / taus.front(), order));
        plot.add_series("order " + format_double(order), taus, guide, true);
      }
      emit(cfg.svg_path, out, [&](std::ostream& os) { plot.write(os); });
    }
    out << result.dump(2) << "\n";
    return static_cast<int>(kExitOk);
  });
}

// ---------------------------------------------------------------------------

int cmd_compare(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    cfg.solver.validate();
    if (!(cfg.lambda > 0.0)) throw Error(ErrorCode::NonPositiveParameter, "--lambda must be positive");
    if (cfg.iterations < 1) throw Error(ErrorCode::ZeroSteps, "--iterations must be positive");
    if (!cfg.svg_path.empty() && cfg.reduction_csv_path.empty())
      throw Error(ErrorCode::InvalidArgument, "--svg needs --reduction-csv (plots must be backed by data)");
    const std::vector<double> tl =
        cfg.tau_lambda.empty() ? std::vector<double>{0.1, 0.5, 1.0, 2.0, 5.0} : cfg.tau_lambda;
    for (double a : tl)
      if (!(a > 0.0)) throw Error(ErrorCode::NonPositiveParameter, "tau*lambda values must be positive");
    const std::vector<SchemeKind> kinds = {SchemeKind::euler(), SchemeKind::gonzalez(),
                                           SchemeKind::degiorgi_root(Branch::Far), SchemeKind::degiorgi_min()};
    const PotentialModel p = quadratic_1d(cfg.lambda);
    const int n = cfg.iterations;

    std::vector<std::optional<Trajectory>> slots(tl.size() * kinds.size());
    parallel_for(slots.size(), [&](std::size_t job) {
      const double tau = tl[job / kinds.size()] / cfg.lambda;
      slots[job] = run_scheme(kinds[job % kinds.size()], p, Vector::Ones(1),
                              make_uniform_partition(tau * n, n), cfg.solver);
    });

    double max_dev = 0.0;
    std::string failure;
    Json reduction = Json::array();
    std::ostringstream series_csv, reduction_csv;
    series_csv << "tau_lambda,scheme,iteration,state,phi,closed_state,closed_phi\n";
    reduction_csv << "tau_lambda";
    for (SchemeKind k : kinds) reduction_csv << ',' << to_string(k) << ',' << to_string(k) << "_closed";
    reduction_csv << '\n';

    for (std::size_t a = 0; a < tl.size(); ++a) {
      const double tau = tl[a] / cfg.lambda;
      Json row;
      row["tau_lambda"] = tl[a];
      reduction_csv << format_double(tl[a]);
      for (std::size_t s = 0; s < kinds.size(); ++s) {
        const Trajectory& t = *slots[a * kinds.size() + s];
        if (t.failure() && failure.empty()) failure = to_string(kinds[s]) + " at tau*lambda=" + format_double(tl[a]) + ": " + t.failure()->message;
        const auto closed = closed_form_sequence(kinds[s], cfg.lambda, tau, n);
        for (std::size_t i = 0; i < t.states().size(); ++i) {
          const double u = t.states()[i][0];
          max_dev = std::max(max_dev, std::abs(u - closed[i]));
          series_csv << format_double(tl[a]) << ',' << to_string(kinds[s]) << ',' << i << ',' << format_double(u)
                     << ',' << format_double(p.eval(t.states()[i])) << ',' << format_double(closed[i]) << ','
                     << format_double(0.5 * cfg.lambda * closed[i] * closed[i]) << '\n';
        }
        const double phi_n = t.complete() ? p.eval(t.states().back()) : std::nan("");
        const double phi_closed = 0.5 * cfg.lambda * closed.back() * closed.back();
        reduction_csv << ',' << format_double(phi_n) << ',' << format_double(phi_closed);
        row[to_string(kinds[s])] = {{"numeric", number(phi_n)}, {"closed", phi_closed}};
      }
      reduction_csv << '\n';
      reduction.push_back(row);
    }

    if (!cfg.series_csv_path.empty()) emit(cfg.series_csv_path, out, [&](std::ostream& os) { os << series_csv.str(); });
    if (!cfg.reduction_csv_path.empty())
      emit(cfg.reduction_csv_path, out, [&](std::ostream& os) { os << reduction_csv.str(); });
    if (!cfg.svg_path.empty()) {
      SvgPlot plot("potential after " + std::to_string(n) + " iterations", "tau*lambda", "phi(u_N)", true, true);
      for (std::size_t s = 0; s < kinds.size(); ++s) {
        std::vector<double> ys;
        for (std::size_t a = 0; a < tl.size(); ++a) {
          const Trajectory& t = *slots[a * kinds.size() + s];
          ys.push_back(t.complete() ? p.eval(t.states().back()) : std::nan(""));
        }
        plot.add_series(to_string(kinds[s]), tl, ys);
      }
      emit(cfg.svg_path, out, [&](std::ostream& os) { plot.write(os); });
    }

    Json result;
    result["format_version"] = kFormatVersion;
    result["command"] = "compare";
    result["lambda"] = cfg.lambda;
    result["iterations"] = n;
    result["max_closed_form_deviation"] = max_dev;
    result["closed_form_agreement"] = max_dev <= 1e-9;
    result["reduction"] = reduction;
    out << result.dump(2) << "\n";
    if (!failure.empty()) {
      err << "solver failure: " << failure << "\n";
      return static_cast<int>(kExitSolver);
    }
    if (max_dev > 1e-9) {
      err << "closed-form cross-check failed: deviation " << format_double(max_dev) << "\n";
      return static_cast<int>(kExitSolver);
    }
    return static_cast<int>(kExitOk);
  });
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> expand_inputs(const std::vector<std::string>& inputs) {
  namespace fs = std::filesystem;
  std::vector<std::string> files;
  for (const auto& in : inputs) {
    std::error_code ec;
    if (fs::is_directory(in, ec)) {
      std::vector<std::string> found;
      for (const auto& entry : fs::directory_iterator(in))
        if (entry.is_regular_file() && entry.path().extension() == ".csv") found.push_back(entry.path().string());
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(in);
    }
  }
  return files;
}

Json certificate_json(const Certificate& c, const PotentialModel& p) {
  Json j;
  j["steps"] = c.per_step_positive_parts.size();
  j["total"] = c.total;
  j["holder_bound"] = p.holder ? Json(c.holder_bound) : Json(nullptr);
  return j;
}

}  // namespace

int cmd_certify(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const PotentialModel p = parse_potential(cfg.potential);
    const auto files = expand_inputs(cfg.inputs);
    if (files.empty()) throw Error(ErrorCode::InvalidArgument, "certify needs at least one --in");
    std::vector<Trajectory> trajs;
    for (const auto& f : files) {
      std::ifstream in(f);
      if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read '" + f + "'");
      try {
        Trajectory t = trajectory_from_table(read_trajectory_csv(in));
        if (t.dim() != static_cast<std::size_t>(p.dim))
          throw Error(ErrorCode::DimensionMismatch, "state dimension does not match " + p.name);
        trajs.push_back(std::move(t));
      } catch (const Error& e) {
        throw Error(e.code(), f + ": " + e.what());
      }
    }

    Json result;
    result["format_version"] = kFormatVersion;
    result["command"] = "certify";
    result["potential"] = cfg.potential;
    Verdict verdict;
    if (trajs.size() == 1) {
      const Certificate c = certify(trajs.front(), p);
      result["input"] = files.front();
      result.update(certificate_json(c, p));
      result["per_step"] = c.per_step_positive_parts;
      verdict = c.verdict;
    } else {
      const SweepCertificate sc = certify_sweep(trajs, p);
      // Members come back ordered by decreasing fineness; recover file names.
      std::vector<std::size_t> order(trajs.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return trajs[a].partition().fineness() > trajs[b].partition().fineness();
      });
      Json members = Json::array();
      for (std::size_t k = 0; k < sc.members.size(); ++k) {
        Json m = certificate_json(sc.members[k], p);
        m["input"] = files[order[k]];
        m["fineness"] = sc.fineness[k];
        members.push_back(m);
      }
      result["members"] = members;
      result["total"] = sc.members.back().total;
      result["holder_bound"] = p.holder ? Json(sc.members.back().holder_bound) : Json(nullptr);
      result["trend"] = sc.trend ? Json{{"order", sc.trend->slope}, {"r_squared", sc.trend->r_squared}} : Json(nullptr);
      verdict = sc.verdict;
    }
    result["verdict"] = to_string(verdict);
    out << result.dump(2) << "\n";
    return static_cast<int>(verdict == Verdict::CertifiedTrend ? kExitOk : kExitInconclusive);
  });
}

int dispatch(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.command == "run") return cmd_run(cfg, out, err);
  if (cfg.command == "rates") return cmd_rates(cfg, out, err);
  if (cfg.command == "compare") return cmd_compare(cfg, out, err);
  if (cfg.command == "certify") return cmd_certify(cfg, out, err);
  err << "error: unknown command '" << cfg.command << "'\n";
  return kExitConfig;
}

}  // namespace gflow::cli
