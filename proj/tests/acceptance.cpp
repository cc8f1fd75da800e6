// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gflow/diagnostics.hpp"
#include "gflow/extensions.hpp"
#include "gflow/schemes.hpp"
#include "oracles.hpp"

using namespace gflow;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

void require(Outcome& o, bool ok, const std::string& what) {
  if (!ok) {
    o.pass = false;
    o.detail += " [violated: " + what + "]";
  }
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

double sup_node_error(const Trajectory& t, const PotentialModel& p) {
  double e = 0.0;
  const auto& times = t.partition().times();
  for (std::size_t i = 0; i < t.states().size(); ++i)
    e = std::max(e, (t.states()[i] - p.exact_flow(t.states()[0], times[i])).norm());
  return e;
}

std::string why(const Trajectory& t) { return t.failure() ? " (" + t.failure()->message + ")" : ""; }

const std::vector<SchemeKind> kFour = {SchemeKind::euler(), SchemeKind::gonzalez(),
                                       SchemeKind::degiorgi_root(Branch::Far), SchemeKind::degiorgi_min()};

// 1 ------------------------------------------------------------------------
Outcome closed_form_equivalence() {
  Outcome o;
  const double lambda = 1.0;
  double worst = 0.0;
  for (double a : {0.1, 0.5, 2.0, 5.0}) {
    const double tau = a / lambda;
    const auto part = make_uniform_partition(20 * tau, 20);
    const auto p = quadratic_1d(lambda);
    for (SchemeKind k : kFour) {
      const Trajectory t = run_scheme(k, p, vec({1.0}), part);
      require(o, t.complete(), to_string(k) + " incomplete at a=" + fmt(a) + why(t));
      if (!t.complete()) continue;
      const auto lib = closed_form_sequence(k, lambda, tau, 20);
      // Product formulas evaluated here, independently of the library.
      double factor = 0.0;
      switch (k.method) {
        case SchemeKind::Method::Euler: factor = 1.0 / (1.0 + a); break;
        case SchemeKind::Method::Gonzalez: factor = (2.0 - a) / (2.0 + a); break;
        case SchemeKind::Method::DeGiorgiRoot: factor = (1.0 - std::pow(a, 1.5)) / (1.0 + a + a * a); break;
        case SchemeKind::Method::DeGiorgiMin: factor = 1.0 / (1.0 + a + a * a); break;
      }
      for (int i = 0; i <= 20; ++i) {
        const double ref = std::pow(factor, i);
        const double err = std::abs(t.states()[i][0] - ref);
        worst = std::max({worst, err, std::abs(lib[i] - ref)});
      }
    }
  }
  require(o, worst <= 1e-10, "max |numeric - closed form| = " + fmt(worst));
  o.detail = "max deviation " + fmt(worst) + o.detail;
  return o;
}

// 2 ------------------------------------------------------------------------
Outcome scalar_rates() {
  Outcome o;
  const auto p = quadratic_1d(1.0);
  const double target[] = {1.0, 2.0, 0.5, 1.0};
  for (std::size_t s = 0; s < kFour.size(); ++s) {
    std::vector<double> taus, errs;
    for (int k = 3; k <= 10; ++k) {
      const int n = 1 << k;
      const Trajectory t = run_scheme(kFour[s], p, vec({1.0}), make_uniform_partition(1.0, n));
      require(o, t.complete(), to_string(kFour[s]) + " incomplete");
      taus.push_back(1.0 / n);
      errs.push_back(sup_node_error(t, p));
    }
    const double slope = estimate_rate(taus, errs).slope;
    o.detail += " " + to_string(kFour[s]) + "=" + fmt(slope);
    require(o, std::abs(slope - target[s]) <= 0.15, to_string(kFour[s]) + " slope");
  }
  return o;
}

// 3 ------------------------------------------------------------------------
Outcome gonzalez_sharpness() {
  Outcome o;
  auto slope_for = [&](const PotentialModel& p, const Vector& u0) {
    std::vector<double> taus, errs;
    for (int k = 3; k <= 10; ++k) {
      const int n = 1 << k;
      const Trajectory t = run_scheme(SchemeKind::gonzalez(), p, u0, make_uniform_partition(1.0, n));
      require(o, t.complete(), p.name + " incomplete");
      taus.push_back(1.0 / n);
      errs.push_back(sup_node_error(t, p));
    }
    return estimate_rate(taus, errs).slope;
  };
  const double s1 = slope_for(aniso_quadratic_2d(), vec({1.0, 1.0}));
  const double s2 = slope_for(radial_quadratic(1.0, 2), vec({1.0, 1.0}));
  o.detail = "aniso2d=" + fmt(s1) + " radial(1,2)=" + fmt(s2);
  require(o, std::abs(s1 - 1.0) <= 0.15, "aniso2d slope");
  require(o, std::abs(s2 - 2.0) <= 0.15, "radial slope");
  return o;
}

// 4 ------------------------------------------------------------------------
Outcome energy_identities() {
  Outcome o;
  struct Case {
    PotentialModel p;
    Vector u0;
    double T;
  };
  const std::vector<Case> catalog = {
      {quadratic_1d(1.0), vec({1.0}), 2.0},           {quadratic_1d(3.0), vec({-2.0}), 2.0},
      {aniso_quadratic_2d(), vec({1.0, -0.5}), 2.0},  {radial_quadratic(1.0, 2), vec({1.0, 1.0}), 2.0},
      {radial_quadratic(2.0, 3), vec({0.3, -1.0, 2.0}), 2.0}, {logistic_nonconvex(), vec({0.2}), 1.0},
  };
  const std::vector<SchemeKind> schemes = {SchemeKind::gonzalez(), SchemeKind::degiorgi_root(Branch::Near),
                                           SchemeKind::degiorgi_root(Branch::Far), SchemeKind::degiorgi_min()};
  long steps = 0, gonzalez_n = 0, root_exact = 0, dgmin_n = 0;
  double worst_balance = 0, worst_align = 0, worst_root = 0, worst_min = -1e300, worst_min_bound = -1e300;
  for (const Case& c : catalog) {
    for (SchemeKind k : schemes) {
      for (int n : {16, 32, 64}) {
        const auto part = make_uniform_partition(c.T, n);
        const Trajectory t = run_scheme(k, c.p, c.u0, part);
        require(o, t.complete(), to_string(k) + " on " + c.p.name + " incomplete" + why(t));
        for (std::size_t i = 1; i < t.states().size(); ++i) {
          const Vector& v = t.states()[i - 1];
          const Vector& u = t.states()[i];
          const double tau = part.step(i);
          const StepRecord& r = t.records()[i - 1];
          ++steps;
          if (r.status == StepStatus::Stationary) continue;
          const double G = degiorgi_functional(c.p, u, v, tau);
          switch (k.method) {
            case SchemeKind::Method::Gonzalez: {
              ++gonzalez_n;
              const double bal = c.p.eval(u) + (u - v).squaredNorm() / tau - c.p.eval(v);
              worst_balance = std::max(worst_balance, std::abs(bal));
              worst_align = std::max(worst_align, alignment_defect(c.p, u, v));
              break;
            }
            case SchemeKind::Method::DeGiorgiRoot:
              if (r.status == StepStatus::Exact) {
                ++root_exact;
                worst_root = std::max(worst_root, std::abs(G));
              }
              break;
            case SchemeKind::Method::DeGiorgiMin:
              // The nonpositivity bound needs convexity.
              if (c.p.convex) {
                ++dgmin_n;
                worst_min = std::max(worst_min, G);
                worst_min_bound = std::max(worst_min_bound, G - 0.5 * tau * c.p.grad(v).squaredNorm());
              }
              break;
            default: break;
          }
        }
      }
    }
  }
  o.detail.insert(0, std::to_string(steps) + " steps; gonzalez balance " + fmt(worst_balance) + " align " +
             fmt(worst_align) + "; exact root |G| " + fmt(worst_root) + " (" + std::to_string(root_exact) +
             " steps); dg-min max G " + fmt(worst_min) + " (" + std::to_string(dgmin_n) + " steps)");
  require(o, steps >= 1000, "fewer than 1000 steps");
  require(o, gonzalez_n > 0 && root_exact > 0 && dgmin_n > 0, "empty category");
  require(o, worst_balance <= 1e-9, "gonzalez balance");
  require(o, worst_align <= 1e-8, "alignment");
  require(o, worst_root <= 1e-9, "exact root residual");
  require(o, worst_min <= 1e-12, "dg-min G <= 0");
  require(o, worst_min_bound <= 0.0, "dg-min G <= (tau/2)|Dphi(v)|^2");
  return o;
}

// 5 ------------------------------------------------------------------------
Outcome certificate_behavior() {
  Outcome o;
  const auto logistic = logistic_nonconvex();
  std::vector<Trajectory> sweep;
  std::vector<double> taus, totals;
  for (int k = 3; k <= 8; ++k) {
    const int n = 1 << k;
    sweep.push_back(run_scheme(SchemeKind::euler(), logistic, vec({0.0}), make_uniform_partition(1.0, n)));
    taus.push_back(1.0 / n);
    totals.push_back(certify(sweep.back(), logistic).total);
  }
  const double order = oracle::loglog_slope(taus, totals);
  const SweepCertificate sc = certify_sweep(sweep, logistic);
  o.detail.insert(0, "euler sweep order " + fmt(order) + " verdict " + to_string(sc.verdict));
  require(o, std::abs(order - 1.0) <= 0.2, "sweep order");
  require(o, sc.verdict == Verdict::CertifiedTrend, "sweep verdict");

  // Frozen trajectory u_i = u_0 with Dφ(u_0) != 0.
  const auto p = quadratic_1d(1.0);
  const double T = 1.0;
  const Vector u0 = vec({1.0});
  Trajectory frozen(make_uniform_partition(T, 10), u0);
  for (int i = 0; i < 10; ++i) frozen.push(u0, StepRecord{});
  const Certificate c = certify(frozen, p);
  const double expected = 0.5 * T * p.grad(u0).squaredNorm();
  o.detail += "; frozen total " + fmt(c.total) + " verdict " + to_string(c.verdict);
  require(o, c.verdict == Verdict::Inconclusive, "frozen verdict");
  require(o, std::abs(c.total - expected) <= 1e-12, "frozen total");
  return o;
}

// 6 ------------------------------------------------------------------------
Outcome edge_cases() {
  Outcome o;
  const auto logistic = logistic_nonconvex();
  for (double tau : {0.05, 0.1, 0.2}) {
    const StepResult r = degiorgi_root_step(logistic, vec({0.0}), tau, Branch::Far);
    const double inc2 = r.record.increment_norm * r.record.increment_norm;
    require(o, r.record.status == StepStatus::ResidualAccepted, "logistic status at tau=" + fmt(tau));
    require(o, r.record.residual <= inc2 * (1.0 + 1e-12), "logistic rho <= |du|^2 at tau=" + fmt(tau));
  }
  const auto obstacle = obstacle_linear();
  double worst = 0.0;
  bool within = true;
  for (int n : {10, 20, 40}) {
    const double tau = 1.0 / n;
    const Trajectory t = run_scheme(SchemeKind::euler(), obstacle, vec({2.0}), make_uniform_partition(1.0, n));
    require(o, t.complete(), "obstacle euler incomplete");
    const GridError ge = grid_sup_error(t, [](double s) { return vec({std::max(2.0 - s, std::sqrt(2.0))}); });
    worst = std::max(worst, ge.state);
    within = within && ge.state <= tau;
  }
  require(o, within, "obstacle euler grid error <= tau");
  const Trajectory g = run_scheme(SchemeKind::gonzalez(), obstacle, vec({2.0}), make_uniform_partition(1.0, 10));
  const bool failed = g.failure().has_value() && g.failure()->status == StepStatus::Failed;
  // 2 - 0.6 < √2: the sixth step has no solution in the effective domain.
  require(o, failed && g.states().size() == 6, "gonzalez obstacle fails at step 6");
  o.detail = "obstacle euler grid error " + fmt(worst) + "; gonzalez " +
             (failed ? "Failed after " + std::to_string(g.states().size() - 1) + " steps" : "did not fail") +
             o.detail;
  return o;
}

// 7 ------------------------------------------------------------------------
Outcome generalized_flows() {
  Outcome o;
  const auto psi2 = DissipationPotential::constant(2.0, 1.0);
  double worst = 0.0;
  struct Case {
    PotentialModel p;
    Vector u0;
  };
  const std::vector<Case> cases = {{quadratic_1d(1.0), vec({1.0})},
                                   {aniso_quadratic_2d(), vec({1.0, 1.0})},
                                   {radial_quadratic(2.0, 3), vec({1.0, -1.0, 0.5})}};
  for (const Case& c : cases) {
    for (double tau : {0.05, 0.5}) {
      const auto part = make_uniform_partition(10 * tau, 10);
      const Trajectory ge = run_generalized(GeneralizedMethod::Euler, c.p, psi2, c.u0, part);
      const Trajectory he = run_scheme(SchemeKind::euler(), c.p, c.u0, part);
      const Trajectory gd = run_generalized(GeneralizedMethod::DeGiorgi, c.p, psi2, c.u0, part);
      const Trajectory hd = run_scheme(SchemeKind::degiorgi_root(Branch::Near), c.p, c.u0, part);
      require(o, ge.complete() && he.complete() && gd.complete() && hd.complete(), "incomplete");
      for (std::size_t i = 0; i < ge.states().size() && i < he.states().size(); ++i)
        worst = std::max(worst, (ge.states()[i] - he.states()[i]).norm());
      for (std::size_t i = 0; i < gd.states().size() && i < hd.states().size(); ++i)
        worst = std::max(worst, (gd.states()[i] - hd.states()[i]).norm());
    }
  }
  require(o, worst <= 1e-10, "p=2 reduction");

  std::mt19937_64 rng(20261016);
  std::uniform_real_distribution<double> uni(-2.0, 2.0), pexp(1.1, 5.0), bet(0.2, 3.0);
  std::uniform_int_distribution<int> dim(1, 4);
  double min_gap = 1e300;
  for (int s = 0; s < 1000; ++s) {
    const int d = dim(rng);
    const auto psi = DissipationPotential::constant(pexp(rng), bet(rng));
    Vector u(d), w(d), y(d);
    for (int j = 0; j < d; ++j) {
      u[j] = uni(rng);
      w[j] = uni(rng);
      y[j] = uni(rng);
    }
    min_gap = std::min(min_gap, psi.fenchel_gap(u, w, y));
  }
  require(o, min_gap >= -1e-12, "Fenchel gap");

  const auto psi4 = DissipationPotential::constant(4.0, 1.0);
  double excess = -1e300;
  int runs = 0;
  for (const Case& c : cases) {
    for (int n : {8, 16, 32, 64}) {
      const Trajectory t =
          run_generalized(GeneralizedMethod::DeGiorgi, c.p, psi4, c.u0, make_uniform_partition(1.0, n));
      require(o, t.complete(), "p=4 run incomplete on " + c.p.name + why(t));
      excess = std::max(excess, generalized_balance(t, c.p, psi4).max_excess);
      ++runs;
    }
  }
  require(o, excess <= 1e-12, "telescoped inequality");
  o.detail = "p=2 deviation " + fmt(worst) + "; min Fenchel gap " + fmt(min_gap) + "; p=4 max excess " +
             fmt(excess) + " over " + std::to_string(runs) + " runs" + o.detail;
  return o;
}

// 8 ------------------------------------------------------------------------
Outcome generic_flows() {
  Outcome o;
  const auto sys = damped_oscillator(0.5);
  const Vector u0 = vec({1.0, 0.0, 0.0});
  std::vector<double> taus, drift;
  double worst_compat = 0.0, worst_entropy = -1e300;
  bool complete = true;
  for (double tau : {1e-2, 5e-3, 2.5e-3}) {
    const int n = static_cast<int>(std::lround(1.0 / tau));
    const GenericTrajectory gt = run_generic(sys, u0, make_uniform_partition(1.0, n));
    complete = complete && gt.trajectory.complete();
    require(o, gt.trajectory.complete(), "generic incomplete" + why(gt.trajectory));
    double d = 0.0;
    for (std::size_t i = 1; i < gt.energy.size(); ++i) {
      d = std::max(d, std::abs(gt.energy[i] - gt.energy[i - 1]));
      worst_compat = std::max(worst_compat, gt.compat_defect[i]);
      const double rho_plus = std::max(0.0, gt.trajectory.records()[i - 1].residual);
      worst_entropy = std::max(worst_entropy, gt.entropy[i] - gt.entropy[i - 1] - rho_plus);
    }
    taus.push_back(tau);
    drift.push_back(d);
  }
  const double order = oracle::loglog_slope(taus, drift);
  require(o, complete, "generic run incomplete");
  require(o, worst_compat <= 1e-10, "compatibility residual");
  require(o, order >= 1.85, "drift order");
  // Rounding slack on the entropy comparison.
  require(o, worst_entropy <= 1e-12, "entropy monotonicity");
  o.detail = "compat " + fmt(worst_compat) + "; drift order " + fmt(order) + "; entropy excess " +
             fmt(worst_entropy) + o.detail;
  return o;
}

// 9 ------------------------------------------------------------------------
Outcome metric_flows() {
  Outcome o;
  double worst = 0.0;
  struct Case {
    PotentialModel p;
    Vector u0;
  };
  for (const Case& c : std::vector<Case>{{quadratic_1d(1.0), vec({1.0})},
                                         {aniso_quadratic_2d(), vec({1.0, -1.0})},
                                         {radial_quadratic(1.0, 2), vec({0.5, 1.0})}}) {
    for (double tau : {0.05, 0.5}) {
      const auto part = make_uniform_partition(10 * tau, 10);
      const Trajectory a = run_metric(MetricMethod::DeGiorgi, euclidean_metric(c.p), c.u0, part);
      const Trajectory b = run_scheme(SchemeKind::degiorgi_min(), c.p, c.u0, part);
      require(o, a.complete() && b.complete(), "incomplete on " + c.p.name);
      for (std::size_t i = 0; i < a.states().size() && i < b.states().size(); ++i)
        worst = std::max(worst, (a.states()[i] - b.states()[i]).norm());
    }
  }
  require(o, worst <= 1e-10, "euclidean equals dg-min");

  const auto m = scaled_metric(quadratic_1d(1.0), 2.0);
  const StepResult r = metric_degiorgi_step(m, vec({1.0}), 0.5);
  const double grid = oracle::grid_minimize(
      [](double u) { return 0.5 * u * u + 4.0 * (u - 1.0) * (u - 1.0) + u * u / 16.0 - 0.5; }, 0.0, 1.0, 1e-6);
  const double err = std::abs(r.state[0] - grid);
  require(o, err <= 1e-6, "scaled metric vs grid oracle");
  o.detail = "euclid deviation " + fmt(worst) + "; scaled step " + fmt(r.state[0]) + " vs grid " + fmt(grid) +
             o.detail;
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
    double time_limit;  // seconds, <= 0 for none
  };
  const std::vector<Criterion> criteria = {
      {"1 closed-form equivalence", closed_form_equivalence, 1.0},
      {"2 scalar convergence rates", scalar_rates, 5.0},
      {"3 gonzalez sharpness", gonzalez_sharpness, 5.0},
      {"4 energy identities", energy_identities, 0.0},
      {"5 certificate behavior", certificate_behavior, 0.0},
      {"6 edge cases", edge_cases, 0.0},
      {"7 generalized flows", generalized_flows, 0.0},
      {"8 generic flows", generic_flows, 0.0},
      {"9 metric flows", metric_flows, 0.0},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.time_limit > 0.0 && secs >= c.time_limit) {
      o.pass = false;
      o.detail += " [violated: runtime " + fmt(secs) + "s over " + fmt(c.time_limit) + "s]";
    }
    std::printf("%s  %-28s %.3fs  %s\n", o.pass ? "PASS" : "FAIL", c.name, secs, o.detail.c_str());
    if (!o.pass) ++failures;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
