#include "gflow/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace gflow {

RateReport estimate_rate(const std::vector<double>& tau_grid, const std::vector<double>& errors) {
  if (tau_grid.size() != errors.size())
    throw Error(ErrorCode::DimensionMismatch, "tau grid and errors differ in length");
  if (tau_grid.size() < 4) throw Error(ErrorCode::InvalidArgument, "rate fit needs at least 4 points");
  for (std::size_t i = 0; i < tau_grid.size(); ++i) {
    if (!(tau_grid[i] > 0.0)) throw Error(ErrorCode::NonPositiveParameter, "step sizes must be positive");
    if (!(errors[i] > 0.0) || !std::isfinite(errors[i]))
      throw Error(ErrorCode::DegenerateFit, "errors must be positive and finite");
    if (i > 0 && !(tau_grid[i] < tau_grid[i - 1]))
      throw Error(ErrorCode::InvalidArgument, "step sizes must be strictly decreasing");
  }
  const auto [mn, mx] = std::minmax_element(errors.begin(), errors.end());
  if (*mx - *mn < 1e-13 * *mx) throw Error(ErrorCode::DegenerateFit, "errors do not vary with tau");

  const double n = static_cast<double>(errors.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    const double x = std::log(tau_grid[i]), y = std::log(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  const double cxx = sxx - sx * sx / n, cxy = sxy - sx * sy / n, cyy = syy - sy * sy / n;
  RateReport r{tau_grid, errors, cxy / cxx, 1.0};
  if (cyy > 0.0) r.r_squared = (cxy * cxy) / (cxx * cyy);
  return r;
}

namespace {

// G_i for step i (1-based). Without a gradient the slope is taken as the
// discrete velocity, which turns G_i into the energy-equality defect.
double step_residual(const Trajectory& traj, const PotentialModel& p, std::size_t i) {
  const Vector& v = traj.states()[i - 1];
  const Vector& u = traj.states()[i];
  const double tau = traj.partition().step(i);
  if (!p.has_gradient()) return p.eval(u) + (u - v).squaredNorm() / tau - p.eval(v);
  return degiorgi_functional(p, u, v, tau);
}

}  // namespace

EnergyLedger energy_ledger(const Trajectory& traj, const PotentialModel& p) {
  EnergyLedger led;
  for (std::size_t i = 1; i < traj.states().size(); ++i) {
    const Vector& v = traj.states()[i - 1];
    const Vector& u = traj.states()[i];
    const double tau = traj.partition().step(i);
    const double gd = p.eval(u) + (u - v).squaredNorm() / tau - p.eval(v);
    const double dg = step_residual(traj, p, i);
    led.gonzalez_defect.push_back(gd);
    led.degiorgi_residual.push_back(dg);
    led.gonzalez_total += gd;
    led.degiorgi_total += dg;
    led.max_abs_gonzalez_defect = std::max(led.max_abs_gonzalez_defect, std::abs(gd));
  }
  return led;
}

const char* to_string(Verdict v) {
  return v == Verdict::CertifiedTrend ? "CertifiedTrend" : "Inconclusive";
}

Certificate certify(const Trajectory& traj, const PotentialModel& p) {
  Certificate c;
  const std::size_t n = traj.states().size() - 1;
  for (std::size_t i = 1; i <= n; ++i) {
    const double g = std::max(0.0, step_residual(traj, p, i));
    c.per_step_positive_parts.push_back(g);
    c.total += g;
    if (p.holder) c.holder_bound += holder_tolerance(p, traj.states()[i], traj.states()[i - 1]);
  }
  if (n > 0 && c.total <= static_cast<double>(n) * 1e-9) c.verdict = Verdict::CertifiedTrend;
  return c;
}

SweepCertificate certify_sweep(const std::vector<Trajectory>& sweep, const PotentialModel& p) {
  if (sweep.empty()) throw Error(ErrorCode::InvalidArgument, "empty sweep");
  std::vector<std::size_t> order(sweep.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sweep[a].partition().fineness() > sweep[b].partition().fineness();
  });

  SweepCertificate sc;
  for (std::size_t i : order) {
    sc.members.push_back(certify(sweep[i], p));
    sc.fineness.push_back(sweep[i].partition().fineness());
  }
  if (sc.members.back().verdict == Verdict::CertifiedTrend) sc.verdict = Verdict::CertifiedTrend;

  std::vector<double> totals;
  for (const auto& m : sc.members) totals.push_back(m.total);
  const bool fittable = std::all_of(totals.begin(), totals.end(), [](double t) { return t > 0.0; });
  if (sweep.size() >= 4 && fittable) {
    try {
      sc.trend = estimate_rate(sc.fineness, totals);
      const double alpha = p.holder ? p.holder->exponent : 1.0;
      if (sc.trend->slope >= alpha - 0.15) sc.verdict = Verdict::CertifiedTrend;
    } catch (const Error&) {
      // Constant or repeated step sizes: no trend to report.
    }
  }
  return sc;
}

std::vector<double> closed_form_sequence(SchemeKind kind, double lambda, double tau, int steps) {
  if (!(lambda > 0.0) || !(tau > 0.0)) throw Error(ErrorCode::NonPositiveParameter, "lambda and tau must be positive");
  if (steps < 0) throw Error(ErrorCode::InvalidArgument, "negative step count");
  const double a = tau * lambda;
  double factor = 0.0;
  switch (kind.method) {
    case SchemeKind::Method::Euler: factor = 1.0 / (1.0 + a); break;
    case SchemeKind::Method::Gonzalez: factor = (2.0 - a) / (2.0 + a); break;
    case SchemeKind::Method::DeGiorgiRoot:
      factor = kind.branch == Branch::Far ? (1.0 - std::pow(a, 1.5)) / (1.0 + a + a * a)
                                          : (1.0 + std::pow(a, 1.5)) / (1.0 + a + a * a);
      break;
    case SchemeKind::Method::DeGiorgiMin: factor = 1.0 / (1.0 + a + a * a); break;
  }
  std::vector<double> out(static_cast<std::size_t>(steps) + 1);
  out[0] = 1.0;
  for (int i = 1; i <= steps; ++i) out[i] = out[i - 1] * factor;
  return out;
}

double alignment_defect(const PotentialModel& p, const Vector& u, const Vector& v) {
  const Vector w = u - v;
  const double nw = w.norm();
  if (nw <= 1e-14) throw Error(ErrorCode::DegenerateDirection, "u and v coincide");
  const Vector d = p.grad(u);
  const double nd = d.norm();
  if (nd == 0.0) return 0.0;
  const Vector e = w / nw;
  return (d - d.dot(e) * e).norm() / nd;
}

double holder_tolerance(const PotentialModel& p, const Vector& u, const Vector& v) {
  if (!p.holder) throw Error(ErrorCode::MissingRegularityMetadata, p.name + " has no Hölder data");
  const double a = p.holder->exponent;
  return p.holder->constant * std::pow((u - v).norm(), 1.0 + a) / (1.0 + a);
}

}  // namespace gflow
