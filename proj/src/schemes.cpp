#include "gflow/schemes.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "gflow/diagnostics.hpp"

namespace gflow {

std::string to_string(SchemeKind kind) {
  switch (kind.method) {
    case SchemeKind::Method::Euler: return "euler";
    case SchemeKind::Method::Gonzalez: return "gonzalez";
    case SchemeKind::Method::DeGiorgiRoot:
      return kind.branch == Branch::Near ? "dg-root:near" : "dg-root:far";
    case SchemeKind::Method::DeGiorgiMin: return "dg-min";
  }
  return "unknown";
}

SchemeKind parse_scheme(std::string_view name) {
  if (name == "euler") return SchemeKind::euler();
  if (name == "gonzalez") return SchemeKind::gonzalez();
  if (name == "dg-root:near") return SchemeKind::degiorgi_root(Branch::Near);
  if (name == "dg-root:far" || name == "dg-root") return SchemeKind::degiorgi_root(Branch::Far);
  if (name == "dg-min") return SchemeKind::degiorgi_min();
  throw Error(ErrorCode::ParseError, "unknown scheme '" + std::string(name) + "'");
}

double degiorgi_functional(const PotentialModel& p, const Vector& u, const Vector& v, double tau) {
  return p.eval(u) + 0.5 * (u - v).squaredNorm() / tau + 0.5 * tau * p.grad(u).squaredNorm() - p.eval(v);
}

bool is_stationary(const PotentialModel& p, const Vector& v) {
  return p.grad(v).norm() <= 1e-13 * (1.0 + std::abs(p.eval(v)));
}

namespace {

void require_step(double tau) {
  if (!(tau > 0.0)) throw Error(ErrorCode::NonPositiveParameter, "tau must be positive");
}

StepResult stationary_result(const PotentialModel& p, const Vector& v) {
  StepResult out{v, {}};
  out.record.energy_before = out.record.energy_after = p.eval(v);
  out.record.slope_norm = p.has_gradient() ? p.grad(v).norm() : 0.0;
  out.record.status = StepStatus::Stationary;
  return out;
}

StepResult failed_result(const Vector& v, StepRecord record, std::string message) {
  record.status = StepStatus::Failed;
  record.residual = std::numeric_limits<double>::quiet_NaN();
  record.message = std::move(message);
  return {v, std::move(record)};
}

// Fills energy/increment/slope/residual for a smooth model.
void fill_smooth(StepRecord& r, const PotentialModel& p, const Vector& u, const Vector& v, double tau) {
  r.energy_after = p.eval(u);
  r.increment_norm = (u - v).norm();
  r.slope_norm = p.grad(u).norm();
  r.residual = degiorgi_functional(p, u, v, tau);
}

// Nonsmooth models: the subgradient is taken as the discrete velocity
// (v - u)/tau selected by the step itself.
void fill_nonsmooth(StepRecord& r, const PotentialModel& p, const Vector& u, const Vector& v, double tau) {
  r.energy_after = p.eval(u);
  r.increment_norm = (u - v).norm();
  r.slope_norm = r.increment_norm / tau;
  r.residual = r.energy_after + r.increment_norm * r.increment_norm / tau - r.energy_before;
}

std::string failure_text(const SolveResult& res) {
  return std::string(to_string(*res.failure)) + " after " + std::to_string(res.iterations) +
         " iterations (residual " + format_double(res.residual) + ")";
}

// Gonzalez on a scalar prox-only model: find u != v on the descent ray with
// φ(u) + |u - v|²/tau = φ(v), inside the effective domain.
StepResult gonzalez_scalar_nonsmooth(const PotentialModel& p, const Vector& v, double tau,
                                     const SolverSettings& s) {
  StepRecord rec;
  rec.energy_before = p.eval(v);
  const Vector ue = p.prox(v, tau);
  const Vector dir = ue - v;
  if (dir.norm() == 0.0) {
    StepResult out{v, rec};
    out.record.energy_after = rec.energy_before;
    out.record.status = StepStatus::Stationary;
    return out;
  }
  auto point = [&](double t) -> Vector { return t == 1.0 ? ue : Vector(v + t * dir); };
  const double d2 = dir.squaredNorm();
  auto h = [&](double t) {
    return p.eval(point(t)) + t * t * d2 / tau - rec.energy_before;
  };
  const double tol = s.tol_residual * (1.0 + std::abs(rec.energy_before));
  double root = 1.0;
  const double h1 = h(1.0);
  if (std::abs(h1) <= tol) {
    root = 1.0;
  } else if (h1 > 0.0) {
    double lo = 0.5;
    int k = 0;
    while (!(h(lo) < 0.0) && k++ < 60) lo *= 0.5;
    if (!(h(lo) < 0.0)) return failed_result(v, rec, "energy equality: no sign change on the Euler segment");
    root = brent_root(h, lo, 1.0, s);
  } else {
    double lo = 1.0, hi = 2.0;
    int k = 0;
    while (k++ < 60) {
      const double hh = h(hi);
      if (std::isinf(hh)) break;
      if (hh >= 0.0) break;
      lo = hi;
      hi *= 2.0;
    }
    if (std::isinf(h(hi))) {
      // Locate the boundary of the effective domain along the ray.
      double a = lo, b = hi;
      for (int it = 0; it < 200 && b - a > 1e-15 * b; ++it) {
        const double m = 0.5 * (a + b);
        (std::isinf(h(m)) ? b : a) = m;
      }
      if (h(a) < 0.0)
        return failed_result(v, rec,
                             "energy equality has no solution in the effective domain (step not solvable)");
      hi = a;
    } else if (h(hi) < 0.0) {
      return failed_result(v, rec, "energy equality: no sign change found");
    }
    root = brent_root(h, lo, hi, s);
  }
  const Vector u = point(root);
  StepResult out{u, rec};
  fill_nonsmooth(out.record, p, u, v, tau);
  out.record.status = StepStatus::Exact;
  return out;
}

}  // namespace

StepResult euler_step(const PotentialModel& p, const Vector& v, double tau, const SolverSettings& s) {
  require_step(tau);
  if (p.has_gradient() && is_stationary(p, v)) return stationary_result(p, v);
  StepRecord rec;
  rec.energy_before = p.eval(v);
  const SolveResult res = prox_step(p, v, tau, s);
  rec.solver_iterations = res.iterations;
  if (!res.ok()) return failed_result(v, rec, "prox: " + failure_text(res));
  StepResult out{res.x, rec};
  if (p.has_gradient()) {
    fill_smooth(out.record, p, out.state, v, tau);
  } else {
    fill_nonsmooth(out.record, p, out.state, v, tau);
  }
  out.record.status = out.record.increment_norm == 0.0 ? StepStatus::Stationary : StepStatus::Exact;
  return out;
}

StepResult gonzalez_step(const PotentialModel& p, const Vector& v, double tau, const SolverSettings& s) {
  require_step(tau);
  if (!p.has_gradient()) {
    if (p.dim == 1 && p.has_prox()) return gonzalez_scalar_nonsmooth(p, v, tau, s);
    StepRecord rec;
    rec.energy_before = p.eval(v);
    return failed_result(v, rec, "GradientUnavailable: Gonzalez needs Dφ");
  }
  if (is_stationary(p, v)) return stationary_result(p, v);

  StepRecord rec;
  rec.energy_before = p.eval(v);
  const SolveResult warm = prox_step(p, v, tau, s);
  if (!warm.ok()) return failed_result(v, rec, "Euler warm start: " + failure_text(warm));

  const double guard = 1e-12 * (1.0 + v.norm());
  const double phi_v = rec.energy_before;
  auto residual = [&](const Vector& u) -> Vector {
    const Vector w = u - v;
    const double w2 = w.squaredNorm();
    if (std::sqrt(w2) < guard) return Vector::Constant(u.size(), std::numeric_limits<double>::quiet_NaN());
    const Vector du = p.grad(u);
    return w / tau + du + ((p.eval(u) - phi_v - du.dot(w)) / w2) * w;
  };
  const SolveResult res = newton_solve(residual, {}, warm.x, s);
  rec.solver_iterations = warm.iterations + res.iterations;
  if (!res.ok()) return failed_result(v, rec, "Newton: " + failure_text(res));
  const Vector& u = res.x;
  const Vector w = u - v;
  if (w.norm() < guard) return failed_result(v, rec, "iterate collapsed onto the previous state");

  const double balance = p.eval(u) + w.squaredNorm() / tau - phi_v;
  if (std::abs(balance) > 1e-9 * (1.0 + std::abs(phi_v)))
    return failed_result(v, rec, "energy equality violated: " + format_double(balance));
  const double align = alignment_defect(p, u, v);
  if (align > 1e-8) return failed_result(v, rec, "Dφ(u) not parallel to u - v: " + format_double(align));

  StepResult out{u, rec};
  fill_smooth(out.record, p, u, v, tau);
  out.record.status = StepStatus::Exact;
  return out;
}

StepResult degiorgi_root_step(const PotentialModel& p, const Vector& v, double tau, Branch branch,
                              const SolverSettings& s) {
  require_step(tau);
  if (is_stationary(p, v)) return stationary_result(p, v);

  StepResult euler = euler_step(p, v, tau, s);
  StepRecord rec;
  rec.energy_before = p.eval(v);
  rec.solver_iterations = euler.record.solver_iterations;
  if (euler.record.status == StepStatus::Failed)
    return failed_result(v, rec, "Euler point: " + euler.record.message);
  const Vector ue = euler.state;
  const Vector dir = ue - v;

  const double g1 = degiorgi_functional(p, ue, v, tau);
  if (g1 >= 0.0) {
    // The exact equation may have no root; accept the Euler point within the
    // Hölder tolerance.
    if (!p.holder) return failed_result(v, rec, "MissingRegularityMetadata: cannot bound the residual");
    const double bound = holder_tolerance(p, ue, v);
    if (g1 > bound + 1e-12 * (1.0 + std::abs(rec.energy_before)))
      return failed_result(v, rec, "residual " + format_double(g1) + " exceeds Hölder tolerance " +
                                       format_double(bound));
    StepResult out{ue, rec};
    fill_smooth(out.record, p, ue, v, tau);
    out.record.residual = g1;
    out.record.status = StepStatus::ResidualAccepted;
    return out;
  }

  auto g = [&](double t) {
    return degiorgi_functional(p, t == 1.0 ? ue : Vector(v + t * dir), v, tau);
  };
  double root = 0.0;
  if (branch == Branch::Near) {
    root = brent_root(g, 0.0, 1.0, s);
  } else {
    // g is coercive along the ray; double until the sign flips back.
    double lo = 1.0, hi = 2.0;
    int k = 0;
    while (g(hi) < 0.0) {
      if (++k > 60) return failed_result(v, rec, "Far branch: no sign change along the ray");
      lo = hi;
      hi *= 2.0;
    }
    root = brent_root(g, lo, hi, s);
  }
  const Vector u = v + root * dir;
  StepResult out{u, rec};
  fill_smooth(out.record, p, u, v, tau);
  if (std::abs(out.record.residual) > 1e-9)
    return failed_result(v, rec, "root residual " + format_double(out.record.residual) + " above 1e-9");
  out.record.status = StepStatus::Exact;
  return out;
}

StepResult degiorgi_min_step(const PotentialModel& p, const Vector& v, double tau, const SolverSettings& s) {
  require_step(tau);
  if (!p.has_hessian()) throw Error(ErrorCode::HessianUnavailable, "dg-min needs D²φ");
  if (is_stationary(p, v)) return stationary_result(p, v);

  StepResult euler = euler_step(p, v, tau, s);
  StepRecord rec;
  rec.energy_before = p.eval(v);
  rec.solver_iterations = euler.record.solver_iterations;
  if (euler.record.status == StepStatus::Failed)
    return failed_result(v, rec, "Euler point: " + euler.record.message);

  auto f = [&](const Vector& u) { return degiorgi_functional(p, u, v, tau); };
  auto grad = [&](const Vector& u) -> Vector {
    const Vector du = p.grad(u);
    return du + (u - v) / tau + tau * (p.hess(u) * du);
  };
  auto hess = [&](const Vector& u) -> Matrix {
    const Matrix J = fd_jacobian(grad, u, s.fd_step);
    return 0.5 * (J + J.transpose());
  };
  const SolveResult res = minimize_smooth(f, grad, euler.state, s, hess);
  rec.solver_iterations += res.iterations;
  if (!res.ok()) return failed_result(v, rec, "minimization: " + failure_text(res));

  StepResult out{res.x, rec};
  fill_smooth(out.record, p, res.x, v, tau);
  out.record.status = out.record.residual <= 1e-12 ? StepStatus::Exact : StepStatus::ResidualAccepted;
  return out;
}

StepResult scheme_step(SchemeKind kind, const PotentialModel& p, const Vector& v, double tau,
                       const SolverSettings& s) {
  switch (kind.method) {
    case SchemeKind::Method::Euler: return euler_step(p, v, tau, s);
    case SchemeKind::Method::Gonzalez: return gonzalez_step(p, v, tau, s);
    case SchemeKind::Method::DeGiorgiRoot: return degiorgi_root_step(p, v, tau, kind.branch, s);
    case SchemeKind::Method::DeGiorgiMin: return degiorgi_min_step(p, v, tau, s);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown scheme");
}

Trajectory run_scheme(SchemeKind kind, const PotentialModel& p, const Vector& u0, const Partition& part,
                      const SolverSettings& s) {
  if (u0.size() != p.dim) throw Error(ErrorCode::DimensionMismatch, "u0 dimension does not match the potential");
  if (!std::isfinite(p.eval(u0))) throw Error(ErrorCode::OutOfRange, "u0 outside the effective domain");
  Trajectory traj(part, u0);
  for (std::size_t i = 1; i <= part.num_steps(); ++i) {
    StepResult step = scheme_step(kind, p, traj.states().back(), part.step(i), s);
    if (step.record.status == StepStatus::Failed) {
      step.record.message = "step " + std::to_string(i) + ": " + step.record.message;
      traj.fail(std::move(step.record));
      break;
    }
    traj.push(std::move(step.state), std::move(step.record));
  }
  return traj;
}

}  // namespace gflow
