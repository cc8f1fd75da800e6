#include "gflow/extensions.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "gflow/diagnostics.hpp"

namespace gflow {

namespace {

void require_step(double tau) {
  if (!(tau > 0.0)) throw Error(ErrorCode::NonPositiveParameter, "tau must be positive");
}

StepResult failed(const Vector& v, StepRecord rec, std::string message) {
  rec.status = StepStatus::Failed;
  rec.residual = std::numeric_limits<double>::quiet_NaN();
  rec.message = std::move(message);
  return {v, std::move(rec)};
}

std::string failure_text(const SolveResult& res) {
  return std::string(to_string(*res.failure)) + " after " + std::to_string(res.iterations) + " iterations";
}

Vector central_gradient(const std::function<double(const Vector&)>& f, const Vector& x) {
  Vector g(x.size());
  Vector xp = x, xm = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = 1e-6 * (1.0 + std::abs(x[j]));
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    g[j] = (f(xp) - f(xm)) / (2.0 * h);
    xp[j] = xm[j] = x[j];
  }
  return g;
}

MatrixField symmetric_fd_hessian(const VectorField& grad, double fd_step) {
  return [grad, fd_step](const Vector& u) -> Matrix {
    const Matrix J = fd_jacobian(grad, u, fd_step);
    return 0.5 * (J + J.transpose());
  };
}

}  // namespace

// ---------------------------------------------------------------------------

DissipationPotential::DissipationPotential(double p, std::function<double(const Vector&)> beta,
                                           double beta_min, double beta_max)
    : p_(p), beta_(std::move(beta)), beta_min_(beta_min), beta_max_(beta_max) {
  if (!(p > 1.0)) throw Error(ErrorCode::OutOfRange, "dissipation exponent must exceed 1");
  if (!(beta_min > 0.0) || !(beta_max >= beta_min))
    throw Error(ErrorCode::NonPositiveParameter, "beta bounds must satisfy 0 < beta_min <= beta_max");
  if (!beta_) throw Error(ErrorCode::InvalidArgument, "beta callback is empty");
}

DissipationPotential DissipationPotential::constant(double p, double beta) {
  return DissipationPotential(p, [beta](const Vector&) { return beta; }, beta, beta);
}

double DissipationPotential::value(const Vector& u, const Vector& w) const {
  return beta(u) * std::pow(w.norm(), p_) / p_;
}

double DissipationPotential::conjugate(const Vector& u, const Vector& y) const {
  const double q = conjugate_exponent();
  return std::pow(beta(u), -1.0 / (p_ - 1.0)) * std::pow(y.norm(), q) / q;
}

Vector DissipationPotential::value_gradient(const Vector& u, const Vector& w) const {
  const double n = w.norm();
  if (n == 0.0) return Vector::Zero(w.size());
  return beta(u) * std::pow(n, p_ - 2.0) * w;
}

std::optional<Matrix> DissipationPotential::value_hessian(const Vector& u, const Vector& w) const {
  if (p_ < 2.0) return std::nullopt;
  const Eigen::Index d = w.size();
  const double n = w.norm();
  const double b = beta(u);
  if (n == 0.0) return p_ == 2.0 ? Matrix(b * Matrix::Identity(d, d)) : Matrix(Matrix::Zero(d, d));
  const Vector e = w / n;
  const double np = std::pow(n, p_ - 2.0);
  return Matrix(b * np * (Matrix::Identity(d, d) + (p_ - 2.0) * e * e.transpose()));
}

double DissipationPotential::fenchel_gap(const Vector& u, const Vector& w, const Vector& y) const {
  return value(u, w) + conjugate(u, y) - y.dot(w);
}

double DissipationPotential::coercivity_constant() const {
  const double q = conjugate_exponent();
  return std::min(beta_min_ / p_, std::pow(beta_max_, -1.0 / (p_ - 1.0)) / q);
}

// ---------------------------------------------------------------------------

double generalized_functional(const PotentialModel& p, const DissipationPotential& psi, const Vector& u,
                              const Vector& v, double tau) {
  return p.eval(u) + tau * psi.value(v, (u - v) / tau) + tau * psi.conjugate(v, -p.grad(u)) - p.eval(v);
}

namespace {

void fill_generalized(StepRecord& r, const PotentialModel& p, const Vector& u, const Vector& v) {
  r.energy_after = p.eval(u);
  r.increment_norm = (u - v).norm();
  r.slope_norm = p.grad(u).norm();
}

}  // namespace

StepResult gen_euler_step(const PotentialModel& p, const DissipationPotential& psi, const Vector& v,
                          double tau, const SolverSettings& s) {
  require_step(tau);
  StepRecord rec;
  rec.energy_before = p.eval(v);
  if (is_stationary(p, v)) {
    rec.energy_after = rec.energy_before;
    rec.status = StepStatus::Stationary;
    return {v, rec};
  }
  auto f = [&](const Vector& w) { return tau * psi.value(v, (w - v) / tau) + p.eval(w); };
  auto g = [&](const Vector& w) -> Vector { return psi.value_gradient(v, (w - v) / tau) + p.grad(w); };
  MatrixField h;
  if (psi.exponent() >= 2.0) {
    h = [&](const Vector& w) -> Matrix {
      Matrix H = *psi.value_hessian(v, (w - v) / tau) / tau;
      if (p.has_hessian()) return H + p.hess(w);
      const Matrix J = fd_jacobian([&](const Vector& x) -> Vector { return p.grad(x); }, w, s.fd_step);
      return H + 0.5 * (J + J.transpose());
    };
  }
  const SolveResult res = minimize_smooth(f, g, v, s, h);
  rec.solver_iterations = res.iterations;
  if (!res.ok()) return failed(v, rec, "minimization: " + failure_text(res));
  const Vector& u = res.x;
  StepResult out{u, rec};
  fill_generalized(out.record, p, u, v);
  const Vector du = p.grad(u);
  out.record.residual = tau * psi.value(v, (u - v) / tau) + tau * psi.conjugate(v, -du) + du.dot(u - v);
  out.record.status = out.record.increment_norm == 0.0 ? StepStatus::Stationary : StepStatus::Exact;
  return out;
}

StepResult gen_degiorgi_step(const PotentialModel& p, const DissipationPotential& psi, const Vector& v,
                             double tau, const SolverSettings& s) {
  require_step(tau);
  StepResult euler = gen_euler_step(p, psi, v, tau, s);
  if (euler.record.status != StepStatus::Exact) return euler;
  StepRecord rec;
  rec.energy_before = p.eval(v);
  rec.solver_iterations = euler.record.solver_iterations;
  const Vector ue = euler.state;
  const Vector dir = ue - v;
  auto g = [&](double t) {
    return generalized_functional(p, psi, t == 1.0 ? ue : Vector(v + t * dir), v, tau);
  };
  const double g1 = g(1.0);
  if (g1 >= 0.0) {
    if (!p.holder) return failed(v, rec, "MissingRegularityMetadata: cannot bound the residual");
    const double bound = holder_tolerance(p, ue, v);
    if (g1 > bound + 1e-12 * (1.0 + std::abs(rec.energy_before)))
      return failed(v, rec, "residual " + format_double(g1) + " exceeds Hölder tolerance " + format_double(bound));
    StepResult out{ue, rec};
    fill_generalized(out.record, p, ue, v);
    out.record.residual = g1;
    out.record.status = StepStatus::ResidualAccepted;
    return out;
  }
  if (!(g(0.0) > 0.0)) return failed(v, rec, "G̃(v, v) is not positive");
  const double root = brent_root(g, 0.0, 1.0, s);
  const Vector u = v + root * dir;
  StepResult out{u, rec};
  fill_generalized(out.record, p, u, v);
  out.record.residual = generalized_functional(p, psi, u, v, tau);
  if (std::abs(out.record.residual) > 1e-9)
    return failed(v, rec, "root residual " + format_double(out.record.residual) + " above 1e-9");
  out.record.status = StepStatus::Exact;
  return out;
}

Trajectory run_generalized(GeneralizedMethod method, const PotentialModel& p, const DissipationPotential& psi,
                           const Vector& u0, const Partition& part, const SolverSettings& s) {
  if (u0.size() != p.dim) throw Error(ErrorCode::DimensionMismatch, "u0 dimension does not match the potential");
  Trajectory traj(part, u0);
  for (std::size_t i = 1; i <= part.num_steps(); ++i) {
    const Vector& v = traj.states().back();
    StepResult step = method == GeneralizedMethod::Euler ? gen_euler_step(p, psi, v, part.step(i), s)
                                                         : gen_degiorgi_step(p, psi, v, part.step(i), s);
    if (step.record.status == StepStatus::Failed) {
      step.record.message = "step " + std::to_string(i) + ": " + step.record.message;
      traj.fail(std::move(step.record));
      break;
    }
    traj.push(std::move(step.state), std::move(step.record));
  }
  return traj;
}

GeneralizedBalance generalized_balance(const Trajectory& traj, const PotentialModel& p,
                                       const DissipationPotential& psi) {
  GeneralizedBalance b;
  const auto& st = traj.states();
  const double phi0 = p.eval(st.front());
  double dissipation = 0.0;
  for (std::size_t i = 1; i < st.size(); ++i) {
    const double tau = traj.partition().step(i);
    const Vector& v = st[i - 1];
    const Vector& u = st[i];
    dissipation += tau * (psi.value(v, (u - v) / tau) + psi.conjugate(v, -p.grad(u)));
    b.lhs.push_back(p.eval(u) + dissipation - phi0);
    b.positive_residual_total += std::max(0.0, generalized_functional(p, psi, u, v, tau));
  }
  b.max_excess = -std::numeric_limits<double>::infinity();
  for (double l : b.lhs) b.max_excess = std::max(b.max_excess, l - b.positive_residual_total);
  if (b.lhs.empty()) b.max_excess = 0.0;
  return b;
}

// ---------------------------------------------------------------------------

GenericSystem damped_oscillator(double gamma) {
  if (!(gamma >= 0.0)) throw Error(ErrorCode::NonPositiveParameter, "damping must be nonnegative");
  GenericSystem sys;
  sys.name = "damped_oscillator";
  sys.dim = 3;
  sys.poisson = [](const Vector&) -> Matrix {
    Matrix L = Matrix::Zero(3, 3);
    L(0, 1) = 1.0;
    L(1, 0) = -1.0;
    return L;
  };
  sys.onsager = [gamma](const Vector& u) -> Matrix {
    const double p = u[1];
    Matrix K = Matrix::Zero(3, 3);
    K(1, 1) = 1.0;
    K(1, 2) = K(2, 1) = -p;
    K(2, 2) = p * p;
    return gamma * K;
  };
  sys.energy = [](const Vector& u) { return 0.5 * u[1] * u[1] + 0.5 * u[0] * u[0] + u[2]; };
  sys.energy_gradient = [](const Vector& u) -> Vector { return Vector{{u[0], u[1], 1.0}}; };
  sys.entropy = [](const Vector& u) { return -u[2]; };
  sys.entropy_gradient = [](const Vector&) -> Vector { return Vector{{0.0, 0.0, -1.0}}; };
  sys.reversible_jacobian = [](const Vector&) -> Matrix {
    // L DE = (p, -q, 0)
    Matrix J = Matrix::Zero(3, 3);
    J(0, 1) = 1.0;
    J(1, 0) = -1.0;
    return J;
  };
  sys.entropy_hessian = [](const Vector&) -> Matrix { return Matrix::Zero(3, 3); };
  return sys;
}

StructureDefects structure_defects(const GenericSystem& sys, const Vector& u) {
  const Matrix L = sys.poisson(u);
  const Matrix K = sys.onsager(u);
  StructureDefects d;
  d.antisymmetry = (L + L.transpose()).norm();
  d.symmetry = (K - K.transpose()).norm();
  const Matrix Ks = 0.5 * (K + K.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(Ks, Eigen::EigenvaluesOnly);
  d.min_eigenvalue = es.eigenvalues().minCoeff();
  d.compatibility = std::max((L.transpose() * sys.entropy_gradient(u)).norm(),
                             (K.transpose() * sys.energy_gradient(u)).norm());
  return d;
}

namespace {

constexpr double kRangePenalty = 1e8;
constexpr double kInnerTolerance = 1e-8;

// K⁺ and the projector onto range(K) for a symmetric PSD K.
struct OnsagerSplit {
  Matrix pinv;
  Matrix off_range;  // I - Π
};

OnsagerSplit split_onsager(const Matrix& K) {
  const Eigen::Index d = K.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (K + K.transpose()));
  const Vector& lam = es.eigenvalues();
  const Matrix& Q = es.eigenvectors();
  const double cut = 1e-12 * std::max(1.0, lam.cwiseAbs().maxCoeff());
  OnsagerSplit out{Matrix::Zero(d, d), Matrix::Identity(d, d)};
  for (Eigen::Index k = 0; k < d; ++k) {
    if (lam[k] > cut) {
      out.pinv += Q.col(k) * Q.col(k).transpose() / lam[k];
      out.off_range -= Q.col(k) * Q.col(k).transpose();
    }
  }
  return out;
}

Matrix reversible_jacobian(const GenericSystem& sys, const Vector& u, double fd_step) {
  if (sys.reversible_jacobian) return sys.reversible_jacobian(u);
  return fd_jacobian([&](const Vector& x) -> Vector { return sys.poisson(x) * sys.energy_gradient(x); }, u,
                     fd_step);
}

Matrix entropy_hessian(const GenericSystem& sys, const Vector& u, double fd_step) {
  if (sys.entropy_hessian) return sys.entropy_hessian(u);
  const Matrix J = fd_jacobian(sys.entropy_gradient, u, fd_step);
  return 0.5 * (J + J.transpose());
}

struct GenericParts {
  Vector w;
  double value;
};

GenericParts generic_parts(const GenericSystem& sys, const OnsagerSplit& split, const Matrix& K, const Vector& u,
                           const Vector& v, double tau) {
  const Vector w = (u - v) / tau - sys.poisson(u) * sys.energy_gradient(u);
  const Vector off = split.off_range * w;
  const double psi = 0.5 * w.dot(split.pinv * w) + kRangePenalty * off.squaredNorm();
  const Vector y = -sys.entropy_gradient(u);
  const double psi_star = 0.5 * y.dot(K * y);
  return {w, sys.entropy(u) + tau * psi + tau * psi_star - sys.entropy(v)};
}

}  // namespace

double generic_functional(const GenericSystem& sys, const Vector& u, const Vector& v, double tau) {
  require_step(tau);
  const Matrix K = sys.onsager(v);
  return generic_parts(sys, split_onsager(K), K, u, v, tau).value;
}

GenericStepResult generic_step(const GenericSystem& sys, const Vector& v, double tau, const SolverSettings& s) {
  require_step(tau);
  if (v.size() != sys.dim) throw Error(ErrorCode::DimensionMismatch, "state dimension does not match the system");
  const Matrix K = sys.onsager(v);
  const OnsagerSplit split = split_onsager(K);
  const Matrix M = split.pinv + 2.0 * kRangePenalty * split.off_range;
  const Eigen::Index d = v.size();

  auto value = [&](const Vector& u) { return generic_parts(sys, split, K, u, v, tau).value; };
  auto gradient = [&](const Vector& u) -> Vector {
    const Vector w = generic_parts(sys, split, K, u, v, tau).w;
    const Matrix Jw = Matrix::Identity(d, d) / tau - reversible_jacobian(sys, u, s.fd_step);
    const Matrix H = entropy_hessian(sys, u, s.fd_step);
    return sys.entropy_gradient(u) + tau * Jw.transpose() * (M * w) + tau * H * (K * sys.entropy_gradient(u));
  };
  // Gauss-Newton model: exact when L DE is linear and φ is quadratic.
  auto hessian = [&](const Vector& u) -> Matrix {
    const Matrix Jw = Matrix::Identity(d, d) / tau - reversible_jacobian(sys, u, s.fd_step);
    const Matrix H = entropy_hessian(sys, u, s.fd_step);
    Matrix out = tau * Jw.transpose() * M * Jw + H + tau * H * K * H;
    return 0.5 * (out + out.transpose());
  };

  GenericStepResult out;
  out.record.energy_before = sys.entropy(v);
  Vector u = v;
  double f = value(u);
  bool converged = false;
  int it = 0;
  // Newton with backtracking. The range penalty keeps the gradient well above
  // machine precision, so a small Newton correction also counts as converged.
  for (; it < s.max_iterations; ++it) {
    const Vector g = gradient(u);
    if (g.norm() <= s.tol_residual) {
      converged = true;
      break;
    }
    Eigen::LDLT<Matrix> ldlt(hessian(u));
    Vector step = -ldlt.solve(g);
    const bool newton = step.allFinite() && step.dot(g) < 0.0;
    if (!newton) step = -g;
    if (newton && step.norm() <= kInnerTolerance * (1.0 + u.norm())) {
      u += step;
      converged = true;
      ++it;
      break;
    }
    double t = 1.0;
    Vector trial = u + step;
    double ft = value(trial);
    int bt = 0;
    while (!(ft <= f + 1e-12 * (1.0 + std::abs(f))) && bt++ < 60) {
      t *= s.backtracking_factor;
      trial = u + t * step;
      ft = value(trial);
    }
    const double moved = (trial - u).norm();
    u = trial;
    f = ft;
    if (moved <= 1e-13 * (1.0 + u.norm())) {
      converged = true;
      ++it;
      break;
    }
  }
  out.record.solver_iterations = it;
  const GenericParts parts = generic_parts(sys, split, K, u, v, tau);
  out.off_range = (split.off_range * parts.w).norm();
  if (!converged || !u.allFinite()) {
    out.state = v;
    out.record.status = StepStatus::Failed;
    out.record.residual = std::numeric_limits<double>::quiet_NaN();
    out.record.message = "MaxIterations: generic minimization did not converge";
    return out;
  }
  if (out.off_range > 1e-6) {
    out.state = v;
    out.record.status = StepStatus::Failed;
    out.record.residual = std::numeric_limits<double>::quiet_NaN();
    out.record.message = "RangeViolation: off-range component " + format_double(out.off_range);
    return out;
  }
  out.state = u;
  out.record.energy_after = sys.entropy(u);
  out.record.increment_norm = (u - v).norm();
  out.record.slope_norm = sys.entropy_gradient(u).norm();
  out.record.residual = parts.value;
  out.record.status = std::abs(parts.value) <= 1e-9 ? StepStatus::Exact : StepStatus::ResidualAccepted;
  out.energy = sys.energy(u);
  out.entropy = sys.entropy(u);
  out.compat_defect = structure_defects(sys, u).compatibility;
  return out;
}

GenericTrajectory run_generic(const GenericSystem& sys, const Vector& u0, const Partition& part,
                              const SolverSettings& s) {
  if (u0.size() != sys.dim) throw Error(ErrorCode::DimensionMismatch, "u0 dimension does not match the system");
  GenericTrajectory gt{Trajectory(part, u0), {sys.energy(u0)}, {sys.entropy(u0)},
                       {structure_defects(sys, u0).compatibility}};
  for (std::size_t i = 1; i <= part.num_steps(); ++i) {
    GenericStepResult step = generic_step(sys, gt.trajectory.states().back(), part.step(i), s);
    if (step.record.status == StepStatus::Failed) {
      step.record.message = "step " + std::to_string(i) + ": " + step.record.message;
      gt.trajectory.fail(std::move(step.record));
      break;
    }
    gt.energy.push_back(step.energy);
    gt.entropy.push_back(step.entropy);
    gt.compat_defect.push_back(step.compat_defect);
    gt.trajectory.push(std::move(step.state), std::move(step.record));
  }
  return gt;
}

// ---------------------------------------------------------------------------

namespace {

MetricSpaceModel metric_from(const PotentialModel& p, double c) {
  if (!(c > 0.0)) throw Error(ErrorCode::NonPositiveParameter, "metric scale must be positive");
  if (!p.has_gradient()) throw Error(ErrorCode::GradientUnavailable, p.name + " has no gradient");
  MetricSpaceModel m;
  m.dim = p.dim;
  m.distance = [c](const Vector& x, const Vector& y) { return c * (x - y).norm(); };
  m.local_slope = [p, c](const Vector& x) { return p.grad(x).norm() / c; };
  m.phi = [p](const Vector& x) { return p.eval(x); };
  m.segment = [](const Vector& x, const Vector& y, double t) -> Vector { return x + t * (y - x); };
  m.phi_gradient = [p](const Vector& x) -> Vector { return p.grad(x); };
  m.half_sq_distance_gradient = [c](const Vector& u, const Vector& v) -> Vector { return c * c * (u - v); };
  if (p.has_hessian()) {
    m.half_sq_slope_gradient = [p, c](const Vector& x) -> Vector { return p.hess(x) * p.grad(x) / (c * c); };
  }
  return m;
}

Vector phi_gradient(const MetricSpaceModel& m, const Vector& u) {
  return m.phi_gradient ? m.phi_gradient(u) : central_gradient(m.phi, u);
}

Vector distance_gradient(const MetricSpaceModel& m, const Vector& u, const Vector& v) {
  if (m.half_sq_distance_gradient) return m.half_sq_distance_gradient(u, v);
  return central_gradient([&](const Vector& x) { return 0.5 * std::pow(m.distance(x, v), 2); }, u);
}

Vector slope_gradient(const MetricSpaceModel& m, const Vector& u) {
  if (m.half_sq_slope_gradient) return m.half_sq_slope_gradient(u);
  return central_gradient([&](const Vector& x) { return 0.5 * std::pow(m.local_slope(x), 2); }, u);
}

bool metric_stationary(const MetricSpaceModel& m, const Vector& v) {
  return m.local_slope(v) <= 1e-13 * (1.0 + std::abs(m.phi(v)));
}

StepRecord metric_record(const MetricSpaceModel& m, const Vector& u, const Vector& v, double tau) {
  StepRecord r;
  r.energy_before = m.phi(v);
  r.energy_after = m.phi(u);
  r.increment_norm = m.distance(u, v);
  r.slope_norm = m.local_slope(u);
  r.residual = metric_functional(m, u, v, tau);
  return r;
}

}  // namespace

MetricSpaceModel euclidean_metric(const PotentialModel& p) {
  MetricSpaceModel m = metric_from(p, 1.0);
  m.name = "euclid(" + p.name + ")";
  return m;
}

MetricSpaceModel scaled_metric(const PotentialModel& p, double scale) {
  MetricSpaceModel m = metric_from(p, scale);
  m.name = "scaled(" + p.name + "," + format_double(scale) + ")";
  return m;
}

double metric_functional(const MetricSpaceModel& m, const Vector& u, const Vector& v, double tau) {
  const double d = m.distance(u, v);
  const double sl = m.local_slope(u);
  return m.phi(u) + d * d / (2.0 * tau) + 0.5 * tau * sl * sl - m.phi(v);
}

StepResult metric_euler_step(const MetricSpaceModel& m, const Vector& v, double tau, const SolverSettings& s) {
  require_step(tau);
  if (metric_stationary(m, v)) {
    StepRecord r = metric_record(m, v, v, tau);
    r.status = StepStatus::Stationary;
    return {v, r};
  }
  auto f = [&](const Vector& u) {
    const double d = m.distance(u, v);
    return m.phi(u) + d * d / (2.0 * tau);
  };
  VectorField g = [&](const Vector& u) -> Vector { return phi_gradient(m, u) + distance_gradient(m, u, v) / tau; };
  const SolveResult res = minimize_smooth(f, g, v, s, symmetric_fd_hessian(g, s.fd_step));
  if (!res.ok()) {
    StepRecord r;
    r.energy_before = m.phi(v);
    r.solver_iterations = res.iterations;
    return failed(v, r, "minimization: " + failure_text(res));
  }
  StepRecord r = metric_record(m, res.x, v, tau);
  r.solver_iterations = res.iterations;
  r.status = r.increment_norm == 0.0 ? StepStatus::Stationary : StepStatus::Exact;
  return {res.x, r};
}

StepResult metric_degiorgi_step(const MetricSpaceModel& m, const Vector& v, double tau, const SolverSettings& s) {
  require_step(tau);
  if (!std::isfinite(m.local_slope(v))) throw Error(ErrorCode::OutOfRange, "infinite slope at v");
  if (metric_stationary(m, v)) {
    StepRecord r = metric_record(m, v, v, tau);
    r.status = StepStatus::Stationary;
    return {v, r};
  }
  StepResult euler = metric_euler_step(m, v, tau, s);
  if (euler.record.status == StepStatus::Failed) {
    euler.record.message = "Euler point: " + euler.record.message;
    return euler;
  }
  const Vector& ue = euler.state;
  auto f = [&](const Vector& u) { return metric_functional(m, u, v, tau); };
  VectorField g = [&](const Vector& u) -> Vector {
    return phi_gradient(m, u) + distance_gradient(m, u, v) / tau + tau * slope_gradient(m, u);
  };
  const SolveResult res = minimize_smooth(f, g, ue, s, symmetric_fd_hessian(g, s.fd_step));
  if (!res.ok()) {
    StepRecord r;
    r.energy_before = m.phi(v);
    r.solver_iterations = euler.record.solver_iterations + res.iterations;
    return failed(v, r, "minimization: " + failure_text(res));
  }
  StepRecord r = metric_record(m, res.x, v, tau);
  r.solver_iterations = euler.record.solver_iterations + res.iterations;
  r.status = r.residual <= 1e-12 ? StepStatus::Exact : StepStatus::ResidualAccepted;
  // Slope estimate at the Euler comparison point.
  const double slope_e = m.local_slope(ue);
  const double bound_e = m.distance(ue, v) / tau;
  if (slope_e > bound_e * (1.0 + 1e-8) + 1e-12)
    r.message = "slope estimate violated at the Euler point: " + format_double(slope_e) + " > " +
                format_double(bound_e);
  return {res.x, r};
}

Trajectory run_metric(MetricMethod method, const MetricSpaceModel& m, const Vector& u0, const Partition& part,
                      const SolverSettings& s) {
  if (u0.size() != m.dim) throw Error(ErrorCode::DimensionMismatch, "u0 dimension does not match the model");
  Trajectory traj(part, u0);
  for (std::size_t i = 1; i <= part.num_steps(); ++i) {
    const Vector& v = traj.states().back();
    StepResult step = method == MetricMethod::Euler ? metric_euler_step(m, v, part.step(i), s)
                                                    : metric_degiorgi_step(m, v, part.step(i), s);
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
