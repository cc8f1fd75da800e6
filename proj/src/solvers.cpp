#include "gflow/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace gflow {

void SolverSettings::validate() const {
  if (!(tol_residual > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol_residual must be positive");
  if (max_iterations < 1) throw Error(ErrorCode::InvalidArgument, "max_iterations must be >= 1");
  if (!(backtracking_factor > 0.0 && backtracking_factor < 1.0))
    throw Error(ErrorCode::InvalidArgument, "backtracking_factor must lie in (0, 1)");
  if (!(fd_step > 0.0)) throw Error(ErrorCode::InvalidArgument, "fd_step must be positive");
}

Matrix fd_jacobian(const VectorField& F, const Vector& x, double fd_step) {
  const Vector f0 = F(x);
  Matrix J(f0.size(), x.size());
  Vector xp = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = fd_step * (1.0 + std::abs(x[j]));
    xp[j] = x[j] + h;
    J.col(j) = (F(xp) - f0) / (xp[j] - x[j]);
    xp[j] = x[j];
  }
  return J;
}

namespace {

// Gaussian elimination with partial pivoting. A pivot smaller than 1e-14 of
// its row's original scale counts as singular.
std::optional<Vector> solve_dense(Matrix A, Vector b) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || b.size() != n) return std::nullopt;
  Vector scale(n);
  for (Eigen::Index i = 0; i < n; ++i) scale[i] = A.row(i).cwiseAbs().maxCoeff();
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index piv = k;
    for (Eigen::Index i = k + 1; i < n; ++i) {
      if (std::abs(A(i, k)) > std::abs(A(piv, k))) piv = i;
    }
    if (piv != k) {
      A.row(k).swap(A.row(piv));
      std::swap(b[k], b[piv]);
      std::swap(scale[k], scale[piv]);
    }
    if (!(std::abs(A(k, k)) > 1e-14 * scale[k])) return std::nullopt;
    for (Eigen::Index i = k + 1; i < n; ++i) {
      const double m = A(i, k) / A(k, k);
      if (m == 0.0) continue;
      A.row(i).tail(n - k) -= m * A.row(k).tail(n - k);
      b[i] -= m * b[k];
    }
  }
  Vector x(n);
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    double acc = b[i];
    for (Eigen::Index j = i + 1; j < n; ++j) acc -= A(i, j) * x[j];
    x[i] = acc / A(i, i);
  }
  return x;
}

constexpr int kMaxBacktracks = 60;

}  // namespace

SolveResult newton_solve(const VectorField& F, const MatrixField& J, const Vector& x0,
                         const SolverSettings& s) {
  s.validate();
  SolveResult out;
  out.x = x0;
  Vector fx = F(out.x);
  if (fx.size() != x0.size()) throw Error(ErrorCode::DimensionMismatch, "F must be square");
  out.residual = fx.allFinite() ? fx.norm() : std::numeric_limits<double>::infinity();

  for (int it = 0; it < s.max_iterations; ++it) {
    if (out.residual <= s.tol_residual) return out;
    if (!std::isfinite(out.residual)) break;
    const Matrix jac = J ? J(out.x) : fd_jacobian(F, out.x, s.fd_step);
    const auto delta = solve_dense(jac, -fx);
    if (!delta || !delta->allFinite()) {
      out.failure = ErrorCode::SingularJacobian;
      return out;
    }
    // Damping: halve until the residual norm decreases.
    double step = 1.0;
    bool accepted = false;
    for (int k = 0; k < kMaxBacktracks; ++k) {
      Vector trial = out.x + step * (*delta);
      Vector ft = F(trial);
      if (ft.allFinite() && ft.norm() < out.residual) {
        out.x = std::move(trial);
        fx = std::move(ft);
        out.residual = fx.norm();
        accepted = true;
        break;
      }
      step *= s.backtracking_factor;
    }
    ++out.iterations;
    if (!accepted) break;
  }
  if (out.residual <= s.tol_residual) return out;
  out.failure = ErrorCode::MaxIterations;
  return out;
}

double brent_root(const std::function<double(double)>& g, double a, double b,
                  const SolverSettings& s) {
  s.validate();
  double fa = g(a);
  double fb = g(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (!(std::isfinite(fa) && std::isfinite(fb)) || fa * fb > 0.0)
    throw Error(ErrorCode::NoSignChange, "g(a) and g(b) have the same sign");

  constexpr double eps = std::numeric_limits<double>::epsilon();
  double c = b, fc = fb, d = b - a, e = d;
  const int max_it = std::max(s.max_iterations, 200);
  for (int it = 0; it < max_it; ++it) {
    if ((fb > 0.0 && fc > 0.0) || (fb < 0.0 && fc < 0.0)) {
      c = a;
      fc = fa;
      e = d = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol1 = 2.0 * eps * std::abs(b) + 0.5e-14 * (1.0 + std::abs(b));
    const double xm = 0.5 * (c - b);
    if (fb == 0.0 || std::abs(xm) <= tol1) return b;
    if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
      // Inverse quadratic interpolation, or secant when only two points.
      double p, q, r;
      const double sr = fb / fa;
      if (a == c) {
        p = 2.0 * xm * sr;
        q = 1.0 - sr;
      } else {
        q = fa / fc;
        r = fb / fc;
        p = sr * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0));
        q = (q - 1.0) * (r - 1.0) * (sr - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::abs(p);
      const double min1 = 3.0 * xm * q - std::abs(tol1 * q);
      const double min2 = std::abs(e * q);
      if (2.0 * p < std::min(min1, min2)) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += std::abs(d) > tol1 ? d : (xm > 0.0 ? tol1 : -tol1);
    fb = g(b);
  }
  return b;
}

SolveResult minimize_smooth(const ScalarField& f, const VectorField& g, const Vector& x0,
                            const SolverSettings& s, const MatrixField& hessian) {
  s.validate();
  SolveResult out;
  out.x = x0;
  double fx = f(out.x);
  Vector gx = g(out.x);
  double prev_step = 0.0;
  Vector prev_x, prev_g;

  for (int it = 0;; ++it) {
    if (!std::isfinite(fx) || fx < -1e12) {
      out.failure = ErrorCode::Diverging;
      out.residual = gx.norm();
      return out;
    }
    out.residual = gx.norm();
    if (out.residual <= s.tol_residual * (1.0 + std::abs(fx))) return out;
    if (it >= s.max_iterations) break;

    Vector dir;
    bool newton = false;
    if (hessian) {
      if (auto d = solve_dense(hessian(out.x), -gx); d && d->allFinite() && d->dot(gx) < 0.0) {
        dir = std::move(*d);
        newton = true;
      }
    }
    // A Newton correction at rounding level: the gradient cannot shrink further.
    if (newton && dir.norm() <= 1e-14 * (1.0 + out.x.norm())) {
      out.x += dir;
      ++out.iterations;
      return out;
    }
    double step = 1.0;
    if (!newton) {
      dir = -gx;
      // Barzilai-Borwein trial length, then backtracking.
      if (prev_step > 0.0) {
        const Vector sx = out.x - prev_x;
        const Vector yg = gx - prev_g;
        const double sy = sx.dot(yg);
        if (sy > 0.0) step = sx.squaredNorm() / sy;
      } else {
        step = 1.0 / std::max(1.0, gx.norm());
      }
    }

    const double slope = gx.dot(dir);
    bool accepted = false;
    Vector trial;
    double ft = 0.0;
    Vector gt;
    for (int k = 0; k < kMaxBacktracks; ++k) {
      trial = out.x + step * dir;
      ft = f(trial);
      if (std::isfinite(ft) && ft <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      // Near the minimum f only changes at rounding level; judge the full
      // Newton step by the gradient instead.
      if (newton && k == 0 && std::isfinite(ft) && std::abs(ft - fx) <= 1e-13 * (1.0 + std::abs(fx))) {
        gt = g(trial);
        if (gt.norm() < out.residual) {
          accepted = true;
          break;
        }
      }
      if (std::isfinite(ft) && ft < -1e12) {
        accepted = true;
        break;
      }
      step *= s.backtracking_factor;
    }
    if (!accepted) {
      // Function values are at rounding level; accept the full step if it
      // still shrinks the gradient.
      trial = out.x + (newton ? 1.0 : step) * dir;
      ft = f(trial);
      gt = g(trial);
      if (!(std::isfinite(ft) && gt.norm() < out.residual)) {
        ++out.iterations;
        break;
      }
    } else if (gt.size() == 0) {
      gt = g(trial);
    }
    prev_x = out.x;
    prev_g = gx;
    prev_step = step;
    out.x = std::move(trial);
    fx = ft;
    gx = std::move(gt);
    ++out.iterations;
  }
  out.residual = gx.norm();
  out.failure = ErrorCode::MaxIterations;
  return out;
}

SolveResult prox_step(const PotentialModel& p, const Vector& v, double tau, const SolverSettings& s) {
  if (!(tau > 0.0)) throw Error(ErrorCode::NonPositiveParameter, "tau must be positive");
  if (p.has_prox()) {
    SolveResult out;
    out.x = p.prox(v, tau);
    return out;
  }
  if (!p.has_gradient()) throw Error(ErrorCode::GradientUnavailable, p.name + " has neither prox nor gradient");
  const double inv2tau = 0.5 / tau;
  auto f = [&](const Vector& u) { return p.eval(u) + inv2tau * (u - v).squaredNorm(); };
  auto g = [&](const Vector& u) -> Vector { return p.grad(u) + (u - v) / tau; };
  MatrixField h;
  if (p.has_hessian()) {
    h = [&](const Vector& u) -> Matrix {
      return p.hess(u) + Matrix::Identity(u.size(), u.size()) / tau;
    };
  } else {
    h = [&](const Vector& u) -> Matrix { return fd_jacobian(g, u, s.fd_step); };
  }
  return minimize_smooth(f, g, v, s, h);
}

}  // namespace gflow
