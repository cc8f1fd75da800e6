#pragma once

#include <functional>
#include <optional>

#include "gflow/core.hpp"
#include "gflow/potentials.hpp"

namespace gflow {

struct SolverSettings {
  double tol_residual = 1e-12;
  int max_iterations = 100;
  double backtracking_factor = 0.5;
  double fd_step = 1e-7;

  /// Throws Error(InvalidArgument) when out of range.
  void validate() const;
};

using VectorField = std::function<Vector(const Vector&)>;
using MatrixField = std::function<Matrix(const Vector&)>;
using ScalarField = std::function<double(const Vector&)>;

struct SolveResult {
  Vector x;
  int iterations = 0;
  /// ||F(x)|| for Newton, ||∇f(x)|| for minimization.
  double residual = 0.0;
  std::optional<ErrorCode> failure;

  bool ok() const noexcept { return !failure.has_value(); }
};

/// Forward-difference Jacobian with step fd_step·(1 + |x_j|).
Matrix fd_jacobian(const VectorField& F, const Vector& x, double fd_step);

/// Damped Newton for F(x) = 0. An empty J falls back to finite differences.
/// Failures: SingularJacobian, MaxIterations.
SolveResult newton_solve(const VectorField& F, const MatrixField& J, const Vector& x0,
                         const SolverSettings& s = {});

/// Brent's method on [a, b]; requires g(a)·g(b) <= 0, else throws NoSignChange.
/// Stops on an exact zero or a bracket below 4eps|b| + 1e-14(1 + |b|).
double brent_root(const std::function<double(double)>& g, double a, double b,
                  const SolverSettings& s = {});

/// Minimizes a smooth f. With a Hessian callback this is damped Newton on the
/// gradient, otherwise gradient descent with Armijo backtracking.
/// Failures: MaxIterations, Diverging.
SolveResult minimize_smooth(const ScalarField& f, const VectorField& g, const Vector& x0,
                            const SolverSettings& s = {}, const MatrixField& hessian = {});

/// argmin_u φ(u) + ||u - v||²/(2 tau), closed form when the model has a prox.
SolveResult prox_step(const PotentialModel& p, const Vector& v, double tau,
                      const SolverSettings& s = {});

}  // namespace gflow
