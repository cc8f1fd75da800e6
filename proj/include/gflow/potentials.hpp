#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gflow/core.hpp"

namespace gflow {

/// Hölder data of the smooth part: ||Dφ₂(u) - Dφ₂(v)|| <= L ||u - v||^alpha.
struct HolderData {
  double constant = 0.0;
  double exponent = 1.0;
};

/// An energy φ on R^dim. Smooth models provide a gradient (and usually a
/// Hessian); nonsmooth convex models provide a proximal map instead.
struct PotentialModel {
  std::string name;
  int dim = 1;
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  std::function<Matrix(const Vector&)> hessian;
  /// argmin_u φ(u) + ||u - v||² / (2 tau)
  std::function<Vector(const Vector&, double)> prox;
  /// Exact gradient-flow solution from u0, when known in closed form.
  std::function<Vector(const Vector&, double)> exact_flow;
  bool convex = false;
  std::optional<HolderData> holder;

  bool has_gradient() const noexcept { return static_cast<bool>(gradient); }
  bool has_hessian() const noexcept { return static_cast<bool>(hessian); }
  bool has_prox() const noexcept { return static_cast<bool>(prox); }

  double eval(const Vector& u) const { return value(u); }
  /// Throws Error(GradientUnavailable) for prox-only models.
  Vector grad(const Vector& u) const;
  /// Throws Error(HessianUnavailable) when no Hessian is attached.
  Matrix hess(const Vector& u) const;
};

/// φ(u) = λu²/2
PotentialModel quadratic_1d(double lambda);
/// φ(u) = u₁² + u₂²/4, exact flow (u0₁ e^{-2t}, u0₂ e^{-t/2}).
PotentialModel aniso_quadratic_2d();
/// φ(u) = λ||u||²/2 on R^d.
PotentialModel radial_quadratic(double lambda, int dim);
/// φ(u) = u(1 - u); nonconvex, unbounded below.
PotentialModel logistic_nonconvex();
/// φ(u) = u + I_[√2, ∞)(u), prox-only.
PotentialModel obstacle_linear();

/// Parses `quad1d:λ`, `aniso2d`, `radial:λ:d`, `logistic`, `obstacle`.
PotentialModel parse_potential(std::string_view spec);

struct ParallelHessianCheck {
  bool parallel = true;
  double worst_defect = 0.0;
};

/// Tests whether D²φ(v)w is parallel to w on every (v, w) sample.
ParallelHessianCheck check_parallel_hessian(const PotentialModel& p,
                                            const std::vector<std::pair<Vector, Vector>>& samples);

}  // namespace gflow
