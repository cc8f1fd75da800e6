#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gflow/core.hpp"
#include "gflow/potentials.hpp"
#include "gflow/solvers.hpp"

namespace gflow {

// ---------------------------------------------------------------------------
// Generalized gradient flows: ∂ψ(u, u') + Dφ(u) ∋ 0.

/// ψ(u, w) = β(u) ||w||^p / p with conjugate ψ*(u, y) = β(u)^{-1/(p-1)} ||y||^{p'} / p'.
class DissipationPotential {
 public:
  /// β must satisfy beta_min <= β(u) <= beta_max with beta_min > 0.
  DissipationPotential(double p, std::function<double(const Vector&)> beta, double beta_min,
                       double beta_max);

  /// Constant β.
  static DissipationPotential constant(double p, double beta);

  double exponent() const noexcept { return p_; }
  double conjugate_exponent() const noexcept { return p_ / (p_ - 1.0); }
  double beta(const Vector& u) const { return beta_(u); }

  double value(const Vector& u, const Vector& w) const;
  double conjugate(const Vector& u, const Vector& y) const;
  /// ∂_w ψ(u, w)
  Vector value_gradient(const Vector& u, const Vector& w) const;
  /// ∂²_w ψ(u, w); only defined for p >= 2.
  std::optional<Matrix> value_hessian(const Vector& u, const Vector& w) const;

  /// ψ(u,w) + ψ*(u,y) - <y,w> (>= 0)
  double fenchel_gap(const Vector& u, const Vector& w, const Vector& y) const;
  /// c with ψ(u,v) + ψ*(u,w) >= c||v||^p + c||w||^{p'}
  double coercivity_constant() const;

 private:
  double p_;
  std::function<double(const Vector&)> beta_;
  double beta_min_;
  double beta_max_;
};

/// G̃(u, v) = φ(u) + tau ψ(v, (u-v)/tau) + tau ψ*(v, -Dφ(u)) - φ(v)
double generalized_functional(const PotentialModel& p, const DissipationPotential& psi,
                              const Vector& u, const Vector& v, double tau);

/// Euler point argmin_w tau ψ(v, (w-v)/tau) + φ(w). The record's residual is
/// the Fenchel duality residual, zero at the exact minimizer.
StepResult gen_euler_step(const PotentialModel& p, const DissipationPotential& psi,
                          const Vector& v, double tau, const SolverSettings& s = {});

/// De Giorgi step for G̃ along the segment from v to the Euler point.
StepResult gen_degiorgi_step(const PotentialModel& p, const DissipationPotential& psi,
                             const Vector& v, double tau, const SolverSettings& s = {});

enum class GeneralizedMethod { Euler, DeGiorgi };

Trajectory run_generalized(GeneralizedMethod method, const PotentialModel& p,
                           const DissipationPotential& psi, const Vector& u0,
                           const Partition& part, const SolverSettings& s = {});

/// Telescoped balance φ(u_m) + Σ_{i<=m} tau_i[ψ + ψ*] - φ(u_0) for every m,
/// against Σ_{i<=N} ρ_i⁺.
struct GeneralizedBalance {
  std::vector<double> lhs;
  double positive_residual_total = 0.0;
  double max_excess = 0.0;  // max_m lhs[m] - positive_residual_total
};

GeneralizedBalance generalized_balance(const Trajectory& traj, const PotentialModel& p,
                                       const DissipationPotential& psi);

// ---------------------------------------------------------------------------
// GENERIC flows: u' = L DE(u) - K Dφ(u).

struct GenericSystem {
  std::string name;
  int dim = 0;
  std::function<Matrix(const Vector&)> poisson;  // L, antisymmetric
  std::function<Matrix(const Vector&)> onsager;  // K, symmetric PSD
  std::function<double(const Vector&)> energy;
  std::function<Vector(const Vector&)> energy_gradient;
  std::function<double(const Vector&)> entropy;  // φ, nonincreasing
  std::function<Vector(const Vector&)> entropy_gradient;
  /// Optional: Jacobian of u -> L(u) DE(u). Finite differences otherwise.
  std::function<Matrix(const Vector&)> reversible_jacobian;
  /// Optional: D²φ. Finite differences otherwise.
  std::function<Matrix(const Vector&)> entropy_hessian;
};

/// u = (q, p, S): E = p²/2 + q²/2 + S, φ = -S, L = [[0,1,0],[-1,0,0],[0,0,0]],
/// K(u) = γ[[0,0,0],[0,1,-p],[0,-p,p²]].
GenericSystem damped_oscillator(double gamma);

struct StructureDefects {
  double antisymmetry = 0.0;  // ||L + Lᵀ||
  double min_eigenvalue = 0.0;  // of K
  double symmetry = 0.0;  // ||K - Kᵀ||
  double compatibility = 0.0;  // max(||Lᵀ Dφ||, ||Kᵀ DE||)
};

StructureDefects structure_defects(const GenericSystem& sys, const Vector& u);

struct GenericStepResult {
  Vector state;
  StepRecord record;
  double energy = 0.0;
  double entropy = 0.0;
  double compat_defect = 0.0;
  double off_range = 0.0;
};

/// Ḡ(u, v) with K frozen at v; ψ(w) = ½<K⁺w, w> on range(K) plus penalty.
double generic_functional(const GenericSystem& sys, const Vector& u, const Vector& v, double tau);

/// Experimental: minimizes Ḡ(·, v). Off-range component above 1e-6 at the
/// minimizer marks the step Failed with RangeViolation.
GenericStepResult generic_step(const GenericSystem& sys, const Vector& v, double tau,
                               const SolverSettings& s = {});

struct GenericTrajectory {
  Trajectory trajectory;
  std::vector<double> energy;  // per state
  std::vector<double> entropy;
  std::vector<double> compat_defect;
};

GenericTrajectory run_generic(const GenericSystem& sys, const Vector& u0, const Partition& part,
                              const SolverSettings& s = {});

// ---------------------------------------------------------------------------
// Metric minimizing movements, on coordinate representations.

struct MetricSpaceModel {
  std::string name;
  int dim = 1;
  std::function<double(const Vector&, const Vector&)> distance;
  std::function<double(const Vector&)> local_slope;
  std::function<double(const Vector&)> phi;
  std::function<Vector(const Vector&, const Vector&, double)> segment;
  // Optional coordinate gradients; finite differences otherwise.
  std::function<Vector(const Vector&)> phi_gradient;
  /// ∇_u ½ d²(u, v)
  std::function<Vector(const Vector&, const Vector&)> half_sq_distance_gradient;
  /// ∇ ½ |∂φ|²(u)
  std::function<Vector(const Vector&)> half_sq_slope_gradient;
};

/// d(x, y) = ||x - y||, |∂φ| = ||Dφ||.
MetricSpaceModel euclidean_metric(const PotentialModel& p);
/// d(x, y) = c ||x - y||, |∂φ| = ||Dφ|| / c.
MetricSpaceModel scaled_metric(const PotentialModel& p, double scale);

/// Ĝ(u, v) = φ(u) + d²(u,v)/(2 tau) + (tau/2)|∂φ|²(u) - φ(v)
double metric_functional(const MetricSpaceModel& m, const Vector& u, const Vector& v, double tau);

StepResult metric_euler_step(const MetricSpaceModel& m, const Vector& v, double tau,
                             const SolverSettings& s = {});
StepResult metric_degiorgi_step(const MetricSpaceModel& m, const Vector& v, double tau,
                                const SolverSettings& s = {});

enum class MetricMethod { Euler, DeGiorgi };

Trajectory run_metric(MetricMethod method, const MetricSpaceModel& m, const Vector& u0,
                      const Partition& part, const SolverSettings& s = {});

}  // namespace gflow
