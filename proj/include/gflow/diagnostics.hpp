#pragma once

#include <vector>

#include "gflow/core.hpp"
#include "gflow/potentials.hpp"
#include "gflow/schemes.hpp"

namespace gflow {

struct RateReport {
  std::vector<double> tau_grid;  // strictly decreasing
  std::vector<double> errors;
  double slope = 0.0;
  double r_squared = 0.0;
};

/// Least-squares slope of log(error) against log(tau). Needs >= 4 points,
/// positive errors and distinct step sizes; throws DegenerateFit when the
/// errors are constant to 1e-13 relative.
RateReport estimate_rate(const std::vector<double>& tau_grid, const std::vector<double>& errors);

/// Per-step energy balances of a trajectory.
struct EnergyLedger {
  /// φ(u_i) + tau_i ||Δu_i / tau_i||² - φ(u_{i-1})
  std::vector<double> gonzalez_defect;
  /// G_i(u_i, u_{i-1})
  std::vector<double> degiorgi_residual;
  double gonzalez_total = 0.0;
  double degiorgi_total = 0.0;
  double max_abs_gonzalez_defect = 0.0;
};

EnergyLedger energy_ledger(const Trajectory& traj, const PotentialModel& p);

enum class Verdict { CertifiedTrend, Inconclusive };

const char* to_string(Verdict v);

struct Certificate {
  std::vector<double> per_step_positive_parts;
  double total = 0.0;
  double holder_bound = 0.0;
  Verdict verdict = Verdict::Inconclusive;
};

/// Σ G_i(u_i, u_{i-1})⁺ of a single trajectory. A single trajectory is
/// certified only when its total is below N·1e-9.
Certificate certify(const Trajectory& traj, const PotentialModel& p);

struct SweepCertificate {
  std::vector<Certificate> members;  // ordered by decreasing fineness
  std::vector<double> fineness;
  std::optional<RateReport> trend;
  Verdict verdict = Verdict::Inconclusive;
};

/// Certifies a refinement sweep: CertifiedTrend when the totals decay with
/// measured order >= alpha - 0.15, or when the finest member is clean.
SweepCertificate certify_sweep(const std::vector<Trajectory>& sweep, const PotentialModel& p);

/// Closed-form iterates for φ = λu²/2 from u0 = 1 with uniform step tau.
/// Returns N+1 values starting with 1. The DeGiorgiRoot values are the Far root.
std::vector<double> closed_form_sequence(SchemeKind kind, double lambda, double tau, int steps);

/// ||Dφ(u) - <Dφ(u), w> w|| / ||Dφ(u)||, w = (u - v)/||u - v||; 0 for Dφ(u) = 0.
double alignment_defect(const PotentialModel& p, const Vector& u, const Vector& v);

/// L ||u - v||^{1+alpha} / (1 + alpha)
double holder_tolerance(const PotentialModel& p, const Vector& u, const Vector& v);

}  // namespace gflow
