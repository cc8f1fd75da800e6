#pragma once

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gflow/error.hpp"

namespace gflow {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Time grid 0 = t_0 < t_1 < ... < t_N = T.
class Partition {
 public:
  /// Validates strict monotonicity and t_0 = 0.
  explicit Partition(std::vector<double> times);

  const std::vector<double>& times() const noexcept { return times_; }
  std::size_t num_steps() const noexcept { return times_.size() - 1; }
  double horizon() const noexcept { return times_.back(); }
  /// tau_i = t_i - t_{i-1}, i >= 1.
  double step(std::size_t i) const { return times_.at(i) - times_.at(i - 1); }
  /// max_i tau_i
  double fineness() const noexcept { return fineness_; }

 private:
  std::vector<double> times_;
  double fineness_ = 0.0;
};

Partition make_uniform_partition(double horizon, int steps);

enum class StepStatus { Exact, ResidualAccepted, Stationary, Failed };

std::string_view to_string(StepStatus status);
std::optional<StepStatus> parse_step_status(std::string_view text);

/// Per-step diagnostics attached to every scheme update.
struct StepRecord {
  double energy_before = 0.0;
  double energy_after = 0.0;
  double increment_norm = 0.0;
  double slope_norm = 0.0;
  double residual = 0.0;
  int solver_iterations = 0;
  StepStatus status = StepStatus::Exact;
  std::string message;
};

/// Output of a single scheme step: the new state and its record.
struct StepResult {
  Vector state;
  StepRecord record;
};

/// Discrete solution u_0..u_n on a partition. A failed step truncates the
/// trajectory: `states` holds the accepted prefix and `failure` the record of
/// the step that could not be completed.
class Trajectory {
 public:
  Trajectory(Partition partition, Vector initial_state);

  void push(Vector state, StepRecord record);
  void fail(StepRecord record);

  const Partition& partition() const noexcept { return partition_; }
  const std::vector<Vector>& states() const noexcept { return states_; }
  const std::vector<StepRecord>& records() const noexcept { return records_; }
  const std::optional<StepRecord>& failure() const noexcept { return failure_; }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(states_.front().size()); }
  /// Number of accepted steps.
  std::size_t size() const noexcept { return records_.size(); }
  bool complete() const noexcept { return records_.size() == partition_.num_steps(); }
  /// Time of the last accepted state.
  double last_time() const { return partition_.times()[records_.size()]; }

 private:
  Partition partition_;
  std::vector<Vector> states_;
  std::vector<StepRecord> records_;
  std::optional<StepRecord> failure_;
};

/// Piecewise affine interpolant; valid on [0, last_time()].
Vector eval_affine(const Trajectory& traj, double t);
/// Backward constant interpolant: u_j on (t_{j-1}, t_j].
Vector eval_constant(const Trajectory& traj, double t);

using TimeFunction = std::function<Vector(double)>;

struct GridError {
  double state = 0.0;
  std::optional<double> derivative;
};

/// Sup over grid nodes of ||u_i - exact(t_i)||; with a derivative callback
/// also the sup of ||(u_i - u_{i-1})/tau_i - exact'(t_i)||.
GridError grid_sup_error(const Trajectory& traj, const TimeFunction& exact,
                         const TimeFunction& exact_derivative = {});

// CSV with header step,t,u_0..u_{d-1},energy,increment_norm,slope_norm,residual,status.
// Extra columns (name, per-row values for rows 0..n) are appended after status.
struct ExtraColumn {
  std::string name;
  std::vector<double> values;
};

void write_trajectory_csv(std::ostream& out, const Trajectory& traj,
                          const std::function<double(const Vector&)>& energy,
                          const std::function<double(const Vector&)>& slope,
                          const std::vector<ExtraColumn>& extra = {});

/// Rows parsed back from a trajectory CSV. Rows after a Failed row are ignored.
struct TrajectoryTable {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<StepStatus> statuses;
};

/// Throws Error(ParseError) on malformed input.
TrajectoryTable read_trajectory_csv(std::istream& in);

/// Rebuilds a trajectory (states only, default records) from a table.
Trajectory trajectory_from_table(const TrajectoryTable& table);

std::string format_double(double x);

}  // namespace gflow
