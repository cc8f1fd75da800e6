#include "gflow/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace gflow {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveHorizon: return "NonPositiveHorizon";
    case ErrorCode::ZeroSteps: return "ZeroSteps";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::NonPositiveParameter: return "NonPositiveParameter";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::GradientUnavailable: return "GradientUnavailable";
    case ErrorCode::HessianUnavailable: return "HessianUnavailable";
    case ErrorCode::SingularJacobian: return "SingularJacobian";
    case ErrorCode::MaxIterations: return "MaxIterations";
    case ErrorCode::NoSignChange: return "NoSignChange";
    case ErrorCode::Diverging: return "Diverging";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::DegenerateDirection: return "DegenerateDirection";
    case ErrorCode::MissingRegularityMetadata: return "MissingRegularityMetadata";
    case ErrorCode::RangeViolation: return "RangeViolation";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

Partition::Partition(std::vector<double> times) : times_(std::move(times)) {
  if (times_.size() < 2) throw Error(ErrorCode::ZeroSteps, "partition needs at least one step");
  if (times_.front() != 0.0) throw Error(ErrorCode::InvalidArgument, "partition must start at t = 0");
  for (std::size_t i = 1; i < times_.size(); ++i) {
    const double tau = times_[i] - times_[i - 1];
    if (!(tau > 0.0)) throw Error(ErrorCode::InvalidArgument, "partition times must increase strictly");
    fineness_ = std::max(fineness_, tau);
  }
}

Partition make_uniform_partition(double horizon, int steps) {
  if (!(horizon > 0.0)) throw Error(ErrorCode::NonPositiveHorizon, "T must be positive");
  if (steps < 1) throw Error(ErrorCode::ZeroSteps, "N must be at least 1");
  std::vector<double> times(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) times[i] = horizon * i / steps;
  times.back() = horizon;
  return Partition(std::move(times));
}

std::string_view to_string(StepStatus status) {
  switch (status) {
    case StepStatus::Exact: return "Exact";
    case StepStatus::ResidualAccepted: return "ResidualAccepted";
    case StepStatus::Stationary: return "Stationary";
    case StepStatus::Failed: return "Failed";
  }
  return "Unknown";
}

std::optional<StepStatus> parse_step_status(std::string_view text) {
  for (auto s : {StepStatus::Exact, StepStatus::ResidualAccepted, StepStatus::Stationary,
                 StepStatus::Failed}) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

Trajectory::Trajectory(Partition partition, Vector initial_state)
    : partition_(std::move(partition)) {
  if (initial_state.size() == 0) throw Error(ErrorCode::DimensionMismatch, "empty initial state");
  states_.push_back(std::move(initial_state));
}

void Trajectory::push(Vector state, StepRecord record) {
  if (failure_) throw Error(ErrorCode::InvalidArgument, "trajectory already failed");
  if (complete()) throw Error(ErrorCode::OutOfRange, "trajectory is complete");
  if (state.size() != states_.front().size())
    throw Error(ErrorCode::DimensionMismatch, "state dimension changed");
  states_.push_back(std::move(state));
  records_.push_back(std::move(record));
}

void Trajectory::fail(StepRecord record) {
  record.status = StepStatus::Failed;
  failure_ = std::move(record);
}

namespace {

// Index j with t in (t_{j-1}, t_j]; 0 for t = 0.
std::size_t locate(const Trajectory& traj, double t) {
  const auto& times = traj.partition().times();
  if (!(t >= 0.0) || t > traj.last_time()) throw Error(ErrorCode::OutOfRange, "t outside [0, T]");
  if (t == 0.0) return 0;
  const auto it = std::lower_bound(times.begin(), times.end(), t);
  return static_cast<std::size_t>(it - times.begin());
}

}  // namespace

Vector eval_affine(const Trajectory& traj, double t) {
  const std::size_t j = locate(traj, t);
  if (j == 0) return traj.states().front();
  const auto& times = traj.partition().times();
  if (t == times[j]) return traj.states()[j];
  const double ell = (t - times[j - 1]) / (times[j] - times[j - 1]);
  return ell * traj.states()[j] + (1.0 - ell) * traj.states()[j - 1];
}

Vector eval_constant(const Trajectory& traj, double t) { return traj.states()[locate(traj, t)]; }

GridError grid_sup_error(const Trajectory& traj, const TimeFunction& exact,
                         const TimeFunction& exact_derivative) {
  GridError err;
  const auto& times = traj.partition().times();
  const auto& states = traj.states();
  for (std::size_t i = 0; i < states.size(); ++i) {
    err.state = std::max(err.state, (states[i] - exact(times[i])).norm());
  }
  if (exact_derivative) {
    double d = 0.0;
    for (std::size_t i = 1; i < states.size(); ++i) {
      const Vector slope = (states[i] - states[i - 1]) / (times[i] - times[i - 1]);
      d = std::max(d, (slope - exact_derivative(times[i])).norm());
    }
    err.derivative = d;
  }
  return err;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj,
                          const std::function<double(const Vector&)>& energy,
                          const std::function<double(const Vector&)>& slope,
                          const std::vector<ExtraColumn>& extra) {
  const std::size_t d = traj.dim();
  out << "step,t";
  for (std::size_t k = 0; k < d; ++k) out << ",u_" << k;
  out << ",energy,increment_norm,slope_norm,residual,status";
  for (const auto& col : extra) out << ',' << col.name;
  out << '\n';

  const auto& times = traj.partition().times();
  const auto& states = traj.states();
  auto extra_at = [&](std::size_t row) {
    for (const auto& col : extra) {
      out << ',' << (row < col.values.size() ? format_double(col.values[row]) : "nan");
    }
  };
  auto slope_at = [&](const Vector& u) {
    return slope ? slope(u) : std::numeric_limits<double>::quiet_NaN();
  };
  for (std::size_t i = 0; i < states.size(); ++i) {
    out << i << ',' << format_double(times[i]);
    for (std::size_t k = 0; k < d; ++k) out << ',' << format_double(states[i][k]);
    if (i == 0) {
      out << ',' << format_double(energy(states[0])) << ",0," << format_double(slope_at(states[0]))
          << ",0," << to_string(StepStatus::Exact);
    } else {
      const StepRecord& r = traj.records()[i - 1];
      out << ',' << format_double(r.energy_after) << ',' << format_double(r.increment_norm) << ','
          << format_double(r.slope_norm) << ',' << format_double(r.residual) << ','
          << to_string(r.status);
    }
    extra_at(i);
    out << '\n';
  }
  if (traj.failure()) {
    const std::size_t i = states.size();
    const StepRecord& r = *traj.failure();
    out << i << ',' << format_double(times[i]);
    for (std::size_t k = 0; k < d; ++k) out << ',' << format_double(states.back()[k]);
    out << ',' << format_double(r.energy_before) << ",nan,nan,nan," << to_string(StepStatus::Failed);
    for (std::size_t c = 0; c < extra.size(); ++c) out << ",nan";
    out << '\n';
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  for (auto& c : cells) {
    while (!c.empty() && (c.back() == '\r' || c.back() == ' ')) c.pop_back();
    while (!c.empty() && c.front() == ' ') c.erase(c.begin());
  }
  return cells;
}

double parse_number(const std::string& cell, std::size_t line_no) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(cell, &pos);
    if (pos != cell.size()) throw std::invalid_argument(cell);
    return x;
  } catch (const std::exception&) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad number '" + cell + "'");
  }
}

}  // namespace

TrajectoryTable read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "empty CSV");
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "step" || header[1] != "t")
    throw Error(ErrorCode::ParseError, "header must start with step,t");
  std::vector<std::size_t> state_cols;
  std::optional<std::size_t> status_col;
  for (std::size_t c = 2; c < header.size(); ++c) {
    const std::string expected = "u_" + std::to_string(state_cols.size());
    if (header[c] == expected) state_cols.push_back(c);
    if (header[c] == "status") status_col = c;
  }
  if (state_cols.empty()) throw Error(ErrorCode::ParseError, "no u_k columns");

  TrajectoryTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": wrong column count");
    StepStatus status = StepStatus::Exact;
    if (status_col) {
      const auto parsed = parse_step_status(cells[*status_col]);
      if (!parsed) throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad status");
      status = *parsed;
    }
    if (status == StepStatus::Failed) break;
    const double t = parse_number(cells[1], line_no);
    Vector u(static_cast<Eigen::Index>(state_cols.size()));
    for (std::size_t k = 0; k < state_cols.size(); ++k) u[k] = parse_number(cells[state_cols[k]], line_no);
    if (!u.allFinite()) throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": non-finite state");
    table.times.push_back(t);
    table.states.push_back(std::move(u));
    table.statuses.push_back(status);
  }
  if (table.states.size() < 2) throw Error(ErrorCode::ParseError, "need at least two rows");
  return table;
}

Trajectory trajectory_from_table(const TrajectoryTable& table) {
  Partition part = [&] {
    try {
      return Partition(table.times);
    } catch (const Error& e) {
      throw Error(ErrorCode::ParseError, std::string("invalid time column: ") + e.what());
    }
  }();
  Trajectory traj(std::move(part), table.states.front());
  for (std::size_t i = 1; i < table.states.size(); ++i) {
    StepRecord r;
    r.status = table.statuses[i];
    r.increment_norm = (table.states[i] - table.states[i - 1]).norm();
    traj.push(table.states[i], r);
  }
  return traj;
}

}  // namespace gflow
