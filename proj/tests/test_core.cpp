#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "gflow/core.hpp"

using namespace gflow;

namespace {

Vector scalar(double x) { return Vector::Constant(1, x); }

Trajectory linear_trajectory(int n) {
  Trajectory t(make_uniform_partition(1.0, n), scalar(0.0));
  for (int i = 1; i <= n; ++i) t.push(scalar(2.0 * i / n), StepRecord{});
  return t;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no gflow::Error thrown";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Partition, UniformEndsExactlyAtHorizon) {
  const Partition p = make_uniform_partition(0.3, 7);
  EXPECT_EQ(p.num_steps(), 7u);
  EXPECT_EQ(p.times().front(), 0.0);
  EXPECT_EQ(p.times().back(), 0.3);
  EXPECT_NEAR(p.step(3), 0.3 / 7, 1e-16);
  EXPECT_NEAR(p.fineness(), 0.3 / 7, 1e-16);
}

TEST(Partition, RejectsBadGrids) {
  EXPECT_EQ(code_of([] { make_uniform_partition(0.0, 4); }), ErrorCode::NonPositiveHorizon);
  EXPECT_EQ(code_of([] { make_uniform_partition(1.0, 0); }), ErrorCode::ZeroSteps);
  EXPECT_EQ(code_of([] { Partition({0.0}); }), ErrorCode::ZeroSteps);
  EXPECT_EQ(code_of([] { Partition({0.1, 0.2}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { Partition({0.0, 0.5, 0.5}); }), ErrorCode::InvalidArgument);
}

TEST(Partition, NonuniformFineness) {
  const Partition p({0.0, 0.1, 0.5, 0.6});
  EXPECT_NEAR(p.fineness(), 0.4, 1e-15);
  EXPECT_NEAR(p.step(2), 0.4, 1e-15);
}

TEST(Trajectory, PushAndFailRules) {
  Trajectory t(make_uniform_partition(1.0, 2), scalar(1.0));
  EXPECT_EQ(code_of([&] { t.push(Vector::Zero(2), StepRecord{}); }), ErrorCode::DimensionMismatch);
  t.push(scalar(0.5), StepRecord{});
  EXPECT_FALSE(t.complete());
  StepRecord r;
  r.message = "boom";
  t.fail(r);
  EXPECT_EQ(t.failure()->status, StepStatus::Failed);
  EXPECT_EQ(code_of([&] { t.push(scalar(0.1), StepRecord{}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(t.size(), 1u);
  EXPECT_DOUBLE_EQ(t.last_time(), 0.5);
}

TEST(Trajectory, RejectsPushPastHorizon) {
  Trajectory t = linear_trajectory(2);
  EXPECT_TRUE(t.complete());
  EXPECT_EQ(code_of([&] { t.push(scalar(9.0), StepRecord{}); }), ErrorCode::OutOfRange);
}

TEST(Interpolants, AffineAndBackwardConstant) {
  const Trajectory t = linear_trajectory(4);
  EXPECT_NEAR(eval_affine(t, 0.125)[0], 0.25, 1e-15);
  EXPECT_NEAR(eval_affine(t, 1.0)[0], 2.0, 1e-15);
  EXPECT_EQ(eval_constant(t, 0.0)[0], 0.0);
  // Left-open cells: t_1 itself still maps to u_1, just past it to u_2.
  EXPECT_EQ(eval_constant(t, 0.25)[0], 0.5);
  EXPECT_EQ(eval_constant(t, 0.2500001)[0], 1.0);
  EXPECT_EQ(code_of([&] { eval_affine(t, 1.5); }), ErrorCode::OutOfRange);
  EXPECT_EQ(code_of([&] { eval_constant(t, -0.1); }), ErrorCode::OutOfRange);
}

TEST(GridError, StateAndDerivative) {
  const Trajectory t = linear_trajectory(4);
  const GridError exact = grid_sup_error(
      t, [](double s) { return scalar(2.0 * s); }, [](double) { return scalar(2.0); });
  EXPECT_NEAR(exact.state, 0.0, 1e-15);
  ASSERT_TRUE(exact.derivative.has_value());
  EXPECT_NEAR(*exact.derivative, 0.0, 1e-13);
  const GridError off = grid_sup_error(t, [](double s) { return scalar(2.0 * s + 0.1); });
  EXPECT_NEAR(off.state, 0.1, 1e-15);
  EXPECT_FALSE(off.derivative.has_value());
}

TEST(StepStatus, RoundTrip) {
  for (StepStatus s : {StepStatus::Exact, StepStatus::ResidualAccepted, StepStatus::Stationary, StepStatus::Failed})
    EXPECT_EQ(parse_step_status(to_string(s)), s);
  EXPECT_FALSE(parse_step_status("Bogus").has_value());
}

TEST(Csv, RoundTripPreservesStatesExactly) {
  Trajectory t(make_uniform_partition(1.0, 3), Vector{{0.1, -1.0 / 3.0}});
  for (int i = 1; i <= 3; ++i) {
    StepRecord r;
    r.status = i == 2 ? StepStatus::ResidualAccepted : StepStatus::Exact;
    t.push(Vector{{std::sqrt(2.0) * i, 1e-300 * i}}, r);
  }
  std::stringstream ss;
  write_trajectory_csv(ss, t, [](const Vector& u) { return u.squaredNorm(); }, {}, {{"extra", {1, 2, 3, 4}}});
  const TrajectoryTable tab = read_trajectory_csv(ss);
  ASSERT_EQ(tab.states.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(tab.states[i], t.states()[i]);
    EXPECT_EQ(tab.times[i], t.partition().times()[i]);
  }
  EXPECT_EQ(tab.statuses[2], StepStatus::ResidualAccepted);
  const Trajectory back = trajectory_from_table(tab);
  EXPECT_TRUE(back.complete());
  EXPECT_EQ(back.states().back(), t.states().back());
}

TEST(Csv, FailedRowTruncates) {
  Trajectory t(make_uniform_partition(1.0, 3), scalar(1.0));
  t.push(scalar(0.5), StepRecord{});
  t.fail(StepRecord{});
  std::stringstream ss;
  write_trajectory_csv(ss, t, [](const Vector& u) { return u[0]; }, {});
  EXPECT_NE(ss.str().find("Failed"), std::string::npos);
  const TrajectoryTable tab = read_trajectory_csv(ss);
  EXPECT_EQ(tab.states.size(), 2u);
}

TEST(Csv, MalformedInputIsParseError) {
  const char* bad[] = {
      "",
      "time,u_0\n0,1\n1,2\n",
      "step,t,x\n0,0,1\n1,1,2\n",
      "step,t,u_0\n0,0,1\n",
      "step,t,u_0\n0,0,1\n1,1,abc\n",
      "step,t,u_0\n0,0,1\n1,1\n",
      "step,t,u_0,status\n0,0,1,Exact\n1,1,2,Weird\n",
  };
  for (const char* text : bad) {
    std::stringstream ss(text);
    EXPECT_EQ(code_of([&] { read_trajectory_csv(ss); }), ErrorCode::ParseError) << text;
  }
}

TEST(Csv, StatusColumnIsOptional) {
  std::stringstream ss("step,t,u_0,u_1\n0,0,1,2\n1,0.5,3,4\n");
  const TrajectoryTable tab = read_trajectory_csv(ss);
  ASSERT_EQ(tab.states.size(), 2u);
  EXPECT_EQ(tab.states[1][1], 4.0);
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(std::stod(format_double(0.1)), 0.1);
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}
