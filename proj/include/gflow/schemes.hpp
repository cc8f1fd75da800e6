#pragma once

#include <string>
#include <string_view>

#include "gflow/core.hpp"
#include "gflow/potentials.hpp"
#include "gflow/solvers.hpp"

namespace gflow {

enum class Branch { Near, Far };

/// Which time stepper to run. `branch` only matters for DeGiorgiRoot.
struct SchemeKind {
  enum class Method { Euler, Gonzalez, DeGiorgiRoot, DeGiorgiMin };

  Method method = Method::Euler;
  Branch branch = Branch::Far;

  static SchemeKind euler() { return {Method::Euler, Branch::Far}; }
  static SchemeKind gonzalez() { return {Method::Gonzalez, Branch::Far}; }
  static SchemeKind degiorgi_root(Branch b) { return {Method::DeGiorgiRoot, b}; }
  static SchemeKind degiorgi_min() { return {Method::DeGiorgiMin, Branch::Far}; }

  friend bool operator==(const SchemeKind&, const SchemeKind&) = default;
};

/// CLI names: euler, gonzalez, dg-root:near, dg-root:far, dg-min.
std::string to_string(SchemeKind kind);
/// Throws Error(ParseError) on unknown names.
SchemeKind parse_scheme(std::string_view name);

/// G(u, v) = φ(u) + ||u - v||²/(2 tau) + (tau/2)||Dφ(u)||² - φ(v).
double degiorgi_functional(const PotentialModel& p, const Vector& u, const Vector& v, double tau);

/// ||Dφ(v)|| <= 1e-13 (1 + |φ(v)|)
bool is_stationary(const PotentialModel& p, const Vector& v);

StepResult euler_step(const PotentialModel& p, const Vector& v, double tau,
                      const SolverSettings& s = {});
StepResult gonzalez_step(const PotentialModel& p, const Vector& v, double tau,
                         const SolverSettings& s = {});
StepResult degiorgi_root_step(const PotentialModel& p, const Vector& v, double tau, Branch branch,
                              const SolverSettings& s = {});
StepResult degiorgi_min_step(const PotentialModel& p, const Vector& v, double tau,
                             const SolverSettings& s = {});

StepResult scheme_step(SchemeKind kind, const PotentialModel& p, const Vector& v, double tau,
                       const SolverSettings& s = {});

/// Steps sequentially over the partition; stops at the first Failed step.
Trajectory run_scheme(SchemeKind kind, const PotentialModel& p, const Vector& u0,
                      const Partition& part, const SolverSettings& s = {});

}  // namespace gflow
