#include "gflow/potentials.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace gflow {

Vector PotentialModel::grad(const Vector& u) const {
  if (!gradient) throw Error(ErrorCode::GradientUnavailable, name + " is nonsmooth (prox-only)");
  return gradient(u);
}

Matrix PotentialModel::hess(const Vector& u) const {
  if (!hessian) throw Error(ErrorCode::HessianUnavailable, name + " has no Hessian");
  return hessian(u);
}

namespace {

void require_positive(double x, const char* what) {
  if (!(x > 0.0)) throw Error(ErrorCode::NonPositiveParameter, std::string(what) + " must be positive");
}

}  // namespace

PotentialModel radial_quadratic(double lambda, int dim) {
  require_positive(lambda, "lambda");
  if (dim < 1) throw Error(ErrorCode::NonPositiveParameter, "dimension must be at least 1");
  PotentialModel p;
  p.name = "radial:" + std::to_string(lambda) + ":" + std::to_string(dim);
  p.dim = dim;
  p.value = [lambda](const Vector& u) { return 0.5 * lambda * u.squaredNorm(); };
  p.gradient = [lambda](const Vector& u) -> Vector { return lambda * u; };
  p.hessian = [lambda, dim](const Vector&) -> Matrix { return lambda * Matrix::Identity(dim, dim); };
  p.exact_flow = [lambda](const Vector& u0, double t) -> Vector { return std::exp(-lambda * t) * u0; };
  p.convex = true;
  p.holder = HolderData{lambda, 1.0};
  return p;
}

PotentialModel quadratic_1d(double lambda) {
  PotentialModel p = radial_quadratic(lambda, 1);
  p.name = "quad1d:" + std::to_string(lambda);
  return p;
}

PotentialModel aniso_quadratic_2d() {
  PotentialModel p;
  p.name = "aniso2d";
  p.dim = 2;
  p.value = [](const Vector& u) { return u[0] * u[0] + 0.25 * u[1] * u[1]; };
  p.gradient = [](const Vector& u) -> Vector { return Eigen::Vector2d(2.0 * u[0], 0.5 * u[1]); };
  p.hessian = [](const Vector&) -> Matrix { return Eigen::Vector2d(2.0, 0.5).asDiagonal(); };
  p.exact_flow = [](const Vector& u0, double t) -> Vector {
    return Eigen::Vector2d(u0[0] * std::exp(-2.0 * t), u0[1] * std::exp(-0.5 * t));
  };
  p.convex = true;
  p.holder = HolderData{2.0, 1.0};
  return p;
}

PotentialModel logistic_nonconvex() {
  PotentialModel p;
  p.name = "logistic";
  p.dim = 1;
  p.value = [](const Vector& u) { return u[0] * (1.0 - u[0]); };
  p.gradient = [](const Vector& u) -> Vector { return Vector::Constant(1, 1.0 - 2.0 * u[0]); };
  p.hessian = [](const Vector&) -> Matrix { return Matrix::Constant(1, 1, -2.0); };
  // u' = 2u - 1
  p.exact_flow = [](const Vector& u0, double t) -> Vector {
    return Vector::Constant(1, 0.5 + (u0[0] - 0.5) * std::exp(2.0 * t));
  };
  p.convex = false;
  p.holder = HolderData{2.0, 1.0};
  return p;
}

PotentialModel obstacle_linear() {
  static const double kObstacle = std::sqrt(2.0);
  PotentialModel p;
  p.name = "obstacle";
  p.dim = 1;
  p.value = [](const Vector& u) {
    return u[0] >= kObstacle ? u[0] : std::numeric_limits<double>::infinity();
  };
  p.prox = [](const Vector& v, double tau) -> Vector {
    return Vector::Constant(1, std::max(v[0] - tau, kObstacle));
  };
  p.exact_flow = [](const Vector& u0, double t) -> Vector {
    return Vector::Constant(1, std::max(u0[0] - t, kObstacle));
  };
  p.convex = true;
  p.holder = HolderData{0.0, 1.0};
  return p;
}

namespace {

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    parts.emplace_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

double to_double(const std::string& s, std::string_view spec) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(s, &pos);
    if (pos == s.size()) return x;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::ParseError, "bad number in potential '" + std::string(spec) + "'");
}

}  // namespace

PotentialModel parse_potential(std::string_view spec) {
  const auto parts = split(spec, ':');
  const std::string& kind = parts[0];
  auto expect = [&](std::size_t n) {
    if (parts.size() != n) throw Error(ErrorCode::ParseError, "wrong arity in potential '" + std::string(spec) + "'");
  };
  try {
    if (kind == "quad1d") {
      expect(2);
      return quadratic_1d(to_double(parts[1], spec));
    }
    if (kind == "aniso2d") {
      expect(1);
      return aniso_quadratic_2d();
    }
    if (kind == "radial") {
      expect(3);
      const double d = to_double(parts[2], spec);
      if (d != std::floor(d)) throw Error(ErrorCode::ParseError, "radial dimension must be an integer");
      return radial_quadratic(to_double(parts[1], spec), static_cast<int>(d));
    }
    if (kind == "logistic") {
      expect(1);
      return logistic_nonconvex();
    }
    if (kind == "obstacle") {
      expect(1);
      return obstacle_linear();
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ParseError) throw;
    throw Error(ErrorCode::ParseError, e.what());
  }
  throw Error(ErrorCode::ParseError, "unknown potential '" + std::string(spec) + "'");
}

ParallelHessianCheck check_parallel_hessian(const PotentialModel& p,
                                            const std::vector<std::pair<Vector, Vector>>& samples) {
  if (!p.has_hessian()) throw Error(ErrorCode::HessianUnavailable, p.name + " has no Hessian");
  ParallelHessianCheck out;
  for (const auto& [v, w] : samples) {
    const Vector hw = p.hess(v) * w;
    const double wn2 = w.squaredNorm();
    const double hn = hw.norm();
    if (wn2 == 0.0 || hn == 0.0) continue;
    const Vector defect = hw - (hw.dot(w) / wn2) * w;
    const double rel = defect.norm() / hn;
    out.worst_defect = std::max(out.worst_defect, rel);
    if (defect.norm() > 1e-10 * hn) out.parallel = false;
  }
  return out;
}

}  // namespace gflow
