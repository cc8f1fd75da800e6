#pragma once

// Independent reference computations used only by the tests. Nothing here
// calls into the library.

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

namespace oracle {

/// Brute-force 1-D minimizer on a uniform grid of spacing h.
inline double grid_minimize(const std::function<double(double)>& f, double a, double b, double h) {
  double best_x = a, best_f = f(a);
  const long n = static_cast<long>(std::ceil((b - a) / h));
  for (long i = 1; i <= n; ++i) {
    const double x = a + static_cast<double>(i) * h;
    const double fx = f(x);
    if (fx < best_f) {
      best_f = fx;
      best_x = x;
    }
  }
  return best_x;
}

/// Real roots of A x² + B x + C = 0, smaller first. Empty when complex.
inline std::vector<double> quadratic_roots(double A, double B, double C) {
  const double disc = B * B - 4.0 * A * C;
  if (disc < 0.0) return {};
  const double sq = std::sqrt(disc);
  // Cancellation-free pair.
  const double q = -0.5 * (B + (B >= 0 ? sq : -sq));
  double r1 = q / A, r2 = C / q;
  if (r1 > r2) std::swap(r1, r2);
  return {r1, r2};
}

/// One step of each scheme for φ = λu²/2 from v, derived step by step
/// rather than from a product formula.
inline double euler_quadratic(double lambda, double tau, double v) { return v / (1.0 + tau * lambda); }

inline double gonzalez_quadratic(double lambda, double tau, double v) {
  // For a quadratic, the difference quotient of φ equals λ(u+v)/2.
  return v * (1.0 - 0.5 * tau * lambda) / (1.0 + 0.5 * tau * lambda);
}

/// Roots of G(u, v) = 0 for φ = λu²/2, smaller first.
inline std::vector<double> degiorgi_quadratic_roots(double lambda, double tau, double v) {
  const double A = 0.5 * lambda + 0.5 / tau + 0.5 * tau * lambda * lambda;
  const double B = -v / tau;
  const double C = 0.5 * v * v / tau - 0.5 * lambda * v * v;
  return quadratic_roots(A, B, C);
}

inline double degiorgi_min_quadratic(double lambda, double tau, double v) {
  // Stationarity of the quadratic G(·, v).
  const double A = 0.5 * lambda + 0.5 / tau + 0.5 * tau * lambda * lambda;
  return v / (2.0 * A * tau);
}

/// First sign change of g on a uniform scan of [a, b] with spacing h,
/// refined by bisection. Returns NaN when none is found.
inline double scan_root(const std::function<double(double)>& g, double a, double b, double h) {
  double x0 = a, g0 = g(a);
  const long n = static_cast<long>(std::ceil((b - a) / h));
  for (long i = 1; i <= n; ++i) {
    const double x1 = std::min(b, a + static_cast<double>(i) * h);
    const double g1 = g(x1);
    if ((g0 > 0) != (g1 > 0)) {
      double lo = x0, hi = x1, glo = g0;
      for (int k = 0; k < 80; ++k) {
        const double m = 0.5 * (lo + hi);
        const double gm = g(m);
        if ((gm > 0) == (glo > 0)) {
          lo = m;
          glo = gm;
        } else {
          hi = m;
        }
      }
      return 0.5 * (lo + hi);
    }
    x0 = x1;
    g0 = g1;
  }
  return std::nan("");
}

/// Ordinary least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (sxy - sx * sy / n) / (sxx - sx * sx / n);
}

}  // namespace oracle
