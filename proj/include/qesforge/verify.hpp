#pragma once

// Independent checks of claimed eigenpairs: exact cancellation of the
// Schrodinger residual, grid residuals, normalizability, orthogonality,
// PT symmetry and energy recovery.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qesforge/frame.hpp"
#include "qesforge/poly.hpp"
#include "qesforge/potential.hpp"

namespace qes {

using Interval = std::pair<double, double>;

inline std::vector<double> linspace(double a, double b, int n) {
  if (n < 2) return {a};
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
  return out;
}

/// psi'/psi = -g1(h) + lambda f'/f + S_h h'/S as a rational function of h.
inline RationalFn log_derivative(const Frame& frame, const Ansatz& state) {
  const Poly s = state.poly();
  if (s.is_zero()) throw DegenerateState("state polynomial is identically zero");
  const Poly& f0 = frame.f0();
  Poly num = -(frame.g1() * f0 * s);
  num += state.lambda * (frame.f1() * s);
  num += s.derivative() * frame.h1() * f0;
  return RationalFn(num, f0 * s);
}

/// Sampler of g f^lambda S(h) on the real line.
inline Sampler state_sampler(const Frame& frame, const Ansatz& state) {
  const Poly s = state.poly();
  return [frame, s, lam = state.lambda](double x) {
    const cplx f = frame.f(x);
    const cplx fp = lam == cplx{} ? cplx(1.0) : std::pow(f, lam);
    return frame.g(x) * fp * s(frame.h(x));
  };
}

inline Sampler potential_sampler(const PotentialExpr& v) {
  return [v](double x) { return v(x); };
}

/// Largest coefficient of the cleared numerator of y^2 + y' - V + E, where
/// y is the state's logarithmic derivative. Zero for an exact eigenpair.
inline double schrodinger_residual_symbolic(const Frame& frame, const PotentialExpr& v,
                                            const Ansatz& state) {
  const RationalFn y = log_derivative(frame, state);
  const Poly& yn = y.num();
  const Poly& yd = y.den();
  const Poly yd2 = yd * yd;
  Poly lhs = yn * yn;
  lhs += frame.h1() * (yn.derivative() * yd - yn * yd.derivative());
  lhs += state.energy * yd2;
  const Poly r = lhs * v.v.den() - v.v.num() * yd2;
  return r.max_abs_coeff();
}

namespace detail {

// Five-point central second derivative.
inline cplx second_derivative(const Sampler& fn, double x, double h) {
  return (-fn(x + 2 * h) + 16.0 * fn(x + h) - 30.0 * fn(x) + 16.0 * fn(x - h) - fn(x - 2 * h)) /
         (12.0 * h * h);
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// max |-psi'' + (V - E) psi| / |psi| over grid points away from nodes.
inline double schrodinger_residual_grid(const Sampler& v, const Sampler& psi, cplx energy,
                                        const std::vector<double>& grid) {
  constexpr double step = 1e-4;
  std::vector<cplx> values;
  values.reserve(grid.size());
  double peak = 0.0;
  for (double x : grid) {
    values.push_back(psi(x));
    peak = std::max(peak, std::abs(values.back()));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double mag = std::abs(values[i]);
    if (!(mag > 1e-6 * peak)) continue;
    const cplx d2 = detail::second_derivative(psi, grid[i], step);
    const cplx r = -d2 + (v(grid[i]) - energy) * values[i];
    worst = std::max(worst, std::abs(r) / std::max(mag, 1e-30));
  }
  return worst;
}

/// Adaptive Gauss-Kronrod integral of a complex integrand over [a, b]. The
/// depth cap keeps noisy (finite-difference) integrands bounded in cost.
inline cplx integrate(const Sampler& fn, double a, double b, double rel_tol = 1e-10,
                      unsigned max_depth = 12) {
  using boost::math::quadrature::gauss_kronrod;
  const auto part = [&](bool imag) {
    return gauss_kronrod<double, 31>::integrate(
        [&](double x) {
          const cplx z = fn(x);
          return imag ? z.imag() : z.real();
        },
        a, b, max_depth, rel_tol);
  };
  return {part(false), part(true)};
}

inline double norm2(const Sampler& psi, const Interval& iv) {
  return integrate([&](double x) { return cplx(std::norm(psi(x))); }, iv.first, iv.second).real();
}

struct Normalizability {
  bool normalizable = false;
  /// Slope of log|psi|^2 against x^2 on the tails (worst side).
  double decay_rate = 0.0;
};

/// Tail fit of log|psi|^2 against x^2 over [end, 2 end] on each side.
/// Samples that underflow count as decay faster than any Gaussian.
inline Normalizability normalizable(const Sampler& psi, const Interval& iv,
                                    double slope_tol = 1e-3) {
  const auto tail_slope = [&](double from, double to) {
    std::vector<double> xs, ys;
    for (double x : linspace(from, to, 41)) {
      const double m = std::norm(psi(x));
      if (!std::isfinite(m)) return std::numeric_limits<double>::infinity();
      if (m <= std::numeric_limits<double>::min()) continue;
      xs.push_back(x * x);
      ys.push_back(std::log(m));
    }
    if (xs.size() < 3) return -std::numeric_limits<double>::infinity();
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    return sxy / sxx;
  };
  double rate = -std::numeric_limits<double>::infinity();
  if (iv.second > 0) rate = std::max(rate, tail_slope(iv.second, 2 * iv.second));
  if (iv.first < 0) rate = std::max(rate, tail_slope(2 * iv.first, iv.first));
  Normalizability out;
  out.decay_rate = rate;
  out.normalizable = rate < -slope_tol && std::isfinite(norm2(psi, iv));
  return out;
}

/// |<a|b>| / (||a|| ||b||) over the interval.
inline double orthogonality(const Sampler& a, const Sampler& b, const Interval& iv) {
  const cplx overlap =
      integrate([&](double x) { return std::conj(a(x)) * b(x); }, iv.first, iv.second);
  return std::abs(overlap) / std::sqrt(norm2(a, iv) * norm2(b, iv));
}

/// max |V(-x)* - V(x)| over the grid.
inline double pt_symmetry_check(const Sampler& v, const std::vector<double>& grid) {
  double worst = 0.0;
  for (double x : grid) worst = std::max(worst, std::abs(std::conj(v(-x)) - v(x)));
  return worst;
}

struct RayleighEnergy {
  /// integral psi* H psi / integral |psi|^2
  cplx quotient;
  /// Median over the grid of H psi / psi, real and imaginary parts separately.
  cplx pointwise;
};

/// Median over `grid` of H psi / psi, real and imaginary parts separately,
/// skipping points where psi is negligible.
inline cplx pointwise_energy(const Sampler& v, const Sampler& psi, const std::vector<double>& grid,
                             double step = 1e-3) {
  double peak = 0.0;
  for (double x : grid) peak = std::max(peak, std::abs(psi(x)));
  std::vector<double> re, im;
  for (double x : grid) {
    const cplx p = psi(x);
    if (!(std::abs(p) > 1e-6 * peak)) continue;
    const cplx ratio = (-detail::second_derivative(psi, x, step) + v(x) * p) / p;
    re.push_back(ratio.real());
    im.push_back(ratio.imag());
  }
  return {detail::median(std::move(re)), detail::median(std::move(im))};
}

inline RayleighEnergy rayleigh_energy(const Sampler& v, const Sampler& psi, const Interval& iv,
                                      int points = 201) {
  constexpr double step = 1e-3;
  const auto h_psi = [&](double x) { return -detail::second_derivative(psi, x, step) + v(x) * psi(x); };
  RayleighEnergy out;
  const cplx num =
      integrate([&](double x) { return std::conj(psi(x)) * h_psi(x); }, iv.first, iv.second);
  out.quotient = num / norm2(psi, iv);
  out.pointwise = pointwise_energy(v, psi, linspace(iv.first, iv.second, points), step);
  return out;
}

/// Real roots of p, deduplicated.
inline std::vector<double> real_roots(const Poly& p, double imag_tol = 1e-7) {
  std::vector<double> out;
  if (p.degree() < 1) return out;
  for (const RootCluster& rc : cluster_roots(p.roots(), 1e-5)) {
    if (std::abs(rc.center.imag()) <= imag_tol * std::max(1.0, std::abs(rc.center)))
      out.push_back(rc.center.real());
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct EigenpairReport {
  double symbolic_residual_max = 0.0;
  double grid_residual_max = 0.0;
  bool normalizable = false;
  double decay_rate = 0.0;
  /// Real-axis poles of V, and of psi when its f-power is negative, in h.
  std::vector<double> pole_report;
  cplx energy;
};

struct VerifyOptions {
  Interval interval{-8.0, 8.0};
  int grid_points = 161;
};

/// Runs every per-state check for `state` against the potential `v`.
inline EigenpairReport verify_eigenpair(const PotentialExpr& v, const Ansatz& state,
                                        const VerifyOptions& opts = {}) {
  EigenpairReport rep;
  rep.symbolic_residual_max = schrodinger_residual_symbolic(v.frame, v, state);

  std::vector<double> poles = real_roots(v.v.den());
  if (state.lambda.real() < 0.0) {
    const auto fp = real_roots(v.frame.f0());
    poles.insert(poles.end(), fp.begin(), fp.end());
  }
  std::sort(poles.begin(), poles.end());
  poles.erase(std::unique(poles.begin(), poles.end(),
                          [](double a, double b) { return std::abs(a - b) < 1e-6; }),
              poles.end());
  rep.pole_report = poles;

  const Sampler vs = potential_sampler(v);
  const Sampler ps = state_sampler(v.frame, state);
  std::vector<double> grid;
  for (double x : linspace(opts.interval.first, opts.interval.second, opts.grid_points)) {
    const bool near = std::any_of(poles.begin(), poles.end(),
                                  [&](double p) { return std::abs(v.frame.h(x) - p) < 1e-3; });
    if (!near) grid.push_back(x);
  }
  rep.grid_residual_max = schrodinger_residual_grid(vs, ps, state.energy, grid);

  if (poles.empty()) {
    const Normalizability n = normalizable(ps, opts.interval);
    rep.normalizable = n.normalizable;
    rep.decay_rate = n.decay_rate;
    bool complex_v = false;
    for (double x : grid) complex_v = complex_v || std::abs(vs(x).imag()) > 1e-12;
    const RayleighEnergy e = rayleigh_energy(vs, ps, opts.interval);
    rep.energy = complex_v ? e.pointwise : e.quotient;
  } else {
    std::vector<double> away;
    for (double x : grid) {
      const bool near = std::any_of(poles.begin(), poles.end(),
                                    [&](double p) { return std::abs(v.frame.h(x) - p) < 1e-2; });
      if (!near) away.push_back(x);
    }
    rep.energy = pointwise_energy(vs, ps, away);
  }
  return rep;
}

}  // namespace qes
