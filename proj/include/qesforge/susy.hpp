#pragma once

// Superpotential chains: W from known states, the Riccati links between
// consecutive W, the master function U = W+(L) W+(L+1), its zero structure,
// and the reverse direction of reading W off a prescribed U.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qesforge/errors.hpp"
#include "qesforge/frame.hpp"
#include "qesforge/poly.hpp"
#include "qesforge/verify.hpp"

namespace qes {

/// Rational superpotential in x together with its derivative.
struct Superpotential {
  RationalFn w;
  RationalFn dw;

  Superpotential() = default;
  explicit Superpotential(const RationalFn& r)
      : w(r.normalized()), dw(w.derivative_x(Poly::constant(1.0))) {}

  cplx operator()(double x) const { return w(cplx(x)); }
  cplx derivative(double x) const { return dw(cplx(x)); }
};

namespace detail {

inline const Poly& unit_h1() {
  static const Poly one = Poly::constant(1.0);
  return one;
}

// r'/r for a rational r = n/d.
inline RationalFn log_deriv(const RationalFn& r) {
  const Poly& n = r.num();
  const Poly& d = r.den();
  return RationalFn(n.derivative() * d - n * d.derivative(), n * d);
}

inline void require_identity_basis(const Frame& frame) {
  if (!frame.identity_basis())
    throw std::invalid_argument("superpotentials are expressed in x; the frame basis must be h = x");
}

}  // namespace detail

/// W = -psi'/psi for an exact state.
inline Superpotential superpotential_from_state(const Frame& frame, const Ansatz& state) {
  detail::require_identity_basis(frame);
  return Superpotential(-log_derivative(frame, state));
}

/// W_L, W_{L+1} (and W_{L+2}) such that the given states are, in order, the
/// ground state and the partner-generated excited states.
inline std::vector<Superpotential> chain_from_states(const Frame& frame,
                                                     const std::vector<Ansatz>& states) {
  if (states.size() < 2 || states.size() > 3)
    throw std::invalid_argument("a chain needs two or three states");
  detail::require_identity_basis(frame);
  std::vector<RationalFn> y;
  for (const Ansatz& s : states) y.push_back(log_derivative(frame, s).normalized());

  std::vector<Superpotential> chain;
  chain.emplace_back(-y[0]);
  const RationalFn u = (y[1] - y[0]).normalized();
  chain.emplace_back(-(y[1] + detail::log_deriv(u)));
  if (states.size() == 3) {
    // Map the third state to the first partner Hamiltonian, then repeat.
    const RationalFn u1 = (y[2] - y[0]).normalized();
    const RationalFn z1 = (y[2] + detail::log_deriv(u1)).normalized();
    const RationalFn u2 = (z1 + chain[1].w).normalized();
    chain.emplace_back(-(z1 + detail::log_deriv(u2)));
  }
  return chain;
}

/// W_a + W_b.
inline Superpotential w_plus(const Superpotential& a, const Superpotential& b) {
  return Superpotential(a.w + b.w);
}

/// max |W_k^2 + W_k' + E_k - W_{k+1}^2 + W_{k+1}' - E_{k+1}| over the grid.
inline double riccati_residual(const Superpotential& wk, const Superpotential& wk1, cplx ek,
                               cplx ek1, const std::vector<double>& grid) {
  double worst = 0.0;
  for (double x : grid) {
    const cplx a = wk(x), b = wk1(x);
    const cplx r = a * a + wk.derivative(x) + ek - b * b + wk1.derivative(x) - ek1;
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

struct ZeroInfo {
  cplx location;
  int order;
};

/// U with its catalog of complex zeros (with order) and poles.
struct UFunction {
  RationalFn u;
  std::vector<ZeroInfo> zeros;
  std::vector<ZeroInfo> poles;

  UFunction() = default;
  explicit UFunction(const RationalFn& r) : u(r.normalized()) {
    const auto catalog = [](const Poly& p) {
      std::vector<ZeroInfo> out;
      if (p.degree() < 1) return out;
      for (RootCluster rc : cluster_roots(p.roots(), 1e-4)) {
        rc.center = refine_multiple_root(p, rc);
        out.push_back({rc.center, rc.multiplicity});
      }
      std::sort(out.begin(), out.end(), [](const ZeroInfo& a, const ZeroInfo& b) {
        if (a.location.real() != b.location.real()) return a.location.real() < b.location.real();
        return a.location.imag() < b.location.imag();
      });
      return out;
    };
    zeros = catalog(u.num());
    poles = catalog(u.den());
  }

  cplx operator()(double x) const { return u(cplx(x)); }
};

/// U = W+(L) W+(L+1).
inline UFunction u_function(const Superpotential& w_plus_l, const Superpotential& w_plus_l1) {
  return UFunction(w_plus_l.w * w_plus_l1.w);
}

/// Two-state reduction: U is W+(L) itself.
inline UFunction u_function(const Superpotential& w_plus_l) { return UFunction(w_plus_l.w); }

/// max over the grid of the single equation linking W+(L) and W+(L+1).
inline double master_residual(const Superpotential& w_plus_l, const Superpotential& w_plus_l1,
                              cplx e_l1, cplx e_l2, const std::vector<double>& grid) {
  double worst = 0.0;
  for (double x : grid) {
    const cplx a = w_plus_l(x), b = w_plus_l1(x);
    const cplx d_ab = w_plus_l.derivative(x) * b + a * w_plus_l1.derivative(x);
    const cplx r = a * b * (b - a) - d_ab + (e_l2 - e_l1) * a + e_l1 * b;
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

struct RealZero {
  double x;
  int order;
  /// Sign of U' at the zero; 0 for zeros of order two or more.
  int derivative_sign;
};

struct SignInterval {
  double lo;  ///< -inf for the leftmost piece
  double hi;  ///< +inf for the rightmost piece
  int sign;
};

struct UClassification {
  std::vector<RealZero> zeros;
  std::vector<SignInterval> signs;
  std::vector<double> real_poles;
  bool admissible = false;
  std::string reason;
};

/// Zero orders, sign pattern, derivative signs and real poles of a real U,
/// plus the two-simple-zero admissibility test (negative between the
/// zeros, positive outside, falling through the left zero and rising
/// through the right one, no real poles).
inline UClassification classify_u(const UFunction& uf, const Interval& iv) {
  const auto is_real = [](cplx z) { return std::abs(z.imag()) <= 1e-6 * std::max(1.0, std::abs(z)); };
  UClassification out;
  for (const ZeroInfo& p : uf.poles)
    if (is_real(p.location)) out.real_poles.push_back(p.location.real());

  double scale = 0.0, worst_imag = 0.0;
  for (double x : linspace(iv.first, iv.second, 401)) {
    const bool near_pole = std::any_of(out.real_poles.begin(), out.real_poles.end(),
                                       [&](double p) { return std::abs(x - p) < 1e-3; });
    if (near_pole) continue;
    const cplx v = uf(x);
    scale = std::max(scale, std::abs(v));
    worst_imag = std::max(worst_imag, std::abs(v.imag()));
  }
  if (worst_imag > 1e-9 * std::max(1.0, scale))
    throw ComplexValuedOnInterval("U takes complex values on the real interval");

  const RationalFn du = uf.u.derivative_x(detail::unit_h1());
  for (const ZeroInfo& z : uf.zeros) {
    if (!is_real(z.location)) continue;
    const double x = z.location.real();
    if (x < iv.first || x > iv.second) continue;
    int ds = 0;
    if (z.order == 1) ds = du(cplx(x)).real() > 0.0 ? 1 : -1;
    out.zeros.push_back({x, z.order, ds});
  }

  std::vector<double> cuts;
  for (const RealZero& z : out.zeros) cuts.push_back(z.x);
  for (double p : out.real_poles) cuts.push_back(p);
  std::sort(cuts.begin(), cuts.end());
  const auto sign_at = [&](double x) {
    const double v = uf(x).real();
    return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0);
  };
  const double inf = std::numeric_limits<double>::infinity();
  if (cuts.empty()) {
    out.signs.push_back({-inf, inf, sign_at(0.5 * (iv.first + iv.second))});
  } else {
    out.signs.push_back({-inf, cuts.front(), sign_at(cuts.front() - 1.0)});
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
      out.signs.push_back({cuts[i], cuts[i + 1], sign_at(0.5 * (cuts[i] + cuts[i + 1]))});
    out.signs.push_back({cuts.back(), inf, sign_at(cuts.back() + 1.0)});
  }

  if (!out.real_poles.empty()) {
    out.reason = "U has a real pole";
  } else if (out.zeros.size() != 2) {
    out.reason = "U has " + std::to_string(out.zeros.size()) + " distinct real zeros, not two";
  } else if (out.zeros[0].order != 1 || out.zeros[1].order != 1) {
    out.reason = "a real zero of U is not simple";
  } else if (out.signs[0].sign <= 0 || out.signs[2].sign <= 0 || out.signs[1].sign > 0) {
    out.reason = "U is not negative between its zeros and positive outside";
  } else if (out.zeros[0].derivative_sign >= 0 || out.zeros[1].derivative_sign <= 0) {
    out.reason = "U' has the wrong sign at a zero";
  } else {
    out.admissible = true;
    out.reason = "admissible";
  }
  return out;
}

struct BranchOptions {
  /// 0 starts on the principal square root of the discriminant, 1 on its negative.
  int branch = 0;
  /// Treat U as W+(L) directly (only two levels; E2 unused).
  bool two_state = false;
  /// |disc| below this fraction of its natural scale is a branch collision.
  double collision_tol = 1e-12;
  /// Drop colliding grid points instead of throwing.
  bool skip_collisions = false;
};

struct WDiagnostics {
  std::string name;
  bool finite = true;
  std::vector<double> poles;
  bool decays_left = false;   ///< W(x_min) < 0
  bool decays_right = false;  ///< W(x_max) > 0
  bool well_behaved() const { return finite && poles.empty() && decays_left && decays_right; }
};

struct SusyFromUResult {
  std::vector<double> x;
  std::vector<cplx> w_plus;  ///< W+(L)
  std::vector<cplx> w_l, w_l1, w_l2;
  std::vector<cplx> v;  ///< W_L^2 - W_L'
  std::vector<std::size_t> swap_events;
  std::vector<double> collisions;
  std::vector<WDiagnostics> diagnostics;
  bool bounded_states = false;
  /// Low-degree polynomial matching v on the grid, when one exists.
  std::optional<Poly> potential_poly;
};

/// Lowest-degree polynomial (up to max_degree) reproducing the samples.
inline std::optional<Poly> identify_polynomial(const std::vector<double>& x,
                                               const std::vector<cplx>& y, int max_degree = 8,
                                               double tol = 1e-7) {
  if (x.empty()) return std::nullopt;
  double xs = 0.0, ys = 0.0;
  for (double v : x) xs = std::max(xs, std::abs(v));
  for (cplx v : y) ys = std::max(ys, std::abs(v));
  xs = std::max(xs, 1.0);
  for (int deg = 0; deg <= max_degree && deg < static_cast<int>(x.size()); ++deg) {
    Eigen::MatrixXcd A(static_cast<Eigen::Index>(x.size()), deg + 1);
    Eigen::VectorXcd b(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (int k = 0; k <= deg; ++k) A(static_cast<Eigen::Index>(i), k) = std::pow(x[i] / xs, k);
      b[static_cast<Eigen::Index>(i)] = y[i];
    }
    const Eigen::VectorXcd c = A.colPivHouseholderQr().solve(b);
    if ((A * c - b).cwiseAbs().maxCoeff() > tol * std::max(1.0, ys)) continue;
    std::vector<cplx> coeffs(static_cast<std::size_t>(deg) + 1);
    for (int k = 0; k <= deg; ++k) coeffs[static_cast<std::size_t>(k)] = c[k] / std::pow(xs, k);
    return Poly(std::move(coeffs)).chopped(1e-10);
  }
  return std::nullopt;
}

namespace detail {

struct ULocal {
  cplx u, u1, u2, u3;
};

struct WLocal {
  cplx w, w1, w2;  // W+(L) and its first two derivatives
  cplx s;          // signed square root of the discriminant
};

class UBranchSolver {
 public:
  UBranchSolver(const RationalFn& u, cplx e1, cplx e2, const BranchOptions& opts)
      : u_(u.normalized()), e1_(e1), e2_(e2), opts_(opts) {
    u1_ = u_.derivative_x(unit_h1()).normalized();
    u2_ = u1_.derivative_x(unit_h1()).normalized();
    u3_ = u2_.derivative_x(unit_h1()).normalized();
    real_ = std::abs(e1.imag()) == 0.0 && std::abs(e2.imag()) == 0.0;
    for (cplx c : u_.num().coeffs()) real_ = real_ && c.imag() == 0.0;
    for (cplx c : u_.den().coeffs()) real_ = real_ && c.imag() == 0.0;
  }

  ULocal at(double x) const { return {u_(x), u1_(x), u2_(x), u3_(x)}; }

  cplx discriminant(const ULocal& l) const {
    const cplx a = e2_ - e1_ - l.u, b = -l.u1, c0 = l.u * l.u + e1_ * l.u;
    return b * b - 4.0 * a * c0;
  }

  bool collides(const ULocal& l) const {
    const cplx a = e2_ - e1_ - l.u, b = -l.u1, c0 = l.u * l.u + e1_ * l.u;
    const double scale = std::norm(b) + 4.0 * std::abs(a * c0);
    return std::abs(b * b - 4.0 * a * c0) <= opts_.collision_tol * scale;
  }

  bool real_problem() const { return real_; }

  // Root of the quadratic for a chosen signed root s of the discriminant.
  WLocal solve(const ULocal& l, cplx s) const {
    if (opts_.two_state) return {l.u, l.u1, l.u2, s};
    const cplx a = e2_ - e1_ - l.u, b = -l.u1, c0 = l.u * l.u + e1_ * l.u;
    const cplx plus = -b + s, minus = -b - s;
    const cplx w = std::abs(plus) >= std::abs(minus) ? plus / (2.0 * a) : 2.0 * c0 / minus;
    const cplx a1 = -l.u1, b1 = -l.u2, c1 = 2.0 * l.u * l.u1 + e1_ * l.u1;
    const cplx a2 = -l.u2, b2 = -l.u3, c2 = 2.0 * l.u1 * l.u1 + 2.0 * l.u * l.u2 + e1_ * l.u2;
    const cplx p = a1 * w * w + b1 * w + c1;
    const cplx q = 2.0 * a * w + b;
    const cplx w1 = -p / q;
    const cplx p1 = a2 * w * w + 2.0 * a1 * w * w1 + b2 * w + b1 * w1 + c2;
    const cplx q1 = 2.0 * a1 * w + 2.0 * a * w1 + b1;
    const cplx w2 = -(p1 * q - p * q1) / (q * q);
    return {w, w1, w2, s};
  }

  // Picks the signed root nearest the prediction.
  cplx choose(const ULocal& l, cplx predicted) const {
    const cplx r = std::sqrt(discriminant(l));
    return std::abs(r - predicted) <= std::abs(-r - predicted) ? r : -r;
  }

  cplx e1() const { return e1_; }

 private:
  RationalFn u_, u1_, u2_, u3_;
  cplx e1_, e2_;
  BranchOptions opts_;
  bool real_ = true;
};

// Lagrange extrapolation through the last (up to) four samples. A cubic
// follows roots of the discriminant up to third order, where the two
// branches become tangent.
inline cplx extrapolate(const std::vector<double>& xs, const std::vector<cplx>& ys, double x) {
  const std::size_t n = ys.size();
  const std::size_t m = std::min<std::size_t>(n, 4);
  cplx acc = 0.0;
  for (std::size_t i = n - m; i < n; ++i) {
    double w = 1.0;
    for (std::size_t j = n - m; j < n; ++j)
      if (j != i) w *= (x - xs[j]) / (xs[i] - xs[j]);
    acc += w * ys[i];
  }
  return acc;
}

struct Split {
  cplx wl, wl_d, wl1, wl2;
};

inline Split split(const WLocal& w, const ULocal& l, cplx e1, bool two_state) {
  Split s;
  s.wl = 0.5 * (w.w + (e1 - w.w1) / w.w);
  s.wl_d = 0.5 * (w.w1 + (-w.w2 * w.w - (e1 - w.w1) * w.w1) / (w.w * w.w));
  s.wl1 = w.w - s.wl;
  s.wl2 = two_state ? cplx(std::nan(""), 0.0) : l.u / w.w - s.wl1;
  return s;
}

}  // namespace detail

/// Reads the chain off a prescribed U by solving, at each grid point, the
/// quadratic in W = W+(L) obtained from the master equation with
/// W+(L+1) = U/W. The root is tracked continuously along the (sorted) grid.
inline SusyFromUResult susy_from_U(const RationalFn& u, cplx e1, cplx e2,
                                   const std::vector<double>& x_grid,
                                   const BranchOptions& opts = {}) {
  if (x_grid.size() < 3) throw std::invalid_argument("susy_from_U needs at least three grid points");
  if (!std::is_sorted(x_grid.begin(), x_grid.end()))
    throw std::invalid_argument("susy_from_U needs an increasing grid");
  const detail::UBranchSolver solver(u, e1, e2, opts);
  SusyFromUResult out;

  std::vector<cplx> s_hist;
  std::vector<detail::ULocal> locals;
  int last_label = 0;
  for (double x : x_grid) {
    const detail::ULocal l = solver.at(x);
    cplx s = 0.0;
    if (!opts.two_state) {
      if (solver.collides(l)) {
        if (!opts.skip_collisions)
          throw BranchCollision("roots of the quadratic for W+ collide at x = " + std::to_string(x));
        out.collisions.push_back(x);
        continue;
      }
      const cplx disc = solver.discriminant(l);
      if (solver.real_problem() && disc.real() < 0.0)
        throw NoRealBranch("no real root for W+ at x = " + std::to_string(x));
      const cplx principal = std::sqrt(disc);
      if (s_hist.empty()) {
        s = opts.branch == 0 ? principal : -principal;
      } else {
        s = solver.choose(l, detail::extrapolate(out.x, s_hist, x));
      }
      const int label = std::abs(s - principal) <= std::abs(s + principal) ? 0 : 1;
      if (!s_hist.empty() && label != last_label) out.swap_events.push_back(out.x.size());
      last_label = label;
      s_hist.push_back(s);
    }
    const detail::WLocal w = solver.solve(l, s);
    const detail::Split sp = detail::split(w, l, e1, opts.two_state);
    out.x.push_back(x);
    out.w_plus.push_back(w.w);
    out.w_l.push_back(sp.wl);
    out.w_l1.push_back(sp.wl1);
    out.w_l2.push_back(sp.wl2);
    out.v.push_back(sp.wl * sp.wl - sp.wl_d);
    locals.push_back(l);
  }

  // A sign change is a pole when |W| rises toward the bracket from both
  // sides; a zero crossing falls instead. Poles are then located by
  // bisection, re-solving with the branch interpolated from the neighbours.
  const auto diagnose = [&](const std::string& name, const std::vector<cplx>& w, int which) {
    WDiagnostics d;
    d.name = name;
    for (cplx v : w) d.finite = d.finite && std::isfinite(v.real()) && std::isfinite(v.imag());
    if (w.empty()) return d;
    d.decays_left = w.front().real() < 0.0;
    d.decays_right = w.back().real() > 0.0;
    const auto eval = [&](double x, cplx s_hint) {
      const detail::ULocal l = solver.at(x);
      const cplx s = opts.two_state ? cplx{} : solver.choose(l, s_hint);
      const detail::Split sp = detail::split(solver.solve(l, s), l, e1, opts.two_state);
      return which == 0 ? sp.wl : (which == 1 ? sp.wl1 : sp.wl2);
    };
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
      if (!(w[i].real() * w[i + 1].real() < 0.0)) continue;
      const bool rises_left = i == 0 || std::abs(w[i]) >= std::abs(w[i - 1]);
      const bool rises_right = i + 2 >= w.size() || std::abs(w[i + 1]) >= std::abs(w[i + 2]);
      if (!(rises_left && rises_right)) continue;
      double lo = out.x[i], hi = out.x[i + 1];
      double flo = w[i].real();
      const cplx s_lo = s_hist.empty() ? cplx{} : s_hist[i];
      const cplx s_hi = s_hist.empty() ? cplx{} : s_hist[i + 1];
      for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double t = (mid - out.x[i]) / (out.x[i + 1] - out.x[i]);
        const cplx fm = eval(mid, s_lo + t * (s_hi - s_lo));
        if (!std::isfinite(fm.real())) break;
        if (fm.real() * flo < 0.0) {
          hi = mid;
        } else {
          lo = mid;
          flo = fm.real();
        }
      }
      d.poles.push_back(0.5 * (lo + hi));
    }
    return d;
  };
  out.diagnostics.push_back(diagnose("W_L", out.w_l, 0));
  out.diagnostics.push_back(diagnose("W_L+1", out.w_l1, 1));
  if (!opts.two_state) out.diagnostics.push_back(diagnose("W_L+2", out.w_l2, 2));
  out.bounded_states = std::all_of(out.diagnostics.begin(), out.diagnostics.end(),
                                   [](const WDiagnostics& d) { return d.well_behaved(); });
  out.potential_poly = identify_polynomial(out.x, out.v);
  return out;
}

/// Coefficient of 1/(x - x0)^2 in the potential implied by U near a double
/// zero x0 of U, on the given branch. Near x0, W+ ~ alpha (x - x0) with
/// alpha = (k +- sqrt(k^2 - (E2 - E1) E1 k)) / (E2 - E1) and k = U''(x0)/2,
/// and W_L carries beta/(x - x0) with beta = (E1 - alpha)/(2 alpha).
inline cplx singular_coefficient(const RationalFn& u, cplx e1, cplx e2, double x0, int branch) {
  const RationalFn u1 = u.derivative_x(detail::unit_h1());
  const RationalFn u2 = u1.derivative_x(detail::unit_h1());
  const double scale = std::max(1.0, std::abs(u2(cplx(x0))));
  if (std::abs(u(cplx(x0))) > 1e-9 * scale || std::abs(u1(cplx(x0))) > 1e-9 * scale)
    throw std::invalid_argument("x0 is not a double zero of U");
  const cplx k = 0.5 * u2(cplx(x0));
  const cplx d = e2 - e1;
  const cplx root = std::sqrt(k * k - d * e1 * k);
  const cplx alpha = (k + (branch == 0 ? root : -root)) / d;
  const cplx beta = (e1 - alpha) / (2.0 * alpha);
  return beta * (beta + 1.0);
}

/// Values of U''(x0)/2 that remove the 1/(x - x0)^2 term on some branch:
/// E1 (E2 - E1), where both branches agree to leading order, and
/// -E1 (E2 - E1)/3.
inline std::vector<cplx> double_zero_curvatures(cplx e1, cplx e2) {
  const cplx d = e2 - e1;
  return {e1 * d, -e1 * d / 3.0};
}

struct TunedConstant {
  cplx target_curvature;
  double value = 0.0;
  double x0 = 0.0;
  bool converged = false;
};

/// For a one-parameter family U_c with a real double zero, finds the c
/// values at which U''(x0)/2 hits each curvature from double_zero_curvatures.
inline std::vector<TunedConstant> tune_double_zero(const std::function<RationalFn(double)>& family,
                                                   cplx e1, cplx e2, double guess = 1.0) {
  const auto locate = [&](double c) -> std::optional<double> {
    const UFunction uf(family(c));
    for (const ZeroInfo& z : uf.zeros)
      if (z.order >= 2 && std::abs(z.location.imag()) < 1e-6) return z.location.real();
    return std::nullopt;
  };
  const auto curvature = [&](double c, double x0) {
    const RationalFn u = family(c);
    return 0.5 * u.derivative_x(detail::unit_h1()).derivative_x(detail::unit_h1())(cplx(x0));
  };
  std::vector<TunedConstant> out;
  for (cplx target : double_zero_curvatures(e1, e2)) {
    TunedConstant t;
    t.target_curvature = target;
    const auto x0 = locate(guess);
    if (x0) {
      t.x0 = *x0;
      double c0 = guess, c1 = guess * 1.1 + 0.1;
      double f0 = (curvature(c0, t.x0) - target).real();
      double f1 = (curvature(c1, t.x0) - target).real();
      for (int it = 0; it < 60 && f1 != f0; ++it) {
        const double c2 = c1 - f1 * (c1 - c0) / (f1 - f0);
        c0 = c1;
        f0 = f1;
        c1 = c2;
        f1 = (curvature(c1, t.x0) - target).real();
        if (std::abs(f1) < 1e-13 * std::max(1.0, std::abs(target))) {
          t.converged = true;
          break;
        }
      }
      t.value = c1;
      if (const auto moved = locate(c1); !moved || std::abs(*moved - t.x0) > 1e-6) t.converged = false;
    }
    out.push_back(t);
  }
  return out;
}

namespace detail {

// exp(-integral W) on the grid, anchored at the grid point nearest zero.
// Simple real poles of W are split off and contribute (x - p)^(-residue).
inline std::vector<cplx> exp_minus_integral(const Superpotential& w, const std::vector<double>& grid) {
  const Poly& den = w.w.den();
  const Poly dden = den.derivative();
  std::vector<std::pair<double, cplx>> poles;
  for (const RootCluster& rc : cluster_roots(den.roots(), 1e-6)) {
    if (std::abs(rc.center.imag()) > 1e-8 * std::max(1.0, std::abs(rc.center))) continue;
    if (rc.multiplicity > 1)
      throw std::domain_error("superpotential has a higher-order real pole");
    const double p = rc.center.real();
    poles.emplace_back(p, w.w.num()(cplx(p)) / dden(cplx(p)));
  }
  RationalFn reg_fn = w.w;
  for (const auto& [p, r] : poles) reg_fn = reg_fn - RationalFn(Poly{r}, Poly{-p, 1.0});
  reg_fn = reg_fn.normalized();
  const auto regular = [&](double x) { return reg_fn(cplx(x)); };
  const auto singular_factor = [&](double x) {
    cplx f = 1.0;
    for (const auto& [p, r] : poles) {
      const double rr = r.real();
      if (std::abs(r.imag()) < 1e-9 && std::abs(rr - std::round(rr)) < 1e-9)
        f *= std::pow(x - p, -static_cast<int>(std::lround(rr)));
      else
        f *= std::pow(cplx(x - p), -r);
    }
    return f;
  };
  std::size_t anchor = 0;
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (std::abs(grid[i]) < std::abs(grid[anchor])) anchor = i;
  std::vector<cplx> integral(grid.size(), 0.0);
  const Sampler reg = regular;
  for (std::size_t i = anchor + 1; i < grid.size(); ++i)
    integral[i] = integral[i - 1] + integrate(reg, grid[i - 1], grid[i]);
  for (std::size_t i = anchor; i-- > 0;)
    integral[i] = integral[i + 1] - integrate(reg, grid[i], grid[i + 1]);
  std::vector<cplx> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = std::exp(-integral[i]) * singular_factor(grid[i]);
  return out;
}

}  // namespace detail

/// Samples (up to a constant) of the state `offset` levels above the ground
/// of the chain: 0 gives exp(-int W_L), 1 applies (-d/dx + W_L) to
/// exp(-int W_{L+1}), 2 applies both lowering operators to exp(-int W_{L+2}).
/// The operators act on exact rational derivatives.
inline std::vector<cplx> partner_state(const std::vector<Superpotential>& chain, int offset,
                                       const std::vector<double>& grid) {
  if (offset < 0 || offset > 2 || static_cast<std::size_t>(offset) >= chain.size())
    throw std::invalid_argument("partner level outside the chain");
  std::vector<cplx> phi = detail::exp_minus_integral(chain[static_cast<std::size_t>(offset)], grid);
  if (offset == 0) return phi;
  if (offset == 1) {
    const Superpotential wp = w_plus(chain[0], chain[1]);
    for (std::size_t i = 0; i < grid.size(); ++i) phi[i] *= wp(grid[i]);
    return phi;
  }
  const Superpotential wp1 = w_plus(chain[1], chain[2]);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid[i];
    phi[i] *= (chain[0](x) + chain[2](x)) * wp1(x) - wp1.derivative(x);
  }
  return phi;
}

}  // namespace qes
