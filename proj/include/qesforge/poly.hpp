#pragma once

// Dense univariate polynomials and rational functions over complex doubles.
//
// The variable is the basis function h of a frame. Differentiation with
// respect to x goes through the chain rule with h'(x) supplied as a
// polynomial in h (see deriv_x).

#include <algorithm>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <limits>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qesforge/errors.hpp"

namespace qes {

using cplx = std::complex<double>;

/// Degree reported for the zero polynomial.
inline constexpr int kZeroDegree = std::numeric_limits<int>::min();

class Poly {
 public:
  Poly() = default;
  Poly(std::initializer_list<cplx> coeffs) : c_(coeffs) { trim(); }
  explicit Poly(std::vector<cplx> coeffs) : c_(std::move(coeffs)) { trim(); }

  static Poly constant(cplx v) { return Poly({v}); }
  static Poly monomial(int power, cplx coeff = 1.0) {
    std::vector<cplx> c(static_cast<std::size_t>(power) + 1, 0.0);
    c.back() = coeff;
    return Poly(std::move(c));
  }
  /// Builds the monic product of (h - r) over the given roots.
  static Poly from_roots(std::span<const cplx> roots) {
    Poly p = constant(1.0);
    for (const cplx& r : roots) p = p * Poly({-r, 1.0});
    return p;
  }

  bool is_zero() const noexcept { return c_.empty(); }
  int degree() const noexcept {
    return c_.empty() ? kZeroDegree : static_cast<int>(c_.size()) - 1;
  }
  /// Number of stored coefficients (degree + 1, or 0 for the zero polynomial).
  std::size_t size() const noexcept { return c_.size(); }
  const std::vector<cplx>& coeffs() const noexcept { return c_; }

  cplx operator[](std::size_t i) const noexcept { return i < c_.size() ? c_[i] : cplx{}; }
  cplx leading() const noexcept { return c_.empty() ? cplx{} : c_.back(); }

  /// Coefficients padded (or truncated) to exactly n entries.
  std::vector<cplx> padded(std::size_t n) const {
    std::vector<cplx> out(n, 0.0);
    for (std::size_t i = 0; i < std::min(n, c_.size()); ++i) out[i] = c_[i];
    return out;
  }

  double max_abs_coeff() const noexcept {
    double m = 0.0;
    for (const cplx& v : c_) m = std::max(m, std::abs(v));
    return m;
  }

  cplx operator()(cplx z) const noexcept {
    cplx acc = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * z + *it;
    return acc;
  }
  /// Sum of |c_i| |z|^i; the natural scale for judging |p(z)| against zero.
  double abs_scale(cplx z) const noexcept {
    const double r = std::abs(z);
    double acc = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * r + std::abs(*it);
    return acc;
  }

  /// Formal derivative d/dh.
  Poly derivative() const {
    if (c_.size() <= 1) return {};
    std::vector<cplx> d(c_.size() - 1);
    for (std::size_t i = 1; i < c_.size(); ++i) d[i - 1] = c_[i] * static_cast<double>(i);
    return Poly(std::move(d));
  }

  /// Zeroes real or imaginary parts below rel * max|c|, then trims.
  Poly chopped(double rel) const {
    const double cut = rel * max_abs_coeff();
    std::vector<cplx> c = c_;
    for (cplx& v : c) {
      const double re = std::abs(v.real()) <= cut ? 0.0 : v.real();
      const double im = std::abs(v.imag()) <= cut ? 0.0 : v.imag();
      v = {re, im};
    }
    return Poly(std::move(c));
  }

  /// Divides by (h - r); the remainder p(r) is returned through `remainder`.
  Poly deflate(cplx r, cplx* remainder = nullptr) const {
    if (c_.size() <= 1) {
      if (remainder) *remainder = (*this)[0];
      return {};
    }
    std::vector<cplx> q(c_.size() - 1);
    cplx acc = c_.back();
    for (std::size_t i = c_.size() - 1; i-- > 0;) {
      q[i] = acc;
      acc = c_[i] + acc * r;
    }
    if (remainder) *remainder = acc;
    return Poly(std::move(q));
  }

  /// Quotient and remainder of polynomial long division.
  std::pair<Poly, Poly> divmod(const Poly& d) const {
    if (d.is_zero()) throw DegenerateDenominator("polynomial division by zero");
    if (degree() < d.degree()) return {Poly{}, *this};
    std::vector<cplx> r = c_;
    std::vector<cplx> q(c_.size() - d.c_.size() + 1, 0.0);
    const cplx lead = d.c_.back();
    for (std::size_t k = q.size(); k-- > 0;) {
      const cplx t = r[k + d.c_.size() - 1] / lead;
      q[k] = t;
      for (std::size_t j = 0; j < d.c_.size(); ++j) r[k + j] -= t * d.c_[j];
    }
    r.resize(d.c_.size() - 1);
    return {Poly(std::move(q)), Poly(std::move(r))};
  }

  /// All complex roots, from the companion matrix eigenvalues followed by a
  /// short Newton polish.
  std::vector<cplx> roots() const {
    const int n = degree();
    if (n <= 0) return {};
    if (n == 1) return {-c_[0] / c_[1]};
    Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(n, n);
    for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
    for (int i = 0; i < n; ++i) comp(i, n - 1) = -c_[static_cast<std::size_t>(i)] / c_.back();
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, false);
    std::vector<cplx> out(static_cast<std::size_t>(n));
    const Poly dp = derivative();
    for (int i = 0; i < n; ++i) {
      cplx z = es.eigenvalues()[i];
      for (int it = 0; it < 3; ++it) {
        const cplx fz = (*this)(z);
        const cplx dz = dp(z);
        if (std::abs(dz) == 0.0) break;
        const cplx next = z - fz / dz;
        if (!(std::abs((*this)(next)) < std::abs(fz))) break;
        z = next;
      }
      out[static_cast<std::size_t>(i)] = z;
    }
    return out;
  }

  Poly& operator+=(const Poly& o) {
    if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), 0.0);
    for (std::size_t i = 0; i < o.c_.size(); ++i) c_[i] += o.c_[i];
    trim();
    return *this;
  }
  Poly& operator-=(const Poly& o) { return *this += -o; }
  Poly& operator*=(cplx s) {
    for (cplx& v : c_) v *= s;
    trim();
    return *this;
  }

  friend Poly operator+(Poly a, const Poly& b) { return a += b; }
  friend Poly operator-(Poly a, const Poly& b) { return a -= b; }
  friend Poly operator-(Poly a) {
    for (cplx& v : a.c_) v = -v;
    return a;
  }
  friend Poly operator*(Poly a, cplx s) { return a *= s; }
  friend Poly operator*(cplx s, Poly a) { return a *= s; }
  friend Poly operator*(const Poly& a, const Poly& b) {
    if (a.is_zero() || b.is_zero()) return {};
    std::vector<cplx> c(a.c_.size() + b.c_.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.c_.size(); ++i)
      for (std::size_t j = 0; j < b.c_.size(); ++j) c[i + j] += a.c_[i] * b.c_[j];
    return Poly(std::move(c));
  }
  friend bool operator==(const Poly& a, const Poly& b) = default;

  friend std::ostream& operator<<(std::ostream& os, const Poly& p) {
    if (p.is_zero()) return os << "0";
    bool first = true;
    for (std::size_t i = 0; i < p.c_.size(); ++i) {
      if (p.c_[i] == cplx{}) continue;
      if (!first) os << " + ";
      os << p.c_[i];
      if (i > 0) os << "*h^" << i;
      first = false;
    }
    return os;
  }

 private:
  void trim() {
    while (!c_.empty() && c_.back() == cplx{}) c_.pop_back();
  }

  std::vector<cplx> c_;
};

/// x-derivative of p(h(x)) given h'(x) = sum_l h1_l h^l.
inline Poly deriv_x(const Poly& p, const Poly& h1) { return p.derivative() * h1; }

/// p^n for n >= 0.
inline Poly pow(const Poly& p, int n) {
  Poly r = Poly::constant(1.0);
  for (int i = 0; i < n; ++i) r = r * p;
  return r;
}

/// Groups of nearly coincident roots; `center` is the group mean.
struct RootCluster {
  cplx center;
  int multiplicity;
};

inline std::vector<RootCluster> cluster_roots(std::vector<cplx> roots, double radius) {
  std::vector<RootCluster> out;
  std::vector<bool> used(roots.size(), false);
  for (std::size_t i = 0; i < roots.size(); ++i) {
    if (used[i]) continue;
    std::vector<cplx> group{roots[i]};
    used[i] = true;
    // Grow transitively so the perturbed copies of a multiple root stay together.
    for (std::size_t k = 0; k < group.size(); ++k) {
      for (std::size_t j = i + 1; j < roots.size(); ++j) {
        if (used[j]) continue;
        const double scale = std::max(1.0, std::abs(group[k]));
        if (std::abs(roots[j] - group[k]) <= radius * scale) {
          group.push_back(roots[j]);
          used[j] = true;
        }
      }
    }
    cplx sum = 0.0;
    for (const cplx& g : group) sum += g;
    out.push_back({sum / static_cast<double>(group.size()), static_cast<int>(group.size())});
  }
  return out;
}

/// A root of multiplicity m is a simple root of the (m-1)-th derivative, so
/// Newton on that derivative sharpens the cluster mean.
inline cplx refine_multiple_root(const Poly& p, const RootCluster& rc) {
  if (rc.multiplicity < 2) return rc.center;
  Poly q = p;
  for (int k = 1; k < rc.multiplicity; ++k) q = q.derivative();
  const Poly dq = q.derivative();
  cplx z = rc.center;
  for (int it = 0; it < 8; ++it) {
    const cplx dz = dq(z);
    if (std::abs(dz) == 0.0) break;
    const cplx next = z - q(z) / dz;
    if (!(std::abs(q(next)) < std::abs(q(z)))) break;
    z = next;
  }
  return z;
}

/// Quotient of two polynomials. Arithmetic never normalizes implicitly; call
/// normalize() to cancel common factors and make the denominator monic.
class RationalFn {
 public:
  RationalFn() : num_(), den_(Poly::constant(1.0)) {}
  RationalFn(Poly num) : num_(std::move(num)), den_(Poly::constant(1.0)) {}  // NOLINT
  RationalFn(Poly num, Poly den) : num_(std::move(num)), den_(std::move(den)) {
    if (den_.is_zero() || den_.max_abs_coeff() < kTinyDen)
      throw DegenerateDenominator("rational function with zero denominator");
  }

  const Poly& num() const noexcept { return num_; }
  const Poly& den() const noexcept { return den_; }

  /// num(z)/den(z); throws NearPole when |den(z)| is negligible at z.
  cplx operator()(cplx z) const {
    const cplx d = den_(z);
    if (std::abs(d) <= kPoleRel * den_.abs_scale(z))
      throw NearPole("evaluation too close to a pole");
    return num_(z) / d;
  }

  /// Cancels common factors found by root matching, then makes den monic.
  /// Roots of den closer than `cluster` (relative) are merged before testing
  /// whether num vanishes there to relative accuracy `tol`.
  RationalFn normalized(double tol = 1e-8, double cluster = 1e-3) const {
    Poly n = num_.chopped(kChop);
    Poly d = den_.chopped(kChop);
    if (d.is_zero()) throw DegenerateDenominator("denominator vanished");
    if (n.is_zero()) return RationalFn(Poly{}, Poly::constant(1.0));
    const Poly d0 = d;
    for (RootCluster rc : cluster_roots(d.roots(), cluster)) {
      rc.center = refine_multiple_root(d0, rc);
      for (int k = 0; k < rc.multiplicity && n.degree() >= 1 && d.degree() >= 1; ++k) {
        if (std::abs(n(rc.center)) > tol * n.abs_scale(rc.center)) break;
        if (std::abs(d(rc.center)) > tol * d.abs_scale(rc.center)) break;
        n = n.deflate(rc.center);
        d = d.deflate(rc.center);
      }
    }
    const cplx lead = d.leading();
    if (lead != cplx(1.0)) {
      n *= 1.0 / lead;
      d *= 1.0 / lead;
    }
    std::vector<cplx> dc = d.chopped(kChop).coeffs();
    dc.back() = 1.0;
    return RationalFn(n.chopped(kChop), Poly(std::move(dc)));
  }

  RationalFn derivative_x(const Poly& h1) const {
    return {deriv_x(num_, h1) * den_ - num_ * deriv_x(den_, h1), den_ * den_};
  }

  friend RationalFn operator+(const RationalFn& a, const RationalFn& b) {
    if (a.den_ == b.den_) return {a.num_ + b.num_, a.den_};
    return {a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_};
  }
  friend RationalFn operator-(const RationalFn& a) { return {-a.num_, a.den_}; }
  friend RationalFn operator-(const RationalFn& a, const RationalFn& b) { return a + (-b); }
  friend RationalFn operator*(const RationalFn& a, const RationalFn& b) {
    return {a.num_ * b.num_, a.den_ * b.den_};
  }
  friend RationalFn operator*(cplx s, const RationalFn& a) { return {s * a.num_, a.den_}; }
  friend RationalFn operator/(const RationalFn& a, const RationalFn& b) {
    if (b.num_.is_zero()) throw DegenerateDenominator("division by the zero function");
    return {a.num_ * b.den_, a.den_ * b.num_};
  }

  friend std::ostream& operator<<(std::ostream& os, const RationalFn& r) {
    return os << "(" << r.num_ << ") / (" << r.den_ << ")";
  }

 private:
  static constexpr double kTinyDen = 1e-300;
  static constexpr double kPoleRel = 1e-14;
  static constexpr double kChop = 1e-13;

  Poly num_;
  Poly den_;
};

/// Free-function form of RationalFn::normalized.
inline RationalFn normalize(const RationalFn& r, double tol = 1e-8) { return r.normalized(tol); }

/// Largest coefficient difference between two rational functions, after
/// padding to a common length. Intended for already normalized operands.
inline double coeff_distance(const RationalFn& a, const RationalFn& b) {
  auto dist = [](const Poly& p, const Poly& q) {
    const std::size_t n = std::max(p.size(), q.size());
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(p[i] - q[i]));
    return m;
  };
  return std::max(dist(a.num(), b.num()), dist(a.den(), b.den()));
}

}  // namespace qes
