#pragma once

// Algebraic constraint systems obtained by collecting powers of h in the
// Schrodinger equation for additional eigenstates of a constructed potential.
//
// Symbol names:
//   g1_<l>            coefficients of -g'/g
//   c<L>_<m>, lambda<L>            ground state (energy 0)
//   c<N>_<m>, lambda<N>, E<N>      excited state N > L
//   ct_<m>, lambdat, Et            degenerate companion of the ground state

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qesforge/frame.hpp"
#include "qesforge/poly.hpp"

namespace qes {

using Assignment = std::map<std::string, cplx>;

enum class SystemKind { Excited, Degenerate };

struct SystemOptions {
  /// Ground/frame symbols treated as unknowns (g1_*, c<L>_*, lambda<L>).
  std::vector<std::string> free;
  /// Number of g1 coefficients entering the system; -1 keeps the frame's.
  int g1_terms = -1;
  /// Excited kind: tie lambda<N> to lambda<L>.
  bool lambda_shared = false;
  /// Pinned value of the top coefficient of the new state.
  cplx top_coefficient = 1.0;
  /// Split every unknown into real and imaginary parts.
  bool complex_unknowns = false;
  /// Degenerate kind: let the companion carry its own f-power.
  bool companion_lambda_free = false;
  /// Degenerate kind: include an energy for the companion.
  bool companion_energy = false;
};

namespace detail {

inline int deg(const Poly& p) { return p.degree(); }
inline int dderiv(int d) { return d >= 1 ? d - 1 : kZeroDegree; }
inline int dsum(std::initializer_list<int> ds) {
  int s = 0;
  for (int d : ds) {
    if (d == kZeroDegree || d < 0) return kZeroDegree;
    s += d;
  }
  return s;
}
inline int twice(int d) { return d == kZeroDegree ? kZeroDegree : 2 * d; }
inline std::string sym(const char* stem, int a) { return stem + std::to_string(a); }
inline std::string sym(const char* stem, int a, int b) {
  return stem + std::to_string(a) + "_" + std::to_string(b);
}

}  // namespace detail

class ConstraintSystem {
 public:
  SystemKind kind() const noexcept { return kind_; }
  const std::vector<std::string>& unknowns() const noexcept { return unknowns_; }
  const Assignment& fixed() const noexcept { return fixed_; }
  const Frame& frame() const noexcept { return frame_; }
  bool complex_unknowns() const noexcept { return complex_; }
  int ground_level() const noexcept { return L_; }
  int state_level() const noexcept { return N_; }
  int g1_terms() const noexcept { return g1_terms_; }
  const SystemOptions& options() const noexcept { return opts_; }

  /// Number of h powers whose coefficient must vanish.
  std::size_t equations() const noexcept { return static_cast<std::size_t>(max_degree_) + 1; }
  /// Length of the real residual vector.
  std::size_t residual_size() const noexcept { return equations() * (complex_ ? 2 : 1); }

  /// Value of a symbol from the assignment, falling back to the pinned set.
  cplx value(const Assignment& a, const std::string& name) const {
    if (auto it = a.find(name); it != a.end()) return it->second;
    if (auto it = fixed_.find(name); it != fixed_.end()) return it->second;
    throw std::invalid_argument("assignment lacks symbol '" + name + "'");
  }

  /// Coefficients of h^0 .. h^max_degree of the cleared expression.
  std::vector<cplx> residual_complex(const Assignment& a) const {
    return kind_ == SystemKind::Excited || general_degenerate() ? excited_form(a)
                                                                : degenerate_form(a);
  }

  /// Real residual; real and imaginary parts interleaved for complex systems.
  std::vector<double> residual(const Assignment& a) const {
    const auto rc = residual_complex(a);
    std::vector<double> out;
    out.reserve(residual_size());
    for (const cplx& v : rc) {
      out.push_back(v.real());
      if (complex_) out.push_back(v.imag());
    }
    return out;
  }

  /// Ground ansatz implied by an assignment (energy 0).
  Ansatz ground(const Assignment& a) const {
    std::vector<cplx> c;
    for (int m = 0; m <= L_; ++m) c.push_back(value(a, detail::sym("c", L_, m)));
    return Ansatz(L_, value(a, detail::sym("lambda", L_)), std::move(c), 0.0);
  }
  /// The second state implied by an assignment; the companion energy is
  /// reported as 0 when it is not part of the system.
  Ansatz state(const Assignment& a) const {
    std::vector<cplx> c;
    for (int m = 0; m <= N_; ++m) c.push_back(value(a, coeff_name(m)));
    return Ansatz(N_, value(a, lambda_name()), std::move(c), energy_or_zero(a));
  }
  Poly g1(const Assignment& a) const {
    std::vector<cplx> g(static_cast<std::size_t>(std::max(g1_terms_, 0)));
    for (int l = 0; l < g1_terms_; ++l) g[static_cast<std::size_t>(l)] = value(a, detail::sym("g1_", l));
    return Poly(std::move(g));
  }

  friend ConstraintSystem excited_system(const Frame&, const Ansatz&, int, const SystemOptions&);
  friend ConstraintSystem degenerate_system(const Frame&, const Ansatz&, const Ansatz&,
                                            const SystemOptions&);

 private:
  bool general_degenerate() const {
    return kind_ == SystemKind::Degenerate &&
           (opts_.companion_lambda_free || opts_.companion_energy);
  }
  std::string coeff_name(int m) const {
    return kind_ == SystemKind::Excited ? detail::sym("c", N_, m) : "ct_" + std::to_string(m);
  }
  std::string lambda_name() const {
    if (kind_ == SystemKind::Excited)
      return opts_.lambda_shared ? detail::sym("lambda", L_) : detail::sym("lambda", N_);
    return opts_.companion_lambda_free ? "lambdat" : detail::sym("lambda", L_);
  }
  std::string energy_name() const {
    return kind_ == SystemKind::Excited ? detail::sym("E", N_) : "Et";
  }
  cplx energy_or_zero(const Assignment& a) const {
    if (kind_ == SystemKind::Degenerate && !opts_.companion_energy) return 0.0;
    return value(a, energy_name());
  }

  Poly poly_of(const Assignment& a, int level, bool second) const {
    std::vector<cplx> c(static_cast<std::size_t>(level) + 1);
    for (int m = 0; m <= level; ++m)
      c[static_cast<std::size_t>(m)] =
          value(a, second ? coeff_name(m) : detail::sym("c", L_, m));
    return Poly(std::move(c));
  }

  // The nine term groups of the excited-state identity
  //   psi_L'' psi_N / psi_L - psi_N'' - E_N psi_N = 0
  // cleared by f^2 S_L / (g f^lambda_N). The g1^2 and g1' pieces cancel
  // between the two second derivatives and never appear.
  std::vector<cplx> excited_form(const Assignment& a) const {
    const Poly& f0 = frame_.f0();
    const Poly& f1 = frame_.f1();
    const Poly& h1 = frame_.h1();
    const Poly g = g1(a);
    const Poly sl = poly_of(a, L_, false);
    const Poly sn = poly_of(a, N_, true);
    const cplx lam_l = value(a, detail::sym("lambda", L_));
    const cplx lam_n = value(a, lambda_name());
    const cplx e_n = energy_or_zero(a);

    const Poly ff = f0 * f0;
    const Poly slh = sl.derivative(), snh = sn.derivative();
    const Poly slhh = slh.derivative(), snhh = snh.derivative();
    const Poly h1h = h1.derivative();

    Poly r = -(ff * (h1 * h1 * snhh + h1h * h1 * snh) * sl);
    r += 2.0 * (ff * g * h1 * snh * sl);
    r -= 2.0 * lam_n * (f0 * f1 * h1 * snh * sl);
    r += (lam_l - lam_n) *
         ((f0 * f1.derivative() * h1 - 2.0 * (f0 * g * f1) + (lam_l + lam_n - 1.0) * (f1 * f1)) *
          sl * sn);
    r += 2.0 * lam_l * (f0 * f1 * h1 * slh * sn);
    r -= 2.0 * (ff * g * h1 * slh * sn);
    r += ff * (h1 * h1 * slhh + h1h * h1 * slh) * sn;
    r -= e_n * (ff * sl * sn);
    return r.padded(equations());
  }

  // Same-degree companion with the ground's lambda and no energy term. Each
  // pair s < t enters through (c_s ct_t - c_t ct_s)(t - s), so proportional
  // coefficient sets cancel pair by pair.
  std::vector<cplx> degenerate_form(const Assignment& a) const {
    const Poly& f0 = frame_.f0();
    const Poly& f1 = frame_.f1();
    const Poly& h1 = frame_.h1();
    const Poly g = g1(a);
    const cplx lam = value(a, detail::sym("lambda", L_));
    const Poly h1h = h1.derivative();

    std::vector<cplx> c(static_cast<std::size_t>(L_) + 1), ct(c.size());
    for (int m = 0; m <= L_; ++m) {
      c[static_cast<std::size_t>(m)] = value(a, detail::sym("c", L_, m));
      ct[static_cast<std::size_t>(m)] = value(a, coeff_name(m));
    }
    const Poly first_order = 2.0 * (f0 * g * h1) - 2.0 * lam * (f1 * h1);
    Poly r;
    for (int s = 0; s <= L_; ++s) {
      for (int t = s + 1; t <= L_; ++t) {
        const cplx anti = (c[static_cast<std::size_t>(s)] * ct[static_cast<std::size_t>(t)] -
                           c[static_cast<std::size_t>(t)] * ct[static_cast<std::size_t>(s)]) *
                          static_cast<double>(t - s);
        if (anti == cplx{}) continue;
        Poly second = h1h * Poly::monomial(s + t - 1);
        if (s + t >= 2) second += static_cast<double>(s + t - 1) * (h1 * Poly::monomial(s + t - 2));
        r -= anti * (f0 * h1 * second);
        r += anti * (first_order * Poly::monomial(s + t - 1));
      }
    }
    return r.padded(equations());
  }

  SystemKind kind_ = SystemKind::Excited;
  Frame frame_;
  SystemOptions opts_;
  int L_ = 0;
  int N_ = 0;
  int g1_terms_ = 0;
  int max_degree_ = 0;
  bool complex_ = false;
  std::vector<std::string> unknowns_;
  Assignment fixed_;

  void finish(std::vector<std::string> structural, const Assignment& defaults) {
    const std::set<std::string> free(opts_.free.begin(), opts_.free.end());
    for (const auto& f : free) {
      if (std::find(structural.begin(), structural.end(), f) == structural.end())
        throw std::invalid_argument("free symbol '" + f + "' does not occur in the system");
    }
    for (const auto& name : structural) {
      const bool is_free = free.count(name) > 0 || !defaults.count(name);
      if (is_free) {
        if (std::find(unknowns_.begin(), unknowns_.end(), name) == unknowns_.end())
          unknowns_.push_back(name);
      } else {
        fixed_[name] = defaults.at(name);
      }
    }
  }
};

namespace detail {

inline void ground_symbols(const Frame& frame, const Ansatz& ground, int g1_terms,
                           std::vector<std::string>& names, Assignment& defaults) {
  for (int l = 0; l < g1_terms; ++l) {
    names.push_back(sym("g1_", l));
    defaults[names.back()] = frame.g1()[static_cast<std::size_t>(l)];
  }
  for (int m = 0; m <= ground.level; ++m) {
    names.push_back(sym("c", ground.level, m));
    defaults[names.back()] = ground.c[static_cast<std::size_t>(m)];
  }
  names.push_back(sym("lambda", ground.level));
  defaults[names.back()] = ground.lambda;
}

inline int excited_degree(const Frame& fr, int g_deg, int L, int N) {
  const int f0 = deg(fr.f0()), f1 = deg(fr.f1()), h1 = deg(fr.h1());
  const int f1h = dderiv(f1), h1h = dderiv(h1);
  const int ln = dderiv(L), nn = dderiv(N), lnn = dderiv(ln), nnn = dderiv(nn);
  return std::max({
      dsum({twice(f0), twice(h1), nnn, L}), dsum({twice(f0), h1h, h1, nn, L}),
      dsum({twice(f0), g_deg, h1, nn, L}), dsum({f0, f1, h1, nn, L}),
      dsum({f0, f1h, h1, L, N}), dsum({f0, g_deg, f1, L, N}), dsum({twice(f1), L, N}),
      dsum({f0, f1, h1, ln, N}), dsum({twice(f0), g_deg, h1, ln, N}),
      dsum({twice(f0), twice(h1), lnn, N}), dsum({twice(f0), h1h, h1, ln, N}),
      dsum({twice(f0), L, N}), 0});
}

inline int degenerate_degree(const Frame& fr, int g_deg, int L) {
  const int f0 = deg(fr.f0()), f1 = deg(fr.f1()), h1 = deg(fr.h1());
  const int h1h = dderiv(h1);
  if (L < 1) return 0;
  return std::max({dsum({f0, twice(h1), 2 * L - 3}), dsum({f0, h1, h1h, 2 * L - 2}),
                   dsum({f0, g_deg, h1, 2 * L - 2}), dsum({f1, h1, 2 * L - 2}), 0});
}

}  // namespace detail

/// Constraints for an excited state of level N > L of the potential built
/// from `ground`. The top coefficient of the new state is pinned.
inline ConstraintSystem excited_system(const Frame& frame, const Ansatz& ground, int N,
                                       const SystemOptions& opts = {}) {
  if (N <= ground.level) throw std::invalid_argument("excited level must exceed the ground level");
  ConstraintSystem sys;
  sys.kind_ = SystemKind::Excited;
  sys.frame_ = frame;
  sys.opts_ = opts;
  sys.L_ = ground.level;
  sys.N_ = N;
  sys.complex_ = opts.complex_unknowns;
  sys.g1_terms_ = opts.g1_terms >= 0 ? opts.g1_terms : static_cast<int>(frame.g1().size());
  sys.max_degree_ = detail::excited_degree(frame, sys.g1_terms_ - 1, sys.L_, N);

  std::vector<std::string> names;
  Assignment defaults;
  detail::ground_symbols(frame, ground, sys.g1_terms_, names, defaults);
  for (int m = 0; m < N; ++m) names.push_back(detail::sym("c", N, m));
  names.push_back(detail::sym("c", N, N));
  defaults[names.back()] = opts.top_coefficient;
  if (!opts.lambda_shared) names.push_back(detail::sym("lambda", N));
  names.push_back(detail::sym("E", N));
  sys.finish(names, defaults);
  return sys;
}

/// Constraints for a second, independent coefficient set at the ground
/// level. With default options this is the printed same-lambda identity
/// without an energy term; `companion_lambda_free` and `companion_energy`
/// switch to the general cleared Schrodinger identity.
inline ConstraintSystem degenerate_system(const Frame& frame, const Ansatz& ground,
                                          const Ansatz& companion_guess,
                                          const SystemOptions& opts = {}) {
  if (ground.level < 1) throw std::invalid_argument("degenerate companion needs ground level >= 1");
  if (companion_guess.level != ground.level)
    throw std::invalid_argument("companion must share the ground level");
  ConstraintSystem sys;
  sys.kind_ = SystemKind::Degenerate;
  sys.frame_ = frame;
  sys.opts_ = opts;
  sys.L_ = ground.level;
  sys.N_ = ground.level;
  sys.complex_ = opts.complex_unknowns;
  sys.g1_terms_ = opts.g1_terms >= 0 ? opts.g1_terms : static_cast<int>(frame.g1().size());
  sys.max_degree_ = sys.general_degenerate()
                        ? detail::excited_degree(frame, sys.g1_terms_ - 1, sys.L_, sys.L_)
                        : detail::degenerate_degree(frame, sys.g1_terms_ - 1, sys.L_);

  std::vector<std::string> names;
  Assignment defaults;
  detail::ground_symbols(frame, ground, sys.g1_terms_, names, defaults);
  const int L = ground.level;
  for (int m = 0; m < L; ++m) {
    names.push_back("ct_" + std::to_string(m));
    defaults[names.back()] = companion_guess.c[static_cast<std::size_t>(m)];
  }
  names.push_back("ct_" + std::to_string(L));
  defaults[names.back()] = opts.top_coefficient;
  if (opts.companion_lambda_free) {
    names.push_back("lambdat");
    defaults[names.back()] = companion_guess.lambda;
  }
  if (opts.companion_energy) {
    names.push_back("Et");
    defaults[names.back()] = companion_guess.energy;
  }
  // Companion coefficients below the top are unknown unless listed otherwise.
  SystemOptions with_free = opts;
  for (int m = 0; m < L; ++m) with_free.free.push_back("ct_" + std::to_string(m));
  if (opts.companion_energy) with_free.free.push_back("Et");
  sys.opts_ = with_free;
  sys.finish(names, defaults);
  sys.opts_ = opts;
  return sys;
}

/// Forward-difference Jacobian of the real residual over the system's own
/// unknowns (real and imaginary parts as separate columns when complex).
inline Eigen::MatrixXd jacobian(const ConstraintSystem& sys, const Assignment& at,
                                double rel_step = 1e-7) {
  const auto base = sys.residual(at);
  const int cols_per = sys.complex_unknowns() ? 2 : 1;
  Eigen::MatrixXd J(static_cast<Eigen::Index>(base.size()),
                    static_cast<Eigen::Index>(sys.unknowns().size()) * cols_per);
  Eigen::Index col = 0;
  for (const auto& name : sys.unknowns()) {
    for (int part = 0; part < cols_per; ++part, ++col) {
      Assignment shifted = at;
      const cplx v = sys.value(at, name);
      const double comp = part == 0 ? v.real() : v.imag();
      const double h = rel_step * std::max(1.0, std::abs(comp));
      shifted[name] = v + (part == 0 ? cplx(h, 0.0) : cplx(0.0, h));
      const auto r = sys.residual(shifted);
      for (std::size_t i = 0; i < r.size(); ++i)
        J(static_cast<Eigen::Index>(i), col) = (r[i] - base[i]) / h;
    }
  }
  return J;
}

}  // namespace qes
