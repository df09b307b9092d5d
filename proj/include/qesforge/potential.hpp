#pragma once

// Potential of a ground state with zero energy, assembled as a rational
// function of h, and its display decomposition in powers of f.

#include <algorithm>
#include <map>
#include <vector>

#include "qesforge/frame.hpp"
#include "qesforge/poly.hpp"

namespace qes {

/// f^2 psi''/(g f^lambda) for psi = g f^lambda S(h), as a polynomial in h.
///
/// The eight term groups are, in order: g1 g1, -m g1 h1, lambda l f1 h1 f0,
/// (lambda^2 - lambda) f1 f1, -2 lambda g1 f0 f1, 2 lambda s f0 f1 h1,
/// -2 s f0 f0 g1 h1 and f0 f0 h1 h1 s (s - 1 + m).
inline Poly cleared_second_derivative(const Frame& frame, cplx lambda, const Poly& s) {
  const Poly& g = frame.g1();
  const Poly& f0 = frame.f0();
  const Poly& f1 = frame.f1();
  const Poly& h1 = frame.h1();
  const Poly ff = f0 * f0;
  const Poly sh = s.derivative();
  const Poly shh = sh.derivative();

  Poly out = ff * g * g * s;
  out -= ff * g.derivative() * h1 * s;
  out += lambda * (f1.derivative() * h1 * f0 * s);
  out += (lambda * lambda - lambda) * (f1 * f1 * s);
  out -= 2.0 * lambda * (g * f0 * f1 * s);
  out += 2.0 * lambda * (f0 * f1 * h1 * sh);
  out -= 2.0 * (ff * g * h1 * sh);
  out += ff * (h1 * h1 * shh + h1.derivative() * h1 * sh);
  return out;
}

struct PotentialExpr {
  RationalFn v;
  Frame frame;

  cplx operator()(double x) const { return v(frame.h(x)); }
};

/// V = psi_L''/psi_L for the ground ansatz (energy fixed to zero), normalized.
inline PotentialExpr build_potential(const Frame& frame, const Ansatz& ground) {
  if (ground.energy != cplx{}) throw std::invalid_argument("ground state energy must be zero");
  const Poly s = ground.poly();
  if (s.is_zero()) throw DegenerateState("ground polynomial is identically zero");
  const Poly den = frame.f0() * frame.f0() * s;
  if (den.is_zero()) throw DegenerateDenominator("f^2 S_L vanishes identically");
  RationalFn raw(cleared_second_derivative(frame, ground.lambda, s), den);
  return {raw.normalized(), frame};
}

/// One term f^power * poly of a decomposition V = sum_k f^k P_k(h).
struct FPiece {
  int power;
  Poly poly;
};

/// Splits V into a polynomial part (power 0) and pieces f^k r_k with k < 0
/// and deg r_k < deg f. The denominator may only vanish at roots of f.
inline std::vector<FPiece> partial_fractions(const PotentialExpr& p, double tol = 1e-8) {
  const Poly& f = p.frame.f0();
  const Poly& den = p.v.den();
  const Poly& num = p.v.num();

  int k_needed = 0;
  if (den.degree() > 0) {
    const auto f_roots = cluster_roots(f.roots(), 1e-6);
    for (const RootCluster& dr : cluster_roots(den.roots(), 1e-3)) {
      const auto match = std::find_if(f_roots.begin(), f_roots.end(), [&](const RootCluster& fr) {
        return std::abs(fr.center - dr.center) <= 1e-6 * std::max(1.0, std::abs(fr.center));
      });
      if (match == f_roots.end()) throw NotFExpressible("denominator has a root that f lacks");
      k_needed = std::max(k_needed, (dr.multiplicity + match->multiplicity - 1) / match->multiplicity);
    }
  }

  // num/den = (num * m) / (lead * f^K) with m = f^K / den exactly.
  const Poly fk = pow(f, k_needed);
  auto [m, rem] = fk.divmod(den);
  if (rem.max_abs_coeff() > tol * std::max(1.0, fk.max_abs_coeff()))
    throw NotFExpressible("denominator does not divide a power of f");
  Poly scaled = (num * m).chopped(1e-13);

  std::vector<FPiece> out;
  auto [quot, rest] = scaled.divmod(fk);
  if (!quot.chopped(1e-13).is_zero()) out.push_back({0, quot.chopped(1e-13)});
  // rest = sum_{j<K} r_j f^j
  std::vector<Poly> digits;
  Poly cur = rest;
  for (int j = 0; j < k_needed; ++j) {
    auto [q, r] = cur.divmod(f);
    digits.push_back(r);
    cur = q;
  }
  for (int j = k_needed - 1; j >= 0; --j) {
    const Poly r = digits[static_cast<std::size_t>(j)].chopped(1e-13);
    if (!r.is_zero()) out.push_back({j - k_needed, r});
  }
  return out;
}

/// Sums f^k P_k back into a normalized rational function.
inline RationalFn recompose(const std::vector<FPiece>& pieces, const Poly& f) {
  RationalFn acc(Poly{});
  for (const FPiece& piece : pieces) {
    if (piece.power >= 0)
      acc = acc + RationalFn(piece.poly * pow(f, piece.power));
    else
      acc = acc + RationalFn(piece.poly, pow(f, -piece.power));
  }
  return acc.normalized();
}

}  // namespace qes
