#pragma once

// Built-in worked examples: frame, closed-form potential and exact states.

#include <cmath>
#include <string>
#include <vector>

#include "qesforge/errors.hpp"
#include "qesforge/frame.hpp"
#include "qesforge/poly.hpp"
#include "qesforge/potential.hpp"

namespace qes {

/// Constant of the three-level rational example: the positive root of the
/// cubic condition linking the two excited states.
inline double flagship_c() {
  const double t = std::cos(std::atan(std::sqrt(109.0) / 4.0) / 3.0);
  const double r = -1.0 + std::sqrt(5.0) * t;
  return r * r;
}

struct CatalogState {
  Ansatz ansatz;
  std::string label;
};

struct CatalogEntry {
  std::string id;
  std::string description;
  std::string frame_name;
  Frame frame;
  /// Closed-form potential in x as printed for the example.
  RationalFn potential;
  /// Ground state first; energies are stored in each ansatz.
  std::vector<CatalogState> states;
  bool pt_symmetric = false;
  bool physical = true;
  /// Number of states entering the superpotential chain (2 or 3).
  int chain_length = 3;
};

inline const std::vector<std::string>& catalog_ids() {
  static const std::vector<std::string> ids{"flagship", "pt-complex", "kuliy-tkachuk", "sextic",
                                            "harmonic"};
  return ids;
}

namespace detail {

inline RationalFn over_f_powers(const std::vector<Poly>& parts) {
  // sum_k parts[k] / (1 + x^2)^k
  const Poly f{1.0, 0.0, 1.0};
  RationalFn acc(Poly{});
  for (std::size_t k = 0; k < parts.size(); ++k)
    acc = acc + RationalFn(parts[k], pow(f, static_cast<int>(k)));
  return acc.normalized();
}

inline CatalogEntry make_flagship() {
  const double c = flagship_c();
  const double sc = std::sqrt(c);
  CatalogEntry e;
  e.id = "flagship";
  e.description = "three-level rational potential on f = 1 + x^2 with ground level L = 1";
  e.frame_name = "rational-x";
  e.frame = standard_frame("rational-x").with_g1(Poly{0.0, sc});
  e.potential = over_f_powers({Poly{-4 * c - sc, 0.0, c}, Poly{8 * c - 4 * sc},
                               Poly{-(4 * c - 8 * sc + 3)}});
  e.states = {
      {Ansatz(1, sc - 0.5, {0.0, 1.0}, 0.0), "x (1+x^2)^(sqrt(c)-1/2) exp(-sqrt(c) x^2/2)"},
      {Ansatz(2, sc - 0.5, {-1.0, 0.0, 1.0}, 2 * sc),
       "(x^2-1) (1+x^2)^(sqrt(c)-1/2) exp(-sqrt(c) x^2/2)"},
      {Ansatz(3, 1.5 - sc, {0.0, 1.0, 0.0, -(2.0 - 4.0 * c / 3.0)}, -8 * c + 12 * sc),
       "x (1 - (2 - 4c/3) x^2) (1+x^2)^(3/2-sqrt(c)) exp(-sqrt(c) x^2/2)"},
  };
  return e;
}

inline CatalogEntry make_pt_complex() {
  const cplx i(0.0, 1.0);
  CatalogEntry e;
  e.id = "pt-complex";
  e.description = "complex PT-symmetric potential with a degenerate-level companion";
  e.frame_name = "rational-x";
  e.frame = standard_frame("rational-x").with_g1(Poly{0.0, 1.0 / 6.0});
  // x^2/36 - 1/6 + (4 + 2ix) / (3 (x + i)^2)
  const RationalFn poly_part(Poly{-1.0 / 6.0, 0.0, 1.0 / 36.0});
  const RationalFn pole_part(Poly{4.0 / 3.0, 2.0 * i / 3.0}, Poly{-1.0, 2.0 * i, 1.0});
  e.potential = (poly_part + pole_part).normalized();
  e.states = {
      {Ansatz(2, -1.0, {3.0, 2.0 * i, 1.0}, 0.0), "(3 + 2ix + x^2) (1+x^2)^-1 exp(-x^2/12)"},
      {Ansatz(2, 0.0, {-1.0, 2.0 * i, 1.0}, 2.0 / 3.0), "(-1 + 2ix + x^2) exp(-x^2/12)"},
  };
  e.pt_symmetric = true;
  e.chain_length = 2;
  return e;
}

inline CatalogEntry make_kuliy_tkachuk() {
  const double s3 = std::sqrt(3.0);
  CatalogEntry e;
  e.id = "kuliy-tkachuk";
  e.description = "three-level rational potential on f = 1 + x^2 with ground level L = 0";
  e.frame_name = "rational-x";
  e.frame = standard_frame("rational-x").with_g1(Poly{0.0, s3 / 2.0});
  e.potential = over_f_powers(
      {Poly{0.5 * (6.0 - 7.0 * s3), 0.0, 0.75}, Poly{-2.0 * (-3.0 + s3)}, Poly{2.0 * (-3.0 + 2.0 * s3)}});
  const double lam = (s3 - 1.0) / 2.0;
  e.states = {
      {Ansatz(0, (3.0 - s3) / 2.0, {1.0}, 0.0), "(1+x^2)^((3-sqrt3)/2) exp(-sqrt3 x^2/4)"},
      {Ansatz(1, lam, {0.0, 1.0}, 6.0 - 3.0 * s3), "x (1+x^2)^((sqrt3-1)/2) exp(-sqrt3 x^2/4)"},
      {Ansatz(2, lam, {1.0, 0.0, -1.0}, 6.0 - 2.0 * s3),
       "(1-x^2) (1+x^2)^((sqrt3-1)/2) exp(-sqrt3 x^2/4)"},
  };
  return e;
}

inline CatalogEntry make_sextic() {
  CatalogEntry e;
  e.id = "sextic";
  e.description = "sextic oscillator x^6 - 11 x^2 + 8 with three polynomial states";
  e.frame_name = "sextic";
  e.frame = standard_frame("sextic").with_g1(Poly{0.0, 0.0, 0.0, 1.0});
  e.potential = RationalFn(Poly{8.0, 0.0, -11.0, 0.0, 0.0, 0.0, 1.0});
  e.states = {
      {Ansatz(4, 0.0, {1.0, 0.0, 4.0, 0.0, 2.0}, 0.0), "(1 + 4x^2 + 2x^4) exp(-x^4/4)"},
      {Ansatz(4, 0.0, {-3.0, 0.0, 0.0, 0.0, 2.0}, 8.0), "(2x^4 - 3) exp(-x^4/4)"},
      {Ansatz(4, 0.0, {1.0, 0.0, -4.0, 0.0, 2.0}, 16.0), "(1 - 4x^2 + 2x^4) exp(-x^4/4)"},
  };
  return e;
}

inline CatalogEntry make_harmonic() {
  CatalogEntry e;
  e.id = "harmonic";
  e.description = "harmonic oscillator x^2 - 1 with its three lowest states";
  e.frame_name = "harmonic";
  e.frame = standard_frame("harmonic").with_g1(Poly{0.0, 1.0});
  e.potential = RationalFn(Poly{-1.0, 0.0, 1.0});
  e.states = {
      {Ansatz(0, 0.0, {1.0}, 0.0), "exp(-x^2/2)"},
      {Ansatz(1, 0.0, {0.0, 1.0}, 2.0), "x exp(-x^2/2)"},
      {Ansatz(2, 0.0, {-1.0, 0.0, 2.0}, 4.0), "(2x^2 - 1) exp(-x^2/2)"},
  };
  return e;
}

}  // namespace detail

/// Entry by identifier; throws UnknownEntry otherwise.
inline CatalogEntry catalog_get(const std::string& id) {
  if (id == "flagship") return detail::make_flagship();
  if (id == "pt-complex") return detail::make_pt_complex();
  if (id == "kuliy-tkachuk") return detail::make_kuliy_tkachuk();
  if (id == "sextic") return detail::make_sextic();
  if (id == "harmonic") return detail::make_harmonic();
  throw UnknownEntry("unknown catalog entry '" + id + "'");
}

inline const std::vector<std::string>& catalog_list() { return catalog_ids(); }

}  // namespace qes
