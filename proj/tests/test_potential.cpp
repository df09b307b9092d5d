#include <cmath>
#include <complex>

#include <gtest/gtest.h>

#include "qesforge/catalog.hpp"
#include "qesforge/potential.hpp"
#include "qesforge/verify.hpp"

using namespace qes;

namespace {

const double kC = flagship_c();
const double kSc = std::sqrt(kC);

Frame flagship_frame() { return standard_frame("rational-x").with_g1(Poly{0.0, kSc}); }
Ansatz flagship_ground() { return Ansatz(1, kSc - 0.5, {0.0, 1.0}); }

}  // namespace

TEST(BuildPotential, HarmonicOscillator) {
  const Frame f = standard_frame("harmonic").with_g1(Poly{0.0, 1.0});
  const PotentialExpr v = build_potential(f, Ansatz(0, 0.0, {1.0}));
  EXPECT_LT(coeff_distance(v.v, RationalFn(Poly{-1.0, 0.0, 1.0})), 1e-14);
}

TEST(BuildPotential, GenericRationalGroundHasSpuriousPole) {
  // Free c0, lambda and g1 keep a 1/(c0 + x) term before any constraint is imposed.
  const Frame f = standard_frame("rational-x").with_g1(Poly{0.3, 0.9});
  const PotentialExpr v = build_potential(f, Ansatz(1, 0.2, {0.7, 1.0}));
  EXPECT_LT(std::abs(v.v.den()(cplx(-0.7))), 1e-9);
  EXPECT_LT(std::abs(v.v.den()(cplx(0.0, 1.0))), 1e-9);
  // Cross-check against psi''/psi of the sampled state.
  const Sampler psi = state_sampler(f, Ansatz(1, 0.2, {0.7, 1.0}));
  for (double x : {-2.0, -1.1, 0.4, 1.3, 2.5}) {
    const double h = 1e-3;
    const cplx d2 = (-psi(x + 2 * h) + 16.0 * psi(x + h) - 30.0 * psi(x) + 16.0 * psi(x - h) -
                     psi(x - 2 * h)) / (12.0 * h * h);
    EXPECT_LT(std::abs(v(x) - d2 / psi(x)) / std::max(1.0, std::abs(v(x))), 1e-5) << x;
  }
}

TEST(BuildPotential, FlagshipClosedForm) {
  const PotentialExpr v = build_potential(flagship_frame(), flagship_ground());
  EXPECT_LT(coeff_distance(v.v, catalog_get("flagship").potential), 1e-10);
}

TEST(BuildPotential, SamplerCrossCheck) {
  const Frame f = flagship_frame();
  const Ansatz g = flagship_ground();
  const PotentialExpr v = build_potential(f, g);
  const Sampler psi = state_sampler(f, g);
  for (double x : linspace(-3.0, 3.0, 20)) {
    const double h = 1e-3;
    const cplx d2 = (-psi(x + 2 * h) + 16.0 * psi(x + h) - 30.0 * psi(x) + 16.0 * psi(x - h) -
                     psi(x - 2 * h)) / (12.0 * h * h);
    EXPECT_LT(std::abs(v(x) - d2 / psi(x)) / std::max(1.0, std::abs(v(x))), 1e-5) << x;
  }
}

TEST(BuildPotential, HomogeneousInGroundCoefficients) {
  const Frame f = standard_frame("rational-x").with_g1(Poly{0.1, 0.8});
  const Ansatz base(2, 0.3, {0.4, -0.2, 1.0});
  const PotentialExpr v0 = build_potential(f, base);
  for (cplx s : {cplx(2.0), cplx(-0.5), cplx(0.3, 1.7)}) {
    Ansatz scaled = base;
    for (cplx& c : scaled.c) c *= s;
    const PotentialExpr v1 = build_potential(f, scaled);
    EXPECT_LT(coeff_distance(v0.v, v1.v), 1e-12) << s;
  }
}

TEST(BuildPotential, DenominatorDividesClearingFactor) {
  const Frame f = standard_frame("rational-x").with_g1(Poly{0.1, 0.8});
  const Ansatz g(2, 0.3, {0.4, -0.2, 1.0});
  const PotentialExpr v = build_potential(f, g);
  const Poly clearing = f.f0() * f.f0() * g.poly();
  for (const cplx& r : v.v.den().roots()) EXPECT_LT(std::abs(clearing(r)), 1e-8) << r;
}

TEST(PartialFractions, FlagshipPieces) {
  const PotentialExpr v = build_potential(flagship_frame(), flagship_ground());
  const auto pieces = partial_fractions(v);
  ASSERT_EQ(pieces.size(), 3u);
  const auto piece = [&](int k) {
    for (const FPiece& p : pieces)
      if (p.power == k) return p.poly;
    ADD_FAILURE() << "no piece for power " << k;
    return Poly{};
  };
  const Poly p0 = piece(0), p1 = piece(-1), p2 = piece(-2);
  EXPECT_LT(std::abs(p0[0] - (-4 * kC - kSc)), 1e-10);
  EXPECT_LT(std::abs(p0[1]), 1e-10);
  EXPECT_LT(std::abs(p0[2] - kC), 1e-10);
  EXPECT_LE(p1.degree(), 0);
  EXPECT_LT(std::abs(p1[0] - (8 * kC - 4 * kSc)), 1e-10);
  EXPECT_LE(p2.degree(), 0);
  EXPECT_LT(std::abs(p2[0] + (4 * kC - 8 * kSc + 3)), 1e-10);
}

TEST(PartialFractions, PolynomialIsSinglePiece) {
  const PotentialExpr v{RationalFn(Poly{8.0, 0.0, -11.0, 0.0, 0.0, 0.0, 1.0}), standard_frame("sextic")};
  const auto pieces = partial_fractions(v);
  ASSERT_EQ(pieces.size(), 1u);
  EXPECT_EQ(pieces[0].power, 0);
}

TEST(PartialFractions, ForeignPoleRejected) {
  const PotentialExpr v{RationalFn(Poly{1.0}, Poly{0.0, 1.0}), standard_frame("rational-x")};
  EXPECT_THROW(partial_fractions(v), NotFExpressible);
}

TEST(PartialFractions, RecompositionReproducesInput) {
  for (const std::string& id : {"flagship", "kuliy-tkachuk", "harmonic"}) {
    const CatalogEntry e = catalog_get(id);
    const PotentialExpr v{e.potential, e.frame};
    const RationalFn back = recompose(partial_fractions(v), e.frame.f0()).normalized();
    EXPECT_LT(coeff_distance(back, e.potential.normalized()), 1e-10) << id;
  }
}
