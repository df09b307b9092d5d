#include <cmath>

#include <gtest/gtest.h>

#include "qesforge/catalog.hpp"
#include "qesforge/frame.hpp"
#include "qesforge/verify.hpp"

using namespace qes;

namespace {

void expect_poly(const Poly& p, std::vector<cplx> want) {
  ASSERT_EQ(p.size(), want.size()) << p;
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_EQ(p[i], want[i]) << i;
}

}  // namespace

TEST(StandardFrame, RationalX) {
  const Frame f = standard_frame("rational-x");
  expect_poly(f.f0(), {1.0, 0.0, 1.0});
  expect_poly(f.f1(), {0.0, 2.0});
  expect_poly(f.h1(), {1.0});
  ASSERT_TRUE(f.has_samplers());
  EXPECT_EQ(f.f(2.0), cplx(5.0));
  EXPECT_EQ(f.h(-0.5), cplx(-0.5));
  EXPECT_TRUE(f.identity_basis());
}

TEST(StandardFrame, Harmonic) {
  const Frame f = standard_frame("harmonic");
  expect_poly(f.f0(), {1.0});
  EXPECT_TRUE(f.f1().is_zero());
  expect_poly(f.h1(), {1.0});
}

TEST(StandardFrame, UnknownName) {
  EXPECT_THROW(standard_frame("hyperbolic"), UnknownFrame);
}

TEST(ValidateFrame, GaussianWeightFromG1) {
  const double sc = std::sqrt(flagship_c());
  const Frame f = standard_frame("rational-x").with_g1(Poly{0.0, sc});
  const FrameReport rep = validate_frame(f, {-2.0, -1.0, 0.5, 1.0, 2.0});
  EXPECT_LT(rep.max(), 1e-6);
  EXPECT_NEAR(std::abs(f.g(1.0) / f.g(0.0)), std::exp(-sc / 2.0), 1e-12);
}

TEST(ValidateFrame, ConstantWeight) {
  const Frame f = standard_frame("harmonic").with_g1(Poly{0.0});
  const FrameReport rep = validate_frame(f, linspace(-2.0, 2.0, 9));
  EXPECT_EQ(rep.g_residual, 0.0);
}

TEST(ValidateFrame, WrongFPrimeExpansionRejected) {
  const Frame good = standard_frame("rational-x");
  const Frame bad(good.g1(), good.f0(), Poly{0.0, 3.0}, good.h1(), good.samplers());
  try {
    validate_frame(bad, {-1.0, 0.5, 1.0});
    FAIL() << "expected ValidationFailed";
  } catch (const ValidationFailed& e) {
    EXPECT_NE(std::string(e.what()).find("f'"), std::string::npos) << e.what();
  }
}

TEST(ValidateFrame, EveryCatalogFrameOnFiftyPoints) {
  const auto grid = linspace(-3.0, 3.0, 50);
  for (const std::string& id : catalog_ids()) {
    const Frame& f = catalog_get(id).frame;
    EXPECT_LT(validate_frame(f, grid).max(), 1e-6) << id;
  }
}

TEST(FrameArrays, LongerThanTruncationRejected) {
  EXPECT_THROW(Frame::from_arrays(1, {0.0, 1.0, 2.0}, {1.0}, {}, {1.0}), std::invalid_argument);
  const Frame ok = Frame::from_arrays(2, {0.0, 1.0}, {1.0, 0.0, 1.0}, {0.0, 2.0}, {1.0});
  EXPECT_EQ(ok.M(), 2);
}

TEST(FrameArrays, ZeroHPrimeRejected) {
  EXPECT_THROW(Frame(Poly{}, Poly{1.0}, Poly{}, Poly{}), std::invalid_argument);
}

TEST(AnsatzShape, CoefficientCountAndTop) {
  EXPECT_THROW(Ansatz(2, 0.0, {1.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(Ansatz(1, 0.0, {1.0, 0.0}), std::invalid_argument);
  EXPECT_NO_THROW(Ansatz(1, 0.5, {0.0, 1.0}));
}
