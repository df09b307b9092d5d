#pragma once

// Expansion frame: the coefficient arrays of -g'/g, f, f' and h' in powers
// of the basis function h, plus optional closed-form samplers of g, f, h.

#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qesforge/errors.hpp"
#include "qesforge/poly.hpp"

namespace qes {

using Sampler = std::function<cplx(double)>;

struct FrameSamplers {
  std::string name;
  Sampler f;
  Sampler h;
  /// Optional: when absent and the basis is h = x, g is integrated from g1.
  Sampler g;
};

class Frame {
 public:
  Frame() = default;

  /// Frame from coefficient polynomials; M is the largest degree present.
  Frame(Poly g1, Poly f0, Poly f1, Poly h1, std::optional<FrameSamplers> samplers = {})
      : g1_(std::move(g1)), f0_(std::move(f0)), f1_(std::move(f1)), h1_(std::move(h1)),
        samplers_(std::move(samplers)) {
    if (h1_.is_zero()) throw std::invalid_argument("frame needs a nonzero h' expansion");
  }

  /// Frame from raw coefficient arrays with an explicit truncation order.
  static Frame from_arrays(int M, const std::vector<cplx>& g1, const std::vector<cplx>& f0,
                           const std::vector<cplx>& f1, const std::vector<cplx>& h1,
                           std::optional<FrameSamplers> samplers = {}) {
    if (M < 0) throw std::invalid_argument("truncation order M must be non-negative");
    const auto check = [M](const std::vector<cplx>& a, const char* what) {
      if (a.size() > static_cast<std::size_t>(M) + 1)
        throw std::invalid_argument(std::string("frame array ") + what + " longer than M+1");
    };
    check(g1, "g1");
    check(f0, "f0");
    check(f1, "f1");
    check(h1, "h1");
    return Frame(Poly(g1), Poly(f0), Poly(f1), Poly(h1), std::move(samplers));
  }

  const Poly& g1() const noexcept { return g1_; }
  const Poly& f0() const noexcept { return f0_; }
  const Poly& f1() const noexcept { return f1_; }
  const Poly& h1() const noexcept { return h1_; }
  int M() const noexcept {
    int m = 0;
    for (const Poly* p : {&g1_, &f0_, &f1_, &h1_}) m = std::max(m, p->degree());
    return m;
  }

  const std::optional<FrameSamplers>& samplers() const noexcept { return samplers_; }
  bool has_samplers() const noexcept { return samplers_.has_value(); }

  /// True when h' = 1 and h(0) = 0, i.e. the basis variable is x itself.
  bool identity_basis() const {
    if (!(h1_ == Poly::constant(1.0))) return false;
    return !samplers_ || std::abs(samplers_->h(0.0)) == 0.0;
  }

  Frame with_g1(Poly g1) const {
    Frame out = *this;
    out.g1_ = std::move(g1);
    return out;
  }

  /// g(x) from the sampler, or exp(-integral of sum g1_l x^l) for an identity basis.
  cplx g(double x) const {
    if (samplers_ && samplers_->g) return samplers_->g(x);
    if (!identity_basis()) throw std::logic_error("no g sampler for a non-identity basis");
    cplx acc = 0.0;
    for (std::size_t l = 0; l < g1_.size(); ++l)
      acc += g1_[l] * std::pow(x, static_cast<double>(l + 1)) / static_cast<double>(l + 1);
    return std::exp(-acc);
  }
  cplx f(double x) const { return require().f(x); }
  cplx h(double x) const { return require().h(x); }

 private:
  const FrameSamplers& require() const {
    if (!samplers_) throw std::logic_error("frame has no samplers");
    return *samplers_;
  }

  Poly g1_, f0_, f1_, h1_;
  std::optional<FrameSamplers> samplers_;
};

/// One eigenfunction g f^lambda sum_m c_m h^m with c of length level + 1.
struct Ansatz {
  int level = 0;
  cplx lambda = 0.0;
  std::vector<cplx> c{1.0};
  cplx energy = 0.0;

  Ansatz() = default;
  Ansatz(int level_, cplx lambda_, std::vector<cplx> c_, cplx energy_ = 0.0)
      : level(level_), lambda(lambda_), c(std::move(c_)), energy(energy_) {
    if (level < 0) throw std::invalid_argument("ansatz level must be non-negative");
    if (c.size() != static_cast<std::size_t>(level) + 1)
      throw std::invalid_argument("ansatz needs level+1 coefficients");
    if (c.back() == cplx{}) throw std::invalid_argument("ansatz top coefficient must be nonzero");
  }

  Poly poly() const { return Poly(c); }
};

inline const std::vector<std::string>& standard_frame_names() {
  static const std::vector<std::string> names{"rational-x", "sextic", "harmonic"};
  return names;
}

/// Catalog frames. g1 is left empty; callers attach it with Frame::with_g1.
inline Frame standard_frame(const std::string& name) {
  const Sampler identity = [](double x) { return cplx(x); };
  if (name == "rational-x") {
    FrameSamplers s{name, [](double x) { return cplx(1.0 + x * x); }, identity, {}};
    return Frame::from_arrays(2, {}, {1.0, 0.0, 1.0}, {0.0, 2.0}, {1.0}, s);
  }
  if (name == "sextic" || name == "harmonic") {
    FrameSamplers s{name, [](double) { return cplx(1.0); }, identity, {}};
    return Frame::from_arrays(0, {}, {1.0}, {0.0}, {1.0}, s);
  }
  throw UnknownFrame("unknown frame '" + name + "'");
}

struct FrameReport {
  double g_residual = 0.0;   ///< |g' + g * sum g1_l h^l|
  double f_residual = 0.0;   ///< |f - sum f0_l h^l|
  double f1_residual = 0.0;  ///< |f' - sum f1_l h^l|
  double h_residual = 0.0;   ///< |h' - sum h1_l h^l|
  double max() const { return std::max({g_residual, f_residual, f1_residual, h_residual}); }
};

/// Checks the expansion identities at each grid point; derivatives of the
/// samplers by central differences with step 1e-6.
inline FrameReport validate_frame(const Frame& frame, const std::vector<double>& grid,
                                  double tol = 1e-6) {
  if (!frame.has_samplers()) throw std::invalid_argument("validate_frame needs samplers");
  constexpr double step = 1e-6;
  const auto d = [](auto&& fn, double x) { return (fn(x + step) - fn(x - step)) / (2.0 * step); };
  const auto gfn = [&](double x) { return frame.g(x); };
  const auto ffn = [&](double x) { return frame.f(x); };
  const auto hfn = [&](double x) { return frame.h(x); };

  FrameReport rep;
  for (double x : grid) {
    const cplx h = frame.h(x);
    const double eg = std::abs(d(gfn, x) + frame.g(x) * frame.g1()(h));
    const double ef = std::abs(frame.f(x) - frame.f0()(h));
    const double ef1 = std::abs(d(ffn, x) - frame.f1()(h));
    const double eh = std::abs(d(hfn, x) - frame.h1()(h));
    const std::pair<double, const char*> checks[] = {
        {eg, "g' = -g sum g1 h^l"}, {ef, "f = sum f0 h^l"},
        {ef1, "f' = sum f1 h^l"},   {eh, "h' = sum h1 h^l"}};
    for (const auto& [err, label] : checks) {
      if (!(err <= tol)) {
        std::ostringstream os;
        os << "frame expansion " << label << " fails at x = " << x << " (residual " << err << ")";
        throw ValidationFailed(os.str());
      }
    }
    rep.g_residual = std::max(rep.g_residual, eg);
    rep.f_residual = std::max(rep.f_residual, ef);
    rep.f1_residual = std::max(rep.f1_residual, ef1);
    rep.h_residual = std::max(rep.h_residual, eh);
  }
  return rep;
}

}  // namespace qes
