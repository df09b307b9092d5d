#pragma once

// Full check of an entry (frame, potential, claimed states): the potential
// must follow from the ground state, every state must solve the equation
// exactly, be normalizable and reproduce its energy, and distinct levels of
// a real potential must be orthogonal.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qesforge/catalog.hpp"
#include "qesforge/potential.hpp"
#include "qesforge/verify.hpp"

namespace qes {

struct CheckTolerances {
  double symbolic = 1e-9;
  double grid = 1e-5;
  double energy = 1e-6;
  double overlap = 1e-6;
  double pt = 1e-12;
  double potential = 1e-8;
};

struct StateCheck {
  std::string label;
  cplx claimed_energy;
  EigenpairReport report;
  double energy_error = 0.0;
};

struct OverlapCheck {
  std::size_t a, b;
  double overlap;
};

struct EntryReport {
  std::string id;
  Interval interval;
  double potential_mismatch = 0.0;
  std::vector<StateCheck> states;
  std::vector<OverlapCheck> overlaps;
  std::optional<double> pt_deviation;
  std::vector<std::string> failures;
  bool pass() const { return failures.empty(); }
};

/// Symmetric interval outside which every state is below 1e-12 of its peak.
inline Interval decay_interval(const std::vector<Sampler>& states) {
  double X = 4.0;
  for (const Sampler& psi : states) {
    while (X < 64.0) {
      double peak = 0.0;
      for (double x : linspace(-X, X, 401)) peak = std::max(peak, std::abs(psi(x)));
      if (std::max(std::abs(psi(X)), std::abs(psi(-X))) <= 1e-12 * peak) break;
      X *= 2.0;
    }
  }
  return {-X, X};
}

inline EntryReport check_entry(const CatalogEntry& entry, const CheckTolerances& tol = {}) {
  EntryReport rep;
  rep.id = entry.id;
  if (entry.states.empty()) {
    rep.failures.push_back("entry lists no states");
    return rep;
  }
  const auto fail = [&](const std::string& what) { rep.failures.push_back(what); };

  const Ansatz& ground = entry.states.front().ansatz;
  PotentialExpr built;
  try {
    built = build_potential(entry.frame, ground);
    rep.potential_mismatch = coeff_distance(built.v, entry.potential.normalized());
  } catch (const std::exception& e) {
    fail(std::string("ground state does not build a potential: ") + e.what());
    return rep;
  }
  if (!(rep.potential_mismatch <= tol.potential)) fail("stored potential differs from the ground-state construction");
  const PotentialExpr v{entry.potential.normalized(), entry.frame};

  std::vector<Sampler> samplers;
  for (const CatalogState& s : entry.states) samplers.push_back(state_sampler(entry.frame, s.ansatz));
  rep.interval = decay_interval(samplers);
  VerifyOptions vo;
  vo.interval = rep.interval;

  // Cheap screens first, so hopeless candidates skip the quadratures.
  if (!real_roots(v.v.den()).empty()) {
    fail("potential has real poles");
    return rep;
  }
  for (std::size_t k = 0; k < samplers.size(); ++k) {
    if (!normalizable(samplers[k], rep.interval).normalizable) {
      fail("state " + std::to_string(k) + ": not normalizable");
      return rep;
    }
  }

  const double scale = std::max(1.0, v.v.num().max_abs_coeff());
  for (std::size_t k = 0; k < entry.states.size(); ++k) {
    const CatalogState& s = entry.states[k];
    StateCheck sc;
    sc.label = s.label.empty() ? "state " + std::to_string(k) : s.label;
    sc.claimed_energy = s.ansatz.energy;
    sc.report = verify_eigenpair(v, s.ansatz, vo);
    sc.energy_error = std::abs(sc.report.energy - s.ansatz.energy);
    const std::string tag = "state " + std::to_string(k);
    if (!(sc.report.symbolic_residual_max <= tol.symbolic * scale)) fail(tag + ": symbolic residual");
    if (!(sc.report.grid_residual_max <= tol.grid)) fail(tag + ": grid residual");
    if (!sc.report.pole_report.empty()) fail(tag + ": real poles on the axis");
    if (!sc.report.normalizable) fail(tag + ": not normalizable");
    if (!(sc.energy_error <= tol.energy * std::max(1.0, std::abs(s.ansatz.energy))))
      fail(tag + ": energy mismatch");
    rep.states.push_back(std::move(sc));
  }

  const auto grid = linspace(rep.interval.first, rep.interval.second, 201);
  bool real_v = true;
  for (double x : grid) real_v = real_v && std::abs(v(x).imag()) <= 1e-12 * std::max(1.0, std::abs(v(x)));
  if (real_v) {
    for (std::size_t a = 0; a < entry.states.size(); ++a) {
      for (std::size_t b = a + 1; b < entry.states.size(); ++b) {
        if (std::abs(entry.states[a].ansatz.energy - entry.states[b].ansatz.energy) < 1e-8) {
          // Bound states of a real potential on the line are nondegenerate.
          fail("states " + std::to_string(a) + " and " + std::to_string(b) + " repeat one level");
          continue;
        }
        const double o = orthogonality(samplers[a], samplers[b], rep.interval);
        rep.overlaps.push_back({a, b, o});
        if (!(o <= tol.overlap))
          fail("states " + std::to_string(a) + " and " + std::to_string(b) + " are not orthogonal");
      }
    }
  }
  if (entry.pt_symmetric) {
    rep.pt_deviation = pt_symmetry_check(potential_sampler(v), grid);
    if (!(*rep.pt_deviation <= tol.pt)) fail("potential is not PT symmetric");
  }
  return rep;
}

}  // namespace qes
