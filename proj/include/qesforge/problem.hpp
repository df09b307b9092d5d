#pragma once

// Problem files: a frame, a ground ansatz whose entries are numbers or the
// unknown marker "?", and a target (excited levels or a degenerate
// companion) plus solver and plot settings.

#include <algorithm>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qesforge/constraints.hpp"
#include "qesforge/io.hpp"
#include "qesforge/solver.hpp"
#include "qesforge/suite.hpp"

namespace qes {

/// A pinned value or an unknown (nullopt).
using Slot = std::optional<cplx>;

struct StateRequest {
  int level = 0;
  bool lambda_shared = false;
  cplx top = 1.0;
};

struct CompanionRequest {
  std::vector<Slot> c;
  bool has_lambda = false;
  Slot lambda;
  bool has_energy = false;
};

enum class ProblemMode { Build, Excited, Degenerate };

struct ProblemSpec {
  std::string name = "problem";
  Frame frame;
  std::vector<Slot> g1;
  int level = 0;
  Slot lambda;
  std::vector<Slot> c;
  ProblemMode mode = ProblemMode::Build;
  std::vector<StateRequest> states;
  CompanionRequest companion;
  bool complex_unknowns = false;
  SolveOptions solver;
  std::optional<std::string> csv;
  Interval plot_interval{-5.0, 5.0};
  int plot_points = 201;

  bool fully_pinned() const {
    const auto pinned = [](const std::vector<Slot>& v) {
      return std::all_of(v.begin(), v.end(), [](const Slot& s) { return s.has_value(); });
    };
    return pinned(g1) && pinned(c) && lambda.has_value();
  }

  Frame pinned_frame() const {
    std::vector<cplx> g;
    for (const Slot& s : g1) g.push_back(s.value_or(1.0));
    return frame.with_g1(Poly(std::move(g)));
  }

  /// Ground ansatz with unknowns replaced by placeholder values.
  Ansatz ground_guess() const {
    std::vector<cplx> cc;
    for (const Slot& s : c) cc.push_back(s.value_or(1.0));
    return Ansatz(level, lambda.value_or(0.0), std::move(cc), 0.0);
  }

  std::vector<std::string> free_symbols() const {
    std::vector<std::string> out;
    for (std::size_t l = 0; l < g1.size(); ++l)
      if (!g1[l]) out.push_back("g1_" + std::to_string(l));
    for (std::size_t m = 0; m < c.size(); ++m)
      if (!c[m]) out.push_back("c" + std::to_string(level) + "_" + std::to_string(m));
    if (!lambda) out.push_back("lambda" + std::to_string(level));
    return out;
  }

  std::vector<ConstraintSystem> systems() const {
    SystemOptions base;
    base.free = free_symbols();
    base.g1_terms = static_cast<int>(g1.size());
    base.complex_unknowns = complex_unknowns;
    std::vector<ConstraintSystem> out;
    if (mode == ProblemMode::Excited) {
      for (const StateRequest& r : states) {
        SystemOptions o = base;
        o.lambda_shared = r.lambda_shared;
        o.top_coefficient = r.top;
        out.push_back(excited_system(pinned_frame(), ground_guess(), r.level, o));
      }
    } else if (mode == ProblemMode::Degenerate) {
      SystemOptions o = base;
      o.companion_lambda_free = companion.has_lambda;
      o.companion_energy = companion.has_energy;
      if (companion.has_lambda && !companion.lambda) o.free.push_back("lambdat");
      for (std::size_t m = 0; m + 1 < companion.c.size(); ++m)
        if (companion.c[m]) throw ValidationFailed("companion coefficients below the top are always unknown");
      std::vector<cplx> cc;
      for (const Slot& s : companion.c) cc.push_back(s.value_or(1.0));
      o.top_coefficient = cc.back();
      const Ansatz guess(level, companion.lambda.value_or(0.0), cc, 0.0);
      out.push_back(degenerate_system(pinned_frame(), ground_guess(), guess, o));
    }
    return out;
  }
};

namespace detail {

inline Slot slot_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "?") return std::nullopt;
    throw ValidationFailed("unexpected string " + j.dump() + " (use \"?\" for an unknown)");
  }
  return complex_from_json(j);
}

inline std::vector<Slot> slots_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw ValidationFailed(std::string(what) + " must be an array");
  std::vector<Slot> out;
  for (const json& e : j) out.push_back(slot_from_json(e));
  return out;
}

inline bool any_complex(const std::vector<Slot>& v) {
  return std::any_of(v.begin(), v.end(), [](const Slot& s) { return s && s->imag() != 0.0; });
}

}  // namespace detail

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationFailed("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationFailed("malformed JSON in '" + path + "': " + e.what());
  }
}

inline ProblemSpec parse_problem(const json& j) {
  if (!j.is_object()) throw ValidationFailed("problem file must hold a JSON object");
  try {
    ProblemSpec p;
    p.name = j.value("name", p.name);
    const json& fj = j.at("frame");
    json frame_desc = fj;
    if (frame_desc.is_object()) frame_desc.erase("g1");
    p.frame = frame_from_json(frame_desc);
    if (fj.is_object() && fj.contains("g1")) p.g1 = detail::slots_from_json(fj.at("g1"), "frame.g1");
    if (j.contains("g1")) p.g1 = detail::slots_from_json(j.at("g1"), "g1");
    if (p.g1.empty()) throw ValidationFailed("problem needs g1 (in the frame or at top level)");

    const json& gj = j.at("ground");
    p.c = detail::slots_from_json(gj.at("c"), "ground.c");
    if (p.c.empty()) throw ValidationFailed("ground.c must not be empty");
    p.level = gj.value("level", static_cast<int>(p.c.size()) - 1);
    if (p.level < 0 || p.c.size() != static_cast<std::size_t>(p.level) + 1)
      throw ValidationFailed("ground.c must have level + 1 entries");
    if (!p.c.back() || *p.c.back() == cplx{})
      throw ValidationFailed("the top ground coefficient must be pinned and nonzero");
    p.lambda = gj.contains("lambda") ? detail::slot_from_json(gj.at("lambda")) : Slot(0.0);
    if (gj.contains("energy") && complex_from_json(gj.at("energy")) != cplx{})
      throw ValidationFailed("the ground energy is zero by construction");

    const std::string mode = j.value("mode", std::string("build"));
    if (mode == "build") {
      p.mode = ProblemMode::Build;
    } else if (mode == "excited") {
      p.mode = ProblemMode::Excited;
      for (const json& s : j.at("states")) {
        StateRequest r;
        r.level = s.at("level").get<int>();
        if (r.level <= p.level) throw ValidationFailed("excited levels must exceed the ground level");
        r.lambda_shared = s.value("lambda_shared", false);
        if (s.contains("top")) r.top = complex_from_json(s.at("top"));
        if (r.top == cplx{}) throw ValidationFailed("excited top coefficient must be nonzero");
        p.states.push_back(r);
      }
      if (p.states.empty()) throw ValidationFailed("excited mode needs at least one state");
    } else if (mode == "degenerate") {
      p.mode = ProblemMode::Degenerate;
      if (p.level < 1) throw ValidationFailed("a degenerate companion needs ground level >= 1");
      const json& cj = j.at("companion");
      p.companion.c = detail::slots_from_json(cj.at("c"), "companion.c");
      if (p.companion.c.size() != p.c.size())
        throw ValidationFailed("companion.c must have as many entries as ground.c");
      if (!p.companion.c.back() || *p.companion.c.back() == cplx{})
        throw ValidationFailed("the top companion coefficient must be pinned and nonzero");
      p.companion.has_lambda = cj.contains("lambda");
      if (p.companion.has_lambda) p.companion.lambda = detail::slot_from_json(cj.at("lambda"));
      p.companion.has_energy = cj.contains("energy");
    } else {
      throw ValidationFailed("unknown mode '" + mode + "'");
    }

    bool complex = detail::any_complex(p.g1) || detail::any_complex(p.c) ||
                   detail::any_complex(p.companion.c) ||
                   (p.lambda && p.lambda->imag() != 0.0) ||
                   (p.companion.lambda && p.companion.lambda->imag() != 0.0);
    p.complex_unknowns = j.value("complex", complex);

    if (j.contains("solver")) {
      const json& sj = j.at("solver");
      p.solver.starts = sj.value("starts", p.solver.starts);
      p.solver.seed = sj.value("seed", p.solver.seed);
      p.solver.tol_residual = sj.value("tol", p.solver.tol_residual);
      p.solver.max_iter = sj.value("max_iter", p.solver.max_iter);
      p.solver.jobs = sj.value("jobs", p.solver.jobs);
      if (sj.contains("default_box"))
        p.solver.default_box = {sj.at("default_box").at(0).get<double>(), sj.at("default_box").at(1).get<double>()};
      if (sj.contains("box"))
        for (const auto& [k, v] : sj.at("box").items()) p.solver.box[k] = {v.at(0).get<double>(), v.at(1).get<double>()};
    }
    if (j.contains("plot")) {
      const json& pj = j.at("plot");
      if (pj.contains("csv")) p.csv = pj.at("csv").get<std::string>();
      if (pj.contains("interval"))
        p.plot_interval = {pj.at("interval").at(0).get<double>(), pj.at("interval").at(1).get<double>()};
      p.plot_points = pj.value("points", p.plot_points);
      if (p.plot_points < 2) throw ValidationFailed("plot.points must be at least 2");
    }
    if (p.mode != ProblemMode::Build) p.systems();  // surfaces structural errors early
    return p;
  } catch (const json::exception& e) {
    throw ValidationFailed(std::string("malformed problem: ") + e.what());
  } catch (const UnknownFrame& e) {
    throw ValidationFailed(e.what());
  } catch (const std::invalid_argument& e) {
    throw ValidationFailed(e.what());
  }
}

/// The entry a solution describes: frame with the solved g1, the built
/// potential, the ground state and the solved excited or companion states.
inline CatalogEntry entry_from_solution(const ProblemSpec& p,
                                        const std::vector<ConstraintSystem>& systems,
                                        const Solution& sol) {
  const ConstraintSystem& first = systems.front();
  const Assignment& a = sol.assignment;
  CatalogEntry e;
  e.id = p.name;
  e.description = "solution of " + p.name;
  e.frame = p.frame.with_g1(first.g1(a));
  if (e.frame.has_samplers()) e.frame_name = e.frame.samplers()->name;
  const Ansatz ground = first.ground(a);
  e.potential = build_potential(e.frame, ground).v;
  e.states.push_back({ground, "ground"});
  for (const ConstraintSystem& s : systems) {
    Ansatz st = s.state(a);
    std::string label = "level " + std::to_string(s.state_level());
    if (s.kind() == SystemKind::Degenerate) {
      label = "companion";
      if (!s.options().companion_energy) {
        // Printed identity carries no energy; read it off the state.
        const PotentialExpr v{e.potential, e.frame};
        const Sampler ps = state_sampler(e.frame, st);
        st.energy = rayleigh_energy(potential_sampler(v), ps, decay_interval({ps})).pointwise;
      }
    }
    e.states.push_back({st, label});
  }
  e.chain_length = static_cast<int>(std::min<std::size_t>(e.states.size(), 3));
  const PotentialExpr v{e.potential, e.frame};
  bool complex_v = false;
  const auto grid = linspace(-5.0, 5.0, 101);
  for (double x : grid) complex_v = complex_v || std::abs(v(x).imag()) > 1e-12;
  e.pt_symmetric = complex_v && pt_symmetry_check(potential_sampler(v), grid) <= 1e-9;
  return e;
}

}  // namespace qes
