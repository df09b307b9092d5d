#pragma once

// JSON forms of the core types. Complex numbers are [re, im] pairs and
// polynomials are arrays of them, lowest degree first. nlohmann::json keeps
// object keys sorted, so output is stable.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qesforge/catalog.hpp"
#include "qesforge/errors.hpp"
#include "qesforge/frame.hpp"
#include "qesforge/poly.hpp"
#include "qesforge/potential.hpp"
#include "qesforge/solver.hpp"
#include "qesforge/suite.hpp"

namespace qes {

using json = nlohmann::json;

inline json to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline cplx complex_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw ValidationFailed("expected a number or [re, im], got " + j.dump());
}

inline json to_json(const Poly& p) {
  json out = json::array();
  for (cplx c : p.coeffs()) out.push_back(to_json(c));
  return out;
}

inline Poly poly_from_json(const json& j) {
  if (!j.is_array()) throw ValidationFailed("expected a coefficient array, got " + j.dump());
  std::vector<cplx> c;
  for (const json& e : j) c.push_back(complex_from_json(e));
  return Poly(std::move(c));
}

/// Short human-readable form of a polynomial in `var`.
inline std::string format_poly(const Poly& p, const std::string& var = "x") {
  std::ostringstream os;
  os.precision(10);
  bool first = true;
  for (std::size_t k = p.size(); k-- > 0;) {
    cplx c = p[k];
    if (c == cplx{}) continue;
    const bool real = c.imag() == 0.0;
    if (!first) {
      if (real && c.real() < 0) {
        os << " - ";
        c = -c;
      } else {
        os << " + ";
      }
    }
    first = false;
    const bool unit = real && std::abs(c.real()) == 1.0 && k > 0;
    if (!real)
      os << "(" << c.real() << (c.imag() < 0 ? "-" : "+") << std::abs(c.imag()) << "i)";
    else if (unit)
      os << (c.real() < 0 ? "-" : "");
    else
      os << c.real();
    if (k >= 1) os << (unit ? "" : "*") << var;
    if (k >= 2) os << "^" << k;
  }
  return first ? "0" : os.str();
}

/// Indented JSON that keeps arrays of scalars (and of [re, im] pairs) on
/// one line.
inline std::string pretty(const json& j, int indent = 0) {
  const auto flat = [](const json& a) {
    if (!a.is_array()) return false;
    for (const json& e : a) {
      if (e.is_structured() && !(e.is_array() && std::all_of(e.begin(), e.end(),
                                                             [](const json& x) { return x.is_primitive(); })))
        return false;
    }
    return true;
  };
  const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
  const std::string close(static_cast<std::size_t>(indent), ' ');
  if (j.is_object()) {
    if (j.empty()) return "{}";
    std::string out = "{\n";
    bool first = true;
    for (const auto& [k, v] : j.items()) {
      if (!first) out += ",\n";
      first = false;
      out += pad + json(k).dump() + ": " + pretty(v, indent + 2);
    }
    return out + "\n" + close + "}";
  }
  if (j.is_array() && !flat(j)) {
    std::string out = "[\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i) out += ",\n";
      out += pad + pretty(j[i], indent + 2);
    }
    return out + "\n" + close + "]";
  }
  std::string out = j.dump();
  if (j.is_array()) {
    // dump() is compact; add a space after separating commas for reading.
    std::string spaced;
    bool in_string = false;
    for (char ch : out) {
      if (ch == '"') in_string = !in_string;
      spaced += ch;
      if (ch == ',' && !in_string) spaced += ' ';
    }
    out = spaced;
  }
  return out;
}

inline json to_json(const RationalFn& r) {
  return {{"num", to_json(r.num())},
          {"den", to_json(r.den())},
          {"printed", "(" + format_poly(r.num()) + ") / (" + format_poly(r.den()) + ")"}};
}

inline RationalFn rational_from_json(const json& j) {
  if (!j.is_object() || !j.contains("num")) throw ValidationFailed("rational function needs \"num\"");
  const Poly den = j.contains("den") ? poly_from_json(j.at("den")) : Poly::constant(1.0);
  return RationalFn(poly_from_json(j.at("num")), den);
}

inline json to_json(const Frame& f) {
  json out{{"M", f.M()},
           {"g1", to_json(f.g1())},
           {"f0", to_json(f.f0())},
           {"f1", to_json(f.f1())},
           {"h1", to_json(f.h1())}};
  if (f.has_samplers() && !f.samplers()->name.empty()) out["samplers"] = f.samplers()->name;
  return out;
}

/// Frame from a descriptor. Arrays absent from the descriptor are taken from
/// the named built-in; without a built-in the basis must be h = x.
inline Frame frame_from_json(const json& j) {
  if (j.is_string()) return standard_frame(j.get<std::string>());
  if (!j.is_object()) throw ValidationFailed("frame must be a name or a descriptor object");
  std::optional<Frame> base;
  if (j.contains("samplers")) base = standard_frame(j.at("samplers").get<std::string>());
  const auto array = [&](const char* key, const Poly* fallback) {
    if (j.contains(key)) return poly_from_json(j.at(key));
    if (fallback) return *fallback;
    throw ValidationFailed(std::string("frame descriptor lacks \"") + key + "\"");
  };
  const Poly g1 = j.contains("g1") ? poly_from_json(j.at("g1")) : Poly{};
  const Poly f0 = array("f0", base ? &base->f0() : nullptr);
  const Poly f1 = array("f1", base ? &base->f1() : nullptr);
  const Poly h1 = array("h1", base ? &base->h1() : nullptr);
  std::optional<FrameSamplers> samplers;
  if (base) {
    samplers = base->samplers();
  } else if (h1 == Poly::constant(1.0)) {
    samplers = FrameSamplers{"", [f0](double x) { return f0(cplx(x)); },
                             [](double x) { return cplx(x); }, {}};
  }
  Frame out(g1, f0, f1, h1, samplers);
  if (j.contains("M") && j.at("M").get<int>() < out.M())
    throw ValidationFailed("frame descriptor M is smaller than its arrays");
  return out;
}

inline json to_json(const Ansatz& a) {
  json c = json::array();
  for (cplx v : a.c) c.push_back(to_json(v));
  return {{"level", a.level}, {"lambda", to_json(a.lambda)}, {"c", c}, {"energy", to_json(a.energy)}};
}

inline Ansatz ansatz_from_json(const json& j) {
  std::vector<cplx> c;
  for (const json& e : j.at("c")) c.push_back(complex_from_json(e));
  const int level = j.contains("level") ? j.at("level").get<int>() : static_cast<int>(c.size()) - 1;
  try {
    return Ansatz(level, complex_from_json(j.value("lambda", json(0.0))), std::move(c),
                  complex_from_json(j.value("energy", json(0.0))));
  } catch (const std::invalid_argument& e) {
    throw ValidationFailed(e.what());
  }
}

inline json partial_fractions_json(const PotentialExpr& v) {
  json out = json::array();
  try {
    for (const FPiece& p : partial_fractions(v)) out.push_back({{"f_power", p.power}, {"poly", to_json(p.poly)}});
  } catch (const NotFExpressible&) {
    return nullptr;
  }
  return out;
}

inline json to_json(const CatalogEntry& e) {
  json states = json::array();
  for (const CatalogState& s : e.states) {
    json js = to_json(s.ansatz);
    js["label"] = s.label;
    states.push_back(js);
  }
  json pot = to_json(e.potential);
  pot["partial_fractions"] = partial_fractions_json(PotentialExpr{e.potential, e.frame});
  return {{"id", e.id},
          {"description", e.description},
          {"frame", to_json(e.frame)},
          {"potential", pot},
          {"states", states},
          {"pt_symmetric", e.pt_symmetric},
          {"physical", e.physical},
          {"chain_length", e.chain_length}};
}

inline CatalogEntry entry_from_json(const json& j) {
  try {
    CatalogEntry e;
    e.id = j.value("id", std::string("unnamed"));
    e.description = j.value("description", std::string());
    e.frame = frame_from_json(j.at("frame"));
    if (e.frame.has_samplers()) e.frame_name = e.frame.samplers()->name;
    e.potential = rational_from_json(j.at("potential"));
    for (const json& s : j.at("states"))
      e.states.push_back({ansatz_from_json(s), s.value("label", std::string())});
    e.pt_symmetric = j.value("pt_symmetric", false);
    e.physical = j.value("physical", true);
    e.chain_length = j.value("chain_length", static_cast<int>(std::min<std::size_t>(e.states.size(), 3)));
    return e;
  } catch (const json::exception& ex) {
    throw ValidationFailed(std::string("malformed entry: ") + ex.what());
  }
}

inline json to_json(const Assignment& a) {
  json out = json::object();
  for (const auto& [k, v] : a) out[k] = to_json(v);
  return out;
}

inline json to_json(const EigenpairReport& r) {
  json poles = json::array();
  for (double p : r.pole_report) poles.push_back(p);
  return {{"symbolic_residual_max", r.symbolic_residual_max},
          {"grid_residual_max", r.grid_residual_max},
          {"normalizable", r.normalizable},
          {"decay_rate", std::isfinite(r.decay_rate) ? json(r.decay_rate) : json(nullptr)},
          {"poles", poles},
          {"energy", to_json(r.energy)}};
}

inline json to_json(const EntryReport& r) {
  json states = json::array();
  for (const StateCheck& s : r.states) {
    json js = to_json(s.report);
    js["label"] = s.label;
    js["claimed_energy"] = to_json(s.claimed_energy);
    js["energy_error"] = s.energy_error;
    states.push_back(js);
  }
  json overlaps = json::array();
  for (const OverlapCheck& o : r.overlaps) overlaps.push_back({{"a", o.a}, {"b", o.b}, {"overlap", o.overlap}});
  json out{{"id", r.id},
           {"interval", {r.interval.first, r.interval.second}},
           {"potential_mismatch", r.potential_mismatch},
           {"states", states},
           {"overlaps", overlaps},
           {"failures", r.failures},
           {"pass", r.pass()}};
  if (r.pt_deviation) out["pt_deviation"] = *r.pt_deviation;
  return out;
}

}  // namespace qes
