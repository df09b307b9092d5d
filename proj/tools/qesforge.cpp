// qesforge: build, solve, verify and analyse quasi-exactly solvable potentials.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qesforge/catalog.hpp"
#include "qesforge/errors.hpp"
#include "qesforge/io.hpp"
#include "qesforge/potential.hpp"
#include "qesforge/problem.hpp"
#include "qesforge/solver.hpp"
#include "qesforge/suite.hpp"
#include "qesforge/susy.hpp"
#include "qesforge/uexpr.hpp"
#include "qesforge/verify.hpp"

#ifndef QESFORGE_DEFAULT_FIXTURES
#define QESFORGE_DEFAULT_FIXTURES "fixtures"
#endif

namespace fs = std::filesystem;
using namespace qes;

namespace {

enum Exit { kOk = 0, kValidation = 2, kNoConvergence = 3, kVerifyFailed = 4, kBranchCollision = 5 };

void emit(const json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << pretty(j) << "\n";
    return;
  }
  std::ofstream f(out);
  if (!f) throw ValidationFailed("cannot write '" + out + "'");
  f << pretty(j) << "\n";
}

fs::path fixture_dir() {
  if (const char* env = std::getenv("QESFORGE_FIXTURES"); env && *env) return env;
  return QESFORGE_DEFAULT_FIXTURES;
}

/// Entry from the fixture directory when a file exists there, else built in.
std::pair<CatalogEntry, std::string> load_entry(const std::string& id) {
  const fs::path file = fixture_dir() / (id + ".json");
  if (fs::exists(file)) return {entry_from_json(read_json_file(file.string())), file.string()};
  return {catalog_get(id), "built-in"};
}

void write_csv(const std::string& path, const std::vector<double>& xs, const std::vector<cplx>& v,
               const std::vector<std::vector<cplx>>& states) {
  std::ofstream f(path);
  if (!f) throw ValidationFailed("cannot write '" + path + "'");
  f << "x,V_re,V_im";
  for (std::size_t k = 0; k < states.size(); ++k) f << ",psi" << k + 1 << "_re,psi" << k + 1 << "_im";
  f << "\n" << std::setprecision(12);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    f << xs[i] << "," << v[i].real() << "," << v[i].imag();
    for (const auto& s : states) f << "," << s[i].real() << "," << s[i].imag();
    f << "\n";
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(3) << std::scientific << v;
  return os.str();
}

std::string fmt(cplx z) {
  std::ostringstream os;
  os << std::setprecision(10) << z.real();
  if (std::abs(z.imag()) > 1e-12) os << (z.imag() < 0 ? "-" : "+") << std::abs(z.imag()) << "i";
  return os.str();
}

void print_report(const EntryReport& r, const std::string& source) {
  std::cout << "entry " << r.id << " (" << source << ")  interval [" << r.interval.first << ", "
            << r.interval.second << "]  potential mismatch " << fmt(r.potential_mismatch) << "\n";
  for (std::size_t k = 0; k < r.states.size(); ++k) {
    const StateCheck& s = r.states[k];
    std::cout << "  state " << k << "  symbolic " << fmt(s.report.symbolic_residual_max) << "  grid "
              << fmt(s.report.grid_residual_max) << "  normalizable "
              << (s.report.normalizable ? "yes" : "no") << "  E claimed " << fmt(s.claimed_energy)
              << " measured " << fmt(s.report.energy) << "\n";
  }
  for (const OverlapCheck& o : r.overlaps)
    std::cout << "  overlap " << o.a << "-" << o.b << "  " << fmt(o.overlap) << "\n";
  if (r.pt_deviation) std::cout << "  PT deviation " << fmt(*r.pt_deviation) << "\n";
  for (const std::string& f : r.failures) std::cout << "  FAIL " << f << "\n";
  std::cout << "  " << (r.pass() ? "PASS" : "FAIL") << "\n";
}

// ---- build ---------------------------------------------------------------

int cmd_build(const std::string& file, const std::string& out, const std::string& csv_flag) {
  const ProblemSpec p = parse_problem(read_json_file(file));
  if (!p.fully_pinned()) throw ValidationFailed("build needs a fully pinned ground ansatz");
  const Frame frame = p.pinned_frame();
  Ansatz ground = p.ground_guess();
  const PotentialExpr v = build_potential(frame, ground);
  json pot = to_json(v.v);
  pot["partial_fractions"] = partial_fractions_json(v);
  emit({{"name", p.name}, {"frame", to_json(frame)}, {"ground", to_json(ground)}, {"potential", pot}}, out);

  const std::string csv = !csv_flag.empty() ? csv_flag : p.csv.value_or("");
  if (!csv.empty()) {
    if (!frame.has_samplers()) throw ValidationFailed("plot output needs frame samplers");
    const auto xs = linspace(p.plot_interval.first, p.plot_interval.second, p.plot_points);
    const Sampler psi = state_sampler(frame, ground);
    std::vector<cplx> vs, ps;
    for (double x : xs) {
      try {
        vs.push_back(v(x));
      } catch (const NearPole&) {
        vs.push_back(cplx(std::nan(""), std::nan("")));
      }
      ps.push_back(psi(x));
    }
    write_csv(csv, xs, vs, {ps});
  }
  return kOk;
}

// ---- solve ---------------------------------------------------------------

struct SolveFlags {
  std::optional<std::uint64_t> seed;
  std::optional<int> starts, jobs;
  std::optional<double> tol;
  bool raw = false;
};

int cmd_solve(const std::string& file, const std::string& out, const SolveFlags& fl) {
  ProblemSpec p = parse_problem(read_json_file(file));
  if (p.mode == ProblemMode::Build) throw ValidationFailed("problem has no solve target (mode \"build\")");
  if (fl.seed) p.solver.seed = *fl.seed;
  if (fl.starts) p.solver.starts = *fl.starts;
  if (fl.jobs) p.solver.jobs = *fl.jobs;
  if (fl.tol) p.solver.tol_residual = *fl.tol;
  if (p.solver.starts < 1 || p.solver.jobs < 1 || !(p.solver.tol_residual > 0))
    throw ValidationFailed("starts, jobs and tol must be positive");

  const auto systems = p.systems();
  const SolveReport rep = solve_report(systems, p.solver);
  if (rep.solutions.empty())
    throw NoConvergence("no start reached the residual tolerance", rep.best_residual);

  json sols = json::array();
  int discarded = 0;
  for (const Solution& s : rep.solutions) {
    std::optional<CatalogEntry> entry;
    std::vector<std::string> failures;
    try {
      entry = entry_from_solution(p, systems, s);
      const EntryReport r = check_entry(*entry);
      failures = r.failures;
    } catch (const std::exception& e) {
      failures.push_back(e.what());
    }
    const bool ok = failures.empty();
    if (!ok && !fl.raw) {
      ++discarded;
      continue;
    }
    json js{{"assignment", to_json(s.assignment)},
            {"residual_norm", s.residual_norm},
            {"multiplicity", s.multiplicity_hint},
            {"singular_jacobian", s.singular_jacobian},
            {"verified", ok}};
    if (entry) js["entry"] = to_json(*entry);
    if (!ok) js["failures"] = failures;
    sols.push_back(js);
  }
  emit({{"problem", p.name},
        {"seed", p.solver.seed},
        {"starts", p.solver.starts},
        {"tol", p.solver.tol_residual},
        {"best_residual", rep.best_residual},
        {"converged_starts", rep.converged_starts},
        {"clusters", rep.solutions.size()},
        {"discarded_unverified", discarded},
        {"raw", fl.raw},
        {"solutions", sols}},
       out);
  return kOk;
}

// ---- verify --------------------------------------------------------------

int cmd_verify(const std::string& target, const std::string& out) {
  std::vector<std::pair<CatalogEntry, std::string>> entries;
  if (fs::exists(target)) {
    const json j = read_json_file(target);
    if (j.contains("solutions")) {
      for (const json& s : j.at("solutions")) {
        if (!s.contains("entry")) throw ValidationFailed("solution without an entry");
        entries.emplace_back(entry_from_json(s.at("entry")), target);
      }
    } else {
      entries.emplace_back(entry_from_json(j), target);
    }
  } else {
    entries.push_back(load_entry(target));
  }
  json reports = json::array();
  bool all = true;
  for (const auto& [e, src] : entries) {
    const EntryReport r = check_entry(e);
    print_report(r, src);
    reports.push_back(to_json(r));
    all = all && r.pass();
  }
  if (!out.empty()) emit({{"reports", reports}, {"pass", all}}, out);
  return all ? kOk : kVerifyFailed;
}

// ---- susy ----------------------------------------------------------------

json zeros_json(const std::vector<ZeroInfo>& zs) {
  json out = json::array();
  for (const ZeroInfo& z : zs) out.push_back({{"location", to_json(z.location)}, {"order", z.order}});
  return out;
}

json classification_json(const UFunction& uf, const Interval& iv) {
  try {
    const UClassification c = classify_u(uf, iv);
    json zeros = json::array(), signs = json::array();
    for (const RealZero& z : c.zeros)
      zeros.push_back({{"x", z.x}, {"order", z.order}, {"derivative_sign", z.derivative_sign}});
    for (const SignInterval& s : c.signs)
      signs.push_back({{"lo", std::isfinite(s.lo) ? json(s.lo) : json("-inf")},
                       {"hi", std::isfinite(s.hi) ? json(s.hi) : json("inf")},
                       {"sign", s.sign}});
    return {{"zeros", zeros}, {"signs", signs}, {"real_poles", c.real_poles},
            {"admissible", c.admissible}, {"reason", c.reason}};
  } catch (const ComplexValuedOnInterval&) {
    return {{"admissible", false}, {"reason", "U is complex-valued on the real axis"}};
  }
}

int susy_entry(const std::string& id, const std::string& out, const std::string& csv) {
  const auto [e, src] = load_entry(id);
  std::vector<Ansatz> states;
  for (std::size_t k = 0; k < e.states.size() && k < static_cast<std::size_t>(e.chain_length); ++k)
    states.push_back(e.states[k].ansatz);
  const auto chain = chain_from_states(e.frame, states);
  const auto grid = linspace(-4.975, 4.975, 50);
  json ws = json::array(), ric = json::array();
  for (const Superpotential& w : chain) ws.push_back(to_json(w.w));
  for (std::size_t k = 0; k + 1 < chain.size(); ++k)
    ric.push_back(riccati_residual(chain[k], chain[k + 1], states[k].energy, states[k + 1].energy, grid));
  UFunction uf;
  json j{{"id", e.id}, {"source", src}, {"chain", ws}, {"riccati_residuals", ric}};
  if (chain.size() == 3) {
    const Superpotential a = w_plus(chain[0], chain[1]), b = w_plus(chain[1], chain[2]);
    uf = u_function(a, b);
    j["master_residual"] = master_residual(a, b, states[1].energy, states[2].energy, grid);
  } else {
    uf = u_function(w_plus(chain[0], chain[1]));
  }
  j["u"] = to_json(uf.u);
  j["u_zeros"] = zeros_json(uf.zeros);
  j["u_poles"] = zeros_json(uf.poles);
  j["classification"] = classification_json(uf, {-10.0, 10.0});
  emit(j, out);
  if (!csv.empty()) {
    const auto xs = linspace(-4.975, 4.975, 200);
    const PotentialExpr v{e.potential, e.frame};
    std::vector<cplx> vs;
    for (double x : xs) vs.push_back(v(x));
    std::vector<std::vector<cplx>> ps;
    for (int k = 0; k < static_cast<int>(chain.size()); ++k) ps.push_back(partner_state(chain, k, xs));
    write_csv(csv, xs, vs, ps);
  }
  return kOk;
}

struct SusyFlags {
  std::string u, energies, branch = "both", grid = "-4.975,4.975,200";
  std::vector<std::string> consts;
  bool allow_collision = false;
};

std::vector<double> parse_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (tok.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ValidationFailed(std::string("bad number '") + tok + "' in " + what);
    }
  }
  return out;
}

int susy_u(const SusyFlags& fl, const std::string& out, const std::string& csv) {
  const UExpression expr(fl.u);
  const std::vector<double> e = parse_list(fl.energies, "--energies");
  if (e.size() != 2 && e.size() != 3) throw ValidationFailed("--energies takes two or three values");
  const bool two_state = e.size() == 2;
  const cplx e1 = e[1] - e[0];
  const cplx e2 = two_state ? cplx(0.0) : cplx(e[2] - e[0]);
  const auto g = parse_list(fl.grid, "--grid");
  if (g.size() != 3 || g[2] < 3 || !(g[1] > g[0])) throw ValidationFailed("--grid is a,b,n with a < b, n >= 3");
  const auto xs = linspace(g[0], g[1], static_cast<int>(g[2]));
  std::vector<int> branches;
  if (fl.branch == "both") branches = {0, 1};
  else if (fl.branch == "0" || fl.branch == "1") branches = {std::stoi(fl.branch)};
  else throw ValidationFailed("--branch is 0, 1 or both");

  std::map<std::string, cplx> bound;
  for (const std::string& kv : fl.consts) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ValidationFailed("--const takes name=value");
    bound[kv.substr(0, eq)] = parse_list(kv.substr(eq + 1), "--const").at(0);
  }
  std::vector<std::string> unbound;
  for (const auto& n : expr.constants())
    if (!bound.count(n)) unbound.push_back(n);

  json j{{"u", fl.u}, {"energies", e}, {"two_state", two_state}};
  std::vector<std::map<std::string, cplx>> settings;
  if (unbound.size() > 1) throw ValidationFailed("at most one constant may be left for tuning");
  if (unbound.size() == 1) {
    if (two_state) throw ValidationFailed("tuning needs three energies");
    const std::string name = unbound.front();
    const auto family = [&](double c) {
      auto b = bound;
      b[name] = c;
      return expr.evaluate(b);
    };
    json tuning = json::array();
    for (const TunedConstant& t : tune_double_zero(family, e1, e2)) {
      tuning.push_back({{"constant", name}, {"target_curvature", to_json(t.target_curvature)},
                        {"value", t.value}, {"x0", t.x0}, {"converged", t.converged}});
      if (!t.converged) continue;
      auto b = bound;
      b[name] = t.value;
      settings.push_back(b);
    }
    j["tuning"] = tuning;
  } else {
    settings.push_back(bound);
  }

  json runs = json::array();
  bool csv_written = false;
  for (const auto& b : settings) {
    const RationalFn u = expr.evaluate(b);
    json consts = json::object();
    for (const auto& [k, v] : b) consts[k] = to_json(v);
    json sing = json::array();
    if (!two_state) {
      for (const ZeroInfo& z : UFunction(u).zeros) {
        if (z.order != 2 || std::abs(z.location.imag()) > 1e-8) continue;
        for (int br : {0, 1})
          sing.push_back({{"x0", z.location.real()}, {"branch", br},
                          {"coefficient", to_json(singular_coefficient(u, e1, e2, z.location.real(), br))}});
      }
    }
    for (int br : branches) {
      json run{{"constants", consts}, {"branch", br}, {"double_zero_singularities", sing}};
      BranchOptions bo;
      bo.branch = br;
      bo.two_state = two_state;
      bo.skip_collisions = fl.allow_collision;
      try {
        const SusyFromUResult r = susy_from_U(u, e1, e2, xs, bo);
        json diags = json::array();
        for (const WDiagnostics& d : r.diagnostics)
          diags.push_back({{"name", d.name}, {"finite", d.finite}, {"poles", d.poles},
                           {"decays_left", d.decays_left}, {"decays_right", d.decays_right}});
        run["status"] = "ok";
        run["bounded_states"] = r.bounded_states;
        run["swap_events"] = r.swap_events.size();
        run["collisions_skipped"] = r.collisions;
        run["diagnostics"] = diags;
        if (r.potential_poly) {
          run["potential"] = to_json(*r.potential_poly);
          run["potential_printed"] = format_poly(*r.potential_poly);
        } else {
          run["potential"] = nullptr;
        }
        if (!csv.empty() && !csv_written) {
          // Ground state from the sampled W_L by trapezoidal integration.
          std::vector<cplx> psi(r.x.size());
          cplx acc = 0.0;
          psi[0] = 1.0;
          for (std::size_t i = 1; i < r.x.size(); ++i) {
            acc += 0.5 * (r.w_l[i] + r.w_l[i - 1]) * (r.x[i] - r.x[i - 1]);
            psi[i] = std::exp(-acc);
          }
          write_csv(csv, r.x, r.v, {psi});
          csv_written = true;
        }
      } catch (const NoRealBranch& ex) {
        run["status"] = "no real branch";
        run["message"] = ex.what();
        run["bounded_states"] = false;
      }
      runs.push_back(run);
    }
  }
  bool physical = false;
  for (const json& r : runs) physical = physical || r.at("bounded_states").get<bool>();
  j["runs"] = runs;
  j["physical"] = physical;
  emit(j, out);
  return kOk;
}

// ---- catalog -------------------------------------------------------------

int cmd_catalog_list() {
  for (const std::string& id : catalog_ids())
    std::cout << std::left << std::setw(16) << id << catalog_get(id).description << "\n";
  return kOk;
}

int cmd_catalog_verify(const std::vector<std::string>& ids_in, bool all, const std::string& out) {
  std::vector<std::string> ids = ids_in;
  if (all || ids.empty()) ids = catalog_ids();
  json reports = json::array();
  bool ok = true;
  for (const std::string& id : ids) {
    const auto [e, src] = load_entry(id);
    const EntryReport r = check_entry(e);
    print_report(r, src);
    reports.push_back(to_json(r));
    ok = ok && r.pass();
  }
  if (!out.empty()) emit({{"reports", reports}, {"pass", ok}}, out);
  return ok ? kOk : kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Construct and check quasi-exactly solvable Schrodinger potentials"};
  app.require_subcommand(1);
  std::string out;

  auto* build = app.add_subcommand("build", "Build the potential of a pinned problem file");
  std::string build_file, build_csv;
  build->add_option("problem", build_file, "Problem JSON")->required();
  build->add_option("--out", out, "Write JSON here instead of stdout");
  build->add_option("--csv", build_csv, "Write a plot table here");

  auto* solve = app.add_subcommand("solve", "Solve a problem file for its unknowns");
  std::string solve_file;
  SolveFlags sf;
  solve->add_option("problem", solve_file, "Problem JSON")->required();
  solve->add_option("--seed", sf.seed, "Random seed");
  solve->add_option("--starts", sf.starts, "Number of random starts");
  solve->add_option("--tol", sf.tol, "Residual acceptance threshold");
  solve->add_option("--jobs", sf.jobs, "Worker threads");
  solve->add_option("--out", out, "Write JSON here instead of stdout");
  solve->add_flag("--raw", sf.raw, "Keep solutions that fail verification");

  auto* verify = app.add_subcommand("verify", "Check a catalog entry, entry file or solve output");
  std::string verify_target;
  verify->add_option("target", verify_target, "Catalog id or JSON file")->required();
  verify->add_option("--out", out, "Write the JSON report here");

  auto* susy = app.add_subcommand("susy", "Superpotential chain of an entry, or the chain implied by U");
  std::string susy_target, susy_csv;
  SusyFlags uf;
  susy->add_option("entry", susy_target, "Catalog id");
  susy->add_option("--u", uf.u, "Rational expression for U in x");
  susy->add_option("--energies", uf.energies, "E_L,E_L+1[,E_L+2]");
  susy->add_option("--const", uf.consts, "name=value binding for a constant in U");
  susy->add_option("--branch", uf.branch, "0, 1 or both");
  susy->add_option("--grid", uf.grid, "a,b,n sampling grid");
  susy->add_flag("--allow-collision", uf.allow_collision, "Skip points where the two roots meet");
  susy->add_option("--out", out, "Write JSON here instead of stdout");
  susy->add_option("--csv", susy_csv, "Write a plot table here");

  auto* catalog = app.add_subcommand("catalog", "Built-in worked examples");
  catalog->require_subcommand(1);
  auto* cat_list = catalog->add_subcommand("list", "List entry ids");
  auto* cat_show = catalog->add_subcommand("show", "Print an entry as JSON");
  std::string show_id;
  cat_show->add_option("id", show_id, "Entry id")->required();
  cat_show->add_option("--out", out, "Write JSON here instead of stdout");
  auto* cat_verify = catalog->add_subcommand("verify", "Run the full check on entries");
  std::vector<std::string> verify_ids;
  bool verify_all = false;
  cat_verify->add_option("ids", verify_ids, "Entry ids");
  cat_verify->add_flag("--all", verify_all, "Every entry");
  cat_verify->add_option("--out", out, "Write the JSON report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (build->parsed()) return cmd_build(build_file, out, build_csv);
    if (solve->parsed()) return cmd_solve(solve_file, out, sf);
    if (verify->parsed()) return cmd_verify(verify_target, out);
    if (susy->parsed()) {
      if (!uf.u.empty()) {
        if (uf.energies.empty()) throw ValidationFailed("--u needs --energies");
        return susy_u(uf, out, susy_csv);
      }
      if (susy_target.empty()) throw ValidationFailed("susy needs an entry id or --u");
      return susy_entry(susy_target, out, susy_csv);
    }
    if (cat_list->parsed()) return cmd_catalog_list();
    if (cat_show->parsed()) {
      emit(to_json(load_entry(show_id).first), out);
      return kOk;
    }
    if (cat_verify->parsed()) return cmd_catalog_verify(verify_ids, verify_all, out);
  } catch (const NoConvergence& e) {
    std::cerr << "error: " << e.what() << " (best residual " << e.best_residual() << ")\n";
    return kNoConvergence;
  } catch (const BranchCollision& e) {
    std::cerr << "error: " << e.what() << " (pass --allow-collision to skip such points)\n";
    return kBranchCollision;
  } catch (const ValidationFailed& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const UnknownEntry& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const UnknownFrame& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kOk;
}
