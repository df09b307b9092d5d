#include <cmath>

#include <gtest/gtest.h>

#include "qesforge/io.hpp"
#include "qesforge/problem.hpp"

using namespace qes;

namespace {

std::string problem_path(const std::string& name) {
  return std::string(QESFORGE_SOURCE_DIR) + "/problems/" + name;
}

json minimal_problem() {
  return json::parse(R"({"frame": "rational-x", "g1": [0, 1], "ground": {"c": [0, 1], "lambda": 0.5}})");
}

}  // namespace

TEST(Json, ComplexForms) {
  EXPECT_EQ(complex_from_json(json(2.5)), cplx(2.5));
  EXPECT_EQ(complex_from_json(json::array({1.0, -2.0})), cplx(1.0, -2.0));
  EXPECT_THROW(complex_from_json(json("two")), ValidationFailed);
  EXPECT_THROW(complex_from_json(json::array({1.0})), ValidationFailed);
}

TEST(Json, EntryRoundTrip) {
  for (const std::string& id : catalog_ids()) {
    const CatalogEntry e = catalog_get(id);
    const CatalogEntry back = entry_from_json(json::parse(to_json(e).dump()));
    EXPECT_EQ(back.id, e.id);
    EXPECT_LT(coeff_distance(back.potential, e.potential), 1e-15) << id;
    ASSERT_EQ(back.states.size(), e.states.size());
    for (std::size_t k = 0; k < e.states.size(); ++k) {
      EXPECT_EQ(back.states[k].ansatz.c, e.states[k].ansatz.c);
      EXPECT_EQ(back.states[k].ansatz.lambda, e.states[k].ansatz.lambda);
      EXPECT_EQ(back.states[k].ansatz.energy, e.states[k].ansatz.energy);
      EXPECT_EQ(back.states[k].label, e.states[k].label);
    }
    EXPECT_EQ(back.pt_symmetric, e.pt_symmetric);
    EXPECT_EQ(back.frame_name, e.frame_name);
    EXPECT_TRUE(check_entry(back).pass()) << id;
  }
}

TEST(Json, FixtureFilesMatchCatalog) {
  for (const std::string& id : catalog_ids()) {
    const CatalogEntry fx = entry_from_json(read_json_file(std::string(QESFORGE_SOURCE_DIR) + "/fixtures/" + id + ".json"));
    EXPECT_LT(coeff_distance(fx.potential, catalog_get(id).potential), 1e-12) << id;
  }
}

TEST(Json, PrettyKeepsScalarArraysInline) {
  const json j{{"a", json::array({1, 2})}, {"b", json::array({json::array({1.0, 0.0})})}};
  const std::string s = pretty(j);
  EXPECT_NE(s.find("\"a\": [1, 2]"), std::string::npos) << s;
  EXPECT_NE(s.find("\"b\": [[1.0, 0.0]]"), std::string::npos) << s;
  EXPECT_EQ(json::parse(s), j);
}

TEST(Json, FormatPoly) {
  EXPECT_EQ(format_poly(Poly{-0.5, 0.0, 0.25}), "0.25*x^2 - 0.5");
  EXPECT_EQ(format_poly(Poly{1.0, -1.0}), "-x + 1");
  EXPECT_EQ(format_poly(Poly{}), "0");
}

TEST(Problem, ShippedProblemsParse) {
  for (const std::string& name : {"flagship-pinned.json", "flagship-search.json", "harmonic.json",
                                  "infeasible-four-state.json", "kt-search.json", "pt-degenerate.json"})
    EXPECT_NO_THROW(parse_problem(read_json_file(problem_path(name)))) << name;
}

TEST(Problem, MalformedFileRejected) {
  EXPECT_THROW(read_json_file(problem_path("malformed.json")), ValidationFailed);
  EXPECT_THROW(read_json_file(problem_path("does-not-exist.json")), ValidationFailed);
}

TEST(Problem, UnknownSlotsBecomeFreeSymbols) {
  json j = minimal_problem();
  j["g1"] = json::array({"?", 1});
  j["ground"]["lambda"] = "?";
  j["mode"] = "excited";
  j["states"] = json::array({json{{"level", 2}}});
  const ProblemSpec p = parse_problem(j);
  EXPECT_EQ(p.free_symbols(), (std::vector<std::string>{"g1_0", "lambda1"}));
  EXPECT_FALSE(p.fully_pinned());
  EXPECT_EQ(p.systems().size(), 1u);
}

TEST(Problem, ValidationErrors) {
  const auto bad = [](const std::function<void(json&)>& edit) {
    json j = minimal_problem();
    edit(j);
    return j;
  };
  EXPECT_NO_THROW(parse_problem(minimal_problem()));
  EXPECT_THROW(parse_problem(json::array()), ValidationFailed);
  EXPECT_THROW(parse_problem(bad([](json& j) { j.erase("g1"); })), ValidationFailed);
  EXPECT_THROW(parse_problem(bad([](json& j) { j["frame"] = "hyperbolic"; })), ValidationFailed);
  EXPECT_THROW(parse_problem(bad([](json& j) { j["ground"]["c"] = json::array({0, 0}); })), ValidationFailed);
  EXPECT_THROW(parse_problem(bad([](json& j) { j["ground"]["c"] = json::array({0, "?"}); })), ValidationFailed);
  EXPECT_THROW(parse_problem(bad([](json& j) { j["ground"]["level"] = 3; })), ValidationFailed);
  EXPECT_THROW(parse_problem(bad([](json& j) { j["ground"]["energy"] = 1.0; })), ValidationFailed);
  EXPECT_THROW(parse_problem(bad([](json& j) { j["ground"]["c"][0] = "x"; })), ValidationFailed);
  EXPECT_THROW(parse_problem(bad([](json& j) { j["mode"] = "sideways"; })), ValidationFailed);
  EXPECT_THROW(parse_problem(bad([](json& j) { j["mode"] = "excited"; })), ValidationFailed);
  EXPECT_THROW(parse_problem(bad([](json& j) {
                 j["mode"] = "excited";
                 j["states"] = json::array({json{{"level", 1}}});
               })),
               ValidationFailed);
  EXPECT_THROW(parse_problem(bad([](json& j) {
                 j["mode"] = "degenerate";
                 j["companion"] = json{{"c", json::array({"?"})}};
               })),
               ValidationFailed);
  EXPECT_THROW(parse_problem(bad([](json& j) { j["plot"] = json{{"points", 1}}; })), ValidationFailed);
}

TEST(Problem, PinnedBuildMatchesCatalog) {
  const ProblemSpec p = parse_problem(read_json_file(problem_path("flagship-pinned.json")));
  ASSERT_TRUE(p.fully_pinned());
  const PotentialExpr v = build_potential(p.pinned_frame(), p.ground_guess());
  EXPECT_LT(coeff_distance(v.v, catalog_get("flagship").potential), 1e-10);
}
