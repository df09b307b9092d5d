#include <cmath>

#include <Eigen/QR>
#include <gtest/gtest.h>

#include "qesforge/catalog.hpp"
#include "qesforge/problem.hpp"
#include "qesforge/solver.hpp"

using namespace qes;

namespace {

const double kC = flagship_c();
const double kSc = std::sqrt(kC);

Frame flagship_frame() { return standard_frame("rational-x").with_g1(Poly{0.0, kSc}); }
Ansatz flagship_ground() { return Ansatz(1, kSc - 0.5, {0.0, 1.0}); }

ProblemSpec load_problem(const std::string& name) {
  return parse_problem(read_json_file(std::string(QESFORGE_SOURCE_DIR) + "/problems/" + name));
}

bool same_solutions(const std::vector<Solution>& a, const std::vector<Solution>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].assignment != b[i].assignment || a[i].residual_norm != b[i].residual_norm ||
        a[i].multiplicity_hint != b[i].multiplicity_hint)
      return false;
  }
  return true;
}

const Solution* find_energy(const std::vector<Solution>& sols, const std::string& key, double e) {
  for (const Solution& s : sols)
    if (std::abs(s.assignment.at(key) - e) < 1e-6) return &s;
  return nullptr;
}

}  // namespace

TEST(Solver, LinearSystemInOneStep) {
  // The printed degenerate identity is linear in the companion coefficients.
  // One step lands at the finite-difference rounding floor; a second is exact.
  const ConstraintSystem s = degenerate_system(flagship_frame(), Ansatz(2, kSc - 0.5, {0.4, 0.0, 1.0}),
                                               Ansatz(2, kSc - 0.5, {1.0, 1.0, 1.0}));
  const StackedSystem st({s});
  SolveOptions o;
  o.max_iter = 1;
  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(st.dim()), 2.5);
  const double start = st.residual(x0).norm();
  const auto run = detail::gauss_newton(st, x0, o);
  EXPECT_LT(run.norm, 1e-7 * start);
  const Assignment a = st.to_assignment(run.x);
  EXPECT_LT(std::abs(a.at("ct_0") - 0.4), 1e-7);
  EXPECT_LT(std::abs(a.at("ct_1")), 1e-7);
  const auto again = detail::gauss_newton(st, run.x, o);
  EXPECT_LT(again.norm, 1e-13);
}

TEST(Solver, InfeasibleFourthLevelReportsBestResidual) {
  const ProblemSpec p = load_problem("infeasible-four-state.json");
  const auto systems = p.systems();
  try {
    solve(systems, p.solver);
    FAIL() << "expected NoConvergence";
  } catch (const NoConvergence& e) {
    EXPECT_GT(e.best_residual(), 1e-3);
  }
}

TEST(Solver, InfeasibleFourthLevelLowerBoundByEnergyScan) {
  // With the ground pinned the residual is affine in the new coefficients for
  // fixed E, so a least-squares solve per scanned E gives the exact profile.
  const ProblemSpec p = load_problem("infeasible-four-state.json");
  const ConstraintSystem s = p.systems().front();
  std::vector<std::string> cs;
  for (const auto& n : s.unknowns())
    if (n != "E4") cs.push_back(n);
  ASSERT_EQ(cs.size(), 4u);
  double lowest = std::numeric_limits<double>::infinity();
  for (double e = -10.0; e <= 20.0; e += 0.01) {
    Assignment a{{"E4", e}};
    for (const auto& n : cs) a[n] = 0.0;
    const auto r0v = s.residual(a);
    const Eigen::Map<const Eigen::VectorXd> r0(r0v.data(), static_cast<Eigen::Index>(r0v.size()));
    Eigen::MatrixXd A(r0.size(), static_cast<Eigen::Index>(cs.size()));
    for (std::size_t k = 0; k < cs.size(); ++k) {
      Assignment b = a;
      b[cs[k]] = 1.0;
      const auto rv = s.residual(b);
      A.col(static_cast<Eigen::Index>(k)) =
          Eigen::Map<const Eigen::VectorXd>(rv.data(), static_cast<Eigen::Index>(rv.size())) - r0;
    }
    const Eigen::VectorXd c = A.colPivHouseholderQr().solve(-r0);
    lowest = std::min(lowest, (A * c + r0).norm());
  }
  EXPECT_GT(lowest, 1e-2);
}

TEST(Solver, DeterministicUnderFixedSeed) {
  ProblemSpec p = load_problem("kt-search.json");
  p.solver.starts = 80;
  const auto systems = p.systems();
  const auto a = solve_report(systems, p.solver);
  const auto b = solve_report(systems, p.solver);
  EXPECT_TRUE(same_solutions(a.solutions, b.solutions));
  EXPECT_EQ(a.converged_starts, b.converged_starts);
  SolveOptions threaded = p.solver;
  threaded.jobs = 3;
  const auto c = solve_report(systems, threaded);
  EXPECT_TRUE(same_solutions(a.solutions, c.solutions));
}

TEST(Solver, DifferentSeedsStillFindTheReferenceCluster) {
  ProblemSpec p = load_problem("kt-search.json");
  p.solver.starts = 150;
  for (std::uint64_t seed : {3u, 11u}) {
    p.solver.seed = seed;
    const auto sols = solve(p.systems(), p.solver);
    EXPECT_NE(find_energy(sols, "E1", 6.0 - 3.0 * std::sqrt(3.0)), nullptr) << seed;
  }
}

TEST(Solver, ReportedSolutionsRecheckBelowTolerance) {
  ProblemSpec p = load_problem("kt-search.json");
  p.solver.starts = 80;
  const auto systems = p.systems();
  const StackedSystem st(systems);
  for (const Solution& s : solve(systems, p.solver)) {
    EXPECT_LT(st.norm(s.assignment), p.solver.tol_residual);
    EXPECT_GE(s.multiplicity_hint, 1);
  }
}

TEST(Solver, SortedByResidualThenAssignment) {
  ProblemSpec p = load_problem("kt-search.json");
  p.solver.starts = 80;
  const auto sols = solve(p.systems(), p.solver);
  for (std::size_t i = 1; i < sols.size(); ++i) EXPECT_LE(sols[i - 1].residual_norm, sols[i].residual_norm);
}

TEST(Solver, GaugeOfPinnedTopCoefficient) {
  SystemOptions o;
  const auto run = [&](double top) {
    o.top_coefficient = top;
    const ConstraintSystem s = excited_system(flagship_frame(), flagship_ground(), 3, o);
    SolveOptions so;
    so.starts = 300;
    so.seed = 5;
    const auto sols = solve({s}, so);
    const Solution* hit = find_energy(sols, "E3", -8.0 * kC + 12.0 * kSc);
    EXPECT_NE(hit, nullptr) << "top " << top;
    return hit ? *hit : Solution{};
  };
  const Solution one = run(1.0), two = run(2.0);
  if (one.assignment.empty() || two.assignment.empty()) return;
  EXPECT_LT(std::abs(one.assignment.at("E3") - two.assignment.at("E3")), 1e-9);
  EXPECT_LT(std::abs(one.assignment.at("lambda3") - two.assignment.at("lambda3")), 1e-9);
  for (int m = 0; m < 3; ++m) {
    const std::string k = "c3_" + std::to_string(m);
    EXPECT_LT(std::abs(2.0 * one.assignment.at(k) - two.assignment.at(k)), 1e-9) << k;
  }
}

TEST(Polish, DrivesPerturbedSolutionToMachinePrecision) {
  SystemOptions o;
  o.free = {"g1_0", "g1_1", "c1_0", "lambda1"};
  o.lambda_shared = true;
  const Frame f = standard_frame("rational-x").with_g1(Poly{0.0, 1.0});
  const ConstraintSystem s2 = excited_system(f, Ansatz(1, 0.0, {0.0, 1.0}), 2, o);
  o.lambda_shared = false;
  const ConstraintSystem s3 = excited_system(f, Ansatz(1, 0.0, {0.0, 1.0}), 3, o);
  Solution sol;
  sol.assignment = {{"g1_0", 1e-6},       {"g1_1", kSc + 2e-6},  {"c1_0", -1e-6},
                    {"lambda1", kSc - 0.5}, {"c2_0", -1.0},       {"c2_1", 1e-6},
                    {"E2", 2.0 * kSc},      {"c3_0", 0.0},        {"c3_1", 1.0 / (4.0 * kC / 3.0 - 2.0)},
                    {"c3_2", 0.0},          {"lambda3", 1.5 - kSc}, {"E3", -8.0 * kC + 12.0 * kSc}};
  const Solution out = polish(sol, std::vector<ConstraintSystem>{s2, s3});
  EXPECT_FALSE(out.singular_jacobian);
  EXPECT_LT(out.residual_norm, 1e-12);
  EXPECT_LT(std::abs(out.assignment.at("g1_1") - kSc), 1e-10);
  // A second polish leaves an exact point alone.
  const Solution again = polish(out, std::vector<ConstraintSystem>{s2, s3});
  EXPECT_LE(again.residual_norm, out.residual_norm);
  EXPECT_LT(std::abs(again.assignment.at("g1_1") - out.assignment.at("g1_1")), 1e-14);
}

TEST(Polish, SingularJacobianReturnedUnchanged) {
  SystemOptions o;
  o.free = {"g1_0", "g1_1", "c1_0", "lambda1"};
  const Frame f = standard_frame("rational-x").with_g1(Poly{0.0, 1.0});
  const ConstraintSystem s2 = excited_system(f, Ansatz(1, 0.0, {0.0, 1.0}), 2, o);
  Solution sol;
  sol.assignment = {{"g1_0", 0.0},  {"g1_1", 0.9},    {"c1_0", 0.0}, {"lambda1", 0.4},
                    {"c2_0", -1.0}, {"c2_1", 0.0},    {"lambda2", 0.4}, {"E2", 1.8}};
  const Solution out = polish(sol, std::vector<ConstraintSystem>{s2});
  EXPECT_TRUE(out.singular_jacobian);
  EXPECT_EQ(out.assignment, sol.assignment);
}

TEST(Solver, OptionValidation) {
  const ConstraintSystem s = excited_system(flagship_frame(), flagship_ground(), 2);
  SolveOptions o;
  o.starts = 0;
  EXPECT_THROW(solve_report({s}, o), std::invalid_argument);
  o.starts = 1;
  o.tol_residual = 0.0;
  EXPECT_THROW(solve_report({s}, o), std::invalid_argument);
  o.tol_residual = 1e-10;
  o.default_box = {1.0, 1.0};
  EXPECT_THROW(solve_report({s}, o), std::invalid_argument);
}
