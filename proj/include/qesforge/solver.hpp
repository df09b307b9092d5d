#pragma once

// Damped Gauss-Newton with random multi-start over one or more constraint
// systems sharing unknowns by name.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qesforge/constraints.hpp"
#include "qesforge/errors.hpp"

namespace qes {

struct SolveOptions {
  int starts = 500;
  /// Sampling interval per unknown; names absent here use default_box.
  std::map<std::string, std::pair<double, double>> box;
  std::pair<double, double> default_box{-3.0, 3.0};
  int max_iter = 100;
  double tol_residual = 1e-10;
  double tol_dedup = 1e-6;
  double step_scale = 1.0;
  double backtrack = 0.5;
  int max_halvings = 30;
  std::uint64_t seed = 1;
  int jobs = 1;
};

struct Solution {
  Assignment assignment;
  double residual_norm = 0.0;
  int multiplicity_hint = 1;
  bool singular_jacobian = false;
};

/// Several systems stacked into one least-squares problem over a real vector.
class StackedSystem {
 public:
  explicit StackedSystem(std::vector<ConstraintSystem> systems) : systems_(std::move(systems)) {
    if (systems_.empty()) throw std::invalid_argument("no constraint systems given");
    for (const auto& s : systems_) {
      for (const auto& name : s.unknowns()) {
        auto it = std::find(names_.begin(), names_.end(), name);
        if (it == names_.end()) {
          names_.push_back(name);
          complex_.push_back(s.complex_unknowns());
        } else if (s.complex_unknowns()) {
          complex_[static_cast<std::size_t>(it - names_.begin())] = true;
        }
      }
      rows_ += s.residual_size();
    }
    for (bool c : complex_) dim_ += c ? 2 : 1;
  }

  const std::vector<ConstraintSystem>& systems() const noexcept { return systems_; }
  const std::vector<std::string>& names() const noexcept { return names_; }
  bool is_complex(std::size_t i) const noexcept { return complex_[i]; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t rows() const noexcept { return rows_; }

  Assignment to_assignment(const Eigen::VectorXd& x) const {
    Assignment a;
    Eigen::Index k = 0;
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (complex_[i]) {
        a[names_[i]] = {x[k], x[k + 1]};
        k += 2;
      } else {
        a[names_[i]] = x[k++];
      }
    }
    return a;
  }
  Eigen::VectorXd to_vector(const Assignment& a) const {
    Eigen::VectorXd x(static_cast<Eigen::Index>(dim_));
    Eigen::Index k = 0;
    for (std::size_t i = 0; i < names_.size(); ++i) {
      const cplx v = a.at(names_[i]);
      x[k++] = v.real();
      if (complex_[i]) x[k++] = v.imag();
    }
    return x;
  }

  Eigen::VectorXd residual(const Eigen::VectorXd& x) const {
    const Assignment a = to_assignment(x);
    Eigen::VectorXd r(static_cast<Eigen::Index>(rows_));
    Eigen::Index k = 0;
    for (const auto& s : systems_)
      for (double v : s.residual(a)) r[k++] = v;
    return r;
  }

  /// Finite-difference Jacobian; central differences when `central`.
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x, const Eigen::VectorXd& r0,
                           bool central = false) const {
    Eigen::MatrixXd J(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(dim_));
    for (Eigen::Index j = 0; j < J.cols(); ++j) {
      const double h = (central ? 1e-5 : 1e-7) * std::max(1.0, std::abs(x[j]));
      Eigen::VectorXd xp = x;
      xp[j] += h;
      if (central) {
        Eigen::VectorXd xm = x;
        xm[j] -= h;
        J.col(j) = (residual(xp) - residual(xm)) / (2.0 * h);
      } else {
        J.col(j) = (residual(xp) - r0) / h;
      }
    }
    return J;
  }

  double norm(const Assignment& a) const { return residual(to_vector(a)).norm(); }

 private:
  std::vector<ConstraintSystem> systems_;
  std::vector<std::string> names_;
  std::vector<bool> complex_;
  std::size_t dim_ = 0;
  std::size_t rows_ = 0;
};

namespace detail {

struct Trajectory {
  Eigen::VectorXd x;
  double norm;
};

// Gauss-Newton with Armijo backtracking on ||r||^2.
inline Trajectory gauss_newton(const StackedSystem& sys, Eigen::VectorXd x,
                               const SolveOptions& opts) {
  Eigen::VectorXd r = sys.residual(x);
  double f = r.squaredNorm();
  for (int it = 0; it < opts.max_iter && std::isfinite(f); ++it) {
    if (std::sqrt(f) < opts.tol_residual) break;
    const Eigen::MatrixXd J = sys.jacobian(x, r);
    const Eigen::VectorXd dx = opts.step_scale * J.completeOrthogonalDecomposition().solve(-r);
    if (!dx.allFinite()) break;
    double t = 1.0;
    bool accepted = false;
    for (int k = 0; k <= opts.max_halvings; ++k) {
      const Eigen::VectorXd xn = x + t * dx;
      const Eigen::VectorXd rn = sys.residual(xn);
      const double fn = rn.squaredNorm();
      if (std::isfinite(fn) && fn <= (1.0 - 1e-4 * t) * f) {
        x = xn;
        r = rn;
        f = fn;
        accepted = true;
        break;
      }
      t *= opts.backtrack;
    }
    if (!accepted) break;
  }
  return {x, std::isfinite(f) ? std::sqrt(f) : std::numeric_limits<double>::infinity()};
}

inline bool same_point(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double tol) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double scale = std::max({1.0, std::abs(a[i]), std::abs(b[i])});
    if (std::abs(a[i] - b[i]) > tol * scale) return false;
  }
  return true;
}

}  // namespace detail

/// Extra Gauss-Newton steps with a central-difference Jacobian. A point whose
/// Jacobian is numerically rank deficient is returned unchanged and flagged.
inline Solution polish(const Solution& sol, const StackedSystem& sys, double tol = 1e-14,
                       int max_steps = 20) {
  Eigen::VectorXd x = sys.to_vector(sol.assignment);
  Eigen::VectorXd r = sys.residual(x);
  Solution out = sol;
  out.residual_norm = r.norm();
  const Eigen::MatrixXd J0 = sys.jacobian(x, r, true);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(J0);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv[sv.size() - 1] <= 1e-9 * std::max(1.0, sv[0]) ||
      J0.rows() < J0.cols()) {
    out.singular_jacobian = true;
    return out;
  }
  for (int step = 0; step < max_steps && r.norm() > tol; ++step) {
    const Eigen::MatrixXd J = sys.jacobian(x, r, true);
    const Eigen::VectorXd dx = J.colPivHouseholderQr().solve(-r);
    const Eigen::VectorXd xn = x + dx;
    const Eigen::VectorXd rn = sys.residual(xn);
    if (!(rn.norm() < r.norm())) break;
    x = xn;
    r = rn;
  }
  out.assignment = sys.to_assignment(x);
  out.residual_norm = r.norm();
  return out;
}

inline Solution polish(const Solution& sol, const std::vector<ConstraintSystem>& systems,
                       double tol = 1e-14) {
  return polish(sol, StackedSystem(systems), tol);
}

struct SolveReport {
  std::vector<Solution> solutions;
  double best_residual = std::numeric_limits<double>::infinity();
  int converged_starts = 0;
};

/// Runs every start, keeps those below tol_residual, polishes and clusters
/// them. Does not throw; see solve() for the NoConvergence contract.
inline SolveReport solve_report(const std::vector<ConstraintSystem>& systems,
                                const SolveOptions& opts) {
  if (opts.starts < 1) throw std::invalid_argument("starts must be >= 1");
  if (!(opts.tol_residual > 0.0)) throw std::invalid_argument("tol_residual must be > 0");
  const StackedSystem sys(systems);

  std::vector<std::pair<double, double>> box;
  for (std::size_t i = 0; i < sys.names().size(); ++i) {
    auto it = opts.box.find(sys.names()[i]);
    const auto b = it == opts.box.end() ? opts.default_box : it->second;
    if (!(b.second > b.first)) throw std::invalid_argument("degenerate sampling box");
    box.push_back(b);
    if (sys.is_complex(i)) box.push_back(b);
  }

  std::vector<detail::Trajectory> runs(static_cast<std::size_t>(opts.starts));
  auto run_range = [&](int begin, int end) {
    for (int s = begin; s < end; ++s) {
      std::seed_seq seq{static_cast<std::uint32_t>(opts.seed), static_cast<std::uint32_t>(opts.seed >> 32),
                        static_cast<std::uint32_t>(s)};
      std::mt19937_64 rng(seq);
      Eigen::VectorXd x0(static_cast<Eigen::Index>(sys.dim()));
      for (Eigen::Index j = 0; j < x0.size(); ++j) {
        std::uniform_real_distribution<double> u(box[static_cast<std::size_t>(j)].first,
                                                 box[static_cast<std::size_t>(j)].second);
        x0[j] = u(rng);
      }
      runs[static_cast<std::size_t>(s)] = detail::gauss_newton(sys, x0, opts);
    }
  };
  const int jobs = std::max(1, std::min(opts.jobs, opts.starts));
  if (jobs == 1) {
    run_range(0, opts.starts);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (opts.starts + jobs - 1) / jobs;
    for (int j = 0; j < jobs; ++j)
      pool.emplace_back(run_range, j * chunk, std::min(opts.starts, (j + 1) * chunk));
    for (auto& t : pool) t.join();
  }

  SolveReport rep;
  std::vector<Eigen::VectorXd> reps;
  for (const auto& run : runs) {
    rep.best_residual = std::min(rep.best_residual, run.norm);
    if (!(run.norm < opts.tol_residual)) continue;
    ++rep.converged_starts;
    Solution sol{sys.to_assignment(run.x), run.norm, 1, false};
    sol = polish(sol, sys);
    const Eigen::VectorXd x = sys.to_vector(sol.assignment);
    bool merged = false;
    for (std::size_t k = 0; k < reps.size(); ++k) {
      if (detail::same_point(reps[k], x, opts.tol_dedup)) {
        ++rep.solutions[k].multiplicity_hint;
        merged = true;
        break;
      }
    }
    if (merged) continue;
    // Re-check against the original systems rather than trusting the run.
    sol.residual_norm = sys.norm(sol.assignment);
    if (!(sol.residual_norm < opts.tol_residual)) continue;
    reps.push_back(x);
    rep.solutions.push_back(std::move(sol));
  }
  std::sort(rep.solutions.begin(), rep.solutions.end(), [](const Solution& a, const Solution& b) {
    if (a.residual_norm != b.residual_norm) return a.residual_norm < b.residual_norm;
    for (auto ia = a.assignment.begin(), ib = b.assignment.begin();
         ia != a.assignment.end() && ib != b.assignment.end(); ++ia, ++ib) {
      if (ia->second.real() != ib->second.real()) return ia->second.real() < ib->second.real();
      if (ia->second.imag() != ib->second.imag()) return ia->second.imag() < ib->second.imag();
    }
    return false;
  });
  return rep;
}

/// Multi-start solve; throws NoConvergence when no start converges.
inline std::vector<Solution> solve(const std::vector<ConstraintSystem>& systems,
                                   const SolveOptions& opts = {}) {
  SolveReport rep = solve_report(systems, opts);
  if (rep.solutions.empty())
    throw NoConvergence("no start reached the residual tolerance", rep.best_residual);
  return std::move(rep.solutions);
}

}  // namespace qes
