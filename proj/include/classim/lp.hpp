#pragma once

// Dense-basis revised simplex for equality-form linear programs.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <limits>
#include <random>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "classim/errors.hpp"
#include "classim/format.hpp"

namespace classim {

inline constexpr double kFree = -std::numeric_limits<double>::infinity();

/// max (or min) cᵀx subject to Ax = b, x_j ≥ 0 or x_j free.
struct LinearProgram {
  struct Row {
    std::vector<std::pair<int, double>> entries;
    double rhs = 0.0;
  };

  int num_vars = 0;
  bool maximize = true;
  std::vector<double> objective;  // size num_vars
  std::vector<double> lower;      // 0 or kFree, size num_vars
  std::vector<Row> rows;

  explicit LinearProgram(int n = 0, bool maximize_ = true)
      : num_vars(n), maximize(maximize_), objective(static_cast<std::size_t>(n), 0.0),
        lower(static_cast<std::size_t>(n), 0.0) {}

  int add_var(double cost = 0.0, double lb = 0.0) {
    objective.push_back(cost);
    lower.push_back(lb);
    return num_vars++;
  }

  int add_row(std::vector<std::pair<int, double>> entries, double rhs) {
    rows.push_back({std::move(entries), rhs});
    return static_cast<int>(rows.size()) - 1;
  }

  void validate() const {
    if (objective.size() != static_cast<std::size_t>(num_vars) ||
        lower.size() != static_cast<std::size_t>(num_vars)) {
      throw StructuralError("LP objective/bounds size does not match variable count");
    }
    for (int j = 0; j < num_vars; ++j) {
      const double c = objective[static_cast<std::size_t>(j)];
      const double l = lower[static_cast<std::size_t>(j)];
      if (!std::isfinite(c)) throw StructuralError("LP objective entry " + std::to_string(j) + " is not finite");
      if (!(l == 0.0 || l == kFree)) throw StructuralError("LP lower bound must be 0 or free");
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!std::isfinite(rows[i].rhs)) throw StructuralError("LP row " + std::to_string(i) + " rhs is not finite");
      for (auto [j, v] : rows[i].entries) {
        if (j < 0 || j >= num_vars) {
          throw StructuralError("LP row " + std::to_string(i) + " references variable " + std::to_string(j));
        }
        if (!std::isfinite(v)) throw StructuralError("LP row " + std::to_string(i) + " has a non-finite coefficient");
      }
    }
  }
};

enum class SolverStatus { optimal, infeasible, unbounded, max_iterations, numerical_failure };

inline const char* to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::optimal: return "optimal";
    case SolverStatus::infeasible: return "infeasible";
    case SolverStatus::unbounded: return "unbounded";
    case SolverStatus::max_iterations: return "max-iterations";
    case SolverStatus::numerical_failure: return "numerical-failure";
  }
  return "unknown";
}

struct SolverSolution {
  SolverStatus status = SolverStatus::numerical_failure;
  std::vector<double> primal;
  std::vector<double> dual;  // one per equality row
  double objective = 0.0;
  double dual_objective = 0.0;
  double gap = std::numeric_limits<double>::infinity();
  double primal_residual = std::numeric_limits<double>::infinity();
  double dual_infeasibility = std::numeric_limits<double>::infinity();
  long iterations = 0;
  std::string message;

  bool optimal() const { return status == SolverStatus::optimal; }
};

struct LpOptions {
  long max_pivots = 1000000;
  int refactor_every = 64;
  double pivot_tol = 1e-9;
  double artificial_pivot_tol = 1e-7;
  double feas_tol = 1e-9;
  double price_tol = 1e-10;
  int stall_limit = 100;
};

/// Revised simplex over min cᵀx, Ax = b (b ≥ 0), x ≥ 0 with an explicit dense
/// basis inverse. Columns may be appended between solves; the current basis
/// stays primal feasible, so re-solving only runs phase II.
class SimplexSolver {
 public:
  using Column = std::vector<std::pair<int, double>>;

  SimplexSolver(int rows, std::vector<double> rhs, LpOptions opt = {})
      : m_(rows), b_(std::move(rhs)), opt_(opt) {
    if (static_cast<int>(b_.size()) != m_) throw StructuralError("simplex: rhs size mismatch");
    row_sign_.assign(static_cast<std::size_t>(m_), 1.0);
    for (int i = 0; i < m_; ++i) {
      if (b_[static_cast<std::size_t>(i)] < 0) {
        row_sign_[static_cast<std::size_t>(i)] = -1.0;
        b_[static_cast<std::size_t>(i)] = -b_[static_cast<std::size_t>(i)];
      }
    }
    // Artificial columns occupy indices [0, m).
    for (int i = 0; i < m_; ++i) {
      cols_.push_back({{i, 1.0}});
      cost_.push_back(0.0);
    }
    basis_.resize(static_cast<std::size_t>(m_));
    for (int i = 0; i < m_; ++i) basis_[static_cast<std::size_t>(i)] = i;
    is_basic_.assign(static_cast<std::size_t>(m_), 1);
    binv_ = Eigen::MatrixXd::Identity(m_, m_);
    xb_ = Eigen::Map<const Eigen::VectorXd>(b_.data(), m_);
  }

  int rows() const { return m_; }
  int num_columns() const { return static_cast<int>(cols_.size()) - m_; }

  /// Appends a structural column (original row signs) and returns its index.
  int add_column(double cost, const Column& col) {
    Column c;
    c.reserve(col.size());
    for (auto [i, v] : col) {
      if (i < 0 || i >= m_) throw StructuralError("simplex: column row index out of range");
      if (v != 0.0) c.emplace_back(i, v * row_sign_[static_cast<std::size_t>(i)]);
    }
    cols_.push_back(std::move(c));
    cost_.push_back(cost);
    is_basic_.push_back(0);
    return static_cast<int>(cols_.size()) - 1 - m_;
  }

  /// Runs phase I (once) and phase II. Returns the status of the last phase.
  SolverStatus solve() {
    if (!phase1_done_) {
      const SolverStatus s = phase1();
      if (s != SolverStatus::optimal) return s;
      phase1_done_ = true;
    }
    for (int attempt = 0;; ++attempt) {
      const SolverStatus s = iterate(false, attempt < 4);
      if (s != SolverStatus::optimal || !perturbed_) return s;
      const SolverStatus d = remove_perturbation();
      if (d != SolverStatus::optimal) return d;
    }
  }

  long pivots() const { return pivots_; }

  /// Structural primal values.
  std::vector<double> primal() const {
    std::vector<double> x(static_cast<std::size_t>(num_columns()), 0.0);
    for (int i = 0; i < m_; ++i) {
      const int j = basis_[static_cast<std::size_t>(i)];
      if (j >= m_) x[static_cast<std::size_t>(j - m_)] = xb_(i);
    }
    return x;
  }

  /// Row duals y with Aᵀy ≤ c at optimality (original row signs).
  std::vector<double> dual() const {
    const Eigen::VectorXd y = duals_internal(false);
    std::vector<double> out(static_cast<std::size_t>(m_));
    for (int i = 0; i < m_; ++i) out[static_cast<std::size_t>(i)] = y(i) * row_sign_[static_cast<std::size_t>(i)];
    return out;
  }

  double objective() const {
    double z = 0.0;
    for (int i = 0; i < m_; ++i) z += cost_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] * xb_(i);
    return z;
  }

  /// Most negative reduced cost over structural columns (0 if none negative).
  double dual_infeasibility() const {
    const Eigen::VectorXd y = duals_internal(false);
    double worst = 0.0;
    for (int j = m_; j < static_cast<int>(cols_.size()); ++j) {
      worst = std::max(worst, -reduced_cost(j, y, false));
    }
    return worst;
  }

 private:
  double col_dot(int j, const Eigen::VectorXd& y) const {
    double s = 0.0;
    for (auto [i, v] : cols_[static_cast<std::size_t>(j)]) s += y(i) * v;
    return s;
  }

  double phase_cost(int j, bool phase_one) const {
    if (phase_one) return j < m_ ? 1.0 : 0.0;
    return j < m_ ? 0.0 : cost_[static_cast<std::size_t>(j)];
  }

  Eigen::VectorXd duals_internal(bool phase_one) const {
    Eigen::VectorXd cb(m_);
    for (int i = 0; i < m_; ++i) cb(i) = phase_cost(basis_[static_cast<std::size_t>(i)], phase_one);
    return binv_.transpose() * cb;
  }

  double reduced_cost(int j, const Eigen::VectorXd& y, bool phase_one) const {
    return phase_cost(j, phase_one) - col_dot(j, y);
  }

  Eigen::VectorXd ftran(int j) const {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(m_);
    for (auto [i, v] : cols_[static_cast<std::size_t>(j)]) a.noalias() += v * binv_.col(i);
    return a;
  }

  bool refactor() {
    Eigen::MatrixXd bmat = Eigen::MatrixXd::Zero(m_, m_);
    for (int i = 0; i < m_; ++i) {
      for (auto [r, v] : cols_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])]) bmat(r, i) = v;
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(bmat);
    const Eigen::VectorXd diag = lu.matrixLU().diagonal().cwiseAbs();
    if (m_ > 0 && diag.minCoeff() < 1e-13 * std::max(1.0, diag.maxCoeff())) return false;
    binv_ = lu.inverse();
    xb_ = binv_ * rhs();
    for (int i = 0; i < m_; ++i) {
      if (xb_(i) < 0.0 && xb_(i) > -opt_.feas_tol) xb_(i) = 0.0;
    }
    since_refactor_ = 0;
    return true;
  }

  void pivot(int r, int q, const Eigen::VectorXd& alpha) {
    const double ar = alpha(r);
    const double theta = xb_(r) / ar;
    xb_ -= theta * alpha;
    xb_(r) = theta;
    binv_.row(r) /= ar;
    for (int i = 0; i < m_; ++i) {
      if (i != r && alpha(i) != 0.0) binv_.row(i) -= alpha(i) * binv_.row(r);
    }
    is_basic_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(r)])] = 0;
    basis_[static_cast<std::size_t>(r)] = q;
    is_basic_[static_cast<std::size_t>(q)] = 1;
    ++pivots_;
    if (++since_refactor_ >= opt_.refactor_every) {
      if (!refactor()) throw SolverError("simplex: basis became singular during refactorization");
    }
  }

  Eigen::VectorXd rhs() const {
    Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(b_.data(), m_);
    if (perturbed_) b += shift_;
    return b;
  }

  // Lifts degenerate basic values to small random positive levels. The shift
  // is kept in b-space so refactorization preserves it.
  void perturb() {
    if (!perturbed_) shift_ = Eigen::VectorXd::Zero(m_);
    perturbed_ = true;
    std::mt19937_64 gen(static_cast<std::uint64_t>(pivots_));
    std::uniform_real_distribution<double> u(1e-7, 2e-7);
    for (int i = 0; i < m_; ++i) {
      const int j = basis_[static_cast<std::size_t>(i)];
      if (j < m_ || xb_(i) > opt_.feas_tol) continue;
      const double lifted = std::max(xb_(i), 0.0) + u(gen);
      for (auto [r, v] : cols_[static_cast<std::size_t>(j)]) shift_(r) += (lifted - xb_(i)) * v;
      xb_(i) = lifted;
    }
  }

  /// Restores the true right-hand side and repairs primal feasibility with
  /// dual simplex steps; the basis stays dual feasible throughout.
  SolverStatus remove_perturbation() {
    perturbed_ = false;
    xb_ = binv_ * rhs();
    for (;;) {
      if (pivots_ >= opt_.max_pivots) return SolverStatus::max_iterations;
      int r = -1;
      double worst = -opt_.feas_tol;
      for (int i = 0; i < m_; ++i) {
        if (xb_(i) < worst) {
          worst = xb_(i);
          r = i;
        }
      }
      if (r < 0) break;
      const Eigen::VectorXd y = duals_internal(false);
      const Eigen::VectorXd rho = binv_.row(r).transpose();
      int q = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int j = m_; j < static_cast<int>(cols_.size()); ++j) {
        if (is_basic_[static_cast<std::size_t>(j)]) continue;
        const double a = col_dot(j, rho);
        if (a >= -opt_.pivot_tol) continue;
        const double ratio = std::max(reduced_cost(j, y, false), 0.0) / -a;
        if (ratio < best) {
          best = ratio;
          q = j;
        }
      }
      if (q < 0) return SolverStatus::infeasible;
      pivot(r, q, ftran(q));
    }
    for (int i = 0; i < m_; ++i) xb_(i) = std::max(xb_(i), 0.0);
    return SolverStatus::optimal;
  }

  SolverStatus phase1() {
    SolverStatus s = iterate(true, false);
    if (s != SolverStatus::optimal) return s;
    double infeas = 0.0;
    for (int i = 0; i < m_; ++i) {
      if (basis_[static_cast<std::size_t>(i)] < m_) infeas += std::max(0.0, xb_(i));
    }
    double scale = 1.0;
    for (double v : b_) scale = std::max(scale, std::abs(v));
    if (infeas > 1e-7 * scale) return SolverStatus::infeasible;
    // Drive zero-level artificials out of the basis where possible; the ones
    // left sit on redundant rows.
    for (int r = 0; r < m_; ++r) {
      if (basis_[static_cast<std::size_t>(r)] >= m_) continue;
      const Eigen::VectorXd rho = binv_.row(r).transpose();
      int best = -1;
      double best_abs = 1e-7;
      for (int j = m_; j < static_cast<int>(cols_.size()); ++j) {
        if (is_basic_[static_cast<std::size_t>(j)]) continue;
        const double v = std::abs(col_dot(j, rho));
        if (v > best_abs) {
          best_abs = v;
          best = j;
        }
      }
      if (best >= 0) pivot(r, best, ftran(best));
    }
    return SolverStatus::optimal;
  }

  SolverStatus iterate(bool phase_one, bool allow_perturb) {
    int stalled = 0;
    bool bland = false;
    for (;;) {
      if (pivots_ >= opt_.max_pivots) return SolverStatus::max_iterations;
      const Eigen::VectorXd y = duals_internal(phase_one);
      int q = -1;
      double best = -opt_.price_tol;
      const int first = phase_one ? 0 : m_;
      for (int j = first; j < static_cast<int>(cols_.size()); ++j) {
        if (is_basic_[static_cast<std::size_t>(j)]) continue;
        const double dj = reduced_cost(j, y, phase_one);
        if (bland) {
          if (dj < -opt_.price_tol) {
            q = j;
            break;
          }
        } else if (dj < best) {
          best = dj;
          q = j;
        }
      }
      if (q < 0) return SolverStatus::optimal;
      const Eigen::VectorXd alpha = ftran(q);
      // Artificials stuck on redundant rows must stay at zero.
      int r = -1;
      if (!phase_one) {
        for (int i = 0; i < m_; ++i) {
          if (basis_[static_cast<std::size_t>(i)] < m_ && std::abs(alpha(i)) > opt_.artificial_pivot_tol) {
            r = i;
            break;
          }
        }
      }
      if (r < 0 && bland) {
        // Textbook ratio test; ties go to the lowest basic index (Bland).
        for (int i = 0; i < m_; ++i) {
          if (std::abs(xb_(i)) <= opt_.feas_tol) xb_(i) = 0.0;
        }
        double theta = std::numeric_limits<double>::infinity();
        for (int i = 0; i < m_; ++i) {
          if (alpha(i) > opt_.pivot_tol) theta = std::min(theta, std::max(xb_(i), 0.0) / alpha(i));
        }
        if (!std::isfinite(theta)) return SolverStatus::unbounded;
        for (int i = 0; i < m_; ++i) {
          if (alpha(i) > opt_.pivot_tol && std::max(xb_(i), 0.0) / alpha(i) <= theta + 1e-12 &&
              (r < 0 || basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(r)])) {
            r = i;
          }
        }
        if (xb_(r) < 0.0) xb_(r) = 0.0;
      } else if (r < 0) {
        // Harris two-pass ratio test.
        double theta_max = std::numeric_limits<double>::infinity();
        for (int i = 0; i < m_; ++i) {
          if (alpha(i) > opt_.pivot_tol) {
            theta_max = std::min(theta_max, (std::max(xb_(i), 0.0) + opt_.feas_tol) / alpha(i));
          }
        }
        if (!std::isfinite(theta_max)) return SolverStatus::unbounded;
        double best_alpha = 0.0;
        for (int i = 0; i < m_; ++i) {
          if (alpha(i) > opt_.pivot_tol && std::max(xb_(i), 0.0) / alpha(i) <= theta_max) {
            if (alpha(i) > best_alpha) {
              best_alpha = alpha(i);
              r = i;
            }
          }
        }
        if (r < 0) return SolverStatus::numerical_failure;
        if (xb_(r) < 0.0) xb_(r) = 0.0;
      }
      const bool degenerate = std::abs(xb_(r)) <= opt_.feas_tol;
      pivot(r, q, alpha);
      if (degenerate) {
        if (++stalled > opt_.stall_limit) {
          if (allow_perturb && !perturbed_) {
            perturb();
            stalled = 0;
          } else {
            bland = true;
          }
        }
      } else {
        stalled = 0;
        bland = false;
      }
    }
  }

  int m_;
  std::vector<double> b_;
  LpOptions opt_;
  std::vector<double> row_sign_;
  std::vector<Column> cols_;
  std::vector<double> cost_;
  std::vector<int> basis_;
  std::vector<char> is_basic_;
  Eigen::MatrixXd binv_;
  Eigen::VectorXd xb_;
  bool phase1_done_ = false;
  bool perturbed_ = false;
  Eigen::VectorXd shift_;
  long pivots_ = 0;
  int since_refactor_ = 0;
};

/// Solves an LP to the given tolerance. Status is optimal only when the
/// duality gap, primal residual and dual infeasibility are all within tol.
inline SolverSolution solve_lp(const LinearProgram& p, double tol = 1e-9, LpOptions opt = {}) {
  p.validate();
  const int m = static_cast<int>(p.rows.size());
  std::vector<double> rhs(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) rhs[static_cast<std::size_t>(i)] = p.rows[static_cast<std::size_t>(i)].rhs;

  std::vector<SimplexSolver::Column> cols(static_cast<std::size_t>(p.num_vars));
  for (int i = 0; i < m; ++i) {
    for (auto [j, v] : p.rows[static_cast<std::size_t>(i)].entries) {
      cols[static_cast<std::size_t>(j)].emplace_back(i, v);
    }
  }
  // Merge duplicate (row, var) entries.
  for (auto& c : cols) {
    std::sort(c.begin(), c.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    SimplexSolver::Column merged;
    for (auto [i, v] : c) {
      if (!merged.empty() && merged.back().first == i) {
        merged.back().second += v;
      } else {
        merged.emplace_back(i, v);
      }
    }
    c = std::move(merged);
  }

  const double sense = p.maximize ? -1.0 : 1.0;
  SimplexSolver s(m, rhs, opt);
  std::vector<std::pair<int, int>> split(static_cast<std::size_t>(p.num_vars), {-1, -1});
  for (int j = 0; j < p.num_vars; ++j) {
    const double c = sense * p.objective[static_cast<std::size_t>(j)];
    split[static_cast<std::size_t>(j)].first = s.add_column(c, cols[static_cast<std::size_t>(j)]);
    if (p.lower[static_cast<std::size_t>(j)] == kFree) {
      SimplexSolver::Column neg = cols[static_cast<std::size_t>(j)];
      for (auto& e : neg) e.second = -e.second;
      split[static_cast<std::size_t>(j)].second = s.add_column(-c, neg);
    }
  }

  SolverSolution sol;
  SolverStatus st;
  try {
    st = s.solve();
  } catch (const SolverError& e) {
    sol.status = SolverStatus::numerical_failure;
    sol.message = e.what();
    return sol;
  }
  sol.iterations = s.pivots();
  if (st == SolverStatus::infeasible || st == SolverStatus::unbounded || st == SolverStatus::max_iterations) {
    sol.status = st;
    sol.message = to_string(st);
    return sol;
  }

  const std::vector<double> xs = s.primal();
  sol.primal.assign(static_cast<std::size_t>(p.num_vars), 0.0);
  for (int j = 0; j < p.num_vars; ++j) {
    const auto [pos, neg] = split[static_cast<std::size_t>(j)];
    double v = xs[static_cast<std::size_t>(pos)];
    if (neg >= 0) v -= xs[static_cast<std::size_t>(neg)];
    sol.primal[static_cast<std::size_t>(j)] = v;
  }
  const std::vector<double> yi = s.dual();
  sol.dual.resize(yi.size());
  for (std::size_t i = 0; i < yi.size(); ++i) sol.dual[i] = sense * yi[i];

  double obj = 0.0;
  for (int j = 0; j < p.num_vars; ++j) obj += p.objective[static_cast<std::size_t>(j)] * sol.primal[static_cast<std::size_t>(j)];
  double dobj = 0.0;
  for (int i = 0; i < m; ++i) dobj += p.rows[static_cast<std::size_t>(i)].rhs * sol.dual[static_cast<std::size_t>(i)];
  double resid = 0.0;
  for (int i = 0; i < m; ++i) {
    double lhs = 0.0;
    for (auto [j, v] : p.rows[static_cast<std::size_t>(i)].entries) lhs += v * sol.primal[static_cast<std::size_t>(j)];
    resid = std::max(resid, std::abs(lhs - p.rows[static_cast<std::size_t>(i)].rhs));
  }
  for (int j = 0; j < p.num_vars; ++j) {
    if (p.lower[static_cast<std::size_t>(j)] == 0.0) resid = std::max(resid, -sol.primal[static_cast<std::size_t>(j)]);
  }
  sol.objective = obj;
  sol.dual_objective = dobj;
  sol.gap = std::abs(obj - dobj);
  sol.primal_residual = resid;
  sol.dual_infeasibility = s.dual_infeasibility();
  if (sol.gap <= tol && resid <= tol && sol.dual_infeasibility <= tol) {
    sol.status = SolverStatus::optimal;
  } else {
    sol.status = SolverStatus::numerical_failure;
    sol.message = "gap " + format_sig(sol.gap, 3) + ", residual " + format_sig(resid, 3) + ", dual infeasibility " +
                  format_sig(sol.dual_infeasibility, 3) + " exceed tolerance " + format_sig(tol, 3);
  }
  return sol;
}

/// Line-oriented text dump:
///   classim-lp 1
///   sense max|min
///   vars N
///   objective: idx coeff ...
///   free: idx ...
///   rows M
///   row: rhs | idx coeff ...
/// Numbers use shortest round-trip formatting, so parse(dump(p)) == p bit for bit.
inline void dump_lp(const LinearProgram& p, std::ostream& out) {
  out << "classim-lp 1\n";
  out << "sense " << (p.maximize ? "max" : "min") << "\n";
  out << "vars " << p.num_vars << "\n";
  out << "objective:";
  for (int j = 0; j < p.num_vars; ++j) {
    const double c = p.objective[static_cast<std::size_t>(j)];
    if (c != 0.0 || std::signbit(c)) out << ' ' << j << ' ' << format_exact(c);
  }
  out << "\nfree:";
  for (int j = 0; j < p.num_vars; ++j) {
    if (p.lower[static_cast<std::size_t>(j)] == kFree) out << ' ' << j;
  }
  out << "\nrows " << p.rows.size() << "\n";
  for (const auto& r : p.rows) {
    out << "row: " << format_exact(r.rhs) << " |";
    for (auto [j, v] : r.entries) out << ' ' << j << ' ' << format_exact(v);
    out << "\n";
  }
}

inline std::string dump_lp(const LinearProgram& p) {
  std::ostringstream s;
  dump_lp(p, s);
  return s.str();
}

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream s(line);
  std::vector<std::string> out;
  std::string tok;
  while (s >> tok) out.push_back(tok);
  return out;
}

inline std::string expect_line(std::istream& in, const std::string& what) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("unexpected end of input, expected " + what);
  return line;
}

inline std::string strip_prefix(const std::string& line, const std::string& prefix) {
  if (line.rfind(prefix, 0) != 0) throw ParseError("expected '" + prefix + "', got '" + line + "'");
  return line.substr(prefix.size());
}

}  // namespace detail

inline LinearProgram parse_lp(std::istream& in) {
  if (detail::expect_line(in, "header") != "classim-lp 1") throw ParseError("missing 'classim-lp 1' header");
  const std::string sense = detail::strip_prefix(detail::expect_line(in, "sense"), "sense ");
  if (sense != "max" && sense != "min") throw ParseError("sense must be max or min");
  const long n = parse_int(detail::strip_prefix(detail::expect_line(in, "vars"), "vars "));
  if (n < 0) throw ParseError("negative variable count");
  LinearProgram p(static_cast<int>(n), sense == "max");
  auto obj = detail::split_ws(detail::strip_prefix(detail::expect_line(in, "objective"), "objective:"));
  if (obj.size() % 2 != 0) throw ParseError("objective line needs index/value pairs");
  for (std::size_t t = 0; t < obj.size(); t += 2) {
    const long j = parse_int(obj[t]);
    if (j < 0 || j >= n) throw ParseError("objective index out of range");
    p.objective[static_cast<std::size_t>(j)] = parse_double(obj[t + 1]);
  }
  for (const auto& tok : detail::split_ws(detail::strip_prefix(detail::expect_line(in, "free"), "free:"))) {
    const long j = parse_int(tok);
    if (j < 0 || j >= n) throw ParseError("free index out of range");
    p.lower[static_cast<std::size_t>(j)] = kFree;
  }
  const long m = parse_int(detail::strip_prefix(detail::expect_line(in, "rows"), "rows "));
  if (m < 0) throw ParseError("negative row count");
  for (long i = 0; i < m; ++i) {
    const std::string body = detail::strip_prefix(detail::expect_line(in, "row"), "row: ");
    const auto bar = body.find('|');
    if (bar == std::string::npos) throw ParseError("row line missing '|'");
    LinearProgram::Row row;
    const auto rhs = detail::split_ws(body.substr(0, bar));
    if (rhs.size() != 1) throw ParseError("row line needs exactly one rhs value");
    row.rhs = parse_double(rhs[0]);
    const auto toks = detail::split_ws(body.substr(bar + 1));
    if (toks.size() % 2 != 0) throw ParseError("row entries need index/value pairs");
    for (std::size_t t = 0; t < toks.size(); t += 2) {
      const long j = parse_int(toks[t]);
      if (j < 0 || j >= n) throw ParseError("row index out of range");
      row.entries.emplace_back(static_cast<int>(j), parse_double(toks[t + 1]));
    }
    p.rows.push_back(std::move(row));
  }
  return p;
}

inline LinearProgram parse_lp(const std::string& text) {
  std::istringstream s(text);
  return parse_lp(s);
}

}  // namespace classim
