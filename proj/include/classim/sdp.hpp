#pragma once

// Primal-dual interior point method for small dense block SDPs.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "classim/errors.hpp"
#include "classim/format.hpp"
#include "classim/linalg.hpp"
#include "classim/lp.hpp"

namespace classim {

/// One equality ⟨A, X⟩ = rhs, with A given per block (absent blocks are zero).
struct SdpConstraint {
  std::vector<std::pair<int, RMatrix>> terms;
  double rhs = 0.0;
};

/// max Σ_b ⟨C_b, X_b⟩ s.t. Σ_b ⟨A_ib, X_b⟩ = b_i, X_b ⪰ 0 (real symmetric).
/// Dual: min bᵀy s.t. Σ_i y_i A_i − C = Z ⪰ 0.
struct SemidefiniteProgram {
  std::vector<int> block_dims;
  std::vector<RMatrix> objective;
  std::vector<SdpConstraint> constraints;

  int add_block(int dim) {
    block_dims.push_back(dim);
    objective.push_back(RMatrix::Zero(dim, dim));
    return static_cast<int>(block_dims.size()) - 1;
  }

  void validate() const {
    if (block_dims.empty()) throw StructuralError("SDP needs at least one block");
    if (objective.size() != block_dims.size()) throw StructuralError("SDP objective/block count mismatch");
    auto check = [&](const RMatrix& a, int b, const std::string& what) {
      if (b < 0 || b >= static_cast<int>(block_dims.size())) throw StructuralError(what + ": block index out of range");
      const int n = block_dims[static_cast<std::size_t>(b)];
      if (a.rows() != n || a.cols() != n) throw StructuralError(what + ": block size mismatch");
      if (!a.allFinite()) throw StructuralError(what + ": non-finite entry");
      if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw StructuralError(what + ": not symmetric");
    };
    for (std::size_t b = 0; b < block_dims.size(); ++b) {
      if (block_dims[b] < 1) throw StructuralError("SDP block dimension must be >= 1");
      check(objective[b], static_cast<int>(b), "objective");
    }
    for (std::size_t i = 0; i < constraints.size(); ++i) {
      for (const auto& [b, a] : constraints[i].terms) check(a, b, "constraint " + std::to_string(i));
      if (!std::isfinite(constraints[i].rhs)) throw StructuralError("constraint rhs is not finite");
    }
  }
};

struct SdpSolution {
  SolverStatus status = SolverStatus::numerical_failure;
  std::vector<RMatrix> x;
  std::vector<RMatrix> z;
  std::vector<double> y;
  double objective = 0.0;
  double dual_objective = 0.0;
  double gap = std::numeric_limits<double>::infinity();
  double primal_residual = std::numeric_limits<double>::infinity();
  double dual_residual = std::numeric_limits<double>::infinity();
  double min_eigenvalue = 0.0;
  int iterations = 0;
  std::string message;

  bool optimal() const { return status == SolverStatus::optimal; }
};

struct SdpOptions {
  int max_iterations = 200;
  double step_fraction = 0.98;
};

/// Real embedding E(H) = [[Re H, −Im H], [Im H, Re H]].
inline RMatrix embed_complex(const CMatrix& h) {
  const Eigen::Index d = h.rows();
  RMatrix e(2 * d, 2 * d);
  e.topLeftCorner(d, d) = h.real();
  e.topRightCorner(d, d) = -h.imag();
  e.bottomLeftCorner(d, d) = h.imag();
  e.bottomRightCorner(d, d) = h.real();
  return e;
}

/// Coefficient matrix for a complex block: ⟨½E(A), E(N)⟩ = Tr(AN) for Hermitian A, N.
inline RMatrix complex_term(const CMatrix& a) {
  const RMatrix e = 0.5 * embed_complex(a);
  return 0.5 * (e + e.transpose());
}

/// Recovers the Hermitian matrix from a real 2d×2d block.
inline CMatrix extract_complex(const RMatrix& x) {
  const Eigen::Index d = x.rows() / 2;
  const RMatrix re = 0.5 * (x.topLeftCorner(d, d) + x.bottomRightCorner(d, d));
  const RMatrix im = 0.5 * (x.bottomLeftCorner(d, d) - x.topRightCorner(d, d));
  CMatrix h(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) h(i, j) = Complex(re(i, j), im(i, j));
  }
  return 0.5 * (h + h.adjoint());
}

namespace detail {

inline double inner(const RMatrix& a, const RMatrix& b) { return (a.array() * b.array()).sum(); }

inline RMatrix sym(const RMatrix& a) { return 0.5 * (a + a.transpose()); }

/// Largest α ≤ 1 with X + α·dX ⪰ 0, scaled by `fraction`. Returns −1 when X
/// itself is not positive definite.
inline double max_step(const RMatrix& x, const RMatrix& dx, double fraction) {
  Eigen::LLT<RMatrix> llt(x);
  if (llt.info() != Eigen::Success) return -1.0;
  const RMatrix linv = llt.matrixL().solve(RMatrix::Identity(x.rows(), x.cols()));
  const RMatrix m = sym(linv * dx * linv.transpose());
  const double lam = Eigen::SelfAdjointEigenSolver<RMatrix>(m, Eigen::EigenvaluesOnly).eigenvalues()(0);
  if (lam >= 0.0) return 1.0;
  return std::min(1.0, -fraction / lam);
}

}  // namespace detail

/// Infeasible-start HKM primal-dual path following with Mehrotra
/// predictor-corrector. Status is optimal when the duality gap and both
/// residuals are within tol.
inline SdpSolution solve_sdp(const SemidefiniteProgram& p, double tol = 1e-8, SdpOptions opt = {}) {
  p.validate();
  const std::size_t nb = p.block_dims.size();
  const int m = static_cast<int>(p.constraints.size());
  int ntot = 0;
  for (int d : p.block_dims) ntot += d;

  // Constraint matrices per block (dense, zero when absent).
  std::vector<std::vector<const RMatrix*>> amat(static_cast<std::size_t>(m), std::vector<const RMatrix*>(nb, nullptr));
  std::vector<RMatrix> owned;
  std::size_t term_count = 0;
  for (const auto& c : p.constraints) term_count += c.terms.size();
  owned.reserve(term_count);
  for (int i = 0; i < m; ++i) {
    for (const auto& [b, a] : p.constraints[static_cast<std::size_t>(i)].terms) {
      auto& slot = amat[static_cast<std::size_t>(i)][static_cast<std::size_t>(b)];
      if (slot) {
        owned.push_back(*slot + a);
        slot = &owned.back();
      } else {
        slot = &a;
      }
    }
  }
  Eigen::VectorXd b(m);
  for (int i = 0; i < m; ++i) b(i) = p.constraints[static_cast<std::size_t>(i)].rhs;

  auto apply_a = [&](const std::vector<RMatrix>& x) {
    Eigen::VectorXd r(m);
    for (int i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < nb; ++k) {
        if (const RMatrix* a = amat[static_cast<std::size_t>(i)][k]) s += detail::inner(*a, x[k]);
      }
      r(i) = s;
    }
    return r;
  };
  auto apply_at = [&](const Eigen::VectorXd& y) {
    std::vector<RMatrix> out;
    for (std::size_t k = 0; k < nb; ++k) out.push_back(RMatrix::Zero(p.block_dims[k], p.block_dims[k]));
    for (int i = 0; i < m; ++i) {
      for (std::size_t k = 0; k < nb; ++k) {
        if (const RMatrix* a = amat[static_cast<std::size_t>(i)][k]) out[k] += y(i) * *a;
      }
    }
    return out;
  };

  double norm_a = 0.0;
  double max_b = 0.0;
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < nb; ++k) {
      if (const RMatrix* a = amat[static_cast<std::size_t>(i)][k]) s += a->squaredNorm();
    }
    norm_a = std::max(norm_a, std::sqrt(s));
    max_b = std::max(max_b, (1.0 + std::abs(b(i))) / (1.0 + std::sqrt(s)));
  }
  double norm_c = 0.0;
  for (const auto& c : p.objective) norm_c = std::max(norm_c, c.norm());
  const double rn = std::sqrt(static_cast<double>(ntot));
  const double x0 = std::max({10.0, rn, rn * max_b});
  const double z0 = std::max({10.0, rn, norm_c, norm_a});

  std::vector<RMatrix> x, z;
  for (int d : p.block_dims) {
    x.push_back(x0 * RMatrix::Identity(d, d));
    z.push_back(z0 * RMatrix::Identity(d, d));
  }
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);

  SdpSolution sol;
  auto evaluate = [&]() {
    double pobj = 0.0;
    for (std::size_t k = 0; k < nb; ++k) pobj += detail::inner(p.objective[k], x[k]);
    const double dobj = b.dot(y);
    const Eigen::VectorXd rp = b - apply_a(x);
    const auto aty = apply_at(y);
    double rd = 0.0;
    for (std::size_t k = 0; k < nb; ++k) {
      rd = std::max(rd, (p.objective[k] - aty[k] + z[k]).cwiseAbs().maxCoeff());
    }
    sol.objective = pobj;
    sol.dual_objective = dobj;
    sol.gap = std::abs(dobj - pobj);
    sol.primal_residual = m > 0 ? rp.cwiseAbs().maxCoeff() : 0.0;
    sol.dual_residual = rd;
  };
  auto finish = [&](SolverStatus st, std::string msg) {
    sol.status = st;
    sol.message = std::move(msg);
    sol.x = x;
    sol.z = z;
    sol.y.assign(y.data(), y.data() + y.size());
    double lam = std::numeric_limits<double>::infinity();
    for (const auto& xb : x) {
      lam = std::min(lam, Eigen::SelfAdjointEigenSolver<RMatrix>(detail::sym(xb), Eigen::EigenvaluesOnly).eigenvalues()(0));
    }
    sol.min_eigenvalue = lam;
    return sol;
  };

  for (int it = 0; it < opt.max_iterations; ++it) {
    sol.iterations = it;
    evaluate();
    if (sol.gap <= tol && sol.primal_residual <= tol && sol.dual_residual <= tol) {
      return finish(SolverStatus::optimal, "");
    }
    double xz = 0.0;
    for (std::size_t k = 0; k < nb; ++k) xz += detail::inner(x[k], z[k]);
    const double mu = xz / ntot;

    const Eigen::VectorXd rp = b - apply_a(x);
    const auto aty = apply_at(y);
    std::vector<RMatrix> rd(nb), zinv(nb);
    for (std::size_t k = 0; k < nb; ++k) {
      rd[k] = p.objective[k] - aty[k] + z[k];
      Eigen::LLT<RMatrix> llt(z[k]);
      if (llt.info() != Eigen::Success) return finish(SolverStatus::numerical_failure, "dual slack lost definiteness");
      zinv[k] = detail::sym(llt.solve(RMatrix::Identity(p.block_dims[k], p.block_dims[k])));
    }

    // Schur complement M_ij = ⟨A_i, X A_j Z⁻¹⟩.
    Eigen::MatrixXd schur = Eigen::MatrixXd::Zero(m, m);
    for (int j = 0; j < m; ++j) {
      std::vector<RMatrix> g(nb);
      for (std::size_t k = 0; k < nb; ++k) {
        if (const RMatrix* a = amat[static_cast<std::size_t>(j)][k]) g[k] = x[k] * *a * zinv[k];
      }
      for (int i = 0; i <= j; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < nb; ++k) {
          const RMatrix* a = amat[static_cast<std::size_t>(i)][k];
          if (a && g[k].size() > 0) s += detail::inner(*a, g[k]);
        }
        schur(i, j) = s;
        schur(j, i) = s;
      }
    }
    // Near the optimum the Schur matrix can become numerically singular; a
    // small diagonal shift keeps the factorization usable.
    Eigen::LDLT<Eigen::MatrixXd> ldlt(schur);
    auto usable = [&]() {
      return ldlt.info() == Eigen::Success && (m == 0 || ldlt.vectorD().cwiseAbs().minCoeff() > 1e-300);
    };
    const double diag_max = m > 0 ? schur.diagonal().cwiseAbs().maxCoeff() : 0.0;
    for (double shift = 1e-14; !usable() && shift <= 1e-8; shift *= 100.0) {
      ldlt.compute(schur + shift * diag_max * Eigen::MatrixXd::Identity(m, m));
    }
    if (!usable()) return finish(SolverStatus::numerical_failure, "Schur complement is singular (dependent constraints?)");

    auto direction = [&](const std::vector<RMatrix>& comp, std::vector<RMatrix>& dx, std::vector<RMatrix>& dz,
                         Eigen::VectorXd& dy) {
      // comp is the target complementarity (σμI − corrections); ΔX = comp·Z⁻¹ − X − XΔZZ⁻¹.
      std::vector<RMatrix> rhs_mat(nb);
      for (std::size_t k = 0; k < nb; ++k) rhs_mat[k] = comp[k] * zinv[k] - x[k] + x[k] * rd[k] * zinv[k];
      const Eigen::VectorXd rhs = apply_a(rhs_mat) - rp;
      dy = ldlt.solve(rhs);
      const auto atdy = apply_at(dy);
      dx.resize(nb);
      dz.resize(nb);
      for (std::size_t k = 0; k < nb; ++k) {
        dz[k] = detail::sym(atdy[k] - rd[k]);
        dx[k] = detail::sym(comp[k] * zinv[k] - x[k] - x[k] * dz[k] * zinv[k]);
      }
    };
    auto steps = [&](const std::vector<RMatrix>& dx, const std::vector<RMatrix>& dz, double frac) {
      double ap = 1.0, ad = 1.0;
      for (std::size_t k = 0; k < nb; ++k) {
        const double sp = detail::max_step(x[k], dx[k], frac);
        const double sd = detail::max_step(z[k], dz[k], frac);
        if (sp < 0 || sd < 0) return std::pair<double, double>{-1.0, -1.0};
        ap = std::min(ap, sp);
        ad = std::min(ad, sd);
      }
      return std::pair<double, double>{ap, ad};
    };

    // Predictor.
    std::vector<RMatrix> comp(nb);
    for (std::size_t k = 0; k < nb; ++k) comp[k] = RMatrix::Zero(p.block_dims[k], p.block_dims[k]);
    std::vector<RMatrix> dxa, dza;
    Eigen::VectorXd dya;
    direction(comp, dxa, dza, dya);
    auto [apa, ada] = steps(dxa, dza, 1.0);
    if (apa < 0) return finish(SolverStatus::numerical_failure, "iterate lost definiteness");
    double xz_aff = 0.0;
    for (std::size_t k = 0; k < nb; ++k) xz_aff += detail::inner(x[k] + apa * dxa[k], z[k] + ada * dza[k]);
    const double ratio = std::clamp(xz_aff / xz, 0.0, 1.0);
    const double sigma = ratio * ratio * ratio;

    // Corrector.
    for (std::size_t k = 0; k < nb; ++k) {
      comp[k] = sigma * mu * RMatrix::Identity(p.block_dims[k], p.block_dims[k]) - dxa[k] * dza[k];
    }
    std::vector<RMatrix> dx, dz;
    Eigen::VectorXd dy;
    direction(comp, dx, dz, dy);
    auto [ap, ad] = steps(dx, dz, opt.step_fraction);
    if (ap < 0) return finish(SolverStatus::numerical_failure, "iterate lost definiteness");
    for (std::size_t k = 0; k < nb; ++k) {
      x[k] = detail::sym(x[k] + ap * dx[k]);
      z[k] = detail::sym(z[k] + ad * dz[k]);
    }
    y += ad * dy;
    if (ap < 1e-12 && ad < 1e-12) {
      evaluate();
      return finish(SolverStatus::numerical_failure,
                    "step length collapsed (gap " + format_sig(sol.gap, 3) + ", primal residual " +
                        format_sig(sol.primal_residual, 3) + ", dual residual " + format_sig(sol.dual_residual, 3) + ")");
    }
  }
  evaluate();
  sol.iterations = opt.max_iterations;
  return finish(SolverStatus::max_iterations,
                "iteration limit reached (gap " + format_sig(sol.gap, 3) + ", primal residual " +
                    format_sig(sol.primal_residual, 3) + ", dual residual " + format_sig(sol.dual_residual, 3) + ")");
}

/// Text dump:
///   classim-sdp 1
///   blocks K d_1 ... d_K
///   objective: blk i j v ...      (upper triangle, i <= j)
///   constraints M
///   row: rhs | blk i j v ...
inline void dump_sdp(const SemidefiniteProgram& p, std::ostream& out) {
  auto write_mat = [&](int blk, const RMatrix& a) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      for (Eigen::Index j = i; j < a.cols(); ++j) {
        if (a(i, j) != 0.0) out << ' ' << blk << ' ' << i << ' ' << j << ' ' << format_exact(a(i, j));
      }
    }
  };
  out << "classim-sdp 1\nblocks " << p.block_dims.size();
  for (int d : p.block_dims) out << ' ' << d;
  out << "\nobjective:";
  for (std::size_t k = 0; k < p.objective.size(); ++k) write_mat(static_cast<int>(k), p.objective[k]);
  out << "\nconstraints " << p.constraints.size() << "\n";
  for (const auto& c : p.constraints) {
    out << "row: " << format_exact(c.rhs) << " |";
    for (const auto& [blk, a] : c.terms) write_mat(blk, a);
    out << "\n";
  }
}

inline std::string dump_sdp(const SemidefiniteProgram& p) {
  std::ostringstream s;
  dump_sdp(p, s);
  return s.str();
}

inline SemidefiniteProgram parse_sdp(std::istream& in) {
  if (detail::expect_line(in, "header") != "classim-sdp 1") throw ParseError("missing 'classim-sdp 1' header");
  const auto bl = detail::split_ws(detail::strip_prefix(detail::expect_line(in, "blocks"), "blocks "));
  if (bl.empty()) throw ParseError("blocks line is empty");
  const long nb = parse_int(bl[0]);
  if (nb < 1 || static_cast<long>(bl.size()) != nb + 1) throw ParseError("blocks line has wrong length");
  SemidefiniteProgram p;
  for (long k = 0; k < nb; ++k) {
    const long d = parse_int(bl[static_cast<std::size_t>(k + 1)]);
    if (d < 1) throw ParseError("block dimension must be >= 1");
    p.add_block(static_cast<int>(d));
  }
  auto read_terms = [&](const std::vector<std::string>& toks, auto&& sink) {
    if (toks.size() % 4 != 0) throw ParseError("matrix entries need blk/i/j/value quadruples");
    for (std::size_t t = 0; t < toks.size(); t += 4) {
      const long blk = parse_int(toks[t]);
      const long i = parse_int(toks[t + 1]);
      const long j = parse_int(toks[t + 2]);
      if (blk < 0 || blk >= nb) throw ParseError("block index out of range");
      const int d = p.block_dims[static_cast<std::size_t>(blk)];
      if (i < 0 || j < i || j >= d) throw ParseError("entry index out of range");
      const double v = parse_double(toks[t + 3]);
      sink(static_cast<int>(blk), static_cast<int>(i), static_cast<int>(j), v);
    }
  };
  read_terms(detail::split_ws(detail::strip_prefix(detail::expect_line(in, "objective"), "objective:")),
             [&](int blk, int i, int j, double v) {
               p.objective[static_cast<std::size_t>(blk)](i, j) = v;
               p.objective[static_cast<std::size_t>(blk)](j, i) = v;
             });
  const long m = parse_int(detail::strip_prefix(detail::expect_line(in, "constraints"), "constraints "));
  if (m < 0) throw ParseError("negative constraint count");
  for (long r = 0; r < m; ++r) {
    const std::string body = detail::strip_prefix(detail::expect_line(in, "row"), "row: ");
    const auto bar = body.find('|');
    if (bar == std::string::npos) throw ParseError("row line missing '|'");
    const auto rhs = detail::split_ws(body.substr(0, bar));
    if (rhs.size() != 1) throw ParseError("row line needs exactly one rhs value");
    SdpConstraint c;
    c.rhs = parse_double(rhs[0]);
    read_terms(detail::split_ws(body.substr(bar + 1)), [&](int blk, int i, int j, double v) {
      auto it = std::find_if(c.terms.begin(), c.terms.end(), [&](const auto& t) { return t.first == blk; });
      if (it == c.terms.end()) {
        const int d = p.block_dims[static_cast<std::size_t>(blk)];
        c.terms.emplace_back(blk, RMatrix::Zero(d, d));
        it = std::prev(c.terms.end());
      }
      it->second(i, j) = v;
      it->second(j, i) = v;
    });
    p.constraints.push_back(std::move(c));
  }
  return p;
}

inline SemidefiniteProgram parse_sdp(const std::string& text) {
  std::istringstream s(text);
  return parse_sdp(s);
}

}  // namespace classim
