#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "miqpc/miqp_model.hpp"

namespace miqpc {

/// A node relaxation: the base problem with integrality dropped and
/// per-variable branching bounds layered on top of the base bounds.
struct QpSubproblem {
  const MiqpProblem* base = nullptr;
  Eigen::VectorXd extra_lb;  ///< length n, -inf where no branching bound
  Eigen::VectorXd extra_ub;  ///< length n, +inf where no branching bound

  explicit QpSubproblem(const MiqpProblem& p)
      : base(&p),
        extra_lb(Eigen::VectorXd::Constant(p.n, -kInf)),
        extra_ub(Eigen::VectorXd::Constant(p.n, kInf)) {}

  Eigen::VectorXd effective_lb() const { return base->lb.cwiseMax(extra_lb); }
  Eigen::VectorXd effective_ub() const { return base->ub.cwiseMin(extra_ub); }
};

enum class QpStatus { Optimal, Infeasible, IterLimit, Unbounded };

struct QpResult {
  QpStatus status = QpStatus::Infeasible;
  Eigen::VectorXd y;
  double objective = kInf;
  double kkt_residual = kInf;  ///< scaled: residual / (1 + |grad|_inf)
  int inner_iterations = 0;    ///< active-set sweeps, phase 1 + phase 2
};

struct QpOptions {
  double kkt_tol = 1e-8;
  double feas_tol = 1e-6;
  int max_inner_iters = 0;  ///< 0 selects the default 200*n
};

/// Deterministic recomputation of the scaled KKT residual at y: detects the
/// active rows/bounds by tolerance, solves a least-squares multiplier
/// system, and combines stationarity with dual infeasibility. A pure
/// function of (sub, y), so re-evaluation reproduces the solver's report.
double kkt_residual(const QpSubproblem& sub, const Eigen::VectorXd& y);

/// Primal active-set solver for the convex QP relaxations generated by
/// branch and bound.
///
/// Phase 1 minimizes the worst constraint violation as an LP in (y, t);
/// phase 2 performs null-space Newton / descent-ray steps over the working
/// set. Antiparallel row pairs of the base problem (the encoding used for
/// equalities) are detected once at construction and pinned as equalities.
/// Pivot tie-breaking is smallest-index, so repeated solves are bit-stable.
class ActiveSetQp {
 public:
  explicit ActiveSetQp(const MiqpProblem& base);

  /// Solves the subproblem; sub.base must be the constructor problem.
  /// y_start, when given, is clamped into the node bounds and used to seed
  /// phase 1 / the initial working set.
  QpResult solve(const QpSubproblem& sub, const QpOptions& opts = {},
                 const Eigen::VectorXd* y_start = nullptr);

  long total_pivots() const { return total_pivots_; }

 private:
  const MiqpProblem* base_;
  Eigen::MatrixXd Qs_;  // symmetrized cost
  bool q_is_zero_ = false;
  bool q_is_diagonal_ = false;
  Eigen::VectorXd q_diag_;
  std::vector<signed char> kind_;  // per-row: equality / inequality / twin
  long total_pivots_ = 0;
};

/// One-shot convenience wrapper over ActiveSetQp.
QpResult solve_qp(const QpSubproblem& sub, double kkt_tol = 1e-8,
                  int max_inner_iters = 0);

}  // namespace miqpc
