#pragma once

#include <Eigen/Dense>
#include <limits>
#include <string>
#include <vector>

#include "miqpc/errors.hpp"

namespace miqpc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// A parametric MIQP instance
///
///   minimize   y'Qy + c'y
///   subject to A y <= b,  lb <= y <= ub,  y_i integer for masked i
///
/// Note the objective carries no 1/2 factor. Instances are immutable after
/// construction and safe to share across threads.
struct MiqpProblem {
  int n = 0;  ///< decision dimension
  int m = 0;  ///< constraint rows
  Eigen::MatrixXd Q;        ///< n x n, symmetric PSD
  Eigen::VectorXd c;        ///< length n
  Eigen::MatrixXd A;        ///< m x n
  Eigen::VectorXd b;        ///< length m
  std::vector<bool> int_mask;  ///< true for integer variables
  Eigen::VectorXd lb;       ///< per-variable lower bounds (-inf allowed)
  Eigen::VectorXd ub;       ///< per-variable upper bounds (+inf allowed)

  /// Validates dimensions, symmetry (1e-12 relative), positive
  /// semidefiniteness (min eigenvalue >= -1e-9*|Q|) and that every masked
  /// variable has finite bounds. Throws DimensionError / IndefiniteError /
  /// std::invalid_argument.
  MiqpProblem(Eigen::MatrixXd Q_in, Eigen::VectorXd c_in, Eigen::MatrixXd A_in,
              Eigen::VectorXd b_in, std::vector<bool> mask_in,
              Eigen::VectorXd lb_in, Eigen::VectorXd ub_in);

  int num_integer() const;
};

/// Point evaluation attached to a problem: objective, violation and
/// integrality residual at a candidate y.
struct MiqpSolution {
  Eigen::VectorXd y;
  double objective = 0.0;
  bool feasible = false;
  double max_violation = 0.0;         ///< inf-norm violation of rows and bounds
  double integrality_residual = 0.0;  ///< max distance of masked entries to Z
};

/// y'Qy + c'y, exactly as stored (no symmetrization, no 1/2).
double eval_objective(const MiqpProblem& p, const Eigen::VectorXd& y);

/// Populates an MiqpSolution for y. Violation covers constraint rows and
/// variable bounds; feasible <=> max_violation <= feas_tol and
/// integrality_residual <= int_tol.
MiqpSolution check_feasibility(const MiqpProblem& p, const Eigen::VectorXd& y,
                               double feas_tol = 1e-6, double int_tol = 1e-6);

/// JSON text serialization with field names n, m, Q, c, A, b, int_mask, lb,
/// ub. Matrices are row-major flat arrays; non-finite bounds are written as
/// the strings "inf" / "-inf".
std::string to_json_text(const MiqpProblem& p);
MiqpProblem miqp_from_json_text(const std::string& text);

}  // namespace miqpc
