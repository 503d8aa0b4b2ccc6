#pragma once

#include <Eigen/Dense>
#include <vector>

namespace deckland {

// Strictly convex quadratic program
//
//   minimize   1/2 x' H x + g' x
//   subject to lower <= A x <= upper   (row-wise; equality when lower == upper,
//                                       one-sided when the other end is +-inf)
//
// solved with a dual active-set method: start at the unconstrained minimum,
// which is dual feasible, and add the most violated constraint one at a time,
// taking primal steps that keep every multiplier nonnegative and dropping
// blocking constraints along the way. The objective value never decreases on
// the way to the optimum, and a problem with an empty feasible set announces
// itself when no finite step restores feasibility, so there is no phase-1.

enum class QpStatus { kOptimal, kInfeasible, kIterationLimit };

struct QpProblem {
  Eigen::MatrixXd H;  // n x n, symmetric
  Eigen::VectorXd g;  // n
  Eigen::MatrixXd A;  // m x n
  Eigen::VectorXd lower;  // m, -inf allowed
  Eigen::VectorXd upper;  // m, +inf allowed
};

struct QpSettings {
  int max_iterations = 500;
  double feasibility_tol = 1e-9;
  // H is accepted as-is while its smallest eigenvalue stays above the floor;
  // below it, `regularization` is added to the diagonal before factorizing.
  double eigenvalue_floor = 1e-10;
  double regularization = 1e-9;
};

struct QpSolution {
  QpStatus status = QpStatus::kIterationLimit;
  Eigen::VectorXd x;
  // Row multipliers with the sign convention H x + g = A' lambda: positive
  // when the row is active at its lower bound, negative at its upper bound,
  // free sign for equality rows.
  Eigen::VectorXd lambda;
  // Active one-sided constraints at the end, encoded 2*row for the lower
  // side and 2*row + 1 for the upper side. Feed back as `warm_start` to bias
  // the next solve's selection order. Equality rows are not listed.
  std::vector<int> active;
  int iterations = 0;
  // Objective value after every active-set change, starting at the
  // unconstrained minimum. Non-decreasing on a successful solve.
  std::vector<double> objective_trace;
};

QpSolution solve_qp(const QpProblem& problem, const QpSettings& settings = {},
                    const std::vector<int>& warm_start = {});

// Karush-Kuhn-Tucker residuals of a reported solution, for audits.
struct KktResiduals {
  double stationarity = 0.0;     // ||H x + g - A' lambda||_inf
  double primal = 0.0;           // largest bound violation
  double complementarity = 0.0;  // largest |lambda_i| * slack_i
};

KktResiduals kkt_residuals(const QpProblem& problem, const QpSolution& sol);

}  // namespace deckland
