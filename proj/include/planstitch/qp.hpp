#pragma once

#include <Eigen/Core>

#include <vector>

namespace planstitch {

// minimize 0.5 x'Hx + c'x  subject to  Aeq x = beq,  G x <= h.
// H must be positive definite on the null space of Aeq.
struct QuadraticProgram {
  Eigen::MatrixXd H;
  Eigen::VectorXd c;
  Eigen::MatrixXd Aeq;
  Eigen::VectorXd beq;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;

  int variables() const { return static_cast<int>(c.size()); }
};

enum class QpStatus { Optimal, Infeasible };

struct QpResult {
  QpStatus status = QpStatus::Infeasible;
  Eigen::VectorXd x;
  int iterations = 0;
  std::vector<int> activeSet;  // indices into G
};

// Equalities are removed by null-space substitution; the inequalities are
// handled by a dual active-set method started from the unconstrained
// minimizer.
QpResult solve_qp(const QuadraticProgram& qp, double tol = 1e-10);

// Deletion filter over all constraints. Equality rows are numbered first,
// then inequality rows. Returns an irreducible infeasible subset, or empty
// when the program is feasible.
std::vector<int> conflicting_constraints(const QuadraticProgram& qp, double tol = 1e-10);

}  // namespace planstitch
