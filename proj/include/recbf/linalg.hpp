#pragma once

#include <Eigen/Dense>

namespace recbf {

// exp(A*t) via scaling-and-squaring Pade.
Eigen::MatrixXd expm(const Eigen::MatrixXd& a, double t = 1.0);

// Stabilizing solution of A'P + PA - PBR^-1B'P + Q = 0 through the stable
// invariant subspace of the Hamiltonian. R is scalar (single input).
Eigen::MatrixXd solve_care(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                           const Eigen::MatrixXd& q, double r);

}  // namespace recbf
