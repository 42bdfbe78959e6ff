#include "recbf/linalg.hpp"

#include <algorithm>
#include <unsupported/Eigen/MatrixFunctions>

#include "recbf/errors.hpp"

namespace recbf {

namespace {

// Solves acl'X + X*acl + rhs = 0 by vectorization; sized for small state
// dimensions where the n^2 x n^2 system is cheap.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& acl,
                               const Eigen::MatrixXd& rhs) {
  const Eigen::Index n = acl.rows();
  const Eigen::MatrixXd at = acl.transpose();
  Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(n * n, n * n);
  for (Eigen::Index bj = 0; bj < n; ++bj) {
    sys.block(bj * n, bj * n, n, n) += at;
    for (Eigen::Index bi = 0; bi < n; ++bi)
      sys.block(bi * n, bj * n, n, n).diagonal().array() += at(bi, bj);
  }
  const Eigen::VectorXd vec_rhs =
      -Eigen::Map<const Eigen::VectorXd>(rhs.data(), n * n);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(sys);
  if (!lu.isInvertible()) throw Error("Lyapunov operator is singular");
  const Eigen::VectorXd vx = lu.solve(vec_rhs);
  Eigen::MatrixXd x = Eigen::Map<const Eigen::MatrixXd>(vx.data(), n, n);
  return 0.5 * (x + x.transpose());
}

}  // namespace

Eigen::MatrixXd expm(const Eigen::MatrixXd& a, double t) {
  return (a * t).exp();
}

Eigen::MatrixXd solve_care(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                           const Eigen::MatrixXd& q, double r) {
  if (r <= 0.0) throw Error("control weight must be positive");
  const Eigen::Index n = a.rows();

  Eigen::MatrixXd ham(2 * n, 2 * n);
  ham.topLeftCorner(n, n) = a;
  ham.topRightCorner(n, n) = -(b * b.transpose()) / r;
  ham.bottomLeftCorner(n, n) = -q;
  ham.bottomRightCorner(n, n) = -a.transpose();

  Eigen::ComplexEigenSolver<Eigen::MatrixXd> es(ham);
  if (es.info() != Eigen::Success)
    throw Error("Hamiltonian eigendecomposition failed");

  Eigen::MatrixXcd basis(2 * n, n);
  Eigen::Index found = 0;
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    if (es.eigenvalues()(i).real() < 0.0) {
      if (found == n) throw Error("Hamiltonian has too many stable modes");
      basis.col(found++) = es.eigenvectors().col(i);
    }
  }
  if (found != n) throw Error("Hamiltonian lacks a full stable subspace");

  const Eigen::MatrixXcd x1 = basis.topRows(n);
  const Eigen::MatrixXcd x2 = basis.bottomRows(n);
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(x1);
  if (!lu.isInvertible()) throw Error("stable subspace is degenerate");

  Eigen::MatrixXd p = (x2 * lu.inverse()).real();
  p = 0.5 * (p + p.transpose());

  const auto rel_residual = [&](const Eigen::MatrixXd& pm) {
    const Eigen::MatrixXd term_a = a.transpose() * pm;
    const Eigen::MatrixXd term_b = pm * b * b.transpose() * pm / r;
    const Eigen::MatrixXd residual = term_a + term_a.transpose() - term_b + q;
    const double scale = 2.0 * term_a.norm() + term_b.norm() + q.norm();
    return residual.norm() / std::max(1.0, scale);
  };

  // Newton polish: the eigenvector basis loses accuracy when the Hamiltonian
  // is nearly decoupled (large r), but one Lyapunov solve per step restores
  // it as long as the initial iterate is stabilizing.
  double best = rel_residual(p);
  for (int it = 0; it < 20 && best > 1e-13; ++it) {
    const Eigen::RowVectorXd k = (b.transpose() * p) / r;
    Eigen::MatrixXd next;
    try {
      next = solve_lyapunov(a - b * k, q + r * k.transpose() * k);
    } catch (const Error&) {
      break;
    }
    const double cand = rel_residual(next);
    if (!(cand < best)) break;
    p = next;
    best = cand;
  }

  if (best > 1e-9) throw Error("Riccati residual too large");
  return p;
}

}  // namespace recbf
