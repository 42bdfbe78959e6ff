#include "recbf/sysid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "recbf/errors.hpp"

namespace recbf {
namespace {

void validate_model(const MeasurementModel& m, const Eigen::VectorXd& theta) {
  if (m.samples.empty()) throw DegenerateParameter("empty dataset");
  if (theta.size() != static_cast<Eigen::Index>(m.theta_names.size()))
    throw Error("theta dimension does not match model");
  if (m.noise_var.size() != m.y_dim ||
      (m.noise_var.array() <= 0.0).any())
    throw Error("noise variance must be positive per output row");
  if (!theta.allFinite()) throw Error("non-finite theta");
  for (const SysidSample& s : m.samples) {
    if (s.z.size() != m.y_dim) throw Error("measurement dimension mismatch");
    if (!s.z.allFinite() || !s.x.allFinite() || !std::isfinite(s.u))
      throw Error("non-finite sample");
  }
}

std::string flat_direction_name(const MeasurementModel& m,
                                const Eigen::VectorXd& v) {
  Eigen::Index dominant = 0;
  v.cwiseAbs().maxCoeff(&dominant);
  std::string out = "unidentifiable direction:";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) < 0.05 * std::abs(v(dominant))) continue;
    char buf[64];
    std::snprintf(buf, sizeof(buf), " %+.3g*%s", v(i),
                  m.theta_names[static_cast<std::size_t>(i)].c_str());
    out += buf;
  }
  return out;
}

}  // namespace

double residual_cost(const MeasurementModel& m, const Eigen::VectorXd& theta) {
  validate_model(m, theta);
  const Eigen::VectorXd w = m.noise_var.cwiseInverse();
  double cost = 0.0;
  for (const SysidSample& s : m.samples) {
    const Eigen::VectorXd r = s.z - m.predict(s, theta);
    cost += 0.5 * r.cwiseProduct(w.cwiseProduct(r)).sum();
  }
  return cost;
}

Eigen::VectorXd cost_gradient(const MeasurementModel& m,
                              const Eigen::VectorXd& theta) {
  validate_model(m, theta);
  const Eigen::VectorXd w = m.noise_var.cwiseInverse();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta.size());
  for (const SysidSample& s : m.samples) {
    const Eigen::VectorXd r = s.z - m.predict(s, theta);
    grad.noalias() -= m.jacobian(s, theta).transpose() * w.cwiseProduct(r);
  }
  return grad;
}

Eigen::MatrixXd fisher_information(const MeasurementModel& m,
                                   const Eigen::VectorXd& theta) {
  validate_model(m, theta);
  const Eigen::VectorXd w = m.noise_var.cwiseInverse();
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(theta.size(), theta.size());
  for (const SysidSample& s : m.samples) {
    const Eigen::MatrixXd j = m.jacobian(s, theta);
    info.noalias() += j.transpose() * w.asDiagonal() * j;
  }
  return info;
}

Eigen::MatrixXd fisher_covariance(const MeasurementModel& m,
                                  const Eigen::VectorXd& theta) {
  // Rank test runs in equilibrated coordinates so that parameters measured
  // in disparate units (kg vs dimensionless drag fractions) do not fake a
  // flat direction; only structurally uninformative directions trip it.
  const Eigen::VectorXd s = theta.cwiseAbs().cwiseMax(1e-12);
  const Eigen::MatrixXd scaled =
      s.asDiagonal() * fisher_information(m, theta) * s.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scaled);
  if (eig.info() != Eigen::Success)
    throw Error("information matrix eigendecomposition failed");
  const Eigen::VectorXd& ev = eig.eigenvalues();
  const double floor = 1e-12 * std::max(1.0, ev(ev.size() - 1));
  if (ev(0) <= floor)
    throw UnidentifiableParameter(
        flat_direction_name(m, eig.eigenvectors().col(0)));
  const Eigen::MatrixXd scaled_inv = eig.eigenvectors() *
                                     ev.cwiseInverse().asDiagonal() *
                                     eig.eigenvectors().transpose();
  return s.asDiagonal() * scaled_inv * s.asDiagonal();
}

FitResult fit(const MeasurementModel& m, const Eigen::VectorXd& theta0,
              const FitOptions& opt) {
  validate_model(m, theta0);
  const Eigen::Index n = theta0.size();

  // Scaled descent: equilibrate by the initial parameter magnitudes, then
  // whiten with the Cholesky factor of the information matrix. The metric
  // stays fixed between restarts and is refreshed at the current iterate on
  // a stall or every restart_period iterations, so the convergence check
  // runs in the statistical coordinates of the neighborhood it tests. Falls
  // back to a diagonal square-root scale when the factorization fails.
  const Eigen::VectorXd s = theta0.cwiseAbs().cwiseMax(1e-12);
  Eigen::MatrixXd w;
  const auto rebuild_metric = [&](const Eigen::VectorXd& theta) {
    Eigen::MatrixXd curv =
        s.asDiagonal() * fisher_information(m, theta) * s.asDiagonal();
    const double curv_max = std::max(curv.diagonal().maxCoeff(), 0.0);
    curv.diagonal().array() += 1e-12 * std::max(1.0, curv_max);
    const Eigen::LLT<Eigen::MatrixXd> llt(curv);
    if (llt.info() == Eigen::Success) {
      w = llt.matrixL();
    } else {
      w = Eigen::MatrixXd::Identity(n, n);
      if (curv_max > 0.0)
        w.diagonal() = curv.diagonal()
                           .cwiseMax(1e-12 * curv_max)
                           .cwiseSqrt();
    }
  };
  rebuild_metric(theta0);

  const auto cost_at = [&](const Eigen::VectorXd& theta) {
    if (!theta.allFinite()) return std::numeric_limits<double>::infinity();
    try {
      return residual_cost(m, theta);
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  FitResult res;
  res.theta = theta0;
  res.cost = residual_cost(m, res.theta);
  double step = 1.0;
  int since_restart = 0;
  bool restarted_here = false;
  double cycle_best = std::numeric_limits<double>::infinity();
  double prev_cycle_best = std::numeric_limits<double>::infinity();
  while (res.iterations < opt.max_iterations) {
    const Eigen::VectorXd grad = cost_gradient(m, res.theta);
    const Eigen::VectorXd grad_local =
        w.triangularView<Eigen::Lower>().solve(s.cwiseProduct(grad));
    res.grad_inf_norm = grad_local.lpNorm<Eigen::Infinity>();
    cycle_best = std::min(cycle_best, res.grad_inf_norm);
    if (res.grad_inf_norm < opt.grad_tol) {
      res.converged = true;
      break;
    }
    if (since_restart >= opt.restart_period) {
      // No gradient progress over a whole cycle means the iterate bounces at
      // the rounding-noise floor; see stall_tol.
      if (cycle_best >= 0.9 * prev_cycle_best && cycle_best < opt.stall_tol) {
        res.converged = true;
        break;
      }
      prev_cycle_best = cycle_best;
      cycle_best = std::numeric_limits<double>::infinity();
      rebuild_metric(res.theta);
      since_restart = 0;
      restarted_here = false;
      continue;
    }
    const Eigen::VectorXd dir = -s.cwiseProduct(
        w.transpose().triangularView<Eigen::Upper>().solve(grad_local));
    const double decrement = grad_local.squaredNorm();
    // Once the predicted decrease falls below the rounding resolution of the
    // cost, the Armijo test is vacuous; accept any non-increasing step so the
    // gradient itself can be driven to tolerance.
    const double resolution =
        8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, res.cost);
    step = std::min(4.0 * step, 1.0);
    bool moved = false;
    while (step > 1e-18) {
      const Eigen::VectorXd cand = res.theta + step * dir;
      const double cand_cost = cost_at(cand);
      const bool armijo = cand_cost <= res.cost - 1e-4 * step * decrement;
      const bool plateau =
          decrement <= resolution && cand_cost <= res.cost + resolution;
      if (armijo || plateau) {
        res.theta = cand;
        res.cost = std::min(cand_cost, res.cost);
        moved = true;
        break;
      }
      step *= 0.5;
    }
    ++res.iterations;
    ++since_restart;
    if (moved) {
      restarted_here = false;
    } else {
      if (restarted_here) {
        // Stalled at rounding resolution on a fresh metric: the iterate is
        // the numerical optimum. Converged if it sits within stall_tol of
        // the exact optimum in units of its own standard deviation.
        res.converged = res.grad_inf_norm < opt.stall_tol;
        break;
      }
      rebuild_metric(res.theta);
      since_restart = 0;
      step = 1.0;
      restarted_here = true;
    }
  }

  res.covariance = fisher_covariance(m, res.theta);
  res.sigma = res.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  return res;
}

BoxUpdate update_box(const BoxEntry& initial, double mu, double sigma,
                     double k, double rel_gate) {
  if (!(std::isfinite(mu) && std::isfinite(sigma) && sigma >= 0.0))
    throw Error("update_box needs finite mu and nonnegative sigma");
  BoxUpdate out;
  out.box = initial;
  if (mu < initial.lo || mu > initial.hi) {
    out.model_mismatch = true;
    return out;
  }
  if (sigma > rel_gate * std::max(std::abs(mu), 1e-12)) return out;
  out.box.lo = std::max(initial.lo, mu - k * sigma);
  out.box.hi = std::min(initial.hi, mu + k * sigma);
  out.accepted = true;
  return out;
}

MeasurementModel lane_measurement_model(std::vector<SysidSample> samples,
                                        const LaneParams& p,
                                        double noise_std) {
  MeasurementModel m;
  m.theta_names = {"d_i", "delta_1", "delta_2", "delta_3"};
  m.y_dim = 5;
  m.noise_var = Eigen::VectorXd::Constant(5, noise_std * noise_std);
  m.samples = std::move(samples);
  m.predict = [p](const SysidSample& s, const Eigen::VectorXd& th) {
    const LaneDeltas d{1.0, th(0), th(1), th(2), th(3)};
    const LaneMatrices lm = lane_matrices(p, d);
    return Eigen::VectorXd(lm.a * s.x + lm.b * s.u);
  };
  m.jacobian = [p](const SysidSample& s, const Eigen::VectorXd& th) {
    const double di = th(0), d1 = th(1), d2 = th(2), d3 = th(3);
    const double cg = p.c_nom * p.g;
    const double a22 = -cg * d2 * p.l * p.a_nom * d1 *
                       (1.0 - p.a_nom * d1) / (p.d_nom * di * p.v0);
    const double da22_d1 = -cg * d2 * p.l * p.a_nom *
                           (1.0 - 2.0 * p.a_nom * d1) / (p.d_nom * di * p.v0);
    const double yaw_mix = s.x(1) - p.v0 / p.l * s.x(4);
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(5, 4);
    j(0, 1) = -cg * d2 * p.a_nom * s.x(4);
    j(0, 2) = -cg / p.v0 * s.x(0) + cg * (1.0 - p.a_nom * d1) * s.x(4);
    j(1, 0) = -(a22 / di) * yaw_mix;
    j(1, 1) = da22_d1 * yaw_mix;
    j(1, 2) = (a22 / d2) * yaw_mix;
    j(4, 3) = p.lambda_nom * (s.u - s.x(4));
    (void)d3;
    return j;
  };
  return m;
}

MeasurementModel acc_measurement_model(std::vector<SysidSample> samples,
                                       const AccParams& p,
                                       double noise_std) {
  MeasurementModel m;
  m.theta_names = {"m", "af_cd0", "ct"};
  m.y_dim = 1;
  m.noise_var = Eigen::VectorXd::Constant(1, noise_std * noise_std);
  m.samples = std::move(samples);
  m.predict = [p](const SysidSample& s, const Eigen::VectorXd& th) {
    const double v2 = s.x(0);
    Eigen::VectorXd y(1);
    y(0) = -p.rho * v2 * v2 * th(1) / (2.0 * th(0)) - p.g * th(2) +
           s.u / th(0);
    return y;
  };
  m.jacobian = [p](const SysidSample& s, const Eigen::VectorXd& th) {
    const double v2 = s.x(0);
    Eigen::MatrixXd j(1, 3);
    j(0, 0) = (p.rho * v2 * v2 * th(1) / 2.0 - s.u) / (th(0) * th(0));
    j(0, 1) = -p.rho * v2 * v2 / (2.0 * th(0));
    j(0, 2) = -p.g;
    return j;
  };
  return m;
}

}  // namespace recbf
