#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "recbf/acc.hpp"
#include "recbf/cbf_core.hpp"
#include "recbf/lane_change.hpp"

namespace recbf {

// One recorded tick: state snapshot, held input, noisy derivative
// measurement z.
struct SysidSample {
  Eigen::VectorXd x;
  double u = 0.0;
  Eigen::VectorXd z;
};

struct MeasurementModel {
  std::vector<std::string> theta_names;
  int y_dim = 0;
  Eigen::VectorXd noise_var;  // diagonal measurement covariance
  std::vector<SysidSample> samples;
  std::function<Eigen::VectorXd(const SysidSample&, const Eigen::VectorXd&)>
      predict;
  std::function<Eigen::MatrixXd(const SysidSample&, const Eigen::VectorXd&)>
      jacobian;  // d predict / d theta
};

// 0.5 * sum_n (z - y)' W (z - y) with W = noise_var^-1.
double residual_cost(const MeasurementModel& m, const Eigen::VectorXd& theta);

Eigen::VectorXd cost_gradient(const MeasurementModel& m,
                              const Eigen::VectorXd& theta);

Eigen::MatrixXd fisher_information(const MeasurementModel& m,
                                   const Eigen::VectorXd& theta);

// Inverse information; throws UnidentifiableParameter naming the flat
// direction when the information matrix is singular.
Eigen::MatrixXd fisher_covariance(const MeasurementModel& m,
                                  const Eigen::VectorXd& theta);

struct FitOptions {
  int max_iterations = 10000;
  double grad_tol = 1e-8;  // infinity norm of the scale-normalized gradient
  int restart_period = 50;  // iterations between descent-metric refreshes
  // A stall on a freshly rebuilt metric means the cost is flat to rounding;
  // the fit still counts as converged if the gradient is below this ceiling
  // (in sigma units, i.e. the iterate is within stall_tol of the optimum
  // relative to its own statistical uncertainty).
  double stall_tol = 1e-3;
};

struct FitResult {
  Eigen::VectorXd theta;
  Eigen::MatrixXd covariance;
  Eigen::VectorXd sigma;  // sqrt of covariance diagonal
  bool converged = false;
  int iterations = 0;
  double grad_inf_norm = 0.0;
  double cost = 0.0;
};

// Gradient descent with Armijo backtracking on internally normalized
// parameters (initial magnitude and initial information diagonal set the
// scale). Non-convergence is reported, not thrown.
FitResult fit(const MeasurementModel& m, const Eigen::VectorXd& theta0,
              const FitOptions& opt = {});

struct BoxUpdate {
  BoxEntry box;
  bool accepted = false;
  bool model_mismatch = false;
};

// [mu - k*sigma, mu + k*sigma] intersected with the initial interval.
// Rejected (box kept) when sigma/|mu| exceeds rel_gate; flagged as model
// mismatch when mu falls outside the initial interval.
BoxUpdate update_box(const BoxEntry& initial, double mu, double sigma,
                     double k, double rel_gate);

// theta = (d_i, delta_1, delta_2, delta_3); y = full state derivative.
MeasurementModel lane_measurement_model(std::vector<SysidSample> samples,
                                        const LaneParams& p,
                                        double noise_std = 0.1);

// theta = (m, af_cd0, ct); x = [v2], y = grade-compensated acceleration.
MeasurementModel acc_measurement_model(std::vector<SysidSample> samples,
                                       const AccParams& p,
                                       double noise_std = 0.05);

}  // namespace recbf
