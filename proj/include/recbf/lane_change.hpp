#pragma once

#include <Eigen/Dense>
#include <string>

#include "recbf/cbf_core.hpp"

namespace recbf {

// State x = [lateral velocity, yaw rate, yaw angle, lateral position,
// steering angle], input = commanded steering angle.
struct LaneParams {
  double m_nom = 6500.0;   // kg
  double d_nom = 4.8;      // inertia shape factor, I = d_nom * m * delta_i
  double l = 4.5;          // wheelbase, m
  double a_nom = 0.55;     // front-axle fraction of l
  double c_nom = 8.0;      // tire stiffness scale, 1/rad
  double lambda_nom = 8.0; // steering lag, 1/s
  double g = 9.81;
  double v0 = 30.0;        // longitudinal speed, m/s
  double y_max = 3.85;     // lateral safety limit, m
  double y_ref = 3.7;      // lane-change target, m
};

// Multiplicative uncertainties. delta_m scales mass but cancels out of the
// dynamics entirely; it is carried for dataset bookkeeping only.
struct LaneDeltas {
  double dm = 1.0;
  double di = 1.0;
  double d1 = 1.0;
  double d2 = 1.0;
  double d3 = 1.0;
};

struct LaneMatrices {
  Eigen::Matrix<double, 5, 5> a;
  Eigen::Matrix<double, 5, 1> b;
};

LaneMatrices lane_matrices(const LaneParams& p, const LaneDeltas& d);

// Named presets: "nominal", "vehicle1", "vehicle2".
LaneDeltas lane_preset(const std::string& name);

// Barrier chain for h = y_max - Y over d = (delta_1, delta_2, delta_3).
HChain lane_h_chain(const LaneParams& p);

// Largest steering command satisfying the order-3 barrier condition at
// parameters d = (delta_1, delta_2, delta_3).
double s_lane(const Eigen::VectorXd& x, const Eigen::VectorXd& d,
              const GainRow& gain, const LaneParams& p);

// Conservative box over (delta_1, delta_2, delta_3).
UncertaintyBox lane_control_box(int grid_points = 10);

// Initial bounds for the identifiable parameters (d_i, delta_1..3).
std::vector<BoxEntry> lane_theta_bounds();

Eigen::RowVectorXd lqr_gain(const LaneParams& p, const Eigen::VectorXd& q_diag,
                            double r);

Eigen::VectorXd lane_xref(const LaneParams& p);

double nominal_steer(const Eigen::RowVectorXd& k, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& xref, double sat);

}  // namespace recbf
