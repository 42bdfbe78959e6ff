#include "recbf/lane_change.hpp"

#include <algorithm>
#include <cmath>

#include "recbf/errors.hpp"
#include "recbf/linalg.hpp"

namespace recbf {

namespace {

struct LaneCoeffs {
  double a11, a15, a55, b51;
};

// Entries of the lateral model that the barrier chain touches. All are
// independent of delta_m and delta_i.
LaneCoeffs coeffs(const LaneParams& p, double d1, double d2, double d3) {
  LaneCoeffs c;
  c.a11 = -p.c_nom * d2 * p.g / p.v0;
  c.a15 = p.c_nom * d2 * p.g * (1.0 - p.a_nom * d1);
  c.a55 = -p.lambda_nom * d3;
  c.b51 = p.lambda_nom * d3;
  return c;
}

}  // namespace

LaneMatrices lane_matrices(const LaneParams& p, const LaneDeltas& d) {
  const LaneCoeffs c = coeffs(p, d.d1, d.d2, d.d3);
  const double a22 = -p.c_nom * d.d2 * p.g * p.l * (1.0 - p.a_nom * d.d1) *
                     p.a_nom * d.d1 / (p.d_nom * d.di * p.v0);
  const double a25 = p.c_nom * d.d2 * p.g * (1.0 - p.a_nom * d.d1) *
                     p.a_nom * d.d1 / (p.d_nom * d.di);
  LaneMatrices m;
  m.a.setZero();
  m.b.setZero();
  m.a(0, 0) = c.a11;
  m.a(0, 1) = -p.v0;
  m.a(0, 4) = c.a15;
  m.a(1, 1) = a22;
  m.a(1, 4) = a25;
  m.a(2, 1) = 1.0;
  m.a(3, 0) = 1.0;
  m.a(3, 2) = p.v0;
  m.a(4, 4) = c.a55;
  m.b(4, 0) = c.b51;
  return m;
}

LaneDeltas lane_preset(const std::string& name) {
  if (name == "nominal") return {1.0, 1.0, 1.0, 1.0, 1.0};
  if (name == "vehicle1") return {0.80, 1.15, 0.70, 0.60, 1.35};
  if (name == "vehicle2") return {1.20, 1.05, 1.35, 1.35, 1.35};
  throw ConfigError("unknown vehicle preset: " + name);
}

HChain lane_h_chain(const LaneParams& p) {
  HChain chain;
  chain.order = 3;
  chain.state_derivs = {
      [p](const Eigen::VectorXd& x, const Eigen::VectorXd&) {
        return p.y_max - x(3);
      },
      [p](const Eigen::VectorXd& x, const Eigen::VectorXd&) {
        return -x(0) - p.v0 * x(2);
      },
      [p](const Eigen::VectorXd& x, const Eigen::VectorXd& d) {
        const LaneCoeffs c = coeffs(p, d(0), d(1), d(2));
        return -c.a11 * x(0) - c.a15 * x(4);
      }};
  chain.top_deriv = [p](const Eigen::VectorXd& x, double u,
                        const Eigen::VectorXd& d) {
    const LaneCoeffs c = coeffs(p, d(0), d(1), d(2));
    return -c.a11 * c.a11 * x(0) + c.a11 * p.v0 * x(1) -
           c.a15 * (c.a11 + c.a55) * x(4) - c.a15 * c.b51 * u;
  };
  return chain;
}

double s_lane(const Eigen::VectorXd& x, const Eigen::VectorXd& d,
              const GainRow& gain, const LaneParams& p) {
  const LaneCoeffs c = coeffs(p, d(0), d(1), d(2));
  const double denom = c.a15 * c.b51;
  if (denom <= 0.0)
    throw DegenerateParameter("steering authority lost: a15*b51 <= 0");
  const double k1 = gain.k(0), k2 = gain.k(1), k3 = gain.k(2);
  const double num = k1 * p.y_max -
                     (k2 + c.a11 * k3 + c.a11 * c.a11) * x(0) +
                     c.a11 * p.v0 * x(1) - k2 * p.v0 * x(2) - k1 * x(3) -
                     c.a15 * (k3 + c.a11 + c.a55) * x(4);
  return num / denom;
}

UncertaintyBox lane_control_box(int grid_points) {
  UncertaintyBox box;
  box.entries = {{"delta_1", 0.6, 1.4}, {"delta_2", 0.6, 1.4},
                 {"delta_3", 0.6, 1.4}};
  box.grid_points_per_axis = grid_points;
  return box;
}

std::vector<BoxEntry> lane_theta_bounds() {
  return {{"d_i", 0.7, 1.3},
          {"delta_1", 0.6, 1.4},
          {"delta_2", 0.6, 1.4},
          {"delta_3", 0.6, 1.4}};
}

Eigen::RowVectorXd lqr_gain(const LaneParams& p, const Eigen::VectorXd& q_diag,
                            double r) {
  const LaneMatrices m = lane_matrices(p, LaneDeltas{});
  const Eigen::MatrixXd q = q_diag.asDiagonal();
  const Eigen::MatrixXd sol = solve_care(m.a, m.b, q, r);
  return (m.b.transpose() * sol) / r;
}

Eigen::VectorXd lane_xref(const LaneParams& p) {
  Eigen::VectorXd xref = Eigen::VectorXd::Zero(5);
  xref(3) = p.y_ref;
  return xref;
}

double nominal_steer(const Eigen::RowVectorXd& k, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& xref, double sat) {
  const double u = (k * (xref - x))(0);
  return std::clamp(u, -sat, sat);
}

}  // namespace recbf
