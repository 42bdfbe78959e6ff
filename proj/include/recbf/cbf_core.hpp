#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace recbf {

// Integrator chain eta_dot = F*eta + G*mu, h = C*eta for the derivative
// stack eta = [h, h', ..., h^(r-1)].
struct EtaSystem {
  Eigen::MatrixXd f;
  Eigen::VectorXd g;
  Eigen::RowVectorXd c;
  int order = 0;
};

EtaSystem companion_system(int order);

// Feedback row for mu = -k * eta placing the closed-loop poles.
struct GainRow {
  Eigen::VectorXd poles;
  Eigen::VectorXd k;
  int order() const { return static_cast<int>(k.size()); }
};

// k_i = coefficient of s^(i-1) in prod(s - p_i). Poles must be negative.
GainRow place_poles(const std::vector<double>& poles);

// Lower envelope C * exp((F - G*k) t) * eta0.
double comparison_lower_bound(const GainRow& gain, const Eigen::VectorXd& eta0,
                              double t);

struct BoxEntry {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
};

struct UncertaintyBox {
  std::vector<BoxEntry> entries;
  int grid_points_per_axis = 10;

  void validate() const;  // throws InvalidBox
  int dim() const { return static_cast<int>(entries.size()); }
  // Grid coordinate i in [0, n) along an axis; single point collapses to the
  // midpoint.
  double grid_value(int axis, int i) const;
  bool contains(const Eigen::VectorXd& d) const;
};

struct GridMinResult {
  Eigen::VectorXd arg;
  double value = 0.0;
};

// Exhaustive n^k scan, lexicographic order, first minimum kept on ties.
GridMinResult grid_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                            const UncertaintyBox& box);

// Constraint function stack for one barrier: h and its state-only derivatives
// up to order r-1 as functions of (x, d), plus the input-dependent r-th
// derivative (x, u, d).
struct HChain {
  int order = 0;
  std::vector<std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>>
      state_derivs;
  std::function<double(const Eigen::VectorXd&, double, const Eigen::VectorXd&)>
      top_deriv;
};

struct MembershipViolation {
  int index = 0;  // which nu_i failed
  Eigen::VectorXd d;
  double value = 0.0;
};

struct MembershipReport {
  bool ok = true;
  std::vector<MembershipViolation> violations;
};

// Checks nu_i(x0, d) >= 0 for i = 0..r over the box grid, where
// nu_0 = h and nu_i = nu_{i-1}' - p_i * nu_{i-1}. The top derivative is
// evaluated at the held input u0.
MembershipReport check_initial_membership(const HChain& chain,
                                          const Eigen::VectorXd& x0,
                                          const GainRow& gain,
                                          const UncertaintyBox& box,
                                          double u0 = 0.0);

// min(u_nominal, u_max), floored at u_floor when given. A floor above the
// bound is infeasible; the caller logs it and applies the floor.
double clamp_to_robust_bound(double u_nominal, double u_max,
                             std::optional<double> u_floor = std::nullopt);

}  // namespace recbf
