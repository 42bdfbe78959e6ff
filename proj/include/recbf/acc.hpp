#pragma once

#include <Eigen/Dense>

#include "recbf/cbf_core.hpp"

namespace recbf {

struct AccParams {
  double rho = 1.225;       // air density, kg/m^3
  double g = 9.81;
  double c1 = 10.0;         // drag recovery length, m
  double c2 = 32.0;         // drag recovery offset, m
  double m_nom = 6500.0;    // kg
  double af_cd0_nom = 4.9;  // free-stream area * drag coefficient, m^2
  double ct_nom = 0.006;    // rolling resistance coefficient
  double v_max = 32.0;      // speed limit, m/s
  double v_nom = 30.0;      // cruise speed for the feedforward, m/s
  double p_max = 250e3;     // engine power limit, W
};

struct BrakeModel {
  double mu_lead = 0.9;
  double lead_drag_decel = 0.17;   // m/s^2 drag allowance for the lead
  double lead_max_decel = 9.0;     // mu_lead*g + lead_drag_decel, rounded
  double mu_trail = 0.7;
  double fb_max = 8500.0 * 4.0;    // N; max payload times the braking floor
  double g = 9.81;
};

struct AccState {
  double v1 = 0.0;  // lead speed, m/s
  double v2 = 0.0;  // trailing speed, m/s
  double d = 0.0;   // gap, m
};

// True trailing-vehicle parameters used by the plant.
struct AccActual {
  double m = 5000.0;
  double af_cd0 = 4.2;
  double ct = 0.007;
};

// Gap-dependent drafting reduction of the drag area. The controller model
// ignores it and uses af_cd0 directly (conservative).
double drag_area(double af_cd0, double gap, const AccParams& p);

// Trailing acceleration with drafting drag, grade alpha, engine/brake force u.
double trailing_accel(const AccState& x, double u, const AccActual& th,
                      double alpha, const AccParams& p);

// Full plant derivative [v1', v2', d'] under lead acceleration a1.
Eigen::Vector3d acc_derivative(const AccState& x, double u,
                               const AccActual& th, double a1, double alpha,
                               const AccParams& p);

// Minimal safe gap for simultaneous max-braking stops at grade alpha.
double safe_distance(double v1, double v2, double m, double alpha,
                     const BrakeModel& b);

struct AccGains {
  double k1 = 0.75;  // gap barrier, from poles (-0.5, -1.5)
  double k2 = 2.0;
  double k3 = 0.5;   // speed barrier pole magnitude
  double kp = 400.0; // nominal proportional gain, N/m
};

// Largest force satisfying the gap barrier at parameters
// (m, af_cd0, ct, a1, alpha); uses the no-drafting drag model.
double acc_s1(const AccState& x, double m, double af_cd0, double ct, double a1,
              double alpha, const AccGains& g, const BrakeModel& b,
              const AccParams& p);

// Largest force satisfying the speed barrier at (m, af_cd0, ct, alpha).
double acc_s2(const AccState& x, double m, double af_cd0, double ct,
              double alpha, const AccGains& g, const BrakeModel& b,
              const AccParams& p);

struct AccBoxes {
  BoxEntry m{"m", 4500.0, 8500.0};
  BoxEntry af_cd0{"af_cd0", 3.4, 5.6};
  BoxEntry ct{"ct", 0.005, 0.007};
  BoxEntry a1{"a1", -9.0, 2.0};      // lead acceleration range, fixed
  BoxEntry alpha{"alpha", -0.06, 0.06};  // grade range, fixed
  int m_grid = 129;
  int alpha_grid = 21;

  void validate() const;
};

// min over the boxes of min(s1, s2). af_cd0, ct and a1 enter affinely with
// nonnegative coefficients, so their minima sit at the lower bounds; m and
// alpha are swept on dense grids (dmin is kinked in m and curved in alpha).
double robust_force_bound(const AccState& x, const AccBoxes& boxes,
                          const AccGains& g, const BrakeModel& b,
                          const AccParams& p);

// Worst-case (largest) safe distance over the m and alpha boxes.
double worst_safe_distance(const AccState& x, const AccBoxes& boxes,
                           const BrakeModel& b);

// Feedforward at nominal cruise drag plus proportional gap feedback,
// clamped to brake and traction limits. literal_uff_sign reproduces the
// braking-signed feedforward variant.
double nominal_force(const AccState& x, const AccGains& g, const AccParams& p,
                     const BrakeModel& b, bool literal_uff_sign = false);

}  // namespace recbf
