#include "recbf/acc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "recbf/errors.hpp"

namespace recbf {

double drag_area(double af_cd0, double gap, const AccParams& p) {
  return af_cd0 * (1.0 - p.c1 / (p.c2 + gap));
}

double trailing_accel(const AccState& x, double u, const AccActual& th,
                      double alpha, const AccParams& p) {
  const double area = drag_area(th.af_cd0, x.d, p);
  return -p.rho * x.v2 * x.v2 * area / (2.0 * th.m) - p.g * th.ct +
         u / th.m - p.g * alpha;
}

Eigen::Vector3d acc_derivative(const AccState& x, double u,
                               const AccActual& th, double a1, double alpha,
                               const AccParams& p) {
  return {a1, trailing_accel(x, u, th, alpha, p), x.v1 - x.v2};
}

double safe_distance(double v1, double v2, double m, double alpha,
                     const BrakeModel& b) {
  const double a1bar = -b.g * alpha - b.lead_max_decel;
  const double a2bar = -b.g * alpha - std::min(b.fb_max / m, b.mu_trail * b.g);
  if (a1bar >= 0.0 || a2bar >= 0.0)
    throw UndefinedStop("grade exceeds braking capability");
  return -v2 * v2 / (2.0 * a2bar) + v1 * v1 / (2.0 * a1bar);
}

double acc_s1(const AccState& x, double m, double af_cd0, double ct, double a1,
              double alpha, const AccGains& g, const BrakeModel& b,
              const AccParams& p) {
  const double dmin = safe_distance(x.v1, x.v2, m, alpha, b);
  return m * (g.k1 * (x.d - dmin) + g.k2 * (x.v1 - x.v2) +
              p.rho * x.v2 * x.v2 * af_cd0 / (2.0 * m) + p.g * (ct + alpha) +
              a1);
}

double acc_s2(const AccState& x, double m, double af_cd0, double ct,
              double alpha, const AccGains& g, const BrakeModel& b,
              const AccParams& p) {
  (void)b;
  return m * (g.k3 * (p.v_max - x.v2) +
              p.rho * x.v2 * x.v2 * af_cd0 / (2.0 * m) + p.g * (ct + alpha));
}

void AccBoxes::validate() const {
  for (const BoxEntry* e : {&m, &af_cd0, &ct, &a1, &alpha}) {
    if (!(e->lo <= e->hi))
      throw InvalidBox("box entry " + e->name + " has lo > hi");
  }
  if (m.lo <= 0.0) throw InvalidBox("mass bound must be positive");
  if (m_grid < 2 || alpha_grid < 1) throw InvalidBox("grid too coarse");
}

namespace {

double axis_value(const BoxEntry& e, int i, int n) {
  if (n == 1 || e.lo == e.hi) return 0.5 * (e.lo + e.hi);
  return e.lo + (e.hi - e.lo) * static_cast<double>(i) /
                    static_cast<double>(n - 1);
}

}  // namespace

double robust_force_bound(const AccState& x, const AccBoxes& boxes,
                          const AccGains& g, const BrakeModel& b,
                          const AccParams& p) {
  boxes.validate();
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < boxes.m_grid; ++i) {
    const double m = axis_value(boxes.m, i, boxes.m_grid);
    for (int j = 0; j < boxes.alpha_grid; ++j) {
      const double alpha = axis_value(boxes.alpha, j, boxes.alpha_grid);
      const double s1 = acc_s1(x, m, boxes.af_cd0.lo, boxes.ct.lo,
                               boxes.a1.lo, alpha, g, b, p);
      if (s1 < best) best = s1;
    }
    // s2 is affine in alpha with slope m*g > 0: lower corner suffices.
    const double s2 =
        acc_s2(x, m, boxes.af_cd0.lo, boxes.ct.lo, boxes.alpha.lo, g, b, p);
    if (s2 < best) best = s2;
  }
  return best;
}

double worst_safe_distance(const AccState& x, const AccBoxes& boxes,
                           const BrakeModel& b) {
  boxes.validate();
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < boxes.m_grid; ++i) {
    const double m = axis_value(boxes.m, i, boxes.m_grid);
    for (int j = 0; j < boxes.alpha_grid; ++j) {
      const double alpha = axis_value(boxes.alpha, j, boxes.alpha_grid);
      worst = std::max(worst, safe_distance(x.v1, x.v2, m, alpha, b));
    }
  }
  return worst;
}

double nominal_force(const AccState& x, const AccGains& g, const AccParams& p,
                     const BrakeModel& b, bool literal_uff_sign) {
  const double uff = (literal_uff_sign ? -0.5 : 0.5) * p.rho * p.v_nom *
                     p.v_nom * p.af_cd0_nom;
  const double dmin_nom = safe_distance(x.v1, x.v2, p.m_nom, 0.0, b);
  const double u = uff + g.kp * (x.d - dmin_nom);
  const double traction = p.p_max / std::max(x.v2, 1.0);
  return std::clamp(u, -b.fb_max, traction);
}

}  // namespace recbf
