#include "recbf/cbf_core.hpp"

#include <cmath>

#include "recbf/errors.hpp"
#include "recbf/linalg.hpp"

namespace recbf {

EtaSystem companion_system(int order) {
  if (order < 1) throw InvalidOrder("chain order must be >= 1");
  EtaSystem sys;
  sys.order = order;
  sys.f = Eigen::MatrixXd::Zero(order, order);
  for (int i = 0; i + 1 < order; ++i) sys.f(i, i + 1) = 1.0;
  sys.g = Eigen::VectorXd::Zero(order);
  sys.g(order - 1) = 1.0;
  sys.c = Eigen::RowVectorXd::Zero(order);
  sys.c(0) = 1.0;
  return sys;
}

GainRow place_poles(const std::vector<double>& poles) {
  if (poles.empty()) throw InvalidOrder("need at least one pole");
  for (const double p : poles) {
    if (!std::isfinite(p) || p >= 0.0)
      throw AssumptionViolation("poles must be real and negative");
  }
  const int r = static_cast<int>(poles.size());
  // Expand prod(s - p_i); coeffs[j] multiplies s^j.
  std::vector<double> coeffs{1.0};
  for (const double p : poles) {
    std::vector<double> next(coeffs.size() + 1, 0.0);
    for (size_t j = 0; j < coeffs.size(); ++j) {
      next[j + 1] += coeffs[j];
      next[j] += -p * coeffs[j];
    }
    coeffs = std::move(next);
  }
  GainRow gain;
  gain.poles = Eigen::Map<const Eigen::VectorXd>(poles.data(), r);
  gain.k = Eigen::VectorXd(r);
  for (int i = 0; i < r; ++i) gain.k(i) = coeffs[i];
  return gain;
}

double comparison_lower_bound(const GainRow& gain, const Eigen::VectorXd& eta0,
                              double t) {
  const int r = gain.order();
  if (eta0.size() != r) throw InvalidOrder("eta0 dimension mismatch");
  const EtaSystem sys = companion_system(r);
  const Eigen::MatrixXd a_cl = sys.f - sys.g * gain.k.transpose();
  return (sys.c * expm(a_cl, t) * eta0)(0);
}

void UncertaintyBox::validate() const {
  if (entries.empty()) throw InvalidBox("box has no entries");
  if (grid_points_per_axis < 1) throw InvalidBox("grid needs >= 1 point");
  for (const auto& e : entries) {
    if (!(e.lo <= e.hi))
      throw InvalidBox("box entry " + e.name + " has lo > hi");
  }
}

double UncertaintyBox::grid_value(int axis, int i) const {
  const auto& e = entries[axis];
  const int n = grid_points_per_axis;
  if (n == 1 || e.lo == e.hi) return 0.5 * (e.lo + e.hi);
  return e.lo + (e.hi - e.lo) * static_cast<double>(i) /
                    static_cast<double>(n - 1);
}

bool UncertaintyBox::contains(const Eigen::VectorXd& d) const {
  if (d.size() != dim()) return false;
  for (int i = 0; i < dim(); ++i) {
    if (d(i) < entries[i].lo || d(i) > entries[i].hi) return false;
  }
  return true;
}

GridMinResult grid_minimize(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const UncertaintyBox& box) {
  box.validate();
  const int k = box.dim();
  const int n = box.grid_points_per_axis;

  std::vector<int> idx(k, 0);
  Eigen::VectorXd d(k);
  GridMinResult best;
  bool first = true;
  while (true) {
    for (int a = 0; a < k; ++a) d(a) = box.grid_value(a, idx[a]);
    const double v = f(d);
    if (first || v < best.value) {
      best.arg = d;
      best.value = v;
      first = false;
    }
    // Odometer, last axis fastest: first axis is the most significant, so
    // the scan order is lexicographic in the index tuple.
    int a = k - 1;
    while (a >= 0 && ++idx[a] == n) idx[a--] = 0;
    if (a < 0) break;
  }
  return best;
}

MembershipReport check_initial_membership(const HChain& chain,
                                          const Eigen::VectorXd& x0,
                                          const GainRow& gain,
                                          const UncertaintyBox& box,
                                          double u0) {
  const int r = chain.order;
  if (r < 1 || static_cast<int>(chain.state_derivs.size()) != r || !chain.top_deriv)
    throw InvalidOrder("chain must carry h..h^(r-1) and the top derivative");
  if (gain.order() != r) throw InvalidOrder("gain order mismatch");
  box.validate();

  // nu_i = sum_j c[i][j] h^(j); c[i][j] = c[i-1][j-1] - p_i c[i-1][j].
  std::vector<std::vector<double>> c(r + 1);
  c[0] = {1.0};
  for (int i = 1; i <= r; ++i) {
    c[i].assign(i + 1, 0.0);
    for (int j = 0; j < i; ++j) {
      c[i][j + 1] += c[i - 1][j];
      c[i][j] += -gain.poles(i - 1) * c[i - 1][j];
    }
  }

  MembershipReport report;
  std::vector<int> idx(box.dim(), 0);
  Eigen::VectorXd d(box.dim());
  const int n = box.grid_points_per_axis;
  while (true) {
    for (int a = 0; a < box.dim(); ++a) d(a) = box.grid_value(a, idx[a]);
    std::vector<double> h(r + 1);
    for (int j = 0; j < r; ++j) h[j] = chain.state_derivs[j](x0, d);
    h[r] = chain.top_deriv(x0, u0, d);
    for (int i = 0; i <= r; ++i) {
      double nu = 0.0;
      for (int j = 0; j <= i; ++j) nu += c[i][j] * h[j];
      if (nu < 0.0) {
        report.ok = false;
        report.violations.push_back({i, d, nu});
      }
    }
    int a = box.dim() - 1;
    while (a >= 0 && ++idx[a] == n) idx[a--] = 0;
    if (a < 0) break;
  }
  return report;
}

double clamp_to_robust_bound(double u_nominal, double u_max,
                             std::optional<double> u_floor) {
  if (u_floor && *u_floor > u_max)
    throw InfeasibleConstraint(*u_floor, u_max);
  double u = std::min(u_nominal, u_max);
  if (u_floor) u = std::max(u, *u_floor);
  return u;
}

}  // namespace recbf
