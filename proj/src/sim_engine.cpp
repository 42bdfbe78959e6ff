#include "recbf/sim_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "recbf/errors.hpp"

namespace recbf {
namespace {

double interp_clamped(const std::vector<double>& ts,
                      const std::vector<double>& vs, double time) {
  if (time <= ts.front()) return vs.front();
  if (time >= ts.back()) return vs.back();
  const auto it = std::upper_bound(ts.begin(), ts.end(), time);
  const std::size_t hi = static_cast<std::size_t>(it - ts.begin());
  const std::size_t lo = hi - 1;
  const double w = (time - ts[lo]) / (ts[hi] - ts[lo]);
  return vs[lo] + w * (vs[hi] - vs[lo]);
}

double sample_clamped(const std::vector<double>& vs, double dt, double time) {
  if (time <= 0.0) return vs.front();
  const std::size_t i = static_cast<std::size_t>(time / dt);
  if (i >= vs.size() - 1) return vs.back();
  return vs[i];
}

}  // namespace

Eigen::VectorXd rk4_step(const DerivFn& f, double t, const Eigen::VectorXd& x,
                         double dt) {
  const Eigen::VectorXd k1 = f(t, x);
  const Eigen::VectorXd k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1);
  const Eigen::VectorXd k3 = f(t + 0.5 * dt, x + 0.5 * dt * k2);
  const Eigen::VectorXd k4 = f(t + dt, x + dt * k3);
  Eigen::VectorXd next =
      x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!next.allFinite())
    throw SimulationAbort("state left the finite range", t + dt);
  return next;
}

double RoadProfile::at(double time) const {
  return interp_clamped(t, grade, time);
}

void RoadProfile::validate() const {
  if (t.size() != grade.size() || t.size() < 2)
    throw Error("road profile needs at least two samples");
  for (std::size_t i = 1; i < t.size(); ++i)
    if (!(t[i] > t[i - 1])) throw Error("road sample times must increase");
  for (double g : grade)
    if (!std::isfinite(g)) throw Error("non-finite road grade");
}

RoadProfile synthesize_road(double horizon, std::uint64_t seed, double dt) {
  if (horizon <= 0.0 || dt <= 0.0) throw Error("road horizon and dt must be positive");
  RandomStream rs(seed, "road-profile");
  const double amp[3] = {0.03, 0.02, 0.01};
  const double omega[3] = {2.0 * M_PI / 210.0, 2.0 * M_PI / 97.0,
                           2.0 * M_PI / 41.0};
  const double raw = horizon * (0.1 + 0.8 * rs.next_uniform());
  const double t_star = std::round(raw / dt) * dt;  // land on a sample

  RoadProfile road;
  const std::size_t n = static_cast<std::size_t>(std::ceil(horizon / dt)) + 1;
  road.t.reserve(n);
  road.grade.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double time = static_cast<double>(i) * dt;
    double g = 0.0;
    for (int k = 0; k < 3; ++k) g -= amp[k] * std::cos(omega[k] * (time - t_star));
    road.t.push_back(time);
    road.grade.push_back(g);
  }
  road.validate();
  return road;
}

double LeadProfile::v_at(double time) const {
  return sample_clamped(v, dt, time);
}

double LeadProfile::a_at(double time) const {
  return sample_clamped(a, dt, time);
}

LeadProfile leading_vehicle_profile(const RoadProfile& road, double horizon,
                                    double dt, double v_start, double v_target,
                                    double brake_time) {
  if (horizon <= 0.0 || dt <= 0.0)
    throw Error("lead horizon and dt must be positive");
  const double kp = 2000.0, ki = 50.0;
  const double m = 5000.0, g = 9.81;
  const double a_min = -9.0, a_max = 2.0;

  LeadProfile lead;
  lead.dt = dt;
  const std::size_t n = static_cast<std::size_t>(std::ceil(horizon / dt)) + 1;
  lead.v.reserve(n);
  lead.a.reserve(n);

  double v = v_start, integ = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double time = static_cast<double>(i) * dt;
    const double alpha = road.at(time);
    double a;
    if (brake_time >= 0.0 && time >= brake_time) {
      a = std::max(a_min, -v / dt);  // scripted stop, never reverses
      if (v <= 0.0) a = 0.0;
    } else {
      const double e = v_target - v;
      const double a_raw = (kp * e + ki * integ) / m - g * alpha;
      a = std::clamp(a_raw, a_min, a_max);
      if (a == a_raw) integ += e * dt;  // hold the integrator when saturated
    }
    lead.v.push_back(v);
    lead.a.push_back(a);
    v = std::max(0.0, v + a * dt);
  }
  return lead;
}

void inject_noise(std::vector<SysidSample>& samples,
                  const Eigen::VectorXd& noise_std, RandomStream& rs) {
  for (SysidSample& s : samples) {
    if (s.z.size() != noise_std.size())
      throw Error("noise dimension does not match measurements");
    for (Eigen::Index i = 0; i < s.z.size(); ++i)
      s.z(i) += noise_std(i) * rs.next_gaussian();
  }
}

Histogram make_histogram(const std::vector<double>& values, int bins) {
  if (values.empty()) throw Error("histogram needs data");
  if (bins < 1) throw Error("histogram needs at least one bin");
  for (double v : values)
    if (!std::isfinite(v)) throw Error("non-finite histogram value");

  Histogram h;
  const double n = static_cast<double>(values.size());
  h.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - h.mean) * (v - h.mean);
  h.stddev = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;

  double lo = *std::min_element(values.begin(), values.end());
  double hi = *std::max_element(values.begin(), values.end());
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  h.edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i)
    h.edges[static_cast<std::size_t>(i)] =
        lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    int b = static_cast<int>(static_cast<double>(bins) * (v - lo) / (hi - lo));
    b = std::clamp(b, 0, bins - 1);
    ++h.counts[static_cast<std::size_t>(b)];
  }
  return h;
}

Trace::Trace(std::vector<std::string> cols) : columns(std::move(cols)) {
  if (columns.empty()) throw Error("trace needs at least one column");
  data.resize(columns.size());
}

void Trace::push_row(std::initializer_list<double> row) {
  push_row(std::vector<double>(row));
}

void Trace::push_row(const std::vector<double>& row) {
  if (row.size() != columns.size())
    throw Error("trace row width does not match columns");
  for (std::size_t c = 0; c < row.size(); ++c) data[c].push_back(row[c]);
}

std::size_t Trace::rows() const {
  return data.empty() ? 0 : data.front().size();
}

const std::vector<double>& Trace::col(const std::string& name) const {
  for (std::size_t c = 0; c < columns.size(); ++c)
    if (columns[c] == name) return data[c];
  throw Error("unknown trace column: " + name);
}

}  // namespace recbf
