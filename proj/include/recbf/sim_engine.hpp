#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "recbf/rng.hpp"
#include "recbf/sysid.hpp"

namespace recbf {

using DerivFn = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

// Classic fourth-order step; throws SimulationAbort when the state leaves
// the finite range.
Eigen::VectorXd rk4_step(const DerivFn& f, double t, const Eigen::VectorXd& x,
                         double dt);

// Piecewise-linear grade profile, clamped outside the sampled range.
struct RoadProfile {
  std::vector<double> t;
  std::vector<double> grade;

  double at(double time) const;
  void validate() const;
};

// Three slow incommensurate harmonics with amplitudes summing to 0.06 rad,
// phase-aligned at a seeded interior instant so the steepest admissible
// downhill grade is actually reached.
RoadProfile synthesize_road(double horizon, std::uint64_t seed,
                            double dt = 0.1);

// Speed-tracking lead vehicle on the given road, sampled every dt. After
// brake_time it decelerates at its grade-adjusted maximum until stopped.
struct LeadProfile {
  double dt = 1e-3;
  std::vector<double> v;
  std::vector<double> a;

  double v_at(double time) const;
  double a_at(double time) const;
};

LeadProfile leading_vehicle_profile(const RoadProfile& road, double horizon,
                                    double dt, double v_start = 30.0,
                                    double v_target = 30.0,
                                    double brake_time = -1.0);

// Adds independent zero-mean Gaussian noise to every measurement row.
void inject_noise(std::vector<SysidSample>& samples,
                  const Eigen::VectorXd& noise_std, RandomStream& rs);

struct Histogram {
  std::vector<double> edges;  // bins + 1 entries
  std::vector<int> counts;
  double mean = 0.0;
  double stddev = 0.0;
};

Histogram make_histogram(const std::vector<double>& values, int bins = 25);

// Column store for simulation logs; one push_row call per time step.
struct Trace {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> data;  // data[c][row]

  Trace() = default;
  explicit Trace(std::vector<std::string> cols);
  void push_row(std::initializer_list<double> row);
  void push_row(const std::vector<double>& row);
  std::size_t rows() const;
  const std::vector<double>& col(const std::string& name) const;
};

}  // namespace recbf
