#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "recbf/acc.hpp"
#include "recbf/cbf_core.hpp"
#include "recbf/lane_change.hpp"
#include "recbf/sim_engine.hpp"
#include "recbf/sysid.hpp"

namespace recbf {

// ecbf: nominal parameters only (box collapsed to a point).
// recbf: conservative initial box.
// lrecbf: box refitted from this vehicle's own identification run.
// lrecbf_stale: box refitted from a different vehicle's data.
enum class LaneMode { ecbf, recbf, lrecbf, lrecbf_stale };

LaneMode lane_mode_from(const std::string& name);
std::string lane_mode_name(LaneMode mode);

struct LaneScenarioConfig {
  LaneMode mode = LaneMode::recbf;
  std::string vehicle = "nominal";        // plant truth preset
  std::string stale_vehicle = "vehicle2"; // data source for lrecbf_stale
  double horizon = 10.0;
  double dt = 1e-3;
  int control_hz = 100;
  double lqr_r = 1e4;
  double sat = 0.08;  // rad
  std::uint64_t seed = 0;
  double noise_std = 0.1;
};

struct LaneScenarioResult {
  Trace trace;
  std::vector<SysidSample> dataset;  // noise-free tick measurements
  FitResult fit;                     // identification runs only
  bool fitted = false;
  UncertaintyBox box;                // box the final run used
  double max_y = 0.0;
  int infeasible_ticks = 0;
};

LaneScenarioResult run_lane_scenario(const LaneScenarioConfig& cfg);

UncertaintyBox lane_box_collapsed();

// Three-sigma refits of delta_1..3, clipped to the conservative box;
// estimates outside it keep the conservative interval.
UncertaintyBox lane_box_from_fit(const FitResult& fit);

struct AccScenarioConfig {
  double horizon = 300.0;
  double dt = 1e-3;
  int control_hz = 100;
  double v1_0 = 30.0;
  double v2_0 = 29.5;
  double d0 = 100.0;  // m
  std::uint64_t seed = 0;
  double update_time = 100.0;  // bound-update event; negative disables
  double reset_time = -1.0;    // restores the initial boxes; negative disables
  double fit_window = 25.0;    // leading seconds of samples feeding the update
  double brake_time = -1.0;    // scripted lead emergency stop; negative disables
  double noise_std = 0.05;
  bool literal_uff_sign = false;
  RoadProfile road;  // empty -> synthesized from the seed
};

struct AccScenarioResult {
  Trace trace;
  std::vector<SysidSample> fit_window;  // noise-free samples behind the update
  FitResult fit;
  bool fitted = false;
  BoxUpdate m_update;
  AccBoxes boxes;  // boxes after any events
  LeadProfile lead;
  double min_h1 = 0.0;
  double min_d = 0.0;
  double max_v2 = 0.0;
  int infeasible_ticks = 0;
};

AccScenarioResult run_acc_scenario(const AccScenarioConfig& cfg);

}  // namespace recbf
