#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "recbf/config.hpp"
#include "recbf/scenarios.hpp"

namespace recbf {

// Builds scenario configs from dotted keys (lane.*, acc.*), recording
// effective values so Config::serialize() re-runs to the identical trace.
LaneScenarioConfig lane_scenario_from(Config& cfg);
AccScenarioConfig acc_scenario_from(Config& cfg);

struct ReproduceOptions {
  std::string set;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;  // overrides the battery default
  bool plots = true;
  int threads = 0;  // 0 -> RECBF_KIT_THREADS, then hardware concurrency
};

// Scripted experiment batteries. Each name is a fixed set of scenario runs
// plus the CSVs/plots they emit.
struct ReproduceEntry {
  std::string name;
  std::uint64_t default_seed = 0;
  std::string summary;
};

const std::vector<ReproduceEntry>& reproduce_manifest();
std::vector<std::string> reproduce_sets();

// Runs one battery into opt.out_dir. Returns the process exit code: 0 on
// success, 3 when a safety-asserting run violated its barrier. Unknown set
// names throw ConfigError.
int run_reproduce(const ReproduceOptions& opt);

// Shared worker pool for independent jobs; rethrows the first exception.
void run_parallel(const std::vector<std::function<void()>>& jobs, int threads);

// Explicit count if positive, else RECBF_KIT_THREADS, else hardware.
int resolve_thread_count(int requested);

}  // namespace recbf
