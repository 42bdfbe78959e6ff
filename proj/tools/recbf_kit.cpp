#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "recbf/config.hpp"
#include "recbf/csv.hpp"
#include "recbf/errors.hpp"
#include "recbf/reproduce.hpp"
#include "recbf/scenarios.hpp"
#include "recbf/svg_plot.hpp"

namespace {

namespace fs = std::filesystem;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  bool no_plots = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path,
                  "configuration file (flat dotted keys)");
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "seed override");
  cmd->add_option("--set", args.overrides, "key=value override (repeatable)");
  cmd->add_flag("--no-plots", args.no_plots, "skip SVG output");
}

recbf::Config load_config(const CommonArgs& args) {
  recbf::Config cfg = recbf::Config::from_file(args.config_path);
  for (const auto& kv : args.overrides) cfg.apply_override(kv);
  return cfg;
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec && !fs::is_directory(dir))
    throw recbf::ConfigError("cannot create output directory " + dir);
}

std::string path_in(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

recbf::PlotSeries series_of(const recbf::Trace& trace,
                            const std::string& column,
                            const std::string& label) {
  return recbf::PlotSeries{label, trace.col("t_s"), trace.col(column)};
}

constexpr double kSafetySlack = 1e-6;

bool acc_safety_violated(const recbf::AccScenarioResult& res) {
  const auto& d = res.trace.col("d_m");
  const auto& dmin = res.trace.col("dmin_actual_m");
  for (std::size_t r = 0; r < d.size(); ++r)
    if (d[r] - dmin[r] < -kSafetySlack) return true;
  return res.max_v2 > recbf::AccParams{}.v_max + kSafetySlack;
}

int do_lane_change(const CommonArgs& args) {
  recbf::Config cfg = load_config(args);
  if (args.seed) cfg.set_raw("lane.seed", std::to_string(*args.seed));
  const recbf::LaneScenarioConfig scenario = recbf::lane_scenario_from(cfg);
  cfg.require_all_consumed();
  ensure_out_dir(args.out_dir);

  const recbf::LaneScenarioResult res = recbf::run_lane_scenario(scenario);
  recbf::write_trace_csv(path_in(args.out_dir, "lane_change.csv"), res.trace);
  cfg.write(path_in(args.out_dir, "lane_change.effective.cfg"));
  const recbf::LaneParams params;
  if (!args.no_plots) {
    recbf::LinePlot plot;
    plot.title = "lane change, " + scenario.vehicle + ", " +
                 recbf::lane_mode_name(scenario.mode);
    plot.x_label = "time [s]";
    plot.y_label = "lateral position [m]";
    plot.h_rules = {params.y_max};
    plot.series = {series_of(res.trace, "Y_m", "lateral position")};
    recbf::write_line_plot(path_in(args.out_dir, "lane_change.svg"), plot);
  }
  std::printf("lane-change %s %s: max Y %.6g m over %.6g s\n",
              recbf::lane_mode_name(scenario.mode).c_str(),
              scenario.vehicle.c_str(), res.max_y, scenario.horizon);
  const bool asserts_safety = scenario.mode == recbf::LaneMode::recbf ||
                              scenario.mode == recbf::LaneMode::lrecbf;
  if (asserts_safety && res.max_y > params.y_max + kSafetySlack) {
    std::fprintf(stderr, "safety violation: max Y %.6g m exceeds %.6g m\n",
                 res.max_y, params.y_max);
    return 3;
  }
  return 0;
}

int do_acc(const CommonArgs& args) {
  recbf::Config cfg = load_config(args);
  if (args.seed) cfg.set_raw("acc.seed", std::to_string(*args.seed));
  const recbf::AccScenarioConfig scenario = recbf::acc_scenario_from(cfg);
  cfg.require_all_consumed();
  ensure_out_dir(args.out_dir);

  const recbf::AccScenarioResult res = recbf::run_acc_scenario(scenario);
  recbf::write_trace_csv(path_in(args.out_dir, "acc.csv"), res.trace);
  cfg.write(path_in(args.out_dir, "acc.effective.cfg"));
  if (!args.no_plots) {
    recbf::LinePlot gap;
    gap.title = "gap against the safe distance";
    gap.x_label = "time [s]";
    gap.y_label = "distance [m]";
    gap.series = {series_of(res.trace, "d_m", "gap"),
                  series_of(res.trace, "dmin_worst_m", "dmin, worst case"),
                  series_of(res.trace, "dmin_actual_m", "dmin, actual")};
    recbf::write_line_plot(path_in(args.out_dir, "acc_gap.svg"), gap);

    recbf::LinePlot speed;
    speed.title = "vehicle speeds";
    speed.x_label = "time [s]";
    speed.y_label = "speed [m/s]";
    speed.h_rules = {recbf::AccParams{}.v_max};
    speed.series = {series_of(res.trace, "v1_mps", "lead"),
                    series_of(res.trace, "v2_mps", "trailing")};
    recbf::write_line_plot(path_in(args.out_dir, "acc_speed.svg"), speed);

    recbf::LinePlot force;
    force.title = "tractive force against the robust bound";
    force.x_label = "time [s]";
    force.y_label = "force [N]";
    force.series = {series_of(res.trace, "u_N", "applied"),
                    series_of(res.trace, "bound_N", "bound")};
    recbf::write_line_plot(path_in(args.out_dir, "acc_force.svg"), force);
  }
  std::printf("acc: min gap %.6g m, min h1 %.6g m, max v2 %.6g m/s, "
              "%d infeasible ticks\n",
              res.min_d, res.min_h1, res.max_v2, res.infeasible_ticks);
  if (acc_safety_violated(res)) {
    std::fprintf(stderr, "safety violation: gap crossed the actual stopping "
                         "distance or the speed limit was exceeded\n");
    return 3;
  }
  return 0;
}

int do_sysid(const CommonArgs& args) {
  recbf::Config cfg = load_config(args);
  const std::string source = cfg.get_string("sysid.source", "lane");
  std::vector<std::vector<std::string>> rows;
  if (source == "lane") {
    if (args.seed) cfg.set_raw("lane.seed", std::to_string(*args.seed));
    if (!cfg.has("lane.mode")) cfg.set_raw("lane.mode", "lrecbf");
    const recbf::LaneScenarioConfig scenario = recbf::lane_scenario_from(cfg);
    cfg.require_all_consumed();
    if (scenario.mode != recbf::LaneMode::lrecbf &&
        scenario.mode != recbf::LaneMode::lrecbf_stale)
      throw recbf::ConfigError("sysid needs a learning lane mode");
    ensure_out_dir(args.out_dir);
    const recbf::LaneScenarioResult res = recbf::run_lane_scenario(scenario);
    const std::vector<recbf::BoxEntry> bounds = recbf::lane_theta_bounds();
    const recbf::LaneDeltas actual = recbf::lane_preset(scenario.vehicle);
    const double actuals[] = {actual.di, actual.d1, actual.d2, actual.d3};
    for (std::size_t i = 0; i < bounds.size(); ++i) {
      const recbf::BoxUpdate update = recbf::update_box(
          bounds[i], res.fit.theta(static_cast<int>(i)),
          res.fit.sigma(static_cast<int>(i)), 3.0, 1e12);
      rows.push_back({bounds[i].name, recbf::format_double(actuals[i]),
                      recbf::format_double(res.fit.theta(static_cast<int>(i))),
                      recbf::format_double(res.fit.sigma(static_cast<int>(i))),
                      recbf::format_double(update.box.lo),
                      recbf::format_double(update.box.hi),
                      update.accepted ? "true" : "false",
                      update.model_mismatch ? "true" : "false",
                      res.fit.converged ? "true" : "false",
                      std::to_string(res.fit.iterations)});
    }
    cfg.write(path_in(args.out_dir, "sysid.effective.cfg"));
  } else if (source == "acc") {
    if (args.seed) cfg.set_raw("acc.seed", std::to_string(*args.seed));
    const recbf::AccScenarioConfig scenario = recbf::acc_scenario_from(cfg);
    cfg.require_all_consumed();
    if (scenario.update_time < 0.0 ||
        scenario.update_time > scenario.horizon)
      throw recbf::ConfigError("sysid needs an update event inside the horizon");
    ensure_out_dir(args.out_dir);
    const recbf::AccScenarioResult res = recbf::run_acc_scenario(scenario);
    const recbf::AccActual actual;
    const recbf::AccBoxes initial;
    const recbf::BoxEntry* entries[] = {&initial.m, &initial.af_cd0,
                                        &initial.ct};
    const double actuals[] = {actual.m, actual.af_cd0, actual.ct};
    for (int i = 0; i < 3; ++i) {
      const recbf::BoxUpdate update = recbf::update_box(
          *entries[i], res.fit.theta(i), res.fit.sigma(i), 3.0, 0.05);
      rows.push_back({entries[i]->name, recbf::format_double(actuals[i]),
                      recbf::format_double(res.fit.theta(i)),
                      recbf::format_double(res.fit.sigma(i)),
                      recbf::format_double(update.box.lo),
                      recbf::format_double(update.box.hi),
                      update.accepted ? "true" : "false",
                      update.model_mismatch ? "true" : "false",
                      res.fit.converged ? "true" : "false",
                      std::to_string(res.fit.iterations)});
    }
    cfg.write(path_in(args.out_dir, "sysid.effective.cfg"));
  } else {
    throw recbf::ConfigError("sysid.source must be 'lane' or 'acc'");
  }
  recbf::write_table_csv(path_in(args.out_dir, "sysid_report.csv"),
                         {"parameter", "actual", "mu", "sigma", "box_lo",
                          "box_hi", "accepted", "model_mismatch", "converged",
                          "iterations"},
                         rows);
  std::printf("sysid %s: %zu parameters reported\n", source.c_str(),
              rows.size());
  return 0;
}

int do_road_gen(const CommonArgs& args, std::optional<double> horizon_flag) {
  recbf::Config cfg = load_config(args);
  if (args.seed) cfg.set_raw("road.seed", std::to_string(*args.seed));
  if (horizon_flag)
    cfg.set_raw("road.horizon_s", recbf::format_double(*horizon_flag));
  const double horizon = cfg.get_double("road.horizon_s", 300.0);
  const double dt = cfg.get_double("road.dt_s", 0.1);
  const double seed_raw = cfg.get_double("road.seed", 0.0);
  cfg.require_all_consumed();
  if (seed_raw < 0.0 || seed_raw != std::floor(seed_raw))
    throw recbf::ConfigError("road.seed must be a nonnegative integer");
  ensure_out_dir(args.out_dir);

  const recbf::RoadProfile road = recbf::synthesize_road(
      horizon, static_cast<std::uint64_t>(seed_raw), dt);
  recbf::write_road_csv(path_in(args.out_dir, "road.csv"), road);
  cfg.write(path_in(args.out_dir, "road.effective.cfg"));
  if (!args.no_plots) {
    recbf::LinePlot plot;
    plot.title = "road grade profile";
    plot.x_label = "time [s]";
    plot.y_label = "grade [rad]";
    plot.series = {recbf::PlotSeries{"grade", road.t, road.grade}};
    recbf::write_line_plot(path_in(args.out_dir, "road.svg"), plot);
  }
  double lo = road.grade.front(), hi = road.grade.front();
  for (double g : road.grade) {
    lo = std::min(lo, g);
    hi = std::max(hi, g);
  }
  std::printf("road-gen: %zu samples over %.6g s, grade range [%.6g, %.6g]\n",
              road.t.size(), horizon, lo, hi);
  return 0;
}

int do_reproduce(const CommonArgs& args, const std::string& set) {
  recbf::ReproduceOptions opt;
  opt.set = set;
  opt.out_dir = args.out_dir;
  opt.seed = args.seed;
  opt.plots = !args.no_plots;
  const int rc = recbf::run_reproduce(opt);
  std::printf("reproduce %s: artifacts in %s%s\n", set.c_str(),
              args.out_dir.c_str(),
              rc == 3 ? " (safety violation detected)" : "");
  return rc;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const recbf::SimulationAbort& e) {
    std::fprintf(stderr, "simulation abort: %s\n", e.what());
    return 2;
  } catch (const recbf::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust safety-filter toolkit: lane-change and platoon "
               "scenarios, online identification, experiment batteries."};
  app.require_subcommand(1);
  int rc = 0;

  CommonArgs lane_args;
  CLI::App* lane = app.add_subcommand(
      "lane-change", "run one lane-change scenario (keys lane.*)");
  add_common(lane, lane_args);
  lane->callback([&] { rc = guarded([&] { return do_lane_change(lane_args); }); });

  CommonArgs acc_args;
  CLI::App* acc = app.add_subcommand(
      "acc", "run one platoon cruise scenario (keys acc.*)");
  add_common(acc, acc_args);
  acc->callback([&] { rc = guarded([&] { return do_acc(acc_args); }); });

  CommonArgs sysid_args;
  CLI::App* sysid = app.add_subcommand(
      "sysid", "collect data, fit parameters, report the bound updates");
  add_common(sysid, sysid_args);
  sysid->callback([&] { rc = guarded([&] { return do_sysid(sysid_args); }); });

  CommonArgs road_args;
  std::optional<double> road_horizon;
  CLI::App* road = app.add_subcommand("road-gen", "synthesize a road profile");
  add_common(road, road_args);
  road->add_option("--horizon", road_horizon, "profile length in seconds");
  road->callback(
      [&] { rc = guarded([&] { return do_road_gen(road_args, road_horizon); }); });

  CommonArgs repro_args;
  std::string repro_set;
  CLI::App* repro = app.add_subcommand(
      "reproduce", "run a named experiment battery");
  repro->add_option("experiment", repro_set, "experiment set name")
      ->required()
      ->check(CLI::IsMember(recbf::reproduce_sets()));
  add_common(repro, repro_args);
  repro->callback(
      [&] { rc = guarded([&] { return do_reproduce(repro_args, repro_set); }); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  return rc;
}
