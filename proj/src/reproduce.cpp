#include "recbf/reproduce.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <mutex>
#include <thread>

#include "recbf/csv.hpp"
#include "recbf/errors.hpp"
#include "recbf/svg_plot.hpp"

namespace recbf {

namespace {

namespace fs = std::filesystem;

std::uint64_t seed_value(Config& cfg, const std::string& key,
                         std::uint64_t fallback) {
  const double v = cfg.get_double(key, static_cast<double>(fallback));
  if (v < 0.0 || v != std::floor(v))
    throw ConfigError("config key " + key +
                      ": seed must be a nonnegative integer");
  return static_cast<std::uint64_t>(v);
}

std::string path_in(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

constexpr double kSafetySlack = 1e-6;

bool lane_asserts_safety(LaneMode mode) {
  return mode == LaneMode::recbf || mode == LaneMode::lrecbf;
}

LaneScenarioConfig lane_run_config(const std::string& vehicle, LaneMode mode,
                                   std::uint64_t seed) {
  LaneScenarioConfig c;
  c.vehicle = vehicle;
  c.mode = mode;
  c.seed = seed;
  return c;
}

AccScenarioConfig acc_run_config(std::uint64_t seed) {
  AccScenarioConfig c;
  c.seed = seed;
  return c;
}

PlotSeries series_of(const Trace& trace, const std::string& column,
                     const std::string& label) {
  return PlotSeries{label, trace.col("t_s"), trace.col(column)};
}

// ---- fig3: lane-change overlays -----------------------------------------

int battery_fig3(const ReproduceOptions& opt, std::uint64_t seed) {
  struct Cell {
    std::string vehicle;
    LaneMode mode;
    LaneScenarioResult res;
  };
  std::vector<Cell> cells;
  for (const char* vehicle : {"nominal", "vehicle1", "vehicle2"}) {
    cells.push_back({vehicle, LaneMode::ecbf, {}});
    cells.push_back({vehicle, LaneMode::recbf, {}});
    if (std::string(vehicle) != "nominal")
      cells.push_back({vehicle, LaneMode::lrecbf, {}});
  }
  std::vector<std::function<void()>> jobs;
  for (auto& cell : cells)
    jobs.emplace_back([&cell, seed] {
      cell.res = run_lane_scenario(lane_run_config(cell.vehicle, cell.mode, seed));
    });
  run_parallel(jobs, resolve_thread_count(opt.threads));

  const LaneParams params;
  bool violated = false;
  const char* panels[] = {"a", "b", "c"};
  const char* vehicles[] = {"nominal", "vehicle1", "vehicle2"};
  for (int pi = 0; pi < 3; ++pi) {
    std::vector<const Cell*> group;
    for (const auto& cell : cells)
      if (cell.vehicle == vehicles[pi]) group.push_back(&cell);

    std::vector<std::string> columns = {"t_s"};
    for (const Cell* cell : group)
      columns.push_back("y_" + lane_mode_name(cell->mode) + "_m");
    Trace combined(columns);
    const auto& t = group.front()->res.trace.col("t_s");
    std::vector<double> row(columns.size());
    for (std::size_t r = 0; r < t.size(); ++r) {
      row[0] = t[r];
      for (std::size_t g = 0; g < group.size(); ++g)
        row[g + 1] = group[g]->res.trace.col("Y_m")[r];
      combined.push_row(row);
    }
    const std::string stem = std::string("fig3") + panels[pi];
    write_trace_csv(path_in(opt.out_dir, stem + ".csv"), combined);

    if (opt.plots) {
      LinePlot plot;
      plot.title = std::string("lane change, ") + vehicles[pi];
      plot.x_label = "time [s]";
      plot.y_label = "lateral position [m]";
      plot.h_rules = {params.y_max};
      for (const Cell* cell : group)
        plot.series.push_back(series_of(cell->res.trace, "Y_m",
                                        lane_mode_name(cell->mode)));
      write_line_plot(path_in(opt.out_dir, stem + ".svg"), plot);
    }
    for (const Cell* cell : group)
      if (lane_asserts_safety(cell->mode) &&
          cell->res.max_y > params.y_max + kSafetySlack)
        violated = true;
  }
  return violated ? 3 : 0;
}

// ---- fig4: robust filter detail on the nominal vehicle ------------------

int battery_fig4(const ReproduceOptions& opt, std::uint64_t seed) {
  const LaneScenarioResult res =
      run_lane_scenario(lane_run_config("nominal", LaneMode::recbf, seed));

  const LaneParams params;
  const GainRow gain = place_poles({-2.0, -4.0, -6.0});
  const UncertaintyBox box = lane_control_box();
  const auto& t = res.trace.col("t_s");
  const auto& ydot = res.trace.col("ydot_mps");
  const auto& psidot = res.trace.col("psidot_radps");
  const auto& psi = res.trace.col("psi_rad");
  const auto& y = res.trace.col("Y_m");
  const auto& phi = res.trace.col("phi_rad");

  Trace detail({"t_s", "phi_nom_rad", "phi_r_rad", "bound_rad", "delta1_star",
                "delta2_star", "delta3_star"});
  Eigen::VectorXd x(5);
  for (std::size_t r = 0; r < t.size(); ++r) {
    x << ydot[r], psidot[r], psi[r], y[r], phi[r];
    const GridMinResult worst = grid_minimize(
        [&](const Eigen::VectorXd& d) { return s_lane(x, d, gain, params); },
        box);
    detail.push_row({t[r], res.trace.col("phi_nom_rad")[r],
                     res.trace.col("phi_r_rad")[r],
                     res.trace.col("bound_rad")[r], worst.arg(0), worst.arg(1),
                     worst.arg(2)});
  }
  write_trace_csv(path_in(opt.out_dir, "fig4.csv"), detail);

  if (opt.plots) {
    LinePlot control;
    control.title = "steering command against the robust bound";
    control.x_label = "time [s]";
    control.y_label = "steering [rad]";
    control.series = {series_of(detail, "phi_r_rad", "applied"),
                      series_of(detail, "bound_rad", "bound")};
    write_line_plot(path_in(opt.out_dir, "fig4a.svg"), control);

    const char* panels[] = {"b", "c", "d"};
    const char* cols[] = {"delta1_star", "delta2_star", "delta3_star"};
    for (int i = 0; i < 3; ++i) {
      LinePlot minimizer;
      minimizer.title = std::string("worst-case delta_") +
                        std::to_string(i + 1) + " during the maneuver";
      minimizer.x_label = "time [s]";
      minimizer.y_label = std::string("delta_") + std::to_string(i + 1);
      minimizer.series = {series_of(detail, cols[i], "")};
      write_line_plot(
          path_in(opt.out_dir, std::string("fig4") + panels[i] + ".svg"),
          minimizer);
    }
  }
  return res.max_y > params.y_max + kSafetySlack ? 3 : 0;
}

// ---- fig5: stale-bounds hazard -------------------------------------------

int battery_fig5(const ReproduceOptions& opt, std::uint64_t seed) {
  LaneScenarioConfig cfg =
      lane_run_config("vehicle1", LaneMode::lrecbf_stale, seed);
  cfg.stale_vehicle = "vehicle2";
  const LaneScenarioResult res = run_lane_scenario(cfg);
  write_trace_csv(path_in(opt.out_dir, "fig5.csv"), res.trace);
  if (opt.plots) {
    const LaneParams params;
    LinePlot plot;
    plot.title = "vehicle 1 under bounds learned on vehicle 2";
    plot.x_label = "time [s]";
    plot.y_label = "lateral position [m]";
    plot.h_rules = {params.y_max};
    plot.series = {series_of(res.trace, "Y_m", "lrecbf-stale")};
    write_line_plot(path_in(opt.out_dir, "fig5.svg"), plot);
  }
  // The battery exists to demonstrate the hazard; the run does not assert
  // safety, so a crossing is reported by the data, not the exit code.
  return 0;
}

// ---- fig7/fig8/table5: platoon cruise -------------------------------------

bool acc_violates_safety(const AccScenarioResult& res, const AccParams& p) {
  const auto& d = res.trace.col("d_m");
  const auto& dmin_actual = res.trace.col("dmin_actual_m");
  for (std::size_t r = 0; r < d.size(); ++r)
    if (d[r] - dmin_actual[r] < -kSafetySlack) return true;
  return res.max_v2 > p.v_max + kSafetySlack;
}

int battery_fig7(const ReproduceOptions& opt, std::uint64_t seed) {
  const AccScenarioResult res = run_acc_scenario(acc_run_config(seed));
  write_trace_csv(path_in(opt.out_dir, "fig7.csv"), res.trace);
  if (opt.plots) {
    LinePlot gap;
    gap.title = "gap against the safe distance";
    gap.x_label = "time [s]";
    gap.y_label = "distance [m]";
    gap.series = {series_of(res.trace, "d_m", "gap"),
                  series_of(res.trace, "dmin_worst_m", "dmin, worst case"),
                  series_of(res.trace, "dmin_actual_m", "dmin, actual")};
    write_line_plot(path_in(opt.out_dir, "fig7a.svg"), gap);

    const AccParams params;
    LinePlot speed;
    speed.title = "vehicle speeds";
    speed.x_label = "time [s]";
    speed.y_label = "speed [m/s]";
    speed.h_rules = {params.v_max};
    speed.series = {series_of(res.trace, "v1_mps", "lead"),
                    series_of(res.trace, "v2_mps", "trailing")};
    write_line_plot(path_in(opt.out_dir, "fig7b.svg"), speed);

    LinePlot force;
    force.title = "tractive force against the robust bound";
    force.x_label = "time [s]";
    force.y_label = "force [N]";
    force.series = {series_of(res.trace, "u_N", "applied"),
                    series_of(res.trace, "bound_N", "bound")};
    write_line_plot(path_in(opt.out_dir, "fig7c.svg"), force);
  }
  return acc_violates_safety(res, AccParams{}) ? 3 : 0;
}

int battery_fig8(const ReproduceOptions& opt, std::uint64_t seed) {
  const AccScenarioResult res = run_acc_scenario(acc_run_config(seed));
  const Histogram hist = make_histogram(res.trace.col("a1_mps2"), 25);

  int total = 0;
  for (int c : hist.counts) total += c;
  const double bin_width = hist.edges[1] - hist.edges[0];
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    const double center = 0.5 * (hist.edges[i] + hist.edges[i + 1]);
    double fitted = 0.0;
    if (hist.stddev > 0.0) {
      const double z = (center - hist.mean) / hist.stddev;
      fitted = total * bin_width * std::exp(-0.5 * z * z) /
               (hist.stddev * std::sqrt(2.0 * M_PI));
    }
    rows.push_back({format_double(hist.edges[i]),
                    format_double(hist.edges[i + 1]),
                    std::to_string(hist.counts[i]), format_double(fitted)});
  }
  write_table_csv(path_in(opt.out_dir, "fig8.csv"),
                  {"bin_lo_mps2", "bin_hi_mps2", "count", "normal_count"},
                  rows);
  if (opt.plots) {
    HistogramPlot plot;
    plot.title = "lead acceleration over the cruise";
    plot.x_label = "lead acceleration [m/s^2]";
    plot.hist = hist;
    write_histogram_plot(path_in(opt.out_dir, "fig8.svg"), plot);
  }
  return acc_violates_safety(res, AccParams{}) ? 3 : 0;
}

int battery_table5(const ReproduceOptions& opt, std::uint64_t seed) {
  const AccScenarioResult res = run_acc_scenario(acc_run_config(seed));
  if (!res.fitted)
    throw ConfigError("table5 needs an update event inside the horizon");

  const AccActual actual;
  const AccBoxes initial;
  const BoxEntry* entries[] = {&initial.m, &initial.af_cd0, &initial.ct};
  const double actuals[] = {actual.m, actual.af_cd0, actual.ct};
  std::vector<std::vector<std::string>> rows;
  for (int i = 0; i < 3; ++i) {
    const BoxUpdate update = update_box(*entries[i], res.fit.theta(i),
                                        res.fit.sigma(i), 3.0, 0.05);
    rows.push_back({entries[i]->name, format_double(actuals[i]),
                    format_double(res.fit.theta(i)),
                    format_double(res.fit.sigma(i)),
                    format_double(update.box.lo), format_double(update.box.hi),
                    update.accepted ? "true" : "false",
                    update.model_mismatch ? "true" : "false",
                    res.fit.converged ? "true" : "false",
                    std::to_string(res.fit.iterations)});
  }
  write_table_csv(path_in(opt.out_dir, "table5.csv"),
                  {"parameter", "actual", "mu", "sigma", "box_lo", "box_hi",
                   "accepted", "model_mismatch", "converged", "iterations"},
                  rows);
  return acc_violates_safety(res, AccParams{}) ? 3 : 0;
}

// ---- table3: lane-change estimation report --------------------------------

int battery_table3(const ReproduceOptions& opt, std::uint64_t seed) {
  struct Fit {
    std::string vehicle;
    LaneScenarioResult res;
  };
  std::vector<Fit> fits = {{"vehicle1", {}}, {"vehicle2", {}}};
  std::vector<std::function<void()>> jobs;
  for (auto& f : fits)
    jobs.emplace_back([&f, seed] {
      f.res = run_lane_scenario(lane_run_config(f.vehicle, LaneMode::lrecbf, seed));
    });
  run_parallel(jobs, resolve_thread_count(opt.threads));

  const std::vector<BoxEntry> bounds = lane_theta_bounds();
  std::vector<std::vector<std::string>> rows;
  for (const auto& f : fits) {
    const LaneDeltas deltas = lane_preset(f.vehicle);
    const double actuals[] = {deltas.di, deltas.d1, deltas.d2, deltas.d3};
    for (std::size_t i = 0; i < bounds.size(); ++i) {
      const BoxUpdate update =
          update_box(bounds[i], f.res.fit.theta(static_cast<int>(i)),
                     f.res.fit.sigma(static_cast<int>(i)), 3.0, 1e12);
      rows.push_back({f.vehicle, bounds[i].name, format_double(actuals[i]),
                      format_double(f.res.fit.theta(static_cast<int>(i))),
                      format_double(f.res.fit.sigma(static_cast<int>(i))),
                      format_double(update.box.lo),
                      format_double(update.box.hi),
                      update.accepted ? "true" : "false",
                      update.model_mismatch ? "true" : "false",
                      f.res.fit.converged ? "true" : "false",
                      std::to_string(f.res.fit.iterations)});
    }
  }
  write_table_csv(path_in(opt.out_dir, "table3.csv"),
                  {"vehicle", "parameter", "actual", "mu", "sigma", "box_lo",
                   "box_hi", "accepted", "model_mismatch", "converged",
                   "iterations"},
                  rows);

  const LaneParams params;
  for (const auto& f : fits)
    if (f.res.max_y > params.y_max + kSafetySlack) return 3;
  return 0;
}

}  // namespace

LaneScenarioConfig lane_scenario_from(Config& cfg) {
  LaneScenarioConfig c;
  c.mode = lane_mode_from(cfg.get_string("lane.mode", lane_mode_name(c.mode)));
  c.vehicle = cfg.get_string("lane.vehicle", c.vehicle);
  c.stale_vehicle = cfg.get_string("lane.stale_vehicle", c.stale_vehicle);
  c.horizon = cfg.get_double("lane.horizon_s", c.horizon);
  c.dt = cfg.get_double("lane.dt_s", c.dt);
  c.control_hz = cfg.get_int("lane.control_hz", c.control_hz);
  c.lqr_r = cfg.get_double("lane.lqr_r", c.lqr_r);
  c.sat = cfg.get_double("lane.sat_rad", c.sat);
  c.seed = seed_value(cfg, "lane.seed", c.seed);
  c.noise_std = cfg.get_double("lane.noise_std", c.noise_std);
  return c;
}

AccScenarioConfig acc_scenario_from(Config& cfg) {
  AccScenarioConfig c;
  c.horizon = cfg.get_double("acc.horizon_s", c.horizon);
  c.dt = cfg.get_double("acc.dt_s", c.dt);
  c.control_hz = cfg.get_int("acc.control_hz", c.control_hz);
  c.v1_0 = cfg.get_double("acc.v1_0_mps", c.v1_0);
  c.v2_0 = cfg.get_double("acc.v2_0_mps", c.v2_0);
  c.d0 = cfg.get_double("acc.d0_m", c.d0);
  c.seed = seed_value(cfg, "acc.seed", c.seed);
  c.update_time = cfg.get_double("acc.update_time_s", c.update_time);
  c.reset_time = cfg.get_double("acc.reset_time_s", c.reset_time);
  c.fit_window = cfg.get_double("acc.fit_window_s", c.fit_window);
  c.brake_time = cfg.get_double("acc.brake_time_s", c.brake_time);
  c.noise_std = cfg.get_double("acc.noise_std", c.noise_std);
  c.literal_uff_sign = cfg.get_bool("acc.uff_literal_sign", c.literal_uff_sign);
  const std::string road_csv = cfg.get_string("acc.road_csv", "");
  if (!road_csv.empty()) c.road = read_road_csv(road_csv);
  return c;
}

const std::vector<ReproduceEntry>& reproduce_manifest() {
  static const std::vector<ReproduceEntry> entries = {
      {"fig3", 3, "lane-change overlays: nominal vehicle plus vehicles 1 and 2"},
      {"fig4", 3, "robust filter detail: control, bound, worst-case parameters"},
      {"fig5", 3, "vehicle 1 under bounds learned from vehicle 2"},
      {"fig7", 7, "platoon cruise with the t=100 s mass-bound update"},
      {"fig8", 7, "lead-acceleration histogram with a moment-matched normal"},
      {"table3", 3, "lane-change parameter estimates for vehicles 1 and 2"},
      {"table5", 7, "platoon parameter estimates and update gating"},
  };
  return entries;
}

std::vector<std::string> reproduce_sets() {
  std::vector<std::string> names;
  for (const auto& e : reproduce_manifest()) names.push_back(e.name);
  return names;
}

int run_reproduce(const ReproduceOptions& opt) {
  const ReproduceEntry* entry = nullptr;
  for (const auto& e : reproduce_manifest())
    if (e.name == opt.set) entry = &e;
  if (!entry) {
    std::string names;
    for (const auto& e : reproduce_manifest())
      names += (names.empty() ? "" : ", ") + e.name;
    throw ConfigError("unknown experiment set '" + opt.set +
                      "' (available: " + names + ")");
  }
  std::error_code ec;
  fs::create_directories(opt.out_dir, ec);
  if (ec && !fs::is_directory(opt.out_dir))
    throw ConfigError("cannot create output directory " + opt.out_dir);

  const std::uint64_t seed = opt.seed.value_or(entry->default_seed);
  if (opt.set == "fig3") return battery_fig3(opt, seed);
  if (opt.set == "fig4") return battery_fig4(opt, seed);
  if (opt.set == "fig5") return battery_fig5(opt, seed);
  if (opt.set == "fig7") return battery_fig7(opt, seed);
  if (opt.set == "fig8") return battery_fig8(opt, seed);
  if (opt.set == "table3") return battery_table3(opt, seed);
  return battery_table5(opt, seed);
}

void run_parallel(const std::vector<std::function<void()>>& jobs,
                  int threads) {
  if (jobs.empty()) return;
  const int n =
      std::max(1, std::min(threads, static_cast<int>(jobs.size())));
  if (n == 1) {
    for (const auto& job : jobs) job();
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      try {
        jobs[i]();
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("RECBF_KIT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (!end || *end != '\0' || v < 1)
      throw ConfigError("RECBF_KIT_THREADS must be a positive integer");
    return static_cast<int>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace recbf
