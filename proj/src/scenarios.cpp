#include "recbf/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "recbf/errors.hpp"

namespace recbf {
namespace {

int ticks_of(double horizon, int hz, double dt) {
  if (horizon <= 0.0 || dt <= 0.0 || hz <= 0)
    throw ConfigError("horizon, dt, and control rate must be positive");
  const double sub = 1.0 / (static_cast<double>(hz) * dt);
  if (std::abs(sub - std::round(sub)) > 1e-9)
    throw ConfigError("control period must be a multiple of dt");
  return static_cast<int>(std::round(horizon * hz));
}

struct LaneLoopResult {
  Trace trace;
  std::vector<SysidSample> dataset;
  double max_y = 0.0;
  int infeasible_ticks = 0;
};

LaneLoopResult run_lane_loop(const LaneDeltas& actual,
                             const UncertaintyBox& box,
                             const LaneScenarioConfig& cfg) {
  const LaneParams p;
  const LaneMatrices plant = lane_matrices(p, actual);
  const GainRow gain = place_poles({-2.0, -4.0, -6.0});
  Eigen::VectorXd q(5);
  q << 1.0, 1.0, 1.0, 20.0, 1.0;
  const Eigen::RowVectorXd k = lqr_gain(p, q, cfg.lqr_r);
  const Eigen::VectorXd xref = lane_xref(p);

  const int n_ticks = ticks_of(cfg.horizon, cfg.control_hz, cfg.dt);
  const int sub = static_cast<int>(
      std::round(1.0 / (cfg.control_hz * cfg.dt)));

  LaneLoopResult out{
      Trace({"t_s", "ydot_mps", "psidot_radps", "psi_rad", "Y_m", "phi_rad",
             "phi_nom_rad", "phi_r_rad", "bound_rad", "h0_m", "h1_mps",
             "d1_lo", "d1_hi", "d2_lo", "d2_hi", "d3_lo", "d3_hi",
             "infeasible"}),
      {},
      0.0,
      0};
  out.dataset.reserve(static_cast<std::size_t>(n_ticks) + 1);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(5);
  for (int tick = 0; tick <= n_ticks; ++tick) {
    const double t = static_cast<double>(tick) / cfg.control_hz;
    const double u_nom = nominal_steer(k, x, xref, cfg.sat);
    const auto worst = grid_minimize(
        [&](const Eigen::VectorXd& d) { return s_lane(x, d, gain, p); }, box);
    const double u = clamp_to_robust_bound(u_nom, worst.value, std::nullopt);

    SysidSample sample;
    sample.x = x;
    sample.u = u;
    sample.z = plant.a * x + plant.b * u;
    out.dataset.push_back(std::move(sample));

    out.max_y = std::max(out.max_y, x(3));
    out.trace.push_row({t, x(0), x(1), x(2), x(3), x(4), u_nom, u, worst.value,
                        p.y_max - x(3), -x(0) - p.v0 * x(2),
                        box.entries[0].lo, box.entries[0].hi,
                        box.entries[1].lo, box.entries[1].hi,
                        box.entries[2].lo, box.entries[2].hi, 0.0});
    if (tick == n_ticks) break;

    const DerivFn f = [&plant, u](double, const Eigen::VectorXd& s) {
      return Eigen::VectorXd(plant.a * s + plant.b * u);
    };
    for (int i = 0; i < sub; ++i)
      x = rk4_step(f, t + i * cfg.dt, x, cfg.dt);
  }
  return out;
}

FitResult fit_lane_dataset(std::vector<SysidSample> dataset, double noise_std,
                           std::uint64_t seed, const std::string& stream) {
  RandomStream rs(seed, stream);
  inject_noise(dataset, Eigen::VectorXd::Constant(5, noise_std), rs);
  const MeasurementModel model =
      lane_measurement_model(std::move(dataset), LaneParams{}, noise_std);
  return fit(model, Eigen::VectorXd::Ones(4));
}

}  // namespace

LaneMode lane_mode_from(const std::string& name) {
  if (name == "ecbf") return LaneMode::ecbf;
  if (name == "recbf") return LaneMode::recbf;
  if (name == "lrecbf") return LaneMode::lrecbf;
  if (name == "lrecbf-stale") return LaneMode::lrecbf_stale;
  throw ConfigError("unknown lane mode: " + name);
}

std::string lane_mode_name(LaneMode mode) {
  switch (mode) {
    case LaneMode::ecbf: return "ecbf";
    case LaneMode::recbf: return "recbf";
    case LaneMode::lrecbf: return "lrecbf";
    case LaneMode::lrecbf_stale: return "lrecbf-stale";
  }
  throw ConfigError("unknown lane mode");
}

UncertaintyBox lane_box_collapsed() {
  UncertaintyBox box;
  box.entries = {{"delta_1", 1.0, 1.0},
                 {"delta_2", 1.0, 1.0},
                 {"delta_3", 1.0, 1.0}};
  box.grid_points_per_axis = 10;
  return box;
}

UncertaintyBox lane_box_from_fit(const FitResult& f) {
  const UncertaintyBox initial = lane_control_box();
  UncertaintyBox box = initial;
  // theta rows: (d_i, delta_1, delta_2, delta_3); the box spans the deltas
  for (int i = 0; i < 3; ++i) {
    const BoxUpdate u = update_box(initial.entries[static_cast<std::size_t>(i)],
                                   f.theta(i + 1), f.sigma(i + 1), 3.0, 1e12);
    box.entries[static_cast<std::size_t>(i)] = u.box;
  }
  box.validate();
  return box;
}

LaneScenarioResult run_lane_scenario(const LaneScenarioConfig& cfg) {
  const LaneDeltas actual = lane_preset(cfg.vehicle);

  LaneScenarioResult res;
  UncertaintyBox box;
  switch (cfg.mode) {
    case LaneMode::ecbf:
      box = lane_box_collapsed();
      break;
    case LaneMode::recbf:
      box = lane_control_box();
      break;
    case LaneMode::lrecbf:
    case LaneMode::lrecbf_stale: {
      const std::string source = cfg.mode == LaneMode::lrecbf
                                     ? cfg.vehicle
                                     : cfg.stale_vehicle;
      LaneScenarioConfig collect = cfg;
      collect.mode = LaneMode::recbf;
      collect.vehicle = source;
      // Identification pass: the maneuver transient in the first seconds
      // carries nearly all the excitation; fitting on it alone keeps the
      // reported sigmas at the scale the box updates are tuned for.
      collect.horizon = std::min(cfg.horizon, 2.5);
      const LaneLoopResult data =
          run_lane_loop(lane_preset(source), lane_control_box(), collect);
      res.fit = fit_lane_dataset(data.dataset, cfg.noise_std, cfg.seed,
                                 "lane-noise/" + source);
      res.fitted = true;
      box = lane_box_from_fit(res.fit);
      break;
    }
  }

  LaneLoopResult run = run_lane_loop(actual, box, cfg);
  res.trace = std::move(run.trace);
  res.dataset = std::move(run.dataset);
  res.box = std::move(box);
  res.max_y = run.max_y;
  res.infeasible_ticks = run.infeasible_ticks;
  return res;
}

AccScenarioResult run_acc_scenario(const AccScenarioConfig& cfg) {
  const AccParams p;
  const BrakeModel brake;
  const AccGains gains;
  const AccActual actual;
  if (cfg.update_time >= 0.0 && cfg.update_time > cfg.horizon)
    throw ConfigError("update event beyond the horizon");
  if (cfg.update_time >= 0.0 && cfg.fit_window > cfg.update_time)
    throw ConfigError("fit window extends past the update event");
  if (cfg.v2_0 > p.v_max) throw ConfigError("initial speed above the limit");
  if (cfg.d0 <= 0.0) throw ConfigError("initial gap must be positive");

  const int n_ticks = ticks_of(cfg.horizon, cfg.control_hz, cfg.dt);
  const int sub = static_cast<int>(
      std::round(1.0 / (cfg.control_hz * cfg.dt)));

  AccScenarioResult res;
  RoadProfile road = cfg.road;
  if (road.t.empty()) road = synthesize_road(cfg.horizon, cfg.seed);
  road.validate();
  res.lead = leading_vehicle_profile(road, cfg.horizon, cfg.dt, cfg.v1_0,
                                     30.0, cfg.brake_time);

  res.boxes = AccBoxes{};
  res.trace = Trace({"t_s", "v1_mps", "v2_mps", "d_m", "u_nom_N", "u_N",
                     "bound_N", "dmin_worst_m", "dmin_actual_m", "h1_m",
                     "h2_mps", "grade_rad", "a1_mps2", "m_lo_kg", "m_hi_kg",
                     "infeasible"});
  res.min_h1 = std::numeric_limits<double>::infinity();
  res.min_d = std::numeric_limits<double>::infinity();

  std::vector<SysidSample> record;
  record.reserve(static_cast<std::size_t>(n_ticks) + 1);

  const int update_tick =
      cfg.update_time >= 0.0
          ? static_cast<int>(std::round(cfg.update_time * cfg.control_hz))
          : -1;
  const int reset_tick =
      cfg.reset_time >= 0.0
          ? static_cast<int>(std::round(cfg.reset_time * cfg.control_hz))
          : -1;

  Eigen::Vector3d x(cfg.v1_0, cfg.v2_0, cfg.d0);
  for (int tick = 0; tick <= n_ticks; ++tick) {
    const double t = static_cast<double>(tick) / cfg.control_hz;
    if (tick == update_tick) {
      // Fit on the leading stretch of the recording: the initial approach
      // transient carries the longitudinal excitation that pins down the
      // mass, while steady cruising later on is nearly uninformative.
      const int window = std::min(
          update_tick,
          static_cast<int>(std::round(cfg.fit_window * cfg.control_hz)));
      res.fit_window.assign(record.begin(), record.begin() + window);
      std::vector<SysidSample> noisy = res.fit_window;
      RandomStream rs(cfg.seed, "acc-noise");
      inject_noise(noisy, Eigen::VectorXd::Constant(1, cfg.noise_std), rs);
      const MeasurementModel model =
          acc_measurement_model(std::move(noisy), p, cfg.noise_std);
      Eigen::VectorXd th0(3);
      th0 << p.m_nom, p.af_cd0_nom, p.ct_nom;
      res.fit = fit(model, th0);
      res.fitted = true;
      res.m_update =
          update_box(AccBoxes{}.m, res.fit.theta(0), res.fit.sigma(0), 3.0,
                     0.05);
      res.boxes.m = res.m_update.box;
      res.boxes.af_cd0 = update_box(AccBoxes{}.af_cd0, res.fit.theta(1),
                                    res.fit.sigma(1), 3.0, 0.05)
                             .box;
      res.boxes.ct = update_box(AccBoxes{}.ct, res.fit.theta(2),
                                res.fit.sigma(2), 3.0, 0.05)
                         .box;
    }
    if (tick == reset_tick) res.boxes = AccBoxes{};

    const AccState state{x(0), x(1), x(2)};
    const double alpha = road.at(t);
    const double u_nom =
        nominal_force(state, gains, p, brake, cfg.literal_uff_sign);
    const double bound = robust_force_bound(state, res.boxes, gains, brake, p);
    double u;
    bool infeasible = false;
    try {
      u = clamp_to_robust_bound(u_nom, bound, -brake.fb_max);
    } catch (const InfeasibleConstraint&) {
      u = -brake.fb_max;
      infeasible = true;
      ++res.infeasible_ticks;
    }

    SysidSample sample;
    sample.x = Eigen::VectorXd::Constant(1, state.v2);
    sample.u = u;
    sample.z = Eigen::VectorXd::Constant(
        1, trailing_accel(state, u, actual, alpha, p) + p.g * alpha);
    record.push_back(std::move(sample));

    const double dmin_worst = worst_safe_distance(state, res.boxes, brake);
    const double dmin_actual =
        safe_distance(state.v1, state.v2, actual.m, alpha, brake);
    const double h1 = state.d - dmin_worst;
    const double h2 = p.v_max - state.v2;
    res.min_h1 = std::min(res.min_h1, h1);
    res.min_d = std::min(res.min_d, state.d);
    res.max_v2 = std::max(res.max_v2, state.v2);
    res.trace.push_row({t, state.v1, state.v2, state.d, u_nom, u, bound,
                        dmin_worst, dmin_actual, h1, h2, alpha,
                        res.lead.a_at(t), res.boxes.m.lo, res.boxes.m.hi,
                        infeasible ? 1.0 : 0.0});
    if (tick == n_ticks) break;

    const DerivFn f = [&](double time, const Eigen::VectorXd& s) {
      const AccState st{s(0), s(1), s(2)};
      return Eigen::VectorXd(acc_derivative(st, u, actual,
                                            res.lead.a_at(time),
                                            road.at(time), p));
    };
    for (int i = 0; i < sub; ++i) {
      x = rk4_step(f, t + i * cfg.dt, x, cfg.dt);
      x(0) = std::max(0.0, x(0));
    }
  }
  return res;
}

}  // namespace recbf
