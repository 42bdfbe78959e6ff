#include "recbf/scenarios.hpp"

#include <cmath>

#include "doctest.h"
#include "recbf/errors.hpp"

using namespace recbf;

TEST_CASE("nominal-parameter filter keeps the nominal vehicle in lane") {
  LaneScenarioConfig cfg;
  cfg.mode = LaneMode::ecbf;
  cfg.vehicle = "nominal";
  const LaneScenarioResult r = run_lane_scenario(cfg);
  CHECK(r.max_y <= 3.85 + 1e-9);
  // the maneuver actually happens: the lane target is approached
  CHECK(r.trace.col("Y_m").back() > 3.0);
}

TEST_CASE("nominal-parameter filter misses the perturbed vehicle") {
  LaneScenarioConfig cfg;
  cfg.mode = LaneMode::ecbf;
  cfg.vehicle = "vehicle1";
  const LaneScenarioResult r = run_lane_scenario(cfg);
  CHECK(r.max_y > 3.85);
}

TEST_CASE("robust filter keeps all three vehicles in lane") {
  for (const char* vehicle : {"nominal", "vehicle1", "vehicle2"}) {
    LaneScenarioConfig cfg;
    cfg.mode = LaneMode::recbf;
    cfg.vehicle = vehicle;
    const LaneScenarioResult r = run_lane_scenario(cfg);
    INFO(vehicle);
    CHECK(r.max_y <= 3.85 + 1e-6);
  }
}

TEST_CASE("identification narrows the box and stays safe") {
  LaneScenarioConfig cfg;
  cfg.mode = LaneMode::lrecbf;
  cfg.vehicle = "vehicle1";
  cfg.seed = 3;
  const LaneScenarioResult r = run_lane_scenario(cfg);
  CHECK(r.fitted);
  CHECK(r.fit.converged);
  CHECK(r.max_y <= 3.85 + 1e-6);
  const UncertaintyBox initial = lane_control_box();
  double width = 0.0, width0 = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(r.box.entries[i].lo >= initial.entries[i].lo - 1e-12);
    CHECK(r.box.entries[i].hi <= initial.entries[i].hi + 1e-12);
    width += r.box.entries[i].hi - r.box.entries[i].lo;
    width0 += initial.entries[i].hi - initial.entries[i].lo;
  }
  CHECK(width < 0.5 * width0);
}

TEST_CASE("a box fitted on the wrong vehicle is not safe to reuse") {
  LaneScenarioConfig cfg;
  cfg.mode = LaneMode::lrecbf_stale;
  cfg.vehicle = "vehicle1";
  cfg.stale_vehicle = "vehicle2";
  cfg.seed = 3;
  const LaneScenarioResult r = run_lane_scenario(cfg);
  CHECK(r.fitted);
  CHECK(r.max_y > 3.85);
}

TEST_CASE("identical configs give bitwise-identical traces") {
  LaneScenarioConfig lane;
  lane.mode = LaneMode::lrecbf;
  lane.vehicle = "vehicle2";
  lane.seed = 11;
  const LaneScenarioResult a = run_lane_scenario(lane);
  const LaneScenarioResult b = run_lane_scenario(lane);
  CHECK(a.trace.data == b.trace.data);

  AccScenarioConfig acc;
  acc.horizon = 30.0;
  acc.update_time = 20.0;
  acc.fit_window = 20.0;
  acc.seed = 11;
  const AccScenarioResult c = run_acc_scenario(acc);
  const AccScenarioResult d = run_acc_scenario(acc);
  CHECK(c.trace.data == d.trace.data);
}

TEST_CASE("the filter only ever clamps onto the robust bound") {
  LaneScenarioConfig lane;
  lane.mode = LaneMode::recbf;
  lane.vehicle = "vehicle1";
  const LaneScenarioResult r = run_lane_scenario(lane);
  const auto& nom = r.trace.col("phi_nom_rad");
  const auto& u = r.trace.col("phi_r_rad");
  const auto& bound = r.trace.col("bound_rad");
  const auto& infeasible = r.trace.col("infeasible");
  bool clamped_somewhere = false;
  for (std::size_t i = 0; i < r.trace.rows(); ++i) {
    if (infeasible[i] != 0.0) continue;
    CHECK(u[i] <= nom[i]);
    if (u[i] < nom[i]) {
      CHECK(u[i] == bound[i]);
      clamped_somewhere = true;
    }
  }
  CHECK(clamped_somewhere);
}

TEST_CASE("short cruise run keeps both barriers nonnegative") {
  AccScenarioConfig cfg;
  cfg.horizon = 40.0;
  cfg.update_time = 20.0;
  cfg.fit_window = 20.0;
  cfg.seed = 5;
  const AccScenarioResult r = run_acc_scenario(cfg);
  CHECK(r.min_h1 >= -1e-6);
  CHECK(r.max_v2 <= 32.0 + 1e-6);
  CHECK(r.min_d > 0.0);
  CHECK(r.fitted);
  CHECK(r.m_update.accepted);
  CHECK(r.fit.theta(0) == doctest::Approx(5000.0).epsilon(0.05));
  CHECK(r.boxes.m.hi - r.boxes.m.lo < 1000.0);
  // disturbance ranges are never learnable
  CHECK(r.boxes.a1.lo == -9.0);
  CHECK(r.boxes.alpha.hi == 0.06);

  const auto& nom = r.trace.col("u_nom_N");
  const auto& u = r.trace.col("u_N");
  const auto& bound = r.trace.col("bound_N");
  const auto& infeasible = r.trace.col("infeasible");
  for (std::size_t i = 0; i < r.trace.rows(); ++i) {
    if (infeasible[i] != 0.0) continue;
    CHECK(u[i] <= nom[i]);
    if (u[i] < nom[i]) CHECK(u[i] == bound[i]);
  }
}

TEST_CASE("scripted emergency stop never violates the actual stopping gap") {
  AccScenarioConfig cfg;
  cfg.horizon = 60.0;
  cfg.update_time = -1.0;
  cfg.brake_time = 30.0;
  cfg.seed = 5;
  const AccScenarioResult r = run_acc_scenario(cfg);
  CHECK(r.min_d > 0.0);
  const auto& d = r.trace.col("d_m");
  const auto& dmin = r.trace.col("dmin_actual_m");
  for (std::size_t i = 0; i < r.trace.rows(); ++i)
    CHECK(d[i] - dmin[i] >= 0.0);
  // the lead really stopped
  CHECK(r.trace.col("v1_mps").back() == 0.0);
}

TEST_CASE("coasting on a flat road never speeds the vehicle up") {
  const AccParams p;
  const AccActual actual;
  for (double v2 = 0.0; v2 <= 40.0; v2 += 2.5) {
    const AccState x{30.0, v2, 80.0};
    CHECK(acc_derivative(x, 0.0, actual, 0.0, 0.0, p)(1) <= 0.0);
  }
}

TEST_CASE("scenario configs are validated before running") {
  AccScenarioConfig bad;
  bad.update_time = 400.0;
  CHECK_THROWS_AS(run_acc_scenario(bad), ConfigError);

  AccScenarioConfig fast;
  fast.v2_0 = 33.0;
  CHECK_THROWS_AS(run_acc_scenario(fast), ConfigError);

  LaneScenarioConfig lane;
  lane.dt = 3e-3;
  CHECK_THROWS_AS(run_lane_scenario(lane), ConfigError);

  CHECK(lane_mode_from("lrecbf-stale") == LaneMode::lrecbf_stale);
  CHECK(lane_mode_name(LaneMode::lrecbf) == "lrecbf");
  CHECK_THROWS_AS(lane_mode_from("hybrid"), ConfigError);
}
