#include "recbf/sim_engine.hpp"

#include <cmath>
#include <vector>

#include "doctest.h"
#include "recbf/errors.hpp"
#include "recbf/lane_change.hpp"
#include "recbf/linalg.hpp"

using namespace recbf;

TEST_CASE("rk4 step tracks the scalar exponential to fifth order") {
  const DerivFn f = [](double, const Eigen::VectorXd& x) {
    return Eigen::VectorXd(-2.0 * x);
  };
  Eigen::VectorXd x = Eigen::VectorXd::Ones(1);
  const double dt = 1e-3;
  for (int i = 0; i < 1000; ++i)
    x = rk4_step(f, static_cast<double>(i) * dt, x, dt);
  CHECK(x(0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-11));
}

TEST_CASE("rk4 matches the matrix exponential on the steering dynamics") {
  const LaneParams p;
  const LaneMatrices lm = lane_matrices(p, lane_preset("vehicle1"));
  Eigen::VectorXd x0(5);
  x0 << 0.3, -0.1, 0.05, 1.0, 0.02;

  const DerivFn f = [&lm](double, const Eigen::VectorXd& x) {
    return Eigen::VectorXd(lm.a * x);
  };
  Eigen::VectorXd x = x0;
  const double dt = 1e-3;
  for (int i = 0; i < 1000; ++i)
    x = rk4_step(f, static_cast<double>(i) * dt, x, dt);

  const Eigen::VectorXd want = expm(lm.a, 1.0) * x0;
  CHECK((x - want).norm() <= 1e-9 * want.norm());
}

TEST_CASE("a non-finite derivative aborts with the failure time") {
  const DerivFn f = [](double t, const Eigen::VectorXd& x) {
    Eigen::VectorXd dx = -x;
    if (t > 0.5) dx(0) = std::nan("");
    return dx;
  };
  Eigen::VectorXd x = Eigen::VectorXd::Ones(1);
  double t = 0.0;
  const double dt = 0.01;
  try {
    for (int i = 0; i < 100; ++i) {
      x = rk4_step(f, t, x, dt);
      t += dt;
    }
    FAIL("expected SimulationAbort");
  } catch (const SimulationAbort& e) {
    CHECK(e.t == doctest::Approx(0.51).epsilon(0.05));
  }
}

TEST_CASE("synthetic road is seeded, bounded, and reaches the worst grade") {
  const RoadProfile a = synthesize_road(300.0, 42);
  const RoadProfile b = synthesize_road(300.0, 42);
  const RoadProfile c = synthesize_road(300.0, 43);
  CHECK(a.grade == b.grade);
  CHECK(a.grade != c.grade);

  double lo = 1.0, hi = -1.0;
  for (double g : a.grade) {
    lo = std::min(lo, g);
    hi = std::max(hi, g);
  }
  CHECK(lo <= -0.06 + 1e-9);
  CHECK(lo >= -0.06 - 1e-12);
  CHECK(hi <= 0.06 + 1e-12);

  CHECK(a.at(-5.0) == a.grade.front());
  CHECK(a.at(1e6) == a.grade.back());
  CHECK(a.at(0.05) == doctest::Approx(0.5 * (a.grade[0] + a.grade[1])));
}

TEST_CASE("road profiles reject unsorted or short sample sets") {
  RoadProfile r;
  r.t = {0.0};
  r.grade = {0.0};
  CHECK_THROWS_AS(r.validate(), Error);
  r.t = {0.0, 2.0, 1.0};
  r.grade = {0.0, 0.0, 0.0};
  CHECK_THROWS_AS(r.validate(), Error);
}

TEST_CASE("lead vehicle converges exactly on a flat road") {
  RoadProfile flat;
  flat.t = {0.0, 300.0};
  flat.grade = {0.0, 0.0};
  const LeadProfile lead =
      leading_vehicle_profile(flat, 300.0, 1e-3, 25.0, 30.0);
  CHECK(std::abs(lead.v_at(299.0) - 30.0) < 1e-3);
}

TEST_CASE("lead vehicle holds the target speed over rolling terrain") {
  const RoadProfile road = synthesize_road(300.0, 7);
  const LeadProfile lead = leading_vehicle_profile(road, 300.0, 1e-3);
  CHECK(lead.v.front() == 30.0);
  for (std::size_t i = 0; i < lead.v.size(); ++i) {
    CHECK(std::abs(lead.v[i] - 30.0) < 1.5);
    CHECK(lead.a[i] >= -9.0 - 1e-12);
    CHECK(lead.a[i] <= 2.0 + 1e-12);
  }
  // the recorded acceleration stays mild: nothing near the brake clamp
  const Histogram h = make_histogram(lead.a, 25);
  CHECK(std::abs(h.mean) < 0.1);
  for (double a : lead.a) CHECK(a > -2.0);
}

TEST_CASE("scripted emergency stop brakes at the full clamp and stays put") {
  const RoadProfile road = synthesize_road(120.0, 7);
  const LeadProfile lead =
      leading_vehicle_profile(road, 120.0, 1e-3, 30.0, 30.0, 50.0);
  CHECK(lead.a_at(50.0005) == -9.0);
  CHECK(lead.v_at(49.9) > 25.0);
  CHECK(lead.v_at(54.0) == 0.0);
  CHECK(lead.v_at(119.0) == 0.0);
  CHECK(lead.a_at(60.0) == 0.0);
  for (double v : lead.v) CHECK(v >= 0.0);
}

TEST_CASE("noise injection is seeded and leaves the inputs untouched") {
  std::vector<SysidSample> base(20000);
  for (SysidSample& s : base) {
    s.x = Eigen::VectorXd::Constant(2, 1.5);
    s.u = 0.25;
    s.z = Eigen::VectorXd::Zero(2);
  }
  Eigen::VectorXd dev(2);
  dev << 0.1, 0.05;

  std::vector<SysidSample> a = base, b = base;
  RandomStream rs_a(9, "noise");
  RandomStream rs_b(9, "noise");
  inject_noise(a, dev, rs_a);
  inject_noise(b, dev, rs_b);

  double mean0 = 0.0, ss0 = 0.0;
  for (const SysidSample& s : a) mean0 += s.z(0);
  mean0 /= static_cast<double>(a.size());
  for (const SysidSample& s : a) ss0 += (s.z(0) - mean0) * (s.z(0) - mean0);
  const double sd0 = std::sqrt(ss0 / static_cast<double>(a.size() - 1));
  CHECK(std::abs(mean0) < 4.0 * 0.1 / std::sqrt(20000.0));
  CHECK(sd0 == doctest::Approx(0.1).epsilon(0.03));

  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].z == b[i].z);
    CHECK(a[i].x == base[i].x);
    CHECK(a[i].u == base[i].u);
  }
}

TEST_CASE("histogram bins, counts, and moments on hand data") {
  const Histogram h = make_histogram({0.0, 0.5, 1.0}, 2);
  CHECK(h.edges == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(h.counts == std::vector<int>{1, 2});
  CHECK(h.mean == doctest::Approx(0.5));
  CHECK(h.stddev == doctest::Approx(0.5));

  const Histogram flat = make_histogram({2.0, 2.0, 2.0}, 5);
  int total = 0;
  for (int c : flat.counts) total += c;
  CHECK(total == 3);
  CHECK(flat.stddev == 0.0);

  CHECK_THROWS_AS(make_histogram({}, 5), Error);
  CHECK_THROWS_AS(make_histogram({1.0}, 0), Error);
}

TEST_CASE("trace stores columns by name and rejects ragged rows") {
  Trace tr({"t_s", "v_mps"});
  tr.push_row({0.0, 30.0});
  tr.push_row({0.1, 29.5});
  CHECK(tr.rows() == 2);
  CHECK(tr.col("v_mps")[1] == 29.5);
  CHECK_THROWS_AS(tr.push_row({1.0}), Error);
  CHECK_THROWS_AS(tr.col("missing"), Error);
}
