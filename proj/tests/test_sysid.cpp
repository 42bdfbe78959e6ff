#include "recbf/sysid.hpp"

#include <cmath>
#include <utility>
#include <vector>

#include "doctest.h"
#include "recbf/errors.hpp"
#include "recbf/rng.hpp"

using namespace recbf;

namespace {

Eigen::VectorXd fd_gradient(const MeasurementModel& m,
                            const Eigen::VectorXd& th) {
  Eigen::VectorXd g(th.size());
  for (Eigen::Index i = 0; i < th.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(th(i)));
    Eigen::VectorXd up = th, dn = th;
    up(i) += h;
    dn(i) -= h;
    g(i) = (residual_cost(m, up) - residual_cost(m, dn)) / (2.0 * h);
  }
  return g;
}

MeasurementModel toy_gain_model(const std::vector<double>& xs,
                                const std::vector<double>& zs, double var) {
  MeasurementModel m;
  m.theta_names = {"gain"};
  m.y_dim = 1;
  m.noise_var = Eigen::VectorXd::Constant(1, var);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    SysidSample s;
    s.x = Eigen::VectorXd::Constant(1, xs[i]);
    s.z = Eigen::VectorXd::Constant(1, zs[i]);
    m.samples.push_back(std::move(s));
  }
  m.predict = [](const SysidSample& s, const Eigen::VectorXd& th) {
    return Eigen::VectorXd(Eigen::VectorXd::Constant(1, th(0) * s.x(0)));
  };
  m.jacobian = [](const SysidSample& s, const Eigen::VectorXd&) {
    return Eigen::MatrixXd(Eigen::MatrixXd::Constant(1, 1, s.x(0)));
  };
  return m;
}

MeasurementModel lane_model_from(const Eigen::VectorXd& th_true, int n,
                                 std::uint64_t seed) {
  RandomStream rs(seed, "lane-samples");
  std::vector<SysidSample> samples(static_cast<std::size_t>(n));
  for (SysidSample& s : samples) {
    s.x = Eigen::VectorXd(5);
    s.x << 2.0 * rs.next_gaussian(), 0.5 * rs.next_gaussian(),
        0.2 * rs.next_gaussian(), 2.0 * rs.next_gaussian(),
        0.05 * rs.next_gaussian();
    s.u = 0.05 * rs.next_gaussian();
    s.z = Eigen::VectorXd::Zero(5);
  }
  MeasurementModel m = lane_measurement_model(std::move(samples), LaneParams{});
  for (SysidSample& s : m.samples) s.z = m.predict(s, th_true);
  return m;
}

MeasurementModel acc_model_from(const Eigen::VectorXd& th_true, int n,
                                std::uint64_t seed) {
  RandomStream rs(seed, "acc-samples");
  std::vector<SysidSample> samples(static_cast<std::size_t>(n));
  for (SysidSample& s : samples) {
    s.x = Eigen::VectorXd::Constant(1, 24.0 + 10.0 * rs.next_uniform());
    s.u = 4000.0 * rs.next_gaussian();
    s.z = Eigen::VectorXd::Zero(1);
  }
  MeasurementModel m = acc_measurement_model(std::move(samples), AccParams{});
  for (SysidSample& s : m.samples) s.z = m.predict(s, th_true);
  return m;
}

}  // namespace

TEST_CASE("residual cost on a hand-checked two-point dataset") {
  // z - y at gain 2: {0, -0.1}; weight 1/0.25 = 4
  const MeasurementModel m = toy_gain_model({1.0, 2.0}, {2.0, 3.9}, 0.25);
  CHECK(residual_cost(m, Eigen::VectorXd::Constant(1, 2.0)) ==
        doctest::Approx(0.5 * 4.0 * 0.01).epsilon(1e-12));
  CHECK(residual_cost(m, Eigen::VectorXd::Constant(1, 1.95)) ==
        doctest::Approx(0.5 * 4.0 * (0.0025 + 0.0)).epsilon(1e-12));
}

TEST_CASE("analytic gradients match central differences on both models") {
  Eigen::VectorXd lane_true(4);
  lane_true << 1.15, 0.7, 0.6, 1.35;
  const MeasurementModel lane = lane_model_from(lane_true, 40, 11);
  RandomStream rs(7, "theta-draws");
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd th(4);
    th << 0.7 + 0.6 * rs.next_uniform(), 0.6 + 0.8 * rs.next_uniform(),
        0.6 + 0.8 * rs.next_uniform(), 0.6 + 0.8 * rs.next_uniform();
    const Eigen::VectorXd g = cost_gradient(lane, th);
    const Eigen::VectorXd g_fd = fd_gradient(lane, th);
    CHECK((g - g_fd).norm() <= 1e-6 * std::max(1.0, g_fd.norm()));
  }

  Eigen::VectorXd acc_true(3);
  acc_true << 5000.0, 4.2, 0.007;
  const MeasurementModel acc = acc_model_from(acc_true, 40, 12);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd th(3);
    th << 4500.0 + 4000.0 * rs.next_uniform(), 3.4 + 2.2 * rs.next_uniform(),
        0.005 + 0.002 * rs.next_uniform();
    const Eigen::VectorXd g = cost_gradient(acc, th);
    const Eigen::VectorXd g_fd = fd_gradient(acc, th);
    CHECK((g - g_fd).norm() <= 1e-6 * std::max(1.0, g_fd.norm()));
  }
}

TEST_CASE("covariance of the toy model has the closed-form value") {
  // information = sum x^2 / var = (1 + 4) * 4 = 20
  const MeasurementModel m = toy_gain_model({1.0, 2.0}, {2.0, 3.9}, 0.25);
  const Eigen::VectorXd th = Eigen::VectorXd::Constant(1, 2.0);
  CHECK(fisher_covariance(m, th)(0, 0) == doctest::Approx(0.05).epsilon(1e-12));

  // noise std doubled -> covariance times four
  const MeasurementModel loud = toy_gain_model({1.0, 2.0}, {2.0, 3.9}, 1.0);
  CHECK(fisher_covariance(loud, th)(0, 0) ==
        doctest::Approx(0.2).epsilon(1e-12));

  // dataset doubled -> covariance halved
  MeasurementModel twice = toy_gain_model({1.0, 2.0, 1.0, 2.0},
                                          {2.0, 3.9, 2.0, 3.9}, 0.25);
  CHECK(fisher_covariance(twice, th)(0, 0) ==
        doctest::Approx(0.025).epsilon(1e-12));
}

TEST_CASE("a parameter the outputs never see is reported by name") {
  MeasurementModel m = toy_gain_model({1.0, 2.0}, {2.0, 3.9}, 0.25);
  m.theta_names = {"gain", "ghost"};
  m.predict = [](const SysidSample& s, const Eigen::VectorXd& th) {
    return Eigen::VectorXd(Eigen::VectorXd::Constant(1, th(0) * s.x(0)));
  };
  m.jacobian = [](const SysidSample& s, const Eigen::VectorXd&) {
    Eigen::MatrixXd j(1, 2);
    j << s.x(0), 0.0;
    return j;
  };
  Eigen::VectorXd th(2);
  th << 2.0, 1.0;
  CHECK_THROWS_WITH_AS(fisher_covariance(m, th),
                       doctest::Contains("ghost"), UnidentifiableParameter);
}

TEST_CASE("fit recovers the generating lane parameters from clean data") {
  Eigen::VectorXd th_true(4);
  th_true << 1.15, 0.7, 0.6, 1.35;
  const MeasurementModel m = lane_model_from(th_true, 200, 21);
  const FitResult r = fit(m, Eigen::VectorXd::Ones(4));
  CHECK(r.converged);
  CHECK(r.cost < 1e-10);
  for (int i = 0; i < 4; ++i)
    CHECK(r.theta(i) == doctest::Approx(th_true(i)).epsilon(1e-5));
  CHECK(r.sigma.size() == 4);
  CHECK((r.sigma.array() > 0.0).all());
}

TEST_CASE("fit recovers the generating longitudinal parameters") {
  Eigen::VectorXd th_true(3);
  th_true << 5000.0, 4.2, 0.007;
  const MeasurementModel m = acc_model_from(th_true, 400, 22);
  Eigen::VectorXd th0(3);
  th0 << 6500.0, 4.9, 0.006;
  const FitResult r = fit(m, th0);
  CHECK(r.converged);
  CHECK(r.theta(0) == doctest::Approx(5000.0).epsilon(1e-3));
  CHECK(r.theta(1) == doctest::Approx(4.2).epsilon(1e-3));
  CHECK(r.theta(2) == doctest::Approx(0.007).epsilon(1e-2));
}

TEST_CASE("box update clips to the initial interval and applies the gate") {
  const BoxEntry init{"d_i", 0.7, 1.3};

  SUBCASE("accepted and clipped at the top") {
    const BoxUpdate u = update_box(init, 1.202, 0.037, 3.0, 1e9);
    CHECK(u.accepted);
    CHECK_FALSE(u.model_mismatch);
    CHECK(u.box.lo == doctest::Approx(1.202 - 3.0 * 0.037).epsilon(1e-12));
    CHECK(u.box.hi == 1.3);
  }

  SUBCASE("wide initial interval keeps the raw three-sigma band") {
    const BoxUpdate u = update_box(BoxEntry{"d_i", 0.0, 2.0}, 1.202, 0.037,
                                   3.0, 1e9);
    CHECK(u.accepted);
    CHECK(u.box.lo == doctest::Approx(1.091).epsilon(1e-12));
    CHECK(u.box.hi == doctest::Approx(1.313).epsilon(1e-12));
  }

  SUBCASE("estimate outside the initial interval flags model mismatch") {
    const BoxUpdate u = update_box(init, 1.35, 0.01, 3.0, 1e9);
    CHECK_FALSE(u.accepted);
    CHECK(u.model_mismatch);
    CHECK(u.box.lo == init.lo);
    CHECK(u.box.hi == init.hi);
  }

  SUBCASE("relative sigma above the gate keeps the initial interval") {
    const BoxUpdate u = update_box(BoxEntry{"af_cd0", 3.4, 5.6}, 3.92, 0.95,
                                   3.0, 0.05);
    CHECK_FALSE(u.accepted);
    CHECK_FALSE(u.model_mismatch);
    CHECK(u.box.lo == 3.4);
    CHECK(u.box.hi == 5.6);
  }

  SUBCASE("tight sigma passes a five percent gate") {
    const BoxUpdate u = update_box(BoxEntry{"m", 4500.0, 8500.0}, 5026.0, 57.0,
                                   3.0, 0.05);
    CHECK(u.accepted);
    CHECK(u.box.lo == doctest::Approx(5026.0 - 171.0));
    CHECK(u.box.hi == doctest::Approx(5026.0 + 171.0));
  }

  SUBCASE("result never widens the initial interval") {
    RandomStream rs(5, "box-draws");
    for (int i = 0; i < 50; ++i) {
      const double mu = 0.5 + 1.0 * rs.next_uniform();
      const double sg = 0.2 * rs.next_uniform();
      const BoxUpdate u = update_box(init, mu, sg, 3.0, 1e9);
      CHECK(u.box.lo >= init.lo);
      CHECK(u.box.hi <= init.hi);
      if (u.accepted) {
        CHECK(u.box.lo <= mu);
        CHECK(u.box.hi >= mu);
      }
    }
  }
}

TEST_CASE("degenerate datasets are rejected") {
  MeasurementModel empty = toy_gain_model({}, {}, 0.25);
  CHECK_THROWS_AS(residual_cost(empty, Eigen::VectorXd::Constant(1, 2.0)),
                  DegenerateParameter);

  MeasurementModel bad = toy_gain_model({1.0}, {2.0}, 0.25);
  bad.samples[0].z(0) = std::nan("");
  CHECK_THROWS_AS(cost_gradient(bad, Eigen::VectorXd::Constant(1, 2.0)),
                  Error);
}
