#include "recbf/cbf_core.hpp"

#include <cmath>
#include <vector>

#include "doctest.h"
#include "recbf/errors.hpp"

using namespace recbf;

// Envelope oracle independent of the matrix exponential: the closed loop is a
// companion matrix with characteristic roots at the requested poles, so its
// eigenvectors form the Vandermonde basis [1, p, p^2, ...]. Valid for
// distinct poles.
static double envelope_by_modes(const std::vector<double>& poles,
                                const Eigen::VectorXd& eta0, double t) {
  const int r = static_cast<int>(poles.size());
  Eigen::MatrixXd v(r, r);
  for (int j = 0; j < r; ++j)
    for (int i = 0; i < r; ++i) v(i, j) = std::pow(poles[j], i);
  const Eigen::VectorXd a = v.fullPivLu().solve(eta0);
  double h = 0.0;
  for (int j = 0; j < r; ++j) h += a(j) * std::exp(poles[j] * t);
  return h;
}

TEST_CASE("companion system wires the integrator chain") {
  const EtaSystem sys = companion_system(3);
  CHECK(sys.f.rows() == 3);
  CHECK(sys.f(0, 1) == 1.0);
  CHECK(sys.f(1, 2) == 1.0);
  CHECK(sys.f(2, 2) == 0.0);
  CHECK(sys.f(1, 0) == 0.0);
  CHECK(sys.g(0) == 0.0);
  CHECK(sys.g(2) == 1.0);
  CHECK(sys.c(0) == 1.0);
  CHECK(sys.c(1) == 0.0);
  CHECK_THROWS_AS(companion_system(0), InvalidOrder);
}

TEST_CASE("pole placement expands the characteristic polynomial") {
  // (s+1)(s+2) = s^2 + 3s + 2
  const GainRow g2 = place_poles({-1.0, -2.0});
  CHECK(g2.k(0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(g2.k(1) == doctest::Approx(3.0).epsilon(1e-12));

  // (s+2)(s+4)(s+6) = s^3 + 12s^2 + 44s + 48
  const GainRow g3 = place_poles({-2.0, -4.0, -6.0});
  CHECK(g3.k(0) == doctest::Approx(48.0).epsilon(1e-12));
  CHECK(g3.k(1) == doctest::Approx(44.0).epsilon(1e-12));
  CHECK(g3.k(2) == doctest::Approx(12.0).epsilon(1e-12));

  CHECK_THROWS_AS(place_poles({-1.0, 0.5}), AssumptionViolation);
  CHECK_THROWS_AS(place_poles({-1.0, 0.0}), AssumptionViolation);
  CHECK_THROWS_AS(place_poles({}), InvalidOrder);
}

TEST_CASE("placed gains reproduce the requested closed-loop spectrum") {
  const std::vector<std::vector<double>> sets = {
      {-1.0, -2.0}, {-2.0, -4.0, -6.0}, {-0.5, -1.5}, {-0.3, -2.2, -7.0, -11.0}};
  for (const auto& poles : sets) {
    const GainRow gain = place_poles(poles);
    const EtaSystem sys = companion_system(gain.order());
    const Eigen::MatrixXd a_cl = sys.f - sys.g * gain.k.transpose();
    Eigen::VectorXd eig = a_cl.eigenvalues().real();
    std::sort(eig.begin(), eig.end());
    std::vector<double> want = poles;
    std::sort(want.begin(), want.end());
    for (int i = 0; i < gain.order(); ++i) {
      CHECK(eig(i) == doctest::Approx(want[i]).epsilon(1e-9));
    }
  }
}

TEST_CASE("comparison envelope matches the modal oracle") {
  // Spot value: poles (-1,-2), eta0 = [1,0] gives 2e^-t - e^-2t;
  // at t = 1 that is 0.60042...
  const GainRow g2 = place_poles({-1.0, -2.0});
  Eigen::VectorXd eta0(2);
  eta0 << 1.0, 0.0;
  const double at1 = comparison_lower_bound(g2, eta0, 1.0);
  CHECK(at1 == doctest::Approx(2.0 * std::exp(-1.0) - std::exp(-2.0))
                   .epsilon(1e-10));
  CHECK(comparison_lower_bound(g2, eta0, 0.0) ==
        doctest::Approx(1.0).epsilon(1e-12));

  const GainRow g3 = place_poles({-2.0, -4.0, -6.0});
  Eigen::VectorXd eta3(3);
  eta3 << 3.85, 0.0, 0.0;
  for (double t = 0.0; t <= 10.0; t += 0.37) {
    CHECK(comparison_lower_bound(g3, eta3, t) ==
          doctest::Approx(envelope_by_modes({-2.0, -4.0, -6.0}, eta3, t))
              .epsilon(1e-10));
  }
}

TEST_CASE("grid minimize scans every node and keeps the first minimum") {
  UncertaintyBox box;
  box.entries = {{"d1", 0.6, 1.4}};
  box.grid_points_per_axis = 10;

  int evals = 0;
  const auto f = [&](const Eigen::VectorXd& d) {
    ++evals;
    return (d(0) - 1.0) * (d(0) - 1.0);
  };
  const GridMinResult r = grid_minimize(f, box);
  CHECK(evals == 10);
  // Nodes straddle 1.0 at 0.9556 and 1.0444; both are 0.0444 away from the
  // true minimizer (equidistant up to rounding).
  CHECK(std::abs(r.arg(0) - 1.0) == doctest::Approx(0.8 / 18.0).epsilon(1e-9));
  CHECK(r.value == doctest::Approx(0.001975).epsilon(1e-3));

  // Exact ties go to the lexicographically first node.
  const GridMinResult flat =
      grid_minimize([](const Eigen::VectorXd&) { return 7.0; }, box);
  CHECK(flat.arg(0) == 0.6);
  CHECK(flat.value == 7.0);
}

TEST_CASE("grid minimize covers multi-axis boxes exactly n^k times") {
  UncertaintyBox box;
  box.entries = {{"a", -1.0, 1.0}, {"b", 2.0, 3.0}, {"c", 0.5, 0.5}};
  box.grid_points_per_axis = 5;
  int evals = 0;
  const auto f = [&](const Eigen::VectorXd& d) {
    ++evals;
    return d(0) * d(0) + d(1) + d(2);
  };
  const GridMinResult r = grid_minimize(f, box);
  CHECK(evals == 125);
  CHECK(r.arg(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.arg(1) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r.arg(2) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("grid minimize rejects an inverted box") {
  UncertaintyBox box;
  box.entries = {{"a", 1.0, 0.0}};
  CHECK_THROWS_AS(grid_minimize([](const Eigen::VectorXd&) { return 0.0; }, box),
                  InvalidBox);
  UncertaintyBox empty;
  CHECK_THROWS_AS(grid_minimize([](const Eigen::VectorXd&) { return 0.0; }, empty),
                  InvalidBox);
}

static HChain constant_chain(double h0, double hdot) {
  HChain chain;
  chain.order = 1;
  chain.state_derivs = {
      [h0](const Eigen::VectorXd&, const Eigen::VectorXd&) { return h0; }};
  chain.top_deriv = [hdot](const Eigen::VectorXd&, double,
                           const Eigen::VectorXd&) { return hdot; };
  return chain;
}

TEST_CASE("initial membership recursion on a first-order chain") {
  UncertaintyBox box;
  box.entries = {{"d", 0.9, 1.1}};
  box.grid_points_per_axis = 3;
  const GainRow gain = place_poles({-2.0});
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(1);

  // nu_1 = hdot - p*h = 0 + 2*1 = 2 >= 0
  CHECK(check_initial_membership(constant_chain(1.0, 0.0), x0, gain, box).ok);

  // boundary case: everything zero sits exactly on the edge
  CHECK(check_initial_membership(constant_chain(0.0, 0.0), x0, gain, box).ok);

  // h < 0 flags index 0
  const MembershipReport bad =
      check_initial_membership(constant_chain(-0.5, 0.0), x0, gain, box);
  CHECK(!bad.ok);
  REQUIRE(!bad.violations.empty());
  CHECK(bad.violations.front().index == 0);
}

TEST_CASE("robust clamp keeps the nominal unless the bound bites") {
  CHECK(clamp_to_robust_bound(0.05, 0.02) == 0.02);
  CHECK(clamp_to_robust_bound(0.01, 0.02) == 0.01);
  CHECK(clamp_to_robust_bound(-40000.0, 1000.0, -34000.0) == -34000.0);
  CHECK_THROWS_AS(clamp_to_robust_bound(0.0, 0.0, 1.0), InfeasibleConstraint);
  try {
    clamp_to_robust_bound(0.0, -2.0, 1.0);
  } catch (const InfeasibleConstraint& e) {
    CHECK(e.floor == 1.0);
    CHECK(e.bound == -2.0);
  }
}
