#include <doctest.h>

#include <random>

#include "redispatch/case_io.hpp"
#include "redispatch/error.hpp"
#include "redispatch/power_flow.hpp"
#include "support.hpp"

using namespace redispatch;

namespace {

double total_load(const Network& net) {
  double s = 0.0;
  for (const Bus& b : net.buses) s += b.p_load;
  return net.to_mw(s);
}

}  // namespace

TEST_CASE("DC with zero injections") {
  Network net = testing_support::two_bus(0.0, 0.1, 0.0);
  net.generators[0].p = 0.0;
  const PowerFlowSolution pf = dc_power_flow(net);
  for (double t : pf.angles) CHECK(t == 0.0);
  for (const auto& f : pf.flows) CHECK(f.p_from == 0.0);
}

TEST_CASE("DC single line transfer") {
  const Network net = testing_support::two_bus(0.0, 0.1, 1.0);
  const PowerFlowSolution pf = dc_power_flow(net);
  CHECK(pf.converged);
  CHECK(pf.angles[0] == 0.0);
  CHECK(pf.angles[1] == doctest::Approx(-0.1).epsilon(1e-14));
  CHECK(pf.flows[0].p_from == doctest::Approx(100.0).epsilon(1e-14));
  CHECK(pf.slack_p == doctest::Approx(100.0));
}

TEST_CASE("DC case9 base dispatch overloads") {
  const Network net = load_builtin_case("case9");
  const PowerFlowSolution pf = dc_power_flow(net);
  CHECK(pf.flows[0].p_from == doctest::Approx(315.0).epsilon(1e-12));
  CHECK(pf.flows[0].p_from - 70.0 == doctest::Approx(245.0).epsilon(1e-12));
  CHECK(std::abs(pf.flows[1].p_from) - 40.0 == doctest::Approx(100.2).epsilon(5e-4));
  CHECK(pf.gen_p[0] == doctest::Approx(315.0));
}

TEST_CASE("DC balance and superposition") {
  for (const char* name : {"case9", "case39", "case300"}) {
    CAPTURE(name);
    const Network net = load_builtin_case(name);
    const PowerFlowSolution pf = dc_power_flow(net);
    double gen = 0.0;
    for (double p : pf.gen_p) gen += p;
    double shunt = 0.0;
    for (const Bus& b : net.buses) shunt += net.to_mw(b.shunt_g);
    CHECK(gen == doctest::Approx(total_load(net) + shunt).epsilon(1e-12));

    // Flows are affine in injections; the shift offset cancels in
    // f(a) + f(b) − f(0) = f(a + b).
    const int n = net.bus_count();
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const Vector zero = Vector::Zero(n);
    const PowerFlowSolution f0 = dc_power_flow(net, zero);
    for (int trial = 0; trial < 5; ++trial) {
      Vector a(n), b(n);
      for (int i = 0; i < n; ++i) {
        a[i] = u(rng);
        b[i] = u(rng);
      }
      const PowerFlowSolution fa = dc_power_flow(net, a), fb = dc_power_flow(net, b),
                              fab = dc_power_flow(net, a + b);
      double worst = 0.0;
      for (int k = 0; k < net.branch_count(); ++k) {
        const double lhs = fa.flows[k].p_from + fb.flows[k].p_from - f0.flows[k].p_from;
        worst = std::max(worst, std::abs(net.to_pu(lhs - fab.flows[k].p_from)));
      }
      CHECK(worst < 1e-10);
    }
  }
}

TEST_CASE("AC slack-only network") {
  Network net;
  net.buses = {testing_support::bus(1, BusKind::slack, 0.3, 0.1)};
  net.generators = {testing_support::unit(0, 0.3, 1.0, 10.0)};
  const PowerFlowSolution pf = ac_power_flow(net);
  CHECK(pf.converged);
  CHECK(pf.iterations == 0);
  CHECK(pf.slack_p == doctest::Approx(0.0));
  CHECK(pf.gen_p[0] == doctest::Approx(30.0));
}

TEST_CASE("AC two-bus residual") {
  const Network net = testing_support::two_bus(0.0, 0.1, 0.8);
  const PowerFlowSolution pf = ac_power_flow(net);
  REQUIRE(pf.converged);
  // Receiving end: power into bus 2 from the line equals its load.
  const double th = pf.angles[0] - pf.angles[1];
  const double v1 = pf.magnitudes[0], v2 = pf.magnitudes[1];
  const double p_recv = v1 * v2 * std::sin(th) / 0.1;
  const double q_recv = (v1 * v2 * std::cos(th) - v2 * v2) / 0.1;
  CHECK(std::abs(p_recv - 0.8) < 1e-8);
  CHECK(std::abs(q_recv - 0.0) < 1e-8);
}

TEST_CASE("AC case9 base dispatch overloads") {
  const Network net = load_builtin_case("case9");
  const PowerFlowSolution pf = ac_power_flow(net);
  REQUIRE(pf.converged);
  CHECK(pf.flows[0].s_max() - 70.0 == doctest::Approx(261.4).epsilon(0.01));
  CHECK(pf.flows[1].s_max() - 40.0 == doctest::Approx(105.7).epsilon(0.01));
}

TEST_CASE("AC energy balance and quadratic convergence") {
  for (const char* name : {"case9", "case39", "case300"}) {
    CAPTURE(name);
    const Network net = load_builtin_case(name);
    const PowerFlowSolution pf = ac_power_flow(net);
    REQUIRE(pf.converged);
    CHECK(pf.max_mismatch < 1e-8);
    double gen = 0.0, losses = 0.0, shunt = 0.0;
    for (double p : pf.gen_p) gen += p;
    for (const auto& f : pf.flows) losses += f.p_from + f.p_to;
    for (int i = 0; i < net.bus_count(); ++i)
      shunt += net.to_mw(net.buses[i].shunt_g) * pf.magnitudes[i] * pf.magnitudes[i];
    CHECK(std::abs(net.to_pu(gen - total_load(net) - losses - shunt)) < 1e-6);

    const auto& m = pf.mismatch_history;
    REQUIRE(m.size() >= 3);
    for (std::size_t k = m.size() - 2; k + 1 < m.size(); ++k) {
      if (m[k + 1] < 1e-13) continue;  // at round-off level
      CHECK(m[k + 1] <= 10.0 * m[k] * m[k]);
    }
  }
}

TEST_CASE("warm start at the solution") {
  const Network net = load_builtin_case("case39");
  const PowerFlowSolution pf = ac_power_flow(net);
  const PowerFlowSolution again = ac_power_flow(net, WarmStart{pf.angles, pf.magnitudes});
  CHECK(again.converged);
  CHECK(again.iterations <= 1);
}

TEST_CASE("iteration cap and divergence") {
  const Network net = load_builtin_case("case300");
  PowerFlowOptions opt;
  opt.max_iterations = 1;
  const PowerFlowSolution pf = ac_power_flow(net, std::nullopt, opt);
  CHECK_FALSE(pf.converged);
  CHECK(pf.iterations == 1);

  const Network heavy = testing_support::two_bus(0.0, 0.5, 5.0);
  try {
    const PowerFlowSolution bad = ac_power_flow(heavy);
    CHECK_FALSE(bad.converged);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::power_flow_divergence);
  }
}

TEST_CASE("reactive limits switch") {
  Network net = load_matpower_case(data_directory() / "case9.m");
  for (auto& g : net.generators) {
    g.q_max = 0.05;
    g.q_min = -0.05;
  }
  PowerFlowOptions opt;
  const PowerFlowSolution free = ac_power_flow(net, std::nullopt, opt);
  opt.enforce_q_limits = true;
  const PowerFlowSolution limited = ac_power_flow(net, std::nullopt, opt);
  REQUIRE(limited.converged);
  bool any_violation = false;
  for (int g = 1; g < 3; ++g) {
    any_violation |= free.gen_q[g] > 5.0 + 1e-9 || free.gen_q[g] < -5.0 - 1e-9;
    CHECK(limited.gen_q[g] <= 5.0 + 1e-6);
    CHECK(limited.gen_q[g] >= -5.0 - 1e-6);
  }
  CHECK(any_violation);
}
