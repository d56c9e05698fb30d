#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "redispatch/grid_model.hpp"

namespace testing_support {

using redispatch::Branch;
using redispatch::Bus;
using redispatch::BusKind;
using redispatch::Generator;
using redispatch::Network;

inline Bus bus(int number, BusKind kind, double p_load = 0.0, double q_load = 0.0) {
  Bus b;
  b.number = number;
  b.kind = kind;
  b.p_load = p_load;
  b.q_load = q_load;
  return b;
}

inline Branch line(int from, int to, double r, double x, double b = 0.0, double limit = 0.0) {
  Branch br;
  br.from = from;
  br.to = to;
  br.r = r;
  br.x = x;
  br.charging_b = b;
  br.s_limit = limit;
  return br;
}

inline Generator unit(int bus, double p, double p_max, double cost_b, double cost_a = 0.0) {
  Generator g;
  g.bus = bus;
  g.p = p;
  g.p_min = 0.0;
  g.p_max = p_max;
  g.q_min = -p_max;
  g.q_max = p_max;
  g.cost = {cost_a, cost_b, 0.0};
  return g;
}

/// Slack generator at bus 1 feeding a load at bus 2 over one line (pu data).
inline Network two_bus(double r, double x, double load, double limit = 0.0) {
  Network n;
  n.name = "two_bus";
  n.buses = {bus(1, BusKind::slack), bus(2, BusKind::pq, load, 0.0)};
  n.branches = {line(0, 1, r, x, 0.0, limit)};
  n.generators = {unit(0, load, 5.0, 10.0)};
  return n;
}

/// Dense Gaussian elimination with partial pivoting; independent of the
/// sparse code under test.
inline std::vector<double> dense_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a[i][k]) > std::abs(a[p][k])) p = i;
    std::swap(a[k], a[p]);
    std::swap(b[k], b[p]);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double m = a[i][k] / a[k][k];
      for (std::size_t j = k; j < n; ++j) a[i][j] -= m * a[k][j];
      b[i] -= m * b[k];
    }
  }
  std::vector<double> x(n);
  for (std::size_t k = n; k-- > 0;) {
    double s = b[k];
    for (std::size_t j = k + 1; j < n; ++j) s -= a[k][j] * x[j];
    x[k] = s / a[k][k];
  }
  return x;
}

}  // namespace testing_support
