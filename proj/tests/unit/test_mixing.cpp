#include "doctest.h"

#include <cmath>
#include <vector>

#include "rfim/fields.hpp"
#include "rfim/gibbs.hpp"
#include "rfim/mixing.hpp"

using namespace rfim;

namespace {

Box rectangle(int w, int h) {
  std::vector<Site> s;
  for (int x = 0; x < w; ++x)
    for (int y = 0; y < h; ++y) s.push_back(Site{x, y});
  return Box::from_sites(2, s);
}

// Deterministic mixed boundary spin for a lattice site.
int boundary_spin(const Site& s) { return ((s[0] * 7 + s[1] * 3) % 5 + 5) % 5 < 2 ? -1 : 1; }

SpinBoundary mixed_boundary(const BoxGraph& g) {
  SpinBoundary eta;
  for (const auto& s : g.exterior()) eta.values.push_back(boundary_spin(s));
  return eta;
}

double conditional_magnetization(const ExactDistribution& p, int x, int y, int sy) {
  double num = 0, den = 0;
  for (std::size_t c = 0; c < p.size(); ++c)
    if (p.ising_spin(c, y) == sy) {
      den += p.prob[c];
      num += p.prob[c] * p.ising_spin(c, x);
    }
  return num / den;
}

}  // namespace

TEST_CASE("rectangle transfer matrix equals enumeration") {
  const int w = 3, h = 4;
  const BoxGraph g(rectangle(w, h));
  const auto f = effective_field(sample_field(FieldDistribution::gaussian(), g.box(), 6), 0.7);
  const auto eta = mixed_boundary(g);
  const double beta = 0.45;
  RectangleBlock b;
  b.width = w;
  b.height = h;
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i) b.field.push_back(f[static_cast<std::size_t>(g.box().index_of(Site{i, j}))]);
  for (int i = 0; i < w; ++i) {
    b.top.push_back(boundary_spin(Site{i, -1}));
    b.bottom.push_back(boundary_spin(Site{i, h}));
  }
  for (int j = 0; j < h; ++j) {
    b.left.push_back(boundary_spin(Site{-1, j}));
    b.right.push_back(boundary_spin(Site{w, j}));
  }
  const auto p = exact_measure(g, eta, beta, f);
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i)
      CHECK(rectangle_magnetization(b, beta, j * w + i) ==
            doctest::Approx(magnetization(p, g.box().index_of(Site{i, j}))).epsilon(1e-11));
  // Clamping one site gives the conditional law.
  b.fixed.assign(static_cast<std::size_t>(w * h), 0);
  b.fixed[static_cast<std::size_t>(3 * w + 2)] = -1;
  const int x = g.box().index_of(Site{0, 0}), y = g.box().index_of(Site{2, 3});
  CHECK(rectangle_magnetization(b, beta, 0) == doctest::Approx(conditional_magnetization(p, x, y, -1)).epsilon(1e-11));

  RectangleBlock wide;
  wide.width = kMaxRectangleWidth + 1;
  wide.height = 1;
  CHECK_THROWS(rectangle_magnetization(wide, beta, 0));
}

TEST_CASE("chain formulas") {
  // Free ends, zero field: covariance tanh(beta)^r.
  const std::vector<double> zero(12, 0.0);
  for (int r : {1, 3, 7})
    CHECK(chain_truncated_two_point(0.6, zero, 0, 0, 2, 2 + r) == doctest::Approx(std::pow(std::tanh(0.6), r)).epsilon(1e-12));
  const BoxGraph g(Box::cube(4, 1));
  const auto f = effective_field(sample_field(FieldDistribution::gaussian(), g.box(), 2), 0.5);
  const auto p = exact_measure(g, SpinBoundary{{1, -1}}, 0.7, f);
  for (int x = 0; x < 9; ++x) CHECK(chain_magnetization(0.7, f, 1, -1, x) == doctest::Approx(magnetization(p, x)).epsilon(1e-11));
  CHECK(chain_truncated_two_point(0.7, f, 1, -1, 1, 6) == doctest::Approx(truncated_two_point(p, 1, 6)).epsilon(1e-10));
}

TEST_CASE("centre tv estimate") {
  const BoxGraph g(rectangle(4, 5));
  const auto f = effective_field(sample_field(FieldDistribution::bimodal(), g.box(), 8), 0.3);
  const double beta = 0.3;
  const int c = g.box().index_of(Site{1, 2});
  const auto pp = exact_measure(g, SpinBoundary::all_plus(g), beta, f);
  const auto pm = exact_measure(g, SpinBoundary::all_minus(g), beta, f);
  const double want = 0.5 * (magnetization(pp, c) - magnetization(pm, c));

  CoupledBudget big;
  big.block_radius = 5;
  const auto e = center_tv_estimate(g, beta, f, c, big, 1);
  CHECK(e.exact);
  CHECK(e.estimate.value == doctest::Approx(want).epsilon(1e-11));

  CoupledBudget small;
  small.block_radius = 1;
  small.samples = 20000;
  small.max_evaluations = 20000;
  const auto s = center_tv_estimate(g, beta, f, c, small, 2);
  CHECK_FALSE(s.exact);
  CHECK(std::abs(s.estimate.value - want) < 4 * s.estimate.stderr_ + 1e-4);
}

TEST_CASE("conditional difference and plus probability") {
  const BoxGraph g(rectangle(4, 5));
  const auto f = effective_field(sample_field(FieldDistribution::gaussian(), g.box(), 12), 0.4);
  const auto eta = mixed_boundary(g);
  const double beta = 0.35;
  const int x = g.box().index_of(Site{0, 0}), y = g.box().index_of(Site{3, 4});
  const auto p = exact_measure(g, eta, beta, f);
  const double want = conditional_magnetization(p, x, y, 1) - conditional_magnetization(p, x, y, -1);
  CoupledBudget b;
  b.block_radius = 2;
  b.samples = 20000;
  b.max_evaluations = 20000;
  const auto d = conditional_difference_estimate(g, eta, beta, f, x, y, b, 3);
  CHECK(std::abs(d.estimate.value - want) < 4 * d.estimate.stderr_ + 1e-4);

  const auto q = plus_probability_estimate(g, eta, beta, f, y, b, 4);
  const double py = 0.5 * (1 + magnetization(p, y));
  CHECK(std::abs(q.value - py) < 4 * q.stderr_ + 1e-3);
}
