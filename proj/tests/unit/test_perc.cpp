#include "doctest.h"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include "rfim/coupling.hpp"
#include "rfim/perc.hpp"

using namespace rfim;

namespace {

// Solves 1 - a^2 < pc for H at |h| = 1 in closed form.
double h2_closed_form(double beta, int d, double pc) {
  return std::max(0.0, 2.0 * d * beta - 0.5 * std::log(1.0 / std::sqrt(1.0 - pc) - 1.0));
}

Estimate est(double v, double se) { return Estimate{v, se, 1000}; }

}  // namespace

TEST_CASE("percolation temperature") {
  CHECK(beta_P(2) == doctest::Approx(std::numbers::ln2 / 2).epsilon(1e-12));
  CHECK(std::isinf(beta_P_from_pc(1.0)));
  CHECK(beta_P(3) < beta_P(2));
  CHECK_THROWS(CriticalConstants::defaults().pc_site(7));
}

TEST_CASE("h2 bound matches the closed form") {
  const auto cc = CriticalConstants::defaults();
  for (int d : {2, 3})
    for (double beta = 0.0; beta <= 1.0; beta += 0.05)
      CHECK(h2_bound(beta, d, cc) == doctest::Approx(h2_closed_form(beta, d, cc.pc_site(d))).epsilon(1e-9));
  // Frozen reference value.
  CHECK(h2_bound(0.0, 2) == doctest::Approx(0.2837033196).epsilon(1e-9));
  CHECK(h2_bound(0.3, 2, cc, 0.9) == doctest::Approx(h2_closed_form(0.3, 2, 0.9)).epsilon(1e-9));
}

TEST_CASE("h3 bound") {
  const auto cc = CriticalConstants::defaults();
  // Bimodal |h| = 1: nothing below any delta <= 1, so h3 reduces to h2.
  for (double beta : {0.0, 0.2, 0.5}) {
    const auto b = h3_bound(beta, 2, FieldDistribution::bimodal(), cc);
    REQUIRE(b.feasible);
    CHECK(b.H == doctest::Approx(h2_bound(beta, 2, cc)).epsilon(1e-9));
  }
  CHECK_FALSE(h3_bound(0.2, 2, FieldDistribution::zero(), cc).feasible);
  const auto g = h3_bound(0.2, 2, FieldDistribution::gaussian(), cc);
  REQUIRE(g.feasible);
  CHECK(h3_lhs(0.2, g.H * 1.001, g.delta, 2, FieldDistribution::gaussian()) < cc.pc_site(2));
  CHECK(g.H >= h2_bound(0.2, 2, cc));
}

TEST_CASE("decay fit recovers an exact exponential") {
  std::vector<DecayPoint> pts;
  for (double r : {2.0, 4.0, 6.0, 8.0}) pts.push_back({r, 0.7 * std::exp(-0.45 * r), 1e-3 * std::exp(-0.45 * r)});
  const auto f = decay_fit(pts);
  CHECK(f.rate == doctest::Approx(0.45).epsilon(1e-10));
  CHECK(f.log_prefactor == doctest::Approx(std::log(0.7)).epsilon(1e-10));
  CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  // An unresolved point is dropped; two left is not enough.
  pts[3].p = 1e-9;
  pts[3].stderr_ = 1e-8;
  CHECK(decay_fit(pts).used.size() == 3);
  pts.pop_back();
  pts.pop_back();
  CHECK_THROWS_AS(decay_fit(pts), std::domain_error);
}

TEST_CASE("theta classification rule") {
  const std::vector<ThetaPoint> decaying{{8, est(0.3, 0.01)}, {16, est(0.1, 0.01)}, {32, est(0.02, 0.003)}};
  CHECK(classify_theta(decaying, 10000) == Regime::Below);
  const std::vector<ThetaPoint> vanished{{8, est(0.05, 0.01)}, {16, est(0.001, 0.0005)}, {32, est(0.0, 0.0)}};
  CHECK(classify_theta(vanished, 10000) == Regime::Below);
  const std::vector<ThetaPoint> plateau{{8, est(0.5, 0.01)}, {16, est(0.48, 0.01)}, {32, est(0.47, 0.01)}};
  CHECK(classify_theta(plateau, 10000) == Regime::Above);
  const std::vector<ThetaPoint> mixed{{8, est(0.5, 0.01)}, {16, est(0.35, 0.01)}, {32, est(0.3, 0.01)}};
  CHECK(classify_theta(mixed, 10000) == Regime::Inconclusive);
  CHECK_THROWS(classify_theta(std::span(plateau).first(2), 10000));
}

TEST_CASE("crossing probability extremes and monotonicity") {
  CHECK(crossing_probability(2, 8, 0.0, true, 50, 1).value == 0.0);
  CHECK(crossing_probability(2, 8, 1.0, false, 50, 1).value == 1.0);
  const double lo = crossing_probability(2, 16, 0.45, false, 2000, 3).value;
  const double hi = crossing_probability(2, 16, 0.55, false, 2000, 3).value;
  CHECK(lo < hi);
}

TEST_CASE("averaged site estimate") {
  const BoxGraph g(Box::cube(1, 2));
  std::vector<std::uint8_t> ext(static_cast<std::size_t>(g.num_exterior()), 1);
  const std::vector<int> delta{g.box().index_of(Site{0, 0})};
  const auto r = averaged_site_estimate(0.1, 0.4, FieldDistribution::bimodal(), g, delta, ext, 2000, 1.0, 4);
  const double p = domination_p(0.1, 0.4, 1.0, 2);
  CHECK(r.one_site.value == doctest::Approx(p).epsilon(0.02));
  CHECK(r.bound == doctest::Approx(p).epsilon(1e-14));
  const double exact = product_connectivity(g, std::vector<double>(9, p), ext, delta);
  CHECK(std::abs(r.connectivity.value - exact) < 4 * r.connectivity.stderr_ + 1e-9);
}

TEST_CASE("threshold csv layout") {
  std::ostringstream os;
  H3Bound ok{true, 0.5, 0.9, ""}, no{};
  const std::vector<ThresholdRow> rows{{0.1, 0.4, ok, 2}, {0.2, 0.6, no, 2}};
  write_threshold_csv(os, rows);
  CHECK(os.str() == "# schema_version 1\nbeta, H2, H3, delta_star, d\n0.1, 0.4, 0.5, 0.9, 2\n0.2, 0.6, inf, nan, 2\n");
}
