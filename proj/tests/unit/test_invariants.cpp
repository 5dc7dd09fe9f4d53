#include "doctest.h"

#include <cmath>
#include <vector>

#include "rfim/fields.hpp"
#include "rfim/invariants.hpp"
#include "rfim/rng.hpp"

using namespace rfim;

namespace {

std::vector<double> random_law(Rng& rng, int bits) {
  std::vector<double> p(std::size_t{1} << bits);
  double s = 0;
  for (auto& v : p) s += v = rng.uniform() * rng.uniform();
  for (auto& v : p) v /= s;
  return p;
}

}  // namespace

TEST_CASE("upset slack: max-flow agrees with listing every up-set") {
  Rng rng(42);
  for (int bits = 1; bits <= 4; ++bits)
    for (int t = 0; t < 40; ++t) {
      const auto mu = random_law(rng, bits), nu = random_law(rng, bits);
      CHECK(min_upset_slack(mu, nu, bits) == doctest::Approx(min_upset_slack_bruteforce(mu, nu, bits)).epsilon(1e-12));
    }
}

TEST_CASE("upset slack on point masses") {
  // delta_1 above delta_0 on one coordinate.
  const std::vector<double> low{1.0, 0.0}, high{0.0, 1.0};
  CHECK(min_upset_slack(low, high, 1) == doctest::Approx(0.0));
  CHECK(min_upset_slack(high, low, 1) == doctest::Approx(-1.0));
  CHECK(min_upset_slack(low, low, 1) == doctest::Approx(0.0));
}

TEST_CASE("tiny boxes respect the edge budget") {
  const auto boxes = tiny_boxes(12);
  CHECK_FALSE(boxes.empty());
  for (const auto& b : boxes) {
    const std::vector<double> h(static_cast<std::size_t>(b.size()), 1.0);
    CHECK(RcGraph::two_ghost(b, 0.3, 0.5, h).num_edges() <= 12);
  }
}

TEST_CASE("joint marginals are probability laws") {
  const Box box = Box::from_sites(2, {Site{0, 0}, Site{1, 0}});
  const auto h = sample_field(FieldDistribution::gaussian(), box, 3);
  const auto g = RcGraph::two_ghost(box, 0.4, 0.6, h.values);
  const SpinBoundary eta{std::vector<int>{1, -1, 1, -1, 1, -1}};
  const auto j = es_joint_marginals(g, eta);
  double s = 0, b = 0;
  for (double v : j.spin) s += v;
  for (double v : j.bond) b += v;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(b == doctest::Approx(1.0).epsilon(1e-12));
  // Spin marginal is the Ising law with the same field.
  const auto exact = exact_measure(g.box_graph(), eta, 0.4, effective_field(h, 0.6));
  for (std::size_t c = 0; c < j.spin.size(); ++c) CHECK(j.spin[c] == doctest::Approx(exact.prob[c]).epsilon(1e-11));
  // Every bond configuration carrying mass separates the signs.
  for (std::size_t c = 0; c < j.bond.size(); ++c)
    if (j.bond[c] > 0) CHECK(boundary_separation_event(g, bonds_from_index(g, c), eta));
}

TEST_CASE("consistency checks pass and the corrupted weight is caught") {
  OracleOptions opt;
  opt.draws = 2;
  for (const auto& r : check_es_consistency(opt)) {
    CHECK_MESSAGE(r.passed, r.name << " " << r.detail);
    CHECK(r.instances > 0);
  }
  opt.corrupt_weight = true;
  bool caught = false;
  for (const auto& r : check_es_consistency(opt))
    if (r.name == "es_spin_marginal") caught = !r.passed;
  CHECK(caught);
}

TEST_CASE("domination and truncated identity pass") {
  OracleOptions opt;
  opt.draws = 2;
  for (const auto& r : check_dominations(opt)) CHECK_MESSAGE(r.passed, r.name << " slack " << r.slack);
  const auto t = check_truncated_identity(opt);
  CHECK_MESSAGE(t.passed, t.detail);
  CHECK(t.name == "truncated_covariance_identity");
}

TEST_CASE("tv bounds pass on a few draws") {
  OracleOptions opt;
  for (const auto& r : check_tv_bounds(opt, 2)) CHECK_MESSAGE(r.passed, r.name << " slack " << r.slack);
}
