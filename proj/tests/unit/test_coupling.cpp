#include "doctest.h"

#include <cmath>
#include <sstream>
#include <vector>

#include "rfim/coupling.hpp"
#include "rfim/fields.hpp"

using namespace rfim;

namespace {

struct Setup {
  Box box = Box::cube(1, 2);
  FieldRealization h = sample_field(FieldDistribution::bimodal(), box, 31);
  RcGraph g = RcGraph::two_ghost(box, 0.35, 0.4, h.values);
  SpinBoundary plus = SpinBoundary::all_plus(g.box_graph());
  SpinBoundary minus = SpinBoundary::all_minus(g.box_graph());
};

}  // namespace

TEST_CASE("grand coupling is ordered pathwise") {
  Setup s;
  GrandCoupler c(s.g, BondBoundary::eta_wired(s.g, s.plus), BondBoundary::eta_wired(s.g, s.minus), {4});
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const auto r = c.run(seed);
    CHECK(r.trace.ok());
    for (std::size_t e = 0; e < r.omega_w.size(); ++e) {
      CHECK(r.omega_rho[e] <= r.omega_w[e]);
      CHECK(r.omega_rho2[e] <= r.omega_w[e]);
    }
    for (const auto& st : r.trace.steps)
      if (!st.before_tau) CHECK(st.values[0] == st.values[1]);
  }
}

TEST_CASE("ising coupling agrees off the plus cluster") {
  Setup s;
  IsingBcCoupler c(s.g, s.plus, s.minus);
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const auto r = c.run(seed);
    for (std::size_t x = 0; x < r.c_plus.size(); ++x)
      if (!r.c_plus[x]) CHECK(r.sigma_eta[x] == r.sigma_eta2[x]);
  }
}

TEST_CASE("ising coupling marginal matches the exact law") {
  Setup s;
  const auto& bg = s.g.box_graph();
  const auto f = effective_field(s.h, 0.4);
  const auto exact = exact_measure(bg, s.minus, 0.35, f);
  IsingBcCoupler c(s.g, s.plus, s.minus);
  const int n = 4000;
  double m = 0;
  for (int t = 0; t < n; ++t) m += c.run(static_cast<std::uint64_t>(t) + 1000).sigma_eta2[4];
  m /= n;
  const double want = magnetization(exact, 4);
  CHECK(std::abs(m - want) < 4 * std::sqrt((1 - want * want) / n));
}

TEST_CASE("site coupling marginals and disagreement field") {
  Setup s;
  const auto& bg = s.g.box_graph();
  const auto f = effective_field(s.h, 0.4);
  SiteCoupler c(bg, s.plus, s.minus, 0.35, f);
  const auto e_plus = exact_measure(bg, s.plus, 0.35, f);
  const int n = 4000;
  double m = 0;
  for (int t = 0; t < n; ++t) {
    const auto r = c.run(static_cast<std::uint64_t>(t));
    CHECK(r.trace.ok());
    for (std::size_t x = 0; x < r.s.size(); ++x)
      if (!r.s[x]) CHECK(r.sigma_eta[x] == r.sigma_eta2[x]);
    m += r.sigma_eta[4];
  }
  m /= n;
  const double want = magnetization(e_plus, 4);
  CHECK(std::abs(m - want) < 4 * std::sqrt((1 - want * want) / n));
}

TEST_CASE("traces are reproducible") {
  Setup s;
  std::ostringstream a, b;
  grand_rc_coupling(s.g, BondBoundary::eta_wired(s.g, s.plus), BondBoundary::eta_wired(s.g, s.minus), 5)
      .trace.write_jsonl(a);
  grand_rc_coupling(s.g, BondBoundary::eta_wired(s.g, s.plus), BondBoundary::eta_wired(s.g, s.minus), 5)
      .trace.write_jsonl(b);
  CHECK(a.str() == b.str());
  CHECK_FALSE(a.str().empty());
}

TEST_CASE("spins from bonds reject joined terminals") {
  Setup s;
  const BondConfig all(static_cast<std::size_t>(s.g.num_edges()), 1);
  CHECK_THROWS(es_conditional_spins(s.g, all, s.plus, 1));
  const BondConfig none(all.size(), 0);
  const auto sigma = es_conditional_spins(s.g, none, s.plus, 1);
  CHECK(sigma.size() == 9);
}

TEST_CASE("sign bound in closed form and as worst heat-bath probability") {
  CHECK(sign_bound_a(0.0, 0.0, 1.0, 2) == 0.5);
  CHECK(sign_bound_a(0.3, 0.5, 2.0, 2) == doctest::Approx(1.0 / (1.0 + std::exp(2.4 - 2.0))).epsilon(1e-15));
  CHECK(domination_p(0.3, 0.5, 2.0, 2) == doctest::Approx(1 - std::pow(sign_bound_a(0.3, 0.5, 2.0, 2), 2)));
  const BoxGraph g(Box::cube(0, 2));
  const SpinConfig sigma(1, 1);
  for (double h : {0.5, 1.0, 3.0}) {
    const std::vector<double> f{0.7 * h};
    const double worst = heat_bath_plus_probability(g, sigma, SpinBoundary::all_minus(g), 0.2, f, 0);
    CHECK(worst == doctest::Approx(sign_bound_a(0.2, 0.7, h, 2)).epsilon(1e-13));
  }
}

TEST_CASE("product connectivity on a path") {
  const BoxGraph g(Box::cube(1, 1));
  const std::vector<double> p{0.3, 0.9, 0.6};
  const std::vector<int> delta{1};
  CHECK(product_connectivity(g, p, std::vector<std::uint8_t>{1, 0}, delta) == doctest::Approx(0.3));
  CHECK(product_connectivity(g, p, std::vector<std::uint8_t>{1, 1}, delta) == doctest::Approx(1 - 0.7 * 0.4));
  CHECK(product_connectivity(g, p, std::vector<std::uint8_t>{0, 0}, delta) == 0.0);
  const auto dis = disagreement_boundary(SpinBoundary{{1, -1, 1}}, SpinBoundary{{1, 1, -1}});
  CHECK(dis == std::vector<std::uint8_t>{0, 1, 1});
}

TEST_CASE("product connectivity against sampled site percolation") {
  const BoxGraph g(Box::cube(1, 2));
  std::vector<double> p(9);
  for (int i = 0; i < 9; ++i) p[static_cast<std::size_t>(i)] = 0.2 + 0.07 * i;
  std::vector<std::uint8_t> ext(static_cast<std::size_t>(g.num_exterior()), 0);
  ext[0] = ext[5] = 1;
  const std::vector<int> delta{4};
  const double want = product_connectivity(g, p, ext, delta);
  const int n = 20000;
  double hits = 0;
  for (int t = 0; t < n; ++t) hits += site_path_to_delta(g, dominating_site_sample(p, static_cast<std::uint64_t>(t)), ext, delta);
  hits /= n;
  CHECK(std::abs(hits - want) < 4 * std::sqrt(want * (1 - want) / n));
}
