#include "doctest.h"

#include <cmath>
#include <vector>

#include "rfim/cluster.hpp"
#include "rfim/fields.hpp"
#include "rfim/rng.hpp"
#include "rfim/spin_engine.hpp"

using namespace rfim;

namespace {

// Conditional probability of `edge` open given the revealed pattern, from the enumerated table.
double brute_conditional(const ExactDistribution& p, const std::vector<int>& st, int edge) {
  double num = 0, den = 0;
  for (std::size_t c = 0; c < p.size(); ++c) {
    bool ok = true;
    for (std::size_t e = 0; e < st.size() && ok; ++e)
      if (st[e] >= 0 && static_cast<int>((c >> e) & 1U) != st[e]) ok = false;
    if (!ok) continue;
    den += p.prob[c];
    if ((c >> edge) & 1U) num += p.prob[c];
  }
  return num / den;
}

void check_engine(const RcGraph& g, const BondBoundary& rho, RcMode mode, std::uint64_t seed) {
  const auto exact = exact_rc_measure(g, rho, 2.0, mode);
  RcSpinEngine eng(g, rho, mode);
  Rng rng(seed);
  for (int run = 0; run < 6; ++run) {
    eng.reset();
    std::vector<int> st(static_cast<std::size_t>(g.num_edges()), -1);
    std::vector<int> order(static_cast<std::size_t>(g.num_edges()));
    for (int i = 0; i < g.num_edges(); ++i) order[static_cast<std::size_t>(i)] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (int e : order) {
      const double want = brute_conditional(exact, st, e);
      const double got = eng.prob_open(e);
      REQUIRE(got == doctest::Approx(want).epsilon(1e-10));
      const bool open = rng.uniform() < got;
      eng.reveal(e, open);
      st[static_cast<std::size_t>(e)] = open;
    }
  }
}

}  // namespace

TEST_CASE("spin engine conditionals agree with enumeration, single ghost") {
  const Box box = Box::from_sites(2, {Site{0, 0}, Site{1, 0}});
  const auto g = RcGraph::single_ghost(box, 0.3, 0.2);
  check_engine(g, BondBoundary::free(g), RcMode::Plain, 1);
  check_engine(g, BondBoundary::wired(g), RcMode::Plain, 2);
  SpinBoundary eta{{1, -1, 1, -1, 1, -1}};
  check_engine(g, BondBoundary::eta_wired(g, eta), RcMode::Plain, 3);
}

TEST_CASE("spin engine conditionals agree with enumeration, two ghosts") {
  const Box box = Box::cube(1, 1);
  const std::vector<double> h{1.0, -1.0, 0.7};
  const auto g = RcGraph::two_ghost(box, 0.4, 0.5, h);
  SpinBoundary eta{{1, -1}};
  check_engine(g, BondBoundary::eta_wired(g, eta), RcMode::WithIndicator, 4);
  check_engine(g, BondBoundary::wired(g), RcMode::Abs, 5);
  check_engine(g, BondBoundary::free(g), RcMode::Abs, 6);
  check_engine(g, BondBoundary::free(g), RcMode::WithIndicator, 7);
}

TEST_CASE("spin engine on a 2x2 box with a shared exterior class") {
  const Box box = Box::from_sites(2, {Site{0, 0}, Site{0, 1}, Site{1, 0}, Site{1, 1}});
  const std::vector<double> h{0.5, -1.2, 0.9, -0.3};
  const auto g = RcGraph::two_ghost(box, 0.35, 0.8, h);
  BondBoundary rho = BondBoundary::free(g);
  rho.cls[0] = rho.cls[1] = 0;  // two exterior sites joined outside the box
  rho.cls[5] = 5;
  rho.ghost_mask[5] = BondBoundary::kMinus;
  check_engine(g, rho, RcMode::WithIndicator, 8);
  check_engine(g, rho, RcMode::Abs, 9);
}

TEST_CASE("spin engine rejects boundaries joining both ghosts in indicator mode") {
  const auto g = RcGraph::two_ghost(Box::cube(0, 1), 0.2, 0.1, std::vector<double>{1.0});
  CHECK_THROWS_AS(RcSpinEngine(g, BondBoundary::wired(g), RcMode::WithIndicator), std::domain_error);
}
