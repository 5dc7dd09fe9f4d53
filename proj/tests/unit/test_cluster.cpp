#include "doctest.h"

#include <cmath>
#include <vector>

#include "rfim/cluster.hpp"
#include "rfim/gibbs.hpp"

using namespace rfim;

TEST_CASE("edge parameters") {
  RcEdge e;
  e.strength = 0.3;
  CHECK(e.p() == doctest::Approx(1 - std::exp(-0.6)).epsilon(1e-15));
  CHECK(e.log_closed() == doctest::Approx(-0.6).epsilon(1e-15));
  e.strength = 0.0;
  CHECK(e.p() == 0.0);
  CHECK(std::isinf(e.log_open()));
}

TEST_CASE("graph sizes and vertex layout") {
  const auto g = RcGraph::single_ghost(Box::cube(1, 2), 0.3, 0.5);
  CHECK(g.num_edges() == 24 + 9);
  CHECK(g.num_vertices() == 9 + 12 + 2);
  CHECK(g.is_site(8));
  CHECK(g.is_exterior(9));
  CHECK(g.is_ghost(g.ghost_plus()));
  for (int id = 0; id < g.num_edges(); ++id) CHECK(g.edge_id(g.edge(id).edge) == id);

  const std::vector<double> h{1.0, 0.0, -2.0};
  const auto t = RcGraph::two_ghost(Box::cube(1, 1), 0.3, 0.5, h);
  int ext = 0;
  for (const auto& e : t.edges())
    if (e.external()) {
      ++ext;
      if (e.edge.a == Site{-1}) CHECK(e.v == t.ghost_plus());
      if (e.edge.a == Site{1}) {
        CHECK(e.v == t.ghost_minus());
        CHECK(e.strength == doctest::Approx(1.0));
      }
    }
  CHECK(ext == 2);
}

TEST_CASE("single site with free boundary in closed form") {
  const double beta = 0.4, H = 0.25, q = 2.0;
  const auto g = RcGraph::single_ghost(Box::cube(0, 1), beta, H);
  const auto p = exact_rc_measure(g, BondBoundary::free(g), q, RcMode::Plain);
  const double pb = 1 - std::exp(-2 * beta), ph = 1 - std::exp(-2 * H);
  for (int e = 0; e < g.num_edges(); ++e) {
    double open = 0;
    for (std::size_t c = 0; c < p.size(); ++c)
      if ((c >> e) & 1U) open += p.prob[c];
    const double want = g.edge(e).external() ? ph / (ph + (1 - ph) * q) : pb;
    CHECK(open == doctest::Approx(want).epsilon(1e-13));
  }
}

TEST_CASE("cluster counts at the extremes") {
  const auto g = RcGraph::single_ghost(Box::cube(1, 2), 0.3, 0.5);
  const BondConfig closed(static_cast<std::size_t>(g.num_edges()), 0), open(closed.size(), 1);
  CHECK(count_clusters(g, closed, BondBoundary::free(g), false) == 9);
  CHECK(count_clusters(g, closed, BondBoundary::wired(g), false) == 9);
  CHECK(count_clusters(g, open, BondBoundary::free(g), false) == 0);
  // Internal edges only: one cluster, no ghost.
  BondConfig inner = closed;
  for (int id = 0; id < g.num_edges(); ++id) {
    const auto& e = g.edge(id);
    if (!e.external() && g.is_site(e.u) && g.is_site(e.v)) inner[static_cast<std::size_t>(id)] = 1;
  }
  CHECK(count_clusters(g, inner, BondBoundary::free(g), false) == 1);
  CHECK(connected(g, inner, 0, 8));
  CHECK_FALSE(connected(g, inner, 0, g.ghost_plus()));
}

TEST_CASE("wired random cluster connectivity gives Ising correlations") {
  // Plus boundary, constant field H >= 0: <s_x> = P(x <-> ghost), <s_x s_y> = P(x <-> y).
  const double beta = 0.3, H = 0.4;
  const std::vector<Box> boxes{Box::cube(2, 1), Box::from_sites(2, {Site{0, 0}, Site{0, 1}})};
  for (const auto& box : boxes) {
    const auto g = RcGraph::single_ghost(box, beta, H);
    const auto rho = BondBoundary::wired(g);
    const auto p = exact_rc_measure(g, rho, 2.0, RcMode::Plain);
    const auto& bg = g.box_graph();
    const auto ising = exact_measure(bg, SpinBoundary::all_plus(bg), beta,
                                     std::vector<double>(static_cast<std::size_t>(box.size()), H));
    const int n = box.size();
    std::vector<double> to_ghost(static_cast<std::size_t>(n), 0.0);
    double pair = 0;
    for (std::size_t c = 0; c < p.size(); ++c) {
      const auto w = bonds_from_index(g, c);
      for (int x = 0; x < n; ++x)
        if (connected(g, w, x, g.ghost_plus(), {}, &rho)) to_ghost[static_cast<std::size_t>(x)] += p.prob[c];
      if (connected(g, w, 0, n - 1, {}, &rho)) pair += p.prob[c];
    }
    for (int x = 0; x < n; ++x)
      CHECK(to_ghost[static_cast<std::size_t>(x)] == doctest::Approx(magnetization(ising, x)).epsilon(1e-11));
    CHECK(pair == doctest::Approx(two_point(ising, 0, n - 1)).epsilon(1e-11));
  }
}

TEST_CASE("indicator mode forbids joining the ghosts") {
  const std::vector<double> h{1.0, -1.0};
  const auto g = RcGraph::two_ghost(Box::from_sites(1, {Site{0}, Site{1}}), 0.5, 0.7, h);
  const auto rho = BondBoundary::free(g);
  const auto ind = exact_rc_measure(g, rho, 2.0, RcMode::WithIndicator);
  const auto abs = exact_rc_measure(g, rho, 2.0, RcMode::Abs);
  double joined_abs = 0;
  for (std::size_t c = 0; c < ind.size(); ++c) {
    const auto w = bonds_from_index(g, c);
    const bool joined = connected(g, w, g.ghost_plus(), g.ghost_minus());
    if (joined) {
      CHECK(ind.prob[c] == 0.0);
      joined_abs += abs.prob[c];
    }
  }
  CHECK(joined_abs > 0.0);
  CHECK(rc_log_weight(g, BondConfig(static_cast<std::size_t>(g.num_edges()), 1), rho, 2.0, RcMode::WithIndicator) ==
        kNegInf);
}

TEST_CASE("boundary validation and caps") {
  const auto g = RcGraph::single_ghost(Box::cube(1, 2), 0.3, 0.5);
  BondBoundary bad = BondBoundary::free(g);
  bad.cls.pop_back();
  CHECK_THROWS(bad.validate(g));
  CHECK_THROWS(exact_rc_measure(g, BondBoundary::free(g), 2.0, RcMode::Plain, 20));
  const auto eta = SpinBoundary::all_plus(g.box_graph());
  const auto ew = BondBoundary::eta_wired(g, eta);
  for (int c : ew.cls) CHECK(ew.ghost_mask[static_cast<std::size_t>(c)] == BondBoundary::kPlus);
}
