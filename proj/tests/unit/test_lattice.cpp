#include "doctest.h"

#include <algorithm>
#include <set>
#include <vector>

#include "rfim/lattice.hpp"

using namespace rfim;

TEST_CASE("cube sizes and boundaries") {
  for (int d = 1; d <= 3; ++d)
    for (int L = 0; L <= 3; ++L) {
      const Box b = Box::cube(L, d);
      int side = 2 * L + 1, n = 1, inner = 1;
      for (int k = 0; k < d; ++k) n *= side, inner *= std::max(side - 2, 0);
      CHECK(b.size() == n);
      CHECK(b.radius() == L);
      // 2d faces of side^(d-1) sites each.
      int face = 1;
      for (int k = 0; k + 1 < d; ++k) face *= side;
      CHECK(static_cast<int>(exterior_boundary(b).size()) == 2 * d * face);
      CHECK(static_cast<int>(interior_boundary(b).size()) == n - inner);
    }
}

TEST_CASE("sites are sorted and indexed") {
  const Box b = Box::cube(2, 2);
  CHECK(std::is_sorted(b.sites().begin(), b.sites().end()));
  for (int i = 0; i < b.size(); ++i) CHECK(b.index_of(b.site(i)) == i);
  CHECK(b.index_of(Site{3, 0}) == -1);
  CHECK_FALSE(b.contains(Site{0, -3}));
}

TEST_CASE("from_sites matches cube and rejects bad input") {
  const Box c = Box::cube(1, 2);
  std::vector<Site> s(c.sites().rbegin(), c.sites().rend());
  const Box f = Box::from_sites(2, s);
  CHECK(f.sites() == c.sites());
  CHECK_FALSE(f.radius().has_value());
  CHECK_THROWS_AS(Box::from_sites(2, {Site{0, 0}, Site{1}}), std::invalid_argument);
  CHECK_THROWS_AS(Box::cube(-1, 2), std::invalid_argument);
  CHECK_THROWS_AS(Box::cube(1, 0), std::invalid_argument);
}

TEST_CASE("distance to complement") {
  const Box b = Box::cube(3, 2);
  CHECK(sq_distance_to_complement(b, Site{0, 0}) == 16);
  CHECK(sq_distance_to_complement(b, Site{3, 0}) == 1);
  CHECK(sq_distance_to_complement(b, Site{2, -2}) == 4);
  CHECK(sq_distance_to_complement(b, Site{5, 0}) == 0);
}

TEST_CASE("lattice neighbours are axis-major, minus first") {
  const auto n = lattice_neighbors(Site{0, 0});
  REQUIRE(n.size() == 4);
  CHECK(n[0] == Site{-1, 0});
  CHECK(n[1] == Site{1, 0});
  CHECK(n[2] == Site{0, -1});
  CHECK(n[3] == Site{0, 1});
}

TEST_CASE("edge sets count") {
  const Box b = Box::cube(1, 2);
  std::vector<double> field(9, 0.0);
  const auto single = edge_sets(b, field, GhostMode::Single);
  CHECK(single.internal.size() == 12);
  CHECK(single.closure.size() == 24);
  CHECK(single.external.size() == 9);
  // Two ghosts: zero field attaches nowhere.
  field[0] = 0.5;
  field[4] = -1.0;
  const auto two = edge_sets(b, field, GhostMode::Two);
  REQUIRE(two.external.size() == 2);
  CHECK(two.external[0].ghost == GhostTag::Plus);
  CHECK(two.external[1].ghost == GhostTag::Minus);
  CHECK_THROWS_AS(edge_sets(b, std::vector<double>(3, 1.0), GhostMode::Two), std::invalid_argument);
}

TEST_CASE("edge order is monotone in distance and a permutation") {
  const Box b = Box::cube(2, 2);
  std::vector<double> field(static_cast<std::size_t>(b.size()), 1.0);
  const auto sets = edge_sets(b, field, GhostMode::Single);
  const auto order = edge_order(b, field, GhostMode::Single);
  CHECK(order.size() == sets.closure.size() + sets.external.size());
  auto dist = [&](const Edge& e) {
    long long a = sq_distance_to_complement(b, e.a);
    if (e.kind == EdgeKind::Internal) a = std::min(a, sq_distance_to_complement(b, e.b));
    return a;
  };
  for (std::size_t i = 1; i < order.size(); ++i) CHECK(dist(order[i - 1]) <= dist(order[i]));
  std::set<std::string> names;
  for (const auto& e : order) names.insert(to_string(e));
  CHECK(names.size() == order.size());
}

TEST_CASE("vertex order ends at the centre") {
  const Box b = Box::cube(2, 2);
  const auto v = vertex_order(b);
  REQUIRE(static_cast<int>(v.size()) == b.size());
  CHECK(v.back() == Site{0, 0});
  CHECK(sq_distance_to_complement(b, v.front()) == 1);
}

TEST_CASE("box graph adjacency") {
  const BoxGraph g(Box::cube(1, 2));
  CHECK(g.num_sites() == 9);
  CHECK(g.num_exterior() == 12);
  CHECK(g.internal_edges().size() == 12);
  CHECK(g.boundary_links().size() == 12);
  // Degree 2d everywhere; exterior codes decode to real exterior sites.
  for (int i = 0; i < g.num_sites(); ++i) {
    CHECK(g.neighbors(i).size() == 4);
    for (int c : g.neighbors(i)) {
      const Site y = BoxGraph::is_exterior(c) ? g.exterior()[static_cast<std::size_t>(BoxGraph::exterior_of(c))]
                                              : g.box().site(c);
      CHECK(sq_distance(y, g.box().site(i)) == 1);
    }
  }
  CHECK(g.exterior_index(Site{2, 0}) >= 0);
  CHECK(g.exterior_index(Site{2, 2}) == -1);
}
