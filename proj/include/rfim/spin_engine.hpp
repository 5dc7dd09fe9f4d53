#pragma once

#include <cstdint>
#include <vector>

#include "rfim/cluster.hpp"

namespace rfim {

/// Exact conditional edge probabilities for a q = 2 random cluster measure on
/// an RcGraph, given a partially revealed bond configuration. Works in the
/// spin representation: box spins are enumerated, ghosts and ghost-attached
/// exterior classes are pinned, free exterior classes are summed in closed
/// form. Cost per query is O(2^|box|).
class RcSpinEngine {
 public:
  static constexpr int kDefaultSiteCap = 14;

  RcSpinEngine(const RcGraph& g, const BondBoundary& rho, RcMode mode, int site_cap = kDefaultSiteCap);

  /// Forget all revealed edges.
  void reset();

  /// P(edge open | revealed edges). Throws if the edge is already revealed or
  /// the revealed history has probability zero.
  double prob_open(int edge) const;
  void reveal(int edge, bool open);

  /// -1 unrevealed, 0 closed, 1 open.
  int state(int edge) const { return state_[static_cast<std::size_t>(edge)]; }
  /// Partition function of the revealed history, up to the constant shared by all histories.
  double weight() const;

  const RcGraph& graph() const { return *g_; }

 private:
  struct Group {
    std::vector<int> edges;
    bool free_class = false;
  };
  double edge_factor(int edge, int st, std::size_t sigma, int t) const;
  double group_factor(const Group& grp, std::size_t sigma, int override_edge, int override_state) const;
  int vertex_spin(int v, std::size_t sigma) const;

  const RcGraph* g_;
  int n_;
  std::size_t configs_;
  std::vector<int> pinned_;          // per vertex: +1/-1 pinned, 0 box site or free exterior
  std::vector<double> p_;            // per edge
  std::vector<int> site_end_;        // per edge: the box endpoint of an edge into a free class
  std::vector<std::uint8_t> agree_;  // edges x configs, for edges outside free classes
  std::vector<Group> groups_;
  std::vector<int> group_of_;        // per edge
  std::vector<int> state_;
  std::vector<double> factor_;       // groups x configs
  std::vector<double> prod_;         // product of nonzero factors per config
  std::vector<int> zeros_;           // number of zero factors per config
  std::vector<double> init_factor_, init_prod_;
  std::vector<int> init_zeros_;
};

}  // namespace rfim
