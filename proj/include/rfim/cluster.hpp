#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rfim/gibbs.hpp"
#include "rfim/lattice.hpp"
#include "rfim/union_find.hpp"

namespace rfim {

/// Edge with parameter p = 1 - exp(-2 k). Endpoints are RcGraph vertex ids.
struct RcEdge {
  int u = 0;
  int v = 0;
  double strength = 0.0;
  Edge edge;

  double p() const;
  double log_open() const;    // log p, -inf when strength is 0
  double log_closed() const;  // -2 k
  bool external() const { return edge.kind == EdgeKind::External; }
};

/// Random cluster graph on the closure of a box plus ghost vertices.
/// Vertex ids: box sites 0..n-1, exterior sites n..n+m-1, then the ghost
/// (g or g+) and g-. Edges are stored in the canonical exploration order.
class RcGraph {
 public:
  /// Single ghost, constant field strength H on every external edge.
  static RcGraph single_ghost(const Box& box, double beta, double H);
  /// Single ghost with site-dependent strengths (aligned with Box::sites()).
  static RcGraph single_ghost(const Box& box, double beta, std::span<const double> strengths);
  /// Two ghosts: site x attaches to g+ if h_x > 0, to g- if h_x < 0, with strength H |h_x|.
  static RcGraph two_ghost(const Box& box, double beta, double H, std::span<const double> h);

  const BoxGraph& box_graph() const { return bg_; }
  const Box& box() const { return bg_.box(); }
  GhostMode ghost_mode() const { return mode_; }
  double beta() const { return beta_; }

  int num_sites() const { return bg_.num_sites(); }
  int num_exterior() const { return bg_.num_exterior(); }
  int num_vertices() const { return num_sites() + num_exterior() + 2; }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  const std::vector<RcEdge>& edges() const { return edges_; }
  const RcEdge& edge(int id) const { return edges_[static_cast<std::size_t>(id)]; }
  int edge_id(const Edge& e) const;

  int exterior_vertex(int k) const { return num_sites() + k; }
  int ghost_plus() const { return num_sites() + num_exterior(); }
  int ghost_minus() const { return ghost_plus() + 1; }
  bool is_site(int v) const { return v < num_sites(); }
  bool is_exterior(int v) const { return v >= num_sites() && v < ghost_plus(); }
  bool is_ghost(int v) const { return v >= ghost_plus(); }

  /// Edge ids incident to vertex v.
  const std::vector<int>& incident(int v) const { return incident_[static_cast<std::size_t>(v)]; }

 private:
  RcGraph(const Box& box, GhostMode mode, double beta);
  void build(std::span<const double> field_for_order, std::span<const double> strengths);

  BoxGraph bg_;
  GhostMode mode_;
  double beta_;
  std::vector<RcEdge> edges_;
  std::vector<std::vector<int>> incident_;
};

/// Boundary condition on the bonds outside the box, kept only through its
/// effect on the closure: which exterior sites are connected to each other
/// (class labels) and which classes reach the ghosts (bit 1: g or g+, bit 2: g-).
struct BondBoundary {
  std::vector<int> cls;
  std::vector<std::uint8_t> ghost_mask;  // indexed by class label
  std::string name;

  static constexpr std::uint8_t kPlus = 1;
  static constexpr std::uint8_t kMinus = 2;

  static BondBoundary free(const RcGraph& g);
  static BondBoundary wired(const RcGraph& g);
  /// Exterior sites with eta = +1 attach to g+ (the ghost in single-ghost mode),
  /// eta = -1 attach to g- (nothing in single-ghost mode). No site-site wiring.
  static BondBoundary eta_wired(const RcGraph& g, const SpinBoundary& eta);

  void validate(const RcGraph& g) const;
};

enum class RcMode {
  Plain,          // ghosts distinct, no constraint
  WithIndicator,  // configurations joining g+ and g- get weight zero
  Abs             // g+ and g- wired together
};

const char* rc_mode_name(RcMode m);

/// Open/closed state per edge id.
using BondConfig = std::vector<std::uint8_t>;

/// Partition of all vertices under the open edges of omega together with rho.
UnionFind rc_partition(const RcGraph& g, const BondConfig& omega, const BondBoundary& rho, bool wire_ghosts);

/// Number of clusters meeting the box and containing no ghost.
int count_clusters(const RcGraph& g, const BondConfig& omega, const BondBoundary& rho, bool wire_ghosts);

/// K ln q + sum_e [w_e ln p_e + (1 - w_e) ln(1 - p_e)]; -inf for zero-probability
/// configurations and, in WithIndicator mode, when the ghosts are joined.
double rc_log_weight(const RcGraph& g, const BondConfig& omega, const BondBoundary& rho, double q, RcMode mode);

/// Single-ghost constant-field weight.
double rc_log_weight_constant(const RcGraph& g, const BondConfig& omega, const BondBoundary& rho, double q);
/// Two-ghost weight in WithIndicator or Abs mode.
double rc_log_weight_general(const RcGraph& g, const BondConfig& omega, const BondBoundary& rho, double q, RcMode mode);

inline constexpr int kDefaultEdgeCap = 24;

/// Exact law over all 2^|E| bond configurations; bit e of the index is edge id e.
ExactDistribution exact_rc_measure(const RcGraph& g, const BondBoundary& rho, double q, RcMode mode,
                                   int cap = kDefaultEdgeCap);

BondConfig bonds_from_index(const RcGraph& g, std::size_t index);

/// Vertex filter for connectivity queries; empty means every vertex is allowed.
using VertexMask = std::vector<std::uint8_t>;

/// Mask admitting exactly the box sites (paths through Z^d edges inside the box).
VertexMask box_only_mask(const RcGraph& g);
/// Mask admitting box and exterior sites but no ghost.
VertexMask lattice_only_mask(const RcGraph& g);

/// u <-> v through open edges whose endpoints are all allowed. If rho is given
/// its connections are added (only between allowed vertices).
bool connected(const RcGraph& g, const BondConfig& omega, int u, int v, const VertexMask& allowed = {},
               const BondBoundary* rho = nullptr);
bool connected_sets(const RcGraph& g, const BondConfig& omega, std::span<const int> A, std::span<const int> B,
                    const VertexMask& allowed = {}, const BondBoundary* rho = nullptr);

}  // namespace rfim
