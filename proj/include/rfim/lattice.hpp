#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rfim {

/// A vertex of Z^d.
struct Site {
  std::vector<int> coords;

  Site() = default;
  explicit Site(std::vector<int> c) : coords(std::move(c)) {}
  Site(std::initializer_list<int> c) : coords(c) {}

  int dim() const { return static_cast<int>(coords.size()); }
  int operator[](int k) const { return coords[static_cast<std::size_t>(k)]; }
  auto operator<=>(const Site&) const = default;
};

std::ostream& operator<<(std::ostream& os, const Site& s);
std::string to_string(const Site& s);

/// Squared Euclidean distance.
long long sq_distance(const Site& a, const Site& b);

/// The 2d nearest neighbours of s in a fixed order (axis-major, minus before plus).
std::vector<Site> lattice_neighbors(const Site& s);

/// Finite subset of Z^d. Cubes [-L,L]^d index their sites arithmetically;
/// general sets fall back to an explicit lookup table.
class Box {
 public:
  static Box cube(int L, int d);
  static Box from_sites(int d, std::vector<Site> sites);

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(sites_.size()); }
  bool empty() const { return sites_.empty(); }
  const std::vector<Site>& sites() const { return sites_; }
  const Site& site(int i) const { return sites_[static_cast<std::size_t>(i)]; }
  std::optional<int> radius() const { return radius_; }

  bool contains(const Site& s) const { return index_of(s) >= 0; }
  /// Position of s in sites(), or -1.
  int index_of(const Site& s) const;

 private:
  int dim_ = 1;
  std::vector<Site> sites_;  // lexicographically sorted
  std::optional<int> radius_;
  std::map<Site, int> lookup_;
};

std::vector<Site> exterior_boundary(const Box& box);
std::vector<Site> interior_boundary(const Box& box);

/// Squared Euclidean distance from s to the complement of the box (0 if s is outside).
long long sq_distance_to_complement(const Box& box, const Site& s);

enum class GhostMode { Single, Two };
enum class GhostTag { Single, Plus, Minus };

const char* ghost_name(GhostTag g);

enum class EdgeKind { Internal, External };

/// Lattice edge {a,b} (a < b) or external edge {a, ghost}.
struct Edge {
  EdgeKind kind = EdgeKind::Internal;
  Site a;
  Site b;
  GhostTag ghost = GhostTag::Single;

  static Edge internal(Site x, Site y);
  static Edge external(Site x, GhostTag g) { return Edge{EdgeKind::External, std::move(x), Site{}, g}; }
  bool operator==(const Edge&) const = default;
};

std::string to_string(const Edge& e);

struct EdgeSets {
  std::vector<Edge> internal;  // both endpoints in the box
  std::vector<Edge> closure;   // at least one endpoint in the box
  std::vector<Edge> external;  // ghost edges of box sites
};

/// Internal, closure and external edge sets. In two-ghost mode `field` holds
/// one value per box site (aligned with Box::sites()); positive values attach
/// to the plus ghost, negative to the minus ghost, zero to neither.
EdgeSets edge_sets(const Box& box, std::span<const double> field, GhostMode mode);

/// Closure and external edges ordered by distance to the complement, then
/// internal before external, then lexicographically on endpoints.
std::vector<Edge> edge_order(const Box& box, std::span<const double> field, GhostMode mode);

/// Box sites ordered by distance to the complement, ties lexicographic.
std::vector<Site> vertex_order(const Box& box);

/// Flattened adjacency of a box together with its exterior boundary. Hot
/// loops (samplers, enumerators) work on integer indices from here.
class BoxGraph {
 public:
  explicit BoxGraph(Box box);

  const Box& box() const { return box_; }
  int dim() const { return box_.dim(); }
  int num_sites() const { return box_.size(); }
  int num_exterior() const { return static_cast<int>(exterior_.size()); }
  const std::vector<Site>& exterior() const { return exterior_; }
  int exterior_index(const Site& s) const;

  /// Neighbours of site i: values >= 0 are site indices, value -(k+1) is exterior site k.
  std::span<const int> neighbors(int i) const {
    return {nbr_.data() + offset_[static_cast<std::size_t>(i)],
            nbr_.data() + offset_[static_cast<std::size_t>(i) + 1]};
  }
  /// Lattice edges inside the box as (i, j) with i < j.
  const std::vector<std::pair<int, int>>& internal_edges() const { return internal_; }
  /// Edges from a box site to an exterior site as (site, exterior index).
  const std::vector<std::pair<int, int>>& boundary_links() const { return links_; }

  static constexpr bool is_exterior(int code) { return code < 0; }
  static constexpr int exterior_of(int code) { return -code - 1; }

 private:
  Box box_;
  std::vector<Site> exterior_;
  std::map<Site, int> exterior_lookup_;
  std::vector<int> offset_;
  std::vector<int> nbr_;
  std::vector<std::pair<int, int>> internal_;
  std::vector<std::pair<int, int>> links_;
};

}  // namespace rfim
