#include "rfim/lattice.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <tuple>

namespace rfim {

std::ostream& operator<<(std::ostream& os, const Site& s) {
  os << '(';
  for (int k = 0; k < s.dim(); ++k) os << (k ? "," : "") << s[k];
  return os << ')';
}

std::string to_string(const Site& s) {
  std::ostringstream os;
  os << s;
  return os.str();
}

long long sq_distance(const Site& a, const Site& b) {
  long long d2 = 0;
  for (int k = 0; k < a.dim(); ++k) {
    const long long d = a[k] - b[k];
    d2 += d * d;
  }
  return d2;
}

std::vector<Site> lattice_neighbors(const Site& s) {
  std::vector<Site> out;
  out.reserve(2 * s.coords.size());
  for (std::size_t k = 0; k < s.coords.size(); ++k) {
    for (int step : {-1, 1}) {
      Site n = s;
      n.coords[k] += step;
      out.push_back(std::move(n));
    }
  }
  return out;
}

Box Box::cube(int L, int d) {
  if (d < 1) throw std::invalid_argument("box: dimension must be >= 1");
  if (L < 0) throw std::invalid_argument("box: radius must be >= 0");
  Box b;
  b.dim_ = d;
  b.radius_ = L;
  const int side = 2 * L + 1;
  long long total = 1;
  for (int k = 0; k < d; ++k) total *= side;
  b.sites_.reserve(static_cast<std::size_t>(total));
  std::vector<int> c(static_cast<std::size_t>(d), -L);
  for (long long i = 0; i < total; ++i) {
    b.sites_.emplace_back(c);
    for (int k = d - 1; k >= 0; --k) {
      if (++c[static_cast<std::size_t>(k)] <= L) break;
      c[static_cast<std::size_t>(k)] = -L;
    }
  }
  return b;
}

Box Box::from_sites(int d, std::vector<Site> sites) {
  if (d < 1) throw std::invalid_argument("box: dimension must be >= 1");
  Box b;
  b.dim_ = d;
  std::sort(sites.begin(), sites.end());
  sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
  for (const auto& s : sites)
    if (s.dim() != d) throw std::invalid_argument("box: site dimension mismatch");
  b.sites_ = std::move(sites);
  for (int i = 0; i < b.size(); ++i) b.lookup_.emplace(b.sites_[static_cast<std::size_t>(i)], i);
  return b;
}

int Box::index_of(const Site& s) const {
  if (s.dim() != dim_) return -1;
  if (radius_) {
    const int L = *radius_;
    const int side = 2 * L + 1;
    int idx = 0;
    for (int k = 0; k < dim_; ++k) {
      const int c = s[k];
      if (c < -L || c > L) return -1;
      idx = idx * side + (c + L);
    }
    return idx;
  }
  auto it = lookup_.find(s);
  return it == lookup_.end() ? -1 : it->second;
}

std::vector<Site> exterior_boundary(const Box& box) {
  std::set<Site> out;
  for (const auto& s : box.sites())
    for (auto& n : lattice_neighbors(s))
      if (!box.contains(n)) out.insert(std::move(n));
  return {out.begin(), out.end()};
}

std::vector<Site> interior_boundary(const Box& box) {
  std::vector<Site> out;
  for (const auto& s : box.sites()) {
    for (const auto& n : lattice_neighbors(s)) {
      if (!box.contains(n)) {
        out.push_back(s);
        break;
      }
    }
  }
  return out;
}

long long sq_distance_to_complement(const Box& box, const Site& s) {
  if (!box.contains(s)) return 0;
  if (auto L = box.radius()) {
    long long best = -1;
    for (int k = 0; k < s.dim(); ++k) {
      const long long gap = *L + 1 - std::abs(s[k]);
      if (best < 0 || gap * gap < best) best = gap * gap;
    }
    return best;
  }
  // The nearest point outside a finite set is always on its exterior boundary.
  long long best = -1;
  for (const auto& z : exterior_boundary(box)) {
    const long long d2 = sq_distance(s, z);
    if (best < 0 || d2 < best) best = d2;
  }
  return best;
}

const char* ghost_name(GhostTag g) {
  switch (g) {
    case GhostTag::Single: return "g";
    case GhostTag::Plus: return "g+";
    case GhostTag::Minus: return "g-";
  }
  return "?";
}

Edge Edge::internal(Site x, Site y) {
  if (y < x) std::swap(x, y);
  return Edge{EdgeKind::Internal, std::move(x), std::move(y), GhostTag::Single};
}

std::string to_string(const Edge& e) {
  if (e.kind == EdgeKind::Internal) return "{" + to_string(e.a) + "," + to_string(e.b) + "}";
  return "{" + to_string(e.a) + "," + ghost_name(e.ghost) + "}";
}

EdgeSets edge_sets(const Box& box, std::span<const double> field, GhostMode mode) {
  if (mode == GhostMode::Two && static_cast<int>(field.size()) != box.size())
    throw std::invalid_argument("edge_sets: two-ghost mode needs one field value per site");
  EdgeSets out;
  for (int i = 0; i < box.size(); ++i) {
    const Site& s = box.site(i);
    for (auto& n : lattice_neighbors(s)) {
      const bool inside = box.contains(n);
      if (inside && !(s < n)) continue;
      Edge e = Edge::internal(s, n);
      if (inside) out.internal.push_back(e);
      out.closure.push_back(std::move(e));
    }
    if (mode == GhostMode::Single) {
      out.external.push_back(Edge::external(s, GhostTag::Single));
    } else {
      const double h = field[static_cast<std::size_t>(i)];
      if (h > 0) out.external.push_back(Edge::external(s, GhostTag::Plus));
      if (h < 0) out.external.push_back(Edge::external(s, GhostTag::Minus));
    }
  }
  auto by_endpoints = [](const Edge& x, const Edge& y) { return std::tie(x.a, x.b) < std::tie(y.a, y.b); };
  std::sort(out.internal.begin(), out.internal.end(), by_endpoints);
  std::sort(out.closure.begin(), out.closure.end(), by_endpoints);
  return out;
}

std::vector<Edge> edge_order(const Box& box, std::span<const double> field, GhostMode mode) {
  auto sets = edge_sets(box, field, mode);
  struct Keyed {
    long long dist;
    int kind;
    Edge edge;
  };
  std::vector<Keyed> keyed;
  keyed.reserve(sets.closure.size() + sets.external.size());
  for (auto& e : sets.closure) {
    const long long d = std::min(sq_distance_to_complement(box, e.a), sq_distance_to_complement(box, e.b));
    keyed.push_back({d, 0, std::move(e)});
  }
  for (auto& e : sets.external) keyed.push_back({sq_distance_to_complement(box, e.a), 1, std::move(e)});
  std::sort(keyed.begin(), keyed.end(), [](const Keyed& x, const Keyed& y) {
    return std::tie(x.dist, x.kind, x.edge.a, x.edge.b, x.edge.ghost) <
           std::tie(y.dist, y.kind, y.edge.a, y.edge.b, y.edge.ghost);
  });
  std::vector<Edge> out;
  out.reserve(keyed.size());
  for (auto& k : keyed) out.push_back(std::move(k.edge));
  return out;
}

std::vector<Site> vertex_order(const Box& box) {
  std::vector<std::pair<long long, Site>> keyed;
  keyed.reserve(static_cast<std::size_t>(box.size()));
  for (const auto& s : box.sites()) keyed.emplace_back(sq_distance_to_complement(box, s), s);
  std::sort(keyed.begin(), keyed.end());
  std::vector<Site> out;
  out.reserve(keyed.size());
  for (auto& k : keyed) out.push_back(std::move(k.second));
  return out;
}

BoxGraph::BoxGraph(Box box) : box_(std::move(box)) {
  exterior_ = exterior_boundary(box_);
  for (int k = 0; k < num_exterior(); ++k) exterior_lookup_.emplace(exterior_[static_cast<std::size_t>(k)], k);
  offset_.reserve(static_cast<std::size_t>(num_sites()) + 1);
  offset_.push_back(0);
  for (int i = 0; i < num_sites(); ++i) {
    for (const auto& n : lattice_neighbors(box_.site(i))) {
      const int j = box_.index_of(n);
      if (j >= 0) {
        nbr_.push_back(j);
        if (i < j) internal_.emplace_back(i, j);
      } else {
        const int k = exterior_lookup_.at(n);
        nbr_.push_back(-k - 1);
        links_.emplace_back(i, k);
      }
    }
    offset_.push_back(static_cast<int>(nbr_.size()));
  }
}

int BoxGraph::exterior_index(const Site& s) const {
  auto it = exterior_lookup_.find(s);
  return it == exterior_lookup_.end() ? -1 : it->second;
}

}  // namespace rfim
