#include "rfim/mixing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rfim/rng.hpp"

namespace rfim {

namespace {

void check_boundary(const std::vector<int>& v, int n, const char* what) {
  if (static_cast<int>(v.size()) != n) throw std::invalid_argument(std::string("rectangle ") + what + " boundary has wrong size");
}

// log Z of the rectangle with sigma_target clamped to `clamp` (0 = unclamped).
double rectangle_log_z(const RectangleBlock& b, double beta, int target, int clamp) {
  const int w = b.width, h = b.height;
  std::vector<double> v(std::size_t{1} << w, 0.0);
  v[0] = 1.0;
  double log_scale = 0;
  for (int j = 0; j < h; ++j) {
    for (int i = 0; i < w; ++i) {
      const int t = j * w + i;
      int pinned = b.fixed.empty() ? 0 : b.fixed[static_cast<std::size_t>(t)];
      if (t == target && clamp != 0) {
        if (pinned != 0 && pinned != clamp) return kNegInf;
        pinned = clamp;
      }
      const double f = b.field[static_cast<std::size_t>(t)];
      int fixed_nbrs = 0;
      if (i == w - 1) fixed_nbrs += b.right[static_cast<std::size_t>(j)];
      if (j == h - 1) fixed_nbrs += b.bottom[static_cast<std::size_t>(i)];
      if (j == 0) fixed_nbrs += b.top[static_cast<std::size_t>(i)];
      if (i == 0) fixed_nbrs += b.left[static_cast<std::size_t>(j)];
      // W[s][up][left] with up/left in {-1,+1} indexed 0/1.
      double W[2][2][2];
      for (int s = 0; s < 2; ++s)
        for (int u = 0; u < 2; ++u)
          for (int l = 0; l < 2; ++l) {
            const int sv = s ? 1 : -1;
            int nb = fixed_nbrs;
            if (j > 0) nb += u ? 1 : -1;
            if (i > 0) nb += l ? 1 : -1;
            const bool allowed = pinned == 0 || pinned == sv;
            W[s][u][l] = allowed ? std::exp(sv * (beta * nb + f)) : 0.0;
          }
      const std::size_t bit = std::size_t{1} << i;
      double mx = 0;
      for (std::size_t st = 0; st < v.size(); ++st) {
        if (st & bit) continue;
        const int l = (i > 0 && (st >> (i - 1)) & 1U) ? 1 : 0;
        const double a = v[st], c = v[st | bit];
        const double lo = a * W[0][0][l] + c * W[0][1][l];
        const double hi = a * W[1][0][l] + c * W[1][1][l];
        v[st] = lo;
        v[st | bit] = hi;
        mx = std::max(mx, std::max(lo, hi));
      }
      if (mx == 0) return kNegInf;
      for (auto& x : v) x /= mx;
      log_scale += std::log(mx);
    }
  }
  double z = 0;
  for (double x : v) z += x;
  return log_scale + std::log(z);
}

// Heat-bath conditional probabilities by table lookup: p_plus(x) = table[x][k + 4]
// with k the sum of the neighbouring spins.
class FastHeatBath {
 public:
  FastHeatBath(const BoxGraph& g, double beta, std::span<const double> field) : g_(&g) {
    const int n = g.num_sites();
    if (static_cast<int>(field.size()) != n) throw std::invalid_argument("field size mismatch");
    table_.resize(static_cast<std::size_t>(n) * 9);
    for (int x = 0; x < n; ++x)
      for (int k = -4; k <= 4; ++k)
        table_[static_cast<std::size_t>(x) * 9 + static_cast<std::size_t>(k + 4)] =
            1.0 / (1.0 + std::exp(-2.0 * (beta * k + field[static_cast<std::size_t>(x)])));
    if (g.dim() > 2) throw std::invalid_argument("fast heat bath supports d <= 2");
  }

  int nsum(const SpinConfig& s, const SpinBoundary& eta, int x) const {
    int k = 0;
    for (int c : g_->neighbors(x))
      k += BoxGraph::is_exterior(c) ? eta.values[static_cast<std::size_t>(BoxGraph::exterior_of(c))]
                                    : s[static_cast<std::size_t>(c)];
    return k;
  }

  double p_plus(const SpinConfig& s, const SpinBoundary& eta, int x) const {
    return table_[static_cast<std::size_t>(x) * 9 + static_cast<std::size_t>(nsum(s, eta, x) + 4)];
  }

  void update(SpinConfig& s, const SpinBoundary& eta, int x, double u) const {
    s[static_cast<std::size_t>(x)] = u < p_plus(s, eta, x) ? Spin{1} : Spin{-1};
  }

 private:
  const BoxGraph* g_;
  std::vector<double> table_;
};

// Rectangle of box sites around a centre, with the source of every boundary spin.
struct BlockLayout {
  RectangleBlock block;
  std::vector<int> sites;                       // box index per block site (row-major)
  std::vector<int> top, bottom, left, right;    // neighbour codes: >= 0 box site, < 0 exterior
  bool whole_box = false;
};

int neighbour_code(const BoxGraph& g, const Site& s) {
  const int i = g.box().index_of(s);
  if (i >= 0) return i;
  const int k = g.exterior_index(s);
  if (k < 0) throw std::logic_error("block neighbour is neither in the box nor on its boundary");
  return -(k + 1);
}

BlockLayout make_block(const BoxGraph& g, std::span<const double> field, int center, int radius) {
  const Box& box = g.box();
  if (box.dim() != 2) throw std::invalid_argument("block estimator needs d = 2");
  int xmin = 1 << 30, xmax = -(1 << 30), ymin = xmin, ymax = xmax;
  for (const auto& s : box.sites()) {
    xmin = std::min(xmin, s[0]);
    xmax = std::max(xmax, s[0]);
    ymin = std::min(ymin, s[1]);
    ymax = std::max(ymax, s[1]);
  }
  if (static_cast<long long>(xmax - xmin + 1) * (ymax - ymin + 1) != box.size())
    throw std::invalid_argument("block estimator needs a rectangular box");
  const Site& c = box.site(center);
  const int x0 = std::max(xmin, c[0] - radius), x1 = std::min(xmax, c[0] + radius);
  const int y0 = std::max(ymin, c[1] - radius), y1 = std::min(ymax, c[1] + radius);
  BlockLayout L;
  L.block.width = x1 - x0 + 1;
  L.block.height = y1 - y0 + 1;
  if (L.block.width > kMaxRectangleWidth) throw std::length_error("block wider than the transfer-matrix cap");
  L.whole_box = L.block.width * L.block.height == box.size();
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const int i = box.index_of(Site{x, y});
      L.sites.push_back(i);
      L.block.field.push_back(field[static_cast<std::size_t>(i)]);
    }
  for (int x = x0; x <= x1; ++x) {
    L.top.push_back(neighbour_code(g, Site{x, y0 - 1}));
    L.bottom.push_back(neighbour_code(g, Site{x, y1 + 1}));
  }
  for (int y = y0; y <= y1; ++y) {
    L.left.push_back(neighbour_code(g, Site{x0 - 1, y}));
    L.right.push_back(neighbour_code(g, Site{x1 + 1, y}));
  }
  L.block.top.resize(L.top.size());
  L.block.bottom.resize(L.bottom.size());
  L.block.left.resize(L.left.size());
  L.block.right.resize(L.right.size());
  return L;
}

int spin_at(int code, const SpinConfig& s, const SpinBoundary& eta) {
  return code >= 0 ? s[static_cast<std::size_t>(code)] : eta.values[static_cast<std::size_t>(-code - 1)];
}

// Copies the spins around the block out of a configuration.
void load_boundary(BlockLayout& L, const SpinConfig& s, const SpinBoundary& eta) {
  auto fill = [&](const std::vector<int>& codes, std::vector<int>& out) {
    for (std::size_t k = 0; k < codes.size(); ++k) out[k] = spin_at(codes[k], s, eta);
  };
  fill(L.top, L.block.top);
  fill(L.bottom, L.block.bottom);
  fill(L.left, L.block.left);
  fill(L.right, L.block.right);
}

bool same_boundary(const BlockLayout& L, const SpinConfig& a, const SpinBoundary& ea, const SpinConfig& b,
                   const SpinBoundary& eb) {
  for (const auto* codes : {&L.top, &L.bottom, &L.left, &L.right})
    for (int c : *codes)
      if (spin_at(c, a, ea) != spin_at(c, b, eb)) return false;
  return true;
}

int block_position(const BlockLayout& L, int site) {
  const auto it = std::find(L.sites.begin(), L.sites.end(), site);
  return it == L.sites.end() ? -1 : static_cast<int>(it - L.sites.begin());
}

// Sites visited by a windowed sweep: within sup-distance `window` of the
// bounding rectangle of `anchors`. Empty means the whole box.
std::vector<int> window_sites(const BoxGraph& g, std::span<const int> anchors, int window) {
  std::vector<int> out;
  if (window <= 0) return out;
  const Box& box = g.box();
  std::vector<int> lo(static_cast<std::size_t>(box.dim()), 1 << 30), hi(lo.size(), -(1 << 30));
  for (int a : anchors)
    for (int k = 0; k < box.dim(); ++k) {
      lo[static_cast<std::size_t>(k)] = std::min(lo[static_cast<std::size_t>(k)], box.site(a)[k] - window);
      hi[static_cast<std::size_t>(k)] = std::max(hi[static_cast<std::size_t>(k)], box.site(a)[k] + window);
    }
  for (int i = 0; i < box.size(); ++i) {
    bool in = true;
    for (int k = 0; k < box.dim() && in; ++k)
      in = box.site(i)[k] >= lo[static_cast<std::size_t>(k)] && box.site(i)[k] <= hi[static_cast<std::size_t>(k)];
    if (in) out.push_back(i);
  }
  if (static_cast<int>(out.size()) == box.size()) out.clear();
  return out;
}

// Runs the coupled sweeps; `differs` says whether the block boundary disagrees
// and `value` evaluates the estimator.
template <class Sweep, class Differs, class Value>
void run_thinned(const CoupledBudget& budget, BlockEstimate& out, Sweep sweep, Differs differs, Value value) {
  for (int t = 0; t < budget.burn_in; ++t) sweep();
  int hits = 0;
  const int pilot = std::min(budget.pilot, budget.samples);
  for (int t = 0; t < pilot; ++t) {
    sweep();
    if (differs()) ++hits;
  }
  const double expected = static_cast<double>(hits) / std::max(pilot, 1) * budget.samples;
  out.gap = std::max(1, static_cast<int>(std::ceil(expected / std::max(budget.max_evaluations, 1))));
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(budget.samples / out.gap + 1));
  for (int t = 1; t <= budget.samples; ++t) {
    sweep();
    if (t % out.gap == 0) values.push_back(differs() ? value() : 0.0);
  }
  out.estimate = batch_means(values, static_cast<std::size_t>(budget.batches));
}

int chebyshev(const Site& a, const Site& b) {
  int d = 0;
  for (int k = 0; k < a.dim(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

}  // namespace

double rectangle_magnetization(const RectangleBlock& b, double beta, int target) {
  if (b.width < 1 || b.height < 1) throw std::invalid_argument("empty rectangle");
  if (b.width > kMaxRectangleWidth) throw std::length_error("rectangle width exceeds transfer-matrix cap");
  const int n = b.width * b.height;
  if (static_cast<int>(b.field.size()) != n) throw std::invalid_argument("rectangle field has wrong size");
  if (!b.fixed.empty() && static_cast<int>(b.fixed.size()) != n) throw std::invalid_argument("rectangle clamp has wrong size");
  check_boundary(b.top, b.width, "top");
  check_boundary(b.bottom, b.width, "bottom");
  check_boundary(b.left, b.height, "left");
  check_boundary(b.right, b.height, "right");
  if (target < 0 || target >= n) throw std::out_of_range("target outside rectangle");
  const double zp = rectangle_log_z(b, beta, target, +1);
  const double zm = rectangle_log_z(b, beta, target, -1);
  if (zp == kNegInf && zm == kNegInf) throw std::domain_error("rectangle clamps are inconsistent");
  if (zp == kNegInf) return -1.0;
  if (zm == kNegInf) return 1.0;
  return std::tanh(0.5 * (zp - zm));
}

namespace {

struct ChainSweep {
  std::vector<double> fp, fm, bp, bm;  // normalized forward/backward weights for spin + / -
};

ChainSweep chain_sweep(double beta, std::span<const double> field, int left, int right) {
  const std::size_t n = field.size();
  if (n == 0) throw std::invalid_argument("empty chain");
  ChainSweep c;
  c.fp.resize(n);
  c.fm.resize(n);
  c.bp.resize(n);
  c.bm.resize(n);
  const double ep = std::exp(beta), em = std::exp(-beta);
  double p = std::exp(beta * left + field[0]), m = std::exp(-beta * left - field[0]);
  for (std::size_t i = 0;; ++i) {
    const double s = p + m;
    c.fp[i] = p / s;
    c.fm[i] = m / s;
    if (i + 1 == n) break;
    const double f = field[i + 1];
    p = (c.fp[i] * ep + c.fm[i] * em) * std::exp(f);
    m = (c.fp[i] * em + c.fm[i] * ep) * std::exp(-f);
  }
  p = std::exp(beta * right);
  m = std::exp(-beta * right);
  for (std::size_t i = n;;) {
    --i;
    const double s = p + m;
    c.bp[i] = p / s;
    c.bm[i] = m / s;
    if (i == 0) break;
    const double f = field[i];
    // B_{i-1}(s) = sum_t exp(beta s t + f_i t) B_i(t)
    p = ep * std::exp(f) * c.bp[i] + em * std::exp(-f) * c.bm[i];
    m = em * std::exp(f) * c.bp[i] + ep * std::exp(-f) * c.bm[i];
  }
  return c;
}

}  // namespace

double chain_magnetization(double beta, std::span<const double> field, int left, int right, int x) {
  if (x < 0 || x >= static_cast<int>(field.size())) throw std::out_of_range("chain site out of range");
  const auto c = chain_sweep(beta, field, left, right);
  const auto i = static_cast<std::size_t>(x);
  const double p = c.fp[i] * c.bp[i], m = c.fm[i] * c.bm[i];
  return (p - m) / (p + m);
}

double chain_truncated_two_point(double beta, std::span<const double> field, int left, int right, int x, int y) {
  const int n = static_cast<int>(field.size());
  if (x < 0 || y < 0 || x >= n || y >= n) throw std::out_of_range("chain site out of range");
  if (x == y) {
    const double m = chain_magnetization(beta, field, left, right, x);
    return 1 - m * m;
  }
  if (x > y) std::swap(x, y);
  const auto c = chain_sweep(beta, field, left, right);
  // M[a][b] = weight of the path from sigma_x = a to sigma_y = b, normalized.
  double M[2][2] = {{1, 0}, {0, 1}};  // index 0 = -, 1 = +
  for (int k = x + 1; k <= y; ++k) {
    const double f = field[static_cast<std::size_t>(k)];
    double N[2][2];
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        const int sb = b ? 1 : -1;
        N[a][b] = M[a][0] * std::exp(beta * (-1) * sb + f * sb) + M[a][1] * std::exp(beta * sb + f * sb);
      }
    const double s = N[0][0] + N[0][1] + N[1][0] + N[1][1];
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) M[a][b] = N[a][b] / s;
  }
  const auto xi = static_cast<std::size_t>(x), yi = static_cast<std::size_t>(y);
  double P[2][2], z = 0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      P[a][b] = (a ? c.fp[xi] : c.fm[xi]) * M[a][b] * (b ? c.bp[yi] : c.bm[yi]);
      z += P[a][b];
    }
  double sxy = 0, sx = 0, sy = 0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const double w = P[a][b] / z;
      const int sa = a ? 1 : -1, sb = b ? 1 : -1;
      sxy += w * sa * sb;
      sx += w * sa;
      sy += w * sb;
    }
  return sxy - sx * sy;
}

BlockEstimate center_tv_estimate(const BoxGraph& g, double beta, std::span<const double> field, int center,
                                 const CoupledBudget& budget, std::uint64_t seed) {
  const auto plus = SpinBoundary::all_plus(g), minus = SpinBoundary::all_minus(g);
  auto L = make_block(g, field, center, budget.block_radius);
  const int target = block_position(L, center);
  BlockEstimate out;
  auto f = [&](const SpinConfig& s, const SpinBoundary& eta) {
    load_boundary(L, s, eta);
    ++out.block_evaluations;
    return rectangle_magnetization(L.block, beta, target);
  };
  const SpinConfig none(static_cast<std::size_t>(g.num_sites()), Spin{1});
  if (L.whole_box) {
    out.exact = true;
    out.estimate = {0.5 * (f(none, plus) - f(none, minus)), 0.0, 0};
    return out;
  }
  const FastHeatBath hb(g, beta, field);
  SpinConfig sp(static_cast<std::size_t>(g.num_sites()), Spin{1}), sm(sp.size(), Spin{-1});
  Rng rng(key_hash({seed, stream::kChain, 0x7f}));
  const int n = g.num_sites();
  const int anchors[] = {center};
  const auto window = window_sites(g, anchors, budget.window);
  long long count = 0;
  auto visit = [&](int x) {
    const double u = rng.uniform();
    hb.update(sp, plus, x, u);
    hb.update(sm, minus, x, u);
  };
  auto sweep = [&] {
    if (!window.empty() && ++count % std::max(budget.local_sweeps, 1) != 0) {
      for (int x : window) visit(x);
    } else {
      for (int x = 0; x < n; ++x) visit(x);
    }
  };
  run_thinned(
      budget, out, sweep, [&] { return !same_boundary(L, sp, plus, sm, minus); },
      [&] { return 0.5 * (f(sp, plus) - f(sm, minus)); });
  return out;
}

BlockEstimate conditional_difference_estimate(const BoxGraph& g, const SpinBoundary& eta, double beta,
                                              std::span<const double> field, int x, int y,
                                              const CoupledBudget& budget, std::uint64_t seed) {
  if (x == y) throw std::invalid_argument("conditional difference needs distinct sites");
  // Keep y off the block and its boundary so equal boundaries mean equal conditionals.
  const int radius = std::max(0, std::min(budget.block_radius, chebyshev(g.box().site(x), g.box().site(y)) - 2));
  auto L = make_block(g, field, x, radius);
  const int target = block_position(L, x);
  BlockEstimate out;
  auto f = [&](const SpinConfig& s) {
    load_boundary(L, s, eta);
    ++out.block_evaluations;
    return rectangle_magnetization(L.block, beta, target);
  };
  const FastHeatBath hb(g, beta, field);
  SpinConfig sp(static_cast<std::size_t>(g.num_sites()), Spin{1}), sm(sp.size(), Spin{-1});
  Rng rng(key_hash({seed, stream::kChain, 0x7e}));
  const int n = g.num_sites();
  const int anchors[] = {x, y};
  const auto window = window_sites(g, anchors, budget.window);
  long long count = 0;
  auto visit = [&](int z) {
    const double u = rng.uniform();
    if (z == y) return;
    hb.update(sp, eta, z, u);
    hb.update(sm, eta, z, u);
  };
  auto sweep = [&] {
    if (!window.empty() && ++count % std::max(budget.local_sweeps, 1) != 0) {
      for (int z : window) visit(z);
    } else {
      for (int z = 0; z < n; ++z) visit(z);
    }
  };
  run_thinned(
      budget, out, sweep, [&] { return !same_boundary(L, sp, eta, sm, eta); }, [&] { return f(sp) - f(sm); });
  return out;
}

Estimate plus_probability_estimate(const BoxGraph& g, const SpinBoundary& eta, double beta,
                                   std::span<const double> field, int y, const CoupledBudget& budget,
                                   std::uint64_t seed) {
  const FastHeatBath hb(g, beta, field);
  SpinConfig s(static_cast<std::size_t>(g.num_sites()), Spin{1});
  Rng rng(key_hash({seed, stream::kChain, 0x7d}));
  const int n = g.num_sites();
  auto sweep = [&] {
    for (int z = 0; z < n; ++z) hb.update(s, eta, z, rng.uniform());
  };
  for (int t = 0; t < budget.burn_in; ++t) sweep();
  std::vector<double> values;
  for (int t = 0; t < budget.samples; ++t) {
    sweep();
    values.push_back(hb.p_plus(s, eta, y));
  }
  return batch_means(values, static_cast<std::size_t>(budget.batches));
}

}  // namespace rfim
