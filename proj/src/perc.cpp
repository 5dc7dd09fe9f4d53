#include "rfim/perc.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "rfim/coupling.hpp"
#include "rfim/rng.hpp"
#include "rfim/union_find.hpp"

namespace rfim {

CriticalConstants CriticalConstants::defaults() {
  CriticalConstants c;
  c.bond_[1] = {1.0, "exact"};
  c.bond_[2] = {0.5, "exact"};
  c.bond_[3] = {0.2488126, "literature"};
  c.site_[1] = {1.0, "exact"};
  c.site_[2] = {0.592746, "literature"};
  c.site_[3] = {0.3116077, "literature"};
  return c;
}

const CriticalValue& CriticalConstants::lookup(const std::map<int, CriticalValue>& m, int d, const char* what) {
  auto it = m.find(d);
  if (it == m.end()) throw std::out_of_range(std::string("no ") + what + " percolation threshold for d=" + std::to_string(d));
  return it->second;
}

void CriticalConstants::set_bond(int d, double v, std::string provenance) {
  if (!(v > 0 && v <= 1)) throw std::invalid_argument("threshold outside (0,1]");
  bond_[d] = {v, std::move(provenance)};
}

void CriticalConstants::set_site(int d, double v, std::string provenance) {
  if (!(v > 0 && v <= 1)) throw std::invalid_argument("threshold outside (0,1]");
  site_[d] = {v, std::move(provenance)};
}

double beta_P_from_pc(double pc) {
  if (!(pc > 0 && pc <= 1)) throw std::invalid_argument("threshold outside (0,1]");
  if (pc == 1.0) return std::numeric_limits<double>::infinity();
  return -std::log1p(-pc) / 2.0;
}

double beta_P(int d, const CriticalConstants& cc) { return beta_P_from_pc(cc.pc_bond(d)); }

namespace {

// Smallest H delta (before clamping) solving P + 1 - a(beta, H, delta)^2 = target.
double threshold_product(double beta, int d, double target, double p_small) {
  const double a_star = std::sqrt(1.0 - target + p_small);
  return 2.0 * d * beta + 0.5 * std::log(a_star / (1.0 - a_star));
}

double resolve_target(int d, const CriticalConstants& cc, std::optional<double> target) {
  const double t = target ? *target : cc.pc_site(d);
  if (!(t > 0 && t <= 1)) throw std::invalid_argument("threshold target outside (0,1]");
  return t;
}

}  // namespace

double h2_bound(double beta, int d, const CriticalConstants& cc, std::optional<double> target) {
  if (!(beta >= 0)) throw std::invalid_argument("beta must be >= 0");
  const double t = resolve_target(d, cc, target);
  if (t >= 1.0) return 0.0;
  return std::max(0.0, threshold_product(beta, d, t, 0.0));
}

double h3_lhs(double beta, double H, double delta, int d, const FieldDistribution& nu) {
  const double a = sign_bound_a(beta, H, delta, d);
  return nu.abs_below(delta) + 1.0 - a * a;
}

H3Bound h3_bound(double beta, int d, const FieldDistribution& nu, const CriticalConstants& cc,
                 std::optional<double> target) {
  if (!(beta >= 0)) throw std::invalid_argument("beta must be >= 0");
  const double t = resolve_target(d, cc, target);
  H3Bound best;
  if (nu.atom_at_zero >= t) {
    best.note = "infeasible: atom at zero is at least the site threshold";
    return best;
  }
  std::vector<double> grid{1.0};
  const int steps = 800;
  for (int k = 0; k <= steps; ++k) grid.push_back(std::pow(10.0, -6.0 + 8.0 * k / steps));
  for (double delta : grid) {
    const double p_small = nu.abs_below(delta);
    if (p_small >= t) continue;
    const double H = std::max(0.0, threshold_product(beta, d, t, p_small)) / delta;
    if (!best.feasible || H < best.H) {
      best.feasible = true;
      best.H = H;
      best.delta = delta;
    }
  }
  if (!best.feasible) best.note = "infeasible: no delta on the grid satisfies the inequality";
  return best;
}

DecayFit decay_fit(std::span<const DecayPoint> points) {
  DecayFit fit;
  for (const auto& pt : points) {
    char buf[160];
    if (!(pt.p > 0) || pt.p <= 2.0 * pt.stderr_) {
      std::snprintf(buf, sizeof buf, "excluded r=%g: p=%.6g stderr=%.3g", pt.r, pt.p, pt.stderr_);
      fit.log.emplace_back(buf);
      continue;
    }
    fit.used.push_back(pt);
  }
  if (fit.used.size() < 3)
    throw std::domain_error("decay fit needs at least 3 usable points, have " + std::to_string(fit.used.size()));
  // Weight 1 / (relative error)^2, floored so exact points do not dominate without bound.
  auto weight = [](const DecayPoint& pt) {
    const double rel = std::max(pt.stderr_ / pt.p, 1e-3);
    return 1.0 / (rel * rel);
  };
  double sw = 0, sx = 0, sy = 0;
  for (const auto& pt : fit.used) {
    const double w = weight(pt);
    sw += w;
    sx += w * pt.r;
    sy += w * std::log(pt.p);
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& pt : fit.used) {
    const double w = weight(pt);
    const double dx = pt.r - mx, dy = std::log(pt.p) - my;
    sxx += w * dx * dx;
    sxy += w * dx * dy;
    syy += w * dy * dy;
  }
  if (!(sxx > 0)) throw std::domain_error("decay fit needs at least two distinct distances");
  const double slope = sxy / sxx;
  fit.rate = -slope;
  fit.log_prefactor = my - slope * mx;
  fit.r_squared = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  fit.r_min = fit.used.front().r;
  fit.r_max = fit.used.front().r;
  for (const auto& pt : fit.used) {
    fit.r_min = std::min(fit.r_min, pt.r);
    fit.r_max = std::max(fit.r_max, pt.r);
  }
  return fit;
}

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::Below: return "below";
    case Regime::Above: return "above";
    case Regime::Inconclusive: return "inconclusive";
  }
  return "?";
}

Regime classify_theta(std::span<const ThetaPoint> pts, int replicas) {
  if (pts.size() < 3) throw std::invalid_argument("classification needs at least 3 schedule points");
  auto upper = [&](const Estimate& e) { return e.value > 0 ? e.value + 2 * e.stderr_ : 3.0 / replicas; };
  auto lower = [](const Estimate& e) { return e.value - 2 * e.stderr_; };
  bool below = true;
  for (std::size_t k = pts.size() - 2; k < pts.size(); ++k) {
    const Estimate& a = pts[k - 1].theta;
    const Estimate& b = pts[k].theta;
    // Both sizes already negligible: no plateau to speak of.
    if (upper(a) < 0.01 && upper(b) < 0.01) continue;
    below = below && b.value <= 0.6 * a.value && upper(b) < lower(a);
  }
  if (below) return Regime::Below;
  bool above = true;
  for (const auto& p : pts) above = above && p.theta.value > 0.1;
  for (std::size_t k = pts.size() - 2; k < pts.size() && above; ++k)
    above = pts[k].theta.value >= 0.9 * pts[k - 1].theta.value;
  return above ? Regime::Above : Regime::Inconclusive;
}

Regime classify_H(double beta, double H, const KerteszScanParams& prm, std::uint64_t seed, std::vector<ScanRow>* rows) {
  std::vector<ThetaPoint> pts;
  for (int n : prm.schedule) {
    const std::uint64_t cell = key_hash({stream::kCell, seed, static_cast<std::uint64_t>(n),
                                         static_cast<std::uint64_t>(std::llround(H * 1e6)),
                                         static_cast<std::uint64_t>(std::llround(beta * 1e6))});
    pts.push_back({n, theta_n_estimate(beta, H, n, prm.d, prm.budget, cell)});
  }
  const Regime r = classify_theta(pts, prm.budget.replicas());
  if (rows)
    for (const auto& p : pts) rows->push_back({beta, H, p.n, p.theta, r});
  return r;
}

KerteszScanResult kertesz_scan(double beta, const KerteszScanParams& prm, std::uint64_t seed) {
  if (!(prm.H_lo >= 0 && prm.H_hi > prm.H_lo)) throw std::invalid_argument("invalid H bracket");
  KerteszScanResult res;
  res.beta = beta;
  int evals = 0;
  auto eval = [&](double H) {
    ++evals;
    return classify_H(beta, H, prm, seed, &res.rows);
  };
  double lo = prm.H_lo, hi = prm.H_hi;
  const Regime r_hi = eval(hi);
  if (r_hi != Regime::Above) {
    res.H_lo = r_hi == Regime::Below ? hi : lo;
    res.lo_confirmed = r_hi == Regime::Below;
    res.H_hi = std::numeric_limits<double>::infinity();
    res.inconclusive = r_hi == Regime::Inconclusive;
    return res;
  }
  res.hi_confirmed = true;
  const Regime r_lo = eval(lo);
  if (r_lo == Regime::Above) {
    res.H_lo = lo;
    res.H_hi = lo;
    res.lo_confirmed = false;
    return res;
  }
  res.lo_confirmed = r_lo == Regime::Below;
  while (hi - lo > prm.width && evals < prm.max_evaluations) {
    const double mid = 0.5 * (lo + hi);
    const Regime r = eval(mid);
    if (r == Regime::Below) {
      lo = mid;
      res.lo_confirmed = true;
      continue;
    }
    if (r == Regime::Above) {
      hi = mid;
      continue;
    }
    // Inconclusive midpoint: walk halfway toward each end until a conclusive
    // classification or a step below half the width. The band in between
    // cannot be narrowed further, so the search stops there.
    bool moved = false;
    for (double m = mid; evals < prm.max_evaluations && m - lo > 0.5 * prm.width;) {
      m = 0.5 * (lo + m);
      const Regime rm = eval(m);
      if (rm == Regime::Inconclusive) continue;
      (rm == Regime::Below ? lo : hi) = m;
      if (rm == Regime::Below) res.lo_confirmed = true;
      moved = true;
      break;
    }
    for (double m = mid; evals < prm.max_evaluations && hi - m > 0.5 * prm.width;) {
      m = 0.5 * (m + hi);
      const Regime rm = eval(m);
      if (rm == Regime::Inconclusive) continue;
      (rm == Regime::Below ? lo : hi) = m;
      if (rm == Regime::Below) res.lo_confirmed = true;
      moved = true;
      break;
    }
    if (!moved) res.inconclusive = true;
    break;
  }
  if (hi - lo > prm.width) res.inconclusive = true;
  res.H_lo = lo;
  res.H_hi = hi;
  return res;
}

void write_scan_csv(std::ostream& os, std::span<const ScanRow> rows) {
  os << "# schema_version 1\n";
  os << "beta, H, n, theta_hat, stderr, classification\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6g, %.6g, %d, %.10g, %.10g, %s\n", r.beta, r.H, r.n, r.theta.value,
                  r.theta.stderr_, regime_name(r.regime));
    os << buf;
  }
}

AveragedSiteResult averaged_site_estimate(double beta, double H, const FieldDistribution& nu, const BoxGraph& g,
                                          std::span<const int> delta_sites,
                                          std::span<const std::uint8_t> open_exterior, int replicas, double delta,
                                          std::uint64_t seed) {
  if (replicas < 2) throw std::invalid_argument("need at least two replicas");
  const int d = g.dim();
  MeanAccumulator conn, one;
  std::vector<double> p(static_cast<std::size_t>(g.num_sites()));
  for (int r = 0; r < replicas; ++r) {
    const auto h = sample_field(nu, g.box(), key_hash({stream::kField, seed, static_cast<std::uint64_t>(r)}));
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = domination_p(beta, H, std::abs(h.values[i]), d);
    const auto t = dominating_site_sample(p, key_hash({stream::kPercolation, seed, static_cast<std::uint64_t>(r)}));
    conn.add(site_path_to_delta(g, t, open_exterior, delta_sites) ? 1.0 : 0.0);
    double open = 0;
    for (auto v : t) open += v;
    one.add(open / static_cast<double>(t.size()));
  }
  AveragedSiteResult res;
  res.connectivity = conn.estimate();
  res.one_site = one.estimate();
  const double a = sign_bound_a(beta, H, delta, d);
  res.bound = nu.abs_below(delta) + 1.0 - a * a;
  return res;
}

Estimate crossing_probability(int d, int L, double p, bool site, int samples, std::uint64_t seed) {
  if (d < 1 || L < 1 || samples < 1) throw std::invalid_argument("invalid crossing parameters");
  std::size_t n = 1;
  for (int k = 0; k < d; ++k) n *= static_cast<std::size_t>(L);
  std::vector<std::size_t> stride(static_cast<std::size_t>(d));
  std::size_t s = 1;
  for (int k = d - 1; k >= 0; --k) {
    stride[static_cast<std::size_t>(k)] = s;
    s *= static_cast<std::size_t>(L);
  }
  const int left = static_cast<int>(n), right = static_cast<int>(n) + 1;
  UnionFind uf;
  std::vector<std::uint8_t> open(n);
  MeanAccumulator acc;
  for (int sample = 0; sample < samples; ++sample) {
    Rng rng(key_hash({stream::kPercolation, seed, static_cast<std::uint64_t>(sample)}));
    uf.reset(static_cast<int>(n) + 2);
    for (std::size_t i = 0; i < n; ++i) open[i] = site ? rng.uniform() < p : 1;
    for (std::size_t i = 0; i < n; ++i) {
      if (!open[i]) continue;
      const std::size_t x0 = (i / stride[0]) % static_cast<std::size_t>(L);
      if (x0 == 0) uf.unite(static_cast<int>(i), left);
      if (x0 == static_cast<std::size_t>(L) - 1) uf.unite(static_cast<int>(i), right);
      for (int k = 0; k < d; ++k) {
        const std::size_t xk = (i / stride[static_cast<std::size_t>(k)]) % static_cast<std::size_t>(L);
        if (xk + 1 >= static_cast<std::size_t>(L)) continue;
        const std::size_t j = i + stride[static_cast<std::size_t>(k)];
        if (!open[j]) continue;
        if (site || rng.uniform() < p) uf.unite(static_cast<int>(i), static_cast<int>(j));
      }
    }
    acc.add(uf.same(left, right) ? 1.0 : 0.0);
  }
  return acc.estimate();
}

void write_threshold_csv(std::ostream& os, std::span<const ThresholdRow> rows) {
  os << "# schema_version 1\n";
  os << "beta, H2, H3, delta_star, d\n";
  char buf[256];
  for (const auto& r : rows) {
    if (r.H3.feasible)
      std::snprintf(buf, sizeof buf, "%.6g, %.10g, %.10g, %.10g, %d\n", r.beta, r.H2, r.H3.H, r.H3.delta, r.d);
    else
      std::snprintf(buf, sizeof buf, "%.6g, %.10g, inf, nan, %d\n", r.beta, r.H2, r.d);
    os << buf;
  }
}

}  // namespace rfim
