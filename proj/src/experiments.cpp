#include "rfim/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rfim/cluster.hpp"
#include "rfim/coupling.hpp"
#include "rfim/fields.hpp"
#include "rfim/gibbs.hpp"
#include "rfim/invariants.hpp"
#include "rfim/mixing.hpp"
#include "rfim/perc.hpp"
#include "rfim/rng.hpp"
#include "rfim/sw_chain.hpp"

namespace rfim {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

bool Report::passed() const {
  return std::all_of(assertions.begin(), assertions.end(), [](const auto& a) { return a.passed; });
}

void Report::check(std::string name, bool ok, double measured, double threshold, std::string detail) {
  assertions.push_back({std::move(name), ok, measured, threshold, std::move(detail)});
}

std::uint64_t RunContext::cell_seed(std::string_view cell_id) const {
  return key_hash({master_seed, stream::kCell, fnv1a(cell_id)});
}

std::filesystem::path RunContext::output(Report& report, const std::string& name) const {
  std::filesystem::create_directories(out_dir);
  report.outputs.push_back(name);
  return out_dir / name;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

std::vector<double> scaled(std::span<const double> h, double H) {
  std::vector<double> out(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) out[i] = H * h[i];
  return out;
}

Box square(int lo, int hi) {
  std::vector<Site> s;
  for (int x = lo; x <= hi; ++x)
    for (int y = lo; y <= hi; ++y) s.push_back(Site{x, y});
  return Box::from_sites(2, s);
}

int origin_index(const Box& box) {
  const int i = box.index_of(Site(std::vector<int>(static_cast<std::size_t>(box.dim()), 0)));
  if (i < 0) throw std::logic_error("box does not contain the origin");
  return i;
}

// Largest instances used by the exact suites.
constexpr int kOracleMaxSites = 16;
constexpr int kOracleMaxEdges = 23;

// Exact marginal of the bonds on `ids` under the Edwards-Sokal rule: given the
// spins, edge e is open with probability p_e when its endpoints agree.
std::vector<double> es_edge_marginal(const RcGraph& g, const ExactDistribution& spins, const SpinBoundary& eta,
                                     int ghost_plus_spin, int ghost_minus_spin, std::span<const int> ids) {
  std::vector<double> out(std::size_t{1} << ids.size(), 0.0);
  std::vector<int> spin(static_cast<std::size_t>(g.num_vertices()));
  for (int k = 0; k < g.num_exterior(); ++k)
    spin[static_cast<std::size_t>(g.exterior_vertex(k))] = eta.values[static_cast<std::size_t>(k)];
  spin[static_cast<std::size_t>(g.ghost_plus())] = ghost_plus_spin;
  spin[static_cast<std::size_t>(g.ghost_minus())] = ghost_minus_spin;
  for (std::size_t c = 0; c < spins.size(); ++c) {
    for (int i = 0; i < g.num_sites(); ++i) spin[static_cast<std::size_t>(i)] = spins.ising_spin(c, i);
    for (std::size_t pat = 0; pat < out.size(); ++pat) {
      double w = spins.prob[c];
      for (std::size_t j = 0; j < ids.size(); ++j) {
        const auto& e = g.edge(ids[j]);
        const double q = spin[static_cast<std::size_t>(e.u)] == spin[static_cast<std::size_t>(e.v)] ? e.p() : 0.0;
        w *= ((pat >> j) & 1U) ? q : 1.0 - q;
      }
      out[pat] += w;
    }
  }
  return out;
}

double tv_counts(std::span<const double> exact, std::span<const long long> counts) {
  long long n = 0;
  for (auto c : counts) n += c;
  double tv = 0;
  for (std::size_t i = 0; i < exact.size(); ++i) tv += std::abs(exact[i] - static_cast<double>(counts[i]) / static_cast<double>(n));
  return tv / 2;
}

std::size_t pattern(const BondConfig& w, std::span<const int> ids) {
  std::size_t k = 0;
  for (std::size_t j = 0; j < ids.size(); ++j)
    if (w[static_cast<std::size_t>(ids[j])]) k |= std::size_t{1} << j;
  return k;
}

std::size_t pattern(const SpinConfig& s, std::span<const int> sites) {
  std::size_t k = 0;
  for (std::size_t j = 0; j < sites.size(); ++j)
    if (s[static_cast<std::size_t>(sites[j])] > 0) k |= std::size_t{1} << j;
  return k;
}

}  // namespace

Report cmd_oracle_verify(const RunContext& ctx) {
  Report rep;
  rep.command = "oracle-verify";
  OracleOptions opt;
  opt.seed = ctx.cell_seed("oracle");
  opt.draws = static_cast<int>(ctx.config.get_int("draws", 5));
  opt.tol = ctx.config.get_double("tol", 1e-12);
  opt.corrupt_weight = ctx.config.get_bool("corrupt_weight", false);
  opt.spin_cap = ctx.cap;
  opt.edge_cap = ctx.cap + 4;
  const int tv_draws = static_cast<int>(ctx.config.get_int("tv_draws", 20));
  if (kOracleMaxSites > opt.spin_cap || kOracleMaxEdges > opt.edge_cap)
    throw ConfigError("oracle suite needs " + std::to_string(kOracleMaxSites) + " sites and " +
                      std::to_string(kOracleMaxEdges) + " edges, cap allows " + std::to_string(opt.spin_cap) +
                      " and " + std::to_string(opt.edge_cap));
  if (opt.draws < 1 || tv_draws < 1) throw ConfigError("draws must be positive");

  std::vector<InvariantResult> all = check_es_consistency(opt);
  for (auto& r : check_dominations(opt)) all.push_back(r);
  for (auto& r : check_tv_bounds(opt, tv_draws)) all.push_back(r);
  all.push_back(check_truncated_identity(opt));

  auto os = open_out(ctx.output(rep, "oracle.csv"));
  os << "# schema_version 1\n";
  os << "name, passed, slack, instances\n";
  for (const auto& r : all) {
    os << r.name << ", " << (r.passed ? "true" : "false") << ", " << fmt(r.slack) << ", " << r.instances << "\n";
    // Identities report their largest error, inequalities their smallest margin.
    const bool identity = r.name.rfind("es_", 0) == 0 || r.name == "truncated_covariance_identity";
    rep.check(r.name, r.passed, r.slack, identity ? opt.tol : -opt.tol, r.detail);
  }
  return rep;
}

Report cmd_coupling_verify(const RunContext& ctx) {
  Report rep;
  rep.command = "coupling-verify";
  const auto& c = ctx.config;
  const long long runs = c.get_int("runs", 100000);
  const double beta = c.get_double("beta", 0.3);
  const double H = c.get_double("H", 0.4);
  const auto dist = field_distribution_from_name(c.get_string("field", "bimodal"));
  const auto field_seed = c.get_uint("field_seed", 1);
  const int L = static_cast<int>(c.get_int("L", 1));
  const int d = static_cast<int>(c.get_int("d", 2));
  const double tv_tol = c.get_double("tv_tolerance", 0.02);
  const long long replay = c.get_int("replay_run", 0);
  if (runs < 1 || replay < 0 || replay >= runs) throw ConfigError("need runs >= 1 and 0 <= replay_run < runs");

  const Box box = Box::cube(L, d);
  if (box.size() > ctx.cap) throw ConfigError("coupling box exceeds enumeration cap");
  const auto h = sample_field(dist, box, field_seed).values;
  const auto g = RcGraph::two_ghost(box, beta, H, h);
  const auto& bg = g.box_graph();
  const auto eta = SpinBoundary::all_plus(bg), eta2 = SpinBoundary::all_minus(bg);
  const auto rho = BondBoundary::eta_wired(g, eta), rho2 = BondBoundary::eta_wired(g, eta2);
  const int center = origin_index(box);
  const std::vector<int> delta{center};

  std::vector<int> delta_edges;
  for (int id = 0; id < g.num_edges(); ++id)
    if (g.edge(id).u == center || g.edge(id).v == center) delta_edges.push_back(id);
  std::vector<int> star{center};
  for (int nb : bg.neighbors(center))
    if (!BoxGraph::is_exterior(nb)) star.push_back(nb);

  const auto field = scaled(h, H);
  std::vector<double> abs_field(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) abs_field[i] = std::abs(field[i]);
  const auto mu1 = exact_measure(bg, eta, beta, field, ctx.cap);
  const auto mu2 = exact_measure(bg, eta2, beta, field, ctx.cap);
  const auto mu_abs = exact_measure(bg, eta, beta, abs_field, ctx.cap);
  const auto star1 = marginal(mu1, star), star2 = marginal(mu2, star);

  struct Tally {
    std::string name;
    long long bad_runs = 0;
    std::string first;
    std::vector<std::vector<long long>> counts;
  };
  auto tally_violation = [](Tally& t, const CouplingTrace& tr, long long i) {
    if (tr.ok()) return;
    if (t.bad_runs++ == 0) t.first = "run " + std::to_string(i) + ": " + tr.violations.front();
  };

  Tally grand, ising, site;
  grand.name = "grand_rc_coupling";
  ising.name = "ising_bc_coupling";
  site.name = "site_exploration_coupling";
  const std::size_t ne = std::size_t{1} << delta_edges.size(), ns = std::size_t{1} << star.size();
  grand.counts.assign(3, std::vector<long long>(ne, 0));
  ising.counts.assign(2, std::vector<long long>(ns, 0));
  site.counts.assign(2, std::vector<long long>(ns, 0));

  const auto gseed = ctx.cell_seed("coupling/grand"), iseed = ctx.cell_seed("coupling/ising"),
             sseed = ctx.cell_seed("coupling/site");
  GrandCoupler gc(g, rho, rho2, delta);
  IsingBcCoupler ic(g, eta, eta2);
  SiteCoupler sc(bg, eta, eta2, beta, field);
  for (long long i = 0; i < runs; ++i) {
    const auto k = static_cast<std::uint64_t>(i);
    const auto a = gc.run(key_hash({gseed, k}));
    tally_violation(grand, a.trace, i);
    ++grand.counts[0][pattern(a.omega_rho, delta_edges)];
    ++grand.counts[1][pattern(a.omega_rho2, delta_edges)];
    ++grand.counts[2][pattern(a.omega_w, delta_edges)];

    const auto b = ic.run(key_hash({iseed, k}));
    tally_violation(ising, b.bonds.trace, i);
    ++ising.counts[0][pattern(b.sigma_eta, star)];
    ++ising.counts[1][pattern(b.sigma_eta2, star)];

    const auto s = sc.run(key_hash({sseed, k}));
    tally_violation(site, s.trace, i);
    ++site.counts[0][pattern(s.sigma_eta, star)];
    ++site.counts[1][pattern(s.sigma_eta2, star)];
  }

  {
    auto os = open_out(ctx.output(rep, "coupling_runs.csv"));
    os << "# schema_version 1\n";
    os << "coupling, runs, violating_runs, first_violation\n";
    for (const auto* t : {&grand, &ising, &site}) {
      os << t->name << ", " << runs << ", " << t->bad_runs << ", " << (t->first.empty() ? "-" : t->first) << "\n";
      rep.check(t->name + "_pathwise", t->bad_runs == 0, static_cast<double>(t->bad_runs), 0, t->first);
    }
  }

  // Marginals against the exact laws.
  struct TvRow {
    std::string coupling, measure;
    double tv;
  };
  std::vector<TvRow> tv_rows;
  const auto e1 = es_edge_marginal(g, mu1, eta, +1, -1, delta_edges);
  const auto e2 = es_edge_marginal(g, mu2, eta2, +1, -1, delta_edges);
  const auto ew = es_edge_marginal(g, mu_abs, eta, +1, +1, delta_edges);
  tv_rows.push_back({grand.name, "rho", tv_counts(e1, grand.counts[0])});
  tv_rows.push_back({grand.name, "rho2", tv_counts(e2, grand.counts[1])});
  tv_rows.push_back({grand.name, "wired_abs", tv_counts(ew, grand.counts[2])});
  tv_rows.push_back({ising.name, "eta", tv_counts(star1, ising.counts[0])});
  tv_rows.push_back({ising.name, "eta2", tv_counts(star2, ising.counts[1])});
  tv_rows.push_back({site.name, "eta", tv_counts(star1, site.counts[0])});
  tv_rows.push_back({site.name, "eta2", tv_counts(star2, site.counts[1])});
  {
    auto os = open_out(ctx.output(rep, "coupling_tv.csv"));
    os << "# schema_version 1\n";
    os << "coupling, measure, tv, tolerance\n";
    for (const auto& r : tv_rows) {
      os << r.coupling << ", " << r.measure << ", " << fmt(r.tv) << ", " << fmt(tv_tol) << "\n";
      rep.check(r.coupling + "_marginal_tv_" + r.measure, r.tv <= tv_tol, r.tv, tv_tol);
    }
  }

  // Replay: the same seed must give the same trace, byte for byte.
  const auto k = static_cast<std::uint64_t>(replay);
  auto trace_text = [](const CouplingTrace& t) {
    std::ostringstream os;
    t.write_jsonl(os);
    return os.str();
  };
  const std::string t_grand = trace_text(gc.run(key_hash({gseed, k})).trace);
  const std::string t_ising = trace_text(ic.run(key_hash({iseed, k})).bonds.trace);
  const std::string t_site = trace_text(sc.run(key_hash({sseed, k})).trace);
  const bool same = t_grand == trace_text(GrandCoupler(g, rho, rho2, delta).run(key_hash({gseed, k})).trace) &&
                    t_ising == trace_text(IsingBcCoupler(g, eta, eta2).run(key_hash({iseed, k})).bonds.trace) &&
                    t_site == trace_text(SiteCoupler(bg, eta, eta2, beta, field).run(key_hash({sseed, k})).trace);
  open_out(ctx.output(rep, "trace_grand.jsonl")) << t_grand;
  open_out(ctx.output(rep, "trace_ising.jsonl")) << t_ising;
  open_out(ctx.output(rep, "trace_site.jsonl")) << t_site;
  rep.check("trace_replay_identical", same, same ? 1 : 0, 1, "run " + std::to_string(replay));
  return rep;
}

Report cmd_sampler_check(const RunContext& ctx) {
  Report rep;
  rep.command = "sampler-check";
  const auto& c = ctx.config;
  const double beta = c.get_double("beta", 0.3);
  const double H = c.get_double("H", 0.5);
  const auto dist = field_distribution_from_name(c.get_string("field", "gaussian"));
  const auto field_seed = c.get_uint("field_seed", 1);
  const long long samples = c.get_int("samples", 100000);
  const int burn_in = static_cast<int>(c.get_int("burn_in", 1000));
  const double tv_tol = c.get_double("tv_tolerance", 0.02);
  if (samples < 2) throw ConfigError("samples must be at least 2");

  const Box box = Box::from_sites(2, {Site{0, 0}, Site{1, 0}, Site{0, 1}, Site{1, 1}});
  const BoxGraph bg(box);
  const auto field = scaled(sample_field(dist, box, field_seed).values, H);
  SpinBoundary eta;
  for (int k = 0; k < bg.num_exterior(); ++k)
    eta.values.push_back(keyed_uniform({ctx.cell_seed("sampler/boundary"), static_cast<std::uint64_t>(k)}) < 0.5 ? 1 : -1);
  const auto exact = exact_measure(bg, eta, beta, field, ctx.cap);
  std::vector<int> all(static_cast<std::size_t>(box.size()));
  for (int i = 0; i < box.size(); ++i) all[static_cast<std::size_t>(i)] = i;

  auto os = open_out(ctx.output(rep, "sampler.csv"));
  os << "# schema_version 1\n";
  os << "check, measured, reference, stderr, samples\n";

  std::vector<long long> hb_counts(exact.size(), 0), es_counts(exact.size(), 0);
  HeatBathChain hb(bg, eta, beta, field, ctx.cell_seed("sampler/heat-bath"));
  SwChain es(bg, eta, beta, field, ctx.cell_seed("sampler/es"));
  hb.sweeps(burn_in);
  for (int t = 0; t < burn_in; ++t) es.step();
  for (long long t = 0; t < samples; ++t) {
    hb.sweep();
    es.step();
    ++hb_counts[pattern(hb.state(), all)];
    ++es_counts[pattern(es.state(), all)];
  }
  for (const auto& [name, counts] : {std::pair{"heat_bath_tv", &hb_counts}, std::pair{"es_alternation_tv", &es_counts}}) {
    const double tv = tv_counts(exact.prob, *counts);
    os << name << ", " << fmt(tv) << ", 0, 0, " << samples << "\n";
    rep.check(name, tv <= tv_tol, tv, tv_tol);
  }

  // Worst case: every neighbour opposes the field sign.
  const Box one = Box::cube(0, 2);
  const BoxGraph og(one);
  for (const double abs_h : {0.5, 1.0, 2.0}) {
    const double a = sign_bound_a(beta, H, abs_h, 2);
    const std::vector<double> f{H * abs_h};
    HeatBathChain chain(og, SpinBoundary::all_minus(og), beta, f, ctx.cell_seed("sampler/worst/" + fmt(abs_h)));
    long long hits = 0;
    for (long long t = 0; t < samples; ++t) {
      chain.sweep();
      if (chain.state()[0] > 0) ++hits;
    }
    const double p = static_cast<double>(hits) / static_cast<double>(samples);
    const double se = std::sqrt(a * (1 - a) / static_cast<double>(samples));
    os << "worst_case_|h|=" << fmt(abs_h) << ", " << fmt(p) << ", " << fmt(a) << ", " << fmt(se) << ", " << samples << "\n";
    rep.check("worst_case_sign_probability_|h|=" + fmt(abs_h), std::abs(p - a) <= 3 * se, std::abs(p - a), 3 * se);
  }
  return rep;
}

Report cmd_kertesz_scan(const RunContext& ctx) {
  Report rep;
  rep.command = "kertesz-scan";
  const auto& c = ctx.config;
  KerteszScanParams prm;
  prm.schedule = c.get_ints("schedule", prm.schedule);
  prm.H_lo = c.get_double("H_lo", prm.H_lo);
  prm.H_hi = c.get_double("H_hi", prm.H_hi);
  prm.width = c.get_double("width", prm.width);
  prm.max_evaluations = static_cast<int>(c.get_int("max_evaluations", prm.max_evaluations));
  prm.d = static_cast<int>(c.get_int("d", prm.d));
  prm.budget.chains = static_cast<int>(c.get_int("chains", prm.budget.chains));
  prm.budget.burn_in = static_cast<int>(c.get_int("burn_in", prm.budget.burn_in));
  prm.budget.samples_per_chain = static_cast<int>(c.get_int("samples_per_chain", prm.budget.samples_per_chain));
  prm.budget.gap = static_cast<int>(c.get_int("gap", prm.budget.gap));
  const auto betas = c.get_doubles("betas", std::vector<double>{});
  const auto point_beta = c.get_doubles("classify_beta", std::vector<double>{});
  const auto point_H = c.get_doubles("classify_H", std::vector<double>{});
  if (point_beta.size() != point_H.size()) throw ConfigError("classify_beta and classify_H must have equal length");
  if (betas.empty() && point_beta.empty()) throw ConfigError("nothing to scan: set betas or classify_beta/classify_H");
  if (prm.schedule.size() < 2 || !std::is_sorted(prm.schedule.begin(), prm.schedule.end()))
    throw ConfigError("schedule must be increasing with at least two sizes");
  if (!(prm.width > 0) || !(prm.H_hi > prm.H_lo)) throw ConfigError("need width > 0 and H_hi > H_lo");

  struct Job {
    bool bracket;
    double beta, H;
  };
  std::vector<Job> jobs;
  for (double b : betas) jobs.push_back({true, b, 0});
  for (std::size_t i = 0; i < point_beta.size(); ++i) jobs.push_back({false, point_beta[i], point_H[i]});

  struct Outcome {
    KerteszScanResult scan;
    Regime regime = Regime::Inconclusive;
    std::vector<ScanRow> rows;
  };
  const auto outcomes = parallel_map(jobs.size(), ctx.threads, [&](std::size_t i) {
    const Job& j = jobs[i];
    Outcome o;
    if (j.bracket) {
      o.scan = kertesz_scan(j.beta, prm, ctx.cell_seed("kertesz/beta=" + fmt(j.beta)));
      o.rows = o.scan.rows;
    } else {
      o.regime = classify_H(j.beta, j.H, prm, ctx.cell_seed("classify/beta=" + fmt(j.beta) + "/H=" + fmt(j.H)), &o.rows);
    }
    return o;
  });

  std::vector<ScanRow> all_rows;
  for (const auto& o : outcomes) all_rows.insert(all_rows.end(), o.rows.begin(), o.rows.end());
  {
    auto os = open_out(ctx.output(rep, "kertesz_scan.csv"));
    write_scan_csv(os, all_rows);
  }
  {
    auto os = open_out(ctx.output(rep, "kertesz_brackets.csv"));
    os << "# schema_version 1\n";
    os << "beta, H_lo, H_hi, lo_confirmed, hi_confirmed, inconclusive\n";
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      if (!jobs[i].bracket) continue;
      const auto& s = outcomes[i].scan;
      os << fmt(s.beta) << ", " << fmt(s.H_lo) << ", " << (std::isinf(s.H_hi) ? std::string("inf") : fmt(s.H_hi)) << ", "
         << s.lo_confirmed << ", " << s.hi_confirmed << ", " << s.inconclusive << "\n";
      rep.cells.push_back({{"beta", s.beta}, {"H_lo", s.H_lo}, {"H_hi", std::isinf(s.H_hi) ? -1.0 : s.H_hi},
                           {"lo_confirmed", s.lo_confirmed}, {"hi_confirmed", s.hi_confirmed},
                           {"inconclusive", s.inconclusive}});
    }
  }
  {
    auto os = open_out(ctx.output(rep, "kertesz_points.csv"));
    os << "# schema_version 1\n";
    os << "beta, H, classification\n";
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      if (jobs[i].bracket) continue;
      os << fmt(jobs[i].beta) << ", " << fmt(jobs[i].H) << ", " << regime_name(outcomes[i].regime) << "\n";
      rep.cells.push_back({{"beta", jobs[i].beta}, {"H", jobs[i].H}, {"classification", regime_name(outcomes[i].regime)}});
    }
  }

  // Per beta, no H classified above may lie below an H classified below.
  std::map<double, std::vector<std::pair<double, Regime>>> by_beta;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& rows = outcomes[i].rows;
    // Each classification contributes its regime once, recorded on its largest-n row.
    for (const auto& r : rows)
      if (r.n == prm.schedule.back()) by_beta[r.beta].push_back({r.H, r.regime});
  }
  int inversions = 0;
  std::string where;
  for (const auto& [b, v] : by_beta)
    for (const auto& [h1, r1] : v)
      for (const auto& [h2, r2] : v)
        if (h1 < h2 && r1 == Regime::Above && r2 == Regime::Below) {
          if (inversions++ == 0) where = "beta=" + fmt(b) + ": above at H=" + fmt(h1) + ", below at H=" + fmt(h2);
        }
  rep.check("classification_monotone_in_H", inversions == 0, inversions, 0, where);
  return rep;
}

Report cmd_decay_fit(const RunContext& ctx) {
  Report rep;
  rep.command = "decay-fit";
  const auto& c = ctx.config;
  const int d = static_cast<int>(c.get_int("d", 2));
  const double beta = c.get_double("beta", d == 1 ? 0.3 : 0.25);
  const double H = c.get_double("H", d == 1 ? 0.0 : 0.3);
  const auto dist = field_distribution_from_name(c.get_string("field", "bimodal"));
  const auto field_seed = c.get_uint("field_seed", 1);
  const auto distances = c.get_ints("distances", d == 1 ? std::vector<int>{2, 4, 6, 8, 10, 12} : std::vector<int>{4, 8, 16, 32});
  const double rate_tol = c.get_double("rate_tolerance", 0.05);
  const double r2_min = c.get_double("min_r_squared", 0.9);
  CoupledBudget budget;
  budget.samples = static_cast<int>(c.get_int("samples", 400000));
  budget.burn_in = static_cast<int>(c.get_int("burn_in", 200));
  budget.block_radius = static_cast<int>(c.get_int("block_radius", 7));
  budget.window = static_cast<int>(c.get_int("window", 10));
  budget.local_sweeps = static_cast<int>(c.get_int("local_sweeps", 20));
  budget.max_evaluations = static_cast<int>(c.get_int("max_evaluations", 2000));
  budget.batches = static_cast<int>(c.get_int("batches", 40));
  CoupledBudget p_budget = budget;
  p_budget.samples = static_cast<int>(c.get_int("p_samples", 20000));
  const int side = static_cast<int>(c.get_int("side", d == 1 ? 201 : 96));
  if (d != 1 && d != 2) throw ConfigError("decay-fit supports d = 1 (exact chain) and d = 2");
  if (distances.empty()) throw ConfigError("no distances");
  for (int r : distances)
    if (r < 1 || r >= side) throw ConfigError("distance " + std::to_string(r) + " does not fit in the box");

  std::vector<DecayPoint> points;
  std::vector<ObservableRow> obs;
  const int lo = -side / 2, hi = lo + side - 1;
  if (d == 1) {
    std::vector<Site> s;
    for (int x = lo; x <= hi; ++x) s.push_back(Site{x});
    const Box box = Box::from_sites(1, s);
    const auto field = scaled(sample_field(dist, box, field_seed).values, H);
    for (int r : distances) {
      const int x = -r / 2, y = x + r;
      const double v = chain_truncated_two_point(beta, field, +1, +1, x - lo, y - lo);
      points.push_back({static_cast<double>(r), v, 0.0});
      obs.push_back({Site{x}, Site{y}, {v, 0.0, 0}});
    }
  } else {
    const Box box = square(lo, hi);
    const BoxGraph g(box);
    const auto field = scaled(sample_field(dist, box, field_seed).values, H);
    const auto eta = SpinBoundary::all_plus(g);
    const auto results = parallel_map(distances.size(), ctx.threads, [&](std::size_t i) {
      const int r = distances[i];
      const int x = g.box().index_of(Site{-r / 2, 0}), y = g.box().index_of(Site{-r / 2 + r, 0});
      const auto D = conditional_difference_estimate(g, eta, beta, field, x, y, budget,
                                                     ctx.cell_seed("decay/difference/r=" + std::to_string(r)));
      const auto p = plus_probability_estimate(g, eta, beta, field, y, p_budget,
                                               ctx.cell_seed("decay/plus/r=" + std::to_string(r)));
      const double a = 2 * p.value * (1 - p.value);
      const double cov = a * D.estimate.value;
      const double se = std::hypot(a * D.estimate.stderr_, 2 * (1 - 2 * p.value) * D.estimate.value * p.stderr_);
      return std::pair{Estimate{cov, se, D.estimate.n}, D.block_evaluations};
    });
    for (std::size_t i = 0; i < distances.size(); ++i) {
      const int r = distances[i];
      points.push_back({static_cast<double>(r), results[i].first.value, results[i].first.stderr_});
      obs.push_back({Site{-r / 2, 0}, Site{-r / 2 + r, 0}, results[i].first});
      rep.cells.push_back({{"r", r}, {"estimate", results[i].first.value}, {"stderr", results[i].first.stderr_},
                           {"block_evaluations", results[i].second}});
    }
  }
  {
    auto os = open_out(ctx.output(rep, "decay_points.csv"));
    write_observables_csv(os, obs);
  }

  const double reference = d == 1 && H == 0 && beta > 0 ? -std::log(std::tanh(beta)) : std::nan("");
  auto os = open_out(ctx.output(rep, "decay_fit.csv"));
  os << "# schema_version 1\n";
  os << "d, beta, H, rate, log_prefactor, r_squared, r_min, r_max, points_used, reference_rate, status\n";
  const bool all_zero = std::all_of(points.begin(), points.end(), [](const auto& p) { return p.p == 0 && p.stderr_ == 0; });
  if (all_zero) {
    os << d << ", " << fmt(beta) << ", " << fmt(H) << ", nan, nan, nan, nan, nan, 0, " << fmt(reference) << ", all-zero\n";
    rep.notes.push_back("all-zero: every truncated two-point estimate is exactly 0, fit skipped");
    return rep;
  }
  DecayFit fit;
  try {
    fit = decay_fit(points);
  } catch (const std::domain_error& e) {
    os << d << ", " << fmt(beta) << ", " << fmt(H) << ", nan, nan, nan, nan, nan, 0, " << fmt(reference)
       << ", too-few-points\n";
    rep.check("decay_fit_possible", false, 0, 3, e.what());
    return rep;
  }
  for (const auto& line : fit.log) rep.notes.push_back(line);
  os << d << ", " << fmt(beta) << ", " << fmt(H) << ", " << fmt(fit.rate) << ", " << fmt(fit.log_prefactor) << ", "
     << fmt(fit.r_squared) << ", " << fmt(fit.r_min) << ", " << fmt(fit.r_max) << ", " << fit.used.size() << ", "
     << fmt(reference) << ", ok\n";
  if (d == 1 && !std::isnan(reference)) {
    const double rel = std::abs(fit.rate - reference) / reference;
    rep.check("decay_rate_matches_exact", rel <= rate_tol, rel, rate_tol,
              "fit " + fmt(fit.rate) + " exact " + fmt(reference));
  } else {
    rep.check("decay_rate_positive", fit.rate > 0, fit.rate, 0);
    rep.check("decay_fit_r_squared", fit.r_squared >= r2_min, fit.r_squared, r2_min);
  }
  return rep;
}

Report cmd_threshold_table(const RunContext& ctx) {
  Report rep;
  rep.command = "threshold-table";
  const auto& c = ctx.config;
  std::vector<double> default_betas;
  for (int k = 0; k <= 10; ++k) default_betas.push_back(0.1 * k);
  auto betas = c.get_doubles("betas", default_betas);
  const int d = static_cast<int>(c.get_int("d", 2));
  const auto dist = field_distribution_from_name(c.get_string("field", "gaussian"));
  std::optional<double> target;
  if (c.has("target")) target = c.get_double("target");
  if (betas.empty()) throw ConfigError("no betas");
  for (double b : betas)
    if (!(b >= 0)) throw ConfigError("beta must be nonnegative");
  std::sort(betas.begin(), betas.end());

  const auto cc = CriticalConstants::defaults();
  std::vector<ThresholdRow> rows;
  for (double b : betas) rows.push_back({b, h2_bound(b, d, cc, target), h3_bound(b, d, dist, cc, target), d});
  {
    auto os = open_out(ctx.output(rep, "thresholds.csv"));
    write_threshold_csv(os, rows);
  }
  int drops = 0;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].H2 < rows[i - 1].H2) ++drops;
  rep.check("h2_nondecreasing_in_beta", drops == 0, drops, 0);
  for (const auto& r : rows)
    if (!r.H3.feasible) rep.notes.push_back("beta=" + fmt(r.beta) + ": H3 infeasible (" + r.H3.note + ")");
  return rep;
}

Report cmd_mixing_tv(const RunContext& ctx) {
  Report rep;
  rep.command = "mixing-tv";
  const auto& c = ctx.config;
  const double beta = c.get_double("beta", 0.25);
  const double H = c.get_double("H", 0.3);
  const auto dist = field_distribution_from_name(c.get_string("field", "bimodal"));
  const auto field_seed = c.get_uint("field_seed", 1);
  auto Ls = c.get_ints("L", std::vector<int>{4, 8, 12, 16});
  CoupledBudget budget;
  budget.samples = static_cast<int>(c.get_int("samples", 400000));
  budget.burn_in = static_cast<int>(c.get_int("burn_in", 200));
  budget.block_radius = static_cast<int>(c.get_int("block_radius", 6));
  budget.max_evaluations = static_cast<int>(c.get_int("max_evaluations", 2000));
  budget.batches = static_cast<int>(c.get_int("batches", 40));
  budget.window = static_cast<int>(c.get_int("window", 0));
  budget.local_sweeps = static_cast<int>(c.get_int("local_sweeps", 1));
  if (Ls.size() < 2) throw ConfigError("need at least two box sizes");
  std::sort(Ls.begin(), Ls.end());
  if (Ls.front() < 1) throw ConfigError("L must be positive");
  if (2 * budget.block_radius + 1 > kMaxRectangleWidth) throw ConfigError("block_radius too large for the transfer matrix");

  // One field realization on the largest box; smaller boxes see its restriction.
  const auto results = parallel_map(Ls.size(), ctx.threads, [&](std::size_t i) {
    const Box box = Box::cube(Ls[i], 2);
    const BoxGraph g(box);
    const auto field = scaled(sample_field(dist, box, field_seed).values, H);
    return center_tv_estimate(g, beta, field, origin_index(box), budget,
                              ctx.cell_seed("mixing/L=" + std::to_string(Ls[i])));
  });
  std::vector<DecayPoint> pts;
  {
    auto os = open_out(ctx.output(rep, "mixing_tv.csv"));
    os << "# schema_version 1\n";
    os << "L, tv, stderr, n_samples, exact, gap\n";
    for (std::size_t i = 0; i < Ls.size(); ++i) {
      const auto& e = results[i].estimate;
      os << Ls[i] << ", " << fmt(e.value) << ", " << fmt(e.stderr_) << ", " << e.n << ", " << results[i].exact << ", "
         << results[i].gap << "\n";
      pts.push_back({static_cast<double>(Ls[i]), e.value, e.stderr_});
      rep.cells.push_back({{"L", Ls[i]}, {"tv", e.value}, {"stderr", e.stderr_}, {"exact", results[i].exact},
                           {"block_evaluations", static_cast<std::uint64_t>(results[i].block_evaluations)}});
    }
  }
  int non_decreasing = 0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (!(pts[i].p < pts[i - 1].p)) ++non_decreasing;
  rep.check("tv_strictly_decreasing", non_decreasing == 0, non_decreasing, 0);
  const auto& a = pts.front();
  const auto& b = pts.back();
  const double gap = (a.p - a.stderr_) - (b.p + b.stderr_);
  rep.check("tv_one_sigma_separated", gap > 0, gap, 0,
            "L=" + fmt(a.r) + " vs L=" + fmt(b.r));

  auto os = open_out(ctx.output(rep, "mixing_fit.csv"));
  os << "# schema_version 1\n";
  os << "rate, log_prefactor, r_squared, points_used, status\n";
  try {
    const auto fit = decay_fit(pts);
    os << fmt(fit.rate) << ", " << fmt(fit.log_prefactor) << ", " << fmt(fit.r_squared) << ", " << fit.used.size()
       << ", ok\n";
  } catch (const std::domain_error& e) {
    os << "nan, nan, nan, 0, too-few-points\n";
    rep.notes.push_back(std::string("mixing fit skipped: ") + e.what());
  }
  return rep;
}

Report cmd_verify_constants(const RunContext& ctx) {
  Report rep;
  rep.command = "verify-constants";
  const auto& c = ctx.config;
  const auto dims = c.get_ints("dims", std::vector<int>{2, 3});
  const auto sizes = c.get_ints("L", std::vector<int>{64, 16});
  const int samples = static_cast<int>(c.get_int("samples", 2000));
  const double eps = c.get_double("eps", 0.03);
  if (dims.size() != sizes.size()) throw ConfigError("dims and L must have equal length");
  if (!(eps > 0)) throw ConfigError("eps must be positive");
  const auto cc = CriticalConstants::defaults();

  struct Job {
    int d, L;
    bool site;
    double p;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < dims.size(); ++i)
    for (bool site : {false, true}) {
      const double pc = site ? cc.pc_site(dims[i]) : cc.pc_bond(dims[i]);
      jobs.push_back({dims[i], sizes[i], site, pc - eps});
      jobs.push_back({dims[i], sizes[i], site, pc + eps});
    }
  const auto est = parallel_map(jobs.size(), ctx.threads, [&](std::size_t i) {
    const auto& j = jobs[i];
    return crossing_probability(j.d, j.L, j.p, j.site,
                                samples, ctx.cell_seed("crossing/" + std::to_string(j.d) + (j.site ? "/site/" : "/bond/") + fmt(j.p)));
  });
  auto os = open_out(ctx.output(rep, "constants.csv"));
  os << "# schema_version 1\n";
  os << "d, kind, value, provenance, L, p, crossing, stderr\n";
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& j = jobs[i];
    const auto& entry = j.site ? cc.site_entry(j.d) : cc.bond_entry(j.d);
    os << j.d << ", " << (j.site ? "site" : "bond") << ", " << fmt(entry.value) << ", " << entry.provenance << ", " << j.L
       << ", " << fmt(j.p) << ", " << fmt(est[i].value) << ", " << fmt(est[i].stderr_) << "\n";
    if (i % 2 == 1) {
      const auto& lo = est[i - 1];
      const auto& hi = est[i];
      const double sep = (hi.value - lo.value) - 3 * std::hypot(hi.stderr_, lo.stderr_);
      rep.check("crossing_brackets_" + std::string(j.site ? "site" : "bond") + "_d" + std::to_string(j.d), sep > 0, sep, 0);
    }
  }
  return rep;
}

Report cmd_sample_field(const RunContext& ctx) {
  Report rep;
  rep.command = "sample-field";
  const auto& c = ctx.config;
  const int d = static_cast<int>(c.get_int("d", 2));
  const int L = static_cast<int>(c.get_int("L", 8));
  const auto name = c.get_string("field", "gaussian");
  const auto dist = field_distribution_from_name(name);
  const auto seed = c.has("field_seed") ? c.get_uint("field_seed") : ctx.cell_seed("field");
  if (d < 1 || d > 3 || L < 0) throw ConfigError("need 1 <= d <= 3 and L >= 0");
  const auto h = sample_field(dist, Box::cube(L, d), seed);
  auto os = open_out(ctx.output(rep, "field.txt"));
  write_field(os, h);
  return rep;
}

const std::vector<CommandInfo>& commands() {
  static const std::vector<CommandInfo> list = {
      {"oracle-verify", "exact invariant suites on tiny instances", cmd_oracle_verify,
       {"draws", "tv_draws", "tol", "corrupt_weight"}},
      {"coupling-verify", "pathwise coupling assertions over seeded runs", cmd_coupling_verify,
       {"runs", "beta", "H", "field", "field_seed", "L", "d", "tv_tolerance", "replay_run"}},
      {"sampler-check", "heat-bath and ES alternation against exact laws", cmd_sampler_check,
       {"beta", "H", "field", "field_seed", "samples", "burn_in", "tv_tolerance"}},
      {"kertesz-scan", "theta_n regime classification and Kertesz brackets", cmd_kertesz_scan,
       {"schedule", "H_lo", "H_hi", "width", "max_evaluations", "d", "chains", "burn_in", "samples_per_chain", "gap",
        "betas", "classify_beta", "classify_H"}},
      {"decay-fit", "truncated two-point function and exponential fit", cmd_decay_fit,
       {"d", "beta", "H", "field", "field_seed", "distances", "rate_tolerance", "min_r_squared", "samples", "burn_in",
        "block_radius", "window", "local_sweeps", "max_evaluations", "batches", "p_samples", "side"}},
      {"threshold-table", "H2 and H3 bounds over beta", cmd_threshold_table, {"betas", "d", "field", "target"}},
      {"mixing-tv", "plus/minus boundary TV of the centre spin", cmd_mixing_tv,
       {"beta", "H", "field", "field_seed", "L", "samples", "burn_in", "block_radius", "max_evaluations", "batches",
        "window", "local_sweeps"}},
      {"verify-constants", "crossing probabilities around the shipped thresholds", cmd_verify_constants,
       {"dims", "L", "samples", "eps"}},
      {"sample-field", "write one field realization", cmd_sample_field, {"d", "L", "field", "field_seed"}},
  };
  return list;
}

const CommandInfo& find_command(const std::string& name) {
  for (const auto& c : commands())
    if (c.name == name) return c;
  throw ConfigError("unknown command '" + name + "'");
}

nlohmann::ordered_json run_record(const Report& report, const RunContext& ctx, double wall_seconds) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["command"] = report.command;
  j["version"] = kVersion;
  j["config_hash"] = ctx.config.hash();
  j["config"] = ctx.config.values();
  j["cap"] = ctx.cap;
  j["threads"] = ctx.threads;
  j["wall_seconds"] = wall_seconds;
  j["rng"] = {{"master_seed", ctx.master_seed},
              {"scheme", "cell seed = key_hash(master, cell tag, fnv1a(cell id)); keyed splitmix64 streams"}};
  j["passed"] = report.passed();
  auto& a = j["assertions"] = nlohmann::ordered_json::array();
  for (const auto& r : report.assertions)
    a.push_back({{"name", r.name}, {"passed", r.passed}, {"measured", r.measured}, {"threshold", r.threshold},
                 {"detail", r.detail}});
  j["cells"] = report.cells;
  j["notes"] = report.notes;
  j["outputs"] = report.outputs;
  return j;
}

Report run_command(const CommandInfo& cmd, const RunContext& ctx) {
  for (const auto& [k, v] : ctx.config.values())
    if (std::find(cmd.keys.begin(), cmd.keys.end(), k) == cmd.keys.end())
      throw ConfigError("unknown key '" + k + "' for " + cmd.name);
  if (ctx.cap < 1 || ctx.cap > 26) throw ConfigError("cap must be in [1, 26]");
  if (ctx.threads < 1) throw ConfigError("threads must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  Report rep = cmd.run(ctx);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::filesystem::create_directories(ctx.out_dir);
  std::ofstream os(ctx.out_dir / "run_record.json");
  os << run_record(rep, ctx, wall).dump(2) << "\n";
  return rep;
}

}  // namespace rfim
