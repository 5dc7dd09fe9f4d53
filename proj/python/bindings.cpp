#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <map>
#include <string>
#include <vector>

#include "rfim/coupling.hpp"
#include "rfim/experiments.hpp"
#include "rfim/fields.hpp"
#include "rfim/gibbs.hpp"
#include "rfim/invariants.hpp"
#include "rfim/perc.hpp"
#include "rfim/sw_chain.hpp"

namespace py = pybind11;
using namespace rfim;

namespace {

py::dict estimate_dict(const Estimate& e) {
  py::dict d;
  d["value"] = e.value;
  d["stderr"] = e.stderr_;
  d["n"] = e.n;
  return d;
}

std::vector<std::vector<int>> coords(const Box& b) {
  std::vector<std::vector<int>> out;
  for (const auto& s : b.sites()) out.push_back(s.coords);
  return out;
}

// Exact <sigma_x> for every site of [-L, L]^d under a constant boundary.
std::vector<double> exact_magnetization(int L, int d, double beta, double H, const std::string& field,
                                        std::uint64_t field_seed, int boundary) {
  const BoxGraph g(Box::cube(L, d));
  const auto h = sample_field(field_distribution_from_name(field), g.box(), field_seed);
  const auto p = exact_measure(g, SpinBoundary::constant(g, boundary), beta, effective_field(h, H));
  std::vector<double> m;
  for (int x = 0; x < g.num_sites(); ++x) m.push_back(magnetization(p, x));
  return m;
}

py::dict run(const std::string& name, const std::string& out_dir, std::uint64_t seed,
             const std::map<std::string, std::string>& config, int threads, int cap) {
  RunContext ctx;
  ctx.master_seed = seed;
  ctx.out_dir = out_dir;
  ctx.threads = threads;
  ctx.cap = cap;
  for (const auto& [k, v] : config) ctx.config.set(k, v);
  std::filesystem::create_directories(ctx.out_dir);
  Report rep;
  {
    py::gil_scoped_release release;
    rep = run_command(find_command(name), ctx);
  }
  py::list assertions;
  for (const auto& a : rep.assertions) {
    py::dict d;
    d["name"] = a.name;
    d["passed"] = a.passed;
    d["measured"] = a.measured;
    d["threshold"] = a.threshold;
    d["detail"] = a.detail;
    assertions.append(d);
  }
  py::dict out;
  out["command"] = rep.command;
  out["passed"] = rep.passed();
  out["assertions"] = assertions;
  out["outputs"] = rep.outputs;
  out["notes"] = rep.notes;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Random field Ising model core";
  m.attr("__version__") = kVersion;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("sample_field",
        [](const std::string& field, int L, int d, std::uint64_t seed) {
          const auto h = sample_field(field_distribution_from_name(field), Box::cube(L, d), seed);
          return py::make_tuple(coords(h.box), h.values);
        },
        py::arg("field"), py::arg("L"), py::arg("d"), py::arg("seed"),
        "Sites of [-L, L]^d and one field value per site.");

  m.def("exact_magnetization", &exact_magnetization, py::arg("L"), py::arg("d"), py::arg("beta"), py::arg("H"),
        py::arg("field") = "bimodal", py::arg("field_seed") = 1, py::arg("boundary") = 1,
        "Exact <sigma_x> on [-L, L]^d by enumeration (at most 20 sites).");

  m.def("beta_P", [](int d) { return beta_P(d); }, py::arg("d"));
  m.def("h2_bound", [](double beta, int d) { return h2_bound(beta, d); }, py::arg("beta"), py::arg("d") = 2);
  m.def("h3_bound",
        [](double beta, int d, const std::string& field) {
          const auto b = h3_bound(beta, d, field_distribution_from_name(field));
          py::dict out;
          out["feasible"] = b.feasible;
          out["H"] = b.H;
          out["delta"] = b.delta;
          return out;
        },
        py::arg("beta"), py::arg("d") = 2, py::arg("field") = "bimodal");
  m.def("sign_bound_a", &sign_bound_a, py::arg("beta"), py::arg("H"), py::arg("abs_h"), py::arg("d"));

  m.def("theta_n",
        [](double beta, double H, int n, int d, int chains, int samples_per_chain, std::uint64_t seed) {
          ThetaBudget b;
          b.chains = chains;
          b.samples_per_chain = samples_per_chain;
          Estimate e;
          {
            py::gil_scoped_release release;
            e = theta_n_estimate(beta, H, n, d, b, seed);
          }
          return estimate_dict(e);
        },
        py::arg("beta"), py::arg("H"), py::arg("n"), py::arg("d") = 2, py::arg("chains") = 40,
        py::arg("samples_per_chain") = 250, py::arg("seed") = 1);

  m.def("decay_fit",
        [](const std::vector<double>& r, const std::vector<double>& p, const std::vector<double>& se) {
          if (r.size() != p.size() || r.size() != se.size()) throw std::invalid_argument("length mismatch");
          std::vector<DecayPoint> pts;
          for (std::size_t i = 0; i < r.size(); ++i) pts.push_back({r[i], p[i], se[i]});
          const auto f = decay_fit(pts);
          py::dict out;
          out["rate"] = f.rate;
          out["log_prefactor"] = f.log_prefactor;
          out["r_squared"] = f.r_squared;
          out["points_used"] = f.used.size();
          return out;
        },
        py::arg("r"), py::arg("p"), py::arg("stderr"));

  m.def("ising_bc_coupling",
        [](int L, int d, double beta, double H, std::uint64_t field_seed, std::uint64_t seed) {
          const Box box = Box::cube(L, d);
          const auto h = sample_field(FieldDistribution::bimodal(), box, field_seed);
          const auto g = RcGraph::two_ghost(box, beta, H, h.values);
          const auto& bg = g.box_graph();
          const auto r = ising_bc_coupling(g, SpinBoundary::all_plus(bg), SpinBoundary::all_minus(bg), seed);
          py::dict out;
          out["sigma_plus"] = std::vector<int>(r.sigma_eta.begin(), r.sigma_eta.end());
          out["sigma_minus"] = std::vector<int>(r.sigma_eta2.begin(), r.sigma_eta2.end());
          out["c_plus"] = std::vector<int>(r.c_plus.begin(), r.c_plus.end());
          out["ok"] = r.bonds.trace.ok();
          return out;
        },
        py::arg("L"), py::arg("d"), py::arg("beta"), py::arg("H"), py::arg("field_seed") = 1, py::arg("seed") = 1,
        "One run of the plus/minus boundary coupling on a bimodal field.");

  m.def("min_upset_slack",
        [](const std::vector<double>& mu, const std::vector<double>& nu, int bits) {
          if (mu.size() != (std::size_t{1} << bits) || nu.size() != mu.size())
            throw std::invalid_argument("laws must have 2^bits entries");
          return min_upset_slack(mu, nu, bits);
        },
        py::arg("mu"), py::arg("nu"), py::arg("bits"));

  m.def("commands", [] {
    std::vector<std::string> names;
    for (const auto& c : commands()) names.push_back(c.name);
    return names;
  });
  m.def("run_command", &run, py::arg("name"), py::arg("out_dir"), py::arg("seed") = 1,
        py::arg("config") = std::map<std::string, std::string>{}, py::arg("threads") = 1, py::arg("cap") = 20,
        "Run a harness command; returns its assertions and written files.");
}
