#include "rfim/fields.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "rfim/rng.hpp"

namespace rfim {

FieldDistribution FieldDistribution::bimodal() { return {}; }

FieldDistribution FieldDistribution::gaussian() {
  FieldDistribution d;
  d.kind = FieldKind::Gaussian;
  d.name = "gaussian";
  return d;
}

FieldDistribution FieldDistribution::general(std::string name, std::function<double(double)> inverse_cdf,
                                             double atom_at_zero, std::function<double(double)> abs_below) {
  if (!inverse_cdf || !abs_below) throw std::invalid_argument("general field law needs a sampler and |H| cdf");
  if (atom_at_zero < 0 || atom_at_zero > 1) throw std::invalid_argument("atom mass must be in [0,1]");
  FieldDistribution d;
  d.kind = FieldKind::General;
  d.name = std::move(name);
  d.inverse_cdf = std::move(inverse_cdf);
  d.abs_below_fn = std::move(abs_below);
  d.atom_at_zero = atom_at_zero;
  return d;
}

FieldDistribution FieldDistribution::symmetric_atoms(double a) {
  return general(
      "atoms", [a](double u) { return u < 0.5 ? -a : a; }, a == 0 ? 1.0 : 0.0,
      [a](double delta) { return a < delta ? 1.0 : 0.0; });
}

FieldDistribution FieldDistribution::zero() { return symmetric_atoms(0.0); }

double FieldDistribution::abs_below(double delta) const {
  switch (kind) {
    case FieldKind::Bimodal: return delta > 1.0 ? 1.0 : 0.0;
    case FieldKind::Gaussian: return std::erf(delta / std::numbers::sqrt2);
    case FieldKind::General: return abs_below_fn(delta);
  }
  return 0.0;
}

double FieldDistribution::draw(double u, double v) const {
  switch (kind) {
    case FieldKind::Bimodal: return u < 0.5 ? -1.0 : 1.0;
    case FieldKind::Gaussian:
      return std::sqrt(-2.0 * std::log1p(-u)) * std::cos(2.0 * std::numbers::pi * v);
    case FieldKind::General: return inverse_cdf(u);
  }
  return 0.0;
}

FieldDistribution field_distribution_from_name(const std::string& name) {
  if (name == "bimodal") return FieldDistribution::bimodal();
  if (name == "gaussian") return FieldDistribution::gaussian();
  throw std::invalid_argument("unknown field distribution: " + name);
}

double FieldRealization::at(const Site& s) const {
  const int i = box.index_of(s);
  if (i < 0) throw std::out_of_range("field: site outside box " + to_string(s));
  return values[static_cast<std::size_t>(i)];
}

namespace {

std::uint64_t site_key(const Site& s) {
  std::uint64_t h = 0x51ed270b27a5f7c1ULL ^ static_cast<std::uint64_t>(s.dim());
  for (int c : s.coords) h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(c)));
  return h;
}

}  // namespace

FieldRealization sample_field(const FieldDistribution& dist, const Box& box, std::uint64_t seed) {
  FieldRealization out{box, {}, dist.name, seed};
  out.values.reserve(static_cast<std::size_t>(box.size()));
  for (const auto& s : box.sites()) {
    const std::uint64_t k = site_key(s);
    const double u = keyed_uniform({stream::kField, seed, k, 0});
    const double v = keyed_uniform({stream::kField, seed, k, 1});
    out.values.push_back(dist.draw(u, v));
  }
  return out;
}

std::vector<double> effective_field(const FieldRealization& h, double H) {
  std::vector<double> out(h.values.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = H * h.values[i];
  return out;
}

void write_field(std::ostream& os, const FieldRealization& h) {
  os << "dim " << h.box.dim() << ", box " << (h.box.radius() ? *h.box.radius() : -1) << ", dist "
     << h.distribution << ", seed " << h.seed << '\n';
  char buf[64];
  for (int i = 0; i < h.box.size(); ++i) {
    for (int c : h.box.site(i).coords) os << c << ' ';
    std::snprintf(buf, sizeof buf, "%.17g", h.values[static_cast<std::size_t>(i)]);
    os << buf << '\n';
  }
}

FieldRealization read_field(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw std::runtime_error("field file: missing header");
  int dim = 0, L = 0;
  unsigned long long seed = 0;
  char name[128] = {0};
  if (std::sscanf(header.c_str(), "dim %d, box %d, dist %127[^,], seed %llu", &dim, &L, name, &seed) != 4)
    throw std::runtime_error("field file: malformed header: " + header);
  std::vector<std::pair<Site, double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    Site s;
    s.coords.resize(static_cast<std::size_t>(dim));
    for (auto& c : s.coords)
      if (!(ls >> c)) throw std::runtime_error("field file: malformed row: " + line);
    std::string value;
    if (!(ls >> value)) throw std::runtime_error("field file: missing value: " + line);
    rows.emplace_back(std::move(s), std::strtod(value.c_str(), nullptr));
  }
  std::vector<Site> sites;
  for (const auto& r : rows) sites.push_back(r.first);
  Box box = L >= 0 ? Box::cube(L, dim) : Box::from_sites(dim, sites);
  if (static_cast<int>(rows.size()) != box.size()) throw std::runtime_error("field file: site count mismatch");
  FieldRealization out{box, std::vector<double>(rows.size()), name, seed};
  for (auto& [s, v] : rows) {
    const int i = box.index_of(s);
    if (i < 0) throw std::runtime_error("field file: site outside box " + to_string(s));
    out.values[static_cast<std::size_t>(i)] = v;
  }
  return out;
}

}  // namespace rfim
