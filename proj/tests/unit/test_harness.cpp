#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "rfim/experiments.hpp"

using namespace rfim;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunContext context(const std::string& dir, int threads) {
  RunContext ctx;
  ctx.master_seed = 5;
  ctx.threads = threads;
  ctx.out_dir = fs::temp_directory_path() / "rfim_harness_test" / dir;
  fs::remove_all(ctx.out_dir);
  fs::create_directories(ctx.out_dir);
  return ctx;
}

}  // namespace

TEST_CASE("parallel map keeps index order") {
  auto sq = [](std::size_t i) { return static_cast<int>(i * i); };
  CHECK(parallel_map(50, 1, sq) == parallel_map(50, 4, sq));
  CHECK(parallel_map(3, 8, sq) == std::vector<int>{0, 1, 4});
  CHECK_THROWS_AS(parallel_map(4, 2, [](std::size_t i) -> int { if (i == 2) throw std::runtime_error("x"); return 0; }),
                  std::runtime_error);
}

TEST_CASE("cell seeds are keyed by id") {
  RunContext a, b;
  CHECK(a.cell_seed("L=4") == b.cell_seed("L=4"));
  CHECK(a.cell_seed("L=4") != a.cell_seed("L=8"));
  b.master_seed = 2;
  CHECK(a.cell_seed("L=4") != b.cell_seed("L=4"));
}

TEST_CASE("unknown keys and commands are rejected") {
  auto ctx = context("reject", 1);
  ctx.config.set("betta", "0.3");
  CHECK_THROWS_AS(run_command(find_command("threshold-table"), ctx), ConfigError);
  CHECK_THROWS_AS(find_command("no-such-command"), ConfigError);
  auto small = context("cap", 1);
  small.cap = 8;
  CHECK_THROWS_AS(run_command(find_command("oracle-verify"), small), ConfigError);
}

TEST_CASE("threshold table is deterministic and records its run") {
  auto a = context("tt_a", 1), b = context("tt_b", 1);
  const auto ra = run_command(find_command("threshold-table"), a);
  run_command(find_command("threshold-table"), b);
  CHECK(ra.passed());
  CHECK(slurp(a.out_dir / "thresholds.csv") == slurp(b.out_dir / "thresholds.csv"));
  const auto rec = nlohmann::json::parse(slurp(a.out_dir / "run_record.json"));
  CHECK(rec["command"] == "threshold-table");
  CHECK(rec["config_hash"].get<std::string>().size() == 16);
}

TEST_CASE("mixing tv output does not depend on thread count") {
  auto a = context("mix_a", 1), b = context("mix_b", 3);
  for (auto* c : {&a, &b}) {
    c->config.set("L", "4, 6");
    c->config.set("samples", "2000");
    c->config.set("block_radius", "2");
  }
  run_command(find_command("mixing-tv"), a);
  run_command(find_command("mixing-tv"), b);
  const auto s = slurp(a.out_dir / "mixing_tv.csv");
  CHECK(s.rfind("# schema_version 1\n", 0) == 0);
  CHECK(s == slurp(b.out_dir / "mixing_tv.csv"));
}
