#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "json.hpp"
#include "rfim/config.hpp"

namespace rfim {

inline constexpr const char* kVersion = "0.3.0";

struct AssertionResult {
  std::string name;
  bool passed = true;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct Report {
  std::string command;
  std::vector<AssertionResult> assertions;
  std::vector<std::string> outputs;  // files written, relative to the output directory
  std::vector<std::string> notes;
  nlohmann::ordered_json cells = nlohmann::ordered_json::array();

  bool passed() const;
  void check(std::string name, bool ok, double measured, double threshold, std::string detail = "");
};

struct RunContext {
  Config config;
  std::uint64_t master_seed = 1;
  std::filesystem::path out_dir = ".";
  int threads = 1;
  int cap = 20;  // enumeration cap (sites); bond enumeration allows cap + 4 edges

  /// Per-cell seed: keyed hash of (master seed, cell id).
  std::uint64_t cell_seed(std::string_view cell_id) const;
  /// Opens out_dir / name for writing and records it in the report.
  std::filesystem::path output(Report& report, const std::string& name) const;
};

/// FNV-1a 64.
std::uint64_t fnv1a(std::string_view s);

/// Runs f(0..n-1) on `threads` workers; results are returned in index order,
/// so the outcome does not depend on scheduling.
template <class F>
auto parallel_map(std::size_t n, int threads, F f) -> std::vector<decltype(f(std::size_t{0}))> {
  using R = decltype(f(std::size_t{0}));
  std::vector<R> out(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int k = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (k == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < k; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return out;
}

Report cmd_oracle_verify(const RunContext& ctx);
Report cmd_coupling_verify(const RunContext& ctx);
Report cmd_sampler_check(const RunContext& ctx);
Report cmd_kertesz_scan(const RunContext& ctx);
Report cmd_decay_fit(const RunContext& ctx);
Report cmd_threshold_table(const RunContext& ctx);
Report cmd_mixing_tv(const RunContext& ctx);
Report cmd_verify_constants(const RunContext& ctx);
Report cmd_sample_field(const RunContext& ctx);

using Command = std::function<Report(const RunContext&)>;
struct CommandInfo {
  std::string name;
  std::string help;
  Command run;
  std::vector<std::string> keys;  // accepted config keys
};
const std::vector<CommandInfo>& commands();

const CommandInfo& find_command(const std::string& name);

/// Rejects unknown config keys, runs the command and writes run_record.json
/// next to its outputs.
Report run_command(const CommandInfo& cmd, const RunContext& ctx);

/// JSON record: config hash, version, wall clock, assertions, cells and the seeding scheme.
nlohmann::ordered_json run_record(const Report& report, const RunContext& ctx, double wall_seconds);

}  // namespace rfim
