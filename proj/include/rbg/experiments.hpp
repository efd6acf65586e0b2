#pragma once

// Command implementations behind the rbglab tool. Each returns its outputs as
// values so tests can compare runs byte for byte.

#include "rbg/scenario.hpp"
#include "rbg/simulation.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace rbg::experiments {

// -- equilibrium ---------------------------------------------------------------

struct EquilibriumResult
{
  int exit_code = 0; // 0 iff max gain is 0 and every sample was falsified
  std::string report;
};

/// Throws std::out_of_range unless 2 <= n <= game::kEnumerationCap.
EquilibriumResult verify_equilibrium(std::size_t players, std::size_t falsify_samples, std::uint64_t seed);

// -- simulate ------------------------------------------------------------------

struct RunOutputs
{
  std::string metrics_csv;
  std::string trace_csv;
  nlohmann::json audit;
  bool passed = false;

  std::string audit_text() const { return audit.dump(2) + "\n"; }
};

RunOutputs collect(const sim::Simulation& simulation);
RunOutputs run_scenario(const scenario::Scenario& s);

/// Writes metrics.csv, trace.csv and audit.json under `dir`, creating it.
void write_outputs(const std::filesystem::path& dir, const RunOutputs& out);

// -- throughput sweep ----------------------------------------------------------

struct SweepParams
{
  double rate_bits_per_s = 256;
  Duration tgen_base = 14133;
  double speed = 1;
  Duration duration = 400000;
  std::uint64_t seed = 0;
  std::size_t honest_agents = 3;
  Money fee_per_bit = 4000;
  Money value_bound = 1000;
  bool parallel = true;
};

struct SweepPoint
{
  Duration t_gen = 0;
  std::size_t settled = 0;
  double mean_processing_ms = 0;
  /// Successful bits among requests submitted in the steady-state window,
  /// per second of that window.
  double throughput_bits_per_s = 0;
  std::size_t window_bits = 0;
  std::size_t success = 0;
  std::size_t penalty = 0;
  std::size_t failure = 0;
  std::size_t unsettled = 0;
  bool audit_passed = false;
};

/// {t/8, t/4, t/2, t, 2t} with t = tgen_base / speed.
std::vector<Duration> sweep_block_times(Duration tgen_base, double speed);

/// All-honest run at one block time. The steady-state window starts at
/// 13 * t_gen and ends at the duration, both aligned to the request grid.
SweepPoint throughput_point(const SweepParams& params, Duration t_gen);
std::vector<SweepPoint> throughput_sweep(const SweepParams& params);
std::string sweep_csv(const std::vector<SweepPoint>& points);
nlohmann::json sweep_audit(const SweepParams& params, const std::vector<SweepPoint>& points);

// -- lottery -------------------------------------------------------------------

struct LotteryParams
{
  std::size_t participants = 2;
  Money price = 100;
  std::uint64_t seed = 0;
  std::size_t honest_agents = 3;
  Duration t_gen = 14133;
  Money fee_per_bit = 4000;
  Money value_bound = 1000;
  std::size_t max_attempts = 8; // word requests re-issued for bits that failed
};

struct LotteryResult
{
  std::size_t participants = 0;
  std::size_t bits = 0;
  std::size_t attempts = 0;
  std::uint64_t value = 0;
  std::size_t winner = 0; // 1-based ticket index
  AccountId winner_account = 0;
  Money pot = 0;
  Money payout = 0;
  std::string max_win_probability;
  std::string min_win_probability;
  std::string announcement;
  RunOutputs outputs;
};

/// Ticket i is bought by its own account; the pot k * price sits with the
/// lottery account until a ceil(log2 k)-bit word picks (value mod k) + 1.
/// Throws std::invalid_argument if k is 0 or the price is negative, and
/// std::runtime_error if the bits cannot be drawn within max_attempts.
LotteryResult lottery(const LotteryParams& params);

} // namespace rbg::experiments
