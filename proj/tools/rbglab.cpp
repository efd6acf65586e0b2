#include "rbg/experiments.hpp"
#include "rbg/game.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace rbg;

namespace {

void write_text(const fs::path& path, const std::string& text)
{
  std::ofstream f(path, std::ios::binary);
  if (!f)
    throw std::runtime_error("cannot write " + path.string());
  f << text;
}

int cmd_verify(std::size_t players, std::size_t falsify, std::uint64_t seed)
{
  if (players < 2 || players > game::kEnumerationCap) {
    std::cerr << "verify-equilibrium: --players must be in [2, " << game::kEnumerationCap << "]\n";
    return 2;
  }
  const auto r = experiments::verify_equilibrium(players, falsify, seed);
  std::cout << r.report;
  return r.exit_code;
}

int cmd_simulate(const fs::path& file, const fs::path& out, std::optional<std::uint64_t> seed)
{
  auto s = scenario::load(file);
  if (seed)
    s.sim.seed = *seed;
  const auto run = experiments::run_scenario(s);
  experiments::write_outputs(out, run);
  const auto& req = run.audit["requests"];
  std::cout << "requests: " << req["created"] << " created, " << req["success"] << " success, " << req["penalty"]
            << " penalty, " << req["failure"] << " failure, " << req["unsettled"] << " unsettled\n"
            << "audit: " << (run.passed ? "passed" : "FAILED") << "\n";
  return run.passed ? 0 : 1;
}

int cmd_throughput(const experiments::SweepParams& params, const std::optional<fs::path>& out)
{
  const auto points = experiments::throughput_sweep(params);
  const auto csv = experiments::sweep_csv(points);
  const auto audit = experiments::sweep_audit(params, points);
  std::cout << csv;
  if (out) {
    fs::create_directories(*out);
    write_text(*out / "metrics.csv", csv);
    write_text(*out / "audit.json", audit.dump(2) + "\n");
  }
  return audit["passed"].get<bool>() ? 0 : 1;
}

int cmd_lottery(const experiments::LotteryParams& params, const std::optional<fs::path>& out)
{
  const auto r = experiments::lottery(params);
  std::cout << r.announcement;
  if (out)
    experiments::write_outputs(*out, r.outputs);
  return r.outputs.passed ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Random bit generation: equilibrium checks, chain simulations and experiments"};
  app.require_subcommand(1);

  std::size_t players = 0, falsify = 0;
  std::uint64_t verify_seed = 1;
  auto* verify = app.add_subcommand("verify-equilibrium", "Exact check of the uniform quasi-strong equilibrium");
  verify->add_option("--players", players, "Number of players (2..8)")->required();
  verify->add_option("--falsify", falsify, "Random biased profiles to falsify");
  verify->add_option("--seed", verify_seed, "Seed for falsification samples");

  std::string scenario_file, sim_out = "out";
  std::optional<std::uint64_t> sim_seed;
  auto* simulate = app.add_subcommand("simulate", "Run a scenario file end to end");
  simulate->add_option("--scenario", scenario_file, "Scenario JSON")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", sim_out, "Output directory");
  simulate->add_option("--seed", sim_seed, "Override the scenario seed");

  experiments::SweepParams sweep;
  std::optional<std::string> sweep_out;
  auto* throughput = app.add_subcommand("throughput", "Latency and throughput across block times");
  throughput->add_option("--rate", sweep.rate_bits_per_s, "Requested bits per second")->check(CLI::PositiveNumber);
  throughput->add_option("--tgen-base", sweep.tgen_base, "Base block time in ms")->check(CLI::PositiveNumber);
  throughput->add_option("--speed", sweep.speed, "Divide the base block time by this factor")
      ->check(CLI::PositiveNumber);
  throughput->add_option("--duration", sweep.duration, "Request submission period in ms")->check(CLI::PositiveNumber);
  throughput->add_option("--seed", sweep.seed, "Seed");
  throughput->add_option("--agents", sweep.honest_agents, "Honest participants")->check(CLI::PositiveNumber);
  throughput->add_option("--out", sweep_out, "Output directory");

  experiments::LotteryParams lot;
  std::optional<std::string> lot_out;
  auto* lottery = app.add_subcommand("lottery-demo", "Lottery client drawing its winner from random bits");
  lottery->add_option("--participants", lot.participants, "Tickets sold")->required()->check(CLI::PositiveNumber);
  lottery->add_option("--price", lot.price, "Ticket price")->required()->check(CLI::NonNegativeNumber);
  lottery->add_option("--seed", lot.seed, "Seed");
  lottery->add_option("--out", lot_out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*verify)
      return cmd_verify(players, falsify, verify_seed);
    if (*simulate)
      return cmd_simulate(scenario_file, sim_out, sim_seed);
    if (*throughput)
      return cmd_throughput(sweep, sweep_out ? std::optional<fs::path>(*sweep_out) : std::nullopt);
    if (*lottery)
      return cmd_lottery(lot, lot_out ? std::optional<fs::path>(*lot_out) : std::nullopt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
