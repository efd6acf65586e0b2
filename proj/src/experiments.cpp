#include "rbg/experiments.hpp"

#include "rbg/game.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <future>
#include <sstream>

namespace rbg::experiments {

using nlohmann::json;

EquilibriumResult verify_equilibrium(std::size_t players, std::size_t falsify_samples, std::uint64_t seed)
{
  const auto v = game::verify_quasi_strong_uniform(players);
  std::ostringstream out;
  out << "players: " << v.players << "\n"
      << "coalitions: " << v.coalitions << "\n"
      << "coalition x pure deviation pairs: " << v.pairs_checked << "\n"
      << "max coalition gain: " << game::to_string(v.max_gain) << "\n";
  bool ok = v.max_gain == 0;
  if (falsify_samples > 0) {
    const auto f = game::falsify_random_profiles(players, falsify_samples, seed);
    out << "biased profiles falsified: " << f.falsified << "/" << f.samples << "\n";
    ok = ok && f.falsified == f.samples;
  }
  out << (ok ? "uniform profile is the unique quasi-strong equilibrium" : "CHECK FAILED") << "\n";
  return {ok ? 0 : 1, out.str()};
}

// ---------------------------------------------------------------------------

RunOutputs collect(const sim::Simulation& simulation)
{
  RunOutputs out;
  std::ostringstream metrics, trace;
  sim::write_metrics_csv(metrics, simulation.metrics());
  sim::write_trace_csv(trace, simulation.trace());
  out.metrics_csv = metrics.str();
  out.trace_csv = trace.str();
  out.audit = simulation.audit();
  out.passed = out.audit["passed"].get<bool>();
  return out;
}

RunOutputs run_scenario(const scenario::Scenario& s)
{
  auto simulation = scenario::instantiate(s);
  simulation.run();
  auto out = collect(simulation);
  out.audit["scenario"] = {{"seed", s.sim.seed}, {"tgenMs", s.sim.t_gen}, {"durationMs", s.sim.duration}};
  return out;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text)
{
  std::ofstream f(path, std::ios::binary);
  if (!f)
    throw std::runtime_error("cannot write " + path.string());
  f << text;
}

std::string fixed(double x, int digits = 3)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

} // namespace

void write_outputs(const std::filesystem::path& dir, const RunOutputs& out)
{
  std::filesystem::create_directories(dir);
  write_file(dir / "metrics.csv", out.metrics_csv);
  write_file(dir / "trace.csv", out.trace_csv);
  write_file(dir / "audit.json", out.audit_text());
}

// ---------------------------------------------------------------------------

std::vector<Duration> sweep_block_times(Duration tgen_base, double speed)
{
  if (tgen_base <= 0 || !(speed > 0))
    throw std::invalid_argument("tgen base and speed must be positive");
  const auto t = std::llround(static_cast<double>(tgen_base) / speed);
  if (t < 8)
    throw std::invalid_argument("scaled block time must be at least 8 ms");
  return {t / 8, t / 4, t / 2, t, 2 * t};
}

SweepPoint throughput_point(const SweepParams& p, Duration t_gen)
{
  if (!(p.rate_bits_per_s > 0) || p.duration <= 0 || p.honest_agents == 0)
    throw std::invalid_argument("throughput needs a positive rate, duration and agent count");

  scenario::Scenario s;
  s.sim = chainsim::SimParams{t_gen, derive_seed(p.seed, {static_cast<std::uint64_t>(t_gen)}), p.duration};
  s.requests.rate_bits_per_s = p.rate_bits_per_s;
  s.requests.bits_per_request = p.rate_bits_per_s >= 1 ? static_cast<std::size_t>(std::llround(p.rate_bits_per_s)) : 1;
  s.requests.fee_per_bit = p.fee_per_bit;
  s.requests.value_bound = p.value_bound;
  s.requests.deadline_offset_multiple = s.tmin_multiple;
  s.miners = {chainsim::MinerSpec{0, chainsim::HashPower{1}, chainsim::Honest{}}};
  s.agents.assign(p.honest_agents, agents::HonestUniform{});
  s.trace = false;

  const Duration gap = s.requests.interval();
  const Timestamp from = (13 * t_gen + gap - 1) / gap * gap;
  const Timestamp to = (p.duration + gap - 1) / gap * gap;
  if (to <= from)
    throw std::invalid_argument("duration leaves no steady-state window after 13 block times");

  auto simulation = scenario::instantiate(s);
  simulation.run();

  SweepPoint pt;
  pt.t_gen = t_gen;
  double total = 0;
  std::size_t success_in_window = 0;
  for (const auto& row : simulation.metrics()) {
    ++pt.settled;
    total += static_cast<double>(row.processing);
    if (row.settlement == "Success")
      ++pt.success;
    else if (row.settlement == "Penalty")
      ++pt.penalty;
    else
      ++pt.failure;
    if (row.submitted_at >= from && row.submitted_at < to && row.settlement == "Success")
      ++success_in_window;
  }
  pt.unsettled = simulation.engine().request_count() - pt.settled;
  pt.window_bits = static_cast<std::size_t>((to - from) / gap) * s.requests.bits_per_request;
  pt.mean_processing_ms = pt.settled ? total / static_cast<double>(pt.settled) : 0.0;
  pt.throughput_bits_per_s = static_cast<double>(success_in_window) * 1000.0 / static_cast<double>(to - from);
  pt.audit_passed = simulation.audit_passed();
  return pt;
}

std::vector<SweepPoint> throughput_sweep(const SweepParams& params)
{
  const auto times = sweep_block_times(params.tgen_base, params.speed);
  std::vector<SweepPoint> points;
  if (!params.parallel) {
    for (Duration t : times)
      points.push_back(throughput_point(params, t));
    return points;
  }
  std::vector<std::future<SweepPoint>> runs;
  for (Duration t : times)
    runs.push_back(std::async(std::launch::async, [&params, t] { return throughput_point(params, t); }));
  for (auto& r : runs)
    points.push_back(r.get());
  return points;
}

std::string sweep_csv(const std::vector<SweepPoint>& points)
{
  std::ostringstream out;
  out << "tgen_ms,mean_processing_ms,throughput_bits_per_s,window_bits,settled,success,penalty,failure,unsettled\n";
  for (const auto& p : points)
    out << p.t_gen << ',' << fixed(p.mean_processing_ms) << ',' << fixed(p.throughput_bits_per_s) << ','
        << p.window_bits << ',' << p.settled << ',' << p.success << ',' << p.penalty << ',' << p.failure << ','
        << p.unsettled << '\n';
  return out.str();
}

json sweep_audit(const SweepParams& params, const std::vector<SweepPoint>& points)
{
  json runs = json::array();
  bool passed = true;
  for (const auto& p : points) {
    runs.push_back({{"tgenMs", p.t_gen}, {"auditPassed", p.audit_passed}, {"unsettled", p.unsettled}});
    passed = passed && p.audit_passed;
  }
  return {{"rateBitsPerS", params.rate_bits_per_s},
          {"tgenBaseMs", params.tgen_base},
          {"speed", params.speed},
          {"durationMs", params.duration},
          {"seed", params.seed},
          {"runs", std::move(runs)},
          {"passed", passed}};
}

// ---------------------------------------------------------------------------

LotteryResult lottery(const LotteryParams& p)
{
  if (p.participants == 0)
    throw std::invalid_argument("a lottery needs at least one ticket");
  if (p.price < 0)
    throw std::invalid_argument("ticket price must be non-negative");
  if (p.participants >= sim::kFirstAgentAccount - 2)
    throw std::invalid_argument("too many tickets");

  const std::size_t k = p.participants;
  const std::size_t bits = k == 1 ? 0 : static_cast<std::size_t>(std::bit_width(k - 1));
  const auto budget = static_cast<Money>(bits * p.max_attempts);

  sim::SimulationSetup setup;
  setup.params = chainsim::SimParams{p.t_gen, p.seed, 0};
  setup.config = protocol::Config::from_block_time(p.t_gen);
  setup.miners = {chainsim::MinerSpec{0, chainsim::HashPower{1}, chainsim::Honest{}}};
  setup.record_trace = true;
  for (std::size_t i = 0; i < p.honest_agents; ++i)
    setup.agents.push_back({agents::HonestUniform{}, p.value_bound * budget});
  sim::Simulation simulation(std::move(setup));

  const AccountId house = simulation.open_client(p.fee_per_bit * budget);
  std::vector<AccountId> tickets;
  for (std::size_t i = 0; i < k; ++i) {
    tickets.push_back(simulation.open_client(p.price));
    simulation.ledger().transfer(tickets.back(), house, p.price);
  }

  LotteryResult r;
  r.participants = k;
  r.bits = bits;
  r.pot = static_cast<Money>(k) * p.price;

  std::vector<std::optional<int>> drawn(bits);
  const Duration offset = simulation.engine().config().t_min;
  while (std::any_of(drawn.begin(), drawn.end(), [](const auto& b) { return !b; })) {
    if (r.attempts == p.max_attempts)
      throw std::runtime_error("could not draw lottery bits within the attempt limit");
    ++r.attempts;
    std::vector<std::size_t> missing;
    for (std::size_t i = 0; i < bits; ++i)
      if (!drawn[i])
        missing.push_back(i);
    const RequestId first = simulation.engine().next_request_id();
    simulation.schedule_request(sim::ClientRequest{simulation.chain().time(), house,
                                                   p.fee_per_bit * static_cast<Money>(missing.size()), offset,
                                                   p.value_bound, missing.size()});
    simulation.run();
    for (std::size_t j = 0; j < missing.size() && first + j < simulation.engine().request_count(); ++j) {
      const auto& req = simulation.engine().request(first + j);
      if (req.settlement)
        drawn[missing[j]] = protocol::output_bit(req.settlement->output);
    }
  }

  for (std::size_t i = 0; i < bits; ++i)
    r.value |= static_cast<std::uint64_t>(*drawn[i]) << i;
  r.winner = static_cast<std::size_t>(r.value % k) + 1;
  r.winner_account = tickets[r.winner - 1];
  const Money before = simulation.ledger().balance(r.winner_account);
  simulation.ledger().transfer(house, r.winner_account, r.pot);
  r.payout = simulation.ledger().balance(r.winner_account) - before;

  // 2^bits equally likely values folded onto k tickets.
  const std::uint64_t outcomes = std::uint64_t{1} << bits;
  const std::uint64_t q = outcomes / k, rem = outcomes % k;
  game::Rational hi(static_cast<unsigned long>(q + (rem ? 1 : 0)), static_cast<unsigned long>(outcomes));
  game::Rational lo(static_cast<unsigned long>(q), static_cast<unsigned long>(outcomes));
  hi.canonicalize();
  lo.canonicalize();
  r.max_win_probability = game::to_string(hi);
  r.min_win_probability = game::to_string(rem ? lo : hi);

  std::ostringstream msg;
  msg << "tickets: " << k << " at " << p.price << " each, pot " << r.pot << "\n"
      << "random bits: " << bits << " (word requests issued: " << r.attempts << ")\n"
      << "drawn value: " << r.value << ", winner = (value mod " << k << ") + 1 = " << r.winner << "\n"
      << "winner account " << r.winner_account << " receives " << r.payout << "\n"
      << "win probability per ticket: max " << r.max_win_probability << ", min " << r.min_win_probability
      << (rem ? " (modulo bias, not corrected)" : " (unbiased)") << "\n";
  r.announcement = msg.str();

  r.outputs = collect(simulation);
  r.outputs.audit["lottery"] = {{"participants", k},
                                {"price", p.price},
                                {"pot", r.pot},
                                {"bits", bits},
                                {"attempts", r.attempts},
                                {"value", r.value},
                                {"winner", r.winner},
                                {"winnerAccount", r.winner_account},
                                {"payout", r.payout},
                                {"winProbabilityMax", r.max_win_probability},
                                {"winProbabilityMin", r.min_win_probability}};
  const bool pot_ok = r.payout == r.pot;
  r.outputs.audit["lottery"]["potPaidInFull"] = pot_ok;
  r.outputs.passed = r.outputs.passed && pot_ok;
  r.outputs.audit["passed"] = r.outputs.passed;
  return r;
}

} // namespace rbg::experiments
