#include "rbg/agents.hpp"

#include <doctest.h>

#include <cmath>

using namespace rbg;
using namespace rbg::agents;

namespace {

constexpr AccountId kClient = 1;
constexpr Money kFee = 4000;
constexpr Money kV = 1000;
const protocol::Config kConfig{10, 3};

struct Round
{
  protocol::OutputKind output;
  std::vector<Money> payoff; // per agent
  std::vector<bool> withheld;
};

// One engine-direct request lifecycle, the same phases the tournament uses.
struct Arena
{
  protocol::Engine engine{kConfig};
  std::vector<Agent> agents;
  Timestamp t0 = 0;

  explicit Arena(std::vector<AgentPolicy> policies, std::uint64_t seed = 1)
  {
    engine.ledger().open_account(kClient, 1'000'000'000);
    for (std::size_t i = 0; i < policies.size(); ++i) {
      engine.ledger().open_account(1000 + i, 1'000'000'000);
      agents.emplace_back(i, 1000 + i, policies[i], derive_seed(seed, {i}));
    }
  }

  void phase(RequestId id, Timestamp now)
  {
    for (int pass = 0; pass < 4; ++pass)
      for (auto& a : agents)
        for (auto& body : a.act(view_of(engine, id), now))
          chainsim::apply_tx(engine, chainsim::Tx{0, now, std::move(body)}, now);
  }

  Round play()
  {
    const RequestId id = engine.request_random_bit(kClient, kFee, t0 + 10, kV, t0);
    phase(id, t0);
    phase(id, t0 + 4);
    phase(id, t0 + 9);
    phase(id, t0 + 11);
    Round r;
    r.output = engine.get_output(id, kClient, t0 + 11);
    const auto& req = engine.request(id);
    for (const auto& a : agents) {
      Money p = 0;
      bool withheld = false;
      for (const auto& reg : req.registrants)
        if (reg.account == a.account()) {
          p += reg.reward_paid + (reg.deposit_returned ? reg.deposited : 0) - reg.deposited;
          withheld = withheld || reg.reveal_state != protocol::RevealState::Revealed;
        }
      r.payoff.push_back(p);
      r.withheld.push_back(withheld);
    }
    t0 += 100;
    return r;
  }
};

} // namespace

TEST_CASE("policy names")
{
  CHECK(policy_name(HonestUniform{}) == "honest-uniform");
  CHECK(policy_name(ConstantBit{1}) == "constant-bit(1)");
  CHECK(policy_name(NonRevealer{}) == "non-revealer");
  CHECK(policy_name(last_mover_preferring(0)) == "last-mover(0)");
  CHECK(policy_name(SybilCoalition{{0, 1, 1}}) == "sybil(0|1|1)");
  CHECK_THROWS_AS(Agent(0, 1000, SybilCoalition{{}}, 1), std::invalid_argument);
  CHECK_THROWS_AS(Agent(0, 1000, SybilCoalition{{2}}, 1), std::invalid_argument);
  CHECK_THROWS_AS(Agent(0, 1000, ConstantBit{3}, 1), std::invalid_argument);
}

TEST_CASE("honest agent bits are uniform")
{
  Arena arena({HonestUniform{}});
  int ones = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i)
    ones += std::get<protocol::output::Success>(arena.play().output).bit;
  CHECK(std::abs(ones / static_cast<double>(n) - 0.5) <= 0.015);
}

TEST_CASE("views expose only revealed bits")
{
  Arena arena({HonestUniform{}, HonestUniform{}});
  const RequestId id = arena.engine.request_random_bit(kClient, kFee, 10, kV, 0);
  arena.phase(id, 0);
  auto v = view_of(arena.engine, id);
  CHECK(v.registrants == 2);
  CHECK(v.reveals.empty());
  arena.phase(id, 4);
  v = view_of(arena.engine, id);
  CHECK(v.reveals.size() == 2);
  const auto p = pending_view(5, kV, 3);
  CHECK_FALSE(p.on_chain);
  CHECK(p.pending_registrations == 3);
}

TEST_CASE("agents predict their participant number from pending registrations")
{
  Agent a(0, 1000, ConstantBit{1}, 1);
  const auto txs = a.act(pending_view(0, kV, 2), 0);
  REQUIRE(txs.size() == 1);
  const auto& reg = std::get<chainsim::RegisterTx>(txs[0]);
  CHECK(reg.deposit == kV);
  CHECK(a.act(pending_view(0, kV, 0), 0).empty());
}

TEST_CASE("a non-revealer always pays exactly v")
{
  Arena arena({HonestUniform{}, NonRevealer{}});
  for (int i = 0; i < 50; ++i) {
    const auto r = arena.play();
    CHECK(std::holds_alternative<protocol::output::Penalty>(r.output));
    CHECK(std::get<protocol::output::Penalty>(r.output).compensation >= kV);
    CHECK(r.payoff[1] == -kV);
  }
}

TEST_CASE("last mover withholding costs exactly v and spoils success")
{
  Arena arena({HonestUniform{}, HonestUniform{}, last_mover_preferring(1)});
  int withheld = 0;
  for (int i = 0; i < 400; ++i) {
    const auto r = arena.play();
    if (r.withheld[2]) {
      ++withheld;
      CHECK(r.payoff[2] == -kV);
      CHECK(std::holds_alternative<protocol::output::Penalty>(r.output));
    } else {
      CHECK(std::holds_alternative<protocol::output::Success>(r.output));
      CHECK(protocol::output_bit(r.output) == 1);
      CHECK(r.payoff[2] >= 0);
    }
  }
  CHECK(withheld > 100);
  CHECK(withheld < 300);
}

TEST_CASE("sybil coalition registers every member")
{
  Arena arena({HonestUniform{}, SybilCoalition{{0, 1}}});
  const auto r = arena.play();
  CHECK(std::holds_alternative<protocol::output::Success>(r.output));
  CHECK(arena.engine.request(0).registrants.size() == 3);
  const Money paid = r.payoff[0] + r.payoff[1];
  CHECK(paid <= kFee);
  CHECK(kFee - paid < 3);
}

TEST_CASE("tournament")
{
  CHECK_THROWS_AS(tournament(std::vector<AgentPolicy>{HonestUniform{}}, {}), std::invalid_argument);

  TournamentConfig cfg;
  cfg.rounds = 2000;
  cfg.seed = 5;
  const std::vector<AgentPolicy> honest(4, HonestUniform{});
  const auto rows = tournament(honest, cfg);
  REQUIRE(rows.size() == 4);
  double total = 0;
  for (const auto& r : rows) {
    CHECK(r.reconciled);
    CHECK(r.rounds == 2000);
    CHECK(std::abs(r.mean_payoff - 1000.0) <= 3 * r.std_error + 1e-9);
    total += static_cast<double>(r.total_payoff);
  }
  CHECK(total == 2000.0 * 4000);

  const auto csv = tournament_csv(rows);
  CHECK(csv.rfind("agent,policy,rounds,mean_payoff,std_error\n", 0) == 0);
  CHECK(tournament(honest, cfg)[2].total_payoff == rows[2].total_payoff);

  const std::vector<AgentPolicy> with_quitter{HonestUniform{}, HonestUniform{}, NonRevealer{}};
  const auto q = tournament(with_quitter, TournamentConfig{4000, 1000, 100, 3});
  CHECK(q[2].mean_payoff == -1000.0);
  CHECK(q[2].std_error == 0.0);
  CHECK(q[2].reconciled);
}
