#include "rbg/agents.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace rbg::agents {

namespace {

template <class... Ts>
struct overloaded : Ts...
{
  using Ts::operator()...;
};

} // namespace

LastMover last_mover_preferring(int preferred)
{
  return LastMover{[preferred](std::span<const int> observed, int own) {
                     int x = own;
                     for (int b : observed)
                       x ^= b;
                     return x == preferred;
                   },
                   "last-mover(" + std::to_string(preferred) + ")"};
}

std::string policy_name(const AgentPolicy& policy)
{
  return std::visit(overloaded{
                        [](const HonestUniform&) { return std::string("honest-uniform"); },
                        [](const ConstantBit& c) { return "constant-bit(" + std::to_string(c.bit) + ")"; },
                        [](const NonRevealer&) { return std::string("non-revealer"); },
                        [](const LastMover& l) { return l.label; },
                        [](const SybilCoalition& s) {
                          std::string out = "sybil(";
                          for (std::size_t i = 0; i < s.bits.size(); ++i)
                            out += (i ? "|" : "") + std::to_string(s.bits[i]);
                          return out + ")";
                        },
                    },
                    policy);
}

RequestView view_of(const protocol::Engine& engine, RequestId id, std::size_t pending_registrations)
{
  const protocol::Request& r = engine.request(id);
  RequestView v;
  v.id = id;
  v.on_chain = true;
  v.settled = r.settlement.has_value();
  v.value_bound = r.value_bound;
  v.registration_closes = r.registration_closes();
  v.deadline = r.deadline;
  v.registrants = r.registrants.size();
  v.pending_registrations = pending_registrations;
  for (const auto& reg : r.registrants)
    if (reg.reveal_state == protocol::RevealState::Revealed)
      v.reveals.push_back({reg.number, *reg.bit});
  return v;
}

RequestView pending_view(RequestId predicted_id, Money value_bound, std::size_t pending_registrations)
{
  RequestView v;
  v.id = predicted_id;
  v.value_bound = value_bound;
  v.pending_registrations = pending_registrations;
  return v;
}

// ---------------------------------------------------------------------------

Agent::Agent(std::size_t index, AccountId account, AgentPolicy policy, std::uint64_t seed)
    : index_(index), account_(account), policy_(std::move(policy)), seed_(seed)
{
  if (auto s = std::get_if<SybilCoalition>(&policy_)) {
    if (s->bits.empty())
      throw std::invalid_argument("a coalition needs at least one member");
    for (int b : s->bits)
      if (b != 0 && b != 1)
        throw std::invalid_argument("coalition bits must be 0 or 1");
  }
  if (auto c = std::get_if<ConstantBit>(&policy_); c && c->bit != 0 && c->bit != 1)
    throw std::invalid_argument("constant bit must be 0 or 1");
}

std::size_t Agent::identities() const
{
  if (auto s = std::get_if<SybilCoalition>(&policy_))
    return s->bits.size();
  return 1;
}

int Agent::chosen_bit(std::size_t member, Rng& rng) const
{
  const int drawn = static_cast<int>(rng() >> 63);
  if (auto c = std::get_if<ConstantBit>(&policy_))
    return c->bit;
  if (auto s = std::get_if<SybilCoalition>(&policy_))
    return s->bits[member];
  return drawn;
}

bool Agent::owns(const Participation& p, ParticipantNumber n) const
{
  return std::any_of(p.slots.begin(), p.slots.end(), [n](const Slot& s) { return s.number == n; });
}

std::vector<chainsim::TxBody> Agent::act(const RequestView& view, Timestamp now)
{
  std::vector<chainsim::TxBody> out;
  auto it = joined_.find(view.id);

  if (it == joined_.end()) {
    const bool open = !view.settled && (!view.on_chain || now <= view.registration_closes);
    if (!open)
      return out;
    Rng rng = make_stream(seed_, {index_, view.id});
    Participation part;
    for (std::size_t m = 0; m < identities(); ++m) {
      Slot slot;
      slot.number = view.registrants + view.pending_registrations + 1 + m;
      slot.bit = chosen_bit(m, rng);
      for (auto& b : slot.nonce)
        b = static_cast<std::uint8_t>(rng() >> 56);
      const auto c = commitment::commit({slot.bit, slot.nonce, slot.number, view.id});
      out.push_back(chainsim::RegisterTx{view.id, account_, view.value_bound, c});
      part.slots.push_back(slot);
    }
    joined_.emplace(view.id, std::move(part));
    return out;
  }

  Participation& part = it->second;
  if (!view.on_chain)
    return out;

  if (now > view.registration_closes && now <= view.deadline) {
    if (std::holds_alternative<NonRevealer>(policy_))
      return out;
    if (auto lm = std::get_if<LastMover>(&policy_)) {
      if (part.decided)
        return out;
      std::vector<int> others;
      for (const auto& r : view.reveals)
        if (!owns(part, r.number))
          others.push_back(r.bit);
      const std::size_t expected = view.registrants - part.slots.size();
      const Timestamp cutoff = view.registration_closes + (view.deadline - view.registration_closes) / 2;
      if (others.size() < expected && now < cutoff)
        return out;
      part.decided = true;
      if (!lm->should_reveal(others, part.slots.front().bit))
        return out;
    }
    for (auto& slot : part.slots)
      if (!slot.reveal_sent) {
        slot.reveal_sent = true;
        out.push_back(chainsim::RevealTx{view.id, slot.number, slot.bit, slot.nonce});
      }
    return out;
  }

  if (now > view.deadline) {
    for (const auto& slot : part.slots) {
      const bool landed = std::any_of(view.reveals.begin(), view.reveals.end(),
                                      [&](const PublicReveal& r) { return r.number == slot.number; });
      if (!landed)
        continue;
      out.push_back(chainsim::ReturnDepositTx{view.id, slot.number});
      out.push_back(chainsim::RequestRewardTx{view.id, slot.number});
    }
    joined_.erase(it);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<TournamentRow> tournament(std::span<const AgentPolicy> policies, const TournamentConfig& config)
{
  if (policies.size() < 2)
    throw std::invalid_argument("a tournament needs at least two agents");
  if (config.rounds == 0)
    throw std::invalid_argument("a tournament needs at least one round");

  // Abstract time: registration [T, T+3], reveals (T+3, T+10], claims from T+11.
  constexpr Duration kRoundLength = 100;
  constexpr AccountId kClient = 1;
  const protocol::Config proto{10, 3};

  protocol::Ledger ledger;
  const auto rounds = static_cast<Money>(config.rounds);
  ledger.open_account(kClient, config.fee * rounds);
  std::vector<Agent> agents;
  for (std::size_t i = 0; i < policies.size(); ++i) {
    const AccountId acct = 1000 + i;
    const auto members = static_cast<Money>(
        std::holds_alternative<SybilCoalition>(policies[i]) ? std::get<SybilCoalition>(policies[i]).bits.size() : 1);
    ledger.open_account(acct, config.value_bound * members * (rounds + 1));
    agents.emplace_back(i, acct, policies[i], derive_seed(config.seed, {i, 0xa6e7}));
  }
  std::vector<Money> start_balance;
  for (const auto& a : agents)
    start_balance.push_back(ledger.balance(a.account()));

  protocol::Engine engine(proto, std::move(ledger));
  std::vector<std::vector<Money>> payoffs(agents.size());
  Rng order_rng = make_stream(config.seed, {0x0de7});
  std::vector<std::size_t> order(agents.size());
  std::iota(order.begin(), order.end(), 0);

  auto run_phase = [&](RequestId id, Timestamp now) {
    for (std::size_t pass = 0; pass <= agents.size() + 1; ++pass) {
      bool any = false;
      for (std::size_t k : order) {
        for (auto& body : agents[k].act(view_of(engine, id), now)) {
          chainsim::apply_tx(engine, chainsim::Tx{0, now, std::move(body)}, now);
          any = true;
        }
      }
      if (!any)
        break;
    }
  };

  for (std::size_t round = 0; round < config.rounds; ++round) {
    const Timestamp t0 = static_cast<Timestamp>(round) * kRoundLength;
    const RequestId id = engine.request_random_bit(kClient, config.fee, t0 + proto.t_min, config.value_bound, t0);
    std::shuffle(order.begin(), order.end(), order_rng);

    run_phase(id, t0);                  // registration
    run_phase(id, t0 + proto.t_reg + 1); // reveals
    run_phase(id, t0 + proto.t_min - 1); // past the last-mover cutoff
    run_phase(id, t0 + proto.t_min + 1); // claims
    engine.get_output(id, kClient, t0 + proto.t_min + 1);

    const protocol::Request& r = engine.request(id);
    for (std::size_t k = 0; k < agents.size(); ++k) {
      Money p = 0;
      for (const auto& reg : r.registrants)
        if (reg.account == agents[k].account())
          p += reg.reward_paid + (reg.deposit_returned ? reg.deposited : 0) - reg.deposited;
      payoffs[k].push_back(p);
    }
  }

  std::vector<TournamentRow> rows;
  for (std::size_t k = 0; k < agents.size(); ++k) {
    TournamentRow row;
    row.agent = k;
    row.policy = policy_name(agents[k].policy());
    row.identities = agents[k].identities();
    row.rounds = config.rounds;
    row.total_payoff = std::accumulate(payoffs[k].begin(), payoffs[k].end(), Money{0});
    const double n = static_cast<double>(config.rounds);
    row.mean_payoff = static_cast<double>(row.total_payoff) / n;
    double ss = 0;
    for (Money p : payoffs[k]) {
      const double d = static_cast<double>(p) - row.mean_payoff;
      ss += d * d;
    }
    row.std_error = config.rounds > 1 ? std::sqrt(ss / (n - 1)) / std::sqrt(n) : 0.0;
    row.reconciled = engine.ledger().balance(agents[k].account()) - start_balance[k] == row.total_payoff;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string tournament_csv(std::span<const TournamentRow> rows)
{
  std::ostringstream out;
  out << "agent,policy,rounds,mean_payoff,std_error\n";
  char buf[64];
  for (const auto& r : rows) {
    out << r.agent << ',' << r.policy << ',' << r.rounds << ',';
    std::snprintf(buf, sizeof buf, "%.6f,%.6f", r.mean_payoff, r.std_error);
    out << buf << '\n';
  }
  return out.str();
}

} // namespace rbg::agents
