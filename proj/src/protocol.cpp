#include "rbg/protocol.hpp"

#include <string>

namespace rbg::protocol {

std::string_view to_string(Errc e)
{
  switch (e) {
  case Errc::DeadlineTooClose: return "DeadlineTooClose";
  case Errc::InsufficientFunds: return "InsufficientFunds";
  case Errc::InvalidArgument: return "InvalidArgument";
  case Errc::UnknownRequest: return "UnknownRequest";
  case Errc::RegistrationClosed: return "RegistrationClosed";
  case Errc::WrongDeposit: return "WrongDeposit";
  case Errc::OutsideRevealWindow: return "OutsideRevealWindow";
  case Errc::UnknownParticipant: return "UnknownParticipant";
  case Errc::AlreadyRevealed: return "AlreadyRevealed";
  case Errc::BadPreimage: return "BadPreimage";
  case Errc::NotRevealed: return "NotRevealed";
  case Errc::AlreadyClaimed: return "AlreadyClaimed";
  case Errc::TooEarly: return "TooEarly";
  case Errc::NotClient: return "NotClient";
  }
  return "Unknown";
}

void Config::validate() const
{
  if (t_reg <= 0 || t_min <= t_reg)
    throw std::invalid_argument("config needs t_min > t_reg > 0");
  if (nonce_len != commitment::kNonceSize)
    throw std::invalid_argument("nonce length must be 16 bytes");
}

Config Config::from_block_time(Duration t_gen)
{
  return Config{10 * t_gen, 3 * t_gen, commitment::kNonceSize};
}

std::string_view kind_name(const OutputKind& o)
{
  switch (o.index()) {
  case 0: return "Success";
  case 1: return "Penalty";
  default: return "Failure";
  }
}

std::optional<int> output_bit(const OutputKind& o)
{
  if (auto s = std::get_if<output::Success>(&o))
    return s->bit;
  if (auto p = std::get_if<output::Penalty>(&o))
    return p->bit;
  return std::nullopt;
}

Timestamp Request::registration_closes() const
{
  return created_at + reg_window;
}

bool Request::all_revealed() const
{
  return static_cast<std::int64_t>(registrants.size()) == counts.n_prime();
}

int Request::xor_of_reveals() const
{
  // n2 + n3 counts the ones.
  return static_cast<int>((counts.n[2] + counts.n[3]) % 2);
}

// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void fail(Errc code, const std::string& detail)
{
  throw ProtocolError(code, std::string(to_string(code)) + ": " + detail);
}

game::Strategy strategy_of(const Registrant& r)
{
  return game::Strategy::from_bit(game::PlayerIndex{r.number}, *r.bit);
}

} // namespace

Engine::Engine(Config config, Ledger ledger) : config_(config), ledger_(std::move(ledger))
{
  config_.validate();
}

void Engine::tick(Timestamp now)
{
  if (now < clock_)
    fail(Errc::InvalidArgument, "time " + std::to_string(now) + " is before " + std::to_string(clock_));
  clock_ = now;
}

Request& Engine::find(RequestId id)
{
  if (id >= requests_.size())
    fail(Errc::UnknownRequest, "request " + std::to_string(id));
  return requests_[id];
}

const Request& Engine::request(RequestId id) const
{
  if (id >= requests_.size())
    fail(Errc::UnknownRequest, "request " + std::to_string(id));
  return requests_[id];
}

Registrant& Engine::find_participant(Request& r, ParticipantNumber p)
{
  if (p < 1 || p > r.registrants.size())
    fail(Errc::UnknownParticipant, "participant " + std::to_string(p) + " of request " + std::to_string(r.id));
  return r.registrants[p - 1];
}

RequestId Engine::request_random_bit(AccountId client, Money fee, Timestamp deadline, Money value_bound,
                                     Timestamp now)
{
  return request_random_word(client, 1, fee, deadline, value_bound, now).front();
}

std::vector<RequestId> Engine::request_random_word(AccountId client, std::size_t k, Money fee, Timestamp deadline,
                                                   Money value_bound, Timestamp now)
{
  tick(now);
  if (k == 0)
    fail(Errc::InvalidArgument, "word length must be at least 1");
  if (fee < 0 || value_bound < 0)
    fail(Errc::InvalidArgument, "fee and value bound must be non-negative");
  if (deadline - now < config_.t_min)
    fail(Errc::DeadlineTooClose, "deadline " + std::to_string(deadline) + " at time " + std::to_string(now));
  if (ledger_.balance(client) < fee)
    fail(Errc::InsufficientFunds, "client " + std::to_string(client) + " cannot pay fee " + std::to_string(fee));

  const auto kk = static_cast<Money>(k);
  const Money base = fee / kk;
  std::vector<RequestId> ids;
  ids.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    Request r;
    r.id = requests_.size();
    r.client = client;
    r.fee = base + (i == 0 ? fee - base * kk : 0);
    r.deadline = deadline;
    r.value_bound = value_bound;
    r.created_at = now;
    r.reg_window = config_.t_reg;
    ledger_.deposit_to_escrow(client, r.id, r.fee);
    ids.push_back(r.id);
    requests_.push_back(std::move(r));
  }
  return ids;
}

ParticipantNumber Engine::register_participant(RequestId id, AccountId account, Money deposit,
                                               const commitment::Commitment& c, Timestamp now)
{
  tick(now);
  Request& r = find(id);
  if (r.settlement || now < r.created_at || now > r.registration_closes())
    fail(Errc::RegistrationClosed, "request " + std::to_string(id) + " at time " + std::to_string(now));
  if (deposit != r.value_bound)
    fail(Errc::WrongDeposit, "expected " + std::to_string(r.value_bound) + ", got " + std::to_string(deposit));
  if (ledger_.balance(account) < deposit)
    fail(Errc::InsufficientFunds, "account " + std::to_string(account) + " cannot deposit " + std::to_string(deposit));

  ledger_.deposit_to_escrow(account, id, deposit);
  Registrant reg;
  reg.account = account;
  reg.number = r.registrants.size() + 1;
  reg.commitment = c;
  reg.deposited = deposit;
  r.registrants.push_back(reg);
  return reg.number;
}

RevealResult Engine::reveal(RequestId id, ParticipantNumber p, int bit, const commitment::Nonce& nonce,
                            Timestamp now)
{
  if (now < clock_)
    return {false, Errc::InvalidArgument};
  clock_ = now;
  if (id >= requests_.size())
    return {false, Errc::UnknownRequest};
  Request& r = requests_[id];
  if (now <= r.registration_closes() || now > r.deadline)
    return {false, Errc::OutsideRevealWindow};
  if (p < 1 || p > r.registrants.size())
    return {false, Errc::UnknownParticipant};
  Registrant& reg = r.registrants[p - 1];
  if (reg.reveal_state != RevealState::Pending)
    return {false, Errc::AlreadyRevealed};
  if (!commitment::verify_reveal({bit, nonce, p, id}, reg.commitment))
    return {false, Errc::BadPreimage};

  reg.reveal_state = RevealState::Revealed;
  reg.bit = bit;
  r.counts.add(strategy_of(reg));
  return {true, std::nullopt};
}

Money Engine::return_deposit(RequestId id, ParticipantNumber p, Timestamp now)
{
  tick(now);
  Request& r = find(id);
  if (now <= r.deadline)
    fail(Errc::TooEarly, "deposits return after the deadline");
  Registrant& reg = find_participant(r, p);
  if (reg.reveal_state != RevealState::Revealed)
    fail(Errc::NotRevealed, "participant " + std::to_string(p) + " did not reveal");
  if (reg.deposit_returned)
    fail(Errc::AlreadyClaimed, "deposit of participant " + std::to_string(p));
  reg.deposit_returned = true;
  ledger_.release_from_escrow(id, reg.account, reg.deposited);
  return reg.deposited;
}

Money Engine::reward_of(const Request& r, ParticipantNumber p) const
{
  const Registrant& reg = r.registrants.at(p - 1);
  if (reg.reveal_state != RevealState::Revealed)
    return 0;
  return game::reward_share(r.counts, strategy_of(reg), r.fee);
}

Money Engine::request_reward(RequestId id, ParticipantNumber p, Timestamp now)
{
  tick(now);
  Request& r = find(id);
  if (now <= r.deadline)
    fail(Errc::TooEarly, "rewards are paid after the deadline");
  Registrant& reg = find_participant(r, p);
  if (reg.reveal_state != RevealState::Revealed)
    fail(Errc::NotRevealed, "participant " + std::to_string(p) + " did not reveal");
  if (reg.reward_claimed)
    fail(Errc::AlreadyClaimed, "reward of participant " + std::to_string(p));
  const Money amount = reward_of(r, p);
  reg.reward_claimed = true;
  reg.reward_paid = amount;
  ledger_.release_from_escrow(id, reg.account, amount);
  return amount;
}

OutputKind Engine::get_output(RequestId id, AccountId caller, Timestamp now)
{
  tick(now);
  Request& r = find(id);
  if (caller != r.client)
    fail(Errc::NotClient, "account " + std::to_string(caller) + " is not the client of request " + std::to_string(id));
  if (now <= r.deadline)
    fail(Errc::TooEarly, "output is available after the deadline");
  if (!r.settlement)
    settle(r, now);
  return r.settlement->output;
}

void Engine::settle(Request& r, Timestamp now)
{
  Money confiscated = 0;
  for (auto& reg : r.registrants)
    if (reg.reveal_state != RevealState::Revealed) {
      reg.reveal_state = RevealState::Invalid;
      confiscated += reg.deposited;
    }

  Settlement s;
  s.settled_at = now;
  if (r.counts.n_prime() == 0) {
    s.output = output::Failure{r.fee, confiscated};
    s.paid_to_client = r.fee + confiscated;
  } else {
    s.dust = game::reward_dust(r.counts, r.fee);
    const int bit = r.xor_of_reveals();
    if (r.all_revealed())
      s.output = output::Success{bit};
    else
      s.output = output::Penalty{bit, confiscated + s.dust};
    s.paid_to_client = confiscated + s.dust;
  }
  ledger_.release_from_escrow(r.id, r.client, s.paid_to_client);
  r.settlement = s;
}

// ---------------------------------------------------------------------------

namespace {

std::string_view state_name(RevealState s)
{
  switch (s) {
  case RevealState::Pending: return "pending";
  case RevealState::Revealed: return "revealed";
  case RevealState::Invalid: return "invalid";
  }
  return "pending";
}

} // namespace

nlohmann::json Engine::to_json(const Request& r)
{
  using nlohmann::json;
  json regs = json::array();
  for (const auto& reg : r.registrants) {
    json j{{"account", reg.account},
           {"number", reg.number},
           {"commitment", reg.commitment.hex()},
           {"deposited", reg.deposited},
           {"revealState", state_name(reg.reveal_state)},
           {"depositReturned", reg.deposit_returned},
           {"rewardClaimed", reg.reward_claimed},
           {"rewardPaid", reg.reward_paid}};
    j["bit"] = reg.bit ? json(*reg.bit) : json(nullptr);
    regs.push_back(std::move(j));
  }
  json out{{"id", r.id},
           {"client", r.client},
           {"fee", r.fee},
           {"deadline", r.deadline},
           {"valueBound", r.value_bound},
           {"createdAt", r.created_at},
           {"registrants", std::move(regs)},
           {"counts",
            {{"n0", r.counts.n[0]},
             {"n1", r.counts.n[1]},
             {"n2", r.counts.n[2]},
             {"n3", r.counts.n[3]},
             {"nPrime", r.counts.n_prime()}}}};
  if (!r.settlement) {
    out["settlement"] = "unsettled";
  } else {
    const Settlement& s = *r.settlement;
    json sj{{"kind", kind_name(s.output)}, {"settledAt", s.settled_at}, {"dust", s.dust}};
    if (auto b = output_bit(s.output))
      sj["bit"] = *b;
    if (auto p = std::get_if<output::Penalty>(&s.output))
      sj["compensation"] = p->compensation;
    if (auto f = std::get_if<output::Failure>(&s.output)) {
      sj["refund"] = f->refund;
      sj["confiscated"] = f->confiscated;
    }
    out["settlement"] = std::move(sj);
  }
  return out;
}

nlohmann::json Engine::snapshot() const
{
  using nlohmann::json;
  json requests = json::array();
  for (const auto& r : requests_)
    requests.push_back(to_json(r));
  json balances = json::object();
  for (const auto& [acct, m] : ledger_.balances())
    balances[std::to_string(acct)] = m;
  json escrow = json::object();
  for (const auto& [id, m] : ledger_.escrows())
    escrow[std::to_string(id)] = m;
  return json{{"config", {{"tMin", config_.t_min}, {"tReg", config_.t_reg}, {"nonceLen", config_.nonce_len}}},
              {"requests", std::move(requests)},
              {"ledger",
               {{"balances", std::move(balances)},
                {"escrow", std::move(escrow)},
                {"genesisSupply", ledger_.genesis_supply()},
                {"totalSupply", ledger_.total_supply()}}}};
}

} // namespace rbg::protocol
