#include "rbg/chainsim.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rbg::chainsim {

std::string_view tx_kind(const TxBody& body)
{
  static constexpr std::string_view names[] = {"request", "register", "reveal", "return_deposit", "request_reward",
                                               "get_output"};
  return names[body.index()];
}

namespace {

template <class... Ts>
struct overloaded : Ts...
{
  using Ts::operator()...;
};

} // namespace

Receipt apply_tx(protocol::Engine& engine, const Tx& tx, Timestamp now)
{
  Receipt rc;
  rc.seq = tx.seq;
  rc.time = now;
  rc.kind = tx_kind(tx.body);
  try {
    std::visit(overloaded{
                   [&](const RequestBitTx& t) {
                     const Timestamp deadline =
                         std::visit(overloaded{[](DeadlineAt d) { return d.at; },
                                               [&](DeadlineAfter d) { return now + d.offset; }},
                                    t.deadline);
                     rc.requests = engine.request_random_word(t.client, t.bits, t.fee, deadline, t.value_bound, now);
                     rc.amount = t.fee;
                     rc.ok = true;
                   },
                   [&](const RegisterTx& t) {
                     rc.requests = {t.request};
                     rc.participant = engine.register_participant(t.request, t.account, t.deposit, t.commitment, now);
                     rc.amount = t.deposit;
                     rc.ok = true;
                   },
                   [&](const RevealTx& t) {
                     rc.requests = {t.request};
                     rc.participant = t.participant;
                     const auto result = engine.reveal(t.request, t.participant, t.bit, t.nonce, now);
                     rc.ok = result.accepted;
                     rc.error = result.reason;
                   },
                   [&](const ReturnDepositTx& t) {
                     rc.requests = {t.request};
                     rc.participant = t.participant;
                     rc.amount = engine.return_deposit(t.request, t.participant, now);
                     rc.ok = true;
                   },
                   [&](const RequestRewardTx& t) {
                     rc.requests = {t.request};
                     rc.participant = t.participant;
                     rc.amount = engine.request_reward(t.request, t.participant, now);
                     rc.ok = true;
                   },
                   [&](const GetOutputTx& t) {
                     rc.requests = {t.request};
                     rc.output = engine.get_output(t.request, t.caller, now);
                     rc.amount = engine.request(t.request).settlement->paid_to_client;
                     rc.ok = true;
                   },
               },
               tx.body);
  } catch (const protocol::ProtocolError& e) {
    rc.ok = false;
    rc.error = e.code();
  }
  return rc;
}

Censor censor_reveals()
{
  return Censor{[](const Tx& tx) { return std::holds_alternative<RevealTx>(tx.body); }, "censor-reveals"};
}

Censor censor_everything()
{
  return Censor{[](const Tx&) { return true; }, "censor-all"};
}

void SimParams::validate() const
{
  if (t_gen <= 0)
    throw std::invalid_argument("t_gen must be positive");
  if (duration < 0)
    throw std::invalid_argument("duration must be non-negative");
}

Chain::Chain(SimParams params, std::vector<MinerSpec> miners, protocol::Engine engine, Timestamp genesis_time)
    : params_(params), miners_(std::move(miners)), engine_(std::move(engine)), rng_(make_stream(params.seed, {0xb10c})),
      time_(genesis_time)
{
  params_.validate();
  if (miners_.empty())
    throw std::invalid_argument("at least one miner is required");
  HashPower total{0};
  for (const auto& m : miners_) {
    if (m.hash_power <= HashPower{0} || m.hash_power > HashPower{1})
      throw std::invalid_argument("hash power must be in (0,1]");
    total += m.hash_power;
    denominator_ = std::lcm(denominator_, m.hash_power.denominator());
  }
  if (total != HashPower{1})
    throw std::invalid_argument("hash powers must sum to 1");
  std::int64_t acc = 0;
  for (const auto& m : miners_) {
    acc += m.hash_power.numerator() * (denominator_ / m.hash_power.denominator());
    cumulative_.push_back(acc);
  }
}

TxSeq Chain::submit_tx(TxBody body, Timestamp now)
{
  const TxSeq seq = next_seq_++;
  mempool_.push_back(Tx{seq, now, std::move(body)});
  return seq;
}

Timestamp Chain::next_block_time()
{
  if (!next_time_) {
    std::exponential_distribution<double> gap(1.0 / static_cast<double>(params_.t_gen));
    const auto delay = std::max<Duration>(1, std::llround(gap(rng_)));
    next_time_ = time_ + delay;
  }
  return *next_time_;
}

const MinerSpec& Chain::sample_miner()
{
  std::uniform_int_distribution<std::int64_t> pick(0, denominator_ - 1);
  const std::int64_t x = pick(rng_);
  for (std::size_t i = 0; i < miners_.size(); ++i)
    if (x < cumulative_[i])
      return miners_[i];
  return miners_.back();
}

Block Chain::next_block()
{
  const Timestamp t = next_block_time();
  const MinerSpec& miner = sample_miner();
  const Censor* censor = std::get_if<Censor>(&miner.policy);

  Block block;
  block.header.height = headers_.size();
  block.header.timestamp = t;
  block.header.miner = miner.id;

  std::deque<Tx> left;
  for (auto& tx : mempool_) {
    if (censor && censor->predicate(tx))
      left.push_back(std::move(tx));
    else
      block.transactions.push_back(std::move(tx));
  }
  mempool_ = std::move(left);

  block.receipts.reserve(block.transactions.size());
  for (const auto& tx : block.transactions)
    block.receipts.push_back(apply_tx(engine_, tx, t));

  block.header.tx_count = block.transactions.size();
  headers_.push_back(block.header);
  time_ = t;
  next_time_.reset();
  return block;
}

// ---------------------------------------------------------------------------

HashPower hash_power_from_double(double q, std::int64_t denominator)
{
  return HashPower{std::llround(q * static_cast<double>(denominator)), denominator};
}

CensorshipResult censorship_trial(HashPower q, std::size_t m, std::size_t trials, std::uint64_t seed)
{
  if (q <= HashPower{0} || q > HashPower{1})
    throw std::invalid_argument("adversary hash power must be in (0,1]");
  if (m < 1)
    throw std::invalid_argument("reveal window must span at least one block");

  constexpr AccountId client = 1;
  constexpr AccountId participant = 2;
  constexpr Money fee = 10;
  constexpr Money v = 5;

  CensorshipResult result;
  result.trials = trials;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    protocol::Ledger ledger;
    ledger.open_account(client, fee);
    ledger.open_account(participant, v);
    protocol::Engine engine(protocol::Config{2, 1}, std::move(ledger));
    const RequestId id = engine.request_random_bit(client, fee, Timestamp{1} << 50, v, 0);

    Rng rng = make_stream(seed, {trial, 0xce45});
    commitment::Nonce nonce{};
    for (auto& b : nonce)
      b = static_cast<std::uint8_t>(rng() & 0xff);
    const int bit = static_cast<int>(rng() & 1);
    engine.register_participant(id, participant, v, commitment::commit({bit, nonce, 1, id}), 0);

    std::vector<MinerSpec> miners;
    if (q < HashPower{1})
      miners.push_back(MinerSpec{0, HashPower{1} - q, Honest{}});
    miners.push_back(MinerSpec{1, q, censor_reveals()});

    Chain chain(SimParams{1000, derive_seed(seed, {trial}), 0}, std::move(miners), std::move(engine), 10);
    chain.submit_tx(RevealTx{id, 1, bit, nonce}, chain.time());
    for (std::size_t b = 0; b < m; ++b)
      chain.next_block();
    if (chain.engine().request(id).counts.n_prime() == 0)
      ++result.censored;
  }
  result.rate = trials ? static_cast<double>(result.censored) / static_cast<double>(trials) : 0.0;
  return result;
}

} // namespace rbg::chainsim
