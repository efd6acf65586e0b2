#pragma once

// Single-chain proof-of-work simulator. Blocks arrive with exponential gaps,
// each block's miner is drawn by hash power, and every included transaction is
// applied to the protocol engine at the block timestamp.

#include "rbg/protocol.hpp"
#include "rbg/random.hpp"
#include "rbg/types.hpp"

#include <boost/rational.hpp>

#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace rbg::chainsim {

using MinerId = std::uint32_t;
using TxSeq = std::uint64_t;
using Height = std::uint64_t;
using HashPower = boost::rational<std::int64_t>;

// -- transactions ------------------------------------------------------------

/// Absolute deadline.
struct DeadlineAt
{
  Timestamp at = 0;
};
/// Deadline measured from the including block's timestamp, as a client
/// contract computing `now + offset` would.
struct DeadlineAfter
{
  Duration offset = 0;
};
using Deadline = std::variant<DeadlineAt, DeadlineAfter>;

struct RequestBitTx
{
  AccountId client = 0;
  Money fee = 0;
  Deadline deadline;
  Money value_bound = 0;
  std::size_t bits = 1; // > 1 issues a word request
};

struct RegisterTx
{
  RequestId request = 0;
  AccountId account = 0;
  Money deposit = 0;
  commitment::Commitment commitment;
};

struct RevealTx
{
  RequestId request = 0;
  ParticipantNumber participant = 0;
  int bit = 0;
  commitment::Nonce nonce{};
};

struct ReturnDepositTx
{
  RequestId request = 0;
  ParticipantNumber participant = 0;
};

struct RequestRewardTx
{
  RequestId request = 0;
  ParticipantNumber participant = 0;
};

struct GetOutputTx
{
  RequestId request = 0;
  AccountId caller = 0;
};

using TxBody = std::variant<RequestBitTx, RegisterTx, RevealTx, ReturnDepositTx, RequestRewardTx, GetOutputTx>;

struct Tx
{
  TxSeq seq = 0;
  Timestamp submitted_at = 0;
  TxBody body;
};

std::string_view tx_kind(const TxBody& body);

/// Outcome of applying one transaction to the engine.
struct Receipt
{
  TxSeq seq = 0;
  Timestamp time = 0;
  std::string_view kind;
  bool ok = false;
  std::optional<protocol::Errc> error;
  std::vector<RequestId> requests;            // ids created (request) or touched
  std::optional<ParticipantNumber> participant;
  Money amount = 0;                           // fee, deposit, payout...
  std::optional<protocol::OutputKind> output; // get_output only
};

/// Applies a transaction to the engine at time `now`. Protocol errors are
/// captured in the receipt; anything else propagates.
Receipt apply_tx(protocol::Engine& engine, const Tx& tx, Timestamp now);

// -- miners and blocks ---------------------------------------------------------

struct Honest
{
};

struct Censor
{
  std::function<bool(const Tx&)> predicate; // true = refuse to include
  std::string label = "censor";
};

using MinerPolicy = std::variant<Honest, Censor>;

Censor censor_reveals();
Censor censor_everything();

struct MinerSpec
{
  MinerId id = 0;
  HashPower hash_power{1};
  MinerPolicy policy = Honest{};
};

struct BlockHeader
{
  Height height = 0;
  Timestamp timestamp = 0;
  MinerId miner = 0;
  std::size_t tx_count = 0;
};

struct Block
{
  BlockHeader header;
  std::vector<Tx> transactions;
  std::vector<Receipt> receipts; // parallel to transactions
};

struct SimParams
{
  Duration t_gen = 14133;
  std::uint64_t seed = 0;
  Duration duration = 0;

  void validate() const;
};

class Chain
{
public:
  /// Throws std::invalid_argument if hash powers are outside (0,1] or do not
  /// sum to exactly 1.
  Chain(SimParams params, std::vector<MinerSpec> miners, protocol::Engine engine, Timestamp genesis_time = 0);

  TxSeq submit_tx(TxBody body, Timestamp now);

  /// Timestamp of the block that next_block() will produce.
  Timestamp next_block_time();
  Block next_block();

  Timestamp time() const { return time_; }
  Height height() const { return headers_.size(); }
  const std::vector<BlockHeader>& headers() const { return headers_; }
  const std::deque<Tx>& mempool() const { return mempool_; }
  const std::vector<MinerSpec>& miners() const { return miners_; }
  const SimParams& params() const { return params_; }

  protocol::Engine& engine() { return engine_; }
  const protocol::Engine& engine() const { return engine_; }

private:
  const MinerSpec& sample_miner();

  SimParams params_;
  std::vector<MinerSpec> miners_;
  std::vector<std::int64_t> cumulative_; // hash power scaled to a common denominator
  std::int64_t denominator_ = 1;
  protocol::Engine engine_;
  Rng rng_;
  Timestamp time_;
  std::optional<Timestamp> next_time_;
  std::deque<Tx> mempool_;
  std::vector<BlockHeader> headers_;
  TxSeq next_seq_ = 0;
};

// -- withholding experiment ----------------------------------------------------

struct CensorshipResult
{
  double rate = 0;
  std::size_t censored = 0;
  std::size_t trials = 0;
};

/// Each trial: one reveal is submitted while a reveal-censoring miner with
/// hash power q competes against an honest one; the trial counts as censored
/// if none of the next m blocks includes it. Expected rate q^m.
/// Throws std::invalid_argument unless 0 < q <= 1 and m >= 1.
CensorshipResult censorship_trial(HashPower q, std::size_t m, std::size_t trials, std::uint64_t seed);

HashPower hash_power_from_double(double q, std::int64_t denominator = 1'000'000);

} // namespace rbg::chainsim
