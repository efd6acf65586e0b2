#pragma once

// Random bit generator contract: request, register, reveal, deposit return,
// reward, output. Single-writer; every method takes the caller-supplied `now`.
// A call whose `now` is earlier than a previous call's is rejected with
// InvalidArgument.

#include "rbg/commitment.hpp"
#include "rbg/game.hpp"
#include "rbg/ledger.hpp"
#include "rbg/types.hpp"

#include <json.hpp>

#include <limits>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <variant>
#include <vector>

namespace rbg::protocol {

enum class Errc
{
  DeadlineTooClose,
  InsufficientFunds,
  InvalidArgument,
  UnknownRequest,
  RegistrationClosed,
  WrongDeposit,
  OutsideRevealWindow,
  UnknownParticipant,
  AlreadyRevealed,
  BadPreimage,
  NotRevealed,
  AlreadyClaimed,
  TooEarly,
  NotClient,
};

std::string_view to_string(Errc e);

class ProtocolError : public std::runtime_error
{
public:
  ProtocolError(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

private:
  Errc code_;
};

struct Config
{
  Duration t_min = 0;
  Duration t_reg = 0;
  std::size_t nonce_len = commitment::kNonceSize;

  /// Throws std::invalid_argument unless t_min > t_reg > 0 and nonce_len is 16.
  void validate() const;
  /// t_reg = 3 * t_gen, t_min = 10 * t_gen.
  static Config from_block_time(Duration t_gen);
};

enum class RevealState
{
  Pending,
  Revealed,
  Invalid, // never revealed; marked when the request settles
};

struct Registrant
{
  AccountId account = 0;
  ParticipantNumber number = 0;
  commitment::Commitment commitment;
  Money deposited = 0;
  RevealState reveal_state = RevealState::Pending;
  std::optional<int> bit;
  bool deposit_returned = false;
  bool reward_claimed = false;
  Money reward_paid = 0;
};

namespace output {
struct Success
{
  int bit = 0;
  friend bool operator==(const Success&, const Success&) = default;
};
struct Penalty
{
  int bit = 0;
  Money compensation = 0; // confiscated deposits + dust
  friend bool operator==(const Penalty&, const Penalty&) = default;
};
struct Failure
{
  Money refund = 0;      // the full fee
  Money confiscated = 0; // deposits of registrants who never revealed, also paid to the client
  friend bool operator==(const Failure&, const Failure&) = default;
};
} // namespace output

using OutputKind = std::variant<output::Success, output::Penalty, output::Failure>;

std::string_view kind_name(const OutputKind& o);
std::optional<int> output_bit(const OutputKind& o);

struct Settlement
{
  OutputKind output;
  Timestamp settled_at = 0;
  Money dust = 0;
  Money paid_to_client = 0;
};

struct Request
{
  RequestId id = 0;
  AccountId client = 0;
  Money fee = 0;
  Timestamp deadline = 0;
  Money value_bound = 0;
  Timestamp created_at = 0;
  Duration reg_window = 0; // t_reg in force when the request was created
  std::vector<Registrant> registrants;
  game::StrategyCounts counts;
  std::optional<Settlement> settlement;

  Timestamp registration_closes() const;
  bool all_revealed() const;
  /// XOR of all revealed bits so far.
  int xor_of_reveals() const;
};

struct RevealResult
{
  bool accepted = false;
  std::optional<Errc> reason;
};

class Engine
{
public:
  explicit Engine(Config config, Ledger ledger = {});

  RequestId request_random_bit(AccountId client, Money fee, Timestamp deadline, Money value_bound, Timestamp now);

  /// k independent bit requests; fee split as floor(fee/k) with the remainder
  /// added to the first instance.
  std::vector<RequestId> request_random_word(AccountId client, std::size_t k, Money fee, Timestamp deadline,
                                             Money value_bound, Timestamp now);

  ParticipantNumber register_participant(RequestId id, AccountId account, Money deposit,
                                         const commitment::Commitment& c, Timestamp now);

  /// Never throws for protocol reasons: a rejected reveal leaves state untouched.
  RevealResult reveal(RequestId id, ParticipantNumber p, int bit, const commitment::Nonce& nonce, Timestamp now);

  Money return_deposit(RequestId id, ParticipantNumber p, Timestamp now);
  Money request_reward(RequestId id, ParticipantNumber p, Timestamp now);

  /// Settles on the first call; later calls return the same value.
  OutputKind get_output(RequestId id, AccountId caller, Timestamp now);

  const Request& request(RequestId id) const;
  bool has_request(RequestId id) const { return id < requests_.size(); }
  std::size_t request_count() const { return requests_.size(); }
  RequestId next_request_id() const { return requests_.size(); }

  const Config& config() const { return config_; }
  const Ledger& ledger() const { return ledger_; }
  Ledger& ledger() { return ledger_; }

  /// Reward of revealed participant p, computed from the current counts.
  Money reward_of(const Request& r, ParticipantNumber p) const;

  nlohmann::json snapshot() const;
  static nlohmann::json to_json(const Request& r);

private:
  Request& find(RequestId id);
  Registrant& find_participant(Request& r, ParticipantNumber p);
  void settle(Request& r, Timestamp now);
  void tick(Timestamp now);

  Config config_;
  Ledger ledger_;
  std::vector<Request> requests_; // indexed by id
  Timestamp clock_ = std::numeric_limits<Timestamp>::min();
};

} // namespace rbg::protocol
