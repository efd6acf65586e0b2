#pragma once

// Participant behaviours. An agent only ever sees a RequestView: on-chain
// request state, bits that have already been revealed on chain, and public
// mempool counts. Unrevealed bits of other participants are not observable.

#include "rbg/chainsim.hpp"
#include "rbg/protocol.hpp"
#include "rbg/types.hpp"

#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace rbg::agents {

/// Fresh uniform bit per request from the agent's own seeded stream.
struct HonestUniform
{
};

struct ConstantBit
{
  int bit = 0;
};

/// Registers and never reveals.
struct NonRevealer
{
};

/// Decides whether to reveal after seeing other participants' revealed bits.
using RevealPredicate = std::function<bool(std::span<const int> observed_bits, int own_bit)>;

struct LastMover
{
  RevealPredicate should_reveal;
  std::string label = "last-mover";
};

/// Reveals only if doing so makes the XOR of revealed bits equal `preferred`.
LastMover last_mover_preferring(int preferred);

/// One economic actor behind several registrations, each playing a fixed bit.
/// All registrations use the actor's single account, so payoffs pool.
struct SybilCoalition
{
  std::vector<int> bits;
};

using AgentPolicy = std::variant<HonestUniform, ConstantBit, NonRevealer, LastMover, SybilCoalition>;

std::string policy_name(const AgentPolicy& policy);

struct PublicReveal
{
  ParticipantNumber number = 0;
  int bit = 0;
};

struct RequestView
{
  RequestId id = 0;
  bool on_chain = false;
  bool settled = false;
  Money value_bound = 0;
  Timestamp registration_closes = 0; // meaningful once on chain
  Timestamp deadline = 0;
  std::size_t registrants = 0;
  std::size_t pending_registrations = 0; // registrations for `id` still in the mempool
  std::vector<PublicReveal> reveals;
};

/// View of a request that is on chain.
RequestView view_of(const protocol::Engine& engine, RequestId id, std::size_t pending_registrations = 0);

/// View of a request whose creating transaction is still in the mempool; `id`
/// is the id it will receive when included.
RequestView pending_view(RequestId predicted_id, Money value_bound, std::size_t pending_registrations);

class Agent
{
public:
  Agent(std::size_t index, AccountId account, AgentPolicy policy, std::uint64_t seed);

  /// Transactions this agent wants to submit now for the viewed request.
  std::vector<chainsim::TxBody> act(const RequestView& view, Timestamp now);

  std::size_t index() const { return index_; }
  AccountId account() const { return account_; }
  const AgentPolicy& policy() const { return policy_; }
  /// Registrations made per request (coalitions make several).
  std::size_t identities() const;

private:
  struct Slot
  {
    ParticipantNumber number = 0;
    int bit = 0;
    commitment::Nonce nonce{};
    bool reveal_sent = false;
  };
  struct Participation
  {
    std::vector<Slot> slots;
    bool decided = false;
  };

  int chosen_bit(std::size_t member, Rng& rng) const;
  bool owns(const Participation& p, ParticipantNumber n) const;

  std::size_t index_;
  AccountId account_;
  AgentPolicy policy_;
  std::uint64_t seed_;
  std::unordered_map<RequestId, Participation> joined_; // erased once claims are sent
};

// -- tournament ----------------------------------------------------------------

struct TournamentConfig
{
  Money fee = 4000;
  Money value_bound = 1000;
  std::size_t rounds = 10000;
  std::uint64_t seed = 0;
};

struct TournamentRow
{
  std::size_t agent = 0;
  std::string policy;
  std::size_t identities = 1;
  std::size_t rounds = 0;
  double mean_payoff = 0;
  double std_error = 0;
  Money total_payoff = 0;
  bool reconciled = false; // balance change equals the summed per-round payoffs
};

/// Plays `rounds` full request lifecycles directly against a protocol engine.
/// Registration order is shuffled every round. Payoff per round is rewards plus
/// returned deposit minus deposit, per agent (coalitions pooled).
/// Throws std::invalid_argument with fewer than two agents.
std::vector<TournamentRow> tournament(std::span<const AgentPolicy> policies, const TournamentConfig& config);

std::string tournament_csv(std::span<const TournamentRow> rows);

} // namespace rbg::agents
