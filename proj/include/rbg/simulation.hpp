#pragma once

// Discrete-event driver: scheduled client requests, agent reactions, phase
// wake-ups, and block arrivals, processed in time order over one Chain.

#include "rbg/agents.hpp"
#include "rbg/chainsim.hpp"
#include "rbg/protocol.hpp"

#include <json.hpp>

#include <deque>
#include <map>
#include <optional>
#include <ostream>
#include <queue>
#include <string>
#include <vector>

namespace rbg::sim {

struct ClientRequest
{
  Timestamp at = 0;
  AccountId client = 0;
  Money fee = 0;
  Duration deadline_offset = 0; // from the including block
  Money value_bound = 0;
  std::size_t bits = 1;
};

struct AgentSpec
{
  agents::AgentPolicy policy;
  Money initial_balance = 0;
};

struct SimulationSetup
{
  chainsim::SimParams params;
  protocol::Config config;
  std::vector<chainsim::MinerSpec> miners;
  std::vector<AgentSpec> agents;
  bool record_trace = false;
  /// Stop mining past this time even if work remains; 0 picks a default.
  Timestamp horizon = 0;
};

struct MetricsRow
{
  RequestId id = 0;
  Timestamp submitted_at = 0;
  Timestamp created_at = 0;
  Timestamp settled_at = 0;
  Duration processing = 0;
  std::string settlement;
  std::optional<int> bit;
  Money compensation = 0; // penalty compensation, or refund + confiscated on failure
};

struct TraceRow
{
  std::string record; // "block" or "event"
  Timestamp time = 0;
  chainsim::Height height = 0;
  chainsim::MinerId miner = 0;
  std::size_t tx_count = 0;
  std::optional<RequestId> request;
  std::string event;
  std::optional<ParticipantNumber> participant;
  Money amount = 0;
  std::string detail;
};

inline constexpr AccountId kFirstAgentAccount = 1000;

class Simulation
{
public:
  explicit Simulation(SimulationSetup setup);

  /// New client account holding `initial`.
  AccountId open_client(Money initial);
  void schedule_request(const ClientRequest& request);

  /// Runs until every scheduled request is settled and the mempool is empty,
  /// or the horizon is reached.
  void run();

  const chainsim::Chain& chain() const { return chain_; }
  chainsim::Chain& chain() { return chain_; }
  const protocol::Engine& engine() const { return chain_.engine(); }
  protocol::Ledger& ledger() { return chain_.engine().ledger(); }

  const std::vector<agents::Agent>& roster() const { return agents_; }
  std::size_t rejected_requests() const { return rejected_requests_; }
  bool hit_horizon() const { return hit_horizon_; }

  /// One row per settled request, ordered by request id.
  std::vector<MetricsRow> metrics() const;
  const std::vector<TraceRow>& trace() const { return trace_; }
  /// Protocol-internal net payoff per agent over the whole run.
  std::vector<Money> agent_payoffs() const;

  /// Supply check, settlement tallies, dust, payoff reconciliation.
  nlohmann::json audit() const;
  bool audit_passed() const;

private:
  enum class Wake
  {
    RevealOpen,
    LastMoverCutoff,
    Deadline,
  };
  struct WakeEvent
  {
    Timestamp at;
    std::uint64_t order;
    RequestId request;
    Wake kind;
    bool operator>(const WakeEvent& o) const { return at != o.at ? at > o.at : order > o.order; }
  };
  struct PendingRequest
  {
    chainsim::TxSeq seq;
    std::size_t bits;
  };
  struct Tracking
  {
    Timestamp submitted_at = 0;
    bool ours = false;
    bool output_requested = false;
  };

  void submit(chainsim::TxBody body, Timestamp now);
  void submit_request(const ClientRequest& r);
  void wake(const WakeEvent& w);
  void on_block(const chainsim::Block& block);
  void let_agents_act(RequestId id, Timestamp now);
  void push_wake(Timestamp at, RequestId id, Wake kind);

  SimulationSetup setup_;
  chainsim::Chain chain_;
  std::vector<agents::Agent> agents_;
  std::vector<Money> agent_start_;
  bool has_last_mover_ = false;

  std::vector<ClientRequest> schedule_;
  std::size_t next_scheduled_ = 0;
  std::priority_queue<WakeEvent, std::vector<WakeEvent>, std::greater<>> wakes_;
  std::uint64_t wake_order_ = 0;

  std::deque<PendingRequest> pending_requests_;
  std::map<RequestId, std::size_t> pending_registrations_;
  std::map<chainsim::TxSeq, Timestamp> request_submitted_at_;
  std::vector<Tracking> tracking_; // indexed by request id
  std::size_t rejected_requests_ = 0;
  bool hit_horizon_ = false;
  AccountId next_client_ = 1;

  std::vector<TraceRow> trace_;
};

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);
void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows);

} // namespace rbg::sim
