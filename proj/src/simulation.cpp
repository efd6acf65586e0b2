#include "rbg/simulation.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace rbg::sim {

namespace {

constexpr Timestamp kNever = std::numeric_limits<Timestamp>::max();

protocol::Engine make_engine(const SimulationSetup& s)
{
  return protocol::Engine(s.config);
}

} // namespace

Simulation::Simulation(SimulationSetup setup)
    : setup_(std::move(setup)), chain_(setup_.params, setup_.miners, make_engine(setup_))
{
  for (std::size_t i = 0; i < setup_.agents.size(); ++i) {
    const AccountId account = kFirstAgentAccount + i;
    ledger().open_account(account, setup_.agents[i].initial_balance);
    agents_.emplace_back(i, account, setup_.agents[i].policy, derive_seed(setup_.params.seed, {i, 0xa9e7}));
    agent_start_.push_back(setup_.agents[i].initial_balance);
    if (std::holds_alternative<agents::LastMover>(setup_.agents[i].policy))
      has_last_mover_ = true;
  }
}

AccountId Simulation::open_client(Money initial)
{
  const AccountId id = next_client_++;
  if (id >= kFirstAgentAccount)
    throw std::length_error("too many client accounts");
  ledger().open_account(id, initial);
  return id;
}

void Simulation::schedule_request(const ClientRequest& request)
{
  if (request.bits == 0)
    throw std::invalid_argument("a request needs at least one bit");
  schedule_.push_back(request);
}

void Simulation::push_wake(Timestamp at, RequestId id, Wake kind)
{
  wakes_.push(WakeEvent{at, wake_order_++, id, kind});
}

void Simulation::submit(chainsim::TxBody body, Timestamp now)
{
  if (auto reg = std::get_if<chainsim::RegisterTx>(&body))
    ++pending_registrations_[reg->request];
  chain_.submit_tx(std::move(body), now);
}

void Simulation::submit_request(const ClientRequest& r)
{
  RequestId first = engine().next_request_id();
  for (const auto& p : pending_requests_)
    first += p.bits;

  const auto seq = chain_.submit_tx(
      chainsim::RequestBitTx{r.client, r.fee, chainsim::DeadlineAfter{r.deadline_offset}, r.value_bound, r.bits}, r.at);
  pending_requests_.push_back({seq, r.bits});
  request_submitted_at_[seq] = r.at;

  // Participants watching the public mempool join before the request lands.
  for (std::size_t j = 0; j < r.bits; ++j) {
    const RequestId id = first + j;
    for (auto& agent : agents_) {
      const auto view = agents::pending_view(id, r.value_bound, pending_registrations_[id]);
      for (auto& body : agent.act(view, r.at))
        submit(std::move(body), r.at);
    }
  }
}

void Simulation::let_agents_act(RequestId id, Timestamp now)
{
  for (auto& agent : agents_) {
    auto it = pending_registrations_.find(id);
    const auto view = agents::view_of(engine(), id, it == pending_registrations_.end() ? 0 : it->second);
    for (auto& body : agent.act(view, now))
      submit(std::move(body), now);
  }
}

void Simulation::wake(const WakeEvent& w)
{
  let_agents_act(w.request, w.at);
  if (w.kind != Wake::Deadline)
    return;
  Tracking& t = tracking_[w.request];
  if (t.ours && !t.output_requested) {
    t.output_requested = true;
    submit(chainsim::GetOutputTx{w.request, engine().request(w.request).client}, w.at);
  }
}

void Simulation::on_block(const chainsim::Block& block)
{
  const auto& h = block.header;
  if (setup_.record_trace)
    trace_.push_back(TraceRow{"block", h.timestamp, h.height, h.miner, h.tx_count, {}, {}, {}, 0, {}});

  std::set<RequestId> revealed_in_block;
  for (std::size_t i = 0; i < block.transactions.size(); ++i) {
    const auto& tx = block.transactions[i];
    const auto& rc = block.receipts[i];

    if (std::holds_alternative<chainsim::RequestBitTx>(tx.body)) {
      auto it = std::find_if(pending_requests_.begin(), pending_requests_.end(),
                             [&](const PendingRequest& p) { return p.seq == tx.seq; });
      if (it != pending_requests_.end())
        pending_requests_.erase(it);
      const Timestamp submitted = request_submitted_at_[tx.seq];
      request_submitted_at_.erase(tx.seq);
      if (!rc.ok) {
        ++rejected_requests_;
      } else {
        for (RequestId id : rc.requests) {
          if (tracking_.size() <= id)
            tracking_.resize(id + 1);
          tracking_[id] = Tracking{submitted, true, false};
          const auto& r = engine().request(id);
          push_wake(r.registration_closes() + 1, id, Wake::RevealOpen);
          if (has_last_mover_)
            push_wake(r.registration_closes() + (r.deadline - r.registration_closes()) / 2, id, Wake::LastMoverCutoff);
          push_wake(r.deadline + 1, id, Wake::Deadline);
        }
      }
    } else if (auto reg = std::get_if<chainsim::RegisterTx>(&tx.body)) {
      auto it = pending_registrations_.find(reg->request);
      if (it != pending_registrations_.end() && --it->second == 0)
        pending_registrations_.erase(it);
    } else if (std::holds_alternative<chainsim::RevealTx>(tx.body) && rc.ok) {
      revealed_in_block.insert(rc.requests.front());
    }

    if (setup_.record_trace) {
      TraceRow row;
      row.record = "event";
      row.time = h.timestamp;
      row.height = h.height;
      if (!rc.requests.empty())
        row.request = rc.requests.front();
      row.event = std::string(rc.kind) + (rc.ok ? "" : "_rejected");
      row.participant = rc.participant;
      row.amount = rc.amount;
      if (rc.error)
        row.detail = std::string(protocol::to_string(*rc.error));
      else if (rc.output) {
        row.detail = std::string(protocol::kind_name(*rc.output));
        if (auto b = protocol::output_bit(*rc.output))
          row.detail += " bit=" + std::to_string(*b);
      } else if (rc.requests.size() > 1) {
        row.detail = "ids=" + std::to_string(rc.requests.front()) + ".." + std::to_string(rc.requests.back());
      }
      trace_.push_back(std::move(row));
    }
  }

  // Last movers react to reveals that just became public.
  if (has_last_mover_)
    for (RequestId id : revealed_in_block)
      let_agents_act(id, h.timestamp);
}

void Simulation::run()
{
  std::stable_sort(schedule_.begin() + static_cast<std::ptrdiff_t>(next_scheduled_), schedule_.end(),
                   [](const ClientRequest& a, const ClientRequest& b) { return a.at < b.at; });
  Timestamp horizon = setup_.horizon;
  if (horizon == 0) {
    const Timestamp last = schedule_.empty() ? chain_.time() : schedule_.back().at;
    horizon = std::max(last, setup_.params.duration) + 100 * setup_.config.t_min + 100 * setup_.params.t_gen;
  }

  for (;;) {
    const Timestamp next_request = next_scheduled_ < schedule_.size() ? schedule_[next_scheduled_].at : kNever;
    const Timestamp next_wake = wakes_.empty() ? kNever : wakes_.top().at;
    const Timestamp next_event = std::min(next_request, next_wake);
    if (next_event == kNever && chain_.mempool().empty())
      break;

    const Timestamp block_time = chain_.next_block_time();
    if (next_event <= block_time) {
      if (next_request <= next_wake)
        submit_request(schedule_[next_scheduled_++]);
      else {
        const WakeEvent w = wakes_.top();
        wakes_.pop();
        wake(w);
      }
      continue;
    }
    if (block_time > horizon) {
      hit_horizon_ = true;
      break;
    }
    on_block(chain_.next_block());
  }
}

std::vector<MetricsRow> Simulation::metrics() const
{
  std::vector<MetricsRow> rows;
  for (RequestId id = 0; id < engine().request_count(); ++id) {
    const auto& r = engine().request(id);
    if (!r.settlement)
      continue;
    MetricsRow row;
    row.id = id;
    row.submitted_at = id < tracking_.size() ? tracking_[id].submitted_at : r.created_at;
    row.created_at = r.created_at;
    row.settled_at = r.settlement->settled_at;
    row.processing = row.settled_at - row.created_at;
    row.settlement = std::string(protocol::kind_name(r.settlement->output));
    row.bit = protocol::output_bit(r.settlement->output);
    if (auto p = std::get_if<protocol::output::Penalty>(&r.settlement->output))
      row.compensation = p->compensation;
    else if (auto f = std::get_if<protocol::output::Failure>(&r.settlement->output))
      row.compensation = f->refund + f->confiscated;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<Money> Simulation::agent_payoffs() const
{
  std::vector<Money> payoff(agents_.size(), 0);
  for (RequestId id = 0; id < engine().request_count(); ++id)
    for (const auto& reg : engine().request(id).registrants) {
      if (reg.account < kFirstAgentAccount || reg.account - kFirstAgentAccount >= agents_.size())
        continue;
      payoff[reg.account - kFirstAgentAccount] +=
          reg.reward_paid + (reg.deposit_returned ? reg.deposited : 0) - reg.deposited;
    }
  return payoff;
}

nlohmann::json Simulation::audit() const
{
  using nlohmann::json;
  const auto& ledger = engine().ledger();
  std::size_t settled = 0, success = 0, penalty = 0, failure = 0;
  Money dust = 0, confiscated = 0;
  bool penalty_floor = true, success_purity = true, failure_refund = true;
  json settlements = json::array();

  for (RequestId id = 0; id < engine().request_count(); ++id) {
    const auto& r = engine().request(id);
    if (!r.settlement)
      continue;
    ++settled;
    const auto& s = *r.settlement;
    dust += s.dust;
    json row{{"id", id}, {"kind", protocol::kind_name(s.output)}, {"paidToClient", s.paid_to_client}};
    if (auto b = protocol::output_bit(s.output))
      row["bit"] = *b;
    if (std::holds_alternative<protocol::output::Success>(s.output)) {
      ++success;
      success_purity = success_purity && r.all_revealed() && !r.registrants.empty();
    } else if (auto p = std::get_if<protocol::output::Penalty>(&s.output)) {
      ++penalty;
      row["compensation"] = p->compensation;
      confiscated += p->compensation - s.dust;
      penalty_floor = penalty_floor && p->compensation >= r.value_bound;
    } else if (auto f = std::get_if<protocol::output::Failure>(&s.output)) {
      ++failure;
      row["refund"] = f->refund;
      row["confiscated"] = f->confiscated;
      confiscated += f->confiscated;
      failure_refund = failure_refund && f->refund == r.fee;
    }
    settlements.push_back(std::move(row));
  }

  json agents_json = json::array();
  bool reconciled = true;
  const auto payoffs = agent_payoffs();
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    const Money change = ledger.balance(agents_[i].account()) - agent_start_[i];
    const bool ok = change == payoffs[i];
    reconciled = reconciled && ok;
    agents_json.push_back(json{{"agent", i},
                               {"account", agents_[i].account()},
                               {"policy", agents::policy_name(agents_[i].policy())},
                               {"payoff", payoffs[i]},
                               {"balanceChange", change},
                               {"reconciled", ok}});
  }

  const Money total = ledger.total_supply();
  const bool conserved = total == ledger.genesis_supply();
  json out{{"genesisSupply", ledger.genesis_supply()},
           {"finalSupply", total},
           {"supplyConserved", conserved},
           {"requests",
            {{"created", engine().request_count()},
             {"rejected", rejected_requests_},
             {"settled", settled},
             {"unsettled", engine().request_count() - settled},
             {"success", success},
             {"penalty", penalty},
             {"failure", failure}}},
           {"dustTotal", dust},
           {"confiscatedTotal", confiscated},
           {"escrowRemaining", ledger.total_escrow()},
           {"blocks", chain_.height()},
           {"revealWindowBlocks",
            static_cast<double>(setup_.config.t_min - setup_.config.t_reg) / static_cast<double>(setup_.params.t_gen)},
           {"penaltyFloorHolds", penalty_floor},
           {"successPurity", success_purity},
           {"failureRefundsFull", failure_refund},
           {"payoffsReconciled", reconciled},
           {"horizonReached", hit_horizon_},
           {"agents", std::move(agents_json)},
           {"settlements", std::move(settlements)}};
  out["passed"] = conserved && penalty_floor && success_purity && failure_refund && reconciled;
  return out;
}

bool Simulation::audit_passed() const
{
  return audit()["passed"].get<bool>();
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows)
{
  out << "request_id,submitted_at,created_at,settled_at,processing_ms,settlement,bit,compensation\n";
  for (const auto& r : rows) {
    out << r.id << ',' << r.submitted_at << ',' << r.created_at << ',' << r.settled_at << ',' << r.processing << ','
        << r.settlement << ',';
    if (r.bit)
      out << *r.bit;
    out << ',' << r.compensation << '\n';
  }
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows)
{
  out << "record,time,height,miner,tx_count,request_id,event,participant,amount,detail\n";
  for (const auto& r : rows) {
    out << r.record << ',' << r.time << ',' << r.height << ',';
    if (r.record == "block") {
      out << r.miner << ',' << r.tx_count << ",,,,,\n";
      continue;
    }
    out << ",,";
    if (r.request)
      out << *r.request;
    out << ',' << r.event << ',';
    if (r.participant)
      out << *r.participant;
    out << ',' << r.amount << ',' << r.detail << '\n';
  }
}

} // namespace rbg::sim
