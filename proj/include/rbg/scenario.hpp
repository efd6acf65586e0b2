#pragma once

// Scenario files: JSON documents tagged "schema": "rbg-scenario/1".
//
//   {
//     "schema": "rbg-scenario/1",
//     "sim":      {"tgen_ms": 14133, "seed": 7, "duration_ms": 120000},
//     "protocol": {"tmin_multiple": 10, "treg_multiple": 3},
//     "requests": {"rate_bits_per_s": 0.1, "bits_per_request": 1, "fee_per_bit": 4000,
//                  "value_bound": 1000, "deadline_offset_multiple": 10, "count": 12},
//     "miners":   [{"id": 0, "hash_power": "1/1", "policy": "honest"}],
//     "agents":   [{"policy": "honest-uniform"}, {"policy": "constant-bit", "bit": 0}],
//     "trace": true
//   }
//
// Miner policies: honest, censor-reveals, censor-all. Hash power is a decimal
// or a "num/den" string. Agent policies: honest-uniform, constant-bit {bit},
// non-revealer, last-mover {preferred}, sybil {bits}.

#include "rbg/simulation.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rbg::scenario {

inline constexpr const char* kSchema = "rbg-scenario/1";

class ScenarioError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct RequestSchedule
{
  double rate_bits_per_s = 1.0;
  std::size_t bits_per_request = 1;
  Money fee_per_bit = 4000;
  Money value_bound = 1000;
  double deadline_offset_multiple = 10;
  std::optional<std::size_t> count; // default: as many as fit in the duration

  /// Gap between consecutive requests, bits_per_request / rate seconds.
  Duration interval() const;
};

struct Scenario
{
  chainsim::SimParams sim;
  double tmin_multiple = 10;
  double treg_multiple = 3;
  RequestSchedule requests;
  std::vector<chainsim::MinerSpec> miners;
  std::vector<agents::AgentPolicy> agents;
  bool trace = true;

  protocol::Config protocol_config() const;
  /// Request submission times, one per request.
  std::vector<Timestamp> request_times() const;
};

/// Throws ScenarioError on any schema violation.
Scenario parse(const nlohmann::json& doc);
Scenario load(const std::filesystem::path& file);

agents::AgentPolicy parse_agent(const nlohmann::json& spec);
chainsim::MinerSpec parse_miner(const nlohmann::json& spec);

/// Builds a ready-to-run simulation: funded client and agents, scheduled requests.
sim::Simulation instantiate(const Scenario& s);

} // namespace rbg::scenario
