#include "rbg/scenario.hpp"

#include <cmath>
#include <fstream>

namespace rbg::scenario {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what)
{
  throw ScenarioError("scenario: " + what);
}

const json& section(const json& doc, const char* key)
{
  if (!doc.contains(key) || !doc.at(key).is_object())
    bad(std::string("missing object '") + key + "'");
  return doc.at(key);
}

template <class T>
T field(const json& obj, const char* key, std::optional<T> fallback = std::nullopt)
{
  if (!obj.contains(key)) {
    if (fallback)
      return *fallback;
    bad(std::string("missing field '") + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    bad(std::string("field '") + key + "' has the wrong type");
  }
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where)
{
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (const char* a : allowed)
      known = known || key == a;
    if (!known)
      bad("unknown field '" + key + "' in " + where);
  }
}

int parse_bit(const json& v)
{
  if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 1))
    bad("bits must be 0 or 1");
  return v.get<int>();
}

chainsim::HashPower parse_hash_power(const json& v)
{
  if (v.is_number()) {
    const double q = v.get<double>();
    if (!(q > 0.0 && q <= 1.0))
      bad("hash_power must be in (0,1]");
    return chainsim::hash_power_from_double(q);
  }
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    const auto slash = s.find('/');
    try {
      if (slash == std::string::npos)
        return chainsim::HashPower{std::stoll(s)};
      return chainsim::HashPower{std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1))};
    } catch (const std::exception&) {
      bad("hash_power '" + s + "' is not a fraction");
    }
  }
  bad("hash_power must be a number or a \"num/den\" string");
}

} // namespace

Duration RequestSchedule::interval() const
{
  return std::llround(static_cast<double>(bits_per_request) * 1000.0 / rate_bits_per_s);
}

protocol::Config Scenario::protocol_config() const
{
  const auto t = static_cast<double>(sim.t_gen);
  return protocol::Config{std::llround(tmin_multiple * t), std::llround(treg_multiple * t)};
}

std::vector<Timestamp> Scenario::request_times() const
{
  std::vector<Timestamp> times;
  const Duration gap = requests.interval();
  for (Timestamp t = 0;; t += gap) {
    if (requests.count ? times.size() >= *requests.count : t >= sim.duration)
      break;
    times.push_back(t);
  }
  return times;
}

agents::AgentPolicy parse_agent(const json& spec)
{
  if (!spec.is_object())
    bad("agent entries must be objects");
  const auto policy = field<std::string>(spec, "policy");
  if (policy == "honest-uniform") {
    check_keys(spec, {"policy"}, "agent");
    return agents::HonestUniform{};
  }
  if (policy == "constant-bit") {
    check_keys(spec, {"policy", "bit"}, "agent");
    if (!spec.contains("bit"))
      bad("constant-bit needs 'bit'");
    return agents::ConstantBit{parse_bit(spec.at("bit"))};
  }
  if (policy == "non-revealer") {
    check_keys(spec, {"policy"}, "agent");
    return agents::NonRevealer{};
  }
  if (policy == "last-mover") {
    check_keys(spec, {"policy", "preferred"}, "agent");
    if (!spec.contains("preferred"))
      bad("last-mover needs 'preferred'");
    return agents::last_mover_preferring(parse_bit(spec.at("preferred")));
  }
  if (policy == "sybil") {
    check_keys(spec, {"policy", "bits"}, "agent");
    if (!spec.contains("bits") || !spec.at("bits").is_array() || spec.at("bits").empty())
      bad("sybil needs a non-empty 'bits' array");
    agents::SybilCoalition s;
    for (const auto& b : spec.at("bits"))
      s.bits.push_back(parse_bit(b));
    return s;
  }
  bad("unknown agent policy '" + policy + "'");
}

chainsim::MinerSpec parse_miner(const json& spec)
{
  if (!spec.is_object())
    bad("miner entries must be objects");
  check_keys(spec, {"id", "hash_power", "policy"}, "miner");
  chainsim::MinerSpec m;
  m.id = field<chainsim::MinerId>(spec, "id");
  if (!spec.contains("hash_power"))
    bad("miner needs 'hash_power'");
  m.hash_power = parse_hash_power(spec.at("hash_power"));
  const auto policy = field<std::string>(spec, "policy", std::string("honest"));
  if (policy == "honest")
    m.policy = chainsim::Honest{};
  else if (policy == "censor-reveals")
    m.policy = chainsim::censor_reveals();
  else if (policy == "censor-all")
    m.policy = chainsim::censor_everything();
  else
    bad("unknown miner policy '" + policy + "'");
  return m;
}

Scenario parse(const json& doc)
{
  if (!doc.is_object())
    bad("document must be an object");
  if (field<std::string>(doc, "schema") != kSchema)
    bad(std::string("schema must be \"") + kSchema + "\"");
  check_keys(doc, {"schema", "sim", "protocol", "requests", "miners", "agents", "trace"}, "scenario");

  Scenario s;
  const json& sim = section(doc, "sim");
  check_keys(sim, {"tgen_ms", "seed", "duration_ms"}, "sim");
  s.sim.t_gen = field<Duration>(sim, "tgen_ms", Duration{14133});
  s.sim.seed = field<std::uint64_t>(sim, "seed", std::uint64_t{0});
  s.sim.duration = field<Duration>(sim, "duration_ms");
  if (s.sim.t_gen <= 0)
    bad("tgen_ms must be positive");
  if (s.sim.duration < 0)
    bad("duration_ms must be non-negative");

  if (doc.contains("protocol")) {
    const json& p = section(doc, "protocol");
    check_keys(p, {"tmin_multiple", "treg_multiple"}, "protocol");
    s.tmin_multiple = field<double>(p, "tmin_multiple", 10.0);
    s.treg_multiple = field<double>(p, "treg_multiple", 3.0);
  }
  if (!(s.treg_multiple > 0) || !(s.tmin_multiple > s.treg_multiple))
    bad("protocol needs tmin_multiple > treg_multiple > 0");
  try {
    s.protocol_config().validate();
  } catch (const std::invalid_argument& e) {
    bad(e.what());
  }

  const json& r = section(doc, "requests");
  check_keys(r, {"rate_bits_per_s", "bits_per_request", "fee_per_bit", "value_bound", "deadline_offset_multiple", "count"},
             "requests");
  s.requests.rate_bits_per_s = field<double>(r, "rate_bits_per_s");
  s.requests.bits_per_request = field<std::size_t>(r, "bits_per_request", std::size_t{1});
  s.requests.fee_per_bit = field<Money>(r, "fee_per_bit");
  s.requests.value_bound = field<Money>(r, "value_bound");
  s.requests.deadline_offset_multiple = field<double>(r, "deadline_offset_multiple", s.tmin_multiple);
  if (r.contains("count"))
    s.requests.count = field<std::size_t>(r, "count");
  if (!(s.requests.rate_bits_per_s > 0))
    bad("rate_bits_per_s must be positive");
  if (s.requests.bits_per_request == 0)
    bad("bits_per_request must be at least 1");
  if (s.requests.interval() <= 0)
    bad("request interval rounds to zero milliseconds");
  if (s.requests.fee_per_bit < 0 || s.requests.value_bound < 0)
    bad("fee_per_bit and value_bound must be non-negative");
  if (s.requests.deadline_offset_multiple < s.tmin_multiple)
    bad("deadline_offset_multiple must be at least tmin_multiple");

  if (!doc.contains("miners") || !doc.at("miners").is_array() || doc.at("miners").empty())
    bad("'miners' must be a non-empty array");
  for (const auto& m : doc.at("miners"))
    s.miners.push_back(parse_miner(m));
  chainsim::HashPower total{0};
  for (const auto& m : s.miners)
    total += m.hash_power;
  if (total != chainsim::HashPower{1})
    bad("miner hash powers must sum to 1");

  if (doc.contains("agents")) {
    if (!doc.at("agents").is_array())
      bad("'agents' must be an array");
    for (const auto& a : doc.at("agents"))
      s.agents.push_back(parse_agent(a));
  }
  s.trace = field<bool>(doc, "trace", true);
  return s;
}

Scenario load(const std::filesystem::path& file)
{
  std::ifstream in(file);
  if (!in)
    bad("cannot open " + file.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    bad(std::string("malformed JSON: ") + e.what());
  }
  return parse(doc);
}

sim::Simulation instantiate(const Scenario& s)
{
  const auto times = s.request_times();
  const auto bits = static_cast<Money>(times.size() * s.requests.bits_per_request);

  sim::SimulationSetup setup;
  setup.params = s.sim;
  setup.config = s.protocol_config();
  setup.miners = s.miners;
  setup.record_trace = s.trace;
  for (const auto& policy : s.agents) {
    const auto members = static_cast<Money>(
        std::holds_alternative<agents::SybilCoalition>(policy) ? std::get<agents::SybilCoalition>(policy).bits.size() : 1);
    setup.agents.push_back({policy, s.requests.value_bound * members * bits});
  }

  sim::Simulation simulation(std::move(setup));
  const AccountId client = simulation.open_client(s.requests.fee_per_bit * bits);
  const auto offset = std::llround(s.requests.deadline_offset_multiple * static_cast<double>(s.sim.t_gen));
  for (Timestamp at : times)
    simulation.schedule_request(sim::ClientRequest{at, client, s.requests.fee_per_bit * static_cast<Money>(s.requests.bits_per_request),
                                                   offset, s.requests.value_bound, s.requests.bits_per_request});
  return simulation;
}

} // namespace rbg::scenario
