#include "rbg/game.hpp"

#include "rbg/random.hpp"

#include <algorithm>
#include <stdexcept>

namespace rbg::game {

Strategy::Strategy(int value) : value_(value)
{
  if (value < 0 || value > 3)
    throw std::invalid_argument("strategy must be in {0,1,2,3}");
}

Strategy Strategy::from_bit(PlayerIndex player, int bit)
{
  if (bit != 0 && bit != 1)
    throw std::invalid_argument("bit must be 0 or 1");
  return Strategy(2 * bit + static_cast<int>(player.value % 2));
}

Strategy Strategy::lower(PlayerIndex player) { return from_bit(player, 0); }
Strategy Strategy::upper(PlayerIndex player) { return from_bit(player, 1); }

int minigame_payoff(Strategy a, Strategy b)
{
  const int d = ((a.value() - b.value()) % 4 + 4) % 4;
  if (d == 1)
    return 1;
  if (d == 3)
    return -1;
  return 0;
}

RbgOutcome::RbgOutcome(std::vector<Strategy> strategies) : strategies_(std::move(strategies))
{
  if (strategies_.empty())
    throw std::invalid_argument("outcome needs at least one player");
  for (std::size_t i = 0; i < strategies_.size(); ++i)
    if (!strategies_[i].legal_for(PlayerIndex{i + 1}))
      throw std::invalid_argument("strategy parity does not match player " + std::to_string(i + 1));
}

StrategyCounts counts_of(std::span<const Strategy> strategies)
{
  StrategyCounts c;
  for (auto s : strategies)
    c.add(s);
  return c;
}

std::int64_t outcome_utility(const RbgOutcome& outcome, PlayerIndex i)
{
  if (i.value < 1 || i.value > outcome.size())
    throw std::out_of_range("player index out of range");
  const Strategy mine = outcome[i];
  std::int64_t u = 0;
  for (std::size_t j = 1; j <= outcome.size(); ++j)
    if (j != i.value)
      u += minigame_payoff(mine, outcome[PlayerIndex{j}]);
  return u;
}

std::int64_t utility_from_counts(const StrategyCounts& counts, Strategy s)
{
  const auto below = static_cast<std::size_t>((s.value() + 3) % 4);
  const auto above = static_cast<std::size_t>((s.value() + 1) % 4);
  return counts.n[below] - counts.n[above];
}

// ---------------------------------------------------------------------------

MixedProfile::MixedProfile(std::vector<Rational> lower_probabilities) : q_(std::move(lower_probabilities))
{
  for (auto& q : q_) {
    q.canonicalize();
    if (q < 0 || q > 1)
      throw std::invalid_argument("marginal probability outside [0,1]");
  }
}

MixedProfile MixedProfile::uniform(std::size_t n)
{
  return MixedProfile(std::vector<Rational>(n, Rational(1, 2)));
}

Rational MixedProfile::probability(PlayerIndex i, Strategy s) const
{
  if (!s.legal_for(i))
    return Rational(0);
  const Rational& q = lower_probability(i);
  return s == Strategy::lower(i) ? q : Rational(1 - q);
}

Rational MixedProfile::bias(PlayerIndex i) const
{
  return Rational(2 * lower_probability(i) - 1);
}

bool MixedProfile::is_uniform() const
{
  return std::all_of(q_.begin(), q_.end(), [](const Rational& q) { return q == Rational(1, 2); });
}

namespace {

void check_index(const MixedProfile& profile, PlayerIndex i)
{
  if (i.value < 1 || i.value > profile.size())
    throw std::out_of_range("player index out of range");
}

// E[f(a, s_j)] with s_j drawn from j's marginal.
Rational expected_payoff_against(const MixedProfile& profile, Strategy a, PlayerIndex j)
{
  const Strategy lo = Strategy::lower(j);
  const Strategy hi = Strategy::upper(j);
  const Rational& q = profile.lower_probability(j);
  return q * minigame_payoff(a, lo) + (1 - q) * minigame_payoff(a, hi);
}

} // namespace

Rational expected_utility(const MixedProfile& profile, PlayerIndex i)
{
  check_index(profile, i);
  const Strategy lo = Strategy::lower(i);
  const Strategy hi = Strategy::upper(i);
  const Rational& qi = profile.lower_probability(i);
  Rational total;
  for (std::size_t j = 1; j <= profile.size(); ++j) {
    if (j % 2 == i.value % 2)
      continue;
    const PlayerIndex pj{j};
    total += qi * expected_payoff_against(profile, lo, pj) + (1 - qi) * expected_payoff_against(profile, hi, pj);
  }
  return total;
}

Rational coalition_expected_total(const MixedProfile& profile, std::span<const CoalitionMove> moves)
{
  if (moves.empty())
    throw std::invalid_argument("coalition must be non-empty");
  std::vector<bool> member(profile.size() + 1, false);
  for (const auto& m : moves) {
    check_index(profile, m.player);
    if (member[m.player.value])
      throw std::invalid_argument("player appears twice in the coalition deviation");
    if (!m.strategy.legal_for(m.player))
      throw std::invalid_argument("deviation strategy has the wrong parity");
    member[m.player.value] = true;
  }

  Rational total;
  for (const auto& m : moves)
    for (std::size_t j = 1; j <= profile.size(); ++j)
      if (!member[j] && j % 2 != m.player.value % 2)
        total += expected_payoff_against(profile, m.strategy, PlayerIndex{j});
  return total;
}

Rational coalition_baseline_total(const MixedProfile& profile, std::span<const PlayerIndex> coalition)
{
  // Internal pairs have independent marginals, so E[f(a,b)] + E[f(b,a)] = 0
  // and summing individual expected utilities gives the coalition total.
  Rational total;
  for (auto p : coalition)
    total += expected_utility(profile, p);
  return total;
}

std::vector<PlayerIndex> DeviationReport::coalition() const
{
  std::vector<PlayerIndex> out;
  out.reserve(deviation.size());
  for (const auto& m : deviation)
    out.push_back(m.player);
  return out;
}

VerificationReport verify_quasi_strong_uniform(std::size_t n)
{
  if (n < 2 || n > kEnumerationCap)
    throw std::out_of_range("player count must be in [2, " + std::to_string(kEnumerationCap) + "]");

  const MixedProfile uniform = MixedProfile::uniform(n);
  VerificationReport report;
  report.players = n;
  bool first = true;

  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    std::vector<PlayerIndex> members;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1u << i))
        members.push_back(PlayerIndex{i + 1});
    ++report.coalitions;

    const Rational baseline = coalition_baseline_total(uniform, members);
    std::vector<CoalitionMove> moves;
    for (std::uint32_t choice = 0; choice < (1u << members.size()); ++choice) {
      moves.clear();
      for (std::size_t k = 0; k < members.size(); ++k)
        moves.push_back({members[k], Strategy::from_bit(members[k], (choice >> k) & 1u)});
      const Rational gain = coalition_expected_total(uniform, moves) - baseline;
      if (first || gain > report.max_gain)
        report.max_gain = gain;
      first = false;
      ++report.pairs_checked;
    }
  }
  return report;
}

std::optional<DeviationReport> find_profitable_coalition_deviation(const MixedProfile& profile)
{
  const std::size_t n = profile.size();
  if (n < 2)
    throw std::invalid_argument("need at least two players");
  if (profile.is_uniform())
    return std::nullopt;

  // Most biased player; ties go to the lowest index.
  PlayerIndex target{1};
  Rational best = abs(profile.bias(target));
  for (std::size_t i = 2; i <= n; ++i) {
    Rational b = abs(profile.bias(PlayerIndex{i}));
    if (b > best) {
      best = b;
      target = PlayerIndex{i};
    }
  }

  // E[f(o, target)] for an opposite-parity o equals sign * b_o * b_target, with
  // sign +1 when the target is even and -1 when it is odd.
  const Rational b_target = profile.bias(target);
  const int sign = target.is_even() ? 1 : -1;
  // Pure bias the opposite players should adopt: +1 means play the lower strategy.
  const int desired = (b_target > 0 ? 1 : -1) * sign;

  // Coalition = everyone except the target. Its total is sum over opposite o
  // of E[f(o,target)], so gain = sum_o |b_t| * (1 - desired * b_o).
  DeviationReport rest;
  bool all_already_best = true;
  for (std::size_t i = 1; i <= n; ++i) {
    const PlayerIndex p{i};
    if (p == target)
      continue;
    if (p.is_even() == target.is_even()) {
      rest.deviation.push_back({p, Strategy::lower(p)});
      continue;
    }
    rest.deviation.push_back({p, desired > 0 ? Strategy::lower(p) : Strategy::upper(p)});
    const Rational b_o = profile.bias(p);
    rest.gain += abs(b_target) * (1 - desired * b_o);
    if (b_o != desired)
      all_already_best = false;
  }
  if (!all_already_best)
    return rest;

  // Every opposite player already plays the pure counter to the target's
  // favoured strategy; the target then profits by switching to its other one.
  std::size_t opposite = 0;
  for (std::size_t i = 1; i <= n; ++i)
    if (PlayerIndex{i}.is_even() != target.is_even())
      ++opposite;
  DeviationReport solo;
  solo.deviation.push_back({target, b_target > 0 ? Strategy::upper(target) : Strategy::lower(target)});
  solo.gain = Rational(static_cast<long>(opposite)) * (1 + abs(b_target));
  return solo;
}

FalsificationSummary falsify_random_profiles(std::size_t n, std::size_t samples, std::uint64_t seed)
{
  if (n < 2)
    throw std::invalid_argument("need at least two players");
  Rng rng = make_stream(seed, {n, 0xfa15});
  std::uniform_int_distribution<int> grid(0, 1000);

  FalsificationSummary summary{n, samples, 0};
  for (std::size_t s = 0; s < samples; ++s) {
    std::vector<Rational> q(n);
    bool biased = false;
    while (!biased) {
      for (auto& x : q) {
        const int k = grid(rng);
        x = Rational(k, 1000);
        x.canonicalize();
        if (k <= 490 || k >= 510)
          biased = true;
      }
    }
    const MixedProfile profile(std::move(q));
    const auto report = find_profitable_coalition_deviation(profile);
    if (!report)
      continue;
    const auto members = report->coalition();
    const Rational gain =
        coalition_expected_total(profile, report->deviation) - coalition_baseline_total(profile, members);
    if (gain > 0 && gain == report->gain)
      ++summary.falsified;
  }
  return summary;
}

Money reward_share(const StrategyCounts& counts, Strategy s, Money fee)
{
  const std::int64_t n_prime = counts.n_prime();
  if (n_prime <= 0)
    throw std::invalid_argument("no revealers to reward");
  if (fee < 0)
    throw std::invalid_argument("negative fee");
  const std::int64_t u = utility_from_counts(counts, s);
  const __int128 denom = static_cast<__int128>(n_prime) * n_prime;
  return static_cast<Money>(static_cast<__int128>(fee) * (n_prime + u) / denom);
}

Money reward_dust(const StrategyCounts& counts, Money fee)
{
  Money paid = 0;
  for (int s = 0; s < 4; ++s) {
    const Strategy st(s);
    if (counts.of(st) > 0)
      paid += counts.of(st) * reward_share(counts, st, fee);
  }
  return fee - paid;
}

RewardSplit reward_shares(const StrategyCounts& counts, std::span<const Strategy> revealers, Money fee)
{
  if (counts_of(revealers) != counts)
    throw std::invalid_argument("counts do not match revealer strategies");

  RewardSplit split;
  split.shares.reserve(revealers.size());
  Money paid = 0;
  for (auto s : revealers) {
    split.shares.push_back(reward_share(counts, s, fee));
    paid += split.shares.back();
  }
  if (revealers.empty())
    reward_share(counts, Strategy(0), fee); // throws for n' = 0
  split.dust = fee - paid;
  return split;
}

std::string to_string(const Rational& r)
{
  return r.get_num().get_str() + "/" + r.get_den().get_str();
}

} // namespace rbg::game
