#pragma once

// The Random Bit Generation game: n players, even-numbered ones choose from
// {0,2}, odd-numbered ones from {1,3}, and every opposite-parity pair plays a
// mod-4 minigame worth +1/-1. All game-theoretic quantities are exact.

#include "rbg/types.hpp"

#include <gmpxx.h>

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rbg::game {

using Rational = mpq_class;

/// 1-based player index; its parity fixes the strategy set.
struct PlayerIndex
{
  std::size_t value = 1;

  constexpr bool is_even() const { return value % 2 == 0; }
  friend constexpr auto operator<=>(PlayerIndex, PlayerIndex) = default;
};

class Strategy
{
public:
  explicit Strategy(int value);

  /// Even player with bit b plays 2b, odd player plays 2b+1.
  static Strategy from_bit(PlayerIndex player, int bit);
  /// The strategy with probability q in a MixedProfile (0 for even, 1 for odd).
  static Strategy lower(PlayerIndex player);
  static Strategy upper(PlayerIndex player);

  constexpr int value() const { return value_; }
  constexpr int bit() const { return value_ / 2; }
  constexpr bool legal_for(PlayerIndex player) const
  {
    return static_cast<std::size_t>(value_ % 2) == player.value % 2;
  }

  friend constexpr bool operator==(Strategy, Strategy) = default;

private:
  int value_;
};

/// f(a,b): +1 if a == b+1 (mod 4), -1 if a == b-1 (mod 4), 0 otherwise.
int minigame_payoff(Strategy a, Strategy b);

/// A pure strategy per player, validated against player parity.
class RbgOutcome
{
public:
  explicit RbgOutcome(std::vector<Strategy> strategies);

  std::size_t size() const { return strategies_.size(); }
  Strategy operator[](PlayerIndex i) const { return strategies_.at(i.value - 1); }
  const std::vector<Strategy>& strategies() const { return strategies_; }

private:
  std::vector<Strategy> strategies_;
};

/// n0..n3 tallies of revealed strategies; nPrime is their sum.
struct StrategyCounts
{
  std::array<std::int64_t, 4> n{0, 0, 0, 0};

  std::int64_t n_prime() const { return n[0] + n[1] + n[2] + n[3]; }
  std::int64_t of(Strategy s) const { return n[static_cast<std::size_t>(s.value())]; }
  void add(Strategy s) { ++n[static_cast<std::size_t>(s.value())]; }

  friend bool operator==(const StrategyCounts&, const StrategyCounts&) = default;
};

StrategyCounts counts_of(std::span<const Strategy> strategies);

/// Sum of minigame payoffs of player i against everyone else.
std::int64_t outcome_utility(const RbgOutcome& outcome, PlayerIndex i);

/// Utility of any player who played s: n_{s-1} - n_{s+1} (indices mod 4).
std::int64_t utility_from_counts(const StrategyCounts& counts, Strategy s);

/// Per-player probability q_i of the lower legal strategy.
class MixedProfile
{
public:
  explicit MixedProfile(std::vector<Rational> lower_probabilities);
  static MixedProfile uniform(std::size_t n);

  std::size_t size() const { return q_.size(); }
  const Rational& lower_probability(PlayerIndex i) const { return q_.at(i.value - 1); }
  Rational probability(PlayerIndex i, Strategy s) const;
  /// 2q - 1, i.e. P(lower) - P(upper).
  Rational bias(PlayerIndex i) const;
  bool is_uniform() const;

private:
  std::vector<Rational> q_;
};

Rational expected_utility(const MixedProfile& profile, PlayerIndex i);

struct CoalitionMove
{
  PlayerIndex player;
  Strategy strategy;
};

/// Total expected utility of the coalition when its members play `moves` and
/// everyone else follows `profile`. Pairs internal to the coalition cancel and
/// are skipped.
Rational coalition_expected_total(const MixedProfile& profile, std::span<const CoalitionMove> moves);

/// Total expected utility of a set of players under the profile itself.
Rational coalition_baseline_total(const MixedProfile& profile, std::span<const PlayerIndex> coalition);

struct DeviationReport
{
  std::vector<CoalitionMove> deviation; // one move per coalition member, ascending index
  Rational gain;

  std::vector<PlayerIndex> coalition() const;
};

inline constexpr std::size_t kEnumerationCap = 8;

struct VerificationReport
{
  std::size_t players = 0;
  std::size_t coalitions = 0;
  std::size_t pairs_checked = 0; // coalition x pure deviation
  Rational max_gain;
};

/// Exhaustive check that no coalition gains by a pure deviation from the
/// uniform profile. Pure deviations suffice because expected utility is
/// multilinear in the members' marginals. Throws std::out_of_range unless
/// 2 <= n <= kEnumerationCap.
VerificationReport verify_quasi_strong_uniform(std::size_t n);

/// For a non-uniform profile, builds a coalition deviation with strictly
/// positive gain; std::nullopt for the uniform profile.
std::optional<DeviationReport> find_profitable_coalition_deviation(const MixedProfile& profile);

struct FalsificationSummary
{
  std::size_t players = 0;
  std::size_t samples = 0;
  std::size_t falsified = 0; // deviation found and independently confirmed positive
};

/// Samples random biased profiles (marginals on a 1/1000 grid, at least one at
/// distance >= 1/100 from 1/2) and checks each yields a confirmed deviation.
FalsificationSummary falsify_random_profiles(std::size_t n, std::size_t samples, std::uint64_t seed);

struct RewardSplit
{
  std::vector<Money> shares; // parallel to the revealers passed in
  Money dust = 0;
};

/// floor(fee * (n' + u) / n'^2) for a revealer who played s.
Money reward_share(const StrategyCounts& counts, Strategy s, Money fee);

/// Total left over after every revealer takes reward_share; 0 <= dust < n'.
Money reward_dust(const StrategyCounts& counts, Money fee);

/// share_p = floor(fee * (n' + u_p) / n'^2); dust is what floor leaves behind.
/// Throws std::invalid_argument if nPrime is 0, the fee is negative, or the
/// counts do not match the revealer strategies.
RewardSplit reward_shares(const StrategyCounts& counts, std::span<const Strategy> revealers, Money fee);

std::string to_string(const Rational& r); // always "num/den"

} // namespace rbg::game
