#include "rbg/protocol.hpp"
#include "rbg/random.hpp"

#include <doctest.h>

using namespace rbg;
using namespace rbg::protocol;

namespace {

constexpr Duration kTGen = 14133;
constexpr AccountId kClient = 1;

struct Fixture
{
  Engine engine{Config::from_block_time(kTGen)};

  Fixture()
  {
    engine.ledger().open_account(kClient, 1'000'000);
    for (AccountId a = 10; a < 20; ++a)
      engine.ledger().open_account(a, 100'000);
  }

  Timestamp reg_close(RequestId id) const { return engine.request(id).registration_closes(); }
};

commitment::Nonce nonce_of(std::uint8_t seed)
{
  commitment::Nonce n{};
  for (std::size_t i = 0; i < n.size(); ++i)
    n[i] = static_cast<std::uint8_t>(seed * 31 + i);
  return n;
}

commitment::Commitment commit_for(int bit, std::uint8_t seed, ParticipantNumber p, RequestId id)
{
  return commitment::commit({bit, nonce_of(seed), p, id});
}

Errc error_of(auto&& fn)
{
  try {
    fn();
  } catch (const ProtocolError& e) {
    return e.code();
  }
  FAIL("expected a ProtocolError");
  return Errc::InvalidArgument;
}

} // namespace

TEST_CASE("config")
{
  const auto c = Config::from_block_time(kTGen);
  CHECK(c.t_min == 141330);
  CHECK(c.t_reg == 42399);
  CHECK_NOTHROW(c.validate());
  CHECK_THROWS_AS((Config{10, 10}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((Config{10, 0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((Config{10, 3, 8}.validate()), std::invalid_argument);
  CHECK_THROWS_AS(Engine(Config{3, 10}), std::invalid_argument);
}

TEST_CASE("request_random_bit")
{
  Fixture f;
  CHECK(error_of([&] { f.engine.request_random_bit(kClient, 8, 100000, 5, 0); }) == Errc::DeadlineTooClose);

  const auto before = f.engine.ledger().balance(kClient);
  const RequestId a = f.engine.request_random_bit(kClient, 8, 200000, 5, 0);
  CHECK(a == 0);
  CHECK(f.engine.ledger().escrow(0) == 8);
  CHECK(f.engine.ledger().balance(kClient) == before - 8);

  const RequestId b = f.engine.request_random_bit(kClient, 8, 200000, 5, 0);
  CHECK(b == 1);
  CHECK(f.engine.ledger().escrow(1) == 8);
  CHECK(f.engine.request(0).registrants.empty());

  CHECK(error_of([&] { f.engine.request_random_bit(99, 8, 200000, 5, 0); }) == Errc::InsufficientFunds);
  CHECK(error_of([&] { f.engine.request_random_bit(kClient, -1, 200000, 5, 0); }) == Errc::InvalidArgument);
  CHECK(error_of([&] { f.engine.request(7); }) == Errc::UnknownRequest);
  CHECK(f.engine.ledger().total_supply() == f.engine.ledger().genesis_supply());
}

TEST_CASE("request_random_word splits the fee")
{
  Fixture f;
  const auto ids = f.engine.request_random_word(kClient, 32, 33, 200000, 5, 0);
  REQUIRE(ids.size() == 32);
  CHECK(f.engine.request(ids[0]).fee == 2);
  for (std::size_t i = 1; i < ids.size(); ++i) {
    CHECK(ids[i] == ids[i - 1] + 1);
    CHECK(f.engine.request(ids[i]).fee == 1);
  }
  const auto one = f.engine.request_random_word(kClient, 1, 9, 200000, 5, 0);
  CHECK(one.size() == 1);
  CHECK(f.engine.request(one[0]).fee == 9);
  CHECK(error_of([&] { f.engine.request_random_word(kClient, 0, 9, 200000, 5, 0); }) == Errc::InvalidArgument);
}

TEST_CASE("registration")
{
  Fixture f;
  const RequestId id = f.engine.request_random_bit(kClient, 8, 200000, 5, 0);
  CHECK(f.engine.register_participant(id, 10, 5, commit_for(0, 1, 1, id), 0) == 1);

  const auto supply = f.engine.ledger().balances();
  CHECK(error_of([&] { f.engine.register_participant(id, 12, 4, commit_for(0, 3, 3, id), 10); }) ==
        Errc::WrongDeposit);
  CHECK(f.engine.ledger().balances() == supply);
  CHECK(error_of([&] { f.engine.register_participant(id, 55, 5, commit_for(0, 3, 3, id), 10); }) ==
        Errc::InsufficientFunds);
  CHECK(f.engine.register_participant(id, 11, 5, commit_for(1, 2, 2, id), f.reg_close(id)) == 2);
  CHECK(error_of([&] { f.engine.register_participant(id, 12, 5, commit_for(0, 3, 3, id), f.reg_close(id) + 1); }) ==
        Errc::RegistrationClosed);
  CHECK(error_of([&] { f.engine.register_participant(id, 12, 5, commit_for(0, 3, 3, id), 10); }) ==
        Errc::InvalidArgument);
  CHECK(f.engine.request(id).registrants.size() == 2);
  CHECK(f.engine.ledger().escrow(id) == 18);
}

TEST_CASE("reveal window and preimage checks")
{
  Fixture f;
  const RequestId id = f.engine.request_random_bit(kClient, 8, 200000, 5, 0);
  f.engine.register_participant(id, 10, 5, commit_for(1, 1, 1, id), 0);
  f.engine.register_participant(id, 11, 5, commit_for(0, 2, 2, id), 0);

  auto r = f.engine.reveal(id, 1, 1, nonce_of(1), f.reg_close(id));
  CHECK_FALSE(r.accepted);
  CHECK(r.reason == Errc::OutsideRevealWindow);

  const Timestamp t = f.reg_close(id) + 1;
  r = f.engine.reveal(id, 1, 1, nonce_of(9), t);
  CHECK(r.reason == Errc::BadPreimage);
  CHECK(f.engine.request(id).counts.n_prime() == 0);

  CHECK(f.engine.reveal(id, 1, 0, nonce_of(1), t).reason == Errc::BadPreimage);
  CHECK(f.engine.reveal(id, 3, 1, nonce_of(1), t).reason == Errc::UnknownParticipant);
  CHECK(f.engine.reveal(99, 1, 1, nonce_of(1), t).reason == Errc::UnknownRequest);

  r = f.engine.reveal(id, 1, 1, nonce_of(1), t);
  CHECK(r.accepted);
  // Participant 1 is odd; bit 1 maps to strategy 3.
  CHECK(f.engine.request(id).counts == game::StrategyCounts{{0, 0, 0, 1}});
  CHECK(f.engine.reveal(id, 1, 1, nonce_of(1), t).reason == Errc::AlreadyRevealed);

  CHECK(f.engine.reveal(id, 2, 0, nonce_of(2), 200000).accepted);
  CHECK(f.engine.request(id).counts == game::StrategyCounts{{1, 0, 0, 1}});
  CHECK(f.engine.reveal(id, 2, 0, nonce_of(2), 200001).reason == Errc::OutsideRevealWindow);
  CHECK(f.engine.reveal(id, 2, 0, nonce_of(2), 100).reason == Errc::InvalidArgument);
}

TEST_CASE("a commitment cannot be replayed on another request")
{
  Fixture f;
  const RequestId a = f.engine.request_random_bit(kClient, 8, 200000, 5, 0);
  const RequestId b = f.engine.request_random_bit(kClient, 8, 200000, 5, 0);
  const auto c = commit_for(1, 4, 1, a);
  f.engine.register_participant(a, 10, 5, c, 0);
  f.engine.register_participant(b, 11, 5, c, 0);
  const Timestamp t = f.reg_close(a) + 1;
  CHECK(f.engine.reveal(a, 1, 1, nonce_of(4), t).accepted);
  CHECK(f.engine.reveal(b, 1, 1, nonce_of(4), t).reason == Errc::BadPreimage);
}

TEST_CASE("claims")
{
  Fixture f;
  const RequestId id = f.engine.request_random_bit(kClient, 8, 200000, 5, 0);
  f.engine.register_participant(id, 10, 5, commit_for(1, 1, 1, id), 0);
  f.engine.register_participant(id, 11, 5, commit_for(0, 2, 2, id), 0);
  REQUIRE(f.engine.reveal(id, 1, 1, nonce_of(1), f.reg_close(id) + 1).accepted);

  CHECK(error_of([&] { f.engine.return_deposit(id, 1, 200000); }) == Errc::TooEarly);
  CHECK(error_of([&] { f.engine.request_reward(id, 1, 200000); }) == Errc::TooEarly);

  const auto before = f.engine.ledger().balance(10);
  CHECK(f.engine.return_deposit(id, 1, 200001) == 5);
  CHECK(f.engine.ledger().balance(10) == before + 5);
  CHECK(error_of([&] { f.engine.return_deposit(id, 1, 200001); }) == Errc::AlreadyClaimed);
  CHECK(error_of([&] { f.engine.return_deposit(id, 2, 200001); }) == Errc::NotRevealed);
  CHECK(error_of([&] { f.engine.return_deposit(id, 3, 200001); }) == Errc::UnknownParticipant);

  CHECK(f.engine.request_reward(id, 1, 200001) == 8);
  CHECK(error_of([&] { f.engine.request_reward(id, 1, 200001); }) == Errc::AlreadyClaimed);
  CHECK(error_of([&] { f.engine.request_reward(id, 2, 200001); }) == Errc::NotRevealed);
  CHECK(f.engine.ledger().escrow(id) == 5);
}

TEST_CASE("reward follows the counts")
{
  Fixture f;
  const RequestId id = f.engine.request_random_bit(kClient, 8, 200000, 5, 0);
  f.engine.register_participant(id, 10, 5, commit_for(0, 1, 1, id), 0); // odd, bit 0 -> 1
  f.engine.register_participant(id, 11, 5, commit_for(0, 2, 2, id), 0); // even, bit 0 -> 0
  const Timestamp t = f.reg_close(id) + 1;
  f.engine.reveal(id, 1, 0, nonce_of(1), t);
  f.engine.reveal(id, 2, 0, nonce_of(2), t);
  CHECK(f.engine.request_reward(id, 1, 200001) == 6);
  CHECK(f.engine.request_reward(id, 2, 200001) == 2);
}

TEST_CASE("settlement outcomes")
{
  SUBCASE("success is the xor of the bits")
  {
    Fixture f;
    const RequestId id = f.engine.request_random_bit(kClient, 9, 200000, 5, 0);
    const int bits[] = {1, 0, 1};
    for (ParticipantNumber p = 1; p <= 3; ++p)
      f.engine.register_participant(id, 9 + p, 5, commit_for(bits[p - 1], p, p, id), 0);
    for (ParticipantNumber p = 1; p <= 3; ++p)
      CHECK(f.engine.reveal(id, p, bits[p - 1], nonce_of(p), f.reg_close(id) + 1).accepted);

    CHECK(error_of([&] { f.engine.get_output(id, kClient, 200000); }) == Errc::TooEarly);
    CHECK(error_of([&] { f.engine.get_output(id, 10, 200001); }) == Errc::NotClient);
    const auto out = f.engine.get_output(id, kClient, 200001);
    CHECK(out == OutputKind{output::Success{0}});
    CHECK(f.engine.get_output(id, kClient, 999999) == out);
    CHECK(f.engine.request(id).settlement->settled_at == 200001);
  }
  SUBCASE("a withheld reveal is a penalty")
  {
    Fixture f;
    const RequestId id = f.engine.request_random_bit(kClient, 8, 200000, 5, 0);
    f.engine.register_participant(id, 10, 5, commit_for(1, 1, 1, id), 0);
    f.engine.register_participant(id, 11, 5, commit_for(0, 2, 2, id), 0);
    f.engine.reveal(id, 1, 1, nonce_of(1), f.reg_close(id) + 1);
    const auto before = f.engine.ledger().balance(kClient);
    const auto out = f.engine.get_output(id, kClient, 200001);
    const auto* p = std::get_if<output::Penalty>(&out);
    REQUIRE(p);
    CHECK(p->bit == 1);
    CHECK(p->compensation >= 5);
    CHECK(p->compensation == 5);
    CHECK(f.engine.ledger().balance(kClient) == before + 5);
    CHECK(f.engine.request(id).registrants[1].reveal_state == RevealState::Invalid);
  }
  SUBCASE("no registrants is a failure with a refund")
  {
    Fixture f;
    const RequestId id = f.engine.request_random_bit(kClient, 8, 200000, 5, 0);
    const auto before = f.engine.ledger().balance(kClient);
    CHECK(f.engine.get_output(id, kClient, 200001) == OutputKind{output::Failure{8, 0}});
    CHECK(f.engine.ledger().balance(kClient) == before + 8);
    CHECK(f.engine.ledger().escrow(id) == 0);
  }
  SUBCASE("registrants but no reveals is a failure that also pays the deposits")
  {
    Fixture f;
    const RequestId id = f.engine.request_random_bit(kClient, 8, 200000, 5, 0);
    f.engine.register_participant(id, 10, 5, commit_for(1, 1, 1, id), 0);
    CHECK(f.engine.get_output(id, kClient, 200001) == OutputKind{output::Failure{8, 5}});
    CHECK(f.engine.ledger().escrow(id) == 0);
  }
}

TEST_CASE("flipping any revealed bit flips the output")
{
  Rng rng = make_stream(301, {});
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng() % 6;
    std::vector<int> bits(n);
    for (auto& b : bits)
      b = static_cast<int>(rng() & 1);
    const std::size_t flip = rng() % n;

    auto run = [&](const std::vector<int>& b) {
      Fixture f;
      const RequestId id = f.engine.request_random_bit(kClient, 100, 200000, 5, 0);
      for (ParticipantNumber p = 1; p <= n; ++p)
        f.engine.register_participant(id, 9 + p, 5, commit_for(b[p - 1], p, p, id), 0);
      for (ParticipantNumber p = 1; p <= n; ++p)
        f.engine.reveal(id, p, b[p - 1], nonce_of(p), f.reg_close(id) + 1);
      return std::get<output::Success>(f.engine.get_output(id, kClient, 200001)).bit;
    };
    auto flipped = bits;
    flipped[flip] ^= 1;
    REQUIRE(run(bits) != run(flipped));
  }
}

TEST_CASE("fuzzed operation sequences conserve supply and drain escrow")
{
  Rng rng = make_stream(302, {});
  const Config cfg{10, 3};
  for (int trial = 0; trial < 10000; ++trial) {
    Ledger ledger;
    ledger.open_account(kClient, 1000);
    for (AccountId a = 10; a < 16; ++a)
      ledger.open_account(a, static_cast<Money>(rng() % 40));
    Engine engine(cfg, std::move(ledger));
    const Money genesis = engine.ledger().genesis_supply();

    struct Secret
    {
      RequestId id;
      ParticipantNumber p;
      int bit;
      std::uint8_t seed;
    };
    std::vector<Secret> secrets;
    const int steps = 5 + static_cast<int>(rng() % 40);
    Timestamp now = 0;
    for (int s = 0; s < steps; ++s) {
      now += static_cast<Timestamp>(rng() % 3);
      try {
        switch (rng() % 6) {
        case 0: {
          const Money fee = static_cast<Money>(rng() % 50) - 2;
          const Money v = static_cast<Money>(rng() % 8);
          if (rng() % 4 == 0)
            engine.request_random_word(kClient, 1 + rng() % 3, fee, now + 10 + rng() % 10, v, now);
          else
            engine.request_random_bit(kClient, fee, now + 10 + rng() % 10, v, now);
          break;
        }
        case 1: {
          if (engine.request_count() == 0)
            break;
          const RequestId id = rng() % engine.request_count();
          const int bit = static_cast<int>(rng() & 1);
          const auto seed = static_cast<std::uint8_t>(rng());
          const ParticipantNumber p = engine.request(id).registrants.size() + 1;
          const Money dep = engine.request(id).value_bound + (rng() % 5 == 0 ? 1 : 0);
          engine.register_participant(id, 10 + rng() % 6, dep, commit_for(bit, seed, p, id), now);
          secrets.push_back({id, p, bit, seed});
          break;
        }
        case 2: {
          if (secrets.empty())
            break;
          const auto& sec = secrets[rng() % secrets.size()];
          const int bit = rng() % 5 == 0 ? sec.bit ^ 1 : sec.bit;
          engine.reveal(sec.id, sec.p, bit, nonce_of(sec.seed), now);
          break;
        }
        case 3:
          if (!secrets.empty()) {
            const auto& sec = secrets[rng() % secrets.size()];
            engine.return_deposit(sec.id, sec.p, now);
          }
          break;
        case 4:
          if (!secrets.empty()) {
            const auto& sec = secrets[rng() % secrets.size()];
            engine.request_reward(sec.id, sec.p, now);
          }
          break;
        case 5:
          if (engine.request_count() > 0)
            engine.get_output(rng() % engine.request_count(), rng() % 3 ? kClient : 10, now);
          break;
        }
      } catch (const ProtocolError&) {
      }
      REQUIRE(engine.ledger().total_supply() == genesis);
    }

    // Close everything out: settle every request and make every valid claim.
    const Timestamp end = 1000;
    for (RequestId id = 0; id < engine.request_count(); ++id) {
      engine.get_output(id, kClient, end);
      const auto& r = engine.request(id);
      for (ParticipantNumber p = 1; p <= r.registrants.size(); ++p)
        if (r.registrants[p - 1].reveal_state == RevealState::Revealed) {
          if (!r.registrants[p - 1].deposit_returned)
            engine.return_deposit(id, p, end);
          if (!r.registrants[p - 1].reward_claimed)
            engine.request_reward(id, p, end);
        }
      REQUIRE(engine.ledger().escrow(id) == 0);

      const auto& s = *engine.request(id).settlement;
      if (std::holds_alternative<output::Success>(s.output)) {
        REQUIRE(r.all_revealed());
        REQUIRE_FALSE(r.registrants.empty());
      } else if (auto pen = std::get_if<output::Penalty>(&s.output)) {
        REQUIRE(pen->compensation >= r.value_bound);
        REQUIRE(r.counts.n_prime() > 0);
      } else {
        REQUIRE(r.counts.n_prime() == 0);
        REQUIRE(std::get<output::Failure>(s.output).refund == r.fee);
      }
    }
    REQUIRE(engine.ledger().total_supply() == genesis);
    REQUIRE(engine.ledger().total_escrow() == 0);
  }
}

TEST_CASE("snapshot uses the documented field names")
{
  Fixture f;
  const RequestId id = f.engine.request_random_bit(kClient, 8, 200000, 5, 0);
  f.engine.register_participant(id, 10, 5, commit_for(1, 1, 1, id), 0);
  const auto j = Engine::to_json(f.engine.request(id));
  CHECK(j["valueBound"] == 5);
  CHECK(j["createdAt"] == 0);
  CHECK(j["registrants"][0]["revealState"] == "pending");
  CHECK(j["counts"]["nPrime"] == 0);
  CHECK(j["settlement"] == "unsettled");
  const auto snap = f.engine.snapshot();
  CHECK(snap["ledger"]["totalSupply"] == snap["ledger"]["genesisSupply"]);
}
