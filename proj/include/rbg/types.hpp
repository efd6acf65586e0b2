#pragma once

#include <cstdint>

namespace rbg {

/// Integer base units. Balances never go negative; signed so payoffs can.
using Money = std::int64_t;

/// Milliseconds of simulated time.
using Timestamp = std::int64_t;
using Duration = std::int64_t;

using AccountId = std::uint64_t;
using RequestId = std::uint64_t;

/// 1-based registration order within a request.
using ParticipantNumber = std::uint64_t;

} // namespace rbg
