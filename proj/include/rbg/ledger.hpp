#pragma once

#include "rbg/types.hpp"

#include <map>
#include <stdexcept>

namespace rbg::protocol {

class InsufficientFunds : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Account balances plus per-request escrow. Money only moves between the
/// two; the sole way to create it is open_account(), which fixes the genesis
/// supply.
class Ledger
{
public:
  void open_account(AccountId account, Money initial);

  Money balance(AccountId account) const;
  Money escrow(RequestId request) const;

  void transfer(AccountId from, AccountId to, Money amount);
  void deposit_to_escrow(AccountId from, RequestId request, Money amount);
  void release_from_escrow(RequestId request, AccountId to, Money amount);

  Money genesis_supply() const { return genesis_; }
  /// Sum over balances and escrow, recomputed from scratch.
  Money total_supply() const;
  Money total_escrow() const;

  const std::map<AccountId, Money>& balances() const { return balances_; }
  const std::map<RequestId, Money>& escrows() const { return escrow_; }

private:
  Money& debit_target(AccountId account, Money amount);

  std::map<AccountId, Money> balances_;
  std::map<RequestId, Money> escrow_;
  Money genesis_ = 0;
};

} // namespace rbg::protocol
