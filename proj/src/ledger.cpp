#include "rbg/ledger.hpp"

#include <string>

namespace rbg::protocol {

void Ledger::open_account(AccountId account, Money initial)
{
  if (initial < 0)
    throw std::invalid_argument("initial balance must be non-negative");
  if (balances_.contains(account))
    throw std::invalid_argument("account " + std::to_string(account) + " already exists");
  balances_[account] = initial;
  genesis_ += initial;
}

Money Ledger::balance(AccountId account) const
{
  auto it = balances_.find(account);
  return it == balances_.end() ? 0 : it->second;
}

Money Ledger::escrow(RequestId request) const
{
  auto it = escrow_.find(request);
  return it == escrow_.end() ? 0 : it->second;
}

Money& Ledger::debit_target(AccountId account, Money amount)
{
  if (amount < 0)
    throw std::invalid_argument("negative amount");
  auto it = balances_.find(account);
  if (it == balances_.end() || it->second < amount)
    throw InsufficientFunds("account " + std::to_string(account) + " cannot cover " + std::to_string(amount));
  return it->second;
}

void Ledger::transfer(AccountId from, AccountId to, Money amount)
{
  debit_target(from, amount) -= amount;
  balances_[to] += amount;
}

void Ledger::deposit_to_escrow(AccountId from, RequestId request, Money amount)
{
  debit_target(from, amount) -= amount;
  escrow_[request] += amount;
}

void Ledger::release_from_escrow(RequestId request, AccountId to, Money amount)
{
  if (amount < 0)
    throw std::invalid_argument("negative amount");
  auto it = escrow_.find(request);
  if (it == escrow_.end() || it->second < amount)
    throw std::logic_error("escrow of request " + std::to_string(request) + " cannot cover " + std::to_string(amount));
  it->second -= amount;
  balances_[to] += amount;
}

Money Ledger::total_escrow() const
{
  Money total = 0;
  for (const auto& [_, m] : escrow_)
    total += m;
  return total;
}

Money Ledger::total_supply() const
{
  Money total = total_escrow();
  for (const auto& [_, m] : balances_)
    total += m;
  return total;
}

} // namespace rbg::protocol
