#include "ackdag/econ.hpp"

#include <cassert>

#include "ackdag/codec.hpp"

namespace ackdag {

Money fee_of(const FeePolicy &policy, const Transaction &tx) {
  return policy.base_fee + policy.per_input * tx.inputs.size() +
         policy.per_output * tx.outputs.size();
}

Money fee_share(const FeePolicy &policy, Money stake, Money total_money,
                Money fee) {
  if (total_money == 0 || stake == 0) return 0;
  using Wide = unsigned __int128;
  // Small-validator penalty: below theta * M the share is zero.
  if (Wide(stake) * policy.theta_den < Wide(policy.theta_num) * total_money) {
    return 0;
  }
  Wide numer = Wide(policy.alpha_num) * stake * fee;
  Wide denom = Wide(policy.alpha_den) * total_money;
  return static_cast<Money>(numer / denom);
}

void FeeLedger::accrue(const FeePolicy &policy, const Transaction &tx,
                       const ConfirmationCertificate &cert) {
  assert(cert.subject == id_of(Message{tx}));
  const Money fee = fee_of(policy, tx);
  total_charged_ += fee;
  for (const auto &[validator, stake] : cert.signer_stakes.stakes) {
    Money share = fee_share(policy, stake, cert.total_money, fee);
    if (share == 0) continue;
    accrued_[validator] += share;
    total_accrued_ += share;
  }
}

Money FeeLedger::accrued_of(const PublicKey &validator) const {
  auto it = accrued_.find(validator);
  return it == accrued_.end() ? 0 : it->second;
}

}  // namespace ackdag
