#pragma once

// Fee accrual as side-ledger bookkeeping attached to confirmations.
//
// Fees never touch circulating money: fee_of prices a transaction by its
// representation size (base + per-input + per-output weights), and accrue
// credits each validator that signed the confirmed transaction with
// floor(alpha * m * fee / M), where m is the validator's stake in the
// confirming certificate and M the total supply. Validators whose stake
// falls below the theta threshold (m < theta * M) accrue nothing — the
// small-validator penalty that pushes stake toward consolidation. The
// remainder lost to flooring is destroyed.
//
// alpha is a rational inflation multiplier. Issuing a transaction keeps a
// net cost for any party holding less than a third of the supply as long as
// alpha <= 3: accrued < alpha * fee / 3 <= fee. Larger alpha values break
// that bound, which the tests witness explicitly.

#include <cstdint>
#include <map>

#include "ackdag/confirm.hpp"
#include "ackdag/messages.hpp"

namespace ackdag {

struct FeePolicy {
  Money base_fee = 0;
  Money per_input = 0;
  Money per_output = 0;
  // Inflation multiplier alpha = alpha_num / alpha_den.
  std::uint64_t alpha_num = 1;
  std::uint64_t alpha_den = 1;
  // Minimum-stake threshold theta = theta_num / theta_den; a validator with
  // m * theta_den < theta_num * M gets a zero share.
  std::uint64_t theta_num = 0;
  std::uint64_t theta_den = 1;
};

// base + per_input * |inputs| + per_output * |outputs|.
Money fee_of(const FeePolicy &policy, const Transaction &tx);

class FeeLedger {
 public:
  // Credits every signer recorded in the certificate with its share of
  // fee_of(tx) and charges the full fee. The certificate must be for tx.
  void accrue(const FeePolicy &policy, const Transaction &tx,
              const ConfirmationCertificate &cert);

  Money accrued_of(const PublicKey &validator) const;
  const std::map<PublicKey, Money> &accrued() const { return accrued_; }
  Money total_charged() const { return total_charged_; }
  Money total_accrued() const { return total_accrued_; }

 private:
  std::map<PublicKey, Money> accrued_;
  Money total_charged_ = 0;
  Money total_accrued_ = 0;
};

// The share floor(alpha * m * fee / M) with the theta cutoff applied; wide
// arithmetic throughout. Exposed for direct property testing.
Money fee_share(const FeePolicy &policy, Money stake, Money total_money,
                Money fee);

}  // namespace ackdag
