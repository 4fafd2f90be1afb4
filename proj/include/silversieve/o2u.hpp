#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "silversieve/selector.hpp"
#include "silversieve/trainer.hpp"

namespace silversieve {

struct CyclicalSchedule {
  double r_max = 5e-2;
  double r_min = 1e-3;
  int epochs_per_round = 5;
  int rounds = 1;
  int pretrain_epochs = 2;
  double pretrain_lr = 1e-2;
  int batch_size = 32;

  void validate() const;
  // The constants the source experiments used for a large encoder.
  static CyclicalSchedule encoder_preset();
};

struct LossLedger {
  std::map<std::int64_t, double> loss_sum;
  int epochs_recorded = 0;
};

struct O2uResult {
  LinearSoftmaxModel model;
  LossLedger ledger;
  std::vector<ConfidenceRecord> records;
};

// Linear decay within one cyclical round: r(0)=r_max, r(E)=r_min.
double lr_at(int t, const CyclicalSchedule& sched);

O2uResult o2u_detect(const SilverDataset& ds, const CyclicalSchedule& sched,
                     std::uint64_t seed);

// floor(eta*N) ids with the smallest accumulated loss, ties by lowest id.
CleanSet o2u_select(const LossLedger& ledger, double eta);

void save_ledger(const LossLedger& ledger, const std::string& path);

}  // namespace silversieve
