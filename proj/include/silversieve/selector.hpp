#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "silversieve/trainer.hpp"

namespace silversieve {

enum class SelectionStage { kCore, kDiversity };

struct SelectionConfig {
  double eta = 0.05;
  int diversity_m = 0;

  void validate() const;
};

struct CleanSet {
  std::vector<std::int64_t> ids;
  std::map<std::int64_t, SelectionStage> stage;
  std::map<std::int64_t, int> predicted;
  double eta = 0.0;
  int diversity_m = 0;

  int size() const { return static_cast<int>(ids.size()); }
  bool contains(std::int64_t id) const { return stage.count(id) != 0; }
};

double total_confidence(const std::vector<ConfidenceRecord>& records);

// Top floor(eta*N) records by confidence, ties broken by lowest id. This is
// the subset maximizing the summed confidence at that size.
CleanSet select_by_proportion(const std::vector<ConfidenceRecord>& records, double eta);

// Proportional core plus up to m per-class diversity additions drawn from the
// remainder, partitioned by predicted class with floor quotas.
CleanSet select_class_aware(const std::vector<ConfidenceRecord>& records, double eta,
                            int diversity_m);

void save_clean_set(const CleanSet& clean, const std::string& path);
CleanSet load_clean_set(const std::string& path);

}  // namespace silversieve
