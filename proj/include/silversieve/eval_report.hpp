#pragma once

#include <set>
#include <string>
#include <vector>

#include "silversieve/selector.hpp"

namespace silversieve {

struct Histogram {
  std::vector<int> clean;
  std::vector<int> noisy;
};

struct DetectionReport {
  double detection_accuracy = 0.0;
  double silver_accuracy = 0.0;
  std::vector<int> per_class_selected_counts;
  int classes_covered = 0;
  double majority_accuracy = 0.0;
  double minority_accuracy = 0.0;
  Histogram histogram;
};

struct ReportEcho {
  double eta = 0.0;
  int diversity_m = 0;
  std::string loss;
  std::uint64_t seed = 0;
};

double detection_accuracy(const CleanSet& clean, const SilverDataset& ds);

std::pair<int, std::vector<int>> class_coverage(const CleanSet& clean,
                                                const SilverDataset& ds);

// Classes sorted by count descending (ties by index); first ceil(|Y|/2) are
// majority. Counts come from silver labels unless use_gold is set.
std::pair<std::set<int>, std::set<int>> majority_minority_split(const SilverDataset& ds,
                                                               bool use_gold = false);

Histogram score_histogram(const std::vector<ConfidenceRecord>& records,
                          const SilverDataset& ds, int bins);

DetectionReport build_report(const CleanSet& clean, const SilverDataset& ds,
                             const std::vector<ConfidenceRecord>& records, int bins,
                             bool use_gold_split = false);

std::string report_to_json(const DetectionReport& report, const ReportEcho& echo);

}  // namespace silversieve
