#include "silversieve/eval_report.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>

namespace silversieve {

using ordered_json = nlohmann::ordered_json;

namespace {

std::map<std::int64_t, const Sample*> index_by_id(const SilverDataset& ds) {
  std::map<std::int64_t, const Sample*> out;
  for (const auto& s : ds.samples) out[s.id] = &s;
  return out;
}

const Sample& sample_for(const std::map<std::int64_t, const Sample*>& index,
                         std::int64_t id) {
  auto it = index.find(id);
  if (it == index.end()) {
    throw ContractError("selected id not in dataset: " + std::to_string(id));
  }
  return *it->second;
}

}  // namespace

double detection_accuracy(const CleanSet& clean, const SilverDataset& ds) {
  if (clean.ids.empty()) throw ContractError("detection accuracy of an empty selection");
  const auto index = index_by_id(ds);
  int correct = 0;
  for (std::int64_t id : clean.ids) {
    const Sample& s = sample_for(index, id);
    if (!s.silver_label || !s.gold_label) {
      throw MissingGoldError("selected sample lacks silver or gold label: " +
                             std::to_string(id));
    }
    if (*s.silver_label == *s.gold_label) ++correct;
  }
  return static_cast<double>(correct) / clean.ids.size();
}

std::pair<int, std::vector<int>> class_coverage(const CleanSet& clean,
                                                const SilverDataset& ds) {
  const auto index = index_by_id(ds);
  std::vector<int> counts(ds.label_space.size(), 0);
  for (std::int64_t id : clean.ids) {
    const Sample& s = sample_for(index, id);
    if (s.silver_label) ++counts[*s.silver_label];
  }
  const int covered =
      static_cast<int>(std::count_if(counts.begin(), counts.end(),
                                     [](int c) { return c > 0; }));
  return {covered, counts};
}

std::pair<std::set<int>, std::set<int>> majority_minority_split(const SilverDataset& ds,
                                                               bool use_gold) {
  const int num_classes = ds.label_space.size();
  std::vector<int> counts(num_classes, 0);
  for (const auto& s : ds.samples) {
    const auto& label = use_gold ? s.gold_label : s.silver_label;
    if (!label) {
      throw ContractError("majority/minority split requires labels on all samples");
    }
    ++counts[*label];
  }
  std::vector<int> order(num_classes);
  for (int i = 0; i < num_classes; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (counts[a] != counts[b]) return counts[a] > counts[b];
    return a < b;
  });
  const int cut = (num_classes + 1) / 2;
  std::set<int> majority(order.begin(), order.begin() + cut);
  std::set<int> minority(order.begin() + cut, order.end());
  return {majority, minority};
}

Histogram score_histogram(const std::vector<ConfidenceRecord>& records,
                          const SilverDataset& ds, int bins) {
  if (bins <= 0) throw ContractError("bins must be positive");
  const auto index = index_by_id(ds);
  Histogram h;
  h.clean.assign(bins, 0);
  h.noisy.assign(bins, 0);
  for (const auto& r : records) {
    const Sample& s = sample_for(index, r.id);
    if (!s.silver_label || !s.gold_label) {
      throw MissingGoldError("histogram requires silver and gold labels");
    }
    int bin = static_cast<int>(r.confidence * bins);
    bin = std::clamp(bin, 0, bins - 1);
    if (*s.silver_label == *s.gold_label) {
      ++h.clean[bin];
    } else {
      ++h.noisy[bin];
    }
  }
  return h;
}

namespace {

// Detection accuracy restricted to selected ids whose silver class is in the
// given set; 0 when the restriction is empty.
double subset_accuracy(const CleanSet& clean, const SilverDataset& ds,
                       const std::set<int>& classes) {
  const auto index = index_by_id(ds);
  int total = 0, correct = 0;
  for (std::int64_t id : clean.ids) {
    const Sample& s = sample_for(index, id);
    if (!s.silver_label || !classes.count(*s.silver_label)) continue;
    ++total;
    if (s.gold_label && *s.silver_label == *s.gold_label) ++correct;
  }
  return total > 0 ? static_cast<double>(correct) / total : 0.0;
}

}  // namespace

DetectionReport build_report(const CleanSet& clean, const SilverDataset& ds,
                             const std::vector<ConfidenceRecord>& records, int bins,
                             bool use_gold_split) {
  if (!ds.all_have_gold()) throw MissingGoldError("report requires gold labels");
  DetectionReport report;
  report.detection_accuracy = detection_accuracy(clean, ds);
  const auto stats = dataset_stats(ds);
  report.silver_accuracy = stats.noise_ratio ? 1.0 - *stats.noise_ratio : 1.0;
  auto [covered, counts] = class_coverage(clean, ds);
  report.classes_covered = covered;
  report.per_class_selected_counts = counts;
  auto [majority, minority] = majority_minority_split(ds, use_gold_split);
  report.majority_accuracy = subset_accuracy(clean, ds, majority);
  report.minority_accuracy = subset_accuracy(clean, ds, minority);
  report.histogram = score_histogram(records, ds, bins);
  return report;
}

std::string report_to_json(const DetectionReport& report, const ReportEcho& echo) {
  ordered_json obj;
  obj["schema_version"] = 1;
  obj["detection_accuracy"] = report.detection_accuracy;
  obj["silver_accuracy"] = report.silver_accuracy;
  obj["per_class_selected_counts"] = report.per_class_selected_counts;
  obj["classes_covered"] = report.classes_covered;
  obj["majority_accuracy"] = report.majority_accuracy;
  obj["minority_accuracy"] = report.minority_accuracy;
  obj["histogram"] = {{"clean", report.histogram.clean},
                      {"noisy", report.histogram.noisy}};
  obj["config"] = {{"eta", echo.eta},
                   {"m", echo.diversity_m},
                   {"loss", echo.loss},
                   {"seed", echo.seed}};
  return obj.dump(2);
}

}  // namespace silversieve
