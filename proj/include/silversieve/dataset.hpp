#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "silversieve/common.hpp"

namespace silversieve {

// Ordered class names; the optional negative_index marks the no-relation
// class when the label space comes from a relation schema.
struct LabelSpace {
  std::vector<std::string> names;
  std::optional<int> negative_index;

  int size() const { return static_cast<int>(names.size()); }
  std::optional<int> index_of(const std::string& name) const;
  void validate() const;
};

struct Sample {
  std::int64_t id = 0;
  std::vector<double> features;
  std::optional<int> silver_label;
  std::optional<int> gold_label;
  std::optional<std::string> subj;
  std::optional<std::string> subj_type;
  std::optional<std::string> obj;
  std::optional<std::string> obj_type;
  // Raw sentence used as the premise when exporting entailment pairs.
  std::optional<std::string> text;
};

struct SilverDataset {
  LabelSpace label_space;
  int feature_dim = 0;
  std::vector<Sample> samples;

  int size() const { return static_cast<int>(samples.size()); }
  void validate() const;
  bool all_have_silver() const;
  bool all_have_gold() const;
  // Per-class counts of silver labels; unlabeled samples are not counted.
  std::vector<int> silver_counts() const;
};

enum class NoiseMode { kSymmetric, kPairwise };

struct SynthConfig {
  int num_classes = 0;
  // Explicit per-class sizes; when empty, sizes follow a power law
  // size_k ∝ (k+1)^(-power_law_exponent) normalized to total_n.
  std::vector<int> class_sizes;
  double power_law_exponent = 0.0;
  int total_n = 0;
  int feature_dim = 0;
  double mean_separation = 0.0;
  double noise_ratio = 0.0;
  NoiseMode noise_mode = NoiseMode::kSymmetric;
  // Row-stochastic confusion matrix with zero diagonal; used by kPairwise.
  std::vector<std::vector<double>> pairwise;
  std::uint64_t seed = 0;
  // When set, samples carry placeholder mentions and sentence text so the
  // pair-export stage has something to verbalize.
  bool with_mentions = false;

  void validate() const;
  std::vector<int> resolved_sizes() const;
};

struct DatasetStats {
  int n = 0;
  std::vector<int> class_counts;
  std::optional<double> noise_ratio;
};

SilverDataset load_jsonl(const std::string& path, const LabelSpace& label_space);
void save_jsonl(const SilverDataset& ds, const std::string& path);
SilverDataset generate_synthetic(const SynthConfig& cfg);
SilverDataset inject_noise(const SilverDataset& ds, double ratio, NoiseMode mode,
                           const std::vector<std::vector<double>>& pairwise,
                           std::uint64_t seed);
DatasetStats dataset_stats(const SilverDataset& ds);

}  // namespace silversieve
