#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "silversieve/dataset.hpp"

namespace silversieve {

enum class LossKind { kCrossEntropy, kNegative, kWeightedNegative };

LossKind loss_kind_from_name(const std::string& name);
const char* loss_kind_name(LossKind kind);

struct LinearSoftmaxModel {
  int num_classes = 0;
  int dim = 0;
  std::vector<double> weights;  // row-major, num_classes x dim
  std::vector<double> bias;

  static LinearSoftmaxModel zeros(int num_classes, int dim);
  double weight_at(int cls, int d) const { return weights[cls * dim + d]; }
  bool is_finite() const;
};

struct TrainConfig {
  LossKind loss_kind = LossKind::kWeightedNegative;
  double learning_rate = 0.1;
  int epochs = 10;
  int batch_size = 32;
  // Complementary labels per sample; 0 means "use the class count".
  int n_complementary = 0;
  double weight_decay = 0.0;
  double weight_clamp_lo = 1e-6;
  double weight_clamp_hi = 1e8;
  std::uint64_t seed = 0;
  // Test hook: when set, replaces the epoch-end predicted counts used for
  // the weight update, leaving the rest of the loop untouched.
  std::optional<std::vector<int>> stub_epoch_counts;

  void validate() const;
};

struct ClassWeights {
  std::vector<double> w;
  int epoch = 0;
};

struct EpochCounts {
  std::vector<int> c;
  int epoch = 0;
};

struct ConfidenceRecord {
  std::int64_t id = 0;
  double confidence = 0.0;
  int predicted = 0;
};

struct TrainResult {
  LinearSoftmaxModel model;
  std::vector<ConfidenceRecord> records;
  // Weights in effect per epoch (entry 0 is w^0), plus the post-final update.
  std::vector<ClassWeights> weight_history;
  std::vector<EpochCounts> count_history;
};

std::vector<double> softmax_forward(const LinearSoftmaxModel& model,
                                    std::span<const double> features);

std::vector<int> sample_complementary_labels(int silver_label, int num_classes,
                                             int n_complementary, Rng& rng);

double nl_loss(const std::vector<double>& p, const std::vector<int>& complementary);

double iwnl_loss(const std::vector<double>& p, const std::vector<int>& complementary,
                 const ClassWeights& weights);

ClassWeights iwnl_initial_weights(const std::vector<int>& silver_counts,
                                  double clamp_lo = 1e-6, double clamp_hi = 1e8);

ClassWeights iwnl_update_weights(const ClassWeights& prev, const EpochCounts& counts,
                                 double clamp_lo = 1e-6, double clamp_hi = 1e8);

// One batch entry: the sample plus its current complementary labels.
struct BatchItem {
  const Sample* sample = nullptr;
  std::vector<int> complementary;
};

struct Gradients {
  std::vector<double> d_weights;
  std::vector<double> d_bias;
};

// Mean loss over a batch, including the weight-decay term. The same scalar
// the gradient differentiates, so finite differences can check it directly.
double batch_loss(const LinearSoftmaxModel& model, const std::vector<BatchItem>& batch,
                  LossKind kind, const ClassWeights& weights, double weight_decay);

Gradients loss_gradient(const LinearSoftmaxModel& model,
                        const std::vector<BatchItem>& batch, LossKind kind,
                        const ClassWeights& weights, double weight_decay);

std::vector<int> predict_all(const LinearSoftmaxModel& model, const SilverDataset& ds);

TrainResult train_detector(const SilverDataset& ds, const TrainConfig& cfg);

void save_confidences(const std::vector<ConfidenceRecord>& records,
                      const LabelSpace& label_space, const std::string& path);
std::vector<ConfidenceRecord> load_confidences(const std::string& path,
                                               const LabelSpace& label_space);
void save_weight_history(const std::vector<ClassWeights>& history,
                         const std::string& path);

}  // namespace silversieve
