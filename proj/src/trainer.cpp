#include "silversieve/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace silversieve {

using ordered_json = nlohmann::ordered_json;

namespace {
constexpr double kProbEps = 1e-12;
}

LossKind loss_kind_from_name(const std::string& name) {
  if (name == "ce") return LossKind::kCrossEntropy;
  if (name == "nl") return LossKind::kNegative;
  if (name == "iwnl") return LossKind::kWeightedNegative;
  throw ContractError("unknown loss kind: " + name);
}

const char* loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::kCrossEntropy: return "ce";
    case LossKind::kNegative: return "nl";
    case LossKind::kWeightedNegative: return "iwnl";
  }
  return "?";
}

LinearSoftmaxModel LinearSoftmaxModel::zeros(int num_classes, int dim) {
  LinearSoftmaxModel m;
  m.num_classes = num_classes;
  m.dim = dim;
  m.weights.assign(static_cast<std::size_t>(num_classes) * dim, 0.0);
  m.bias.assign(num_classes, 0.0);
  return m;
}

bool LinearSoftmaxModel::is_finite() const {
  auto ok = [](double v) { return std::isfinite(v); };
  return std::all_of(weights.begin(), weights.end(), ok) &&
         std::all_of(bias.begin(), bias.end(), ok);
}

void TrainConfig::validate() const {
  if (learning_rate <= 0) throw ContractError("learning_rate must be positive");
  if (epochs <= 0) throw ContractError("epochs must be positive");
  if (batch_size <= 0) throw ContractError("batch_size must be positive");
  if (n_complementary < 0) throw ContractError("n_complementary must be >= 0");
  if (weight_decay < 0) throw ContractError("weight_decay must be >= 0");
  if (weight_clamp_lo <= 0 || weight_clamp_lo >= weight_clamp_hi) {
    throw ContractError("weight clamp bounds must satisfy 0 < lo < hi");
  }
}

std::vector<double> softmax_forward(const LinearSoftmaxModel& model,
                                    std::span<const double> features) {
  if (static_cast<int>(features.size()) != model.dim) {
    throw DimensionError("feature length does not match model dimension");
  }
  std::vector<double> logits(model.num_classes);
  for (int c = 0; c < model.num_classes; ++c) {
    double z = model.bias[c];
    const double* row = model.weights.data() + static_cast<std::size_t>(c) * model.dim;
    for (int d = 0; d < model.dim; ++d) z += row[d] * features[d];
    if (!std::isfinite(z)) throw NumericError("non-finite logit");
    logits[c] = z;
  }
  const double zmax = *std::max_element(logits.begin(), logits.end());
  double denom = 0.0;
  for (double& z : logits) {
    z = std::exp(z - zmax);
    denom += z;
  }
  // Clamp away from {0,1} so downstream logs stay finite; the perturbation
  // keeps the sum within 1e-12 of 1.
  for (double& z : logits) z = std::clamp(z / denom, 1e-15, 1.0 - 1e-15);
  return logits;
}

std::vector<int> sample_complementary_labels(int silver_label, int num_classes,
                                             int n_complementary, Rng& rng) {
  if (num_classes < 2) throw ContractError("complementary labels need >= 2 classes");
  if (silver_label < 0 || silver_label >= num_classes) {
    throw ContractError("silver label out of range");
  }
  if (n_complementary < 1) throw ContractError("n_complementary must be >= 1");
  std::uniform_int_distribution<int> pick(0, num_classes - 2);
  std::vector<int> out(n_complementary);
  for (int& k : out) {
    k = pick(rng);
    if (k >= silver_label) ++k;
  }
  return out;
}

double nl_loss(const std::vector<double>& p, const std::vector<int>& complementary) {
  if (complementary.empty()) throw ContractError("empty complementary set");
  double loss = 0.0;
  for (int k : complementary) {
    loss -= std::log(1.0 - std::min(p.at(k), 1.0 - kProbEps));
  }
  return loss;
}

double iwnl_loss(const std::vector<double>& p, const std::vector<int>& complementary,
                 const ClassWeights& weights) {
  if (complementary.empty()) throw ContractError("empty complementary set");
  double loss = 0.0;
  for (int k : complementary) {
    loss -= weights.w.at(k) * std::log(1.0 - std::min(p.at(k), 1.0 - kProbEps));
  }
  return loss;
}

ClassWeights iwnl_initial_weights(const std::vector<int>& silver_counts,
                                  double clamp_lo, double clamp_hi) {
  if (silver_counts.empty()) throw ContractError("empty count vector");
  const long long total =
      std::accumulate(silver_counts.begin(), silver_counts.end(), 0LL);
  if (total == 0) throw ContractError("all silver counts are zero");
  ClassWeights cw;
  cw.epoch = 0;
  cw.w.reserve(silver_counts.size());
  for (int c : silver_counts) {
    const double smoothed = std::max(c, 1);
    cw.w.push_back(std::clamp(static_cast<double>(total) / smoothed, clamp_lo, clamp_hi));
  }
  return cw;
}

ClassWeights iwnl_update_weights(const ClassWeights& prev, const EpochCounts& counts,
                                 double clamp_lo, double clamp_hi) {
  if (prev.w.size() != counts.c.size()) throw ContractError("weight/count length mismatch");
  const long long total = std::accumulate(counts.c.begin(), counts.c.end(), 0LL);
  if (total == 0) throw ContractError("epoch counts sum to zero");
  const double mean = static_cast<double>(total) / counts.c.size();
  ClassWeights next;
  next.epoch = prev.epoch + 1;
  next.w.reserve(prev.w.size());
  for (std::size_t i = 0; i < prev.w.size(); ++i) {
    const double factor = std::exp(1.0 - counts.c[i] / mean);
    next.w.push_back(std::clamp(prev.w[i] * factor, clamp_lo, clamp_hi));
  }
  return next;
}

namespace {

double weight_penalty(const LinearSoftmaxModel& model, double weight_decay) {
  if (weight_decay == 0.0) return 0.0;
  double sq = 0.0;
  for (double w : model.weights) sq += w * w;
  return 0.5 * weight_decay * sq;
}

double item_loss(const std::vector<double>& p, const BatchItem& item, LossKind kind,
                 const ClassWeights& weights) {
  switch (kind) {
    case LossKind::kCrossEntropy:
      return -std::log(std::max(p.at(*item.sample->silver_label), kProbEps));
    case LossKind::kNegative:
      return nl_loss(p, item.complementary);
    case LossKind::kWeightedNegative:
      return iwnl_loss(p, item.complementary, weights);
  }
  throw ContractError("bad loss kind");
}

// Gradient of the per-item loss with respect to the logits.
std::vector<double> logit_gradient(const std::vector<double>& p, const BatchItem& item,
                                   LossKind kind, const ClassWeights& weights) {
  const int num_classes = static_cast<int>(p.size());
  std::vector<double> dz(num_classes, 0.0);
  if (kind == LossKind::kCrossEntropy) {
    for (int c = 0; c < num_classes; ++c) dz[c] = p[c];
    dz[*item.sample->silver_label] -= 1.0;
    return dz;
  }
  // For L = -sum_k m_k w_k log(1-p_k):
  //   dL/dz_j = m_j w_j g_j - p_j * sum_k m_k w_k g_k,  g_k = p_k/(1-p_k).
  std::vector<double> coeff(num_classes, 0.0);
  for (int k : item.complementary) {
    const double wk = (kind == LossKind::kWeightedNegative) ? weights.w.at(k) : 1.0;
    coeff[k] += wk;
  }
  double dot = 0.0;
  std::vector<double> g(num_classes, 0.0);
  for (int c = 0; c < num_classes; ++c) {
    g[c] = p[c] / std::max(1.0 - p[c], kProbEps);
    dot += coeff[c] * g[c];
  }
  for (int c = 0; c < num_classes; ++c) dz[c] = coeff[c] * g[c] - p[c] * dot;
  return dz;
}

}  // namespace

double batch_loss(const LinearSoftmaxModel& model, const std::vector<BatchItem>& batch,
                  LossKind kind, const ClassWeights& weights, double weight_decay) {
  if (batch.empty()) throw ContractError("empty batch");
  double loss = 0.0;
  for (const auto& item : batch) {
    const auto p = softmax_forward(model, item.sample->features);
    loss += item_loss(p, item, kind, weights);
  }
  return loss / batch.size() + weight_penalty(model, weight_decay);
}

Gradients loss_gradient(const LinearSoftmaxModel& model,
                        const std::vector<BatchItem>& batch, LossKind kind,
                        const ClassWeights& weights, double weight_decay) {
  if (batch.empty()) throw ContractError("empty batch");
  Gradients g;
  g.d_weights.assign(model.weights.size(), 0.0);
  g.d_bias.assign(model.bias.size(), 0.0);
  for (const auto& item : batch) {
    const auto p = softmax_forward(model, item.sample->features);
    const auto dz = logit_gradient(p, item, kind, weights);
    for (int c = 0; c < model.num_classes; ++c) {
      g.d_bias[c] += dz[c];
      double* row = g.d_weights.data() + static_cast<std::size_t>(c) * model.dim;
      for (int d = 0; d < model.dim; ++d) row[d] += dz[c] * item.sample->features[d];
    }
  }
  const double inv = 1.0 / batch.size();
  for (double& v : g.d_weights) v *= inv;
  for (double& v : g.d_bias) v *= inv;
  if (weight_decay > 0.0) {
    for (std::size_t i = 0; i < g.d_weights.size(); ++i) {
      g.d_weights[i] += weight_decay * model.weights[i];
    }
  }
  return g;
}

std::vector<int> predict_all(const LinearSoftmaxModel& model, const SilverDataset& ds) {
  std::vector<int> preds(ds.size());
  for (int i = 0; i < ds.size(); ++i) {
    const auto p = softmax_forward(model, ds.samples[i].features);
    int best = 0;
    for (int c = 1; c < model.num_classes; ++c) {
      if (p[c] > p[best]) best = c;
    }
    preds[i] = best;
  }
  return preds;
}

TrainResult train_detector(const SilverDataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  ds.validate();
  if (!ds.all_have_silver()) throw ContractError("train_detector requires silver labels");
  const int num_classes = ds.label_space.size();
  const int n = ds.size();
  if (n < num_classes) throw ContractError("need at least one sample per class");
  const int n_comp = cfg.n_complementary > 0 ? cfg.n_complementary : num_classes;

  TrainResult result;
  result.model = LinearSoftmaxModel::zeros(num_classes, ds.feature_dim);

  ClassWeights weights;
  if (cfg.loss_kind == LossKind::kWeightedNegative) {
    weights = iwnl_initial_weights(ds.silver_counts(), cfg.weight_clamp_lo,
                                   cfg.weight_clamp_hi);
  } else {
    weights.w.assign(num_classes, 1.0);
  }
  result.weight_history.push_back(weights);

  Rng rng(derive_seed(cfg.seed, "train"));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::vector<int>> complementary(n);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.loss_kind != LossKind::kCrossEntropy) {
      for (int i = 0; i < n; ++i) {
        complementary[i] = sample_complementary_labels(
            *ds.samples[i].silver_label, num_classes, n_comp, rng);
      }
    }
    std::shuffle(order.begin(), order.end(), rng);
    try {
      for (int start = 0; start < n; start += cfg.batch_size) {
        const int end = std::min(start + cfg.batch_size, n);
        std::vector<BatchItem> batch;
        batch.reserve(end - start);
        for (int i = start; i < end; ++i) {
          batch.push_back({&ds.samples[order[i]], complementary[order[i]]});
        }
        const Gradients g =
            loss_gradient(result.model, batch, cfg.loss_kind, weights, cfg.weight_decay);
        for (std::size_t i = 0; i < result.model.weights.size(); ++i) {
          result.model.weights[i] -= cfg.learning_rate * g.d_weights[i];
        }
        for (std::size_t i = 0; i < result.model.bias.size(); ++i) {
          result.model.bias[i] -= cfg.learning_rate * g.d_bias[i];
        }
      }
    } catch (const NumericError& e) {
      throw TrainingError("training diverged at epoch " + std::to_string(epoch) + ": " +
                          e.what());
    }
    if (!result.model.is_finite()) {
      throw TrainingError("training diverged at epoch " + std::to_string(epoch));
    }

    EpochCounts counts;
    counts.epoch = epoch;
    counts.c.assign(num_classes, 0);
    for (int pred : predict_all(result.model, ds)) ++counts.c[pred];
    if (cfg.stub_epoch_counts) {
      if (static_cast<int>(cfg.stub_epoch_counts->size()) != num_classes) {
        throw ContractError("stub_epoch_counts length mismatch");
      }
      counts.c = *cfg.stub_epoch_counts;
    }
    result.count_history.push_back(counts);

    if (cfg.loss_kind == LossKind::kWeightedNegative) {
      weights = iwnl_update_weights(weights, counts, cfg.weight_clamp_lo,
                                    cfg.weight_clamp_hi);
    }
    result.weight_history.push_back(weights);
  }

  result.records.reserve(n);
  for (const auto& s : ds.samples) {
    const auto p = softmax_forward(result.model, s.features);
    ConfidenceRecord rec;
    rec.id = s.id;
    rec.confidence = p[*s.silver_label];
    int best = 0;
    for (int c = 1; c < num_classes; ++c) {
      if (p[c] > p[best]) best = c;
    }
    rec.predicted = best;
    result.records.push_back(rec);
  }
  return result;
}

void save_confidences(const std::vector<ConfidenceRecord>& records,
                      const LabelSpace& label_space, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const auto& r : records) {
    ordered_json obj;
    obj["id"] = r.id;
    obj["confidence"] = r.confidence;
    obj["predicted"] = label_space.names.at(r.predicted);
    out << obj.dump() << "\n";
  }
}

std::vector<ConfidenceRecord> load_confidences(const std::string& path,
                                               const LabelSpace& label_space) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<ConfidenceRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ordered_json obj;
    try {
      obj = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("confidences line " + std::to_string(line_no) + ": " + e.what());
    }
    ConfidenceRecord r;
    r.id = obj.at("id").get<std::int64_t>();
    r.confidence = obj.at("confidence").get<double>();
    const std::string name = obj.at("predicted").get<std::string>();
    auto idx = label_space.index_of(name);
    if (!idx) throw SchemaError("unknown predicted label '" + name + "'");
    r.predicted = *idx;
    records.push_back(r);
  }
  return records;
}

void save_weight_history(const std::vector<ClassWeights>& history,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  ordered_json arr = ordered_json::array();
  for (const auto& cw : history) {
    ordered_json obj;
    obj["epoch"] = cw.epoch;
    obj["weights"] = cw.w;
    arr.push_back(obj);
  }
  out << arr.dump(2) << "\n";
}

}  // namespace silversieve
