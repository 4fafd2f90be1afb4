#include "silversieve/o2u.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace silversieve {

using ordered_json = nlohmann::ordered_json;

void CyclicalSchedule::validate() const {
  if (r_max <= 0 || r_min <= 0) throw ContractError("learning rates must be positive");
  if (r_min >= r_max) throw ContractError("r_min must be < r_max");
  if (epochs_per_round <= 0) throw ContractError("epochs_per_round must be positive");
  if (rounds <= 0) throw ContractError("rounds must be positive");
  if (pretrain_epochs < 0) throw ContractError("pretrain_epochs must be >= 0");
  if (pretrain_lr <= 0) throw ContractError("pretrain_lr must be positive");
  if (batch_size <= 0) throw ContractError("batch_size must be positive");
}

CyclicalSchedule CyclicalSchedule::encoder_preset() {
  CyclicalSchedule s;
  s.r_max = 5e-6;
  s.r_min = 1e-7;
  s.epochs_per_round = 5;
  s.rounds = 1;
  s.pretrain_lr = 5e-6;
  return s;
}

double lr_at(int t, const CyclicalSchedule& sched) {
  sched.validate();
  if (t < 0 || t > sched.epochs_per_round) {
    throw ContractError("epoch index outside [0, E]");
  }
  if (t == sched.epochs_per_round) return sched.r_min;  // exact endpoint
  return sched.r_max - (static_cast<double>(t) / sched.epochs_per_round) *
                           (sched.r_max - sched.r_min);
}

namespace {

void sgd_ce_epoch(LinearSoftmaxModel& model, const SilverDataset& ds, double lr,
                  int batch_size, std::vector<int>& order, Rng& rng) {
  std::shuffle(order.begin(), order.end(), rng);
  const int n = ds.size();
  const ClassWeights unused;
  for (int start = 0; start < n; start += batch_size) {
    const int end = std::min(start + batch_size, n);
    std::vector<BatchItem> batch;
    batch.reserve(end - start);
    for (int i = start; i < end; ++i) batch.push_back({&ds.samples[order[i]], {}});
    const Gradients g =
        loss_gradient(model, batch, LossKind::kCrossEntropy, unused, 0.0);
    for (std::size_t i = 0; i < model.weights.size(); ++i) {
      model.weights[i] -= lr * g.d_weights[i];
    }
    for (std::size_t i = 0; i < model.bias.size(); ++i) {
      model.bias[i] -= lr * g.d_bias[i];
    }
  }
}

}  // namespace

O2uResult o2u_detect(const SilverDataset& ds, const CyclicalSchedule& sched,
                     std::uint64_t seed) {
  sched.validate();
  ds.validate();
  if (!ds.all_have_silver()) throw ContractError("o2u_detect requires silver labels");
  const int n = ds.size();
  const int num_classes = ds.label_space.size();

  O2uResult result;
  result.model = LinearSoftmaxModel::zeros(num_classes, ds.feature_dim);
  for (const auto& s : ds.samples) result.ledger.loss_sum[s.id] = 0.0;

  Rng rng(derive_seed(seed, "o2u"));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (int e = 0; e < sched.pretrain_epochs; ++e) {
    sgd_ce_epoch(result.model, ds, sched.pretrain_lr, sched.batch_size, order, rng);
    if (!result.model.is_finite()) {
      throw TrainingError("o2u pretraining diverged at epoch " + std::to_string(e + 1));
    }
  }

  // Only cyclical epochs feed the ledger; the per-sample loss is recorded in
  // a full pass at the end of each epoch.
  for (int round = 0; round < sched.rounds; ++round) {
    for (int t = 0; t < sched.epochs_per_round; ++t) {
      sgd_ce_epoch(result.model, ds, lr_at(t, sched), sched.batch_size, order, rng);
      if (!result.model.is_finite()) {
        throw TrainingError("o2u cyclical training diverged at round " +
                            std::to_string(round + 1) + " epoch " + std::to_string(t + 1));
      }
      for (const auto& s : ds.samples) {
        const auto p = softmax_forward(result.model, s.features);
        const double loss = -std::log(std::max(p[*s.silver_label], 1e-12));
        result.ledger.loss_sum[s.id] += loss;
      }
      ++result.ledger.epochs_recorded;
    }
  }

  double lo = 0.0, hi = 0.0;
  if (!result.ledger.loss_sum.empty()) {
    auto [mn, mx] = std::minmax_element(
        result.ledger.loss_sum.begin(), result.ledger.loss_sum.end(),
        [](const auto& a, const auto& b) { return a.second < b.second; });
    lo = mn->second;
    hi = mx->second;
  }
  result.records.reserve(n);
  for (const auto& s : ds.samples) {
    ConfidenceRecord rec;
    rec.id = s.id;
    const double loss = result.ledger.loss_sum.at(s.id);
    rec.confidence = (hi > lo) ? (hi - loss) / (hi - lo) : 0.5;
    const auto p = softmax_forward(result.model, s.features);
    int best = 0;
    for (int c = 1; c < num_classes; ++c) {
      if (p[c] > p[best]) best = c;
    }
    rec.predicted = best;
    result.records.push_back(rec);
  }
  return result;
}

CleanSet o2u_select(const LossLedger& ledger, double eta) {
  if (eta <= 0 || eta > 1) throw ContractError("eta outside (0,1]");
  std::vector<std::pair<std::int64_t, double>> items(ledger.loss_sum.begin(),
                                                     ledger.loss_sum.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    return a.first < b.first;
  });
  const int take =
      static_cast<int>(std::floor(eta * static_cast<double>(items.size()) + 1e-9));
  CleanSet clean;
  clean.eta = eta;
  for (int i = 0; i < take; ++i) {
    clean.ids.push_back(items[i].first);
    clean.stage[items[i].first] = SelectionStage::kCore;
  }
  return clean;
}

void save_ledger(const LossLedger& ledger, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const auto& [id, loss] : ledger.loss_sum) {
    ordered_json obj;
    obj["id"] = id;
    obj["loss_sum"] = loss;
    out << obj.dump() << "\n";
  }
}

}  // namespace silversieve
