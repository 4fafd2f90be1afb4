#include "silversieve/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

namespace silversieve {

using ordered_json = nlohmann::ordered_json;

std::optional<int> LabelSpace::index_of(const std::string& name) const {
  for (int i = 0; i < size(); ++i) {
    if (names[i] == name) return i;
  }
  return std::nullopt;
}

void LabelSpace::validate() const {
  if (names.empty()) throw ContractError("label space is empty");
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (n.empty()) throw ContractError("empty class name");
    if (!seen.insert(n).second) throw ContractError("duplicate class name: " + n);
  }
  if (negative_index && (*negative_index < 0 || *negative_index >= size())) {
    throw ContractError("negative_index out of range");
  }
}

void SilverDataset::validate() const {
  label_space.validate();
  if (feature_dim <= 0) throw ContractError("feature_dim must be positive");
  std::set<std::int64_t> ids;
  for (const auto& s : samples) {
    if (!ids.insert(s.id).second) {
      throw ContractError("duplicate sample id " + std::to_string(s.id));
    }
    if (static_cast<int>(s.features.size()) != feature_dim) {
      throw DimensionError("sample " + std::to_string(s.id) +
                           " has feature length " +
                           std::to_string(s.features.size()) + ", expected " +
                           std::to_string(feature_dim));
    }
    for (auto label : {s.silver_label, s.gold_label}) {
      if (label && (*label < 0 || *label >= label_space.size())) {
        throw ContractError("label index out of range on sample " +
                            std::to_string(s.id));
      }
    }
  }
}

bool SilverDataset::all_have_silver() const {
  return std::all_of(samples.begin(), samples.end(),
                     [](const Sample& s) { return s.silver_label.has_value(); });
}

bool SilverDataset::all_have_gold() const {
  return std::all_of(samples.begin(), samples.end(),
                     [](const Sample& s) { return s.gold_label.has_value(); });
}

std::vector<int> SilverDataset::silver_counts() const {
  std::vector<int> counts(label_space.size(), 0);
  for (const auto& s : samples) {
    if (s.silver_label) ++counts[*s.silver_label];
  }
  return counts;
}

void SynthConfig::validate() const {
  if (num_classes <= 0) throw ContractError("num_classes must be positive");
  if (feature_dim <= 0) throw ContractError("feature_dim must be positive");
  if (feature_dim < num_classes) {
    throw ContractError("feature_dim must be >= num_classes for simplex centroids");
  }
  if (mean_separation <= 0) throw ContractError("mean_separation must be positive");
  if (noise_ratio < 0 || noise_ratio > 1) throw ContractError("noise_ratio outside [0,1]");
  if (!class_sizes.empty()) {
    if (static_cast<int>(class_sizes.size()) != num_classes) {
      throw ContractError("class_sizes length must equal num_classes");
    }
    for (int sz : class_sizes) {
      if (sz < 1) throw ContractError("class size must be >= 1");
    }
  } else {
    if (power_law_exponent <= 0 || total_n < num_classes) {
      throw ContractError("power-law sizing needs exponent > 0 and total_n >= num_classes");
    }
  }
  if (noise_mode == NoiseMode::kPairwise) {
    if (static_cast<int>(pairwise.size()) != num_classes) {
      throw ContractError("pairwise matrix must have num_classes rows");
    }
    for (int i = 0; i < num_classes; ++i) {
      if (static_cast<int>(pairwise[i].size()) != num_classes) {
        throw ContractError("pairwise matrix row length mismatch");
      }
      if (pairwise[i][i] != 0.0) throw ContractError("pairwise diagonal must be zero");
      double sum = std::accumulate(pairwise[i].begin(), pairwise[i].end(), 0.0);
      if (std::abs(sum - 1.0) > 1e-9) throw ContractError("pairwise row must sum to 1");
    }
  }
}

std::vector<int> SynthConfig::resolved_sizes() const {
  if (!class_sizes.empty()) return class_sizes;
  // size_k ∝ (k+1)^(-a), largest class first, rounded, minimum 1, then the
  // rounding drift is pushed onto the largest class so sizes sum to total_n.
  std::vector<double> raw(num_classes);
  double norm = 0.0;
  for (int k = 0; k < num_classes; ++k) {
    raw[k] = std::pow(static_cast<double>(k + 1), -power_law_exponent);
    norm += raw[k];
  }
  std::vector<int> sizes(num_classes);
  int assigned = 0;
  for (int k = 0; k < num_classes; ++k) {
    sizes[k] = std::max(1, static_cast<int>(std::lround(raw[k] / norm * total_n)));
    assigned += sizes[k];
  }
  int drift = total_n - assigned;
  sizes[0] += drift;
  if (sizes[0] < 1) throw ContractError("total_n too small for requested class count");
  return sizes;
}

namespace {

Sample parse_sample_line(const std::string& line, int line_no,
                         const LabelSpace& label_space) {
  ordered_json obj;
  try {
    obj = ordered_json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
  }
  if (!obj.is_object() || !obj.contains("id") || !obj.contains("features")) {
    throw ParseError("line " + std::to_string(line_no) +
                     ": expected object with id and features");
  }
  Sample s;
  try {
    s.id = obj.at("id").get<std::int64_t>();
    s.features = obj.at("features").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
  }
  if (s.id < 0) throw ParseError("line " + std::to_string(line_no) + ": negative id");
  auto read_label = [&](const char* key) -> std::optional<int> {
    if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
    const std::string name = obj.at(key).get<std::string>();
    auto idx = label_space.index_of(name);
    if (!idx) {
      throw SchemaError("line " + std::to_string(line_no) + ": unknown label name '" +
                        name + "'");
    }
    return idx;
  };
  s.silver_label = read_label("silver_label");
  s.gold_label = read_label("gold_label");
  auto read_str = [&](const char* key) -> std::optional<std::string> {
    if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
    return obj.at(key).get<std::string>();
  };
  s.subj = read_str("subj");
  s.subj_type = read_str("subj_type");
  s.obj = read_str("obj");
  s.obj_type = read_str("obj_type");
  s.text = read_str("text");
  return s;
}

}  // namespace

SilverDataset load_jsonl(const std::string& path, const LabelSpace& label_space) {
  label_space.validate();
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  SilverDataset ds;
  ds.label_space = label_space;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Sample s = parse_sample_line(line, line_no, label_space);
    if (ds.samples.empty()) {
      ds.feature_dim = static_cast<int>(s.features.size());
      if (ds.feature_dim == 0) {
        throw DimensionError("line " + std::to_string(line_no) + ": empty feature vector");
      }
    } else if (static_cast<int>(s.features.size()) != ds.feature_dim) {
      throw DimensionError("line " + std::to_string(line_no) +
                           ": feature length " + std::to_string(s.features.size()) +
                           " does not match dimension " + std::to_string(ds.feature_dim));
    }
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.empty()) ds.feature_dim = 1;
  ds.validate();
  return ds;
}

void save_jsonl(const SilverDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const auto& s : ds.samples) {
    ordered_json obj;
    obj["id"] = s.id;
    obj["features"] = s.features;
    if (s.silver_label) obj["silver_label"] = ds.label_space.names[*s.silver_label];
    if (s.gold_label) obj["gold_label"] = ds.label_space.names[*s.gold_label];
    if (s.subj) obj["subj"] = *s.subj;
    if (s.obj) obj["obj"] = *s.obj;
    if (s.subj_type) obj["subj_type"] = *s.subj_type;
    if (s.obj_type) obj["obj_type"] = *s.obj_type;
    if (s.text) obj["text"] = *s.text;
    out << obj.dump() << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

SilverDataset generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  const std::vector<int> sizes = cfg.resolved_sizes();

  SilverDataset ds;
  for (int k = 0; k < cfg.num_classes; ++k) {
    ds.label_space.names.push_back("r" + std::to_string(k));
  }
  ds.feature_dim = cfg.feature_dim;

  // Centroids are scaled standard basis vectors, so every pair of centroids
  // is exactly mean_separation apart.
  const double scale = cfg.mean_separation / std::sqrt(2.0);
  Rng rng(derive_seed(cfg.seed, "synth"));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::int64_t next_id = 0;
  for (int k = 0; k < cfg.num_classes; ++k) {
    for (int n = 0; n < sizes[k]; ++n) {
      Sample s;
      s.id = next_id++;
      s.features.resize(cfg.feature_dim);
      for (int d = 0; d < cfg.feature_dim; ++d) {
        s.features[d] = gauss(rng) + (d == k ? scale : 0.0);
      }
      s.gold_label = k;
      s.silver_label = k;
      if (cfg.with_mentions) {
        s.subj = "S" + std::to_string(s.id);
        s.obj = "O" + std::to_string(s.id);
        s.subj_type = "T" + std::to_string(k);
        s.obj_type = "T" + std::to_string(k);
        s.text = "S" + std::to_string(s.id) + " and O" + std::to_string(s.id) +
                 " appear in sentence " + std::to_string(s.id) + ".";
      }
      ds.samples.push_back(std::move(s));
    }
  }
  return inject_noise(ds, cfg.noise_ratio, cfg.noise_mode, cfg.pairwise,
                      derive_seed(cfg.seed, "noise"));
}

SilverDataset inject_noise(const SilverDataset& ds, double ratio, NoiseMode mode,
                           const std::vector<std::vector<double>>& pairwise,
                           std::uint64_t seed) {
  if (ratio < 0 || ratio > 1) throw ContractError("noise ratio outside [0,1]");
  if (!ds.all_have_gold()) throw ContractError("inject_noise requires gold labels");
  const int num_classes = ds.label_space.size();
  if (mode == NoiseMode::kSymmetric && num_classes < 2 && ratio > 0) {
    throw ContractError("symmetric noise needs at least 2 classes");
  }

  SilverDataset out = ds;
  const int n = out.size();
  const int flips = static_cast<int>(std::lround(ratio * n));

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  for (int i = 0; i < n; ++i) {
    out.samples[i].silver_label = out.samples[i].gold_label;
  }
  for (int i = 0; i < flips; ++i) {
    Sample& s = out.samples[order[i]];
    const int gold = *s.gold_label;
    int wrong = gold;
    if (mode == NoiseMode::kSymmetric) {
      std::uniform_int_distribution<int> pick(0, num_classes - 2);
      wrong = pick(rng);
      if (wrong >= gold) ++wrong;
    } else {
      const auto& row = pairwise.at(gold);
      std::discrete_distribution<int> pick(row.begin(), row.end());
      wrong = pick(rng);
    }
    s.silver_label = wrong;
  }
  return out;
}

DatasetStats dataset_stats(const SilverDataset& ds) {
  if (!ds.all_have_silver()) throw ContractError("dataset_stats requires silver labels");
  DatasetStats st;
  st.n = ds.size();
  st.class_counts = ds.silver_counts();
  if (ds.all_have_gold() && st.n > 0) {
    int mismatched = 0;
    for (const auto& s : ds.samples) {
      if (*s.silver_label != *s.gold_label) ++mismatched;
    }
    st.noise_ratio = static_cast<double>(mismatched) / st.n;
  }
  return st;
}

}  // namespace silversieve
