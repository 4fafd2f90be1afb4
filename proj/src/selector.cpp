#include "silversieve/selector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

namespace silversieve {

using ordered_json = nlohmann::ordered_json;

void SelectionConfig::validate() const {
  if (eta <= 0 || eta > 1) throw ContractError("eta outside (0,1]");
  if (diversity_m < 0) throw ContractError("diversity m must be >= 0");
}

double total_confidence(const std::vector<ConfidenceRecord>& records) {
  double total = 0.0;
  for (const auto& r : records) total += r.confidence;
  return total;
}

namespace {

int proportion_count(double eta, std::size_t n) {
  return static_cast<int>(std::floor(eta * static_cast<double>(n) + 1e-9));
}

// Descending confidence, ties by lowest id.
std::vector<ConfidenceRecord> sorted_desc(std::vector<ConfidenceRecord> records) {
  std::sort(records.begin(), records.end(),
            [](const ConfidenceRecord& a, const ConfidenceRecord& b) {
              if (a.confidence != b.confidence) return a.confidence > b.confidence;
              return a.id < b.id;
            });
  return records;
}

}  // namespace

CleanSet select_by_proportion(const std::vector<ConfidenceRecord>& records, double eta) {
  SelectionConfig{eta, 0}.validate();
  const auto sorted = sorted_desc(records);
  const int take = proportion_count(eta, records.size());
  CleanSet clean;
  clean.eta = eta;
  for (int i = 0; i < take; ++i) {
    clean.ids.push_back(sorted[i].id);
    clean.stage[sorted[i].id] = SelectionStage::kCore;
    clean.predicted[sorted[i].id] = sorted[i].predicted;
  }
  return clean;
}

CleanSet select_class_aware(const std::vector<ConfidenceRecord>& records, double eta,
                            int diversity_m) {
  SelectionConfig{eta, diversity_m}.validate();
  CleanSet clean = select_by_proportion(records, eta);
  clean.diversity_m = diversity_m;
  if (diversity_m == 0) return clean;

  // Remainder, partitioned by predicted class.
  std::map<int, std::vector<ConfidenceRecord>> by_class;
  std::size_t rest_size = 0;
  for (const auto& r : sorted_desc(records)) {
    if (clean.contains(r.id)) continue;
    by_class[r.predicted].push_back(r);
    ++rest_size;
  }
  if (rest_size == 0) return clean;

  for (const auto& [cls, members] : by_class) {
    const int quota = static_cast<int>(
        std::floor(static_cast<double>(members.size()) / rest_size * diversity_m + 1e-9));
    const int take = std::min<int>(quota, static_cast<int>(members.size()));
    for (int i = 0; i < take; ++i) {
      clean.ids.push_back(members[i].id);
      clean.stage[members[i].id] = SelectionStage::kDiversity;
      clean.predicted[members[i].id] = members[i].predicted;
    }
  }
  return clean;
}

void save_clean_set(const CleanSet& clean, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  ordered_json obj;
  obj["ids"] = clean.ids;
  ordered_json stages = ordered_json::object();
  for (const auto& [id, st] : clean.stage) {
    stages[std::to_string(id)] = (st == SelectionStage::kCore) ? "core" : "diversity";
  }
  obj["stage"] = stages;
  ordered_json preds = ordered_json::object();
  for (const auto& [id, cls] : clean.predicted) preds[std::to_string(id)] = cls;
  obj["predicted"] = preds;
  obj["eta"] = clean.eta;
  obj["m"] = clean.diversity_m;
  out << obj.dump(2) << "\n";
}

CleanSet load_clean_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  ordered_json obj;
  try {
    obj = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("clean set parse error: ") + e.what());
  }
  CleanSet clean;
  clean.ids = obj.at("ids").get<std::vector<std::int64_t>>();
  for (const auto& [key, val] : obj.at("stage").items()) {
    clean.stage[std::stoll(key)] = (val.get<std::string>() == "core")
                                       ? SelectionStage::kCore
                                       : SelectionStage::kDiversity;
  }
  if (obj.contains("predicted")) {
    for (const auto& [key, val] : obj.at("predicted").items()) {
      clean.predicted[std::stoll(key)] = val.get<int>();
    }
  }
  clean.eta = obj.value("eta", 0.0);
  clean.diversity_m = obj.value("m", 0);
  return clean;
}

}  // namespace silversieve
