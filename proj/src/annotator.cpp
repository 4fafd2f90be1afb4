#include "silversieve/annotator.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <thread>

#include <json.hpp>

namespace silversieve {

using ordered_json = nlohmann::ordered_json;

namespace {

int no_relation_index(const RelationSchema& schema) {
  if (!schema.label_space.negative_index) {
    throw SchemaError("schema has no no-relation class");
  }
  return *schema.label_space.negative_index;
}

void check_template(const std::string& tmpl) {
  // Placeholders must be exactly {subj} and {obj}.
  std::size_t pos = 0;
  while ((pos = tmpl.find('{', pos)) != std::string::npos) {
    std::size_t end = tmpl.find('}', pos);
    if (end == std::string::npos) {
      throw SchemaError("unterminated placeholder in template: " + tmpl);
    }
    const std::string ph = tmpl.substr(pos + 1, end - pos - 1);
    if (ph != "subj" && ph != "obj") {
      throw SchemaError("unknown placeholder {" + ph + "} in template: " + tmpl);
    }
    pos = end + 1;
  }
}

}  // namespace

void RelationSchema::validate() const {
  if (relations.empty()) throw SchemaError("schema has no relations");
  if (threshold < 0 || threshold > 1) throw SchemaError("threshold outside [0,1]");
  int empty_count = 0;
  for (const auto& r : relations) {
    if (r.templates.empty()) ++empty_count;
    for (const auto& t : r.templates) check_template(t);
  }
  if (empty_count != 1) {
    throw SchemaError("schema must contain exactly one template-free no-relation class");
  }
  label_space.validate();
  if (label_space.size() != num_relations()) {
    throw SchemaError("label space size does not match relation count");
  }
  for (int i = 0; i < num_relations(); ++i) {
    if (label_space.names[i] != relations[i].name) {
      throw SchemaError("label space order does not match relation order");
    }
  }
  if (!label_space.negative_index ||
      !relations[*label_space.negative_index].templates.empty()) {
    throw SchemaError("negative_index must point at the template-free relation");
  }
}

RelationSchema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("schema parse error: ") + e.what());
  }
  RelationSchema schema;
  schema.threshold = doc.value("threshold", 0.5);
  for (const auto& rj : doc.at("relations")) {
    Relation r;
    r.name = rj.at("name").get<std::string>();
    if (rj.contains("templates")) {
      r.templates = rj.at("templates").get<std::vector<std::string>>();
    }
    if (rj.contains("constraints")) {
      for (const auto& c : rj.at("constraints")) {
        const std::string pair = c.get<std::string>();
        const auto colon = pair.find(':');
        if (colon == std::string::npos) {
          throw SchemaError("constraint must be 'SUBJTYPE:OBJTYPE': " + pair);
        }
        r.constraints.emplace(pair.substr(0, colon), pair.substr(colon + 1));
      }
    }
    schema.relations.push_back(std::move(r));
  }
  for (int i = 0; i < schema.num_relations(); ++i) {
    schema.label_space.names.push_back(schema.relations[i].name);
    if (schema.relations[i].templates.empty()) schema.label_space.negative_index = i;
  }
  schema.validate();
  return schema;
}

ScoreMatrix load_scores(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  ScoreMatrix m;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ordered_json obj;
    try {
      obj = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("scores line " + std::to_string(line_no) + ": " + e.what());
    }
    const std::int64_t id = obj.at("id").get<std::int64_t>();
    ScoreRow row;
    for (const auto& [rel, scores] : obj.at("scores").items()) {
      row.by_relation[rel] = scores.get<std::vector<double>>();
    }
    m.rows[id] = std::move(row);
  }
  return m;
}

void save_scores(const ScoreMatrix& scores, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const auto& [id, row] : scores.rows) {
    ordered_json obj;
    obj["id"] = id;
    ordered_json sj = ordered_json::object();
    for (const auto& [rel, vals] : row.by_relation) sj[rel] = vals;
    obj["scores"] = sj;
    out << obj.dump() << "\n";
  }
}

std::vector<double> relation_scores(const ScoreRow& row, const RelationSchema& schema) {
  const int neg = no_relation_index(schema);
  std::vector<double> scores(schema.num_relations(), 0.0);
  for (int i = 0; i < schema.num_relations(); ++i) {
    if (i == neg) continue;
    const Relation& r = schema.relations[i];
    auto it = row.by_relation.find(r.name);
    if (it == row.by_relation.end() ||
        it->second.size() != r.templates.size()) {
      throw ContractError("missing template scores for relation " + r.name);
    }
    double best = 0.0;
    for (double s : it->second) {
      if (s < 0 || s > 1) throw ContractError("score outside [0,1] for " + r.name);
      best = std::max(best, s);
    }
    scores[i] = best;
  }
  return scores;
}

std::vector<double> apply_type_constraints(const std::vector<double>& scores,
                                           const std::string& subj_type,
                                           const std::string& obj_type,
                                           const RelationSchema& schema) {
  std::vector<double> masked = scores;
  for (int i = 0; i < schema.num_relations(); ++i) {
    const auto& cons = schema.relations[i].constraints;
    if (!cons.empty() && !cons.count({subj_type, obj_type})) masked[i] = 0.0;
  }
  return masked;
}

int infer_label(const std::vector<double>& masked_scores, const RelationSchema& schema) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(masked_scores.size()); ++i) {
    if (masked_scores[i] > masked_scores[best]) best = i;
  }
  if (masked_scores.empty() || masked_scores[best] < schema.threshold) {
    return no_relation_index(schema);
  }
  return best;
}

SilverDataset annotate_dataset(const SilverDataset& ds, const ScoreMatrix& scores,
                               const RelationSchema& schema) {
  schema.validate();
  bool any_constrained = std::any_of(
      schema.relations.begin(), schema.relations.end(),
      [](const Relation& r) { return !r.constraints.empty(); });

  SilverDataset out = ds;
  out.label_space = schema.label_space;
  const int n = out.size();

  auto annotate_one = [&](Sample& s) {
    auto it = scores.rows.find(s.id);
    if (it == scores.rows.end()) {
      throw ContractError("no score row for sample " + std::to_string(s.id));
    }
    std::vector<double> rel = relation_scores(it->second, schema);
    if (any_constrained) {
      if (!s.subj_type || !s.obj_type) {
        throw ContractError("sample " + std::to_string(s.id) +
                            " lacks entity types required by a constrained schema");
      }
      rel = apply_type_constraints(rel, *s.subj_type, *s.obj_type, schema);
    }
    s.silver_label = infer_label(rel, schema);
  };

  // Per-sample results are independent; SILVER_SIEVE_THREADS caps the worker
  // count. Output order always follows input order.
  unsigned threads = std::thread::hardware_concurrency();
  if (const char* cap = std::getenv("SILVER_SIEVE_THREADS")) {
    const long parsed = std::strtol(cap, nullptr, 10);
    if (parsed >= 1) threads = std::min<unsigned>(threads, static_cast<unsigned>(parsed));
  }
  if (threads <= 1 || n < 256) {
    for (auto& s : out.samples) annotate_one(s);
    return out;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = static_cast<int>(w); i < n; i += static_cast<int>(threads)) {
          annotate_one(out.samples[i]);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

ScoreMatrix stub_scorer(const SilverDataset& ds, const RelationSchema& schema,
                        double corruption, std::uint64_t seed) {
  schema.validate();
  if (corruption < 0 || corruption > 1) throw ContractError("corruption outside [0,1]");
  if (!ds.all_have_gold()) throw ContractError("stub_scorer requires gold labels");
  const int neg = no_relation_index(schema);
  const double high = (schema.threshold + 1.0) / 2.0;
  const double low = schema.threshold / 2.0;

  std::vector<int> templated;
  for (int i = 0; i < schema.num_relations(); ++i) {
    if (i != neg) templated.push_back(i);
  }
  if (templated.empty()) throw SchemaError("stub_scorer needs a templated relation");

  const int n = ds.size();
  const int corrupted = static_cast<int>(std::lround(corruption * n));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> corrupt(n, false);
  for (int i = 0; i < corrupted; ++i) corrupt[order[i]] = true;

  ScoreMatrix m;
  for (int i = 0; i < n; ++i) {
    const Sample& s = ds.samples[i];
    const int gold = *s.gold_label;
    int target = gold;
    if (corrupt[i]) {
      std::vector<int> wrong;
      for (int r : templated) {
        if (r != gold) wrong.push_back(r);
      }
      if (wrong.empty()) {
        throw ContractError("corruption requires at least two templated relations");
      }
      std::uniform_int_distribution<std::size_t> pick(0, wrong.size() - 1);
      target = wrong[pick(rng)];
    }
    ScoreRow row;
    for (int r : templated) {
      row.by_relation[schema.relations[r].name].assign(
          schema.relations[r].templates.size(), low);
    }
    if (target != neg) row.by_relation[schema.relations[target].name][0] = high;
    m.rows[s.id] = std::move(row);
  }
  return m;
}

}  // namespace silversieve
