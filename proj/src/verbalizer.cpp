#include "silversieve/verbalizer.hpp"

#include <fstream>
#include <iostream>

#include <json.hpp>

namespace silversieve {

using ordered_json = nlohmann::ordered_json;

const char* te_label_name(TeLabel label) {
  switch (label) {
    case TeLabel::kEntailment: return "entailment";
    case TeLabel::kNeutral: return "neutral";
    case TeLabel::kContradiction: return "contradiction";
  }
  return "?";
}

std::string instantiate_template(const std::string& tmpl, const std::string& subj,
                                 const std::string& obj) {
  std::string out;
  out.reserve(tmpl.size() + subj.size() + obj.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const std::size_t open = tmpl.find('{', pos);
    if (open == std::string::npos) {
      out.append(tmpl, pos, std::string::npos);
      break;
    }
    out.append(tmpl, pos, open - pos);
    const std::size_t close = tmpl.find('}', open);
    if (close == std::string::npos) {
      throw SchemaError("unterminated placeholder in template: " + tmpl);
    }
    const std::string ph = tmpl.substr(open + 1, close - open - 1);
    if (ph == "subj") {
      out += subj;
    } else if (ph == "obj") {
      out += obj;
    } else {
      throw SchemaError("unknown placeholder {" + ph + "} in template: " + tmpl);
    }
    pos = close + 1;
  }
  return out;
}

namespace {

struct TemplateRef {
  int relation;
  int index;
};

// Every (relation, template) pair except the ones belonging to `exclude`.
std::vector<TemplateRef> candidate_templates(const RelationSchema& schema, int exclude) {
  std::vector<TemplateRef> out;
  for (int r = 0; r < schema.num_relations(); ++r) {
    if (r == exclude) continue;
    for (int t = 0; t < static_cast<int>(schema.relations[r].templates.size()); ++t) {
      out.push_back({r, t});
    }
  }
  return out;
}

}  // namespace

std::vector<PairRecord> build_pairs_positive(const std::string& premise,
                                             const std::string& subj,
                                             const std::string& obj, int relation,
                                             const RelationSchema& schema,
                                             std::uint64_t seed) {
  if (relation < 0 || relation >= schema.num_relations() ||
      schema.relations[relation].templates.empty()) {
    throw ContractError("positive pairs need a templated relation");
  }
  const auto candidates = candidate_templates(schema, relation);
  if (candidates.empty()) {
    throw ContractError("no template from another relation available for the neutral pair");
  }
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
  const TemplateRef neutral = candidates[pick(rng)];

  std::vector<PairRecord> out(3);
  out[0] = {premise,
            instantiate_template(schema.relations[relation].templates[0], subj, obj),
            TeLabel::kEntailment, -1};
  out[1] = {premise,
            instantiate_template(
                schema.relations[neutral.relation].templates[neutral.index], subj, obj),
            TeLabel::kNeutral, -1};
  out[2] = {premise, instantiate_template(kNotRelatedTemplate, subj, obj),
            TeLabel::kContradiction, -1};
  return out;
}

std::vector<PairRecord> build_pairs_negative(const std::string& premise,
                                             const std::string& subj,
                                             const std::string& obj,
                                             const RelationSchema& schema,
                                             std::uint64_t seed) {
  const auto candidates = candidate_templates(schema, -1);
  if (candidates.empty()) {
    throw ContractError("no positive relation template available for the neutral pair");
  }
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
  const TemplateRef neutral = candidates[pick(rng)];

  std::vector<PairRecord> out(3);
  out[0] = {premise, instantiate_template(kNotRelatedTemplate, subj, obj),
            TeLabel::kEntailment, -1};
  out[1] = {premise,
            instantiate_template(
                schema.relations[neutral.relation].templates[neutral.index], subj, obj),
            TeLabel::kNeutral, -1};
  out[2] = {premise, instantiate_template(kSomeRelationTemplate, subj, obj),
            TeLabel::kContradiction, -1};
  return out;
}

ExportSummary export_pairs(const CleanSet& clean, const SilverDataset& ds,
                           const RelationSchema& schema, const std::string& path,
                           std::uint64_t seed) {
  schema.validate();
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");

  std::map<std::int64_t, const Sample*> by_id;
  for (const auto& s : ds.samples) by_id[s.id] = &s;

  ExportSummary summary;
  for (std::int64_t id : clean.ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw ContractError("clean-set id not in dataset: " +
                                               std::to_string(id));
    const Sample& s = *it->second;
    if (!s.silver_label) throw ContractError("clean-set sample has no silver label: " +
                                             std::to_string(id));
    if (!s.subj || !s.obj) {
      std::cerr << "warning: sample " << id << " lacks mention text, skipped\n";
      ++summary.skipped;
      continue;
    }
    if (!s.text) {
      throw ContractError("sample " + std::to_string(id) +
                          " has no raw sentence to use as premise");
    }
    const std::uint64_t sample_seed = derive_seed(seed, "pairs") ^ splitmix64(id);
    const bool negative = schema.label_space.negative_index &&
                          *s.silver_label == *schema.label_space.negative_index;
    std::vector<PairRecord> pairs =
        negative ? build_pairs_negative(*s.text, *s.subj, *s.obj, schema, sample_seed)
                 : build_pairs_positive(*s.text, *s.subj, *s.obj, *s.silver_label,
                                        schema, sample_seed);
    for (PairRecord& p : pairs) {
      p.sample_id = id;
      ordered_json obj;
      obj["premise"] = p.premise;
      obj["hypothesis"] = p.hypothesis;
      obj["label"] = te_label_name(p.te_label);
      obj["sample_id"] = p.sample_id;
      out << obj.dump() << "\n";
      ++summary.written;
    }
  }
  return summary;
}

}  // namespace silversieve
