#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "silversieve/dataset.hpp"

namespace silversieve {

struct Relation {
  std::string name;
  std::vector<std::string> templates;
  // Allowed (subj_type, obj_type) pairs; empty means unconstrained.
  std::set<std::pair<std::string, std::string>> constraints;
};

// Relation inventory plus the no-relation threshold. Relation order defines
// the label space; the no-relation class is the one without templates.
struct RelationSchema {
  std::vector<Relation> relations;
  double threshold = 0.5;
  LabelSpace label_space;

  int num_relations() const { return static_cast<int>(relations.size()); }
  void validate() const;
};

// Per-sample entailment scores, one value per (relation, template).
struct ScoreRow {
  std::map<std::string, std::vector<double>> by_relation;
};

struct ScoreMatrix {
  std::map<std::int64_t, ScoreRow> rows;
};

RelationSchema load_schema(const std::string& path);
ScoreMatrix load_scores(const std::string& path);
void save_scores(const ScoreMatrix& scores, const std::string& path);

// Max over a relation's template scores; the no-relation score is fixed at 0
// because that class is decided by the threshold, not by a template.
std::vector<double> relation_scores(const ScoreRow& row, const RelationSchema& schema);

std::vector<double> apply_type_constraints(const std::vector<double>& scores,
                                           const std::string& subj_type,
                                           const std::string& obj_type,
                                           const RelationSchema& schema);

int infer_label(const std::vector<double>& masked_scores, const RelationSchema& schema);

SilverDataset annotate_dataset(const SilverDataset& ds, const ScoreMatrix& scores,
                               const RelationSchema& schema);

// Controlled stand-in for a textual-entailment model: a 1-corruption fraction
// of samples scores highest on a gold template, the rest on a wrong relation.
ScoreMatrix stub_scorer(const SilverDataset& ds, const RelationSchema& schema,
                        double corruption, std::uint64_t seed);

}  // namespace silversieve
