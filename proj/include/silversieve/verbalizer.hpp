#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "silversieve/annotator.hpp"
#include "silversieve/selector.hpp"

namespace silversieve {

inline constexpr const char* kNotRelatedTemplate = "{subj} and {obj} are not related";
inline constexpr const char* kSomeRelationTemplate =
    "There is a relation between {subj} and {obj}";

enum class TeLabel { kEntailment, kNeutral, kContradiction };

const char* te_label_name(TeLabel label);

struct PairRecord {
  std::string premise;
  std::string hypothesis;
  TeLabel te_label = TeLabel::kEntailment;
  std::int64_t sample_id = -1;
};

struct ExportSummary {
  int written = 0;
  int skipped = 0;
};

std::string instantiate_template(const std::string& tmpl, const std::string& subj,
                                 const std::string& obj);

// Entailment / neutral / contradiction records for a sample whose silver
// label is a positive relation.
std::vector<PairRecord> build_pairs_positive(const std::string& premise,
                                             const std::string& subj,
                                             const std::string& obj, int relation,
                                             const RelationSchema& schema,
                                             std::uint64_t seed);

// Same, for a no-relation sample.
std::vector<PairRecord> build_pairs_negative(const std::string& premise,
                                             const std::string& subj,
                                             const std::string& obj,
                                             const RelationSchema& schema,
                                             std::uint64_t seed);

ExportSummary export_pairs(const CleanSet& clean, const SilverDataset& ds,
                           const RelationSchema& schema, const std::string& path,
                           std::uint64_t seed);

}  // namespace silversieve
