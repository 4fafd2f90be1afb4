#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "silversieve/annotator.hpp"

using namespace silversieve;
namespace fs = std::filesystem;

namespace {

// Two templated relations plus no_relation, threshold 0.3.
RelationSchema test_schema(double threshold = 0.3) {
  RelationSchema schema;
  schema.threshold = threshold;
  schema.relations.push_back(
      {"per:schools_attended",
       {"{subj} studied in {obj}", "{subj} graduated from {obj}"},
       {{"PERSON", "ORGANIZATION"}}});
  schema.relations.push_back({"per:date_of_birth", {"{subj} was born on {obj}"}, {}});
  schema.relations.push_back({"no_relation", {}, {}});
  schema.label_space.names = {"per:schools_attended", "per:date_of_birth", "no_relation"};
  schema.label_space.negative_index = 2;
  schema.validate();
  return schema;
}

ScoreRow row(std::vector<double> schools, std::vector<double> birth) {
  ScoreRow r;
  r.by_relation["per:schools_attended"] = std::move(schools);
  r.by_relation["per:date_of_birth"] = std::move(birth);
  return r;
}

SilverDataset tiny_dataset(const RelationSchema& schema) {
  SilverDataset ds;
  ds.label_space = schema.label_space;
  ds.feature_dim = 1;
  Sample s;
  s.id = 0;
  s.features = {0.0};
  s.subj_type = "PERSON";
  s.obj_type = "ORGANIZATION";
  ds.samples.push_back(s);
  return ds;
}

}  // namespace

TEST_CASE("relation_scores takes the max over templates") {
  const auto schema = test_schema();
  const auto scores = relation_scores(row({0.2, 0.7}, {0.4}), schema);
  CHECK(scores[0] == doctest::Approx(0.7));
  CHECK(scores[1] == doctest::Approx(0.4));
  CHECK(scores[2] == doctest::Approx(0.0));

  const auto zero = relation_scores(row({0.0, 0.0}, {0.0}), schema);
  CHECK(zero[0] == doctest::Approx(0.0));
}

TEST_CASE("relation_scores rejects missing template cells") {
  const auto schema = test_schema();
  CHECK_THROWS_AS(relation_scores(row({0.2}, {0.4}), schema), ContractError);
  ScoreRow empty;
  CHECK_THROWS_AS(relation_scores(empty, schema), ContractError);
}

TEST_CASE("apply_type_constraints zeroes mismatches only") {
  const auto schema = test_schema();
  const std::vector<double> scores{0.9, 0.4, 0.0};
  const auto mismatched = apply_type_constraints(scores, "ORG", "DATE", schema);
  CHECK(mismatched[0] == doctest::Approx(0.0));
  CHECK(mismatched[1] == doctest::Approx(0.4));  // unconstrained passes through
  const auto matched =
      apply_type_constraints(scores, "PERSON", "ORGANIZATION", schema);
  CHECK(matched[0] == doctest::Approx(0.9));
}

TEST_CASE("infer_label thresholds and tie-breaks") {
  const auto schema = test_schema();
  CHECK(infer_label({0.4, 0.0, 0.0}, schema) == 0);
  CHECK(infer_label({0.2, 0.25, 0.0}, schema) == 2);  // all below threshold
  CHECK(infer_label({0.5, 0.5, 0.0}, schema) == 0);   // tie by lowest index
}

TEST_CASE("annotate_dataset composes the three steps") {
  const auto schema = test_schema();
  auto ds = tiny_dataset(schema);
  ScoreMatrix m;
  m.rows[0] = row({0.4, 0.1}, {0.9});
  // birth scores higher but is unconstrained; schools passes its constraint.
  const auto out = annotate_dataset(ds, m, schema);
  CHECK(out.samples[0].silver_label == 1);

  SUBCASE("constraint masking changes the winner") {
    ds.samples[0].subj_type = "ORG";
    ScoreMatrix m2;
    m2.rows[0] = row({0.9, 0.9}, {0.4});
    const auto masked = annotate_dataset(ds, m2, schema);
    CHECK(masked.samples[0].silver_label == 1);
  }
  SUBCASE("missing score row errors") {
    ScoreMatrix empty;
    CHECK_THROWS_AS(annotate_dataset(ds, empty, schema), ContractError);
  }
  SUBCASE("annotation is pure") {
    const auto twice = annotate_dataset(ds, m, schema);
    CHECK(twice.samples[0].silver_label == out.samples[0].silver_label);
  }
}

TEST_CASE("predicted positives never violate constraints") {
  const auto schema = test_schema();
  // Sweep types and scores; whenever the constrained relation wins it must
  // have a matching type pair.
  for (const auto& [st, ot] : std::vector<std::pair<std::string, std::string>>{
           {"PERSON", "ORGANIZATION"}, {"PERSON", "DATE"}, {"ORG", "DATE"}}) {
    for (double a = 0.0; a <= 1.0; a += 0.25) {
      for (double b = 0.0; b <= 1.0; b += 0.25) {
        const auto scores = apply_type_constraints(
            relation_scores(row({a, a / 2}, {b}), schema), st, ot, schema);
        const int pred = infer_label(scores, schema);
        if (pred == 0) {
          CHECK(st == "PERSON");
          CHECK(ot == "ORGANIZATION");
        }
      }
    }
  }
}

TEST_CASE("stub_scorer reproduces gold at zero corruption") {
  auto schema = test_schema();
  // Drop the constraint so annotation is purely score-driven.
  schema.relations[0].constraints.clear();
  SilverDataset ds;
  ds.label_space = schema.label_space;
  ds.feature_dim = 1;
  for (int i = 0; i < 10; ++i) {
    Sample s;
    s.id = i;
    s.features = {0.0};
    s.gold_label = i % 3;
    ds.samples.push_back(s);
  }
  const auto scores = stub_scorer(ds, schema, 0.0, 4);
  const auto out = annotate_dataset(ds, scores, schema);
  for (const auto& s : out.samples) CHECK(*s.silver_label == *s.gold_label);

  SUBCASE("full corruption misannotates everything") {
    const auto bad = stub_scorer(ds, schema, 1.0, 4);
    const auto wrong = annotate_dataset(ds, bad, schema);
    for (const auto& s : wrong.samples) CHECK(*s.silver_label != *s.gold_label);
  }
  SUBCASE("exact-count corruption") {
    const auto part = stub_scorer(ds, schema, 0.4, 4);
    const auto mixed = annotate_dataset(ds, part, schema);
    int wrong = 0;
    for (const auto& s : mixed.samples) {
      if (*s.silver_label != *s.gold_label) ++wrong;
    }
    CHECK(wrong == 4);
  }
  SUBCASE("seeded scorer is deterministic") {
    const auto again = stub_scorer(ds, schema, 0.4, 4);
    const auto a = stub_scorer(ds, schema, 0.4, 4);
    for (const auto& [id, r] : again.rows) {
      CHECK(a.rows.at(id).by_relation == r.by_relation);
    }
  }
}

TEST_CASE("schema file round-trip") {
  const fs::path path = fs::temp_directory_path() / "silversieve_schema.json";
  {
    std::ofstream out(path);
    out << R"({
      "threshold": 0.3,
      "relations": [
        {"name": "per:schools_attended",
         "templates": ["{subj} studied in {obj}"],
         "constraints": ["PERSON:ORGANIZATION"]},
        {"name": "no_relation"}
      ]
    })";
  }
  const auto schema = load_schema(path.string());
  CHECK(schema.threshold == doctest::Approx(0.3));
  REQUIRE(schema.num_relations() == 2);
  CHECK(schema.relations[0].constraints.count({"PERSON", "ORGANIZATION"}) == 1);
  CHECK(schema.label_space.negative_index == 1);
  fs::remove(path);
}

TEST_CASE("score matrix file round-trip") {
  const auto schema = test_schema();
  SilverDataset ds;
  ds.label_space = schema.label_space;
  ds.feature_dim = 1;
  for (int i = 0; i < 5; ++i) {
    Sample s;
    s.id = i;
    s.features = {0.0};
    s.gold_label = i % 2;
    ds.samples.push_back(s);
  }
  const auto scores = stub_scorer(ds, schema, 0.2, 9);
  const fs::path path = fs::temp_directory_path() / "silversieve_scores.jsonl";
  save_scores(scores, path.string());
  const auto back = load_scores(path.string());
  REQUIRE(back.rows.size() == scores.rows.size());
  for (const auto& [id, r] : scores.rows) {
    CHECK(back.rows.at(id).by_relation == r.by_relation);
  }
  fs::remove(path);
}

TEST_CASE("template placeholder validation") {
  RelationSchema schema = test_schema();
  schema.relations[1].templates = {"{subj} met {other}"};
  CHECK_THROWS_AS(schema.validate(), SchemaError);
}
