#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "silversieve/dataset.hpp"

using namespace silversieve;
namespace fs = std::filesystem;

namespace {

struct TempFile {
  fs::path path;
  explicit TempFile(const std::string& name) {
    path = fs::temp_directory_path() / ("silversieve_" + name);
  }
  ~TempFile() { std::error_code ec; fs::remove(path, ec); }
};

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

LabelSpace two_class() { return {{"r1", "r2"}, std::nullopt}; }

SynthConfig small_config() {
  SynthConfig cfg;
  cfg.num_classes = 3;
  cfg.class_sizes = {6, 3, 1};
  cfg.feature_dim = 4;
  cfg.mean_separation = 3.0;
  cfg.noise_ratio = 0.0;
  cfg.seed = 42;
  return cfg;
}

}  // namespace

TEST_CASE("load_jsonl maps fields and label names") {
  TempFile f("load.jsonl");
  write_file(f.path,
             R"({"id":0,"features":[1.0,2.0],"silver_label":"r1"})"
             "\n"
             R"({"id":1,"features":[0.5,0.5],"silver_label":"r2","gold_label":"r1"})"
             "\n");
  const auto ds = load_jsonl(f.path.string(), two_class());
  REQUIRE(ds.size() == 2);
  CHECK(ds.feature_dim == 2);
  CHECK(ds.samples[0].id == 0);
  CHECK(ds.samples[0].silver_label == 0);
  CHECK_FALSE(ds.samples[0].gold_label.has_value());
  CHECK(ds.samples[1].silver_label == 1);
  CHECK(ds.samples[1].gold_label == 0);
}

TEST_CASE("load_jsonl errors name the offending line") {
  TempFile f("bad.jsonl");

  SUBCASE("malformed json") {
    write_file(f.path, "{\"id\":0,\"features\":[1.0]}\nnot json\n");
    CHECK_THROWS_WITH_AS(load_jsonl(f.path.string(), two_class()),
                         doctest::Contains("line 2"), ParseError);
  }
  SUBCASE("unknown label name") {
    write_file(f.path, R"({"id":0,"features":[1.0],"silver_label":"bogus"})" "\n");
    CHECK_THROWS_AS(load_jsonl(f.path.string(), two_class()), SchemaError);
  }
  SUBCASE("dimension mismatch") {
    write_file(f.path,
               R"({"id":0,"features":[1.0,2.0]})" "\n" R"({"id":1,"features":[1.0]})" "\n");
    CHECK_THROWS_WITH_AS(load_jsonl(f.path.string(), two_class()),
                         doctest::Contains("line 2"), DimensionError);
  }
}

TEST_CASE("save then load round-trips") {
  auto ds = generate_synthetic(small_config());
  TempFile f("roundtrip.jsonl");
  save_jsonl(ds, f.path.string());
  const auto back = load_jsonl(f.path.string(), ds.label_space);
  REQUIRE(back.size() == ds.size());
  for (int i = 0; i < ds.size(); ++i) {
    CHECK(back.samples[i].id == ds.samples[i].id);
    CHECK(back.samples[i].features == ds.samples[i].features);
    CHECK(back.samples[i].silver_label == ds.samples[i].silver_label);
    CHECK(back.samples[i].gold_label == ds.samples[i].gold_label);
  }
}

TEST_CASE("save_jsonl writes one line per sample, none for empty") {
  auto ds = generate_synthetic(small_config());
  TempFile f("lines.jsonl");
  save_jsonl(ds, f.path.string());
  std::ifstream in(f.path);
  int lines = 0;
  std::string line;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 10);

  SilverDataset empty;
  empty.label_space = two_class();
  empty.feature_dim = 2;
  save_jsonl(empty, f.path.string());
  CHECK(fs::file_size(f.path) == 0);
}

TEST_CASE("generate_synthetic respects sizes, zero noise, determinism") {
  const auto cfg = small_config();
  const auto ds = generate_synthetic(cfg);
  REQUIRE(ds.size() == 10);
  std::vector<int> gold_counts(3, 0);
  for (const auto& s : ds.samples) {
    ++gold_counts[*s.gold_label];
    CHECK(*s.silver_label == *s.gold_label);
  }
  CHECK(gold_counts == std::vector<int>{6, 3, 1});

  const auto again = generate_synthetic(cfg);
  for (int i = 0; i < ds.size(); ++i) {
    CHECK(again.samples[i].features == ds.samples[i].features);
  }
}

TEST_CASE("power-law sizes sum to total and decrease") {
  SynthConfig cfg = small_config();
  cfg.class_sizes.clear();
  cfg.num_classes = 10;
  cfg.feature_dim = 16;
  cfg.power_law_exponent = 1.3;
  cfg.total_n = 2000;
  const auto sizes = cfg.resolved_sizes();
  int total = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    total += sizes[i];
    if (i > 0) CHECK(sizes[i] <= sizes[i - 1]);
    CHECK(sizes[i] >= 1);
  }
  CHECK(total == 2000);
}

TEST_CASE("inject_noise flips exactly round(ratio*N) silver labels") {
  SynthConfig cfg = small_config();
  cfg.class_sizes = {40, 35, 25};
  auto ds = generate_synthetic(cfg);
  const auto noisy = inject_noise(ds, 0.3, NoiseMode::kSymmetric, {}, 7);
  int flipped = 0;
  for (int i = 0; i < noisy.size(); ++i) {
    if (*noisy.samples[i].silver_label != *noisy.samples[i].gold_label) ++flipped;
    CHECK(noisy.samples[i].gold_label == ds.samples[i].gold_label);
    CHECK(noisy.samples[i].features == ds.samples[i].features);
  }
  CHECK(flipped == 30);

  const auto clean = inject_noise(ds, 0.0, NoiseMode::kSymmetric, {}, 7);
  for (const auto& s : clean.samples) CHECK(*s.silver_label == *s.gold_label);
}

TEST_CASE("2-class symmetric flips carry the unique other label") {
  SynthConfig cfg;
  cfg.num_classes = 2;
  cfg.class_sizes = {5, 5};
  cfg.feature_dim = 2;
  cfg.mean_separation = 2.0;
  cfg.seed = 1;
  auto ds = generate_synthetic(cfg);
  const auto noisy = inject_noise(ds, 0.5, NoiseMode::kSymmetric, {}, 3);
  int flipped = 0;
  for (const auto& s : noisy.samples) {
    if (*s.silver_label != *s.gold_label) {
      ++flipped;
      CHECK(*s.silver_label == 1 - *s.gold_label);
    }
  }
  CHECK(flipped == 5);
}

TEST_CASE("inject_noise requires gold labels") {
  SilverDataset ds;
  ds.label_space = two_class();
  ds.feature_dim = 1;
  ds.samples.push_back({0, {1.0}, 0, std::nullopt});
  CHECK_THROWS_AS(inject_noise(ds, 0.5, NoiseMode::kSymmetric, {}, 0), ContractError);
}

TEST_CASE("dataset_stats counts and noise ratio") {
  SynthConfig cfg = small_config();
  const auto ds = generate_synthetic(cfg);
  const auto stats = dataset_stats(ds);
  CHECK(stats.n == 10);
  CHECK(stats.class_counts == std::vector<int>{6, 3, 1});
  REQUIRE(stats.noise_ratio.has_value());
  CHECK(*stats.noise_ratio == doctest::Approx(0.0));

  cfg.class_sizes = {50, 30, 20};
  cfg.noise_ratio = 0.3;
  const auto noisy = generate_synthetic(cfg);
  const auto nstats = dataset_stats(noisy);
  int sum = 0;
  for (int c : nstats.class_counts) sum += c;
  CHECK(sum == nstats.n);
  CHECK(*nstats.noise_ratio == doctest::Approx(0.3));
}

TEST_CASE("fixture noise ratio 16.67% replays") {
  SynthConfig cfg;
  cfg.num_classes = 4;
  cfg.class_sizes = {3000, 2000, 800, 200};
  cfg.feature_dim = 8;
  cfg.mean_separation = 3.0;
  cfg.noise_ratio = 0.1667;
  cfg.seed = 5;
  const auto ds = generate_synthetic(cfg);
  const auto stats = dataset_stats(ds);
  CHECK(*stats.noise_ratio == doctest::Approx(0.1667).epsilon(1e-4));
}

TEST_CASE("synthetic centroids are mean_separation apart in expectation") {
  SynthConfig cfg = small_config();
  cfg.class_sizes = {2000, 2000, 2000};
  cfg.feature_dim = 3;
  const auto ds = generate_synthetic(cfg);
  std::vector<std::vector<double>> mean(3, std::vector<double>(3, 0.0));
  std::vector<int> count(3, 0);
  for (const auto& s : ds.samples) {
    for (int d = 0; d < 3; ++d) mean[*s.gold_label][d] += s.features[d];
    ++count[*s.gold_label];
  }
  for (int k = 0; k < 3; ++k) {
    for (int d = 0; d < 3; ++d) mean[k][d] /= count[k];
  }
  for (int a = 0; a < 3; ++a) {
    for (int b = a + 1; b < 3; ++b) {
      double dist = 0;
      for (int d = 0; d < 3; ++d) {
        dist += (mean[a][d] - mean[b][d]) * (mean[a][d] - mean[b][d]);
      }
      CHECK(std::sqrt(dist) == doctest::Approx(3.0).epsilon(0.05));
    }
  }
}
