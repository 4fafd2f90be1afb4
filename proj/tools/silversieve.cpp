// silversieve: detect a clean subset inside noisy silver-labeled data.
//
// Subcommands: synth, annotate, detect, select, export-pairs, evaluate,
// pipeline. Exit codes: 0 success, 2 config/usage, 3 input contract,
// 4 numeric failure, 5 missing ground truth.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "silversieve/annotator.hpp"
#include "silversieve/dataset.hpp"
#include "silversieve/eval_report.hpp"
#include "silversieve/o2u.hpp"
#include "silversieve/selector.hpp"
#include "silversieve/trainer.hpp"
#include "silversieve/verbalizer.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;
using namespace silversieve;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInput = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitNoGold = 5;

LabelSpace label_space_from_file(const std::string& path) {
  // The label space of a stored dataset is recovered from the label names it
  // uses, in order of first appearance.
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  LabelSpace space;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ordered_json obj;
    try {
      obj = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("dataset scan: ") + e.what());
    }
    for (const char* key : {"silver_label", "gold_label"}) {
      if (obj.contains(key) && obj.at(key).is_string()) {
        const std::string name = obj.at(key).get<std::string>();
        if (!space.index_of(name)) space.names.push_back(name);
      }
    }
  }
  if (space.names.empty()) throw SchemaError("no labels found in " + path);
  return space;
}

SilverDataset load_dataset(const std::string& path,
                           const std::string& schema_path = "") {
  if (!schema_path.empty()) {
    return load_jsonl(path, load_schema(schema_path).label_space);
  }
  return load_jsonl(path, label_space_from_file(path));
}

std::string hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  std::ostringstream hex;
  hex << std::hex << fnv1a64(ss.str());
  return hex.str();
}

struct DetectOptions {
  std::string loss = "iwnl";
  std::string detector = "grad";
  int epochs = 10;
  double lr = 0.1;
  int nc = 0;
  int batch = 32;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
  // o2u schedule
  double r_max = 5e-2;
  double r_min = 1e-3;
  int cycle_epochs = 5;
  int rounds = 1;
  int pretrain_epochs = 2;
  double pretrain_lr = 1e-2;
};

// Runs the configured detector and writes confidences plus the side artifact
// (weight history or loss ledger).
void run_detect(const SilverDataset& ds, const DetectOptions& opt,
                const std::string& conf_path, const std::string& aux_path) {
  if (opt.detector == "o2u") {
    CyclicalSchedule sched;
    sched.r_max = opt.r_max;
    sched.r_min = opt.r_min;
    sched.epochs_per_round = opt.cycle_epochs;
    sched.rounds = opt.rounds;
    sched.pretrain_epochs = opt.pretrain_epochs;
    sched.pretrain_lr = opt.pretrain_lr;
    sched.batch_size = opt.batch;
    O2uResult result = o2u_detect(ds, sched, opt.seed);
    save_confidences(result.records, ds.label_space, conf_path);
    if (!aux_path.empty()) save_ledger(result.ledger, aux_path);
    return;
  }
  TrainConfig cfg;
  cfg.loss_kind = loss_kind_from_name(opt.loss);
  cfg.learning_rate = opt.lr;
  cfg.epochs = opt.epochs;
  cfg.batch_size = opt.batch;
  cfg.n_complementary = opt.nc;
  cfg.weight_decay = opt.weight_decay;
  cfg.seed = opt.seed;
  TrainResult result = train_detector(ds, cfg);
  save_confidences(result.records, ds.label_space, conf_path);
  if (!aux_path.empty()) save_weight_history(result.weight_history, aux_path);
}

void add_detect_options(CLI::App* cmd, DetectOptions& opt) {
  cmd->add_option("--loss", opt.loss, "Training loss: ce|nl|iwnl")
      ->check(CLI::IsMember({"ce", "nl", "iwnl"}));
  cmd->add_option("--detector", opt.detector, "Detector: grad|o2u")
      ->check(CLI::IsMember({"grad", "o2u"}));
  cmd->add_option("--epochs", opt.epochs, "Training epochs");
  cmd->add_option("--lr", opt.lr, "Learning rate");
  cmd->add_option("--nc", opt.nc, "Complementary labels per sample (0 = class count)");
  cmd->add_option("--batch", opt.batch, "Minibatch size");
  cmd->add_option("--weight-decay", opt.weight_decay, "Decoupled weight decay");
  cmd->add_option("--seed", opt.seed, "Random seed");
  cmd->add_option("--r-max", opt.r_max, "O2U max cyclical learning rate");
  cmd->add_option("--r-min", opt.r_min, "O2U min cyclical learning rate");
  cmd->add_option("--cycle-epochs", opt.cycle_epochs, "O2U epochs per cycle round");
  cmd->add_option("--rounds", opt.rounds, "O2U cycle rounds");
  cmd->add_option("--pretrain-epochs", opt.pretrain_epochs, "O2U pretraining epochs");
  cmd->add_option("--pretrain-lr", opt.pretrain_lr, "O2U pretraining learning rate");
}

struct PipelineConfig {
  std::string dataset;
  std::string scores;
  std::string schema;
  double stub_corruption = -1.0;
  std::string out_dir;
  DetectOptions detect;
  double eta = 0.05;
  int m = 0;
  int bins = 10;
};

int run_pipeline(const PipelineConfig& cfg) {
  if (cfg.dataset.empty() || cfg.out_dir.empty()) {
    std::cerr << "pipeline: dataset and out dir are required\n";
    return kExitConfig;
  }
  fs::create_directories(cfg.out_dir);
  const fs::path out(cfg.out_dir);
  std::vector<std::pair<std::string, std::string>> artifacts;

  SilverDataset ds = load_dataset(cfg.dataset, cfg.schema);
  const bool do_annotate =
      !cfg.schema.empty() && (!cfg.scores.empty() || cfg.stub_corruption >= 0);
  if (do_annotate) {
    const RelationSchema schema = load_schema(cfg.schema);
    ScoreMatrix scores =
        cfg.scores.empty()
            ? stub_scorer(ds, schema, cfg.stub_corruption,
                          derive_seed(cfg.detect.seed, "stub"))
            : load_scores(cfg.scores);
    ds = annotate_dataset(ds, scores, schema);
    const std::string silver_path = (out / "silver.jsonl").string();
    save_jsonl(ds, silver_path);
    artifacts.emplace_back("silver", silver_path);
  }
  if (!ds.all_have_silver()) {
    throw ContractError("dataset has no silver labels and no annotation inputs given");
  }

  const std::string conf_path = (out / "confidences.jsonl").string();
  const std::string aux_path =
      (out / (cfg.detect.detector == "o2u" ? "ledger.jsonl" : "weight_history.json"))
          .string();
  run_detect(ds, cfg.detect, conf_path, aux_path);
  artifacts.emplace_back("confidences", conf_path);
  artifacts.emplace_back(cfg.detect.detector == "o2u" ? "ledger" : "weight_history",
                         aux_path);

  const auto records = load_confidences(conf_path, ds.label_space);
  CleanSet clean = select_class_aware(records, cfg.eta, cfg.m);
  const std::string clean_path = (out / "clean.json").string();
  save_clean_set(clean, clean_path);
  artifacts.emplace_back("clean_set", clean_path);

  if (!cfg.schema.empty()) {
    const RelationSchema schema = load_schema(cfg.schema);
    const std::string pairs_path = (out / "pairs.jsonl").string();
    const ExportSummary summary = export_pairs(clean, ds, schema, pairs_path,
                                               derive_seed(cfg.detect.seed, "export"));
    std::cerr << "pairs: written=" << summary.written
              << " skipped=" << summary.skipped << "\n";
    artifacts.emplace_back("pairs", pairs_path);
  }

  if (ds.all_have_gold()) {
    const DetectionReport report = build_report(clean, ds, records, cfg.bins);
    ReportEcho echo{cfg.eta, cfg.m, cfg.detect.loss, cfg.detect.seed};
    const std::string report_path = (out / "report.json").string();
    std::ofstream rf(report_path);
    rf << report_to_json(report, echo) << "\n";
    artifacts.emplace_back("report", report_path);
  }

  ordered_json manifest;
  manifest["schema_version"] = 1;
  ordered_json list = ordered_json::array();
  for (const auto& [name, path] : artifacts) {
    ordered_json entry;
    entry["name"] = name;
    entry["file"] = fs::path(path).filename().string();
    entry["fnv1a64"] = hash_file(path);
    list.push_back(entry);
  }
  manifest["artifacts"] = list;
  std::ofstream mf(out / "manifest.json");
  mf << manifest.dump(2) << "\n";
  std::cout << manifest.dump(2) << "\n";
  return kExitOk;
}

PipelineConfig pipeline_config_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config parse error: ") + e.what());
  }
  PipelineConfig cfg;
  cfg.dataset = doc.value("dataset", "");
  cfg.scores = doc.value("scores", "");
  cfg.schema = doc.value("schema", "");
  cfg.stub_corruption = doc.value("stub_corruption", -1.0);
  cfg.out_dir = doc.value("out", "");
  cfg.eta = doc.value("eta", 0.05);
  cfg.m = doc.value("m", 0);
  cfg.bins = doc.value("bins", 10);
  cfg.detect.loss = doc.value("loss", "iwnl");
  cfg.detect.detector = doc.value("detector", "grad");
  cfg.detect.epochs = doc.value("epochs", 10);
  cfg.detect.lr = doc.value("lr", 0.1);
  cfg.detect.nc = doc.value("nc", 0);
  cfg.detect.batch = doc.value("batch", 32);
  cfg.detect.weight_decay = doc.value("weight_decay", 0.0);
  cfg.detect.seed = doc.value("seed", std::uint64_t{0});
  cfg.detect.r_max = doc.value("r_max", 5e-2);
  cfg.detect.r_min = doc.value("r_min", 1e-3);
  cfg.detect.cycle_epochs = doc.value("cycle_epochs", 5);
  cfg.detect.rounds = doc.value("rounds", 1);
  cfg.detect.pretrain_epochs = doc.value("pretrain_epochs", 2);
  cfg.detect.pretrain_lr = doc.value("pretrain_lr", 1e-2);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"silversieve: clean-data detection for noisy silver-labeled datasets"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic noisy dataset");
  int sy_classes = 0, sy_n = 0, sy_dim = 16;
  double sy_power = 0.0, sy_sep = 3.0, sy_noise = 0.0;
  std::vector<int> sy_sizes;
  std::uint64_t sy_seed = 0;
  std::string sy_out, sy_mode = "symmetric";
  bool sy_mentions = false;
  synth->add_option("--classes", sy_classes, "Number of classes")->required();
  synth->add_option("--n", sy_n, "Total samples (power-law sizing)");
  synth->add_option("--sizes", sy_sizes, "Explicit per-class sizes");
  synth->add_option("--power-law", sy_power, "Power-law exponent for class sizes");
  synth->add_option("--dim", sy_dim, "Feature dimension");
  synth->add_option("--sep", sy_sep, "Centroid separation");
  synth->add_option("--noise", sy_noise, "Noise ratio in [0,1]");
  synth->add_option("--noise-mode", sy_mode, "symmetric|pairwise")
      ->check(CLI::IsMember({"symmetric"}));
  synth->add_option("--seed", sy_seed, "Random seed");
  synth->add_option("--out", sy_out, "Output JSONL path")->required();
  synth->add_flag("--with-mentions", sy_mentions,
                  "Attach placeholder mentions and sentence text");

  // annotate
  auto* annotate = app.add_subcommand("annotate", "Attach silver labels from scores");
  std::string an_dataset, an_scores, an_schema, an_out;
  double an_stub = -1.0;
  std::uint64_t an_seed = 0;
  annotate->add_option("--dataset", an_dataset)->required();
  annotate->add_option("--scores", an_scores, "Score matrix JSONL");
  annotate->add_option("--schema", an_schema, "Relation schema JSON")->required();
  annotate->add_option("--stub-corruption", an_stub,
                       "Generate scores with the stub scorer at this corruption");
  annotate->add_option("--seed", an_seed);
  annotate->add_option("--out", an_out)->required();

  // detect
  auto* detect = app.add_subcommand("detect", "Train the detector, emit confidences");
  std::string de_dataset, de_out, de_aux;
  DetectOptions de_opt;
  detect->add_option("--dataset", de_dataset)->required();
  detect->add_option("--out", de_out, "Confidence JSONL path")->required();
  detect->add_option("--aux", de_aux, "Weight history / loss ledger path");
  add_detect_options(detect, de_opt);

  // select
  auto* select = app.add_subcommand("select", "Select the clean set");
  std::string se_conf, se_dataset, se_out;
  double se_eta = 0.05;
  int se_m = 0;
  select->add_option("--confidences", se_conf)->required();
  select->add_option("--dataset", se_dataset, "Dataset (for the label space)")->required();
  select->add_option("--eta", se_eta, "Selection proportion in (0,1]");
  select->add_option("--m", se_m, "Diversity number");
  select->add_option("--out", se_out)->required();

  // export-pairs
  auto* exp = app.add_subcommand("export-pairs", "Export premise-hypothesis pairs");
  std::string ex_clean, ex_dataset, ex_schema, ex_out;
  std::uint64_t ex_seed = 0;
  exp->add_option("--clean", ex_clean)->required();
  exp->add_option("--dataset", ex_dataset)->required();
  exp->add_option("--schema", ex_schema)->required();
  exp->add_option("--seed", ex_seed);
  exp->add_option("--out", ex_out)->required();

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Detection-quality report");
  std::string ev_clean, ev_dataset, ev_conf, ev_out, ev_loss = "iwnl";
  int ev_bins = 10;
  double ev_eta = 0.0;
  int ev_m = 0;
  std::uint64_t ev_seed = 0;
  bool ev_gold_split = false;
  eval->add_option("--clean", ev_clean)->required();
  eval->add_option("--dataset", ev_dataset)->required();
  eval->add_option("--confidences", ev_conf)->required();
  eval->add_option("--bins", ev_bins, "Histogram bins");
  eval->add_option("--loss", ev_loss, "Echoed loss name");
  eval->add_option("--seed", ev_seed, "Echoed seed");
  eval->add_flag("--gold-split", ev_gold_split,
                 "Use gold counts for the majority/minority split");
  eval->add_option("--out", ev_out)->required();

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "Run all stages from a config file");
  std::string pi_config, pi_out_override, pi_dataset_override;
  std::uint64_t pi_seed = 0;
  bool pi_seed_set = false;
  pipe->add_option("--config", pi_config, "Pipeline config JSON")->required();
  pipe->add_option("--out", pi_out_override, "Override output directory");
  pipe->add_option("--dataset", pi_dataset_override, "Override dataset path");
  pipe->add_option("--seed", pi_seed, "Override seed")
      ->each([&](const std::string&) { pi_seed_set = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*synth) {
      SynthConfig cfg;
      cfg.num_classes = sy_classes;
      cfg.class_sizes = sy_sizes;
      cfg.power_law_exponent = sy_power;
      cfg.total_n = sy_n;
      cfg.feature_dim = sy_dim;
      cfg.mean_separation = sy_sep;
      cfg.noise_ratio = sy_noise;
      cfg.noise_mode = NoiseMode::kSymmetric;
      cfg.seed = sy_seed;
      cfg.with_mentions = sy_mentions;
      try {
        cfg.validate();
      } catch (const ContractError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
      }
      save_jsonl(generate_synthetic(cfg), sy_out);
      return kExitOk;
    }
    if (*annotate) {
      const RelationSchema schema = load_schema(an_schema);
      SilverDataset ds = load_jsonl(an_dataset, schema.label_space);
      ScoreMatrix scores = (an_stub >= 0)
                               ? stub_scorer(ds, schema, an_stub, an_seed)
                               : load_scores(an_scores);
      SilverDataset annotated = annotate_dataset(ds, scores, schema);
      save_jsonl(annotated, an_out);
      const DatasetStats stats = dataset_stats(annotated);
      ordered_json summary;
      summary["n"] = stats.n;
      summary["class_counts"] = stats.class_counts;
      if (stats.noise_ratio) summary["noise_ratio"] = *stats.noise_ratio;
      std::cout << summary.dump() << "\n";
      return kExitOk;
    }
    if (*detect) {
      SilverDataset ds = load_dataset(de_dataset);
      if (de_aux.empty()) {
        de_aux = de_out + (de_opt.detector == "o2u" ? ".ledger.jsonl" : ".weights.json");
      }
      run_detect(ds, de_opt, de_out, de_aux);
      return kExitOk;
    }
    if (*select) {
      if (se_eta <= 0 || se_eta > 1 || se_m < 0) {
        std::cerr << "error: eta must be in (0,1] and m >= 0\n";
        return kExitConfig;
      }
      SilverDataset ds = load_dataset(se_dataset);
      const auto records = load_confidences(se_conf, ds.label_space);
      CleanSet clean = select_class_aware(records, se_eta, se_m);
      save_clean_set(clean, se_out);
      int core = 0, diversity = 0;
      for (const auto& [id, st] : clean.stage) {
        (st == SelectionStage::kCore ? core : diversity)++;
      }
      std::cout << "core=" << core << " diversity=" << diversity << "\n";
      return kExitOk;
    }
    if (*exp) {
      const RelationSchema schema = load_schema(ex_schema);
      SilverDataset ds = load_jsonl(ex_dataset, schema.label_space);
      CleanSet clean = load_clean_set(ex_clean);
      const ExportSummary summary = export_pairs(clean, ds, schema, ex_out, ex_seed);
      ordered_json out;
      out["written"] = summary.written;
      out["skipped"] = summary.skipped;
      std::cout << out.dump() << "\n";
      return kExitOk;
    }
    if (*eval) {
      SilverDataset ds = load_dataset(ev_dataset);
      CleanSet clean = load_clean_set(ev_clean);
      const auto records = load_confidences(ev_conf, ds.label_space);
      const DetectionReport report =
          build_report(clean, ds, records, ev_bins, ev_gold_split);
      ReportEcho echo{ev_eta > 0 ? ev_eta : clean.eta,
                      ev_m > 0 ? ev_m : clean.diversity_m, ev_loss, ev_seed};
      std::ofstream out(ev_out);
      if (!out) throw IoError("cannot open " + ev_out + " for writing");
      out << report_to_json(report, echo) << "\n";
      return kExitOk;
    }
    if (*pipe) {
      PipelineConfig cfg = pipeline_config_from_file(pi_config);
      if (!pi_out_override.empty()) cfg.out_dir = pi_out_override;
      if (!pi_dataset_override.empty()) cfg.dataset = pi_dataset_override;
      if (pi_seed_set) cfg.detect.seed = pi_seed;
      return run_pipeline(cfg);
    }
  } catch (const MissingGoldError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNoGold;
  } catch (const TrainingError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitConfig;
}
