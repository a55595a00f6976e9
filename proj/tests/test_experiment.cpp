#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "satmc/experiment.hpp"

using namespace satmc;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("satmc_exp_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

json small_config_json(const fs::path& out) {
  return json{{"name", "full"},
              {"synthetic",
               {{"n_source", 45},
                {"n_target", 45},
                {"num_classes", 3},
                {"homophily_source", 0.8},
                {"homophily_target", 0.3},
                {"feature_dim", 12},
                {"avg_degree", 6.0},
                {"seed", 4}}},
              {"train",
               {{"epochs", 3},
                {"gie_epochs", 2},
                {"hidden_dim", 8},
                {"out_dim", 4},
                {"oi_scale", 1e-4},
                {"seed", 9}}},
              {"num_seeds", 2},
              {"output_dir", out.string()}};
}

int count_lines(const fs::path& p) {
  std::ifstream in(p);
  int n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

}  // namespace

TEST_CASE("config validation") {
  json j = small_config_json(temp_dir("cfg"));
  SECTION("valid config parses") { CHECK_NOTHROW(experiment_config_from_json(j)); }
  SECTION("dataset and synthetic together are rejected") {
    j["dataset"] = {{"source", "a"}, {"target", "b"}};
    CHECK_THROWS_WITH(experiment_config_from_json(j),
                      Catch::Matchers::ContainsSubstring("config error"));
  }
  SECTION("neither dataset nor synthetic is rejected") {
    j.erase("synthetic");
    CHECK_THROWS_WITH(experiment_config_from_json(j),
                      Catch::Matchers::ContainsSubstring("config error"));
  }
  SECTION("num_seeds must be positive") {
    j["num_seeds"] = 0;
    CHECK_THROWS_WITH(experiment_config_from_json(j),
                      Catch::Matchers::ContainsSubstring("config error"));
  }
  SECTION("unknown optimizer is rejected") {
    j["train"]["optimizer"] = "lbfgs";
    CHECK_THROWS_WITH(experiment_config_from_json(j),
                      Catch::Matchers::ContainsSubstring("config error"));
  }
}

TEST_CASE("run_experiment writes per-seed artifacts and an aggregate") {
  const fs::path out = temp_dir("run");
  const ExperimentConfig cfg = experiment_config_from_json(small_config_json(out));
  const ExperimentResult result = run_experiment(cfg);

  REQUIRE(result.runs.size() == 2);
  CHECK(fs::exists(out / "results.json"));
  for (int k = 0; k < 2; ++k) {
    const fs::path run = out / ("seed_" + std::to_string(k));
    CHECK(fs::exists(run / "results.json"));
    CHECK(fs::exists(run / "metrics.csv"));
    CHECK(fs::exists(run / "mmd.csv"));
    CHECK(fs::exists(run / "checkpoint.bin"));
    CHECK(fs::exists(run / "embeddings_source.tsv"));
    CHECK(fs::exists(run / "embeddings_target.tsv"));
    CHECK(fs::exists(run / "projection.tsv"));
    CHECK(fs::exists(run / "eval.json"));
    CHECK(count_lines(run / "metrics.csv") == 1 + 3);  // header + epochs
  }
  const double expect_mean = 0.5 * (result.runs[0].target_accuracy + result.runs[1].target_accuracy);
  CHECK(result.mean_accuracy == Approx(expect_mean));
}

TEST_CASE("single seed aggregate equals the run") {
  const fs::path out = temp_dir("single");
  json j = small_config_json(out);
  j["num_seeds"] = 1;
  const ExperimentResult r = run_experiment(experiment_config_from_json(j));
  CHECK(r.mean_accuracy == Approx(r.runs[0].target_accuracy));
  CHECK(r.std_accuracy == Approx(0.0).margin(1e-12));
}

TEST_CASE("identical configs reproduce results.json exactly modulo timing") {
  const fs::path out_a = temp_dir("det_a"), out_b = temp_dir("det_b");
  json j = small_config_json(out_a);
  const ExperimentResult a = run_experiment(experiment_config_from_json(j));
  j["output_dir"] = out_b.string();
  const ExperimentResult b = run_experiment(experiment_config_from_json(j));
  CHECK(results_equal_ignoring_timing(a.aggregate_json, b.aggregate_json));
  // raw json differs only in wall-clock fields
  CHECK(strip_timing(a.aggregate_json) == strip_timing(b.aggregate_json));
}

TEST_CASE("jobs > 1 reproduces the serial outputs") {
  const fs::path out_a = temp_dir("jobs1"), out_b = temp_dir("jobs2");
  json j = small_config_json(out_a);
  const ExperimentResult serial = run_experiment(experiment_config_from_json(j));
  j["output_dir"] = out_b.string();
  j["jobs"] = 2;
  const ExperimentResult threaded = run_experiment(experiment_config_from_json(j));
  CHECK(results_equal_ignoring_timing(serial.aggregate_json, threaded.aggregate_json));
}

TEST_CASE("ablation switches map onto training behavior") {
  const fs::path out = temp_dir("ablate");
  json j = small_config_json(out);
  j["num_seeds"] = 1;
  j["ablations"] = {{"disable_diffusion", true},
                    {"disable_wass", true},
                    {"disable_oi", true},
                    {"disable_entropy", true}};
  const ExperimentConfig cfg = experiment_config_from_json(j);
  CHECK(cfg.train.disable_diffusion);
  const ExperimentResult r = run_experiment(cfg);
  const json& final_losses = r.aggregate_json["runs"][0]["final_losses"];
  CHECK(final_losses["l_oi"].get<double>() == 0.0);
  CHECK(final_losses["eta"].get<double>() == 0.0);
  CHECK(final_losses["total"].get<double>() == Approx(final_losses["l_cls"].get<double>()));
}

TEST_CASE("checkpoint round-trips the encoder parameters") {
  const fs::path dir = temp_dir("ckpt");
  Rng rng(3);
  EncoderParams p;
  p.gce = GraphConvStack::init(5, 7, 3, 2, 0.5, false, rng);
  p.clf_weight = glorot_uniform(3, 4, rng);
  p.clf_bias = Eigen::MatrixXd::Zero(1, 4);
  p.gie_source = GraphConvStack::init(5, 7, 3, 2, 0.5, false, rng);
  p.gie_target = GraphConvStack::init(5, 7, 3, 2, 0.5, false, rng);
  p.disc_source = glorot_uniform(3, 3, rng);
  p.disc_target = glorot_uniform(3, 3, rng);

  save_checkpoint(dir / "ckpt.bin", encoder_params_to_tensors(p));
  const EncoderParams q = encoder_params_from_tensors(load_checkpoint(dir / "ckpt.bin"));
  CHECK(q.gce.weights[0] == p.gce.weights[0]);
  CHECK(q.gce.weights[1] == p.gce.weights[1]);
  CHECK(q.clf_weight == p.clf_weight);
  CHECK(q.disc_target == p.disc_target);
  CHECK(q.gie_source.weights.size() == 2);

  CHECK_THROWS_WITH(load_checkpoint(dir / "missing.bin"),
                    Catch::Matchers::ContainsSubstring("format error"));
}

TEST_CASE("emit_tables aggregates runs into tables and series") {
  const fs::path root = temp_dir("tables");
  const char* names[] = {"full", "wo_oi", "wo_ngdc"};
  for (const char* name : names) {
    json j = small_config_json(root / name);
    j["name"] = name;
    j["num_seeds"] = 1;
    j["pair"] = "S->T";
    if (std::string(name) == "wo_oi") j["ablations"] = {{"disable_oi", true}};
    if (std::string(name) == "wo_ngdc")
      j["ablations"] = {{"disable_diffusion", true},
                        {"disable_wass", true},
                        {"disable_oi", true},
                        {"disable_entropy", true}};
    run_experiment(experiment_config_from_json(j));
  }
  emit_tables(root);
  CHECK(fs::exists(root / "tables" / "accuracy.csv"));
  CHECK(fs::exists(root / "tables" / "accuracy.txt"));
  CHECK(fs::exists(root / "tables" / "ablation.csv"));
  CHECK(count_lines(root / "tables" / "accuracy.csv") == 1 + 3);
  CHECK(count_lines(root / "tables" / "ablation.csv") == 2);  // header + one pair row
  // series row count equals epochs
  CHECK(count_lines(root / "series" / "full_seed_0_acc.csv") == 1 + 3);
  CHECK(count_lines(root / "series" / "full_seed_0_mmd.csv") == 1 + 3);

  SECTION("missing artifacts are an incomplete-results error") {
    fs::remove(root / "full" / "seed_0" / "metrics.csv");
    CHECK_THROWS_WITH(emit_tables(root),
                      Catch::Matchers::ContainsSubstring("incomplete results"));
  }
}

TEST_CASE("emit_tables on an empty directory is an incomplete-results error") {
  const fs::path root = temp_dir("tables_empty");
  CHECK_THROWS_WITH(emit_tables(root), Catch::Matchers::ContainsSubstring("incomplete results"));
}

TEST_CASE("dataset-mode experiments load from disk") {
  const fs::path root = temp_dir("dataset_mode");
  const DomainPair pair = generate_shift_pair(40, 40, 2, 0.8, 0.3, 8, 2);
  save_graph(pair.source, root / "src");
  AttributedGraph target = pair.target;
  target.labels = pair.target_truth;  // datasets on disk carry the truth
  save_graph(target, root / "tgt");

  json j{{"name", "disk"},
         {"dataset", {{"source", (root / "src").string()}, {"target", (root / "tgt").string()}}},
         {"train",
          {{"epochs", 2}, {"gie_epochs", 1}, {"hidden_dim", 6}, {"out_dim", 3}, {"oi_scale", 1e-4}}},
         {"num_seeds", 1},
         {"output_dir", (root / "out").string()}};
  const ExperimentResult r = run_experiment(experiment_config_from_json(j));
  CHECK(std::isfinite(r.mean_accuracy));
  CHECK(r.mean_accuracy >= 0.0);
  CHECK(fs::exists(root / "out" / "seed_0" / "eval.json"));
}

TEST_CASE("matched structure transfers better than flipped structure for a source-only model") {
  // same-homophily pairs are isomorphic in distribution, so a classifier
  // trained on the source alone should do at least as well there as under a
  // flipped-homophily shift
  TrainConfig tc;
  tc.epochs = 50;
  tc.gie_epochs = 0;
  tc.hidden_dim = 16;
  tc.out_dim = 8;
  tc.disable_diffusion = true;
  tc.disable_wass = true;
  tc.disable_oi = true;
  tc.disable_entropy = true;
  tc.track_per_epoch = false;

  SyntheticOpts opts;
  opts.avg_degree = 8.0;
  double matched = 0.0, shifted = 0.0;
  const int seeds = 3;
  for (int s = 0; s < seeds; ++s) {
    tc.seed = 40 + s;
    const DomainPair same = generate_shift_pair(250, 250, 3, 0.9, 0.9, 18, 700 + s, opts);
    const DomainPair flip = generate_shift_pair(250, 250, 3, 0.9, 0.1, 18, 700 + s, opts);
    matched += train_satmc(same, tc).final_target_accuracy;
    shifted += train_satmc(flip, tc).final_target_accuracy;
  }
  CHECK(matched / seeds >= shifted / seeds);
}
