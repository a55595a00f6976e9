#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "satmc/checkpoint.hpp"
#include "satmc/dataset_io.hpp"
#include "satmc/evaluation.hpp"
#include "satmc/synthetic.hpp"
#include "satmc/training.hpp"

namespace satmc {

using nlohmann::json;

struct SyntheticBlock {
  int n_source = 600;
  int n_target = 600;
  int num_classes = 4;
  double homophily_source = 0.9;
  double homophily_target = 0.2;
  int feature_dim = 48;
  SyntheticOpts opts;
  std::uint64_t seed = 7;
  bool vary_per_seed = true;
  bool corrupt_target = false;
  double flip_ones = 0.3;
  double flip_zeros = 0.3;
};

struct DatasetBlock {
  std::filesystem::path source_dir;
  std::filesystem::path target_dir;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string pair_label = "pair";
  std::optional<DatasetBlock> dataset;
  std::optional<SyntheticBlock> synthetic;
  TrainConfig train;
  int num_seeds = 1;
  int jobs = 1;
  std::filesystem::path output_dir = "out";
  bool dump_diffusion = false;

  void validate() const {
    if (dataset.has_value() == synthetic.has_value())
      fail("config error", "exactly one of {dataset, synthetic} must be present");
    if (num_seeds < 1) fail("config error", "num_seeds must be >= 1");
    if (jobs < 1) fail("config error", "jobs must be >= 1");
    train.validate();
  }
};

namespace detail {

inline OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "adam" || s == "adaptive-moment") return OptimizerKind::kAdam;
  if (s == "sgd" || s == "plain-sgd") return OptimizerKind::kSgd;
  fail("config error", "unknown optimizer '" + s + "'");
}

inline std::string optimizer_to_string(OptimizerKind k) {
  return k == OptimizerKind::kAdam ? "adam" : "sgd";
}

inline DiffusionMode diffusion_mode_from_string(const std::string& s) {
  if (s == "closed") return DiffusionMode::kClosed;
  if (s == "series") return DiffusionMode::kSeries;
  fail("config error", "unknown diffusion mode '" + s + "'");
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  detail::read_field(j, "alpha", c.alpha);
  detail::read_field(j, "xi", c.xi);
  detail::read_field(j, "lambda", c.lambda);
  detail::read_field(j, "epochs", c.epochs);
  detail::read_field(j, "gie_epochs", c.gie_epochs);
  detail::read_field(j, "learning_rate", c.learning_rate);
  detail::read_field(j, "gie_learning_rate", c.gie_learning_rate);
  detail::read_field(j, "weight_decay", c.weight_decay);
  detail::read_field(j, "hidden_dim", c.hidden_dim);
  detail::read_field(j, "out_dim", c.out_dim);
  detail::read_field(j, "gie_hidden_dim", c.gie_hidden_dim);
  detail::read_field(j, "gie_out_dim", c.gie_out_dim);
  detail::read_field(j, "num_layers", c.num_layers);
  detail::read_field(j, "dropout", c.dropout);
  detail::read_field(j, "seed", c.seed);
  detail::read_field(j, "use_bias", c.use_bias);
  detail::read_field(j, "learnable_pi", c.learnable_pi);
  detail::read_field(j, "oi_scale", c.oi_scale);
  detail::read_field(j, "input_projection_dim", c.input_projection_dim);
  detail::read_field(j, "series_order", c.series_order);
  detail::read_field(j, "track_per_epoch", c.track_per_epoch);
  if (j.contains("optimizer")) c.optimizer = detail::optimizer_from_string(j.at("optimizer"));
  if (j.contains("diffusion_mode"))
    c.diffusion_mode = detail::diffusion_mode_from_string(j.at("diffusion_mode"));
  return c;
}

inline json train_config_to_json(const TrainConfig& c) {
  return json{{"alpha", c.alpha},
              {"xi", c.xi},
              {"lambda", c.lambda},
              {"epochs", c.epochs},
              {"gie_epochs", c.gie_epochs},
              {"learning_rate", c.learning_rate},
              {"gie_learning_rate", c.gie_learning_rate},
              {"weight_decay", c.weight_decay},
              {"hidden_dim", c.hidden_dim},
              {"out_dim", c.out_dim},
              {"gie_hidden_dim", c.gie_hidden_dim},
              {"gie_out_dim", c.gie_out_dim},
              {"num_layers", c.num_layers},
              {"dropout", c.dropout},
              {"seed", c.seed},
              {"optimizer", detail::optimizer_to_string(c.optimizer)},
              {"use_bias", c.use_bias},
              {"learnable_pi", c.learnable_pi},
              {"oi_scale", c.oi_scale},
              {"input_projection_dim", c.input_projection_dim},
              {"diffusion_mode", c.diffusion_mode == DiffusionMode::kClosed ? "closed" : "series"},
              {"series_order", c.series_order},
              {"track_per_epoch", c.track_per_epoch},
              {"disable_diffusion", c.disable_diffusion},
              {"disable_wass", c.disable_wass},
              {"disable_oi", c.disable_oi},
              {"disable_entropy", c.disable_entropy}};
}

inline ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig c;
  detail::read_field(j, "name", c.name);
  detail::read_field(j, "pair", c.pair_label);
  detail::read_field(j, "num_seeds", c.num_seeds);
  detail::read_field(j, "jobs", c.jobs);
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  detail::read_field(j, "dump_diffusion", c.dump_diffusion);

  if (j.contains("dataset")) {
    DatasetBlock d;
    d.source_dir = j.at("dataset").at("source").get<std::string>();
    d.target_dir = j.at("dataset").at("target").get<std::string>();
    c.dataset = d;
  }
  if (j.contains("synthetic")) {
    const json& s = j.at("synthetic");
    SyntheticBlock b;
    detail::read_field(s, "n_source", b.n_source);
    detail::read_field(s, "n_target", b.n_target);
    detail::read_field(s, "num_classes", b.num_classes);
    detail::read_field(s, "homophily_source", b.homophily_source);
    detail::read_field(s, "homophily_target", b.homophily_target);
    detail::read_field(s, "feature_dim", b.feature_dim);
    detail::read_field(s, "avg_degree", b.opts.avg_degree);
    detail::read_field(s, "band_on", b.opts.band_on);
    detail::read_field(s, "noise_on", b.opts.noise_on);
    detail::read_field(s, "seed", b.seed);
    detail::read_field(s, "vary_per_seed", b.vary_per_seed);
    if (s.contains("corrupt_target")) {
      b.corrupt_target = true;
      detail::read_field(s.at("corrupt_target"), "flip_ones", b.flip_ones);
      detail::read_field(s.at("corrupt_target"), "flip_zeros", b.flip_zeros);
    }
    c.synthetic = b;
  }
  if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
  if (j.contains("ablations")) {
    const json& a = j.at("ablations");
    detail::read_field(a, "disable_diffusion", c.train.disable_diffusion);
    detail::read_field(a, "disable_wass", c.train.disable_wass);
    detail::read_field(a, "disable_oi", c.train.disable_oi);
    detail::read_field(a, "disable_entropy", c.train.disable_entropy);
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("config error", "cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail("config error", std::string("bad config JSON: ") + e.what());
  }
  return experiment_config_from_json(j);
}

/// Materializes the domain pair for one run index.
inline DomainPair build_pair(const ExperimentConfig& cfg, int run_index) {
  if (cfg.dataset) {
    AttributedGraph source = load_graph(cfg.dataset->source_dir);
    AttributedGraph target = load_graph(cfg.dataset->target_dir);
    return make_domain_pair(std::move(source), std::move(target));
  }
  const SyntheticBlock& s = *cfg.synthetic;
  const std::uint64_t pair_seed = s.vary_per_seed ? s.seed + static_cast<std::uint64_t>(run_index)
                                                  : s.seed;
  DomainPair pair = generate_shift_pair(s.n_source, s.n_target, s.num_classes, s.homophily_source,
                                        s.homophily_target, s.feature_dim, pair_seed, s.opts);
  if (s.corrupt_target) {
    AttributedGraph corrupted =
        corrupt_attributes(pair.target, s.flip_ones, s.flip_zeros, mix_seed(pair_seed, 0xc0));
    pair.target = std::move(corrupted);
  }
  return pair;
}

inline NamedTensors encoder_params_to_tensors(const EncoderParams& p) {
  NamedTensors t;
  auto push_stack = [&t](const std::string& prefix, const GraphConvStack& s) {
    for (std::size_t i = 0; i < s.weights.size(); ++i)
      t.emplace_back(prefix + ".w" + std::to_string(i), s.weights[i]);
    for (std::size_t i = 0; i < s.biases.size(); ++i)
      t.emplace_back(prefix + ".b" + std::to_string(i), s.biases[i]);
  };
  if (p.input_projection.size() != 0) t.emplace_back("input_projection", p.input_projection);
  push_stack("gce", p.gce);
  t.emplace_back("clf.weight", p.clf_weight);
  t.emplace_back("clf.bias", p.clf_bias);
  if (!p.gie_source.weights.empty()) {
    push_stack("gie_source", p.gie_source);
    push_stack("gie_target", p.gie_target);
    t.emplace_back("disc_source", p.disc_source);
    t.emplace_back("disc_target", p.disc_target);
  }
  if (p.pi_param_source.size() != 0) {
    t.emplace_back("pi_param_source", p.pi_param_source);
    t.emplace_back("pi_param_target", p.pi_param_target);
  }
  return t;
}

inline EncoderParams encoder_params_from_tensors(const NamedTensors& t) {
  EncoderParams p;
  auto pull_stack = [&t](const std::string& prefix, GraphConvStack& s) {
    for (int i = 0;; ++i) {
      const auto* w = find_tensor(t, prefix + ".w" + std::to_string(i));
      if (!w) break;
      s.weights.push_back(*w);
    }
    for (int i = 0;; ++i) {
      const auto* b = find_tensor(t, prefix + ".b" + std::to_string(i));
      if (!b) break;
      s.biases.push_back(*b);
    }
  };
  if (const auto* m = find_tensor(t, "input_projection")) p.input_projection = *m;
  pull_stack("gce", p.gce);
  if (p.gce.weights.empty()) fail("format error", "checkpoint lacks encoder weights");
  const auto* cw = find_tensor(t, "clf.weight");
  const auto* cb = find_tensor(t, "clf.bias");
  if (!cw || !cb) fail("format error", "checkpoint lacks classifier tensors");
  p.clf_weight = *cw;
  p.clf_bias = *cb;
  pull_stack("gie_source", p.gie_source);
  pull_stack("gie_target", p.gie_target);
  if (const auto* m = find_tensor(t, "disc_source")) p.disc_source = *m;
  if (const auto* m = find_tensor(t, "disc_target")) p.disc_target = *m;
  if (const auto* m = find_tensor(t, "pi_param_source")) p.pi_param_source = *m;
  if (const auto* m = find_tensor(t, "pi_param_target")) p.pi_param_target = *m;
  return p;
}

namespace detail {

inline void write_metrics_csv(const std::filesystem::path& path, const TrainHistory& h) {
  std::ofstream out(path);
  if (!out) fail("io error", "cannot write " + path.string());
  out << "epoch,l_wass,l_oi,l_cls,l_entropy,eta,total,target_acc\n";
  for (std::size_t i = 0; i < h.reports.size(); ++i) {
    const LossReport& r = h.reports[i];
    out << (i + 1) << ',' << format_double(r.l_wass) << ',' << format_double(r.l_oi) << ','
        << format_double(r.l_cls) << ',' << format_double(r.l_entropy) << ','
        << format_double(r.eta) << ',' << format_double(r.total) << ','
        << format_double(h.target_accuracy[i]) << '\n';
  }
}

inline void write_mmd_csv(const std::filesystem::path& path, const TrainHistory& h) {
  std::ofstream out(path);
  if (!out) fail("io error", "cannot write " + path.string());
  out << "epoch,mmd\n";
  for (std::size_t i = 0; i < h.mmd.size(); ++i)
    out << (i + 1) << ',' << format_double(h.mmd[i]) << '\n';
}

inline void write_embeddings_tsv(const std::filesystem::path& path, const Eigen::MatrixXd& e) {
  std::ofstream out(path);
  if (!out) fail("io error", "cannot write " + path.string());
  for (Eigen::Index i = 0; i < e.rows(); ++i) {
    out << i;
    for (Eigen::Index j = 0; j < e.cols(); ++j) out << '\t' << format_double(e(i, j));
    out << '\n';
  }
}

inline void write_projection_tsv(const std::filesystem::path& path, const Eigen::MatrixXd& proj,
                                 const std::vector<int>& labels) {
  std::ofstream out(path);
  if (!out) fail("io error", "cannot write " + path.string());
  for (Eigen::Index i = 0; i < proj.rows(); ++i)
    out << i << '\t' << format_double(proj(i, 0)) << '\t' << format_double(proj(i, 1)) << '\t'
        << (labels.empty() ? kUnlabeled : labels[i]) << '\n';
}

inline void dump_operator_tsv(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) fail("io error", "cannot write " + path.string());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0) out << i << '\t' << j << '\t' << format_double(m(i, j)) << '\n';
}

}  // namespace detail

struct RunResult {
  int seed_offset = 0;
  std::uint64_t seed = 0;
  double target_accuracy = 0.0;
  TrainHistory history;
  json to_json(bool with_timing = true) const {
    json j{{"seed", seed},
           {"seed_offset", seed_offset},
           {"target_accuracy", target_accuracy},
           {"epochs_run", history.reports.size()}};
    if (!history.reports.empty()) {
      const LossReport& last = history.reports.back();
      j["final_losses"] = {{"l_wass", last.l_wass}, {"l_oi", last.l_oi},
                           {"l_cls", last.l_cls},   {"l_entropy", last.l_entropy},
                           {"eta", last.eta},       {"total", last.total}};
    }
    if (with_timing) {
      double total = 0.0;
      for (double s : history.epoch_seconds) total += s;
      j["wall_clock_seconds"] = total;
    }
    return j;
  }
};

struct ExperimentResult {
  std::vector<RunResult> runs;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  json aggregate_json;
};

/// Runs num_seeds independent trainings (seeds seed+0..seed+k-1), writes
/// per-seed artifacts plus an aggregate results.json. Seeds may run in
/// worker threads; results are reduced in seed order so outputs do not
/// depend on the job count.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  namespace fsys = std::filesystem;
  fsys::create_directories(cfg.output_dir);

  ExperimentResult result;
  result.runs.resize(cfg.num_seeds);
  std::vector<std::string> errors(cfg.num_seeds);

  auto one_run = [&](int k) {
    try {
      TrainConfig tc = cfg.train;
      tc.seed = cfg.train.seed + static_cast<std::uint64_t>(k);
      const DomainPair pair = build_pair(cfg, k);
      const TrainResult tr = train_satmc(pair, tc);

      RunResult& run = result.runs[k];
      run.seed_offset = k;
      run.seed = tc.seed;
      run.target_accuracy = tr.final_target_accuracy;
      run.history = tr.history;

      const fsys::path run_dir = cfg.output_dir / ("seed_" + std::to_string(k));
      fsys::create_directories(run_dir);
      detail::write_metrics_csv(run_dir / "metrics.csv", tr.history);
      detail::write_mmd_csv(run_dir / "mmd.csv", tr.history);
      save_checkpoint(run_dir / "checkpoint.bin", encoder_params_to_tensors(tr.params));
      detail::write_embeddings_tsv(run_dir / "embeddings_source.tsv", tr.embedding_source);
      detail::write_embeddings_tsv(run_dir / "embeddings_target.tsv", tr.embedding_target);
      if (tr.embedding_target.cols() >= 2)
        detail::write_projection_tsv(run_dir / "projection.tsv", project_2d(tr.embedding_target),
                                     pair.target_truth);
      if (cfg.dump_diffusion && !cfg.train.disable_diffusion) {
        detail::dump_operator_tsv(
            run_dir / "diffusion_source.tsv",
            diffuse(pair.source, tc.alpha, tc.xi, tc.diffusion_mode, tc.series_order).matrix);
        detail::dump_operator_tsv(
            run_dir / "diffusion_target.tsv",
            diffuse(pair.target, tc.alpha, tc.xi, tc.diffusion_mode, tc.series_order).matrix);
      }
      {
        json j = run.to_json();
        j["config"] = train_config_to_json(tc);
        std::ofstream out(run_dir / "results.json");
        out << j.dump(2) << "\n";
      }

      // evaluation artifacts when truth exists
      if (!pair.target_truth.empty()) {
        EvalReport er;
        er.target_accuracy = tr.final_target_accuracy;
        er.mmd = mmd_rbf(tr.embedding_source, tr.embedding_target);
        er.per_class = class_scatter(tr.embedding_target, pair.target_truth);
        json pj = json::array();
        for (const auto& s : er.per_class) {
          json centroid = json::array();
          for (Eigen::Index d = 0; d < s.centroid.size(); ++d) centroid.push_back(s.centroid[d]);
          pj.push_back({{"class", s.label},
                        {"centroid", centroid},
                        {"mean_intra_class_distance", s.mean_distance},
                        {"cluster_count", s.cluster_count}});
        }
        std::ofstream out(run_dir / "eval.json");
        out << json{{"target_accuracy", er.target_accuracy}, {"mmd", er.mmd}, {"per_class", pj}}
                   .dump(2)
            << "\n";
      }
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  };

  if (cfg.jobs <= 1 || cfg.num_seeds == 1) {
    for (int k = 0; k < cfg.num_seeds; ++k) one_run(k);
  } else {
    std::vector<std::thread> workers;
    std::atomic<int> next{0};
    const int n_workers = std::min(cfg.jobs, cfg.num_seeds);
    for (int w = 0; w < n_workers; ++w)
      workers.emplace_back([&] {
        for (int k = next.fetch_add(1); k < cfg.num_seeds; k = next.fetch_add(1)) one_run(k);
      });
    for (auto& t : workers) t.join();
  }
  for (int k = 0; k < cfg.num_seeds; ++k)
    if (!errors[k].empty()) throw Error(errors[k]);

  double sum = 0.0, sum_sq = 0.0;
  json per_seed = json::array();
  json runs_json = json::array();
  for (const RunResult& r : result.runs) {
    sum += r.target_accuracy;
    sum_sq += r.target_accuracy * r.target_accuracy;
    per_seed.push_back(r.target_accuracy);
    runs_json.push_back(r.to_json());
  }
  result.mean_accuracy = sum / cfg.num_seeds;
  result.std_accuracy =
      std::sqrt(std::max(0.0, sum_sq / cfg.num_seeds - result.mean_accuracy * result.mean_accuracy));

  result.aggregate_json = json{{"name", cfg.name},
                               {"pair", cfg.pair_label},
                               {"num_seeds", cfg.num_seeds},
                               {"base_seed", cfg.train.seed},
                               {"mean_accuracy", result.mean_accuracy},
                               {"std_accuracy", result.std_accuracy},
                               {"per_seed_accuracy", per_seed},
                               {"runs", runs_json},
                               {"config", train_config_to_json(cfg.train)}};
  std::ofstream out(cfg.output_dir / "results.json");
  if (!out) fail("io error", "cannot write aggregate results.json");
  out << result.aggregate_json.dump(2) << "\n";
  return result;
}

/// Strips volatile timing fields so two runs of the same config compare
/// equal; everything else must match exactly.
inline json strip_timing(json j) {
  if (j.is_object()) {
    j.erase("wall_clock_seconds");
    for (auto& [key, value] : j.items()) value = strip_timing(value);
  } else if (j.is_array()) {
    for (auto& value : j) value = strip_timing(value);
  }
  return j;
}

inline bool results_equal_ignoring_timing(const json& a, const json& b) {
  return strip_timing(a) == strip_timing(b);
}

/// Collects every results.json under the given directory (the directory
/// itself or its immediate children) and writes accuracy tables, the
/// ablation grid, and per-run epoch series for plotting.
inline void emit_tables(const std::filesystem::path& results_dir) {
  namespace fsys = std::filesystem;
  if (!fsys::exists(results_dir)) fail("incomplete results", "no such directory " + results_dir.string());

  struct Entry {
    std::string name, pair;
    double mean = 0.0, stddev = 0.0;
    int num_seeds = 0;
    fsys::path dir;
  };
  std::vector<Entry> entries;
  auto try_load = [&entries](const fsys::path& dir) {
    const fsys::path f = dir / "results.json";
    if (!fsys::exists(f)) return;
    std::ifstream in(f);
    json j;
    try {
      in >> j;
    } catch (const json::exception&) {
      fail("incomplete results", "unreadable " + f.string());
    }
    if (!j.contains("mean_accuracy")) return;  // per-seed results.json
    entries.push_back({j.value("name", dir.filename().string()), j.value("pair", "pair"),
                       j["mean_accuracy"].get<double>(), j.value("std_accuracy", 0.0),
                       j.value("num_seeds", 1), dir});
  };
  try_load(results_dir);
  for (const auto& e : fsys::directory_iterator(results_dir))
    if (e.is_directory()) try_load(e.path());
  if (entries.empty()) fail("incomplete results", "no results.json under " + results_dir.string());
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.name < b.name; });

  fsys::create_directories(results_dir / "tables");
  fsys::create_directories(results_dir / "series");

  {
    std::ofstream csv(results_dir / "tables" / "accuracy.csv");
    std::ofstream txt(results_dir / "tables" / "accuracy.txt");
    csv << "name,pair,mean_accuracy,std_accuracy,num_seeds\n";
    std::size_t width = 4;
    for (const Entry& e : entries) width = std::max(width, e.name.size());
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-*s  %-8s  %-8s  %-8s  %s\n", static_cast<int>(width), "name",
                  "pair", "mean", "std", "seeds");
    txt << buf;
    for (const Entry& e : entries) {
      csv << e.name << ',' << e.pair << ',' << detail::format_double(e.mean) << ','
          << detail::format_double(e.stddev) << ',' << e.num_seeds << '\n';
      std::snprintf(buf, sizeof(buf), "%-*s  %-8s  %-8.4f  %-8.4f  %d\n", static_cast<int>(width),
                    e.name.c_str(), e.pair.c_str(), e.mean, e.stddev, e.num_seeds);
      txt << buf;
    }
  }

  {
    // canonical ablation grid: one row per pair label
    static const char* kColumns[] = {"wo_ngdc", "wo_wass", "wo_label", "wo_oi", "full"};
    std::map<std::string, std::map<std::string, double>> grid;
    for (const Entry& e : entries)
      for (const char* col : kColumns)
        if (e.name == col) grid[e.pair][col] = e.mean;
    if (!grid.empty()) {
      std::ofstream csv(results_dir / "tables" / "ablation.csv");
      csv << "pair";
      for (const char* col : kColumns) csv << ',' << col;
      csv << '\n';
      for (const auto& [pair, cells] : grid) {
        csv << pair;
        for (const char* col : kColumns) {
          csv << ',';
          const auto it = cells.find(col);
          if (it != cells.end()) csv << detail::format_double(it->second);
        }
        csv << '\n';
      }
    }
  }

  // per-run epoch series (accuracy and discrepancy traces)
  for (const Entry& e : entries) {
    for (const auto& sub : fsys::directory_iterator(e.dir)) {
      if (!sub.is_directory()) continue;
      const std::string leaf = sub.path().filename().string();
      if (leaf.rfind("seed_", 0) != 0) continue;
      const fsys::path metrics = sub.path() / "metrics.csv";
      if (!fsys::exists(metrics))
        fail("incomplete results", "missing " + metrics.string());
      std::ifstream in(metrics);
      std::string line;
      std::getline(in, line);  // header
      std::ofstream acc(results_dir / "series" / (e.name + "_" + leaf + "_acc.csv"));
      acc << "epoch,target_acc\n";
      while (std::getline(in, line)) {
        const auto f = detail::split_fields(line, ',');
        if (f.size() >= 8) acc << f[0] << ',' << f[7] << '\n';
      }
      const fsys::path mmd = sub.path() / "mmd.csv";
      if (fsys::exists(mmd)) {
        std::ifstream min(mmd);
        std::ofstream mout(results_dir / "series" / (e.name + "_" + leaf + "_mmd.csv"));
        std::getline(min, line);
        mout << "epoch,mmd\n";
        while (std::getline(min, line)) mout << line << '\n';
      }
    }
  }
}

}  // namespace satmc
