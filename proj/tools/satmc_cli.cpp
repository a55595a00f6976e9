// Experiment front door: synthetic dataset generation, diffusion dumps,
// encoder pretraining, training runs, checkpoint evaluation, result tables.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "satmc/experiment.hpp"

namespace fs = std::filesystem;
using satmc::json;

namespace {

// "kind: detail" -> {"error": {"kind": ..., "message": ...}}
int report_error(const std::exception& e) {
  const std::string what = e.what();
  std::string kind = "internal error";
  std::string message = what;
  const auto colon = what.find(": ");
  if (colon != std::string::npos && what.find("error") != std::string::npos &&
      what.find("error") < colon) {
    kind = what.substr(0, colon);
    message = what.substr(colon + 2);
  }
  std::cerr << json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << "\n";
  return 1;
}

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  bool dump_diffusion = false;
};

satmc::ExperimentConfig load_config(const CommonArgs& args) {
  satmc::ExperimentConfig cfg = satmc::load_experiment_config(args.config_path);
  if (!args.out_dir.empty()) cfg.output_dir = args.out_dir;
  if (args.seed) cfg.train.seed = *args.seed;
  if (args.jobs) cfg.jobs = *args.jobs;
  if (args.dump_diffusion) cfg.dump_diffusion = true;
  cfg.validate();
  return cfg;
}

int cmd_synth(const CommonArgs& args) {
  const satmc::ExperimentConfig cfg = load_config(args);
  if (!cfg.synthetic) satmc::fail("config error", "synth requires a synthetic block");
  const satmc::DomainPair pair = satmc::build_pair(cfg, 0);
  satmc::save_graph(pair.source, cfg.output_dir / "source");
  satmc::AttributedGraph target = pair.target;
  target.labels = pair.target_truth;  // datasets on disk keep the truth
  satmc::save_graph(target, cfg.output_dir / "target");
  std::cout << "wrote " << (cfg.output_dir / "source").string() << " and "
            << (cfg.output_dir / "target").string() << "\n";
  return 0;
}

int cmd_diffuse(const std::string& dataset, double alpha, double xi, const std::string& mode,
                int series_order, const std::string& out_file) {
  const satmc::AttributedGraph g = satmc::load_graph(dataset);
  const satmc::DiffusionMode m =
      mode == "series" ? satmc::DiffusionMode::kSeries : satmc::DiffusionMode::kClosed;
  const satmc::DiffusedGraph d = satmc::diffuse(g, alpha, xi, m, series_order);
  std::ofstream out(out_file);
  if (!out) satmc::fail("io error", "cannot write " + out_file);
  for (Eigen::Index i = 0; i < d.matrix.rows(); ++i)
    for (Eigen::Index j = 0; j < d.matrix.cols(); ++j)
      if (d.matrix(i, j) != 0.0)
        out << i << '\t' << j << '\t' << satmc::detail::format_double(d.matrix(i, j)) << '\n';
  std::cout << "wrote " << out_file << "\n";
  return 0;
}

int cmd_pretrain(const CommonArgs& args) {
  const satmc::ExperimentConfig cfg = load_config(args);
  const satmc::DomainPair pair = satmc::build_pair(cfg, 0);
  fs::create_directories(cfg.output_dir);

  auto run_side = [&](const satmc::AttributedGraph& g, std::uint64_t stream,
                      satmc::EmbeddingOrigin origin, const std::string& tag) {
    const satmc::GiePretrainResult r = satmc::pretrain_gie(g, cfg.train, stream, origin);
    satmc::NamedTensors tensors;
    for (std::size_t i = 0; i < r.stack.weights.size(); ++i)
      tensors.emplace_back(tag + ".w" + std::to_string(i), r.stack.weights[i]);
    tensors.emplace_back(tag + ".disc", r.discriminator);
    satmc::save_checkpoint(cfg.output_dir / (tag + "_checkpoint.bin"), tensors);
    satmc::detail::write_embeddings_tsv(cfg.output_dir / ("anchor_" + tag + ".tsv"),
                                        r.embedding.values);
    std::ofstream losses(cfg.output_dir / (tag + "_dgi_loss.csv"));
    losses << "epoch,dgi_loss\n";
    for (std::size_t i = 0; i < r.losses.size(); ++i)
      losses << (i + 1) << ',' << satmc::detail::format_double(r.losses[i]) << '\n';
  };
  run_side(pair.source, 12, satmc::EmbeddingOrigin::kGieSource, "source");
  run_side(pair.target, 13, satmc::EmbeddingOrigin::kGieTarget, "target");
  std::cout << "wrote pretraining artifacts under " << cfg.output_dir.string() << "\n";
  return 0;
}

int cmd_train(const CommonArgs& args) {
  const satmc::ExperimentConfig cfg = load_config(args);
  const satmc::ExperimentResult r = satmc::run_experiment(cfg);
  std::cout << "mean target accuracy " << r.mean_accuracy << " (std " << r.std_accuracy << ") over "
            << r.runs.size() << " seed(s); results in " << cfg.output_dir.string() << "\n";
  return 0;
}

int cmd_eval(const CommonArgs& args, const std::string& checkpoint) {
  const satmc::ExperimentConfig cfg = load_config(args);
  const satmc::DomainPair pair = satmc::build_pair(cfg, 0);
  const satmc::EncoderParams params =
      satmc::encoder_params_from_tensors(satmc::load_checkpoint(checkpoint));

  const satmc::ConvOperator op_s = satmc::detail::structure_operator(pair.source, cfg.train);
  const satmc::ConvOperator op_t = satmc::detail::structure_operator(pair.target, cfg.train);
  const Eigen::Index width =
      std::max(pair.source.features.cols(), pair.target.features.cols());
  const auto [es, et] =
      satmc::gce_forward(op_s, op_t, satmc::pad_features(pair.source.features, width),
                         satmc::pad_features(pair.target.features, width), params);

  fs::create_directories(cfg.output_dir);
  satmc::detail::write_embeddings_tsv(cfg.output_dir / "embeddings_source.tsv", es.values);
  satmc::detail::write_embeddings_tsv(cfg.output_dir / "embeddings_target.tsv", et.values);
  if (et.values.cols() >= 2)
    satmc::detail::write_projection_tsv(cfg.output_dir / "projection.tsv",
                                        satmc::project_2d(et.values), pair.target_truth);

  json out{{"mmd", satmc::mmd_rbf(es.values, et.values)}};
  if (!pair.target_truth.empty()) {
    const std::vector<int> pred = satmc::predict_target(params, et.values);
    out["target_accuracy"] = satmc::accuracy(pred, pair.target_truth);
    json per_class = json::array();
    for (const auto& s : satmc::class_scatter(et.values, pair.target_truth)) {
      json centroid = json::array();
      for (Eigen::Index d = 0; d < s.centroid.size(); ++d) centroid.push_back(s.centroid[d]);
      per_class.push_back({{"class", s.label},
                           {"centroid", centroid},
                           {"mean_intra_class_distance", s.mean_distance},
                           {"cluster_count", s.cluster_count}});
    }
    out["per_class"] = per_class;
  }
  std::ofstream f(cfg.output_dir / "eval.json");
  f << out.dump(2) << "\n";
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SATMC: cross-network node classification via structure-attribute transformations"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string dataset, mode = "closed", out_file = "diffusion.tsv", checkpoint, results_dir;
  double alpha = 0.05, xi = 1e-3;
  int series_order = 64;

  auto add_common = [&](CLI::App* cmd, bool need_config = true) {
    if (need_config)
      cmd->add_option("--config", args.config_path, "experiment config JSON")->required();
    cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", args.seed, "base seed (overrides config)");
    cmd->add_option("--jobs", args.jobs, "parallel seed workers");
    cmd->add_flag("--dump-diffusion", args.dump_diffusion, "dump diffusion operators per run");
  };

  add_common(app.add_subcommand("synth", "generate a synthetic shifted dataset pair"));
  add_common(app.add_subcommand("pretrain", "train the private encoders only"));
  add_common(app.add_subcommand("train", "run the full training pipeline"));
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a pair");
  add_common(eval_cmd);
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint file")->required();

  CLI::App* diffuse_cmd = app.add_subcommand("diffuse", "dump a diffused graph operator");
  diffuse_cmd->add_option("--dataset", dataset, "dataset directory")->required();
  diffuse_cmd->add_option("--alpha", alpha, "teleport probability");
  diffuse_cmd->add_option("--xi", xi, "sparsification threshold");
  diffuse_cmd->add_option("--mode", mode, "closed|series");
  diffuse_cmd->add_option("--series-order", series_order, "series truncation order");
  diffuse_cmd->add_option("--out", out_file, "output tsv path");

  CLI::App* tables_cmd = app.add_subcommand("tables", "aggregate results into tables and series");
  tables_cmd->add_option("--results", results_dir, "directory of experiment outputs")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("synth")) return cmd_synth(args);
    if (app.got_subcommand("pretrain")) return cmd_pretrain(args);
    if (app.got_subcommand("train")) return cmd_train(args);
    if (app.got_subcommand("eval")) return cmd_eval(args, checkpoint);
    if (app.got_subcommand("diffuse"))
      return cmd_diffuse(dataset, alpha, xi, mode, series_order, out_file);
    if (app.got_subcommand("tables")) {
      satmc::emit_tables(results_dir);
      std::cout << "wrote tables and series under " << results_dir << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    return report_error(e);
  }
  return 1;
}
