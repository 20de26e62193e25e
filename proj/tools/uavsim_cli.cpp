// Command-line front end. Talks to the simulator strictly through the C
// API in uavsim.h; status codes map one-to-one onto exit codes.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uavsim.h"

namespace {

struct ConfigArgs {
  std::string config_path;
  std::string preset;
  std::vector<std::string> sets;  // key=value overrides
  uint64_t seed = 0;
  bool has_seed = false;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--config", args.config_path, "Scenario INI file");
  cmd->add_option("--preset", args.preset, "Built-in preset")
      ->check(CLI::IsMember({"desk", "paper"}));
  cmd->add_option("--set", args.sets, "Override a key, e.g. --set train.epochs=100");
  cmd->add_option("--seed", args.seed, "Master seed (sets world and train seeds)")
      ->each([&args](const std::string&) { args.has_seed = true; });
}

int report(uvs_status st) {
  if (st != UVS_OK) {
    std::cerr << "uavsim: " << uvs_status_name(st) << " error: " << uvs_last_error()
              << "\n";
  }
  return static_cast<int>(st);
}

// Builds a config from preset + file + overrides; returns nullptr (and
// prints) on failure.
uvs_config* build_config(const ConfigArgs& args, uvs_status* st_out) {
  uvs_config* cfg = nullptr;
  uvs_status st = uvs_config_create(args.preset.c_str(), &cfg);
  if (st == UVS_OK && !args.config_path.empty()) {
    st = uvs_config_load(cfg, args.config_path.c_str());
  }
  for (size_t i = 0; st == UVS_OK && i < args.sets.size(); ++i) {
    const std::string& kv = args.sets[i];
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      uvs_config_free(cfg);
      std::cerr << "uavsim: config error: --set expects key=value, got " << kv << "\n";
      *st_out = UVS_ERR_CONFIG;
      return nullptr;
    }
    st = uvs_config_set(cfg, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
  }
  if (st == UVS_OK && args.has_seed) {
    st = uvs_config_set(cfg, "run.seed", std::to_string(args.seed).c_str());
  }
  if (st != UVS_OK) {
    uvs_config_free(cfg);
    *st_out = st;
    return nullptr;
  }
  *st_out = UVS_OK;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("uavsim ") + uvs_version() +
               " - cooperative multi-UAV mobile-access simulator"};
  app.require_subcommand(1);

  ConfigArgs train_args;
  std::string train_out;
  CLI::App* train = app.add_subcommand("train", "Train a policy and stream metrics");
  add_config_options(train, train_args);
  train->add_option("--out", train_out, "Run directory (default: run.output_dir)");

  ConfigArgs eval_args;
  std::string eval_ckpt, eval_out = "runs/eval";
  int eval_episodes = 0;
  CLI::App* eval = app.add_subcommand("eval", "Run greedy episodes from a checkpoint");
  add_config_options(eval, eval_args);
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint file (omit for Random)");
  eval->add_option("--out", eval_out, "Output directory");
  eval->add_option("--episodes", eval_episodes, "Evaluation episode count");

  ConfigArgs cmp_args;
  std::string cmp_methods, cmp_seeds, cmp_out = "runs/compare";
  CLI::App* compare = app.add_subcommand("compare", "Benchmark methods across seeds");
  add_config_options(compare, cmp_args);
  compare->add_option("--methods", cmp_methods, "Comma-separated methods")->required();
  compare->add_option("--seeds", cmp_seeds, "Comma-separated seeds")->required();
  compare->add_option("--out", cmp_out, "Output directory");

  std::string exp_run, exp_figure, exp_out;
  CLI::App* exp = app.add_subcommand("export", "Tabulate figure data from a run");
  exp->add_option("--run", exp_run, "Run directory")->required();
  exp->add_option("--figure", exp_figure,
                  "reward_curve|support_rate|qos|overlap|energy|trajectory")
      ->required();
  exp->add_option("--out", exp_out, "Output file (default: <run>/figure_<key>.tsv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(UVS_ERR_CONFIG);
  }

  uvs_status st = UVS_OK;
  if (train->parsed()) {
    uvs_config* cfg = build_config(train_args, &st);
    if (cfg == nullptr) return report(st);
    st = uvs_train(cfg, train_out.empty() ? nullptr : train_out.c_str());
    uvs_config_free(cfg);
    return report(st);
  }
  if (eval->parsed()) {
    uvs_config* cfg = build_config(eval_args, &st);
    if (cfg == nullptr) return report(st);
    if (eval_episodes > 0) {
      st = uvs_config_set(cfg, "train.eval_episodes",
                          std::to_string(eval_episodes).c_str());
    }
    if (st == UVS_OK) {
      st = uvs_eval(cfg, eval_ckpt.empty() ? nullptr : eval_ckpt.c_str(),
                    eval_out.c_str());
    }
    uvs_config_free(cfg);
    return report(st);
  }
  if (compare->parsed()) {
    uvs_config* cfg = build_config(cmp_args, &st);
    if (cfg == nullptr) return report(st);
    st = uvs_compare(cfg, cmp_methods.c_str(), cmp_seeds.c_str(), cmp_out.c_str());
    uvs_config_free(cfg);
    return report(st);
  }
  if (exp->parsed()) {
    if (exp_out.empty()) exp_out = exp_run + "/figure_" + exp_figure + ".tsv";
    return report(uvs_export(exp_run.c_str(), exp_figure.c_str(), exp_out.c_str()));
  }
  return static_cast<int>(UVS_ERR_CONFIG);
}
