#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uavsim/config.hpp"

namespace uavsim::harness {

// File names inside a run directory.
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kConfigFile = "config_used.ini";
inline constexpr const char* kMetricsFile = "metrics.jsonl";
inline constexpr const char* kCheckpointFile = "checkpoint.uvsck";
inline constexpr const char* kSummaryFile = "summary.json";

// Evaluation episodes use reset indices far above any training epoch so
// the two never share environment draws.
inline constexpr uint64_t kEvalEpisodeBase = 1ull << 40;

struct TrainResult {
  std::string out_dir;
  std::string checkpoint;  // empty for methods with no parameters
  int epochs_run = 0;
  long long env_steps = 0;
};

struct EvalResult {
  std::string out_dir;
  int episodes = 0;
  double mean_total_reward = 0.0;     // per-episode sum over agents and steps
  double mean_support_rate = 0.0;     // mean over steps and episodes
  double final_support_rate = 0.0;    // last-step support, mean over episodes
  double mean_qos = 0.0;              // mean over steps of system QoS
  double mean_final_residual_j = 0.0; // mean over agents and episodes
};

// Runs cfg.train.epochs training episodes into cfg.output_dir (or out_dir
// when given): manifest, config copy, metrics stream, periodic checkpoints.
// An existing manifest with a matching config hash resumes the run from its
// recorded epoch; a mismatching one is an error. The UAVSIM_SEED
// environment variable overrides the configured seed and is recorded in
// the manifest.
TrainResult run_training(const config::ScenarioConfig& cfg);
TrainResult run_training(const config::ScenarioConfig& cfg, const std::string& out_dir);

// Greedy (epsilon = 0) evaluation episodes with per-step records and UAV
// position snapshots. checkpoint may be empty only for the Random method.
// Throws marl::CheckpointError when the checkpoint does not match the
// configuration.
EvalResult run_inference(const config::ScenarioConfig& cfg, const std::string& checkpoint,
                         const std::string& out_dir);

// Trains and evaluates every (method, seed) cell, then writes one summary
// file with per-cell results and mean/std aggregates plus per-method FLOPS.
// A failing cell is recorded in the summary and does not stop the run.
// Returns the summary path.
std::string compare_methods(const config::ScenarioConfig& base,
                            const std::vector<std::string>& methods,
                            const std::vector<uint64_t>& seeds,
                            const std::string& out_dir);

// Tabulates one figure's data from a run directory's metrics stream into a
// tab-separated file. Keys: reward_curve, support_rate, qos, overlap,
// energy, trajectory. Unknown keys or a missing metrics stream throw
// std::invalid_argument. Re-running produces identical bytes.
void export_figure_data(const std::string& run_dir, const std::string& figure_key,
                        const std::string& out_path);

std::vector<std::string> split_csv(const std::string& csv);
std::vector<uint64_t> parse_seed_list(const std::string& csv);

}  // namespace uavsim::harness
