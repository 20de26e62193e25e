#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "uavsim/harness.hpp"

using namespace uavsim;
using namespace uavsim::harness;
using nlohmann::json;
namespace fs = std::filesystem;
using doctest::Approx;

namespace {

config::ScenarioConfig tiny_scenario(uint64_t seed = 11) {
  config::ScenarioConfig c = config::ScenarioConfig::preset("desk");
  c.world.n_ues = 2;
  c.world.m_agents = 2;
  c.world.k_nonagents = 1;
  c.world.episode_steps = 5;
  c.world.overlap_samples = 400;
  c.train.hidden = 8;
  c.train.dense_layers = 3;
  c.train.batch_size = 4;
  c.train.warmup = 4;
  c.train.buffer_capacity = 64;
  c.train.epochs = 4;
  c.train.train_every = 1;
  c.train.checkpoint_every = 2;
  c.train.eval_episodes = 2;
  c.set_master_seed(seed);
  return c;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::path("harness_test_runs") / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<json> records_of(const fs::path& dir, const std::string& type) {
  std::ifstream in(dir / kMetricsFile);
  REQUIRE(in);
  std::vector<json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    if (j.value("type", "") == type) out.push_back(std::move(j));
  }
  return out;
}

}  // namespace

TEST_CASE("zero-epoch run produces a manifest and an empty metrics stream") {
  config::ScenarioConfig c = tiny_scenario();
  c.method = marl::Method::Random;
  c.train.epochs = 0;
  const fs::path dir = fresh_dir("zero");
  const TrainResult r = run_training(c, dir.string());
  CHECK(r.epochs_run == 0);
  CHECK(r.checkpoint.empty());
  CHECK(fs::exists(dir / kManifestFile));
  CHECK(fs::exists(dir / kConfigFile));
  CHECK(fs::exists(dir / kMetricsFile));
  CHECK_FALSE(fs::exists(dir / kCheckpointFile));
  CHECK(records_of(dir, "episode").empty());
  const json manifest = json::parse(slurp(dir / kManifestFile));
  CHECK(manifest["schema"] == "uavsim-manifest-v1");
  CHECK(manifest["epoch"] == 0);
}

TEST_CASE("random method: metrics but no checkpoint, byte-identical reruns") {
  config::ScenarioConfig c = tiny_scenario(21);
  c.method = marl::Method::Random;
  const fs::path d1 = fresh_dir("rand1");
  const fs::path d2 = fresh_dir("rand2");
  run_training(c, d1.string());
  run_training(c, d2.string());
  CHECK_FALSE(fs::exists(d1 / kCheckpointFile));
  CHECK(records_of(d1, "episode").size() == 4);
  CHECK(slurp(d1 / kMetricsFile) == slurp(d2 / kMetricsFile));
}

TEST_CASE("trained run: structural contents and episode records") {
  config::ScenarioConfig c = tiny_scenario(22);
  c.method = marl::Method::Proposed;
  const fs::path dir = fresh_dir("train");
  const TrainResult r = run_training(c, dir.string());
  CHECK(r.checkpoint == (dir / kCheckpointFile).string());
  // every run directory carries config copy, manifest, metrics, checkpoint
  CHECK(fs::exists(dir / kConfigFile));
  CHECK(fs::exists(dir / kManifestFile));
  CHECK(fs::exists(dir / kMetricsFile));
  CHECK(fs::exists(dir / kCheckpointFile));
  const json manifest = json::parse(slurp(dir / kManifestFile));
  CHECK(manifest["epoch"] == 4);
  CHECK(manifest["method"] == "Proposed");
  CHECK(manifest["seed_source"] == "config");
  const auto episodes = records_of(dir, "episode");
  REQUIRE(episodes.size() == 4);
  for (const json& e : episodes) {
    CHECK(e["agent_rewards"].size() == 2);
    CHECK(e["tau"].get<double>() >= 0.0);
    CHECK(e["tau"].get<double>() <= 1.0);
  }
  // first line of the stream is the schema record
  std::ifstream in(dir / kMetricsFile);
  std::string first;
  std::getline(in, first);
  CHECK(json::parse(first)["schema"] == "uavsim-metrics-v1");
}

TEST_CASE("resume continues a run; different config is refused") {
  config::ScenarioConfig c = tiny_scenario(23);
  c.method = marl::Method::Proposed;
  const fs::path dir = fresh_dir("resume");
  run_training(c, dir.string());
  CHECK(records_of(dir, "episode").size() == 4);

  // re-running the finished config is a no-op
  const TrainResult again = run_training(c, dir.string());
  CHECK(again.epochs_run == 0);
  CHECK(records_of(dir, "episode").size() == 4);

  // extending the epoch target resumes from the checkpoint
  c.train.epochs = 6;
  const TrainResult extended = run_training(c, dir.string());
  CHECK(extended.epochs_run == 2);
  const auto episodes = records_of(dir, "episode");
  REQUIRE(episodes.size() == 6);
  CHECK(episodes.back()["epoch"] == 5);
  CHECK(json::parse(slurp(dir / kManifestFile))["epoch"] == 6);

  // any other change is a different run
  config::ScenarioConfig other = tiny_scenario(24);
  other.method = marl::Method::Proposed;
  CHECK_THROWS_AS(run_training(other, dir.string()), std::invalid_argument);
}

TEST_CASE("eval: per-step trace with positions; random needs no checkpoint") {
  config::ScenarioConfig c = tiny_scenario(25);
  c.method = marl::Method::Random;
  const fs::path dir = fresh_dir("evalrand");
  const EvalResult r = run_inference(c, "", dir.string());
  CHECK(r.episodes == 2);
  CHECK(r.mean_support_rate >= 0.0);
  CHECK(r.mean_support_rate <= 1.0);
  const auto steps = records_of(dir, "step");
  REQUIRE(steps.size() == 2 * 5);  // eval_episodes x episode_steps
  for (const json& s : steps) {
    CHECK(s["served_agents"].get<int>() + s["served_nonagents"].get<int>() ==
          s["served_total"].get<int>());
    REQUIRE(s["agents"].size() == 2);
    REQUIRE(s["uavs"].size() == 3);
    for (const json& u : s["uavs"]) {
      if (u["id"].get<int>() < 2) {  // agents stay on the altitude levels
        const double z = u["z"].get<double>();
        bool on_level = false;
        for (double lvl : c.world.altitude_levels_m) on_level = on_level || z == lvl;
        CHECK(on_level);
      }
    }
    for (const json& a : s["agents"]) {
      CHECK(a.contains("r_e"));
      CHECK(a.contains("r_u"));
      CHECK(a.contains("r_total"));
      CHECK(a.contains("energy_j"));
      CHECK(a.contains("served"));
    }
  }
}

TEST_CASE("eval: trained checkpoint loads; mismatches are checkpoint errors") {
  config::ScenarioConfig c = tiny_scenario(26);
  c.method = marl::Method::Proposed;
  const fs::path dir = fresh_dir("evaltrained");
  const TrainResult tr = run_training(c, (dir / "train").string());
  const EvalResult ev = run_inference(c, tr.checkpoint, (dir / "eval").string());
  CHECK(ev.episodes == 2);
  CHECK(records_of(dir / "eval", "step").size() == 10);

  config::ScenarioConfig wider = c;
  wider.train.hidden = 16;
  CHECK_THROWS_AS(run_inference(wider, tr.checkpoint, (dir / "bad").string()),
                  marl::CheckpointError);
  CHECK_THROWS_AS(run_inference(c, "", (dir / "none").string()), marl::CheckpointError);
  CHECK_THROWS_AS(run_inference(c, "missing.uvsck", (dir / "gone").string()),
                  marl::CheckpointError);
}

TEST_CASE("environment variable overrides the seed and is recorded") {
  config::ScenarioConfig c = tiny_scenario(27);
  c.method = marl::Method::Random;
  const fs::path via_env = fresh_dir("seedenv");
  const fs::path via_cfg = fresh_dir("seedcfg");
  ::setenv("UAVSIM_SEED", "4242", 1);
  run_training(c, via_env.string());
  ::unsetenv("UAVSIM_SEED");
  const json manifest = json::parse(slurp(via_env / kManifestFile));
  CHECK(manifest["seed"] == 4242);
  CHECK(manifest["seed_source"] == "env");

  config::ScenarioConfig c2 = tiny_scenario(27);
  c2.method = marl::Method::Random;
  c2.set_master_seed(4242);
  run_training(c2, via_cfg.string());
  CHECK(slurp(via_env / kMetricsFile) == slurp(via_cfg / kMetricsFile));
}

TEST_CASE("compare: summary aggregates, per-cell errors, determinism") {
  config::ScenarioConfig c = tiny_scenario(28);
  c.train.epochs = 2;
  const fs::path d1 = fresh_dir("cmp1");
  const fs::path d2 = fresh_dir("cmp2");
  const std::vector<std::string> methods{"Random", "NoSuchMethod"};
  const std::vector<uint64_t> seeds{1, 2};
  const std::string s1 = compare_methods(c, methods, seeds, d1.string());
  compare_methods(c, methods, seeds, d2.string());
  const json summary = json::parse(slurp(s1));
  CHECK(summary["schema"] == "uavsim-compare-v1");
  REQUIRE(summary["methods"].size() == 2);
  const json& rnd = summary["methods"][0];
  CHECK(rnd["method"] == "Random");
  CHECK(rnd["flops"] == 0);
  CHECK(rnd["cells"].size() == 2);
  CHECK(rnd["cells_ok"] == 2);
  CHECK(rnd.contains("support_rate_mean"));
  CHECK(rnd.contains("residual_energy_j_mean"));
  const json& bogus = summary["methods"][1];
  CHECK(bogus.contains("error"));
  CHECK(slurp(s1) == slurp(d2 / kSummaryFile));
  CHECK_THROWS_AS(compare_methods(c, {}, seeds, d1.string()), std::invalid_argument);
}

TEST_CASE("compare: a trained method populates flops from the topology") {
  config::ScenarioConfig c = tiny_scenario(29);
  c.train.epochs = 2;
  c.train.warmup = 4;
  const fs::path dir = fresh_dir("cmptrained");
  const std::string path =
      compare_methods(c, {"Proposed"}, {3}, dir.string());
  const json summary = json::parse(slurp(path));
  const json& entry = summary["methods"][0];
  CHECK(entry["flops"].get<long long>() > 0);
  CHECK(entry["cells"][0].contains("support_rate"));
  // the per-cell run directory is a complete training run
  const fs::path cell = dir / "Proposed_s3";
  CHECK(fs::exists(cell / kCheckpointFile));
  CHECK(fs::exists(cell / "eval" / kMetricsFile));
}

TEST_CASE("export: figure files, idempotency, error paths") {
  config::ScenarioConfig c = tiny_scenario(30);
  c.method = marl::Method::Proposed;
  const fs::path dir = fresh_dir("export");
  const TrainResult tr = run_training(c, (dir / "train").string());
  run_inference(c, tr.checkpoint, (dir / "eval").string());

  for (const std::string key :
       {"reward_curve", "support_rate", "qos", "overlap", "energy"}) {
    const fs::path out = dir / ("fig_" + key + ".tsv");
    export_figure_data((dir / "train").string(), key, out.string());
    const std::string text = slurp(out);
    CHECK(text.rfind("# uavsim-figure-v1 " + key, 0) == 0);
    // one data row per epoch plus the two header lines
    int lines = 0;
    for (char ch : text) lines += ch == '\n' ? 1 : 0;
    CHECK(lines == 2 + c.train.epochs);
    // idempotent
    export_figure_data((dir / "train").string(), key, out.string());
    CHECK(slurp(out) == text);
  }

  const fs::path traj = dir / "fig_trajectory.tsv";
  export_figure_data((dir / "eval").string(), "trajectory", traj.string());
  const std::string text = slurp(traj);
  CHECK(text.rfind("# uavsim-figure-v1 trajectory", 0) == 0);
  int lines = 0;
  for (char ch : text) lines += ch == '\n' ? 1 : 0;
  // first episode only: steps x (m_agents + k_nonagents) rows + 2 headers
  CHECK(lines == 2 + 5 * 3);

  CHECK_THROWS_AS(export_figure_data((dir / "train").string(), "nope", "x.tsv"),
                  std::invalid_argument);
  CHECK_THROWS_AS(export_figure_data("missing_run_dir", "overlap", "x.tsv"),
                  std::invalid_argument);
  // trajectory needs step records; the training stream has none by default
  CHECK_THROWS_AS(
      export_figure_data((dir / "train").string(), "trajectory", "x.tsv"),
      std::invalid_argument);
}

TEST_CASE("reward_curve columns match the agent count") {
  config::ScenarioConfig c = tiny_scenario(31);
  c.method = marl::Method::Random;
  c.world.m_agents = 3;
  const fs::path dir = fresh_dir("columns");
  run_training(c, dir.string());
  const fs::path out = dir / "reward.tsv";
  export_figure_data(dir.string(), "reward_curve", out.string());
  std::ifstream in(out);
  std::string schema_line, header;
  std::getline(in, schema_line);
  std::getline(in, header);
  CHECK(header == "# epoch\ttotal_reward\tr_b1\tr_b2\tr_b3");
}

TEST_CASE("seed csv parsing") {
  CHECK(parse_seed_list("1,2,3") == std::vector<uint64_t>{1, 2, 3});
  CHECK(parse_seed_list(" 7 , 9 ") == std::vector<uint64_t>{7, 9});
  CHECK_THROWS(parse_seed_list("1,x"));
  CHECK(split_csv("a, b ,c") == std::vector<std::string>{"a", "b", "c"});
}
