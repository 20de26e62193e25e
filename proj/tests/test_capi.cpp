#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>

#include "uavsim.h"

namespace fs = std::filesystem;

namespace {

struct ConfigHandle {
  uvs_config* cfg = nullptr;
  ~ConfigHandle() { uvs_config_free(cfg); }
};

// A scenario small enough to train in milliseconds.
uvs_config* make_tiny(const char* method, const char* seed) {
  uvs_config* cfg = nullptr;
  REQUIRE(uvs_config_create("desk", &cfg) == UVS_OK);
  const char* kv[][2] = {
      {"world.n_ues", "2"},        {"world.m_agents", "2"},
      {"world.k_nonagents", "1"},  {"world.episode_steps", "5"},
      {"world.overlap_samples", "400"}, {"train.hidden", "8"},
      {"train.dense_layers", "3"}, {"train.batch_size", "4"},
      {"train.warmup", "4"},       {"train.buffer_capacity", "64"},
      {"train.epochs", "3"},       {"train.eval_episodes", "2"},
      {"train.checkpoint_every", "2"},
  };
  for (auto& e : kv) REQUIRE(uvs_config_set(cfg, e[0], e[1]) == UVS_OK);
  REQUIRE(uvs_config_set(cfg, "run.method", method) == UVS_OK);
  REQUIRE(uvs_config_set(cfg, "run.seed", seed) == UVS_OK);
  return cfg;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::path("capi_test_runs") / name;
  fs::remove_all(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const char* cli = std::getenv("UAVSIM_CLI");
  REQUIRE(cli != nullptr);
  const int rc = std::system((std::string(cli) + " " + args + " >/dev/null 2>&1").c_str());
  return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::strcmp(uvs_version(), "1.0.0") == 0);
  CHECK(std::strcmp(uvs_status_name(UVS_OK), "ok") == 0);
  CHECK(std::strcmp(uvs_status_name(UVS_ERR_CONFIG), "config") == 0);
  CHECK(std::strcmp(uvs_status_name(UVS_ERR_CHECKPOINT), "checkpoint") == 0);
  CHECK(std::strcmp(uvs_status_name(UVS_ERR_INTERNAL), "internal") == 0);
}

TEST_CASE("config handle: create, set, get, errors") {
  uvs_config* cfg = nullptr;
  REQUIRE(uvs_config_create("desk", &cfg) == UVS_OK);
  ConfigHandle guard{cfg};

  char buf[64];
  REQUIRE(uvs_config_get(cfg, "world.n_ues", buf, sizeof(buf)) == UVS_OK);
  CHECK(std::strcmp(buf, "8") == 0);

  CHECK(uvs_config_set(cfg, "world.n_ues", "5") == UVS_OK);
  REQUIRE(uvs_config_get(cfg, "world.n_ues", buf, sizeof(buf)) == UVS_OK);
  CHECK(std::strcmp(buf, "5") == 0);

  CHECK(uvs_config_set(cfg, "world.bogus", "5") == UVS_ERR_CONFIG);
  CHECK(std::strlen(uvs_last_error()) > 0);
  CHECK(uvs_config_set(cfg, "world.n_ues", "x") == UVS_ERR_CONFIG);
  CHECK(uvs_config_load(cfg, "no_such_file.ini") == UVS_ERR_CONFIG);

  // truncation is safe and NUL-terminated
  char tiny[3];
  REQUIRE(uvs_config_get(cfg, "run.method", tiny, sizeof(tiny)) == UVS_OK);
  CHECK(std::strlen(tiny) == 2);

  CHECK(uvs_config_create("galaxy", &cfg) == UVS_ERR_CONFIG);
  CHECK(uvs_config_set(nullptr, "a.b", "1") == UVS_ERR_CONFIG);
  CHECK(uvs_train(nullptr, "x") == UVS_ERR_CONFIG);
}

TEST_CASE("train, eval, export and compare through the shared library") {
  ConfigHandle c{make_tiny("Proposed", "5")};
  const fs::path dir = fresh_dir("flow");
  REQUIRE(uvs_train(c.cfg, (dir / "train").string().c_str()) == UVS_OK);
  CHECK(fs::exists(dir / "train" / "manifest.json"));
  CHECK(fs::exists(dir / "train" / "checkpoint.uvsck"));

  const std::string ckpt = (dir / "train" / "checkpoint.uvsck").string();
  REQUIRE(uvs_eval(c.cfg, ckpt.c_str(), (dir / "eval").string().c_str()) == UVS_OK);
  CHECK(fs::exists(dir / "eval" / "metrics.jsonl"));

  REQUIRE(uvs_export((dir / "train").string().c_str(), "support_rate",
                     (dir / "tau.tsv").string().c_str()) == UVS_OK);
  CHECK(fs::exists(dir / "tau.tsv"));
  CHECK(uvs_export((dir / "train").string().c_str(), "nope",
                   (dir / "x.tsv").string().c_str()) == UVS_ERR_CONFIG);

  ConfigHandle r{make_tiny("Random", "5")};
  REQUIRE(uvs_compare(r.cfg, "Random", "1,2",
                      (dir / "cmp").string().c_str()) == UVS_OK);
  CHECK(fs::exists(dir / "cmp" / "summary.json"));
  CHECK(uvs_compare(r.cfg, "Random", "1,oops",
                    (dir / "cmp2").string().c_str()) == UVS_ERR_CONFIG);
}

TEST_CASE("checkpoint mismatches map to the checkpoint status") {
  ConfigHandle a{make_tiny("Proposed", "6")};
  const fs::path dir = fresh_dir("ckpt");
  REQUIRE(uvs_train(a.cfg, (dir / "train").string().c_str()) == UVS_OK);
  const std::string ckpt = (dir / "train" / "checkpoint.uvsck").string();

  ConfigHandle wide{make_tiny("Proposed", "6")};
  REQUIRE(uvs_config_set(wide.cfg, "train.hidden", "16") == UVS_OK);
  CHECK(uvs_eval(wide.cfg, ckpt.c_str(), (dir / "bad").string().c_str()) ==
        UVS_ERR_CHECKPOINT);
  CHECK(uvs_eval(a.cfg, nullptr, (dir / "none").string().c_str()) ==
        UVS_ERR_CHECKPOINT);
  CHECK(uvs_eval(a.cfg, "missing.uvsck", (dir / "gone").string().c_str()) ==
        UVS_ERR_CHECKPOINT);
}

TEST_CASE("command-line interface exit codes") {
  if (std::getenv("UAVSIM_CLI") == nullptr) {
    MESSAGE("UAVSIM_CLI not set; skipping CLI subprocess checks");
    return;
  }
  const fs::path dir = fresh_dir("cli");
  const std::string overrides =
      " --set world.n_ues=2 --set world.m_agents=2 --set world.k_nonagents=1"
      " --set world.episode_steps=5 --set world.overlap_samples=400"
      " --set train.hidden=8 --set train.dense_layers=3 --set train.batch_size=4"
      " --set train.warmup=4 --set train.buffer_capacity=64 --set train.epochs=3"
      " --set train.eval_episodes=2";

  CHECK(run_cli("train --preset desk --seed 9" + overrides + " --out " +
                (dir / "train").string()) == 0);
  CHECK(fs::exists(dir / "train" / "checkpoint.uvsck"));

  CHECK(run_cli("eval --preset desk --seed 9" + overrides + " --checkpoint " +
                (dir / "train" / "checkpoint.uvsck").string() + " --out " +
                (dir / "eval").string()) == 0);

  CHECK(run_cli("export --run " + (dir / "eval").string() +
                " --figure trajectory --out " + (dir / "traj.tsv").string()) == 0);
  CHECK(fs::exists(dir / "traj.tsv"));

  CHECK(run_cli("compare --preset desk --seed 9" + overrides +
                " --methods Random --seeds 1 --out " + (dir / "cmp").string()) == 0);

  // usage and config errors exit 2
  CHECK(run_cli("") == 2);
  CHECK(run_cli("train --config no_such.ini") == 2);
  CHECK(run_cli("train --preset desk --set nonsense") == 2);
  CHECK(run_cli("export --run " + (dir / "eval").string() + " --figure nope") == 2);
  // checkpoint mismatch exits 3
  CHECK(run_cli("eval --preset desk --seed 9" + overrides +
                " --set train.hidden=16 --checkpoint " +
                (dir / "train" / "checkpoint.uvsck").string() + " --out " +
                (dir / "bad").string()) == 3);
  // help is a success path
  CHECK(run_cli("--help") == 0);
}
