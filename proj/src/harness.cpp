#include "uavsim/harness.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "uavsim/version.hpp"

namespace uavsim::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string hash_hex(uint64_t h) {
  std::ostringstream ss;
  ss << std::hex << h;
  return ss.str();
}

std::vector<std::vector<double>> all_observations(const world::World& w) {
  std::vector<std::vector<double>> obs(w.config().m_agents);
  for (int m = 0; m < w.config().m_agents; ++m) obs[m] = w.observe(m);
  return obs;
}

std::vector<double> concat_observations(const std::vector<std::vector<double>>& obs) {
  std::vector<double> s;
  size_t total = 0;
  for (const auto& o : obs) total += o.size();
  s.reserve(total);
  for (const auto& o : obs) s.insert(s.end(), o.begin(), o.end());
  return s;
}

json step_record_json(int episode, const world::MetricsRecord& rec,
                      const world::World& w) {
  json agents = json::array();
  for (const world::AgentStepMetrics& a : rec.agents) {
    agents.push_back({{"r_e", a.r_e},
                      {"r_u", a.r_u},
                      {"r_total", a.r_total},
                      {"energy_j", a.energy_j},
                      {"served", a.served}});
  }
  json uavs = json::array();
  for (const world::UavState& u : w.uavs()) {
    uavs.push_back({{"id", u.id},
                    {"x", u.pos.x},
                    {"y", u.pos.y},
                    {"z", u.pos.z},
                    {"alive", u.alive}});
  }
  return json{{"type", "step"},
              {"episode", episode},
              {"step", rec.step},
              {"tau", rec.tau},
              {"omega", rec.omega},
              {"r_common", rec.r_common},
              {"agents", agents},
              {"served_total", rec.served_total},
              {"served_agents", rec.served_agents},
              {"served_nonagents", rec.served_nonagents},
              {"uavs", uavs}};
}

struct EpisodeStats {
  double total_reward = 0.0;
  std::vector<double> agent_rewards;
  double tau_sum = 0.0;
  double omega_sum = 0.0;
  double r_common_sum = 0.0;
  double qos_sum = 0.0;
  double tau_final = 0.0;
  double loss_sum = 0.0;
  int loss_count = 0;
  world::MetricsRecord last;

  void accumulate(const world::StepOutcome& out, double qos) {
    if (agent_rewards.empty()) agent_rewards.assign(out.rewards.size(), 0.0);
    for (size_t m = 0; m < out.rewards.size(); ++m) {
      total_reward += out.rewards[m];
      agent_rewards[m] += out.rewards[m];
    }
    tau_sum += out.metrics.tau;
    omega_sum += out.metrics.omega;
    r_common_sum += out.metrics.r_common;
    qos_sum += qos;
    tau_final = out.metrics.tau;
    last = out.metrics;
  }
};

json episode_record_json(int epoch, int steps, double epsilon, const EpisodeStats& st) {
  json energy = json::array();
  json served = json::array();
  for (const world::AgentStepMetrics& a : st.last.agents) {
    energy.push_back(a.energy_j);
    served.push_back(a.served);
  }
  json rec{{"type", "episode"},
           {"epoch", epoch},
           {"total_reward", st.total_reward},
           {"agent_rewards", st.agent_rewards},
           {"tau", st.tau_sum / steps},
           {"tau_final", st.tau_final},
           {"omega", st.omega_sum / steps},
           {"r_common", st.r_common_sum / steps},
           {"qos", st.qos_sum / steps},
           {"energy_final_j", energy},
           {"served_final", served},
           {"served_total_final", st.last.served_total},
           {"served_agents_final", st.last.served_agents},
           {"served_nonagents_final", st.last.served_nonagents},
           {"epsilon", epsilon}};
  if (st.loss_count > 0) {
    rec["critic_loss"] = st.loss_sum / st.loss_count;
  } else {
    rec["critic_loss"] = nullptr;
  }
  return rec;
}

void write_manifest(const fs::path& path, const json& manifest) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("harness: cannot write " + path.string());
  out << manifest.dump(2) << "\n";
}

json load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("harness: cannot read " + path.string());
  json j;
  in >> j;
  return j;
}

// Applies the UAVSIM_SEED override, if any; returns the seed source label.
std::string apply_seed_override(config::ScenarioConfig& cfg) {
  if (const char* e = std::getenv("UAVSIM_SEED")) {
    cfg.set_master_seed(std::stoull(e));
    return "env";
  }
  return "config";
}

double system_qos(const world::World& w) {
  double total = 0.0;
  for (size_t n = 0; n < w.ues().size(); ++n) {
    if (w.ues()[n].served_by) {
      total += radio::quality(w.ue_rate_mbps(n), w.ues()[n].service);
    }
  }
  return total;
}

}  // namespace

TrainResult run_training(const config::ScenarioConfig& cfg) {
  return run_training(cfg, cfg.output_dir);
}

TrainResult run_training(const config::ScenarioConfig& cfg_in, const std::string& out_dir) {
  config::ScenarioConfig cfg = cfg_in;
  const std::string seed_source = apply_seed_override(cfg);
  cfg.output_dir = out_dir;
  cfg.validate();

  const fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("harness: cannot create " + dir.string());

  const world::WorldConfig wcfg = cfg.effective_world();
  world::World env(wcfg, cfg.radio, cfg.energy);
  marl::Trainer trainer(cfg.method, wcfg, cfg.train);

  int start_epoch = 0;
  long long env_steps = 0;
  const fs::path manifest_path = dir / kManifestFile;
  const fs::path ckpt_path = dir / kCheckpointFile;
  const std::string hash = hash_hex(cfg.config_hash());
  const std::string rhash = hash_hex(cfg.resume_hash());
  bool resuming = false;
  if (fs::exists(manifest_path)) {
    const json old = load_manifest(manifest_path);
    if (old.value("resume_hash", "") != rhash) {
      throw std::invalid_argument("harness: " + dir.string() +
                                  " holds a run with a different config");
    }
    start_epoch = old.value("epoch", 0);
    env_steps = old.value("env_steps", 0ll);
    if (start_epoch >= cfg.train.epochs) {
      TrainResult done;
      done.out_dir = out_dir;
      done.checkpoint = trainer.trainable() && fs::exists(ckpt_path) ? ckpt_path.string() : "";
      done.epochs_run = 0;
      done.env_steps = env_steps;
      return done;
    }
    if (trainer.trainable()) {
      if (!fs::exists(ckpt_path)) {
        throw std::invalid_argument("harness: cannot resume " + dir.string() +
                                    ": checkpoint missing");
      }
      trainer.load(ckpt_path.string());
    }
    resuming = true;
  }

  cfg.write_ini((dir / kConfigFile).string());
  json manifest{{"schema", "uavsim-manifest-v1"},
                {"kind", "train"},
                {"version", kVersion},
                {"config_hash", hash},
                {"resume_hash", rhash},
                {"seed", cfg.world.seed},
                {"seed_source", seed_source},
                {"method", marl::to_string(cfg.method)},
                {"mode", config::to_string(cfg.mode)},
                {"epochs_target", cfg.train.epochs},
                {"epoch", start_epoch},
                {"env_steps", env_steps},
                {"checkpoint", trainer.trainable() ? json(kCheckpointFile) : json(nullptr)}};
  write_manifest(manifest_path, manifest);

  std::ofstream metrics(dir / kMetricsFile, resuming ? std::ios::app : std::ios::out);
  if (!metrics) throw std::runtime_error("harness: cannot write metrics in " + dir.string());
  if (!resuming) metrics << json{{"schema", "uavsim-metrics-v1"}}.dump() << "\n";

  const marl::TrainConfig& tc = cfg.train;
  for (int epoch = start_epoch; epoch < tc.epochs; ++epoch) {
    const double eps = trainer.trainable() ? tc.epsilon_at(epoch) : 1.0;
    env.reset(static_cast<uint64_t>(epoch));
    Rng explore(derive_seed(tc.seed, "exploration", static_cast<uint64_t>(epoch)));
    Rng sample(derive_seed(tc.seed, "sample", static_cast<uint64_t>(epoch)));

    std::vector<std::vector<double>> obs = all_observations(env);
    EpisodeStats stats;
    while (!env.done()) {
      std::vector<double> s = concat_observations(obs);
      const std::vector<int> actions = trainer.act(obs, eps, explore);
      std::vector<world::Action> acts(actions.size());
      for (size_t m = 0; m < actions.size(); ++m) {
        acts[m] = static_cast<world::Action>(actions[m]);
      }
      world::StepOutcome out = env.step(acts);
      marl::Transition tr;
      tr.s = std::move(s);
      tr.actions = actions;
      tr.rewards = out.rewards;
      tr.s_next = concat_observations(out.observations);
      tr.done = out.done;
      trainer.store(std::move(tr));
      ++env_steps;
      if (trainer.trainable() && trainer.ready() && env_steps % tc.train_every == 0) {
        stats.loss_sum += trainer.train_step(sample);
        ++stats.loss_count;
      }
      stats.accumulate(out, system_qos(env));
      if (tc.step_records) {
        metrics << step_record_json(epoch, out.metrics, env).dump() << "\n";
      }
      obs = std::move(out.observations);
    }
    if (trainer.trainable() && (epoch + 1) % tc.target_update_cycle == 0) {
      trainer.sync_targets();
    }
    metrics << episode_record_json(epoch, wcfg.episode_steps, eps, stats).dump() << "\n";

    if (trainer.trainable() &&
        ((epoch + 1) % tc.checkpoint_every == 0 || epoch + 1 == tc.epochs)) {
      trainer.save(ckpt_path.string());
      manifest["epoch"] = epoch + 1;
      manifest["env_steps"] = env_steps;
      write_manifest(manifest_path, manifest);
    }
  }
  metrics.flush();
  manifest["epoch"] = tc.epochs;
  manifest["env_steps"] = env_steps;
  write_manifest(manifest_path, manifest);

  TrainResult result;
  result.out_dir = out_dir;
  result.checkpoint = trainer.trainable() && tc.epochs > 0 ? ckpt_path.string() : "";
  result.epochs_run = tc.epochs - start_epoch;
  result.env_steps = env_steps;
  return result;
}

EvalResult run_inference(const config::ScenarioConfig& cfg_in, const std::string& checkpoint,
                         const std::string& out_dir) {
  config::ScenarioConfig cfg = cfg_in;
  const std::string seed_source = apply_seed_override(cfg);
  cfg.validate();

  const world::WorldConfig wcfg = cfg.effective_world();
  world::World env(wcfg, cfg.radio, cfg.energy);
  marl::Trainer trainer(cfg.method, wcfg, cfg.train);
  if (trainer.trainable()) {
    if (checkpoint.empty()) {
      throw marl::CheckpointError("eval: method " + marl::to_string(cfg.method) +
                                  " requires a checkpoint");
    }
    trainer.load(checkpoint);
  }

  const fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("harness: cannot create " + dir.string());
  cfg.write_ini((dir / kConfigFile).string());
  write_manifest(dir / kManifestFile,
                 json{{"schema", "uavsim-manifest-v1"},
                      {"kind", "eval"},
                      {"version", kVersion},
                      {"config_hash", hash_hex(cfg.config_hash())},
                      {"seed", cfg.world.seed},
                      {"seed_source", seed_source},
                      {"method", marl::to_string(cfg.method)},
                      {"mode", config::to_string(cfg.mode)},
                      {"episodes", cfg.train.eval_episodes},
                      {"checkpoint", checkpoint.empty() ? json(nullptr) : json(checkpoint)}});
  std::ofstream metrics(dir / kMetricsFile);
  if (!metrics) throw std::runtime_error("harness: cannot write metrics in " + dir.string());
  metrics << json{{"schema", "uavsim-metrics-v1"}}.dump() << "\n";

  EvalResult result;
  result.out_dir = out_dir;
  result.episodes = cfg.train.eval_episodes;
  Rng unused(0);  // epsilon = 0 never draws
  double residual_sum = 0.0;
  long long steps_total = 0;
  for (int e = 0; e < cfg.train.eval_episodes; ++e) {
    env.reset(kEvalEpisodeBase + static_cast<uint64_t>(e));
    std::vector<std::vector<double>> obs = all_observations(env);
    while (!env.done()) {
      const std::vector<int> actions = trainer.act(obs, 0.0, unused);
      std::vector<world::Action> acts(actions.size());
      for (size_t m = 0; m < actions.size(); ++m) {
        acts[m] = static_cast<world::Action>(actions[m]);
      }
      world::StepOutcome out = env.step(acts);
      metrics << step_record_json(e, out.metrics, env).dump() << "\n";
      for (double r : out.rewards) result.mean_total_reward += r;
      result.mean_support_rate += out.metrics.tau;
      result.mean_qos += system_qos(env);
      ++steps_total;
      if (out.done) {
        result.final_support_rate += out.metrics.tau;
        for (const world::AgentStepMetrics& a : out.metrics.agents) {
          residual_sum += a.energy_j;
        }
      }
      obs = std::move(out.observations);
    }
  }
  metrics.flush();
  result.mean_total_reward /= result.episodes;
  result.mean_support_rate /= static_cast<double>(steps_total);
  result.final_support_rate /= static_cast<double>(result.episodes);
  result.mean_qos /= static_cast<double>(steps_total);
  result.mean_final_residual_j =
      residual_sum / (static_cast<double>(result.episodes) * wcfg.m_agents);
  return result;
}

std::string compare_methods(const config::ScenarioConfig& base,
                            const std::vector<std::string>& methods,
                            const std::vector<uint64_t>& seeds,
                            const std::string& out_dir) {
  if (methods.empty() || seeds.empty()) {
    throw std::invalid_argument("compare: need at least one method and one seed");
  }
  const fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("harness: cannot create " + dir.string());

  json out_methods = json::array();
  for (const std::string& method_name : methods) {
    json entry{{"method", method_name}};
    json cells = json::array();
    marl::Method method;
    bool known = true;
    try {
      method = marl::method_from_string(method_name);
    } catch (const std::invalid_argument& e) {
      entry["error"] = e.what();
      known = false;
    }
    std::vector<double> support, final_support, qos, residual, reward;
    if (known) {
      config::ScenarioConfig probe = base;
      probe.method = method;
      marl::Trainer for_flops(method, probe.effective_world(), probe.train);
      entry["flops"] = for_flops.flops();
      for (uint64_t seed : seeds) {
        json cell{{"seed", seed}};
        try {
          config::ScenarioConfig cfg = base;
          cfg.method = method;
          cfg.set_master_seed(seed);
          const fs::path cell_dir =
              dir / (marl::to_string(method) + "_s" + std::to_string(seed));
          std::string ckpt;
          if (method != marl::Method::Random) {
            TrainResult tr = run_training(cfg, cell_dir.string());
            ckpt = tr.checkpoint;
          }
          EvalResult ev = run_inference(cfg, ckpt, (cell_dir / "eval").string());
          cell["support_rate"] = ev.mean_support_rate;
          cell["final_support_rate"] = ev.final_support_rate;
          cell["qos"] = ev.mean_qos;
          cell["residual_energy_j"] = ev.mean_final_residual_j;
          cell["total_reward"] = ev.mean_total_reward;
          support.push_back(ev.mean_support_rate);
          final_support.push_back(ev.final_support_rate);
          qos.push_back(ev.mean_qos);
          residual.push_back(ev.mean_final_residual_j);
          reward.push_back(ev.mean_total_reward);
        } catch (const std::exception& e) {
          cell["error"] = e.what();
        }
        cells.push_back(cell);
      }
      auto stats = [](const std::vector<double>& v) -> std::pair<double, double> {
        if (v.empty()) return {0.0, 0.0};
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        return {mean, std::sqrt(var / static_cast<double>(v.size()))};
      };
      const auto [sm, ss] = stats(support);
      const auto [fm, fs] = stats(final_support);
      const auto [qm, qs] = stats(qos);
      const auto [rm, rs] = stats(residual);
      const auto [tm, ts] = stats(reward);
      entry["support_rate_mean"] = sm;
      entry["support_rate_std"] = ss;
      entry["final_support_rate_mean"] = fm;
      entry["final_support_rate_std"] = fs;
      entry["qos_mean"] = qm;
      entry["qos_std"] = qs;
      entry["residual_energy_j_mean"] = rm;
      entry["residual_energy_j_std"] = rs;
      entry["total_reward_mean"] = tm;
      entry["total_reward_std"] = ts;
      entry["cells_ok"] = support.size();
    }
    entry["cells"] = cells;
    out_methods.push_back(entry);
  }

  json summary{{"schema", "uavsim-compare-v1"},
               {"version", kVersion},
               {"config_hash", hash_hex(base.config_hash())},
               {"methods", out_methods}};
  const fs::path summary_path = dir / kSummaryFile;
  std::ofstream out(summary_path);
  if (!out) throw std::runtime_error("harness: cannot write " + summary_path.string());
  out << summary.dump(2) << "\n";
  return summary_path.string();
}

std::vector<std::string> split_csv(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto a = item.find_first_not_of(" \t");
    if (a == std::string::npos) continue;
    const auto b = item.find_last_not_of(" \t");
    out.push_back(item.substr(a, b - a + 1));
  }
  return out;
}

std::vector<uint64_t> parse_seed_list(const std::string& csv) {
  std::vector<uint64_t> out;
  for (const std::string& s : split_csv(csv)) {
    size_t pos = 0;
    out.push_back(std::stoull(s, &pos));
    if (pos != s.size()) throw std::invalid_argument("bad seed: " + s);
  }
  return out;
}

namespace {

// Reads metrics.jsonl records of the given type from a run directory.
std::vector<json> read_records(const fs::path& run_dir, const std::string& type) {
  const fs::path path = run_dir / kMetricsFile;
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("export: no metrics stream at " + path.string());
  std::vector<json> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw std::invalid_argument("export: bad JSON line in " + path.string());
    if (j.value("type", "") == type) records.push_back(std::move(j));
  }
  return records;
}

std::string fmt_cell(const json& v) {
  if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
  std::ostringstream ss;
  if (v.is_number_float()) {
    ss.precision(17);
    ss << v.get<double>();
  } else {
    ss << v;
  }
  return ss.str();
}

}  // namespace

void export_figure_data(const std::string& run_dir, const std::string& figure_key,
                        const std::string& out_path) {
  const fs::path dir(run_dir);
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  const auto episode_figure = [&](const std::string& value_key) {
    header = {"epoch", value_key};
    for (const json& r : read_records(dir, "episode")) {
      rows.push_back({fmt_cell(r.at("epoch")), fmt_cell(r.at(value_key))});
    }
  };

  if (figure_key == "reward_curve") {
    const std::vector<json> records = read_records(dir, "episode");
    if (records.empty()) throw std::invalid_argument("export: no episode records in " + run_dir);
    const size_t m = records.front().at("agent_rewards").size();
    header = {"epoch", "total_reward"};
    for (size_t i = 0; i < m; ++i) header.push_back("r_b" + std::to_string(i + 1));
    for (const json& r : records) {
      std::vector<std::string> row{fmt_cell(r.at("epoch")), fmt_cell(r.at("total_reward"))};
      for (const json& v : r.at("agent_rewards")) row.push_back(fmt_cell(v));
      rows.push_back(std::move(row));
    }
  } else if (figure_key == "support_rate") {
    episode_figure("tau");
  } else if (figure_key == "qos") {
    episode_figure("qos");
  } else if (figure_key == "overlap") {
    episode_figure("omega");
  } else if (figure_key == "energy") {
    const std::vector<json> records = read_records(dir, "episode");
    if (records.empty()) throw std::invalid_argument("export: no episode records in " + run_dir);
    const size_t m = records.front().at("energy_final_j").size();
    header = {"epoch"};
    for (size_t i = 0; i < m; ++i) header.push_back("energy_b" + std::to_string(i + 1));
    for (const json& r : records) {
      std::vector<std::string> row{fmt_cell(r.at("epoch"))};
      for (const json& v : r.at("energy_final_j")) row.push_back(fmt_cell(v));
      rows.push_back(std::move(row));
    }
  } else if (figure_key == "trajectory") {
    const std::vector<json> records = read_records(dir, "step");
    if (records.empty()) {
      throw std::invalid_argument("export: no step records in " + run_dir +
                                  " (trajectory needs an eval run or step_records=true)");
    }
    header = {"step", "uav_id", "x", "y", "z", "alive"};
    const int episode = records.front().value("episode", 0);
    for (const json& r : records) {
      if (r.value("episode", 0) != episode) continue;  // first episode only
      for (const json& u : r.at("uavs")) {
        rows.push_back({fmt_cell(r.at("step")), fmt_cell(u.at("id")), fmt_cell(u.at("x")),
                        fmt_cell(u.at("y")), fmt_cell(u.at("z")), fmt_cell(u.at("alive"))});
      }
    }
  } else {
    throw std::invalid_argument("export: unknown figure key: " + figure_key);
  }

  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("export: cannot write " + out_path);
  out << "# uavsim-figure-v1 " << figure_key << "\n# ";
  for (size_t i = 0; i < header.size(); ++i) out << (i ? "\t" : "") << header[i];
  out << "\n";
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) out << (i ? "\t" : "") << row[i];
    out << "\n";
  }
}

}  // namespace uavsim::harness
