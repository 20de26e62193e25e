#include "uavsim.h"

#include <cstring>
#include <stdexcept>
#include <string>

#include "uavsim/config.hpp"
#include "uavsim/harness.hpp"
#include "uavsim/marl.hpp"
#include "uavsim/version.hpp"

struct uvs_config {
  uavsim::config::ScenarioConfig cfg;
};

namespace {

thread_local std::string g_last_error;

uvs_status fail(uvs_status code, const char* what) {
  g_last_error = what != nullptr ? what : "";
  return code;
}

// Maps the C++ error taxonomy onto status codes: bad input/config -> 2,
// checkpoint mismatch -> 3, anything else -> 1.
template <typename Fn>
uvs_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return UVS_OK;
  } catch (const uavsim::marl::CheckpointError& e) {
    return fail(UVS_ERR_CHECKPOINT, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(UVS_ERR_CONFIG, e.what());
  } catch (const std::domain_error& e) {
    return fail(UVS_ERR_CONFIG, e.what());
  } catch (const std::exception& e) {
    return fail(UVS_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(UVS_ERR_INTERNAL, "unknown error");
  }
}

}  // namespace

extern "C" {

const char* uvs_version(void) { return uavsim::kVersion; }

const char* uvs_status_name(uvs_status status) {
  switch (status) {
    case UVS_OK: return "ok";
    case UVS_ERR_INTERNAL: return "internal";
    case UVS_ERR_CONFIG: return "config";
    case UVS_ERR_CHECKPOINT: return "checkpoint";
  }
  return "unknown";
}

const char* uvs_last_error(void) { return g_last_error.c_str(); }

uvs_status uvs_config_create(const char* preset, uvs_config** out) {
  if (out == nullptr) return fail(UVS_ERR_CONFIG, "config_create: out is null");
  *out = nullptr;
  return guarded([&] {
    auto handle = new uvs_config{
        uavsim::config::ScenarioConfig::preset(preset != nullptr ? preset : "")};
    *out = handle;
  });
}

uvs_status uvs_config_load(uvs_config* cfg, const char* path) {
  if (cfg == nullptr || path == nullptr) {
    return fail(UVS_ERR_CONFIG, "config_load: null argument");
  }
  return guarded([&] { cfg->cfg.load_overlay(path); });
}

uvs_status uvs_config_set(uvs_config* cfg, const char* key, const char* value) {
  if (cfg == nullptr || key == nullptr || value == nullptr) {
    return fail(UVS_ERR_CONFIG, "config_set: null argument");
  }
  return guarded([&] { cfg->cfg.set(key, value); });
}

uvs_status uvs_config_get(const uvs_config* cfg, const char* key, char* buf,
                          size_t buflen) {
  if (cfg == nullptr || key == nullptr || buf == nullptr || buflen == 0) {
    return fail(UVS_ERR_CONFIG, "config_get: null argument");
  }
  return guarded([&] {
    const std::string v = cfg->cfg.get(key);
    std::strncpy(buf, v.c_str(), buflen - 1);
    buf[buflen - 1] = '\0';
  });
}

void uvs_config_free(uvs_config* cfg) { delete cfg; }

uvs_status uvs_train(const uvs_config* cfg, const char* out_dir) {
  if (cfg == nullptr) return fail(UVS_ERR_CONFIG, "train: config is null");
  return guarded([&] {
    if (out_dir != nullptr && out_dir[0] != '\0') {
      uavsim::harness::run_training(cfg->cfg, out_dir);
    } else {
      uavsim::harness::run_training(cfg->cfg);
    }
  });
}

uvs_status uvs_eval(const uvs_config* cfg, const char* checkpoint, const char* out_dir) {
  if (cfg == nullptr) return fail(UVS_ERR_CONFIG, "eval: config is null");
  if (out_dir == nullptr || out_dir[0] == '\0') {
    return fail(UVS_ERR_CONFIG, "eval: out_dir is required");
  }
  return guarded([&] {
    uavsim::harness::run_inference(cfg->cfg, checkpoint != nullptr ? checkpoint : "",
                                   out_dir);
  });
}

uvs_status uvs_compare(const uvs_config* cfg, const char* methods_csv,
                       const char* seeds_csv, const char* out_dir) {
  if (cfg == nullptr || methods_csv == nullptr || seeds_csv == nullptr) {
    return fail(UVS_ERR_CONFIG, "compare: null argument");
  }
  if (out_dir == nullptr || out_dir[0] == '\0') {
    return fail(UVS_ERR_CONFIG, "compare: out_dir is required");
  }
  return guarded([&] {
    uavsim::harness::compare_methods(cfg->cfg, uavsim::harness::split_csv(methods_csv),
                                     uavsim::harness::parse_seed_list(seeds_csv),
                                     out_dir);
  });
}

uvs_status uvs_export(const char* run_dir, const char* figure_key, const char* out_path) {
  if (run_dir == nullptr || figure_key == nullptr || out_path == nullptr) {
    return fail(UVS_ERR_CONFIG, "export: null argument");
  }
  return guarded([&] { uavsim::harness::export_figure_data(run_dir, figure_key, out_path); });
}

}  // extern "C"
