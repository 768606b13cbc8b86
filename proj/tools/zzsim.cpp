// zzsim: command-line front end for the collision-recovery network
// simulator. Talks to the core exclusively through the C API in zigzag.h.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "zigzag.h"

namespace {

// Exit codes: 0 ok, 2 invalid config, 3 horizon exceeded, 1 anything else.
int exit_code(zz_status status) {
  switch (status) {
    case ZZ_OK: return 0;
    case ZZ_ERR_INVALID_CONFIG:
    case ZZ_ERR_INVALID_ARGUMENT:
    case ZZ_ERR_INVALID_PROBABILITY:
    case ZZ_ERR_INVALID_RATE:
    case ZZ_ERR_NOT_FOUND: return 2;
    case ZZ_ERR_HORIZON_EXCEEDED: return 3;
    default: return 1;
  }
}

struct ConfigHandle {
  zz_config *cfg = nullptr;
  ~ConfigHandle() { zz_config_free(cfg); }
};

int load_config(const std::string &config_path, const std::string &preset,
                const std::vector<std::string> &sets, uint32_t threads, const std::string &out_path,
                ConfigHandle &handle) {
  zz_status st;
  if (!preset.empty())
    st = zz_config_from_preset(preset.c_str(), &handle.cfg);
  else
    st = zz_config_load_file(config_path.c_str(), &handle.cfg);
  if (st != ZZ_OK) {
    std::cerr << "error: " << zz_last_error() << "\n";
    return exit_code(st);
  }
  for (const std::string &kv : sets) {
    st = zz_config_override(handle.cfg, kv.c_str());
    if (st != ZZ_OK) {
      std::cerr << "error: " << zz_last_error() << "\n";
      return exit_code(st);
    }
  }
  if (threads != 0) {
    const std::string kv = "threads=" + std::to_string(threads);
    zz_config_override(handle.cfg, kv.c_str());
  }
  if (!out_path.empty()) {
    const std::string kv = "output=" + out_path;
    st = zz_config_override(handle.cfg, kv.c_str());
    if (st != ZZ_OK) {
      std::cerr << "error: " << zz_last_error() << "\n";
      return exit_code(st);
    }
  }
  return 0;
}

bool write_file(const std::string &path, const char *data) {
  std::ofstream out(path, std::ios::binary);
  if (!out.good()) return false;
  out << data;
  return out.good();
}

std::string manifest_path_for(const std::string &csv_path) {
  const size_t dot = csv_path.rfind('.');
  const std::string stem = dot == std::string::npos ? csv_path : csv_path.substr(0, dot);
  return stem + ".manifest.json";
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"zzsim: single-hop erasure network simulator with collision recovery"};
  app.require_subcommand(1);

  std::string config_path, preset, out_path;
  std::vector<std::string> sets;
  uint32_t threads = 0;

  auto add_config_opts = [&](CLI::App *cmd) {
    auto *cfg_opt = cmd->add_option("-c,--config", config_path, "experiment config file (JSON)");
    auto *preset_opt = cmd->add_option("-P,--preset", preset, "named preset (see list-presets)");
    cfg_opt->excludes(preset_opt);
    cmd->add_option("-s,--set", sets, "override a config key, e.g. -s transmission.q=0.5");
    return std::make_pair(cfg_opt, preset_opt);
  };

  auto *run_cmd = app.add_subcommand("run", "run an experiment and write CSV + manifest");
  auto run_opts = add_config_opts(run_cmd);
  run_cmd->add_option("-o,--out", out_path, "output CSV path (overrides config)");
  run_cmd->add_option("-t,--threads", threads,
                      "worker threads (default: ZZSIM_THREADS or hardware)");

  auto *validate_cmd = app.add_subcommand("validate", "parse and validate a config");
  auto validate_opts = add_config_opts(validate_cmd);

  auto *list_cmd = app.add_subcommand("list-presets", "list named experiment presets");

  CLI11_PARSE(app, argc, argv);

  if (list_cmd->parsed()) {
    for (size_t i = 0; i < zz_preset_count(); ++i) {
      const char *name = zz_preset_name(i);
      std::printf("%-12s %s\n", name, zz_preset_summary(name));
    }
    return 0;
  }

  const bool have_source = !config_path.empty() || !preset.empty();
  if (!have_source) {
    std::cerr << "error: provide --config FILE or --preset NAME\n";
    return 2;
  }
  (void)run_opts;
  (void)validate_opts;

  ConfigHandle handle;
  if (const int rc = load_config(config_path, preset, sets, threads, out_path, handle); rc != 0)
    return rc;

  if (validate_cmd->parsed()) {
    const zz_status st = zz_config_validate(handle.cfg);
    if (st != ZZ_OK) {
      std::cerr << "invalid config: " << zz_last_error() << "\n";
      return exit_code(st);
    }
    std::printf("ok: %s\n", zz_config_output_path(handle.cfg));
    return 0;
  }

  // run
  zz_result *result = nullptr;
  const zz_status st = zz_run(handle.cfg, &result);
  if (st != ZZ_OK) {
    std::cerr << "error: " << zz_last_error() << "\n";
    return exit_code(st);
  }
  const std::string csv_path = zz_config_output_path(handle.cfg);
  const std::string manifest_path = manifest_path_for(csv_path);
  bool ok = write_file(csv_path, zz_result_csv(result));
  ok = write_file(manifest_path, zz_result_manifest(result)) && ok;
  zz_result_free(result);
  if (!ok) {
    std::cerr << "error: cannot write output files\n";
    return 1;
  }
  std::printf("wrote %s and %s\n", csv_path.c_str(), manifest_path.c_str());
  return 0;
}
