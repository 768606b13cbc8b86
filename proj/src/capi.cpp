#include "zigzag.h"

#include <cmath>
#include <cstring>
#include <string>

#include "zigzag/runner.hpp"

// Opaque handle bodies. Strings returned through the API live as long as
// the handle that produced them.
struct zz_config {
  zigzag::cfg::Config config;
  mutable std::string json_text;
  mutable std::string output_path;
};

struct zz_result {
  zigzag::run::RunOutput output;
};

namespace {

thread_local std::string g_last_error;

zz_status to_status(const zigzag::Error &e) {
  g_last_error = e.what();
  return static_cast<zz_status>(static_cast<int>(e.code()));
}

zz_status unexpected(const std::exception &e) {
  g_last_error = e.what();
  return ZZ_ERR_INTERNAL;
}

zz_status null_argument(const char *what) {
  g_last_error = std::string("null argument: ") + what;
  return ZZ_ERR_INVALID_ARGUMENT;
}

template <typename Fn>
zz_status guarded(Fn &&fn) {
  try {
    return fn();
  } catch (const zigzag::Error &e) {
    return to_status(e);
  } catch (const std::exception &e) {
    return unexpected(e);
  }
}

zz_status et_result(const zigzag::analysis::Et &et, double *out) {
  if (out == nullptr) return null_argument("out");
  *out = et.diverges ? INFINITY : et.value;
  return et.diverges ? ZZ_DIVERGES : ZZ_OK;
}

// The C enum must keep mirroring the C++ error codes.
static_assert(int(zigzag::ErrorCode::Diverges) == ZZ_DIVERGES);
static_assert(int(zigzag::ErrorCode::InvalidArgument) == ZZ_ERR_INVALID_ARGUMENT);
static_assert(int(zigzag::ErrorCode::DivisionByZero) == ZZ_ERR_DIVISION_BY_ZERO);
static_assert(int(zigzag::ErrorCode::FieldMismatch) == ZZ_ERR_FIELD_MISMATCH);
static_assert(int(zigzag::ErrorCode::EmptyQueue) == ZZ_ERR_EMPTY_QUEUE);
static_assert(int(zigzag::ErrorCode::OffsetTooLarge) == ZZ_ERR_OFFSET_TOO_LARGE);
static_assert(int(zigzag::ErrorCode::InconsistentSystem) == ZZ_ERR_INCONSISTENT_SYSTEM);
static_assert(int(zigzag::ErrorCode::InvalidProbability) == ZZ_ERR_INVALID_PROBABILITY);
static_assert(int(zigzag::ErrorCode::NotFound) == ZZ_ERR_NOT_FOUND);
static_assert(int(zigzag::ErrorCode::InvalidRate) == ZZ_ERR_INVALID_RATE);
static_assert(int(zigzag::ErrorCode::NotAchievable) == ZZ_ERR_NOT_ACHIEVABLE);
static_assert(int(zigzag::ErrorCode::InvalidConfig) == ZZ_ERR_INVALID_CONFIG);
static_assert(int(zigzag::ErrorCode::HorizonExceeded) == ZZ_ERR_HORIZON_EXCEEDED);
static_assert(int(zigzag::ErrorCode::Io) == ZZ_ERR_IO);
static_assert(int(zigzag::ErrorCode::Internal) == ZZ_ERR_INTERNAL);

}  // namespace

extern "C" {

const char *zz_version(void) { return zigzag::run::kToolVersion; }

const char *zz_last_error(void) { return g_last_error.c_str(); }

zz_status zz_config_parse(const char *json_text, zz_config **out) {
  if (json_text == nullptr) return null_argument("json_text");
  if (out == nullptr) return null_argument("out");
  *out = nullptr;
  return guarded([&]() {
    *out = new zz_config{zigzag::cfg::Config::from_text(json_text), {}, {}};
    return ZZ_OK;
  });
}

zz_status zz_config_load_file(const char *path, zz_config **out) {
  if (path == nullptr) return null_argument("path");
  if (out == nullptr) return null_argument("out");
  *out = nullptr;
  return guarded([&]() {
    *out = new zz_config{zigzag::cfg::Config::from_file(path), {}, {}};
    return ZZ_OK;
  });
}

zz_status zz_config_from_preset(const char *name, zz_config **out) {
  if (name == nullptr) return null_argument("name");
  if (out == nullptr) return null_argument("out");
  *out = nullptr;
  return guarded([&]() {
    *out = new zz_config{zigzag::cfg::Config::from_preset(name), {}, {}};
    return ZZ_OK;
  });
}

zz_status zz_config_override(zz_config *cfg, const char *key_eq_value) {
  if (cfg == nullptr) return null_argument("cfg");
  if (key_eq_value == nullptr) return null_argument("key_eq_value");
  return guarded([&]() {
    cfg->config.override_kv(key_eq_value);
    return ZZ_OK;
  });
}

zz_status zz_config_validate(const zz_config *cfg) {
  if (cfg == nullptr) return null_argument("cfg");
  return guarded([&]() {
    cfg->config.validate();
    return ZZ_OK;
  });
}

zz_status zz_config_json(const zz_config *cfg, const char **out_text) {
  if (cfg == nullptr) return null_argument("cfg");
  if (out_text == nullptr) return null_argument("out_text");
  return guarded([&]() {
    cfg->json_text = cfg->config.resolved().dump(2);
    *out_text = cfg->json_text.c_str();
    return ZZ_OK;
  });
}

const char *zz_config_output_path(const zz_config *cfg) {
  if (cfg == nullptr) return "";
  cfg->output_path = cfg->config.output_path();
  return cfg->output_path.c_str();
}

void zz_config_free(zz_config *cfg) { delete cfg; }

size_t zz_preset_count(void) { return zigzag::cfg::preset_names().size(); }

const char *zz_preset_name(size_t index) {
  static thread_local std::string name;
  const auto names = zigzag::cfg::preset_names();
  if (index >= names.size()) return nullptr;
  name = names[index];
  return name.c_str();
}

const char *zz_preset_summary(const char *name) {
  static thread_local std::string summary;
  if (name == nullptr) return nullptr;
  try {
    summary = zigzag::cfg::preset_summary(name);
  } catch (const zigzag::Error &e) {
    g_last_error = e.what();
    return nullptr;
  }
  return summary.c_str();
}

zz_status zz_run(const zz_config *cfg, zz_result **out) {
  if (cfg == nullptr) return null_argument("cfg");
  if (out == nullptr) return null_argument("out");
  *out = nullptr;
  return guarded([&]() {
    *out = new zz_result{zigzag::run::run_experiment(cfg->config)};
    return ZZ_OK;
  });
}

const char *zz_result_csv(const zz_result *res) { return res ? res->output.csv.c_str() : ""; }

const char *zz_result_manifest(const zz_result *res) {
  return res ? res->output.manifest.c_str() : "";
}

void zz_result_free(zz_result *res) { delete res; }

zz_status zz_et_centralized(uint32_t n, double p, double *out) {
  return guarded([&]() { return et_result(zigzag::analysis::et_centralized(n, p), out); });
}

zz_status zz_et_random_access(uint32_t n, double p, double q, double *out) {
  return guarded([&]() { return et_result(zigzag::analysis::et_random_access(n, p, q), out); });
}

zz_status zz_et_zigzag(uint32_t n, double p, double *out) {
  return guarded([&]() { return et_result(zigzag::analysis::et_zigzag(n, p), out); });
}

zz_status zz_et_zigzag_ra(uint32_t n, double p, double q, int32_t cap, double *out) {
  return guarded([&]() {
    const std::optional<uint32_t> c =
        cap <= 0 ? std::nullopt : std::optional<uint32_t>(uint32_t(cap));
    return et_result(zigzag::analysis::et_zigzag_ra(n, p, q, c), out);
  });
}

zz_status zz_optimal_q(uint32_t n, double p, int32_t cap, double *out) {
  if (out == nullptr) return null_argument("out");
  return guarded([&]() {
    const std::optional<uint32_t> c =
        cap <= 0 ? std::nullopt : std::optional<uint32_t>(uint32_t(cap));
    *out = zigzag::analysis::optimal_q(n, p, c);
    return ZZ_OK;
  });
}

}  // extern "C"
