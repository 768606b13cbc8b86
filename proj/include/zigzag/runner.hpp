#pragma once

#include <string>

#include "zigzag/config.hpp"

namespace zigzag::run {

inline constexpr const char *kToolName = "zzsim";
inline constexpr const char *kToolVersion = "0.1.0";

struct RunOutput {
  std::string csv;
  std::string manifest;  // JSON: tool info, schema, resolved config, result summary
  std::string output_path;
};

// Executes one experiment. The CSV and the manifest are deterministic for a
// given resolved config (no timestamps), so a rerun is byte-identical and
// the manifest can be fed back in as a config.
RunOutput run_experiment(const cfg::Config &config);

}  // namespace zigzag::run
