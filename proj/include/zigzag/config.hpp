#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "zigzag/simulator.hpp"

namespace zigzag::cfg {

using json = nlohmann::json;

enum class Kind { delivery, streaming, stability_probe, figure3, region2d };

Kind kind_from_string(const std::string &s);
std::string kind_to_string(Kind k);

// An experiment configuration: JSON with all defaults resolved. Unknown
// keys are rejected so typos fail loudly. A run-manifest produced by the
// runner can be fed back in; its embedded config is unwrapped.
class Config {
 public:
  static Config from_text(const std::string &text);
  static Config from_file(const std::string &path);
  static Config from_preset(const std::string &name);

  // Dotted-path override, e.g. "transmission.q=0.25" or "probe.ray=[1,2]".
  void override_kv(const std::string &key_eq_value);

  // Full semantic validation; throws Error(InvalidConfig, ...) with the
  // offending path in the message.
  void validate() const;

  Kind kind() const;
  const json &resolved() const { return j_; }
  std::string output_path() const;
  uint32_t threads() const;
  uint64_t seed() const;

  // Typed views (validate the relevant subset on the way).
  net::Topology topology() const;
  net::ErasureSpec erasure() const;
  gf::FieldSpec field() const;
  policies::TransmissionPolicy transmission() const;
  policies::AckPolicy ack() const;
  std::optional<uint32_t> cap() const;

  sim::DeliveryConfig delivery() const;
  sim::StreamingConfig streaming() const;
  sim::ProbeConfig probe() const;

 private:
  explicit Config(json j) : j_(std::move(j)) {}
  json j_;
};

std::vector<std::string> preset_names();
std::string preset_summary(const std::string &name);

}  // namespace zigzag::cfg
