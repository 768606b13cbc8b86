#include "zigzag/config.hpp"

#include <fstream>
#include <sstream>

namespace zigzag::cfg {

namespace {

[[noreturn]] void bad(const std::string &path, const std::string &msg) {
  fail(ErrorCode::InvalidConfig, "config error at " + path + ": " + msg);
}

json defaults_common() {
  return json{
      {"seed", 1},
      {"threads", 0},
      {"topology", {{"senders", 1}, {"receivers", 1}, {"edges", "complete"}}},
      {"p", 0.0},
      {"p_overrides", json::array()},
      {"field", {{"kind", "binary"}, {"degree", 8}, {"poly", 0x11b}}},
      {"payload_len", 8},
      {"offset_max", nullptr},
      {"random_gains", false},
      {"transmission",
       {{"kind", "always_on"}, {"q", 1.0}, {"order", json::array()}, {"coding", "uncoded"}}},
      {"ack",
       {{"kind", "arbitrary"},
        {"order", json::array()},
        {"auto_order", false},
        {"tie", "lowest_index"},
        {"inner", "priority"}}},
      {"cap", nullptr},
  };
}

json defaults_for(Kind k) {
  json d = defaults_common();
  switch (k) {
    case Kind::delivery:
      d["kind"] = "delivery";
      d["output"] = "delivery.csv";
      d["trials"] = 100000;
      d["max_slots"] = 1000000;
      d["validate_trials"] = 8;
      break;
    case Kind::streaming:
      d["kind"] = "streaming";
      d["output"] = "streaming.csv";
      d["arrivals"] = {{"kind", "bernoulli"}, {"rates", json::array()}, {"a_max", 1}};
      d["horizon"] = 1000000;
      d["snapshot_every"] = 0;
      d["frame_length"] = 1000;
      d["track_ledger"] = false;
      d["record_symbols"] = false;
      break;
    case Kind::stability_probe:
      d["kind"] = "stability_probe";
      d["output"] = "probe.csv";
      d["arrivals"] = {{"kind", "bernoulli"}, {"rates", json::array()}, {"a_max", 1}};
      d["horizon"] = 1000000;
      d["snapshot_every"] = 0;
      d["frame_length"] = 1000;
      d["track_ledger"] = false;
      d["record_symbols"] = false;
      d["probe"] = {{"ray", json::array({1.0})}, {"resolution", 0.02}, {"max_horizon", 10000000}};
      break;
    case Kind::figure3:
      d["kind"] = "figure3";
      d["output"] = "figure3.csv";
      d["trials"] = 20000;
      d["max_slots"] = 1000000;
      d["validate_trials"] = 2;
      d["n_max"] = 30;
      d["schemes"] = json::array({"ra", "zzra_c2", "zzra_c3", "zz"});
      break;
    case Kind::region2d:
      d["kind"] = "region2d";
      d["output"] = "region2d.csv";
      d["topology"] = {{"senders", 2}, {"receivers", 1}, {"edges", "complete"}};
      d["arrivals"] = {{"kind", "bernoulli"}, {"rates", json::array()}, {"a_max", 1}};
      d["horizon"] = 400000;
      d["snapshot_every"] = 0;
      d["frame_length"] = 1000;
      d["track_ledger"] = false;
      d["record_symbols"] = false;
      d["resolution"] = 0.02;
      d["max_horizon"] = 4000000;
      d["region_schemes"] = json::array({"centralized", "zigzag"});
      d["rays"] = json::array();
      break;
  }
  return d;
}

void merge_over(json &base, const json &user, const std::string &path) {
  for (const auto &[key, value] : user.items()) {
    if (!base.contains(key)) bad(path + key, "unknown key");
    if (base[key].is_object() && value.is_object())
      merge_over(base[key], value, path + key + ".");
    else
      base[key] = value;
  }
}

std::pair<size_t, size_t> line_col(const std::string &text, size_t byte) {
  size_t line = 1, col = 1;
  for (size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

const std::vector<std::pair<const char *, const char *>> &preset_table() {
  static const std::vector<std::pair<const char *, const char *>> presets = {
      {"figure3",
       "delivery-time sweep, p=1/3, n=1..30: random access, capped zigzag (C=2,3), unlimited "
       "zigzag, optimal q per point"},
      {"region2d",
       "two-sender stability boundary point cloud: centralized simplex vs zigzag polymatroid"},
      {"delivery", "single delivery experiment: 10 senders, one receiver, unlimited zigzag"},
      {"streaming", "streaming priority policy just inside a dominant-face vertex"},
      {"probe", "stability boundary bisection along the symmetric ray with time sharing"},
      {"codeack", "3x2 topology, network coding with the code-ack policy inside the cut-set bound"},
  };
  return presets;
}

json preset_json(const std::string &name) {
  const double third = 1.0 / 3.0;
  if (name == "figure3") {
    return json{{"kind", "figure3"}, {"seed", 1729}, {"p", third}};
  }
  if (name == "region2d") {
    return json{
        {"kind", "region2d"},
        {"seed", 11},
        {"p", third},
        {"ack", {{"kind", "priority"}, {"auto_order", true}}},
        {"rays",
         json::array({json::array({1.0, 0.0}), json::array({4.0, 1.0}), json::array({2.0, 1.0}),
                      json::array({4.0, 3.0}), json::array({1.0, 1.0}), json::array({3.0, 4.0}),
                      json::array({1.0, 2.0}), json::array({1.0, 4.0}),
                      json::array({0.0, 1.0})})},
    };
  }
  if (name == "delivery") {
    return json{{"kind", "delivery"},
                {"seed", 7},
                {"p", third},
                {"topology", {{"senders", 10}, {"receivers", 1}, {"edges", "complete"}}}};
  }
  if (name == "streaming") {
    return json{{"kind", "streaming"},
                {"seed", 5},
                {"p", third},
                {"topology", {{"senders", 2}, {"receivers", 1}, {"edges", "complete"}}},
                {"ack", {{"kind", "priority"}, {"order", json::array({0, 1})}}},
                {"arrivals",
                 {{"kind", "bernoulli"},
                  {"rates", json::array({0.95 * 2 / 3, 0.95 * 2 / 9})}}}};
  }
  if (name == "probe") {
    return json{{"kind", "stability_probe"},
                {"seed", 3},
                {"p", third},
                {"topology", {{"senders", 2}, {"receivers", 1}, {"edges", "complete"}}},
                {"ack", {{"kind", "priority"}, {"auto_order", true}}},
                {"probe",
                 {{"ray", json::array({1.0, 1.0})},
                  {"resolution", 0.02},
                  {"max_horizon", 8000000}}}};
  }
  if (name == "codeack") {
    return json{{"kind", "streaming"},
                {"seed", 9},
                {"output", "codeack.csv"},
                {"p", third},
                {"topology",
                 {{"senders", 3},
                  {"receivers", 2},
                  {"edges", json::array({json::array({0, 0}), json::array({1, 0}),
                                         json::array({1, 1}), json::array({2, 1})})}}},
                {"transmission", {{"kind", "always_on"}, {"coding", "random_linear"}}},
                {"ack", {{"kind", "code_ack"}, {"inner", "priority"}}},
                {"arrivals",
                 {{"kind", "bernoulli"}, {"rates", json::array({0.475, 0.3325, 0.475})}}},
                {"horizon", 200000}};
  }
  fail(ErrorCode::NotFound, "unknown preset: " + name);
}

json resolve(json user) {
  // A run-manifest embeds the resolved config; accept it directly.
  if (user.is_object() && user.contains("manifest_version") && user.contains("config"))
    user = user["config"];
  if (!user.is_object()) bad("$", "top level must be an object");
  if (!user.contains("kind") || !user["kind"].is_string()) bad("kind", "required string");
  const Kind kind = kind_from_string(user["kind"].get<std::string>());
  json resolved = defaults_for(kind);
  merge_over(resolved, user, "");
  return resolved;
}

uint64_t get_uint(const json &j, const std::string &path) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<int64_t>() >= 0))
    bad(path, "expected a nonnegative integer");
  return j.get<uint64_t>();
}

double get_num(const json &j, const std::string &path) {
  if (!j.is_number()) bad(path, "expected a number");
  return j.get<double>();
}

}  // namespace

Kind kind_from_string(const std::string &s) {
  if (s == "delivery") return Kind::delivery;
  if (s == "streaming") return Kind::streaming;
  if (s == "stability_probe") return Kind::stability_probe;
  if (s == "figure3") return Kind::figure3;
  if (s == "region2d") return Kind::region2d;
  bad("kind", "unknown experiment kind '" + s + "'");
}

std::string kind_to_string(Kind k) {
  switch (k) {
    case Kind::delivery: return "delivery";
    case Kind::streaming: return "streaming";
    case Kind::stability_probe: return "stability_probe";
    case Kind::figure3: return "figure3";
    case Kind::region2d: return "region2d";
  }
  return "?";
}

Config Config::from_text(const std::string &text) {
  json parsed;
  try {
    parsed = json::parse(text);
  } catch (const json::parse_error &e) {
    const auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    fail(ErrorCode::InvalidConfig, "config parse error at line " + std::to_string(line) +
                                       ", column " + std::to_string(col) + ": " + e.what());
  }
  return Config(resolve(std::move(parsed)));
}

Config Config::from_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::Io, "cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

Config Config::from_preset(const std::string &name) { return Config(resolve(preset_json(name))); }

void Config::override_kv(const std::string &key_eq_value) {
  const auto eq = key_eq_value.find('=');
  require(eq != std::string::npos && eq > 0, ErrorCode::InvalidConfig,
          "override must look like key=value: " + key_eq_value);
  const std::string path = key_eq_value.substr(0, eq);
  const std::string raw = key_eq_value.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error &) {
    value = raw;  // bare string
  }

  json *node = &j_;
  size_t start = 0;
  std::vector<std::string> tokens;
  while (start <= path.size()) {
    const size_t dot = path.find('.', start);
    tokens.push_back(path.substr(start, dot == std::string::npos ? dot : dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  for (size_t t = 0; t + 1 < tokens.size(); ++t) {
    const std::string &tok = tokens[t];
    if (node->is_array()) {
      const size_t idx = size_t(std::stoul(tok));
      require(idx < node->size(), ErrorCode::InvalidConfig, "override index out of range: " + path);
      node = &(*node)[idx];
    } else {
      if (!node->contains(tok)) bad(tok, "unknown key in override " + path);
      node = &(*node)[tok];
    }
  }
  const std::string &last = tokens.back();
  if (node->is_array()) {
    const size_t idx = size_t(std::stoul(last));
    require(idx < node->size(), ErrorCode::InvalidConfig, "override index out of range: " + path);
    (*node)[idx] = value;
  } else {
    if (!node->contains(last)) bad(last, "unknown key in override " + path);
    (*node)[last] = value;
  }
}

Kind Config::kind() const { return kind_from_string(j_.at("kind").get<std::string>()); }

std::string Config::output_path() const { return j_.at("output").get<std::string>(); }

uint32_t Config::threads() const { return uint32_t(get_uint(j_.at("threads"), "threads")); }

uint64_t Config::seed() const { return get_uint(j_.at("seed"), "seed"); }

net::Topology Config::topology() const {
  const json &t = j_.at("topology");
  const uint32_t n = uint32_t(get_uint(t.at("senders"), "topology.senders"));
  const uint32_t r = uint32_t(get_uint(t.at("receivers"), "topology.receivers"));
  if (n == 0 || r == 0) bad("topology", "need at least one sender and one receiver");
  const json &e = t.at("edges");
  try {
    if (e.is_string() && e.get<std::string>() == "complete") return net::Topology::complete(n, r);
    if (!e.is_array()) bad("topology.edges", "expected \"complete\" or an edge array");
    std::vector<std::pair<uint32_t, uint32_t>> edges;
    for (const auto &pair : e) {
      if (!pair.is_array() || pair.size() != 2) bad("topology.edges", "edges are [sender, receiver]");
      edges.emplace_back(uint32_t(get_uint(pair[0], "topology.edges")),
                         uint32_t(get_uint(pair[1], "topology.edges")));
    }
    return net::Topology(n, r, std::move(edges));
  } catch (const Error &err) {
    if (err.code() == ErrorCode::InvalidConfig) throw;
    bad("topology", err.what());
  }
}

net::ErasureSpec Config::erasure() const {
  net::ErasureSpec spec;
  spec.default_p = get_num(j_.at("p"), "p");
  for (const auto &o : j_.at("p_overrides")) {
    if (!o.is_array() || o.size() != 3) bad("p_overrides", "entries are [sender, receiver, p]");
    spec.overrides[{uint32_t(get_uint(o[0], "p_overrides")),
                    uint32_t(get_uint(o[1], "p_overrides"))}] = get_num(o[2], "p_overrides");
  }
  try {
    spec.validate();
  } catch (const Error &err) {
    bad("p", err.what());
  }
  return spec;
}

gf::FieldSpec Config::field() const {
  const json &f = j_.at("field");
  const std::string kind = f.at("kind").get<std::string>();
  try {
    if (kind == "binary") {
      const auto spec = gf::FieldSpec::binary(uint32_t(get_uint(f.at("degree"), "field.degree")),
                                              uint32_t(get_uint(f.at("poly"), "field.poly")));
      gf::Field probe(spec);  // validates degree/irreducibility
      return spec;
    }
    if (kind == "prime") {
      const auto spec = gf::FieldSpec::prime(uint32_t(get_uint(f.at("poly"), "field.poly")));
      gf::Field probe(spec);
      return spec;
    }
  } catch (const Error &err) {
    bad("field", err.what());
  }
  bad("field.kind", "expected \"binary\" or \"prime\"");
}

policies::TransmissionPolicy Config::transmission() const {
  const json &t = j_.at("transmission");
  policies::TransmissionPolicy p;
  const std::string kind = t.at("kind").get<std::string>();
  if (kind == "always_on")
    p.kind = policies::TxKind::always_on;
  else if (kind == "random_access")
    p.kind = policies::TxKind::random_access;
  else if (kind == "centralized")
    p.kind = policies::TxKind::centralized;
  else
    bad("transmission.kind", "unknown transmission policy '" + kind + "'");
  p.q = get_num(t.at("q"), "transmission.q");
  p.order = t.at("order").get<std::vector<uint32_t>>();
  const std::string coding = t.at("coding").get<std::string>();
  if (coding == "uncoded")
    p.coding = policies::CodingMode::uncoded_head_of_line;
  else if (coding == "random_linear")
    p.coding = policies::CodingMode::random_linear;
  else
    bad("transmission.coding", "expected \"uncoded\" or \"random_linear\"");
  return p;
}

policies::AckPolicy Config::ack() const {
  const json &a = j_.at("ack");
  policies::AckPolicy p;
  const std::string kind = a.at("kind").get<std::string>();
  if (kind == "arbitrary")
    p.kind = policies::AckKind::arbitrary_collider;
  else if (kind == "unacked")
    p.kind = policies::AckKind::unacked_collider;
  else if (kind == "priority")
    p.kind = policies::AckKind::priority;
  else if (kind == "longest_queue")
    p.kind = policies::AckKind::longest_queue;
  else if (kind == "code_ack")
    p.kind = policies::AckKind::code_ack;
  else
    bad("ack.kind", "unknown ACK policy '" + kind + "'");
  p.order = a.at("order").get<std::vector<uint32_t>>();
  p.auto_order = a.at("auto_order").get<bool>();
  const std::string tie = a.at("tie").get<std::string>();
  if (tie == "lowest_index")
    p.tie = policies::TieRule::lowest_index;
  else if (tie == "seeded_random")
    p.tie = policies::TieRule::seeded_random;
  else
    bad("ack.tie", "expected \"lowest_index\" or \"seeded_random\"");
  const std::string inner = a.at("inner").get<std::string>();
  if (inner == "priority")
    p.inner = policies::AckKind::priority;
  else if (inner == "longest_queue")
    p.inner = policies::AckKind::longest_queue;
  else
    bad("ack.inner", "expected \"priority\" or \"longest_queue\"");
  return p;
}

std::optional<uint32_t> Config::cap() const {
  const json &c = j_.at("cap");
  if (c.is_null()) return std::nullopt;
  return uint32_t(get_uint(c, "cap"));
}

sim::DeliveryConfig Config::delivery() const {
  sim::DeliveryConfig d;
  d.topology = topology();
  d.erasure = erasure();
  d.tx = transmission();
  d.ack = ack();
  d.cap = cap();
  d.seed = seed();
  d.trials = get_uint(j_.at("trials"), "trials");
  if (d.trials < 1) bad("trials", "must be >= 1");
  d.max_slots = get_uint(j_.at("max_slots"), "max_slots");
  d.payload_len = uint32_t(get_uint(j_.at("payload_len"), "payload_len"));
  if (!j_.at("offset_max").is_null())
    d.offset_max = uint32_t(get_uint(j_.at("offset_max"), "offset_max"));
  d.random_gains = j_.at("random_gains").get<bool>();
  d.field = field();
  d.validate_trials = get_uint(j_.at("validate_trials"), "validate_trials");
  d.threads = threads();
  return d;
}

sim::StreamingConfig Config::streaming() const {
  sim::StreamingConfig s;
  s.topology = topology();
  s.erasure = erasure();
  s.tx = transmission();
  s.ack = ack();
  s.cap = cap();
  const json &a = j_.at("arrivals");
  const std::string akind = a.at("kind").get<std::string>();
  if (akind == "bernoulli")
    s.arrivals.kind = sim::ArrivalConfig::Kind::bernoulli;
  else if (akind == "batch")
    s.arrivals.kind = sim::ArrivalConfig::Kind::batch_bounded;
  else
    bad("arrivals.kind", "expected \"bernoulli\" or \"batch\"");
  s.arrivals.rates = a.at("rates").get<std::vector<double>>();
  s.arrivals.a_max = uint32_t(get_uint(a.at("a_max"), "arrivals.a_max"));
  s.horizon = get_uint(j_.at("horizon"), "horizon");
  s.seed = seed();
  s.frame_length = uint32_t(get_uint(j_.at("frame_length"), "frame_length"));
  s.snapshot_every = get_uint(j_.at("snapshot_every"), "snapshot_every");
  s.payload_len = uint32_t(get_uint(j_.at("payload_len"), "payload_len"));
  if (!j_.at("offset_max").is_null())
    s.offset_max = uint32_t(get_uint(j_.at("offset_max"), "offset_max"));
  s.random_gains = j_.at("random_gains").get<bool>();
  s.field = field();
  s.track_ledger = j_.at("track_ledger").get<bool>();
  s.record_symbols = j_.at("record_symbols").get<bool>();
  return s;
}

sim::ProbeConfig Config::probe() const {
  sim::ProbeConfig p;
  p.base = streaming();
  const json &pr = j_.at("probe");
  p.ray = pr.at("ray").get<std::vector<double>>();
  p.resolution = get_num(pr.at("resolution"), "probe.resolution");
  if (p.resolution <= 0.0) bad("probe.resolution", "must be positive");
  p.max_horizon = get_uint(pr.at("max_horizon"), "probe.max_horizon");
  return p;
}

void Config::validate() const {
  switch (kind()) {
    case Kind::delivery: {
      const auto d = delivery();
      d.tx.validate(d.topology.n_senders());
      d.ack.validate(d.topology.n_senders());
      break;
    }
    case Kind::streaming: {
      const auto s = streaming();
      s.tx.validate(s.topology.n_senders());
      s.ack.validate(s.topology.n_senders());
      s.arrivals.validate(s.topology.n_senders());
      break;
    }
    case Kind::stability_probe: {
      const auto p = probe();
      p.base.tx.validate(p.base.topology.n_senders());
      if (p.ray.size() != p.base.topology.n_senders())
        bad("probe.ray", "dimension must match the sender count");
      break;
    }
    case Kind::figure3: {
      (void)erasure();
      const uint64_t n_max = get_uint(j_.at("n_max"), "n_max");
      if (n_max < 1 || n_max > 30) bad("n_max", "must be in [1, 30]");
      if (get_uint(j_.at("trials"), "trials") < 1) bad("trials", "must be >= 1");
      for (const auto &s : j_.at("schemes")) {
        const std::string name = s.get<std::string>();
        if (name != "ra" && name != "zzra_c2" && name != "zzra_c3" && name != "zz")
          bad("schemes", "unknown scheme '" + name + "'");
      }
      break;
    }
    case Kind::region2d: {
      const auto topo = topology();
      if (topo.n_receivers() != 1) bad("topology.receivers", "region2d uses a single receiver");
      (void)erasure();
      if (j_.at("rays").empty()) bad("rays", "need at least one ray");
      for (const auto &ray : j_.at("rays"))
        if (!ray.is_array() || ray.size() != topo.n_senders())
          bad("rays", "each ray must list one rate per sender");
      for (const auto &s : j_.at("region_schemes")) {
        const std::string name = s.get<std::string>();
        if (name != "centralized" && name != "zigzag")
          bad("region_schemes", "unknown scheme '" + name + "'");
      }
      break;
    }
  }
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto &[name, summary] : preset_table()) {
    (void)summary;
    names.emplace_back(name);
  }
  return names;
}

std::string preset_summary(const std::string &name) {
  for (const auto &[n, summary] : preset_table())
    if (name == n) return summary;
  fail(ErrorCode::NotFound, "unknown preset: " + name);
}

}  // namespace zigzag::cfg
