#include "zigzag/runner.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>

namespace zigzag::run {

using cfg::json;
using policies::AckKind;
using policies::TxKind;

namespace {

std::string fmt(double v) {
  if (std::isinf(v)) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string fmt_ray(std::span<const double> ray) {
  std::string out;
  for (size_t i = 0; i < ray.size(); ++i) {
    if (i) out += ':';
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", ray[i]);
    out += buf;
  }
  return out;
}

std::string scheme_name(const sim::DeliveryConfig &d) {
  if (d.tx.kind == TxKind::centralized) return "centralized";
  if (d.tx.kind == TxKind::always_on && !d.cap) return "zz";
  if (d.cap && *d.cap == 1) return "ra";
  return "zzra";
}

analysis::Et scheme_formula(const sim::DeliveryConfig &d, uint32_t n) {
  const double p = d.erasure.default_p;
  if (d.tx.kind == TxKind::centralized) return analysis::et_centralized(n, p);
  const double q = d.tx.kind == TxKind::always_on ? 1.0 : d.tx.q;
  return analysis::et_zigzag_ra(n, p, q, d.cap);
}

// One delivery row in the delivery.v1 schema.
void delivery_row(std::string &csv, const std::string &scheme, uint32_t n, double p,
                  const std::string &q, const std::string &cap, const sim::MeanCi &m,
                  const analysis::Et &formula) {
  csv += scheme;
  csv += ',';
  csv += std::to_string(n);
  csv += ',';
  csv += fmt(p);
  csv += ',';
  csv += q;
  csv += ',';
  csv += cap;
  csv += ',';
  csv += fmt(m.mean);
  csv += ',';
  csv += fmt(m.ci95);
  csv += ',';
  csv += formula.diverges ? "inf" : fmt(formula.value);
  csv += '\n';
}

json manifest_base(const cfg::Config &config, const char *schema) {
  return json{{"manifest_version", 1},
              {"tool", {{"name", kToolName}, {"version", kToolVersion}}},
              {"schema", schema},
              {"config", config.resolved()}};
}

RunOutput finish(const cfg::Config &config, std::string csv, json manifest) {
  RunOutput out;
  out.csv = std::move(csv);
  out.manifest = manifest.dump(2);
  out.manifest += '\n';
  out.output_path = config.output_path();
  return out;
}

RunOutput run_delivery_kind(const cfg::Config &config) {
  const sim::DeliveryConfig d = config.delivery();
  const sim::DeliveryStats stats = sim::run_delivery(d);
  const std::string scheme = scheme_name(d);
  const bool homogeneous = d.erasure.homogeneous();
  const double p = d.erasure.default_p;
  const std::string qcol =
      d.tx.kind == TxKind::random_access ? fmt(d.tx.q) : (d.tx.kind == TxKind::always_on ? "1" : "");
  const std::string capcol = d.cap ? std::to_string(*d.cap) : "inf";

  std::string csv = "# schema=delivery.v1\nscheme,n,p,q,C,mean_T,ci95,formula_T\n";
  const uint32_t n = d.topology.n_senders();
  if (d.topology.n_receivers() == 1) {
    const analysis::Et f = homogeneous ? scheme_formula(d, n) : analysis::Et::finite(NAN);
    delivery_row(csv, scheme, n, p, qcol, capcol, stats.per_receiver[0], f);
  } else {
    for (uint32_t j = 0; j < d.topology.n_receivers(); ++j) {
      const uint32_t deg = uint32_t(d.topology.in_neighbors(j).size());
      // For collision recovery the closed form is the per-receiver upper
      // bound; for the centralized baseline it is the cut lower bound.
      analysis::Et f = analysis::Et::finite(NAN);
      if (homogeneous)
        f = d.tx.kind == TxKind::centralized ? analysis::et_centralized(deg, p)
                                             : analysis::et_zigzag(deg, p);
      delivery_row(csv, scheme + "[r" + std::to_string(j) + "]", n, p, qcol, capcol,
                   stats.per_receiver[j], f);
    }
    delivery_row(csv, scheme + "[all]", n, p, qcol, capcol, stats.overall,
                 analysis::Et::finite(NAN));
  }

  json manifest = manifest_base(config, "delivery.v1");
  json result;
  result["trials"] = stats.trials;
  result["validated_trials"] = stats.validated;
  result["mean_T"] = stats.overall.mean;
  result["ci95"] = stats.overall.ci95;
  json per;
  for (const auto &m : stats.per_receiver) per.push_back({{"mean", m.mean}, {"ci95", m.ci95}});
  result["per_receiver"] = per;
  manifest["result"] = result;
  return finish(config, std::move(csv), std::move(manifest));
}

RunOutput run_figure3(const cfg::Config &config) {
  const json &j = config.resolved();
  const double p = j.at("p").get<double>();
  const uint32_t n_max = j.at("n_max").get<uint32_t>();
  const uint64_t trials = j.at("trials").get<uint64_t>();

  struct Scheme {
    std::string name;
    std::optional<uint32_t> cap;
  };
  std::vector<Scheme> schemes;
  for (const auto &s : j.at("schemes")) {
    const std::string name = s.get<std::string>();
    if (name == "ra") schemes.push_back({name, 1});
    if (name == "zzra_c2") schemes.push_back({name, 2});
    if (name == "zzra_c3") schemes.push_back({name, 3});
    if (name == "zz") schemes.push_back({name, std::nullopt});
  }

  std::string csv = "# schema=delivery.v1\nscheme,n,p,q,C,mean_T,ci95,formula_T\n";
  json rows = json::array();
  for (uint32_t sidx = 0; sidx < schemes.size(); ++sidx) {
    const Scheme &scheme = schemes[sidx];
    for (uint32_t n = 1; n <= n_max; ++n) {
      sim::DeliveryConfig d;
      d.topology = net::Topology::single_receiver(n);
      d.erasure.default_p = p;
      d.cap = scheme.cap;
      double q = 1.0;
      if (scheme.cap) {
        q = analysis::optimal_q(n, p, scheme.cap);
        d.tx.kind = TxKind::random_access;
        d.tx.q = q;
      } else {
        d.tx.kind = TxKind::always_on;
      }
      d.seed = rnd::mix(config.seed(), rnd::Tag::misc, sidx, n);
      d.trials = trials;
      d.max_slots = j.at("max_slots").get<uint64_t>();
      d.payload_len = j.at("payload_len").get<uint32_t>();
      d.validate_trials = j.at("validate_trials").get<uint64_t>();
      d.threads = config.threads();
      const sim::DeliveryStats stats = sim::run_delivery(d);
      const analysis::Et f = analysis::et_zigzag_ra(n, p, q, scheme.cap);
      delivery_row(csv, scheme.name, n, p, fmt(q), scheme.cap ? std::to_string(*scheme.cap) : "inf",
                   stats.per_receiver[0], f);
      rows.push_back({{"scheme", scheme.name},
                      {"n", n},
                      {"q", q},
                      {"mean_T", stats.per_receiver[0].mean},
                      {"ci95", stats.per_receiver[0].ci95},
                      {"formula_T", f.value}});
    }
  }

  json manifest = manifest_base(config, "delivery.v1");
  manifest["result"] = {{"rows", rows}};
  return finish(config, std::move(csv), std::move(manifest));
}

const char *verdict_str(sim::Verdict v) {
  switch (v) {
    case sim::Verdict::stable: return "stable";
    case sim::Verdict::unstable: return "unstable";
    case sim::Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

RunOutput run_streaming_kind(const cfg::Config &config) {
  const sim::StreamingConfig s = config.streaming();
  const sim::StreamingStats stats = sim::run_streaming(s);

  std::string csv = "# schema=streaming.v1\nt,sender,queue_len\n";
  for (const auto &[t, i, len] : stats.snapshots) {
    csv += std::to_string(t);
    csv += ',';
    csv += std::to_string(i);
    csv += ',';
    csv += std::to_string(len);
    csv += '\n';
  }

  json manifest = manifest_base(config, "streaming.v1");
  json result;
  result["verdict"] = verdict_str(stats.verdict);
  result["slope"] = stats.slope;
  result["time_avg_queue"] = stats.time_avg_queue;
  result["arrivals"] = stats.arrivals;
  result["drops"] = stats.drops;
  result["final_queue"] = stats.final_queue;
  result["acks"] = stats.acks;
  result["innovations"] = stats.innovations;
  result["seen"] = stats.seen_count;
  result["ack_without_innovation"] = stats.ack_without_innovation;
  result["empty_epochs"] = stats.empty_epochs;
  result["audit_checked"] = stats.audit_checked;
  result["audit_failures"] = stats.audit_failures;
  manifest["result"] = result;
  return finish(config, std::move(csv), std::move(manifest));
}

RunOutput run_probe_kind(const cfg::Config &config) {
  const sim::ProbeConfig p = config.probe();
  const sim::ProbeResult res = sim::stability_probe(p);

  std::string csv = "# schema=probe.v1\nray,boundary_scale,resolution\n";
  csv += fmt_ray(p.ray);
  csv += ',';
  csv += fmt(res.boundary_scale);
  csv += ',';
  csv += fmt(res.resolution);
  csv += '\n';

  json manifest = manifest_base(config, "probe.v1");
  json evals = json::array();
  for (const auto &[scale, verdict] : res.evaluations)
    evals.push_back({{"scale", scale}, {"verdict", verdict_str(verdict)}});
  manifest["result"] = {{"boundary_scale", res.boundary_scale}, {"evaluations", evals}};
  return finish(config, std::move(csv), std::move(manifest));
}

RunOutput run_region2d(const cfg::Config &config) {
  const json &j = config.resolved();
  std::string csv = "# schema=region2d.v1\nscheme,ray,boundary_scale,lambda1,lambda2\n";
  json result_rows = json::array();

  for (const auto &scheme_json : j.at("region_schemes")) {
    const std::string scheme = scheme_json.get<std::string>();
    uint64_t probe_idx = 0;
    for (const auto &ray_json : j.at("rays")) {
      sim::ProbeConfig pc;
      pc.base = config.streaming();
      pc.base.trial = 1000 * (scheme == "centralized" ? 1 : 2) + probe_idx;
      if (scheme == "centralized") {
        pc.base.tx.kind = TxKind::centralized;
        pc.base.tx.coding = policies::CodingMode::uncoded_head_of_line;
        pc.base.ack.kind = AckKind::arbitrary_collider;
        pc.base.ack.auto_order = false;
      } else {
        pc.base.tx.kind = TxKind::always_on;
        pc.base.ack.kind = AckKind::priority;
        pc.base.ack.auto_order = true;
      }
      pc.ray = ray_json.get<std::vector<double>>();
      pc.resolution = j.at("resolution").get<double>();
      pc.max_horizon = j.at("max_horizon").get<uint64_t>();
      double sum = 0.0;
      for (double v : pc.ray) sum += v;
      if (sum <= 0.0) continue;

      const sim::ProbeResult res = sim::stability_probe(pc);
      csv += scheme;
      csv += ',';
      csv += fmt_ray(pc.ray);
      csv += ',';
      csv += fmt(res.boundary_scale);
      for (double v : pc.ray) {
        csv += ',';
        csv += fmt(res.boundary_scale * v / sum);
      }
      csv += '\n';
      result_rows.push_back({{"scheme", scheme},
                             {"ray", pc.ray},
                             {"boundary_scale", res.boundary_scale}});
      ++probe_idx;
    }
  }

  json manifest = manifest_base(config, "region2d.v1");
  manifest["result"] = {{"rows", result_rows}};
  return finish(config, std::move(csv), std::move(manifest));
}

}  // namespace

RunOutput run_experiment(const cfg::Config &config) {
  config.validate();
  switch (config.kind()) {
    case cfg::Kind::delivery: return run_delivery_kind(config);
    case cfg::Kind::streaming: return run_streaming_kind(config);
    case cfg::Kind::stability_probe: return run_probe_kind(config);
    case cfg::Kind::figure3: return run_figure3(config);
    case cfg::Kind::region2d: return run_region2d(config);
  }
  fail(ErrorCode::Internal, "unhandled experiment kind");
}

}  // namespace zigzag::run
