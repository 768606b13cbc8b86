// Acceptance suite: one line per criterion, nonzero exit if any fails.
//
// Every tolerance is pinned here. Monte-Carlo comparisons run against the
// closed forms at 3 standard errors with fixed seeds; cells whose expected
// delivery time is too large to simulate at full trial count are reported
// as skipped rather than silently loosened.

#include <chrono>
#include <mutex>
#include <thread>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numeric>
#include <sstream>

#include "support.hpp"
#include "zigzag/runner.hpp"

using namespace zigzag;
using namespace zigzag::sim;
using policies::AckKind;
using policies::CodingMode;
using policies::TxKind;

namespace {

constexpr double kThird = 1.0 / 3.0;
constexpr uint64_t kSeed = 20250809;

int g_failures = 0;

void report(int id, bool pass, const std::string &text) {
  std::printf("%s %d: %s\n", pass ? "PASS" : "FAIL", id, text.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double se_of(const MeanCi &m) { return m.ci95 / 1.96; }

DeliveryConfig cell_config(uint32_t n, double p, uint64_t trials, uint64_t seed) {
  DeliveryConfig d;
  d.topology = net::Topology::single_receiver(n);
  d.erasure.default_p = p;
  d.trials = trials;
  d.validate_trials = 2;
  d.seed = seed;
  return d;
}

// ---------------------------------------------------------------- criterion 1
void criterion1() {
  struct Cell {
    std::string name;
    DeliveryConfig cfg;
    analysis::Et formula;
  };
  const uint32_t ns[] = {1, 2, 5, 10, 20};
  const double ps[] = {0.0, kThird, 0.5};
  const double qs[] = {0.1, 0.5, 0.999};  // 1 - eps with eps = 1e-3
  const uint64_t trials = 100000;

  std::vector<Cell> cells;
  uint64_t idx = 0;
  auto push = [&](std::string name, DeliveryConfig cfg, analysis::Et f) {
    cfg.seed = rnd::mix(kSeed, rnd::Tag::misc, 1, idx++);
    cells.push_back({std::move(name), std::move(cfg), f});
  };

  for (uint32_t n : ns)
    for (double p : ps) {
      {
        auto d = cell_config(n, p, trials, 0);
        d.tx.kind = TxKind::centralized;
        push("centralized", d, analysis::et_centralized(n, p));
      }
      for (double q : qs) {
        auto d = cell_config(n, p, trials, 0);
        d.tx.kind = TxKind::random_access;
        d.tx.q = q;
        d.cap = 1;
        push("ra", d, analysis::et_random_access(n, p, q));
      }
      {
        auto d = cell_config(n, p, trials, 0);
        push("zz", d, analysis::et_zigzag(n, p));
      }
      for (double q : qs)
        for (uint32_t cap : {1u, 2u, 3u, 0u}) {  // 0 = unlimited
          auto d = cell_config(n, p, trials, 0);
          d.tx.kind = TxKind::random_access;
          d.tx.q = q;
          if (cap != 0) d.cap = cap;
          push("zzra", d, analysis::et_zigzag_ra(n, p, q, cap == 0 ? std::nullopt
                														: std::optional<uint32_t>(cap)));
        }
    }

  uint64_t skipped = 0, compared = 0;
  double max_z = 0.0;
  std::string worst;
  bool ok = true;
  for (const Cell &cell : cells) {
    const uint32_t n = cell.cfg.topology.n_senders();
    // MC work per trial is roughly mean * n sender-slots; keep the full
    // grid inside the ten-minute budget.
    if (cell.formula.diverges || cell.formula.value * n > 5e4) {
      ++skipped;
      continue;
    }
    const DeliveryStats stats = run_delivery(cell.cfg);
    const double se = se_of(stats.per_receiver[0]);
    const double err = std::abs(stats.per_receiver[0].mean - cell.formula.value);
    ++compared;
    if (se == 0.0) {
      if (err > 1e-9) ok = false;
      continue;
    }
    const double z = err / se;
    if (z > max_z) {
      max_z = z;
      char buf[128];
      std::snprintf(buf, sizeof buf, "%s n=%u p=%.3g q=%.3g", cell.name.c_str(), n,
                    cell.cfg.erasure.default_p, cell.cfg.tx.q);
      worst = buf;
    }
    if (z > 3.0) ok = false;
  }
  char line[256];
  std::snprintf(line, sizeof line,
                "closed-form reproduction: %llu cells at 3 SE, max |z| = %.2f (%s), "
                "%llu skipped (expected time beyond the MC budget)",
                (unsigned long long)compared, max_z, worst.c_str(), (unsigned long long)skipped);
  report(1, ok, line);
}

// ---------------------------------------------------------------- criterion 2
void criterion2() {
  const double bound = analysis::et_zigzag_gap_bound(kThird);  // p/(1-p)^2 = 0.75
  bool ok = std::abs(bound - 0.75) < 1e-12;
  double sum = 0.0, worst_gap = 0.0;
  for (uint32_t n = 1; n <= 10000; ++n) {
    sum += 1.0 / (1.0 - std::pow(kThird, double(n)));
    const double gap = sum - double(n);
    worst_gap = std::max(worst_gap, gap);
    if (gap > bound) ok = false;
  }
  // The running sum is the closed form itself; spot-check against et_zigzag.
  for (uint32_t n : {1u, 7u, 100u, 10000u}) {
    double s = 0.0;
    for (uint32_t k = 1; k <= n; ++k) s += 1.0 / (1.0 - std::pow(kThird, double(k)));
    if (std::abs(analysis::et_zigzag(n, kThird).value - s) > 1e-9) ok = false;
  }
  char line[160];
  std::snprintf(line, sizeof line,
                "zigzag gap: et_zigzag(n, 1/3) - n <= %.2f for all n <= 10^4 (max gap %.6f)",
                bound, worst_gap);
  report(2, ok, line);
}

// ---------------------------------------------------------------- criterion 3
void criterion3() {
  const gf::Field field(gf::FieldSpec::gf256());
  const double ps[] = {0.0, kThird, 0.7};
  const uint32_t L = 8;
  uint64_t failures = 0;
  rnd::Rng rng(rnd::mix(kSeed, rnd::Tag::misc, 3, 0));

  for (uint64_t trace = 0; trace < 10000; ++trace) {
    const uint32_t n = uint32_t(1 + rng.below(8));
    const double p = ps[trace % 3];
    const bool random_tie = (trace / 3) % 2 == 1;
    const bool random_access = trace % 5 == 4;

    std::vector<zztest::Packet> packets;
    for (uint32_t i = 0; i < n; ++i) packets.push_back(zztest::make_packet(field, i, i, L, rng));
    std::vector<uint8_t> active(n, 1);
    codec::ReceiverState st(field, L);
    uint32_t acks = 0;
    for (uint64_t slot = 1; acks < n && slot <= 1000000; ++slot) {
      std::vector<uint32_t> colliders;
      for (uint32_t i = 0; i < n; ++i) {
        if (!active[i]) continue;
        if (random_access && rng.u01() >= 0.6) continue;
        if (rng.u01() >= p) colliders.push_back(i);
      }
      if (colliders.empty()) continue;
      std::vector<codec::CollisionPart> parts;
      for (uint32_t i : colliders)
        parts.push_back(
            {codec::encode_head_of_line(packets[i]), uint32_t(rng.below(L / 4 + 1)), 1});
      st.add_record(codec::superpose(field, slot, std::move(parts)));
      const uint32_t target =
          random_tie ? colliders[rng.below(colliders.size())] : colliders.front();
      active[target] = 0;
      ++acks;
    }

    bool good = acks == n && st.rank() == n;
    if (good) {
      const auto res = codec::zigzag_decode(st);
      good = res.residual.empty();
      for (uint32_t i = 0; good && i < n; ++i) {
        const auto it = res.decoded.find(i);
        good = it != res.decoded.end() && it->second == packets[i].payload;
      }
    }
    if (!good) ++failures;
  }
  char line[160];
  std::snprintf(line, sizeof line,
                "arbitrary-ACK traces: 10000 runs, rank = n and exact decode at the n-th ACK, "
                "%llu failures",
                (unsigned long long)failures);
  report(3, failures == 0, line);
}

// ---------------------------------------------------------------- criterion 4
void criterion4() {
  const double p = kThird;
  const uint64_t trials = 30000;
  bool ok = true;
  std::string note;
  double max_z = 0.0;
  uint32_t equal_cells = 0;

  struct Scheme {
    const char *name;
    std::optional<uint32_t> cap;
  };
  const Scheme schemes[] = {{"zz", std::nullopt}, {"zzra_c3", 3}, {"zzra_c2", 2}, {"ra", 1}};

  for (uint32_t n = 1; n <= 30; ++n) {
    double formula[4], mc[4];
    for (int s = 0; s < 4; ++s) {
      const double q = schemes[s].cap ? analysis::optimal_q(n, p, schemes[s].cap) : 1.0;
      formula[s] = analysis::et_zigzag_ra(n, p, q, schemes[s].cap).value;

      auto d = cell_config(n, p, trials, rnd::mix(kSeed, rnd::Tag::misc, 4, n * 8 + s));
      if (schemes[s].cap) {
        d.tx.kind = TxKind::random_access;
        d.tx.q = q;
        d.cap = schemes[s].cap;
      }
      const auto stats = run_delivery(d);
      mc[s] = stats.per_receiver[0].mean;
      const double se = se_of(stats.per_receiver[0]);
      const double z = se > 0 ? std::abs(mc[s] - formula[s]) / se : 0.0;
      max_z = std::max(max_z, z);
      if (z > 3.0) ok = false;
    }
    // Orderings on the closed forms; strict wherever the cap binds. With
    // n <= C the capped scheme picks q = 1 and coincides with unlimited
    // recovery, so those cells are equal by construction.
    for (int s = 0; s + 1 < 4; ++s) {
      const uint32_t cap_hi = schemes[s].cap ? *schemes[s].cap : n;
      const bool coincide = schemes[s + 1].cap && n <= *schemes[s + 1].cap && n <= cap_hi;
      if (coincide) {
        if (std::abs(formula[s] - formula[s + 1]) > 1e-9) ok = false;
        if (n >= 3) ++equal_cells;
      } else if (!(formula[s] < formula[s + 1] - 1e-9) && n >= 3) {
        ok = false;
      }
    }
    // Unlimited recovery delivers in n + O(1); the criterion pins n + 1.
    if (formula[0] > double(n) + 1.0) ok = false;
    if (mc[0] > double(n) + 1.0) ok = false;
  }
  char line[240];
  std::snprintf(line, sizeof line,
                "fig-3 orderings for n=1..30 at p=1/3: zz < zzra(C=3) < zzra(C=2) < ra where the "
                "cap binds (%u coinciding cells at n=3), zz mean <= n+1, MC anchored at 3 SE "
                "(max |z| = %.2f)",
                equal_cells, max_z);
  report(4, ok, line);
}

// ------------------------------------------------------- criteria 5 and 6
struct StableRuns {
  std::vector<StreamingStats> stats;
};

void criterion5(StableRuns &keep) {
  bool ok = true;
  std::ostringstream note;

  StreamingConfig base;
  base.topology = net::Topology::single_receiver(2);
  base.erasure.default_p = kThird;
  base.ack.kind = AckKind::priority;
  base.horizon = 1000000;
  base.seed = rnd::mix(kSeed, rnd::Tag::misc, 5, 0);

  const std::vector<std::vector<uint32_t>> perms{{0, 1}, {1, 0}};
  for (size_t k = 0; k < perms.size(); ++k) {
    const auto vertex = analysis::vertex_rates(perms[k], kThird);
    auto in_cfg = base;
    in_cfg.ack.order = perms[k];
    in_cfg.arrivals.rates = {0.95 * vertex[0], 0.95 * vertex[1]};
    in_cfg.trial = 10 + k;
    const auto inside = run_streaming(in_cfg);
    if (inside.verdict != Verdict::stable) ok = false;
    keep.stats.push_back(inside);

    auto out_cfg = base;
    out_cfg.ack.order = perms[k];
    out_cfg.arrivals.rates = {1.05 * vertex[0], 1.05 * vertex[1]};
    out_cfg.trial = 20 + k;
    if (run_streaming(out_cfg).verdict != Verdict::unstable) ok = false;
  }

  ProbeConfig zz_probe;
  zz_probe.base = base;
  zz_probe.base.ack.auto_order = true;
  zz_probe.base.arrivals.rates = {0.0, 0.0};
  zz_probe.ray = {1.0, 1.0};
  zz_probe.resolution = 0.02;
  zz_probe.max_horizon = 8000000;
  const auto zz_res = stability_probe(zz_probe);
  const double zz_err = std::abs(zz_res.boundary_scale - 8.0 / 9.0);
  if (zz_err > 0.02) ok = false;

  ProbeConfig ce_probe = zz_probe;
  ce_probe.base.tx.kind = TxKind::centralized;
  ce_probe.base.ack = policies::AckPolicy{};
  const auto ce_res = stability_probe(ce_probe);
  const double ce_err = std::abs(ce_res.boundary_scale - 2.0 / 3.0);
  if (ce_err > 0.02) ok = false;

  char line[240];
  std::snprintf(line, sizeof line,
                "stability region (n=2, p=1/3): both vertices stable at 0.95x / unstable at "
                "1.05x; probe boundaries: zigzag sum %.4f (target 8/9 +- 0.02), centralized "
                "%.4f (target 2/3 +- 0.02)",
                zz_res.boundary_scale, ce_res.boundary_scale);
  report(5, ok, line);
}

void criterion6(const StableRuns &runs) {
  bool ok = !runs.stats.empty();
  uint64_t epochs = 0, checked = 0, failures = 0;
  for (const auto &st : runs.stats) {
    epochs += st.empty_epochs;
    checked += st.audit_checked;
    failures += st.audit_failures;
    if (st.audit_checked == 0) ok = false;
  }
  if (failures != 0) ok = false;

  // Symbol-level confirmation on a short trace: at every empty epoch the
  // receiver's records decode every packet that has arrived.
  StreamingConfig sym;
  sym.topology = net::Topology::single_receiver(2);
  sym.erasure.default_p = kThird;
  sym.ack.kind = AckKind::priority;
  sym.arrivals.rates = {0.95 * 2.0 / 3.0, 0.95 * 2.0 / 9.0};
  sym.horizon = 4000;
  sym.record_symbols = true;
  sym.seed = rnd::mix(kSeed, rnd::Tag::misc, 6, 0);
  const auto st = run_streaming(sym);
  if (st.symbol_audit_checked == 0 || st.symbol_audit_failures != 0) ok = false;

  char line[240];
  std::snprintf(line, sizeof line,
                "decodability audit: %llu empty-queue epochs over stable traces, %llu audited, "
                "%llu failures; symbol-level trace: %llu epochs decoded in full",
                (unsigned long long)epochs, (unsigned long long)checked,
                (unsigned long long)failures, (unsigned long long)st.symbol_audit_checked);
  report(6, ok, line);
}

// ---------------------------------------------------------------- criterion 7
void criterion7() {
  bool ok = true;
  const net::Topology topo(3, 2, {{0, 0}, {1, 0}, {1, 1}, {2, 1}});

  // (a) Delivery-time upper bound per receiver.
  DeliveryConfig d;
  d.topology = topo;
  d.erasure.default_p = kThird;
  d.ack.kind = AckKind::unacked_collider;
  d.random_gains = true;
  d.trials = 20000;
  d.validate_trials = 4;
  d.seed = rnd::mix(kSeed, rnd::Tag::misc, 7, 1);
  const auto stats = run_delivery(d);
  double worst_margin = -1e9;
  for (uint32_t j = 0; j < 2; ++j) {
    const double bound = analysis::et_zigzag(2, kThird).value;  // degree 2 for both receivers
    const double margin = stats.per_receiver[j].mean - bound - 3.0 * se_of(stats.per_receiver[j]);
    worst_margin = std::max(worst_margin, margin);
    if (margin > 0.0) ok = false;
  }

  // (b, c) Code-ACK inside the cut-set region.
  const std::vector<double> rates{0.95 * 0.5, 0.95 * 0.35, 0.95 * 0.5};
  if (!analysis::region_contains(analysis::RegionSpec::cutset(kThird, topo), rates)) ok = false;

  StreamingConfig s;
  s.topology = topo;
  s.erasure.default_p = kThird;
  s.tx.coding = CodingMode::random_linear;
  s.ack.kind = AckKind::code_ack;
  s.arrivals.rates = rates;
  s.seed = rnd::mix(kSeed, rnd::Tag::misc, 7, 2);

  // One long run for the slope verdict.
  s.horizon = 1000000;
  const auto longrun = run_streaming(s);
  if (longrun.verdict != Verdict::stable) ok = false;

  // 1000 short traces: every ACK must ride a rank increment, and at every
  // all-queues-empty epoch each receiver has seen (and can decode) every
  // packet arrived for it.
  uint64_t violations = 0, audits = 0, audit_failures = 0, traces_with_epochs = 0;
  s.horizon = 3000;
  {
    const uint32_t workers = resolve_threads(0);
    std::vector<std::thread> pool;
    std::mutex mu;
    for (uint32_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w]() {
        uint64_t v = 0, a = 0, f = 0, e = 0;
        for (uint64_t t = w; t < 1000; t += workers) {
          StreamingConfig c = s;
          c.trial = 100 + t;
          const auto st = run_streaming(c);
          v += st.ack_without_innovation;
          a += st.audit_checked;
          f += st.audit_failures;
          e += st.empty_epochs > 0 ? 1 : 0;
        }
        std::lock_guard<std::mutex> lock(mu);
        violations += v;
        audits += a;
        audit_failures += f;
        traces_with_epochs += e;
      });
    for (auto &th : pool) th.join();
  }
  if (violations != 0 || audit_failures != 0 || audits == 0) ok = false;

  // Symbol-level spot checks over a large field.
  StreamingConfig sym = s;
  sym.field = gf::FieldSpec::binary(16, 0x1002d);
  sym.payload_len = 4;
  sym.horizon = 150;
  sym.record_symbols = true;
  uint64_t sym_checked = 0, sym_failures = 0;
  for (uint64_t t = 0; t < 3; ++t) {
    sym.trial = 5000 + t;
    const auto st = run_streaming(sym);
    sym_checked += st.symbol_audit_checked;
    sym_failures += st.symbol_audit_failures;
  }
  if (sym_checked == 0 || sym_failures != 0) ok = false;

  char line[300];
  std::snprintf(line, sizeof line,
                "multi-receiver: delivery means within the per-receiver bound (worst margin "
                "%.3f); code-ack stable at 0.95x cut-set interior, %llu ACK-without-innovation "
                "violations over 1000 traces (%llu with empty epochs, %llu audits, %llu "
                "failures), symbol spot-checks %llu/%llu",
                worst_margin, (unsigned long long)violations,
                (unsigned long long)traces_with_epochs, (unsigned long long)audits,
                (unsigned long long)audit_failures, (unsigned long long)(sym_checked - sym_failures),
                (unsigned long long)sym_checked);
  report(7, ok, line);
}

// ---------------------------------------------------------------- criterion 8
void criterion8() {
  rnd::Rng rng(rnd::mix(kSeed, rnd::Tag::misc, 8, 0));
  uint64_t failures = 0;
  for (int it = 0; it < 1000; ++it) {
    const auto spec = it % 2 ? gf::FieldSpec::prime(7) : gf::FieldSpec::gf256();
    const auto inst = zztest::random_decodable_instance(spec, rng);
    const auto oracle = zztest::dense_solve(inst.field, inst.records, inst.L, {});
    if (!oracle) {
      ++failures;
      continue;
    }
    codec::ReceiverState st(inst.field, inst.L);
    for (const auto &rec : inst.records) st.add_record(rec);
    codec::DecodeResult res;
    try {
      res = codec::zigzag_decode(st);
    } catch (const Error &) {
      ++failures;
      continue;
    }
    bool good = res.residual.empty();
    for (const auto &p : inst.packets) {
      const auto it2 = res.decoded.find(p.id);
      good = good && it2 != res.decoded.end() && it2->second == p.payload &&
             oracle->at(p.id) == p.payload;
    }
    if (!good) ++failures;
  }
  char line[160];
  std::snprintf(line, sizeof line,
                "codec oracle equivalence: 1000 random decodable instances (<=4 packets, L<=16, "
                "q in {7,256}), %llu mismatches against the dense solver",
                (unsigned long long)failures);
  report(8, failures == 0, line);
}

// ---------------------------------------------------------------- criterion 9
void criterion9() {
  bool ok = true;

  auto cfg = cfg::Config::from_text(R"({
    "kind": "delivery",
    "topology": {"senders": 5},
    "p": 0.3333333333333333,
    "trials": 500, "validate_trials": 2, "seed": 97
  })");
  const auto a = run::run_experiment(cfg);
  const auto b = run::run_experiment(cfg);
  if (a.csv != b.csv || a.manifest != b.manifest) ok = false;

  // The thread count must not influence the bytes.
  auto cfg1 = cfg;
  cfg1.override_kv("threads=1");
  auto cfg4 = cfg;
  cfg4.override_kv("threads=4");
  if (run::run_experiment(cfg1).csv != run::run_experiment(cfg4).csv) ok = false;

  auto scfg = cfg::Config::from_text(R"({
    "kind": "streaming",
    "topology": {"senders": 2},
    "p": 0.3333333333333333,
    "ack": {"kind": "priority"},
    "arrivals": {"rates": [0.6, 0.2]},
    "horizon": 20000, "seed": 13
  })");
  const auto s1 = run::run_experiment(scfg);
  const auto s2 = run::run_experiment(scfg);
  if (s1.csv != s2.csv || s1.manifest != s2.manifest) ok = false;

  report(9, ok, "determinism: reruns and thread-count changes produce byte-identical outputs");
}

}  // namespace

int main(int argc, char **argv) {
  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);

  StableRuns stable;
  const struct {
    int id;
    std::function<void()> fn;
  } criteria[] = {
      {1, criterion1},
      {2, criterion2},
      {3, criterion3},
      {4, criterion4},
      {5, [&] { criterion5(stable); }},
      {6, [&] { criterion6(stable); }},
      {7, criterion7},
      {8, criterion8},
      {9, criterion9},
  };

  const auto t0 = std::chrono::steady_clock::now();
  for (const auto &c : criteria) {
    if (only != 0 && c.id != only) continue;
    if (only != 0 && c.id == 6 && stable.stats.empty()) criterion5(stable);
    const auto start = std::chrono::steady_clock::now();
    c.fn();
    const auto secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("      (criterion %d took %.1fs)\n", c.id, secs);
  }
  const auto total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%s: %d criterion(s) failed, %.1fs total\n", g_failures == 0 ? "OK" : "FAILED",
              g_failures, total);
  return g_failures == 0 ? 0 : 1;
}
