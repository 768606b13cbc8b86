#include <doctest.h>

#include <cmath>
#include <numeric>

#include "zigzag/simulator.hpp"

using namespace zigzag;
using namespace zigzag::sim;
using policies::AckKind;
using policies::CodingMode;
using policies::TxKind;

namespace {

DeliveryConfig base_delivery(uint32_t n, double p) {
  DeliveryConfig d;
  d.topology = net::Topology::single_receiver(n);
  d.erasure.default_p = p;
  d.trials = 10000;
  d.validate_trials = 4;
  d.threads = 2;
  return d;
}

bool close3(const MeanCi &m, double target) {
  const double se = m.ci95 / 1.96;
  return std::abs(m.mean - target) <= 3.0 * se + 1e-9;
}

StreamingConfig base_streaming(uint32_t n, double p, std::vector<double> rates) {
  StreamingConfig s;
  s.topology = net::Topology::single_receiver(n);
  s.erasure.default_p = p;
  s.ack.kind = AckKind::priority;
  s.arrivals.rates = std::move(rates);
  s.horizon = 200000;
  return s;
}

}  // namespace

TEST_CASE("single sender with a clean channel delivers in one slot") {
  auto d = base_delivery(1, 0.0);
  d.trials = 500;
  const auto stats = run_delivery(d);
  CHECK(stats.overall.mean == doctest::Approx(1.0));
  CHECK(stats.overall.ci95 == doctest::Approx(0.0));
}

TEST_CASE("delivery means match the closed forms") {
  const double third = 1.0 / 3.0;

  // Unlimited collision recovery, always-on senders.
  auto zz = base_delivery(10, third);
  auto stats = run_delivery(zz);
  CHECK(close3(stats.per_receiver[0], analysis::et_zigzag(10, third).value));

  // Centralized token scheduling.
  auto ce = base_delivery(10, third);
  ce.tx.kind = TxKind::centralized;
  stats = run_delivery(ce);
  CHECK(close3(stats.per_receiver[0], 15.0));

  // Plain random access (C = 1).
  auto ra = base_delivery(2, 0.0);
  ra.tx.kind = TxKind::random_access;
  ra.tx.q = 0.5;
  ra.cap = 1;
  stats = run_delivery(ra);
  CHECK(close3(stats.per_receiver[0], 4.0));

  // Capped recovery.
  auto zr = base_delivery(5, third);
  zr.tx.kind = TxKind::random_access;
  zr.tx.q = 0.6;
  zr.cap = 2;
  stats = run_delivery(zr);
  CHECK(close3(stats.per_receiver[0], analysis::et_zigzag_ra(5, third, 0.6, 2).value));
}

TEST_CASE("inter-ack gaps sum to the delivery time") {
  auto d = base_delivery(6, 0.25);
  d.trials = 4000;
  const auto stats = run_delivery(d);
  const double xsum = std::accumulate(stats.xk_mean.begin(), stats.xk_mean.end(), 0.0);
  CHECK(xsum == doctest::Approx(stats.per_receiver[0].mean).epsilon(1e-9));
}

TEST_CASE("ack tie rules do not change the delivery law") {
  const double third = 1.0 / 3.0;
  auto a = base_delivery(6, third);
  auto b = base_delivery(6, third);
  b.ack.tie = policies::TieRule::seeded_random;
  b.seed = 2;
  const auto sa = run_delivery(a);
  const auto sb = run_delivery(b);
  const double se = std::hypot(sa.per_receiver[0].ci95, sb.per_receiver[0].ci95) / 1.96;
  CHECK(std::abs(sa.per_receiver[0].mean - sb.per_receiver[0].mean) <= 3.0 * se);
}

TEST_CASE("delivery is deterministic across thread counts") {
  auto d = base_delivery(5, 0.4);
  d.trials = 2000;
  d.threads = 1;
  const auto one = run_delivery(d);
  d.threads = 4;
  const auto four = run_delivery(d);
  CHECK(one.per_receiver[0].mean == four.per_receiver[0].mean);
  CHECK(one.per_receiver[0].ci95 == four.per_receiver[0].ci95);
  CHECK(one.xk_mean == four.xk_mean);
}

TEST_CASE("a dead channel exceeds the horizon") {
  auto d = base_delivery(2, 1.0);
  d.trials = 1;
  d.max_slots = 200;
  CHECK_THROWS_AS(run_delivery(d), Error);
}

TEST_CASE("multi-receiver delivery stays below the per-receiver bound") {
  const double third = 1.0 / 3.0;
  DeliveryConfig d;
  d.topology = net::Topology(3, 2, {{0, 0}, {1, 0}, {1, 1}, {2, 1}});
  d.erasure.default_p = third;
  d.ack.kind = AckKind::unacked_collider;
  d.random_gains = true;
  d.trials = 5000;
  d.validate_trials = 4;
  d.threads = 2;
  const auto stats = run_delivery(d);
  for (uint32_t j = 0; j < 2; ++j) {
    const double bound = analysis::et_zigzag(2, third).value;  // both receivers have degree 2
    CHECK(stats.per_receiver[j].mean <= bound + 3.0 * stats.per_receiver[j].ci95 / 1.96);
  }
}

TEST_CASE("streaming with no arrivals stays empty") {
  auto s = base_streaming(2, 1.0 / 3.0, {0.0, 0.0});
  s.horizon = 20000;
  const auto st = run_streaming(s);
  CHECK(st.verdict == Verdict::stable);
  CHECK(st.time_avg_queue[0] == 0.0);
  CHECK(st.time_avg_queue[1] == 0.0);
  CHECK(st.arrivals == std::vector<uint64_t>{0, 0});
}

TEST_CASE("priority policy is stable inside its vertex and unstable outside") {
  const double third = 1.0 / 3.0;
  const std::vector<uint32_t> perm{0, 1};
  const auto vertex = analysis::vertex_rates(perm, third);

  auto stable_cfg = base_streaming(2, third, {0.95 * vertex[0], 0.95 * vertex[1]});
  stable_cfg.ack.order = perm;
  const auto stable = run_streaming(stable_cfg);
  CHECK(stable.verdict == Verdict::stable);
  CHECK(stable.empty_epochs > 0);
  CHECK(stable.audit_failures == 0);

  auto unstable_cfg = base_streaming(2, third, {1.05 * vertex[0], 1.05 * vertex[1]});
  unstable_cfg.ack.order = perm;
  const auto unstable = run_streaming(unstable_cfg);
  CHECK(unstable.verdict == Verdict::unstable);
}

TEST_CASE("conservation: arrivals equal drops plus backlog") {
  auto s = base_streaming(2, 1.0 / 3.0, {0.5, 0.2});
  s.horizon = 50000;
  const auto st = run_streaming(s);
  for (uint32_t i = 0; i < 2; ++i) CHECK(st.arrivals[i] == st.drops[i] + st.final_queue[i]);
}

TEST_CASE("acks equal ledger rank along priority traces") {
  auto s = base_streaming(2, 1.0 / 3.0, {0.6, 0.2});
  s.horizon = 20000;
  s.track_ledger = true;
  const auto st = run_streaming(s);
  CHECK(st.acks[0] == st.innovations[0]);
  CHECK(st.ack_without_innovation == 0);
  CHECK(st.audit_failures == 0);
}

TEST_CASE("symbol-level audit decodes everything at empty epochs") {
  auto s = base_streaming(2, 1.0 / 3.0, {0.55, 0.18});
  s.horizon = 3000;
  s.record_symbols = true;
  const auto st = run_streaming(s);
  CHECK(st.symbol_audit_checked > 0);
  CHECK(st.symbol_audit_failures == 0);
}

TEST_CASE("symmetric demand inside the polymatroid is served") {
  const double third = 1.0 / 3.0;
  const std::vector<double> sym{0.9 * 4.0 / 9.0, 0.9 * 4.0 / 9.0};

  auto lq = base_streaming(2, third, sym);
  lq.ack.kind = AckKind::longest_queue;
  CHECK(run_streaming(lq).verdict == Verdict::stable);

  auto shared = base_streaming(2, third, sym);
  shared.ack.auto_order = true;  // frame-based time sharing between vertices
  CHECK(run_streaming(shared).verdict == Verdict::stable);

  // Scaled past the dominant face the same demand diverges.
  auto hot = base_streaming(2, third, {1.05 * 4.0 / 9.0, 1.05 * 4.0 / 9.0});
  hot.ack.kind = AckKind::longest_queue;
  CHECK(run_streaming(hot).verdict == Verdict::unstable);
}

TEST_CASE("saturated priority service matches the vertex rates") {
  const double third = 1.0 / 3.0;
  auto s = base_streaming(3, third, {1.0, 1.0, 1.0});
  s.horizon = 300000;
  const auto st = run_streaming(s);
  const auto vertex = analysis::vertex_rates(std::vector<uint32_t>{0, 1, 2}, third);
  for (uint32_t i = 0; i < 3; ++i) {
    const double served = double(st.drops[i]) / double(s.horizon);
    const double sd = std::sqrt(vertex[i] * (1 - vertex[i]) / double(s.horizon));
    CHECK(served >= vertex[i] - 4.0 * sd);
    CHECK(served <= vertex[i] + 4.0 * sd);
  }
}

TEST_CASE("code-ack streaming: acks ride innovations and audits pass") {
  StreamingConfig s;
  s.topology = net::Topology(3, 2, {{0, 0}, {1, 0}, {1, 1}, {2, 1}});
  s.erasure.default_p = 1.0 / 3.0;
  s.tx.coding = CodingMode::random_linear;
  s.ack.kind = AckKind::code_ack;
  s.arrivals.rates = {0.475, 0.3325, 0.475};
  s.horizon = 50000;
  const auto st = run_streaming(s);
  CHECK(st.verdict == Verdict::stable);
  CHECK(st.ack_without_innovation == 0);
  CHECK(st.empty_epochs > 0);
  CHECK(st.audit_failures == 0);
  for (uint32_t j = 0; j < 2; ++j) CHECK(st.seen_count[j] <= st.arrived_for[j]);
}

TEST_CASE("centralized streaming baseline obeys the simplex region") {
  const double third = 1.0 / 3.0;
  auto in = base_streaming(2, third, {0.31, 0.31});  // sum 0.62 < 2/3
  in.tx.kind = TxKind::centralized;
  in.ack.kind = AckKind::arbitrary_collider;
  CHECK(run_streaming(in).verdict == Verdict::stable);

  auto out = base_streaming(2, third, {0.35, 0.35});  // sum 0.70 > 2/3
  out.tx.kind = TxKind::centralized;
  out.ack.kind = AckKind::arbitrary_collider;
  CHECK(run_streaming(out).verdict == Verdict::unstable);
}

TEST_CASE("streaming rejects invalid configurations") {
  auto s = base_streaming(2, 1.0 / 3.0, {1.5, 0.1});
  CHECK_THROWS_AS(run_streaming(s), Error);  // bernoulli rate above 1

  auto mism = base_streaming(2, 1.0 / 3.0, {0.1});
  CHECK_THROWS_AS(run_streaming(mism), Error);  // rate vector length

  auto coded = base_streaming(2, 1.0 / 3.0, {0.1, 0.1});
  coded.tx.coding = CodingMode::random_linear;  // coding without code_ack
  CHECK_THROWS_AS(run_streaming(coded), Error);
}

TEST_CASE("streaming runs are reproducible") {
  auto s = base_streaming(2, 1.0 / 3.0, {0.5, 0.2});
  s.horizon = 30000;
  const auto a = run_streaming(s);
  const auto b = run_streaming(s);
  CHECK(a.snapshots == b.snapshots);
  CHECK(a.acks == b.acks);
  CHECK(a.time_avg_queue == b.time_avg_queue);
  CHECK(a.slope == b.slope);
}

TEST_CASE("stability probe finds the single-sender boundary") {
  ProbeConfig pc;
  pc.base = base_streaming(2, 1.0 / 3.0, {0.0, 0.0});
  pc.base.horizon = 150000;
  pc.base.ack.auto_order = true;
  pc.ray = {1.0, 0.0};
  pc.resolution = 0.03;
  pc.max_horizon = 1200000;
  const auto res = stability_probe(pc);
  CHECK(std::abs(res.boundary_scale - 2.0 / 3.0) <= 0.03 + 0.01);
  CHECK(res.evaluations.size() >= 4);
}
