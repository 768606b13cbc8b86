#include "zigzag/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <numeric>
#include <thread>

namespace zigzag::sim {

using policies::AckKind;
using policies::CodingMode;
using policies::TieRule;
using policies::TxKind;

uint32_t resolve_threads(uint32_t requested) {
  if (requested != 0) return requested;
  if (const char *env = std::getenv("ZZSIM_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return uint32_t(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

void ArrivalConfig::validate(uint32_t n_senders) const {
  require(rates.size() == n_senders, ErrorCode::InvalidRate,
          "arrival rate vector length must match sender count");
  for (double r : rates) {
    require(r >= 0.0, ErrorCode::InvalidRate, "arrival rates must be nonnegative");
    if (kind == Kind::bernoulli)
      require(r <= 1.0, ErrorCode::InvalidRate, "bernoulli arrival rates must be in [0, 1]");
  }
  if (kind == Kind::batch_bounded) {
    require(a_max >= 1 && a_max <= 255, ErrorCode::InvalidArgument, "batch bound must be in [1, 255]");
    for (double r : rates)
      require(r <= double(a_max), ErrorCode::InvalidRate, "batch arrival rate exceeds the bound");
  }
}

// ---------------------------------------------------------------------------
// Delivery experiments
// ---------------------------------------------------------------------------

namespace {

struct Link {
  uint32_t sender;
  size_t edge;
  double p;
};

struct DeliveryCtx {
  const DeliveryConfig &cfg;
  uint32_t n, r;
  bool single;
  bool ack_completion;  // completion by ACK count, valid without collisions to resolve
  uint32_t offset_max;
  std::vector<std::vector<Link>> links;  // per receiver
  std::vector<uint32_t> neighbor_mask;   // per sender
  std::vector<uint32_t> tx_order;
  const gf::ExtField *ext = nullptr;
  std::vector<std::vector<gf::ExtField::Elem>> dpow;  // [eval][offset]
};

// Incremental transfer-matrix rank at the shared evaluation points; full
// rank at any point proves decodability of the receiver's neighborhood.
// Channel gains enter as fresh random draws from the evaluation field:
// the physical model has generic per-slot gains, so the transfer system
// is tested over the rational-function field in the gains as well as the
// delay variable, not at whatever scalar the packet field happened to
// assign.
struct RecvTracker {
  const DeliveryCtx *c;
  uint32_t receiver;
  std::vector<uint32_t> col_of;  // sender -> column (or UINT32_MAX)
  size_t need;
  std::vector<gf::ExtRankTracker> tr;
  bool full = false;

  RecvTracker(const DeliveryCtx &ctx, uint32_t j) : c(&ctx), receiver(j) {
    const auto in = ctx.cfg.topology.in_neighbors(j);
    need = in.size();
    col_of.assign(ctx.n, UINT32_MAX);
    for (size_t k = 0; k < in.size(); ++k) col_of[in[k]] = uint32_t(k);
    tr.assign(3, gf::ExtRankTracker(*ctx.ext));
  }

  void add(const std::vector<uint32_t> &colliders, const std::vector<uint32_t> &offsets,
           uint64_t trial, uint64_t slot) {
    if (full) return;
    const gf::ExtField &E = *c->ext;
    for (int e = 0; e < 3; ++e) {
      std::vector<gf::ExtField::Elem> row(need, E.zero());
      for (size_t k = 0; k < colliders.size(); ++k) {
        const uint32_t col = col_of[colliders[k]];
        rnd::Rng grng(rnd::mix(c->cfg.seed ^ 0x9a19c0ffULL, rnd::Tag::gain, trial, slot,
                               (uint64_t(receiver) << 34) | (k << 2) | uint64_t(e)));
        const auto gain = E.random_nonzero(grng);
        row[col] = E.add(row[col], E.mul(gain, c->dpow[e][offsets[k]]));
      }
      tr[e].add_row(std::move(row));
      if (tr[e].rank() == need) {
        full = true;
        return;
      }
    }
  }
};

struct TrialOut {
  std::vector<uint64_t> t_recv;
  uint64_t t_all = 0;
  std::vector<uint64_t> ack_slots;  // single receiver
};

uint32_t draw_offset(const DeliveryCtx &c, uint64_t trial, uint64_t slot, uint32_t receiver,
                     size_t part) {
  if (c.offset_max == 0) return 0;
  const uint64_t h = rnd::mix(c.cfg.seed, rnd::Tag::offset, trial, slot,
                              (uint64_t(receiver) << 32) | part);
  return uint32_t(rnd::below(c.offset_max + 1, h));
}

uint16_t draw_gain(const DeliveryCtx &c, const gf::Field &f, uint64_t trial, uint64_t slot,
                   uint32_t receiver, size_t part) {
  if (!c.cfg.random_gains) return 1;
  const uint64_t h =
      rnd::mix(c.cfg.seed, rnd::Tag::gain, trial, slot, (uint64_t(receiver) << 32) | part);
  return uint16_t(1 + rnd::below(f.order() - 1, h));
}

TrialOut run_delivery_trial(const DeliveryCtx &c, uint64_t trial) {
  const DeliveryConfig &cfg = c.cfg;
  const uint32_t n = c.n, r = c.r;

  std::vector<uint32_t> pending(c.neighbor_mask);  // receivers that have not ACKed sender i
  std::vector<uint8_t> acked(size_t(r) * n, 0);
  std::vector<uint64_t> acks(r, 0);
  TrialOut out;
  out.t_recv.assign(r, 0);
  uint32_t done_count = 0;
  std::vector<uint8_t> done(r, 0);

  std::vector<RecvTracker> trackers;
  if (!c.ack_completion)
    for (uint32_t j = 0; j < r; ++j) trackers.emplace_back(c, j);

  std::vector<uint8_t> transmitting(n, 0);
  std::vector<uint32_t> colliders, fresh;
  std::vector<uint32_t> off_buf;

  for (uint64_t slot = 1; slot <= cfg.max_slots; ++slot) {
    // Transmit decisions.
    std::fill(transmitting.begin(), transmitting.end(), 0);
    if (cfg.tx.kind == TxKind::centralized) {
      if (c.single) {
        for (uint32_t idx : c.tx_order)
          if (pending[idx] != 0) {
            transmitting[idx] = 1;
            break;
          }
      } else {
        // Greedy round-robin maximal non-interfering set (baseline).
        uint32_t used = 0;
        for (uint32_t k = 0; k < n; ++k) {
          const uint32_t i = c.tx_order[(k + slot) % n];
          if (pending[i] == 0) continue;
          if ((c.neighbor_mask[i] & used) != 0) continue;
          transmitting[i] = 1;
          used |= c.neighbor_mask[i];
        }
      }
    } else {
      for (uint32_t i = 0; i < n; ++i)
        transmitting[i] = pending[i] != 0 && policies::transmit_decision(cfg.tx, i, 1, false,
                                                                         cfg.seed, trial, slot);
    }

    // Receptions, ACKs, completion per receiver.
    for (uint32_t j = 0; j < r; ++j) {
      colliders.clear();
      for (const Link &l : c.links[j])
        if (transmitting[l.sender] &&
            rnd::u01(cfg.seed, rnd::Tag::channel, trial, slot, l.edge) >= l.p)
          colliders.push_back(l.sender);
      if (colliders.empty()) continue;
      if (cfg.cap && colliders.size() > *cfg.cap) continue;

      // ACK one collider this receiver has not acknowledged yet.
      fresh.clear();
      for (uint32_t i : colliders)
        if (!acked[size_t(j) * n + i]) fresh.push_back(i);
      if (!fresh.empty()) {
        uint32_t target = fresh.front();
        if (cfg.ack.tie == TieRule::seeded_random) {
          const uint64_t h = rnd::mix(cfg.seed, rnd::Tag::ack_tie, trial, slot, j);
          target = fresh[rnd::below(fresh.size(), h)];
        }
        acked[size_t(j) * n + target] = 1;
        ++acks[j];
        pending[target] &= ~(1u << j);
        if (c.single) out.ack_slots.push_back(slot);
      }

      if (done[j]) continue;
      if (c.ack_completion) {
        if (acks[j] == c.links[j].size()) {
          done[j] = 1;
          out.t_recv[j] = slot;
          ++done_count;
        }
      } else {
        off_buf.clear();
        for (size_t k = 0; k < colliders.size(); ++k)
          off_buf.push_back(draw_offset(c, trial, slot, j, k));
        trackers[j].add(colliders, off_buf, trial, slot);
        if (trackers[j].full) {
          done[j] = 1;
          out.t_recv[j] = slot;
          ++done_count;
        }
      }
    }

    if (done_count == r) {
      out.t_all = *std::max_element(out.t_recv.begin(), out.t_recv.end());
      return out;
    }
  }
  fail(ErrorCode::HorizonExceeded, "delivery trial exceeded max_slots");
}

// Re-runs a trial at symbol level and checks that decoding succeeds exactly
// where the counting path declared completion.
void validate_delivery_trial(const DeliveryCtx &c, uint64_t trial, const TrialOut &expect) {
  const DeliveryConfig &cfg = c.cfg;
  const uint32_t n = c.n, r = c.r;
  const gf::Field field(cfg.field);
  const uint32_t L = cfg.payload_len;

  std::vector<codec::Packet> packets(n);
  for (uint32_t i = 0; i < n; ++i) {
    packets[i].id = i;
    packets[i].sender = i;
    packets[i].payload.resize(L);
    for (uint32_t s = 0; s < L; ++s) {
      const uint64_t h = rnd::mix(cfg.seed, rnd::Tag::payload, trial, i, s);
      packets[i].payload[s] = uint16_t(rnd::below(field.order(), h));
    }
  }

  std::vector<codec::ReceiverState> states;
  states.reserve(r);
  for (uint32_t j = 0; j < r; ++j) states.emplace_back(field, L);

  std::vector<uint32_t> pending(c.neighbor_mask);
  std::vector<uint8_t> acked(size_t(r) * n, 0);
  std::vector<uint8_t> done(r, 0);
  std::vector<uint8_t> transmitting(n, 0);

  for (uint64_t slot = 1; slot <= expect.t_all; ++slot) {
    std::fill(transmitting.begin(), transmitting.end(), 0);
    if (cfg.tx.kind == TxKind::centralized) {
      if (c.single) {
        for (uint32_t idx : c.tx_order)
          if (pending[idx] != 0) {
            transmitting[idx] = 1;
            break;
          }
      } else {
        uint32_t used = 0;
        for (uint32_t k = 0; k < n; ++k) {
          const uint32_t i = c.tx_order[(k + slot) % n];
          if (pending[i] == 0 || (c.neighbor_mask[i] & used) != 0) continue;
          transmitting[i] = 1;
          used |= c.neighbor_mask[i];
        }
      }
    } else {
      for (uint32_t i = 0; i < n; ++i)
        transmitting[i] = pending[i] != 0 && policies::transmit_decision(cfg.tx, i, 1, false,
                                                                         cfg.seed, trial, slot);
    }

    for (uint32_t j = 0; j < r; ++j) {
      std::vector<uint32_t> colliders;
      for (const Link &l : c.links[j])
        if (transmitting[l.sender] &&
            rnd::u01(cfg.seed, rnd::Tag::channel, trial, slot, l.edge) >= l.p)
          colliders.push_back(l.sender);
      if (colliders.empty()) continue;
      if (cfg.cap && colliders.size() > *cfg.cap) continue;

      std::vector<uint32_t> fresh;
      for (uint32_t i : colliders)
        if (!acked[size_t(j) * n + i]) fresh.push_back(i);
      if (!fresh.empty()) {
        uint32_t target = fresh.front();
        if (cfg.ack.tie == TieRule::seeded_random) {
          const uint64_t h = rnd::mix(cfg.seed, rnd::Tag::ack_tie, trial, slot, j);
          target = fresh[rnd::below(fresh.size(), h)];
        }
        acked[size_t(j) * n + target] = 1;
        pending[target] &= ~(1u << j);
      }

      if (done[j]) continue;
      std::vector<codec::CollisionPart> parts;
      for (size_t k = 0; k < colliders.size(); ++k) {
        codec::CollisionPart part;
        part.tx = codec::encode_head_of_line(packets[colliders[k]]);
        part.offset = draw_offset(c, trial, slot, j, k);
        part.gain = c.cfg.random_gains ? draw_gain(c, field, trial, slot, j, k) : uint16_t(1);
        parts.push_back(std::move(part));
      }
      states[j].add_record(codec::superpose(field, slot, std::move(parts)));
      if (slot == expect.t_recv[j]) done[j] = 1;
    }
  }

  for (uint32_t j = 0; j < r; ++j) {
    if (c.single)
      require(states[j].rank() == c.links[j].size(), ErrorCode::Internal,
              "validation: ledger rank does not match ACK count");
    const auto result = codec::zigzag_decode(states[j]);
    for (const Link &l : c.links[j]) {
      const auto it = result.decoded.find(l.sender);
      require(it != result.decoded.end() && it->second == packets[l.sender].payload,
              ErrorCode::Internal, "validation: symbol-level decode mismatch");
    }
  }
}

struct DeliveryAccum {
  std::vector<uint64_t> sum;
  std::vector<__uint128_t> sumsq;
  uint64_t overall_sum = 0;
  __uint128_t overall_sumsq = 0;
  std::vector<uint64_t> xk_sum;
  uint64_t trials = 0;

  void init(uint32_t r, uint32_t n) {
    sum.assign(r, 0);
    sumsq.assign(r, 0);
    xk_sum.assign(n, 0);
  }
  void add(const TrialOut &t) {
    for (size_t j = 0; j < sum.size(); ++j) {
      sum[j] += t.t_recv[j];
      sumsq[j] += __uint128_t(t.t_recv[j]) * t.t_recv[j];
    }
    overall_sum += t.t_all;
    overall_sumsq += __uint128_t(t.t_all) * t.t_all;
    uint64_t prev = 0;
    for (size_t k = 0; k < t.ack_slots.size() && k < xk_sum.size(); ++k) {
      xk_sum[k] += t.ack_slots[k] - prev;
      prev = t.ack_slots[k];
    }
    ++trials;
  }
  void merge(const DeliveryAccum &o) {
    for (size_t j = 0; j < sum.size(); ++j) {
      sum[j] += o.sum[j];
      sumsq[j] += o.sumsq[j];
    }
    overall_sum += o.overall_sum;
    overall_sumsq += o.overall_sumsq;
    for (size_t k = 0; k < xk_sum.size(); ++k) xk_sum[k] += o.xk_sum[k];
    trials += o.trials;
  }
};

MeanCi mean_ci(uint64_t sum, __uint128_t sumsq, uint64_t n) {
  MeanCi m;
  m.samples = n;
  if (n == 0) return m;
  m.mean = double(sum) / double(n);
  if (n >= 2) {
    const double sq = double(sumsq);
    const double var = std::max(0.0, (sq - double(sum) * m.mean) / double(n - 1));
    m.ci95 = 1.96 * std::sqrt(var / double(n));
  }
  return m;
}

}  // namespace

DeliveryStats run_delivery(const DeliveryConfig &cfg) {
  const uint32_t n = cfg.topology.n_senders();
  const uint32_t r = cfg.topology.n_receivers();
  require(n <= 30, ErrorCode::InvalidConfig, "delivery supports at most 30 senders");
  require(r <= 30, ErrorCode::InvalidConfig, "delivery supports at most 30 receivers");
  require(cfg.trials >= 1, ErrorCode::InvalidConfig, "need at least one trial");
  require(cfg.payload_len >= 1, ErrorCode::InvalidConfig, "payload length must be positive");
  cfg.erasure.validate();
  cfg.tx.validate(n);
  cfg.ack.validate(n);
  if (cfg.cap) require(*cfg.cap >= 1, ErrorCode::InvalidConfig, "contention cap must be >= 1");
  for (uint32_t i = 0; i < n; ++i)
    require(!cfg.topology.out_neighbors(i).empty(), ErrorCode::InvalidConfig,
            "sender with no neighbors");
  require(cfg.ack.kind == AckKind::arbitrary_collider || cfg.ack.kind == AckKind::unacked_collider,
          ErrorCode::InvalidConfig, "delivery uses a collider ACK policy");
  if (r > 1) {
    require(cfg.ack.kind == AckKind::unacked_collider || cfg.tx.kind == TxKind::centralized,
            ErrorCode::InvalidConfig,
            "multi-receiver delivery needs the unacked-collider ACK policy");
    const bool collisions_matter =
        cfg.tx.kind != TxKind::centralized && (!cfg.cap || *cfg.cap > 1);
    require(!collisions_matter || cfg.random_gains, ErrorCode::InvalidConfig,
            "multi-receiver collision recovery needs per-slot random gains; with unit gains a "
            "repeated offset pattern can be permanently undecodable");
  }

  DeliveryCtx ctx{cfg,
                  n,
                  r,
                  r == 1,
                  /*ack_completion=*/r == 1 || cfg.tx.kind == TxKind::centralized ||
                      (cfg.cap && *cfg.cap == 1),
                  cfg.offset_max ? *cfg.offset_max : cfg.payload_len / 4,
                  {},
                  {},
                  {},
                  nullptr,
                  {}};
  require(ctx.offset_max < cfg.payload_len, ErrorCode::InvalidConfig,
          "offset bound must be smaller than the payload length");
  ctx.links.resize(r);
  for (uint32_t j = 0; j < r; ++j)
    for (uint32_t i : cfg.topology.in_neighbors(j))
      ctx.links[j].push_back({i, cfg.topology.edge_index(i, j), cfg.erasure.p(i, j)});
  ctx.neighbor_mask.assign(n, 0);
  for (uint32_t i = 0; i < n; ++i)
    for (uint32_t j : cfg.topology.out_neighbors(i)) ctx.neighbor_mask[i] |= 1u << j;
  ctx.tx_order.resize(n);
  std::iota(ctx.tx_order.begin(), ctx.tx_order.end(), 0);
  if (!cfg.tx.order.empty()) ctx.tx_order = cfg.tx.order;

  if (!ctx.ack_completion) {
    ctx.ext = &codec::decode_eval_field(cfg.field);
    ctx.dpow.resize(3);
    for (int e = 0; e < 3; ++e) {
      const auto d = codec::decode_eval_point(cfg.field, e);
      ctx.dpow[e].assign(ctx.offset_max + 1, ctx.ext->one());
      for (uint32_t o = 1; o <= ctx.offset_max; ++o)
        ctx.dpow[e][o] = ctx.ext->mul(ctx.dpow[e][o - 1], d);
    }
  }

  const uint32_t workers = std::min<uint64_t>(resolve_threads(cfg.threads), cfg.trials);
  std::vector<DeliveryAccum> acc(workers);
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (uint32_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      try {
        acc[w].init(r, n);
        for (uint64_t t = w; t < cfg.trials; t += workers) {
          const TrialOut out = run_delivery_trial(ctx, t);
          if (t < cfg.validate_trials) validate_delivery_trial(ctx, t, out);
          acc[w].add(out);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto &th : pool) th.join();
  for (auto &e : errors)
    if (e) std::rethrow_exception(e);

  DeliveryAccum total;
  total.init(r, n);
  for (const auto &a : acc) total.merge(a);

  DeliveryStats stats;
  stats.trials = total.trials;
  stats.validated = std::min<uint64_t>(cfg.validate_trials, cfg.trials);
  for (uint32_t j = 0; j < r; ++j)
    stats.per_receiver.push_back(mean_ci(total.sum[j], total.sumsq[j], total.trials));
  stats.overall = mean_ci(total.overall_sum, total.overall_sumsq, total.trials);
  if (r == 1) {
    stats.xk_mean.resize(n);
    for (uint32_t k = 0; k < n; ++k) stats.xk_mean[k] = double(total.xk_sum[k]) / double(total.trials);
  }
  return stats;
}

// ---------------------------------------------------------------------------
// Streaming experiments
// ---------------------------------------------------------------------------

namespace {

// Degree-of-freedom ledger under the large-field model: coding coefficients
// and channel gains are treated as generic, so row reduction is purely
// structural on packet-id supports. The basis is kept fully reduced: each
// pivot row is its pivot plus a tail of currently-unseen columns, so
// reducing a reception touches each of its pivots once and tails stay the
// size of the unseen backlog.
struct SupportLedger {
  std::map<uint64_t, std::set<uint64_t>> pivot_tail;  // live pivot -> unseen tail
  std::map<uint64_t, std::set<uint64_t>> tail_index;  // unseen col -> live pivots holding it
  size_t rank_ = 0;

  // Returns the packet that became seen (the new pivot), if innovative.
  std::optional<uint64_t> add(const std::vector<uint64_t> &support) {
    std::set<uint64_t> tail;
    for (uint64_t c : support) {
      const auto it = pivot_tail.find(c);
      if (it == pivot_tail.end()) {
        tail.insert(c);  // generic entries never cancel
      } else {
        tail.insert(it->second.begin(), it->second.end());
      }
    }
    if (tail.empty()) return std::nullopt;
    const uint64_t pivot = *tail.begin();
    tail.erase(tail.begin());

    // The new pivot leaves every tail it appeared in.
    if (const auto idx = tail_index.find(pivot); idx != tail_index.end()) {
      for (uint64_t holder : idx->second) {
        auto &t = pivot_tail[holder];
        t.erase(pivot);
        t.insert(tail.begin(), tail.end());
        for (uint64_t c : tail) tail_index[c].insert(holder);
      }
      tail_index.erase(idx);
    }
    for (uint64_t c : tail) tail_index[c].insert(pivot);
    pivot_tail.emplace(pivot, std::move(tail));
    ++rank_;
    return pivot;
  }

  // A dropped packet's column can never reappear in a support (it left
  // every queue) nor in a tail (tails hold unseen columns only), so its
  // row is unreachable and can be discarded to keep the index bounded by
  // the in-flight window.
  void retire(uint64_t c) {
    const auto it = pivot_tail.find(c);
    if (it == pivot_tail.end()) return;
    for (uint64_t x : it->second) {
      const auto idx = tail_index.find(x);
      if (idx != tail_index.end()) {
        idx->second.erase(c);
        if (idx->second.empty()) tail_index.erase(idx);
      }
    }
    pivot_tail.erase(it);
  }

  size_t rank() const { return rank_; }
};

struct PacketMeta {
  uint32_t origin = 0;
  uint32_t acked_mask = 0;
  uint32_t seen_mask = 0;
};

// Deterministic frame-based time sharing across priority permutations.
struct TimeShare {
  std::vector<analysis::VertexWeight> shares;
  std::vector<uint64_t> assigned;
  uint64_t frames_done = 0;
  size_t current = 0;

  void advance_to(uint64_t frame) {
    while (frames_done <= frame) {
      size_t best = 0;
      double best_score = -1e300;
      for (size_t k = 0; k < shares.size(); ++k) {
        const double score =
            shares[k].weight * double(frames_done + 1) - double(assigned[k]);
        if (score > best_score + 1e-15) {
          best_score = score;
          best = k;
        }
      }
      current = best;
      ++assigned[best];
      ++frames_done;
    }
  }
};

double fit_slope(std::span<const std::pair<uint64_t, double>> pts) {
  if (pts.size() < 2) return 0.0;
  double mx = 0, my = 0;
  for (const auto &[x, y] : pts) {
    mx += double(x);
    my += y;
  }
  mx /= double(pts.size());
  my /= double(pts.size());
  double num = 0, den = 0;
  for (const auto &[x, y] : pts) {
    num += (double(x) - mx) * (y - my);
    den += (double(x) - mx) * (double(x) - mx);
  }
  return den == 0 ? 0.0 : num / den;
}

}  // namespace

StreamingStats run_streaming(const StreamingConfig &cfg) {
  const uint32_t n = cfg.topology.n_senders();
  const uint32_t r = cfg.topology.n_receivers();
  require(n <= 30 && r <= 30, ErrorCode::InvalidConfig, "streaming supports at most 30 nodes");
  require(cfg.horizon >= 1, ErrorCode::InvalidConfig, "horizon must be positive");
  cfg.erasure.validate();
  cfg.tx.validate(n);
  cfg.ack.validate(n);
  cfg.arrivals.validate(n);
  if (cfg.cap) require(*cfg.cap >= 1, ErrorCode::InvalidConfig, "contention cap must be >= 1");
  for (uint32_t i = 0; i < n; ++i)
    require(!cfg.topology.out_neighbors(i).empty(), ErrorCode::InvalidConfig,
            "sender with no neighbors");
  require(!cfg.record_symbols || cfg.horizon <= 200000, ErrorCode::InvalidConfig,
          "symbol recording is limited to horizons <= 2e5");
  const bool code_ack = cfg.ack.kind == AckKind::code_ack;
  const bool coded = cfg.tx.coding == CodingMode::random_linear;
  require(coded == code_ack, ErrorCode::InvalidConfig,
          "random linear coding pairs with the code_ack policy");
  require(!code_ack || cfg.tx.kind == TxKind::always_on, ErrorCode::InvalidConfig,
          "code_ack assumes every nonempty sender transmits");
  require(cfg.ack.kind != AckKind::unacked_collider, ErrorCode::InvalidConfig,
          "unacked_collider is a delivery-experiment ACK policy");
  require(cfg.frame_length >= 1, ErrorCode::InvalidConfig, "frame length must be positive");
  const bool ledger_mode = code_ack || coded || cfg.track_ledger;
  const uint32_t offset_max = cfg.offset_max ? *cfg.offset_max : cfg.payload_len / 4;
  require(offset_max < cfg.payload_len, ErrorCode::InvalidConfig,
          "offset bound must be smaller than the payload length");

  // Effective priority orders. auto_order derives frame-based time sharing
  // from the direction of the arrival-rate vector.
  std::vector<uint32_t> natural(n);
  std::iota(natural.begin(), natural.end(), 0);
  TimeShare share;
  const bool time_sharing = cfg.ack.auto_order && cfg.ack.kind == AckKind::priority;
  if (time_sharing) {
    const double sum = std::accumulate(cfg.arrivals.rates.begin(), cfg.arrivals.rates.end(), 0.0);
    if (sum <= 0.0) {
      share.shares.push_back({natural, 1.0});
    } else {
      std::vector<double> dir(n);
      for (uint32_t i = 0; i < n; ++i) dir[i] = cfg.arrivals.rates[i] / sum;
      // Scale the direction onto the dominant face, then decompose.
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        std::vector<double> probe_pt(n);
        for (uint32_t i = 0; i < n; ++i) probe_pt[i] = mid * dir[i];
        (analysis::region_contains(analysis::RegionSpec::mac(cfg.erasure.default_p), probe_pt,
                                   true)
             ? lo
             : hi) = mid;
      }
      std::vector<double> face_pt(n);
      for (uint32_t i = 0; i < n; ++i) face_pt[i] = std::max(0.0, (lo - 1e-9) * dir[i]);
      share.shares = analysis::decompose_rates(face_pt, cfg.erasure.default_p);
      if (share.shares.empty()) share.shares.push_back({natural, 1.0});
    }
    share.assigned.assign(share.shares.size(), 0);
  }
  const std::vector<uint32_t> fixed_order = cfg.ack.order.empty() ? natural : cfg.ack.order;

  // Per-receiver link tables.
  std::vector<std::vector<Link>> links(r);
  for (uint32_t j = 0; j < r; ++j)
    for (uint32_t i : cfg.topology.in_neighbors(j))
      links[j].push_back({i, cfg.topology.edge_index(i, j), cfg.erasure.p(i, j)});
  std::vector<uint32_t> neighbor_mask(n, 0);
  for (uint32_t i = 0; i < n; ++i)
    for (uint32_t j : cfg.topology.out_neighbors(i)) neighbor_mask[i] |= 1u << j;

  std::vector<std::deque<uint64_t>> queue(n);
  std::vector<PacketMeta> pkts;
  std::vector<SupportLedger> ledger(ledger_mode ? r : 0);
  std::vector<std::vector<uint64_t>> vq(code_ack ? r : 0, std::vector<uint64_t>(n, 0));
  std::vector<std::vector<std::deque<uint64_t>>> seen_unacked(
      code_ack ? r : 0, std::vector<std::deque<uint64_t>>(n));

  // Symbol mode state.
  const gf::Field field(cfg.field);
  std::vector<std::vector<uint16_t>> payloads;
  std::vector<codec::ReceiverState> states;
  if (cfg.record_symbols)
    for (uint32_t j = 0; j < r; ++j) states.emplace_back(field, cfg.payload_len);

  StreamingStats st;
  st.horizon = cfg.horizon;
  st.arrivals.assign(n, 0);
  st.drops.assign(n, 0);
  st.acks.assign(r, 0);
  st.innovations.assign(r, 0);
  st.seen_count.assign(r, 0);
  st.arrived_for.assign(r, 0);
  std::vector<uint64_t> qlen_sum(n, 0);
  double cum_total = 0.0;
  const uint64_t cp_every = std::max<uint64_t>(1, cfg.horizon / 256);
  const uint64_t snap_every =
      cfg.snapshot_every ? cfg.snapshot_every : std::max<uint64_t>(1, cfg.horizon / 1000);
  uint64_t total_arrivals = 0;

  std::vector<uint8_t> transmitting(n, 0);
  std::vector<uint8_t> link_up(n, 0);
  std::vector<uint64_t> qlen_snapshot(n, 0);
  std::vector<uint32_t> colliders;
  std::vector<uint64_t> acked_pkts;

  const uint64_t trial = cfg.trial;

  for (uint64_t slot = 1; slot <= cfg.horizon; ++slot) {
    // Start-of-slot metrics and the empty-epoch audit.
    uint64_t total_q = 0;
    for (uint32_t i = 0; i < n; ++i) {
      qlen_snapshot[i] = queue[i].size();
      qlen_sum[i] += queue[i].size();
      total_q += queue[i].size();
    }
    cum_total += double(total_q);
    if (slot % cp_every == 0) st.avg_checkpoints.emplace_back(slot, cum_total / double(slot));
    if (slot % snap_every == 0)
      for (uint32_t i = 0; i < n; ++i) st.snapshots.emplace_back(slot, i, queue[i].size());

    if (total_q == 0 && total_arrivals > 0) {
      ++st.empty_epochs;
      bool auditable = true, ok = true;
      if (ledger_mode) {
        for (uint32_t j = 0; j < r; ++j) ok = ok && st.seen_count[j] == st.arrived_for[j];
      } else if (r == 1) {
        ok = st.acks[0] == total_arrivals;
      } else {
        auditable = false;
      }
      if (auditable) {
        ++st.audit_checked;
        if (!ok) ++st.audit_failures;
      }
      if (cfg.record_symbols) {
        ++st.symbol_audit_checked;
        for (uint32_t j = 0; j < r; ++j) {
          const auto res = codec::zigzag_decode(states[j]);
          for (uint64_t id = 0; id < pkts.size(); ++id) {
            if (!cfg.topology.has_edge(pkts[id].origin, j)) continue;
            const auto it = res.decoded.find(id);
            if (it == res.decoded.end() || it->second != payloads[id]) {
              ++st.symbol_audit_failures;
              break;
            }
          }
        }
      }
    }

    // 1. Channel sample.
    // 2. Transmit decisions.
    std::fill(transmitting.begin(), transmitting.end(), 0);
    if (cfg.tx.kind == TxKind::centralized) {
      uint32_t best = n;
      for (uint32_t i = 0; i < n; ++i)
        if (!queue[i].empty() && (best == n || queue[i].size() > queue[best].size())) best = i;
      if (best < n) transmitting[best] = 1;
    } else {
      for (uint32_t i = 0; i < n; ++i)
        transmitting[i] = policies::transmit_decision(cfg.tx, i, queue[i].size(), false, cfg.seed,
                                                      trial, slot);
    }

    const std::vector<uint32_t> &order =
        time_sharing
            ? (share.advance_to(slot / cfg.frame_length), share.shares[share.current].perm)
            : fixed_order;

    // 3./4. Receptions and ACK decisions per receiver.
    acked_pkts.clear();
    for (uint32_t j = 0; j < r; ++j) {
      colliders.clear();
      std::fill(link_up.begin(), link_up.end(), 0);
      for (const Link &l : links[j]) {
        const bool up = rnd::u01(cfg.seed, rnd::Tag::channel, trial, slot, l.edge) >= l.p;
        link_up[l.sender] = up;
        if (up && transmitting[l.sender]) colliders.push_back(l.sender);
      }
      const bool lost = cfg.cap && colliders.size() > *cfg.cap;
      const bool useful = !colliders.empty() && !lost;

      bool innovative = false;
      if (useful && ledger_mode) {
        std::vector<uint64_t> support;
        for (uint32_t i : colliders) {
          if (coded)
            support.insert(support.end(), queue[i].begin(), queue[i].end());
          else
            support.push_back(queue[i].front());
        }
        std::sort(support.begin(), support.end());
        support.erase(std::unique(support.begin(), support.end()), support.end());
        if (const auto piv = ledger[j].add(support)) {
          innovative = true;
          ++st.innovations[j];
          ++st.seen_count[j];
          PacketMeta &meta = pkts[*piv];
          meta.seen_mask |= 1u << j;
          if (code_ack) {
            --vq[j][meta.origin];
            seen_unacked[j][meta.origin].push_back(*piv);
          }
        }
      }

      if (cfg.record_symbols && useful) {
        std::vector<codec::CollisionPart> parts;
        for (size_t k = 0; k < colliders.size(); ++k) {
          const uint32_t i = colliders[k];
          codec::CollisionPart part;
          if (coded) {
            std::vector<codec::Packet> view;
            view.reserve(queue[i].size());
            for (uint64_t id : queue[i]) view.push_back({id, i, payloads[id]});
            rnd::Rng crng(rnd::mix(cfg.seed, rnd::Tag::coeff, trial, slot, i));
            part.tx = codec::encode_random(field, view, crng);
          } else {
            part.tx = codec::encode_head_of_line({queue[i].front(), i, payloads[queue[i].front()]});
          }
          const uint64_t ho =
              rnd::mix(cfg.seed, rnd::Tag::offset, trial, slot, (uint64_t(j) << 32) | k);
          part.offset = offset_max == 0 ? 0 : uint32_t(rnd::below(offset_max + 1, ho));
          if (cfg.random_gains) {
            const uint64_t hg =
                rnd::mix(cfg.seed, rnd::Tag::gain, trial, slot, (uint64_t(j) << 32) | k);
            part.gain = uint16_t(1 + rnd::below(field.order() - 1, hg));
          }
          parts.push_back(std::move(part));
        }
        states[j].add_record(codec::superpose(field, slot, std::move(parts)));
      }

      policies::Reception rec;
      rec.outcome = useful ? policies::Reception::Outcome::useful
                           : (lost ? policies::Reception::Outcome::lost_excess_contention
                                   : policies::Reception::Outcome::idle);
      rec.colliders = colliders;
      if (lost) rec.excess_count = uint32_t(colliders.size());

      policies::AckContext ctx;
      ctx.queue_len = qlen_snapshot;
      if (code_ack) ctx.virtual_queue_len = vq[j];
      ctx.link_up = link_up;
      ctx.priority_order = order;
      ctx.seed = cfg.seed;
      ctx.trial = trial;
      ctx.slot = slot;
      ctx.receiver = j;

      uint64_t acked_pkt = UINT64_MAX;
      if (code_ack) {
        // One ACK per degree of freedom: the ACK fires exactly on
        // innovative receptions, so the ACK budget equals the seen count
        // and the per-sender pools of seen-but-unACKed packets stay
        // bounded. The acknowledged packet is the oldest pending one of
        // the sender f_j picked; if that sender has nothing pending yet,
        // fall back across the inner priority order (the new pivot's
        // sender always has a pending packet).
        if (innovative) {
          const std::optional<uint32_t> target = ack_decide(cfg.ack, rec, ctx);
          uint32_t chosen = UINT32_MAX;
          if (target && !seen_unacked[j][*target].empty()) chosen = *target;
          if (chosen == UINT32_MAX)
            for (uint32_t i : order)
              if (!seen_unacked[j][i].empty()) {
                chosen = i;
                break;
              }
          if (chosen != UINT32_MAX) {
            acked_pkt = seen_unacked[j][chosen].front();
            seen_unacked[j][chosen].pop_front();
          }
        }
      } else {
        const std::optional<uint32_t> target = ack_decide(cfg.ack, rec, ctx);
        if (target && !queue[*target].empty()) acked_pkt = queue[*target].front();
      }
      if (acked_pkt != UINT64_MAX) {
        ++st.acks[j];
        pkts[acked_pkt].acked_mask |= 1u << j;
        acked_pkts.push_back(acked_pkt);
        if (ledger_mode && !innovative) ++st.ack_without_innovation;
      }
    }

    // 5. Drops: a packet leaves once every neighbor has ACKed it.
    std::sort(acked_pkts.begin(), acked_pkts.end());
    acked_pkts.erase(std::unique(acked_pkts.begin(), acked_pkts.end()), acked_pkts.end());
    for (uint64_t id : acked_pkts) {
      const PacketMeta &meta = pkts[id];
      if (!policies::drop_rule(meta.acked_mask, neighbor_mask[meta.origin])) continue;
      auto &q = queue[meta.origin];
      const auto it = std::find(q.begin(), q.end(), id);
      if (it != q.end()) {
        q.erase(it);
        ++st.drops[meta.origin];
        if (ledger_mode)
          for (auto &led : ledger) led.retire(id);
      }
    }

    // 6. Arrivals at the end of the slot.
    for (uint32_t i = 0; i < n; ++i) {
      uint32_t count = 0;
      if (cfg.arrivals.kind == ArrivalConfig::Kind::bernoulli) {
        count = rnd::bernoulli(cfg.arrivals.rates[i], cfg.seed, rnd::Tag::arrival, trial, slot, i)
                    ? 1
                    : 0;
      } else {
        const double pb = cfg.arrivals.rates[i] / double(cfg.arrivals.a_max);
        for (uint32_t b = 0; b < cfg.arrivals.a_max; ++b)
          count += rnd::bernoulli(pb, cfg.seed, rnd::Tag::arrival, trial, slot,
                                  (uint64_t(i) << 8) | b)
                       ? 1
                       : 0;
      }
      for (uint32_t a = 0; a < count; ++a) {
        const uint64_t id = pkts.size();
        pkts.push_back({i, 0, 0});
        queue[i].push_back(id);
        ++st.arrivals[i];
        ++total_arrivals;
        for (uint32_t j : cfg.topology.out_neighbors(i)) {
          ++st.arrived_for[j];
          if (code_ack) ++vq[j][i];
        }
        if (cfg.record_symbols) {
          std::vector<uint16_t> pl(cfg.payload_len);
          for (uint32_t s = 0; s < cfg.payload_len; ++s) {
            const uint64_t h = rnd::mix(cfg.seed, rnd::Tag::payload, trial, id, s);
            pl[s] = uint16_t(rnd::below(field.order(), h));
          }
          payloads.push_back(std::move(pl));
        }
      }
    }
  }

  st.final_queue.assign(n, 0);
  st.time_avg_queue.assign(n, 0.0);
  for (uint32_t i = 0; i < n; ++i) {
    st.final_queue[i] = queue[i].size();
    st.time_avg_queue[i] = double(qlen_sum[i]) / double(cfg.horizon);
  }

  const size_t half = st.avg_checkpoints.size() / 2;
  st.slope = fit_slope(std::span(st.avg_checkpoints).subspan(half));
  st.verdict = st.slope < 1e-3 ? Verdict::stable
                               : (st.slope > 1e-2 ? Verdict::unstable : Verdict::inconclusive);
  return st;
}

ProbeResult stability_probe(const ProbeConfig &cfg) {
  require(!cfg.ray.empty(), ErrorCode::InvalidArgument, "probe needs a ray");
  require(cfg.ray.size() == cfg.base.topology.n_senders(), ErrorCode::InvalidArgument,
          "ray dimension must match sender count");
  double sum = 0.0;
  for (double v : cfg.ray) {
    require(v >= 0.0, ErrorCode::InvalidArgument, "ray must lie in the positive orthant");
    sum += v;
  }
  require(sum > 0.0, ErrorCode::InvalidArgument, "ray must be nonzero");
  std::vector<double> dir(cfg.ray.size());
  for (size_t i = 0; i < dir.size(); ++i) dir[i] = cfg.ray[i] / sum;

  ProbeResult result;
  result.resolution = cfg.resolution;
  uint64_t step = 0;

  auto classify = [&](double scale) {
    StreamingConfig c = cfg.base;
    c.arrivals.rates.assign(dir.size(), 0.0);
    for (size_t i = 0; i < dir.size(); ++i) c.arrivals.rates[i] = scale * dir[i];
    c.trial = 1 + step++;
    StreamingStats s = run_streaming(c);
    if (s.verdict == Verdict::inconclusive && c.horizon * 4 <= cfg.max_horizon) {
      c.horizon *= 4;
      c.trial = 1 + step++;
      s = run_streaming(c);
    }
    result.evaluations.emplace_back(scale, s.verdict);
    return s.verdict;
  };

  // Rates are per-sender Bernoulli, so the largest probeable total rate is
  // 1/max(dir); rate sums >= 1 are unstable for any lossy channel anyway.
  double maxcomp = 0.0;
  for (double v : dir) maxcomp = std::max(maxcomp, v);
  const double hi_cap = std::min(2.0, 1.0 / maxcomp);
  double lo = 0.0, hi = std::min(1.0, hi_cap);
  while (classify(hi) == Verdict::stable && hi < hi_cap) hi = std::min(hi_cap, hi * 1.25);
  while (hi - lo > cfg.resolution) {
    const double mid = 0.5 * (lo + hi);
    (classify(mid) == Verdict::stable ? lo : hi) = mid;
  }
  result.boundary_scale = 0.5 * (lo + hi);
  return result;
}

}  // namespace zigzag::sim
