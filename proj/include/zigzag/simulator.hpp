#pragma once

#include <cstdint>
#include <tuple>
#include <vector>

#include "zigzag/analysis.hpp"
#include "zigzag/codec.hpp"
#include "zigzag/network.hpp"
#include "zigzag/policies.hpp"

namespace zigzag::sim {

struct DeliveryConfig {
  net::Topology topology = net::Topology::single_receiver(1);
  net::ErasureSpec erasure;
  policies::TransmissionPolicy tx;
  policies::AckPolicy ack;  // arbitrary_collider or unacked_collider
  std::optional<uint32_t> cap;
  uint64_t seed = 1;
  uint64_t trials = 100000;
  uint64_t max_slots = 1000000;
  uint32_t payload_len = 8;
  std::optional<uint32_t> offset_max;  // default payload_len / 4
  bool random_gains = false;
  gf::FieldSpec field = gf::FieldSpec::gf256();
  uint64_t validate_trials = 8;  // leading trials re-run at symbol level
  uint32_t threads = 0;          // 0 = ZZSIM_THREADS or hardware
};

struct MeanCi {
  double mean = 0.0;
  double ci95 = 0.0;
  uint64_t samples = 0;
};

struct DeliveryStats {
  uint64_t trials = 0;
  std::vector<MeanCi> per_receiver;  // T_D^(j)
  MeanCi overall;                    // per-trial max over receivers
  std::vector<double> xk_mean;       // single receiver: mean inter-ACK gaps
  uint64_t validated = 0;
};

// Every sender starts with one packet; runs until every receiver can decode
// all of its neighbors' packets. Trials are independent and are spread
// across threads; results are bit-identical for a given (config, seed)
// regardless of the thread count.
DeliveryStats run_delivery(const DeliveryConfig &cfg);

struct ArrivalConfig {
  enum class Kind { bernoulli, batch_bounded };
  Kind kind = Kind::bernoulli;
  std::vector<double> rates;
  uint32_t a_max = 1;  // batch bound

  void validate(uint32_t n_senders) const;
};

enum class Verdict { stable, unstable, inconclusive };

struct StreamingConfig {
  net::Topology topology = net::Topology::single_receiver(1);
  net::ErasureSpec erasure;
  policies::TransmissionPolicy tx;
  policies::AckPolicy ack;
  std::optional<uint32_t> cap;
  ArrivalConfig arrivals;
  uint64_t horizon = 1000000;
  uint64_t seed = 1;
  uint64_t trial = 0;  // stream id; probe steps use distinct values
  uint32_t frame_length = 1000;
  uint64_t snapshot_every = 0;  // 0 = horizon / 1000
  uint32_t payload_len = 8;
  std::optional<uint32_t> offset_max;
  bool random_gains = false;
  gf::FieldSpec field = gf::FieldSpec::gf256();
  bool track_ledger = false;    // force the degree-of-freedom ledger on
  bool record_symbols = false;  // full symbol-level codec; small horizons only
};

struct StreamingStats {
  uint64_t horizon = 0;
  std::vector<double> time_avg_queue;  // per sender
  double slope = 0.0;                  // packets/slot, fitted on the second half
  Verdict verdict = Verdict::inconclusive;
  std::vector<uint64_t> arrivals, drops, final_queue;  // per sender
  std::vector<uint64_t> acks;                          // per receiver
  std::vector<uint64_t> innovations;                   // per receiver (ledger rank)
  std::vector<uint64_t> seen_count;                    // per receiver
  std::vector<uint64_t> arrived_for;                   // arrivals at each receiver's neighbors
  uint64_t ack_without_innovation = 0;
  uint64_t empty_epochs = 0;
  uint64_t audit_checked = 0;
  uint64_t audit_failures = 0;
  // record_symbols mode: symbol-level decode audit at empty epochs
  uint64_t symbol_audit_checked = 0;
  uint64_t symbol_audit_failures = 0;
  std::vector<std::tuple<uint64_t, uint32_t, uint64_t>> snapshots;  // (t, sender, queue_len)
  std::vector<std::pair<uint64_t, double>> avg_checkpoints;         // (t, running avg total queue)
};

// Streaming arrivals with per-slot order: channel sample, transmit
// decisions, receptions, ACK decisions, drops, arrivals.
StreamingStats run_streaming(const StreamingConfig &cfg);

struct ProbeConfig {
  StreamingConfig base;     // arrival rates are ignored; the ray drives them
  std::vector<double> ray;  // direction in the positive orthant
  double resolution = 0.02;
  uint64_t max_horizon = 10000000;
};

struct ProbeResult {
  double boundary_scale = 0.0;  // total arrival rate at the boundary
  double resolution = 0.02;
  std::vector<std::pair<double, Verdict>> evaluations;
};

// Bisects the boundary of the stability region along a ray. The ray is
// normalized to unit rate sum, so the returned scale is the total arrival
// rate at the boundary.
ProbeResult stability_probe(const ProbeConfig &cfg);

uint32_t resolve_threads(uint32_t requested);

}  // namespace zigzag::sim
