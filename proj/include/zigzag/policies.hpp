#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "zigzag/network.hpp"
#include "zigzag/rng.hpp"

namespace zigzag::policies {

enum class TxKind { always_on, random_access, centralized };
enum class CodingMode { uncoded_head_of_line, random_linear };

struct TransmissionPolicy {
  TxKind kind = TxKind::always_on;
  double q = 1.0;                // random_access only
  std::vector<uint32_t> order;   // centralized only; permutation of senders
  CodingMode coding = CodingMode::uncoded_head_of_line;

  void validate(uint32_t n_senders) const;
};

enum class AckKind { arbitrary_collider, unacked_collider, priority, longest_queue, code_ack };
enum class TieRule { lowest_index, seeded_random };

struct AckPolicy {
  AckKind kind = AckKind::arbitrary_collider;
  std::vector<uint32_t> order;  // priority / code_ack inner priority; empty = derive
  bool auto_order = false;      // derive time-sharing permutations from arrival rates
  AckKind inner = AckKind::priority;  // code_ack: per-receiver single-receiver policy
  TieRule tie = TieRule::lowest_index;

  void validate(uint32_t n_senders) const;
};

// Outcome of one slot at one receiver.
struct Reception {
  enum class Outcome { idle, useful, lost_excess_contention };
  Outcome outcome = Outcome::idle;
  std::vector<uint32_t> colliders;  // senders whose packet arrived, ascending
  uint32_t excess_count = 0;        // set when lost

  bool useful() const { return outcome == Outcome::useful; }
};

// Per-slot transmit decision. `queue_len` and `holds_token` describe the
// sender's state; payload composition is the caller's job.
bool transmit_decision(const TransmissionPolicy &policy, uint32_t sender, uint64_t queue_len,
                       bool holds_token, uint64_t seed, uint64_t trial, uint64_t slot);

// Applies the erasure filter and the contention cap C: the surviving set is
// the transmitting in-neighbors whose link is up; more than `cap` survivors
// is a total loss.
Reception reception_outcome(const net::Topology &topo, std::span<const uint8_t> transmitting,
                            const net::ChannelSample &channel, uint32_t receiver,
                            std::optional<uint32_t> cap);

// State the ACK policies read. Spans are indexed by sender; entries for
// senders outside the receiver's neighborhood are ignored.
struct AckContext {
  std::span<const uint64_t> queue_len;          // real queue lengths Q_i
  std::span<const uint64_t> virtual_queue_len;  // unseen backlog Q_ij for this receiver
  std::span<const uint8_t> link_up;             // channel state c_ij for this receiver
  std::span<const uint8_t> acked_before;        // senders this receiver already ACKed (delivery)
  std::span<const uint32_t> priority_order;     // effective permutation for this slot
  uint64_t seed = 0, trial = 0, slot = 0;
  uint32_t receiver = 0;
};

// Picks at most one sender to acknowledge. Deterministic given the context
// except for the seeded-random tie rule, which is a pure function of
// (seed, trial, slot, receiver).
std::optional<uint32_t> ack_decide(const AckPolicy &policy, const Reception &reception,
                                   const AckContext &ctx);

// A packet leaves its sender's queue iff every neighbor receiver has ACKed
// it. `acked_mask` holds receiver bits; `neighbor_mask` is the sender's
// out-neighborhood.
bool drop_rule(uint32_t acked_mask, uint32_t neighbor_mask);

}  // namespace zigzag::policies
