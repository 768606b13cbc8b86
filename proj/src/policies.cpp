#include "zigzag/policies.hpp"

#include <algorithm>

namespace zigzag::policies {

namespace {
void validate_permutation(std::span<const uint32_t> order, uint32_t n, const char *what) {
  require(order.size() == n, ErrorCode::InvalidArgument, std::string(what) + ": wrong length");
  std::vector<uint8_t> hit(n, 0);
  for (uint32_t v : order) {
    require(v < n && !hit[v], ErrorCode::InvalidArgument,
            std::string(what) + ": not a permutation");
    hit[v] = 1;
  }
}
}  // namespace

void TransmissionPolicy::validate(uint32_t n_senders) const {
  if (kind == TxKind::random_access)
    require(q > 0.0 && q <= 1.0, ErrorCode::InvalidProbability,
            "access probability must be in (0, 1]");
  if (kind == TxKind::centralized && !order.empty())
    validate_permutation(order, n_senders, "centralized order");
}

void AckPolicy::validate(uint32_t n_senders) const {
  if ((kind == AckKind::priority || kind == AckKind::code_ack) && !auto_order && !order.empty())
    validate_permutation(order, n_senders, "priority order");
  if (kind == AckKind::code_ack)
    require(inner == AckKind::priority || inner == AckKind::longest_queue,
            ErrorCode::InvalidArgument, "code_ack inner policy must be priority or longest_queue");
}

bool transmit_decision(const TransmissionPolicy &policy, uint32_t sender, uint64_t queue_len,
                       bool holds_token, uint64_t seed, uint64_t trial, uint64_t slot) {
  if (queue_len == 0) return false;
  switch (policy.kind) {
    case TxKind::always_on: return true;
    case TxKind::centralized: return holds_token;
    case TxKind::random_access:
      return rnd::u01(seed, rnd::Tag::transmit, trial, slot, sender) < policy.q;
  }
  return false;
}

Reception reception_outcome(const net::Topology &topo, std::span<const uint8_t> transmitting,
                            const net::ChannelSample &channel, uint32_t receiver,
                            std::optional<uint32_t> cap) {
  Reception r;
  for (uint32_t i : topo.in_neighbors(receiver))
    if (transmitting[i] && channel.connected(topo.edge_index(i, receiver)))
      r.colliders.push_back(i);
  if (r.colliders.empty()) {
    r.outcome = Reception::Outcome::idle;
  } else if (cap && r.colliders.size() > *cap) {
    r.outcome = Reception::Outcome::lost_excess_contention;
    r.excess_count = uint32_t(r.colliders.size());
  } else {
    r.outcome = Reception::Outcome::useful;
  }
  return r;
}

std::optional<uint32_t> ack_decide(const AckPolicy &policy, const Reception &reception,
                                   const AckContext &ctx) {
  if (!reception.useful()) return std::nullopt;
  const auto &cols = reception.colliders;

  switch (policy.kind) {
    case AckKind::arbitrary_collider: {
      if (policy.tie == TieRule::seeded_random) {
        const uint64_t h = rnd::mix(ctx.seed, rnd::Tag::ack_tie, ctx.trial, ctx.slot, ctx.receiver);
        return cols[rnd::below(cols.size(), h)];
      }
      return cols.front();
    }
    case AckKind::unacked_collider: {
      std::vector<uint32_t> fresh;
      for (uint32_t i : cols)
        if (!ctx.acked_before[i]) fresh.push_back(i);
      if (fresh.empty()) return std::nullopt;
      if (policy.tie == TieRule::seeded_random) {
        const uint64_t h = rnd::mix(ctx.seed, rnd::Tag::ack_tie, ctx.trial, ctx.slot, ctx.receiver);
        return fresh[rnd::below(fresh.size(), h)];
      }
      return fresh.front();
    }
    case AckKind::priority: {
      // Highest-priority sender with a nonempty queue and an unerased link;
      // such a sender's packet is in the collision by construction.
      for (uint32_t i : ctx.priority_order)
        if (std::binary_search(cols.begin(), cols.end(), i)) return i;
      return std::nullopt;
    }
    case AckKind::longest_queue: {
      uint32_t best = cols.front();
      for (uint32_t i : cols)
        if (ctx.queue_len[i] > ctx.queue_len[best]) best = i;
      return best;
    }
    case AckKind::code_ack: {
      // Delegate to the single-receiver policy over (C^(j), Q^(j)) with the
      // virtual (unseen-backlog) queues.
      if (policy.inner == AckKind::priority) {
        for (uint32_t i : ctx.priority_order)
          if (ctx.link_up[i] && ctx.virtual_queue_len[i] > 0) return i;
        return std::nullopt;
      }
      std::optional<uint32_t> best;
      for (uint32_t i = 0; i < ctx.virtual_queue_len.size(); ++i) {
        if (!ctx.link_up[i] || ctx.virtual_queue_len[i] == 0) continue;
        if (!best || ctx.virtual_queue_len[i] > ctx.virtual_queue_len[*best]) best = i;
      }
      return best;
    }
  }
  return std::nullopt;
}

bool drop_rule(uint32_t acked_mask, uint32_t neighbor_mask) {
  return (acked_mask & neighbor_mask) == neighbor_mask;
}

}  // namespace zigzag::policies
