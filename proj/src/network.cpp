#include "zigzag/network.hpp"

#include <algorithm>

namespace zigzag::net {

Topology::Topology(uint32_t n_senders, uint32_t n_receivers,
                   std::vector<std::pair<uint32_t, uint32_t>> edges)
    : n_(n_senders), r_(n_receivers), edges_(std::move(edges)) {
  require(n_ > 0 && r_ > 0, ErrorCode::InvalidArgument, "topology needs senders and receivers");
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
  out_.assign(n_, {});
  in_.assign(r_, {});
  for (const auto &[i, j] : edges_) {
    require(i < n_ && j < r_, ErrorCode::InvalidArgument, "edge references unknown node");
    out_[i].push_back(j);
    in_[j].push_back(i);
  }
  for (uint32_t j = 0; j < r_; ++j)
    require(!in_[j].empty(), ErrorCode::InvalidArgument, "receiver with no incoming links");
}

Topology Topology::complete(uint32_t n_senders, uint32_t n_receivers) {
  std::vector<std::pair<uint32_t, uint32_t>> edges;
  edges.reserve(size_t(n_senders) * n_receivers);
  for (uint32_t i = 0; i < n_senders; ++i)
    for (uint32_t j = 0; j < n_receivers; ++j) edges.emplace_back(i, j);
  return Topology(n_senders, n_receivers, std::move(edges));
}

std::span<const uint32_t> Topology::out_neighbors(uint32_t sender) const {
  require(sender < n_, ErrorCode::NotFound, "unknown sender");
  return out_[sender];
}

std::span<const uint32_t> Topology::in_neighbors(uint32_t receiver) const {
  require(receiver < r_, ErrorCode::NotFound, "unknown receiver");
  return in_[receiver];
}

bool Topology::has_edge(uint32_t sender, uint32_t receiver) const {
  return std::binary_search(edges_.begin(), edges_.end(), std::make_pair(sender, receiver));
}

size_t Topology::edge_index(uint32_t sender, uint32_t receiver) const {
  const auto it =
      std::lower_bound(edges_.begin(), edges_.end(), std::make_pair(sender, receiver));
  require(it != edges_.end() && *it == std::make_pair(sender, receiver), ErrorCode::NotFound,
          "no such edge");
  return size_t(it - edges_.begin());
}

void ErasureSpec::validate() const {
  require(default_p >= 0.0 && default_p <= 1.0, ErrorCode::InvalidProbability,
          "erasure probability must be in [0, 1]");
  for (const auto &[edge, v] : overrides) {
    (void)edge;
    require(v >= 0.0 && v <= 1.0, ErrorCode::InvalidProbability,
            "erasure probability must be in [0, 1]");
  }
}

ChannelSample sample_channel(const Topology &topo, const ErasureSpec &erasure, uint64_t seed,
                             uint64_t trial, uint64_t slot) {
  erasure.validate();
  ChannelSample s;
  s.slot = slot;
  s.up.resize(topo.edges().size());
  for (size_t e = 0; e < topo.edges().size(); ++e) {
    const auto &[i, j] = topo.edges()[e];
    const double p = erasure.p(i, j);
    s.up[e] = rnd::u01(seed, rnd::Tag::channel, trial, slot, e) >= p ? 1 : 0;
  }
  return s;
}

std::vector<uint32_t> neighbors(const Topology &topo, NodeRef node) {
  if (node.kind == NodeRef::Kind::sender) {
    const auto span = topo.out_neighbors(node.index);
    return {span.begin(), span.end()};
  }
  const auto span = topo.in_neighbors(node.index);
  return {span.begin(), span.end()};
}

}  // namespace zigzag::net
