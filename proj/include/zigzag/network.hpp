#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "zigzag/error.hpp"
#include "zigzag/rng.hpp"

namespace zigzag::net {

// Bipartite single-hop topology. Senders and receivers are separate index
// spaces; a node is never both.
class Topology {
 public:
  Topology(uint32_t n_senders, uint32_t n_receivers,
           std::vector<std::pair<uint32_t, uint32_t>> edges);

  static Topology complete(uint32_t n_senders, uint32_t n_receivers);
  static Topology single_receiver(uint32_t n_senders) { return complete(n_senders, 1); }

  uint32_t n_senders() const { return n_; }
  uint32_t n_receivers() const { return r_; }
  const std::vector<std::pair<uint32_t, uint32_t>> &edges() const { return edges_; }

  std::span<const uint32_t> out_neighbors(uint32_t sender) const;   // Gamma_O(i)
  std::span<const uint32_t> in_neighbors(uint32_t receiver) const;  // Gamma_I(j)
  bool has_edge(uint32_t sender, uint32_t receiver) const;
  size_t edge_index(uint32_t sender, uint32_t receiver) const;

 private:
  uint32_t n_, r_;
  std::vector<std::pair<uint32_t, uint32_t>> edges_;  // sorted, unique
  std::vector<std::vector<uint32_t>> out_, in_;
};

// Per-link erasure probabilities: one shared p by default, with optional
// per-link overrides for heterogeneous channels.
struct ErasureSpec {
  double default_p = 0.0;
  std::map<std::pair<uint32_t, uint32_t>, double> overrides;

  double p(uint32_t sender, uint32_t receiver) const {
    const auto it = overrides.find({sender, receiver});
    return it == overrides.end() ? default_p : it->second;
  }
  void validate() const;
  bool homogeneous() const { return overrides.empty(); }
};

struct ChannelSample {
  uint64_t slot = 0;
  std::vector<uint8_t> up;  // indexed by Topology::edge_index

  bool connected(size_t edge_idx) const { return up[edge_idx] != 0; }
};

// Bernoulli link states, independent across links and slots. Randomness is
// counter-based over (seed, trial, slot, edge) so trials parallelize with
// no shared generator.
ChannelSample sample_channel(const Topology &topo, const ErasureSpec &erasure, uint64_t seed,
                             uint64_t trial, uint64_t slot);

struct NodeRef {
  enum class Kind { sender, receiver };
  Kind kind;
  uint32_t index;
};

// Gamma_O for senders, Gamma_I for receivers; NotFound for unknown nodes.
std::vector<uint32_t> neighbors(const Topology &topo, NodeRef node);

}  // namespace zigzag::net
