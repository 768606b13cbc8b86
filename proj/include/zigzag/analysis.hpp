#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "zigzag/network.hpp"

namespace zigzag::analysis {

// A delivery-time expectation: either a finite slot count or an explicit
// divergence marker (never a floating overflow).
struct Et {
  bool diverges = false;
  double value = 0.0;

  static Et finite(double v) { return {false, v}; }
  static Et divergent() { return {true, std::numeric_limits<double>::infinity()}; }
};

// n-packet delivery, one receiver, reserved-channel scheduling: n/(1-p).
Et et_centralized(uint32_t n, double p);

// Slotted random access with access probability q: exactly one survivor per
// useful slot. Sum over k of 1/(k q_e (1-q_e)^(k-1)) with q_e = q(1-p).
Et et_random_access(uint32_t n, double p, double q);

// Unlimited collision recovery, every unacked sender transmitting:
// sum over k of 1/(1-p^k).
Et et_zigzag(uint32_t n, double p);

// The proof's O(1) bound on et_zigzag(n, p) - n.
double et_zigzag_gap_bound(double p);

// Collision recovery capped at C colliding packets, combined with random
// access: stage success p_k = sum_{m=1..min(C,k)} C(k,m) q_e^m (1-q_e)^(k-m).
// No cap means unlimited recovery.
Et et_zigzag_ra(uint32_t n, double p, double q, std::optional<uint32_t> cap);

// argmin_q of et_zigzag_ra by grid search (step 1e-3) plus local
// refinement; 1 when the cap never binds.
double optimal_q(uint32_t n, double p, std::optional<uint32_t> cap);

enum class RegionKind { centralized_simplex, mac_polymatroid, cutset_intersection };

struct RegionSpec {
  RegionKind kind = RegionKind::mac_polymatroid;
  double p = 0.0;
  // cutset_intersection only:
  std::optional<net::Topology> topology;
  // heterogeneous channels; forces subset enumeration (n <= 20):
  std::optional<net::ErasureSpec> per_link;

  static RegionSpec simplex(double p) { return {RegionKind::centralized_simplex, p, {}, {}}; }
  static RegionSpec mac(double p) { return {RegionKind::mac_polymatroid, p, {}, {}}; }
  static RegionSpec cutset(double p, net::Topology topo) {
    return {RegionKind::cutset_intersection, p, std::move(topo), {}};
  }
};

// Membership test. Strict inequalities by default (achievable interior);
// `inclusive` switches to the closure used by the necessity bound.
bool region_contains(const RegionSpec &region, std::span<const double> rates,
                     bool inclusive = false);

// Vertex of the dominant face for a priority permutation: the i-th sender
// in the order gets (1-p) p^(i-1).
std::vector<double> vertex_rates(std::span<const uint32_t> perm, double p);

struct VertexWeight {
  std::vector<uint32_t> perm;
  double weight = 0.0;
};

// Convex weights over priority permutations whose vertex combination
// dominates `rates` componentwise with total weight <= 1. Greedy peel:
// order remaining demand descending, take the largest weight that keeps the
// residual coverable. NotAchievable outside the polymatroid.
std::vector<VertexWeight> decompose_rates(std::span<const double> rates, double p);

}  // namespace zigzag::analysis
