#include "zigzag/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace zigzag::analysis {

namespace {
constexpr double kTiny = 1e-300;

void check_np(uint32_t n, double p) {
  require(n >= 1, ErrorCode::InvalidArgument, "need at least one sender");
  require(p >= 0.0 && p <= 1.0, ErrorCode::InvalidProbability, "p must be in [0, 1]");
}
}  // namespace

Et et_centralized(uint32_t n, double p) {
  check_np(n, p);
  if (p >= 1.0) return Et::divergent();
  return Et::finite(double(n) / (1.0 - p));
}

Et et_random_access(uint32_t n, double p, double q) {
  check_np(n, p);
  require(q > 0.0 && q <= 1.0, ErrorCode::InvalidProbability, "q must be in (0, 1]");
  const double qe = q * (1.0 - p);
  if (qe <= 0.0) return Et::divergent();
  double total = 0.0;
  for (uint32_t k = 1; k <= n; ++k) {
    const double pk = double(k) * qe * std::pow(1.0 - qe, double(k - 1));
    if (pk <= kTiny) return Et::divergent();
    total += 1.0 / pk;
  }
  return Et::finite(total);
}

Et et_zigzag(uint32_t n, double p) {
  check_np(n, p);
  if (p >= 1.0) return Et::divergent();
  double total = 0.0;
  for (uint32_t k = 1; k <= n; ++k) total += 1.0 / (1.0 - std::pow(p, double(k)));
  return Et::finite(total);
}

double et_zigzag_gap_bound(double p) {
  require(p >= 0.0 && p < 1.0, ErrorCode::InvalidProbability, "p must be in [0, 1)");
  return p / ((1.0 - p) * (1.0 - p));
}

Et et_zigzag_ra(uint32_t n, double p, double q, std::optional<uint32_t> cap) {
  check_np(n, p);
  require(q > 0.0 && q <= 1.0, ErrorCode::InvalidProbability, "q must be in (0, 1]");
  if (cap) require(*cap >= 1, ErrorCode::InvalidArgument, "contention cap must be >= 1");
  const double qe = q * (1.0 - p);
  if (qe <= 0.0) return Et::divergent();
  double total = 0.0;
  for (uint32_t k = 1; k <= n; ++k) {
    const uint32_t m_hi = cap ? std::min(*cap, k) : k;
    double pk = 0.0;
    double binom = double(k);  // C(k, 1)
    double qm = qe;            // qe^m
    for (uint32_t m = 1; m <= m_hi; ++m) {
      pk += binom * qm * std::pow(1.0 - qe, double(k - m));
      binom *= double(k - m) / double(m + 1);
      qm *= qe;
    }
    if (pk <= kTiny) return Et::divergent();
    total += 1.0 / pk;
  }
  return Et::finite(total);
}

double optimal_q(uint32_t n, double p, std::optional<uint32_t> cap) {
  check_np(n, p);
  if (!cap || n <= *cap || n == 1) return 1.0;  // the cap never binds

  auto objective = [&](double q) {
    const Et e = et_zigzag_ra(n, p, q, cap);
    return e.diverges ? std::numeric_limits<double>::infinity() : e.value;
  };

  double best_q = 1.0, best = objective(1.0);
  for (int i = 1; i <= 1000; ++i) {
    const double q = double(i) * 1e-3;
    const double v = objective(q);
    if (v < best) {
      best = v;
      best_q = q;
    }
  }
  // Ternary refinement inside the bracketing grid cell.
  double lo = std::max(1e-6, best_q - 1e-3), hi = std::min(1.0, best_q + 1e-3);
  for (int it = 0; it < 80; ++it) {
    const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    if (objective(m1) <= objective(m2))
      hi = m2;
    else
      lo = m1;
  }
  const double refined = 0.5 * (lo + hi);
  return objective(refined) <= best ? refined : best_q;
}

namespace {

// Largest-subset-sum membership check for one receiver's polymatroid with a
// shared erasure probability: with one p the binding size-k subset is the k
// largest rates, so n sorted partial sums suffice.
bool mac_contains_sorted(std::span<const double> rates, double p, bool inclusive) {
  std::vector<double> sorted(rates.begin(), rates.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double partial = 0.0;
  for (size_t k = 1; k <= sorted.size(); ++k) {
    partial += sorted[k - 1];
    const double bound = 1.0 - std::pow(p, double(k));
    if (inclusive ? partial > bound + 1e-12 : partial >= bound - 1e-12) return false;
  }
  return true;
}

// Heterogeneous channels: full subset enumeration over
// sum_{i in S} rate_i < 1 - prod_{i in S} p_i.
bool mac_contains_enum(std::span<const double> rates, std::span<const double> ps,
                       bool inclusive) {
  const size_t n = rates.size();
  require(n <= 20, ErrorCode::InvalidArgument,
          "heterogeneous region test limited to 20 senders");
  for (uint32_t mask = 1; mask < (1u << n); ++mask) {
    double sum = 0.0, prod = 1.0;
    for (size_t i = 0; i < n; ++i)
      if (mask & (1u << i)) {
        sum += rates[i];
        prod *= ps[i];
      }
    const double bound = 1.0 - prod;
    if (inclusive ? sum > bound + 1e-12 : sum >= bound - 1e-12) return false;
  }
  return true;
}

}  // namespace

bool region_contains(const RegionSpec &region, std::span<const double> rates, bool inclusive) {
  require(region.p >= 0.0 && region.p < 1.0, ErrorCode::InvalidProbability, "p must be in [0, 1)");
  for (double r : rates)
    require(r >= 0.0, ErrorCode::InvalidRate, "arrival rates must be nonnegative");

  switch (region.kind) {
    case RegionKind::centralized_simplex: {
      const double sum = std::accumulate(rates.begin(), rates.end(), 0.0);
      const double bound = 1.0 - region.p;
      return inclusive ? sum <= bound + 1e-12 : sum < bound - 1e-12;
    }
    case RegionKind::mac_polymatroid: {
      if (region.per_link) {
        std::vector<double> ps(rates.size());
        for (size_t i = 0; i < rates.size(); ++i) ps[i] = region.per_link->p(uint32_t(i), 0);
        return mac_contains_enum(rates, ps, inclusive);
      }
      return mac_contains_sorted(rates, region.p, inclusive);
    }
    case RegionKind::cutset_intersection: {
      require(region.topology.has_value(), ErrorCode::InvalidArgument,
              "cutset region needs a topology");
      const net::Topology &topo = *region.topology;
      require(rates.size() == topo.n_senders(), ErrorCode::InvalidRate,
              "rate vector length must match sender count");
      for (uint32_t j = 0; j < topo.n_receivers(); ++j) {
        const auto in = topo.in_neighbors(j);
        std::vector<double> sub;
        sub.reserve(in.size());
        for (uint32_t i : in) sub.push_back(rates[i]);
        if (region.per_link) {
          std::vector<double> ps;
          ps.reserve(in.size());
          for (uint32_t i : in) ps.push_back(region.per_link->p(i, j));
          if (!mac_contains_enum(sub, ps, inclusive)) return false;
        } else if (!mac_contains_sorted(sub, region.p, inclusive)) {
          return false;
        }
      }
      return true;
    }
  }
  return false;
}

std::vector<double> vertex_rates(std::span<const uint32_t> perm, double p) {
  require(p >= 0.0 && p <= 1.0, ErrorCode::InvalidProbability, "p must be in [0, 1]");
  std::vector<uint8_t> hit(perm.size(), 0);
  for (uint32_t v : perm) {
    require(v < perm.size() && !hit[v], ErrorCode::InvalidArgument, "not a permutation");
    hit[v] = 1;
  }
  std::vector<double> rates(perm.size(), 0.0);
  double weight = 1.0 - p;
  for (uint32_t v : perm) {
    rates[v] = weight;
    weight *= p;
  }
  return rates;
}

std::vector<VertexWeight> decompose_rates(std::span<const double> rates, double p) {
  require(region_contains(RegionSpec::mac(p), rates, /*inclusive=*/true),
          ErrorCode::NotAchievable, "rates outside the stability region");
  const size_t n = rates.size();
  const double total_in = std::accumulate(rates.begin(), rates.end(), 0.0);
  if (total_in <= 1e-12) return {};

  auto f = [&](size_t k) { return 1.0 - std::pow(p, double(k)); };

  // Lift the demand onto the dominant face: raise one coordinate at a time
  // to its largest feasible value. Dominance lets the schedule over-serve,
  // and on the face the peel below never has to clip, which keeps every
  // step a clean polymatroid exchange.
  std::vector<double> y(rates.begin(), rates.end());
  for (size_t i = 0; i < n; ++i) {
    std::vector<double> others;
    for (size_t j = 0; j < n; ++j)
      if (j != i) others.push_back(y[j]);
    std::sort(others.begin(), others.end(), std::greater<>());
    double cap = f(1);
    double top = 0.0;
    for (size_t k = 2; k <= n; ++k) {
      top += others[k - 2];
      cap = std::min(cap, f(k) - top);
    }
    y[i] = std::max(y[i], cap);
  }

  // y is in the w-scaled base polytope iff its sorted prefix sums respect
  // w*f(k) with equality at k = n. The slack grows per round so a
  // constraint the previous bisection parked on its tolerance edge cannot
  // wedge the next step at zero.
  auto feasible = [&](std::span<const double> r, double w, double slack) {
    if (w < -1e-12) return false;
    std::vector<double> sorted(r.begin(), r.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double partial = 0.0;
    for (size_t k = 1; k <= sorted.size(); ++k) {
      if (sorted[k - 1] < -slack) return false;
      partial += sorted[k - 1];
      if (partial > w * f(k) + slack) return false;
    }
    return true;
  };

  std::map<std::vector<uint32_t>, double> merged;
  double budget = 1.0;
  for (size_t round = 0; round < 16 * n + 16; ++round) {
    const double slack = 1e-12 * std::pow(1.2, double(round + 1));
    const double total = std::accumulate(y.begin(), y.end(), 0.0);
    if (total <= 1e-9 || budget <= 1e-9) break;

    std::vector<uint32_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(),
                     [&](uint32_t a, uint32_t b) { return y[a] > y[b]; });
    const std::vector<double> v = vertex_rates(perm, p);

    auto residual_ok = [&](double w) {
      std::vector<double> r(y);
      for (size_t i = 0; i < n; ++i) r[i] -= w * v[i];
      return feasible(r, budget - w, slack);
    };
    double lo = 0.0, hi = budget;
    if (!residual_ok(hi)) {
      for (int it = 0; it < 70; ++it) {
        const double mid = 0.5 * (lo + hi);
        (residual_ok(mid) ? lo : hi) = mid;
      }
    } else {
      lo = hi;
    }
    if (lo <= 1e-12) break;

    for (size_t i = 0; i < n; ++i) y[i] = std::max(0.0, y[i] - lo * v[i]);
    budget -= lo;
    merged[perm] += lo;
  }

  for (double r : y)
    require(r <= 1e-6, ErrorCode::NotAchievable, "rate decomposition failed to cover demand");
  std::vector<VertexWeight> out;
  for (const auto &[perm, weight] : merged) out.push_back({perm, weight});
  return out;
}

}  // namespace zigzag::analysis
