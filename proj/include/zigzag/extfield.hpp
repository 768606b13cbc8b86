#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "zigzag/gf.hpp"
#include "zigzag/rng.hpp"

namespace zigzag::gf {

// Extension field F_{q^k} over a base field F_q, with k chosen as the
// smallest power reaching a requested order. Used to evaluate the delay
// variable of the collision transfer system at random points: the
// extension gives enough evaluation points that a nonzero determinant is
// detected with failure probability <= deg / (q^k - 1) per point even when
// the packet field itself is tiny.
class ExtField {
 public:
  static constexpr uint32_t kMaxDegree = 16;

  // Coefficient vector of length ext_degree(), low degree first.
  using Elem = std::array<uint16_t, kMaxDegree>;

  ExtField(const Field &base, uint64_t min_order);

  const Field &base() const { return *base_; }
  uint32_t ext_degree() const { return k_; }
  uint64_t order() const { return order_; }

  Elem zero() const { return Elem{}; }
  Elem one() const { return from_base(1); }
  Elem from_base(uint16_t v) const {
    Elem e{};
    e[0] = v;
    return e;
  }

  bool is_zero(const Elem &a) const;
  Elem add(const Elem &a, const Elem &b) const;
  Elem sub(const Elem &a, const Elem &b) const;
  Elem mul(const Elem &a, const Elem &b) const;
  Elem pow(Elem a, uint64_t e) const;
  Elem random_nonzero(rnd::Rng &rng) const;

 private:
  const Field *base_;
  uint32_t k_ = 1;
  uint64_t order_ = 0;
  std::vector<uint16_t> modulus_;  // monic, degree k_, coeffs 0..k_
};

// Rank tracking by fraction-free elimination; rows can be fed
// incrementally and the basis is kept in echelon form.
class ExtRankTracker {
 public:
  explicit ExtRankTracker(const ExtField &f) : f_(&f) {}

  // Returns true iff the row increased the rank.
  bool add_row(std::vector<ExtField::Elem> row);
  size_t rank() const { return rows_.size(); }

 private:
  const ExtField *f_;
  std::vector<std::pair<size_t, std::vector<ExtField::Elem>>> rows_;  // (pivot col, row)
};

size_t ext_rank(const ExtField &f, std::vector<std::vector<ExtField::Elem>> rows);

}  // namespace zigzag::gf
