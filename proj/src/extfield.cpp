#include "zigzag/extfield.hpp"

#include <algorithm>

namespace zigzag::gf {

namespace {

// Dense polynomials over the base field, low degree first, not normalized.
using Poly = std::vector<uint16_t>;

size_t poly_deg(const Poly &p) {
  size_t d = p.size();
  while (d > 0 && p[d - 1] == 0) --d;
  return d == 0 ? 0 : d - 1;
}

bool poly_is_zero(const Poly &p) {
  return std::all_of(p.begin(), p.end(), [](uint16_t c) { return c == 0; });
}

Poly poly_mul(const Field &f, const Poly &a, const Poly &b) {
  if (poly_is_zero(a) || poly_is_zero(b)) return {0};
  Poly r(poly_deg(a) + poly_deg(b) + 1, 0);
  for (size_t i = 0; i <= poly_deg(a); ++i) {
    if (a[i] == 0) continue;
    for (size_t j = 0; j <= poly_deg(b); ++j)
      r[i + j] = f.add(r[i + j], f.mul(a[i], b[j]));
  }
  return r;
}

// a mod m, m monic.
Poly poly_mod(const Field &f, Poly a, const Poly &m) {
  const size_t dm = poly_deg(m);
  while (!poly_is_zero(a) && poly_deg(a) >= dm) {
    const size_t da = poly_deg(a);
    const uint16_t c = a[da];
    for (size_t j = 0; j <= dm; ++j)
      a[da - dm + j] = f.sub(a[da - dm + j], f.mul(c, m[j]));
    a.resize(da);  // leading coefficient is now zero
    if (a.empty()) a = {0};
  }
  return a;
}

Poly poly_powmod(const Field &f, Poly base, uint64_t e, const Poly &m) {
  Poly r = {1};
  base = poly_mod(f, std::move(base), m);
  while (e != 0) {
    if (e & 1) r = poly_mod(f, poly_mul(f, r, base), m);
    base = poly_mod(f, poly_mul(f, base, base), m);
    e >>= 1;
  }
  return r;
}

Poly poly_gcd(const Field &f, Poly a, Poly b) {
  while (!poly_is_zero(b)) {
    Poly m = b;
    const uint16_t lead_inv = f.inv(m[poly_deg(m)]);
    for (auto &c : m) c = f.mul(c, lead_inv);
    Poly r = poly_mod(f, std::move(a), m);
    a = std::move(b);
    b = std::move(r);
  }
  return a;
}

std::vector<uint32_t> prime_factors_u32(uint32_t n) {
  std::vector<uint32_t> out;
  for (uint32_t d = 2; uint64_t(d) * d <= n; ++d) {
    if (n % d == 0) {
      out.push_back(d);
      while (n % d == 0) n /= d;
    }
  }
  if (n > 1) out.push_back(n);
  return out;
}

// Rabin's test: f (monic, degree k) is irreducible over F_q iff
// x^(q^k) == x mod f and gcd(x^(q^(k/r)) - x, f) = 1 for each prime r | k.
bool irreducible(const Field &f, const Poly &cand, uint32_t k) {
  const uint64_t q = f.order();
  auto frob = [&](uint32_t times) {
    Poly x = {0, 1};
    Poly h = x;
    for (uint32_t i = 0; i < times; ++i) h = poly_powmod(f, std::move(h), q, cand);
    return h;
  };
  Poly hk = frob(k);
  Poly x = {0, 1};
  hk.resize(std::max(hk.size(), x.size()), 0);
  Poly diff = hk;
  diff[1] = f.sub(diff[1], 1);
  if (!poly_is_zero(diff)) return false;
  for (uint32_t r : prime_factors_u32(k)) {
    Poly h = frob(k / r);
    h.resize(std::max<size_t>(h.size(), 2), 0);
    h[1] = f.sub(h[1], 1);
    if (poly_is_zero(h)) return false;
    Poly g = poly_gcd(f, cand, h);
    if (poly_deg(g) != 0) return false;
  }
  return true;
}

}  // namespace

ExtField::ExtField(const Field &base, uint64_t min_order) : base_(&base) {
  const uint64_t q = base.order();
  k_ = 1;
  order_ = q;
  while (order_ < min_order) {
    ++k_;
    order_ *= q;
  }
  require(k_ <= kMaxDegree, ErrorCode::InvalidArgument, "extension degree too large");

  modulus_.assign(k_ + 1, 0);
  modulus_[k_] = 1;
  if (k_ == 1) {
    // x itself is a valid monic degree-1 modulus; the field equals the base.
    return;
  }
  // Deterministic search over random monic candidates; expected ~k tries.
  rnd::Rng rng(rnd::mix(0x5eedf1e1dULL, base.spec().order(), k_));
  for (;;) {
    Poly cand(k_ + 1, 0);
    cand[k_] = 1;
    for (uint32_t i = 0; i < k_; ++i) cand[i] = uint16_t(rng.below(q));
    if (cand[0] == 0) continue;  // divisible by x
    if (irreducible(*base_, cand, k_)) {
      std::copy(cand.begin(), cand.end(), modulus_.begin());
      return;
    }
  }
}

bool ExtField::is_zero(const Elem &a) const {
  for (uint32_t i = 0; i < k_; ++i)
    if (a[i] != 0) return false;
  return true;
}

ExtField::Elem ExtField::add(const Elem &a, const Elem &b) const {
  Elem r{};
  for (uint32_t i = 0; i < k_; ++i) r[i] = base_->add(a[i], b[i]);
  return r;
}

ExtField::Elem ExtField::sub(const Elem &a, const Elem &b) const {
  Elem r{};
  for (uint32_t i = 0; i < k_; ++i) r[i] = base_->sub(a[i], b[i]);
  return r;
}

ExtField::Elem ExtField::mul(const Elem &a, const Elem &b) const {
  const Field &f = *base_;
  std::array<uint16_t, 2 * kMaxDegree> tmp{};
  for (uint32_t i = 0; i < k_; ++i) {
    if (a[i] == 0) continue;
    for (uint32_t j = 0; j < k_; ++j)
      if (b[j] != 0) tmp[i + j] = f.add(tmp[i + j], f.mul(a[i], b[j]));
  }
  for (uint32_t d = 2 * k_ - 2; d >= k_ && d < 2 * kMaxDegree; --d) {
    const uint16_t c = tmp[d];
    if (c != 0) {
      for (uint32_t j = 0; j < k_; ++j)
        tmp[d - k_ + j] = f.sub(tmp[d - k_ + j], f.mul(c, modulus_[j]));
      tmp[d] = 0;
    }
    if (d == k_) break;
  }
  Elem r{};
  for (uint32_t i = 0; i < k_; ++i) r[i] = tmp[i];
  return r;
}

ExtField::Elem ExtField::pow(Elem a, uint64_t e) const {
  Elem r = one();
  while (e != 0) {
    if (e & 1) r = mul(r, a);
    a = mul(a, a);
    e >>= 1;
  }
  return r;
}

ExtField::Elem ExtField::random_nonzero(rnd::Rng &rng) const {
  for (;;) {
    Elem e{};
    for (uint32_t i = 0; i < k_; ++i) e[i] = uint16_t(rng.below(base_->order()));
    if (!is_zero(e)) return e;
  }
}

bool ExtRankTracker::add_row(std::vector<ExtField::Elem> row) {
  const ExtField &f = *f_;
  for (const auto &[pivot, basis] : rows_) {
    if (pivot >= row.size() || f.is_zero(row[pivot])) continue;
    // Fraction-free elimination: row' = b_p * row - r_p * basis.
    const ExtField::Elem rp = row[pivot];
    const ExtField::Elem bp = basis[pivot];
    for (size_t c = 0; c < row.size(); ++c) {
      const ExtField::Elem lhs = f.mul(bp, row[c]);
      const ExtField::Elem rhs = c < basis.size() ? f.mul(rp, basis[c]) : f.zero();
      row[c] = f.sub(lhs, rhs);
    }
  }
  size_t pivot = row.size();
  for (size_t c = 0; c < row.size(); ++c)
    if (!f.is_zero(row[c])) {
      pivot = c;
      break;
    }
  if (pivot == row.size()) return false;
  rows_.emplace_back(pivot, std::move(row));
  std::sort(rows_.begin(), rows_.end(),
            [](const auto &a, const auto &b) { return a.first < b.first; });
  return true;
}

size_t ext_rank(const ExtField &f, std::vector<std::vector<ExtField::Elem>> rows) {
  ExtRankTracker t(f);
  for (auto &r : rows) t.add_row(std::move(r));
  return t.rank();
}

}  // namespace zigzag::gf
