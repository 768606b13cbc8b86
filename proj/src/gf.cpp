#include "zigzag/gf.hpp"

#include <bit>

namespace zigzag::gf {

namespace {

bool is_prime(uint32_t p) {
  if (p < 2) return false;
  for (uint32_t d = 2; uint64_t(d) * d <= p; ++d)
    if (p % d == 0) return false;
  return true;
}

uint32_t poly_degree(uint32_t v) { return 31u - uint32_t(std::countl_zero(v)); }

// Remainder of binary-polynomial division.
uint32_t poly_mod2(uint32_t a, uint32_t m) {
  const uint32_t dm = poly_degree(m);
  while (a != 0 && poly_degree(a) >= dm) a ^= m << (poly_degree(a) - dm);
  return a;
}

uint32_t clmul(uint32_t a, uint32_t b) {
  uint32_t r = 0;
  while (b != 0) {
    if (b & 1u) r ^= a;
    a <<= 1;
    b >>= 1;
  }
  return r;
}

bool irreducible_gf2(uint32_t poly, uint32_t degree) {
  // Trial division by every polynomial of degree 1..degree/2.
  const uint32_t hi = 1u << (degree / 2 + 1);
  for (uint32_t g = 2; g < hi; ++g)
    if (poly_mod2(poly, g) == 0) return false;
  return true;
}

std::vector<uint32_t> prime_factors(uint32_t n) {
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

}  // namespace

Field::Field(const FieldSpec &spec) : spec_(spec) {
  if (spec.kind == FieldKind::prime) {
    require(spec.modulus >= 2 && spec.modulus <= 65536, ErrorCode::InvalidArgument,
            "prime field modulus must be in [2, 2^16]");
    require(is_prime(spec.modulus), ErrorCode::InvalidArgument, "field modulus is not prime");
    q_ = spec.modulus;
  } else {
    require(spec.degree >= 1 && spec.degree <= 16, ErrorCode::InvalidArgument,
            "binary field degree must be in [1, 16]");
    require(spec.modulus >= (1u << spec.degree) && spec.modulus < (2u << spec.degree),
            ErrorCode::InvalidArgument, "reduction polynomial degree mismatch");
    require(irreducible_gf2(spec.modulus, spec.degree), ErrorCode::InvalidArgument,
            "reduction polynomial is reducible");
    q_ = 1u << spec.degree;
  }

  const bool binary = spec_.kind == FieldKind::binary;
  auto raw_mul = [&](uint32_t a, uint32_t b) -> uint32_t {
    if (binary) return poly_mod2(clmul(a, b), spec_.modulus);
    return uint32_t((uint64_t(a) * b) % q_);
  };
  auto raw_pow = [&](uint32_t a, uint32_t e) {
    uint32_t r = 1;
    while (e != 0) {
      if (e & 1u) r = raw_mul(r, a);
      a = raw_mul(a, a);
      e >>= 1;
    }
    return r;
  };

  // Find a generator of the multiplicative group. q-1 has small factors at
  // this size so the search is immediate.
  const uint32_t m = q_ - 1;
  const auto factors = prime_factors(m);
  generator_ = 1;
  for (uint32_t g = (q_ == 2 ? 1u : 2u); g < q_; ++g) {
    bool ok = true;
    for (uint32_t f : factors)
      if (raw_pow(g, m / f) == 1) {
        ok = false;
        break;
      }
    if (ok) {
      generator_ = uint16_t(g);
      break;
    }
  }

  log_.assign(q_, 0);
  alog_.assign(size_t(2) * m + 1, 0);
  uint32_t v = 1;
  for (uint32_t i = 0; i < m; ++i) {
    alog_[i] = uint16_t(v);
    alog_[i + m] = uint16_t(v);
    log_[v] = uint16_t(i);
    v = raw_mul(v, generator_);
  }
  alog_[2 * size_t(m)] = 1;  // g^(q-1) for the inv() index path when log a == 0
}

uint16_t Field::pow(uint16_t a, uint64_t e) const {
  if (e == 0) return 1;
  if (a == 0) return 0;
  const uint64_t m = q_ - 1;
  return alog_[(uint64_t(log_[a]) * (e % m)) % m];
}

namespace {
const Field &common_field(const FieldElement &a, const FieldElement &b) {
  require(a.field != nullptr && b.field != nullptr, ErrorCode::InvalidArgument,
          "field element without a field");
  require(*a.field == *b.field, ErrorCode::FieldMismatch, "operands from different fields");
  return *a.field;
}
}  // namespace

FieldElement operator+(FieldElement a, FieldElement b) {
  const Field &f = common_field(a, b);
  return {f.add(a.value, b.value), a.field};
}
FieldElement operator-(FieldElement a, FieldElement b) {
  const Field &f = common_field(a, b);
  return {f.sub(a.value, b.value), a.field};
}
FieldElement operator*(FieldElement a, FieldElement b) {
  const Field &f = common_field(a, b);
  return {f.mul(a.value, b.value), a.field};
}
FieldElement inverse(FieldElement a) {
  require(a.field != nullptr, ErrorCode::InvalidArgument, "field element without a field");
  return {a.field->inv(a.value), a.field};
}

FieldElement arith(ArithOp op, FieldElement a, std::optional<FieldElement> b) {
  if (op == ArithOp::inv) return inverse(a);
  require(b.has_value(), ErrorCode::InvalidArgument, "binary field op needs two operands");
  switch (op) {
    case ArithOp::add: return a + *b;
    case ArithOp::sub: return a - *b;
    case ArithOp::mul: return a * *b;
    default: fail(ErrorCode::InvalidArgument, "unknown field op");
  }
}

Matrix Matrix::transposed() const {
  Matrix t(*field_, cols_, rows_);
  for (size_t r = 0; r < rows_; ++r)
    for (size_t c = 0; c < cols_; ++c) t.at(c, r) = at(r, c);
  return t;
}

RrefResult rref(const Matrix &in) {
  Matrix m = in;
  const Field &f = m.field();
  std::vector<size_t> pivots;
  size_t r = 0;
  for (size_t col = 0; col < m.cols() && r < m.rows(); ++col) {
    size_t sel = m.rows();
    for (size_t i = r; i < m.rows(); ++i)
      if (m.at(i, col) != 0) {
        sel = i;
        break;
      }
    if (sel == m.rows()) continue;
    if (sel != r)
      for (size_t c = 0; c < m.cols(); ++c) std::swap(m.at(r, c), m.at(sel, c));
    const uint16_t piv_inv = f.inv(m.at(r, col));
    for (size_t c = col; c < m.cols(); ++c) m.at(r, c) = f.mul(m.at(r, c), piv_inv);
    for (size_t i = 0; i < m.rows(); ++i) {
      if (i == r || m.at(i, col) == 0) continue;
      const uint16_t factor = m.at(i, col);
      for (size_t c = col; c < m.cols(); ++c)
        m.at(i, c) = f.sub(m.at(i, c), f.mul(factor, m.at(r, c)));
    }
    pivots.push_back(col);
    ++r;
  }
  return {std::move(m), std::move(pivots)};
}

size_t rank(const Matrix &m) { return rref(m).pivots.size(); }

}  // namespace zigzag::gf
