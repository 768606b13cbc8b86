#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "zigzag/error.hpp"

namespace zigzag::gf {

enum class FieldKind { prime, binary };

// Identifies a finite field: either GF(p) for a prime p <= 2^16, or
// GF(2^m) for m in [1,16] with an explicit irreducible reduction polynomial
// (bit pattern, x^8+x^4+x^3+x+1 == 0x11b).
struct FieldSpec {
  FieldKind kind = FieldKind::binary;
  uint32_t degree = 8;       // binary only
  uint32_t modulus = 0x11b;  // prime p, or reduction polynomial

  static FieldSpec prime(uint32_t p) { return {FieldKind::prime, 0, p}; }
  static FieldSpec binary(uint32_t degree, uint32_t poly) { return {FieldKind::binary, degree, poly}; }
  static FieldSpec gf256() { return binary(8, 0x11b); }

  uint32_t order() const { return kind == FieldKind::prime ? modulus : (1u << degree); }
  bool operator==(const FieldSpec &) const = default;
};

// Arithmetic in a fixed finite field. Multiplication, division and
// inversion go through log/antilog tables built once at construction from
// a generator of the multiplicative group (the reduction polynomial is not
// required to be primitive, only irreducible).
class Field {
 public:
  explicit Field(const FieldSpec &spec);

  const FieldSpec &spec() const { return spec_; }
  uint32_t order() const { return q_; }

  uint16_t add(uint16_t a, uint16_t b) const {
    if (spec_.kind == FieldKind::binary) return a ^ b;
    uint32_t s = uint32_t(a) + b;
    return uint16_t(s >= q_ ? s - q_ : s);
  }
  uint16_t sub(uint16_t a, uint16_t b) const {
    if (spec_.kind == FieldKind::binary) return a ^ b;
    return uint16_t(a >= b ? a - b : a + q_ - b);
  }
  uint16_t neg(uint16_t a) const { return sub(0, a); }
  uint16_t mul(uint16_t a, uint16_t b) const {
    if (a == 0 || b == 0) return 0;
    return alog_[size_t(log_[a]) + log_[b]];
  }
  uint16_t inv(uint16_t a) const {
    require(a != 0, ErrorCode::DivisionByZero, "inverse of zero");
    return alog_[q_ - 1 - log_[a]];
  }
  uint16_t div(uint16_t a, uint16_t b) const { return mul(a, inv(b)); }
  uint16_t pow(uint16_t a, uint64_t e) const;
  uint16_t generator() const { return generator_; }

  bool operator==(const Field &other) const { return spec_ == other.spec_; }

 private:
  FieldSpec spec_;
  uint32_t q_ = 0;
  uint16_t generator_ = 0;
  std::vector<uint16_t> log_;   // index: element value, log_[0] unused
  std::vector<uint16_t> alog_;  // doubled so mul needs no reduction mod q-1
};

// A field element tagged with its field, for the checked operator surface.
// Hot paths use Field's raw uint16_t methods instead.
struct FieldElement {
  uint16_t value = 0;
  const Field *field = nullptr;
};

FieldElement operator+(FieldElement a, FieldElement b);
FieldElement operator-(FieldElement a, FieldElement b);
FieldElement operator*(FieldElement a, FieldElement b);
FieldElement inverse(FieldElement a);

enum class ArithOp { add, sub, mul, inv };
FieldElement arith(ArithOp op, FieldElement a, std::optional<FieldElement> b = std::nullopt);

// Dense row-major matrix over one field.
class Matrix {
 public:
  Matrix() = default;
  Matrix(const Field &f, size_t rows, size_t cols)
      : field_(&f), rows_(rows), cols_(cols), data_(rows * cols, 0) {}

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  const Field &field() const { return *field_; }

  uint16_t &at(size_t r, size_t c) { return data_[r * cols_ + c]; }
  uint16_t at(size_t r, size_t c) const { return data_[r * cols_ + c]; }
  std::span<const uint16_t> row(size_t r) const { return {data_.data() + r * cols_, cols_}; }

  Matrix transposed() const;
  bool operator==(const Matrix &other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
  }

 private:
  const Field *field_ = nullptr;
  size_t rows_ = 0, cols_ = 0;
  std::vector<uint16_t> data_;
};

struct RrefResult {
  Matrix matrix;
  std::vector<size_t> pivots;  // strictly increasing column indices
};

// Reduced row-echelon form with leftmost-pivot, first-nonzero-row
// selection; deterministic for a given input.
RrefResult rref(const Matrix &m);
size_t rank(const Matrix &m);

}  // namespace zigzag::gf
