#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "zigzag/extfield.hpp"
#include "zigzag/gf.hpp"
#include "zigzag/rng.hpp"

namespace zigzag::codec {

using gf::Field;

struct Packet {
  uint64_t id = 0;        // global index, ordered by arrival
  uint32_t sender = 0;    // origin sender
  std::vector<uint16_t> payload;
};

// One transmission: a finite-field linear combination of packets from a
// single sender's queue, plus the coding vector that produced it.
struct CodedTransmission {
  uint32_t sender = 0;
  std::vector<std::pair<uint64_t, uint16_t>> coefficients;  // (packet id, coeff), sorted, nonzero
  std::vector<uint16_t> symbols;
};

CodedTransmission encode_random(const Field &f, std::span<const Packet> queue, rnd::Rng &rng);
// Degenerate coding used by the uncoded schemes: coefficient 1 on the
// head-of-line packet.
CodedTransmission encode_head_of_line(const Packet &head);

struct CollisionPart {
  CodedTransmission tx;
  uint32_t offset = 0;  // symbol offset within the slot
  uint16_t gain = 1;    // nonzero channel gain
};

// One slot's reception: the superposition of offset, scaled symbol streams.
struct CollisionRecord {
  uint64_t slot = 0;
  std::vector<CollisionPart> parts;
  std::vector<uint16_t> superposed;  // length = symbols length + max offset
};

CollisionRecord superpose(const Field &f, uint64_t slot, std::vector<CollisionPart> parts);

// Everything one receiver has accumulated: raw records, the gain-weighted
// coefficient ledger over packet-id columns, and decode bookkeeping. The
// ledger keeps an incrementally reduced sparse basis so rank queries and
// innovation tests stay cheap along long traces.
class ReceiverState {
 public:
  using SparseRow = std::vector<std::pair<uint64_t, uint16_t>>;  // (col id, coeff), sorted

  ReceiverState(const Field &f, uint32_t payload_len) : field_(&f), payload_len_(payload_len) {}

  const Field &field() const { return *field_; }
  uint32_t payload_len() const { return payload_len_; }

  // Appends the record and reports whether it increased the ledger rank.
  bool add_record(CollisionRecord rec);

  const std::vector<CollisionRecord> &records() const { return records_; }
  const std::vector<uint64_t> &packet_columns() const { return col_ids_; }  // arrival order
  gf::Matrix coeff_rows() const;
  size_t rank() const { return echelon_.size(); }

  // Reduces a coefficient row against the stored basis; empty means the
  // row is dependent.
  SparseRow reduce(SparseRow row) const;

  const std::set<uint64_t> &decoded() const { return decoded_; }
  const std::set<uint64_t> &seen() const { return seen_; }
  const std::map<uint64_t, std::vector<uint16_t>> &decoded_payloads() const {
    return decoded_payloads_;
  }

  void note_decoded(uint64_t id, std::vector<uint16_t> payload);
  void note_seen(uint64_t id) { seen_.insert(id); }

 private:
  const Field *field_;
  uint32_t payload_len_;
  std::vector<CollisionRecord> records_;
  std::vector<SparseRow> rows_;     // raw row per record
  std::vector<SparseRow> echelon_;  // reduced basis, ascending pivot column
  std::vector<uint64_t> col_ids_;
  std::set<uint64_t> decoded_, seen_;
  std::map<uint64_t, std::vector<uint16_t>> decoded_payloads_;
};

// Rank test: would this record's coefficient row be a new degree of freedom?
bool innovative(const CollisionRecord &rec, const ReceiverState &state);

// Recomputes the seen set as the pivot columns of the arrival-ordered
// reduced system: packet k is seen iff the receiver knows a combination of
// k and strictly later packets.
std::set<uint64_t> seen_update(ReceiverState &state);

// Schwartz-Zippel test of the collision transfer system: substitutes three
// independent nonzero evaluations for the delay variable over an extension
// field of order >= 2^16 and tests full column rank. A true answer is
// always correct; a false one is wrong with probability <= (deg/(2^16-1))^3.
// Packets referenced by the records but absent from `unknowns` are treated
// as already decoded.
bool decodable(const Field &f, std::span<const CollisionRecord> records,
               const std::set<uint64_t> &unknowns);

// The cached evaluation field and points used by decodable(); shared so
// incremental rank trackers elsewhere test the same polynomial system.
const gf::ExtField &decode_eval_field(const gf::FieldSpec &spec);
gf::ExtField::Elem decode_eval_point(const gf::FieldSpec &spec, int eval);

struct DecodeResult {
  std::map<uint64_t, std::vector<uint16_t>> decoded;  // every fully-known payload
  std::set<uint64_t> residual;                        // packet ids left undetermined
};

// Generalized ZigZag decoding: iterative peeling over symbol positions,
// interleaved with finite-field elimination across records sharing offset
// patterns, with a dense solve of whatever small subsystem remains. Throws
// InconsistentSystem if the records admit no solution.
DecodeResult zigzag_decode(ReceiverState &state);

}  // namespace zigzag::codec
