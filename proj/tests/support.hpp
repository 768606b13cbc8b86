#pragma once

// Test-only oracles and instance generators. The dense solver here is the
// independent check for the peeling decoder: it builds the full
// symbol-level linear system and solves it by plain elimination, sharing no
// code with the decode path it validates.

#include <map>
#include <optional>

#include "zigzag/codec.hpp"
#include "zigzag/rng.hpp"

namespace zztest {

using namespace zigzag;
using codec::CollisionPart;
using codec::CollisionRecord;
using codec::Packet;

inline std::optional<std::map<uint64_t, std::vector<uint16_t>>> dense_solve(
    const gf::Field &f, std::span<const CollisionRecord> records, uint32_t L,
    const std::map<uint64_t, std::vector<uint16_t>> &known) {
  // Column layout: one unknown per (packet, symbol index).
  std::map<std::pair<uint64_t, uint32_t>, size_t> col;
  for (const auto &rec : records)
    for (const auto &part : rec.parts)
      for (const auto &[id, c] : part.tx.coefficients) {
        (void)c;
        if (known.count(id)) continue;
        for (uint32_t i = 0; i < L; ++i) col.emplace(std::make_pair(id, i), col.size());
      }
  if (col.empty()) return std::map<uint64_t, std::vector<uint16_t>>{};

  size_t n_rows = 0;
  for (const auto &rec : records) n_rows += rec.superposed.size();
  gf::Matrix m(f, n_rows, col.size() + 1);
  size_t r = 0;
  for (const auto &rec : records) {
    for (size_t pos = 0; pos < rec.superposed.size(); ++pos, ++r) {
      uint16_t rhs = rec.superposed[pos];
      for (const auto &part : rec.parts) {
        if (pos < part.offset || pos >= part.offset + L) continue;
        const uint32_t idx = uint32_t(pos) - part.offset;
        for (const auto &[id, c] : part.tx.coefficients) {
          const uint16_t w = f.mul(part.gain, c);
          if (const auto it = known.find(id); it != known.end()) {
            rhs = f.sub(rhs, f.mul(w, it->second[idx]));
          } else {
            const size_t cc = col.at({id, idx});
            m.at(r, cc) = f.add(m.at(r, cc), w);
          }
        }
      }
      m.at(r, col.size()) = rhs;
    }
  }

  const auto red = gf::rref(m);
  // Unique solution iff every unknown column is a pivot and no row reads
  // 0 = nonzero.
  for (size_t pc : red.pivots)
    if (pc == col.size()) return std::nullopt;  // inconsistent
  if (red.pivots.size() != col.size()) return std::nullopt;

  std::map<uint64_t, std::vector<uint16_t>> out;
  for (const auto &[key, idx] : col) {
    auto &payload = out[key.first];
    payload.resize(L);
    payload[key.second] = red.matrix.at(idx, col.size());
  }
  // pivot row for column idx is row idx because pivots are exactly 0..cols-1
  return out;
}

struct Instance {
  gf::Field field;
  uint32_t L;
  std::vector<Packet> packets;
  std::vector<CollisionRecord> records;
};

inline Packet make_packet(const gf::Field &f, uint64_t id, uint32_t sender, uint32_t L,
                          rnd::Rng &rng) {
  Packet p;
  p.id = id;
  p.sender = sender;
  p.payload.resize(L);
  for (auto &s : p.payload) s = uint16_t(rng.below(f.order()));
  return p;
}

// Random decodable instance: <= 4 packets spread over senders, mixed coded
// and uncoded parts, random offsets and sometimes random gains.
inline Instance random_decodable_instance(const gf::FieldSpec &spec, rnd::Rng &rng) {
  gf::Field f(spec);
  for (;;) {
    Instance inst{gf::Field(spec), 0, {}, {}};
    inst.L = uint32_t(4 + rng.below(13));  // 4..16
    const uint32_t n_packets = uint32_t(1 + rng.below(4));
    const uint32_t n_senders = uint32_t(1 + rng.below(n_packets));
    std::vector<std::vector<size_t>> by_sender(n_senders);
    for (uint64_t id = 0; id < n_packets; ++id) {
      const uint32_t sender = uint32_t(id % n_senders);
      inst.packets.push_back(make_packet(f, id, sender, inst.L, rng));
      by_sender[sender].push_back(size_t(id));
    }
    const uint32_t n_records = n_packets + uint32_t(rng.below(3));
    const uint32_t off_hi = std::max<uint32_t>(1, inst.L / 2);
    for (uint32_t t = 0; t < n_records; ++t) {
      std::vector<CollisionPart> parts;
      for (uint32_t s = 0; s < n_senders; ++s) {
        if (parts.empty() ? false : rng.below(10) < 3) continue;  // keep parts dense
        CollisionPart part;
        std::vector<Packet> queue;
        for (size_t pi : by_sender[s]) queue.push_back(inst.packets[pi]);
        if (queue.size() > 1 && rng.below(2) == 0) {
          part.tx = codec::encode_random(f, queue, rng);
        } else {
          part.tx = codec::encode_head_of_line(queue[rng.below(queue.size())]);
        }
        part.offset = uint32_t(rng.below(off_hi));
        part.gain = rng.below(2) == 0 ? uint16_t(1) : uint16_t(1 + rng.below(f.order() - 1));
        parts.push_back(std::move(part));
      }
      inst.records.push_back(codec::superpose(f, t, std::move(parts)));
    }
    std::set<uint64_t> unknowns;
    for (uint64_t id = 0; id < n_packets; ++id) unknowns.insert(id);
    if (codec::decodable(f, inst.records, unknowns)) return inst;
  }
}

}  // namespace zztest
