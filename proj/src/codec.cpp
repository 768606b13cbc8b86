#include "zigzag/codec.hpp"

#include <algorithm>
#include <deque>
#include <mutex>

namespace zigzag::codec {

using gf::ExtField;

CodedTransmission encode_random(const Field &f, std::span<const Packet> queue, rnd::Rng &rng) {
  require(!queue.empty(), ErrorCode::EmptyQueue, "encode over an empty queue");
  const size_t len = queue.front().payload.size();
  const uint32_t sender = queue.front().sender;
  for (const Packet &p : queue) {
    require(p.payload.size() == len, ErrorCode::InvalidArgument, "payload length mismatch");
    require(p.sender == sender, ErrorCode::InvalidArgument, "queue spans multiple senders");
  }

  CodedTransmission tx;
  tx.sender = sender;
  std::vector<uint16_t> coeffs(queue.size());
  for (;;) {
    bool any = false;
    for (auto &c : coeffs) {
      c = uint16_t(rng.below(f.order()));
      any = any || c != 0;
    }
    if (any) break;
  }
  tx.symbols.assign(len, 0);
  for (size_t k = 0; k < queue.size(); ++k) {
    if (coeffs[k] == 0) continue;
    tx.coefficients.emplace_back(queue[k].id, coeffs[k]);
    for (size_t i = 0; i < len; ++i)
      tx.symbols[i] = f.add(tx.symbols[i], f.mul(coeffs[k], queue[k].payload[i]));
  }
  std::sort(tx.coefficients.begin(), tx.coefficients.end());
  return tx;
}

CodedTransmission encode_head_of_line(const Packet &head) {
  CodedTransmission tx;
  tx.sender = head.sender;
  tx.coefficients.emplace_back(head.id, 1);
  tx.symbols = head.payload;
  return tx;
}

CollisionRecord superpose(const Field &f, uint64_t slot, std::vector<CollisionPart> parts) {
  require(!parts.empty(), ErrorCode::InvalidArgument, "superpose needs at least one part");
  const size_t len = parts.front().tx.symbols.size();
  uint32_t max_off = 0;
  for (const CollisionPart &p : parts) {
    require(p.tx.symbols.size() == len, ErrorCode::InvalidArgument, "symbol length mismatch");
    require(p.offset < len, ErrorCode::OffsetTooLarge, "offset must be smaller than packet length");
    require(p.gain != 0, ErrorCode::InvalidArgument, "channel gain must be nonzero");
    max_off = std::max(max_off, p.offset);
  }
  CollisionRecord rec;
  rec.slot = slot;
  rec.superposed.assign(len + max_off, 0);
  for (const CollisionPart &p : parts)
    for (size_t i = 0; i < len; ++i) {
      const size_t pos = i + p.offset;
      rec.superposed[pos] = f.add(rec.superposed[pos], f.mul(p.gain, p.tx.symbols[i]));
    }
  rec.parts = std::move(parts);
  return rec;
}

namespace {

// Gain-weighted coefficient row of a record over packet-id columns.
std::vector<std::pair<uint64_t, uint16_t>> record_row(const Field &f, const CollisionRecord &rec) {
  std::map<uint64_t, uint16_t> acc;
  for (const CollisionPart &p : rec.parts)
    for (const auto &[id, c] : p.tx.coefficients) {
      const uint16_t w = f.mul(p.gain, c);
      auto [it, fresh] = acc.emplace(id, w);
      if (!fresh) it->second = f.add(it->second, w);
    }
  std::vector<std::pair<uint64_t, uint16_t>> row;
  for (const auto &[id, c] : acc)
    if (c != 0) row.emplace_back(id, c);
  return row;
}

gf::Matrix materialize(const Field &f, const std::vector<std::vector<std::pair<uint64_t, uint16_t>>> &rows,
                       const std::vector<uint64_t> &cols) {
  gf::Matrix m(f, rows.size(), cols.size());
  for (size_t r = 0; r < rows.size(); ++r)
    for (const auto &[id, c] : rows[r]) {
      const auto it = std::lower_bound(cols.begin(), cols.end(), id);
      m.at(r, size_t(it - cols.begin())) = c;
    }
  return m;
}

}  // namespace

ReceiverState::SparseRow ReceiverState::reduce(SparseRow row) const {
  const Field &f = *field_;
  while (!row.empty()) {
    const uint64_t lead = row.front().first;
    const auto it = std::lower_bound(
        echelon_.begin(), echelon_.end(), lead,
        [](const SparseRow &basis, uint64_t col) { return basis.front().first < col; });
    if (it == echelon_.end() || it->front().first != lead) return row;
    // row -= (lead coeff / pivot coeff) * basis row, sparse merge.
    const uint16_t factor = f.div(row.front().second, it->front().second);
    SparseRow merged;
    merged.reserve(row.size() + it->size());
    auto a = row.begin();
    auto b = it->begin();
    while (a != row.end() || b != it->end()) {
      if (b == it->end() || (a != row.end() && a->first < b->first)) {
        merged.push_back(*a++);
      } else if (a == row.end() || b->first < a->first) {
        const uint16_t v = f.neg(f.mul(factor, b->second));
        if (v != 0) merged.emplace_back(b->first, v);
        ++b;
      } else {
        const uint16_t v = f.sub(a->second, f.mul(factor, b->second));
        if (v != 0) merged.emplace_back(a->first, v);
        ++a;
        ++b;
      }
    }
    row = std::move(merged);
  }
  return row;
}

bool ReceiverState::add_record(CollisionRecord rec) {
  auto row = record_row(*field_, rec);
  for (const auto &[id, c] : row) {
    (void)c;
    auto it = std::lower_bound(col_ids_.begin(), col_ids_.end(), id);
    if (it == col_ids_.end() || *it != id) col_ids_.insert(it, id);
  }
  SparseRow reduced = reduce(row);
  const bool inn = !reduced.empty();
  if (inn) {
    const auto it = std::lower_bound(
        echelon_.begin(), echelon_.end(), reduced.front().first,
        [](const SparseRow &basis, uint64_t col) { return basis.front().first < col; });
    echelon_.insert(it, std::move(reduced));
  }
  rows_.push_back(std::move(row));
  records_.push_back(std::move(rec));
  return inn;
}

gf::Matrix ReceiverState::coeff_rows() const { return materialize(*field_, rows_, col_ids_); }

void ReceiverState::note_decoded(uint64_t id, std::vector<uint16_t> payload) {
  decoded_.insert(id);
  seen_.insert(id);  // every decoded packet is seen
  decoded_payloads_[id] = std::move(payload);
}

bool innovative(const CollisionRecord &rec, const ReceiverState &state) {
  return !state.reduce(record_row(state.field(), rec)).empty();
}

std::set<uint64_t> seen_update(ReceiverState &state) {
  const auto result = gf::rref(state.coeff_rows());
  for (size_t col : result.pivots) state.note_seen(state.packet_columns()[col]);
  return state.seen();
}

namespace {

// Shared extension fields for the decodability evaluations, one per base
// field spec. The cache owns base-field copies so callers' fields may die.
struct ExtHolder {
  Field base;
  ExtField ext;
  explicit ExtHolder(const gf::FieldSpec &spec) : base(spec), ext(base, 65536) {}
};

}  // namespace

const ExtField &decode_eval_field(const gf::FieldSpec &spec) {
  static std::mutex mu;
  static std::map<std::tuple<int, uint32_t, uint32_t>, std::unique_ptr<ExtHolder>> cache;
  std::lock_guard<std::mutex> lock(mu);
  const auto key = std::make_tuple(int(spec.kind), spec.degree, spec.modulus);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, std::make_unique<ExtHolder>(spec)).first;
  return it->second->ext;
}

ExtField::Elem decode_eval_point(const gf::FieldSpec &spec, int eval) {
  const ExtField &E = decode_eval_field(spec);
  rnd::Rng rng(rnd::mix(0xdec0dab1eULL, uint64_t(eval), spec.order(), spec.modulus));
  return E.random_nonzero(rng);
}

bool decodable(const Field &f, std::span<const CollisionRecord> records,
               const std::set<uint64_t> &unknowns) {
  if (unknowns.empty()) return true;
  if (records.size() < unknowns.size()) return false;

  std::vector<uint64_t> cols(unknowns.begin(), unknowns.end());
  uint32_t max_off = 0;
  for (const auto &rec : records)
    for (const auto &p : rec.parts) max_off = std::max(max_off, p.offset);

  const ExtField &E = decode_eval_field(f.spec());
  for (int eval = 0; eval < 3; ++eval) {
    const ExtField::Elem d = decode_eval_point(f.spec(), eval);
    std::vector<ExtField::Elem> dpow(max_off + 1, E.one());
    for (uint32_t i = 1; i <= max_off; ++i) dpow[i] = E.mul(dpow[i - 1], d);

    gf::ExtRankTracker tracker(E);
    size_t r = 0;
    for (const auto &rec : records) {
      std::vector<ExtField::Elem> row(cols.size(), E.zero());
      for (const auto &p : rec.parts)
        for (const auto &[id, c] : p.tx.coefficients) {
          const auto it = std::lower_bound(cols.begin(), cols.end(), id);
          if (it == cols.end() || *it != id) continue;  // already decoded
          const size_t col = size_t(it - cols.begin());
          const ExtField::Elem term = E.mul(E.from_base(f.mul(p.gain, c)), dpow[p.offset]);
          row[col] = E.add(row[col], term);
        }
      if (tracker.add_row(std::move(row))) ++r;
      if (r == cols.size()) break;
    }
    if (r == cols.size()) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// ZigZag decoding engine.
//
// Works on equations of the form  sum_t coeff_t * s_{pkt_t, pos - off_t} =
// rhs[pos]  for every position. Peeling solves positions with exactly one
// undetermined symbol; when it stalls, records sharing (packet, offset)
// columns are combined by Gaussian elimination over those columns, which
// covers both fully-aligned records and the prefix trick of staggered
// collisions; any small leftover is handled by a dense solve.
// ---------------------------------------------------------------------------

namespace {

struct Peeler {
  const Field &f;
  uint32_t L;

  struct Term {
    uint64_t pkt;
    uint32_t off;
    uint16_t coeff;
  };
  struct Eq {
    std::vector<Term> terms;  // sorted by (pkt, off)
    std::vector<uint16_t> rhs;
  };

  std::vector<Eq> eqs;
  std::map<uint64_t, std::vector<uint16_t>> vals;
  std::map<uint64_t, std::vector<uint8_t>> known;
  std::map<uint64_t, uint32_t> solved_count;
  std::map<uint64_t, std::vector<size_t>> pkt_eqs;
  std::vector<std::vector<uint16_t>> ucount;  // unknown contributors per eq position
  std::deque<std::pair<size_t, size_t>> queue;

  Peeler(const Field &field, uint32_t payload_len) : f(field), L(payload_len) {}

  void init(std::span<const CollisionRecord> records,
            const std::map<uint64_t, std::vector<uint16_t>> &predecoded) {
    for (const CollisionRecord &rec : records) {
      Eq eq;
      eq.rhs = rec.superposed;
      std::map<std::pair<uint64_t, uint32_t>, uint16_t> acc;
      for (const CollisionPart &p : rec.parts)
        for (const auto &[id, c] : p.tx.coefficients) {
          const uint16_t w = f.mul(p.gain, c);
          auto [it, fresh] = acc.emplace(std::make_pair(id, p.offset), w);
          if (!fresh) it->second = f.add(it->second, w);
        }
      for (const auto &[key, c] : acc) {
        if (c == 0) continue;
        const auto &[id, off] = key;
        if (auto it = predecoded.find(id); it != predecoded.end()) {
          for (uint32_t i = 0; i < L; ++i)
            eq.rhs[i + off] = f.sub(eq.rhs[i + off], f.mul(c, it->second[i]));
          continue;
        }
        eq.terms.push_back({id, off, c});
        if (!vals.count(id)) {
          vals[id].assign(L, 0);
          known[id].assign(L, 0);
          solved_count[id] = 0;
        }
      }
      eqs.push_back(std::move(eq));
    }
    rebuild_index();
    recount_all();
  }

  void rebuild_index() {
    pkt_eqs.clear();
    for (size_t e = 0; e < eqs.size(); ++e) {
      uint64_t last = UINT64_MAX;
      for (const Term &t : eqs[e].terms)
        if (t.pkt != last) {
          pkt_eqs[t.pkt].push_back(e);
          last = t.pkt;
        }
    }
  }

  void recount_eq(size_t e) {
    Eq &eq = eqs[e];
    ucount[e].assign(eq.rhs.size(), 0);
    for (const Term &t : eq.terms) {
      const auto &kn = known[t.pkt];
      for (uint32_t i = 0; i < L; ++i)
        if (!kn[i]) ++ucount[e][i + t.off];
    }
    for (size_t pos = 0; pos < eq.rhs.size(); ++pos) {
      if (ucount[e][pos] == 1) queue.emplace_back(e, pos);
      if (ucount[e][pos] == 0)
        require(eq.rhs[pos] == 0, ErrorCode::InconsistentSystem,
                "collision records are mutually inconsistent");
    }
  }

  void recount_all() {
    ucount.assign(eqs.size(), {});
    queue.clear();
    for (size_t e = 0; e < eqs.size(); ++e) recount_eq(e);
  }

  bool all_solved() const {
    for (const auto &[id, c] : solved_count)
      if (c < L) return false;
    return true;
  }

  void solve_symbol(uint64_t pkt, uint32_t idx, uint16_t value) {
    auto &kn = known[pkt];
    if (kn[idx]) {
      require(vals[pkt][idx] == value, ErrorCode::InconsistentSystem,
              "conflicting solutions for a symbol");
      return;
    }
    kn[idx] = 1;
    vals[pkt][idx] = value;
    ++solved_count[pkt];
    for (size_t e : pkt_eqs[pkt]) {
      Eq &eq = eqs[e];
      for (const Term &t : eq.terms) {
        if (t.pkt != pkt) continue;
        const size_t pos = idx + t.off;
        eq.rhs[pos] = f.sub(eq.rhs[pos], f.mul(t.coeff, value));
        if (--ucount[e][pos] == 1) queue.emplace_back(e, pos);
        if (ucount[e][pos] == 0)
          require(eq.rhs[pos] == 0, ErrorCode::InconsistentSystem,
                  "collision records are mutually inconsistent");
      }
    }
  }

  bool peel() {
    bool progress = false;
    while (!queue.empty()) {
      const auto [e, pos] = queue.front();
      queue.pop_front();
      if (ucount[e][pos] != 1) continue;
      const Eq &eq = eqs[e];
      for (const Term &t : eq.terms) {
        if (pos < t.off || pos >= t.off + L) continue;
        const uint32_t idx = uint32_t(pos) - t.off;
        if (known[t.pkt][idx]) continue;
        solve_symbol(t.pkt, idx, f.div(eq.rhs[pos], t.coeff));
        progress = true;
        break;
      }
    }
    return progress;
  }

  uint16_t coeff_of(const Eq &eq, uint64_t pkt, uint32_t off) const {
    for (const Term &t : eq.terms)
      if (t.pkt == pkt && t.off == off) return t.coeff;
    return 0;
  }

  // target -= factor * src, termwise and positionwise.
  void combine(Eq &target, uint16_t factor, const Eq &src) {
    if (target.rhs.size() < src.rhs.size()) target.rhs.resize(src.rhs.size(), 0);
    for (size_t i = 0; i < src.rhs.size(); ++i)
      target.rhs[i] = f.sub(target.rhs[i], f.mul(factor, src.rhs[i]));
    std::vector<Term> merged;
    merged.reserve(target.terms.size() + src.terms.size());
    auto a = target.terms.begin();
    auto b = src.terms.begin();
    auto key = [](const Term &t) { return std::make_pair(t.pkt, t.off); };
    while (a != target.terms.end() || b != src.terms.end()) {
      if (b == src.terms.end() || (a != target.terms.end() && key(*a) < key(*b))) {
        merged.push_back(*a++);
      } else if (a == target.terms.end() || key(*b) < key(*a)) {
        const uint16_t c = f.neg(f.mul(factor, b->coeff));
        if (c != 0) merged.push_back({b->pkt, b->off, c});
        ++b;
      } else {
        const uint16_t c = f.sub(a->coeff, f.mul(factor, b->coeff));
        if (c != 0) merged.push_back({a->pkt, a->off, c});
        ++a;
        ++b;
      }
    }
    target.terms = std::move(merged);
  }

  // One forward-elimination sweep over (packet, offset) columns.
  bool gaussian_pass() {
    std::map<std::pair<uint64_t, uint32_t>, std::vector<size_t>> columns;
    for (size_t e = 0; e < eqs.size(); ++e)
      for (const Term &t : eqs[e].terms) columns[{t.pkt, t.off}].push_back(e);

    bool changed = false;
    std::vector<uint8_t> used(eqs.size(), 0);
    for (const auto &[col, members] : columns) {
      size_t pivot = SIZE_MAX;
      for (size_t e : members)
        if (!used[e] && coeff_of(eqs[e], col.first, col.second) != 0) {
          pivot = e;
          break;
        }
      if (pivot == SIZE_MAX) continue;
      used[pivot] = 1;
      const uint16_t pc = coeff_of(eqs[pivot], col.first, col.second);
      for (size_t e : members) {
        if (e == pivot) continue;
        const uint16_t c = coeff_of(eqs[e], col.first, col.second);
        if (c == 0) continue;
        combine(eqs[e], f.div(c, pc), eqs[pivot]);
        changed = true;
      }
    }
    if (changed) {
      rebuild_index();
      recount_all();
    }
    return changed;
  }

  void dense_fallback() {
    std::map<std::pair<uint64_t, uint32_t>, size_t> cols;
    for (const auto &[id, kn] : known)
      for (uint32_t i = 0; i < L; ++i)
        if (!kn[i]) cols.emplace(std::make_pair(id, i), cols.size());
    if (cols.empty() || cols.size() > 4096) return;

    std::vector<std::pair<size_t, size_t>> eq_positions;
    for (size_t e = 0; e < eqs.size(); ++e)
      for (size_t pos = 0; pos < eqs[e].rhs.size(); ++pos)
        if (ucount[e][pos] > 0) eq_positions.emplace_back(e, pos);

    gf::Matrix m(f, eq_positions.size(), cols.size() + 1);
    for (size_t r = 0; r < eq_positions.size(); ++r) {
      const auto [e, pos] = eq_positions[r];
      const Eq &eq = eqs[e];
      for (const Term &t : eq.terms) {
        if (pos < t.off || pos >= t.off + L) continue;
        const uint32_t idx = uint32_t(pos) - t.off;
        if (known[t.pkt][idx]) continue;
        const size_t c = cols.at({t.pkt, idx});
        m.at(r, c) = f.add(m.at(r, c), t.coeff);
      }
      m.at(r, cols.size()) = eq.rhs[pos];
    }

    const auto red = gf::rref(m);
    std::vector<std::pair<uint64_t, uint32_t>> col_keys(cols.size());
    for (const auto &[key, idx] : cols) col_keys[idx] = key;
    for (size_t pr = 0; pr < red.pivots.size(); ++pr) {
      const size_t pc = red.pivots[pr];
      require(pc != cols.size(), ErrorCode::InconsistentSystem,
              "collision records are mutually inconsistent");
      bool clean = true;
      for (size_t c = pc + 1; c < cols.size(); ++c)
        if (red.matrix.at(pr, c) != 0) {
          clean = false;
          break;
        }
      if (clean)
        solve_symbol(col_keys[pc].first, col_keys[pc].second, red.matrix.at(pr, cols.size()));
    }
  }

  void run() {
    peel();
    for (int pass = 0; pass < 64 && !all_solved(); ++pass) {
      const bool changed = gaussian_pass();
      const bool solved = peel();
      if (!changed && !solved) break;
    }
    if (!all_solved()) {
      dense_fallback();
      peel();
    }
  }
};

}  // namespace

DecodeResult zigzag_decode(ReceiverState &state) {
  Peeler peeler(state.field(), state.payload_len());
  peeler.init(state.records(), state.decoded_payloads());
  peeler.run();

  DecodeResult out;
  out.decoded = state.decoded_payloads();
  for (const auto &[id, count] : peeler.solved_count) {
    if (count == state.payload_len()) {
      out.decoded[id] = peeler.vals[id];
      state.note_decoded(id, peeler.vals[id]);
    } else {
      out.residual.insert(id);
    }
  }
  return out;
}

}  // namespace zigzag::codec
