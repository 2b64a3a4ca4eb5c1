#pragma once

// Sequences (first-stage decisions) and the four neighbourhood moves.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "mms/error.hpp"

namespace mms {

// order[t] is the vehicle placed at position t (0-based).
struct Sequence {
  std::vector<int> order;

  int size() const { return static_cast<int>(order.size()); }

  static Sequence identity(int n) {
    Sequence s;
    s.order.resize(n);
    for (int i = 0; i < n; ++i) s.order[i] = i;
    return s;
  }

  bool is_permutation_of(int n_vehicles) const {
    if (size() != n_vehicles) return false;
    std::vector<bool> seen(n_vehicles, false);
    for (int v : order) {
      if (v < 0 || v >= n_vehicles || seen[v]) return false;
      seen[v] = true;
    }
    return true;
  }

  std::uint64_t hash() const {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (int v : order) {
      h ^= static_cast<std::uint64_t>(v) + 0x9E3779B97F4A7C15ULL;
      h *= 0x100000001B3ULL;
    }
    return h;
  }

  std::string to_string(char sep = ' ') const {
    std::string s;
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (i) s.push_back(sep);
      s += std::to_string(order[i]);
    }
    return s;
  }

  bool operator==(const Sequence&) const = default;
  bool operator<(const Sequence& o) const { return order < o.order; }
};

enum class MoveKind { kSwap = 0, kInsertForward = 1, kInsertBackward = 2, kInversion = 3 };

inline const char* to_string(MoveKind k) {
  switch (k) {
    case MoveKind::kSwap: return "swap";
    case MoveKind::kInsertForward: return "insert_forward";
    case MoveKind::kInsertBackward: return "insert_backward";
    case MoveKind::kInversion: return "inversion";
  }
  return "?";
}

// Positions are 0-based with t1 < t2.
//   swap            exchanges the vehicles at t1 and t2
//   insert_forward  removes the vehicle at t1 and reinserts it at t2; the
//                   block (t1, t2] shifts one position to the left
//   insert_backward removes the vehicle at t2 and reinserts it at t1; the
//                   block [t1, t2) shifts one position to the right
//   inversion       reverses [t1, t2]
struct Move {
  MoveKind kind = MoveKind::kSwap;
  int t1 = 0;
  int t2 = 1;

  bool operator==(const Move&) const = default;
};

inline void apply_in_place(std::vector<int>& order, const Move& m) {
  const int n = static_cast<int>(order.size());
  if (!(0 <= m.t1 && m.t1 < m.t2 && m.t2 < n)) {
    throw ContractViolation("move positions out of range: t1=" + std::to_string(m.t1) +
                            " t2=" + std::to_string(m.t2) + " T=" + std::to_string(n));
  }
  auto first = order.begin() + m.t1;
  auto last = order.begin() + m.t2 + 1;
  switch (m.kind) {
    case MoveKind::kSwap: std::swap(order[m.t1], order[m.t2]); break;
    case MoveKind::kInsertForward: std::rotate(first, first + 1, last); break;
    case MoveKind::kInsertBackward: std::rotate(first, last - 1, last); break;
    case MoveKind::kInversion: std::reverse(first, last); break;
  }
}

inline Sequence apply(const Sequence& seq, const Move& m) {
  Sequence out = seq;
  apply_in_place(out.order, m);
  return out;
}

}  // namespace mms
