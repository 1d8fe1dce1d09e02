#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "classim/errors.hpp"

namespace classim {

/// Deterministic response γ(x, k) → a for settings x < n and device outcomes
/// k < d. Strategies are numbered in mixed radix o over positions p = x·d + k,
/// position 0 being the least significant digit.
class DeterministicStrategy {
 public:
  DeterministicStrategy(int settings, int device_outcomes, int outcomes)
      : n_(settings), d_(device_outcomes), o_(outcomes),
        table_(static_cast<std::size_t>(settings) * static_cast<std::size_t>(device_outcomes), 0) {
    if (settings < 1 || device_outcomes < 1 || outcomes < 1) {
      throw InvalidArgument("strategy dimensions must be positive");
    }
  }

  DeterministicStrategy(int settings, int device_outcomes, int outcomes, std::vector<int> table)
      : DeterministicStrategy(settings, device_outcomes, outcomes) {
    if (table.size() != table_.size()) throw InvalidArgument("strategy table has the wrong size");
    for (int a : table) {
      if (a < 0 || a >= outcomes) throw InvalidArgument("strategy entry " + std::to_string(a) + " out of range");
    }
    table_ = std::move(table);
  }

  static DeterministicStrategy from_index(std::uint64_t index, int settings, int device_outcomes, int outcomes) {
    DeterministicStrategy s(settings, device_outcomes, outcomes);
    for (auto& a : s.table_) {
      a = static_cast<int>(index % static_cast<std::uint64_t>(outcomes));
      index /= static_cast<std::uint64_t>(outcomes);
    }
    if (index != 0) throw InvalidArgument("strategy index out of range");
    return s;
  }

  std::uint64_t index() const {
    std::uint64_t idx = 0;
    for (auto it = table_.rbegin(); it != table_.rend(); ++it) {
      idx = idx * static_cast<std::uint64_t>(o_) + static_cast<std::uint64_t>(*it);
    }
    return idx;
  }

  int operator()(int x, int k) const { return table_[static_cast<std::size_t>(x * d_ + k)]; }
  void set(int x, int k, int a) { table_[static_cast<std::size_t>(x * d_ + k)] = a; }

  int settings() const { return n_; }
  int device_outcomes() const { return d_; }
  int outcomes() const { return o_; }
  const std::vector<int>& table() const { return table_; }

  bool operator==(const DeterministicStrategy& other) const = default;

 private:
  int n_, d_, o_;
  std::vector<int> table_;
};

/// o^(n·d), or 0 when the count does not fit in 64 bits.
inline std::uint64_t strategy_count(int settings, int device_outcomes, int outcomes) {
  std::uint64_t c = 1;
  const long positions = static_cast<long>(settings) * device_outcomes;
  for (long p = 0; p < positions; ++p) {
    if (c > UINT64_MAX / static_cast<std::uint64_t>(outcomes)) return 0;
    c *= static_cast<std::uint64_t>(outcomes);
  }
  return c;
}

}  // namespace classim
