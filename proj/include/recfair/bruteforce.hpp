#pragma once
// Exhaustive enumeration over small scenarios: every assignment of ordered
// top-k lists to m users (optionally over several rounds). Confirms that
// closed-form bounds are attained and never crossed.

#include <cstdint>
#include <functional>
#include <vector>

#include "recfair/core.hpp"

namespace recfair::brute {

inline constexpr uint64_t kDefaultCap = 10'000'000;

// Ordered k-item arrangements of {0..n-1}, lexicographic.
std::vector<std::vector<int>> arrangements(int n, int k);

// P(n,k)^(m*rounds); throws when it would exceed the cap.
uint64_t state_count(int k, int m, int n, int rounds = 1, uint64_t cap = kDefaultCap);

// Visits every single-round run. The RunSet object is reused across calls;
// copy it to keep one.
void for_each_run(int k, int m, int n, const std::function<void(const RunSet&)>& visit,
                  uint64_t cap = kDefaultCap);

// Visits every `rounds`-tuple of runs over the same m users.
void for_each_rounds(int k, int m, int n, int rounds,
                     const std::function<void(const std::vector<RunSet>&)>& visit,
                     uint64_t cap = kDefaultCap);

struct Extremes {
  double lo = 0.0;
  double hi = 0.0;
  uint64_t states = 0;   // evaluated states
  uint64_t skipped = 0;  // NaN evaluations
};

// Min and max of fn over all runs; NaN evaluations are skipped.
Extremes scan(int k, int m, int n, const std::function<double(const RunSet&)>& fn,
              uint64_t cap = kDefaultCap);
Extremes scan_rounds(int k, int m, int n, int rounds,
                     const std::function<double(const std::vector<RunSet>&)>& fn,
                     uint64_t cap = kDefaultCap);

}  // namespace recfair::brute
