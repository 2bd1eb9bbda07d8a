#include "recfair/bruteforce.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace recfair::brute {

namespace {

RunSet blank_run(int m) {
  RunSet run;
  for (int u = 0; u < m; ++u) run.add_user("u" + std::to_string(u + 1));
  run.lists.assign(m, {});
  run.scores.assign(m, {});
  return run;
}

}  // namespace

std::vector<std::vector<int>> arrangements(int n, int k) {
  if (k < 0 || k > n) throw ValidationError("brute force: need 0 <= k <= n");
  std::vector<std::vector<int>> out;
  std::vector<int> pick;
  std::vector<bool> used(n, false);
  const std::function<void()> rec = [&] {
    if (static_cast<int>(pick.size()) == k) {
      out.push_back(pick);
      return;
    }
    for (int i = 0; i < n; ++i) {
      if (used[i]) continue;
      used[i] = true;
      pick.push_back(i);
      rec();
      pick.pop_back();
      used[i] = false;
    }
  };
  rec();
  return out;
}

uint64_t state_count(int k, int m, int n, int rounds, uint64_t cap) {
  if (m < 1 || rounds < 1) throw ValidationError("brute force: need m >= 1 and rounds >= 1");
  uint64_t per_list = 1;
  for (int i = 0; i < k; ++i) per_list *= static_cast<uint64_t>(n - i);
  uint64_t total = 1;
  for (int slot = 0; slot < m * rounds; ++slot) {
    if (per_list != 0 && total > cap / per_list + 1)
      throw ValidationError("brute force: state count exceeds cap " + std::to_string(cap));
    total *= per_list;
  }
  if (total > cap)
    throw ValidationError("brute force: state count exceeds cap " + std::to_string(cap));
  return total;
}

void for_each_run(int k, int m, int n, const std::function<void(const RunSet&)>& visit,
                  uint64_t cap) {
  state_count(k, m, n, 1, cap);
  const auto arr = arrangements(n, k);
  RunSet run = blank_run(m);
  std::vector<size_t> pos(m, 0);
  for (int u = 0; u < m; ++u) run.lists[u] = arr[0];
  for (;;) {
    visit(run);
    int u = m - 1;
    while (u >= 0) {
      if (++pos[u] < arr.size()) {
        run.lists[u] = arr[pos[u]];
        break;
      }
      pos[u] = 0;
      run.lists[u] = arr[0];
      --u;
    }
    if (u < 0) break;
  }
}

void for_each_rounds(int k, int m, int n, int rounds,
                     const std::function<void(const std::vector<RunSet>&)>& visit, uint64_t cap) {
  state_count(k, m, n, rounds, cap);
  const auto arr = arrangements(n, k);
  std::vector<RunSet> rs(rounds, blank_run(m));
  const int slots = m * rounds;
  std::vector<size_t> pos(slots, 0);
  for (int s = 0; s < slots; ++s) rs[s / m].lists[s % m] = arr[0];
  for (;;) {
    visit(rs);
    int s = slots - 1;
    while (s >= 0) {
      if (++pos[s] < arr.size()) {
        rs[s / m].lists[s % m] = arr[pos[s]];
        break;
      }
      pos[s] = 0;
      rs[s / m].lists[s % m] = arr[0];
      --s;
    }
    if (s < 0) break;
  }
}

Extremes scan(int k, int m, int n, const std::function<double(const RunSet&)>& fn, uint64_t cap) {
  Extremes e;
  e.lo = std::numeric_limits<double>::infinity();
  e.hi = -std::numeric_limits<double>::infinity();
  for_each_run(
      k, m, n,
      [&](const RunSet& run) {
        const double v = fn(run);
        ++e.states;
        if (std::isnan(v)) {
          ++e.skipped;
          return;
        }
        e.lo = std::min(e.lo, v);
        e.hi = std::max(e.hi, v);
      },
      cap);
  return e;
}

Extremes scan_rounds(int k, int m, int n, int rounds,
                     const std::function<double(const std::vector<RunSet>&)>& fn, uint64_t cap) {
  Extremes e;
  e.lo = std::numeric_limits<double>::infinity();
  e.hi = -std::numeric_limits<double>::infinity();
  for_each_rounds(
      k, m, n, rounds,
      [&](const std::vector<RunSet>& rs) {
        const double v = fn(rs);
        ++e.states;
        if (std::isnan(v)) {
          ++e.skipped;
          return;
        }
        e.lo = std::min(e.lo, v);
        e.hi = std::max(e.hi, v);
      },
      cap);
  return e;
}

}  // namespace recfair::brute
