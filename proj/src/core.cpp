#include "recfair/core.hpp"

#include <algorithm>
#include <cmath>

namespace recfair {

Catalog Catalog::from_ids(const std::vector<std::string>& item_ids) {
  if (item_ids.empty()) throw ValidationError("catalog: must contain at least one item");
  Catalog c;
  c.ids.reserve(item_ids.size());
  for (const auto& id : item_ids) {
    auto [it, inserted] = c.index.emplace(id, static_cast<int>(c.ids.size()));
    if (!inserted) throw ValidationError("catalog: duplicate item id '" + id + "'");
    c.ids.push_back(id);
  }
  return c;
}

int Catalog::require(const std::string& id) const {
  auto it = index.find(id);
  if (it == index.end()) throw ValidationError("unknown-item: '" + id + "' is not in the catalog");
  return it->second;
}

int RunSet::add_user(const std::string& id) {
  auto it = user_index.find(id);
  if (it != user_index.end()) return it->second;
  int u = static_cast<int>(user_ids.size());
  user_index.emplace(id, u);
  user_ids.push_back(id);
  lists.emplace_back();
  scores.emplace_back();
  return u;
}

int RunSet::user_of(const std::string& id) const {
  auto it = user_index.find(id);
  return it == user_index.end() ? -1 : it->second;
}

const std::vector<int>* Qrels::relevant_items(const std::string& user) const {
  auto it = rel.find(user);
  return it == rel.end() ? nullptr : &it->second;
}

bool Qrels::is_relevant(const std::string& user, int item) const {
  const auto* r = relevant_items(user);
  if (!r) return false;
  return std::binary_search(r->begin(), r->end(), item);
}

void Qrels::add(const std::string& user, int item) {
  auto& v = rel[user];
  auto it = std::lower_bound(v.begin(), v.end(), item);
  if (it == v.end() || *it != item) v.insert(it, item);
}

bool Interactions::contains(const std::string& user, int item) const {
  auto it = hist.find(user);
  if (it == hist.end()) return false;
  return std::binary_search(it->second.begin(), it->second.end(), item);
}

const std::vector<int>* Interactions::items_of(const std::string& user) const {
  auto it = hist.find(user);
  return it == hist.end() ? nullptr : &it->second;
}

void Interactions::add(const std::string& user, int item) {
  auto& v = hist[user];
  auto it = std::lower_bound(v.begin(), v.end(), item);
  if (it == v.end() || *it != item) v.insert(it, item);
}

GroupTable::Partition GroupTable::partition(const std::vector<std::string>& users,
                                            const std::vector<std::string>& attrs) const {
  std::string missing;
  std::map<std::string, std::vector<std::string>> groups;
  for (const auto& user : users) {
    auto uit = values.find(user);
    std::string label;
    bool ok = uit != values.end();
    if (ok) {
      for (size_t a = 0; a < attrs.size(); ++a) {
        auto vit = uit->second.find(attrs[a]);
        if (vit == uit->second.end()) { ok = false; break; }
        if (a) label += '|';
        label += vit->second;
      }
    }
    if (!ok) {
      if (!missing.empty()) missing += ", ";
      missing += user;
      continue;
    }
    groups[label].push_back(user);
  }
  if (!missing.empty())
    throw ValidationError("group table: users without a group under the chosen attributes: " + missing);
  Partition p;
  for (auto& [label, members] : groups) {
    p.labels.push_back(label);
    p.members.push_back(std::move(members));
  }
  return p;
}

const char* exam_kind_name(ExamKind kind) {
  switch (kind) {
    case ExamKind::Uniform: return "uniform";
    case ExamKind::Linear: return "linear";
    case ExamKind::LinearNormOriginal: return "linear-normalized-original";
    case ExamKind::LinearNormCorrected: return "linear-normalized-corrected";
    case ExamKind::Dcg: return "dcg";
    case ExamKind::Rbp: return "rbp";
    case ExamKind::Inverse: return "inverse";
  }
  return "?";
}

double ExamFn::weight(int z) const {
  if (z < 1) throw ValidationError("examination function: position must be >= 1");
  if (z > k) return 0.0;
  switch (kind) {
    case ExamKind::Uniform: return 1.0;
    case ExamKind::Linear: return static_cast<double>(k + 1 - z);
    case ExamKind::LinearNormOriginal:
      if (k == 1)
        throw ValidationError("examination function: linear-normalized-original is undefined at k=1");
      return static_cast<double>(k - z) / static_cast<double>(k - 1);
    case ExamKind::LinearNormCorrected:
      return static_cast<double>(k + 1 - z) / static_cast<double>(k);
    case ExamKind::Dcg: return 1.0 / std::log2(static_cast<double>(z) + 1.0);
    case ExamKind::Rbp: return std::pow(gamma, z - 1);
    case ExamKind::Inverse: return 1.0 / static_cast<double>(z);
  }
  return 0.0;
}

double ExamFn::weight_full(int z) const {
  if (z < 1) throw ValidationError("examination function: position must be >= 1");
  switch (kind) {
    case ExamKind::Dcg: return 1.0 / std::log2(static_cast<double>(z) + 1.0);
    case ExamKind::Rbp: return std::pow(gamma, z - 1);
    case ExamKind::Inverse: return 1.0 / static_cast<double>(z);
    default: return weight(z);
  }
}

const RunSet& validate_run(const RunSet& run, const Catalog& catalog) {
  if (run.m() < 1) throw ValidationError("run: must contain at least one user");
  const int n = catalog.n();
  std::vector<int> seen(n, -1);
  for (int u = 0; u < run.m(); ++u) {
    const auto& list = run.lists[u];
    for (int item : list) {
      if (item < 0 || item >= n)
        throw ValidationError("unknown-item: user '" + run.user_ids[u] + "' references item index " +
                              std::to_string(item) + " outside the catalog");
      if (seen[item] == u)
        throw ValidationError("duplicate-item-in-list: user '" + run.user_ids[u] + "' lists item '" +
                              catalog.ids[item] + "' more than once");
      seen[item] = u;
    }
    if (!run.scores[u].empty() && run.scores[u].size() != list.size())
      throw ValidationError("run: user '" + run.user_ids[u] + "' has a partial score column");
  }
  return run;
}

void validate_ranks(const std::string& user, const std::vector<int>& ranks) {
  for (size_t i = 0; i < ranks.size(); ++i) {
    if (ranks[i] != static_cast<int>(i) + 1)
      throw ValidationError("non-contiguous-ranks: user '" + user + "' has rank " +
                            std::to_string(ranks[i]) + " where " + std::to_string(i + 1) +
                            " was expected");
  }
}

std::vector<int64_t> exposure_counts(const RunSet& run, int k, int n) {
  std::vector<int64_t> counts(n, 0);
  for (const auto& list : run.lists) {
    const int depth = std::min<int>(k, static_cast<int>(list.size()));
    for (int z = 0; z < depth; ++z) ++counts[list[z]];
  }
  return counts;
}

std::vector<int64_t> exposure_counts(const std::vector<RunSet>& rounds, int k, int n) {
  std::vector<int64_t> counts(n, 0);
  for (const auto& run : rounds) {
    for (const auto& list : run.lists) {
      const int depth = std::min<int>(k, static_cast<int>(list.size()));
      for (int z = 0; z < depth; ++z) ++counts[list[z]];
    }
  }
  return counts;
}

int64_t filled_slots(const RunSet& run, int k) {
  int64_t total = 0;
  for (const auto& list : run.lists) total += std::min<int>(k, static_cast<int>(list.size()));
  return total;
}

int64_t filled_slots(const std::vector<RunSet>& rounds, int k) {
  int64_t total = 0;
  for (const auto& run : rounds) total += filled_slots(run, k);
  return total;
}

uint64_t PairSim::key(int a, int b) {
  const uint64_t lo = static_cast<uint64_t>(std::min(a, b));
  const uint64_t hi = static_cast<uint64_t>(std::max(a, b));
  return (hi << 32) | lo;
}

void PairSim::set(int a, int b, double value) { s[key(a, b)] = value; }

double PairSim::get(int a, int b) const {
  const auto it = s.find(key(a, b));
  return it == s.end() ? fallback : it->second;
}

}  // namespace recfair
