#pragma once
// Shared domain types for offline recommender-fairness evaluation.
// Item and user identifiers are opaque strings at the boundary; internally
// everything is re-indexed to dense integers and the id<->index maps stay
// around for report emission.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace recfair {

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Catalog {
  std::vector<std::string> ids;                 // index -> id
  std::unordered_map<std::string, int> index;   // id -> index

  int n() const { return static_cast<int>(ids.size()); }

  // Duplicate ids and empty catalogs are invalid.
  static Catalog from_ids(const std::vector<std::string>& item_ids);

  int require(const std::string& id) const;     // throws ValidationError on unknown id
};

// Per-user ranked lists; lists[u][z-1] is the item at rank z. Scores are
// optional, but when a user has them they cover the whole list.
struct RunSet {
  std::vector<std::string> user_ids;                  // index -> id, first-appearance order
  std::unordered_map<std::string, int> user_index;
  std::vector<std::vector<int>> lists;                // item indices by rank
  std::vector<std::vector<double>> scores;            // empty = no scores for that user

  int m() const { return static_cast<int>(user_ids.size()); }

  int add_user(const std::string& id);                // appends when unseen
  int user_of(const std::string& id) const;           // -1 when absent
};

// Binary relevance judgements. Only grade 1 entries are stored; a user key
// with an empty vector means "judged, nothing relevant".
struct Qrels {
  std::map<std::string, std::vector<int>> rel;        // user -> ascending item indices

  const std::vector<int>* relevant_items(const std::string& user) const;
  bool is_relevant(const std::string& user, int item) const;
  void add(const std::string& user, int item);        // keeps vectors sorted and unique
};

// Historical interactions H_u. Weight and timestamp columns are accepted and
// retained but no measure consumes them.
struct Interactions {
  std::map<std::string, std::vector<int>> hist;       // user -> ascending item indices
  std::map<std::string, std::vector<double>> weight;
  std::map<std::string, std::vector<int64_t>> stamp;

  bool contains(const std::string& user, int item) const;
  const std::vector<int>* items_of(const std::string& user) const;
  void add(const std::string& user, int item);
};

// Per-user categorical attributes. partition() derives the intersectional
// grouping for a chosen attribute subset; empty combinations drop out.
struct GroupTable {
  std::vector<std::string> attributes;                               // declaration order
  std::map<std::string, std::map<std::string, std::string>> values;  // user -> attr -> value

  struct Partition {
    std::vector<std::string> labels;                  // combined value, e.g. "F|25-34"
    std::vector<std::vector<std::string>> members;    // user ids per group
  };

  // Users without a value for every requested attribute raise ValidationError
  // listing the offenders. Groups come out sorted by label.
  Partition partition(const std::vector<std::string>& users,
                      const std::vector<std::string>& attrs) const;
};

enum class ExamKind {
  Uniform,
  Linear,               // k+1-z
  LinearNormOriginal,   // (k-z)/(k-1), undefined at k=1, zero at z=k
  LinearNormCorrected,  // (k+1-z)/k, 1/k at z=k
  Dcg,                  // 1/log2(z+1)
  Rbp,                  // gamma^(z-1)
  Inverse,              // 1/z
};

const char* exam_kind_name(ExamKind kind);

struct ExamFn {
  ExamKind kind = ExamKind::Uniform;
  int k = 10;
  double gamma = 0.8;       // Rbp only

  // Weight at rank z, zero beyond k. LinearNormOriginal with k=1 throws.
  double weight(int z) const;
  // Untruncated weight for the kinds that extend beyond k (Dcg/Rbp/Inverse);
  // the linear kinds are inherently k-bounded and fall back to weight().
  double weight_full(int z) const;
};

struct Cutoff {
  int k = 10;
  int kprime = 0;           // rerank depth, 0 = unused
  int rounds = 1;           // W
};

// Symmetric sparse pair similarity over dense indices (item-item or
// user-user). Pairs never set read back as `fallback`.
struct PairSim {
  std::unordered_map<uint64_t, double> s;
  double fallback = 0.0;

  void set(int a, int b, double value);
  double get(int a, int b) const;
  static uint64_t key(int a, int b);
};

// Throws ValidationError naming the offending user/item on duplicate items,
// out-of-catalog indices, or malformed score vectors; returns its input so
// loaders can validate-and-pass-through.
const RunSet& validate_run(const RunSet& run, const Catalog& catalog);

// Rank columns as read from a file must be exactly 1..len in order.
void validate_ranks(const std::string& user, const std::vector<int>& ranks);

// How many times each catalog item appears in the top-k across all users.
std::vector<int64_t> exposure_counts(const RunSet& run, int k, int n);
// Multi-round variant: counts summed over rounds.
std::vector<int64_t> exposure_counts(const std::vector<RunSet>& rounds, int k, int n);

// Number of filled top-k slots, i.e. sum over users of min(k, list length).
int64_t filled_slots(const RunSet& run, int k);
int64_t filled_slots(const std::vector<RunSet>& rounds, int k);

}  // namespace recfair
