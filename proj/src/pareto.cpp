#include "recfair/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "recfair/relevance.hpp"

namespace recfair {
namespace {

int64_t cap_of(int k, int m, int n) {
  return (static_cast<int64_t>(k) * m + n - 1) / n;
}

// Catalog indices follow file order, not id order, so popularity ties break
// through this permutation: rank[i] is item i's position in ascending id
// order, and by_id lists indices in that order.
struct ItemOrder {
  std::vector<int> by_id;
  std::vector<int> rank;
};

ItemOrder item_order_of(const Catalog& catalog) {
  const int n = catalog.n();
  ItemOrder order;
  order.by_id.resize(n);
  std::iota(order.by_id.begin(), order.by_id.end(), 0);
  std::sort(order.by_id.begin(), order.by_id.end(),
            [&](int a, int b) { return catalog.ids[a] < catalog.ids[b]; });
  order.rank.resize(n);
  for (int pos = 0; pos < n; ++pos) order.rank[order.by_id[pos]] = pos;
  return order;
}

int most_exposed(const std::vector<int64_t>& counts, const std::vector<int>& rank,
                 const std::vector<char>* skip) {
  int best = -1;
  for (int i = 0; i < static_cast<int>(counts.size()); ++i) {
    if (skip != nullptr && (*skip)[i] != 0) continue;
    if (best < 0 || counts[i] > counts[best] ||
        (counts[i] == counts[best] && rank[i] < rank[best]))
      best = i;
  }
  return best;
}

// Users currently holding `item`, lowest-ranked holders first. Oracle runs
// list users in ascending id order, so the index tiebreak is the id tiebreak.
struct Holder {
  int user = 0;
  int pos = 0;
};

std::vector<Holder> holders_of(const RunSet& run, int item) {
  std::vector<Holder> holders;
  for (int u = 0; u < run.m(); ++u) {
    const auto& list = run.lists[u];
    for (int z = 0; z < static_cast<int>(list.size()); ++z) {
      if (list[z] == item) {
        holders.push_back({u, z});
        break;
      }
    }
  }
  std::sort(holders.begin(), holders.end(), [](const Holder& a, const Holder& b) {
    if (a.pos != b.pos) return a.pos > b.pos;
    return a.user < b.user;
  });
  return holders;
}

// First holder who may take `item`: not in their history, not already in
// their list, holders for whom it is relevant ahead of everyone else.
int pick_receiver(const RunSet& run, const std::vector<Holder>& holders, const Qrels& qrels,
                  const Interactions& hist, int item) {
  int fallback = -1;
  for (size_t h = 0; h < holders.size(); ++h) {
    const std::string& user = run.user_ids[holders[h].user];
    if (hist.contains(user, item)) continue;
    const auto& list = run.lists[holders[h].user];
    if (std::find(list.begin(), list.end(), item) != list.end()) continue;
    if (qrels.is_relevant(user, item)) return static_cast<int>(h);
    if (fallback < 0) fallback = static_cast<int>(h);
  }
  return fallback;
}

void apply_replacement(RunSet& run, const Qrels& qrels, int user, int pos, int item) {
  auto& list = run.lists[user];
  list[pos] = item;
  const std::string& uid = run.user_ids[user];
  std::stable_partition(list.begin(), list.end(),
                        [&](int it) { return qrels.is_relevant(uid, it); });
}

std::vector<std::function<MeasureResult(const RunSet&)>> fair_evaluators(
    const Catalog& catalog, int k, const CheckpointMeasures& cm) {
  std::vector<std::function<MeasureResult(const RunSet&)>> fns;
  for (BoundedMeasure b : cm.fair) {
    const Variant v = cm.fair_variant;
    switch (b) {
      case BoundedMeasure::Jain:
        fns.emplace_back([&catalog, k, v](const RunSet& r) { return jain(r, catalog, k, v); });
        break;
      case BoundedMeasure::QF:
        fns.emplace_back([&catalog, k, v](const RunSet& r) { return qf(r, catalog, k, v); });
        break;
      case BoundedMeasure::Ent:
        fns.emplace_back([&catalog, k, v, base = cm.log_base](const RunSet& r) {
          return entropy(r, catalog, k, v, base);
        });
        break;
      case BoundedMeasure::Gini: {
        ExamFn exam = cm.exam;
        exam.k = k;  // a mismatched exam depth would silently zero deeper ranks
        fns.emplace_back([&catalog, k, v, exam](const RunSet& r) {
          return gini(r, catalog, k, v, exam);
        });
        break;
      }
      case BoundedMeasure::FSat:
        fns.emplace_back([&catalog, k, v](const RunSet& r) { return fsat(r, catalog, k, v); });
        break;
      default:
        throw ValidationError(std::string("frontier: unsupported fairness measure '") +
                              bounded_measure_name(b) + "'");
    }
  }
  if (cm.disparities) {
    for (DisparityKind kind : {DisparityKind::IID, DisparityKind::AID}) {
      fns.emplace_back([&catalog, k, kind, gamma = cm.gamma](const RunSet& r) {
        return expected_exposure_disparity(kind, r, catalog, k, gamma);
      });
    }
  }
  return fns;
}

// The walk shared by the full and the sparse sweep; `walk` false records the
// oracle point alone.
FrontierTable sweep(const Qrels& qrels, const Interactions& hist, const Catalog& catalog, int k,
                    const CheckpointMeasures& cm, int64_t every, RunSet run, bool walk,
                    std::vector<std::string> notes) {
  if (every <= 0) throw ValidationError("frontier: checkpoint stride must be positive");
  if (cm.rel.empty()) throw ValidationError("frontier: no relevance measures selected");
  if (cm.fair.empty() && !cm.disparities)
    throw ValidationError("frontier: no fairness measures selected");

  const int n = catalog.n();
  const int m = run.m();
  FrontierTable table;
  table.k = k;
  table.m = m;
  table.n = n;
  table.cap = cap_of(k, m, n);
  table.notes = std::move(notes);

  const auto fair_fns = fair_evaluators(catalog, k, cm);
  for (EffMeasure e : cm.rel) {
    const std::string name = eff_measure_name(e);
    if (std::find(table.rel_ids.begin(), table.rel_ids.end(), name) != table.rel_ids.end())
      throw ValidationError("frontier: duplicate relevance measure '" + name + "'");
    table.rel_ids.push_back(name);
  }
  for (const auto& fn : fair_fns) {
    const MeasureResult first = fn(run);
    if (std::find(table.fair_ids.begin(), table.fair_ids.end(), first.id) !=
        table.fair_ids.end())
      throw ValidationError("frontier: duplicate fairness measure '" + first.id + "'");
    if (first.undefined)
      throw ValidationError("frontier: measure '" + first.id + "' undefined on the oracle run");
    table.fair_ids.push_back(first.id);
    table.fair_dirs.push_back(first.direction);
  }

  const int nr = static_cast<int>(cm.rel.size());
  const int nf = static_cast<int>(fair_fns.size());
  auto checkpoint = [&](int64_t done) {
    const auto row = parallel::fill_slots(nr + nf, [&](int j) -> double {
      if (j < nr) return mean_effectiveness(per_user_effectiveness(cm.rel[j], run, qrels, k)).mean;
      return fair_fns[j - nr](run).score;
    });
    for (int j = 0; j < nr + nf; ++j) {
      if (std::isfinite(row[j])) continue;
      const std::string& id = j < nr ? table.rel_ids[j] : table.fair_ids[j - nr];
      throw ValidationError("frontier: measure '" + id + "' undefined at checkpoint " +
                            std::to_string(done));
    }
    table.checkpoints.push_back(done);
    table.rel_scores.emplace_back(row.begin(), row.begin() + nr);
    table.fair_scores.emplace_back(row.begin() + nr, row.end());
  };

  const ItemOrder order = item_order_of(catalog);
  std::vector<int64_t> counts = exposure_counts(run, k, n);
  int64_t done = 0;
  checkpoint(0);

  auto replace = [&](int pop, const Holder& holder, int item) {
    apply_replacement(run, qrels, holder.user, holder.pos, item);
    --counts[pop];
    ++counts[item];
    ++done;
    if (done % every == 0) checkpoint(done);
    // The incremental counts drive every popularity decision; silent drift
    // would corrupt the walk, so recount from the lists periodically.
    if (done % 1000 == 0 && counts != exposure_counts(run, k, n))
      throw std::logic_error("frontier: incremental exposure counts diverged");
  };

  if (walk) {
    // Unexposed items first: each either takes a slot from the current most
    // exposed item or is skipped for good.
    std::vector<int> fresh;
    for (int i : order.by_id)
      if (counts[i] == 0) fresh.push_back(i);
    for (int i : fresh) {
      const int pop = most_exposed(counts, order.rank, nullptr);
      if (counts[pop] <= 1) break;
      const auto holders = holders_of(run, pop);
      const int who = pick_receiver(run, holders, qrels, hist, i);
      if (who < 0) {
        table.notes.push_back("item '" + catalog.ids[i] + "' skipped: no user can take it");
        continue;
      }
      replace(pop, holders[who], i);
    }

    // Then shave counts above the cap. Receivers sit below the cap, so every
    // move is a strict transfer toward uniformity and the excess shrinks by
    // one; items nobody can shed freeze rather than loop.
    std::vector<char> frozen(n, 0);
    for (;;) {
      const int top = most_exposed(counts, order.rank, nullptr);
      if (counts[top] <= table.cap || counts[top] <= 1) break;
      const int pop = most_exposed(counts, order.rank, &frozen);
      if (pop < 0 || counts[pop] <= table.cap || counts[pop] <= 1) {
        table.notes.push_back("stopped above the exposure cap: item '" + catalog.ids[top] +
                              "' cannot be rebalanced");
        break;
      }
      std::vector<int> targets;
      for (int i = 0; i < n; ++i)
        if (i != pop && counts[i] <= table.cap - 1) targets.push_back(i);
      std::sort(targets.begin(), targets.end(), [&](int a, int b) {
        if (counts[a] != counts[b]) return counts[a] < counts[b];
        return order.rank[a] < order.rank[b];
      });
      const auto holders = holders_of(run, pop);
      bool placed = false;
      for (int i : targets) {
        const int who = pick_receiver(run, holders, qrels, hist, i);
        if (who < 0) continue;
        replace(pop, holders[who], i);
        placed = true;
        break;
      }
      if (!placed) {
        frozen[pop] = 1;
        table.notes.push_back("item '" + catalog.ids[pop] +
                              "' frozen: every replacement target conflicts");
      }
    }
  }

  if (table.checkpoints.back() != done) checkpoint(done);
  if (counts != exposure_counts(run, k, n))
    throw std::logic_error("frontier: incremental exposure counts diverged");
  table.total_replacements = done;
  table.max_count_final = *std::max_element(counts.begin(), counts.end());
  table.final_run = std::move(run);
  return table;
}

const char* dir_token(Direction dir) {
  return dir == Direction::LowerIsFairer ? "lower" : "higher";
}

Direction dir_from_token(const std::string& token) {
  if (token == "lower") return Direction::LowerIsFairer;
  if (token == "higher") return Direction::HigherIsFairer;
  throw ValidationError("frontier tsv: unknown direction '" + token + "'");
}

}  // namespace

RunSet oracle_run(const Qrels& qrels, const Interactions& hist, const Catalog& catalog, int k) {
  const int n = catalog.n();
  if (k <= 0) throw ValidationError("oracle: k must be positive");
  if (k > n) throw ValidationError("oracle: k exceeds the catalog size");
  if (qrels.rel.empty()) throw ValidationError("oracle: no judged users");

  RunSet run;
  for (const auto& [user, items] : qrels.rel) {
    run.add_user(user);
    for (int item : items) {
      if (item < 0 || item >= n)
        throw ValidationError("oracle: qrels item index out of catalog range for user '" + user +
                              "'");
      if (hist.contains(user, item))
        throw ValidationError("oracle: relevant item '" + catalog.ids[item] +
                              "' sits in the history of user '" + user + "'");
    }
  }

  const int m = run.m();
  const ItemOrder order = item_order_of(catalog);
  std::vector<int64_t> counts(n, 0);
  std::vector<const std::vector<int>*> rels(m);
  for (int u = 0; u < m; ++u) rels[u] = qrels.relevant_items(run.user_ids[u]);

  // Exact fits first, then oversize sets in ascending size, then the short
  // sets that need fillers.
  std::map<int, std::vector<int>> oversize;
  std::vector<int> shorts;
  for (int u = 0; u < m; ++u) {
    const int size = static_cast<int>(rels[u]->size());
    if (size == k) {
      run.lists[u] = *rels[u];
      for (int item : run.lists[u]) ++counts[item];
    } else if (size > k) {
      oversize[size].push_back(u);
    } else {
      shorts.push_back(u);
    }
  }

  for (const auto& [size, users] : oversize) {
    // Users carrying the least already-granted exposure pick first; each pick
    // then keeps the k least exposed of their relevant items.
    std::vector<std::pair<int64_t, int>> batch;
    for (int u : users) {
      int64_t weight = 0;
      for (int item : *rels[u]) weight += counts[item];
      batch.emplace_back(weight, u);
    }
    std::stable_sort(batch.begin(), batch.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [weight, u] : batch) {
      std::vector<int> kept = *rels[u];
      std::sort(kept.begin(), kept.end(), [&](int a, int b) {
        if (counts[a] != counts[b]) return counts[a] < counts[b];
        return order.rank[a] < order.rank[b];
      });
      kept.resize(k);
      run.lists[u] = kept;
      for (int item : kept) ++counts[item];
    }
  }

  for (int u : shorts) {
    run.lists[u] = *rels[u];
    for (int item : run.lists[u]) ++counts[item];
  }
  std::vector<int> pool;
  for (int i : order.by_id)
    if (counts[i] == 0) pool.push_back(i);
  for (int u : shorts) {
    const std::string& user = run.user_ids[u];
    auto& list = run.lists[u];
    for (auto it = pool.begin(); it != pool.end() && static_cast<int>(list.size()) < k;) {
      if (hist.contains(user, *it)) {
        ++it;
        continue;
      }
      list.push_back(*it);
      ++counts[*it];
      it = pool.erase(it);
    }
    while (static_cast<int>(list.size()) < k) {
      int best = -1;
      for (int i = 0; i < n; ++i) {
        if (counts[i] == 0 || hist.contains(user, i)) continue;
        if (std::find(list.begin(), list.end(), i) != list.end()) continue;
        if (best < 0 || counts[i] < counts[best] ||
            (counts[i] == counts[best] && order.rank[i] < order.rank[best]))
          best = i;
      }
      if (best < 0) break;  // nothing takeable is left; the list stays short
      list.push_back(best);
      ++counts[best];
    }
  }
  return run;
}

FrontierTable oracle2fair(const Qrels& qrels, const Interactions& hist, const Catalog& catalog,
                          int k, const CheckpointMeasures& measures, int64_t every) {
  return sweep(qrels, hist, catalog, k, measures, every, oracle_run(qrels, hist, catalog, k),
               true, {});
}

int64_t excess_exposure(const RunSet& run, const Catalog& catalog, int k) {
  const int n = catalog.n();
  const int64_t cap = cap_of(k, run.m(), n);
  int64_t excess = 0;
  for (int64_t count : exposure_counts(run, k, n))
    if (count > cap) excess += count - cap;
  return excess;
}

FrontierTable estimate_frontier(const Qrels& qrels, const Interactions& hist,
                                const Catalog& catalog, int k, int p,
                                const CheckpointMeasures& measures) {
  if (p < 2) throw ValidationError("frontier estimate: at least two checkpoints required");
  RunSet run = oracle_run(qrels, hist, catalog, k);
  const int64_t excess = excess_exposure(run, catalog, k);
  if (excess == 0)
    return sweep(qrels, hist, catalog, k, measures, 1, std::move(run), false,
                 {"oracle already meets the exposure cap; single-point frontier"});
  const int64_t every = std::max<int64_t>(1, excess / (p - 1));
  return sweep(qrels, hist, catalog, k, measures, every, std::move(run), true, {});
}

PairGradient pair_gradient(const Frontier& frontier) {
  PairGradient g;
  if (frontier.points.size() < 2) return g;
  const FrontierPoint& a = frontier.points.front();
  const FrontierPoint& b = frontier.points.back();
  if (b.rel == a.rel) return g;
  g.value = (b.fair - a.fair) / (b.rel - a.rel);
  g.defined = true;
  g.fit = g.value != 0.0;
  return g;
}

Frontier dedupe_frontier(Frontier frontier) {
  for (const FrontierPoint& p : frontier.points)
    if (!std::isfinite(p.rel) || !std::isfinite(p.fair))
      throw ValidationError("frontier: non-finite point");
  const bool lower = frontier.fair_dir == Direction::LowerIsFairer;
  auto fairer = [lower](double a, double b) { return lower ? a < b : a > b; };
  std::sort(frontier.points.begin(), frontier.points.end(),
            [&](const FrontierPoint& a, const FrontierPoint& b) {
              if (a.rel != b.rel) return a.rel > b.rel;
              if (a.fair != b.fair) return fairer(a.fair, b.fair);
              return a.checkpoint < b.checkpoint;
            });
  std::vector<FrontierPoint> kept;
  for (const FrontierPoint& p : frontier.points) {
    if (!kept.empty() && kept.back().rel == p.rel) continue;  // fairness-best already kept
    kept.push_back(p);
  }
  frontier.points = std::move(kept);
  const PairGradient g = pair_gradient(frontier);
  frontier.gradient = g.defined ? g.value : 0.0;
  frontier.gradient_defined = g.defined;
  frontier.fit = g.fit;
  return frontier;
}

Frontier frontier_for(const FrontierTable& table, const std::string& rel_id,
                      const std::string& fair_id) {
  const auto ri = std::find(table.rel_ids.begin(), table.rel_ids.end(), rel_id);
  if (ri == table.rel_ids.end())
    throw ValidationError("frontier: unknown relevance measure '" + rel_id + "'");
  const auto fi = std::find(table.fair_ids.begin(), table.fair_ids.end(), fair_id);
  if (fi == table.fair_ids.end())
    throw ValidationError("frontier: unknown fairness measure '" + fair_id + "'");
  const size_t rc = ri - table.rel_ids.begin();
  const size_t fc = fi - table.fair_ids.begin();
  Frontier frontier;
  frontier.rel_id = rel_id;
  frontier.fair_id = fair_id;
  frontier.fair_dir = table.fair_dirs[fc];
  for (size_t row = 0; row < table.checkpoints.size(); ++row)
    frontier.points.push_back(
        {table.rel_scores[row][rc], table.fair_scores[row][fc], table.checkpoints[row]});
  return dedupe_frontier(std::move(frontier));
}

ReferencePoint reference_point(const Frontier& frontier, double alpha) {
  if (frontier.points.empty()) throw ValidationError("reference point: empty frontier");
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw ValidationError("reference point: alpha must be in [0, 1]");
  ReferencePoint ref;
  if (frontier.points.size() == 1) {
    ref.point = frontier.points.front();
    ref.degenerate = true;
    return ref;
  }
  std::vector<double> cum(frontier.points.size(), 0.0);
  for (size_t j = 1; j < frontier.points.size(); ++j) {
    const FrontierPoint& a = frontier.points[j - 1];
    const FrontierPoint& b = frontier.points[j];
    cum[j] = cum[j - 1] + std::hypot(b.rel - a.rel, b.fair - a.fair);
  }
  const double target = alpha * cum.back();
  size_t best = 0;
  for (size_t j = 1; j < cum.size(); ++j)
    if (std::abs(cum[j] - target) < std::abs(cum[best] - target)) best = j;
  ref.point = frontier.points[best];
  ref.index = static_cast<int>(best);
  ref.arc_length = cum[best];
  ref.total_length = cum.back();
  return ref;
}

double dpfr(double model_rel, double model_fair, const FrontierPoint& ref) {
  return std::hypot(model_rel - ref.rel, model_fair - ref.fair);
}

void write_frontier_tsv(std::ostream& os, const FrontierTable& table) {
  os << "# frontier-table v1\n";
  os << "# k " << table.k << "\n";
  os << "# m " << table.m << "\n";
  os << "# n " << table.n << "\n";
  os << "# cap " << table.cap << "\n";
  os << "# total-replacements " << table.total_replacements << "\n";
  os << "# max-count-final " << table.max_count_final << "\n";
  os << "# fair-dir";
  for (Direction dir : table.fair_dirs) os << ' ' << dir_token(dir);
  os << "\n";
  for (const std::string& note : table.notes) os << "# note " << note << "\n";
  os << "checkpoint";
  for (const std::string& id : table.rel_ids) os << '\t' << id;
  for (const std::string& id : table.fair_ids) os << '\t' << id;
  os << "\n";
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (size_t row = 0; row < table.checkpoints.size(); ++row) {
    os << table.checkpoints[row];
    for (double v : table.rel_scores[row]) os << '\t' << v;
    for (double v : table.fair_scores[row]) os << '\t' << v;
    os << "\n";
  }
}

FrontierTable read_frontier_tsv(std::istream& is) {
  FrontierTable table;
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  size_t columns = 0;
  auto fail = [&](const std::string& message) -> ValidationError {
    return ValidationError("frontier tsv: line " + std::to_string(lineno) + ": " + message);
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream meta(line.substr(1));
      std::string key;
      meta >> key;
      if (key == "k") meta >> table.k;
      else if (key == "m") meta >> table.m;
      else if (key == "n") meta >> table.n;
      else if (key == "cap") meta >> table.cap;
      else if (key == "total-replacements") meta >> table.total_replacements;
      else if (key == "max-count-final") meta >> table.max_count_final;
      else if (key == "fair-dir") {
        std::string token;
        while (meta >> token) table.fair_dirs.push_back(dir_from_token(token));
      } else if (key == "note") {
        std::string rest;
        std::getline(meta, rest);
        table.notes.push_back(rest.empty() ? rest : rest.substr(1));
      }
      if (meta.fail() && key != "fair-dir" && key != "note" && key != "frontier-table")
        throw fail("malformed metadata");
      continue;
    }
    std::vector<std::string> cells;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, '\t')) cells.push_back(cell);
    if (!header_seen) {
      if (cells.empty() || cells[0] != "checkpoint") throw fail("expected a header row");
      if (cells.size() < 1 + table.fair_dirs.size() + 1)
        throw fail("fewer columns than fairness directions");
      const size_t nf = table.fair_dirs.size();
      const size_t nr = cells.size() - 1 - nf;
      table.rel_ids.assign(cells.begin() + 1, cells.begin() + 1 + nr);
      table.fair_ids.assign(cells.begin() + 1 + nr, cells.end());
      columns = cells.size();
      header_seen = true;
      continue;
    }
    if (cells.size() != columns) throw fail("wrong column count");
    try {
      size_t used = 0;
      table.checkpoints.push_back(std::stoll(cells[0], &used));
      if (used != cells[0].size()) throw fail("malformed checkpoint");
      std::vector<double> rel, fair;
      for (size_t c = 1; c < columns; ++c) {
        const double v = std::stod(cells[c], &used);
        if (used != cells[c].size()) throw fail("malformed score");
        (c <= table.rel_ids.size() ? rel : fair).push_back(v);
      }
      table.rel_scores.push_back(std::move(rel));
      table.fair_scores.push_back(std::move(fair));
    } catch (const std::invalid_argument&) {
      throw fail("malformed number");
    } catch (const std::out_of_range&) {
      throw fail("number out of range");
    }
  }
  if (!header_seen) throw ValidationError("frontier tsv: missing header row");
  if (table.checkpoints.empty()) throw ValidationError("frontier tsv: no checkpoint rows");
  return table;
}

}  // namespace recfair
