#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "pack/error.hpp"
#include "pack/grid.hpp"

namespace pack {

// First-order Markov chain over object categories.  Row 0 is the virtual
// START state; row i + 1 belongs to categories[i].  Columns are the
// categories in the same (lexicographic) order.
struct TransitionMatrix {
  std::vector<std::string> categories;
  Grid<double> probs;

  std::optional<std::size_t> index_of(const std::string& cat) const {
    auto it = std::lower_bound(categories.begin(), categories.end(), cat);
    if (it == categories.end() || *it != cat) return std::nullopt;
    return static_cast<std::size_t>(it - categories.begin());
  }

  // P(next | prev); prev == nullopt means START.  Unknown categories back
  // off to a uniform row.
  double prob(const std::optional<std::string>& prev, const std::string& next) const {
    const double uniform = 1.0 / static_cast<double>(std::max<std::size_t>(1, categories.size()));
    std::size_t row = 0;
    if (prev) {
      const auto p = index_of(*prev);
      if (!p) return uniform;
      row = *p + 1;
    }
    const auto c = index_of(next);
    return c ? probs(row, *c) : uniform;
  }
};

using DemoCorpus = std::vector<std::vector<std::string>>;

inline TransitionMatrix build_transition_matrix(const DemoCorpus& demos, double smoothing,
                                                const std::vector<std::string>& extra_categories = {}) {
  if (demos.empty()) throw EmptyDataError("no demonstration sequences");
  if (smoothing < 0) throw Error("smoothing must be non-negative");

  TransitionMatrix m;
  for (const auto& d : demos) m.categories.insert(m.categories.end(), d.begin(), d.end());
  m.categories.insert(m.categories.end(), extra_categories.begin(), extra_categories.end());
  std::sort(m.categories.begin(), m.categories.end());
  m.categories.erase(std::unique(m.categories.begin(), m.categories.end()), m.categories.end());
  const std::size_t n = m.categories.size();
  if (n == 0) throw EmptyDataError("demonstrations contain no categories");

  Grid<double> counts(n + 1, n, 0.0);
  for (const auto& d : demos) {
    std::size_t row = 0;
    for (const auto& cat : d) {
      const std::size_t col = *m.index_of(cat);
      counts(row, col) += 1.0;
      row = col + 1;
    }
  }
  m.probs = Grid<double>(n + 1, n, 0.0);
  for (std::size_t r = 0; r <= n; ++r) {
    double total = 0;
    for (std::size_t c = 0; c < n; ++c) total += counts(r, c) + smoothing;
    for (std::size_t c = 0; c < n; ++c)
      m.probs(r, c) = total > 0 ? (counts(r, c) + smoothing) / total : 1.0 / static_cast<double>(n);
  }
  return m;
}

inline bool is_row_stochastic(const TransitionMatrix& m, double tol = 1e-9) {
  if (m.probs.rows() != m.categories.size() + 1 || m.probs.cols() != m.categories.size()) return false;
  for (std::size_t r = 0; r < m.probs.rows(); ++r) {
    double s = 0;
    for (double p : m.probs.row(r)) {
      if (!(p >= 0)) return false;
      s += p;
    }
    if (std::abs(s - 1.0) > tol) return false;
  }
  return true;
}

// --- serialization ---------------------------------------------------------

inline nlohmann::json to_json(const TransitionMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.probs.rows(); ++r)
    rows.push_back(std::vector<double>(m.probs.row(r).begin(), m.probs.row(r).end()));
  return {{"start_token", "START"}, {"categories", m.categories}, {"probs", rows}};
}

inline TransitionMatrix matrix_from_json(const nlohmann::json& j) {
  TransitionMatrix m;
  m.categories = j.at("categories").get<std::vector<std::string>>();
  if (!std::is_sorted(m.categories.begin(), m.categories.end()) ||
      std::adjacent_find(m.categories.begin(), m.categories.end()) != m.categories.end())
    throw Error("matrix categories must be unique and sorted");
  const auto rows = j.at("probs").get<std::vector<std::vector<double>>>();
  const std::size_t n = m.categories.size();
  if (rows.size() != n + 1) throw Error("matrix needs one START row plus one row per category");
  m.probs = Grid<double>(n + 1, n, 0.0);
  for (std::size_t r = 0; r <= n; ++r) {
    if (rows[r].size() != n) throw Error("matrix row " + std::to_string(r) + " has wrong length");
    for (std::size_t c = 0; c < n; ++c) m.probs(r, c) = rows[r][c];
  }
  if (!is_row_stochastic(m)) throw Error("matrix rows are not stochastic");
  return m;
}

// One JSON array of category strings per line; blank lines skipped.
inline DemoCorpus read_demos(std::istream& in) {
  DemoCorpus demos;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      demos.push_back(nlohmann::json::parse(line).get<std::vector<std::string>>());
    } catch (const nlohmann::json::exception& e) {
      throw Error("demo line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return demos;
}

// --- planning ----------------------------------------------------------------

struct PlanItem {
  std::string id;
  std::string category;
};

struct SequencePlan {
  std::vector<std::string> ids;
  double score = 0;  // sum of log transition probabilities
};

struct BeamOptions {
  std::size_t width = 3;       // partial sequences kept per step
  std::size_t branching = 3;   // children expanded per partial
};

// Sum of log P along `order` starting from START.
inline double sequence_score(const TransitionMatrix& m, const std::vector<std::string>& categories) {
  double s = 0;
  std::optional<std::string> prev;
  for (const auto& c : categories) {
    s += std::log(m.prob(prev, c));
    prev = c;
  }
  return s;
}

namespace detail {

// Objects of one category are interchangeable; they are consumed in id order.
struct CategoryPool {
  std::string category;
  std::vector<std::string> ids;  // sorted
};

struct Partial {
  std::vector<std::size_t> cats;     // pool index per step
  std::vector<std::size_t> used;     // per pool
  double score = 0;
};

class BeamPlanner {
 public:
  BeamPlanner(const TransitionMatrix& m, const std::vector<PlanItem>& items) : m_(m) {
    std::map<std::string, std::vector<std::string>> groups;
    for (const auto& it : items) groups[it.category].push_back(it.id);
    for (auto& [cat, ids] : groups) {
      std::sort(ids.begin(), ids.end());
      pools_.push_back({cat, std::move(ids)});
    }
    total_ = items.size();
    // log P(next pool | prev pool), row 0 = START.
    logp_ = Grid<double>(pools_.size() + 1, pools_.size(), 0.0);
    for (std::size_t r = 0; r <= pools_.size(); ++r)
      for (std::size_t c = 0; c < pools_.size(); ++c) {
        const std::optional<std::string> prev = r == 0 ? std::nullopt : std::optional(pools_[r - 1].category);
        logp_(r, c) = std::log(m_.prob(prev, pools_[c].category));
      }
  }

  std::size_t total() const { return total_; }

  Partial root() const { return {{}, std::vector<std::size_t>(pools_.size(), 0), 0.0}; }

  // Children ordered best-first: log-prob descending, then category name.
  std::vector<std::pair<std::size_t, double>> ranked_children(const Partial& p) const {
    const std::size_t row = p.cats.empty() ? 0 : p.cats.back() + 1;
    std::vector<std::pair<std::size_t, double>> out;
    for (std::size_t c = 0; c < pools_.size(); ++c)
      if (p.used[c] < pools_[c].ids.size()) out.emplace_back(c, logp_(row, c));
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    return out;
  }

  Partial extend(const Partial& p, std::size_t pool, double lp) const {
    Partial q = p;
    q.cats.push_back(pool);
    ++q.used[pool];
    q.score += lp;
    return q;
  }

  Partial complete_greedily(Partial p) const {
    while (p.cats.size() < total_) {
      const auto kids = ranked_children(p);
      p = extend(p, kids.front().first, kids.front().second);
    }
    return p;
  }

  // Score descending; ties by category sequence (pools are sorted by name so
  // index order is lexicographic order).  Ids follow from categories.
  static bool better(const Partial& a, const Partial& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.cats < b.cats;
  }

  SequencePlan to_plan(const Partial& p) const {
    SequencePlan plan;
    plan.score = p.score;
    std::vector<std::size_t> next(pools_.size(), 0);
    for (std::size_t c : p.cats) plan.ids.push_back(pools_[c].ids[next[c]++]);
    return plan;
  }

 private:
  const TransitionMatrix& m_;
  std::vector<CategoryPool> pools_;
  std::size_t total_ = 0;
  Grid<double> logp_;
};

}  // namespace detail

// Beam search over the chain.  Each kept partial expands its `branching`
// most probable unused categories; the best `width` partials survive each
// step.  Every surviving partial is also completed greedily and the best
// completion is kept as an incumbent, so the result never scores below the
// width-1 (greedy) plan.
inline SequencePlan beam_plan(const TransitionMatrix& m, const std::vector<PlanItem>& items, BeamOptions opt = {}) {
  if (items.empty()) return {};
  if (opt.width == 0 || opt.branching == 0) throw Error("beam width and branching must be >= 1");
  detail::BeamPlanner bp(m, items);

  std::vector<detail::Partial> beam{bp.root()};
  std::optional<detail::Partial> incumbent;
  auto offer = [&](const detail::Partial& p) {
    if (!incumbent || detail::BeamPlanner::better(p, *incumbent)) incumbent = p;
  };

  for (std::size_t step = 0; step < bp.total(); ++step) {
    std::vector<detail::Partial> next;
    for (const auto& p : beam) {
      const auto kids = bp.ranked_children(p);
      for (std::size_t k = 0; k < std::min(opt.branching, kids.size()); ++k)
        next.push_back(bp.extend(p, kids[k].first, kids[k].second));
    }
    std::sort(next.begin(), next.end(), detail::BeamPlanner::better);
    if (next.size() > opt.width) next.resize(opt.width);
    beam = std::move(next);
    for (const auto& p : beam) offer(bp.complete_greedily(p));
  }
  for (const auto& p : beam) offer(p);
  return bp.to_plan(*incumbent);
}

inline SequencePlan beam3_plan(const TransitionMatrix& m, const std::vector<PlanItem>& items) {
  return beam_plan(m, items, {3, 3});
}

inline SequencePlan greedy_plan(const TransitionMatrix& m, const std::vector<PlanItem>& items) {
  return beam_plan(m, items, {1, 1});
}

// Variety mode: at every step sample the next category from the
// renormalized top-`branching` distribution.
inline SequencePlan sampled_plan(const TransitionMatrix& m, const std::vector<PlanItem>& items, std::mt19937_64& rng,
                                 std::size_t branching = 3) {
  if (items.empty()) return {};
  detail::BeamPlanner bp(m, items);
  detail::Partial p = bp.root();
  while (p.cats.size() < bp.total()) {
    auto kids = bp.ranked_children(p);
    kids.resize(std::min(kids.size(), branching));
    double total = 0;
    for (const auto& k : kids) total += std::exp(k.second);
    // 53-bit uniform from raw engine output keeps runs identical across standard libraries.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * total;
    double acc = 0;
    std::size_t pick = kids.size() - 1;
    for (std::size_t k = 0; k < kids.size(); ++k) {
      acc += std::exp(kids[k].second);
      if (u < acc) {
        pick = k;
        break;
      }
    }
    p = bp.extend(p, kids[pick].first, kids[pick].second);
  }
  return bp.to_plan(p);
}

}  // namespace pack
