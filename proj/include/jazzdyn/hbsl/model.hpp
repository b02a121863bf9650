#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "jazzdyn/corpus/symbolize.hpp"
#include "jazzdyn/error.hpp"
#include "jazzdyn/hbsl/info.hpp"
#include "jazzdyn/hbsl/level.hpp"

namespace jazzdyn::hbsl {

enum class ProbabilityNorm {
  AlphabetSize,  // p_hat = K * p, so a uniform predictive gives 1
  Raw,
};

enum class ReliabilityNorm {
  Median,  // r_hat = r / running median of r at this level
  Raw,
};

struct HbslConfig {
  double alpha = 1.0;
  double gate_constant = 5.0;
  int max_levels = 3;
  int order = 1;
  ProbabilityNorm probability_norm = ProbabilityNorm::AlphabetSize;
  ReliabilityNorm reliability_norm = ReliabilityNorm::Median;
  VarianceTarget variance_target = VarianceTarget::Symbol;

  void validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error(Errc::BadValue, "alpha must be positive");
    if (!(gate_constant > 0.0) || !std::isfinite(gate_constant))
      throw Error(Errc::BadValue, "gate constant must be positive");
    if (max_levels < 1) throw Error(Errc::BadValue, "max_levels must be >= 1");
    if (order < 1) throw Error(Errc::BadValue, "order must be >= 1");
  }
};

struct ObserveRecord {
  double surprise_bits = 0.0;
  double bayesian_surprise_bits = 0.0;
  double entropy_bits = 0.0;
};

struct ChunkNode {
  int chunk_id = 0;
  std::array<int, 2> children{};  // global symbol ids at level_index
  int level_index = 0;
  long created_at = 0;  // level-0 event index when the gate fired

  friend bool operator==(const ChunkNode&, const ChunkNode&) = default;
};

// Streaming median with two heaps.
class RunningMedian {
 public:
  void push(double v) {
    if (lower_.empty() || v <= lower_.top()) lower_.push(v);
    else upper_.push(v);
    if (lower_.size() > upper_.size() + 1) {
      upper_.push(lower_.top());
      lower_.pop();
    } else if (upper_.size() > lower_.size()) {
      lower_.push(upper_.top());
      upper_.pop();
    }
  }

  std::size_t size() const { return lower_.size() + upper_.size(); }

  double median() const {
    if (lower_.empty()) return std::numeric_limits<double>::quiet_NaN();
    if (lower_.size() > upper_.size()) return lower_.top();
    return 0.5 * (lower_.top() + upper_.top());
  }

 private:
  std::priority_queue<double> lower_;
  std::priority_queue<double, std::vector<double>, std::greater<>> upper_;
};

// Gate: normalized probability times normalized reliability above c promotes the
// transition (last context symbol, symbol) to a chunk. Returns the gate score.
inline double gate_score(const DirichletMarkovLevel& level, const Context& ctx, int symbol,
                         double median_reliability, const HbslConfig& cfg) {
  const int k = level.alphabet_size();
  if (k < 2) return 0.0;  // degenerate Dirichlet: no variance to invert
  const double p = level.posterior_param(ctx, symbol) / level.posterior_total(ctx);
  const double r = reliability(level, ctx, symbol, cfg.variance_target);
  const double p_hat = cfg.probability_norm == ProbabilityNorm::AlphabetSize ? k * p : p;
  const double r_hat = cfg.reliability_norm == ReliabilityNorm::Median ? r / median_reliability : r;
  return p_hat * r_hat;
}

// Online hierarchical learner: level 0 sees the symbol stream; each higher level
// sees the stream below with chunked pairs rewritten into chunk ids.
class HbslModel {
 public:
  struct Level {
    DirichletMarkovLevel dm;
    std::vector<int> alphabet;             // local index -> global id
    std::unordered_map<int, int> local;    // global id -> local index
    Context context;                       // local indices
    RunningMedian reliability_median;
    std::map<std::pair<int, int>, int> chunk_of;  // (global, global) -> chunk id
    std::optional<int> pending;            // rewrite buffer toward the next level
    int last_symbol = kStart;              // global id of the previous symbol
    long events = 0;
  };

  HbslModel(int base_alphabet_size, HbslConfig cfg = {}) : cfg_(cfg), next_id_(base_alphabet_size) {
    cfg_.validate();
    if (base_alphabet_size < 1) throw Error(Errc::BadValue, "empty alphabet");
    levels_.reserve(static_cast<std::size_t>(cfg_.max_levels));
    add_level();
    for (int i = 0; i < base_alphabet_size; ++i) admit(0, i);
  }

  const HbslConfig& config() const { return cfg_; }
  const std::vector<Level>& levels() const { return levels_; }
  const std::vector<ChunkNode>& chunks() const { return chunks_; }
  long observed_events() const { return observed_; }
  int base_alphabet_size() const { return levels_[0].dm.alphabet_size(); }

  std::vector<ChunkNode> chunks_at(int level) const {
    std::vector<ChunkNode> out;
    for (const auto& c : chunks_)
      if (c.level_index == level) out.push_back(c);
    return out;
  }

  // Adds prior pseudo-observations to level 0 (corpus-primed learning).
  void prime(const Context& ctx, int symbol, double weight) { levels_[0].dm.add(ctx, symbol, weight); }

  // Observes one level-0 symbol and returns its level-0 dynamics record.
  ObserveRecord observe(int symbol) {
    levels_[0].dm.check_symbol(symbol);
    ObserveRecord rec;
    feed(0, symbol, &rec);
    ++observed_;
    return rec;
  }

  // Pushes buffered rewrite symbols up the hierarchy at end of input.
  void finish() {
    for (std::size_t l = 0; l + 1 < levels_.size(); ++l) {
      if (levels_[l].pending) {
        int s = *levels_[l].pending;
        levels_[l].pending.reset();
        feed(static_cast<int>(l) + 1, s, nullptr);
      }
    }
  }

 private:
  void add_level() {
    const int idx = static_cast<int>(levels_.size());
    Level lv{DirichletMarkovLevel(0, cfg_.alpha, cfg_.order, idx), {}, {}, {}, {}, {}, {}, kStart, 0};
    lv.context = lv.dm.start_context();
    levels_.push_back(std::move(lv));
  }

  // Level L alphabet = level L-1 alphabet plus chunks formed at L-1.
  void admit(int level, int global_id) {
    for (std::size_t l = static_cast<std::size_t>(level); l < levels_.size(); ++l) {
      Level& lv = levels_[l];
      if (lv.local.count(global_id)) continue;
      lv.local.emplace(global_id, static_cast<int>(lv.alphabet.size()));
      lv.alphabet.push_back(global_id);
      lv.dm.grow(static_cast<int>(lv.alphabet.size()));
    }
  }

  void feed(int level, int global_symbol, ObserveRecord* out) {
    Level* lv = &levels_[level];
    const int s = lv->local.at(global_symbol);
    const Context ctx = lv->context;

    const auto before = predictive_distribution(lv->dm, ctx);
    lv->dm.add(ctx, s);
    if (out) {
      const auto after = predictive_distribution(lv->dm, ctx);
      out->surprise_bits = information_content(before.probs[s]);
      out->entropy_bits = entropy(before);
      out->bayesian_surprise_bits = kl_divergence(before, after);
    }

    const int prev = lv->last_symbol;
    if (level + 1 < cfg_.max_levels && lv->dm.alphabet_size() >= 2) {
      const double r = reliability(lv->dm, ctx, s, cfg_.variance_target);
      lv->reliability_median.push(r);
      const double score = gate_score(lv->dm, ctx, s, lv->reliability_median.median(), cfg_);
      if (score > cfg_.gate_constant && prev != kStart && !lv->chunk_of.count({prev, global_symbol})) {
        const bool new_level = level + 1 >= static_cast<int>(levels_.size());
        if (new_level) add_level();
        lv = &levels_[level];  // add_level may reallocate
        const int id = next_id_++;
        chunks_.push_back({id, {prev, global_symbol}, level, observed_});
        lv->chunk_of.emplace(std::make_pair(prev, global_symbol), id);
        if (new_level) {
          for (int g : lv->alphabet) admit(level + 1, g);
          lv->pending = prev;  // the triggering occurrence is the first rewrite
        }
        admit(level + 1, id);
      }
    }

    lv->context.erase(lv->context.begin());
    lv->context.push_back(s);
    lv->last_symbol = global_symbol;
    ++lv->events;

    if (level + 1 < static_cast<int>(levels_.size())) rewrite_up(level, global_symbol);
  }

  // Greedy left-to-right, non-overlapping pair replacement.
  void rewrite_up(int level, int global_symbol) {
    Level& lv = levels_[level];
    if (lv.pending) {
      auto it = lv.chunk_of.find({*lv.pending, global_symbol});
      if (it != lv.chunk_of.end()) {
        lv.pending.reset();
        feed(level + 1, it->second, nullptr);
        return;
      }
      const int flushed = *lv.pending;
      lv.pending = global_symbol;
      feed(level + 1, flushed, nullptr);
      return;
    }
    lv.pending = global_symbol;
  }

  HbslConfig cfg_;
  int next_id_;
  long observed_ = 0;
  std::vector<Level> levels_;
  std::vector<ChunkNode> chunks_;
};

struct HierarchyResult {
  HbslModel model;
  std::vector<ObserveRecord> dynamics;               // one per level-0 event
  std::vector<std::vector<ChunkNode>> chunks_by_level;
};

inline HierarchyResult learn_hierarchy(const std::vector<int>& symbols, int alphabet_size,
                                       const HbslConfig& cfg = {}) {
  if (symbols.empty()) throw Error(Errc::EmptySequence, "cannot learn from an empty sequence");
  HierarchyResult res{HbslModel(alphabet_size, cfg), {}, {}};
  res.dynamics.reserve(symbols.size());
  for (int s : symbols) res.dynamics.push_back(res.model.observe(s));
  res.model.finish();
  res.chunks_by_level.resize(static_cast<std::size_t>(cfg.max_levels));
  for (const auto& c : res.model.chunks()) res.chunks_by_level[c.level_index].push_back(c);
  return res;
}

inline HierarchyResult learn_hierarchy(const corpus::SymbolSequence& seq, const HbslConfig& cfg = {}) {
  if (seq.symbols.empty())
    throw Error(Errc::EmptySequence, "sequence for '" + seq.piece_id + "' is empty");
  return learn_hierarchy(seq.symbols, seq.alphabet_size(), cfg);
}

}  // namespace jazzdyn::hbsl
