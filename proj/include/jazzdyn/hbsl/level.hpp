#pragma once

#include <limits>
#include <map>
#include <string>
#include <vector>

#include "jazzdyn/error.hpp"
#include "jazzdyn/hbsl/info.hpp"

namespace jazzdyn::hbsl {

// Which variance the reliability inverts.
enum class VarianceTarget {
  Symbol,  // Var(p_symbol) of the posterior Dirichlet marginal
  Total,   // sum of all component variances
};

// Order-n Markov model over a categorical alphabet with a symmetric Dirichlet prior.
class DirichletMarkovLevel {
 public:
  DirichletMarkovLevel(int alphabet_size, double alpha = 1.0, int order = 1, int level_index = 0)
      : k_(alphabet_size), alpha_(alpha), order_(order), level_(level_index) {
    if (alphabet_size < 0) throw Error(Errc::BadValue, "negative alphabet size");
    if (!(alpha > 0.0)) throw Error(Errc::BadValue, "alpha must be positive");
    if (order < 1) throw Error(Errc::BadValue, "order must be >= 1");
  }

  int alphabet_size() const { return k_; }
  double alpha() const { return alpha_; }
  int order() const { return order_; }
  int level_index() const { return level_; }
  const std::map<Context, std::vector<double>>& counts() const { return counts_; }

  Context start_context() const { return Context(static_cast<std::size_t>(order_), kStart); }

  void grow(int new_size) {
    if (new_size > k_) k_ = new_size;
  }

  void check_symbol(int s) const {
    if (s < 0 || s >= k_)
      throw Error(Errc::InvalidSymbol, "symbol " + std::to_string(s) + " not in alphabet of size " +
                                           std::to_string(k_));
  }

  void check_context(const Context& ctx) const {
    if (static_cast<int>(ctx.size()) != order_)
      throw Error(Errc::InvalidSymbol, "context length " + std::to_string(ctx.size()) + " != order " +
                                           std::to_string(order_));
    for (int s : ctx)
      if (s != kStart) check_symbol(s);
  }

  double count(const Context& ctx, int s) const {
    auto it = counts_.find(ctx);
    if (it == counts_.end() || s >= static_cast<int>(it->second.size())) return 0.0;
    return it->second[s];
  }

  double total(const Context& ctx) const {
    auto it = totals_.find(ctx);
    return it == totals_.end() ? 0.0 : it->second;
  }

  void add(const Context& ctx, int s, double weight = 1.0) {
    check_context(ctx);
    check_symbol(s);
    if (!(weight >= 0.0)) throw Error(Errc::BadValue, "negative count");
    auto& row = counts_[ctx];
    if (static_cast<int>(row.size()) <= s) row.resize(static_cast<std::size_t>(s) + 1, 0.0);
    row[s] += weight;
    totals_[ctx] += weight;
  }

  // Posterior Dirichlet parameters (counts + alpha) for one cell and their sum.
  double posterior_param(const Context& ctx, int s) const { return count(ctx, s) + alpha_; }
  double posterior_total(const Context& ctx) const { return total(ctx) + k_ * alpha_; }

 private:
  int k_;
  double alpha_;
  int order_;
  int level_;
  std::map<Context, std::vector<double>> counts_;
  std::map<Context, double> totals_;
};

inline PredictiveDistribution predictive_distribution(const DirichletMarkovLevel& level, const Context& ctx) {
  level.check_context(ctx);
  const int k = level.alphabet_size();
  PredictiveDistribution d;
  d.context = ctx;
  d.probs.assign(static_cast<std::size_t>(k), 0.0);
  if (k == 0) return d;
  const double denom = level.posterior_total(ctx);
  for (int i = 0; i < k; ++i) d.probs[i] = level.posterior_param(ctx, i) / denom;
  return d;
}

// Inverse variance of the posterior estimate of P(symbol | ctx).
inline double reliability(const DirichletMarkovLevel& level, const Context& ctx, int symbol,
                          VarianceTarget target = VarianceTarget::Symbol) {
  level.check_context(ctx);
  level.check_symbol(symbol);
  const double a0 = level.posterior_total(ctx);
  double var = 0.0;
  if (target == VarianceTarget::Symbol) {
    const double m = level.posterior_param(ctx, symbol) / a0;
    var = m * (1.0 - m) / (a0 + 1.0);
  } else {
    double sumsq = 0.0;
    for (int i = 0; i < level.alphabet_size(); ++i) {
      const double m = level.posterior_param(ctx, i) / a0;
      sumsq += m * m;
    }
    var = (1.0 - sumsq) / (a0 + 1.0);
  }
  if (!(var > 0.0)) return std::numeric_limits<double>::infinity();
  return 1.0 / var;
}

}  // namespace jazzdyn::hbsl
