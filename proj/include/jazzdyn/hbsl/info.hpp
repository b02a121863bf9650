#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "jazzdyn/error.hpp"

namespace jazzdyn::hbsl {

// Context symbols are level-local indices; kStart pads the context before the first event.
inline constexpr int kStart = -1;
using Context = std::vector<int>;

struct PredictiveDistribution {
  std::vector<double> probs;
  Context context;

  int size() const { return static_cast<int>(probs.size()); }
};

namespace detail {

// Sums after sorting so the result does not depend on symbol labelling.
inline double sorted_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

}  // namespace detail

// Shannon information content -log2(p), in bits.
inline double information_content(double p) {
  if (!(p > 0.0)) throw Error(Errc::NonpositiveProbability, "p = " + std::to_string(p));
  return -std::log2(p);
}

inline double entropy(const PredictiveDistribution& dist) {
  std::vector<double> terms;
  terms.reserve(dist.probs.size());
  for (double p : dist.probs)
    if (p > 0.0) terms.push_back(-p * std::log2(p));
  return std::max(0.0, detail::sorted_sum(terms));
}

// D_KL(P || Q) in bits.
inline double kl_divergence(const PredictiveDistribution& p, const PredictiveDistribution& q) {
  if (p.probs.size() != q.probs.size())
    throw Error(Errc::AlphabetMismatch,
                "K=" + std::to_string(p.probs.size()) + " vs K=" + std::to_string(q.probs.size()));
  std::vector<double> terms;
  terms.reserve(p.probs.size());
  for (std::size_t i = 0; i < p.probs.size(); ++i) {
    const double pi = p.probs[i], qi = q.probs[i];
    if (pi <= 0.0) continue;
    if (qi <= 0.0)
      throw Error(Errc::AbsoluteContinuityViolation, "Q(" + std::to_string(i) + ") = 0 where P > 0");
    terms.push_back(pi * std::log2(pi / qi));
  }
  return std::max(0.0, detail::sorted_sum(terms));
}

}  // namespace jazzdyn::hbsl
