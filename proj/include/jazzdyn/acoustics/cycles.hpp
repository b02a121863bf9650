#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "jazzdyn/acoustics/signal.hpp"
#include "jazzdyn/error.hpp"
#include "jazzdyn/format.hpp"

namespace jazzdyn::acoustics {

inline constexpr double kRateBinWidth = 0.02;

struct CycleStats {
  std::vector<std::size_t> trough_indices;
  std::vector<double> cycle_lengths;     // s
  std::vector<double> horizontal_rates;  // c_k / (c_k + c_{k+1})
  std::vector<double> density;           // bin k centred at k * 0.02, k = 0..50
};

inline std::size_t rate_bin(double r) {
  const long k = std::lround(r / kRateBinWidth);
  return static_cast<std::size_t>(std::clamp(k, 0L, std::lround(1.0 / kRateBinWidth)));
}

inline double rate_bin_center(std::size_t k) { return static_cast<double>(k) * kRateBinWidth; }

inline std::vector<double> rate_density(const std::vector<double>& rates) {
  std::vector<double> d(rate_bin(1.0) + 1, 0.0);
  if (rates.empty()) return d;
  for (double r : rates) d[rate_bin(r)] += 1.0;
  for (auto& v : d) v /= static_cast<double>(rates.size());
  return d;
}

// Fraction of rates within `tol` of `center`.
inline double mass_near(const std::vector<double>& rates, double center, double tol) {
  if (rates.empty()) return 0.0;
  std::size_t c = 0;
  for (double r : rates) c += std::abs(r - center) <= tol + 1e-12;
  return static_cast<double>(c) / static_cast<double>(rates.size());
}

namespace cycles_detail {

// Local maxima; a flat top reports its middle sample.
inline std::vector<std::size_t> local_maxima(const std::vector<double>& x) {
  std::vector<std::size_t> peaks;
  std::size_t i = 1;
  const std::size_t last = x.size() > 0 ? x.size() - 1 : 0;
  while (i < last) {
    if (x[i - 1] < x[i]) {
      std::size_t ahead = i + 1;
      while (ahead < last && x[ahead] == x[i]) ++ahead;
      if (x[ahead] < x[i]) {
        peaks.push_back((i + ahead - 1) / 2);
        i = ahead;
      }
    }
    ++i;
  }
  return peaks;
}

inline double prominence(const std::vector<double>& x, std::size_t p) {
  double left_min = x[p];
  for (std::size_t i = p; i-- > 0;) {
    if (x[i] > x[p]) break;
    left_min = std::min(left_min, x[i]);
  }
  double right_min = x[p];
  for (std::size_t i = p + 1; i < x.size(); ++i) {
    if (x[i] > x[p]) break;
    right_min = std::min(right_min, x[i]);
  }
  return x[p] - std::max(left_min, right_min);
}

}  // namespace cycles_detail

// Troughs are the minima between consecutive prominent peaks, prominence measured
// as for peak picking against (max - min) of the envelope. When the minimum is
// attained on several samples (clipped silence) the last one, right before the
// next rise, is reported.
inline std::vector<std::size_t> detect_troughs(const std::vector<double>& env, double min_prominence_frac = 0.05) {
  if (env.empty()) throw Error(Errc::EmptyInput, "empty envelope");
  const auto [lo, hi] = std::minmax_element(env.begin(), env.end());
  const double range = *hi - *lo;
  std::vector<std::size_t> out;
  if (!(range > 0.0)) return out;
  const double thr = min_prominence_frac * range;
  std::vector<std::size_t> peaks;
  for (auto p : cycles_detail::local_maxima(env))
    if (cycles_detail::prominence(env, p) >= thr) peaks.push_back(p);
  for (std::size_t k = 0; k + 1 < peaks.size(); ++k) {
    const auto a = peaks[k], b = peaks[k + 1];
    const double m = *std::min_element(env.begin() + static_cast<long>(a), env.begin() + static_cast<long>(b) + 1);
    std::size_t last = a;
    for (std::size_t i = a; i <= b; ++i)
      if (env[i] == m) last = i;
    out.push_back(last);
  }
  return out;
}

inline std::vector<std::size_t> detect_troughs(const EnvelopeDecomposition& d, double min_prominence_frac = 0.05) {
  return detect_troughs(d.envelope, min_prominence_frac);
}

inline CycleStats horizontal_rates(const std::vector<std::size_t>& troughs, double frame_rate) {
  if (troughs.size() < 3)
    throw Error(Errc::TooFewCycles, "need at least 3 troughs, got " + std::to_string(troughs.size()));
  if (!(frame_rate > 0.0)) throw Error(Errc::BadValue, "frame rate must be positive");
  CycleStats cs;
  cs.trough_indices = troughs;
  for (std::size_t i = 1; i < troughs.size(); ++i) {
    if (troughs[i] <= troughs[i - 1]) throw Error(Errc::BadValue, "trough indices must increase");
    cs.cycle_lengths.push_back(static_cast<double>(troughs[i] - troughs[i - 1]) / frame_rate);
  }
  for (std::size_t k = 0; k + 1 < cs.cycle_lengths.size(); ++k)
    cs.horizontal_rates.push_back(cs.cycle_lengths[k] / (cs.cycle_lengths[k] + cs.cycle_lengths[k + 1]));
  cs.density = rate_density(cs.horizontal_rates);
  return cs;
}

// Same contract from cycle lengths directly.
inline CycleStats rates_from_cycles(const std::vector<double>& cycles) {
  if (cycles.size() < 2) throw Error(Errc::TooFewCycles, "need at least 2 cycles");
  CycleStats cs;
  cs.cycle_lengths = cycles;
  for (std::size_t k = 0; k + 1 < cycles.size(); ++k)
    cs.horizontal_rates.push_back(cycles[k] / (cycles[k] + cycles[k + 1]));
  cs.density = rate_density(cs.horizontal_rates);
  return cs;
}

inline void write_density_csv(std::ostream& out, const std::vector<double>& density) {
  out << "bin_center,probability\n";
  for (std::size_t k = 0; k < density.size(); ++k) out << fmt9(rate_bin_center(k)) << ',' << fmt9(density[k]) << '\n';
}

}  // namespace jazzdyn::acoustics
