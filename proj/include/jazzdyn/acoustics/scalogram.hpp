#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "jazzdyn/acoustics/fft.hpp"
#include "jazzdyn/acoustics/signal.hpp"
#include "jazzdyn/dynamics/dynamics.hpp"
#include "jazzdyn/error.hpp"
#include "jazzdyn/format.hpp"

namespace jazzdyn::acoustics {

struct ScalogramConfig {
  double f_min = 0.1;
  double f_max = 40.0;
  int bands = 24;
  double omega0 = 6.0;
};

struct Scalogram {
  std::vector<double> frequencies;         // Hz, increasing
  std::vector<std::vector<double>> power;  // bands x frames
  double frame_rate = 200.0;

  std::vector<double> band_means() const {
    std::vector<double> out;
    out.reserve(power.size());
    for (const auto& row : power) {
      double s = 0.0;
      for (double v : row) s += v;
      out.push_back(row.empty() ? 0.0 : s / static_cast<double>(row.size()));
    }
    return out;
  }
};

inline std::vector<double> log_spaced(double lo, double hi, int n) {
  std::vector<double> f(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    f[static_cast<std::size_t>(i)] = n == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  return f;
}

// Morlet CWT of the mean-removed envelope, computed in the frequency domain.
// Scale for frequency f: s = (w0 + sqrt(2 + w0^2)) / (4 pi f).
inline Scalogram scalogram(const EnvelopeDecomposition& env, const ScalogramConfig& cfg = {}) {
  if (cfg.bands < 1 || !(cfg.f_min > 0.0) || !(cfg.f_max > cfg.f_min))
    throw Error(Errc::BadValue, "bad scalogram band layout");
  const std::size_t n = env.envelope.size();
  const double dt = 1.0 / env.rate;
  if (static_cast<double>(n) * dt < 1.0 / cfg.f_min)
    throw Error(Errc::TooShort, "envelope of " + std::to_string(n) + " frames is shorter than one period of " +
                                    fmt9(cfg.f_min) + " Hz");
  Scalogram sc;
  sc.frame_rate = env.rate;
  sc.frequencies = log_spaced(cfg.f_min, cfg.f_max, cfg.bands);

  double mean = 0.0;
  for (double v : env.envelope) mean += v;
  mean /= static_cast<double>(n);
  const std::size_t total = fast_size(2 * n);
  std::vector<cplx> x(total, 0.0);
  for (std::size_t i = 0; i < n; ++i) x[i] = env.envelope[i] - mean;
  fft(x);

  const double norm0 = std::pow(std::numbers::pi, -0.25);
  const double fourier = (cfg.omega0 + std::sqrt(2.0 + cfg.omega0 * cfg.omega0)) / (4.0 * std::numbers::pi);
  sc.power.resize(sc.frequencies.size());
  for (std::size_t b = 0; b < sc.frequencies.size(); ++b) {
    const double s = fourier / sc.frequencies[b];
    const double scale_norm = std::sqrt(2.0 * std::numbers::pi * s / dt);
    std::vector<cplx> w(total, 0.0);
    for (std::size_t k = 1; k <= total / 2; ++k) {
      const double omega = 2.0 * std::numbers::pi * static_cast<double>(k) / (static_cast<double>(total) * dt);
      const double arg = s * omega - cfg.omega0;
      w[k] = x[k] * (scale_norm * norm0 * std::exp(-0.5 * arg * arg));
    }
    ifft(w);
    auto& row = sc.power[b];
    row.resize(n);
    for (std::size_t i = 0; i < n; ++i) row[i] = std::norm(w[i]);
  }
  return sc;
}

struct GroupedSpectra {
  std::map<std::string, std::vector<double>> means;  // group label -> per-band mean power
  std::map<std::string, std::size_t> counts;
  std::vector<std::string> warnings;
};

// Per-piece band means averaged (unweighted) over the pieces of each group.
// Labels in `expected` with no pieces are dropped with an EmptyGroup warning.
inline GroupedSpectra mean_power_by_group(
    const std::vector<std::pair<dynamics::RowMetadata, std::vector<double>>>& pieces, dynamics::GroupKey key,
    const std::vector<std::string>& expected = {}) {
  GroupedSpectra g;
  for (const auto& [meta, bands] : pieces) {
    const auto label = dynamics::group_label(meta, key);
    auto& acc = g.means[label];
    if (acc.empty()) acc.assign(bands.size(), 0.0);
    if (acc.size() != bands.size()) throw Error(Errc::BadValue, "band count differs between pieces");
    for (std::size_t i = 0; i < bands.size(); ++i) acc[i] += bands[i];
    ++g.counts[label];
  }
  for (auto& [label, acc] : g.means)
    for (auto& v : acc) v /= static_cast<double>(g.counts[label]);
  for (const auto& label : expected)
    if (!g.means.count(label))
      g.warnings.push_back(std::string(to_string(Errc::EmptyGroup)) + ": " + dynamics::to_string(key) + " '" +
                           label + "' has no pieces; omitted");
  return g;
}

// Rows are bands: band_hz, then one power value per frame.
inline void write_scalogram_csv(std::ostream& out, const Scalogram& sc) {
  out << "band_hz";
  const std::size_t frames = sc.power.empty() ? 0 : sc.power[0].size();
  for (std::size_t j = 0; j < frames; ++j) out << ",f" << j;
  out << '\n';
  for (std::size_t b = 0; b < sc.power.size(); ++b) {
    out << fmt9(sc.frequencies[b]);
    for (double v : sc.power[b]) out << ',' << fmt9(v);
    out << '\n';
  }
}

inline void write_group_spectra_csv(std::ostream& out, const GroupedSpectra& g, const std::vector<double>& freqs,
                                    dynamics::GroupKey key) {
  out << dynamics::to_string(key) << ",n_pieces";
  for (double f : freqs) out << ",hz_" << fmt9(f);
  out << '\n';
  for (const auto& [label, means] : g.means) {
    out << corpus::csv_quote(label) << ',' << g.counts.at(label);
    for (double v : means) out << ',' << fmt9(v);
    out << '\n';
  }
}

// Least-squares slope of log10(power) on log10(frequency); non-positive power is skipped.
inline double loglog_slope(const std::vector<double>& freqs, const std::vector<double>& power) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < freqs.size() && i < power.size(); ++i) {
    if (!(power[i] > 0.0)) continue;
    const double x = std::log10(freqs[i]), y = std::log10(power[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return 0.0;
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace jazzdyn::acoustics
