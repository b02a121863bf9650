#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "jazzdyn/acoustics/fft.hpp"
#include "jazzdyn/acoustics/wav.hpp"
#include "jazzdyn/corpus/types.hpp"
#include "jazzdyn/error.hpp"

namespace jazzdyn::acoustics {

struct SynthConfig {
  double attack = 0.010;  // s, linear
  double decay_tau = 0.3;  // s
  double release_tail = 0.050;  // s past the notated duration, raised-cosine fade to silence
};

struct DemodConfig {
  double cutoff = 40.0;
  double epsilon = 1e-6;
  int iterations = 10;
  double taper_fraction = 0.5;  // cosine transition width as a fraction of the cutoff
  double pad_seconds = 1.0;
};

struct EnvelopeDecomposition {
  std::vector<double> envelope;
  std::vector<double> carrier;  // empty after decimation
  double cutoff = 40.0;
  double rate = 16000.0;  // samples per second of envelope/carrier
};

inline double midi_frequency(int pitch) { return 440.0 * std::pow(2.0, (pitch - 69) / 12.0); }

inline Waveform synthesize(const corpus::Piece& piece, double sample_rate = 16000.0, const SynthConfig& cfg = {}) {
  if (piece.events.empty()) throw Error(Errc::EmptyPiece, "piece '" + piece.id + "' has no notes to render");
  if (!(sample_rate > 80.0)) throw Error(Errc::BadValue, "sample rate must exceed 80 Hz");
  double end = 0.0;
  for (const auto& e : piece.events) end = std::max(end, e.onset + e.duration + cfg.release_tail);
  Waveform w;
  w.sample_rate = sample_rate;
  w.samples.assign(static_cast<std::size_t>(std::ceil(end * sample_rate)) + 1, 0.0);
  const double dt = 1.0 / sample_rate;
  for (const auto& e : piece.events) {
    const double f = midi_frequency(e.pitch);
    const auto start = static_cast<std::size_t>(std::llround(e.onset * sample_rate));
    const auto len = static_cast<std::size_t>(std::llround((e.duration + cfg.release_tail) * sample_rate));
    for (std::size_t k = 0; k < len && start + k < w.samples.size(); ++k) {
      const double t = static_cast<double>(k) * dt;
      double amp = t < cfg.attack ? t / cfg.attack : std::exp(-(t - cfg.attack) / cfg.decay_tau);
      if (t > e.duration && cfg.release_tail > 0.0)
        amp *= 0.5 * (1.0 + std::cos(std::numbers::pi * std::min(1.0, (t - e.duration) / cfg.release_tail)));
      w.samples[start + k] += amp * std::sin(2.0 * std::numbers::pi * f * t);
    }
  }
  double peak = 0.0;
  for (double v : w.samples) peak = std::max(peak, std::abs(v));
  if (peak > 0.0)
    for (auto& v : w.samples) v /= peak;
  return w;
}

// Population z-score.
inline Waveform zscore(const Waveform& in) {
  const std::size_t n = in.samples.size();
  if (n < 2) throw Error(Errc::ZeroVariance, "z-score needs at least two samples");
  const double mean = std::accumulate(in.samples.begin(), in.samples.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : in.samples) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n));
  if (!(sd > 0.0)) throw Error(Errc::ZeroVariance, "signal has zero variance");
  Waveform out{in.sample_rate, std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) out.samples[i] = (in.samples[i] - mean) / sd;
  // second pass removes the rounding left in the mean
  const double m2 = std::accumulate(out.samples.begin(), out.samples.end(), 0.0) / static_cast<double>(n);
  for (auto& v : out.samples) v -= m2;
  return out;
}

namespace signal_detail {

inline std::vector<cplx> padded_spectrum(const std::vector<double>& x, std::size_t total) {
  std::vector<cplx> buf(total, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) buf[i] = x[i];
  fft(buf);
  return buf;
}

}  // namespace signal_detail

// Zero-phase FFT lowpass: flat to (1-taper)*cutoff, raised-cosine to zero at cutoff.
inline std::vector<double> lowpass(const std::vector<double>& x, double rate, double cutoff, double taper_fraction = 0.5,
                                   double pad_seconds = 1.0) {
  const std::size_t n = x.size();
  const std::size_t total = fast_size(n + static_cast<std::size_t>(std::ceil(pad_seconds * rate)));
  auto spec = signal_detail::padded_spectrum(x, total);
  const double pass = cutoff * (1.0 - taper_fraction), width = cutoff - pass;
  for (std::size_t k = 0; k < total; ++k) {
    const double f = std::abs(bin_frequency(k, total, rate));
    double h = 1.0;
    if (f >= cutoff) h = 0.0;
    else if (f > pass) h = 0.5 * (1.0 + std::cos(std::numbers::pi * (f - pass) / width));
    spec[k] *= h;
  }
  ifft(spec);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = spec[i].real();
  return out;
}

// Magnitude of the analytic signal.
inline std::vector<double> analytic_magnitude(const std::vector<double>& x, double rate, double pad_seconds = 1.0) {
  const std::size_t n = x.size();
  const std::size_t total = fast_size(n + static_cast<std::size_t>(std::ceil(pad_seconds * rate)));
  auto spec = signal_detail::padded_spectrum(x, total);
  for (std::size_t k = 1; k < total; ++k) {
    if (2 * k < total) spec[k] *= 2.0;
    else if (2 * k > total) spec[k] = 0.0;
  }
  ifft(spec);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::abs(spec[i]);
  return out;
}

// Iterative MAP-style demodulation: lowpassed Hilbert magnitude, then repeated
// clip / re-lowpass / least-squares rescale against the Hilbert magnitude.
inline EnvelopeDecomposition demodulate(const Waveform& w, const DemodConfig& cfg = {}) {
  if (!(cfg.cutoff > 0.0)) throw Error(Errc::BadValue, "cutoff must be positive");
  if (!(w.sample_rate > 2.0 * cfg.cutoff))
    throw Error(Errc::CutoffTooHigh, "cutoff " + std::to_string(cfg.cutoff) + " Hz is not below Nyquist");
  if (w.samples.empty()) throw Error(Errc::TooShort, "empty signal");
  const double rate = w.sample_rate;
  const auto mag = analytic_magnitude(w.samples, rate, cfg.pad_seconds);
  auto env = lowpass(mag, rate, cfg.cutoff, cfg.taper_fraction, cfg.pad_seconds);
  for (int it = 0; it < cfg.iterations; ++it) {
    for (auto& v : env) v = std::max(v, cfg.epsilon);
    env = lowpass(env, rate, cfg.cutoff, cfg.taper_fraction, cfg.pad_seconds);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < env.size(); ++i) {
      num += env[i] * mag[i];
      den += env[i] * env[i];
    }
    if (den > 0.0) {
      const double k = num / den;
      for (auto& v : env) v *= k;
    }
  }
  EnvelopeDecomposition d;
  d.cutoff = cfg.cutoff;
  d.rate = rate;
  d.envelope = std::move(env);
  for (auto& v : d.envelope) v = std::max(v, cfg.epsilon);
  d.carrier.resize(w.samples.size());
  for (std::size_t i = 0; i < w.samples.size(); ++i) d.carrier[i] = w.samples[i] / d.envelope[i];
  return d;
}

// Resamples a band-limited envelope to `target_rate` (integer stride when possible,
// otherwise linear interpolation). The carrier is dropped.
inline EnvelopeDecomposition decimate(const EnvelopeDecomposition& d, double target_rate = 200.0) {
  if (!(target_rate > 2.0 * d.cutoff)) throw Error(Errc::CutoffTooHigh, "decimated rate would alias the envelope");
  EnvelopeDecomposition out;
  out.cutoff = d.cutoff;
  out.rate = target_rate;
  if (d.envelope.empty()) return out;
  const double ratio = d.rate / target_rate;
  const auto stride = static_cast<std::size_t>(std::llround(ratio));
  if (std::abs(ratio - static_cast<double>(stride)) < 1e-9 && stride >= 1) {
    for (std::size_t i = 0; i < d.envelope.size(); i += stride) out.envelope.push_back(d.envelope[i]);
    return out;
  }
  const double dur = static_cast<double>(d.envelope.size() - 1) / d.rate;
  const auto frames = static_cast<std::size_t>(std::floor(dur * target_rate)) + 1;
  out.envelope.resize(frames);
  for (std::size_t j = 0; j < frames; ++j) {
    const double pos = static_cast<double>(j) * ratio;
    const auto i0 = std::min(static_cast<std::size_t>(pos), d.envelope.size() - 1);
    const auto i1 = std::min(i0 + 1, d.envelope.size() - 1);
    const double fr = pos - static_cast<double>(i0);
    out.envelope[j] = d.envelope[i0] + fr * (d.envelope[i1] - d.envelope[i0]);
  }
  return out;
}

// Share of spectral power (DC included) above `cutoff`.
inline double out_of_band_fraction(const std::vector<double>& x, double rate, double cutoff) {
  if (x.empty()) return 0.0;
  std::vector<cplx> spec(x.begin(), x.end());
  fft(spec);
  double total = 0.0, above = 0.0;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double p = std::norm(spec[k]);
    total += p;
    if (std::abs(bin_frequency(k, spec.size(), rate)) > cutoff) above += p;
  }
  return total > 0.0 ? above / total : 0.0;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = std::min(a.size(), b.size());
  if (n < 2) return 0.0;
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return saa > 0 && sbb > 0 ? sab / std::sqrt(saa * sbb) : 0.0;
}

}  // namespace jazzdyn::acoustics
