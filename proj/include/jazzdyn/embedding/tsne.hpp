#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "jazzdyn/dynamics/dynamics.hpp"
#include "jazzdyn/embedding/rng.hpp"
#include "jazzdyn/error.hpp"
#include "jazzdyn/format.hpp"

namespace jazzdyn::embedding {

struct TsneConfig {
  double perplexity = 2.0;
  double early_exaggeration = 20.0;
  std::uint64_t seed = 40;
  int iterations = 1000;
  int exaggeration_iters = 250;
  double learning_rate = 200.0;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  int momentum_switch = 250;
  double init_sigma = 1e-4;

  void validate() const {
    auto pos = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!pos(perplexity)) throw Error(Errc::BadValue, "tsne perplexity must be positive");
    if (!pos(early_exaggeration)) throw Error(Errc::BadValue, "tsne early exaggeration must be positive");
    if (!pos(learning_rate)) throw Error(Errc::BadValue, "tsne learning rate must be positive");
    if (!pos(init_sigma)) throw Error(Errc::BadValue, "tsne init sigma must be positive");
    if (iterations < 1) throw Error(Errc::BadValue, "tsne iterations must be >= 1");
    if (exaggeration_iters < 0 || momentum_switch < 0)
      throw Error(Errc::BadValue, "tsne schedule iterations must be >= 0");
    if (!(initial_momentum >= 0.0 && initial_momentum < 1.0 && final_momentum >= 0.0 && final_momentum < 1.0))
      throw Error(Errc::BadValue, "tsne momentum must be in [0, 1)");
  }
};

struct EmbeddedPoint {
  std::string piece_id;
  double x = 0.0;
  double y = 0.0;
  int decade = 0;
  std::string performer = "unknown";
  std::string style = "unknown";
  std::string instrument = "unknown";
};

struct TsneResult {
  std::vector<std::array<double, 2>> coords;
  std::vector<double> objective;  // KL(P||Q) in nats after each iteration, unexaggerated P
};

using Matrix = std::vector<std::vector<double>>;

inline Matrix squared_distances(const Matrix& x) {
  const std::size_t n = x.size();
  Matrix d(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < x[i].size(); ++k) {
        const double t = x[i][k] - x[j][k];
        s += t * t;
      }
      d[i][j] = d[j][i] = s;
    }
  return d;
}

// Row-conditional p_{j|i} with beta found by bisection on log-perplexity.
inline std::vector<double> conditional_row(const std::vector<double>& dist, std::size_t i, double perplexity,
                                           double tol = 1e-5, int max_steps = 50) {
  const std::size_t n = dist.size();
  const double target = std::log(perplexity);
  double beta = 1.0, lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
  std::vector<double> p(n, 0.0);
  // shift by the nearest neighbour distance so exp() cannot underflow to all zeros
  double dmin = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j)
    if (j != i) dmin = std::min(dmin, dist[j]);
  for (int step = 0; step < max_steps; ++step) {
    double sum = 0.0, wsum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) {
        p[j] = 0.0;
        continue;
      }
      p[j] = std::exp(-beta * (dist[j] - dmin));
      sum += p[j];
      wsum += (dist[j] - dmin) * p[j];
    }
    const double h = std::log(sum) + beta * wsum / sum;
    for (auto& v : p) v /= sum;
    const double diff = h - target;
    if (std::abs(diff) < tol) break;
    if (diff > 0) {
      lo = beta;
      beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
    } else {
      hi = beta;
      beta = std::isinf(lo) ? beta / 2.0 : 0.5 * (beta + lo);
    }
  }
  return p;
}

// Symmetrized joint affinities (p_{j|i} + p_{i|j}) / 2N.
inline Matrix joint_affinities_from_distances(const Matrix& d, double perplexity) {
  const std::size_t n = d.size();
  Matrix cond(n);
  for (std::size_t i = 0; i < n; ++i) cond[i] = conditional_row(d[i], i, perplexity);
  Matrix p(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) p[i][j] = (cond[i][j] + cond[j][i]) / (2.0 * static_cast<double>(n));
  return p;
}

inline Matrix joint_affinities(const Matrix& x, double perplexity) {
  return joint_affinities_from_distances(squared_distances(x), perplexity);
}

inline void check_rows(const Matrix& x) {
  if (x.size() < 3) throw Error(Errc::TooFewRows, "t-SNE needs at least 3 rows, got " + std::to_string(x.size()));
  const std::size_t dim = x[0].size();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].size() != dim) throw Error(Errc::BadValue, "ragged feature matrix");
    for (double v : x[i])
      if (!std::isfinite(v)) throw Error(Errc::NonFiniteInput, "row " + std::to_string(i) + " has a non-finite entry");
  }
}

inline TsneResult tsne_coords(const Matrix& x, const TsneConfig& cfg = {}) {
  cfg.validate();
  check_rows(x);
  const std::size_t n = x.size();
  constexpr double kFloor = 1e-12;

  Matrix p = joint_affinities(x, cfg.perplexity);
  for (auto& row : p)
    for (auto& v : row) v = std::max(v, kFloor);

  GaussianSource rng(cfg.seed);
  std::vector<std::array<double, 2>> y(n), vel(n, {0.0, 0.0}), gains(n, {1.0, 1.0}), grad(n);
  for (auto& pt : y) {
    pt[0] = cfg.init_sigma * rng.normal();
    pt[1] = cfg.init_sigma * rng.normal();
  }

  TsneResult res;
  res.objective.reserve(static_cast<std::size_t>(cfg.iterations));
  Matrix num(n, std::vector<double>(n, 0.0));

  for (int it = 0; it < cfg.iterations; ++it) {
    const double exag = it < cfg.exaggeration_iters ? cfg.early_exaggeration : 1.0;
    const double mom = it < cfg.momentum_switch ? cfg.initial_momentum : cfg.final_momentum;

    double zsum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double dx = y[i][0] - y[j][0], dy = y[i][1] - y[j][1];
        const double v = 1.0 / (1.0 + dx * dx + dy * dy);
        num[i][j] = num[j][i] = v;
        zsum += 2.0 * v;
      }

    for (std::size_t i = 0; i < n; ++i) {
      double gx = 0.0, gy = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double q = std::max(num[i][j] / zsum, kFloor);
        const double m = (exag * p[i][j] - q) * num[i][j];
        gx += m * (y[i][0] - y[j][0]);
        gy += m * (y[i][1] - y[j][1]);
      }
      grad[i] = {4.0 * gx, 4.0 * gy};
    }

    for (std::size_t i = 0; i < n; ++i)
      for (int k = 0; k < 2; ++k) {
        const bool same = (grad[i][k] > 0.0) == (vel[i][k] > 0.0);
        gains[i][k] = same ? gains[i][k] * 0.8 : gains[i][k] + 0.2;
        gains[i][k] = std::max(gains[i][k], 0.01);
        vel[i][k] = mom * vel[i][k] - cfg.learning_rate * gains[i][k] * grad[i][k];
        y[i][k] += vel[i][k];
      }

    double mx = 0.0, my = 0.0;
    for (const auto& pt : y) {
      mx += pt[0];
      my += pt[1];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    for (auto& pt : y) {
      pt[0] -= mx;
      pt[1] -= my;
    }

    // objective at the updated positions
    double z2 = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double dx = y[i][0] - y[j][0], dy = y[i][1] - y[j][1];
        const double v = 1.0 / (1.0 + dx * dx + dy * dy);
        num[i][j] = num[j][i] = v;
        z2 += 2.0 * v;
      }
    double kl = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) kl += p[i][j] * std::log(p[i][j] / std::max(num[i][j] / z2, kFloor));
    res.objective.push_back(kl);
  }

  res.coords = std::move(y);
  return res;
}

inline std::vector<EmbeddedPoint> tsne(const dynamics::FeatureMatrix& fm, const TsneConfig& cfg = {}) {
  const auto r = tsne_coords(fm.rows, cfg);
  std::vector<EmbeddedPoint> out;
  out.reserve(fm.rows.size());
  for (std::size_t i = 0; i < fm.rows.size(); ++i) {
    const auto& m = fm.metadata[i];
    out.push_back({m.piece_id, r.coords[i][0], r.coords[i][1], m.decade, m.performer, m.style, m.instrument});
  }
  return out;
}

// Mean silhouette coefficient over all points (Euclidean); singleton clusters score 0.
inline double silhouette(const std::vector<std::array<double, 2>>& pts, const std::vector<int>& labels) {
  const std::size_t n = pts.size();
  if (n != labels.size()) throw Error(Errc::BadValue, "silhouette: labels do not match points");
  std::map<int, std::size_t> sizes;
  for (int l : labels) ++sizes[l];
  if (sizes.size() < 2) throw Error(Errc::BadValue, "silhouette needs at least two clusters");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::map<int, double> sum;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      sum[labels[j]] += std::hypot(pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]);
    }
    if (sizes[labels[i]] < 2) continue;
    const double a = sum[labels[i]] / static_cast<double>(sizes[labels[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [l, s] : sum)
      if (l != labels[i]) b = std::min(b, s / static_cast<double>(sizes[l]));
    const double den = std::max(a, b);
    if (den > 0.0) total += (b - a) / den;
  }
  return total / static_cast<double>(n);
}

inline void write_embedding_csv(std::ostream& out, const std::vector<EmbeddedPoint>& pts) {
  out << "piece_id,x,y,decade,performer,style,instrument\n";
  for (const auto& p : pts)
    out << corpus::csv_quote(p.piece_id) << ',' << fmt9(p.x) << ',' << fmt9(p.y) << ',' << p.decade << ','
        << corpus::csv_quote(p.performer) << ',' << corpus::csv_quote(p.style) << ','
        << corpus::csv_quote(p.instrument) << '\n';
}

}  // namespace jazzdyn::embedding
