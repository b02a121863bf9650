#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "jazzdyn/embedding/tsne.hpp"

using namespace jazzdyn;
using namespace jazzdyn::embedding;

namespace {

Matrix random_matrix(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(n, std::vector<double>(dim));
  for (auto& r : m)
    for (auto& v : r) v = u(eng);
  return m;
}

double dist(const std::array<double, 2>& a, const std::array<double, 2>& b) {
  return std::hypot(a[0] - b[0], a[1] - b[1]);
}

// Perplexity of a conditional row, 2^H in nats form.
double row_perplexity(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0) h -= v * std::log(v);
  return std::exp(h);
}

}  // namespace

TEST(Rng, ReproducibleAndRoughlyStandard) {
  GaussianSource a(40), b(40);
  double s = 0, s2 = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double x = a.normal();
    EXPECT_EQ(x, b.normal());
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.03);
  EXPECT_NEAR(s2 / n, 1.0, 0.05);
}

TEST(Tsne, ConditionalRowHitsPerplexity) {
  const auto m = random_matrix(30, 5, 3);
  const auto d = squared_distances(m);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto p = conditional_row(d[i], i, 2.0);
    EXPECT_EQ(p[i], 0.0);
    EXPECT_NEAR(std::log(row_perplexity(p)), std::log(2.0), 1e-4);
  }
}

TEST(Tsne, JointAffinitiesSymmetricAndNormalized) {
  const auto p = joint_affinities(random_matrix(12, 4, 9), 2.0);
  double total = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < p.size(); ++j) {
      EXPECT_DOUBLE_EQ(p[i][j], p[j][i]);
      total += p[i][j];
    }
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Tsne, Errors) {
  EXPECT_THROW(
      {
        try {
          tsne_coords(random_matrix(2, 3, 1));
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), Errc::TooFewRows);
          throw;
        }
      },
      Error);
  auto m = random_matrix(5, 3, 1);
  m[2][1] = std::nan("");
  try {
    tsne_coords(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NonFiniteInput);
  }
  TsneConfig bad;
  bad.perplexity = -1;
  EXPECT_THROW(tsne_coords(random_matrix(5, 3, 1), bad), Error);
}

TEST(Tsne, BitIdenticalAcrossRuns) {
  const auto m = random_matrix(25, 8, 4);
  const auto a = tsne_coords(m), b = tsne_coords(m);
  ASSERT_EQ(a.coords.size(), b.coords.size());
  for (std::size_t i = 0; i < a.coords.size(); ++i) {
    EXPECT_EQ(a.coords[i][0], b.coords[i][0]);
    EXPECT_EQ(a.coords[i][1], b.coords[i][1]);
  }
  TsneConfig other;
  other.seed = 41;
  const auto c = tsne_coords(m, other);
  EXPECT_NE(a.coords[0][0], c.coords[0][0]);
}

TEST(Tsne, OutputCenteredAndFinite) {
  const auto r = tsne_coords(random_matrix(20, 6, 5));
  double mx = 0, my = 0;
  for (const auto& p : r.coords) {
    EXPECT_TRUE(std::isfinite(p[0]) && std::isfinite(p[1]));
    mx += p[0];
    my += p[1];
  }
  EXPECT_NEAR(mx / 20, 0.0, 1e-9);
  EXPECT_NEAR(my / 20, 0.0, 1e-9);
}

TEST(Tsne, ObjectiveSettlesOverLastHundred) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto r = tsne_coords(random_matrix(30, 10, seed));
    const auto& obj = r.objective;
    ASSERT_EQ(obj.size(), 1000u);
    for (std::size_t i = obj.size() - 100; i < obj.size(); ++i) EXPECT_LE(obj[i] - obj[i - 1], 1e-3) << "iter " << i;
    EXPECT_LT(obj.back(), obj[250]);
  }
}

TEST(Tsne, DuplicatePairIsClosest) {
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto m = random_matrix(10, 12, 100 + seed);
    m[7] = m[3];
    const auto r = tsne_coords(m);
    const double dup = dist(r.coords[3], r.coords[7]);
    bool min = true;
    for (std::size_t i = 0; i < 10; ++i)
      for (std::size_t j = i + 1; j < 10; ++j)
        if (!(i == 3 && j == 7) && dist(r.coords[i], r.coords[j]) < dup) min = false;
    hits += min;
  }
  EXPECT_GE(hits, 19);
}

TEST(Tsne, AffinityMonotoneInDistance) {
  std::mt19937_64 eng(77);
  for (int trial = 0; trial < 200; ++trial) {
    auto d = squared_distances(random_matrix(8, 3, 500 + trial));
    const std::size_t i = eng() % 8, j = (i + 1 + eng() % 7) % 8;
    double prev = joint_affinities_from_distances(d, 2.0)[i][j];
    for (int step = 0; step < 6; ++step) {
      d[i][j] *= 0.7;
      d[j][i] = d[i][j];
      const double cur = joint_affinities_from_distances(d, 2.0)[i][j];
      EXPECT_GE(cur, prev * (1 - 1e-6)) << "trial " << trial << " step " << step;
      prev = cur;
    }
  }
}

TEST(Silhouette, SeparatedAndMixed) {
  std::vector<std::array<double, 2>> pts = {{0, 0}, {0, 1}, {10, 0}, {10, 1}};
  EXPECT_GT(silhouette(pts, {0, 0, 1, 1}), 0.8);
  EXPECT_LT(silhouette(pts, {0, 1, 0, 1}), 0.0);
  // hand value: a = 1, b = (10 + sqrt(101)) / 2
  const double b = (10 + std::sqrt(101.0)) / 2;
  EXPECT_NEAR(silhouette(pts, {0, 0, 1, 1}), (b - 1) / b, 1e-12);
  EXPECT_THROW(silhouette(pts, {0, 0, 0, 0}), Error);
}

TEST(Embedding, CsvLayout) {
  dynamics::FeatureMatrix fm;
  fm.rows = random_matrix(4, 3, 2);
  for (int i = 0; i < 4; ++i) {
    dynamics::RowMetadata md;
    md.piece_id = "p" + std::to_string(i);
    md.decade = 1950;
    md.performer = "A, B";
    fm.metadata.push_back(md);
  }
  std::ostringstream os;
  write_embedding_csv(os, tsne(fm));
  const auto s = os.str();
  EXPECT_EQ(s.rfind("piece_id,x,y,decade,performer,style,instrument\n", 0), 0u);
  EXPECT_NE(s.find("\"A, B\""), std::string::npos);
}
