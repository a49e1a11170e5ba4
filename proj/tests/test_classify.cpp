#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "sigread/classify.hpp"

using namespace sigread;

namespace {

struct Dataset {
  FeatureMatrix x;
  std::vector<Label> y;
};

// Two (or more) Gaussian blobs in 2-d.
Dataset make_blobs(const std::vector<std::pair<double, double>>& centers,
                   std::size_t n_per_class, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  Dataset d;
  d.x = FeatureMatrix(centers.size() * n_per_class, 2);
  d.y.resize(d.x.rows);
  std::size_t r = 0;
  for (std::size_t c = 0; c < centers.size(); ++c)
    for (std::size_t i = 0; i < n_per_class; ++i, ++r) {
      d.x.at(r, 0) = centers[c].first + noise(rng);
      d.x.at(r, 1) = centers[c].second + noise(rng);
      d.y[r] = static_cast<Label>(c);
    }
  return d;
}

// Four clusters at the corners of a square labeled by XOR of the signs.
Dataset make_xor(std::size_t n_per_corner, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  Dataset d;
  d.x = FeatureMatrix(4 * n_per_corner, 2);
  d.y.resize(d.x.rows);
  const double corners[4][2] = {{-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
  std::size_t r = 0;
  for (int c = 0; c < 4; ++c)
    for (std::size_t i = 0; i < n_per_corner; ++i, ++r) {
      d.x.at(r, 0) = corners[c][0] + noise(rng);
      d.x.at(r, 1) = corners[c][1] + noise(rng);
      d.y[r] = static_cast<Label>((corners[c][0] > 0) != (corners[c][1] > 0));
    }
  return d;
}

double accuracy(const std::vector<Label>& pred, const std::vector<Label>& truth) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

}  // namespace

TEST_CASE("gmm_fit recovers blob means and priors") {
  const Dataset d = make_blobs({{-3, 0}, {3, 0}, {0, 4}}, 4000, 0.8, 1);
  const GmmModel m = gmm_fit(d.x, d.y);
  REQUIRE(m.n_classes == 3);
  const double expected[3][2] = {{-3, 0}, {3, 0}, {0, 4}};
  for (int c = 0; c < 3; ++c) {
    CHECK(std::abs(m.means[c][0] - expected[c][0]) < 0.02);
    CHECK(std::abs(m.means[c][1] - expected[c][1]) < 0.02);
    CHECK(m.priors[c] == Catch::Approx(1.0 / 3.0));
    CHECK(std::abs(m.sigma2[c] - 0.64) < 0.05);
  }
}

TEST_CASE("gmm handles degenerate classes") {
  SECTION("zero-variance class keeps a positive sigma^2") {
    FeatureMatrix x(4, 1);
    x.at(0, 0) = 1.0;
    x.at(1, 0) = 1.0;
    x.at(2, 0) = 2.0;
    x.at(3, 0) = 4.0;
    const GmmModel m = gmm_fit(x, {0, 0, 1, 1});
    CHECK(m.sigma2[0] > 0.0);
    CHECK(m.sigma2[0] == Catch::Approx(1e-9));
    const std::vector<Label> pred = gmm_predict(m, x);
    CHECK(pred[0] == 0);
    CHECK(pred[1] == 0);
  }
  SECTION("classes with fewer than two rows are rejected") {
    FeatureMatrix x(3, 1);
    x.at(0, 0) = 0.0;
    x.at(1, 0) = 0.0;
    x.at(2, 0) = 1.0;
    CHECK_THROWS_AS(gmm_fit(x, {0, 0, 1}), InvalidInput);
  }
  SECTION("dimension mismatch at prediction") {
    const Dataset d = make_blobs({{-1, 0}, {1, 0}}, 10, 0.1, 2);
    const GmmModel m = gmm_fit(d.x, d.y);
    FeatureMatrix bad(2, 3);
    CHECK_THROWS_AS(gmm_predict(m, bad), InvalidInput);
  }
}

TEST_CASE("spherical gmm with equal priors is nearest-centroid") {
  // Equal per-class variances and priors reduce the posterior argmax to the
  // closest mean.
  const Dataset d = make_blobs({{-2, 1}, {2, -1}}, 200, 1.0, 3);
  GmmModel m = gmm_fit(d.x, d.y);
  m.sigma2 = {1.0, 1.0};
  const std::vector<Label> pred = gmm_predict(m, d.x);
  for (std::size_t r = 0; r < d.x.rows; ++r) {
    double best = 1e300;
    int best_c = 0;
    for (int c = 0; c < 2; ++c) {
      const double dx = d.x.at(r, 0) - m.means[c][0];
      const double dy = d.x.at(r, 1) - m.means[c][1];
      if (dx * dx + dy * dy < best) {
        best = dx * dx + dy * dy;
        best_c = c;
      }
    }
    CHECK(pred[r] == static_cast<Label>(best_c));
  }
}

TEST_CASE("gmm ties resolve to the lowest class index") {
  FeatureMatrix x(4, 1);
  x.at(0, 0) = -1.0;
  x.at(1, 0) = -3.0;
  x.at(2, 0) = 1.0;
  x.at(3, 0) = 3.0;
  const GmmModel m = gmm_fit(x, {0, 0, 1, 1});
  FeatureMatrix probe(1, 1);
  probe.at(0, 0) = 0.0;  // equidistant from both means
  CHECK(gmm_predict(m, probe)[0] == 0);
}

TEST_CASE("full-covariance gmm separates correlated blobs") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 1.0);
  FeatureMatrix x(400, 2);
  std::vector<Label> y(400);
  for (std::size_t r = 0; r < 400; ++r) {
    const int c = r < 200 ? 0 : 1;
    const double a = noise(rng), b = 0.05 * noise(rng);
    // Narrow diagonal ridges offset perpendicular to their long axis.
    x.at(r, 0) = a + (c == 0 ? -0.4 : 0.4);
    x.at(r, 1) = a + b + (c == 0 ? 0.4 : -0.4);
    y[r] = static_cast<Label>(c);
  }
  const GmmModel full = gmm_fit(x, y, CovarianceMode::full);
  const GmmModel sph = gmm_fit(x, y, CovarianceMode::spherical);
  const double acc_full = accuracy(gmm_predict(full, x), y);
  const double acc_sph = accuracy(gmm_predict(sph, x), y);
  CHECK(acc_full > 0.95);
  CHECK(acc_full > acc_sph);
}

TEST_CASE("random forest fits separable blobs exactly") {
  const Dataset d = make_blobs({{-4, 0}, {4, 0}}, 100, 0.3, 7);
  RfHyperparams hp;
  hp.n_trees = 20;
  const ForestModel m = rf_fit(d.x, d.y, hp, 123);
  CHECK(accuracy(rf_predict(m, d.x), d.y) == 1.0);
}

TEST_CASE("random forest sees features placed after constant columns") {
  // Informative columns that sit behind constant ones must still split.
  const Dataset d = make_blobs({{-4, 0}, {4, 0}}, 100, 0.3, 19);
  FeatureMatrix padded(d.x.rows, 4);
  for (std::size_t r = 0; r < d.x.rows; ++r) {
    padded.at(r, 0) = 1.0;  // constant
    padded.at(r, 1) = 2.0;  // constant
    padded.at(r, 2) = d.x.at(r, 0);
    padded.at(r, 3) = d.x.at(r, 1);
  }
  RfHyperparams hp;
  hp.n_trees = 20;
  const ForestModel m = rf_fit(padded, d.y, hp, 123);
  CHECK(accuracy(rf_predict(m, padded), d.y) == 1.0);
}

TEST_CASE("random forest learns XOR where LDA cannot") {
  const Dataset train = make_xor(150, 0.25, 11);
  const Dataset test = make_xor(150, 0.25, 12);
  RfHyperparams hp;
  hp.n_trees = 50;
  const ForestModel rf = rf_fit(train.x, train.y, hp, 321);
  CHECK(accuracy(rf_predict(rf, test.x), test.y) >= 0.95);

  const LdaModel lda = lda_fit(train.x, train.y);
  CHECK(accuracy(lda_predict(lda, test.x), test.y) <= 0.6);
}

TEST_CASE("random forest is deterministic in the seed") {
  const Dataset d = make_blobs({{-1, 0}, {1, 0}}, 100, 1.0, 13);
  RfHyperparams hp;
  hp.n_trees = 15;
  const ForestModel a = rf_fit(d.x, d.y, hp, 42);
  const ForestModel b = rf_fit(d.x, d.y, hp, 42);
  const std::vector<Label> pa = rf_predict(a, d.x);
  const std::vector<Label> pb = rf_predict(b, d.x);
  CHECK(pa == pb);
  REQUIRE(a.trees.size() == b.trees.size());
  for (std::size_t t = 0; t < a.trees.size(); ++t) {
    REQUIRE(a.trees[t].size() == b.trees[t].size());
    for (std::size_t n = 0; n < a.trees[t].size(); ++n) {
      CHECK(a.trees[t][n].feature == b.trees[t][n].feature);
      CHECK(a.trees[t][n].threshold == b.trees[t][n].threshold);
    }
  }
}

TEST_CASE("forest probabilities are valid distributions") {
  const Dataset d = make_blobs({{-1, 0}, {1, 0}, {0, 2}}, 80, 0.8, 17);
  RfHyperparams hp;
  hp.n_trees = 25;
  const ForestModel m = rf_fit(d.x, d.y, hp, 5);
  FeatureMatrix probs;
  rf_predict(m, d.x, &probs);
  REQUIRE(probs.cols == 3);
  for (std::size_t r = 0; r < probs.rows; ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(probs.at(r, c) >= 0.0);
      total += probs.at(r, c);
    }
    CHECK(total == Catch::Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("rf hyperparameters constrain tree shape") {
  const Dataset d = make_blobs({{-1, 0}, {1, 0}}, 200, 1.2, 19);
  RfHyperparams stump;
  stump.n_trees = 5;
  stump.max_depth = 1;
  const ForestModel m = rf_fit(d.x, d.y, stump, 9);
  for (const auto& tree : m.trees) CHECK(tree.size() <= 3);

  RfHyperparams big_leaf;
  big_leaf.n_trees = 5;
  big_leaf.min_samples_leaf = 150;
  const ForestModel m2 = rf_fit(d.x, d.y, big_leaf, 9);
  for (const auto& tree : m2.trees) CHECK(tree.size() <= 3);
}

TEST_CASE("lda recovers the discriminant direction for two blobs") {
  // With isotropic within-class covariance, the top direction is parallel to
  // the mean difference.
  const Dataset d = make_blobs({{-2, -2}, {2, 2}}, 5000, 1.0, 23);
  const LdaModel m = lda_fit(d.x, d.y);
  REQUIRE(m.projection.size() == 1);
  const double vx = m.projection[0][0];
  const double vy = m.projection[0][1];
  const double mdx = m.means[1][0] - m.means[0][0];
  const double mdy = m.means[1][1] - m.means[0][1];
  const double cross = vx * mdy - vy * mdx;
  const double norm = std::hypot(vx, vy) * std::hypot(mdx, mdy);
  CHECK(std::abs(cross) / norm < 0.05);
  CHECK(accuracy(lda_predict(m, d.x), d.y) > 0.99);
}

TEST_CASE("lda yields K-1 directions and projects accordingly") {
  const Dataset d = make_blobs({{-3, 0}, {3, 0}, {0, 4}}, 100, 0.5, 29);
  const LdaModel m = lda_fit(d.x, d.y);
  CHECK(m.projection.size() == 2);
  CHECK(m.eigenvalues[0] >= m.eigenvalues[1]);
  const FeatureMatrix proj = lda_project(m, d.x, 2);
  CHECK(proj.rows == d.x.rows);
  CHECK(proj.cols == 2);
  CHECK_THROWS_AS(lda_project(m, d.x, 3), InvalidInput);
}

TEST_CASE("lda directions are S_W-orthonormal") {
  const Dataset d = make_blobs({{-3, 0}, {3, 1}, {0, 4}}, 200, 0.7, 31);
  const LdaModel m = lda_fit(d.x, d.y);
  // Recompute S_W and check v_i^T S_W v_j = delta_ij (the generalized
  // eigensolver normalizes in the S_W metric).
  double sw[2][2] = {{0, 0}, {0, 0}};
  double means[3][2] = {{0, 0}, {0, 0}, {0, 0}};
  std::size_t counts[3] = {0, 0, 0};
  for (std::size_t r = 0; r < d.x.rows; ++r) {
    means[d.y[r]][0] += d.x.at(r, 0);
    means[d.y[r]][1] += d.x.at(r, 1);
    ++counts[d.y[r]];
  }
  for (int c = 0; c < 3; ++c) {
    means[c][0] /= static_cast<double>(counts[c]);
    means[c][1] /= static_cast<double>(counts[c]);
  }
  for (std::size_t r = 0; r < d.x.rows; ++r) {
    const double dx = d.x.at(r, 0) - means[d.y[r]][0];
    const double dy = d.x.at(r, 1) - means[d.y[r]][1];
    sw[0][0] += dx * dx;
    sw[0][1] += dx * dy;
    sw[1][0] += dy * dx;
    sw[1][1] += dy * dy;
  }
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      double acc = 0.0;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          acc += m.projection[i][a] * sw[a][b] * m.projection[j][b];
      CHECK(acc == Catch::Approx(i == j ? 1.0 : 0.0).margin(1e-6));
    }
}
