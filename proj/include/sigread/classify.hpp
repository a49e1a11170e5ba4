#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "sigread/rng.hpp"
#include "sigread/types.hpp"

namespace sigread {

namespace detail {
inline int count_classes(const std::vector<Label>& labels) {
  int k = 0;
  for (Label l : labels) k = std::max(k, static_cast<int>(l) + 1);
  return k;
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Per-class Gaussian classifier ("GMM" with one component per state, fit
// supervised from labeled data; equivalent to a converged one-Gaussian-per-
// class mixture).
// ---------------------------------------------------------------------------

enum class CovarianceMode { spherical, full };

struct GmmModel {
  CovarianceMode mode = CovarianceMode::spherical;
  std::size_t dim = 0;
  int n_classes = 0;
  std::vector<std::vector<double>> means;   // per class
  std::vector<double> priors;               // per class
  std::vector<double> sigma2;               // spherical: per class
  std::vector<std::vector<double>> covs;    // full: per class, row-major d*d
};

inline GmmModel gmm_fit(const FeatureMatrix& features,
                        const std::vector<Label>& labels,
                        CovarianceMode mode = CovarianceMode::spherical) {
  const std::size_t d = features.cols;
  const int k = detail::count_classes(labels);
  GmmModel model;
  model.mode = mode;
  model.dim = d;
  model.n_classes = k;
  model.means.assign(static_cast<std::size_t>(k), std::vector<double>(d, 0.0));
  model.priors.assign(static_cast<std::size_t>(k), 0.0);

  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (std::size_t r = 0; r < features.rows; ++r) {
    const std::size_t c = labels[r];
    ++counts[c];
    const double* row = features.row(r);
    for (std::size_t j = 0; j < d; ++j) model.means[c][j] += row[j];
  }
  for (int c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] < 2)
      throw InvalidInput("gmm_fit: every class needs at least 2 rows");
    for (double& m : model.means[static_cast<std::size_t>(c)])
      m /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
    model.priors[static_cast<std::size_t>(c)] =
        static_cast<double>(counts[static_cast<std::size_t>(c)]) /
        static_cast<double>(features.rows);
  }

  if (mode == CovarianceMode::spherical) {
    model.sigma2.assign(static_cast<std::size_t>(k), 0.0);
    for (int c = 0; c < k; ++c) {
      double trace = 0.0;
      for (std::size_t r = 0; r < features.rows; ++r) {
        if (labels[r] != c) continue;
        const double* row = features.row(r);
        for (std::size_t j = 0; j < d; ++j) {
          const double diff = row[j] - model.means[static_cast<std::size_t>(c)][j];
          trace += diff * diff;
        }
      }
      trace /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
      const double mean_var = trace / static_cast<double>(d);
      const double reg = 1e-9 * (trace > 0.0 ? mean_var : 1.0);
      model.sigma2[static_cast<std::size_t>(c)] = mean_var + reg;
    }
  } else {
    model.covs.assign(static_cast<std::size_t>(k), std::vector<double>(d * d, 0.0));
    for (int c = 0; c < k; ++c) {
      auto& cov = model.covs[static_cast<std::size_t>(c)];
      for (std::size_t r = 0; r < features.rows; ++r) {
        if (labels[r] != c) continue;
        const double* row = features.row(r);
        for (std::size_t i = 0; i < d; ++i)
          for (std::size_t j = 0; j < d; ++j)
            cov[i * d + j] += (row[i] - model.means[static_cast<std::size_t>(c)][i]) *
                              (row[j] - model.means[static_cast<std::size_t>(c)][j]);
      }
      const double n_c = static_cast<double>(counts[static_cast<std::size_t>(c)]);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) cov[i * d + j] /= n_c;
      for (std::size_t i = 0; i < d; ++i) cov[i * d + i] += 1e-9;
    }
  }
  return model;
}

inline std::vector<Label> gmm_predict(const GmmModel& model,
                                      const FeatureMatrix& features) {
  if (features.cols != model.dim)
    throw InvalidInput("gmm_predict: feature dimension mismatch");
  const std::size_t d = model.dim;

  std::vector<Eigen::LLT<Eigen::MatrixXd>> llts;
  std::vector<double> logdets(static_cast<std::size_t>(model.n_classes), 0.0);
  if (model.mode == CovarianceMode::full) {
    for (int c = 0; c < model.n_classes; ++c) {
      Eigen::MatrixXd cov = Eigen::Map<const Eigen::MatrixXd>(
          model.covs[static_cast<std::size_t>(c)].data(),
          static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
      llts.emplace_back(cov);
      double logdet = 0.0;
      for (Eigen::Index i = 0; i < llts.back().matrixL().rows(); ++i)
        logdet += 2.0 * std::log(llts.back().matrixL()(i, i));
      logdets[static_cast<std::size_t>(c)] = logdet;
    }
  }

  std::vector<Label> out(features.rows);
  Eigen::VectorXd diff(static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r < features.rows; ++r) {
    const double* row = features.row(r);
    double best = -std::numeric_limits<double>::infinity();
    int best_c = 0;
    for (int c = 0; c < model.n_classes; ++c) {
      const auto& mean = model.means[static_cast<std::size_t>(c)];
      double score = std::log(model.priors[static_cast<std::size_t>(c)]);
      if (model.mode == CovarianceMode::spherical) {
        const double s2 = model.sigma2[static_cast<std::size_t>(c)];
        double sq = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double dj = row[j] - mean[j];
          sq += dj * dj;
        }
        score += -0.5 * (static_cast<double>(d) * std::log(s2) + sq / s2);
      } else {
        for (std::size_t j = 0; j < d; ++j) diff(static_cast<Eigen::Index>(j)) = row[j] - mean[j];
        const Eigen::VectorXd solved = llts[static_cast<std::size_t>(c)].solve(diff);
        score += -0.5 * (logdets[static_cast<std::size_t>(c)] + diff.dot(solved));
      }
      if (score > best) {  // ties keep the lowest class index
        best = score;
        best_c = c;
      }
    }
    out[r] = static_cast<Label>(best_c);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Random forest with axis-aligned splits and Gini impurity. Split search is
// histogram-based: each feature is quantized to at most 256 bins once per
// fit, and candidate thresholds are the bin boundaries.
// ---------------------------------------------------------------------------

struct RfHyperparams {
  std::size_t n_trees = 100;
  std::size_t max_depth = 20;
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
};

struct RfNode {
  std::int32_t feature = -1;  // -1 for leaves
  double threshold = 0.0;     // go left when x[feature] < threshold
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::vector<double> probs;  // leaf class frequencies
};

struct ForestModel {
  RfHyperparams hyperparams;
  std::uint64_t seed = 0;
  int n_classes = 0;
  std::size_t dim = 0;
  std::vector<std::vector<RfNode>> trees;
};

namespace detail {

struct BinnedData {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> codes;             // row-major
  std::vector<std::vector<double>> thresholds; // per feature, sorted

  std::uint8_t code(std::size_t r, std::size_t c) const {
    return codes[r * cols + c];
  }
};

inline BinnedData bin_features(const FeatureMatrix& features) {
  BinnedData bd;
  bd.rows = features.rows;
  bd.cols = features.cols;
  bd.codes.assign(features.rows * features.cols, 0);
  bd.thresholds.resize(features.cols);
  std::vector<double> column;
  for (std::size_t c = 0; c < features.cols; ++c) {
    column.assign(features.rows, 0.0);
    for (std::size_t r = 0; r < features.rows; ++r) column[r] = features.at(r, c);
    std::sort(column.begin(), column.end());
    column.erase(std::unique(column.begin(), column.end()), column.end());
    auto& thr = bd.thresholds[c];
    if (column.size() > 1) {
      if (column.size() <= 256) {
        thr.reserve(column.size() - 1);
        for (std::size_t i = 0; i + 1 < column.size(); ++i)
          thr.push_back(0.5 * (column[i] + column[i + 1]));
      } else {
        thr.reserve(255);
        for (std::size_t b = 1; b <= 255; ++b) {
          const std::size_t i = b * column.size() / 256;
          thr.push_back(0.5 * (column[i - 1] + column[i]));
        }
        thr.erase(std::unique(thr.begin(), thr.end()), thr.end());
      }
    }
    for (std::size_t r = 0; r < features.rows; ++r) {
      const double x = features.at(r, c);
      const auto it = std::upper_bound(thr.begin(), thr.end(), x);
      bd.codes[r * features.cols + c] =
          static_cast<std::uint8_t>(it - thr.begin());
    }
  }
  return bd;
}

struct TreeBuilder {
  const BinnedData& data;
  const std::vector<Label>& labels;
  const RfHyperparams& hp;
  int n_classes;
  std::size_t mtry;
  Rng& rng;
  std::vector<RfNode>& nodes;
  std::vector<std::size_t> feature_pool;

  TreeBuilder(const BinnedData& d, const std::vector<Label>& l,
              const RfHyperparams& h, int k, std::size_t m, Rng& r,
              std::vector<RfNode>& out)
      : data(d), labels(l), hp(h), n_classes(k), mtry(m), rng(r), nodes(out) {
    feature_pool.resize(data.cols);
    std::iota(feature_pool.begin(), feature_pool.end(), 0);
  }

  std::int32_t make_leaf(const std::vector<std::size_t>& samples) {
    RfNode node;
    node.probs.assign(static_cast<std::size_t>(n_classes), 0.0);
    for (std::size_t s : samples) node.probs[labels[s]] += 1.0;
    for (double& p : node.probs) p /= static_cast<double>(samples.size());
    nodes.push_back(std::move(node));
    return static_cast<std::int32_t>(nodes.size() - 1);
  }

  std::int32_t build(std::vector<std::size_t>& samples, std::size_t depth) {
    const std::size_t n = samples.size();
    bool pure = true;
    for (std::size_t i = 1; i < n && pure; ++i)
      pure = labels[samples[i]] == labels[samples[0]];
    if (pure || depth >= hp.max_depth || n < hp.min_samples_split)
      return make_leaf(samples);

    // Candidate features: mtry distinct draws.
    for (std::size_t i = 0; i < mtry; ++i) {
      const std::size_t j = i + rng.uniform_index(feature_pool.size() - i);
      std::swap(feature_pool[i], feature_pool[j]);
    }

    double best_score = -1.0;
    std::size_t best_feature = 0;
    std::size_t best_bin = 0;
    std::vector<double> hist;
    std::vector<double> left_counts(static_cast<std::size_t>(n_classes));
    std::vector<double> total_counts(static_cast<std::size_t>(n_classes), 0.0);
    for (std::size_t s : samples) total_counts[labels[s]] += 1.0;

    for (std::size_t i = 0; i < mtry; ++i) {
      const std::size_t f = feature_pool[i];
      const std::size_t n_bins = data.thresholds[f].size() + 1;
      if (n_bins < 2) continue;
      hist.assign(n_bins * static_cast<std::size_t>(n_classes), 0.0);
      for (std::size_t s : samples)
        hist[data.code(s, f) * static_cast<std::size_t>(n_classes) + labels[s]] += 1.0;

      std::fill(left_counts.begin(), left_counts.end(), 0.0);
      double n_left = 0.0;
      for (std::size_t b = 0; b + 1 < n_bins; ++b) {
        for (int c = 0; c < n_classes; ++c)
          left_counts[static_cast<std::size_t>(c)] +=
              hist[b * static_cast<std::size_t>(n_classes) + static_cast<std::size_t>(c)];
        n_left = 0.0;
        for (double v : left_counts) n_left += v;
        const double n_right = static_cast<double>(n) - n_left;
        if (n_left < static_cast<double>(hp.min_samples_leaf) ||
            n_right < static_cast<double>(hp.min_samples_leaf))
          continue;
        double sq_left = 0.0, sq_right = 0.0;
        for (int c = 0; c < n_classes; ++c) {
          const double l = left_counts[static_cast<std::size_t>(c)];
          const double r = total_counts[static_cast<std::size_t>(c)] - l;
          sq_left += l * l;
          sq_right += r * r;
        }
        // Maximizing this is equivalent to maximizing the Gini decrease.
        const double score = sq_left / n_left + sq_right / n_right;
        if (score > best_score) {
          best_score = score;
          best_feature = f;
          best_bin = b;
        }
      }
    }

    if (best_score < 0.0) return make_leaf(samples);
    // Reject splits with zero impurity decrease.
    double sq_total = 0.0;
    for (double v : total_counts) sq_total += v * v;
    if (best_score <= sq_total / static_cast<double>(n) + 1e-12)
      return make_leaf(samples);

    std::vector<std::size_t> left, right;
    for (std::size_t s : samples) {
      if (data.code(s, best_feature) <= best_bin)
        left.push_back(s);
      else
        right.push_back(s);
    }
    samples.clear();
    samples.shrink_to_fit();

    RfNode node;
    node.feature = static_cast<std::int32_t>(best_feature);
    node.threshold = data.thresholds[best_feature][best_bin];
    nodes.push_back(std::move(node));
    const std::int32_t idx = static_cast<std::int32_t>(nodes.size() - 1);
    const std::int32_t l = build(left, depth + 1);
    const std::int32_t r = build(right, depth + 1);
    nodes[static_cast<std::size_t>(idx)].left = l;
    nodes[static_cast<std::size_t>(idx)].right = r;
    return idx;
  }
};

}  // namespace detail

inline ForestModel rf_fit(const FeatureMatrix& features,
                          const std::vector<Label>& labels,
                          const RfHyperparams& hp, std::uint64_t seed) {
  const int k = detail::count_classes(labels);
  if (k < 2) throw InvalidInput("rf_fit: need at least 2 classes");

  ForestModel model;
  model.hyperparams = hp;
  model.seed = seed;
  model.n_classes = k;
  model.dim = features.cols;
  model.trees.resize(hp.n_trees);

  const detail::BinnedData binned = detail::bin_features(features);
  const std::size_t mtry = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::sqrt(static_cast<double>(features.cols))));

  for (std::size_t t = 0; t < hp.n_trees; ++t) {
    Rng rng = Rng::stream(seed, t);
    std::vector<std::size_t> samples(features.rows);
    for (std::size_t i = 0; i < features.rows; ++i)
      samples[i] = rng.uniform_index(features.rows);
    detail::TreeBuilder builder(binned, labels, hp, k, mtry, rng, model.trees[t]);
    builder.build(samples, 0);
  }
  return model;
}

inline void rf_predict_probs(const ForestModel& model,
                             const FeatureMatrix& features,
                             FeatureMatrix& probs) {
  if (features.cols != model.dim)
    throw InvalidInput("rf_predict: feature dimension mismatch");
  probs = FeatureMatrix(features.rows, static_cast<std::size_t>(model.n_classes));
  const double inv_trees = 1.0 / static_cast<double>(model.trees.size());
  for (std::size_t r = 0; r < features.rows; ++r) {
    const double* row = features.row(r);
    double* p = probs.row(r);
    for (const auto& tree : model.trees) {
      std::size_t idx = 0;
      while (tree[idx].feature >= 0) {
        idx = static_cast<std::size_t>(
            row[static_cast<std::size_t>(tree[idx].feature)] < tree[idx].threshold
                ? tree[idx].left
                : tree[idx].right);
      }
      for (int c = 0; c < model.n_classes; ++c)
        p[static_cast<std::size_t>(c)] +=
            tree[idx].probs[static_cast<std::size_t>(c)] * inv_trees;
    }
  }
}

inline std::vector<Label> rf_predict(const ForestModel& model,
                                     const FeatureMatrix& features,
                                     FeatureMatrix* out_probs = nullptr) {
  FeatureMatrix probs;
  rf_predict_probs(model, features, probs);
  std::vector<Label> out(features.rows);
  for (std::size_t r = 0; r < features.rows; ++r) {
    const double* p = probs.row(r);
    int best = 0;
    for (int c = 1; c < model.n_classes; ++c)
      if (p[static_cast<std::size_t>(c)] > p[static_cast<std::size_t>(best)]) best = c;
    out[r] = static_cast<Label>(best);
  }
  if (out_probs) *out_probs = std::move(probs);
  return out;
}

// ---------------------------------------------------------------------------
// Linear discriminant analysis: generalized eigenproblem S_B v = lambda S_W v
// for projection, pooled-covariance linear discriminants for classification.
// ---------------------------------------------------------------------------

struct LdaModel {
  std::size_t dim = 0;
  int n_classes = 0;
  std::vector<std::vector<double>> means;
  std::vector<double> priors;
  std::vector<std::vector<double>> projection;  // per direction, length dim
  std::vector<double> eigenvalues;
  std::vector<std::vector<double>> coef;  // per class, length dim
  std::vector<double> intercept;          // per class
};

inline LdaModel lda_fit(const FeatureMatrix& features,
                        const std::vector<Label>& labels) {
  const std::size_t d = features.cols;
  const int k = detail::count_classes(labels);
  if (k < 2) throw InvalidInput("lda_fit: need at least 2 classes");
  const auto di = static_cast<Eigen::Index>(d);

  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(k, di);
  Eigen::VectorXd grand = Eigen::VectorXd::Zero(di);
  for (std::size_t r = 0; r < features.rows; ++r) {
    const auto c = static_cast<Eigen::Index>(labels[r]);
    ++counts[labels[r]];
    for (std::size_t j = 0; j < d; ++j) {
      means(c, static_cast<Eigen::Index>(j)) += features.at(r, j);
      grand(static_cast<Eigen::Index>(j)) += features.at(r, j);
    }
  }
  for (int c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0)
      throw InvalidInput("lda_fit: empty class");
    means.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
  }
  grand /= static_cast<double>(features.rows);

  Eigen::MatrixXd sw = Eigen::MatrixXd::Zero(di, di);
  Eigen::MatrixXd sb = Eigen::MatrixXd::Zero(di, di);
  Eigen::VectorXd diff(di);
  for (std::size_t r = 0; r < features.rows; ++r) {
    const auto c = static_cast<Eigen::Index>(labels[r]);
    for (std::size_t j = 0; j < d; ++j)
      diff(static_cast<Eigen::Index>(j)) =
          features.at(r, j) - means(c, static_cast<Eigen::Index>(j));
    sw.noalias() += diff * diff.transpose();
  }
  for (int c = 0; c < k; ++c) {
    const Eigen::VectorXd md = means.row(c).transpose() - grand;
    sb.noalias() += static_cast<double>(counts[static_cast<std::size_t>(c)]) *
                    (md * md.transpose());
  }
  const double ridge = 1e-8 * sw.trace() / static_cast<double>(d);
  sw += std::max(ridge, 1e-12) * Eigen::MatrixXd::Identity(di, di);

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(sb, sw);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("lda_fit: eigen decomposition failed");

  LdaModel model;
  model.dim = d;
  model.n_classes = k;
  const std::size_t n_dirs = std::min<std::size_t>(static_cast<std::size_t>(k - 1), d);
  // Solver returns eigenvalues ascending; keep the top directions.
  for (std::size_t i = 0; i < n_dirs; ++i) {
    const Eigen::Index col = di - 1 - static_cast<Eigen::Index>(i);
    model.eigenvalues.push_back(solver.eigenvalues()(col));
    std::vector<double> v(d);
    for (std::size_t j = 0; j < d; ++j)
      v[j] = solver.eigenvectors()(static_cast<Eigen::Index>(j), col);
    model.projection.push_back(std::move(v));
  }

  // Pooled-covariance discriminants.
  const Eigen::MatrixXd pooled =
      sw / static_cast<double>(features.rows - static_cast<std::size_t>(k));
  const Eigen::LLT<Eigen::MatrixXd> llt(pooled);
  for (int c = 0; c < k; ++c) {
    const Eigen::VectorXd mu = means.row(c).transpose();
    const Eigen::VectorXd w = llt.solve(mu);
    std::vector<double> coef(d);
    for (std::size_t j = 0; j < d; ++j) coef[j] = w(static_cast<Eigen::Index>(j));
    model.coef.push_back(std::move(coef));
    const double prior = static_cast<double>(counts[static_cast<std::size_t>(c)]) /
                         static_cast<double>(features.rows);
    model.intercept.push_back(-0.5 * mu.dot(w) + std::log(prior));
    model.priors.push_back(prior);
    std::vector<double> mean(d);
    for (std::size_t j = 0; j < d; ++j)
      mean[j] = means(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j));
    model.means.push_back(std::move(mean));
  }
  return model;
}

inline FeatureMatrix lda_project(const LdaModel& model,
                                 const FeatureMatrix& features, std::size_t k) {
  if (k > model.projection.size())
    throw InvalidInput("lda_project: not enough discriminant directions");
  if (features.cols != model.dim)
    throw InvalidInput("lda_project: feature dimension mismatch");
  FeatureMatrix out(features.rows, k);
  for (std::size_t r = 0; r < features.rows; ++r) {
    const double* row = features.row(r);
    for (std::size_t i = 0; i < k; ++i) {
      double acc = 0.0;
      const auto& v = model.projection[i];
      for (std::size_t j = 0; j < model.dim; ++j) acc += v[j] * row[j];
      out.at(r, i) = acc;
    }
  }
  return out;
}

inline std::vector<Label> lda_predict(const LdaModel& model,
                                      const FeatureMatrix& features) {
  if (features.cols != model.dim)
    throw InvalidInput("lda_predict: feature dimension mismatch");
  std::vector<Label> out(features.rows);
  for (std::size_t r = 0; r < features.rows; ++r) {
    const double* row = features.row(r);
    double best = -std::numeric_limits<double>::infinity();
    int best_c = 0;
    for (int c = 0; c < model.n_classes; ++c) {
      double score = model.intercept[static_cast<std::size_t>(c)];
      const auto& coef = model.coef[static_cast<std::size_t>(c)];
      for (std::size_t j = 0; j < model.dim; ++j) score += coef[j] * row[j];
      if (score > best) {
        best = score;
        best_c = c;
      }
    }
    out[r] = static_cast<Label>(best_c);
  }
  return out;
}

}  // namespace sigread
