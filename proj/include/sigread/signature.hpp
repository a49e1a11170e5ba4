#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "sigread/types.hpp"

namespace sigread {

// Number of signature coefficients for a d-dimensional path truncated at
// the given depth: sum_{k=1..depth} d^k. The degree-0 term is implicit.
inline std::size_t sig_dim(std::size_t d, std::size_t depth) {
  std::size_t total = 0, level = 1;
  for (std::size_t k = 1; k <= depth; ++k) {
    level *= d;
    total += level;
  }
  return total;
}

// Truncated tensor-algebra signature, stored as a flat coefficient vector
// ordered by degree ascending, then lexicographically by word. The word
// (i_1,...,i_k) with letters in 1..d sits at
//   offset(k) + sum_r (i_r - 1) * d^(k - r).
struct Signature {
  std::size_t dim = 0;
  std::size_t depth = 0;
  std::vector<double> coeffs;

  Signature() = default;
  Signature(std::size_t d, std::size_t n)
      : dim(d), depth(n), coeffs(sig_dim(d, n), 0.0) {}

  std::size_t level_offset(std::size_t k) const { return sig_dim(dim, k - 1); }

  double& word(std::initializer_list<std::size_t> letters) {
    return coeffs[word_index(letters)];
  }
  double word(std::initializer_list<std::size_t> letters) const {
    return coeffs[word_index(letters)];
  }

  std::size_t word_index(std::initializer_list<std::size_t> letters) const {
    std::size_t idx = 0;
    for (std::size_t l : letters) idx = idx * dim + (l - 1);
    return level_offset(letters.size()) + idx;
  }
};

// A piecewise-linear path in d dimensions starting at the origin.
struct Path {
  std::size_t dim = 0;
  std::vector<double> points;  // flattened, length * dim

  std::size_t length() const { return dim == 0 ? 0 : points.size() / dim; }
  const double* point(std::size_t k) const { return points.data() + k * dim; }
};

// Per-sample nonnegative weights normalized to unit mean.
struct WeightProfile {
  std::vector<double> weights;
};

// Signature of a single linear segment: degree-k block is delta^{tensor k}/k!.
inline Signature segment_signature(const std::vector<double>& delta,
                                   std::size_t depth) {
  const std::size_t d = delta.size();
  Signature sig(d, depth);
  std::size_t prev_off = 0, prev_len = 0;
  std::size_t off = 0;
  for (std::size_t k = 1; k <= depth; ++k) {
    const std::size_t len = prev_len == 0 ? d : prev_len * d;
    if (k == 1) {
      for (std::size_t i = 0; i < d; ++i) sig.coeffs[off + i] = delta[i];
    } else {
      const double inv_k = 1.0 / static_cast<double>(k);
      for (std::size_t p = 0; p < prev_len; ++p) {
        const double base = sig.coeffs[prev_off + p] * inv_k;
        for (std::size_t i = 0; i < d; ++i)
          sig.coeffs[off + p * d + i] = base * delta[i];
      }
    }
    prev_off = off;
    prev_len = len;
    off += len;
  }
  return sig;
}

namespace detail {

// out[w] = sum over splits w = u.v of a[u] * b[v], empty words contributing 1.
inline void chen_concat_into(Signature& out, const Signature& a,
                             const Signature& b) {
  const std::size_t d = a.dim;
  const std::size_t depth = a.depth;
  out.dim = d;
  out.depth = depth;
  out.coeffs.assign(sig_dim(d, depth), 0.0);

  std::vector<std::size_t> off(depth + 2, 0);
  std::vector<std::size_t> len(depth + 1, 0);
  for (std::size_t k = 1; k <= depth; ++k) {
    len[k] = (k == 1) ? d : len[k - 1] * d;
    off[k + 1] = off[k] + len[k];
  }

  for (std::size_t k = 1; k <= depth; ++k) {
    double* dst = out.coeffs.data() + off[k];
    const double* ak = a.coeffs.data() + off[k];
    const double* bk = b.coeffs.data() + off[k];
    for (std::size_t w = 0; w < len[k]; ++w) dst[w] = ak[w] + bk[w];
    for (std::size_t p = 1; p < k; ++p) {
      const std::size_t q = k - p;
      const double* ap = a.coeffs.data() + off[p];
      const double* bq = b.coeffs.data() + off[q];
      for (std::size_t u = 0; u < len[p]; ++u) {
        const double au = ap[u];
        if (au == 0.0) continue;
        double* row = dst + u * len[q];
        for (std::size_t v = 0; v < len[q]; ++v) row[v] += au * bq[v];
      }
    }
  }
}

}  // namespace detail

// Chen's identity: signature of the concatenated path.
inline Signature chen_concat(const Signature& a, const Signature& b) {
  if (a.dim != b.dim || a.depth != b.depth)
    throw InvalidInput("chen_concat: dim/depth mismatch");
  Signature out;
  detail::chen_concat_into(out, a, b);
  return out;
}

// Signature of a piecewise-linear path: left-fold of Chen concatenation over
// the tensor exponentials of successive increments.
inline Signature signature(const Path& path, std::size_t depth) {
  const std::size_t d = path.dim;
  Signature acc(d, depth);
  Signature next;
  std::vector<double> delta(d);
  bool first = true;
  for (std::size_t k = 0; k + 1 < path.length(); ++k) {
    const double* p0 = path.point(k);
    const double* p1 = path.point(k + 1);
    for (std::size_t i = 0; i < d; ++i) delta[i] = p1[i] - p0[i];
    Signature seg = segment_signature(delta, depth);
    if (first) {
      acc = std::move(seg);
      first = false;
    } else {
      detail::chen_concat_into(next, acc, seg);
      std::swap(acc, next);
    }
  }
  return acc;
}

// Levy area from the degree-2 block: 0.5 * (S^{i,j} - S^{j,i}).
inline double levy_area(const Signature& sig, std::size_t axis_i,
                        std::size_t axis_j) {
  if (sig.depth < 2) throw InvalidInput("levy_area: depth < 2 required");
  if (axis_i == axis_j || axis_i < 1 || axis_j < 1 || axis_i > sig.dim ||
      axis_j > sig.dim)
    throw InvalidInput("levy_area: letters must be distinct and <= dim");
  return 0.5 * (sig.word({axis_i, axis_j}) - sig.word({axis_j, axis_i}));
}

// Weighted cumulative path from an I/Q record. The first point is the origin;
// point k is the weighted cumulative sum of the first k samples, with an
// optional normalized-time coordinate k/n.
inline Path build_path(const Complex* trace, std::size_t n,
                       const WeightProfile& weights, bool time_augment) {
  if (weights.weights.size() != n)
    throw InvalidInput("build_path: trace/weights length mismatch");
  Path path;
  path.dim = time_augment ? 3 : 2;
  path.points.assign((n + 1) * path.dim, 0.0);
  double acc_i = 0.0, acc_q = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    const double w = weights.weights[k - 1];
    acc_i += w * trace[k - 1].real();
    acc_q += w * trace[k - 1].imag();
    double* p = path.points.data() + k * path.dim;
    p[0] = acc_i;
    p[1] = acc_q;
    if (time_augment) p[2] = static_cast<double>(k) / static_cast<double>(n);
  }
  return path;
}

inline Path build_path(const std::vector<Complex>& trace,
                       const WeightProfile& weights, bool time_augment) {
  return build_path(trace.data(), trace.size(), weights, time_augment);
}

// Endpoint displacement on the (I, Q) coordinates; equals the degree-1
// signature block restricted to the first two letters.
inline Complex integrated_feature(const Path& path) {
  const double* last = path.point(path.length() - 1);
  const double* first = path.point(0);
  return {last[0] - first[0], last[1] - first[1]};
}

// Weight envelope from mean-trace differences between prepared-state classes:
// for each sample, the mean over unordered class pairs of |mu_a - mu_b|,
// rescaled to unit mean. Degenerate all-zero differences fall back to
// uniform weights.
inline WeightProfile compute_weights(const TraceSet& ts) {
  const std::size_t n = ts.n_samples;
  std::vector<std::vector<Complex>> means;
  std::vector<std::size_t> counts;
  std::vector<Label> classes;
  for (std::size_t r = 0; r < ts.n_traces; ++r) {
    const Label s = ts.prepared[r];
    std::size_t ci = 0;
    for (; ci < classes.size(); ++ci)
      if (classes[ci] == s) break;
    if (ci == classes.size()) {
      classes.push_back(s);
      means.emplace_back(n, Complex{0.0, 0.0});
      counts.push_back(0);
    }
    const Complex* tr = ts.trace(r);
    for (std::size_t j = 0; j < n; ++j) means[ci][j] += tr[j];
    ++counts[ci];
  }
  if (classes.size() < 2)
    throw InvalidInput("compute_weights: need at least 2 prepared-state classes");
  double max_mean_mag = 0.0;
  for (std::size_t ci = 0; ci < classes.size(); ++ci)
    for (std::size_t j = 0; j < n; ++j) {
      means[ci][j] /= static_cast<double>(counts[ci]);
      max_mean_mag = std::max(max_mean_mag, std::abs(means[ci][j]));
    }

  WeightProfile profile;
  profile.weights.assign(n, 0.0);
  std::size_t n_pairs = 0;
  for (std::size_t a = 0; a < classes.size(); ++a)
    for (std::size_t b = a + 1; b < classes.size(); ++b) {
      for (std::size_t j = 0; j < n; ++j)
        profile.weights[j] += std::abs(means[a][j] - means[b][j]);
      ++n_pairs;
    }
  double total = 0.0, peak = 0.0;
  for (double& w : profile.weights) {
    w /= static_cast<double>(n_pairs);
    total += w;
    peak = std::max(peak, w);
  }
  if (peak < 1e-12 * max_mean_mag || total == 0.0) {
    profile.weights.assign(n, 1.0);
    return profile;
  }
  const double scale = static_cast<double>(n) / total;
  for (double& w : profile.weights) w *= scale;
  return profile;
}

// Renormalize a weight prefix to unit mean (used when featurizing a window
// shorter than the full record).
inline WeightProfile window_weights(const WeightProfile& weights,
                                    std::size_t window) {
  WeightProfile out;
  out.weights.assign(weights.weights.begin(), weights.weights.begin() + window);
  double total = 0.0;
  for (double w : out.weights) total += w;
  if (total > 0.0) {
    const double scale = static_cast<double>(window) / total;
    for (double& w : out.weights) w *= scale;
  } else {
    out.weights.assign(window, 1.0);
  }
  return out;
}

// One signature row per trace, computed over the leading `window` samples.
inline FeatureMatrix batch_featurize(const TraceSet& ts,
                                     const WeightProfile& weights,
                                     std::size_t depth, bool time_augment,
                                     std::size_t window) {
  if (ts.n_traces == 0) throw InvalidInput("batch_featurize: empty trace set");
  if (window == 0 || window > ts.n_samples)
    throw InvalidInput("batch_featurize: window out of range");
  const WeightProfile w = window_weights(weights, window);
  const std::size_t d = time_augment ? 3 : 2;
  FeatureMatrix features(ts.n_traces, sig_dim(d, depth));
  for (std::size_t r = 0; r < ts.n_traces; ++r) {
    const Path path = build_path(ts.trace(r), window, w, time_augment);
    const Signature sig = signature(path, depth);
    double* row = features.row(r);
    for (std::size_t c = 0; c < features.cols; ++c) row[c] = sig.coeffs[c];
  }
  return features;
}

}  // namespace sigread
