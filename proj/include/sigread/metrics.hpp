#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "sigread/types.hpp"

namespace sigread {

// counts[a][b] = number of rows predicted a with truth b.
struct ConfusionMatrix {
  int n_classes = 0;
  std::vector<std::int64_t> counts;  // row-major, predicted-major

  std::int64_t& at(int pred, int truth) {
    return counts[static_cast<std::size_t>(pred) * static_cast<std::size_t>(n_classes) +
                  static_cast<std::size_t>(truth)];
  }
  std::int64_t at(int pred, int truth) const {
    return counts[static_cast<std::size_t>(pred) * static_cast<std::size_t>(n_classes) +
                  static_cast<std::size_t>(truth)];
  }
  std::int64_t truth_total(int truth) const {
    std::int64_t total = 0;
    for (int a = 0; a < n_classes; ++a) total += at(a, truth);
    return total;
  }
  // P(pred | truth)
  double prob(int pred, int truth) const {
    return static_cast<double>(at(pred, truth)) /
           static_cast<double>(truth_total(truth));
  }
};

inline ConfusionMatrix confusion(const std::vector<Label>& pred,
                                 const std::vector<Label>& truth, int k) {
  if (pred.size() != truth.size() || pred.empty())
    throw InvalidInput("confusion: label vectors must have equal nonzero length");
  ConfusionMatrix cm;
  cm.n_classes = k;
  cm.counts.assign(static_cast<std::size_t>(k) * static_cast<std::size_t>(k), 0);
  for (std::size_t r = 0; r < pred.size(); ++r) {
    if (pred[r] >= k || truth[r] >= k)
      throw InvalidInput("confusion: label out of range");
    ++cm.at(pred[r], truth[r]);
  }
  for (int b = 0; b < k; ++b)
    if (cm.truth_total(b) == 0) throw InvalidInput("confusion: empty truth class");
  return cm;
}

// F = mean over classes of P(i|i).
inline double assignment_fidelity(const ConfusionMatrix& cm) {
  double total = 0.0;
  for (int i = 0; i < cm.n_classes; ++i) total += cm.prob(i, i);
  return total / static_cast<double>(cm.n_classes);
}

// End-of-measurement fidelity: assignment fidelity against the final-state
// truth labels.
inline double eom_fidelity(const std::vector<Label>& pred_final,
                           const std::vector<Label>& truth_final, int k) {
  return assignment_fidelity(confusion(pred_final, truth_final, k));
}

// Baseline EOM method: the predicted end state is the prepared label.
inline double baseline_eom(const std::vector<Label>& prepared,
                           const std::vector<Label>& truth_final, int k) {
  return eom_fidelity(prepared, truth_final, k);
}

struct FidelityReport {
  std::vector<double> per_class_infidelity;
  double overall_infidelity = 0.0;
  double eom_infidelity = -1.0;  // negative when not evaluated
  double mean = 0.0;
  double std_dev = 0.0;
  std::size_t n_reps = 0;
  std::vector<double> per_rep_fidelity;
};

struct Rect {
  double x_min, x_max, y_min, y_max;
};

inline Rect joint_bounds(const FeatureMatrix& p, const FeatureMatrix& q,
                         double expand = 0.05) {
  Rect r{p.at(0, 0), p.at(0, 0), p.at(0, 1), p.at(0, 1)};
  auto fold = [&r](const FeatureMatrix& m) {
    for (std::size_t i = 0; i < m.rows; ++i) {
      r.x_min = std::min(r.x_min, m.at(i, 0));
      r.x_max = std::max(r.x_max, m.at(i, 0));
      r.y_min = std::min(r.y_min, m.at(i, 1));
      r.y_max = std::max(r.y_max, m.at(i, 1));
    }
  };
  fold(p);
  fold(q);
  const double dx = (r.x_max - r.x_min) * expand * 0.5;
  const double dy = (r.y_max - r.y_min) * expand * 0.5;
  r.x_min -= dx;
  r.x_max += dx;
  r.y_min -= dy;
  r.y_max += dy;
  return r;
}

// Hellinger distance between two 2-D sample sets, estimated on shared
// bins_per_axis x bins_per_axis histograms over `bounds`. Points outside the
// bounds clamp to the edge bins.
inline double hellinger_2d(const FeatureMatrix& samples_p,
                           const FeatureMatrix& samples_q,
                           std::size_t bins_per_axis, const Rect& bounds) {
  if (samples_p.rows == 0 || samples_q.rows == 0)
    throw InvalidInput("hellinger_2d: empty sample set");
  const std::size_t nb = bins_per_axis;
  auto histogram = [&](const FeatureMatrix& samples) {
    std::vector<double> h(nb * nb, 0.0);
    const double sx = static_cast<double>(nb) / (bounds.x_max - bounds.x_min);
    const double sy = static_cast<double>(nb) / (bounds.y_max - bounds.y_min);
    for (std::size_t r = 0; r < samples.rows; ++r) {
      auto clamp = [nb](double v) {
        if (v < 0.0) return std::size_t{0};
        const auto b = static_cast<std::size_t>(v);
        return b >= nb ? nb - 1 : b;
      };
      const std::size_t bx = clamp((samples.at(r, 0) - bounds.x_min) * sx);
      const std::size_t by = clamp((samples.at(r, 1) - bounds.y_min) * sy);
      h[bx * nb + by] += 1.0;
    }
    for (double& v : h) v /= static_cast<double>(samples.rows);
    return h;
  };
  const std::vector<double> p = histogram(samples_p);
  const std::vector<double> q = histogram(samples_q);
  // H^2 = 1 - sum sqrt(p q) = 0.5 * sum (sqrt(p) - sqrt(q))^2; the latter is
  // exact for identical histograms and never goes negative.
  double h2 = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double diff = std::sqrt(p[i]) - std::sqrt(q[i]);
    h2 += 0.5 * diff * diff;
  }
  return std::sqrt(std::min(1.0, h2));
}

}  // namespace sigread
