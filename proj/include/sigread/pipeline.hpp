#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "sigread/classify.hpp"
#include "sigread/metrics.hpp"
#include "sigread/rng.hpp"
#include "sigread/signature.hpp"
#include "sigread/simulate.hpp"
#include "sigread/trace_io.hpp"
#include "sigread/types.hpp"

namespace sigread {

enum class Method { gmm, rf, sig_rf };
enum class Target { assignment, eom };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::gmm: return "gmm";
    case Method::rf: return "rf";
    default: return "sig_rf";
  }
}

struct SearchSpace {
  std::vector<std::size_t> n_trees = {50, 60, 70, 80, 90, 100, 110, 120, 130, 140, 150};
  std::vector<std::size_t> max_depth = {10, 20, 30};
  std::vector<std::size_t> min_samples_split = {2, 5, 10};
  std::vector<std::size_t> min_samples_leaf = {1, 2, 4};
  std::size_t n_candidates = 20;
  std::size_t k_folds = 5;
};

struct DataSource {
  std::optional<SimConfig> simulator;
  std::size_t n_per_state = 1000;
  std::optional<std::filesystem::path> bundle;  // manifest path
};

struct ExperimentConfig {
  DataSource data;
  std::vector<Method> methods = {Method::gmm, Method::sig_rf};
  std::size_t sig_depth = 5;
  bool time_augment = true;
  std::size_t window = 0;  // 0 = full record
  std::vector<std::size_t> windows;  // for sweeps
  std::array<double, 3> ratios = {0.64, 0.16, 0.20};
  std::size_t n_repetitions = 10;
  std::uint64_t master_seed = 0;
  SearchSpace search;
  Target target = Target::assignment;
  bool post_select = false;
  CovarianceMode gmm_mode = CovarianceMode::spherical;

  void validate() const {
    if (n_repetitions < 1) throw InvalidInput("n_repetitions must be >= 1");
    const double sum = ratios[0] + ratios[1] + ratios[2];
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidInput("split ratios must sum to 1");
    for (double r : ratios)
      if (r < 0.0) throw InvalidInput("split ratios must be nonnegative");
    if (methods.empty()) throw InvalidInput("at least one method required");
    if (!data.simulator && !data.bundle)
      throw InvalidInput("data source missing (simulator config or bundle path)");
  }
};

struct PostSelectStats {
  std::vector<std::size_t> kept;   // per prepared class
  std::vector<std::size_t> total;  // per prepared class
};

inline TraceSet subset(const TraceSet& ts, const std::vector<std::size_t>& rows) {
  TraceSet out;
  out.n_traces = rows.size();
  out.n_samples = ts.n_samples;
  out.n_states = ts.n_states;
  out.sample_period_us = ts.sample_period_us;
  out.meta = ts.meta;
  out.data.resize(rows.size() * ts.n_samples);
  out.prepared.resize(rows.size());
  out.initial_check.resize(rows.size());
  out.final_state.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t r = rows[i];
    std::copy(ts.trace(r), ts.trace(r) + ts.n_samples,
              out.data.begin() + static_cast<std::ptrdiff_t>(i * ts.n_samples));
    out.prepared[i] = ts.prepared[r];
    out.initial_check[i] = ts.initial_check[r];
    out.final_state[i] = ts.final_state[r];
  }
  return out;
}

// Keeps traces whose initial check found the ground state; order preserved.
inline TraceSet post_select(const TraceSet& ts, PostSelectStats* stats = nullptr) {
  if (!ts.has_initial_check() && ts.n_traces > 0) {
    bool any_zero = false;
    for (Label l : ts.initial_check) any_zero = any_zero || l == 0;
    if (!any_zero) throw InvalidInput("post_select: no initial_check labels present");
  }
  std::vector<std::size_t> kept_rows;
  std::vector<std::size_t> kept(static_cast<std::size_t>(ts.n_states), 0);
  std::vector<std::size_t> total(static_cast<std::size_t>(ts.n_states), 0);
  for (std::size_t r = 0; r < ts.n_traces; ++r) {
    ++total[ts.prepared[r]];
    if (ts.initial_check[r] == 0) {
      kept_rows.push_back(r);
      ++kept[ts.prepared[r]];
    }
  }
  if (stats) {
    stats->kept = kept;
    stats->total = total;
  }
  return subset(ts, kept_rows);
}

// Per-class shuffling + floor allocation with largest-remainder correction.
inline std::array<std::vector<std::size_t>, 3> stratified_split_indices(
    const std::vector<Label>& labels, const std::array<double, 3>& ratios,
    std::uint64_t seed) {
  int k = 0;
  for (Label l : labels) k = std::max(k, static_cast<int>(l) + 1);
  std::array<std::vector<std::size_t>, 3> out;
  for (int c = 0; c < k; ++c) {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < labels.size(); ++r)
      if (labels[r] == c) rows.push_back(r);
    if (rows.empty()) continue;
    if (rows.size() < 3) throw InvalidInput("stratified_split: class too small");
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(c));
    std::shuffle(rows.begin(), rows.end(), rng.engine());

    std::array<std::size_t, 3> alloc{};
    std::array<double, 3> remainder{};
    std::size_t assigned = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      const double exact = ratios[s] * static_cast<double>(rows.size());
      alloc[s] = static_cast<std::size_t>(exact);
      remainder[s] = exact - static_cast<double>(alloc[s]);
      assigned += alloc[s];
    }
    std::array<std::size_t, 3> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t i = 0; assigned < rows.size(); ++i, ++assigned) ++alloc[order[i % 3]];

    std::size_t pos = 0;
    for (std::size_t s = 0; s < 3; ++s)
      for (std::size_t i = 0; i < alloc[s]; ++i) out[s].push_back(rows[pos++]);
  }
  for (auto& split : out) std::sort(split.begin(), split.end());
  return out;
}

inline std::array<TraceSet, 3> stratified_split(const TraceSet& ts,
                                                const std::array<double, 3>& ratios,
                                                std::uint64_t seed) {
  const auto idx = stratified_split_indices(ts.prepared, ratios, seed);
  return {subset(ts, idx[0]), subset(ts, idx[1]), subset(ts, idx[2])};
}

// Uniform draws from the search space, deduplicated, each scored by mean
// accuracy over stratified k-fold cross validation. Ties go to the earliest
// draw.
inline RfHyperparams random_search(const FeatureMatrix& features,
                                   const std::vector<Label>& labels,
                                   const SearchSpace& space, std::uint64_t seed) {
  const int k = detail::count_classes(labels);
  std::vector<std::size_t> class_count(static_cast<std::size_t>(k), 0);
  for (Label l : labels) ++class_count[l];
  for (std::size_t c : class_count)
    if (c < space.k_folds)
      throw InvalidInput("random_search: class smaller than k_folds");

  Rng draw_rng = Rng::stream(seed, 0xC0FFEE);
  std::vector<RfHyperparams> candidates;
  for (std::size_t i = 0; i < space.n_candidates; ++i) {
    RfHyperparams hp;
    hp.n_trees = space.n_trees[draw_rng.uniform_index(space.n_trees.size())];
    hp.max_depth = space.max_depth[draw_rng.uniform_index(space.max_depth.size())];
    hp.min_samples_split =
        space.min_samples_split[draw_rng.uniform_index(space.min_samples_split.size())];
    hp.min_samples_leaf =
        space.min_samples_leaf[draw_rng.uniform_index(space.min_samples_leaf.size())];
    const bool dup = std::any_of(
        candidates.begin(), candidates.end(), [&](const RfHyperparams& o) {
          return o.n_trees == hp.n_trees && o.max_depth == hp.max_depth &&
                 o.min_samples_split == hp.min_samples_split &&
                 o.min_samples_leaf == hp.min_samples_leaf;
        });
    if (!dup) candidates.push_back(hp);
  }

  // A single unique candidate needs no cross validation.
  if (candidates.size() == 1) return candidates.front();

  // Stratified fold assignment: per-class shuffle, then round-robin.
  std::vector<std::size_t> fold(labels.size(), 0);
  for (int c = 0; c < k; ++c) {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < labels.size(); ++r)
      if (labels[r] == c) rows.push_back(r);
    Rng rng = Rng::stream(seed, 0xF01D + static_cast<std::uint64_t>(c));
    std::shuffle(rows.begin(), rows.end(), rng.engine());
    for (std::size_t i = 0; i < rows.size(); ++i) fold[rows[i]] = i % space.k_folds;
  }

  double best_score = -1.0;
  RfHyperparams best = candidates.front();
  for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
    double correct = 0.0, evaluated = 0.0;
    for (std::size_t f = 0; f < space.k_folds; ++f) {
      std::vector<std::size_t> train_rows, val_rows;
      for (std::size_t r = 0; r < labels.size(); ++r)
        (fold[r] == f ? val_rows : train_rows).push_back(r);
      FeatureMatrix train_x(train_rows.size(), features.cols);
      std::vector<Label> train_y(train_rows.size());
      for (std::size_t i = 0; i < train_rows.size(); ++i) {
        std::copy(features.row(train_rows[i]), features.row(train_rows[i]) + features.cols,
                  train_x.row(i));
        train_y[i] = labels[train_rows[i]];
      }
      FeatureMatrix val_x(val_rows.size(), features.cols);
      for (std::size_t i = 0; i < val_rows.size(); ++i)
        std::copy(features.row(val_rows[i]), features.row(val_rows[i]) + features.cols,
                  val_x.row(i));
      const ForestModel model =
          rf_fit(train_x, train_y, candidates[ci],
                 derive_stream(seed, 0xCF * (ci + 1) + f));
      const std::vector<Label> pred = rf_predict(model, val_x);
      for (std::size_t i = 0; i < val_rows.size(); ++i)
        if (pred[i] == labels[val_rows[i]]) correct += 1.0;
      evaluated += static_cast<double>(val_rows.size());
    }
    const double score = correct / evaluated;
    if (score > best_score) {
      best_score = score;
      best = candidates[ci];
    }
  }
  return best;
}

struct MethodReport {
  Method method = Method::gmm;
  std::vector<double> per_rep_fidelity;
  ConfusionMatrix pooled_confusion;  // summed over repetitions

  double mean_fidelity() const {
    double total = 0.0;
    for (double f : per_rep_fidelity) total += f;
    return total / static_cast<double>(per_rep_fidelity.size());
  }
  double std_fidelity() const {  // population std
    const double mean = mean_fidelity();
    double sq = 0.0;
    for (double f : per_rep_fidelity) sq += (f - mean) * (f - mean);
    return std::sqrt(sq / static_cast<double>(per_rep_fidelity.size()));
  }
  double mean_infidelity() const { return 1.0 - mean_fidelity(); }
};

struct ExperimentReport {
  std::size_t window = 0;
  Target target = Target::assignment;
  std::uint64_t master_seed = 0;
  std::size_t n_repetitions = 0;
  std::vector<MethodReport> methods;
  std::vector<double> baseline_per_rep_fidelity;  // eom target only

  double baseline_mean_infidelity() const {
    if (baseline_per_rep_fidelity.empty()) return -1.0;
    double total = 0.0;
    for (double f : baseline_per_rep_fidelity) total += f;
    return 1.0 - total / static_cast<double>(baseline_per_rep_fidelity.size());
  }
};

namespace detail {

// Integration-endpoint feature (2 columns) over the leading window samples.
inline FeatureMatrix integrated_features(const TraceSet& ts,
                                         const WeightProfile& weights,
                                         std::size_t window) {
  const WeightProfile w = window_weights(weights, window);
  FeatureMatrix out(ts.n_traces, 2);
  for (std::size_t r = 0; r < ts.n_traces; ++r) {
    const Complex* tr = ts.trace(r);
    double acc_i = 0.0, acc_q = 0.0;
    for (std::size_t j = 0; j < window; ++j) {
      acc_i += w.weights[j] * tr[j].real();
      acc_q += w.weights[j] * tr[j].imag();
    }
    out.at(r, 0) = acc_i;
    out.at(r, 1) = acc_q;
  }
  return out;
}

// Weighted raw record: 2*window columns, I and Q interleaved per sample.
inline FeatureMatrix record_features(const TraceSet& ts,
                                     const WeightProfile& weights,
                                     std::size_t window) {
  const WeightProfile w = window_weights(weights, window);
  FeatureMatrix out(ts.n_traces, 2 * window);
  for (std::size_t r = 0; r < ts.n_traces; ++r) {
    const Complex* tr = ts.trace(r);
    double* row = out.row(r);
    for (std::size_t j = 0; j < window; ++j) {
      row[2 * j] = w.weights[j] * tr[j].real();
      row[2 * j + 1] = w.weights[j] * tr[j].imag();
    }
  }
  return out;
}

inline FeatureMatrix take_rows(const FeatureMatrix& m,
                               const std::vector<std::size_t>& rows) {
  FeatureMatrix out(rows.size(), m.cols);
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(m.row(rows[i]), m.row(rows[i]) + m.cols, out.row(i));
  return out;
}

template <typename T>
inline std::vector<T> take(const std::vector<T>& v,
                           const std::vector<std::size_t>& rows) {
  std::vector<T> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = v[rows[i]];
  return out;
}

}  // namespace detail

// Shared-data evaluation across a list of windows. Each repetition draws its
// own dataset and split from a seed mixed from (master_seed, rep index);
// weights, hyperparameters, and all fits see training rows only.
inline std::vector<ExperimentReport> run_windows(
    const ExperimentConfig& config, const std::vector<std::size_t>& windows) {
  config.validate();
  if (windows.empty()) throw InvalidInput("run_windows: empty window list");

  std::optional<TraceSet> bundle_data;
  if (config.data.bundle) bundle_data = load_bundle(*config.data.bundle);

  std::vector<ExperimentReport> reports(windows.size());
  for (std::size_t wi = 0; wi < windows.size(); ++wi) {
    reports[wi].window = windows[wi];
    reports[wi].target = config.target;
    reports[wi].master_seed = config.master_seed;
    reports[wi].n_repetitions = config.n_repetitions;
    for (Method m : config.methods) {
      MethodReport mr;
      mr.method = m;
      reports[wi].methods.push_back(std::move(mr));
    }
  }

  for (std::size_t rep = 0; rep < config.n_repetitions; ++rep) {
    const std::uint64_t rep_seed = derive_stream(config.master_seed, rep + 1);
    TraceSet ts;
    if (config.data.simulator) {
      SimConfig sim = *config.data.simulator;
      sim.seed = rep_seed;
      ts = simulate_traces(sim, config.data.n_per_state);
    } else {
      ts = *bundle_data;
    }
    if (config.post_select) ts = post_select(ts);

    const auto split = stratified_split_indices(ts.prepared, config.ratios, rep_seed);
    const std::vector<std::size_t>& train_rows = split[0];
    const std::vector<std::size_t>& test_rows = split[2];

    const std::vector<Label>* truth_source = nullptr;
    if (config.target == Target::assignment) {
      truth_source = &ts.prepared;
    } else {
      if (!ts.has_final_labels())
        throw InvalidInput("eom target requires final labels");
      truth_source = &ts.final_state;
    }
    const std::vector<Label> train_y = detail::take(*truth_source, train_rows);
    const std::vector<Label> test_y = detail::take(*truth_source, test_rows);

    const WeightProfile weights = compute_weights(subset(ts, train_rows));

    for (std::size_t wi = 0; wi < windows.size(); ++wi) {
      const std::size_t window = windows[wi] == 0 ? ts.n_samples : windows[wi];
      if (window > ts.n_samples)
        throw InvalidInput("window exceeds trace length");
      ExperimentReport& report = reports[wi];
      report.window = window;

      if (config.target == Target::eom &&
          report.baseline_per_rep_fidelity.size() == rep) {
        report.baseline_per_rep_fidelity.push_back(baseline_eom(
            detail::take(ts.prepared, test_rows), test_y, ts.n_states));
      }

      for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
        const Method method = config.methods[mi];
        FeatureMatrix features;
        switch (method) {
          case Method::gmm:
            features = detail::integrated_features(ts, weights, window);
            break;
          case Method::rf:
            features = detail::record_features(ts, weights, window);
            break;
          case Method::sig_rf:
            features = batch_featurize(ts, weights, config.sig_depth,
                                       config.time_augment, window);
            break;
        }
        const FeatureMatrix train_x = detail::take_rows(features, train_rows);
        const FeatureMatrix test_x = detail::take_rows(features, test_rows);

        std::vector<Label> pred;
        if (method == Method::gmm) {
          const GmmModel model = gmm_fit(train_x, train_y, config.gmm_mode);
          pred = gmm_predict(model, test_x);
        } else {
          const std::uint64_t fit_seed =
              derive_stream(rep_seed, 0xF17 + 1000 * wi + mi);
          const RfHyperparams best =
              random_search(train_x, train_y, config.search, fit_seed);
          const ForestModel model = rf_fit(train_x, train_y, best, fit_seed);
          pred = rf_predict(model, test_x);
        }

        const ConfusionMatrix cm = confusion(pred, test_y, ts.n_states);
        MethodReport& mr = report.methods[mi];
        mr.per_rep_fidelity.push_back(assignment_fidelity(cm));
        if (mr.pooled_confusion.counts.empty()) {
          mr.pooled_confusion = cm;
        } else {
          for (std::size_t i = 0; i < cm.counts.size(); ++i)
            mr.pooled_confusion.counts[i] += cm.counts[i];
        }
      }
    }
  }
  return reports;
}

inline ExperimentReport run_experiment(const ExperimentConfig& config) {
  return run_windows(config, {config.window})[0];
}

inline std::vector<ExperimentReport> window_sweep(
    const ExperimentConfig& config, const std::vector<std::size_t>& windows) {
  if (!std::is_sorted(windows.begin(), windows.end()))
    throw InvalidInput("window_sweep: windows must be sorted ascending");
  return run_windows(config, windows);
}

}  // namespace sigread
