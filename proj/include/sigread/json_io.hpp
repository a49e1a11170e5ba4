#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <json.hpp>

#include "sigread/classify.hpp"
#include "sigread/pipeline.hpp"
#include "sigread/simulate.hpp"

namespace sigread {

using nlohmann::json;

// ------------------------------- SimConfig --------------------------------

inline json sim_config_to_json(const SimConfig& cfg) {
  return json{
      {"n_states", cfg.n_states},
      {"T_r", cfg.readout_window_us},
      {"sample_period", cfg.sample_period_us},
      {"kappa", cfg.kappa_mhz},
      {"chi", cfg.chi_mhz},
      {"drive_amp", cfg.drive_amp},
      {"noise_sigma", cfg.noise_sigma},
      {"rates", cfg.rates},
      {"prep_error", cfg.prep_error},
      {"emit_initial_check", cfg.emit_initial_check},
      {"seed", cfg.seed},
  };
}

inline SimConfig sim_config_from_json(const json& j) {
  SimConfig cfg;
  if (j.contains("preset")) {
    const std::string preset = j.at("preset").get<std::string>();
    if (preset == "oxf_qt")
      cfg = SimConfig::oxf_qt();
    else if (preset == "stress")
      cfg = SimConfig::stress();
    else
      throw InvalidInput("unknown simulator preset: " + preset);
  }
  if (j.contains("n_states")) cfg.n_states = j.at("n_states").get<int>();
  if (j.contains("T_r")) cfg.readout_window_us = j.at("T_r").get<double>();
  if (j.contains("sample_period"))
    cfg.sample_period_us = j.at("sample_period").get<double>();
  if (j.contains("kappa")) cfg.kappa_mhz = j.at("kappa").get<double>();
  if (j.contains("chi")) cfg.chi_mhz = j.at("chi").get<std::vector<double>>();
  if (j.contains("drive_amp")) cfg.drive_amp = j.at("drive_amp").get<double>();
  if (j.contains("noise_sigma")) cfg.noise_sigma = j.at("noise_sigma").get<double>();
  if (j.contains("rates"))
    cfg.rates = j.at("rates").get<std::vector<std::vector<double>>>();
  if (j.contains("prep_error")) cfg.prep_error = j.at("prep_error").get<double>();
  if (j.contains("emit_initial_check"))
    cfg.emit_initial_check = j.at("emit_initial_check").get<bool>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.validate();
  return cfg;
}

// ---------------------------- ExperimentConfig -----------------------------

inline Method method_from_string(const std::string& s) {
  if (s == "gmm") return Method::gmm;
  if (s == "rf") return Method::rf;
  if (s == "sig_rf") return Method::sig_rf;
  throw InvalidInput("unknown method: " + s);
}

inline SearchSpace search_space_from_json(const json& s) {
  SearchSpace space;
  if (s.contains("n_trees"))
    space.n_trees = s.at("n_trees").get<std::vector<std::size_t>>();
  if (s.contains("max_depth"))
    space.max_depth = s.at("max_depth").get<std::vector<std::size_t>>();
  if (s.contains("min_samples_split"))
    space.min_samples_split = s.at("min_samples_split").get<std::vector<std::size_t>>();
  if (s.contains("min_samples_leaf"))
    space.min_samples_leaf = s.at("min_samples_leaf").get<std::vector<std::size_t>>();
  if (s.contains("n_candidates"))
    space.n_candidates = s.at("n_candidates").get<std::size_t>();
  if (s.contains("k_folds")) space.k_folds = s.at("k_folds").get<std::size_t>();
  return space;
}

inline ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig cfg;
  const json& data = j.at("data");
  if (data.contains("simulator"))
    cfg.data.simulator = sim_config_from_json(data.at("simulator"));
  if (data.contains("bundle"))
    cfg.data.bundle = data.at("bundle").get<std::string>();
  if (data.contains("n_per_state"))
    cfg.data.n_per_state = data.at("n_per_state").get<std::size_t>();

  if (j.contains("methods")) {
    cfg.methods.clear();
    for (const auto& m : j.at("methods"))
      cfg.methods.push_back(method_from_string(m.get<std::string>()));
  } else if (j.contains("method")) {
    cfg.methods = {method_from_string(j.at("method").get<std::string>())};
  }
  if (j.contains("sig_depth")) cfg.sig_depth = j.at("sig_depth").get<std::size_t>();
  if (j.contains("time_augment")) cfg.time_augment = j.at("time_augment").get<bool>();
  if (j.contains("window")) cfg.window = j.at("window").get<std::size_t>();
  if (j.contains("windows"))
    cfg.windows = j.at("windows").get<std::vector<std::size_t>>();
  if (j.contains("ratios")) {
    const auto r = j.at("ratios").get<std::vector<double>>();
    if (r.size() != 3) throw InvalidInput("ratios must have 3 entries");
    cfg.ratios = {r[0], r[1], r[2]};
  }
  if (j.contains("n_repetitions"))
    cfg.n_repetitions = j.at("n_repetitions").get<std::size_t>();
  if (j.contains("seed")) cfg.master_seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("target")) {
    const std::string t = j.at("target").get<std::string>();
    if (t == "assignment")
      cfg.target = Target::assignment;
    else if (t == "eom")
      cfg.target = Target::eom;
    else
      throw InvalidInput("unknown target: " + t);
  }
  if (j.contains("post_select")) cfg.post_select = j.at("post_select").get<bool>();
  if (j.contains("gmm_covariance")) {
    const std::string m = j.at("gmm_covariance").get<std::string>();
    if (m == "spherical")
      cfg.gmm_mode = CovarianceMode::spherical;
    else if (m == "full")
      cfg.gmm_mode = CovarianceMode::full;
    else
      throw InvalidInput("unknown gmm_covariance: " + m);
  }
  if (j.contains("search")) cfg.search = search_space_from_json(j.at("search"));
  cfg.validate();
  return cfg;
}

// ------------------------------- Reports -----------------------------------

inline json method_report_to_json(const MethodReport& mr) {
  const int k = mr.pooled_confusion.n_classes;
  std::vector<double> per_class_infidelity;
  for (int c = 0; c < k; ++c)
    per_class_infidelity.push_back(1.0 - mr.pooled_confusion.prob(c, c));
  std::vector<std::vector<std::int64_t>> cm(static_cast<std::size_t>(k));
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b)
      cm[static_cast<std::size_t>(a)].push_back(mr.pooled_confusion.at(a, b));
  return json{
      {"method", method_name(mr.method)},
      {"per_class_infidelity", per_class_infidelity},
      {"overall_infidelity", mr.mean_infidelity()},
      {"mean", mr.mean_fidelity()},
      {"std", mr.std_fidelity()},
      {"n_reps", mr.per_rep_fidelity.size()},
      {"per_rep_fidelity", mr.per_rep_fidelity},
      {"pooled_confusion", cm},
  };
}

inline json report_to_json(const ExperimentReport& report) {
  json methods = json::array();
  for (const MethodReport& mr : report.methods)
    methods.push_back(method_report_to_json(mr));
  json out{
      {"window", report.window},
      {"target", report.target == Target::eom ? "eom" : "assignment"},
      {"seed", report.master_seed},
      {"n_reps", report.n_repetitions},
      {"methods", methods},
  };
  if (!report.baseline_per_rep_fidelity.empty()) {
    out["eom_infidelity_baseline"] = report.baseline_mean_infidelity();
    out["baseline_per_rep_fidelity"] = report.baseline_per_rep_fidelity;
  }
  return out;
}

// Table-I-style text rendering: method x (infidelity +- std).
inline std::string report_to_table(const ExperimentReport& report) {
  std::ostringstream out;
  out << "target: " << (report.target == Target::eom ? "eom" : "assignment")
      << "   window: " << report.window << "   reps: " << report.n_repetitions
      << "\n";
  out << std::left << std::setw(10) << "method" << std::right << std::setw(18)
      << "(1-F) x 100" << std::setw(12) << "std x 100" << "\n";
  out << std::fixed << std::setprecision(3);
  if (!report.baseline_per_rep_fidelity.empty())
    out << std::left << std::setw(10) << "baseline" << std::right << std::setw(18)
        << report.baseline_mean_infidelity() * 100.0 << std::setw(12) << 0.0 << "\n";
  for (const MethodReport& mr : report.methods)
    out << std::left << std::setw(10) << method_name(mr.method) << std::right
        << std::setw(18) << mr.mean_infidelity() * 100.0 << std::setw(12)
        << mr.std_fidelity() * 100.0 << "\n";
  return out.str();
}

// ------------------------------- Models ------------------------------------

inline json gmm_to_json(const GmmModel& m) {
  json j{
      {"format", "sigread-model"},
      {"version", 1},
      {"type", "gmm"},
      {"mode", m.mode == CovarianceMode::spherical ? "spherical" : "full"},
      {"dim", m.dim},
      {"n_classes", m.n_classes},
      {"means", m.means},
      {"priors", m.priors},
  };
  if (m.mode == CovarianceMode::spherical)
    j["sigma2"] = m.sigma2;
  else
    j["covariances"] = m.covs;
  return j;
}

inline GmmModel gmm_from_json(const json& j) {
  if (j.at("version").get<int>() != 1)
    throw std::runtime_error("unsupported model version");
  GmmModel m;
  m.mode = j.at("mode").get<std::string>() == "spherical" ? CovarianceMode::spherical
                                                          : CovarianceMode::full;
  m.dim = j.at("dim").get<std::size_t>();
  m.n_classes = j.at("n_classes").get<int>();
  m.means = j.at("means").get<std::vector<std::vector<double>>>();
  m.priors = j.at("priors").get<std::vector<double>>();
  if (m.mode == CovarianceMode::spherical)
    m.sigma2 = j.at("sigma2").get<std::vector<double>>();
  else
    m.covs = j.at("covariances").get<std::vector<std::vector<double>>>();
  return m;
}

inline json forest_to_json(const ForestModel& m) {
  json trees = json::array();
  for (const auto& tree : m.trees) {
    json nodes = json::array();
    for (const RfNode& node : tree) {
      if (node.feature < 0)
        nodes.push_back(json{{"probs", node.probs}});
      else
        nodes.push_back(json{{"feature", node.feature},
                             {"threshold", node.threshold},
                             {"left", node.left},
                             {"right", node.right}});
    }
    trees.push_back(std::move(nodes));
  }
  return json{
      {"format", "sigread-model"},
      {"version", 1},
      {"type", "rf"},
      {"dim", m.dim},
      {"n_classes", m.n_classes},
      {"seed", m.seed},
      {"hyperparams",
       {{"n_trees", m.hyperparams.n_trees},
        {"max_depth", m.hyperparams.max_depth},
        {"min_samples_split", m.hyperparams.min_samples_split},
        {"min_samples_leaf", m.hyperparams.min_samples_leaf}}},
      {"trees", std::move(trees)},
  };
}

inline ForestModel forest_from_json(const json& j) {
  if (j.at("version").get<int>() != 1)
    throw std::runtime_error("unsupported model version");
  ForestModel m;
  m.dim = j.at("dim").get<std::size_t>();
  m.n_classes = j.at("n_classes").get<int>();
  m.seed = j.at("seed").get<std::uint64_t>();
  const json& hp = j.at("hyperparams");
  m.hyperparams.n_trees = hp.at("n_trees").get<std::size_t>();
  m.hyperparams.max_depth = hp.at("max_depth").get<std::size_t>();
  m.hyperparams.min_samples_split = hp.at("min_samples_split").get<std::size_t>();
  m.hyperparams.min_samples_leaf = hp.at("min_samples_leaf").get<std::size_t>();
  for (const json& tree : j.at("trees")) {
    std::vector<RfNode> nodes;
    for (const json& n : tree) {
      RfNode node;
      if (n.contains("feature")) {
        node.feature = n.at("feature").get<std::int32_t>();
        node.threshold = n.at("threshold").get<double>();
        node.left = n.at("left").get<std::int32_t>();
        node.right = n.at("right").get<std::int32_t>();
      } else {
        node.probs = n.at("probs").get<std::vector<double>>();
      }
      nodes.push_back(std::move(node));
    }
    m.trees.push_back(std::move(nodes));
  }
  return m;
}

inline json lda_to_json(const LdaModel& m) {
  return json{
      {"format", "sigread-model"},
      {"version", 1},
      {"type", "lda"},
      {"dim", m.dim},
      {"n_classes", m.n_classes},
      {"means", m.means},
      {"priors", m.priors},
      {"projection", m.projection},
      {"eigenvalues", m.eigenvalues},
      {"coef", m.coef},
      {"intercept", m.intercept},
  };
}

inline LdaModel lda_from_json(const json& j) {
  if (j.at("version").get<int>() != 1)
    throw std::runtime_error("unsupported model version");
  LdaModel m;
  m.dim = j.at("dim").get<std::size_t>();
  m.n_classes = j.at("n_classes").get<int>();
  m.means = j.at("means").get<std::vector<std::vector<double>>>();
  m.priors = j.at("priors").get<std::vector<double>>();
  m.projection = j.at("projection").get<std::vector<std::vector<double>>>();
  m.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
  m.coef = j.at("coef").get<std::vector<std::vector<double>>>();
  m.intercept = j.at("intercept").get<std::vector<double>>();
  return m;
}

inline json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  return json::parse(in);
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace sigread
