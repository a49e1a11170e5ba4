// Command-line front end: simulate | featurize | train | evaluate | sweep |
// project | report. Configs are JSON documents; all machine outputs land
// under --out, logs go to stderr.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "sigread/json_io.hpp"
#include "sigread/pipeline.hpp"
#include "sigread/signature.hpp"
#include "sigread/simulate.hpp"
#include "sigread/trace_io.hpp"

namespace fs = std::filesystem;
using sigread::json;

namespace {

// Applies a `--set key.path=value` override to a JSON config.
void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw sigread::InvalidInput("--set expects key.path=value, got: " + assignment);
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json* node = &config;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty()) throw sigread::InvalidInput("empty key in --set path: " + path);
    if (dot == std::string::npos) {
      json value;
      try {
        value = json::parse(raw);
      } catch (const json::parse_error&) {
        value = raw;  // plain string
      }
      (*node)[key] = value;
      break;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON config path")->required();
  cmd->add_option("--out", args.out_dir, "output directory")->required();
  cmd->add_option("--seed", args.seed, "seed override");
  cmd->add_option("--set", args.overrides, "config override key.path=value");
}

json load_config(const CommonArgs& args) {
  json config = sigread::load_json_file(args.config_path);
  for (const std::string& o : args.overrides) apply_override(config, o);
  if (args.seed) config["seed"] = *args.seed;
  return config;
}

// Resolve the trace set named by a config's "data" block.
sigread::TraceSet resolve_data(const json& config, std::uint64_t seed) {
  const json& data = config.at("data");
  if (data.contains("bundle"))
    return sigread::load_bundle(data.at("bundle").get<std::string>());
  sigread::SimConfig sim = sigread::sim_config_from_json(data.at("simulator"));
  sim.seed = seed;
  return sigread::simulate_traces(sim, data.value("n_per_state", std::size_t{1000}));
}

int cmd_simulate(const CommonArgs& args) {
  json config = load_config(args);
  sigread::SimConfig sim = sigread::sim_config_from_json(config);
  if (args.seed) sim.seed = *args.seed;
  const std::size_t n_per_state = config.value("n_per_state", std::size_t{100});
  const sigread::TraceSet ts = sigread::simulate_traces(sim, n_per_state);
  fs::create_directories(args.out_dir);
  sigread::save_bundle(ts, args.out_dir);
  json resolved = sigread::sim_config_to_json(sim);
  resolved["n_per_state"] = n_per_state;
  sigread::write_json_file(fs::path(args.out_dir) / "config_resolved.json", resolved);
  std::cerr << "wrote bundle with " << ts.n_traces << " traces to " << args.out_dir
            << "\n";
  return 0;
}

int cmd_featurize(const CommonArgs& args) {
  const json config = load_config(args);
  const sigread::TraceSet ts = resolve_data(config, config.value("seed", std::uint64_t{0}));
  const sigread::WeightProfile weights = sigread::compute_weights(ts);
  const std::size_t depth = config.value("sig_depth", std::size_t{5});
  const bool time_augment = config.value("time_augment", true);
  std::size_t window = config.value("window", std::size_t{0});
  if (window == 0) window = ts.n_samples;
  const sigread::FeatureMatrix features =
      sigread::batch_featurize(ts, weights, depth, time_augment, window);
  sigread::save_features(features, args.out_dir);
  std::cerr << "wrote " << features.rows << " x " << features.cols
            << " feature matrix to " << args.out_dir << "\n";
  return 0;
}

int cmd_train(const CommonArgs& args) {
  const json config = load_config(args);
  const std::uint64_t seed = config.value("seed", std::uint64_t{0});
  const sigread::TraceSet ts = resolve_data(config, seed);
  const sigread::Method method =
      sigread::method_from_string(config.value("method", std::string{"sig_rf"}));
  const bool eom = config.value("target", std::string{"assignment"}) == "eom";
  const std::vector<sigread::Label>& labels = eom ? ts.final_state : ts.prepared;

  const sigread::WeightProfile weights = sigread::compute_weights(ts);
  std::size_t window = config.value("window", std::size_t{0});
  if (window == 0) window = ts.n_samples;

  json model_json;
  if (method == sigread::Method::gmm) {
    sigread::FeatureMatrix features(ts.n_traces, 2);
    const sigread::WeightProfile w = sigread::window_weights(weights, window);
    for (std::size_t r = 0; r < ts.n_traces; ++r) {
      const sigread::Complex z = sigread::integrated_feature(
          sigread::build_path(ts.trace(r), window, w, false));
      features.at(r, 0) = z.real();
      features.at(r, 1) = z.imag();
    }
    const auto mode = config.value("gmm_covariance", std::string{"spherical"}) == "full"
                          ? sigread::CovarianceMode::full
                          : sigread::CovarianceMode::spherical;
    model_json = sigread::gmm_to_json(sigread::gmm_fit(features, labels, mode));
  } else {
    sigread::FeatureMatrix features;
    if (method == sigread::Method::sig_rf) {
      features = sigread::batch_featurize(ts, weights,
                                          config.value("sig_depth", std::size_t{5}),
                                          config.value("time_augment", true), window);
    } else {
      features = sigread::detail::record_features(ts, weights, window);
    }
    sigread::SearchSpace space;
    if (config.contains("search"))
      space = sigread::search_space_from_json(config.at("search"));
    const sigread::RfHyperparams best =
        sigread::random_search(features, labels, space, seed);
    model_json = sigread::forest_to_json(sigread::rf_fit(features, labels, best, seed));
  }
  fs::create_directories(args.out_dir);
  sigread::write_json_file(fs::path(args.out_dir) / "model.json", model_json);
  std::cerr << "wrote model.json to " << args.out_dir << "\n";
  return 0;
}

int cmd_evaluate(const CommonArgs& args) {
  const json config = load_config(args);
  const sigread::ExperimentConfig cfg = sigread::experiment_config_from_json(config);
  const sigread::ExperimentReport report = sigread::run_experiment(cfg);
  fs::create_directories(args.out_dir);
  sigread::write_json_file(fs::path(args.out_dir) / "report.json",
                           sigread::report_to_json(report));
  std::ofstream table(fs::path(args.out_dir) / "report.txt");
  table << sigread::report_to_table(report);
  std::cerr << sigread::report_to_table(report);
  return 0;
}

int cmd_sweep(const CommonArgs& args) {
  const json config = load_config(args);
  const sigread::ExperimentConfig cfg = sigread::experiment_config_from_json(config);
  if (cfg.windows.empty())
    throw sigread::InvalidInput("sweep requires a 'windows' list in the config");
  const std::vector<sigread::ExperimentReport> reports =
      sigread::window_sweep(cfg, cfg.windows);
  fs::create_directories(args.out_dir);
  std::ofstream curves(fs::path(args.out_dir) / "curves.csv");
  curves << "window,method,mean_infidelity,std\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    std::ostringstream name;
    name << "report_w" << reports[i].window << ".json";
    sigread::write_json_file(fs::path(args.out_dir) / name.str(),
                             sigread::report_to_json(reports[i]));
    for (const sigread::MethodReport& mr : reports[i].methods)
      curves << reports[i].window << "," << sigread::method_name(mr.method) << ","
             << mr.mean_infidelity() << "," << mr.std_fidelity() << "\n";
  }
  std::cerr << "wrote " << reports.size() << " window reports and curves.csv to "
            << args.out_dir << "\n";
  return 0;
}

int cmd_project(const CommonArgs& args) {
  const json config = load_config(args);
  const sigread::TraceSet ts = resolve_data(config, config.value("seed", std::uint64_t{0}));
  if (ts.n_traces == 0) throw sigread::InvalidInput("project: empty input");
  const sigread::WeightProfile weights = sigread::compute_weights(ts);
  std::size_t window = config.value("window", std::size_t{0});
  if (window == 0) window = ts.n_samples;
  const sigread::FeatureMatrix features = sigread::batch_featurize(
      ts, weights, config.value("sig_depth", std::size_t{5}),
      config.value("time_augment", true), window);
  const sigread::LdaModel lda = sigread::lda_fit(features, ts.prepared);
  const std::size_t k = std::min<std::size_t>(2, lda.projection.size());
  const sigread::FeatureMatrix proj = sigread::lda_project(lda, features, k);
  fs::create_directories(args.out_dir);
  std::ofstream out(fs::path(args.out_dir) / "projection.csv");
  out << "x,y,prepared,final\n";
  out << std::setprecision(17);
  for (std::size_t r = 0; r < proj.rows; ++r)
    out << proj.at(r, 0) << "," << (k > 1 ? proj.at(r, 1) : 0.0) << ","
        << static_cast<int>(ts.prepared[r]) << ","
        << static_cast<int>(ts.final_state[r]) << "\n";
  std::cerr << "wrote projection.csv (" << proj.rows << " rows) to " << args.out_dir
            << "\n";
  return 0;
}

int cmd_report(const CommonArgs& args) {
  const json report_json = load_config(args);
  sigread::ExperimentReport report;
  report.window = report_json.value("window", std::size_t{0});
  report.target = report_json.value("target", std::string{"assignment"}) == "eom"
                      ? sigread::Target::eom
                      : sigread::Target::assignment;
  report.master_seed = report_json.value("seed", std::uint64_t{0});
  report.n_repetitions = report_json.value("n_reps", std::size_t{0});
  for (const json& mj : report_json.at("methods")) {
    sigread::MethodReport mr;
    mr.method = sigread::method_from_string(mj.at("method").get<std::string>());
    mr.per_rep_fidelity = mj.at("per_rep_fidelity").get<std::vector<double>>();
    const auto cm = mj.at("pooled_confusion").get<std::vector<std::vector<std::int64_t>>>();
    mr.pooled_confusion.n_classes = static_cast<int>(cm.size());
    for (const auto& row : cm)
      mr.pooled_confusion.counts.insert(mr.pooled_confusion.counts.end(), row.begin(),
                                        row.end());
    report.methods.push_back(std::move(mr));
  }
  if (report_json.contains("baseline_per_rep_fidelity"))
    report.baseline_per_rep_fidelity =
        report_json.at("baseline_per_rep_fidelity").get<std::vector<double>>();
  fs::create_directories(args.out_dir);
  std::ofstream table(fs::path(args.out_dir) / "table.txt");
  table << sigread::report_to_table(report);
  std::cerr << sigread::report_to_table(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"path-signature qubit-readout discrimination pipeline"};
  app.require_subcommand(1);

  CommonArgs args;
  int (*handler)(const CommonArgs&) = nullptr;
  auto register_cmd = [&](const std::string& name, const std::string& desc,
                          int (*fn)(const CommonArgs&)) {
    CLI::App* cmd = app.add_subcommand(name, desc);
    add_common(cmd, args);
    cmd->callback([&handler, fn]() { handler = fn; });
  };
  register_cmd("simulate", "generate a synthetic trace bundle", cmd_simulate);
  register_cmd("featurize", "compute signature features for a bundle", cmd_featurize);
  register_cmd("train", "train one classifier and save it as JSON", cmd_train);
  register_cmd("evaluate", "run the repetition protocol and report fidelities",
               cmd_evaluate);
  register_cmd("sweep", "evaluate over a list of measurement windows", cmd_sweep);
  register_cmd("project", "LDA projection of signature features to CSV", cmd_project);
  register_cmd("report", "render a report JSON as a text table", cmd_report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    return handler(args);
  } catch (const sigread::InvalidInput& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  }
}
