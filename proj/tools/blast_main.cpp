// Command-line surface: fit models on CSV datasets, run simulation
// benchmarks, summarize stored draws.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "blast/driver.hpp"
#include "blast/errors.hpp"
#include "blast/io.hpp"
#include "blast/simbench.hpp"

namespace {

using nlohmann::json;

constexpr const char* kVersion = "blast 0.1.0";

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

std::set<int> parse_id_list(const std::string& text) {
  std::set<int> ids;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    ids.insert(std::stoi(item));
  }
  return ids;
}

json tempering_to_json(const blast::TemperingPolicy& t) {
  return json{{"mode", t.mode == blast::TemperingMode::fixed ? "fixed" : "adaptive"},
              {"kappa", t.kappa},
              {"target_rate", t.target_rate},
              {"gain", t.gain},
              {"bounds", {t.bounds.first, t.bounds.second}}};
}

const char* pseudo_mode_name(blast::PseudoDataMode mode) {
  switch (mode) {
    case blast::PseudoDataMode::pseudo_data: return "pseudo";
    case blast::PseudoDataMode::zero_impute: return "zero";
    case blast::PseudoDataMode::prior_draw: return "prior";
  }
  return "pseudo";
}

blast::PseudoDataMode parse_pseudo_mode(const std::string& name) {
  if (name == "pseudo") return blast::PseudoDataMode::pseudo_data;
  if (name == "zero") return blast::PseudoDataMode::zero_impute;
  if (name == "prior") return blast::PseudoDataMode::prior_draw;
  throw blast::InputError("unknown pseudo-data mode: " + name);
}

json config_to_json(const blast::SamplerConfig& cfg) {
  json j;
  j["iterations"] = cfg.iterations;
  j["burn_in"] = cfg.burn_in;
  j["mode"] = cfg.mode == blast::SamplerMode::oracle ? "oracle" : "select";
  j["informative"] = json::array();
  for (int id : cfg.oracle_informative_ids) j["informative"].push_back(id);
  j["tempering"] = tempering_to_json(cfg.tempering);
  j["pseudo_data"] = {{"mode", pseudo_mode_name(cfg.pseudo_data.mode)},
                      {"fraction", cfg.pseudo_data.fraction}};
  j["enforce_contrast_sparsity"] = cfg.enforce_contrast_sparsity;
  j["empirical_bayes"] = cfg.empirical_bayes;
  j["empirical_bayes_warmup"] = cfg.empirical_bayes_warmup;
  j["priors"] = {
      {"target", {cfg.priors.target.shape, cfg.priors.target.scale}},
      {"informative",
       {cfg.priors.informative.shape, cfg.priors.informative.scale}},
      {"noninformative",
       {cfg.priors.noninformative.shape, cfg.priors.noninformative.scale}},
      {"shared",
       {cfg.shared_variance_prior.shape, cfg.shared_variance_prior.scale}}};
  j["seed"] = cfg.seed;
  j["chains"] = cfg.chains;
  j["thin"] = cfg.thin;
  j["step_size"] = cfg.initial_step_size;
  return j;
}

void apply_config_json(const json& j, blast::SamplerConfig& cfg) {
  if (j.contains("iterations")) cfg.iterations = j.at("iterations").get<std::size_t>();
  if (j.contains("burn_in")) cfg.burn_in = j.at("burn_in").get<std::size_t>();
  if (j.contains("mode")) {
    const auto mode = j.at("mode").get<std::string>();
    if (mode == "oracle") {
      cfg.mode = blast::SamplerMode::oracle;
    } else if (mode == "select") {
      cfg.mode = blast::SamplerMode::selection;
    } else {
      throw blast::InputError("config: unknown mode '" + mode + "'");
    }
  }
  if (j.contains("informative")) {
    cfg.oracle_informative_ids.clear();
    for (const auto& id : j.at("informative")) {
      cfg.oracle_informative_ids.insert(id.get<int>());
    }
  }
  if (j.contains("tempering")) {
    const auto& t = j.at("tempering");
    if (t.contains("mode")) {
      const auto mode = t.at("mode").get<std::string>();
      cfg.tempering.mode = mode == "adaptive" ? blast::TemperingMode::adaptive
                                              : blast::TemperingMode::fixed;
    }
    if (t.contains("kappa")) cfg.tempering.kappa = t.at("kappa").get<double>();
    if (t.contains("target_rate")) {
      cfg.tempering.target_rate = t.at("target_rate").get<double>();
    }
    if (t.contains("gain")) cfg.tempering.gain = t.at("gain").get<double>();
    if (t.contains("bounds")) {
      cfg.tempering.bounds = {t.at("bounds").at(0).get<double>(),
                              t.at("bounds").at(1).get<double>()};
    }
  }
  if (j.contains("pseudo_data")) {
    const auto& p = j.at("pseudo_data");
    if (p.contains("mode")) {
      cfg.pseudo_data.mode = parse_pseudo_mode(p.at("mode").get<std::string>());
    }
    if (p.contains("fraction")) {
      cfg.pseudo_data.fraction = p.at("fraction").get<double>();
    }
  }
  if (j.contains("enforce_contrast_sparsity")) {
    cfg.enforce_contrast_sparsity = j.at("enforce_contrast_sparsity").get<bool>();
  }
  if (j.contains("empirical_bayes")) {
    cfg.empirical_bayes = j.at("empirical_bayes").get<bool>();
  }
  if (j.contains("empirical_bayes_warmup")) {
    cfg.empirical_bayes_warmup = j.at("empirical_bayes_warmup").get<std::size_t>();
  }
  if (j.contains("priors")) {
    const auto& p = j.at("priors");
    const auto read = [](const json& pair) {
      return blast::VariancePrior{pair.at(0).get<double>(),
                                  pair.at(1).get<double>()};
    };
    if (p.contains("target")) cfg.priors.target = read(p.at("target"));
    if (p.contains("informative")) cfg.priors.informative = read(p.at("informative"));
    if (p.contains("noninformative")) {
      cfg.priors.noninformative = read(p.at("noninformative"));
    }
    if (p.contains("shared")) cfg.shared_variance_prior = read(p.at("shared"));
  }
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("chains")) cfg.chains = j.at("chains").get<std::size_t>();
  if (j.contains("thin")) cfg.thin = j.at("thin").get<std::size_t>();
  if (j.contains("step_size")) cfg.initial_step_size = j.at("step_size").get<double>();
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

json summary_to_json(const blast::PosteriorSummary& summary,
                     bool include_inclusion) {
  json j;
  j["level"] = summary.level;
  j["beta_mean"] = vector_to_json(summary.beta_mean);
  j["intervals"] = {{"lower", vector_to_json(summary.intervals.col(0))},
                    {"upper", vector_to_json(summary.intervals.col(1))}};
  if (include_inclusion) {
    j["inclusion_probs"] = vector_to_json(summary.inclusion_probs);
  }
  json diag;
  diag["ess_beta"] = vector_to_json(summary.ess_beta);
  json ess_var;
  for (std::size_t b = 0; b < summary.variance_names.size(); ++b) {
    ess_var[summary.variance_names[b]] =
        summary.ess_variances[static_cast<Eigen::Index>(b)];
  }
  diag["ess_variances"] = ess_var;
  if (summary.split_chain_beta.size() > 0) {
    diag["split_chain_beta"] = vector_to_json(summary.split_chain_beta);
  }
  j["diagnostics"] = diag;
  return j;
}

json manifest_json(const std::string& command, const json& config_echo,
                   const std::vector<std::string>& input_paths,
                   std::uint64_t seed, const std::string& started,
                   const std::string& finished) {
  json inputs = json::array();
  for (const auto& path : input_paths) {
    inputs.push_back({{"path", path}, {"sha256", blast::sha256_file(path)}});
  }
  return json{{"software_version", kVersion}, {"command", command},
              {"config", config_echo},        {"seed", seed},
              {"inputs", inputs},             {"started_at", started},
              {"finished_at", finished}};
}

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("BLAST_THREADS")) {
    const int parsed = std::atoi(env);
    if (parsed > 0) return parsed;
  }
  return 1;
}

struct FitArgs {
  std::string target_path;
  std::vector<std::string> source_paths;
  std::string mode = "oracle";
  std::string informative;
  std::size_t iters = 3000;
  std::size_t burnin = 1000;
  std::uint64_t seed = 0;
  std::string config_path;
  std::string out_dir;
  std::string outcome = "y";
  bool no_standardize = false;
  double level = 0.95;
  std::size_t chains = 1;
  std::size_t thin = 1;
  double kappa = 0.005;
  std::string temper = "fixed";
  bool enforce_sparsity = false;
  bool empirical_bayes = false;
  std::string pseudo = "pseudo";
  int threads = 0;
};

int run_fit(const FitArgs& args) {
  blast::SamplerConfig cfg;
  cfg.iterations = args.iters;
  cfg.burn_in = args.burnin;
  cfg.seed = args.seed;
  cfg.mode = args.mode == "select" ? blast::SamplerMode::selection
                                   : blast::SamplerMode::oracle;
  if (args.mode != "oracle" && args.mode != "select") {
    throw blast::InputError("unknown mode: " + args.mode);
  }
  cfg.oracle_informative_ids = parse_id_list(args.informative);
  cfg.chains = args.chains;
  cfg.thin = args.thin;
  cfg.tempering.kappa = args.kappa;
  cfg.tempering.mode = args.temper == "adaptive" ? blast::TemperingMode::adaptive
                                                 : blast::TemperingMode::fixed;
  cfg.enforce_contrast_sparsity = args.enforce_sparsity;
  cfg.empirical_bayes = args.empirical_bayes;
  cfg.pseudo_data.mode = parse_pseudo_mode(args.pseudo);
  cfg.threads = resolve_threads(args.threads);
  if (!args.config_path.empty()) {
    const json config = json::parse(blast::read_text_file(args.config_path));
    apply_config_json(config, cfg);
  }

  const std::string started = iso_timestamp();
  blast::LoadOptions load_opts;
  load_opts.outcome_column = args.outcome;
  load_opts.standardize = !args.no_standardize;
  const blast::ProblemBundle bundle =
      blast::load_problem(args.target_path, args.source_paths, load_opts);

  const blast::PosteriorDraws draws =
      cfg.mode == blast::SamplerMode::selection
          ? blast::run_selection(bundle.target, bundle.sources, cfg)
          : blast::run_oracle(bundle.target, bundle.sources, cfg);
  const blast::PosteriorSummary summary = blast::summarize(draws, args.level);

  std::filesystem::create_directories(args.out_dir);
  const std::string draws_path = args.out_dir + "/draws.csv";
  blast::write_draws_csv(draws_path, draws);

  json summary_json = summary_to_json(
      summary, draws.mode == blast::SamplerMode::selection);
  if (bundle.standardization.applied) {
    summary_json["beta_mean_original_scale"] = vector_to_json(
        blast::unstandardize_coefficients(summary.beta_mean,
                                          bundle.standardization));
    summary_json["standardization"] = {
        {"predictor_mean", vector_to_json(bundle.standardization.predictor_mean)},
        {"predictor_sd", vector_to_json(bundle.standardization.predictor_sd)},
        {"outcome_mean", bundle.standardization.outcome_mean}};
  }
  blast::write_text_file(args.out_dir + "/summary.json",
                         summary_json.dump(2) + "\n");

  std::vector<std::string> inputs{args.target_path};
  inputs.insert(inputs.end(), args.source_paths.begin(),
                args.source_paths.end());
  if (!args.config_path.empty()) inputs.push_back(args.config_path);
  const json manifest = manifest_json("fit", config_to_json(cfg), inputs,
                                      cfg.seed, started, iso_timestamp());
  blast::write_text_file(args.out_dir + "/manifest.json",
                         manifest.dump(2) + "\n");
  return 0;
}

blast::ScenarioSpec scenario_from_json(const json& j) {
  blast::ScenarioSpec spec;
  if (j.contains("p")) spec.p = j.at("p").get<int>();
  if (j.contains("s")) spec.s = j.at("s").get<int>();
  if (j.contains("n0")) spec.n0 = j.at("n0").get<int>();
  if (j.contains("nk")) spec.nk = j.at("nk").get<int>();
  if (j.contains("K")) spec.K = j.at("K").get<int>();
  if (j.contains("num_informative")) {
    spec.num_informative = j.at("num_informative").get<int>();
  }
  if (j.contains("h")) spec.bias_level_h = j.at("h").get<int>();
  if (j.contains("signal_value")) spec.signal_value = j.at("signal_value").get<double>();
  if (j.contains("informative_bias")) {
    spec.informative_bias = j.at("informative_bias").get<double>();
  }
  if (j.contains("noninformative_bias")) {
    spec.noninformative_bias = j.at("noninformative_bias").get<double>();
  }
  if (j.contains("noise_sd")) spec.noise_sd = j.at("noise_sd").get<double>();
  if (j.contains("replicates")) spec.replicates = j.at("replicates").get<int>();
  if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("iterations")) spec.iterations = j.at("iterations").get<std::size_t>();
  if (j.contains("burn_in")) spec.burn_in = j.at("burn_in").get<std::size_t>();
  if (j.contains("kappa")) spec.kappa = j.at("kappa").get<double>();
  return spec;
}

int run_simulate(const std::string& scenario_path, const std::string& methods,
                 const std::string& out_dir, int threads_flag) {
  const std::string started = iso_timestamp();
  const json scenario_json =
      json::parse(blast::read_text_file(scenario_path));

  std::vector<blast::ScenarioSpec> specs;
  if (scenario_json.is_array()) {
    for (const auto& item : scenario_json) specs.push_back(scenario_from_json(item));
  } else {
    specs.push_back(scenario_from_json(scenario_json));
  }

  std::vector<blast::MethodKind> kinds;
  std::stringstream ss(methods);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) kinds.push_back(blast::parse_method(item));
  }
  if (kinds.empty()) throw blast::InputError("no methods given");

  const int threads = resolve_threads(threads_flag);
  std::string csv;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const blast::BenchmarkTable table =
        blast::run_benchmark(specs[i], kinds, threads);
    const std::string block = table.to_csv();
    if (i == 0) {
      csv = block;
    } else {
      // Append without repeating the header.
      csv += block.substr(block.find('\n') + 1);
    }
  }

  std::filesystem::create_directories(out_dir);
  blast::write_text_file(out_dir + "/benchmark.csv", csv);

  const json manifest =
      manifest_json("simulate", scenario_json, {scenario_path},
                    specs.front().seed, started, iso_timestamp());
  blast::write_text_file(out_dir + "/manifest.json", manifest.dump(2) + "\n");
  return 0;
}

int run_summarize(const std::string& draws_path, double level,
                  const std::string& out_path) {
  const blast::LoadedDraws loaded = blast::read_draws_csv(draws_path);
  if (loaded.beta.rows() < 2) {
    throw blast::InputError("need >= 2 draws to summarize");
  }
  const blast::PosteriorDraws draws = blast::draws_from_loaded(loaded);
  const blast::PosteriorSummary summary = blast::summarize(draws, level);
  const json j = summary_to_json(summary, loaded.gamma.cols() > 0);
  const std::string text = j.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    blast::write_text_file(out_path, text);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian multi-source transfer regression with global-local "
               "shrinkage and source selection"};
  app.require_subcommand(1);

  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "Fit a model on CSV datasets");
  fit->add_option("--target", fit_args.target_path, "Target CSV")->required();
  fit->add_option("--source", fit_args.source_paths, "Source CSV (repeatable)");
  fit->add_option("--mode", fit_args.mode, "oracle | select");
  fit->add_option("--informative", fit_args.informative,
                  "Comma-separated informative source ids (oracle mode)");
  fit->add_option("--iters", fit_args.iters, "MCMC iterations");
  fit->add_option("--burnin", fit_args.burnin, "Burn-in iterations");
  fit->add_option("--seed", fit_args.seed, "RNG seed");
  fit->add_option("--config", fit_args.config_path,
                  "JSON config overriding flags");
  fit->add_option("--out", fit_args.out_dir, "Output directory")->required();
  fit->add_option("--outcome", fit_args.outcome, "Outcome column name");
  fit->add_flag("--no-standardize", fit_args.no_standardize,
                "Disable covariate standardization");
  fit->add_option("--level", fit_args.level, "Credible interval level");
  fit->add_option("--chains", fit_args.chains, "Independent chains");
  fit->add_option("--thin", fit_args.thin, "Thinning factor");
  fit->add_option("--kappa", fit_args.kappa, "Tempering parameter");
  fit->add_option("--temper", fit_args.temper, "fixed | adaptive");
  fit->add_flag("--enforce-contrast-sparsity", fit_args.enforce_sparsity,
                "Keep the contrast block's global precision above the "
                "informative block's");
  fit->add_flag("--empirical-bayes", fit_args.empirical_bayes,
                "Calibrate the global-shrinkage scale from a warm-up phase");
  fit->add_option("--pseudo", fit_args.pseudo,
                  "Empty-partition handling: pseudo | zero | prior");
  fit->add_option("--threads", fit_args.threads, "Worker threads");

  std::string sim_scenario, sim_methods = "target-only,oracle,selection",
              sim_out;
  int sim_threads = 0;
  auto* sim = app.add_subcommand("simulate", "Run the simulation benchmark");
  sim->add_option("--scenario", sim_scenario, "Scenario JSON")->required();
  sim->add_option("--methods", sim_methods,
                  "Comma list: target-only,oracle,naive,selection");
  sim->add_option("--out", sim_out, "Output directory")->required();
  sim->add_option("--threads", sim_threads, "Worker threads");

  std::string sum_draws, sum_out;
  double sum_level = 0.95;
  auto* sum = app.add_subcommand("summarize", "Summarize stored draws");
  sum->add_option("--draws", sum_draws, "Draws CSV")->required();
  sum->add_option("--level", sum_level, "Credible interval level");
  sum->add_option("--out", sum_out, "Output path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit->parsed()) return run_fit(fit_args);
    if (sim->parsed()) return run_simulate(sim_scenario, sim_methods, sim_out,
                                           sim_threads);
    if (sum->parsed()) return run_summarize(sum_draws, sum_level, sum_out);
  } catch (const blast::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const blast::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
