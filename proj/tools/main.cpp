// ncg: normal-compound-gamma shrinkage regression toolkit.
//
// Subcommands: fit, simulate, prior-plot, prior-check, prostate.
// Every emitted file embeds the resolved configuration and seed.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "ncg/errors.hpp"
#include "ncg/evaluation.hpp"
#include "ncg/gibbs.hpp"
#include "ncg/io.hpp"
#include "ncg/model.hpp"
#include "ncg/prior_analysis.hpp"
#include "ncg/special_math.hpp"
#include "ncg/vb.hpp"

namespace {

using nlohmann::json;

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

ncg::RunConfig load_config_file(const std::string& path, ncg::RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ncg::ParseError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ncg::ParseError("config file '" + path + "': " + e.what());
  }
  return ncg::run_config_from_json(j, std::move(base));
}

// Shared hyperparameter flags; applied on top of --preset / --config.
struct HyperFlags {
  std::string preset;
  int depth = 0;
  std::vector<double> shapes;
  double c1 = 0.0;
  double phi = 0.0;
  double c0 = 0.0;
  double d0 = 0.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--preset", preset, "hyperparameter preset: ncg2, ncg10, horseshoe");
    cmd->add_option("--depth", depth, "chain depth N (shapes default to 0.5)");
    cmd->add_option("--shapes", shapes, "per-level shapes c_1..c_N")->delimiter(',');
    cmd->add_option("--c1", c1, "override the first shape only");
    cmd->add_option("--phi", phi, "terminal rate phi");
    cmd->add_option("--c0", c0, "noise-variance prior shape");
    cmd->add_option("--d0", d0, "noise-variance prior scale");
  }

  void apply(ncg::RunConfig& cfg) const {
    if (!preset.empty()) {
      cfg.preset = preset;
      cfg.hyper = ncg::preset_hyperparameters(preset);
    }
    if (depth > 0) {
      cfg.preset.clear();
      cfg.hyper = ncg::make_hyperparameters(depth);
    }
    if (!shapes.empty()) {
      cfg.preset.clear();
      cfg.hyper.depth = static_cast<int>(shapes.size());
      cfg.hyper.shapes = Eigen::Map<const Eigen::VectorXd>(
          shapes.data(), static_cast<Eigen::Index>(shapes.size()));
    }
    if (c1 > 0.0) cfg.hyper.shapes[0] = c1;
    if (phi > 0.0) cfg.hyper.phi = phi;
    if (c0 > 0.0) cfg.hyper.c0 = c0;
    if (d0 > 0.0) cfg.hyper.d0 = d0;
  }
};

ncg::MethodConfig method_from_name(const std::string& name, const ncg::RunConfig& cfg) {
  ncg::MethodConfig m;
  m.name = name;
  m.gibbs = cfg.gibbs;
  m.cavi = cfg.cavi;
  std::string base = name;
  if (base.rfind("vb-", 0) == 0) {
    m.engine = ncg::Engine::kVb;
    base = base.substr(3);
  }
  if (base.size() > 5 && base.substr(base.size() - 5) == "-mcem") {
    m.em = ncg::EmMode::kMcem;
    m.gibbs.mcem = ncg::McemConfig{cfg.em_window, cfg.em_max_rounds};
    base = base.substr(0, base.size() - 5);
  } else if (base.size() > 5 && base.substr(base.size() - 5) == "-mfvb") {
    m.em = ncg::EmMode::kMfvb;
    m.em_max_rounds = cfg.em_max_rounds;
    base = base.substr(0, base.size() - 5);
  }
  m.hyper = ncg::preset_hyperparameters(base);
  return m;
}

void print_validation(const ncg::ValidationReport& report) {
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
}

// ---- fit -------------------------------------------------------------------

int run_fit(const ncg::RunConfig& cfg, const std::string& data_path,
            const std::string& response, double level) {
  ncg::Dataset data = ncg::load_csv(data_path, response);
  json meta = ncg::run_config_to_json(cfg);
  meta["command"] = "fit";
  meta["data"] = data_path;
  meta["response"] = response;
  meta["n"] = data.n();
  meta["p"] = data.p();

  if (cfg.standardize) {
    const ncg::Standardizer st = ncg::Standardizer::fit(data);
    data = st.apply(data);
    meta["standardizer"] = {
        {"x_mean", std::vector<double>(st.x_mean.begin(), st.x_mean.end())},
        {"x_scale", std::vector<double>(st.x_scale.begin(), st.x_scale.end())},
        {"y_mean", st.y_mean}};
  }

  const auto report = ncg::validate_hyperparameters(cfg.hyper);
  print_validation(report);
  ncg::require_valid(cfg.hyper);

  std::vector<ncg::CoefficientSummary> summary;
  if (cfg.engine == ncg::Engine::kGibbs) {
    ncg::GibbsConfig gibbs_cfg = cfg.gibbs;
    gibbs_cfg.seed = cfg.seed;
    if (cfg.em == ncg::EmMode::kMcem)
      gibbs_cfg.mcem = ncg::McemConfig{cfg.em_window, cfg.em_max_rounds};
    ncg::Rng rng = ncg::Rng::stream(cfg.seed, {0xf17ULL});
    const ncg::PosteriorDraws draws = ncg::run_gibbs(data, cfg.hyper, gibbs_cfg, rng);
    summary = ncg::summarize(draws, level);
    meta["kept_draws"] = draws.kept;
    meta["clamp_events"] = draws.clamp_events;
    ncg::write_text_file(join_path(cfg.out_dir, "draws.csv"),
                         ncg::draws_csv(draws, gibbs_cfg, meta));
    if (!draws.em_rounds.empty())
      ncg::write_text_file(join_path(cfg.out_dir, "em_trajectory.csv"),
                           ncg::em_trajectory_csv(draws.em_rounds, meta));
  } else {
    const ncg::CaviResult fit =
        (cfg.em == ncg::EmMode::kMfvb)
            ? ncg::run_cavi_em(data, cfg.hyper, cfg.cavi, cfg.em_max_rounds)
            : ncg::run_cavi(data, cfg.hyper, cfg.cavi);
    meta["converged"] = fit.converged;
    meta["sweeps"] = fit.trace.size();
    ncg::write_text_file(join_path(cfg.out_dir, "elbo_trace.csv"),
                         ncg::elbo_trace_csv(fit.trace, meta));
    ncg::write_text_file(join_path(cfg.out_dir, "fitted_state.json"),
                         ncg::fitted_state_json(fit.state, fit.final_shapes, meta));
    if (!fit.em_rounds.empty())
      ncg::write_text_file(join_path(cfg.out_dir, "em_trajectory.csv"),
                           ncg::em_trajectory_csv(fit.em_rounds, meta));
    const double z = 1.959963984540054;
    summary.resize(static_cast<size_t>(data.p()));
    for (Eigen::Index j = 0; j < data.p(); ++j) {
      auto& s = summary[static_cast<size_t>(j)];
      s.mean = fit.state.mu[j];
      s.sd = std::sqrt(std::max(0.0, fit.state.V(j, j)));
      s.lower = s.mean - z * s.sd;
      s.upper = s.mean + z * s.sd;
    }
  }
  ncg::write_text_file(join_path(cfg.out_dir, "summary.csv"),
                       ncg::summary_csv(summary, meta));
  ncg::write_text_file(join_path(cfg.out_dir, "run_meta.json"), meta.dump(2) + "\n");
  std::cout << "fit: wrote summary.csv and run artifacts to " << cfg.out_dir << "\n";
  return 0;
}

// ---- simulate --------------------------------------------------------------

int run_simulate(const ncg::RunConfig& cfg, const std::string& preset,
                 const std::string& cov_case, double sigma2, long n_train, long n_test,
                 long reps, const std::vector<std::string>& method_names) {
  ncg::CovarianceCase cov = ncg::CovarianceCase::kIdentity;
  if (cov_case == "I")
    cov = ncg::CovarianceCase::kIdentity;
  else if (cov_case == "II")
    cov = ncg::CovarianceCase::kAr1;
  else if (cov_case == "III")
    cov = ncg::CovarianceCase::kEqui;
  else
    throw ncg::ValidationError({"unknown covariance case '" + cov_case + "'"});

  const ncg::Scenario scenario =
      ncg::preset_scenario(preset, cov, sigma2, n_train, n_test, reps);
  std::vector<ncg::MethodConfig> methods;
  for (const auto& name : method_names) methods.push_back(method_from_name(name, cfg));

  const ncg::RunReport report =
      ncg::run_replications(scenario, methods, cfg.seed, cfg.threads);

  json meta = ncg::run_config_to_json(cfg);
  meta["command"] = "simulate";
  meta["scenario"] = preset;
  meta["covariance_case"] = cov_case;
  meta["sigma2"] = scenario.sigma2;
  meta["n_train"] = n_train;
  meta["n_test"] = n_test;
  meta["replications"] = reps;
  json methods_json = json::array();
  for (const auto& name : method_names) methods_json.push_back(name);
  meta["methods"] = methods_json;

  ncg::write_text_file(join_path(cfg.out_dir, "run_report.csv"),
                       ncg::run_report_csv(report, meta));
  ncg::write_text_file(join_path(cfg.out_dir, "run_report.txt"),
                       ncg::run_report_table(report));
  ncg::write_text_file(join_path(cfg.out_dir, "run_report.json"),
                       ncg::run_report_json(report, meta));
  std::cout << ncg::run_report_table(report);
  return 0;
}

// ---- prior-plot ------------------------------------------------------------

int run_prior_plot(const ncg::RunConfig& cfg, const std::string& grid_spec, long n_mc) {
  double lo = -6.0, hi = 6.0;
  long n = 241;
  if (!grid_spec.empty()) {
    if (std::sscanf(grid_spec.c_str(), "%lf:%lf:%ld", &lo, &hi, &n) != 3 || n < 2)
      throw ncg::ValidationError({"--grid expects lo:hi:count, got '" + grid_spec + "'"});
  }
  std::vector<double> grid(static_cast<size_t>(n));
  for (long i = 0; i < n; ++i)
    grid[static_cast<size_t>(i)] =
        lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  ncg::Rng rng = ncg::Rng::stream(cfg.seed, {0x9107ULL});
  const auto curve = ncg::density_curve(grid, cfg.hyper, n_mc, rng);

  json meta = ncg::run_config_to_json(cfg);
  meta["command"] = "prior-plot";
  meta["grid"] = {{"lo", lo}, {"hi", hi}, {"n", n}};
  meta["n_mc"] = n_mc;
  ncg::write_text_file(join_path(cfg.out_dir, "prior_curve.csv"),
                       ncg::density_curve_csv(curve, meta));
  std::cout << "prior-plot: wrote prior_curve.csv (" << n << " grid points)\n";
  return 0;
}

// ---- prior-check -----------------------------------------------------------

int run_prior_check(const ncg::RunConfig& cfg, const ncg::ConsistencyCheckInput& input,
                    double e_n, bool have_e_n, long n_mc) {
  json meta = ncg::run_config_to_json(cfg);
  meta["command"] = "prior-check";
  ncg::Rng rng = ncg::Rng::stream(cfg.seed, {0xc4ecULL});
  const auto tail = ncg::check_tail_condition(cfg.hyper, input, n_mc, rng);
  ncg::write_text_file(join_path(cfg.out_dir, "tail_check.json"),
                       ncg::tail_report_json(tail, input, cfg.hyper, meta));
  std::cout << "tail condition: estimate " << tail.tail_mass_estimate << " vs bound "
            << tail.bound << " -> " << (tail.satisfied ? "satisfied" : "NOT satisfied")
            << "\n";
  if (have_e_n) {
    ncg::Rng rng2 = ncg::Rng::stream(cfg.seed, {0xf100ULL});
    const auto floor = ncg::check_density_floor(cfg.hyper, e_n, input.p_n, n_mc, rng2);
    ncg::write_text_file(join_path(cfg.out_dir, "floor_check.json"),
                         ncg::floor_report_json(floor, cfg.hyper, input.p_n, meta));
    std::cout << "density floor: -log f(E_n)/log p_n = " << floor.neg_log_over_log_pn
              << "\n";
  }
  return 0;
}

// ---- prostate --------------------------------------------------------------

int run_prostate(const ncg::RunConfig& cfg, const std::string& data_path, long reps,
                 const std::vector<std::string>& method_names) {
  std::vector<ncg::MethodConfig> methods;
  for (const auto& name : method_names) methods.push_back(method_from_name(name, cfg));

  struct Row {
    std::string name;
    std::vector<double> mse;
    std::vector<double> fp;
    long faults = 0;
  };
  std::vector<Row> rows;
  for (const auto& m : methods) rows.push_back({m.name, {}, {}, 0});

  for (long rep = 0; rep < reps; ++rep) {
    const std::uint64_t rep_seed = cfg.seed + static_cast<std::uint64_t>(rep);
    const auto [train, test] = ncg::prostate_pipeline(data_path, rep_seed, cfg.standardize);
    const ncg::Rng rep_rng = ncg::Rng::stream(rep_seed, {0x9205ULL});
    for (size_t m = 0; m < methods.size(); ++m) {
      try {
        const ncg::FitOutput fit = ncg::fit_method(methods[m], train, rep_rng);
        const Eigen::VectorXd pred = test.X * fit.beta_hat;
        rows[m].mse.push_back((test.y - pred).squaredNorm() /
                              static_cast<double>(test.n()));
        long selected_noise = 0;
        for (size_t j = 8; j < fit.summary.size(); ++j)
          if (fit.summary[j].lower > 0.0 || fit.summary[j].upper < 0.0) ++selected_noise;
        rows[m].fp.push_back(static_cast<double>(selected_noise));
      } catch (const std::exception&) {
        ++rows[m].faults;
      }
    }
  }

  json meta = ncg::run_config_to_json(cfg);
  meta["command"] = "prostate";
  meta["data"] = data_path;
  meta["replications"] = reps;

  std::string csv = ncg::csv_comment_prologue(meta);
  csv += "method,mse_mean,mse_sd,fp_mean,fp_sd,faults\n";
  std::string table = "Prostate benchmark (" + std::to_string(reps) + " replications)\n";
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-12s %-20s %-20s\n", "Methods", "MSE (sd)", "FPR (sd)");
  table += buf;
  for (const auto& r : rows) {
    const auto stat = [](const std::vector<double>& v) {
      double m = 0.0;
      for (double x : v) m += x;
      m = v.empty() ? 0.0 : m / static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - m) * (x - m);
      const double sd =
          v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
      return std::make_pair(m, sd);
    };
    const auto [mse_m, mse_sd] = stat(r.mse);
    const auto [fp_m, fp_sd] = stat(r.fp);
    csv += r.name + "," + ncg::format_g17(mse_m) + "," + ncg::format_g17(mse_sd) + "," +
           ncg::format_g17(fp_m) + "," + ncg::format_g17(fp_sd) + "," +
           std::to_string(r.faults) + "\n";
    std::snprintf(buf, sizeof(buf), "%-12s %8.4f (%.4f)    %6.4f (%.4f)\n", r.name.c_str(),
                  mse_m, mse_sd, fp_m, fp_sd);
    table += buf;
  }
  ncg::write_text_file(join_path(cfg.out_dir, "prostate_report.csv"), csv);
  ncg::write_text_file(join_path(cfg.out_dir, "prostate_report.txt"), table);
  std::cout << table;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ncg: normal-compound-gamma shrinkage regression"};
  app.require_subcommand(1);

  std::string config_path;
  ncg::RunConfig cfg;
  app.add_option("--config", config_path, "JSON config file mirroring the run configuration")
      ->check(CLI::ExistingFile);

  std::uint64_t seed = 0;
  std::string out_dir;
  int threads = 0;
  app.add_option("--seed", seed, "base seed");
  app.add_option("--out-dir", out_dir, "output directory");
  app.add_option("--threads", threads, "max concurrent replications");

  // fit
  auto* fit = app.add_subcommand("fit", "fit one dataset with one engine");
  fit->fallthrough(true);
  std::string fit_data, fit_response = "y", fit_engine;
  double fit_level = 0.95;
  std::string fit_em;
  long fit_iters = 0, fit_burnin = -1, fit_thin = 0, fit_max_iters = 0;
  double fit_tol = 0.0;
  bool fit_standardize = false;
  HyperFlags fit_hyper;
  fit->add_option("--data", fit_data, "input CSV")->required();
  fit->add_option("--response", fit_response, "response column name");
  fit->add_option("--engine", fit_engine, "gibbs or vb");
  fit->add_option("--iters", fit_iters, "gibbs total iterations");
  fit->add_option("--burnin", fit_burnin, "gibbs burn-in");
  fit->add_option("--thin", fit_thin, "gibbs thinning");
  fit->add_option("--tol", fit_tol, "cavi relative elbo tolerance");
  fit->add_option("--max-iters", fit_max_iters, "cavi sweep cap");
  fit->add_option("--em", fit_em, "off, mcem or mfvb");
  fit->add_option("--level", fit_level, "credible-interval level");
  fit->add_flag("--standardize", fit_standardize, "center y, center+scale X");
  fit_hyper.attach(fit);

  // simulate
  auto* sim = app.add_subcommand("simulate", "replication benchmark on a scenario preset");
  sim->fallthrough(true);
  std::string sim_preset = "sim1", sim_case = "I";
  double sim_sigma2 = 1.0;
  long sim_n = 20, sim_n_test = 200, sim_reps = 100;
  std::vector<std::string> sim_methods{"ncg2", "ncg10"};
  long sim_iters = 0, sim_burnin = -1;
  sim->add_option("--preset", sim_preset, "sim1, sim2 or sim3")->required();
  sim->add_option("--case", sim_case, "covariance case I, II or III");
  sim->add_option("--sigma2", sim_sigma2, "noise variance");
  sim->add_option("--n", sim_n, "training-set size");
  sim->add_option("--n-test", sim_n_test, "testing-set size");
  sim->add_option("--reps", sim_reps, "replications");
  sim->add_option("--methods", sim_methods,
                  "method list: [vb-]{ncg2,ncg10,horseshoe}[-mcem|-mfvb]")
      ->delimiter(',');
  sim->add_option("--iters", sim_iters, "gibbs total iterations");
  sim->add_option("--burnin", sim_burnin, "gibbs burn-in");

  // prior-plot
  auto* plot = app.add_subcommand("prior-plot", "marginal prior log-density curve");
  plot->fallthrough(true);
  std::string plot_grid;
  long plot_n_mc = 100000;
  HyperFlags plot_hyper;
  plot->add_option("--grid", plot_grid, "grid as lo:hi:count (default -6:6:241)");
  plot->add_option("--n-mc", plot_n_mc, "Monte Carlo scale draws");
  plot_hyper.attach(plot);

  // prior-check
  auto* check = app.add_subcommand("prior-check", "posterior-consistency prior conditions");
  check->fallthrough(true);
  ncg::ConsistencyCheckInput check_input;
  double check_e_n = 0.0;
  long check_n_mc = 1000000;
  HyperFlags check_hyper;
  check->add_option("--n", check_input.n, "sample size n");
  check->add_option("--p-n", check_input.p_n, "dimension p_n");
  check->add_option("--s-n", check_input.s_n, "sparsity s_n");
  check->add_option("--u", check_input.u, "tail exponent slack u");
  auto* en_opt = check->add_option("--e-n", check_e_n, "density-floor interval endpoint E_n");
  check->add_option("--n-mc", check_n_mc, "Monte Carlo draws");
  check_hyper.attach(check);

  // prostate
  auto* pros = app.add_subcommand("prostate", "real-data pipeline (8 covariates + 12 noise)");
  pros->fallthrough(true);
  std::string pros_data;
  long pros_reps = 20;
  std::vector<std::string> pros_methods{"ncg2", "ncg10", "horseshoe"};
  bool pros_no_standardize = false;
  long pros_iters = 0, pros_burnin = -1;
  pros->add_option("--data", pros_data, "prostate CSV (lcavol..pgg45 + lpsa)")->required();
  pros->add_option("--reps", pros_reps, "noise/split re-randomizations");
  pros->add_option("--methods", pros_methods, "method list")->delimiter(',');
  pros->add_flag("--no-standardize", pros_no_standardize, "skip train-statistics scaling");
  pros->add_option("--iters", pros_iters, "gibbs total iterations");
  pros->add_option("--burnin", pros_burnin, "gibbs burn-in");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_path.empty()) cfg = load_config_file(config_path, cfg);
    if (app.count("--seed")) cfg.seed = seed;
    if (app.count("--out-dir")) cfg.out_dir = out_dir;
    if (app.count("--threads")) cfg.threads = threads;

    if (fit->parsed()) {
      if (!fit_engine.empty()) {
        if (fit_engine == "gibbs")
          cfg.engine = ncg::Engine::kGibbs;
        else if (fit_engine == "vb")
          cfg.engine = ncg::Engine::kVb;
        else
          throw ncg::ValidationError({"unknown engine '" + fit_engine + "'"});
      }
      if (!fit_em.empty()) {
        if (fit_em == "off")
          cfg.em = ncg::EmMode::kOff;
        else if (fit_em == "mcem")
          cfg.em = ncg::EmMode::kMcem;
        else if (fit_em == "mfvb")
          cfg.em = ncg::EmMode::kMfvb;
        else
          throw ncg::ValidationError({"unknown em mode '" + fit_em + "'"});
      }
      if (fit_iters > 0) cfg.gibbs.total_iters = fit_iters;
      if (fit_burnin >= 0) cfg.gibbs.burn_in = fit_burnin;
      if (fit_thin > 0) cfg.gibbs.thin = fit_thin;
      if (fit_tol > 0) cfg.cavi.tol = fit_tol;
      if (fit_max_iters > 0) cfg.cavi.max_iters = fit_max_iters;
      if (fit->count("--standardize")) cfg.standardize = fit_standardize;
      fit_hyper.apply(cfg);
      return run_fit(cfg, fit_data, fit_response, fit_level);
    }
    if (sim->parsed()) {
      if (sim_iters > 0) cfg.gibbs.total_iters = sim_iters;
      if (sim_burnin >= 0) cfg.gibbs.burn_in = sim_burnin;
      return run_simulate(cfg, sim_preset, sim_case, sim_sigma2, sim_n, sim_n_test, sim_reps,
                          sim_methods);
    }
    if (plot->parsed()) {
      if (cfg.preset.empty() && plot_hyper.preset.empty() && plot_hyper.depth == 0 &&
          plot_hyper.shapes.empty())
        plot_hyper.preset = "ncg2";
      plot_hyper.apply(cfg);
      return run_prior_plot(cfg, plot_grid, plot_n_mc);
    }
    if (check->parsed()) {
      check_hyper.apply(cfg);
      return run_prior_check(cfg, check_input, check_e_n, en_opt->count() > 0, check_n_mc);
    }
    if (pros->parsed()) {
      cfg.standardize = !pros_no_standardize;
      if (pros_iters > 0) cfg.gibbs.total_iters = pros_iters;
      if (pros_burnin >= 0) cfg.gibbs.burn_in = pros_burnin;
      return run_prostate(cfg, pros_data, pros_reps, pros_methods);
    }
  } catch (const ncg::SamplerFault& e) {
    std::cerr << "sampler fault at iteration " << e.iteration() << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
