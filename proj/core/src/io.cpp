#include "ncg/io.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ncg/errors.hpp"

namespace ncg {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_cell(const std::string& cell, long row, long col) {
  const std::string t = trim(cell);
  if (t.empty()) throw ParseError("empty cell", row, col);
  size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &pos);
  } catch (const std::exception&) {
    throw ParseError("non-numeric cell '" + t + "'", row, col);
  }
  if (pos != t.size()) throw ParseError("non-numeric cell '" + t + "'", row, col);
  return v;
}

std::string engine_name(Engine e) { return e == Engine::kGibbs ? "gibbs" : "vb"; }
Engine engine_from(const std::string& s) {
  if (s == "gibbs") return Engine::kGibbs;
  if (s == "vb") return Engine::kVb;
  throw ValidationError({"unknown engine '" + s + "' (expected gibbs or vb)"});
}
std::string em_name(EmMode m) {
  switch (m) {
    case EmMode::kOff: return "off";
    case EmMode::kMcem: return "mcem";
    case EmMode::kMfvb: return "mfvb";
  }
  return "off";
}
EmMode em_from(const std::string& s) {
  if (s == "off") return EmMode::kOff;
  if (s == "mcem") return EmMode::kMcem;
  if (s == "mfvb") return EmMode::kMfvb;
  throw ValidationError({"unknown em mode '" + s + "' (expected off, mcem or mfvb)"});
}

nlohmann::json hyper_to_json(const Hyperparameters& h) {
  nlohmann::json j;
  j["depth"] = h.depth;
  j["shapes"] = std::vector<double>(h.shapes.begin(), h.shapes.end());
  j["phi"] = h.phi;
  j["c0"] = h.c0;
  j["d0"] = h.d0;
  return j;
}

Hyperparameters hyper_from_json(const nlohmann::json& j, Hyperparameters base) {
  if (j.contains("depth")) {
    base.depth = j.at("depth").get<int>();
    base.shapes = Eigen::VectorXd::Constant(base.depth, 0.5);
  }
  if (j.contains("shapes")) {
    const auto v = j.at("shapes").get<std::vector<double>>();
    base.shapes = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    base.depth = static_cast<int>(v.size());
  }
  if (j.contains("phi")) base.phi = j.at("phi").get<double>();
  if (j.contains("c0")) base.c0 = j.at("c0").get<double>();
  if (j.contains("d0")) base.d0 = j.at("d0").get<double>();
  return base;
}

}  // namespace

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file '" + path + "'");
  CsvTable table;
  std::string line;
  long file_row = 0;
  bool have_header = false;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++file_row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') continue;
    const auto cells = split_line(line);
    if (!have_header) {
      for (const auto& c : cells) table.columns.push_back(trim(c));
      if (table.columns.empty()) throw ParseError("empty header row", file_row);
      have_header = true;
      continue;
    }
    if (cells.size() != table.columns.size())
      throw ParseError("expected " + std::to_string(table.columns.size()) + " cells, found " +
                           std::to_string(cells.size()),
                       file_row);
    std::vector<double> vals(cells.size());
    for (size_t c = 0; c < cells.size(); ++c)
      vals[c] = parse_cell(cells[c], file_row, static_cast<long>(c + 1));
    rows.push_back(std::move(vals));
  }
  if (!have_header) throw ParseError("file '" + path + "' has no header row");
  table.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(table.columns.size()));
  for (size_t r = 0; r < rows.size(); ++r)
    for (size_t c = 0; c < rows[r].size(); ++c)
      table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return table;
}

Dataset load_csv(const std::string& path, const std::string& response_column) {
  const CsvTable table = read_csv(path);
  const auto it = std::find(table.columns.begin(), table.columns.end(), response_column);
  if (it == table.columns.end()) {
    std::string available;
    for (const auto& c : table.columns) available += (available.empty() ? "" : ", ") + c;
    throw ParseError("response column '" + response_column +
                     "' not found; available columns: " + available);
  }
  const auto y_idx = static_cast<Eigen::Index>(it - table.columns.begin());
  Dataset data;
  data.y = table.values.col(y_idx);
  data.X.resize(table.values.rows(), table.values.cols() - 1);
  Eigen::Index out = 0;
  for (Eigen::Index c = 0; c < table.values.cols(); ++c)
    if (c != y_idx) data.X.col(out++) = table.values.col(c);
  data.validate();
  return data;
}

Standardizer Standardizer::fit(const Dataset& train) {
  Standardizer s;
  const Eigen::Index p = train.p();
  s.x_mean.resize(p);
  s.x_scale.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    s.x_mean[j] = train.X.col(j).mean();
    const double var = (train.X.col(j).array() - s.x_mean[j]).square().sum() /
                       std::max<double>(1.0, static_cast<double>(train.n() - 1));
    s.x_scale[j] = std::max(std::sqrt(var), 1e-12);
  }
  s.y_mean = train.y.mean();
  return s;
}

Dataset Standardizer::apply(const Dataset& data) const {
  Dataset out = data;
  for (Eigen::Index j = 0; j < data.p(); ++j)
    out.X.col(j) = (data.X.col(j).array() - x_mean[j]) / x_scale[j];
  out.y = data.y.array() - y_mean;
  return out;
}

std::pair<Dataset, Dataset> prostate_pipeline(const std::string& path, std::uint64_t seed,
                                              bool standardize) {
  static const std::vector<std::string> kCovariates = {
      "lcavol", "lweight", "age", "lbph", "svi", "lcp", "gleason", "pgg45"};
  const CsvTable table = read_csv(path);
  if (table.values.rows() != 97)
    throw ParseError("prostate data must have 97 rows, found " +
                     std::to_string(table.values.rows()));
  const auto find_col = [&](const std::string& name) {
    const auto it = std::find(table.columns.begin(), table.columns.end(), name);
    if (it == table.columns.end())
      throw ParseError("prostate data is missing required column '" + name + "'");
    return static_cast<Eigen::Index>(it - table.columns.begin());
  };

  const Eigen::Index n = 97;
  constexpr Eigen::Index kNoise = 12;
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(kCovariates.size()) + kNoise);
  for (size_t c = 0; c < kCovariates.size(); ++c)
    x.col(static_cast<Eigen::Index>(c)) = table.values.col(find_col(kCovariates[c]));
  Eigen::VectorXd y = table.values.col(find_col("lpsa"));

  Rng noise_rng = Rng::stream(seed, {0x6e6f6973ULL});  // noise predictors x9..x20
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index c = 0; c < kNoise; ++c)
      x(i, static_cast<Eigen::Index>(kCovariates.size()) + c) = noise_rng.normal();

  Rng split_rng = Rng::stream(seed, {0x73706c69ULL});  // train/test split
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(split_rng.uniform() * static_cast<double>(i + 1));
    std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(std::min(j, i))]);
  }

  constexpr Eigen::Index kTrain = 67;
  Dataset train, test;
  train.X.resize(kTrain, x.cols());
  train.y.resize(kTrain);
  test.X.resize(n - kTrain, x.cols());
  test.y.resize(n - kTrain);
  for (Eigen::Index i = 0; i < kTrain; ++i) {
    train.X.row(i) = x.row(order[static_cast<size_t>(i)]);
    train.y[i] = y[order[static_cast<size_t>(i)]];
  }
  for (Eigen::Index i = kTrain; i < n; ++i) {
    test.X.row(i - kTrain) = x.row(order[static_cast<size_t>(i)]);
    test.y[i - kTrain] = y[order[static_cast<size_t>(i)]];
  }

  if (standardize) {
    const Standardizer s = Standardizer::fit(train);
    train = s.apply(train);
    test = s.apply(test);
  }
  return {train, test};
}

nlohmann::json run_config_to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["engine"] = engine_name(cfg.engine);
  if (!cfg.preset.empty()) j["preset"] = cfg.preset;
  j["hyperparameters"] = hyper_to_json(cfg.hyper);
  j["gibbs"] = {{"total_iters", cfg.gibbs.total_iters},
                {"burn_in", cfg.gibbs.burn_in},
                {"thin", cfg.gibbs.thin}};
  j["vb"] = {{"tol", cfg.cavi.tol}, {"max_iters", cfg.cavi.max_iters}};
  j["em"] = {{"mode", em_name(cfg.em)},
             {"window", cfg.em_window},
             {"max_rounds", cfg.em_max_rounds}};
  j["seed"] = cfg.seed;
  j["standardize"] = cfg.standardize;
  j["out_dir"] = cfg.out_dir;
  j["threads"] = cfg.threads;
  return j;
}

RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base) {
  if (j.contains("engine")) base.engine = engine_from(j.at("engine").get<std::string>());
  if (j.contains("preset")) {
    base.preset = j.at("preset").get<std::string>();
    base.hyper = preset_hyperparameters(base.preset);
  }
  if (j.contains("hyperparameters"))
    base.hyper = hyper_from_json(j.at("hyperparameters"), base.hyper);
  if (j.contains("gibbs")) {
    const auto& g = j.at("gibbs");
    if (g.contains("total_iters")) base.gibbs.total_iters = g.at("total_iters").get<long>();
    if (g.contains("burn_in")) base.gibbs.burn_in = g.at("burn_in").get<long>();
    if (g.contains("thin")) base.gibbs.thin = g.at("thin").get<long>();
  }
  if (j.contains("vb")) {
    const auto& v = j.at("vb");
    if (v.contains("tol")) base.cavi.tol = v.at("tol").get<double>();
    if (v.contains("max_iters")) base.cavi.max_iters = v.at("max_iters").get<long>();
  }
  if (j.contains("em")) {
    const auto& e = j.at("em");
    if (e.contains("mode")) base.em = em_from(e.at("mode").get<std::string>());
    if (e.contains("window")) base.em_window = e.at("window").get<long>();
    if (e.contains("max_rounds")) base.em_max_rounds = e.at("max_rounds").get<long>();
  }
  if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("standardize")) base.standardize = j.at("standardize").get<bool>();
  if (j.contains("out_dir")) base.out_dir = j.at("out_dir").get<std::string>();
  if (j.contains("threads")) base.threads = j.at("threads").get<int>();
  return base;
}

std::string config_hash_hex(const nlohmann::json& j) {
  const std::string dump = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write file '" + path + "'");
  out << content;
  if (!out.good()) throw std::runtime_error("write failed for '" + path + "'");
}

std::string csv_comment_prologue(const nlohmann::json& config) {
  std::string out = "# config: " + config.dump() + "\n";
  out += "# config_hash: " + config_hash_hex(config) + "\n";
  return out;
}

std::string draws_csv(const PosteriorDraws& draws, const GibbsConfig& cfg,
                      const nlohmann::json& config) {
  std::string out = csv_comment_prologue(config);
  out += "iter";
  for (Eigen::Index j = 0; j < draws.beta_draws.cols(); ++j)
    out += ",beta_" + std::to_string(j + 1);
  out += ",sigma2\n";
  for (long i = 0; i < draws.kept; ++i) {
    out += std::to_string(cfg.burn_in + (i + 1) * cfg.thin);
    for (Eigen::Index j = 0; j < draws.beta_draws.cols(); ++j)
      out += "," + format_g17(draws.beta_draws(i, j));
    out += "," + format_g17(draws.sigma2_draws[i]) + "\n";
  }
  return out;
}

std::string summary_csv(const std::vector<CoefficientSummary>& summary,
                        const nlohmann::json& config) {
  std::string out = csv_comment_prologue(config);
  out += "coefficient,mean,sd,ci_lower,ci_upper\n";
  for (size_t j = 0; j < summary.size(); ++j) {
    out += "beta_" + std::to_string(j + 1) + "," + format_g17(summary[j].mean) + "," +
           format_g17(summary[j].sd) + "," + format_g17(summary[j].lower) + "," +
           format_g17(summary[j].upper) + "\n";
  }
  return out;
}

std::string elbo_trace_csv(const std::vector<ElboTracePoint>& trace,
                           const nlohmann::json& config) {
  std::string out = csv_comment_prologue(config);
  out += "sweep,elbo,max_abs_change\n";
  for (const auto& t : trace)
    out += std::to_string(t.sweep) + "," + format_g17(t.elbo) + "," +
           format_g17(t.max_abs_change) + "\n";
  return out;
}

std::string em_trajectory_csv(const std::vector<Eigen::VectorXd>& rounds,
                              const nlohmann::json& config) {
  std::string out = csv_comment_prologue(config);
  out += "round";
  const Eigen::Index depth = rounds.empty() ? 0 : rounds.front().size();
  for (Eigen::Index k = 0; k < depth; ++k) out += ",c_" + std::to_string(k + 1);
  out += "\n";
  for (size_t r = 0; r < rounds.size(); ++r) {
    out += std::to_string(r + 1);
    for (Eigen::Index k = 0; k < rounds[r].size(); ++k)
      out += "," + format_g17(rounds[r][k]);
    out += "\n";
  }
  return out;
}

std::string density_curve_csv(const std::vector<DensityCurvePoint>& curve,
                              const nlohmann::json& config) {
  std::string out = csv_comment_prologue(config);
  out += "x,log_density,stderr\n";
  for (const auto& pt : curve)
    out += format_g17(pt.x) + "," + format_g17(pt.log_density) + "," +
           format_g17(pt.stderr_log) + "\n";
  return out;
}

std::string fitted_state_json(const VariationalState& state, const Eigen::VectorXd& shapes,
                              const nlohmann::json& config) {
  nlohmann::json j;
  j["config"] = config;
  j["mu_star"] = std::vector<double>(state.mu.begin(), state.mu.end());
  std::vector<double> v_diag;
  for (Eigen::Index i = 0; i < state.V.rows(); ++i) v_diag.push_back(state.V(i, i));
  j["v_star_diag"] = v_diag;
  std::vector<std::vector<double>> c_star;
  for (Eigen::Index k = 0; k < state.c_star.rows(); ++k)
    c_star.emplace_back(state.c_star.row(k).begin(), state.c_star.row(k).end());
  j["c_star"] = c_star;
  j["d0_star"] = state.d0_star;
  j["c"] = std::vector<double>(shapes.begin(), shapes.end());
  return j.dump(2) + "\n";
}

std::string run_report_csv(const RunReport& report, const nlohmann::json& config) {
  std::string out = csv_comment_prologue(config);
  out += "# scenario: " + report.scenario + ", n_train: " + std::to_string(report.n_train) +
         ", sigma2: " + format_g17(report.sigma2) +
         ", replications: " + std::to_string(report.replications) + "\n";
  out += "method,mse_mean,mse_sd,fp_mean,fp_sd,fn_mean,fn_sd,faults\n";
  for (const auto& m : report.methods)
    out += m.name + "," + format_g17(m.mse_mean) + "," + format_g17(m.mse_sd) + "," +
           format_g17(m.fp_mean) + "," + format_g17(m.fp_sd) + "," + format_g17(m.fn_mean) +
           "," + format_g17(m.fn_sd) + "," + std::to_string(m.faults) + "\n";
  return out;
}

std::string run_report_table(const RunReport& report) {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof(buf), "Scenario %s, n_train=%ld, %ld replications\n",
                report.scenario.c_str(), report.n_train, report.replications);
  out += buf;
  std::snprintf(buf, sizeof(buf), "%-12s %8s %-20s %-20s %-20s\n", "Methods", "sigma2",
                "MSE (sd)", "FPR (sd)", "FNR (sd)");
  out += buf;
  for (const auto& m : report.methods) {
    std::snprintf(buf, sizeof(buf), "%-12s %8.4g %8.4f (%.4f)    %6.4f (%.4f)    %6.4f (%.4f)\n",
                  m.name.c_str(), report.sigma2, m.mse_mean, m.mse_sd, m.fp_mean, m.fp_sd,
                  m.fn_mean, m.fn_sd);
    out += buf;
  }
  return out;
}

std::string run_report_json(const RunReport& report, const nlohmann::json& config) {
  nlohmann::json j;
  j["config"] = config;
  j["scenario"] = report.scenario;
  j["sigma2"] = report.sigma2;
  j["n_train"] = report.n_train;
  j["replications"] = report.replications;
  j["base_seed"] = report.base_seed;
  j["config_hash"] = config_hash_hex(config);
  std::vector<std::string> hashes;
  for (auto h : report.dataset_hashes) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    hashes.emplace_back(buf);
  }
  j["dataset_hashes"] = hashes;
  j["methods"] = nlohmann::json::array();
  for (const auto& m : report.methods) {
    j["methods"].push_back({{"name", m.name},
                            {"mse_mean", m.mse_mean},
                            {"mse_sd", m.mse_sd},
                            {"fp_mean", m.fp_mean},
                            {"fp_sd", m.fp_sd},
                            {"fn_mean", m.fn_mean},
                            {"fn_sd", m.fn_sd},
                            {"faults", m.faults}});
  }
  return j.dump(2) + "\n";
}

std::string tail_report_json(const TailConditionReport& report,
                             const ConsistencyCheckInput& input, const Hyperparameters& h,
                             const nlohmann::json& config) {
  nlohmann::json j;
  j["config"] = config;
  j["inputs"] = {{"n", input.n}, {"p_n", input.p_n}, {"s_n", input.s_n}, {"u", input.u}};
  j["hyperparameters"] = hyper_to_json(h);
  j["k_n"] = report.k_n;
  j["tail_mass_estimate"] = report.tail_mass_estimate;
  j["wilson_low"] = report.wilson_low;
  j["wilson_high"] = report.wilson_high;
  j["bound"] = report.bound;
  j["c1_sufficient_scale"] = report.c1_sufficient_scale;
  j["satisfied"] = report.satisfied;
  j["n_mc"] = report.n_mc;
  return j.dump(2) + "\n";
}

std::string floor_report_json(const DensityFloorReport& report, const Hyperparameters& h,
                              long p_n, const nlohmann::json& config) {
  nlohmann::json j;
  j["config"] = config;
  j["inputs"] = {{"e_n", report.e_n}, {"p_n", p_n}};
  j["hyperparameters"] = hyper_to_json(h);
  j["min_log_density"] = report.min_log_density;
  j["stderr"] = report.stderr_log;
  j["neg_log_over_log_pn"] = report.neg_log_over_log_pn;
  j["n_mc"] = report.n_mc;
  return j.dump(2) + "\n";
}

}  // namespace ncg
