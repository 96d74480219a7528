#pragma once

#include <json.hpp>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ncg/evaluation.hpp"
#include "ncg/model.hpp"
#include "ncg/prior_analysis.hpp"

namespace ncg {

/// Shortest text form that round-trips a double exactly (17 significant digits).
std::string format_g17(double v);

struct CsvTable {
  std::vector<std::string> columns;
  Eigen::MatrixXd values;  // rows x columns
};

/// Reads a comma-delimited UTF-8 CSV with a header row; `#`-prefixed lines are
/// treated as comments. Every cell must parse as a number; failures carry the
/// 1-based row and column.
CsvTable read_csv(const std::string& path);

/// read_csv then split: the named column becomes the response, every other
/// column becomes a design column in file order.
Dataset load_csv(const std::string& path, const std::string& response_column);

/// Column statistics used to center y and center/scale X, so that held-out
/// data can be transformed with training statistics only.
struct Standardizer {
  Eigen::VectorXd x_mean;
  Eigen::VectorXd x_scale;  // per-column sd, floored at 1e-12
  double y_mean = 0.0;

  static Standardizer fit(const Dataset& train);
  Dataset apply(const Dataset& data) const;
};

/// Prostate ingestion: schema-checks the 8 clinical covariates + lpsa response
/// (97 rows), appends 12 seeded N(0,1) noise predictors, splits 67/30 at
/// random, and (by default) standardizes with training statistics.
std::pair<Dataset, Dataset> prostate_pipeline(const std::string& path, std::uint64_t seed,
                                              bool standardize = true);

/// Resolved run configuration shared by the CLI and the emitted metadata.
struct RunConfig {
  Engine engine = Engine::kGibbs;
  std::string preset;  // empty when shapes were given explicitly
  Hyperparameters hyper = make_hyperparameters(2);
  GibbsConfig gibbs;
  CaviOptions cavi;
  EmMode em = EmMode::kOff;
  long em_window = 500;
  long em_max_rounds = 10;
  std::uint64_t seed = 0;
  bool standardize = false;
  std::string out_dir = ".";
  int threads = 1;
};

nlohmann::json run_config_to_json(const RunConfig& cfg);
/// Overrides fields of `base` with any keys present in `j`.
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});
/// FNV-1a hex digest of the canonical config dump.
std::string config_hash_hex(const nlohmann::json& j);

// ---- file emission -------------------------------------------------------

/// Creates parent directories as needed.
void write_text_file(const std::string& path, const std::string& content);

/// `# key: value`-style comment prologue embedding the resolved config.
std::string csv_comment_prologue(const nlohmann::json& config);

std::string draws_csv(const PosteriorDraws& draws, const GibbsConfig& cfg,
                      const nlohmann::json& config);
std::string summary_csv(const std::vector<CoefficientSummary>& summary,
                        const nlohmann::json& config);
std::string elbo_trace_csv(const std::vector<ElboTracePoint>& trace,
                           const nlohmann::json& config);
std::string em_trajectory_csv(const std::vector<Eigen::VectorXd>& rounds,
                              const nlohmann::json& config);
std::string density_curve_csv(const std::vector<DensityCurvePoint>& curve,
                              const nlohmann::json& config);
std::string fitted_state_json(const VariationalState& state, const Eigen::VectorXd& shapes,
                              const nlohmann::json& config);
std::string run_report_csv(const RunReport& report, const nlohmann::json& config);
std::string run_report_table(const RunReport& report);
std::string run_report_json(const RunReport& report, const nlohmann::json& config);
std::string tail_report_json(const TailConditionReport& report,
                             const ConsistencyCheckInput& input, const Hyperparameters& h,
                             const nlohmann::json& config);
std::string floor_report_json(const DensityFloorReport& report, const Hyperparameters& h,
                              long p_n, const nlohmann::json& config);

}  // namespace ncg
