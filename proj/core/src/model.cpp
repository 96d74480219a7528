#include "ncg/model.hpp"

#include <json.hpp>

#include <cmath>
#include <sstream>

#include "ncg/errors.hpp"

namespace ncg {

Hyperparameters make_hyperparameters(int depth) {
  Hyperparameters h;
  h.depth = depth;
  h.shapes = Eigen::VectorXd::Constant(depth, 0.5);
  return h;
}

Hyperparameters preset_hyperparameters(const std::string& name) {
  if (name == "ncg2") return make_hyperparameters(2);
  if (name == "ncg10") return make_hyperparameters(10);
  if (name == "horseshoe") return make_hyperparameters(4);
  throw ValidationError({"unknown hyperparameter preset '" + name +
                         "' (expected ncg2, ncg10 or horseshoe)"});
}

ValidationReport validate_hyperparameters(const Hyperparameters& h) {
  ValidationReport report;
  if (h.depth < 1) report.errors.push_back("depth: must be >= 1, got " + std::to_string(h.depth));
  if (h.shapes.size() != h.depth)
    report.errors.push_back("shapes: expected " + std::to_string(h.depth) + " entries, got " +
                            std::to_string(h.shapes.size()));
  for (Eigen::Index k = 0; k < h.shapes.size(); ++k) {
    if (!std::isfinite(h.shapes[k]) || h.shapes[k] <= 0.0)
      report.errors.push_back("shapes: c_" + std::to_string(k + 1) + " must be positive, got " +
                              std::to_string(h.shapes[k]));
  }
  if (!std::isfinite(h.phi) || h.phi <= 0.0)
    report.errors.push_back("phi: must be positive, got " + std::to_string(h.phi));
  if (!std::isfinite(h.c0) || h.c0 <= 0.0)
    report.errors.push_back("c0: must be positive, got " + std::to_string(h.c0));
  if (!std::isfinite(h.d0) || h.d0 <= 0.0)
    report.errors.push_back("d0: must be positive, got " + std::to_string(h.d0));
  report.ok = report.errors.empty();
  if (report.ok) {
    for (int k = 2; k <= h.depth; k += 2) {
      if (h.shapes[k - 1] <= 1.0) {
        report.warnings.push_back(
            "even-level shape c_" + std::to_string(k) + " <= 1: prior second moment E(beta^2) is infinite");
        break;
      }
    }
  }
  return report;
}

void require_valid(const Hyperparameters& h) {
  auto report = validate_hyperparameters(h);
  if (!report.ok) throw ValidationError(report.errors);
}

void Dataset::validate() const {
  std::vector<std::string> issues;
  if (y.size() != X.rows())
    issues.push_back("dim(y) = " + std::to_string(y.size()) + " does not match rows(X) = " +
                     std::to_string(X.rows()));
  if (!X.allFinite()) issues.push_back("X contains non-finite entries");
  if (!y.allFinite()) issues.push_back("y contains non-finite entries");
  if (truth && truth->beta0.size() != X.cols())
    issues.push_back("truth.beta0 dimension does not match cols(X)");
  if (!issues.empty()) throw ValidationError(issues);
}

double local_scale(const GibbsState& state, Eigen::Index j) {
  double prod = 1.0;
  for (Eigen::Index k = 0; k < state.z.rows(); ++k) prod *= state.z(k, j);
  return prod;
}

std::string serialize_gibbs_state(const GibbsState& state) {
  nlohmann::json j;
  j["beta"] = std::vector<double>(state.beta.begin(), state.beta.end());
  j["sigma2"] = state.sigma2;
  j["z_rows"] = state.z.rows();
  j["z_cols"] = state.z.cols();
  std::vector<double> z_flat;
  z_flat.reserve(static_cast<size_t>(state.z.size()));
  for (Eigen::Index k = 0; k < state.z.rows(); ++k)
    for (Eigen::Index c = 0; c < state.z.cols(); ++c) z_flat.push_back(state.z(k, c));
  j["z"] = z_flat;
  return j.dump();
}

GibbsState deserialize_gibbs_state(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  GibbsState state;
  const auto beta = j.at("beta").get<std::vector<double>>();
  state.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
  state.sigma2 = j.at("sigma2").get<double>();
  const auto rows = j.at("z_rows").get<Eigen::Index>();
  const auto cols = j.at("z_cols").get<Eigen::Index>();
  const auto z_flat = j.at("z").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(z_flat.size()) != rows * cols)
    throw ParseError("GibbsState: z payload size mismatch");
  state.z.resize(rows, cols);
  size_t idx = 0;
  for (Eigen::Index k = 0; k < rows; ++k)
    for (Eigen::Index c = 0; c < cols; ++c) state.z(k, c) = z_flat[idx++];
  return state;
}

}  // namespace ncg
