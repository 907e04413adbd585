#include "cdcd/model_json.hpp"

#include <fstream>
#include <json.hpp>
#include <stdexcept>

namespace cdcd {

using nlohmann::json;

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Eigen::VectorXd vector_from_json(const json& arr) {
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v(i) = arr[i].get<double>();
  return v;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string model_to_json(const CholeskyModel& model) {
  json doc;
  doc["p"] = model.p();
  doc["q"] = model.q();
  doc["column_means"] = vector_to_json(model.column_means);

  json phi = json::array();
  for (int k = 0; k <= model.q(); ++k)
    for (int t = 2; t <= model.p(); ++t)
      for (int j = 1; j < t; ++j)
        if (model.phi(t, j, k) != 0.0)
          phi.push_back(json::array({t, j, k, model.phi(t, j, k)}));
  doc["phi"] = std::move(phi);

  json beta = json::array();
  for (int k = 0; k <= model.q(); ++k)
    for (int t = 1; t <= model.p(); ++t)
      if (model.beta(t, k) != 0.0)
        beta.push_back(json::array({t, k, model.beta(t, k)}));
  doc["beta"] = std::move(beta);

  doc["hyperparams"] = {{"lambda", model.info.lambda},
                        {"lambda_g", model.info.lambda_g},
                        {"lambda_d", model.info.lambda_d}};
  doc["diagnostics"] = {{"cholesky_converged", model.info.cholesky_converged},
                        {"variance_converged", model.info.variance_converged},
                        {"cholesky_sweeps", model.info.cholesky_sweeps},
                        {"variance_iters", model.info.variance_iters},
                        {"cholesky_kkt", model.info.cholesky_kkt},
                        {"variance_kkt", model.info.variance_kkt}};
  if (model.standardization) {
    doc["standardization"] = {
        {"x_center", vector_to_json(model.standardization->x_center)},
        {"x_scale", vector_to_json(model.standardization->x_scale)},
        {"y_scale", vector_to_json(model.standardization->y_scale)}};
  }
  return doc.dump(2);
}

CholeskyModel model_from_json(const std::string& text) {
  const json doc = json::parse(text);
  const int p = doc.at("p").get<int>();
  const int q = doc.at("q").get<int>();

  CholeskyModel model;
  model.phi = PhiTensor(p, q);
  model.beta = BetaMatrix(p, q);
  model.column_means = vector_from_json(doc.at("column_means"));
  if (model.column_means.size() != p)
    throw std::runtime_error("model_from_json: column_means length mismatch");

  for (const auto& entry : doc.at("phi")) {
    const int t = entry.at(0).get<int>();
    const int j = entry.at(1).get<int>();
    const int k = entry.at(2).get<int>();
    model.phi.set(t, j, k, entry.at(3).get<double>());
  }
  for (const auto& entry : doc.at("beta")) {
    const int t = entry.at(0).get<int>();
    const int k = entry.at(1).get<int>();
    model.beta.set(t, k, entry.at(2).get<double>());
  }

  const auto& hp = doc.at("hyperparams");
  model.info.lambda = hp.at("lambda").get<double>();
  model.info.lambda_g = hp.at("lambda_g").get<double>();
  model.info.lambda_d = hp.at("lambda_d").get<double>();
  if (doc.contains("diagnostics")) {
    const auto& dg = doc["diagnostics"];
    model.info.cholesky_converged = dg.value("cholesky_converged", true);
    model.info.variance_converged = dg.value("variance_converged", true);
    model.info.cholesky_sweeps = dg.value("cholesky_sweeps", 0);
    model.info.variance_iters = dg.value("variance_iters", 0);
    model.info.cholesky_kkt = dg.value("cholesky_kkt", 0.0);
    model.info.variance_kkt = dg.value("variance_kkt", 0.0);
  }
  if (doc.contains("standardization")) {
    Standardization s;
    s.x_center = vector_from_json(doc["standardization"].at("x_center"));
    s.x_scale = vector_from_json(doc["standardization"].at("x_scale"));
    s.y_scale = vector_from_json(doc["standardization"].at("y_scale"));
    model.standardization = std::move(s);
  }
  return model;
}

void save_model(const std::string& path, const CholeskyModel& model) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_model: cannot open " + path);
  out << model_to_json(model) << '\n';
}

CholeskyModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_model: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return model_from_json(text);
}

std::string cv_report_to_json(const CvReport& report) {
  json doc;
  doc["seed"] = report.seed;
  doc["selected"] = {{"lambda", report.selected_lambda},
                     {"lambda_g", report.selected_lambda_g},
                     {"lambda_d", report.selected_lambda_d}};
  doc["fold_assignment"] = report.fold_assignment;
  json candidates = json::array();
  for (const auto& c : report.candidates)
    candidates.push_back({{"alpha", c.alpha},
                          {"lambda0", c.lambda0},
                          {"lambda", c.lambda},
                          {"lambda_g", c.lambda_g},
                          {"mean_loss", c.mean_loss},
                          {"se_loss", c.se_loss},
                          {"max_support", c.max_support},
                          {"feasible", c.feasible}});
  doc["candidates"] = std::move(candidates);
  return doc.dump(2);
}

std::string truth_to_json(const DatasetTruth& truth) {
  json doc;
  // Subjects share covariance levels; store the distinct matrices once.
  std::vector<const Eigen::MatrixXd*> unique;
  std::vector<int> level_of(truth.sigma.size(), -1);
  for (std::size_t i = 0; i < truth.sigma.size(); ++i) {
    for (std::size_t u = 0; u < unique.size(); ++u)
      if (*unique[u] == truth.sigma[i]) {
        level_of[i] = static_cast<int>(u);
        break;
      }
    if (level_of[i] < 0) {
      level_of[i] = static_cast<int>(unique.size());
      unique.push_back(&truth.sigma[i]);
    }
  }

  json sigmas = json::array();
  json precisions = json::array();
  std::vector<bool> written(unique.size(), false);
  for (std::size_t u = 0; u < unique.size(); ++u) {
    for (std::size_t i = 0; i < truth.sigma.size(); ++i)
      if (level_of[i] == static_cast<int>(u) && !written[u]) {
        sigmas.push_back(matrix_to_json(truth.sigma[i]));
        precisions.push_back(matrix_to_json(truth.precision[i]));
        written[u] = true;
      }
  }
  doc["sigma_levels"] = std::move(sigmas);
  doc["precision_levels"] = std::move(precisions);
  doc["subject_level"] = level_of;

  json phi = json::array();
  for (int k = 0; k <= truth.phi.q(); ++k)
    for (int t = 2; t <= truth.phi.p(); ++t)
      for (int j = 1; j < t; ++j)
        if (truth.phi(t, j, k) != 0.0)
          phi.push_back(json::array({t, j, k, truth.phi(t, j, k)}));
  doc["phi"] = std::move(phi);

  json support = json::array();
  for (const auto& idx : truth.support)
    support.push_back(json::array({idx.t, idx.j, idx.k}));
  doc["support"] = std::move(support);
  return doc.dump();
}

}  // namespace cdcd
