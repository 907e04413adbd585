#include <doctest.h>

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <random>

#include "cdcd/csv.hpp"
#include "cdcd/model_json.hpp"
#include "cdcd/simgen.hpp"

using namespace cdcd;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "cdcd_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("CSV round trip is bit exact for finite doubles") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd values(17, 4);
  for (int i = 0; i < 17; ++i)
    for (int j = 0; j < 4; ++j) values(i, j) = gauss(rng) * std::pow(10.0, j - 2);
  values(0, 0) = 0.1;  // not exactly representable; round trip must still hold
  values(1, 1) = -1.0 / 3.0;
  values(2, 2) = 1e-308;
  values(3, 3) = 12345678901234567.0;

  const fs::path path = temp_file("roundtrip.csv");
  write_csv(path.string(), values, {"a", "b", "c", "d"});
  const NamedMatrix back = read_csv(path.string());
  CHECK(back.names == std::vector<std::string>{"a", "b", "c", "d"});
  REQUIRE(back.values.rows() == 17);
  for (int i = 0; i < 17; ++i)
    for (int j = 0; j < 4; ++j) CHECK(back.values(i, j) == values(i, j));
}

TEST_CASE("CSV rejects malformed inputs") {
  CHECK_THROWS(read_csv("/nonexistent/path.csv"));

  const fs::path ragged = temp_file("ragged.csv");
  write_text_file(ragged, "a,b\n1,2\n3\n");
  CHECK_THROWS_WITH_AS(read_csv(ragged.string()),
                       doctest::Contains("ragged"), std::runtime_error);

  const fs::path textual = temp_file("textual.csv");
  write_text_file(textual, "a,b\n1,two\n");
  CHECK_THROWS_WITH_AS(read_csv(textual.string()),
                       doctest::Contains("non-numeric"), std::runtime_error);

  const fs::path nonfinite = temp_file("nonfinite.csv");
  write_text_file(nonfinite, "a,b\n1,inf\n");
  CHECK_THROWS(read_csv(nonfinite.string()));

  const fs::path empty = temp_file("empty.csv");
  write_text_file(empty, "");
  CHECK_THROWS(read_csv(empty.string()));

  Eigen::MatrixXd m(1, 2);
  m << 1, 2;
  CHECK_THROWS_AS(write_csv(temp_file("bad.csv").string(), m, {"only"}),
                  std::invalid_argument);
}

TEST_CASE("model JSON round trip preserves assembly to machine precision") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> gauss(0.0, 0.3);
  CholeskyModel model;
  const int p = 6, q = 3;
  model.phi = PhiTensor(p, q);
  model.beta = BetaMatrix(p, q);
  model.column_means = Eigen::VectorXd::Zero(p);
  for (int i = 0; i < p; ++i) model.column_means(i) = gauss(rng);
  // sparse coefficients, as a fitted model would have
  model.phi.set(2, 1, 0, gauss(rng));
  model.phi.set(4, 2, 1, gauss(rng));
  model.phi.set(6, 5, 3, gauss(rng));
  for (int t = 1; t <= p; ++t) model.beta.set(t, 0, gauss(rng));
  model.beta.set(3, 2, gauss(rng));
  model.info.lambda = 0.12;
  model.info.lambda_g = 0.05;
  model.info.lambda_d = 0.3;
  model.info.cholesky_kkt = 1e-6;

  const CholeskyModel back = model_from_json(model_to_json(model));
  CHECK(back.p() == p);
  CHECK(back.q() == q);
  CHECK(back.info.lambda == model.info.lambda);
  CHECK(back.info.cholesky_kkt == model.info.cholesky_kkt);
  CHECK_FALSE(back.standardization.has_value());

  std::mt19937_64 xrng(11);
  std::normal_distribution<double> xg;
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::VectorXd x(q);
    for (int k = 0; k < q; ++k) x(k) = xg(xrng);
    const SubjectCov a = assemble(model, x);
    const SubjectCov b = assemble(back, x);
    CHECK((a.sigma - b.sigma).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((a.precision - b.precision).cwiseAbs().maxCoeff() <= 1e-12);
  }

  // file-based round trip
  const fs::path path = temp_file("model.json");
  save_model(path.string(), model);
  const CholeskyModel loaded = load_model(path.string());
  CHECK(loaded.phi.support_size() == model.phi.support_size());
}

TEST_CASE("standardization survives the JSON round trip") {
  CholeskyModel model;
  model.phi = PhiTensor(3, 1);
  model.beta = BetaMatrix(3, 1);
  model.column_means = Eigen::VectorXd::Zero(3);
  Standardization s;
  s.x_center = Eigen::VectorXd::Constant(1, 0.5);
  s.x_scale = Eigen::VectorXd::Constant(1, 2.0);
  s.y_scale = Eigen::VectorXd::Constant(3, 1.5);
  model.standardization = s;
  const CholeskyModel back = model_from_json(model_to_json(model));
  REQUIRE(back.standardization.has_value());
  CHECK(back.standardization->x_center(0) == 0.5);
  CHECK(back.standardization->x_scale(0) == 2.0);
  CHECK(back.standardization->y_scale(2) == 1.5);
}

TEST_CASE("model JSON validation") {
  CHECK_THROWS(model_from_json("not json"));
  CHECK_THROWS(model_from_json("{}"));
  // out-of-range phi index
  nlohmann::json doc;
  doc["p"] = 3;
  doc["q"] = 1;
  doc["column_means"] = {0.0, 0.0, 0.0};
  doc["phi"] = nlohmann::json::array({{4, 1, 0, 0.5}});
  doc["beta"] = nlohmann::json::array();
  doc["hyperparams"] = {{"lambda", 0.0}, {"lambda_g", 0.0}, {"lambda_d", 0.0}};
  CHECK_THROWS(model_from_json(doc.dump()));
}

TEST_CASE("truth JSON deduplicates the two covariate levels") {
  const auto structure = make_structure(StructureKind::AR1, 5, 0);
  const Dataset data = generate(structure, 40, 2, 3);
  const auto doc = nlohmann::json::parse(truth_to_json(*data.truth));
  // binary x1 gives at most two distinct covariance levels
  CHECK(doc.at("sigma_levels").size() <= 2);
  CHECK(doc.at("precision_levels").size() == doc.at("sigma_levels").size());
  REQUIRE(doc.at("subject_level").size() == 40);
  for (int i = 0; i < 40; ++i) {
    const int level = doc.at("subject_level")[i].get<int>();
    const auto sigma = doc.at("sigma_levels")[level];
    CHECK(sigma[0][1].get<double>() ==
          doctest::Approx(data.truth->sigma[i](0, 1)));
  }
  CHECK(doc.at("support").size() == data.truth->support.size());
}

TEST_CASE("cv report serializes") {
  CvReport report;
  report.seed = 12;
  report.selected_lambda = 0.1;
  report.selected_lambda_g = 0.2;
  report.selected_lambda_d = 0.3;
  CvCandidate c;
  c.alpha = 0.5;
  c.lambda0 = 0.6;
  c.mean_loss = 1.5;
  report.candidates.push_back(c);
  const auto doc = nlohmann::json::parse(cv_report_to_json(report));
  CHECK(doc.at("selected").at("lambda").get<double>() == 0.1);
  CHECK(doc.at("candidates").size() == 1);
  CHECK(doc.at("candidates")[0].at("alpha").get<double>() == 0.5);
}
