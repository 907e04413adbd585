// Command-line front end: simulate | fit | predict | benchmark | report.
// Exit codes: 0 success, 2 input error, 3 numerical failure,
// 4 partial benchmark failure.

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cdcd/benchmark.hpp"
#include "cdcd/csv.hpp"
#include "cdcd/model_json.hpp"
#include "cdcd/simgen.hpp"
#include "cdcd/tuning.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitPartial = 4;

// Raised for anything wrong with the user's inputs (flags, files, shapes).
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> indexed_names(const std::string& prefix, int count) {
  std::vector<std::string> names;
  names.reserve(count);
  for (int i = 1; i <= count; ++i) names.push_back(prefix + std::to_string(i));
  return names;
}

cdcd::NamedMatrix load_matrix(const std::string& path) {
  try {
    return cdcd::read_csv(path);
  } catch (const std::exception& ex) {
    throw InputError(ex.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open " + path + " for writing");
  out << text;
}

std::string zero_pad(int value, int width) {
  std::string s = std::to_string(value);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

struct SimulateArgs {
  std::string structure = "ar1";
  int n = 200, p = 50, q = 30, replicates = 1;
  std::uint64_t seed = 0;
  std::string out = "sim";
};

int cmd_simulate(const SimulateArgs& args) {
  const cdcd::StructureKind kind = cdcd::parse_structure(args.structure);
  fs::create_directories(args.out);
  for (int r = 0; r < args.replicates; ++r) {
    const std::uint64_t structure_seed =
        args.seed + static_cast<std::uint64_t>(r);
    const std::uint64_t data_seed =
        args.seed + 1000003ULL * static_cast<std::uint64_t>(r + 1);
    const cdcd::CovarianceStructure structure =
        cdcd::make_structure(kind, args.p, structure_seed);
    const cdcd::Dataset data =
        cdcd::generate(structure, args.n, args.q, data_seed);

    const fs::path dir = fs::path(args.out) / ("rep_" + zero_pad(r, 3));
    fs::create_directories(dir);
    cdcd::write_csv((dir / "Y.csv").string(), data.y,
                    indexed_names("y", args.p));
    cdcd::write_csv((dir / "X.csv").string(), data.x,
                    indexed_names("x", args.q));
    write_text((dir / "truth.json").string(),
               cdcd::truth_to_json(data.truth.value()) + "\n");
  }
  std::cout << "wrote " << args.replicates << " replicate(s) under "
            << args.out << "\n";
  return kExitOk;
}

struct FitArgs {
  std::string y_path, x_path;
  std::string model_out = "model.json";
  std::string summary_out;
  std::string cv_out;
  std::optional<double> lambda, lambda_g, lambda_d;
  int folds = 5;
  std::uint64_t seed = 0;
  bool standardize = true;
  int n_alphas = 5, n_lambda0 = 30;
  double grid_eps = 1e-3;
  std::optional<int> cap;
};

int cmd_fit(const FitArgs& args) {
  const cdcd::NamedMatrix y = load_matrix(args.y_path);
  const cdcd::NamedMatrix x = load_matrix(args.x_path);
  if (y.values.rows() != x.values.rows())
    throw InputError("Y and X row counts differ (" +
                     std::to_string(y.values.rows()) + " vs " +
                     std::to_string(x.values.rows()) + ")");

  cdcd::FitOptions options;
  options.lambda = args.lambda;
  options.lambda_g = args.lambda_g;
  options.lambda_d = args.lambda_d;
  options.folds = args.folds;
  options.seed = args.seed;
  options.standardize = args.standardize;
  options.n_alphas = args.n_alphas;
  options.n_lambda0 = args.n_lambda0;
  options.grid_eps = args.grid_eps;
  options.cap = args.cap;

  const cdcd::FitResult result = cdcd::fit_model(y.values, x.values, options);
  cdcd::save_model(args.model_out, result.model);
  if (!args.cv_out.empty())
    write_text(args.cv_out, cdcd::cv_report_to_json(result.cv) + "\n");

  std::ostringstream summary;
  const int q = result.model.q();
  std::vector<int> selected;
  for (int k = 1; k <= q; ++k)
    if (result.model.phi.slice(k).squaredNorm() > 0.0 ||
        result.model.beta.entries().col(k).squaredNorm() > 0.0)
      selected.push_back(k);
  summary << "subjects: " << y.values.rows() << "\n"
          << "responses (p): " << result.model.p() << "\n"
          << "covariates (q): " << q << "\n"
          << "lambda: " << result.model.info.lambda << "\n"
          << "lambda_g: " << result.model.info.lambda_g << "\n"
          << "lambda_d: " << result.model.info.lambda_d << "\n"
          << "phi support size: " << result.model.phi.support_size() << "\n"
          << "selected covariates (" << selected.size() << "):";
  for (int k : selected) summary << ' ' << x.names[k - 1];
  summary << "\n"
          << "cholesky converged: " << std::boolalpha
          << result.cholesky_diag.converged
          << " (sweeps " << result.cholesky_diag.sweeps_run
          << ", kkt " << result.cholesky_diag.kkt_violation << ")\n"
          << "variance converged: " << result.variance_diag.converged
          << " (iters " << result.variance_diag.sweeps_run
          << ", kkt " << result.variance_diag.kkt_violation << ")\n";
  if (args.summary_out.empty())
    std::cout << summary.str();
  else
    write_text(args.summary_out, summary.str());
  return kExitOk;
}

struct PredictArgs {
  std::string model_path, x_path;
  std::string out = "predict";
};

int cmd_predict(const PredictArgs& args) {
  cdcd::CholeskyModel model;
  try {
    model = cdcd::load_model(args.model_path);
  } catch (const std::exception& ex) {
    throw InputError(ex.what());
  }
  const cdcd::NamedMatrix x = load_matrix(args.x_path);
  if (x.values.cols() != model.q())
    throw InputError("model expects q=" + std::to_string(model.q()) +
                     " covariates, X has " + std::to_string(x.values.cols()));

  fs::create_directories(args.out);
  const int n = static_cast<int>(x.values.rows());
  Eigen::MatrixXd certificate(n, 1);
  const std::vector<std::string> col_names = indexed_names("y", model.p());
  for (int i = 0; i < n; ++i) {
    const cdcd::SubjectCov cov =
        cdcd::assemble(model, x.values.row(i).transpose());
    const std::string tag = zero_pad(i, 4);
    const fs::path dir(args.out);
    cdcd::write_csv((dir / ("sigma_" + tag + ".csv")).string(), cov.sigma,
                    col_names);
    cdcd::write_csv((dir / ("precision_" + tag + ".csv")).string(),
                    cov.precision, col_names);
    certificate(i, 0) =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cov.sigma)
            .eigenvalues()
            .minCoeff();
  }
  cdcd::write_csv((fs::path(args.out) / "pd_certificate.csv").string(),
                  certificate, {"min_eigenvalue_sigma"});
  if (certificate.minCoeff() <= 0.0) {
    std::cerr << "error: non-positive-definite covariance assembled\n";
    return kExitNumerical;
  }
  std::cout << "wrote " << n << " subject covariance pair(s) under "
            << args.out << "\n";
  return kExitOk;
}

struct BenchmarkArgs {
  std::string structure = "ar1";
  cdcd::BenchmarkConfig config;
  std::string out = "benchmark";
};

int cmd_benchmark(BenchmarkArgs args) {
  args.config.kind = cdcd::parse_structure(args.structure);
  const cdcd::BenchmarkReport report = cdcd::run_benchmark(args.config);
  fs::create_directories(args.out);
  write_text((fs::path(args.out) / "records.csv").string(), report.to_csv());
  write_text((fs::path(args.out) / "report.md").string(),
             report.to_markdown());
  std::cout << report.to_markdown();
  if (report.any_failures()) {
    std::cerr << "error: some replicate evaluations failed (see records.csv)\n";
    return kExitPartial;
  }
  return kExitOk;
}

struct ReportArgs {
  std::string records_path;
  std::string out;
};

// Rebuild the Markdown aggregate tables from a long-format records CSV.
int cmd_report(const ReportArgs& args) {
  std::ifstream in(args.records_path);
  if (!in) throw InputError("cannot open " + args.records_path);
  std::string line;
  if (!std::getline(in, line) || line != "method,replicate,metric,value")
    throw InputError("unexpected header in " + args.records_path);

  std::map<std::string, std::map<int, cdcd::ReplicateRecord>> by_method;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string method, rep_str, metric, value_str;
    if (!std::getline(ss, method, ',') || !std::getline(ss, rep_str, ',') ||
        !std::getline(ss, metric, ',') || !std::getline(ss, value_str))
      throw InputError("malformed row in " + args.records_path);
    int replicate = 0;
    try {
      replicate = std::stoi(rep_str);
    } catch (const std::exception&) {
      throw InputError("non-integer replicate id in " + args.records_path);
    }
    cdcd::ReplicateRecord& rec = by_method[method][replicate];
    rec.method = method;
    rec.replicate = replicate;
    rec.precision_available = rec.precision_available || metric == "precision_error";
    if (metric == "error") {
      rec.error = "recorded failure";
      continue;
    }
    double value = 0.0;
    try {
      value = std::stod(value_str);
    } catch (const std::exception&) {
      throw InputError("non-numeric value in " + args.records_path);
    }
    if (metric == "sigma_error") rec.sigma_err = value;
    else if (metric == "precision_error") rec.precision_err = value;
    else if (metric == "l2_sq_error") rec.l2_sq_err = value;
    else if (metric == "tpr") rec.tpr = value;
    else if (metric == "fpr") rec.fpr = value;
    else if (metric == "seconds") rec.seconds = value;
    else if (metric == "min_eigenvalue") rec.min_eigenvalue = value;
    else if (metric == "kkt_cholesky") rec.kkt_cholesky = value;
    else if (metric == "kkt_variance") rec.kkt_variance = value;
    else if (metric == "converged") rec.converged = value != 0.0;
  }

  cdcd::BenchmarkReport report;
  int max_rep = -1;
  for (auto& [method, recs] : by_method) {
    report.config.methods.push_back(method);
    for (auto& [rep, rec] : recs) {
      // Records only carry precision rows when a precision was available.
      rec.precision_available = rec.precision_err != 0.0 || method == "cdcd";
      max_rep = std::max(max_rep, rep);
      report.records.push_back(rec);
    }
  }
  report.config.replicates = max_rep + 1;
  const std::string markdown = report.to_markdown();
  if (args.out.empty())
    std::cout << markdown;
  else
    write_text(args.out, markdown);
  return kExitOk;
}

void add_grid_flags(CLI::App* cmd, int& n_alphas, int& n_lambda0,
                    double& grid_eps, std::optional<int>& cap) {
  cmd->add_option("--alphas", n_alphas, "Number of mixing values in the grid");
  cmd->add_option("--lambdas", n_lambda0,
                  "Number of penalty levels per mixing value");
  cmd->add_option("--grid-eps", grid_eps,
                  "Smallest penalty as a fraction of the all-zero level");
  cmd->add_option("--support-cap", cap,
                  "Reject tuning candidates whose support exceeds this size");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Covariate-dependent Cholesky covariance estimation"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Key-value config file merged under flags");

  SimulateArgs sim;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Generate synthetic replicate datasets");
  simulate->add_option("--structure", sim.structure, "ar1 | hub | random");
  simulate->add_option("--n", sim.n, "Subjects per replicate");
  simulate->add_option("--p", sim.p, "Responses per subject");
  simulate->add_option("--q", sim.q, "Covariates per subject");
  simulate->add_option("--replicates", sim.replicates, "Replicate count");
  simulate->add_option("--seed", sim.seed, "Random seed")->required();
  simulate->add_option("--out", sim.out, "Output directory");

  FitArgs fit;
  CLI::App* fit_cmd =
      app.add_subcommand("fit", "Fit the model to Y.csv / X.csv");
  fit_cmd->add_option("--y", fit.y_path, "Response CSV (n x p, header row)")
      ->required();
  fit_cmd->add_option("--x", fit.x_path, "Covariate CSV (n x q, header row)")
      ->required();
  fit_cmd->add_option("--model-out", fit.model_out, "Model JSON output path");
  fit_cmd->add_option("--summary-out", fit.summary_out,
                      "Fit summary path (stdout when omitted)");
  fit_cmd->add_option("--cv-out", fit.cv_out, "CV report JSON output path");
  fit_cmd->add_option("--lambda", fit.lambda, "Pin the elementwise penalty");
  fit_cmd->add_option("--lambda-g", fit.lambda_g, "Pin the group penalty");
  fit_cmd->add_option("--lambda-d", fit.lambda_d, "Pin the variance penalty");
  fit_cmd->add_option("--folds", fit.folds, "Cross-validation folds");
  fit_cmd->add_option("--seed", fit.seed, "Random seed for fold assignment");
  fit_cmd->add_flag("--standardize,!--no-standardize", fit.standardize,
                    "Standardize covariates before fitting (default on)");
  add_grid_flags(fit_cmd, fit.n_alphas, fit.n_lambda0, fit.grid_eps, fit.cap);

  PredictArgs pred;
  CLI::App* predict = app.add_subcommand(
      "predict", "Assemble per-subject covariance/precision matrices");
  predict->add_option("--model", pred.model_path, "Model JSON")->required();
  predict->add_option("--x", pred.x_path, "Covariate CSV for new subjects")
      ->required();
  predict->add_option("--out", pred.out, "Output directory");

  BenchmarkArgs bench;
  CLI::App* benchmark = app.add_subcommand(
      "benchmark", "Simulate, fit and score methods over replicates");
  benchmark->add_option("--structure", bench.structure, "ar1 | hub | random");
  benchmark->add_option("--n", bench.config.n, "Subjects per replicate");
  benchmark->add_option("--p", bench.config.p, "Responses per subject");
  benchmark->add_option("--q", bench.config.q, "Covariates per subject");
  benchmark->add_option("--replicates", bench.config.replicates,
                        "Replicate count");
  benchmark->add_option("--folds", bench.config.folds, "CV folds");
  benchmark->add_option("--seed", bench.config.seed, "Random seed")
      ->required();
  benchmark
      ->add_option("--methods", bench.config.methods,
                   "Subset of cdcd, dense-sample, sparse-sample")
      ->delimiter(',');
  benchmark
      ->add_option("--threads", bench.config.threads,
                   "Replicate-level parallelism")
      ->envname("CDCD_THREADS");
  benchmark->add_flag("--fix-random-t1", bench.config.fix_random_t1,
                      "Share the random-structure pattern across replicates");
  benchmark->add_option("--out", bench.out, "Output directory");
  add_grid_flags(benchmark, bench.config.n_alphas, bench.config.n_lambda0,
                 bench.config.grid_eps, bench.config.cap);

  ReportArgs rep;
  CLI::App* report = app.add_subcommand(
      "report", "Rebuild the Markdown tables from a records CSV");
  report->add_option("--records", rep.records_path, "records.csv path")
      ->required();
  report->add_option("--out", rep.out, "Markdown path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*simulate) return cmd_simulate(sim);
    if (*fit_cmd) return cmd_fit(fit);
    if (*predict) return cmd_predict(pred);
    if (*benchmark) return cmd_benchmark(bench);
    if (*report) return cmd_report(rep);
  } catch (const InputError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitInput;
  } catch (const std::invalid_argument& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitInput;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}
