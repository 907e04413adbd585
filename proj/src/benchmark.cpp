#include "cdcd/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "cdcd/baselines.hpp"
#include "cdcd/metrics.hpp"

namespace cdcd {

namespace {

double wall_seconds(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

struct ReplicateResult {
  std::vector<ReplicateRecord> records;
  long pd_assertions = 0;
  long pd_violations = 0;
};

ReplicateRecord evaluate_cdcd(const BenchmarkConfig& config,
                              const Dataset& data, std::uint64_t seed) {
  ReplicateRecord rec;
  rec.method = "cdcd";
  const auto start = std::chrono::steady_clock::now();

  FitOptions options;
  options.folds = config.folds;
  options.seed = seed;
  options.n_alphas = config.n_alphas;
  options.n_lambda0 = config.n_lambda0;
  options.grid_eps = config.grid_eps;
  options.cap = config.cap;
  const FitResult fit = fit_model(data.y, data.x, options);

  const int n = static_cast<int>(data.y.rows());
  std::vector<Eigen::MatrixXd> sigma(n), precision(n);
  rec.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const SubjectCov cov = assemble(fit.model, data.x.row(i).transpose());
    const double lo =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cov.precision)
            .eigenvalues()
            .minCoeff();
    rec.min_eigenvalue = std::min(rec.min_eigenvalue, lo);
    sigma[i] = std::move(cov.sigma);
    precision[i] = std::move(cov.precision);
  }

  const DatasetTruth& truth = data.truth.value();
  rec.sigma_err = sigma_error(sigma, truth.sigma);
  rec.precision_err = precision_error(precision, truth.precision);
  rec.l2_sq_err = phi_l2_error(fit.model.phi, truth.phi);
  const SupportRates rates = support_rates(fit.model.phi, truth.support);
  rec.tpr = rates.tpr;
  rec.fpr = rates.fpr;
  rec.kkt_cholesky = fit.cholesky_diag.kkt_violation;
  rec.kkt_variance = fit.variance_diag.kkt_violation;
  rec.converged =
      fit.cholesky_diag.converged && fit.variance_diag.converged;
  rec.seconds = wall_seconds(start);
  return rec;
}

ReplicateRecord evaluate_baseline(const std::string& method,
                                  const Dataset& data, int folds,
                                  std::uint64_t seed) {
  ReplicateRecord rec;
  rec.method = method;
  const auto start = std::chrono::steady_clock::now();

  const Eigen::MatrixXd y_demeaned =
      data.y.rowwise() - data.y.colwise().mean();
  BaselineEstimate estimate =
      method == "dense-sample" ? dense_sample(y_demeaned)
                               : sparse_sample_cv(y_demeaned, folds, seed);

  const int n = static_cast<int>(data.y.rows());
  const DatasetTruth& truth = data.truth.value();
  const std::vector<Eigen::MatrixXd> sigma(n, estimate.sigma);
  rec.sigma_err = sigma_error(sigma, truth.sigma);
  const auto precision = baseline_precision(estimate.sigma);
  rec.precision_available = precision.has_value();
  if (precision) {
    const std::vector<Eigen::MatrixXd> prec(n, *precision);
    rec.precision_err = precision_error(prec, truth.precision);
  }
  rec.seconds = wall_seconds(start);
  return rec;
}

ReplicateResult run_replicate(const BenchmarkConfig& config, int r) {
  ReplicateResult result;
  const std::uint64_t structure_seed =
      config.fix_random_t1 ? config.seed
                           : config.seed + static_cast<std::uint64_t>(r);
  const std::uint64_t data_seed =
      config.seed + 1000003ULL * static_cast<std::uint64_t>(r + 1);

  Dataset data;
  try {
    const CovarianceStructure structure =
        make_structure(config.kind, config.p, structure_seed);
    data = generate(structure, config.n, config.q, data_seed);
  } catch (const std::exception& ex) {
    for (const auto& method : config.methods) {
      ReplicateRecord rec;
      rec.replicate = r;
      rec.method = method;
      rec.error = ex.what();
      result.records.push_back(std::move(rec));
    }
    return result;
  }

  for (const auto& method : config.methods) {
    ReplicateRecord rec;
    try {
      if (method == "cdcd") {
        rec = evaluate_cdcd(config, data, data_seed);
        result.pd_assertions += config.n;
        if (!(rec.min_eigenvalue > 0.0)) result.pd_violations += config.n;
      } else if (method == "dense-sample" || method == "sparse-sample") {
        rec = evaluate_baseline(method, data, config.folds, data_seed);
      } else {
        throw std::invalid_argument("unknown method '" + method + "'");
      }
    } catch (const std::exception& ex) {
      rec = ReplicateRecord{};
      rec.method = method;
      rec.error = ex.what();
    }
    rec.replicate = r;
    result.records.push_back(std::move(rec));
  }
  return result;
}

struct Moments {
  double mean = 0.0, sd = 0.0, se = 0.0;
  int count = 0;
};

Moments moments(const std::vector<double>& values) {
  Moments m;
  m.count = static_cast<int>(values.size());
  if (m.count == 0) return m;
  double sum = 0.0;
  for (double v : values) sum += v;
  m.mean = sum / m.count;
  if (m.count > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - m.mean) * (v - m.mean);
    m.sd = std::sqrt(ss / (m.count - 1));
    m.se = m.sd / std::sqrt(static_cast<double>(m.count));
  }
  return m;
}

std::string format_cell(double mean, double se) {
  std::ostringstream out;
  out.precision(3);
  out << std::fixed << mean << " (" << se << ")";
  return out.str();
}

}  // namespace

StructureKind parse_structure(const std::string& name) {
  if (name == "ar1") return StructureKind::AR1;
  if (name == "hub") return StructureKind::Hub;
  if (name == "random") return StructureKind::Random;
  throw std::invalid_argument("unknown structure '" + name +
                              "' (expected ar1|hub|random)");
}

std::string structure_name(StructureKind kind) {
  switch (kind) {
    case StructureKind::AR1: return "ar1";
    case StructureKind::Hub: return "hub";
    case StructureKind::Random: return "random";
  }
  return "ar1";
}

std::vector<MethodAggregate> BenchmarkReport::aggregates() const {
  std::vector<MethodAggregate> out;
  for (const auto& method : config.methods) {
    MethodAggregate agg;
    agg.method = method;
    std::vector<double> sig, prec, l2, tpr, fpr;
    for (const auto& rec : records) {
      if (rec.method != method || !rec.error.empty()) continue;
      ++agg.replicates;
      sig.push_back(rec.sigma_err);
      if (rec.precision_available) prec.push_back(rec.precision_err);
      if (rec.l2_sq_err) l2.push_back(std::sqrt(*rec.l2_sq_err));
      if (rec.tpr) tpr.push_back(*rec.tpr);
      if (rec.fpr) fpr.push_back(*rec.fpr);
    }
    const Moments ms = moments(sig);
    agg.mean_sigma = ms.mean;
    agg.sd_sigma = ms.sd;
    agg.se_sigma = ms.se;
    const Moments mp = moments(prec);
    agg.mean_precision = mp.mean;
    agg.sd_precision = mp.sd;
    agg.se_precision = mp.se;
    agg.precision_count = mp.count;
    if (!l2.empty()) agg.mean_l2 = moments(l2).mean;
    if (!tpr.empty()) agg.mean_tpr = moments(tpr).mean;
    if (!fpr.empty()) agg.mean_fpr = moments(fpr).mean;
    out.push_back(std::move(agg));
  }
  return out;
}

std::string BenchmarkReport::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "method,replicate,metric,value\n";
  auto emit = [&out](const ReplicateRecord& rec, const char* metric,
                     double value) {
    out << rec.method << ',' << rec.replicate << ',' << metric << ',' << value
        << '\n';
  };
  for (const auto& rec : records) {
    if (!rec.error.empty()) {
      out << rec.method << ',' << rec.replicate << ",error,nan\n";
      continue;
    }
    emit(rec, "sigma_error", rec.sigma_err);
    if (rec.precision_available)
      emit(rec, "precision_error", rec.precision_err);
    if (rec.l2_sq_err) emit(rec, "l2_sq_error", *rec.l2_sq_err);
    if (rec.tpr) emit(rec, "tpr", *rec.tpr);
    if (rec.fpr) emit(rec, "fpr", *rec.fpr);
    emit(rec, "seconds", rec.seconds);
    if (rec.method == "cdcd") {
      emit(rec, "min_eigenvalue", rec.min_eigenvalue);
      emit(rec, "kkt_cholesky", rec.kkt_cholesky);
      emit(rec, "kkt_variance", rec.kkt_variance);
      emit(rec, "converged", rec.converged ? 1.0 : 0.0);
    }
  }
  return out.str();
}

std::string BenchmarkReport::to_markdown() const {
  std::ostringstream out;
  out << "# Benchmark: " << structure_name(config.kind) << " (n=" << config.n
      << ", p=" << config.p << ", q=" << config.q
      << ", replicates=" << config.replicates << ", seed=" << config.seed
      << ")\n\n";
  out << "## Covariance and precision estimation error\n\n";
  out << "Mean over replicates of the per-subject average Frobenius error; "
         "standard error in parentheses.\n\n";
  out << "| Method | Sigma error | Precision error |\n";
  out << "| --- | --- | --- |\n";
  const auto aggs = aggregates();
  for (const auto& agg : aggs) {
    out << "| " << agg.method << " | "
        << format_cell(agg.mean_sigma, agg.se_sigma) << " | ";
    if (agg.precision_count > 0)
      out << format_cell(agg.mean_precision, agg.se_precision);
    else
      out << "singular";
    out << " |\n";
  }
  for (const auto& agg : aggs) {
    if (!agg.mean_l2) continue;
    out << "\n## Coefficient recovery (" << agg.method << ")\n\n";
    out << "| l2 error | TPR | FPR |\n";
    out << "| --- | --- | --- |\n";
    std::ostringstream row;
    row.precision(4);
    row << std::fixed << "| " << *agg.mean_l2 << " | ";
    if (agg.mean_tpr)
      row << *agg.mean_tpr;
    else
      row << "n/a";
    row << " | ";
    if (agg.mean_fpr)
      row << *agg.mean_fpr;
    else
      row << "n/a";
    row << " |\n";
    out << row.str();
  }
  out << "\nPositive-definiteness checks: " << pd_assertions - pd_violations
      << "/" << pd_assertions << " subject precisions passed.\n";
  const long failures =
      static_cast<long>(std::count_if(records.begin(), records.end(),
                                      [](const ReplicateRecord& r) {
                                        return !r.error.empty();
                                      }));
  if (failures > 0) out << "\nFailed replicate evaluations: " << failures << "\n";
  return out.str();
}

bool BenchmarkReport::any_failures() const {
  return std::any_of(records.begin(), records.end(),
                     [](const ReplicateRecord& r) { return !r.error.empty(); });
}

BenchmarkReport run_benchmark(const BenchmarkConfig& config) {
  if (config.replicates < 1)
    throw std::invalid_argument("run_benchmark: replicates must be >= 1");
  if (config.methods.empty())
    throw std::invalid_argument("run_benchmark: no methods requested");
  for (const auto& method : config.methods)
    if (method != "cdcd" && method != "dense-sample" &&
        method != "sparse-sample")
      throw std::invalid_argument("run_benchmark: unknown method '" + method +
                                  "'");

  BenchmarkReport report;
  report.config = config;

  const int threads = std::max(1, config.threads);
  std::vector<ReplicateResult> results(config.replicates);
  if (threads == 1) {
    for (int r = 0; r < config.replicates; ++r)
      results[r] = run_replicate(config, r);
  } else {
    // Seeds are per replicate, so the schedule does not affect the output.
    for (int base = 0; base < config.replicates; base += threads) {
      std::vector<std::future<ReplicateResult>> batch;
      for (int r = base; r < std::min(base + threads, config.replicates); ++r)
        batch.push_back(std::async(std::launch::async,
                                   [&config, r] { return run_replicate(config, r); }));
      for (int i = 0; i < static_cast<int>(batch.size()); ++i)
        results[base + i] = batch[i].get();
    }
  }

  for (auto& result : results) {
    report.pd_assertions += result.pd_assertions;
    report.pd_violations += result.pd_violations;
    for (auto& rec : result.records) report.records.push_back(std::move(rec));
  }
  return report;
}

}  // namespace cdcd
