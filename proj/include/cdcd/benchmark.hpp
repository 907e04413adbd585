#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cdcd/simgen.hpp"
#include "cdcd/tuning.hpp"

namespace cdcd {

struct BenchmarkConfig {
  StructureKind kind = StructureKind::AR1;
  int n = 200;
  int p = 50;
  int q = 30;
  int replicates = 20;
  int folds = 5;
  std::uint64_t seed = 7;
  std::vector<std::string> methods = {"cdcd", "dense-sample", "sparse-sample"};
  int n_alphas = 5;
  int n_lambda0 = 20;
  double grid_eps = 1e-2;
  std::optional<int> cap;
  int threads = 1;
  bool fix_random_t1 = false;  // share the Random-structure pattern across replicates
};

struct ReplicateRecord {
  int replicate = 0;
  std::string method;
  double sigma_err = 0.0;
  double precision_err = 0.0;
  bool precision_available = true;
  std::optional<double> l2_sq_err;
  std::optional<double> tpr;
  std::optional<double> fpr;
  double seconds = 0.0;
  double min_eigenvalue = 0.0;  // over subjects; meaningful for cdcd
  double kkt_cholesky = 0.0;
  double kkt_variance = 0.0;
  bool converged = true;
  std::string error;  // nonempty when the replicate failed
};

struct MethodAggregate {
  std::string method;
  int replicates = 0;
  double mean_sigma = 0.0, sd_sigma = 0.0, se_sigma = 0.0;
  double mean_precision = 0.0, sd_precision = 0.0, se_precision = 0.0;
  int precision_count = 0;
  // mean_l2 averages the unsquared coefficient l2 error across replicates
  std::optional<double> mean_l2, mean_tpr, mean_fpr;
};

struct BenchmarkReport {
  BenchmarkConfig config;
  std::vector<ReplicateRecord> records;
  long pd_assertions = 0;
  long pd_violations = 0;

  std::vector<MethodAggregate> aggregates() const;
  std::string to_csv() const;       // long format: method,replicate,metric,value
  std::string to_markdown() const;  // aggregate tables
  bool any_failures() const;
};

StructureKind parse_structure(const std::string& name);
std::string structure_name(StructureKind kind);

/// For each replicate: generate, tune, fit and evaluate every requested
/// method. Failures are recorded per replicate and the run continues.
BenchmarkReport run_benchmark(const BenchmarkConfig& config);

}  // namespace cdcd
