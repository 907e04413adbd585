#pragma once

#include <string>

#include "cdcd/model.hpp"
#include "cdcd/simgen.hpp"
#include "cdcd/tuning.hpp"

namespace cdcd {

/// Model document: {p, q, column_means, phi: [[t,j,k,value],...],
/// beta: [[t,k,value],...], hyperparams, diagnostics}; indices 1-based,
/// coefficient lists sparse (nonzeros only). See docs/formats.md.
std::string model_to_json(const CholeskyModel& model);
CholeskyModel model_from_json(const std::string& text);

void save_model(const std::string& path, const CholeskyModel& model);
CholeskyModel load_model(const std::string& path);

std::string cv_report_to_json(const CvReport& report);

/// Truth bundle for a simulated replicate (per-level matrices and support).
std::string truth_to_json(const DatasetTruth& truth);

}  // namespace cdcd
