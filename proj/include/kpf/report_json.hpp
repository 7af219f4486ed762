#pragma once

// JSON renderings of fit results and benchmark reports. Non-finite numbers
// are written as the strings "inf", "-inf" and "nan".

#include <nlohmann/json.hpp>

#include "kpf/estimator.hpp"
#include "kpf/experiment.hpp"
#include "kpf/mle.hpp"

namespace kpf {

nlohmann::json number_json(double x);
/// Inverse of number_json; InputError on anything else.
double json_number(const nlohmann::json& j);

nlohmann::json matrix_json(const Mat& m);
Mat json_matrix(const nlohmann::json& j);

/// Everything needed to rebuild the FitReport, factors included.
nlohmann::json fit_report_json(const FitReport& fit);
FitReport fit_report_from_json(const nlohmann::json& j);

nlohmann::json mle_state_json(const MleState& state);

nlohmann::json run_report_json(const RunReport& report);

}  // namespace kpf
