#pragma once

// Inverse-variance aggregation of per-clip/per-image estimates to case
// level, cross-model ensembling, and confidence ranking. Pure functions.

#include <string>
#include <vector>

namespace ga::aggregation {

struct Estimate {
    double mean = 0.0;      // GA days
    double variance = 0.0;  // days^2, > 0
    std::string source;     // clip/image identifier
};

struct CaseEstimate {
    double mean = 0.0;
    double variance = 0.0;
    std::size_t n_inputs = 0;
    std::string model_id;
};

// mean = sum(mu_i/var_i) / sum(1/var_i); variance = 1 / sum(1/var_i).
CaseEstimate inverse_variance_aggregate(const std::vector<Estimate>& estimates);

// Across-model stage: unweighted average of case means; the reported
// variance is the average input variance divided by n (not used downstream).
CaseEstimate ensemble_cases(const std::vector<CaseEstimate>& cases);

// Ascending by variance; stable, ties broken by source identifier.
std::vector<Estimate> rank_by_confidence(std::vector<Estimate> estimates);

}  // namespace ga::aggregation
