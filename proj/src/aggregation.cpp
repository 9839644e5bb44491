#include "ga/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ga::aggregation {

CaseEstimate inverse_variance_aggregate(const std::vector<Estimate>& estimates) {
    if (estimates.empty())
        throw std::invalid_argument("inverse_variance_aggregate: empty input");
    double weighted_sum = 0.0;
    double weight_total = 0.0;
    for (const auto& e : estimates) {
        if (!(e.variance > 0.0))
            throw std::invalid_argument("inverse_variance_aggregate: variance must be > 0");
        if (!std::isfinite(e.mean))
            throw std::invalid_argument("inverse_variance_aggregate: non-finite mean");
        const double w = 1.0 / e.variance;
        weighted_sum += e.mean * w;
        weight_total += w;
    }
    CaseEstimate out;
    out.mean = weighted_sum / weight_total;
    out.variance = 1.0 / weight_total;
    out.n_inputs = estimates.size();
    return out;
}

CaseEstimate ensemble_cases(const std::vector<CaseEstimate>& cases) {
    if (cases.empty()) throw std::invalid_argument("ensemble_cases: empty input");
    double mean_sum = 0.0, var_sum = 0.0;
    for (const auto& c : cases) {
        mean_sum += c.mean;
        var_sum += c.variance;
    }
    const double n = static_cast<double>(cases.size());
    CaseEstimate out;
    out.mean = mean_sum / n;
    out.variance = var_sum / n / n;
    out.n_inputs = cases.size();
    return out;
}

std::vector<Estimate> rank_by_confidence(std::vector<Estimate> estimates) {
    if (estimates.empty()) throw std::invalid_argument("rank_by_confidence: empty input");
    std::stable_sort(estimates.begin(), estimates.end(),
                     [](const Estimate& a, const Estimate& b) {
                         if (a.variance != b.variance) return a.variance < b.variance;
                         return a.source < b.source;
                     });
    return estimates;
}

}  // namespace ga::aggregation
