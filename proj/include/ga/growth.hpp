#pragma once

// Per-population, per-gestational-week abdominal-circumference percentile
// tables and SGA/LGA classification.

#include <filesystem>
#include <map>
#include <vector>

#include "ga/cohort.hpp"
#include "ga/io.hpp"

namespace ga::growth {

struct GrowthConfig {
    double severe_sga_q = 0.03;
    double sga_q = 0.10;
    double lga_q = 0.90;
    int week_lo = 14;
    int week_hi = 36;  // inclusive
    std::size_t min_studies_per_week = 14;
};

struct PercentileCell {
    std::size_t n = 0;
    double p3 = 0.0;
    double p10 = 0.0;
    double p90 = 0.0;
};

struct PercentileTable {
    // (population, gestational week) -> percentile thresholds.
    std::map<std::pair<cohort::Country, int>, PercentileCell> cells;

    const PercentileCell* find(cohort::Country population, int week) const;
};

// Linear interpolation between order statistics at rank h = (n-1)*q + 1
// (1-indexed); q=0 gives the minimum, q=1 the maximum.
double percentile(std::vector<double> values, double q);

// Groups AC by (country, floor(ga/7)) across the whole cohort; keeps weeks
// in [week_lo, week_hi] with at least min_studies_per_week samples.
PercentileTable build_percentile_table(const cohort::CohortManifest& cohort,
                                       const GrowthConfig& config = {});

enum class SizeVerdict { severe_sga, sga, normal, lga, unclassifiable };
std::string to_string(SizeVerdict v);

// Strict comparisons: < p3 severe SGA, < p10 SGA, > p90 LGA. An exact tie
// with a threshold is normal. Missing (population, week) cell is
// unclassifiable. severe_sga counts as part of the SGA analysis group.
SizeVerdict classify_size(double ac, int ga_days, cohort::Country population,
                          const PercentileTable& table);

inline bool in_sga_group(SizeVerdict v) {
    return v == SizeVerdict::sga || v == SizeVerdict::severe_sga;
}

void save_percentile_table(const PercentileTable& table,
                           const std::filesystem::path& path, std::uint64_t seed,
                           const std::vector<ga::io::InputDigest>& inputs);

}  // namespace ga::growth
