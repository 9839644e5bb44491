#include "ga/growth.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ga::growth {

const PercentileCell* PercentileTable::find(cohort::Country population, int week) const {
    const auto it = cells.find({population, week});
    return it == cells.end() ? nullptr : &it->second;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("percentile: empty input");
    if (q < 0.0 || q > 1.0) throw std::invalid_argument("percentile: q outside [0,1]");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * q;  // 0-indexed rank
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= values.size()) return values.back();
    const double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

PercentileTable build_percentile_table(const cohort::CohortManifest& manifest,
                                       const GrowthConfig& config) {
    std::map<std::pair<cohort::Country, int>, std::vector<double>> groups;
    for (const auto& patient : manifest.patients) {
        for (const auto& visit : patient.visits) {
            if (!visit.biometry.ac) continue;
            const int week = cohort::ground_truth_ga(visit) / 7;
            if (week < config.week_lo || week > config.week_hi) continue;
            groups[{patient.country, week}].push_back(*visit.biometry.ac);
        }
    }

    PercentileTable table;
    for (auto& [key, values] : groups) {
        if (values.size() < config.min_studies_per_week) continue;
        PercentileCell cell;
        cell.n = values.size();
        cell.p3 = percentile(values, config.severe_sga_q);
        cell.p10 = percentile(values, config.sga_q);
        cell.p90 = percentile(values, config.lga_q);
        table.cells.emplace(key, cell);
    }
    if (table.cells.empty())
        throw std::runtime_error("build_percentile_table: no eligible (population, week) cells");
    return table;
}

std::string to_string(SizeVerdict v) {
    switch (v) {
        case SizeVerdict::severe_sga: return "severe_sga";
        case SizeVerdict::sga: return "sga";
        case SizeVerdict::normal: return "normal";
        case SizeVerdict::lga: return "lga";
        default: return "unclassifiable";
    }
}

SizeVerdict classify_size(double ac, int ga_days, cohort::Country population,
                          const PercentileTable& table) {
    if (!(ac > 0.0)) throw std::invalid_argument("classify_size: ac must be > 0");
    const PercentileCell* cell = table.find(population, ga_days / 7);
    if (!cell) return SizeVerdict::unclassifiable;
    if (ac < cell->p3) return SizeVerdict::severe_sga;
    if (ac < cell->p10) return SizeVerdict::sga;
    if (ac > cell->p90) return SizeVerdict::lga;
    return SizeVerdict::normal;
}

void save_percentile_table(const PercentileTable& table,
                           const std::filesystem::path& path, std::uint64_t seed,
                           const std::vector<ga::io::InputDigest>& inputs) {
    std::ostringstream out;
    out << io::header_line("percentiles", seed, inputs) << "\n";
    out << "population,week,n,p3,p10,p90\n";
    for (const auto& [key, cell] : table.cells) {
        out << cohort::to_string(key.first) << "," << key.second << "," << cell.n << ","
            << io::fmt_g(cell.p3, 10) << "," << io::fmt_g(cell.p10, 10) << ","
            << io::fmt_g(cell.p90, 10) << "\n";
    }
    io::write_text_file(path, out.str());
}

}  // namespace ga::growth
