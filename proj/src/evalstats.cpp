#include "ga/evalstats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ga::evalstats {

namespace {

double sample_sd(const std::vector<double>& xs, double mean) {
    if (xs.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / (static_cast<double>(xs.size()) - 1.0));
}

// Regularized incomplete beta I_x(a, b) via Lentz's continued fraction.
double beta_inc(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    if (x > (a + 1.0) / (a + b + 2.0)) return 1.0 - beta_inc(b, a, 1.0 - x);

    const double ln_front = a * std::log(x) + b * std::log(1.0 - x) -
                            (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
    const double tiny = 1e-300;
    double f = tiny, c = f, d = 0.0;
    for (int i = 0; i <= 400; ++i) {
        const int m = i / 2;
        double numer;
        if (i == 0)
            numer = 1.0;
        else if (i % 2 == 0)
            numer = m * (b - m) * x / ((a + 2.0 * m - 1.0) * (a + 2.0 * m));
        else
            numer = -(a + m) * (a + b + m) * x / ((a + 2.0 * m) * (a + 2.0 * m + 1.0));
        d = 1.0 + numer * d;
        if (std::abs(d) < tiny) d = tiny;
        d = 1.0 / d;
        c = 1.0 + numer / c;
        if (std::abs(c) < tiny) c = tiny;
        f *= c * d;
        if (std::abs(1.0 - c * d) < 1e-15) break;
    }
    return std::exp(ln_front) * (f - tiny) / a;
}

double student_t_cdf(double x, double df) {
    const double ib = beta_inc(df / 2.0, 0.5, df / (df + x * x));
    return x >= 0.0 ? 1.0 - 0.5 * ib : 0.5 * ib;
}

}  // namespace

ErrorStats mae_me(const std::vector<double>& errors) {
    if (errors.empty()) throw std::invalid_argument("mae_me: empty input");
    for (double e : errors)
        if (!std::isfinite(e)) throw std::invalid_argument("mae_me: non-finite error");

    std::vector<double> abs_errors(errors.size());
    for (std::size_t i = 0; i < errors.size(); ++i) abs_errors[i] = std::abs(errors[i]);

    ErrorStats stats;
    stats.n = errors.size();
    double sum = 0.0, abs_sum = 0.0;
    for (std::size_t i = 0; i < errors.size(); ++i) {
        sum += errors[i];
        abs_sum += abs_errors[i];
    }
    stats.me = sum / static_cast<double>(errors.size());
    stats.mae = abs_sum / static_cast<double>(errors.size());
    stats.sd = sample_sd(errors, stats.me);
    stats.sd_abs = sample_sd(abs_errors, stats.mae);
    return stats;
}

double student_t_quantile(double p, std::size_t df) {
    if (df == 0) throw std::invalid_argument("student_t_quantile: df must be >= 1");
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("student_t_quantile: p outside (0,1)");
    if (p == 0.5) return 0.0;
    const bool upper = p > 0.5;
    const double target = upper ? p : 1.0 - p;
    double lo = 0.0, hi = 1.0;
    while (student_t_cdf(hi, static_cast<double>(df)) < target) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (student_t_cdf(mid, static_cast<double>(df)) < target)
            lo = mid;
        else
            hi = mid;
    }
    const double q = 0.5 * (lo + hi);
    return upper ? q : -q;
}

DiffCi diff_ci_from_summary(double mean, double sd, std::size_t n,
                            const StatsConfig& config) {
    if (n < 2) throw std::invalid_argument("diff CI needs n >= 2");
    const double crit = config.ci_method == CiMethod::normal_z
                            ? config.z
                            : student_t_quantile(0.975, n - 1);
    const double half = crit * sd / std::sqrt(static_cast<double>(n));
    DiffCi ci;
    ci.n = n;
    ci.mean = mean;
    ci.sd = sd;
    ci.lo = mean - half;
    ci.hi = mean + half;
    return ci;
}

DiffCi paired_diff_ci(const std::vector<double>& model_abs_errs,
                      const std::vector<double>& baseline_abs_errs,
                      const StatsConfig& config) {
    if (model_abs_errs.size() != baseline_abs_errs.size())
        throw std::invalid_argument("paired_diff_ci: length mismatch");
    if (model_abs_errs.size() < 2)
        throw std::invalid_argument("paired_diff_ci: need at least 2 pairs");
    std::vector<double> diffs(model_abs_errs.size());
    for (std::size_t i = 0; i < diffs.size(); ++i)
        diffs[i] = model_abs_errs[i] - baseline_abs_errs[i];
    double mean = 0.0;
    for (double d : diffs) mean += d;
    mean /= static_cast<double>(diffs.size());
    const double sd = sample_sd(diffs, mean);
    return diff_ci_from_summary(mean, sd, diffs.size(), config);
}

double sign_test_median(const std::vector<double>& diffs) {
    std::size_t n = 0, positives = 0;
    for (double d : diffs) {
        if (d == 0.0) continue;
        ++n;
        if (d > 0.0) ++positives;
    }
    if (n == 0)
        throw std::invalid_argument("sign_test_median: no nonzero differences");

    // P(Binomial(n, 1/2) <= k), exact binomial tail.
    const double scale = std::ldexp(1.0, -static_cast<int>(n));  // 2^-n
    double coeff = 1.0;  // C(n, 0)
    double p = coeff * scale;
    for (std::size_t i = 0; i < positives; ++i) {
        coeff *= static_cast<double>(n - i) / static_cast<double>(i + 1);
        p += coeff * scale;
    }
    return std::min(p, 1.0);
}

SubgroupCriterion SubgroupCriterion::all() { return {}; }

SubgroupCriterion SubgroupCriterion::for_trimester(int t) {
    if (t < 1 || t > 3) throw std::invalid_argument("trimester must be 1, 2 or 3");
    SubgroupCriterion c;
    c.kind = Kind::trimester;
    c.trimester = t;
    return c;
}

SubgroupCriterion SubgroupCriterion::for_country(cohort::Country country) {
    SubgroupCriterion c;
    c.kind = Kind::country;
    c.country = country;
    return c;
}

SubgroupCriterion SubgroupCriterion::for_device(cohort::Device device) {
    SubgroupCriterion c;
    c.kind = Kind::device;
    c.device = device;
    return c;
}

SubgroupCriterion SubgroupCriterion::for_size(const std::string& group) {
    if (group != "sga" && group != "severe_sga" && group != "lga" &&
        group != "normal" && group != "sga_or_lga")
        throw std::invalid_argument("unknown size group: " + group);
    SubgroupCriterion c;
    c.kind = Kind::size_group;
    c.size_group = group;
    return c;
}

SubgroupCriterion SubgroupCriterion::for_ga_range(int lo, int hi) {
    SubgroupCriterion c;
    c.kind = Kind::ga_range;
    c.ga_lo = lo;
    c.ga_hi = hi;
    return c;
}

bool SubgroupCriterion::matches(const EvalVisit& v) const {
    switch (kind) {
        case Kind::all:
            return true;
        case Kind::trimester:
            return cohort::trimester_of(v.gt_ga) == trimester;
        case Kind::country:
            return v.patient->country == country;
        case Kind::device:
            return v.patient->device == device;
        case Kind::size_group: {
            const auto verdict = v.verdict;
            if (size_group == "sga") return growth::in_sga_group(verdict);
            if (size_group == "severe_sga") return verdict == growth::SizeVerdict::severe_sga;
            if (size_group == "lga") return verdict == growth::SizeVerdict::lga;
            if (size_group == "normal") return verdict == growth::SizeVerdict::normal;
            return growth::in_sga_group(verdict) || verdict == growth::SizeVerdict::lga;
        }
        case Kind::ga_range:
            return v.gt_ga >= ga_lo && v.gt_ga < ga_hi;
    }
    return false;
}

std::vector<EvalVisit> subgroup_filter(const std::vector<EvalVisit>& visits,
                                       const SubgroupCriterion& criterion) {
    std::vector<EvalVisit> out;
    for (const auto& v : visits)
        if (criterion.matches(v)) out.push_back(v);
    return out;
}

std::vector<BinStats> window_bin(const std::vector<PairedErrorRow>& rows,
                                 int bin_width_days) {
    if (bin_width_days <= 0) throw std::invalid_argument("bin width must be > 0");
    std::map<int, std::map<std::string, std::pair<double, std::size_t>>> acc;
    std::map<int, std::size_t> counts;
    for (const auto& row : rows) {
        const int bin = static_cast<int>(row.gt_ga) / bin_width_days;
        counts[bin]++;
        for (const auto& [method, err] : row.errors) {
            auto& cell = acc[bin][method];
            cell.first += std::abs(err);
            cell.second += 1;
        }
    }
    std::vector<BinStats> out;
    for (const auto& [bin, methods] : acc) {
        BinStats stats;
        stats.bin = bin;
        stats.n = counts[bin];
        for (const auto& [method, cell] : methods)
            stats.mae[method] = cell.first / static_cast<double>(cell.second);
        out.push_back(std::move(stats));
    }
    return out;
}

}  // namespace ga::evalstats
