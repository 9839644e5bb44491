#pragma once

// Evaluation protocol: error metrics, paired MAE-difference confidence
// intervals, one-visit-per-patient sampling, subgroup filters, four-week
// binning and the one-sided sign test. All functions are pure.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ga/cohort.hpp"
#include "ga/growth.hpp"

namespace ga::evalstats {

enum class CiMethod { normal_z, student_t };

struct StatsConfig {
    CiMethod ci_method = CiMethod::normal_z;
    double z = 1.96;  // normal_z two-sided 95%
    int bin_width_days = 28;
    std::uint64_t seed = 0;
};

struct ErrorStats {
    std::size_t n = 0;
    double mae = 0.0;
    double sd_abs = 0.0;  // sample sd of |err|, 0 when n = 1
    double me = 0.0;
    double sd = 0.0;  // sample sd of err, 0 when n = 1
};

// ME = mean(err), MAE = mean(|err|); sd uses the n-1 denominator.
ErrorStats mae_me(const std::vector<double>& errors);

struct DiffCi {
    std::size_t n = 0;
    double mean = 0.0;
    double sd = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

// Per-patient d = |model err| - |baseline err|; CI = mean +/- z*sd/sqrt(n)
// (normal_z) or the Student-t quantile variant.
DiffCi paired_diff_ci(const std::vector<double>& model_abs_errs,
                      const std::vector<double>& baseline_abs_errs,
                      const StatsConfig& config);

// The same interval formula applied to published (mean, sd, n) summaries.
DiffCi diff_ci_from_summary(double mean, double sd, std::size_t n,
                            const StatsConfig& config);

// Two-sided central quantile of Student's t (e.g. p = 0.975 for a 95% CI).
double student_t_quantile(double p, std::size_t df);

// One-sided sign test of H0: median >= 0 vs H1: median < 0 after dropping
// exact zeros; p = P(Binomial(n, 0.5) <= k), k = number of positive diffs.
double sign_test_median(const std::vector<double>& diffs);

// --- visit selection and subgroups -------------------------------------------

struct EvalVisit {
    const cohort::Patient* patient = nullptr;
    const cohort::Visit* visit = nullptr;
    int gt_ga = 0;
    growth::SizeVerdict verdict = growth::SizeVerdict::unclassifiable;
};

// For each patient with at least one eligible visit, picks exactly one
// uniformly at random (seeded per patient, so the choice is independent of
// cohort iteration order). Patients without eligible visits are excluded.
template <typename Predicate>
std::vector<EvalVisit> select_one_visit_per_patient(const std::vector<EvalVisit>& visits,
                                                    Predicate eligible,
                                                    std::uint64_t seed);

struct SubgroupCriterion {
    enum class Kind { all, trimester, country, device, size_group, ga_range };
    Kind kind = Kind::all;
    int trimester = 0;                 // 1, 2 or 3
    cohort::Country country = cohort::Country::US;
    cohort::Device device = cohort::Device::GE;
    std::string size_group;            // sga | severe_sga | lga | normal | sga_or_lga
    int ga_lo = 0, ga_hi = 0;          // [lo, hi)

    static SubgroupCriterion all();
    static SubgroupCriterion for_trimester(int t);
    static SubgroupCriterion for_country(cohort::Country c);
    static SubgroupCriterion for_device(cohort::Device d);
    static SubgroupCriterion for_size(const std::string& group);
    static SubgroupCriterion for_ga_range(int lo, int hi);

    bool matches(const EvalVisit& v) const;
};

std::vector<EvalVisit> subgroup_filter(const std::vector<EvalVisit>& visits,
                                       const SubgroupCriterion& criterion);

// --- binning -----------------------------------------------------------------

struct PairedErrorRow {
    std::string patient_id;
    double gt_ga = 0.0;
    std::map<std::string, double> errors;  // method -> signed error (days)
};

struct BinStats {
    int bin = 0;  // floor(gt_ga / bin_width)
    std::size_t n = 0;
    std::map<std::string, double> mae;
};

// bin = floor(gt_ga / bin_width); empty bins omitted.
std::vector<BinStats> window_bin(const std::vector<PairedErrorRow>& rows,
                                 int bin_width_days);

// --- template implementation --------------------------------------------------

template <typename Predicate>
std::vector<EvalVisit> select_one_visit_per_patient(const std::vector<EvalVisit>& visits,
                                                    Predicate eligible,
                                                    std::uint64_t seed) {
    // Group by patient preserving first-seen order.
    std::vector<const cohort::Patient*> order;
    std::map<const cohort::Patient*, std::vector<const EvalVisit*>> groups;
    for (const auto& v : visits) {
        if (!eligible(v)) continue;
        auto& bucket = groups[v.patient];
        if (bucket.empty()) order.push_back(v.patient);
        bucket.push_back(&v);
    }
    std::vector<EvalVisit> selected;
    selected.reserve(order.size());
    for (const cohort::Patient* p : order) {
        const auto& bucket = groups[p];
        rng::Rng gen = rng::Rng(seed).fork("visit_select:" + p->patient_id);
        selected.push_back(*bucket[gen.below(bucket.size())]);
    }
    return selected;
}

}  // namespace ga::evalstats
