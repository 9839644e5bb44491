#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ga/evalstats.hpp"

using namespace ga::evalstats;

namespace {

ga::cohort::CohortManifest three_visit_cohort() {
    ga::cohort::CohortManifest m;
    ga::cohort::Patient p;
    p.patient_id = "pA";
    for (int i = 0; i < 3; ++i) {
        ga::cohort::Visit v;
        v.visit_id = "pA_v" + std::to_string(i);
        v.baseline_ga = 100;
        v.days_since_baseline = i * 30;
        p.visits.push_back(std::move(v));
    }
    m.patients.push_back(std::move(p));
    return m;
}

std::vector<EvalVisit> eval_visits(const ga::cohort::CohortManifest& m) {
    std::vector<EvalVisit> out;
    for (const auto& p : m.patients)
        for (const auto& v : p.visits)
            out.push_back({&p, &v, ga::cohort::ground_truth_ga(v),
                           ga::growth::SizeVerdict::unclassifiable});
    return out;
}

}  // namespace

TEST_CASE("mae_me on the worked examples") {
    auto s = mae_me({2.0, -2.0});
    CHECK(s.mae == doctest::Approx(2.0));
    CHECK(s.me == doctest::Approx(0.0));

    s = mae_me({3.0, -1.0, 4.0});
    CHECK(s.mae == doctest::Approx(8.0 / 3.0).epsilon(1e-12));
    CHECK(s.me == doctest::Approx(2.0));

    s = mae_me({5.0});
    CHECK(s.n == 1);
    CHECK(s.mae == doctest::Approx(5.0));
    CHECK(s.me == doctest::Approx(5.0));
    CHECK(s.sd == 0.0);  // undefined at n=1, reported as 0 with the n flag
    CHECK(s.sd_abs == 0.0);

    CHECK_THROWS_AS(mae_me({}), std::invalid_argument);
}

TEST_CASE("paired CI reproduces the published summary intervals") {
    StatsConfig cfg;  // normal_z, z = 1.96
    struct Row {
        double mean, sd;
        std::size_t n;
        double lo, hi;  // printed interval after rounding to 1 decimal
    };
    const Row rows[] = {
        {-1.51, 3.96, 404, -1.9, -1.1},
        {-1.48, 4.05, 404, -1.9, -1.1},
        {-1.13, 4.18, 404, -1.5, -0.7},
        {-1.27, 3.70, 379, -1.6, -0.9},
    };
    for (const auto& row : rows) {
        const auto ci = diff_ci_from_summary(row.mean, row.sd, row.n, cfg);
        CHECK(std::round(ci.lo * 10) / 10 == doctest::Approx(row.lo));
        CHECK(std::round(ci.hi * 10) / 10 == doctest::Approx(row.hi));
        CHECK(std::abs(ci.lo - row.lo) <= 0.05);
        CHECK(std::abs(ci.hi - row.hi) <= 0.05);
    }
}

TEST_CASE("paired CI of identical inputs is [0,0]") {
    const std::vector<double> a = {1.0, 2.5, 3.0, 0.5};
    const auto ci = paired_diff_ci(a, a, {});
    CHECK(ci.mean == 0.0);
    CHECK(ci.lo == 0.0);
    CHECK(ci.hi == 0.0);
}

TEST_CASE("paired CI errors") {
    CHECK_THROWS_AS(paired_diff_ci({1.0, 2.0}, {1.0}, {}), std::invalid_argument);
    CHECK_THROWS_AS(paired_diff_ci({1.0}, {1.0}, {}), std::invalid_argument);
}

TEST_CASE("CI width scales as 1/sqrt(n)") {
    StatsConfig cfg;
    const double sd = 4.0;
    const double w100 = diff_ci_from_summary(0.0, sd, 100, cfg).hi;
    const double w400 = diff_ci_from_summary(0.0, sd, 400, cfg).hi;
    const double w1600 = diff_ci_from_summary(0.0, sd, 1600, cfg).hi;
    CHECK(w100 / w400 == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(w400 / w1600 == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("diff mean equals the MAE difference over the same pairs") {
    ga::rng::Rng rng(64);
    std::vector<double> model(100), base(100);
    for (int i = 0; i < 100; ++i) {
        model[i] = std::abs(rng.normal(0.0, 4.0));
        base[i] = std::abs(rng.normal(-1.0, 5.0));
    }
    const auto ci = paired_diff_ci(model, base, {});
    std::vector<double> m_err = model, b_err = base;
    CHECK(ci.mean ==
          doctest::Approx(mae_me(m_err).mae - mae_me(b_err).mae).epsilon(1e-12));
}

TEST_CASE("student t quantile sanity") {
    CHECK(student_t_quantile(0.975, 1) == doctest::Approx(12.7062).epsilon(1e-3));
    CHECK(student_t_quantile(0.975, 10) == doctest::Approx(2.2281).epsilon(1e-3));
    CHECK(student_t_quantile(0.975, 100000) == doctest::Approx(1.96).epsilon(1e-3));
    CHECK(student_t_quantile(0.5, 7) == doctest::Approx(0.0));
    CHECK(student_t_quantile(0.025, 10) == doctest::Approx(-2.2281).epsilon(1e-3));
}

TEST_CASE("student t CI is wider than normal z at small n") {
    StatsConfig z_cfg;
    StatsConfig t_cfg;
    t_cfg.ci_method = CiMethod::student_t;
    const auto z = diff_ci_from_summary(-4.45, 6.96, 26, z_cfg);
    const auto t = diff_ci_from_summary(-4.45, 6.96, 26, t_cfg);
    CHECK(t.lo < z.lo);
    CHECK(t.hi > z.hi);
}

TEST_CASE("sign test worked examples") {
    // Exact dyadic values; compare without tolerance.
    CHECK(sign_test_median({-1, -2, -3, -0.5, -4}) == 0.03125);
    CHECK(sign_test_median({-1.0, 1.0}) == 0.75);
    CHECK_THROWS_AS(sign_test_median({0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("sign test matches exhaustive enumeration for n <= 12") {
    for (int n = 1; n <= 12; ++n) {
        // Enumerate all 2^n sign patterns to get the exact tail probability.
        std::vector<int> tail_counts(n + 1, 0);
        for (int mask = 0; mask < (1 << n); ++mask)
            tail_counts[__builtin_popcount(mask)]++;
        for (int k = 0; k <= n; ++k) {
            long long tail = 0;
            for (int i = 0; i <= k; ++i) tail += tail_counts[i];
            const double expected =
                static_cast<double>(tail) / static_cast<double>(1LL << n);

            std::vector<double> diffs;
            for (int i = 0; i < k; ++i) diffs.push_back(1.0);
            for (int i = k; i < n; ++i) diffs.push_back(-1.0);
            diffs.push_back(0.0);  // zeros are dropped
            CHECK(sign_test_median(diffs) == doctest::Approx(expected).epsilon(1e-12));
        }
    }
}

TEST_CASE("one-visit selection: forced choice and determinism") {
    const auto m = three_visit_cohort();
    const auto visits = eval_visits(m);

    auto only_first = [](const EvalVisit& v) { return v.visit->days_since_baseline == 0; };
    const auto forced = select_one_visit_per_patient(visits, only_first, 7);
    REQUIRE(forced.size() == 1);
    CHECK(forced[0].visit->visit_id == "pA_v0");

    auto all = [](const EvalVisit&) { return true; };
    const auto s1 = select_one_visit_per_patient(visits, all, 7);
    const auto s2 = select_one_visit_per_patient(visits, all, 7);
    REQUIRE(s1.size() == 1);
    CHECK(s1[0].visit->visit_id == s2[0].visit->visit_id);

    auto none = [](const EvalVisit&) { return false; };
    CHECK(select_one_visit_per_patient(visits, none, 7).empty());
}

TEST_CASE("one-visit selection is uniform across seeds") {
    const auto m = three_visit_cohort();
    const auto visits = eval_visits(m);
    auto all = [](const EvalVisit&) { return true; };
    int counts[3] = {0, 0, 0};
    const int trials = 10000;
    for (int seed = 0; seed < trials; ++seed) {
        const auto sel = select_one_visit_per_patient(visits, all, seed);
        counts[sel[0].visit->days_since_baseline / 30]++;
    }
    for (int c : counts) {
        const double freq = static_cast<double>(c) / trials;
        CHECK(std::abs(freq - 1.0 / 3.0) <= 0.02);
    }
}

TEST_CASE("trimester boundaries sit at 98 and 196 days") {
    ga::cohort::CohortManifest m;
    ga::cohort::Patient p;
    p.patient_id = "pT";
    const int gas[] = {97, 98, 195, 196};
    for (int i = 0; i < 4; ++i) {
        ga::cohort::Visit v;
        v.visit_id = "v" + std::to_string(i);
        v.baseline_ga = 97;
        v.days_since_baseline = gas[i] - 97;
        p.visits.push_back(std::move(v));
    }
    m.patients.push_back(std::move(p));
    const auto visits = eval_visits(m);

    CHECK(subgroup_filter(visits, SubgroupCriterion::for_trimester(1)).size() == 1);
    CHECK(subgroup_filter(visits, SubgroupCriterion::for_trimester(2)).size() == 2);
    CHECK(subgroup_filter(visits, SubgroupCriterion::for_trimester(3)).size() == 1);
    CHECK_THROWS_AS(SubgroupCriterion::for_trimester(4), std::invalid_argument);
}

TEST_CASE("size-group filter delegates to classification verdicts") {
    ga::cohort::CohortManifest m = three_visit_cohort();
    auto visits = eval_visits(m);
    visits[0].verdict = ga::growth::SizeVerdict::sga;
    visits[1].verdict = ga::growth::SizeVerdict::severe_sga;
    visits[2].verdict = ga::growth::SizeVerdict::lga;

    CHECK(subgroup_filter(visits, SubgroupCriterion::for_size("sga")).size() == 2);
    CHECK(subgroup_filter(visits, SubgroupCriterion::for_size("severe_sga")).size() == 1);
    CHECK(subgroup_filter(visits, SubgroupCriterion::for_size("lga")).size() == 1);
    CHECK(subgroup_filter(visits, SubgroupCriterion::for_size("normal")).empty());
    CHECK(subgroup_filter(visits, SubgroupCriterion::for_size("sga_or_lga")).size() == 3);
    CHECK_THROWS_AS(SubgroupCriterion::for_size("tiny"), std::invalid_argument);
}

TEST_CASE("window binning") {
    std::vector<PairedErrorRow> rows;
    rows.push_back({"p1", 100.0, {{"m", 2.0}, {"b", -3.0}}});
    rows.push_back({"p2", 0.0, {{"m", -1.0}, {"b", 1.0}}});
    const auto bins = window_bin(rows, 28);
    REQUIRE(bins.size() == 2);
    CHECK(bins[0].bin == 0);   // floor(0/28)
    CHECK(bins[1].bin == 3);   // floor(100/28)
    CHECK(bins[1].mae.at("m") == doctest::Approx(2.0));
    CHECK(bins[1].mae.at("b") == doctest::Approx(3.0));

    // All rows in one bin: per-method MAE equals mae_me over the same rows.
    std::vector<PairedErrorRow> one_bin;
    std::vector<double> errs = {3.0, -1.0, 4.0};
    for (std::size_t i = 0; i < errs.size(); ++i)
        one_bin.push_back({"p", 10.0 + i, {{"m", errs[i]}}});
    const auto single = window_bin(one_bin, 28);
    REQUIRE(single.size() == 1);
    CHECK(single[0].mae.at("m") == doctest::Approx(mae_me(errs).mae));

    CHECK_THROWS_AS(window_bin(rows, 0), std::invalid_argument);
}
