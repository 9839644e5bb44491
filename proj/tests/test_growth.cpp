#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ga/growth.hpp"
#include "ga/rng.hpp"

using namespace ga::growth;
using ga::cohort::CohortManifest;
using ga::cohort::Country;
using ga::cohort::Patient;
using ga::cohort::Visit;

namespace {

Patient patient_with_visit(const std::string& id, Country country, int ga_days,
                           double ac) {
    Patient p;
    p.patient_id = id;
    p.country = country;
    p.device = ga::cohort::Device::GE;
    Visit v;
    v.visit_id = id + "_v0";
    v.baseline_ga = ga_days;
    v.days_since_baseline = 0;
    v.biometry.ac = ac;
    p.visits.push_back(std::move(v));
    return p;
}

}  // namespace

TEST_CASE("percentile: linear interpolation between order statistics") {
    std::vector<double> values;
    for (int i = 1; i <= 10; ++i) values.push_back(i);
    CHECK(percentile(values, 0.10) == doctest::Approx(1.9));
    CHECK(percentile({1, 2, 3}, 0.5) == doctest::Approx(2.0));
    CHECK(percentile(values, 0.0) == doctest::Approx(1.0));
    CHECK(percentile(values, 1.0) == doctest::Approx(10.0));
    CHECK_THROWS_AS(percentile({}, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(percentile({1.0}, 1.5), std::invalid_argument);
}

TEST_CASE("percentile is monotone in q") {
    ga::rng::Rng rng(8);
    std::vector<double> values(57);
    for (auto& v : values) v = rng.uniform(5.0, 40.0);
    double prev = -1e300;
    for (double q = 0.0; q <= 1.0; q += 0.05) {
        const double p = percentile(values, q);
        CHECK(p >= prev - 1e-12);
        prev = p;
    }
}

TEST_CASE("table drops sparse weeks and weeks outside [14,36]") {
    CohortManifest m;
    int next_id = 0;
    auto add_week = [&](int week, int count, double ac_base) {
        for (int i = 0; i < count; ++i)
            m.patients.push_back(patient_with_visit(
                "p" + std::to_string(next_id++), Country::US, week * 7 + 3,
                ac_base + 0.1 * i));
    };
    add_week(20, 14, 15.0);  // kept: exactly the minimum
    add_week(21, 13, 16.0);  // dropped: one below the minimum
    add_week(13, 20, 8.0);   // dropped: outside the week range
    add_week(37, 20, 33.0);  // dropped: outside the week range

    const auto table = build_percentile_table(m);
    CHECK(table.cells.size() == 1);
    REQUIRE(table.find(Country::US, 20) != nullptr);
    CHECK(table.find(Country::US, 21) == nullptr);
    CHECK(table.find(Country::US, 13) == nullptr);
    CHECK(table.find(Country::US, 37) == nullptr);
    const auto* cell = table.find(Country::US, 20);
    CHECK(cell->n == 14);
    CHECK(cell->p3 <= cell->p10);
    CHECK(cell->p10 <= cell->p90);
}

TEST_CASE("degenerate cell: all ACs equal") {
    CohortManifest m;
    for (int i = 0; i < 20; ++i)
        m.patients.push_back(
            patient_with_visit("p" + std::to_string(i), Country::Zambia, 20 * 7, 17.5));
    const auto table = build_percentile_table(m);
    const auto* cell = table.find(Country::Zambia, 20);
    REQUIRE(cell);
    CHECK(cell->p3 == doctest::Approx(17.5));
    CHECK(cell->p10 == doctest::Approx(17.5));
    CHECK(cell->p90 == doctest::Approx(17.5));

    // Exact tie with p10 is normal (strict comparisons).
    CHECK(classify_size(17.5, 20 * 7, Country::Zambia, table) == SizeVerdict::normal);
    CHECK(classify_size(17.4, 20 * 7, Country::Zambia, table) == SizeVerdict::severe_sga);
    CHECK(classify_size(17.6, 20 * 7, Country::Zambia, table) == SizeVerdict::lga);
}

TEST_CASE("no eligible cells is an error") {
    CohortManifest m;
    m.patients.push_back(patient_with_visit("p0", Country::US, 20 * 7, 15.0));
    CHECK_THROWS_AS(build_percentile_table(m), std::runtime_error);
}

TEST_CASE("classification thresholds and unclassifiable weeks") {
    CohortManifest m;
    for (int i = 0; i < 100; ++i)
        m.patients.push_back(patient_with_visit("p" + std::to_string(i), Country::US,
                                                25 * 7, 10.0 + 0.1 * i));
    const auto table = build_percentile_table(m);
    const auto* cell = table.find(Country::US, 25);
    REQUIRE(cell);

    CHECK(classify_size(cell->p10, 25 * 7, Country::US, table) == SizeVerdict::normal);
    CHECK(classify_size(cell->p10 - 1e-9, 25 * 7, Country::US, table) == SizeVerdict::sga);
    const auto severe = classify_size(cell->p3 - 0.1, 25 * 7, Country::US, table);
    CHECK(severe == SizeVerdict::severe_sga);
    CHECK(in_sga_group(severe));
    CHECK(classify_size(cell->p90 + 0.1, 25 * 7, Country::US, table) == SizeVerdict::lga);

    CHECK(classify_size(30.0, 40 * 7, Country::US, table) == SizeVerdict::unclassifiable);
    CHECK(classify_size(15.0, 25 * 7, Country::Zambia, table) ==
          SizeVerdict::unclassifiable);
    CHECK_THROWS_AS(classify_size(0.0, 25 * 7, Country::US, table), std::invalid_argument);
}

TEST_CASE("classification partitions classifiable inputs") {
    CohortManifest m;
    ga::rng::Rng rng(5);
    for (int i = 0; i < 200; ++i)
        m.patients.push_back(patient_with_visit("p" + std::to_string(i), Country::US,
                                                22 * 7 + static_cast<int>(rng.below(7)),
                                                12.0 + 4.0 * rng.next_double()));
    const auto table = build_percentile_table(m);
    int in_sga = 0, in_normal = 0, in_lga = 0;
    for (const auto& p : m.patients) {
        const auto v = classify_size(*p.visits[0].biometry.ac,
                                     ga::cohort::ground_truth_ga(p.visits[0]), Country::US,
                                     table);
        if (v == SizeVerdict::unclassifiable) continue;
        if (in_sga_group(v))
            ++in_sga;
        else if (v == SizeVerdict::normal)
            ++in_normal;
        else
            ++in_lga;
    }
    CHECK(in_sga + in_normal + in_lga == 200);
}

TEST_CASE("synthetic population flags roughly 10% SGA and 10% LGA") {
    ga::cohort::SynthConfig cfg;
    cfg.n_patients = 3000;
    cfg.rng_seed = 424242;
    const auto result = ga::cohort::synthesize_cohort(cfg);
    const auto table = build_percentile_table(result.manifest);

    for (const auto& [key, cell] : table.cells) {
        CHECK(cell.p3 <= cell.p10);
        CHECK(cell.p10 <= cell.p90);
        CHECK(key.second >= 14);
        CHECK(key.second <= 36);
        CHECK(cell.n >= 14);
    }

    std::size_t flagged_sga = 0, flagged_lga = 0, classifiable = 0;
    for (const auto& p : result.manifest.patients) {
        for (const auto& v : p.visits) {
            if (!v.biometry.ac) continue;
            const auto verdict = classify_size(
                *v.biometry.ac, ga::cohort::ground_truth_ga(v), p.country, table);
            if (verdict == SizeVerdict::unclassifiable) continue;
            ++classifiable;
            if (in_sga_group(verdict)) ++flagged_sga;
            if (verdict == SizeVerdict::lga) ++flagged_lga;
        }
    }
    REQUIRE(classifiable > 1000);
    const double sga_frac = static_cast<double>(flagged_sga) / classifiable;
    const double lga_frac = static_cast<double>(flagged_lga) / classifiable;
    CHECK(sga_frac >= 0.08);
    CHECK(sga_frac <= 0.12);
    CHECK(lga_frac >= 0.08);
    CHECK(lga_frac <= 0.12);
}
