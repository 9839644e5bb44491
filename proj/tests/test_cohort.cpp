#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "ga/cohort.hpp"
#include "ga/io.hpp"

using namespace ga::cohort;

namespace {

std::filesystem::path temp_dir() {
    auto dir = std::filesystem::temp_directory_path() / "ga_cohort_test";
    std::filesystem::create_directories(dir);
    return dir;
}

CohortManifest tiny_cohort(std::size_t n) {
    SynthConfig cfg;
    cfg.n_patients = n;
    cfg.rng_seed = 555;
    return synthesize_cohort(cfg).manifest;
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        syy += ys[i] * ys[i];
        sxy += xs[i] * ys[i];
    }
    const double cov = sxy / n - (sx / n) * (sy / n);
    const double vx = sxx / n - (sx / n) * (sx / n);
    const double vy = syy / n - (sy / n) * (sy / n);
    return cov / std::sqrt(vx * vy);
}

}  // namespace

TEST_CASE("ground truth GA = baseline + days") {
    Visit v;
    v.visit_id = "v";
    v.baseline_ga = 70;
    v.days_since_baseline = 0;
    CHECK(ground_truth_ga(v) == 70);
    v.days_since_baseline = 30;
    CHECK(ground_truth_ga(v) == 100);
    v.days_since_baseline = -1;
    CHECK_THROWS_AS(ground_truth_ga(v), std::invalid_argument);
    v.days_since_baseline = 0;
    v.baseline_ga = 0;
    CHECK_THROWS_AS(ground_truth_ga(v), std::invalid_argument);
}

TEST_CASE("ground truth GA is strictly increasing in days") {
    Visit v;
    v.visit_id = "v";
    v.baseline_ga = 50;
    int prev = 0;
    for (int d = 0; d < 100; d += 7) {
        v.days_since_baseline = d;
        const int ga = ground_truth_ga(v);
        CHECK(ga > prev);
        prev = ga;
    }
}

TEST_CASE("split sizes follow the cumulative quota rule") {
    {
        const auto m = tiny_cohort(10);
        const auto split = split_patients(m, {0.6, 0.2, 0.2}, 1);
        const auto counts = split.counts();
        CHECK(counts[0] == 6);
        CHECK(counts[1] == 2);
        CHECK(counts[2] == 2);
    }
    {
        const auto m = tiny_cohort(404);
        const auto split = split_patients(m, {0.6, 0.2, 0.2}, 1);
        const auto counts = split.counts();
        CHECK(counts[0] == 243);
        CHECK(counts[1] == 81);
        CHECK(counts[2] == 80);
    }
}

TEST_CASE("split is deterministic and partitions the cohort") {
    const auto m = tiny_cohort(37);
    const auto a = split_patients(m, {0.6, 0.2, 0.2}, 99);
    const auto b = split_patients(m, {0.6, 0.2, 0.2}, 99);
    CHECK(a.by_patient == b.by_patient);

    CHECK(a.by_patient.size() == 37);  // every patient exactly once
    for (const auto& p : m.patients) CHECK(a.by_patient.count(p.patient_id) == 1);

    const auto c = split_patients(m, {0.6, 0.2, 0.2}, 100);
    CHECK(a.by_patient != c.by_patient);  // seed matters
}

TEST_CASE("split validates its inputs") {
    const auto m = tiny_cohort(5);
    CHECK_THROWS_AS(split_patients(m, {0.5, 0.2, 0.2}, 1), std::invalid_argument);
    CHECK_THROWS_AS(split_patients(CohortManifest{}, {0.6, 0.2, 0.2}, 1),
                    std::invalid_argument);
}

TEST_CASE("split file round-trips") {
    const auto m = tiny_cohort(12);
    const auto split = split_patients(m, {0.6, 0.2, 0.2}, 7);
    const auto path = temp_dir() / "splits.csv";
    save_split(split, path, 7);
    const auto back = load_split(path);
    CHECK(back.by_patient == split.by_patient);
}

TEST_CASE("synthesis is deterministic down to manifest bytes") {
    SynthConfig cfg;
    cfg.n_patients = 25;
    cfg.rng_seed = 321;
    const auto r1 = synthesize_cohort(cfg);
    const auto r2 = synthesize_cohort(cfg);
    CHECK(r1.manifest == r2.manifest);

    const auto p1 = temp_dir() / "m1.jsonl";
    const auto p2 = temp_dir() / "m2.jsonl";
    save_manifest(r1.manifest, p1);
    save_manifest(r2.manifest, p2);
    CHECK(ga::io::read_text_file(p1) == ga::io::read_text_file(p2));

    // Media pixel content is deterministic too.
    const auto media1 = render_media(cfg, r1.media.at(0));
    const auto media2 = render_media(cfg, r2.media.at(0));
    CHECK(media1.frames == media2.frames);
}

TEST_CASE("synthesis rejects bad configs") {
    SynthConfig cfg;
    cfg.n_patients = 0;
    CHECK_THROWS_AS(synthesize_cohort(cfg), std::invalid_argument);
    cfg.n_patients = 10;
    cfg.trimester_visit_weights = {0.5, 0.2, 0.2};
    CHECK_THROWS_AS(synthesize_cohort(cfg), std::invalid_argument);
    cfg = SynthConfig{};
    cfg.n_patients = 10;
    cfg.sga_fraction = 0.7;
    cfg.lga_fraction = 0.7;
    CHECK_THROWS_AS(synthesize_cohort(cfg), std::invalid_argument);
}

TEST_CASE("latent SGA fraction concentrates near the configured value") {
    SynthConfig cfg;
    cfg.n_patients = 5000;
    cfg.rng_seed = 777;
    cfg.sga_fraction = 0.10;
    const auto result = synthesize_cohort(cfg);
    std::size_t sga = 0;
    for (const auto& l : result.latents)
        if (l.size_class == SizeClass::sga) ++sga;
    const double frac = static_cast<double>(sga) / static_cast<double>(result.latents.size());
    CHECK(frac >= 0.08);
    CHECK(frac <= 0.12);
}

TEST_CASE("trimester visit shares follow the configured weights") {
    SynthConfig cfg;
    cfg.n_patients = 3000;
    cfg.rng_seed = 888;
    const auto result = synthesize_cohort(cfg);
    std::size_t counts[4] = {0, 0, 0, 0};
    std::size_t total = 0;
    for (const auto& p : result.manifest.patients)
        for (const auto& v : p.visits) {
            counts[trimester_of(ground_truth_ga(v))]++;
            ++total;
        }
    REQUIRE(total >= 5000);
    CHECK(std::abs(counts[1] / static_cast<double>(total) - 0.093) <= 0.02);
    CHECK(std::abs(counts[2] / static_cast<double>(total) - 0.347) <= 0.02);
    CHECK(std::abs(counts[3] / static_cast<double>(total) - 0.560) <= 0.02);
}

TEST_CASE("rendered ellipse pixel area tracks the latent size factor") {
    SynthConfig cfg;
    cfg.n_patients = 600;
    cfg.rng_seed = 999;
    const auto result = synthesize_cohort(cfg);

    std::vector<double> sizes, areas;
    for (const auto& plan : result.media) {
        if (plan.kind != ga::imaging::MediaKind::image) continue;
        if (plan.rel_path.back() != '1') continue;  // one image per visit
        if (sizes.size() >= 1000) break;
        const auto media = render_media(cfg, plan);
        const auto frame = ga::imaging::resample_to_physical_scale(
            media.frames.at(0), 0.13, 96, 80);
        // Count mid-band pixels (the ellipse sits between the dark
        // background and the bright rod), skipping rod rows and their
        // resampling-blend neighbors so the rod does not leak into the
        // area estimate.
        std::vector<bool> rod_row(frame.height, false);
        for (int y = 0; y < frame.height; ++y)
            for (int x = 0; x < frame.width; ++x)
                if (frame.at(y, x) >= 0.85f) rod_row[y] = true;
        std::size_t count = 0;
        for (int y = 0; y < frame.height; ++y) {
            bool excluded = false;
            for (int d = -2; d <= 2; ++d) {
                const int yy = y + d;
                if (yy >= 0 && yy < frame.height && rod_row[yy]) excluded = true;
            }
            if (excluded) continue;
            for (int x = 0; x < frame.width; ++x) {
                const float v = frame.at(y, x);
                if (v >= 0.3f && v < 0.8f) ++count;
            }
        }
        sizes.push_back(plan.size_factor);
        areas.push_back(static_cast<double>(count));
    }
    REQUIRE(sizes.size() >= 900);
    CHECK(pearson(sizes, areas) > 0.9);
}

TEST_CASE("manifest round-trip is exact including absent fields") {
    const auto m = tiny_cohort(30);
    const auto path = temp_dir() / "roundtrip.jsonl";
    save_manifest(m, path);
    const auto back = load_manifest(path);
    CHECK(back == m);

    const auto path2 = temp_dir() / "roundtrip2.jsonl";
    save_manifest(back, path2);
    CHECK(ga::io::read_text_file(path) == ga::io::read_text_file(path2));
}

TEST_CASE("manifest validation failures") {
    const auto dir = temp_dir();

    {  // duplicate patient_id
        auto m = tiny_cohort(2);
        m.patients[1].patient_id = m.patients[0].patient_id;
        const auto path = dir / "dup.jsonl";
        save_manifest(m, path);
        CHECK_THROWS_WITH_AS(load_manifest(path), doctest::Contains("duplicate"),
                             std::runtime_error);
    }
    {  // malformed record names the line
        const auto path = dir / "bad.jsonl";
        auto m = tiny_cohort(1);
        save_manifest(m, path);
        std::ofstream out(path, std::ios::app);
        out << "{not json}\n";
        out.close();
        CHECK_THROWS_WITH_AS(load_manifest(path), doctest::Contains("line 2"),
                             std::runtime_error);
    }
    {  // unknown enum value
        const auto path = dir / "enum.jsonl";
        std::string line = R"({"patient_id":"p0","country":"Mars","device":"GE","visits":[)";
        line += R"({"visit_id":"v0","days_since_baseline":0,"baseline_ga":100,)";
        line += R"("biometry":{},"media":[]}]})";
        ga::io::write_text_file(path, line + "\n");
        CHECK_THROWS_WITH_AS(load_manifest(path), doctest::Contains("unknown country"),
                             std::runtime_error);
    }
    {  // empty file is an empty cohort
        const auto path = dir / "empty.jsonl";
        ga::io::write_text_file(path, "");
        CHECK(load_manifest(path).patients.empty());
    }
    {  // Sonosite outside Zambia
        auto m = tiny_cohort(3);
        bool mutated = false;
        for (auto& p : m.patients) {
            if (!mutated) {
                p.country = Country::US;
                p.device = Device::Sonosite;
                mutated = true;
            }
        }
        REQUIRE(mutated);
        const auto path = dir / "sonosite.jsonl";
        save_manifest(m, path);
        CHECK_THROWS_WITH_AS(load_manifest(path), doctest::Contains("Sonosite"),
                             std::runtime_error);
    }
    {  // crl outside the first trimester
        auto m = tiny_cohort(1);
        m.patients[0].visits[0].baseline_ga = 150;
        m.patients[0].visits.resize(1);
        m.patients[0].visits[0].days_since_baseline = 0;
        m.patients[0].visits[0].biometry = BiometryMeasurements{};
        m.patients[0].visits[0].biometry.crl = 5.0;
        const auto path = dir / "crl.jsonl";
        save_manifest(m, path);
        CHECK_THROWS_WITH_AS(load_manifest(path), doctest::Contains("crl"),
                             std::runtime_error);
    }
}

TEST_CASE("latents file round-trips") {
    SynthConfig cfg;
    cfg.n_patients = 10;
    cfg.rng_seed = 5;
    const auto result = synthesize_cohort(cfg);
    const auto dir = temp_dir() / "synth_out";
    write_synth_outputs(cfg, result, dir, false);
    CHECK(std::filesystem::exists(dir / "manifest.jsonl"));
    const auto latents = load_latents(dir / "latents.csv");
    REQUIRE(latents.size() == result.latents.size());
    for (std::size_t i = 0; i < latents.size(); ++i) {
        CHECK(latents[i].patient_id == result.latents[i].patient_id);
        CHECK(latents[i].size_factor ==
              doctest::Approx(result.latents[i].size_factor).epsilon(1e-15));
    }
    // The manifest written by synth carries a provenance header and loads.
    const auto back = load_manifest(dir / "manifest.jsonl");
    CHECK(back == result.manifest);
}
