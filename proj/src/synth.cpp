// Synthetic cohort generator. Stands in for a clinical dataset: patients,
// visits, biometry, baseline-formula GA estimates with a size-dependent
// error model, and rendered PGM media.
//
// The rendered scene encodes the two latent quantities separately:
//   - an ellipse whose physical size tracks the patient's latent size
//     factor (the abdomen-like, size-confounded cue), and
//   - a rod whose physical length grows with ln(GA) and is independent of
//     the size factor (the cue a pixel model can date the pregnancy from).
// The recorded baseline estimates are biased negative for latent-SGA
// fetuses, so size-based dating degrades on SGA exactly where a direct
// pixel model should not.

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "ga/cohort.hpp"
#include "ga/io.hpp"
#include "ga/rng.hpp"

namespace ga::cohort {

namespace {

struct FormulaErrorModel {
    const char* name;
    double bias_scale_normal;  // multiplies baseline_bias_normal, etc.
    double bias_scale_sga;
    double bias_scale_lga;
    double bias_shift;  // added to the normal-class bias
    double sd_scale;
    bool first_trimester;  // applicable to first-trimester visits
};

// Three baseline estimators with the flavor of the clinical comparison:
// one close alternative that is slightly better, one clearly worse with a
// positive overall bias, and the primary one driven directly by config.
constexpr FormulaErrorModel kFormulaModels[] = {
    {"hadlock", 1.0, 1.0, 1.0, 0.0, 1.0, true},
    {"nichd", 0.9, 0.88, 0.8, 0.3, 0.95, false},
    {"intergrowth21", 1.0, 0.63, 2.4, 4.5, 1.2, false},
};

double clamp_positive(double v, double floor_v) { return v < floor_v ? floor_v : v; }

BiometryMeasurements draw_biometry(double ga_days, double size_factor,
                                   const SynthConfig& cfg, rng::Rng& rng) {
    const double weeks = ga_days / 7.0;
    const double rel_sd = cfg.biometry_noise_base + cfg.biometry_noise_per_day * ga_days;
    auto jitter = [&]() { return 1.0 + rel_sd * rng.normal(); };

    BiometryMeasurements b;
    if (ga_days < kTrimester2StartDays) {
        b.crl = clamp_positive((0.9 * weeks - 4.9) * size_factor * jitter(), 0.1);
        return b;
    }
    b.bpd = clamp_positive((0.24 * weeks - 0.95) * size_factor * jitter(), 0.1);
    b.hc = clamp_positive((0.90 * weeks - 3.00) * size_factor * jitter(), 0.1);
    b.ac = clamp_positive((0.95 * weeks - 4.50) * size_factor * jitter(), 0.1);
    b.fl = clamp_positive((0.21 * weeks - 1.25) * size_factor * jitter(), 0.1);
    return b;
}

int draw_visit_ga(const SynthConfig& cfg, rng::Rng& rng) {
    const double u = rng.next_double();
    const auto& w = cfg.trimester_visit_weights;
    int lo, hi;
    if (u < w[0]) {
        lo = kMinGaDays;
        hi = kTrimester2StartDays - 1;
    } else if (u < w[0] + w[1]) {
        lo = kTrimester2StartDays;
        hi = kTrimester3StartDays - 1;
    } else {
        lo = kTrimester3StartDays;
        hi = 287;  // ~41 weeks; keeps synthetic GA well inside the valid range
    }
    return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

}  // namespace

SynthResult synthesize_cohort(const SynthConfig& cfg) {
    if (cfg.n_patients == 0)
        throw std::invalid_argument("synthesize_cohort: n_patients = 0 (empty cohort)");
    const auto& w = cfg.trimester_visit_weights;
    if (std::abs(w[0] + w[1] + w[2] - 1.0) > 1e-9)
        throw std::invalid_argument("trimester_visit_weights must sum to 1");
    if (cfg.sga_fraction < 0 || cfg.sga_fraction > 1 || cfg.lga_fraction < 0 ||
        cfg.lga_fraction > 1 || cfg.sga_fraction + cfg.lga_fraction > 1)
        throw std::invalid_argument("sga/lga fractions must be probabilities");

    const rng::Rng master(cfg.rng_seed);
    SynthResult result;
    result.manifest.patients.reserve(cfg.n_patients);

    for (std::size_t i = 0; i < cfg.n_patients; ++i) {
        rng::Rng rng = master.fork("patient", i);
        char pid_buf[16];
        std::snprintf(pid_buf, sizeof(pid_buf), "p%05zu", i);
        const std::string pid = pid_buf;

        Patient patient;
        patient.patient_id = pid;
        patient.country = rng.next_double() < cfg.us_fraction ? Country::US : Country::Zambia;
        patient.device = Device::GE;
        if (patient.country == Country::Zambia &&
            rng.next_double() < cfg.sonosite_fraction_zambia)
            patient.device = Device::Sonosite;

        PatientLatent latent;
        latent.patient_id = pid;
        const double class_u = rng.next_double();
        if (class_u < cfg.sga_fraction) {
            latent.size_class = SizeClass::sga;
            latent.size_factor = rng.normal(0.85, 0.03);
        } else if (class_u < cfg.sga_fraction + cfg.lga_fraction) {
            latent.size_class = SizeClass::lga;
            latent.size_factor = rng.normal(1.15, 0.03);
        } else {
            latent.size_class = SizeClass::normal;
            latent.size_factor = rng.normal(1.0, 0.045);
        }
        latent.size_factor = std::min(1.35, std::max(0.70, latent.size_factor));

        int n_visits = 1;
        if (rng.next_double() < cfg.extra_visit_prob) ++n_visits;
        if (rng.next_double() < cfg.extra_visit_prob * 0.35) ++n_visits;

        std::vector<int> gas;
        for (int v = 0; v < n_visits; ++v) {
            for (int attempt = 0; attempt < 64; ++attempt) {
                const int ga = draw_visit_ga(cfg, rng);
                bool clear = true;
                for (int g : gas)
                    if (std::abs(g - ga) < 7) clear = false;
                if (clear) {
                    gas.push_back(ga);
                    break;
                }
            }
        }
        std::sort(gas.begin(), gas.end());

        const int baseline_ga = gas.front();
        for (std::size_t v = 0; v < gas.size(); ++v) {
            Visit visit;
            char vid_buf[24];
            std::snprintf(vid_buf, sizeof(vid_buf), "v%02u", static_cast<unsigned>(v));
            visit.visit_id = pid + "_" + vid_buf;
            visit.baseline_ga = baseline_ga;
            visit.days_since_baseline = gas[v] - baseline_ga;
            const int ga = gas[v];
            visit.biometry = draw_biometry(ga, latent.size_factor, cfg, rng);

            const double class_bias =
                latent.size_class == SizeClass::sga   ? cfg.baseline_bias_sga
                : latent.size_class == SizeClass::lga ? cfg.baseline_bias_lga
                                                      : cfg.baseline_bias_normal;
            const double sd = cfg.baseline_sd_base + cfg.baseline_sd_per_day * ga;
            for (const auto& fm : kFormulaModels) {
                if (!fm.first_trimester && ga < kTrimester2StartDays) continue;
                const double scale = latent.size_class == SizeClass::sga   ? fm.bias_scale_sga
                                     : latent.size_class == SizeClass::lga ? fm.bias_scale_lga
                                                                           : fm.bias_scale_normal;
                const double bias = class_bias * scale +
                                    (latent.size_class == SizeClass::normal ? fm.bias_shift : 0.0);
                visit.formula_ga_estimates[fm.name] = ga + bias + rng.normal(0.0, sd * fm.sd_scale);
            }

            const int media_count = 1 + cfg.images_per_visit;
            for (int m = 0; m < media_count; ++m) {
                MediaRef ref;
                ref.kind = m == 0 ? imaging::MediaKind::video : imaging::MediaKind::image;
                char mid_buf[16];
                std::snprintf(mid_buf, sizeof(mid_buf), "m%d", m);
                ref.path = "media/" + pid + "/" + visit.visit_id + "/" + mid_buf;

                MediaPlan plan;
                plan.rel_path = ref.path;
                plan.kind = ref.kind;
                std::uint64_t sm = cfg.rng_seed ^ rng::hash_label(ref.path);
                plan.seed = rng::splitmix64(sm);
                plan.ga_days = ga;
                plan.size_factor = latent.size_factor;
                plan.frame_count = ref.kind == imaging::MediaKind::video ? cfg.video_frame_count : 1;
                plan.pixel_spacing =
                    cfg.media_spacing_lo +
                    (cfg.media_spacing_hi - cfg.media_spacing_lo) * rng.next_double();
                visit.media.push_back(std::move(ref));
                result.media.push_back(std::move(plan));
            }
            patient.visits.push_back(std::move(visit));
        }
        result.manifest.patients.push_back(std::move(patient));
        result.latents.push_back(std::move(latent));
    }
    validate(result.manifest);
    return result;
}

imaging::MediaDir render_media(const SynthConfig& cfg, const MediaPlan& plan) {
    rng::Rng rng(plan.seed);
    const int w = cfg.media_frame_w, h = cfg.media_frame_h;
    const double sp = plan.pixel_spacing;
    const double s = plan.size_factor;

    const double speckle = rng.uniform(0.015, 0.06);

    // Scene, in physical cm relative to the frame center:
    //  - mid-gray ellipse on the left whose axes track the latent size
    //    factor (the size-confounded, abdomen-like cue),
    //  - dark ellipse on the right whose area grows with GA and is
    //    independent of the size factor (the cue that dates the pregnancy),
    //  - bright horizontal rod below whose length grows with ln(GA).
    const double ax = 1.5 * s * (1.0 + 0.02 * rng.normal());
    const double bx = 1.1 * s * (1.0 + 0.02 * rng.normal());
    const double ex = -1.8 + rng.uniform(-0.3, 0.3);
    const double ey = -1.5 + rng.uniform(-0.2, 0.2);

    const double growth = (plan.ga_days - 42.0) / 252.0;  // 0 at 6w, 1 at 42w
    const double gax = (0.5 + 1.8 * growth) * (1.0 + 0.01 * rng.normal());
    const double gbx = (0.4 + 1.4 * growth) * (1.0 + 0.01 * rng.normal());
    const double gex = 1.8 + rng.uniform(-0.3, 0.3);
    const double gey = -1.3 + rng.uniform(-0.2, 0.2);

    const double rod_len = 2.2 * (std::log(plan.ga_days) - 3.4) * (1.0 + 0.015 * rng.normal());
    const double rod_w = 0.8;
    const double rx = rng.uniform(-0.3, 0.3);
    const double ry = 2.5 + rng.uniform(-0.15, 0.15);

    imaging::MediaDir media;
    media.kind = plan.kind;
    media.pixel_spacing = sp;
    media.frames.reserve(static_cast<std::size_t>(plan.frame_count));

    const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
    double drift_x = 0.0, drift_y = 0.0;
    for (int t = 0; t < plan.frame_count; ++t) {
        if (t > 0) {
            drift_x += rng.normal(0.0, 0.03);
            drift_y += rng.normal(0.0, 0.03);
        }
        imaging::Frame f = imaging::Frame::filled(w, h, sp, 0.0f);
        for (int y = 0; y < h; ++y) {
            const double py = (y - cy) * sp - drift_y;
            for (int x = 0; x < w; ++x) {
                const double px = (x - cx) * sp - drift_x;
                double v = 0.06;
                const double dex = (px - ex) / ax, dey = (py - ey) / bx;
                if (dex * dex + dey * dey <= 1.0) v = 0.50;
                const double dgx = (px - gex) / gax, dgy = (py - gey) / gbx;
                if (dgx * dgx + dgy * dgy <= 1.0) v = 0.22;
                if (std::abs(px - rx) <= rod_len / 2.0 && std::abs(py - ry) <= rod_w / 2.0)
                    v = 0.95;
                // Multiplicative speckle, uniform with matched variance.
                v *= 1.0 + speckle * 1.7320508075688772 * (2.0 * rng.next_double() - 1.0);
                f.at(y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
        media.frames.push_back(std::move(f));
    }
    return media;
}

void write_synth_outputs(const SynthConfig& cfg, const SynthResult& result,
                         const std::filesystem::path& out_dir, bool with_media) {
    std::filesystem::create_directories(out_dir);
    save_manifest(result.manifest, out_dir / "manifest.jsonl",
                  io::header_line("synth", cfg.rng_seed, {}));

    std::ostringstream lat;
    lat << io::header_line("synth", cfg.rng_seed, {}) << "\n";
    lat << "patient_id,size_class,size_factor\n";
    for (const auto& l : result.latents)
        lat << l.patient_id << "," << to_string(l.size_class) << ","
            << io::fmt_g(l.size_factor, 17) << "\n";
    io::write_text_file(out_dir / "latents.csv", lat.str());

    if (!with_media) return;
    const auto n = static_cast<std::int64_t>(result.media.size());
#pragma omp parallel for schedule(dynamic, 4)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto& plan = result.media[static_cast<std::size_t>(i)];
        imaging::MediaDir media = render_media(cfg, plan);
        imaging::write_media_dir(out_dir / plan.rel_path, media);
    }
}

}  // namespace ga::cohort
