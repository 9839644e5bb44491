#pragma once

// Cohort data model, JSONL manifest ingestion, patient-level dataset
// splitting, ground-truth GA arithmetic, and a seeded synthetic cohort
// generator that stands in for a clinical dataset.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ga/imaging.hpp"

namespace ga::cohort {

inline constexpr int kMinGaDays = 42;
inline constexpr int kMaxGaDays = 315;
// Trimester boundaries in days (standard obstetric convention).
inline constexpr int kTrimester2StartDays = 98;
inline constexpr int kTrimester3StartDays = 196;

enum class Country { US, Zambia };
enum class Device { GE, Sonosite };

std::string to_string(Country c);
std::string to_string(Device d);
Country country_from_string(const std::string& s);
Device device_from_string(const std::string& s);

struct BiometryMeasurements {
    std::optional<double> bpd, hc, ac, fl, crl;  // cm, all > 0 when present

    std::map<std::string, double> as_map() const;
    bool operator==(const BiometryMeasurements&) const = default;
};

struct MediaRef {
    imaging::MediaKind kind = imaging::MediaKind::image;
    std::string path;  // relative to the manifest's media root
    bool operator==(const MediaRef&) const = default;
};

struct Visit {
    std::string visit_id;
    int days_since_baseline = 0;
    int baseline_ga = 0;  // GA in days at the patient's initial exam
    BiometryMeasurements biometry;
    std::vector<MediaRef> media;
    std::map<std::string, double> formula_ga_estimates;  // formula name -> days
    bool operator==(const Visit&) const = default;
};

struct Patient {
    std::string patient_id;
    Country country = Country::US;
    Device device = Device::GE;
    std::vector<Visit> visits;  // ordered by days_since_baseline ascending
    bool operator==(const Patient&) const = default;
};

struct CohortManifest {
    std::vector<Patient> patients;
    bool operator==(const CohortManifest&) const = default;

    std::size_t visit_count() const;
};

// Ground truth GA: GA at the initial exam plus days since the baseline visit.
int ground_truth_ga(const Visit& visit);

int trimester_of(int ga_days);  // 1, 2 or 3

// Throws on any violated manifest invariant (duplicate ids, bad enums,
// unordered visits, GA out of range, Sonosite outside Zambia, ...).
void validate(const CohortManifest& manifest);

// --- splitting ---------------------------------------------------------------

enum class Split { train, tune, test };
std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct SplitAssignment {
    std::map<std::string, Split> by_patient;
    std::array<std::size_t, 3> counts() const;  // train, tune, test
};

// Deterministic under (cohort, seed): patients are shuffled with the seeded
// generator and assigned by cumulative quota, bucket b taking indices
// [ceil(n*C_{b-1}), ceil(n*C_b)) — fractional boundaries round up, which
// sends remainder patients to train.
SplitAssignment split_patients(const CohortManifest& cohort,
                               std::array<double, 3> ratios, std::uint64_t seed);

void save_split(const SplitAssignment& split, const std::filesystem::path& path,
                std::uint64_t seed);
SplitAssignment load_split(const std::filesystem::path& path);

// --- manifest files ----------------------------------------------------------

// One JSON object per line, one patient per record. save/load round-trips
// exactly, including absent optional biometry fields. An optional leading
// '#' provenance line is written when header is non-empty and skipped on
// load.
void save_manifest(const CohortManifest& cohort, const std::filesystem::path& path,
                   const std::string& header = "");
CohortManifest load_manifest(const std::filesystem::path& path);

// --- synthetic cohort --------------------------------------------------------

struct SynthConfig {
    std::size_t n_patients = 400;
    std::array<double, 3> trimester_visit_weights{0.093, 0.347, 0.560};
    double sga_fraction = 0.10;
    double lga_fraction = 0.10;
    double extra_visit_prob = 0.7;
    double us_fraction = 0.45;
    double sonosite_fraction_zambia = 0.7;

    // Biometry noise model: relative measurement jitter grows with GA.
    double biometry_noise_base = 0.012;
    double biometry_noise_per_day = 5e-5;

    // Baseline-formula error model: sd grows with GA, bias depends on the
    // latent size class (negative for SGA, mildly positive for LGA).
    double baseline_sd_base = 1.5;
    double baseline_sd_per_day = 0.015;
    double baseline_bias_normal = -0.5;
    double baseline_bias_sga = -8.0;
    double baseline_bias_lga = 2.5;

    // Rendered media geometry.
    int media_frame_w = 80;
    int media_frame_h = 64;
    double media_spacing_lo = 0.12;
    double media_spacing_hi = 0.15;
    int video_frame_count = 64;
    int images_per_visit = 2;

    std::uint64_t rng_seed = 1;
};

enum class SizeClass { normal, sga, lga };
std::string to_string(SizeClass c);

struct PatientLatent {
    std::string patient_id;
    SizeClass size_class = SizeClass::normal;
    double size_factor = 1.0;
};

struct MediaPlan {
    std::string rel_path;
    imaging::MediaKind kind = imaging::MediaKind::image;
    std::uint64_t seed = 0;
    double ga_days = 0.0;
    double size_factor = 1.0;
    int frame_count = 1;
    double pixel_spacing = 0.0;
};

struct SynthResult {
    CohortManifest manifest;
    std::vector<PatientLatent> latents;
    std::vector<MediaPlan> media;
};

// Deterministic in config (including the seed). Media pixel content is
// produced separately by render_media from the per-item plan seeds.
SynthResult synthesize_cohort(const SynthConfig& config);

imaging::MediaDir render_media(const SynthConfig& config, const MediaPlan& plan);

// Writes manifest.jsonl, latents.csv and (optionally) the media tree.
void write_synth_outputs(const SynthConfig& config, const SynthResult& result,
                         const std::filesystem::path& out_dir, bool with_media);

std::vector<PatientLatent> load_latents(const std::filesystem::path& path);

}  // namespace ga::cohort
