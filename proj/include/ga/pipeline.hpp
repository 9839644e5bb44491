#pragma once

// End-to-end pipeline steps shared by the CLI and the acceptance suite:
// preprocessing media to a preset's physical scale, assembling training
// datasets, per-case prediction with inverse-variance aggregation, and the
// evaluation run that writes the report suite.

#include <filesystem>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "ga/cohort.hpp"
#include "ga/estimator.hpp"
#include "ga/imaging.hpp"
#include "ga/io.hpp"

namespace ga::pipeline {

// Preprocessing targets. "paper" uses the published input scales; "desk"
// is small enough to train the reference networks in minutes.
imaging::ClipConfig get_clip_preset(const std::string& name);

struct TrainPreset {
    std::string name;
    estimator::Modality modality = estimator::Modality::image;
    std::string clip_preset;  // matching preprocess preset
    imaging::ClipConfig clip;
    estimator::ImageNetConfig image_net;
    estimator::VideoNetConfig video_net;
    estimator::TrainConfig train;
};

// desk-image, desk-video, paper-image, paper-video.
TrainPreset get_train_preset(const std::string& name);

std::string describe_train_config(const TrainPreset& preset);

// Resamples every media item to the preset's modality target (after the
// temporal subsampling step for videos) and writes the same tree under
// out_root. Parallel over media items; output is thread-count invariant.
void preprocess_media(const cohort::CohortManifest& manifest,
                      const std::filesystem::path& media_root,
                      const std::filesystem::path& out_root,
                      const imaging::ClipConfig& clip_cfg);

// Builds the training dataset from preprocessed media. Image modality: one
// item per image media. Video modality: one item per extracted clip.
std::vector<estimator::TrainItem> load_train_items(
    const cohort::CohortManifest& manifest, const std::filesystem::path& media_root,
    estimator::Modality modality, const imaging::ClipConfig& clip_cfg,
    const std::set<std::string>& patients);

struct PredictionRow {
    std::string patient_id;
    std::string visit_id;
    std::string model_id;
    double mean_days = 0.0;
    double variance = 0.0;
    std::size_t n_inputs = 0;
};

// Per-visit case estimates for every model (inverse-variance over that
// model's clips/images), plus the "video" pair average when two or more
// video models are given and the "ensemble" average over all models.
std::vector<PredictionRow> predict_cohort(
    const cohort::CohortManifest& manifest, const std::filesystem::path& media_root,
    const std::vector<const estimator::Predictor*>& models,
    const imaging::ClipConfig& clip_cfg, const std::set<std::string>& patients);

void save_predictions(const std::filesystem::path& path,
                      const std::vector<PredictionRow>& rows, std::uint64_t seed,
                      const std::vector<io::InputDigest>& inputs);
std::vector<PredictionRow> load_predictions(const std::filesystem::path& path);

struct EvaluateArgs {
    std::filesystem::path manifest_path;
    std::filesystem::path predictions_path;
    std::filesystem::path out_dir;
    std::string baseline = "hadlock";
    std::uint64_t seed = 0;
    std::filesystem::path splits_path;  // optional
    std::string split_name = "test";    // used when splits_path is set
    std::filesystem::path formula_config;  // optional engine fallback
};

// Runs the full evaluation: percentile table over the whole cohort,
// analysis restricted to the chosen split, report suite written to out_dir.
std::vector<std::filesystem::path> evaluate_run(const EvaluateArgs& args);

std::set<std::string> patients_in_split(const cohort::SplitAssignment& split,
                                        cohort::Split which);

}  // namespace ga::pipeline
