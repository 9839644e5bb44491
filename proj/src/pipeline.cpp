#include "ga/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "ga/aggregation.hpp"
#include "ga/formulae.hpp"
#include "ga/growth.hpp"
#include "ga/report.hpp"

namespace ga::pipeline {

namespace fs = std::filesystem;

imaging::ClipConfig get_clip_preset(const std::string& name) {
    imaging::ClipConfig cfg;  // defaults are the paper scales
    if (name == "paper") return cfg;
    if (name == "desk") {
        cfg.video_width = 64;
        cfg.video_height = 48;
        cfg.video_spacing = 0.16;
        cfg.image_width = 64;
        cfg.image_height = 48;
        cfg.image_spacing = 0.16;
        return cfg;
    }
    throw std::invalid_argument("unknown preprocess preset: " + name +
                                " (expected desk or paper)");
}

namespace {

imaging::AugmentConfig desk_augment() {
    imaging::AugmentConfig a;
    a.hflip = true;
    a.crop = false;  // zoom would corrupt the physical-size cue at desk scale
    a.max_rotation_deg = 45.0;
    a.saturation_lo = a.saturation_hi = 1.0;
    a.max_brightness_delta = 0.05;
    a.contrast_lo = 0.95;
    a.contrast_hi = 1.05;
    a.max_hue_delta = 0.0;
    return a;
}

}  // namespace

TrainPreset get_train_preset(const std::string& name) {
    TrainPreset p;
    p.name = name;
    if (name == "paper-image" || name == "paper-video") {
        p.clip_preset = "paper";
        p.clip = get_clip_preset("paper");
        p.image_net.in_w = p.clip.image_width;
        p.image_net.in_h = p.clip.image_height;
        p.video_net.in_w = p.clip.video_width;
        p.video_net.in_h = p.clip.video_height;
        p.video_net.clip_len = p.clip.clip_len;
        p.train.batch_size = 8;
        p.train.augment = imaging::AugmentConfig{};  // full published ranges
        if (name == "paper-image") {
            p.modality = estimator::Modality::image;
            p.train.dropout_keep = 0.985;
            p.train.lr = estimator::LrSchedule::paper_image();
            p.train.max_steps = 100000;
        } else {
            p.modality = estimator::Modality::video;
            p.train.dropout_keep = 0.8;
            p.train.lr = estimator::LrSchedule::paper_video();
            p.train.max_steps = 100000;
        }
        return p;
    }
    if (name == "desk-image" || name == "desk-video") {
        p.clip_preset = "desk";
        p.clip = get_clip_preset("desk");
        p.image_net.in_w = p.clip.image_width;
        p.image_net.in_h = p.clip.image_height;
        p.video_net.in_w = p.clip.video_width;
        p.video_net.in_h = p.clip.video_height;
        p.video_net.clip_len = p.clip.clip_len;
        p.train.batch_size = 8;
        p.train.max_steps = 2000;
        p.train.augment = desk_augment();
        if (name == "desk-image") {
            p.modality = estimator::Modality::image;
            p.train.dropout_keep = 0.985;
            // Desk schedules keep the published shapes with lr0 x10.
            p.train.lr = estimator::LrSchedule::image_exp(4.56e-4, 15490, 0.933);
        } else {
            p.modality = estimator::Modality::video;
            p.train.dropout_keep = 0.8;
            p.train.lr = estimator::LrSchedule::video_linear(4.58e-3, 4.58e-6, 2000);
        }
        return p;
    }
    throw std::invalid_argument("unknown train preset: " + name);
}

std::string describe_train_config(const TrainPreset& p) {
    char buf[512];
    const auto& lr = p.train.lr;
    if (lr.kind == estimator::LrSchedule::Kind::image_exp_decay) {
        std::snprintf(buf, sizeof(buf),
                      "preset=%s modality=%s lr0=%.2e decay_steps=%g decay_factor=%g "
                      "steps=%ld batch=%d keep=%g wd=%g",
                      p.name.c_str(), estimator::to_string(p.modality).c_str(), lr.lr0,
                      lr.decay_steps, lr.factor, p.train.max_steps, p.train.batch_size,
                      p.train.dropout_keep, p.train.adamw.weight_decay);
    } else {
        std::snprintf(buf, sizeof(buf),
                      "preset=%s modality=%s lr0=%.2e lr_final=%.2e total_steps=%ld "
                      "steps=%ld batch=%d keep=%g wd=%g",
                      p.name.c_str(), estimator::to_string(p.modality).c_str(), lr.lr0,
                      lr.lr_final, lr.total_steps, p.train.max_steps, p.train.batch_size,
                      p.train.dropout_keep, p.train.adamw.weight_decay);
    }
    return buf;
}

void preprocess_media(const cohort::CohortManifest& manifest,
                      const fs::path& media_root, const fs::path& out_root,
                      const imaging::ClipConfig& clip_cfg) {
    struct Job {
        const cohort::MediaRef* ref;
    };
    std::vector<Job> jobs;
    for (const auto& p : manifest.patients)
        for (const auto& v : p.visits)
            for (const auto& m : v.media) jobs.push_back({&m});

    const auto n = static_cast<std::int64_t>(jobs.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 2)
#endif
    for (std::int64_t i = 0; i < n; ++i) {
        const auto& ref = *jobs[static_cast<std::size_t>(i)].ref;
        imaging::MediaDir media = imaging::read_media_dir(media_root / ref.path);
        imaging::MediaDir out;
        out.kind = media.kind;
        if (media.kind == imaging::MediaKind::video) {
            const auto kept = imaging::temporal_subsample(media.frames, clip_cfg.temporal_stride);
            out.pixel_spacing = clip_cfg.video_spacing;
            out.frames.reserve(kept.size());
            for (const auto& f : kept)
                out.frames.push_back(imaging::resample_to_physical_scale(
                    f, clip_cfg.video_spacing, clip_cfg.video_width, clip_cfg.video_height));
        } else {
            out.pixel_spacing = clip_cfg.image_spacing;
            out.frames.reserve(media.frames.size());
            for (const auto& f : media.frames)
                out.frames.push_back(imaging::resample_to_physical_scale(
                    f, clip_cfg.image_spacing, clip_cfg.image_width, clip_cfg.image_height));
        }
        imaging::write_media_dir(out_root / ref.path, out);
    }
}

std::vector<estimator::TrainItem> load_train_items(
    const cohort::CohortManifest& manifest, const fs::path& media_root,
    estimator::Modality modality, const imaging::ClipConfig& clip_cfg,
    const std::set<std::string>& patients) {
    std::vector<estimator::TrainItem> items;
    for (const auto& p : manifest.patients) {
        if (!patients.empty() && !patients.count(p.patient_id)) continue;
        for (const auto& v : p.visits) {
            const double ga = cohort::ground_truth_ga(v);
            for (const auto& m : v.media) {
                const bool is_video = m.kind == imaging::MediaKind::video;
                if (is_video != (modality == estimator::Modality::video)) continue;
                imaging::MediaDir media = imaging::read_media_dir(media_root / m.path);
                if (modality == estimator::Modality::image) {
                    for (const auto& f : media.frames)
                        items.push_back(estimator::TrainItem::from_frame(f, ga));
                } else {
                    const auto clips = imaging::extract_clips(media.frames, clip_cfg.clip_len,
                                                              clip_cfg.window_stride);
                    for (const auto& clip : clips)
                        items.push_back(estimator::TrainItem::from_clip(clip, ga));
                }
            }
        }
    }
    if (items.empty())
        throw std::runtime_error("no training items for modality " +
                                 estimator::to_string(modality));
    return items;
}

std::vector<PredictionRow> predict_cohort(
    const cohort::CohortManifest& manifest, const fs::path& media_root,
    const std::vector<const estimator::Predictor*>& models,
    const imaging::ClipConfig& clip_cfg, const std::set<std::string>& patients) {
    if (models.empty()) throw std::invalid_argument("predict_cohort: no models");
    struct VisitJob {
        const cohort::Patient* patient;
        const cohort::Visit* visit;
    };
    std::vector<VisitJob> jobs;
    for (const auto& p : manifest.patients) {
        if (!patients.empty() && !patients.count(p.patient_id)) continue;
        for (const auto& v : p.visits) jobs.push_back({&p, &v});
    }

    std::vector<std::vector<PredictionRow>> per_visit(jobs.size());
    const auto n = static_cast<std::int64_t>(jobs.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
    for (std::int64_t ji = 0; ji < n; ++ji) {
        const auto& job = jobs[static_cast<std::size_t>(ji)];
        // Load this visit's media once per modality.
        std::vector<imaging::MediaDir> videos, images;
        for (const auto& m : job.visit->media) {
            auto media = imaging::read_media_dir(media_root / m.path);
            (media.kind == imaging::MediaKind::video ? videos : images)
                .push_back(std::move(media));
        }
        std::vector<aggregation::CaseEstimate> model_cases, video_cases;
        std::vector<PredictionRow>& rows = per_visit[static_cast<std::size_t>(ji)];
        for (const auto* model : models) {
            const bool is_video = model->modality() == estimator::Modality::video;
            const auto& media_list = is_video ? videos : images;
            std::vector<aggregation::Estimate> estimates;
            for (std::size_t mi = 0; mi < media_list.size(); ++mi) {
                const auto clip_estimates =
                    estimator::predict_media(*model, media_list[mi].frames, clip_cfg);
                for (const auto& ce : clip_estimates) {
                    aggregation::Estimate e;
                    e.mean = ce.mean_days;
                    e.variance = ce.variance;
                    e.source = std::to_string(mi) + ":" + std::to_string(ce.clip_index);
                    estimates.push_back(std::move(e));
                }
            }
            if (estimates.empty()) continue;
            auto kase = aggregation::inverse_variance_aggregate(estimates);
            kase.model_id = model->model_id();
            model_cases.push_back(kase);
            if (is_video) video_cases.push_back(kase);

            PredictionRow row;
            row.patient_id = job.patient->patient_id;
            row.visit_id = job.visit->visit_id;
            row.model_id = kase.model_id;
            row.mean_days = kase.mean;
            row.variance = kase.variance;
            row.n_inputs = kase.n_inputs;
            rows.push_back(std::move(row));
        }
        auto push_composite = [&](const std::string& id,
                                  const std::vector<aggregation::CaseEstimate>& cases) {
            const auto combined = aggregation::ensemble_cases(cases);
            PredictionRow row;
            row.patient_id = job.patient->patient_id;
            row.visit_id = job.visit->visit_id;
            row.model_id = id;
            row.mean_days = combined.mean;
            row.variance = combined.variance;
            row.n_inputs = combined.n_inputs;
            rows.push_back(std::move(row));
        };
        if (video_cases.size() >= 2) push_composite("video", video_cases);
        if (model_cases.size() >= 2) push_composite("ensemble", model_cases);
    }

    std::vector<PredictionRow> rows;
    for (auto& vr : per_visit)
        for (auto& r : vr) rows.push_back(std::move(r));
    return rows;
}

void save_predictions(const fs::path& path, const std::vector<PredictionRow>& rows,
                      std::uint64_t seed, const std::vector<io::InputDigest>& inputs) {
    std::ostringstream out;
    out << io::header_line("predict", seed, inputs) << "\n";
    out << "patient_id,visit_id,model_id,mean_days,variance,n_inputs\n";
    for (const auto& r : rows)
        out << r.patient_id << "," << r.visit_id << "," << r.model_id << ","
            << io::fmt_g(r.mean_days, 12) << "," << io::fmt_g(r.variance, 12) << ","
            << r.n_inputs << "\n";
    io::write_text_file(path, out.str());
}

std::vector<PredictionRow> load_predictions(const fs::path& path) {
    std::vector<PredictionRow> rows;
    bool saw_header = false;
    for (const auto& line : io::read_lines(path)) {
        if (line.empty() || line[0] == '#') continue;
        if (!saw_header) {
            saw_header = true;
            continue;
        }
        const auto cells = io::csv_split(line);
        if (cells.size() != 6)
            throw std::runtime_error("bad prediction row in " + path.string() + ": " + line);
        PredictionRow r;
        r.patient_id = cells[0];
        r.visit_id = cells[1];
        r.model_id = cells[2];
        r.mean_days = std::stod(cells[3]);
        r.variance = std::stod(cells[4]);
        r.n_inputs = static_cast<std::size_t>(std::stoull(cells[5]));
        rows.push_back(std::move(r));
    }
    return rows;
}

std::set<std::string> patients_in_split(const cohort::SplitAssignment& split,
                                        cohort::Split which) {
    std::set<std::string> out;
    for (const auto& [id, s] : split.by_patient)
        if (s == which) out.insert(id);
    return out;
}

std::vector<fs::path> evaluate_run(const EvaluateArgs& args) {
    const auto manifest = cohort::load_manifest(args.manifest_path);
    const auto rows = load_predictions(args.predictions_path);

    report::ReportInputs inputs;
    inputs.cohort = &manifest;
    inputs.baseline_name = args.baseline;
    inputs.stats.seed = args.seed;

    std::vector<std::string> model_order;
    for (const auto& r : rows) {
        inputs.predictions[r.visit_id][r.model_id] = r.mean_days;
        if (std::find(model_order.begin(), model_order.end(), r.model_id) ==
            model_order.end())
            model_order.push_back(r.model_id);
    }
    // Display order: ensemble first, then the video pair, then the rest.
    std::vector<std::string> display;
    for (const auto& preferred : {std::string("ensemble"), std::string("video")})
        if (std::find(model_order.begin(), model_order.end(), preferred) != model_order.end())
            display.push_back(preferred);
    for (const auto& m : model_order)
        if (std::find(display.begin(), display.end(), m) == display.end())
            display.push_back(m);
    inputs.model_methods = display;
    inputs.ensemble_name =
        std::find(display.begin(), display.end(), "ensemble") != display.end()
            ? "ensemble"
            : display.front();

    // Baseline values: the manifest's recorded estimates are authoritative;
    // the formula engine fills gaps when a config is provided.
    std::optional<formulae::FormulaLibrary> library;
    if (!args.formula_config.empty())
        library = formulae::load_library(args.formula_config);
    std::set<std::string> formula_names_seen;
    for (const auto& p : manifest.patients) {
        for (const auto& v : p.visits) {
            for (const auto& [name, days] : v.formula_ga_estimates) {
                inputs.baselines[v.visit_id][name] = days;
                formula_names_seen.insert(name);
            }
            if (library) {
                std::vector<std::string> names;
                for (const auto& [name, spec] : library->formulas) names.push_back(name);
                const auto result = formulae::baseline_estimates(v, *library, names);
                for (const auto& [name, est] : result.estimates) {
                    if (!inputs.baselines[v.visit_id].count(name))
                        inputs.baselines[v.visit_id][name] = est.days;
                    formula_names_seen.insert(name);
                }
            }
        }
    }
    if (!formula_names_seen.count(args.baseline))
        throw std::runtime_error("no baseline estimates named '" + args.baseline +
                                 "' in manifest or formula config");
    for (const auto& name : formula_names_seen)
        inputs.formula_methods.push_back(name);

    if (!args.splits_path.empty()) {
        const auto split = cohort::load_split(args.splits_path);
        inputs.eval_patients =
            patients_in_split(split, cohort::split_from_string(args.split_name));
    }

    // The AC percentile table wants >= min_studies_per_week per cell; a
    // cohort too small for any cell still gets the non-SGA tables.
    std::optional<growth::PercentileTable> table;
    try {
        table = growth::build_percentile_table(manifest);
        inputs.percentiles = &*table;
    } catch (const std::runtime_error&) {
        inputs.percentiles = nullptr;
    }

    const auto suite = report::build_report(inputs);

    std::vector<io::InputDigest> digests;
    digests.push_back({"manifest", io::file_digest(args.manifest_path)});
    digests.push_back({"predictions", io::file_digest(args.predictions_path)});
    auto written = report::write_report_suite(suite, args.out_dir, args.seed, digests);

    if (table) {
        growth::save_percentile_table(*table, args.out_dir / "percentiles.csv", args.seed,
                                      digests);
        written.push_back(args.out_dir / "percentiles.csv");
    }
    return written;
}

}  // namespace ga::pipeline
