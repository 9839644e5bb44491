#include "ga/cli.hpp"

#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "ga/cohort.hpp"
#include "ga/estimator.hpp"
#include "ga/formulae.hpp"
#include "ga/growth.hpp"
#include "ga/io.hpp"
#include "ga/pipeline.hpp"
#include "ga/version.hpp"

namespace ga::cli {

namespace {

namespace fs = std::filesystem;

void require_exists(const fs::path& path) {
    if (!fs::exists(path))
        throw std::runtime_error("missing input file: " + path.string());
}

std::set<std::string> split_filter(const std::string& splits_path,
                                   const std::string& split_name) {
    if (splits_path.empty()) return {};
    require_exists(splits_path);
    const auto split = cohort::load_split(splits_path);
    return pipeline::patients_in_split(split, cohort::split_from_string(split_name));
}

int run_synth(const std::string& out_dir, std::size_t n, std::uint64_t seed,
              double sga_frac, double lga_frac, const std::vector<double>& weights,
              bool no_media, int images_per_visit, int video_frames) {
    cohort::SynthConfig cfg;
    cfg.n_patients = n;
    cfg.rng_seed = seed;
    cfg.sga_fraction = sga_frac;
    cfg.lga_fraction = lga_frac;
    if (!weights.empty()) {
        if (weights.size() != 3)
            throw std::runtime_error("--trimester-weights needs exactly 3 values");
        cfg.trimester_visit_weights = {weights[0], weights[1], weights[2]};
    }
    cfg.images_per_visit = images_per_visit;
    cfg.video_frame_count = video_frames;
    const auto result = cohort::synthesize_cohort(cfg);
    cohort::write_synth_outputs(cfg, result, out_dir, !no_media);
    std::cout << "wrote " << result.manifest.patients.size() << " patients, "
              << result.manifest.visit_count() << " visits, " << result.media.size()
              << (no_media ? " media plans (not rendered)" : " media items") << " to "
              << out_dir << "\n";
    return 0;
}

int run_split(const std::string& manifest_path, const std::string& out_path,
              std::uint64_t seed, const std::vector<double>& ratios) {
    require_exists(manifest_path);
    const auto manifest = cohort::load_manifest(manifest_path);
    std::array<double, 3> r{0.6, 0.2, 0.2};
    if (!ratios.empty()) {
        if (ratios.size() != 3) throw std::runtime_error("--ratios needs exactly 3 values");
        r = {ratios[0], ratios[1], ratios[2]};
    }
    const auto split = cohort::split_patients(manifest, r, seed);
    cohort::save_split(split, out_path, seed);
    const auto counts = split.counts();
    std::cout << "split " << manifest.patients.size() << " patients -> train "
              << counts[0] << ", tune " << counts[1] << ", test " << counts[2] << "\n";
    return 0;
}

int run_preprocess(const std::string& manifest_path, const std::string& media_root,
                   const std::string& out_root, const std::string& preset) {
    require_exists(manifest_path);
    const auto manifest = cohort::load_manifest(manifest_path);
    const auto clip_cfg = pipeline::get_clip_preset(preset);
    pipeline::preprocess_media(manifest, media_root, out_root, clip_cfg);
    std::cout << "preprocessed media for " << manifest.visit_count() << " visits to "
              << out_root << "\n";
    return 0;
}

int run_train(const std::string& manifest_path, const std::string& media_root,
              const std::string& preset_name, std::uint64_t seed,
              const std::string& out_path, const std::string& curve_path,
              const std::string& splits_path, const std::string& split_name,
              const std::string& model_id, long steps_override, bool dry_run) {
    auto preset = pipeline::get_train_preset(preset_name);
    if (steps_override > 0) preset.train.max_steps = steps_override;
    preset.train.seed = seed;
    std::cout << "config: " << pipeline::describe_train_config(preset) << " seed=" << seed
              << "\n";
    if (dry_run) return 0;

    require_exists(manifest_path);
    const auto manifest = cohort::load_manifest(manifest_path);
    const auto patients = split_filter(splits_path, split_name);
    const auto items = pipeline::load_train_items(manifest, media_root, preset.modality,
                                                  preset.clip, patients);
    std::cout << "training on " << items.size() << " items\n";

    const std::string id =
        model_id.empty() ? estimator::to_string(preset.modality) : model_id;
    std::unique_ptr<estimator::Predictor> model;
    if (preset.modality == estimator::Modality::image)
        model = estimator::make_image_regressor(preset.image_net,
                                                estimator::LabelTransform::image_paper(),
                                                id, seed);
    else
        model = estimator::make_video_regressor(preset.video_net,
                                                estimator::LabelTransform::video_paper(),
                                                id, seed);
    const auto curve = estimator::train(*model, items, preset.train);
    estimator::save_weights(out_path, *model);
    if (!curve_path.empty()) estimator::save_loss_curve(curve_path, curve, seed);
    if (!curve.empty())
        std::cout << "final loss " << io::fmt_g(curve.back().loss, 6) << " after "
                  << curve.size() << " steps\n";
    std::cout << "saved weights to " << out_path << "\n";
    return 0;
}

int run_predict(const std::string& manifest_path, const std::string& media_root,
                const std::vector<std::string>& model_paths, const std::string& out_path,
                const std::string& splits_path, const std::string& split_name,
                const std::string& preset) {
    require_exists(manifest_path);
    const auto manifest = cohort::load_manifest(manifest_path);
    const auto patients = split_filter(splits_path, split_name);
    const auto clip_cfg = pipeline::get_clip_preset(preset);

    std::vector<std::unique_ptr<estimator::Predictor>> models;
    std::vector<const estimator::Predictor*> model_ptrs;
    std::vector<io::InputDigest> digests;
    digests.push_back({"manifest", io::file_digest(manifest_path)});
    for (const auto& p : model_paths) {
        require_exists(p);
        models.push_back(estimator::load_weights(p));
        model_ptrs.push_back(models.back().get());
        digests.push_back({models.back()->model_id(), io::file_digest(p)});
    }
    const auto rows =
        pipeline::predict_cohort(manifest, media_root, model_ptrs, clip_cfg, patients);
    pipeline::save_predictions(out_path, rows, 0, digests);
    std::cout << "wrote " << rows.size() << " prediction rows to " << out_path << "\n";
    return 0;
}

int run_evaluate(const std::string& manifest_path, const std::string& pred_path,
                 const std::string& out_dir, const std::string& baseline,
                 std::uint64_t seed, const std::string& splits_path,
                 const std::string& split_name, const std::string& formula_config) {
    require_exists(manifest_path);
    require_exists(pred_path);
    pipeline::EvaluateArgs args;
    args.manifest_path = manifest_path;
    args.predictions_path = pred_path;
    args.out_dir = out_dir;
    args.baseline = baseline;
    args.seed = seed;
    args.splits_path = splits_path;
    args.split_name = split_name;
    if (!formula_config.empty()) {
        require_exists(formula_config);
        args.formula_config = formula_config;
    }
    const auto written = pipeline::evaluate_run(args);
    std::cout << "wrote " << written.size() << " report files to " << out_dir << "\n";
    return 0;
}

int run_percentiles(const std::string& manifest_path, const std::string& out_path) {
    require_exists(manifest_path);
    const auto manifest = cohort::load_manifest(manifest_path);
    const auto table = growth::build_percentile_table(manifest);
    growth::save_percentile_table(table, out_path, 0,
                                  {{"manifest", io::file_digest(manifest_path)}});
    std::cout << "wrote " << table.cells.size() << " percentile cells to " << out_path
              << "\n";
    return 0;
}

int run_formula_eval(const std::string& config_path, const std::string& name,
                     const std::vector<std::string>& sets) {
    require_exists(config_path);
    const auto library = formulae::load_library(config_path);
    const auto& spec = library.get(name);
    std::map<std::string, double> vars;
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("--set expects var=value, got: " + s);
        vars[s.substr(0, eq)] = std::stod(s.substr(eq + 1));
    }
    const auto est = formulae::eval_formula(spec, vars);
    std::cout << name << " = " << io::fmt_g(est.days, 10) << " days"
              << (est.out_of_range ? " (out of applicability range)" : "") << "\n";
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{std::string(kToolName) + " " + kToolVersion +
                 ": gestational-age estimation pipeline"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic cohort");
    std::size_t synth_n = 400;
    std::uint64_t synth_seed = 1;
    double sga_frac = 0.10, lga_frac = 0.10;
    std::vector<double> weights;
    std::string synth_out;
    bool no_media = false;
    int images_per_visit = 2, video_frames = 64;
    synth->add_option("--n", synth_n, "number of patients");
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--sga-fraction", sga_frac);
    synth->add_option("--lga-fraction", lga_frac);
    synth->add_option("--trimester-weights", weights, "three visit weights")->expected(3);
    synth->add_flag("--no-media", no_media, "skip rendering media files");
    synth->add_option("--images-per-visit", images_per_visit);
    synth->add_option("--video-frames", video_frames);

    // split
    auto* split = app.add_subcommand("split", "assign patients to train/tune/test");
    std::string split_manifest, split_out;
    std::uint64_t split_seed = 1;
    std::vector<double> ratios;
    split->add_option("--manifest", split_manifest)->required();
    split->add_option("--out", split_out)->required();
    split->add_option("--seed", split_seed);
    split->add_option("--ratios", ratios, "train tune test")->expected(3);

    // preprocess
    auto* prep = app.add_subcommand("preprocess", "resample media to a preset scale");
    std::string prep_manifest, prep_media, prep_out, prep_preset = "desk";
    prep->add_option("--manifest", prep_manifest)->required();
    prep->add_option("--media-root", prep_media)->required();
    prep->add_option("--out", prep_out)->required();
    prep->add_option("--preset", prep_preset, "desk or paper");

    // train
    auto* train = app.add_subcommand("train", "train a regressor");
    std::string train_manifest, train_media, train_preset = "desk-image";
    std::string train_out = "model.bin", train_curve, train_splits,
                train_split_name = "train", train_model_id;
    std::uint64_t train_seed = 1;
    long train_steps = 0;
    bool dry_run = false;
    train->add_option("--manifest", train_manifest);
    train->add_option("--media-root", train_media);
    train->add_option("--preset", train_preset,
                      "desk-image | desk-video | paper-image | paper-video");
    train->add_option("--seed", train_seed);
    train->add_option("--out", train_out, "weight file");
    train->add_option("--curve", train_curve, "loss curve CSV");
    train->add_option("--splits", train_splits, "split CSV from `ga split`");
    train->add_option("--split", train_split_name, "bucket to train on");
    train->add_option("--model-id", train_model_id);
    train->add_option("--steps", train_steps, "override max steps");
    train->add_flag("--dry-run", dry_run, "echo config and exit");

    // predict
    auto* predict = app.add_subcommand("predict", "per-case GA predictions");
    std::string pred_manifest, pred_media, pred_out = "predictions.csv";
    std::string pred_splits, pred_split_name = "test", pred_preset = "desk";
    std::vector<std::string> pred_models;
    predict->add_option("--manifest", pred_manifest)->required();
    predict->add_option("--media-root", pred_media)->required();
    predict->add_option("--model", pred_models, "weight file (repeatable)")->required();
    predict->add_option("--out", pred_out);
    predict->add_option("--splits", pred_splits);
    predict->add_option("--split", pred_split_name);
    predict->add_option("--preset", pred_preset, "clip preset: desk or paper");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "build the report suite");
    std::string eval_manifest, eval_pred, eval_out = "reports";
    std::string eval_baseline = "hadlock", eval_splits, eval_split_name = "test";
    std::string eval_formula_config;
    std::uint64_t eval_seed = 1;
    evaluate->add_option("--manifest", eval_manifest)->required();
    evaluate->add_option("--pred", eval_pred)->required();
    evaluate->add_option("--out", eval_out);
    evaluate->add_option("--baseline", eval_baseline);
    evaluate->add_option("--seed", eval_seed);
    evaluate->add_option("--splits", eval_splits);
    evaluate->add_option("--split", eval_split_name);
    evaluate->add_option("--formula-config", eval_formula_config);

    // percentiles
    auto* percentiles = app.add_subcommand("percentiles", "AC percentile table");
    std::string pct_manifest, pct_out = "percentiles.csv";
    percentiles->add_option("--manifest", pct_manifest)->required();
    percentiles->add_option("--out", pct_out);

    // formula eval
    auto* formula = app.add_subcommand("formula", "formula engine");
    auto* feval = formula->add_subcommand("eval", "evaluate a formula");
    std::string f_config, f_name;
    std::vector<std::string> f_sets;
    feval->add_option("--config", f_config)->required();
    feval->add_option("--name", f_name)->required();
    feval->add_option("--set", f_sets, "var=value (repeatable)");
    formula->require_subcommand(1);

    std::vector<std::string> argv_copy = args;
    std::vector<char*> argv;
    argv.push_back(const_cast<char*>(kToolName));
    for (auto& s : argv_copy) argv.push_back(s.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (synth->parsed())
            return run_synth(synth_out, synth_n, synth_seed, sga_frac, lga_frac, weights,
                             no_media, images_per_visit, video_frames);
        if (split->parsed()) return run_split(split_manifest, split_out, split_seed, ratios);
        if (prep->parsed())
            return run_preprocess(prep_manifest, prep_media, prep_out, prep_preset);
        if (train->parsed())
            return run_train(train_manifest, train_media, train_preset, train_seed,
                             train_out, train_curve, train_splits, train_split_name,
                             train_model_id, train_steps, dry_run);
        if (predict->parsed())
            return run_predict(pred_manifest, pred_media, pred_models, pred_out,
                               pred_splits, pred_split_name, pred_preset);
        if (evaluate->parsed())
            return run_evaluate(eval_manifest, eval_pred, eval_out, eval_baseline,
                                eval_seed, eval_splits, eval_split_name,
                                eval_formula_config);
        if (percentiles->parsed()) return run_percentiles(pct_manifest, pct_out);
        if (formula->parsed()) return run_formula_eval(f_config, f_name, f_sets);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "error: no subcommand\n";
    return 2;
}

}  // namespace ga::cli
