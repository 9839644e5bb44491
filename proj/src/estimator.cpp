#include "ga/estimator.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ga/io.hpp"
#include "ga/rng.hpp"
#include "nets_internal.hpp"

namespace ga::estimator {

std::string to_string(Modality m) { return m == Modality::image ? "image" : "video"; }

double label_forward(const LabelTransform& tr, double ga_days) {
    if (tr.multiplier == 0.0) throw std::invalid_argument("label multiplier must be nonzero");
    if (tr.kind == TransformKind::log_affine) {
        if (!(ga_days > 0.0))
            throw std::domain_error("log_affine transform requires ga_days > 0");
        return tr.multiplier * (std::log(ga_days) + tr.offset);
    }
    return tr.multiplier * ga_days;
}

double label_inverse(const LabelTransform& tr, double t) {
    if (!std::isfinite(t)) throw std::invalid_argument("label_inverse: non-finite input");
    if (tr.multiplier == 0.0) throw std::invalid_argument("label multiplier must be nonzero");
    if (tr.kind == TransformKind::log_affine)
        return std::exp(t / tr.multiplier - tr.offset);
    return t / tr.multiplier;
}

double variance_to_ga_space(const LabelTransform& tr, double t, double var_t) {
    // d ga / d t is ga/m for the log transform and 1/m for the linear one.
    const double dga_dt = tr.kind == TransformKind::log_affine
                              ? label_inverse(tr, t) / tr.multiplier
                              : 1.0 / tr.multiplier;
    return var_t * dga_dt * dga_dt;
}

double softplus(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double nll_loss(double mu_t, double var_t, double target_t) {
    if (!(var_t > 0.0)) throw std::invalid_argument("nll_loss: var_t must be > 0");
    const double resid = target_t - mu_t;
    return 0.5 * std::log(var_t) + resid * resid / (2.0 * var_t);
}

NllGrad nll_grad(double mu_t, double var_t, double target_t) {
    if (!(var_t > 0.0)) throw std::invalid_argument("nll_grad: var_t must be > 0");
    const double resid = mu_t - target_t;
    NllGrad g;
    g.dmu = resid / var_t;
    g.dvar = 1.0 / (2.0 * var_t) - resid * resid / (2.0 * var_t * var_t);
    return g;
}

LrSchedule LrSchedule::image_exp(double lr0, double decay_steps, double factor) {
    LrSchedule s;
    s.kind = Kind::image_exp_decay;
    s.lr0 = lr0;
    s.decay_steps = decay_steps;
    s.factor = factor;
    return s;
}

LrSchedule LrSchedule::video_linear(double lr0, double lr_final, long total_steps) {
    LrSchedule s;
    s.kind = Kind::video_linear;
    s.lr0 = lr0;
    s.lr_final = lr_final;
    s.total_steps = total_steps;
    return s;
}

double lr_at(const LrSchedule& schedule, long step) {
    if (step < 0) throw std::invalid_argument("lr_at: negative step");
    if (schedule.kind == LrSchedule::Kind::image_exp_decay)
        return schedule.lr0 *
               std::pow(schedule.factor, static_cast<double>(step) / schedule.decay_steps);
    if (step >= schedule.total_steps) return schedule.lr_final;
    const double frac = static_cast<double>(step) / static_cast<double>(schedule.total_steps);
    return schedule.lr0 + (schedule.lr_final - schedule.lr0) * frac;
}

void adamw_step(std::span<float> w, std::span<const float> g, AdamwState& state,
                const AdamwHyper& hyper, double lr) {
    if (w.size() != g.size()) throw std::invalid_argument("adamw_step: shape mismatch");
    if (state.m.empty()) {
        state.m.assign(w.size(), 0.0);
        state.v.assign(w.size(), 0.0);
    }
    if (state.m.size() != w.size())
        throw std::invalid_argument("adamw_step: state shape mismatch");

    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(hyper.beta1, t);
    const double bc2 = 1.0 - std::pow(hyper.beta2, t);
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double gi = g[i];
        state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * gi;
        state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * gi * gi;
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        const double update = m_hat / (std::sqrt(v_hat) + hyper.eps) +
                              hyper.weight_decay * static_cast<double>(w[i]);
        w[i] = static_cast<float>(static_cast<double>(w[i]) - lr * update);
    }
}

EstimatorOutput Predictor::predict_frame(const imaging::Frame&) const {
    throw std::invalid_argument("predictor modality mismatch: expected a clip input");
}

EstimatorOutput Predictor::predict_clip(const imaging::Clip&) const {
    throw std::invalid_argument("predictor modality mismatch: expected an image input");
}

std::vector<ClipEstimate> predict_media(const Predictor& predictor,
                                        const std::vector<imaging::Frame>& frames,
                                        const imaging::ClipConfig& clip_cfg) {
    if (frames.empty()) throw std::invalid_argument("predict_media: no frames");
    std::vector<ClipEstimate> out;
    const LabelTransform& tr = predictor.transform();
    auto to_estimate = [&tr](const EstimatorOutput& o, int index) {
        ClipEstimate e;
        e.clip_index = index;
        e.mean_days = label_inverse(tr, o.mu_t);
        e.variance = variance_to_ga_space(tr, o.mu_t, o.var_t);
        return e;
    };
    if (predictor.modality() == Modality::image) {
        for (std::size_t i = 0; i < frames.size(); ++i)
            out.push_back(to_estimate(predictor.predict_frame(frames[i]),
                                      static_cast<int>(i)));
        return out;
    }
    const auto clips = imaging::extract_clips(frames, clip_cfg.clip_len, clip_cfg.window_stride);
    out.reserve(clips.size());
    for (const auto& clip : clips)
        out.push_back(to_estimate(predictor.predict_clip(clip), clip.start_index));
    return out;
}

TrainItem TrainItem::from_frame(const imaging::Frame& frame, double ga_days) {
    TrainItem item;
    item.modality = Modality::image;
    item.width = frame.width;
    item.height = frame.height;
    item.frame_count = 1;
    item.ga_days = ga_days;
    item.pixels.resize(frame.pixels.size());
    for (std::size_t i = 0; i < frame.pixels.size(); ++i)
        item.pixels[i] = static_cast<std::uint8_t>(
            std::lround(std::clamp(frame.pixels[i], 0.0f, 1.0f) * 255.0f));
    return item;
}

TrainItem TrainItem::from_clip(const imaging::Clip& clip, double ga_days) {
    if (clip.frames.empty()) throw std::invalid_argument("empty clip");
    TrainItem item;
    item.modality = Modality::video;
    item.width = clip.frames[0].width;
    item.height = clip.frames[0].height;
    item.frame_count = static_cast<int>(clip.frames.size());
    item.ga_days = ga_days;
    const std::size_t plane = clip.frames[0].pixels.size();
    item.pixels.resize(plane * clip.frames.size());
    for (std::size_t f = 0; f < clip.frames.size(); ++f) {
        const auto& px = clip.frames[f].pixels;
        if (px.size() != plane) throw std::invalid_argument("ragged clip frames");
        for (std::size_t i = 0; i < plane; ++i)
            item.pixels[f * plane + i] = static_cast<std::uint8_t>(
                std::lround(std::clamp(px[i], 0.0f, 1.0f) * 255.0f));
    }
    return item;
}

std::vector<LossPoint> train(Predictor& predictor, const std::vector<TrainItem>& dataset,
                             const TrainConfig& config) {
    if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
    if (config.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    auto* net = detail::as_trainable(predictor);
    if (!net) throw std::invalid_argument("train: predictor is not trainable");
    for (const auto& item : dataset) net->check_item(item);

    std::vector<double> targets(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (!(dataset[i].ga_days >= 1.0))
            throw std::invalid_argument("train: label outside valid GA range");
        targets[i] = label_forward(predictor.transform(), dataset[i].ga_days);
    }

    rng::Rng base(config.seed);
    rng::Rng batch_rng = base.fork("batch");
    rng::Rng aug_rng = base.fork("augment");
    rng::Rng dropout_rng = base.fork("dropout");

    auto& params = predictor.params();
    std::vector<AdamwState> states(params.size());

    const int bsz = config.batch_size;
    std::vector<std::size_t> batch_index(bsz);
    std::vector<imaging::AugmentParams> batch_aug(bsz);
    std::vector<std::vector<float>> batch_mask(bsz);
    std::vector<double> batch_loss(bsz);
    std::vector<detail::GradBuffer> batch_grad(bsz);
    for (auto& gb : batch_grad) {
        gb.resize(params.size());
        for (std::size_t k = 0; k < params.size(); ++k) gb[k].assign(params[k].size(), 0.0f);
    }
    const int n_drop = net->dropout_units();

    std::vector<LossPoint> curve;
    curve.reserve(static_cast<std::size_t>(config.max_steps));

    for (long step = 0; step < config.max_steps; ++step) {
        // All stochastic draws happen serially, so results do not depend on
        // the number of worker threads.
        for (int b = 0; b < bsz; ++b) {
            batch_index[b] = batch_rng.below(dataset.size());
            batch_aug[b] = imaging::draw_augment_params(config.augment, aug_rng);
            auto& mask = batch_mask[b];
            mask.resize(static_cast<std::size_t>(n_drop));
            for (int j = 0; j < n_drop; ++j)
                mask[j] = dropout_rng.next_double() < config.dropout_keep
                              ? static_cast<float>(1.0 / config.dropout_keep)
                              : 0.0f;
            for (auto& g : batch_grad[b])
                std::fill(g.begin(), g.end(), 0.0f);
        }

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
        for (int b = 0; b < bsz; ++b) {
            const std::size_t idx = batch_index[b];
            batch_loss[b] = net->loss_and_grad(dataset[idx], batch_aug[b], batch_mask[b],
                                               targets[idx], batch_grad[b]);
        }

        double loss = 0.0;
        for (int b = 0; b < bsz; ++b) loss += batch_loss[b];
        loss /= bsz;
        if (!std::isfinite(loss)) {
            std::ostringstream msg;
            msg << "training diverged at step " << step << " (loss=" << loss << ")";
            throw std::runtime_error(msg.str());
        }

        const double lr = lr_at(config.lr, step);
        const float inv_b = 1.0f / static_cast<float>(bsz);
        for (std::size_t k = 0; k < params.size(); ++k) {
            auto& g0 = batch_grad[0][k];
            for (int b = 1; b < bsz; ++b) {
                const auto& gb = batch_grad[b][k];
                for (std::size_t i = 0; i < g0.size(); ++i) g0[i] += gb[i];
            }
            for (auto& g : g0) g *= inv_b;
            adamw_step(std::span<float>(params[k].data),
                       std::span<const float>(g0), states[k], config.adamw, lr);
        }
        curve.push_back({step, lr, loss});
    }
    return curve;
}

void save_loss_curve(const std::filesystem::path& path,
                     const std::vector<LossPoint>& curve, std::uint64_t seed) {
    std::ostringstream out;
    out << io::header_line("train", seed, {}) << "\n";
    out << "step,lr,loss\n";
    for (const auto& p : curve)
        out << p.step << "," << io::fmt_g(p.lr, 10) << "," << io::fmt_g(p.loss, 10) << "\n";
    io::write_text_file(path, out.str());
}

}  // namespace ga::estimator
