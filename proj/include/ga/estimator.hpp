#pragma once

// Heteroscedastic GA regressors: label transforms, mean-variance (Gaussian
// NLL) loss with analytic gradients, AdamW, LR schedules, and two small
// reference networks behind the Predictor interface. Training is
// single-threaded over steps with deterministic batch-parallel gradient
// computation; inference is pure.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ga/imaging.hpp"

namespace ga::estimator {

enum class Modality { image, video };
std::string to_string(Modality m);

enum class TransformKind { log_affine, linear };

struct LabelTransform {
    TransformKind kind = TransformKind::linear;
    double multiplier = 1.0;  // m != 0
    double offset = 0.0;      // log_affine only

    // t = m * (ln(ga) + b) for log_affine; t = m * ga for linear.
    static LabelTransform video_paper() { return {TransformKind::log_affine, 3.43, -5.2}; }
    static LabelTransform image_paper() { return {TransformKind::linear, 0.01, 0.0}; }
};

double label_forward(const LabelTransform& tr, double ga_days);
double label_inverse(const LabelTransform& tr, double t);
// First-order delta rule: var_ga = var_t * (d ga / d t)^2 at the given t.
double variance_to_ga_space(const LabelTransform& tr, double t, double var_t);

// Overflow-safe ln(1 + e^x); strictly positive.
double softplus(double x);
double sigmoid(double x);

// Transformed-space variances are floored here to keep the NLL regular.
inline constexpr double kVarFloor = 1e-6;

// 0.5*ln(var) + (target - mu)^2 / (2*var), constant term dropped.
double nll_loss(double mu_t, double var_t, double target_t);

struct NllGrad {
    double dmu = 0.0;
    double dvar = 0.0;
};
NllGrad nll_grad(double mu_t, double var_t, double target_t);

// --- learning-rate schedules ---------------------------------------------------

struct LrSchedule {
    enum class Kind { image_exp_decay, video_linear };
    Kind kind = Kind::image_exp_decay;
    double lr0 = 0.0;
    // image_exp_decay: lr0 * factor^(step / decay_steps), continuous exponent.
    double decay_steps = 1.0;
    double factor = 1.0;
    // video_linear: lr0 at step 0 down to lr_final at total_steps, clamped after.
    double lr_final = 0.0;
    long total_steps = 1;

    static LrSchedule image_exp(double lr0, double decay_steps, double factor);
    static LrSchedule video_linear(double lr0, double lr_final, long total_steps);
    static LrSchedule paper_image() { return image_exp(4.56e-5, 15490, 0.933); }
    static LrSchedule paper_video() { return video_linear(4.58e-4, 4.58e-7, 100000); }
};

double lr_at(const LrSchedule& schedule, long step);

// --- AdamW ----------------------------------------------------------------------

struct AdamwHyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;
};

struct AdamwState {
    long step = 0;
    std::vector<double> m, v;
};

// One decoupled-weight-decay update with bias correction:
// w <- w - lr * (m_hat / (sqrt(v_hat) + eps) + wd * w). Increments state.step.
void adamw_step(std::span<float> w, std::span<const float> g, AdamwState& state,
                const AdamwHyper& hyper, double lr);

// --- predictors -----------------------------------------------------------------

struct EstimatorOutput {
    double mu_t = 0.0;
    double var_t = 0.0;  // >= kVarFloor
};

struct ParamTensor {
    std::string name;
    std::vector<int> shape;
    std::vector<float> data;
    std::size_t size() const { return data.size(); }
};

class Predictor {
public:
    virtual ~Predictor() = default;
    virtual Modality modality() const = 0;
    virtual const LabelTransform& transform() const = 0;
    virtual const std::string& model_id() const = 0;
    virtual EstimatorOutput predict_frame(const imaging::Frame& frame) const;
    virtual EstimatorOutput predict_clip(const imaging::Clip& clip) const;
    virtual std::vector<ParamTensor>& params() = 0;
    virtual const std::vector<ParamTensor>& params() const = 0;
};

struct ImageNetConfig {
    int in_w = 64, in_h = 48;
    int c1 = 8, c2 = 16, c3 = 32;
    int hidden = 16;
    // The mean head is sigmoid(o) scaled to cover the label range; 3.15 in
    // transformed units spans 315 days at multiplier 0.01.
    double sigmoid_scale = 3.15;
};

struct VideoNetConfig {
    int in_w = 64, in_h = 48;
    int clip_len = 24;
    int c1 = 6, c2 = 12;
    int hidden = 16;
};

std::unique_ptr<Predictor> make_image_regressor(const ImageNetConfig& cfg,
                                                const LabelTransform& tr,
                                                const std::string& model_id,
                                                std::uint64_t init_seed);
std::unique_ptr<Predictor> make_video_regressor(const VideoNetConfig& cfg,
                                                const LabelTransform& tr,
                                                const std::string& model_id,
                                                std::uint64_t init_seed);

// --- inference -------------------------------------------------------------------

struct ClipEstimate {
    int clip_index = 0;      // clip start frame (video) or frame index (image)
    double mean_days = 0.0;
    double variance = 0.0;   // days^2, > 0
};

// Image modality: one estimate per frame. Video modality: overlapping clips
// per extract_clips(clip_len, window_stride). Frames must already match the
// predictor's input dims.
std::vector<ClipEstimate> predict_media(const Predictor& predictor,
                                        const std::vector<imaging::Frame>& frames,
                                        const imaging::ClipConfig& clip_cfg);

// --- training --------------------------------------------------------------------

// Preloaded sample; pixels quantized to 8 bits exactly as stored on disk.
struct TrainItem {
    Modality modality = Modality::image;
    int width = 0, height = 0, frame_count = 1;
    std::vector<std::uint8_t> pixels;  // frame-major
    double ga_days = 0.0;

    static TrainItem from_frame(const imaging::Frame& frame, double ga_days);
    static TrainItem from_clip(const imaging::Clip& clip, double ga_days);
};

struct TrainConfig {
    int batch_size = 8;
    AdamwHyper adamw;
    double dropout_keep = 0.985;
    LrSchedule lr = LrSchedule::paper_image();
    long max_steps = 2000;
    std::uint64_t seed = 0;
    imaging::AugmentConfig augment = imaging::AugmentConfig::disabled();
};

struct LossPoint {
    long step = 0;
    double lr = 0.0;
    double loss = 0.0;
};

// Minibatch loop: sample batch -> augment -> forward -> NLL on transformed
// labels -> adamw_step with lr_at(step). Deterministic under the seed for
// any OpenMP thread count. Throws on divergence (non-finite loss).
std::vector<LossPoint> train(Predictor& predictor, const std::vector<TrainItem>& dataset,
                             const TrainConfig& config);

void save_loss_curve(const std::filesystem::path& path,
                     const std::vector<LossPoint>& curve, std::uint64_t seed);

// Versioned binary weight file: magic, modality, transform, net config,
// tensor name/shape table, little-endian f32 data.
void save_weights(const std::filesystem::path& path, const Predictor& predictor);
std::unique_ptr<Predictor> load_weights(const std::filesystem::path& path);

}  // namespace ga::estimator
