// Reference regressors. Image: three strided 3x3 conv layers, global
// average pooling, a small hidden layer, then a scaled-sigmoid mean head
// and a softplus variance head. Video: a shared two-layer conv encoder per
// frame, temporal mean pooling, the same hidden layer, a linear mean head
// (the video transform is log-affine, so the head range is unbounded) and
// a softplus variance head.

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "ga/estimator.hpp"
#include "ga/kernels.hpp"
#include "ga/rng.hpp"
#include "nets_internal.hpp"

static_assert(std::endian::native == std::endian::little,
              "weight files are little-endian");

namespace ga::estimator {

namespace {

constexpr char kWeightMagic[8] = {'G', 'A', 'W', 'T', '0', '0', '0', '1'};
// softplus(x) = 1 at x = ln(e - 1); starts the variance head near 1.
constexpr double kVarBiasInit = 0.5413248546129181;

void he_init(ParamTensor& t, int fan_in, rng::Rng& rng) {
    const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (auto& w : t.data) w = static_cast<float>(rng.normal(0.0, sd));
}

ParamTensor make_tensor(std::string name, std::vector<int> shape) {
    ParamTensor t;
    t.name = std::move(name);
    t.shape = std::move(shape);
    std::size_t n = 1;
    for (int d : t.shape) n *= static_cast<std::size_t>(d);
    t.data.assign(n, 0.0f);
    return t;
}

inline void relu_inplace(std::vector<float>& v) {
    for (auto& x : v)
        if (x < 0.0f) x = 0.0f;
}

inline void relu_backward_inplace(const std::vector<float>& act, std::vector<float>& grad) {
    for (std::size_t i = 0; i < grad.size(); ++i)
        if (act[i] <= 0.0f) grad[i] = 0.0f;
}

struct HeadResult {
    double o_mu = 0.0, o_var = 0.0;
    double var_raw = 0.0;
    std::vector<float> hid, hid_drop;  // post-relu, post-dropout
};

}  // namespace

namespace detail {

imaging::Frame item_frame(const TrainItem& item, int frame_index) {
    imaging::Frame f;
    f.width = item.width;
    f.height = item.height;
    f.pixel_spacing = 1.0;  // physical scale is irrelevant after preprocessing
    const std::size_t plane = static_cast<std::size_t>(item.width) * item.height;
    f.pixels.resize(plane);
    const std::uint8_t* src = item.pixels.data() + plane * static_cast<std::size_t>(frame_index);
    for (std::size_t i = 0; i < plane; ++i) f.pixels[i] = src[i] / 255.0f;
    return f;
}

}  // namespace detail

namespace {

// Shared hidden-layer + heads logic. Params order within each net keeps the
// hidden/mu/var tensors at fixed indices passed in here.
struct HeadParams {
    const ParamTensor *hw, *hb, *mw, *mb, *vw, *vb;
};

HeadResult heads_forward(const HeadParams& p, const std::vector<float>& features,
                         const std::vector<float>* dropout_mask) {
    const int hidden = static_cast<int>(p.hb->data.size());
    const int in = static_cast<int>(features.size());
    HeadResult r;
    r.hid.resize(hidden);
    for (int j = 0; j < hidden; ++j) {
        float acc = p.hb->data[j];
        const float* row = p.hw->data.data() + static_cast<std::size_t>(j) * in;
        for (int c = 0; c < in; ++c) acc += row[c] * features[c];
        r.hid[j] = acc;
    }
    relu_inplace(r.hid);
    r.hid_drop = r.hid;
    if (dropout_mask) {
        for (int j = 0; j < hidden; ++j) r.hid_drop[j] *= (*dropout_mask)[j];
    }
    double o_mu = p.mb->data[0], o_var = p.vb->data[0];
    for (int j = 0; j < hidden; ++j) {
        o_mu += p.mw->data[j] * r.hid_drop[j];
        o_var += p.vw->data[j] * r.hid_drop[j];
    }
    r.o_mu = o_mu;
    r.o_var = o_var;
    r.var_raw = softplus(o_var);
    return r;
}

// Backprop through heads and hidden layer; returns d(features).
std::vector<float> heads_backward(const HeadParams& p, const HeadResult& r,
                                  const std::vector<float>& features,
                                  const std::vector<float>* dropout_mask,
                                  double d_omu, double d_ovar,
                                  detail::GradBuffer& grad, std::size_t hw_i,
                                  std::size_t hb_i, std::size_t mw_i, std::size_t mb_i,
                                  std::size_t vw_i, std::size_t vb_i) {
    const int hidden = static_cast<int>(p.hb->data.size());
    const int in = static_cast<int>(features.size());

    grad[mb_i][0] += static_cast<float>(d_omu);
    grad[vb_i][0] += static_cast<float>(d_ovar);
    std::vector<float> dhid(hidden);
    for (int j = 0; j < hidden; ++j) {
        grad[mw_i][j] += static_cast<float>(d_omu) * r.hid_drop[j];
        grad[vw_i][j] += static_cast<float>(d_ovar) * r.hid_drop[j];
        float d = static_cast<float>(d_omu) * p.mw->data[j] +
                  static_cast<float>(d_ovar) * p.vw->data[j];
        if (dropout_mask) d *= (*dropout_mask)[j];
        dhid[j] = d;
    }
    relu_backward_inplace(r.hid, dhid);

    std::vector<float> dfeat(in, 0.0f);
    for (int j = 0; j < hidden; ++j) {
        const float dj = dhid[j];
        if (dj == 0.0f) continue;
        grad[hb_i][j] += dj;
        const float* row = p.hw->data.data() + static_cast<std::size_t>(j) * in;
        float* grow = grad[hw_i].data() + static_cast<std::size_t>(j) * in;
        for (int c = 0; c < in; ++c) {
            grow[c] += dj * features[c];
            dfeat[c] += dj * row[c];
        }
    }
    return dfeat;
}

// --- image regressor ----------------------------------------------------------

class ImageRegressor final : public Predictor, public detail::TrainableNet {
public:
    ImageRegressor(const ImageNetConfig& cfg, const LabelTransform& tr,
                   std::string model_id, std::uint64_t init_seed)
        : cfg_(cfg), transform_(tr), model_id_(std::move(model_id)) {
        h1_ = kernels::conv_out_dim(cfg.in_h, 2);
        w1_ = kernels::conv_out_dim(cfg.in_w, 2);
        h2_ = kernels::conv_out_dim(h1_, 2);
        w2_ = kernels::conv_out_dim(w1_, 2);
        h3_ = kernels::conv_out_dim(h2_, 2);
        w3_ = kernels::conv_out_dim(w2_, 2);

        params_.push_back(make_tensor("conv1.w", {cfg.c1, 1, 3, 3}));
        params_.push_back(make_tensor("conv1.b", {cfg.c1}));
        params_.push_back(make_tensor("conv2.w", {cfg.c2, cfg.c1, 3, 3}));
        params_.push_back(make_tensor("conv2.b", {cfg.c2}));
        params_.push_back(make_tensor("conv3.w", {cfg.c3, cfg.c2, 3, 3}));
        params_.push_back(make_tensor("conv3.b", {cfg.c3}));
        params_.push_back(make_tensor("hidden.w", {cfg.hidden, cfg.c3}));
        params_.push_back(make_tensor("hidden.b", {cfg.hidden}));
        params_.push_back(make_tensor("mu.w", {1, cfg.hidden}));
        params_.push_back(make_tensor("mu.b", {1}));
        params_.push_back(make_tensor("var.w", {1, cfg.hidden}));
        params_.push_back(make_tensor("var.b", {1}));

        rng::Rng rng(init_seed);
        he_init(params_[0], 9, rng);
        he_init(params_[2], cfg.c1 * 9, rng);
        he_init(params_[4], cfg.c2 * 9, rng);
        he_init(params_[6], cfg.c3, rng);
        he_init(params_[8], cfg.hidden, rng);
        he_init(params_[10], cfg.hidden, rng);
        params_[11].data[0] = static_cast<float>(kVarBiasInit);
    }

    Modality modality() const override { return Modality::image; }
    const LabelTransform& transform() const override { return transform_; }
    const std::string& model_id() const override { return model_id_; }
    std::vector<ParamTensor>& params() override { return params_; }
    const std::vector<ParamTensor>& params() const override { return params_; }
    const ImageNetConfig& config() const { return cfg_; }

    EstimatorOutput predict_frame(const imaging::Frame& frame) const override {
        check_frame(frame.width, frame.height);
        Cache cache;
        return forward(frame.pixels, nullptr, cache);
    }

    int dropout_units() const override { return cfg_.hidden; }

    void check_item(const TrainItem& item) const override {
        if (item.modality != Modality::image)
            throw std::invalid_argument("image model given a non-image item");
        if (item.frame_count != 1)
            throw std::invalid_argument("image item must have exactly one frame");
        check_frame(item.width, item.height);
    }

    double loss_and_grad(const TrainItem& item, const imaging::AugmentParams& aug,
                         const std::vector<float>& dropout_mask, double target_t,
                         detail::GradBuffer& grad) const override {
        imaging::Frame f = apply_augment(detail::item_frame(item, 0), aug);
        Cache cache;
        const EstimatorOutput out = forward(f.pixels, &dropout_mask, cache);
        const double loss = nll_loss(out.mu_t, out.var_t, target_t);
        const NllGrad g = nll_grad(out.mu_t, out.var_t, target_t);
        backward(f.pixels, cache, &dropout_mask, g.dmu, g.dvar, grad);
        return loss;
    }

private:
    struct Cache {
        std::vector<float> a1, a2, a3, gap;
        HeadResult heads;
        EstimatorOutput out;
    };

    void check_frame(int w, int h) const {
        if (w != cfg_.in_w || h != cfg_.in_h)
            throw std::invalid_argument("image input dims do not match the model");
    }

    HeadParams head_params() const {
        return {&params_[6], &params_[7], &params_[8], &params_[9], &params_[10],
                &params_[11]};
    }

    EstimatorOutput forward(const std::vector<float>& x,
                            const std::vector<float>* dropout_mask, Cache& cache) const {
        cache.a1.resize(static_cast<std::size_t>(cfg_.c1) * h1_ * w1_);
        kernels::conv2d_forward(x.data(), 1, cfg_.in_h, cfg_.in_w, params_[0].data.data(),
                                params_[1].data.data(), cfg_.c1, 2, cache.a1.data());
        relu_inplace(cache.a1);
        cache.a2.resize(static_cast<std::size_t>(cfg_.c2) * h2_ * w2_);
        kernels::conv2d_forward(cache.a1.data(), cfg_.c1, h1_, w1_, params_[2].data.data(),
                                params_[3].data.data(), cfg_.c2, 2, cache.a2.data());
        relu_inplace(cache.a2);
        cache.a3.resize(static_cast<std::size_t>(cfg_.c3) * h3_ * w3_);
        kernels::conv2d_forward(cache.a2.data(), cfg_.c2, h2_, w2_, params_[4].data.data(),
                                params_[5].data.data(), cfg_.c3, 2, cache.a3.data());
        relu_inplace(cache.a3);

        const int plane = h3_ * w3_;
        cache.gap.resize(cfg_.c3);
        for (int c = 0; c < cfg_.c3; ++c) {
            float acc = 0.0f;
            const float* p = cache.a3.data() + static_cast<std::size_t>(c) * plane;
            for (int i = 0; i < plane; ++i) acc += p[i];
            cache.gap[c] = acc / static_cast<float>(plane);
        }

        cache.heads = heads_forward(head_params(), cache.gap, dropout_mask);
        cache.out.mu_t = cfg_.sigmoid_scale * sigmoid(cache.heads.o_mu);
        cache.out.var_t = std::max(cache.heads.var_raw, kVarFloor);
        return cache.out;
    }

    void backward(const std::vector<float>& x, const Cache& cache,
                  const std::vector<float>* dropout_mask, double dmu, double dvar,
                  detail::GradBuffer& grad) const {
        const double sig = sigmoid(cache.heads.o_mu);
        const double d_omu = dmu * cfg_.sigmoid_scale * sig * (1.0 - sig);
        const double d_ovar =
            cache.heads.var_raw > kVarFloor ? dvar * sigmoid(cache.heads.o_var) : 0.0;

        std::vector<float> dgap =
            heads_backward(head_params(), cache.heads, cache.gap, dropout_mask, d_omu,
                           d_ovar, grad, 6, 7, 8, 9, 10, 11);

        const int plane = h3_ * w3_;
        std::vector<float> da3(cache.a3.size());
        for (int c = 0; c < cfg_.c3; ++c) {
            const float d = dgap[c] / static_cast<float>(plane);
            float* p = da3.data() + static_cast<std::size_t>(c) * plane;
            for (int i = 0; i < plane; ++i) p[i] = d;
        }
        relu_backward_inplace(cache.a3, da3);
        kernels::conv2d_backward_weights(cache.a2.data(), cfg_.c2, h2_, w2_, da3.data(),
                                         cfg_.c3, 2, grad[4].data(), grad[5].data());

        std::vector<float> da2(cache.a2.size());
        kernels::conv2d_backward_input(params_[4].data.data(), cfg_.c2, h2_, w2_,
                                       da3.data(), cfg_.c3, 2, da2.data());
        relu_backward_inplace(cache.a2, da2);
        kernels::conv2d_backward_weights(cache.a1.data(), cfg_.c1, h1_, w1_, da2.data(),
                                         cfg_.c2, 2, grad[2].data(), grad[3].data());

        std::vector<float> da1(cache.a1.size());
        kernels::conv2d_backward_input(params_[2].data.data(), cfg_.c1, h1_, w1_,
                                       da2.data(), cfg_.c2, 2, da1.data());
        relu_backward_inplace(cache.a1, da1);
        kernels::conv2d_backward_weights(x.data(), 1, cfg_.in_h, cfg_.in_w, da1.data(),
                                         cfg_.c1, 2, grad[0].data(), grad[1].data());
    }

    ImageNetConfig cfg_;
    LabelTransform transform_;
    std::string model_id_;
    int h1_, w1_, h2_, w2_, h3_, w3_;
    std::vector<ParamTensor> params_;
};

// --- video regressor ----------------------------------------------------------

class VideoRegressor final : public Predictor, public detail::TrainableNet {
public:
    VideoRegressor(const VideoNetConfig& cfg, const LabelTransform& tr,
                   std::string model_id, std::uint64_t init_seed)
        : cfg_(cfg), transform_(tr), model_id_(std::move(model_id)) {
        h1_ = kernels::conv_out_dim(cfg.in_h, 2);
        w1_ = kernels::conv_out_dim(cfg.in_w, 2);
        h2_ = kernels::conv_out_dim(h1_, 2);
        w2_ = kernels::conv_out_dim(w1_, 2);

        params_.push_back(make_tensor("conv1.w", {cfg.c1, 1, 3, 3}));
        params_.push_back(make_tensor("conv1.b", {cfg.c1}));
        params_.push_back(make_tensor("conv2.w", {cfg.c2, cfg.c1, 3, 3}));
        params_.push_back(make_tensor("conv2.b", {cfg.c2}));
        params_.push_back(make_tensor("hidden.w", {cfg.hidden, cfg.c2}));
        params_.push_back(make_tensor("hidden.b", {cfg.hidden}));
        params_.push_back(make_tensor("mu.w", {1, cfg.hidden}));
        params_.push_back(make_tensor("mu.b", {1}));
        params_.push_back(make_tensor("var.w", {1, cfg.hidden}));
        params_.push_back(make_tensor("var.b", {1}));

        rng::Rng rng(init_seed);
        he_init(params_[0], 9, rng);
        he_init(params_[2], cfg.c1 * 9, rng);
        he_init(params_[4], cfg.c2, rng);
        he_init(params_[6], cfg.hidden, rng);
        he_init(params_[8], cfg.hidden, rng);
        params_[9].data[0] = static_cast<float>(kVarBiasInit);
    }

    Modality modality() const override { return Modality::video; }
    const LabelTransform& transform() const override { return transform_; }
    const std::string& model_id() const override { return model_id_; }
    std::vector<ParamTensor>& params() override { return params_; }
    const std::vector<ParamTensor>& params() const override { return params_; }
    const VideoNetConfig& config() const { return cfg_; }

    EstimatorOutput predict_clip(const imaging::Clip& clip) const override {
        if (static_cast<int>(clip.frames.size()) != cfg_.clip_len)
            throw std::invalid_argument("clip length does not match the model");
        for (const auto& f : clip.frames) check_frame(f.width, f.height);
        std::vector<std::vector<float>> frames;
        frames.reserve(clip.frames.size());
        for (const auto& f : clip.frames) frames.push_back(f.pixels);
        Cache cache;
        return forward(frames, nullptr, cache);
    }

    int dropout_units() const override { return cfg_.hidden; }

    void check_item(const TrainItem& item) const override {
        if (item.modality != Modality::video)
            throw std::invalid_argument("video model given a non-video item");
        if (item.frame_count != cfg_.clip_len)
            throw std::invalid_argument("video item frame count does not match clip_len");
        check_frame(item.width, item.height);
    }

    double loss_and_grad(const TrainItem& item, const imaging::AugmentParams& aug,
                         const std::vector<float>& dropout_mask, double target_t,
                         detail::GradBuffer& grad) const override {
        std::vector<std::vector<float>> frames(static_cast<std::size_t>(cfg_.clip_len));
        for (int t = 0; t < cfg_.clip_len; ++t)
            frames[t] = apply_augment(detail::item_frame(item, t), aug).pixels;
        Cache cache;
        const EstimatorOutput out = forward(frames, &dropout_mask, cache);
        const double loss = nll_loss(out.mu_t, out.var_t, target_t);
        const NllGrad g = nll_grad(out.mu_t, out.var_t, target_t);
        backward(frames, cache, &dropout_mask, g.dmu, g.dvar, grad);
        return loss;
    }

private:
    struct Cache {
        std::vector<std::vector<float>> a1, a2;  // per frame, post-relu
        std::vector<float> pooled;
        HeadResult heads;
        EstimatorOutput out;
    };

    void check_frame(int w, int h) const {
        if (w != cfg_.in_w || h != cfg_.in_h)
            throw std::invalid_argument("video input dims do not match the model");
    }

    HeadParams head_params() const {
        return {&params_[4], &params_[5], &params_[6], &params_[7], &params_[8],
                &params_[9]};
    }

    EstimatorOutput forward(const std::vector<std::vector<float>>& frames,
                            const std::vector<float>* dropout_mask, Cache& cache) const {
        const int T = static_cast<int>(frames.size());
        const int plane2 = h2_ * w2_;
        cache.a1.resize(T);
        cache.a2.resize(T);
        cache.pooled.assign(cfg_.c2, 0.0f);
        for (int t = 0; t < T; ++t) {
            auto& a1 = cache.a1[t];
            a1.resize(static_cast<std::size_t>(cfg_.c1) * h1_ * w1_);
            kernels::conv2d_forward(frames[t].data(), 1, cfg_.in_h, cfg_.in_w,
                                    params_[0].data.data(), params_[1].data.data(),
                                    cfg_.c1, 2, a1.data());
            relu_inplace(a1);
            auto& a2 = cache.a2[t];
            a2.resize(static_cast<std::size_t>(cfg_.c2) * plane2);
            kernels::conv2d_forward(a1.data(), cfg_.c1, h1_, w1_, params_[2].data.data(),
                                    params_[3].data.data(), cfg_.c2, 2, a2.data());
            relu_inplace(a2);
            for (int c = 0; c < cfg_.c2; ++c) {
                float acc = 0.0f;
                const float* p = a2.data() + static_cast<std::size_t>(c) * plane2;
                for (int i = 0; i < plane2; ++i) acc += p[i];
                cache.pooled[c] += acc / static_cast<float>(plane2);
            }
        }
        for (auto& v : cache.pooled) v /= static_cast<float>(T);

        cache.heads = heads_forward(head_params(), cache.pooled, dropout_mask);
        cache.out.mu_t = cache.heads.o_mu;  // linear output units
        cache.out.var_t = std::max(cache.heads.var_raw, kVarFloor);
        return cache.out;
    }

    void backward(const std::vector<std::vector<float>>& frames, const Cache& cache,
                  const std::vector<float>* dropout_mask, double dmu, double dvar,
                  detail::GradBuffer& grad) const {
        const double d_omu = dmu;
        const double d_ovar =
            cache.heads.var_raw > kVarFloor ? dvar * sigmoid(cache.heads.o_var) : 0.0;

        std::vector<float> dpooled =
            heads_backward(head_params(), cache.heads, cache.pooled, dropout_mask, d_omu,
                           d_ovar, grad, 4, 5, 6, 7, 8, 9);

        const int T = static_cast<int>(frames.size());
        const int plane2 = h2_ * w2_;
        const float inv_t = 1.0f / static_cast<float>(T);
        std::vector<float> da2(static_cast<std::size_t>(cfg_.c2) * plane2);
        std::vector<float> da1(static_cast<std::size_t>(cfg_.c1) * h1_ * w1_);
        for (int t = 0; t < T; ++t) {
            for (int c = 0; c < cfg_.c2; ++c) {
                const float d = dpooled[c] * inv_t / static_cast<float>(plane2);
                float* p = da2.data() + static_cast<std::size_t>(c) * plane2;
                for (int i = 0; i < plane2; ++i) p[i] = d;
            }
            relu_backward_inplace(cache.a2[t], da2);
            kernels::conv2d_backward_weights(cache.a1[t].data(), cfg_.c1, h1_, w1_,
                                             da2.data(), cfg_.c2, 2, grad[2].data(),
                                             grad[3].data());
            kernels::conv2d_backward_input(params_[2].data.data(), cfg_.c1, h1_, w1_,
                                           da2.data(), cfg_.c2, 2, da1.data());
            relu_backward_inplace(cache.a1[t], da1);
            kernels::conv2d_backward_weights(frames[t].data(), 1, cfg_.in_h, cfg_.in_w,
                                             da1.data(), cfg_.c1, 2, grad[0].data(),
                                             grad[1].data());
        }
    }

    VideoNetConfig cfg_;
    LabelTransform transform_;
    std::string model_id_;
    int h1_, w1_, h2_, w2_;
    std::vector<ParamTensor> params_;
};

// --- weight file io -------------------------------------------------------------

void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_f64(std::ostream& out, double v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_str(std::ostream& out, const std::string& s) {
    write_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
double read_f64(std::istream& in) {
    double v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
std::string read_str(std::istream& in) {
    const std::uint32_t n = read_u32(in);
    if (n > (1u << 20)) throw std::runtime_error("weight file: implausible string length");
    std::string s(n, '\0');
    in.read(s.data(), n);
    return s;
}

}  // namespace

namespace detail {

TrainableNet* as_trainable(Predictor& predictor) {
    return dynamic_cast<TrainableNet*>(&predictor);
}

}  // namespace detail

std::unique_ptr<Predictor> make_image_regressor(const ImageNetConfig& cfg,
                                                const LabelTransform& tr,
                                                const std::string& model_id,
                                                std::uint64_t init_seed) {
    return std::make_unique<ImageRegressor>(cfg, tr, model_id, init_seed);
}

std::unique_ptr<Predictor> make_video_regressor(const VideoNetConfig& cfg,
                                                const LabelTransform& tr,
                                                const std::string& model_id,
                                                std::uint64_t init_seed) {
    return std::make_unique<VideoRegressor>(cfg, tr, model_id, init_seed);
}

void save_weights(const std::filesystem::path& path, const Predictor& predictor) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write weights: " + path.string());
    out.write(kWeightMagic, sizeof(kWeightMagic));
    write_u32(out, predictor.modality() == Modality::image ? 0u : 1u);
    write_str(out, predictor.model_id());

    const LabelTransform& tr = predictor.transform();
    write_u32(out, tr.kind == TransformKind::log_affine ? 0u : 1u);
    write_f64(out, tr.multiplier);
    write_f64(out, tr.offset);

    std::vector<std::int32_t> cfg_ints;
    double cfg_extra = 0.0;
    if (predictor.modality() == Modality::image) {
        const auto& cfg = dynamic_cast<const ImageRegressor&>(predictor).config();
        cfg_ints = {cfg.in_w, cfg.in_h, cfg.c1, cfg.c2, cfg.c3, cfg.hidden};
        cfg_extra = cfg.sigmoid_scale;
    } else {
        const auto& cfg = dynamic_cast<const VideoRegressor&>(predictor).config();
        cfg_ints = {cfg.in_w, cfg.in_h, cfg.clip_len, cfg.c1, cfg.c2, cfg.hidden};
    }
    write_u32(out, static_cast<std::uint32_t>(cfg_ints.size()));
    for (auto v : cfg_ints) write_u32(out, static_cast<std::uint32_t>(v));
    write_f64(out, cfg_extra);

    const auto& params = predictor.params();
    write_u32(out, static_cast<std::uint32_t>(params.size()));
    for (const auto& t : params) {
        write_str(out, t.name);
        write_u32(out, static_cast<std::uint32_t>(t.shape.size()));
        for (int d : t.shape) write_u32(out, static_cast<std::uint32_t>(d));
        out.write(reinterpret_cast<const char*>(t.data.data()),
                  static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    }
    if (!out) throw std::runtime_error("short weight write: " + path.string());
}

std::unique_ptr<Predictor> load_weights(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open weights: " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kWeightMagic, sizeof(magic)) != 0)
        throw std::runtime_error("bad weight file magic: " + path.string());

    const std::uint32_t modality = read_u32(in);
    const std::string model_id = read_str(in);
    LabelTransform tr;
    tr.kind = read_u32(in) == 0 ? TransformKind::log_affine : TransformKind::linear;
    tr.multiplier = read_f64(in);
    tr.offset = read_f64(in);

    const std::uint32_t n_cfg = read_u32(in);
    std::vector<std::int32_t> cfg_ints(n_cfg);
    for (auto& v : cfg_ints) v = static_cast<std::int32_t>(read_u32(in));
    const double cfg_extra = read_f64(in);

    std::unique_ptr<Predictor> predictor;
    if (modality == 0) {
        if (cfg_ints.size() != 6) throw std::runtime_error("bad image net config in " + path.string());
        ImageNetConfig cfg;
        cfg.in_w = cfg_ints[0];
        cfg.in_h = cfg_ints[1];
        cfg.c1 = cfg_ints[2];
        cfg.c2 = cfg_ints[3];
        cfg.c3 = cfg_ints[4];
        cfg.hidden = cfg_ints[5];
        cfg.sigmoid_scale = cfg_extra;
        predictor = make_image_regressor(cfg, tr, model_id, 0);
    } else {
        if (cfg_ints.size() != 6) throw std::runtime_error("bad video net config in " + path.string());
        VideoNetConfig cfg;
        cfg.in_w = cfg_ints[0];
        cfg.in_h = cfg_ints[1];
        cfg.clip_len = cfg_ints[2];
        cfg.c1 = cfg_ints[3];
        cfg.c2 = cfg_ints[4];
        cfg.hidden = cfg_ints[5];
        predictor = make_video_regressor(cfg, tr, model_id, 0);
    }

    auto& params = predictor->params();
    const std::uint32_t n_tensors = read_u32(in);
    if (n_tensors != params.size())
        throw std::runtime_error("weight file tensor count mismatch: " + path.string());
    for (auto& t : params) {
        const std::string name = read_str(in);
        if (name != t.name)
            throw std::runtime_error("weight tensor name mismatch: expected " + t.name +
                                     ", got " + name);
        const std::uint32_t ndim = read_u32(in);
        std::vector<int> shape(ndim);
        for (auto& d : shape) d = static_cast<int>(read_u32(in));
        if (shape != t.shape)
            throw std::runtime_error("weight tensor shape mismatch for " + t.name);
        in.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    }
    if (!in) throw std::runtime_error("truncated weight file: " + path.string());
    return predictor;
}

}  // namespace estimator
