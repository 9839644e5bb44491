#include "ga/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "ga/kernels.hpp"

namespace ga::imaging {

namespace {

void require_valid(const Frame& frame) {
    if (frame.width <= 0 || frame.height <= 0)
        throw std::invalid_argument("frame has non-positive dimensions");
    if (!(frame.pixel_spacing > 0.0))
        throw std::invalid_argument("frame pixel_spacing must be > 0");
    if (frame.pixels.size() !=
        static_cast<std::size_t>(frame.width) * frame.height)
        throw std::invalid_argument("frame pixel count does not match dims");
}

Frame resize_bilinear(const Frame& in, int ow, int oh) {
    Frame out;
    out.width = ow;
    out.height = oh;
    out.pixel_spacing = in.pixel_spacing;
    out.pixels.resize(static_cast<std::size_t>(ow) * oh);
    kernels::bilinear_resize(in.pixels.data(), in.width, in.height,
                             out.pixels.data(), ow, oh);
    return out;
}

// Symmetric center placement; remainders go to the bottom/right side.
Frame center_crop_or_pad(const Frame& in, int tw, int th) {
    Frame out;
    out.width = tw;
    out.height = th;
    out.pixel_spacing = in.pixel_spacing;
    out.pixels.assign(static_cast<std::size_t>(tw) * th, 0.0f);
    const int off_x = (tw - in.width) / 2;
    const int off_y = (th - in.height) / 2;
    for (int y = 0; y < th; ++y) {
        const int sy = y - off_y;
        if (sy < 0 || sy >= in.height) continue;
        for (int x = 0; x < tw; ++x) {
            const int sx = x - off_x;
            if (sx < 0 || sx >= in.width) continue;
            out.at(y, x) = in.at(sy, sx);
        }
    }
    return out;
}

Frame rotate_about_center(const Frame& in, double degrees) {
    if (degrees == 0.0) return in;
    const double rad = degrees * std::numbers::pi / 180.0;
    const double c = std::cos(rad), s = std::sin(rad);
    const double cx = (in.width - 1) / 2.0, cy = (in.height - 1) / 2.0;
    Frame out = in;
    for (int y = 0; y < in.height; ++y) {
        for (int x = 0; x < in.width; ++x) {
            // Inverse-rotate the output coordinate into the source frame.
            const double dx = x - cx, dy = y - cy;
            const double sxf = c * dx + s * dy + cx;
            const double syf = -s * dx + c * dy + cy;
            float v = 0.0f;
            if (sxf >= 0.0 && sxf <= in.width - 1 && syf >= 0.0 &&
                syf <= in.height - 1) {
                const int x0 = static_cast<int>(sxf);
                const int y0 = static_cast<int>(syf);
                const int x1 = std::min(x0 + 1, in.width - 1);
                const int y1 = std::min(y0 + 1, in.height - 1);
                const float wx = static_cast<float>(sxf - x0);
                const float wy = static_cast<float>(syf - y0);
                const float top = in.at(y0, x0) + (in.at(y0, x1) - in.at(y0, x0)) * wx;
                const float bot = in.at(y1, x0) + (in.at(y1, x1) - in.at(y1, x0)) * wx;
                v = top + (bot - top) * wy;
            }
            out.at(y, x) = v;
        }
    }
    return out;
}

}  // namespace

Frame Frame::filled(int w, int h, double spacing, float value) {
    Frame f;
    f.width = w;
    f.height = h;
    f.pixel_spacing = spacing;
    f.pixels.assign(static_cast<std::size_t>(w) * h, value);
    return f;
}

AugmentConfig AugmentConfig::disabled() {
    AugmentConfig c;
    c.hflip = false;
    c.crop = false;
    c.max_rotation_deg = 0.0;
    c.saturation_lo = c.saturation_hi = 1.0;
    c.max_brightness_delta = 0.0;
    c.contrast_lo = c.contrast_hi = 1.0;
    c.max_hue_delta = 0.0;
    return c;
}

Frame resample_to_physical_scale(const Frame& frame, double target_spacing,
                                 int target_w, int target_h) {
    require_valid(frame);
    if (!(target_spacing > 0.0))
        throw std::invalid_argument("target_spacing must be > 0");
    if (target_w <= 0 || target_h <= 0)
        throw std::invalid_argument("target dims must be positive");

    const double factor = frame.pixel_spacing / target_spacing;
    const int scaled_w = std::max<int>(1, static_cast<int>(std::llround(frame.width * factor)));
    const int scaled_h = std::max<int>(1, static_cast<int>(std::llround(frame.height * factor)));

    Frame scaled = (scaled_w == frame.width && scaled_h == frame.height)
                       ? frame
                       : resize_bilinear(frame, scaled_w, scaled_h);
    Frame out = (scaled_w == target_w && scaled_h == target_h)
                    ? std::move(scaled)
                    : center_crop_or_pad(scaled, target_w, target_h);
    out.pixel_spacing = target_spacing;
    return out;
}

std::vector<Frame> temporal_subsample(const std::vector<Frame>& frames, int factor) {
    if (factor < 1) throw std::invalid_argument("subsample factor must be >= 1");
    std::vector<Frame> out;
    for (std::size_t i = 0; i < frames.size(); i += static_cast<std::size_t>(factor))
        out.push_back(frames[i]);
    return out;
}

std::vector<Clip> extract_clips(const std::vector<Frame>& frames, int clip_len,
                                int window_stride) {
    if (frames.empty()) throw std::invalid_argument("extract_clips: no frames");
    if (clip_len < 1) throw std::invalid_argument("clip_len must be >= 1");
    if (window_stride < 1) throw std::invalid_argument("window_stride must be >= 1");

    const int n = static_cast<int>(frames.size());
    std::vector<Clip> clips;
    if (n < clip_len) {
        Clip clip;
        clip.start_index = 0;
        clip.frames = frames;
        while (static_cast<int>(clip.frames.size()) < clip_len)
            clip.frames.push_back(frames.back());
        clips.push_back(std::move(clip));
        return clips;
    }
    for (int start = 0; start + clip_len <= n; start += window_stride) {
        Clip clip;
        clip.start_index = start;
        clip.frames.assign(frames.begin() + start, frames.begin() + start + clip_len);
        clips.push_back(std::move(clip));
    }
    return clips;
}

AugmentParams draw_augment_params(const AugmentConfig& cfg, rng::Rng& rng) {
    AugmentParams p;
    if (cfg.hflip) p.hflip = rng.next_double() < 0.5;
    if (cfg.crop) {
        p.crop_frac = rng.uniform(kMinCropFrac, 1.0);
        p.crop_off_x = rng.next_double();
        p.crop_off_y = rng.next_double();
    }
    p.rotation_deg = rng.uniform(-cfg.max_rotation_deg, cfg.max_rotation_deg);
    p.saturation = rng.uniform(cfg.saturation_lo, cfg.saturation_hi);
    p.contrast = rng.uniform(cfg.contrast_lo, cfg.contrast_hi);
    p.brightness_delta = rng.uniform(-cfg.max_brightness_delta, cfg.max_brightness_delta);
    p.hue_delta = rng.uniform(-cfg.max_hue_delta, cfg.max_hue_delta);
    return p;
}

Frame apply_augment(const Frame& frame, const AugmentParams& params) {
    require_valid(frame);
    Frame f = frame;

    if (params.hflip) {
        for (int y = 0; y < f.height; ++y)
            for (int x = 0; x < f.width / 2; ++x)
                std::swap(f.at(y, x), f.at(y, f.width - 1 - x));
    }

    if (params.crop_frac < 1.0) {
        const int cw = std::max<int>(1, static_cast<int>(std::llround(f.width * params.crop_frac)));
        const int ch = std::max<int>(1, static_cast<int>(std::llround(f.height * params.crop_frac)));
        if (cw != f.width || ch != f.height) {
            const int x0 = static_cast<int>(std::llround((f.width - cw) * params.crop_off_x));
            const int y0 = static_cast<int>(std::llround((f.height - ch) * params.crop_off_y));
            Frame cropped;
            cropped.width = cw;
            cropped.height = ch;
            cropped.pixel_spacing = f.pixel_spacing;
            cropped.pixels.resize(static_cast<std::size_t>(cw) * ch);
            for (int y = 0; y < ch; ++y)
                for (int x = 0; x < cw; ++x)
                    cropped.at(y, x) = f.at(y0 + y, x0 + x);
            f = resize_bilinear(cropped, f.width, f.height);
        }
    }

    f = rotate_about_center(f, params.rotation_deg);

    // Photometric ops act on the gray value replicated to three channels.
    // With all channels equal, saturation scaling (toward luminance) and hue
    // rotation return the input, so only contrast and brightness remain.
    // Identity parameters skip the affine pass so no-op augmentation is
    // bit-exact.
    if (params.contrast != 1.0 || params.brightness_delta != 0.0) {
        double mean = 0.0;
        for (float v : f.pixels) mean += v;
        mean /= static_cast<double>(f.pixels.size());
        const float m = static_cast<float>(mean);
        const float contrast = static_cast<float>(params.contrast);
        const float delta = static_cast<float>(params.brightness_delta);
        for (float& v : f.pixels) {
            v = (v - m) * contrast + m + delta;
            v = std::clamp(v, 0.0f, 1.0f);
        }
    }
    return f;
}

Frame augment(const Frame& frame, const AugmentConfig& cfg, rng::Rng& rng) {
    return apply_augment(frame, draw_augment_params(cfg, rng));
}

Clip augment(const Clip& clip, const AugmentConfig& cfg, rng::Rng& rng) {
    const AugmentParams params = draw_augment_params(cfg, rng);
    Clip out;
    out.start_index = clip.start_index;
    out.frames.reserve(clip.frames.size());
    for (const Frame& f : clip.frames) out.frames.push_back(apply_augment(f, params));
    return out;
}

void write_pgm(const std::filesystem::path& path, const Frame& frame) {
    require_valid(frame);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write PGM: " + path.string());
    out << "P5\n" << frame.width << " " << frame.height << "\n255\n";
    std::vector<unsigned char> bytes(frame.pixels.size());
    for (std::size_t i = 0; i < frame.pixels.size(); ++i) {
        const float v = std::clamp(frame.pixels[i], 0.0f, 1.0f);
        bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short PGM write: " + path.string());
}

Frame read_pgm(const std::filesystem::path& path, double pixel_spacing) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open PGM: " + path.string());

    auto next_token = [&in, &path]() {
        std::string tok;
        while (true) {
            int c = in.get();
            if (c == EOF) throw std::runtime_error("truncated PGM header: " + path.string());
            if (c == '#') {
                while (c != EOF && c != '\n') c = in.get();
                continue;
            }
            if (std::isspace(c)) {
                if (!tok.empty()) return tok;
                continue;
            }
            tok += static_cast<char>(c);
        }
    };

    if (next_token() != "P5") throw std::runtime_error("not a binary PGM: " + path.string());
    const int w = std::stoi(next_token());
    const int h = std::stoi(next_token());
    const int maxval = std::stoi(next_token());
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255)
        throw std::runtime_error("unsupported PGM header: " + path.string());

    std::vector<unsigned char> bytes(static_cast<std::size_t>(w) * h);
    in.read(reinterpret_cast<char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
        throw std::runtime_error("truncated PGM data: " + path.string());

    Frame f;
    f.width = w;
    f.height = h;
    f.pixel_spacing = pixel_spacing;
    f.pixels.resize(bytes.size());
    const float maxf = static_cast<float>(maxval);
    for (std::size_t i = 0; i < bytes.size(); ++i) f.pixels[i] = bytes[i] / maxf;
    return f;
}

std::string to_string(MediaKind kind) {
    return kind == MediaKind::video ? "video" : "image";
}

MediaKind media_kind_from_string(const std::string& s) {
    if (s == "video") return MediaKind::video;
    if (s == "image") return MediaKind::image;
    throw std::runtime_error("unknown media kind: " + s);
}

void write_media_dir(const std::filesystem::path& dir, const MediaDir& media) {
    if (media.frames.empty()) throw std::invalid_argument("media has no frames");
    std::filesystem::create_directories(dir);

    nlohmann::ordered_json index;
    index["kind"] = to_string(media.kind);
    index["pixel_spacing_cm"] = media.pixel_spacing;
    index["frame_count"] = media.frames.size();
    auto& names = index["frames"] = nlohmann::ordered_json::array();
    char buf[32];
    for (std::size_t i = 0; i < media.frames.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "frame_%04zu.pgm", i);
        names.push_back(buf);
        write_pgm(dir / buf, media.frames[i]);
    }
    std::ofstream out(dir / "index.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write media index in " + dir.string());
    out << index.dump(2) << "\n";
}

MediaDir read_media_dir(const std::filesystem::path& dir) {
    const auto index_path = dir / "index.json";
    std::ifstream in(index_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open media index: " + index_path.string());
    nlohmann::json index;
    try {
        in >> index;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("bad media index " + index_path.string() + ": " + e.what());
    }

    MediaDir media;
    media.kind = media_kind_from_string(index.at("kind").get<std::string>());
    media.pixel_spacing = index.at("pixel_spacing_cm").get<double>();
    if (!(media.pixel_spacing > 0.0))
        throw std::runtime_error("non-positive pixel spacing in " + index_path.string());
    const auto names = index.at("frames").get<std::vector<std::string>>();
    if (names.size() != index.at("frame_count").get<std::size_t>())
        throw std::runtime_error("frame_count mismatch in " + index_path.string());
    media.frames.reserve(names.size());
    for (const auto& name : names)
        media.frames.push_back(read_pgm(dir / name, media.pixel_spacing));
    return media;
}

}  // namespace ga::imaging
