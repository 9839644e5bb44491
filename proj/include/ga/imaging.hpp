#pragma once

// Frame resampling to a fixed physical scale, temporal subsampling, clip
// extraction and training-time augmentation. All operations are pure; the
// augmentation RNG is an explicit parameter.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ga/rng.hpp"

namespace ga::imaging {

// Grayscale image with isotropic physical pixel spacing (cm/pixel).
// Intensities live in [0,1]; files store them as 8-bit PGM.
struct Frame {
    int width = 0;
    int height = 0;
    double pixel_spacing = 0.0;  // cm per pixel
    std::vector<float> pixels;   // row-major, height*width

    float at(int y, int x) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    float& at(int y, int x) { return pixels[static_cast<std::size_t>(y) * width + x]; }

    static Frame filled(int w, int h, double spacing, float value);
    bool operator==(const Frame&) const = default;
};

struct Clip {
    int start_index = 0;        // index of the first frame in the source video
    std::vector<Frame> frames;  // exactly clip_len frames
};

struct ClipConfig {
    int clip_len = 24;
    int temporal_stride = 2;
    int window_stride = 8;
    int video_width = 576;
    int video_height = 432;
    double video_spacing = 0.0333;
    int image_width = 320;
    int image_height = 240;
    double image_spacing = 0.06;
};

struct AugmentConfig {
    bool hflip = true;
    bool crop = true;
    double max_rotation_deg = 45.0;
    double saturation_lo = 0.38, saturation_hi = 1.4;
    double max_brightness_delta = 0.52;
    double contrast_lo = 0.34, contrast_hi = 1.35;
    double max_hue_delta = 0.13;

    static AugmentConfig disabled();
};

// One concrete draw of augmentation parameters. Exposed so tests can apply
// chosen values and so every frame of a clip shares one draw.
struct AugmentParams {
    bool hflip = false;
    double crop_frac = 1.0;  // side fraction kept, [kMinCropFrac, 1]
    double crop_off_x = 0.0, crop_off_y = 0.0;  // in [0,1], position of the crop window
    double rotation_deg = 0.0;
    double saturation = 1.0;
    double contrast = 1.0;
    double brightness_delta = 0.0;
    double hue_delta = 0.0;
};

inline constexpr double kMinCropFrac = 0.8;

// Rescales content by frame.pixel_spacing/target_spacing with bilinear
// interpolation, then center-crops or zero-pads to (target_w, target_h).
// A no-op when spacing and dims already match.
Frame resample_to_physical_scale(const Frame& frame, double target_spacing,
                                 int target_w, int target_h);

// Keeps frames at indices 0, factor, 2*factor, ...
std::vector<Frame> temporal_subsample(const std::vector<Frame>& frames, int factor);

// Clip starts at 0, window_stride, ... while start+clip_len <= n. A video
// shorter than clip_len yields one clip padded by repeating its last frame.
std::vector<Clip> extract_clips(const std::vector<Frame>& frames, int clip_len,
                                int window_stride);

AugmentParams draw_augment_params(const AugmentConfig& cfg, rng::Rng& rng);
Frame apply_augment(const Frame& frame, const AugmentParams& params);
Frame augment(const Frame& frame, const AugmentConfig& cfg, rng::Rng& rng);
// All frames of the clip receive the same parameter draw.
Clip augment(const Clip& clip, const AugmentConfig& cfg, rng::Rng& rng);

// --- file formats -----------------------------------------------------------

// Binary PGM (P5), maxval 255. Spacing is not stored in the PGM itself;
// the media index carries it.
void write_pgm(const std::filesystem::path& path, const Frame& frame);
Frame read_pgm(const std::filesystem::path& path, double pixel_spacing);

enum class MediaKind { image, video };

std::string to_string(MediaKind kind);
MediaKind media_kind_from_string(const std::string& s);

// A media item on disk: a directory holding PGM frames plus index.json
// listing frame order, pixel spacing (cm/pixel) and frame count. Still
// images use the same layout with frame_count = 1.
struct MediaDir {
    MediaKind kind = MediaKind::image;
    double pixel_spacing = 0.0;
    std::vector<Frame> frames;
};

void write_media_dir(const std::filesystem::path& dir, const MediaDir& media);
MediaDir read_media_dir(const std::filesystem::path& dir);

}  // namespace ga::imaging
