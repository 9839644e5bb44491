#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "ga/imaging.hpp"
#include "ga/rng.hpp"

using namespace ga::imaging;

namespace {

Frame disc_frame(int w, int h, double spacing, double radius_px, float fill = 1.0f) {
    Frame f = Frame::filled(w, h, spacing, 0.0f);
    const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double dx = x - cx, dy = y - cy;
            if (dx * dx + dy * dy <= radius_px * radius_px) f.at(y, x) = fill;
        }
    return f;
}

// Radius recovered from total mass; robust to edge antialiasing.
double measured_radius(const Frame& f) {
    double mass = 0.0;
    for (float v : f.pixels) mass += v;
    return std::sqrt(mass / std::numbers::pi);
}

std::filesystem::path temp_dir() {
    auto dir = std::filesystem::temp_directory_path() / "ga_imaging_test";
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("resample preserves constant frames") {
    const Frame f = Frame::filled(50, 40, 0.06, 0.5f);
    const Frame out = resample_to_physical_scale(f, 0.03, 80, 64);
    CHECK(out.width == 80);
    CHECK(out.height == 64);
    CHECK(out.pixel_spacing == 0.03);
    // Interior of the doubled content region must still be 0.5.
    CHECK(out.at(32, 40) == doctest::Approx(0.5));
    CHECK(out.at(20, 20) == doctest::Approx(0.5));
}

TEST_CASE("disc radius doubles when spacing halves") {
    const Frame f = disc_frame(100, 100, 0.06, 10.0);
    const Frame out = resample_to_physical_scale(f, 0.03, 240, 240);
    CHECK(measured_radius(out) == doctest::Approx(20.0).epsilon(0.05));
    CHECK(std::abs(measured_radius(out) - 20.0) <= 1.0);
}

TEST_CASE("padding fills borders with zeros") {
    const Frame f = Frame::filled(100, 100, 0.06, 0.8f);
    const Frame out = resample_to_physical_scale(f, 0.06, 320, 240);
    CHECK(out.at(0, 0) == 0.0f);
    CHECK(out.at(239, 319) == 0.0f);
    CHECK(out.at(5, 5) == 0.0f);
    CHECK(out.at(120, 160) == doctest::Approx(0.8));
}

TEST_CASE("resample is exact identity when scale and dims already match") {
    ga::rng::Rng rng(3);
    Frame f = Frame::filled(33, 21, 0.05, 0.0f);
    for (auto& v : f.pixels) v = static_cast<float>(rng.next_double());
    const Frame out = resample_to_physical_scale(f, 0.05, 33, 21);
    CHECK(out == f);
}

TEST_CASE("scale-correctness property over random radii and spacings") {
    ga::rng::Rng rng(17);
    for (int trial = 0; trial < 25; ++trial) {
        const double r = rng.uniform(5.0, 30.0);
        const double s_in = rng.uniform(0.04, 0.08);
        const double s_out = rng.uniform(0.04, 0.08);
        const double ratio = s_in / s_out;
        const Frame f = disc_frame(100, 100, s_in, r);
        const Frame out = resample_to_physical_scale(
            f, s_out, static_cast<int>(140 * std::max(1.0, ratio)),
            static_cast<int>(140 * std::max(1.0, ratio)));
        CHECK(std::abs(measured_radius(out) - r * ratio) <= 1.0);
    }
}

TEST_CASE("resample rejects bad inputs") {
    const Frame f = Frame::filled(10, 10, 0.06, 0.1f);
    CHECK_THROWS_AS(resample_to_physical_scale(f, 0.0, 10, 10), std::invalid_argument);
    Frame bad = f;
    bad.pixel_spacing = -1.0;
    CHECK_THROWS_AS(resample_to_physical_scale(bad, 0.06, 10, 10), std::invalid_argument);
}

TEST_CASE("temporal subsample keeps indices 0, k, 2k, ...") {
    std::vector<Frame> frames;
    for (int i = 0; i < 10; ++i) frames.push_back(Frame::filled(2, 2, 1.0, i / 10.0f));
    const auto out = temporal_subsample(frames, 2);
    REQUIRE(out.size() == 5);
    for (int i = 0; i < 5; ++i) CHECK(out[i] == frames[2 * i]);

    CHECK(temporal_subsample(frames, 1) == frames);
    const std::vector<Frame> one = {frames[0]};
    CHECK(temporal_subsample(one, 2) == one);
    CHECK_THROWS_AS(temporal_subsample(frames, 0), std::invalid_argument);
}

TEST_CASE("extract_clips enumerates overlapping windows") {
    std::vector<Frame> frames;
    for (int i = 0; i < 48; ++i) frames.push_back(Frame::filled(2, 2, 1.0, i / 48.0f));
    const auto clips = extract_clips(frames, 24, 8);
    REQUIRE(clips.size() == 4);
    const int expected_starts[] = {0, 8, 16, 24};
    for (int i = 0; i < 4; ++i) {
        CHECK(clips[i].start_index == expected_starts[i]);
        CHECK(clips[i].frames.size() == 24);
        CHECK(clips[i].frames.front() == frames[expected_starts[i]]);
    }
}

TEST_CASE("extract_clips boundary cases") {
    std::vector<Frame> frames;
    for (int i = 0; i < 24; ++i) frames.push_back(Frame::filled(2, 2, 1.0, i / 24.0f));
    CHECK(extract_clips(frames, 24, 8).size() == 1);

    frames.resize(20);
    const auto clips = extract_clips(frames, 24, 8);
    REQUIRE(clips.size() == 1);
    REQUIRE(clips[0].frames.size() == 24);
    for (int i = 20; i < 24; ++i) CHECK(clips[0].frames[i] == frames.back());

    CHECK_THROWS_AS(extract_clips({}, 24, 8), std::invalid_argument);
}

TEST_CASE("disabled augmentation is the identity") {
    ga::rng::Rng rng(5);
    Frame f = Frame::filled(16, 12, 1.0, 0.0f);
    for (auto& v : f.pixels) v = static_cast<float>(rng.next_double());
    ga::rng::Rng aug_rng(6);
    const Frame out = augment(f, AugmentConfig::disabled(), aug_rng);
    CHECK(out == f);
}

TEST_CASE("hflip applied twice restores the frame") {
    ga::rng::Rng rng(8);
    Frame f = Frame::filled(15, 9, 1.0, 0.0f);
    for (auto& v : f.pixels) v = static_cast<float>(rng.next_double());
    AugmentParams p;
    p.hflip = true;
    const Frame once = apply_augment(f, p);
    CHECK(once != f);
    CHECK(apply_augment(once, p) == f);
}

TEST_CASE("brightness delta clamps at 1") {
    const Frame f = Frame::filled(8, 8, 1.0, 0.9f);
    AugmentParams p;
    p.brightness_delta = 0.52;
    const Frame out = apply_augment(f, p);
    for (float v : out.pixels) CHECK(v == 1.0f);
}

TEST_CASE("photometric ops keep intensities in [0,1] and draws are seed-stable") {
    ga::rng::Rng rng(21);
    Frame f = Frame::filled(20, 20, 1.0, 0.0f);
    for (auto& v : f.pixels) v = static_cast<float>(rng.next_double());
    AugmentConfig cfg;  // full published ranges
    ga::rng::Rng a(99), b(99);
    const Frame out_a = augment(f, cfg, a);
    const Frame out_b = augment(f, cfg, b);
    CHECK(out_a == out_b);
    for (float v : out_a.pixels) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
}

TEST_CASE("clip augmentation applies one draw to all frames") {
    Frame f1 = Frame::filled(10, 10, 1.0, 0.2f);
    Frame f2 = f1;
    Clip clip{3, {f1, f2}};
    AugmentConfig cfg;
    ga::rng::Rng rng(31);
    const Clip out = augment(clip, cfg, rng);
    CHECK(out.start_index == 3);
    REQUIRE(out.frames.size() == 2);
    CHECK(out.frames[0] == out.frames[1]);  // identical input + shared params
}

TEST_CASE("pgm round-trips 8-bit content") {
    ga::rng::Rng rng(13);
    Frame f = Frame::filled(31, 17, 0.07, 0.0f);
    for (auto& v : f.pixels)
        v = static_cast<float>(rng.below(256)) / 255.0f;  // exactly representable
    const auto path = temp_dir() / "frame.pgm";
    write_pgm(path, f);
    const Frame back = read_pgm(path, 0.07);
    CHECK(back == f);
}

TEST_CASE("media directory round-trips frames, kind and spacing") {
    MediaDir media;
    media.kind = MediaKind::video;
    media.pixel_spacing = 0.123;
    for (int i = 0; i < 3; ++i)
        media.frames.push_back(Frame::filled(6, 4, 0.123, i / 4.0f));
    const auto dir = temp_dir() / "vid0";
    write_media_dir(dir, media);
    const MediaDir back = read_media_dir(dir);
    CHECK(back.kind == MediaKind::video);
    CHECK(back.pixel_spacing == 0.123);
    REQUIRE(back.frames.size() == 3);
    CHECK(back.frames[1].at(0, 0) == doctest::Approx(0.25).epsilon(0.01));
}
