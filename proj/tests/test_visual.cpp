#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "oracles.hpp"
#include "sidelink/error.hpp"
#include "sidelink/visual.hpp"

using namespace sidelink;

namespace {

CameraConfig small_camera() {
    CameraConfig cfg;
    cfg.frame_rate = 30.0;
    cfg.exposure = 0.016;
    cfg.width = 48;
    cfg.height = 36;
    cfg.lookahead = 2;
    return cfg;
}

LevelSequence constant_levels(uint8_t level, size_t slots, double h) {
    LevelSequence seq;
    seq.half_period = h;
    seq.levels.assign(slots, level);
    return seq;
}

}  // namespace

TEST_SUITE("visual") {

TEST_CASE("constant bright level saturates the lit region") {
    Rng rng(1);
    CameraConfig cfg = small_camera();
    VehicleGeometry geom;
    Capture cap = render_capture_simple(constant_levels(1, 10, 1.0 / 30.0), cfg, geom, 0.0, rng);
    PlatePose pose = cap.truth[6];
    LightRegion region = map_pose_to_lights(pose, geom);
    int cx = static_cast<int>(region.cx), cy = static_cast<int>(region.cy);
    // Frames 4..13 carry the waveform (4 lead frames).
    for (int f = 5; f < 13; ++f) {
        CHECK(cap.frames[f].value_at(cx, cy) == doctest::Approx(geom.on_value).epsilon(0.02));
    }
}

TEST_CASE("a transition at the exposure midpoint yields the mean intensity") {
    Rng rng(2);
    CameraConfig cfg = small_camera();
    VehicleGeometry geom;
    LevelSequence seq;
    seq.half_period = 1.0 / 30.0;
    seq.levels = {0, 1, 1, 0};
    Capture cap = render_capture(seq, std::vector<PlatePose>(12, PlatePose{16, 22, 1, 0, 0}),
                                 std::vector<uint8_t>(12, 0), cfg, geom, 0.5, 4, rng);
    LightRegion region = map_pose_to_lights(cap.truth[0], geom);
    int cx = static_cast<int>(region.cx), cy = static_cast<int>(region.cy);
    // The 0->1 transition lands mid-exposure of frame 5 (4 lead + slot 1, phase 0.5).
    double mid = (geom.off_value + geom.on_value) / 2.0;
    CHECK(cap.frames[5].value_at(cx, cy) == doctest::Approx(mid).epsilon(0.02));

    CameraConfig bad = cfg;
    bad.exposure = 1.0;  // longer than the frame period
    CHECK_THROWS_AS(
        render_capture(seq, std::vector<PlatePose>(12, PlatePose{}),
                       std::vector<uint8_t>(12, 0), bad, geom, 0.5, 4, rng),
        Error);
}

TEST_CASE("locate_plate: identity, statistics, occlusion") {
    PlatePose truth{10, 20, 1.5, 0.1, 0.05};
    Rng rng(3);
    PlatePose clean = locate_plate(truth, false, PoseNoise{}, rng);
    CHECK(clean.x == truth.x);
    CHECK(clean.y == truth.y);

    PoseNoise noise;
    noise.sigma_xy = 2.0;
    double sum = 0.0, sum2 = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        PlatePose p = locate_plate(truth, false, noise, rng);
        double d = p.x - truth.x;
        sum += d;
        sum2 += d * d;
    }
    double stddev = std::sqrt(sum2 / n - (sum / n) * (sum / n));
    CHECK(stddev == doctest::Approx(2.0).epsilon(0.05));

    try {
        locate_plate(truth, true, noise, rng);
        FAIL("expected PlateNotVisible");
    } catch (const Error& e) {
        CHECK(e.kind() == Errc::plate_not_visible);
    }
}

TEST_CASE("map_pose_to_lights is the documented affine transform") {
    VehicleGeometry geom;
    geom.light_dx = 6.0;
    geom.light_dy = -3.0;
    geom.light_ax = 5.0;
    geom.light_ay = 3.0;

    SUBCASE("zero offsets center the region on the plate") {
        VehicleGeometry centered = geom;
        centered.light_dx = 0.0;
        centered.light_dy = 0.0;
        LightRegion r = map_pose_to_lights(PlatePose{7, 9, 2, 0.3, 0.2}, centered);
        CHECK(r.cx == doctest::Approx(7.0));
        CHECK(r.cy == doctest::Approx(9.0));
    }

    SUBCASE("pure scale doubling doubles offsets and semi-axes") {
        LightRegion r1 = map_pose_to_lights(PlatePose{0, 0, 1, 0, 0}, geom);
        LightRegion r2 = map_pose_to_lights(PlatePose{0, 0, 2, 0, 0}, geom);
        CHECK(r2.cx == doctest::Approx(2 * r1.cx));
        CHECK(r2.cy == doctest::Approx(2 * r1.cy));
        CHECK(r2.semi_x == doctest::Approx(2 * r1.semi_x));
        CHECK(r2.semi_y == doctest::Approx(2 * r1.semi_y));
        CHECK(r1.sigma == doctest::Approx(0.25 * r1.semi_y));
    }

    SUBCASE("rotation and skew match a direct 2-d affine computation") {
        PlatePose pose{3, -2, 1.7, 0.6, 0.25};
        LightRegion r = map_pose_to_lights(pose, geom);
        double vx = geom.light_dx + pose.zeta * geom.light_dy;
        double vy = geom.light_dy;
        double ex = pose.x + pose.s * (std::cos(pose.theta) * vx - std::sin(pose.theta) * vy);
        double ey = pose.y + pose.s * (std::sin(pose.theta) * vx + std::cos(pose.theta) * vy);
        CHECK(r.cx == doctest::Approx(ex));
        CHECK(r.cy == doctest::Approx(ey));
        CHECK(r.orientation == doctest::Approx(pose.theta));
    }
}

TEST_CASE("value_quantize is hue independent and matches floor division") {
    Frame frame;
    frame.width = 256;
    frame.height = 1;
    frame.rgb.resize(3 * 256);
    for (int x = 0; x < 256; ++x) {
        frame.rgb[3 * x] = static_cast<uint8_t>(x);  // red ramp
        frame.rgb[3 * x + 1] = 0;
        frame.rgb[3 * x + 2] = 0;
    }
    for (int l : {2, 16, 256}) {
        auto q = value_quantize(frame, l);
        for (int x = 0; x < 256; ++x) {
            CHECK(q[x] == std::min(l - 1, x * l / 256));
        }
    }

    Frame red, white;
    red.width = white.width = 1;
    red.height = white.height = 1;
    red.rgb = {255, 0, 0};
    white.rgb = {255, 255, 255};
    CHECK(value_quantize(red, 256)[0] == value_quantize(white, 256)[0]);
}

TEST_CASE("region_statistic matches a brute-force double loop on 16x16") {
    Rng rng(4);
    const int n = 16, levels = 256;
    std::vector<int> gray(n * n);
    for (auto& v : gray) v = static_cast<int>(rng.below(256));

    LightRegion region;
    region.cx = 7.3;
    region.cy = 8.1;
    region.semi_x = 5.0;
    region.semi_y = 3.5;
    region.orientation = 0.4;
    region.sigma = 0.25 * 3.5;

    auto rows = region_statistic(gray, n, n, region, levels);

    // direct recomputation
    double c = std::cos(region.orientation), s = std::sin(region.orientation);
    int y0 = std::max(0, static_cast<int>(std::floor(region.cy - 5.0)));
    int y1 = std::min(n - 1, static_cast<int>(std::ceil(region.cy + 5.0)));
    size_t row_idx = 0;
    for (int y = y0; y <= y1; ++y, ++row_idx) {
        double wsum = 0.0;
        int m = 0;
        for (int x = 0; x < n; ++x) {
            double dx = x - region.cx, dy = y - region.cy;
            double qx = c * dx + s * dy, qy = -s * dx + c * dy;
            if (qx * qx / (5.0 * 5.0) + qy * qy / (3.5 * 3.5) > 1.0) continue;
            double z = (x - region.cx) / region.sigma;
            wsum += gray[y * n + x] *
                    std::exp(-0.5 * z * z) / (region.sigma * std::sqrt(2 * M_PI));
            ++m;
        }
        double expected = m ? wsum / (levels * m) : 0.0;
        CHECK(rows[row_idx] == doctest::Approx(expected).epsilon(1e-9));
    }

    // linearity: doubling pixel values doubles the statistic
    std::vector<int> doubled(gray);
    for (auto& v : doubled) v = std::min(255, v * 2);
    bool clipped = false;
    for (size_t i = 0; i < gray.size(); ++i) clipped = clipped || gray[i] * 2 > 255;
    if (!clipped) {
        auto rows2 = region_statistic(doubled, n, n, region, levels);
        for (size_t i = 0; i < rows.size(); ++i) {
            CHECK(rows2[i] == doctest::Approx(2 * rows[i]).epsilon(1e-9));
        }
    }

    LightRegion outside = region;
    outside.cx = 100;
    outside.cy = 100;
    CHECK_THROWS_AS(region_statistic(gray, n, n, outside, levels), Error);
}

TEST_CASE("correlate_lookahead matches the formula and handles flat rows") {
    Rng rng(5);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 10; ++i) {
        std::vector<double> r;
        for (int j = 0; j < 8; ++j) r.push_back(rng.uniform());
        rows.push_back(r);
    }
    CorrelationSeries series = correlate_lookahead(rows, 2);
    REQUIRE(series.values.size() == 8);
    for (size_t i = 0; i < series.values.size(); ++i) {
        CHECK(series.values[i] ==
              doctest::Approx(oracle::one_minus_pearson(rows[i], rows[i + 2])).epsilon(1e-12));
        CHECK(series.values[i] >= 0.0);
        CHECK(series.values[i] <= 2.0);
    }

    // identical rows -> 0; anti-correlated -> 2
    std::vector<std::vector<double>> same{{1, 2, 3}, {1, 2, 3}};
    CHECK(correlate_lookahead(same, 1).values[0] == doctest::Approx(0.0));
    std::vector<std::vector<double>> anti{{1, 2, 3}, {3, 2, 1}};
    CHECK(correlate_lookahead(anti, 1).values[0] == doctest::Approx(2.0));

    // scale invariance after mean centering
    std::vector<std::vector<double>> scaled = rows;
    for (auto& r : scaled) {
        for (auto& v : r) v *= 3.7;
    }
    CorrelationSeries series2 = correlate_lookahead(scaled, 2);
    for (size_t i = 0; i < series.values.size(); ++i) {
        CHECK(series2.values[i] == doctest::Approx(series.values[i]).epsilon(1e-9));
    }

    // flat-row policy: equal constants 0, anything else 2
    std::vector<std::vector<double>> flats{{5, 5, 5}, {5, 5, 5}, {1, 2, 3}};
    auto flat_series = correlate_lookahead(flats, 1);
    CHECK(flat_series.values[0] == 0.0);
    CHECK(flat_series.values[1] == 2.0);

    CHECK_THROWS_AS(correlate_lookahead(same, 5), Error);
}

TEST_CASE("video pipeline decodes exactly with and without transient frames") {
    VehicleGeometry geom;
    Rng rng(6);
    BitString payload = BitString::random(rng, 176);
    for (double phase : {0.5, 0.0}) {
        CameraConfig cfg = small_camera();
        Rng tx(7);
        Capture cap = visual_send_payload(payload, 1, cfg, geom, phase, tx);
        Rng rx(8);
        CHECK(visual_receive_payload(cap, geom, PoseNoise{}, 176, rx) == payload);
    }
}

TEST_CASE("constant illumination is a decode failure") {
    VehicleGeometry geom;
    Rng rng(9);
    CameraConfig cfg = small_camera();
    // The waveform spans every frame of the capture: no edges anywhere.
    std::vector<PlatePose> track(24, PlatePose{16, 22, 1, 0, 0});
    std::vector<uint8_t> occluded(24, 0);
    Capture cap = render_capture(constant_levels(1, 30, 1.0 / 30.0), track, occluded, cfg, geom,
                                 0.0, 0, rng);
    Rng rx(10);
    try {
        video_preprocess(cap, geom, PoseNoise{}, rx);
        FAIL("expected DecodeFailure");
    } catch (const Error& e) {
        CHECK(e.kind() == Errc::decode_failure);
    }
}

TEST_CASE("recoloring at constant value channel leaves the decode unchanged") {
    VehicleGeometry geom;
    Rng rng(11);
    BitString payload = BitString::random(rng, 32);
    CameraConfig cfg = small_camera();
    Rng tx(12);
    Capture cap = visual_send_payload(payload, 1, cfg, geom, 0.5, tx);
    Rng rx1(13), rx2(13);
    IntervalSeries before = video_preprocess(cap, geom, PoseNoise{}, rx1);

    // permute channels below the max so max(r,g,b) is untouched
    for (Frame& frame : cap.frames) {
        for (size_t p = 0; p < frame.rgb.size(); p += 3) {
            std::swap(frame.rgb[p + 1], frame.rgb[p + 2]);
        }
    }
    IntervalSeries after = video_preprocess(cap, geom, PoseNoise{}, rx2);
    CHECK(before == after);
}

TEST_CASE("capture directory round trip") {
    VehicleGeometry geom;
    Rng rng(14);
    BitString payload = BitString::random(rng, 24);
    CameraConfig cfg = small_camera();
    Rng tx(15);
    Capture cap = visual_send_payload(payload, 1, cfg, geom, 0.5, tx);

    auto dir = std::filesystem::temp_directory_path() / "sidelink_capture_test";
    std::filesystem::remove_all(dir);
    write_capture_dir(dir.string(), cap);
    Capture back = read_capture_dir(dir.string());
    REQUIRE(back.frames.size() == cap.frames.size());
    for (size_t f = 0; f < cap.frames.size(); ++f) {
        for (int y = 0; y < cfg.height; ++y) {
            for (int x = 0; x < cfg.width; ++x) {
                REQUIRE(back.frames[f].value_at(x, y) == cap.frames[f].value_at(x, y));
            }
        }
    }
    Rng rx(16);
    CHECK(visual_receive_payload(back, geom, PoseNoise{}, 24, rx) == payload);
    std::filesystem::remove_all(dir);
}

TEST_CASE("sweep emits one row per configuration") {
    VehicleGeometry geom;
    Rng rng(17);
    BitString payload = BitString::random(rng, 24);
    CameraConfig cfg = small_camera();
    auto rows = sweep_configurations(payload, 1, cfg, geom, 0.5, PoseNoise{},
                                     {0.004, 0.008, 0.012, 0.016}, {1, 2, 4}, {1, 2}, 99);
    CHECK(rows.size() == 4 * 3 * 2);
    // noiseless decode is exact for the canonical configuration
    for (const auto& row : rows) {
        if (row.lookahead == 2 && row.exposure == 0.016 && row.downsample == 1) {
            CHECK(row.mistakes == 0);
        }
    }
}

TEST_CASE("noisy sweep favors lookahead 2") {
    VehicleGeometry geom;
    Rng rng(18);
    BitString payload = BitString::random(rng, 64);
    CameraConfig cfg = small_camera();
    cfg.noise_sigma = 14.0;
    auto rows = sweep_configurations(payload, 2, cfg, geom, 0.5, PoseNoise{},
                                     {0.012, 0.016}, {1, 2, 4}, {1, 2}, 7);
    auto best_for = [&](auto pred) {
        int best = 1 << 20;
        for (const auto& row : rows) {
            if (pred(row)) best = std::min(best, row.mistakes);
        }
        return best;
    };
    int best_a1 = best_for([](const SweepRow& r) { return r.lookahead == 1; });
    int best_a2 = best_for([](const SweepRow& r) { return r.lookahead == 2; });
    int best_a4 = best_for([](const SweepRow& r) { return r.lookahead == 4; });
    CHECK(best_a2 <= best_a1);
    CHECK(best_a2 <= best_a4);
}

TEST_CASE("mistakes vanish as noise does") {
    VehicleGeometry geom;
    Rng rng(19);
    BitString payload = BitString::random(rng, 64);
    int prev = 1 << 20;
    for (double sigma : {18.0, 6.0, 0.0}) {
        CameraConfig cfg = small_camera();
        cfg.noise_sigma = sigma;
        Rng tx(20);  // common random numbers across sigmas
        Capture cap = visual_send_payload(payload, 2, cfg, geom, 0.5, tx);
        Rng pipe(21);
        int mistakes;
        try {
            VideoDecodeResult r = video_analyze(cap, geom, PoseNoise{}, pipe);
            mistakes = transition_mistakes(cap, r);
        } catch (const Error&) {
            mistakes = static_cast<int>(cap.true_transitions.size());
        }
        CHECK(mistakes <= prev);
        prev = mistakes;
    }
    CHECK(prev == 0);
}

}  // TEST_SUITE
