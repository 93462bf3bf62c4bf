#include "sidelink/visual.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "sidelink/error.hpp"

namespace sidelink {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Mean waveform level over [t0, t1], idle outside the transmitted slots.
// Walks slot indices so floating-point boundary rounding cannot stall it.
double level_average(const LevelSequence& levels, double tx_start, double t0, double t1) {
    const double h = levels.half_period;
    const size_t n = levels.levels.size();
    auto k = static_cast<long long>(std::floor((t0 - tx_start) / h)) - 1;
    double acc = 0.0;
    for (;; ++k) {
        double seg_start = tx_start + k * h;
        double seg_end = seg_start + h;
        double lo = std::max(t0, seg_start);
        double hi = std::min(t1, seg_end);
        if (hi > lo) {
            uint8_t level = (k >= 0 && k < static_cast<long long>(n))
                                ? levels.levels[static_cast<size_t>(k)]
                                : kIdleLevel;
            acc += level * (hi - lo);
        }
        if (seg_end >= t1) break;
    }
    return acc / (t1 - t0);
}

struct EllipseTest {
    double cx, cy, cos_t, sin_t, inv_a2, inv_b2;

    EllipseTest(double cx_, double cy_, double a, double b, double theta)
        : cx(cx_), cy(cy_), cos_t(std::cos(theta)), sin_t(std::sin(theta)),
          inv_a2(1.0 / (a * a)), inv_b2(1.0 / (b * b)) {}

    bool contains(double px, double py) const {
        double dx = px - cx, dy = py - cy;
        double qx = cos_t * dx + sin_t * dy;
        double qy = -sin_t * dx + cos_t * dy;
        return qx * qx * inv_a2 + qy * qy * inv_b2 <= 1.0;
    }
};

uint8_t clamp_u8(double v) {
    return static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
}

double quantile(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    double pos = q * (values.size() - 1);
    size_t i = static_cast<size_t>(pos);
    if (i + 1 >= values.size()) return values.back();
    double frac = pos - i;
    return values[i] * (1.0 - frac) + values[i + 1] * frac;
}

int levenshtein(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
    for (size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
    for (size_t i = 1; i <= a.size(); ++i) {
        cur[0] = static_cast<int>(i);
        for (size_t j = 1; j <= b.size(); ++j) {
            int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

}  // namespace

Capture render_capture(const LevelSequence& levels, const std::vector<PlatePose>& pose_track,
                       const std::vector<uint8_t>& occluded, const CameraConfig& cfg,
                       const VehicleGeometry& geometry, double phase, int lead_frames, Rng& rng) {
    const double period = 1.0 / cfg.frame_rate;
    if (cfg.exposure <= 0.0 || cfg.exposure > period) {
        fail(Errc::config_error, "exposure window exceeds the frame period");
    }
    if (cfg.levels < 2) fail(Errc::config_error, "need at least two quantization levels");
    if (pose_track.size() != occluded.size()) {
        fail(Errc::config_error, "pose track and occlusion track lengths differ");
    }

    Capture cap;
    cap.cfg = cfg;
    cap.truth = pose_track;
    cap.occluded = occluded;
    cap.half_period = levels.half_period;
    cap.phase = phase;
    cap.lead_frames = lead_frames;

    const double tx_start = (lead_frames + phase) * period;
    {
        uint8_t prev = kIdleLevel;
        for (size_t k = 0; k <= levels.levels.size(); ++k) {
            uint8_t cur = k < levels.levels.size() ? levels.levels[k] : kIdleLevel;
            if (cur != prev) {
                cap.true_transitions.push_back((tx_start + k * levels.half_period) *
                                               cfg.frame_rate);
                prev = cur;
            }
        }
    }

    const size_t n_frames = pose_track.size();
    cap.frames.resize(n_frames);
    const double swing = geometry.on_value - geometry.off_value;
    for (size_t f = 0; f < n_frames; ++f) {
        Frame& frame = cap.frames[f];
        frame.width = cfg.width;
        frame.height = cfg.height;
        frame.index = static_cast<int>(f);
        frame.timestamp = f * period;
        frame.rgb.resize(static_cast<size_t>(3) * cfg.width * cfg.height);

        double w0 = f * period + (period - cfg.exposure) / 2.0;
        double w1 = w0 + cfg.exposure;
        double lamp = geometry.off_value + swing * level_average(levels, tx_start, w0, w1);

        LightRegion region = map_pose_to_lights(pose_track[f], geometry);
        EllipseTest outer(region.cx, region.cy, region.semi_x, region.semi_y,
                          region.orientation);
        EllipseTest lit(region.cx, region.cy, region.semi_x * geometry.lit_fraction,
                        region.semi_y * geometry.lit_fraction, region.orientation);

        auto paint = [&](int x, int y, double value) {
            if (cfg.noise_sigma > 0.0) value += rng.normal(0.0, cfg.noise_sigma);
            uint8_t* p = &frame.rgb[3 * (static_cast<size_t>(y) * cfg.width + x)];
            p[0] = clamp_u8(value * geometry.hue_r);
            p[1] = clamp_u8(value * geometry.hue_g);
            p[2] = clamp_u8(value * geometry.hue_b);
        };

        if (cfg.noise_sigma > 0.0) {
            // Noise covers the whole frame; paint every pixel. The backdrop
            // is neutral gray, the lamp carries the configured hue.
            for (int y = 0; y < cfg.height; ++y) {
                for (int x = 0; x < cfg.width; ++x) {
                    if (outer.contains(x, y)) {
                        paint(x, y, lit.contains(x, y) ? lamp : geometry.off_value);
                    } else {
                        double v = geometry.backdrop + rng.normal(0.0, cfg.noise_sigma);
                        uint8_t g = clamp_u8(v);
                        uint8_t* p = &frame.rgb[3 * (static_cast<size_t>(y) * cfg.width + x)];
                        p[0] = p[1] = p[2] = g;
                    }
                }
            }
        } else {
            // Constant gray backdrop; only the region bounding box needs work.
            std::fill(frame.rgb.begin(), frame.rgb.end(), clamp_u8(geometry.backdrop));
            double reach = std::max(region.semi_x, region.semi_y);
            int y0 = std::max(0, static_cast<int>(std::floor(region.cy - reach)));
            int y1 = std::min(cfg.height - 1, static_cast<int>(std::ceil(region.cy + reach)));
            int x0 = std::max(0, static_cast<int>(std::floor(region.cx - reach)));
            int x1 = std::min(cfg.width - 1, static_cast<int>(std::ceil(region.cx + reach)));
            for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                    if (!outer.contains(x, y)) continue;
                    paint(x, y, lit.contains(x, y) ? lamp : geometry.off_value);
                }
            }
        }
    }
    return cap;
}

Capture render_capture_simple(const LevelSequence& levels, const CameraConfig& cfg,
                              const VehicleGeometry& geometry, double phase, Rng& rng) {
    const double period = 1.0 / cfg.frame_rate;
    const int lead = 4;
    int body = static_cast<int>(
        std::ceil(levels.levels.size() * levels.half_period / period + phase));
    int tail = std::max(4, cfg.lookahead + 2);
    size_t n = static_cast<size_t>(lead + body + tail);
    PlatePose pose{cfg.width * 0.35, cfg.height * 0.62, 1.0, 0.0, 0.0};
    std::vector<PlatePose> track(n, pose);
    std::vector<uint8_t> occluded(n, 0);
    return render_capture(levels, track, occluded, cfg, geometry, phase, lead, rng);
}

PlatePose locate_plate(const PlatePose& ground_truth, bool occluded, const PoseNoise& noise,
                       Rng& rng) {
    if (occluded) fail(Errc::plate_not_visible, "plate occluded in frame");
    PlatePose pose = ground_truth;
    if (noise.sigma_xy > 0.0) {
        pose.x += rng.normal(0.0, noise.sigma_xy);
        pose.y += rng.normal(0.0, noise.sigma_xy);
    }
    if (noise.sigma_s > 0.0) pose.s = std::max(1e-6, pose.s + rng.normal(0.0, noise.sigma_s));
    if (noise.sigma_theta > 0.0) pose.theta += rng.normal(0.0, noise.sigma_theta);
    if (noise.sigma_zeta > 0.0) pose.zeta += rng.normal(0.0, noise.sigma_zeta);
    return pose;
}

LightRegion map_pose_to_lights(const PlatePose& pose, const VehicleGeometry& geometry) {
    // Skew, then rotate, then scale the plate->light offset.
    double vx = geometry.light_dx + pose.zeta * geometry.light_dy;
    double vy = geometry.light_dy;
    double c = std::cos(pose.theta), s = std::sin(pose.theta);
    LightRegion region;
    region.cx = pose.x + pose.s * (c * vx - s * vy);
    region.cy = pose.y + pose.s * (s * vx + c * vy);
    region.semi_x = pose.s * geometry.light_ax;
    region.semi_y = pose.s * geometry.light_ay;
    region.orientation = pose.theta;
    region.sigma = 0.25 * std::min(region.semi_x, region.semi_y);
    return region;
}

std::vector<int> value_quantize(const Frame& frame, int levels) {
    if (levels < 2) fail(Errc::config_error, "need at least two quantization levels");
    std::vector<int> out(static_cast<size_t>(frame.width) * frame.height);
    for (int y = 0; y < frame.height; ++y) {
        for (int x = 0; x < frame.width; ++x) {
            int v = frame.value_at(x, y);
            out[static_cast<size_t>(y) * frame.width + x] =
                std::min(levels - 1, v * levels / 256);
        }
    }
    return out;
}

namespace {

// Pixel weights of a region over its clamped bounding box, reusable across
// frames while the region stays put.
struct RegionWeights {
    bool valid = false;
    LightRegion key;
    int width = 0, height = 0;
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    std::vector<double> weight;  // 0 outside the ellipse

    static bool same(const LightRegion& a, const LightRegion& b) {
        return a.cx == b.cx && a.cy == b.cy && a.semi_x == b.semi_x && a.semi_y == b.semi_y &&
               a.orientation == b.orientation && a.sigma == b.sigma;
    }

    void build(int w, int h, const LightRegion& region) {
        key = region;
        width = w;
        height = h;
        EllipseTest inside(region.cx, region.cy, region.semi_x, region.semi_y,
                           region.orientation);
        double reach = std::max(region.semi_x, region.semi_y);
        y0 = std::max(0, static_cast<int>(std::floor(region.cy - reach)));
        y1 = std::min(h - 1, static_cast<int>(std::ceil(region.cy + reach)));
        x0 = std::max(0, static_cast<int>(std::floor(region.cx - reach)));
        x1 = std::min(w - 1, static_cast<int>(std::ceil(region.cx + reach)));
        if (y0 > y1 || x0 > x1) fail(Errc::empty_region, "light region outside the frame");
        const double norm = 1.0 / (region.sigma * std::sqrt(kTwoPi));
        weight.assign(static_cast<size_t>(y1 - y0 + 1) * (x1 - x0 + 1), 0.0);
        size_t total = 0;
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                if (!inside.contains(x, y)) continue;
                double z = (x - region.cx) / region.sigma;
                weight[static_cast<size_t>(y - y0) * (x1 - x0 + 1) + (x - x0)] =
                    norm * std::exp(-0.5 * z * z);
                ++total;
            }
        }
        if (total == 0) fail(Errc::empty_region, "light region covers no pixels");
        valid = true;
    }

    std::vector<double> apply(const std::vector<int>& gray, int levels) const {
        std::vector<double> rows;
        rows.reserve(static_cast<size_t>(y1 - y0 + 1));
        const int bw = x1 - x0 + 1;
        for (int y = y0; y <= y1; ++y) {
            double wsum = 0.0;
            int m = 0;
            const double* wrow = &weight[static_cast<size_t>(y - y0) * bw];
            const int* grow = &gray[static_cast<size_t>(y) * width + x0];
            for (int x = 0; x < bw; ++x) {
                if (wrow[x] == 0.0) continue;
                wsum += grow[x] * wrow[x];
                ++m;
            }
            rows.push_back(m > 0 ? wsum / (static_cast<double>(levels) * m) : 0.0);
        }
        return rows;
    }
};

}  // namespace

std::vector<double> region_statistic(const std::vector<int>& gray, int width, int height,
                                     const LightRegion& region, int levels) {
    RegionWeights weights;
    weights.build(width, height, region);
    return weights.apply(gray, levels);
}

CorrelationSeries correlate_lookahead(const std::vector<std::vector<double>>& rows,
                                      int lookahead) {
    if (lookahead < 1) fail(Errc::config_error, "lookahead must be at least 1");
    if (rows.size() < static_cast<size_t>(lookahead) + 1) {
        fail(Errc::config_error, "need at least lookahead+1 frames");
    }
    CorrelationSeries series;
    series.lookahead = lookahead;
    series.values.reserve(rows.size() - lookahead);
    for (size_t i = 0; i + lookahead < rows.size(); ++i) {
        const auto& x = rows[i];
        const auto& y = rows[i + lookahead];
        size_t len = std::min(x.size(), y.size());
        double mx = 0.0, my = 0.0;
        for (size_t j = 0; j < len; ++j) {
            mx += x[j];
            my += y[j];
        }
        mx /= len;
        my /= len;
        double sxy = 0.0, sxx = 0.0, syy = 0.0, max_diff = 0.0;
        for (size_t j = 0; j < len; ++j) {
            double dx = x[j] - mx, dy = y[j] - my;
            sxy += dx * dy;
            sxx += dx * dx;
            syy += dy * dy;
            max_diff = std::max(max_diff, std::abs(x[j] - y[j]));
        }
        if (sxx < 1e-24 || syy < 1e-24) {
            // Constant rows carry no transition evidence of their own:
            // equal-constant pairs count as identical, anything else as
            // maximally different.
            series.values.push_back(max_diff < 1e-12 ? 0.0 : 2.0);
        } else {
            series.values.push_back(1.0 - sxy / (std::sqrt(sxx) * std::sqrt(syy)));
        }
    }
    return series;
}

VideoDecodeResult video_analyze(const Capture& capture, const VehicleGeometry& geometry,
                                const PoseNoise& pose_noise, Rng& rng) {
    const CameraConfig& cfg = capture.cfg;
    const size_t n = capture.frames.size();
    if (n < static_cast<size_t>(2 * cfg.lookahead)) {
        fail(Errc::config_error, "need at least 2*lookahead frames");
    }
    const int ds = std::max(1, cfg.downsample);
    const int dw = cfg.width / ds, dh = cfg.height / ds;

    VideoDecodeResult result;
    result.brightness.reserve(n);
    std::vector<std::vector<double>> rows;
    rows.reserve(n);
    std::vector<int> gray(static_cast<size_t>(dw) * dh);
    RegionWeights weights;  // rebuilt only when the located region moves

    for (size_t f = 0; f < n; ++f) {
        PlatePose pose =
            locate_plate(capture.truth[f], capture.occluded[f] != 0, pose_noise, rng);
        LightRegion region = map_pose_to_lights(pose, geometry);
        if (ds > 1) {
            region.cx /= ds;
            region.cy /= ds;
            region.semi_x /= ds;
            region.semi_y /= ds;
            region.sigma = std::max(0.5, region.sigma / ds);
        }

        const Frame& frame = capture.frames[f];
        if (ds == 1) {
            for (int y = 0; y < dh; ++y) {
                for (int x = 0; x < dw; ++x) {
                    int v = frame.value_at(x, y);
                    gray[static_cast<size_t>(y) * dw + x] =
                        cfg.levels == 256 ? v : std::min(cfg.levels - 1, v * cfg.levels / 256);
                }
            }
        } else {
            // Block-average the value channel before quantizing; averaging
            // is what makes high downsample ratios noise-robust.
            for (int y = 0; y < dh; ++y) {
                for (int x = 0; x < dw; ++x) {
                    double acc = 0.0;
                    for (int yy = 0; yy < ds; ++yy) {
                        for (int xx = 0; xx < ds; ++xx) {
                            acc += frame.value_at(x * ds + xx, y * ds + yy);
                        }
                    }
                    double v = acc / (ds * ds);
                    gray[static_cast<size_t>(y) * dw + x] =
                        std::min(cfg.levels - 1, static_cast<int>(v * cfg.levels / 256.0));
                }
            }
        }

        if (!weights.valid || !RegionWeights::same(weights.key, region)) {
            weights.build(dw, dh, region);
        }
        std::vector<double> stat = weights.apply(gray, cfg.levels);
        double sum = 0.0;
        for (double v : stat) sum += v;
        result.brightness.push_back(sum);
        rows.push_back(std::move(stat));
    }

    result.correlation = correlate_lookahead(rows, cfg.lookahead);

    // Binarized correlation: evidence that frames a apart differ.
    std::vector<uint8_t> differs(result.correlation.values.size(), 0);
    try {
        double thr = otsu_threshold(result.correlation.values, cfg.levels);
        for (size_t i = 0; i < differs.size(); ++i) {
            differs[i] = result.correlation.values[i] > thr;
        }
    } catch (const Error& e) {
        if (e.kind() != Errc::degenerate_input) throw;  // constant series: no differences
    }

    // Transient-aware transition recovery. Pure frames sit near the class
    // extremes of the brightness series; a frame whose exposure straddled a
    // transition sits in between. A clearly-mid frame is a transition on its
    // own evidence; everything else in the mid zone is adjudicated by the
    // binarized lookahead comparison bracketing it. That bracket is where
    // the lookahead choice matters: a=1 compares into the transient pair
    // itself and goes blind on back-to-back transitions, a=2 compares the
    // two frames around the transient, wider a spans several transitions
    // and loses the correlation structure.
    const auto& u = result.brightness;
    double lo_ref = quantile(u, 0.03);
    double hi_ref = quantile(u, 0.97);
    double span = hi_ref - lo_ref;
    if (span < 1e-9 * std::max(1.0, std::abs(hi_ref))) {
        fail(Errc::decode_failure, "constant illumination, no modulation present");
    }
    double mid = (lo_ref + hi_ref) / 2.0;
    const int bracket = (cfg.lookahead + 1) / 2;

    std::optional<int> last_pure;
    bool transient_since_pure = false;
    for (size_t k = 0; k < n; ++k) {
        double d = std::abs(u[k] - mid) / span;
        bool transient;
        if (d < 0.0625) {
            transient = true;  // unambiguous straddle
        } else if (d > 0.375) {
            transient = false;  // unambiguous pure
        } else {
            long long i = static_cast<long long>(k) - bracket;
            if (i >= 0 && i < static_cast<long long>(differs.size())) {
                transient = differs[static_cast<size_t>(i)] != 0;
            } else {
                transient = d < 0.25;
            }
        }
        if (transient) {
            result.transition_frames.push_back(static_cast<double>(k));
            transient_since_pure = true;
        } else {
            int level = u[k] > mid ? 1 : 0;
            if (last_pure && level != *last_pure && !transient_since_pure) {
                result.transition_frames.push_back(static_cast<double>(k));
            }
            last_pure = level;
            transient_since_pure = false;
        }
    }

    if (result.transition_frames.size() < 2) {
        fail(Errc::decode_failure, "fewer than two transitions recovered");
    }
    result.intervals.intervals.reserve(result.transition_frames.size() - 1);
    for (size_t i = 1; i < result.transition_frames.size(); ++i) {
        result.intervals.intervals.push_back(
            (result.transition_frames[i] - result.transition_frames[i - 1]) / cfg.frame_rate);
    }
    return result;
}

IntervalSeries video_preprocess(const Capture& capture, const VehicleGeometry& geometry,
                                const PoseNoise& pose_noise, Rng& rng) {
    return video_analyze(capture, geometry, pose_noise, rng).intervals;
}

Capture visual_send_payload(const BitString& payload, int frames_per_slot,
                            const CameraConfig& cfg, const VehicleGeometry& geometry,
                            double phase, Rng& rng) {
    double h = frames_per_slot / cfg.frame_rate;
    return render_capture_simple(encode_frame_levels(payload, h), cfg, geometry, phase, rng);
}

BitString visual_receive_payload(const Capture& capture, const VehicleGeometry& geometry,
                                 const PoseNoise& pose_noise, size_t payload_bits, Rng& rng) {
    IntervalSeries intervals = video_preprocess(capture, geometry, pose_noise, rng);
    return decode_frame_intervals(intervals, payload_bits);
}

int transition_mistakes(const Capture& capture, const VideoDecodeResult& result) {
    double slot_frames = capture.half_period * capture.cfg.frame_rate;
    auto to_slots = [slot_frames](const std::vector<double>& times) {
        std::vector<int> out;
        for (size_t i = 1; i < times.size(); ++i) {
            out.push_back(static_cast<int>(std::lround((times[i] - times[i - 1]) / slot_frames)));
        }
        return out;
    };
    std::vector<int> truth = to_slots(capture.true_transitions);
    std::vector<int> got = to_slots(result.transition_frames);
    return levenshtein(truth, got);
}

std::vector<SweepRow> sweep_configurations(const BitString& payload, int frames_per_slot,
                                           const CameraConfig& base_cfg,
                                           const VehicleGeometry& geometry, double phase,
                                           const PoseNoise& pose_noise,
                                           const std::vector<double>& exposures,
                                           const std::vector<int>& lookaheads,
                                           const std::vector<int>& downsamples, uint64_t seed) {
    std::vector<SweepRow> rowsv;
    for (double exposure : exposures) {
        CameraConfig cfg = base_cfg;
        cfg.exposure = exposure;
        Rng render_rng = Rng(seed).fork("sweep-render");
        Capture cap = visual_send_payload(payload, frames_per_slot, cfg, geometry, phase,
                                          render_rng);
        for (int a : lookaheads) {
            for (int ds : downsamples) {
                cap.cfg.lookahead = a;
                cap.cfg.downsample = ds;
                Rng pipe_rng = Rng(seed).fork("sweep-pipe");
                auto start = std::chrono::steady_clock::now();
                SweepRow row{exposure, a, ds, 0, 0.0};
                try {
                    VideoDecodeResult result = video_analyze(cap, geometry, pose_noise, pipe_rng);
                    row.mistakes = transition_mistakes(cap, result);
                } catch (const Error&) {
                    row.mistakes = static_cast<int>(cap.true_transitions.size());
                }
                row.time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                           start)
                                 .count();
                rowsv.push_back(row);
            }
        }
    }
    return rowsv;
}

void write_capture_dir(const std::string& dir, const Capture& capture) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::json manifest;
    manifest["frame_rate"] = capture.cfg.frame_rate;
    manifest["exposure"] = capture.cfg.exposure;
    manifest["levels"] = capture.cfg.levels;
    manifest["lookahead"] = capture.cfg.lookahead;
    manifest["downsample"] = capture.cfg.downsample;
    manifest["noise_sigma"] = capture.cfg.noise_sigma;
    manifest["width"] = capture.cfg.width;
    manifest["height"] = capture.cfg.height;
    manifest["half_period"] = capture.half_period;
    manifest["phase"] = capture.phase;
    manifest["lead_frames"] = capture.lead_frames;
    manifest["true_transitions"] = capture.true_transitions;
    nlohmann::json poses = nlohmann::json::array();
    for (size_t i = 0; i < capture.truth.size(); ++i) {
        const PlatePose& p = capture.truth[i];
        poses.push_back({{"x", p.x},
                         {"y", p.y},
                         {"s", p.s},
                         {"theta", p.theta},
                         {"zeta", p.zeta},
                         {"occluded", capture.occluded[i] != 0},
                         {"timestamp", capture.frames[i].timestamp}});
    }
    manifest["frames"] = poses;
    std::ofstream mf(fs::path(dir) / "manifest.json");
    mf << manifest.dump(2) << '\n';

    for (size_t i = 0; i < capture.frames.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%05zu.pgm", i);
        std::ofstream out(fs::path(dir) / name, std::ios::binary);
        const Frame& frame = capture.frames[i];
        out << "P5\n" << frame.width << ' ' << frame.height << "\n255\n";
        for (int y = 0; y < frame.height; ++y) {
            for (int x = 0; x < frame.width; ++x) {
                out.put(static_cast<char>(frame.value_at(x, y)));
            }
        }
    }
}

Capture read_capture_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream mf(fs::path(dir) / "manifest.json");
    if (!mf) fail(Errc::config_error, "missing manifest.json in " + dir);
    nlohmann::json manifest = nlohmann::json::parse(mf);

    Capture cap;
    cap.cfg.frame_rate = manifest.at("frame_rate");
    cap.cfg.exposure = manifest.at("exposure");
    cap.cfg.levels = manifest.at("levels");
    cap.cfg.lookahead = manifest.at("lookahead");
    cap.cfg.downsample = manifest.at("downsample");
    cap.cfg.noise_sigma = manifest.at("noise_sigma");
    cap.cfg.width = manifest.at("width");
    cap.cfg.height = manifest.at("height");
    cap.half_period = manifest.at("half_period");
    cap.phase = manifest.at("phase");
    cap.lead_frames = manifest.at("lead_frames");
    cap.true_transitions = manifest.at("true_transitions").get<std::vector<double>>();

    size_t i = 0;
    for (const auto& entry : manifest.at("frames")) {
        PlatePose pose;
        pose.x = entry.at("x");
        pose.y = entry.at("y");
        pose.s = entry.at("s");
        pose.theta = entry.at("theta");
        pose.zeta = entry.at("zeta");
        cap.truth.push_back(pose);
        cap.occluded.push_back(entry.at("occluded").get<bool>() ? 1 : 0);

        char name[32];
        std::snprintf(name, sizeof(name), "frame_%05zu.pgm", i);
        std::ifstream in(fs::path(dir) / name, std::ios::binary);
        if (!in) fail(Errc::config_error, std::string("missing frame file ") + name);
        std::string magic;
        int w = 0, h = 0, maxval = 0;
        in >> magic >> w >> h >> maxval;
        in.get();
        if (magic != "P5" || maxval != 255) fail(Errc::config_error, "unsupported PGM format");
        Frame frame;
        frame.width = w;
        frame.height = h;
        frame.index = static_cast<int>(i);
        frame.timestamp = entry.at("timestamp");
        frame.rgb.resize(static_cast<size_t>(3) * w * h);
        for (size_t px = 0; px < static_cast<size_t>(w) * h; ++px) {
            int v = in.get();
            frame.rgb[3 * px] = frame.rgb[3 * px + 1] = frame.rgb[3 * px + 2] =
                static_cast<uint8_t>(v);
        }
        cap.frames.push_back(std::move(frame));
        ++i;
    }
    return cap;
}

}  // namespace sidelink
