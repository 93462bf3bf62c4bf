#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sidelink/codec.hpp"
#include "sidelink/rng.hpp"

namespace sidelink {

// One captured RGB frame, 8 bits per channel, row-major.
struct Frame {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> rgb;  // 3 * width * height
    double timestamp = 0.0;    // seconds, start of frame period
    int index = 0;

    uint8_t value_at(int x, int y) const {
        const uint8_t* p = &rgb[3 * (static_cast<size_t>(y) * width + x)];
        return std::max(p[0], std::max(p[1], p[2]));
    }
};

// License plate pose phi = (x, y, s, theta, zeta).
struct PlatePose {
    double x = 0.0;
    double y = 0.0;
    double s = 1.0;      // scale, > 0
    double theta = 0.0;  // rotation, radians
    double zeta = 0.0;   // skew
};

// Elliptical light-source region T{phi} with its Gaussian weighting width.
struct LightRegion {
    double cx = 0.0;
    double cy = 0.0;
    double semi_x = 0.0;  // semi-axes in pixels, local frame
    double semi_y = 0.0;
    double orientation = 0.0;
    double sigma = 0.0;  // Gaussian kernel width in pixels
};

struct CameraConfig {
    double frame_rate = 30.0;    // r, frames/s
    double exposure = 0.015;     // seconds of integration per frame, <= 1/r
    int levels = 256;            // l, quantization levels
    int lookahead = 2;           // a, frames between compared pairs
    int downsample = 1;          // block-averaging ratio
    double noise_sigma = 0.0;    // additive value-channel noise per pixel
    int width = 64;
    int height = 48;
};

// Vehicle light layout relative to the plate, in plate-scale units.
struct VehicleGeometry {
    double light_dx = 6.0;   // plate -> light-cluster offset
    double light_dy = -3.0;
    double light_ax = 5.0;   // region semi-axes
    double light_ay = 3.0;
    double lit_fraction = 0.55;  // lit lamp ellipse inside the region
    double on_value = 230.0;
    double off_value = 40.0;
    double backdrop = 12.0;
    double hue_r = 1.0;  // channel scales; max must stay 1.0 so the
    double hue_g = 0.35; // value channel tracks the lamp intensity
    double hue_b = 0.12;
};

struct PoseNoise {
    double sigma_xy = 0.0;
    double sigma_s = 0.0;
    double sigma_theta = 0.0;
    double sigma_zeta = 0.0;
};

// Correlation values, one per compared frame pair (frames i and i+a).
struct CorrelationSeries {
    std::vector<double> values;
    int lookahead = 0;
};

// A rendered capture with its ground truth.
struct Capture {
    std::vector<Frame> frames;
    std::vector<PlatePose> truth;
    std::vector<uint8_t> occluded;
    CameraConfig cfg;
    double half_period = 0.0;           // slot duration of the waveform
    double phase = 0.5;                 // transition offset inside a frame period
    int lead_frames = 0;                // idle frames before the waveform
    std::vector<double> true_transitions;  // frame-time units, ground truth
};

// Simulate a capture of the DM waveform. Poses and occlusion flags are per
// frame; the light intensity integrates the waveform over each exposure
// window, so a window straddling a transition yields a transient frame.
// phase 0.5 centers transitions inside the exposure (a transient at every
// transition); phase 0.0 aligns them with frame boundaries (none).
Capture render_capture(const LevelSequence& levels, const std::vector<PlatePose>& pose_track,
                       const std::vector<uint8_t>& occluded, const CameraConfig& cfg,
                       const VehicleGeometry& geometry, double phase, int lead_frames, Rng& rng);

// Convenience: constant pose, no occlusion, enough frames for the waveform.
Capture render_capture_simple(const LevelSequence& levels, const CameraConfig& cfg,
                              const VehicleGeometry& geometry, double phase, Rng& rng);

// Simulated LPR: ground truth plus configured Gaussian perturbation.
PlatePose locate_plate(const PlatePose& ground_truth, bool occluded, const PoseNoise& noise,
                       Rng& rng);

// Affine mapping from the plate pose to the light region; the Gaussian
// width defaults to a quarter of the minor semi-axis.
LightRegion map_pose_to_lights(const PlatePose& pose, const VehicleGeometry& geometry);

// Value colour channel (max of r,g,b) quantized to l levels.
std::vector<int> value_quantize(const Frame& frame, int levels);

// Gaussian-weighted, normalized per-row statistic of the elliptical region.
// gray is a width x height matrix of quantized values.
std::vector<double> region_statistic(const std::vector<int>& gray, int width, int height,
                                     const LightRegion& region, int levels);

// 1 - Pearson correlation of mean-centered rows i and i+a.
CorrelationSeries correlate_lookahead(const std::vector<std::vector<double>>& rows, int lookahead);

struct VideoDecodeResult {
    IntervalSeries intervals;
    std::vector<double> transition_frames;  // detected transition times, frame units
    CorrelationSeries correlation;
    std::vector<double> brightness;  // per-frame region statistic sum
};

// Full receive pipeline: locate -> map -> quantize -> region statistic ->
// lookahead correlation -> transition recovery -> inter-transition distances
// divided by the frame rate.
VideoDecodeResult video_analyze(const Capture& capture, const VehicleGeometry& geometry,
                                const PoseNoise& pose_noise, Rng& rng);
IntervalSeries video_preprocess(const Capture& capture, const VehicleGeometry& geometry,
                                const PoseNoise& pose_noise, Rng& rng);

// Convenience: framed payload -> capture -> intervals -> payload.
Capture visual_send_payload(const BitString& payload, int frames_per_slot,
                            const CameraConfig& cfg, const VehicleGeometry& geometry,
                            double phase, Rng& rng);
BitString visual_receive_payload(const Capture& capture, const VehicleGeometry& geometry,
                                 const PoseNoise& pose_noise, size_t payload_bits, Rng& rng);

// Edit distance between the true and decoded transition interval structure,
// in slots; the sweep's "transition mistakes" metric.
int transition_mistakes(const Capture& capture, const VideoDecodeResult& result);

struct SweepRow {
    double exposure;
    int lookahead;
    int downsample;
    int mistakes;
    double time_s;
};

// Fig-2-style harness: decode the same transmission under every
// configuration combination, reporting mistakes and processing time.
std::vector<SweepRow> sweep_configurations(const BitString& payload, int frames_per_slot,
                                           const CameraConfig& base_cfg,
                                           const VehicleGeometry& geometry, double phase,
                                           const PoseNoise& pose_noise,
                                           const std::vector<double>& exposures,
                                           const std::vector<int>& lookaheads,
                                           const std::vector<int>& downsamples, uint64_t seed);

// Capture trace directory: one PGM (value channel) per frame + manifest.json.
void write_capture_dir(const std::string& dir, const Capture& capture);
Capture read_capture_dir(const std::string& dir);

}  // namespace sidelink
