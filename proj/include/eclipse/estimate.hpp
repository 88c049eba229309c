#pragma once
// Touch-state and hover-distance estimation: analytic shadow-geometry path,
// temporal smoothing, touch-event segmentation, and dataset metrics.

#include <deque>
#include <map>
#include <optional>
#include <vector>

#include "eclipse/model.hpp"
#include "eclipse/scene.hpp"
#include "eclipse/suppress.hpp"

namespace eclipse {

// --- shadow tip detection ---------------------------------------------------

struct DetectParams {
    double threshold_factor = 0.35;   // of the local median intensity
    double cone_half_angle_deg = 75;  // around the finger's pointing direction
    // Candidates must sit ahead of the tip by more than the finger's own
    // unlit rim reaches (~4.5 px); the cap sphere's shadow extends past this
    // even at contact.
    double min_forward_px = 5.5;
    double max_radius_px = 120;
    int min_region_px = 3;
};

struct ShadowTip {
    enum class Status { found, collapsed, clipped };
    Status status = Status::collapsed;
    Vec2 tip_px;  // valid when status == found

    bool found() const { return status == Status::found; }
};

// Searches a cone beyond the fingertip (along `pointing_px`, the tip-ward
// image direction) for the darkest connected region and returns its extremal
// point with sub-pixel refinement. `collapsed` when nothing is dark enough
// (touching), `clipped` when the region runs into the image border.
ShadowTip detect_shadow_tip(const ImageF& channel, const Vec2& fingertip_px,
                            const Vec2& pointing_px, const DetectParams& params = {});

// --- geometric hover ---------------------------------------------------------

// Triangulates the fingertip from the camera ray through its pixel and the
// illuminator ray through the detected shadow tip, then measures its height.
// Exact for noiseless pixels of a point caster; throws degenerate_geometry
// when the rays are near-parallel (LED in line with the camera).
double geometric_hover(const Vec2& shadow_tip_px, const Vec2& fingertip_px,
                       const PinholeCamera& camera, const Vec3& led_position,
                       const Plane& surface);

// Capsule-aware inversion for rendered shadows: the detected tip pixel lies on
// the fingertip cap sphere's shadow boundary, so the illuminator ray through
// it grazes that sphere. Solves for the hover height whose posed capsule
// (tip on the camera ray, cap center toward the PIP ray) satisfies the
// tangency; falls back to point triangulation when no pose brackets it.
double geometric_hover_capsule(const Vec2& shadow_tip_px, const Vec2& tip_px,
                               const Vec2& pip_px, const PinholeCamera& camera,
                               const Vec3& led_position, const Plane& surface,
                               double finger_radius_mm, double tip_to_pip_mm);

// --- temporal smoothing -------------------------------------------------------

// Arithmetic mean of the last min(len, window) values.
double smooth(const std::vector<double>& history, int window = 30);

class MeanFilter {
public:
    explicit MeanFilter(int window = 30) : window_(window) {}
    double push(double v);
    double value() const { return count_ ? sum_ / double(count_) : 0.0; }

private:
    int window_;
    std::deque<double> buf_;
    double sum_ = 0.0;
    int count_ = 0;
};

// --- events ---------------------------------------------------------------

struct Hysteresis {
    double down = 0.6;
    double up = 0.4;
    int min_frames = 3;
};

struct TouchEvent {
    int finger_id = 0;
    uint64_t down_frame = 0;
    std::optional<uint64_t> up_frame;  // open if the series ends while down
    double peak_probability = 0.0;
};

// Hysteresis segmentation of a smoothed probability series (one finger).
// frame i of the series corresponds to frame_offset + i.
std::vector<TouchEvent> segment_events(const std::vector<double>& smoothed, int finger_id,
                                       const Hysteresis& hyst = {}, uint64_t frame_offset = 0);

// --- per-frame estimates and metrics ----------------------------------------

struct TouchEstimate {
    uint64_t frame_index = 0;
    int finger_id = 0;
    double raw_logit = 0.0;
    double raw_probability = 0.0;
    double smoothed_probability = 0.0;
    double hover_mm = 0.0;           // smoothed
    bool valid = true;               // false when the estimator had no signal
};

struct BandError {
    uint64_t n = 0;
    double abs_sum = 0.0;
    double mae() const { return n ? abs_sum / double(n) : 0.0; }
};

struct Metrics {
    uint64_t n = 0;
    uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
    BandError hover_all, hover_lt10, hover_10_100;
    std::map<int, std::pair<uint64_t, uint64_t>> per_finger;  // id -> (correct, total)
    std::map<int, BandError> per_finger_hover;

    double accuracy() const { return n ? double(tp + tn) / double(n) : 0.0; }
    void add(int finger_id, bool predicted_touch, bool true_touch, double predicted_hover,
             double true_hover);
    std::string to_text() const;
    std::string to_json() const;
};

// Frame-level evaluation of a trained model on a labeled dataset.
Metrics evaluate(const Model& model, const PatchDataset& dataset);

}  // namespace eclipse
