#include "eclipse/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

namespace eclipse {

// --- shadow tip detection ----------------------------------------------------

ShadowTip detect_shadow_tip(const ImageF& channel, const Vec2& fingertip_px,
                            const Vec2& pointing_px, const DetectParams& params) {
    ShadowTip out;
    Vec2 dir = pointing_px.normalized();
    if (dir.norm() < 0.5) return out;

    int R = int(std::ceil(params.max_radius_px));
    int x0 = std::max(0, int(fingertip_px.x) - R);
    int x1 = std::min(channel.width - 1, int(fingertip_px.x) + R);
    int y0 = std::max(0, int(fingertip_px.y) - R);
    int y1 = std::min(channel.height - 1, int(fingertip_px.y) + R);
    if (x0 > x1 || y0 > y1) return out;

    // Adaptive threshold from the local median.
    std::vector<double> window;
    window.reserve(size_t(x1 - x0 + 1) * size_t(y1 - y0 + 1));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) window.push_back(channel.at(x, y));
    double median = quantile(window, 0.5);
    double thr = params.threshold_factor * median;
    if (thr <= 0.0) return out;

    double cos_half = std::cos(params.cone_half_angle_deg * M_PI / 180.0);
    double rmax2 = params.max_radius_px * params.max_radius_px;

    int w = x1 - x0 + 1, h = y1 - y0 + 1;
    std::vector<uint8_t> mask(size_t(w) * h, 0);
    auto midx = [&](int x, int y) { return size_t(y - y0) * w + (x - x0); };
    bool any = false;
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            Vec2 rel{x + 0.5 - fingertip_px.x, y + 0.5 - fingertip_px.y};
            double r2 = rel.dot(rel);
            double fwd = rel.dot(dir);
            if (fwd < params.min_forward_px || r2 > rmax2) continue;
            if (fwd < cos_half * std::sqrt(r2)) continue;
            if (channel.at(x, y) >= thr) continue;
            mask[midx(x, y)] = 1;
            any = true;
        }
    }
    if (!any) return out;

    // Connected components (8-neighborhood). The shadow region is the one
    // reaching farthest ahead of the fingertip; the finger's own unlit rim
    // also shows up dark but hugs the silhouette.
    std::vector<int> label(size_t(w) * h, -1);
    struct Component {
        std::vector<std::pair<int, int>> px;
        double max_forward = -1e30;
    };
    std::vector<Component> comps;
    std::vector<std::pair<int, int>> stack;
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            if (!mask[midx(x, y)] || label[midx(x, y)] >= 0) continue;
            int id = int(comps.size());
            comps.emplace_back();
            stack.assign(1, {x, y});
            label[midx(x, y)] = id;
            while (!stack.empty()) {
                auto [cx, cy] = stack.back();
                stack.pop_back();
                comps[size_t(id)].px.push_back({cx, cy});
                Vec2 rel{cx + 0.5 - fingertip_px.x, cy + 0.5 - fingertip_px.y};
                comps[size_t(id)].max_forward =
                    std::max(comps[size_t(id)].max_forward, rel.dot(dir));
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        int nx = cx + dx, ny = cy + dy;
                        if (nx < x0 || nx > x1 || ny < y0 || ny > y1) continue;
                        if (!mask[midx(nx, ny)] || label[midx(nx, ny)] >= 0) continue;
                        label[midx(nx, ny)] = id;
                        stack.push_back({nx, ny});
                    }
                }
            }
        }
    }

    const Component* best = nullptr;
    for (const auto& c : comps) {
        if (int(c.px.size()) < params.min_region_px) continue;
        if (!best || c.max_forward > best->max_forward) best = &c;
    }
    if (!best) return out;

    // Apex estimate: centroid of the 1 px slab of farthest projections
    // (stabler than a bare argmax when the boundary runs flat).
    Vec2 centroid;
    std::pair<int, int> tip = best->px.front();
    double best_proj = -1e30;
    for (auto [px, py] : best->px) {
        centroid = centroid + Vec2{px + 0.5, py + 0.5};
        double proj = Vec2{px + 0.5 - fingertip_px.x, py + 0.5 - fingertip_px.y}.dot(dir);
        if (proj > best_proj) {
            best_proj = proj;
            tip = {px, py};
        }
    }
    centroid = centroid / double(best->px.size());
    Vec2 slab_centroid;
    int slab_n = 0;
    for (auto [px, py] : best->px) {
        double proj = Vec2{px + 0.5 - fingertip_px.x, py + 0.5 - fingertip_px.y}.dot(dir);
        if (proj >= best_proj - 1.0) {
            slab_centroid = slab_centroid + Vec2{px + 0.5, py + 0.5};
            ++slab_n;
        }
    }
    if (slab_n > 0) {
        slab_centroid = slab_centroid / double(slab_n);
        tip = {int(slab_centroid.x), int(slab_centroid.y)};
    }

    if (tip.first <= x0 || tip.first >= x1 || tip.second <= y0 || tip.second >= y1 ||
        tip.first <= 0 || tip.first >= channel.width - 1 || tip.second <= 0 ||
        tip.second >= channel.height - 1) {
        out.status = ShadowTip::Status::clipped;  // runs into the border or search limit
        return out;
    }

    // Sub-pixel refinement: walk the strip axis through the apex and
    // interpolate the threshold crossing.
    Vec2 tip_center = slab_n > 0 ? slab_centroid : Vec2{tip.first + 0.5, tip.second + 0.5};
    Vec2 axis = (tip_center - centroid).normalized();
    if (axis.norm() < 0.5) axis = dir;
    Vec2 refined = tip_center;
    double prev_s = -1.5;
    double prev_v = channel.sample_bilinear(tip_center.x + axis.x * prev_s,
                                            tip_center.y + axis.y * prev_s);
    bool inside = prev_v < thr;
    for (double s = -1.4; s <= 3.0; s += 0.1) {
        Vec2 q{tip_center.x + axis.x * s, tip_center.y + axis.y * s};
        double v = channel.sample_bilinear(q.x, q.y);
        if (inside && v >= thr) {
            double f = (thr - prev_v) / std::max(v - prev_v, 1e-12);
            double sc = prev_s + (s - prev_s) * f;
            refined = {tip_center.x + axis.x * sc, tip_center.y + axis.y * sc};
            break;
        }
        if (v < thr) inside = true;
        prev_s = s;
        prev_v = v;
    }

    out.status = ShadowTip::Status::found;
    out.tip_px = refined;
    return out;
}

// --- geometric hover ----------------------------------------------------------

double geometric_hover(const Vec2& shadow_tip_px, const Vec2& fingertip_px,
                       const PinholeCamera& camera, const Vec3& led_position,
                       const Plane& surface) {
    Vec3 shadow_world = camera.back_project_to_plane(shadow_tip_px, surface);

    Ray camera_ray = camera.pixel_ray(fingertip_px);
    Vec3 led_dir = shadow_world - led_position;
    if (led_dir.norm() < 1e-9)
        raise(ErrorKind::degenerate_geometry, "LED coincides with the shadow tip");
    Ray led_ray{led_position, led_dir.normalized()};

    LineClosest lc = closest_points_between_lines(camera_ray, led_ray);
    if (lc.parallel)
        raise(ErrorKind::degenerate_geometry, "camera and illuminator rays are parallel");
    Vec3 fingertip = (camera_ray.at(lc.t1) + led_ray.at(lc.t2)) * 0.5;
    return std::max(0.0, surface.height_of(fingertip));
}

double geometric_hover_capsule(const Vec2& shadow_tip_px, const Vec2& tip_px,
                               const Vec2& pip_px, const PinholeCamera& camera,
                               const Vec3& led_position, const Plane& surface,
                               double finger_radius_mm, double tip_to_pip_mm) {
    Vec3 shadow_world = camera.back_project_to_plane(shadow_tip_px, surface);
    Vec3 ldir = (shadow_world - led_position).normalized();

    // The tip keypoint projects the 3-D fingertip, so the fingertip sits on
    // the camera ray at the unknown hover height; the detected shadow apex
    // lies on the cap sphere's shadow boundary, so the illuminator ray through
    // it must graze that sphere. The tangency residual is V-shaped in the
    // trial height (the sphere enters and exits the grazing line); the first
    // zero from below is the physical pose.
    Ray tip_ray = camera.pixel_ray(tip_px);
    Ray pip_ray = camera.pixel_ray(pip_px);
    double tip_slope = surface.normal.dot(tip_ray.dir);
    if (std::abs(tip_slope) < 1e-9)
        raise(ErrorKind::degenerate_geometry, "fingertip ray parallel to the surface");
    double tip_h0 = surface.height_of(tip_ray.origin);
    auto tip_at = [&](double h) { return tip_ray.at((h - tip_h0) / tip_slope); };

    // Cap center for a trial height: PIP sits on its own camera ray at the
    // known joint distance, knuckle side up.
    auto cap_center = [&](double h) -> std::optional<Vec3> {
        Vec3 t = tip_at(h);
        Vec3 rel = pip_ray.origin - t;
        double b = pip_ray.dir.dot(rel);
        double c = rel.norm2() - tip_to_pip_mm * tip_to_pip_mm;
        double disc = b * b - c;
        if (disc < 0.0) return std::nullopt;
        double s = std::sqrt(disc);
        Vec3 p1 = pip_ray.at(-b - s), p2 = pip_ray.at(-b + s);
        Vec3 p = surface.height_of(p1) >= surface.height_of(p2) ? p1 : p2;
        return t + (p - t).normalized() * finger_radius_mm;
    };

    auto residual = [&](double h) -> std::optional<double> {
        auto c0 = cap_center(h);
        if (!c0) return std::nullopt;
        Vec3 rel = *c0 - led_position;
        double dist = (rel - ldir * rel.dot(ldir)).norm();
        return dist - finger_radius_mm;
    };

    double h_hi = std::min(160.0, surface.height_of(led_position) * 0.9);
    auto r0 = residual(0.0);
    if (r0 && *r0 <= 0.0) return 0.0;  // grazing already at contact

    constexpr double kStep = 1.5;
    double prev_h = 0.0;
    bool prev_ok = r0.has_value();
    for (double h = kStep; h <= h_hi; h += kStep) {
        auto r = residual(h);
        if (!r) {
            prev_ok = false;
            prev_h = h;
            continue;
        }
        if (prev_ok && *r <= 0.0) {
            double lo = prev_h, hi = h;
            for (int it = 0; it < 50; ++it) {
                double mid = 0.5 * (lo + hi);
                auto rm = residual(mid);
                if (rm && *rm > 0.0)
                    lo = mid;
                else
                    hi = mid;
            }
            return 0.5 * (lo + hi);
        }
        prev_ok = true;
        prev_h = h;
    }
    // no grazing pose found; point triangulation remains a sound estimate
    return geometric_hover(shadow_tip_px, tip_px, camera, led_position, surface);
}

// --- smoothing ------------------------------------------------------------

double smooth(const std::vector<double>& history, int window) {
    if (history.empty()) raise(ErrorKind::invalid_argument, "smooth of empty history");
    size_t take = std::min(history.size(), size_t(std::max(window, 1)));
    double sum = 0.0;
    for (size_t i = history.size() - take; i < history.size(); ++i) sum += history[i];
    return sum / double(take);
}

double MeanFilter::push(double v) {
    buf_.push_back(v);
    sum_ += v;
    ++count_;
    if (count_ > window_) {
        sum_ -= buf_.front();
        buf_.pop_front();
        --count_;
    }
    return value();
}

// --- events ---------------------------------------------------------------

std::vector<TouchEvent> segment_events(const std::vector<double>& smoothed, int finger_id,
                                       const Hysteresis& hyst, uint64_t frame_offset) {
    std::vector<TouchEvent> events;
    bool down = false;
    uint64_t down_frame = 0;
    double peak = 0.0;

    auto close_event = [&](uint64_t up_frame, bool open) {
        uint64_t len = (open ? frame_offset + smoothed.size() : up_frame) - down_frame;
        if (int64_t(len) < hyst.min_frames) return;  // debounce
        TouchEvent e;
        e.finger_id = finger_id;
        e.down_frame = down_frame;
        if (!open) e.up_frame = up_frame;
        e.peak_probability = peak;
        events.push_back(e);
    };

    for (size_t i = 0; i < smoothed.size(); ++i) {
        double p = smoothed[i];
        if (!down && p > hyst.down) {
            down = true;
            down_frame = frame_offset + i;
            peak = p;
        } else if (down) {
            peak = std::max(peak, p);
            if (p < hyst.up) {
                close_event(frame_offset + i, false);
                down = false;
            }
        }
    }
    if (down) close_event(0, true);
    return events;
}

// --- metrics ----------------------------------------------------------------

void Metrics::add(int finger_id, bool predicted_touch, bool true_touch, double predicted_hover,
                  double true_hover) {
    ++n;
    bool correct = predicted_touch == true_touch;
    if (true_touch)
        correct ? ++tp : ++fn;
    else
        correct ? ++tn : ++fp;

    double err = std::abs(predicted_hover - true_hover);
    hover_all.n++;
    hover_all.abs_sum += err;
    if (true_hover < 10.0) {
        hover_lt10.n++;
        hover_lt10.abs_sum += err;
    } else if (true_hover <= 100.0) {
        hover_10_100.n++;
        hover_10_100.abs_sum += err;
    }
    auto& pf = per_finger[finger_id];
    pf.second++;
    if (correct) pf.first++;
    auto& pfh = per_finger_hover[finger_id];
    pfh.n++;
    pfh.abs_sum += err;
}

std::string Metrics::to_text() const {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << "frames:            " << n << "\n";
    os << "touch accuracy:    " << accuracy() * 100.0 << " %\n";
    os << "confusion:         tp=" << tp << " tn=" << tn << " fp=" << fp << " fn=" << fn << "\n";
    os << "hover MAE:         " << hover_all.mae() << " mm (all)\n";
    os << "hover MAE <10mm:   " << hover_lt10.mae() << " mm (" << hover_lt10.n << " frames)\n";
    os << "hover MAE 10-100:  " << hover_10_100.mae() << " mm (" << hover_10_100.n
       << " frames)\n";
    for (const auto& [id, pf] : per_finger) {
        double acc = pf.second ? double(pf.first) / double(pf.second) : 0.0;
        os << "finger " << id << ":          acc " << acc * 100.0 << " % over " << pf.second
           << " frames";
        auto it = per_finger_hover.find(id);
        if (it != per_finger_hover.end()) os << ", hover MAE " << it->second.mae() << " mm";
        os << "\n";
    }
    return os.str();
}

std::string Metrics::to_json() const {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(6);
    os << "{\"frames\":" << n << ",\"accuracy\":" << accuracy() << ",\"tp\":" << tp
       << ",\"tn\":" << tn << ",\"fp\":" << fp << ",\"fn\":" << fn
       << ",\"hover_mae_mm\":" << hover_all.mae()
       << ",\"hover_mae_lt10_mm\":" << hover_lt10.mae()
       << ",\"hover_mae_10_100_mm\":" << hover_10_100.mae() << ",\"per_finger\":{";
    bool first = true;
    for (const auto& [id, pf] : per_finger) {
        if (!first) os << ",";
        first = false;
        double acc = pf.second ? double(pf.first) / double(pf.second) : 0.0;
        double mae = 0.0;
        auto it = per_finger_hover.find(id);
        if (it != per_finger_hover.end()) mae = it->second.mae();
        os << "\"" << id << "\":{\"n\":" << pf.second << ",\"accuracy\":" << acc
           << ",\"hover_mae_mm\":" << mae << "}";
    }
    os << "}}";
    return os.str();
}

Metrics evaluate(const Model& model, const PatchDataset& dataset) {
    if (dataset.records.empty()) raise(ErrorKind::empty_dataset, "evaluation dataset is empty");
    Metrics m;
    for (const auto& r : dataset.records) {
        auto features = features_from_patch(r.pixels, dataset.channels, dataset.patch,
                                            model.cfg.feat_grid, r.finger_id);
        Inference inf = infer_features(model, features);
        m.add(r.finger_id, inf.touch, r.touch, inf.hover_mm, r.hover_mm);
    }
    return m;
}

}  // namespace eclipse
