#include "eclipse/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace eclipse {

using json = nlohmann::ordered_json;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream is(path);
    if (!is) raise(ErrorKind::io, "cannot open for read: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void spit(const std::string& text, const std::string& path) {
    std::ofstream os(path);
    if (!os) raise(ErrorKind::io, "cannot open for write: " + path);
    os << text;
    if (!os) raise(ErrorKind::io, "write failed: " + path);
}

json parse(const std::string& text, const char* what) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) raise(ErrorKind::format, std::string("invalid JSON in ") + what);
    return j;
}

Vec3 vec3_of(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 3)
        raise(ErrorKind::format, std::string(what) + " must be a 3-element array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Falloff falloff_of(const json& j) {
    std::string s = j.get<std::string>();
    if (s == "none") return Falloff::none;
    if (s == "inverse_square") return Falloff::inverse_square;
    raise(ErrorKind::format, "falloff must be 'none' or 'inverse_square'");
}

const char* falloff_name(Falloff f) {
    return f == Falloff::none ? "none" : "inverse_square";
}

PointLight light_of(const json& j, const Vec3& anchor) {
    PointLight l;
    if (j.contains("position"))
        l.position = vec3_of(j.at("position"), "light position");
    else if (j.contains("offset"))
        l.position = anchor + vec3_of(j.at("offset"), "light offset");
    else
        raise(ErrorKind::format, "light needs 'position' or 'offset'");
    l.intensity = j.value("intensity", 1.0);
    if (j.contains("falloff")) l.falloff = falloff_of(j.at("falloff"));
    return l;
}

}  // namespace

Scene scene_from_json_text(const std::string& text) {
    json j = parse(text, "scene config");
    Scene s;

    if (j.contains("surface")) {
        const json& surf = j.at("surface");
        if (surf.contains("origin")) s.surface.plane.origin = vec3_of(surf.at("origin"), "origin");
        if (surf.contains("normal"))
            s.surface.plane.normal = vec3_of(surf.at("normal"), "normal").normalized();
        s.surface.albedo = surf.value("albedo", 0.6);
        if (surf.contains("texture")) {
            const json& tex = surf.at("texture");
            std::string kind = tex.value("kind", "none");
            if (kind == "checker")
                s.surface.texture.kind = PlaneTexture::Kind::checker;
            else if (kind == "stripes")
                s.surface.texture.kind = PlaneTexture::Kind::stripes;
            else if (kind != "none")
                raise(ErrorKind::format, "texture kind must be none|checker|stripes");
            s.surface.texture.secondary_albedo = tex.value("secondary_albedo", 0.3);
            s.surface.texture.cell_mm = tex.value("cell_mm", 40.0);
        }
    }

    if (!j.contains("camera")) raise(ErrorKind::format, "scene config needs a camera");
    const json& cam = j.at("camera");
    Vec3 eye = vec3_of(cam.at("position"), "camera position");
    Vec3 target = cam.contains("look_at") ? vec3_of(cam.at("look_at"), "look_at") : Vec3{};
    Vec3 up = cam.contains("up") ? vec3_of(cam.at("up"), "up") : Vec3{0, 1, 0};
    int width = cam.value("width", 640), height = cam.value("height", 480);
    s.camera = PinholeCamera::look_at(eye, target, up, cam.value("fx", 580.0),
                                      cam.value("fy", 580.0), width, height);
    if (cam.contains("cx")) s.camera.cx = cam.at("cx").get<double>();
    if (cam.contains("cy")) s.camera.cy = cam.at("cy").get<double>();
    if (s.camera.cx < 0 || s.camera.cx >= width || s.camera.cy < 0 || s.camera.cy >= height)
        raise(ErrorKind::format, "principal point outside the image");
    if (s.camera.fx <= 0 || s.camera.fy <= 0)
        raise(ErrorKind::format, "focal lengths must be positive");

    if (!j.contains("headset_leds") || !j.at("headset_leds").is_array())
        raise(ErrorKind::format, "scene config needs a headset_leds array");
    for (const json& lj : j.at("headset_leds")) {
        HeadsetLed led;
        if (!lj.contains("index")) raise(ErrorKind::format, "headset LED needs an index");
        led.index = lj.at("index").get<int>();
        led.light = light_of(lj, eye);
        s.headset_leds.push_back(led);
    }

    if (j.contains("ambient_lights"))
        for (const json& lj : j.at("ambient_lights")) s.ambient_lights.push_back(light_of(lj, eye));
    s.ambient_floor = j.value("ambient_floor", 0.0);
    s.skin_reflectance = j.value("skin_reflectance", 0.85);
    s.contact_epsilon_mm = j.value("contact_epsilon_mm", 0.5);

    if (j.contains("fingers")) {
        for (const json& fj : j.at("fingers")) {
            int id = fj.value("id", 2);
            Vec3 tip = vec3_of(fj.at("tip"), "finger tip");
            Vec3 axis = vec3_of(fj.at("axis"), "finger axis");
            s.fingers.push_back(CapsuleFinger::make(id, tip, axis, fj.value("length", 50.0),
                                                    fj.value("radius", 8.0)));
        }
    }

    if (j.contains("render")) {
        const json& r = j.at("render");
        s.render.exposure_gain = r.value("exposure_gain", 1.0);
        s.render.exposure_ms = r.value("exposure_ms", 2.4);
        if (r.contains("noise")) {
            const json& n = r.at("noise");
            s.render.noise.enabled = n.value("enabled", true);
            s.render.noise.read_sigma_lsb = n.value("read_sigma_lsb", 1.0);
            s.render.noise.shot = n.value("shot", false);
            s.render.noise.shot_electrons_per_lsb = n.value("shot_electrons_per_lsb", 40.0);
        }
    }

    s.validate();
    return s;
}

std::string scene_to_json_text(const Scene& s) {
    json j;
    json surf;
    surf["origin"] = to_json(s.surface.plane.origin);
    surf["normal"] = to_json(s.surface.plane.normal);
    surf["albedo"] = s.surface.albedo;
    if (s.surface.texture.kind != PlaneTexture::Kind::none) {
        surf["texture"] = {
            {"kind", s.surface.texture.kind == PlaneTexture::Kind::checker ? "checker" : "stripes"},
            {"secondary_albedo", s.surface.texture.secondary_albedo},
            {"cell_mm", s.surface.texture.cell_mm}};
    }
    j["surface"] = surf;

    // Camera is stored as pose vectors; look-at form keeps it hand-editable.
    Vec3 eye = s.camera.center();
    Vec3 fwd = s.camera.pose.r.transposed() * Vec3{0, 0, 1};
    Vec3 up_img = s.camera.pose.r.transposed() * Vec3{0, -1, 0};
    j["camera"] = {{"position", to_json(eye)},   {"look_at", to_json(eye + fwd * 100.0)},
                   {"up", to_json(up_img)},      {"fx", s.camera.fx},
                   {"fy", s.camera.fy},          {"cx", s.camera.cx},
                   {"cy", s.camera.cy},          {"width", s.camera.width},
                   {"height", s.camera.height}};

    json leds = json::array();
    for (const auto& led : s.headset_leds)
        leds.push_back({{"index", led.index},
                        {"position", to_json(led.light.position)},
                        {"intensity", led.light.intensity},
                        {"falloff", falloff_name(led.light.falloff)}});
    j["headset_leds"] = leds;

    json amb = json::array();
    for (const auto& l : s.ambient_lights)
        amb.push_back({{"position", to_json(l.position)},
                       {"intensity", l.intensity},
                       {"falloff", falloff_name(l.falloff)}});
    j["ambient_lights"] = amb;
    j["ambient_floor"] = s.ambient_floor;
    j["skin_reflectance"] = s.skin_reflectance;
    j["contact_epsilon_mm"] = s.contact_epsilon_mm;

    json fingers = json::array();
    for (const auto& f : s.fingers)
        fingers.push_back({{"id", f.finger_id},
                           {"tip", to_json(f.tip)},
                           {"axis", to_json(f.axis)},
                           {"length", f.length},
                           {"radius", f.radius}});
    j["fingers"] = fingers;

    j["render"] = {{"exposure_gain", s.render.exposure_gain},
                   {"exposure_ms", s.render.exposure_ms},
                   {"noise",
                    {{"enabled", s.render.noise.enabled},
                     {"read_sigma_lsb", s.render.noise.read_sigma_lsb},
                     {"shot", s.render.noise.shot},
                     {"shot_electrons_per_lsb", s.render.noise.shot_electrons_per_lsb}}}};
    return j.dump(2) + "\n";
}

Scene load_scene(const std::string& path) { return scene_from_json_text(slurp(path)); }
void save_scene(const Scene& scene, const std::string& path) {
    spit(scene_to_json_text(scene), path);
}

Trajectory trajectory_from_json_text(const std::string& text) {
    json j = parse(text, "trajectory");
    if (!j.contains("steps") || !j.at("steps").is_array())
        raise(ErrorKind::format, "trajectory needs a steps array");
    Trajectory traj;
    for (const json& sj : j.at("steps")) {
        TrajectoryStep step;
        if (sj.contains("fingers")) {
            for (const json& fj : sj.at("fingers")) {
                Scene::FingerPose p;
                p.finger_id = fj.value("id", 2);
                p.tip = vec3_of(fj.at("tip"), "finger tip");
                p.axis = vec3_of(fj.at("axis"), "finger axis").normalized();
                if (fj.contains("length")) p.length = fj.at("length").get<double>();
                if (fj.contains("radius")) p.radius = fj.at("radius").get<double>();
                step.fingers.push_back(p);
            }
        }
        traj.steps.push_back(std::move(step));
    }
    return traj;
}

std::string trajectory_to_json_text(const Trajectory& traj) {
    json steps = json::array();
    for (const auto& s : traj.steps) {
        json fingers = json::array();
        for (const auto& f : s.fingers) {
            json fj = {{"id", f.finger_id}, {"tip", to_json(f.tip)}, {"axis", to_json(f.axis)}};
            if (f.length) fj["length"] = *f.length;
            if (f.radius) fj["radius"] = *f.radius;
            fingers.push_back(fj);
        }
        steps.push_back({{"fingers", fingers}});
    }
    return json{{"steps", steps}}.dump(2) + "\n";
}

Trajectory load_trajectory(const std::string& path) {
    return trajectory_from_json_text(slurp(path));
}
void save_trajectory(const Trajectory& traj, const std::string& path) {
    spit(trajectory_to_json_text(traj), path);
}

// --- ground-truth sidecar ---------------------------------------------------

namespace {

json vec2_json(const Vec2& v) { return json::array({v.x, v.y}); }
Vec2 vec2_of(const json& j) { return {j[0].get<double>(), j[1].get<double>()}; }

}  // namespace

void save_truth(const StreamTruth& truth, const std::string& path) {
    json j;
    j["scene"] = json::parse(scene_to_json_text(truth.scene));
    json frames = json::array();
    for (size_t i = 0; i < truth.frames.size(); ++i) {
        json fingers = json::array();
        for (const auto& f : truth.frames[i].fingers) {
            json fj = {{"id", f.finger_id},
                       {"hover_mm", f.hover_mm},
                       {"touch", f.touch},
                       {"in_view", f.in_view},
                       {"length_mm", f.length_mm},
                       {"radius_mm", f.radius_mm},
                       {"tip_px", vec2_json(f.tip_px)},
                       {"pip_px", vec2_json(f.pip_px)},
                       {"mcp_px", vec2_json(f.mcp_px)},
                       {"wrist_px", vec2_json(f.wrist_px)}};
            json tips = json::object();
            for (const auto& [led, px] : f.shadow_tip_px) tips[std::to_string(led)] = vec2_json(px);
            fj["shadow_tip_px"] = tips;
            json tips3 = json::object();
            for (const auto& [led, w] : f.shadow_tip_world)
                tips3[std::to_string(led)] = to_json(w);
            fj["shadow_tip_world"] = tips3;
            fingers.push_back(fj);
        }
        frames.push_back({{"index", i}, {"fingers", fingers}});
    }
    j["frames"] = frames;
    spit(j.dump() + "\n", path);
}

StreamTruth load_truth(const std::string& path) {
    json j = parse(slurp(path), "truth sidecar");
    StreamTruth out;
    out.scene = scene_from_json_text(j.at("scene").dump());
    for (const json& fj : j.at("frames")) {
        GroundTruth gt;
        for (const json& fi : fj.at("fingers")) {
            FingerTruth ft;
            ft.finger_id = fi.at("id").get<int>();
            ft.hover_mm = fi.at("hover_mm").get<double>();
            ft.touch = fi.at("touch").get<bool>();
            ft.in_view = fi.at("in_view").get<bool>();
            ft.length_mm = fi.value("length_mm", 50.0);
            ft.radius_mm = fi.value("radius_mm", 8.0);
            ft.tip_px = vec2_of(fi.at("tip_px"));
            ft.pip_px = vec2_of(fi.at("pip_px"));
            ft.mcp_px = vec2_of(fi.at("mcp_px"));
            ft.wrist_px = vec2_of(fi.at("wrist_px"));
            for (const auto& [key, val] : fi.at("shadow_tip_px").items())
                ft.shadow_tip_px[std::stoi(key)] = vec2_of(val);
            for (const auto& [key, val] : fi.at("shadow_tip_world").items())
                ft.shadow_tip_world[std::stoi(key)] = vec3_of(val, "shadow tip");
            gt.fingers.push_back(std::move(ft));
        }
        out.frames.push_back(std::move(gt));
    }
    return out;
}

std::string example_scene_json() { return scene_to_json_text(make_default_scene()); }

std::string example_trajectory_json(int steps) {
    // Index finger descending to a tap, dwelling, then lifting off.
    Trajectory traj;
    for (int i = 0; i < steps; ++i) {
        double t = double(i) / std::max(1, steps - 1);
        double h;
        if (t < 0.4)
            h = 60.0 * (1.0 - t / 0.4);
        else if (t < 0.6)
            h = 0.0;
        else
            h = 60.0 * (t - 0.6) / 0.4;
        Scene::FingerPose p;
        p.finger_id = 2;
        p.tip = {10.0, 120.0, h};
        p.axis = Vec3{0, -0.766, 0.643};
        traj.steps.push_back({{p}});
    }
    return trajectory_to_json_text(traj);
}

}  // namespace eclipse
