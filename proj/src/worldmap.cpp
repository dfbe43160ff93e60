#include "rangenav/worldmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace rangenav {

namespace {

using json = nlohmann::json;

std::vector<Segment> boundary_walls(double w, double h) {
    return {Segment{{0.0, 0.0}, {w, 0.0}}, Segment{{w, 0.0}, {w, h}}, Segment{{w, h}, {0.0, h}},
            Segment{{0.0, h}, {0.0, 0.0}}};
}

bool same_segment(const Segment& s, const Segment& t) {
    return (s.a == t.a && s.b == t.b) || (s.a == t.b && s.b == t.a);
}

double number_field(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw MapError(where + ": missing field '" + key + "'");
    if (!it->is_number()) throw MapError(where + ": field '" + key + "' must be a number");
    double v = it->get<double>();
    if (!std::isfinite(v)) throw MapError(where + ": field '" + key + "' must be finite");
    return v;
}

double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
Vec2 sub(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }

double point_segment_distance(Vec2 p, const Segment& s) {
    const Vec2 ab = sub(s.b, s.a);
    const double len2 = dot(ab, ab);
    double t = len2 > 0.0 ? dot(sub(p, s.a), ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const Vec2 q{s.a.x + t * ab.x, s.a.y + t * ab.y};
    return std::hypot(p.x - q.x, p.y - q.y);
}

// Ray parameter of the hit with a segment, or +inf.
double ray_segment(Vec2 o, Vec2 d, const Segment& s) {
    const Vec2 e = sub(s.b, s.a);
    const double denom = cross(d, e);
    if (denom == 0.0) return std::numeric_limits<double>::infinity();
    const Vec2 ao = sub(s.a, o);
    const double t = cross(ao, e) / denom;
    const double u = cross(ao, d) / denom;
    if (t < 0.0 || u < 0.0 || u > 1.0) return std::numeric_limits<double>::infinity();
    return t;
}

double ray_circle(Vec2 o, Vec2 d, const Circle& c) {
    const Vec2 oc = sub(o, c.center);
    const double b = dot(oc, d);
    const double cc = dot(oc, oc) - c.radius * c.radius;
    if (cc <= 0.0) return 0.0;
    const double disc = b * b - cc;
    if (disc < 0.0 || b > 0.0) return std::numeric_limits<double>::infinity();
    const double sq = std::sqrt(disc);
    // -b - sq is the near root; use the stable form cc / (-b + sq).
    return cc / (-b + sq);
}

}  // namespace

double wrap_angle(double angle) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    if (angle >= -std::numbers::pi && angle < std::numbers::pi) return angle;
    double a = std::fmod(angle + std::numbers::pi, two_pi);
    if (a < 0.0) a += two_pi;
    a -= std::numbers::pi;
    // fmod can round up to exactly +pi
    if (a >= std::numbers::pi) a -= two_pi;
    return a;
}

WorldMap::WorldMap(std::string name, double width, double height,
                   std::vector<Segment> interior_walls, std::vector<Circle> obstacles)
    : name_(std::move(name)), width_(width), height_(height), obstacles_(std::move(obstacles)) {
    if (!(width > 0.0) || !std::isfinite(width)) throw MapError("width must be positive");
    if (!(height > 0.0) || !std::isfinite(height)) throw MapError("height must be positive");
    for (std::size_t i = 0; i < obstacles_.size(); ++i) {
        const Circle& c = obstacles_[i];
        const std::string where = "obstacles[" + std::to_string(i) + "]";
        if (!(c.radius > 0.0)) throw MapError(where + ".r must be positive");
        if (!contains(c.center)) throw MapError(where + " center lies outside the arena");
    }
    walls_ = boundary_walls(width, height);
    for (const Segment& s : interior_walls) {
        if (std::none_of(walls_.begin(), walls_.begin() + 4,
                         [&](const Segment& b) { return same_segment(b, s); })) {
            walls_.push_back(s);
        }
    }
}

WorldMap parse_map(std::string_view document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw MapError(std::string("map is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw MapError("map document must be an object");
    if (auto f = doc.find("format"); f != doc.end()) {
        if (!f->is_number_integer() || f->get<int>() != 1)
            throw MapError("format: unsupported map format (expected 1)");
    }
    std::string name = "unnamed";
    if (auto n = doc.find("name"); n != doc.end()) {
        if (!n->is_string()) throw MapError("name must be a string");
        name = n->get<std::string>();
    }
    const double width = number_field(doc, "width", "map");
    const double height = number_field(doc, "height", "map");
    if (!(width > 0.0)) throw MapError("width must be positive");
    if (!(height > 0.0)) throw MapError("height must be positive");

    std::vector<Circle> obstacles;
    if (auto obs = doc.find("obstacles"); obs != doc.end()) {
        if (!obs->is_array()) throw MapError("obstacles must be an array");
        for (std::size_t i = 0; i < obs->size(); ++i) {
            const std::string where = "obstacles[" + std::to_string(i) + "]";
            const json& o = (*obs)[i];
            if (!o.is_object()) throw MapError(where + " must be an object");
            obstacles.push_back(Circle{{number_field(o, "cx", where), number_field(o, "cy", where)},
                                       number_field(o, "r", where)});
        }
    }
    std::vector<Segment> walls;
    if (auto ws = doc.find("walls"); ws != doc.end()) {
        if (!ws->is_array()) throw MapError("walls must be an array");
        for (std::size_t i = 0; i < ws->size(); ++i) {
            const std::string where = "walls[" + std::to_string(i) + "]";
            const json& w = (*ws)[i];
            if (!w.is_object()) throw MapError(where + " must be an object");
            walls.push_back(Segment{{number_field(w, "x1", where), number_field(w, "y1", where)},
                                    {number_field(w, "x2", where), number_field(w, "y2", where)}});
        }
    }
    return WorldMap(std::move(name), width, height, std::move(walls), std::move(obstacles));
}

WorldMap load_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MapError("cannot open map file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_map(buf.str());
    } catch (const MapError& e) {
        throw MapError(path + ": " + e.what());
    }
}

std::string serialize_map(const WorldMap& map) {
    json doc;
    doc["format"] = 1;
    doc["name"] = map.name();
    doc["width"] = map.width();
    doc["height"] = map.height();
    doc["obstacles"] = json::array();
    for (const Circle& c : map.obstacles())
        doc["obstacles"].push_back({{"cx", c.center.x}, {"cy", c.center.y}, {"r", c.radius}});
    doc["walls"] = json::array();
    for (const Segment& s : map.interior_walls())
        doc["walls"].push_back({{"x1", s.a.x}, {"y1", s.a.y}, {"x2", s.b.x}, {"y2", s.b.y}});
    return doc.dump(2) + "\n";
}

double cast_ray(const WorldMap& map, Vec2 origin, double world_angle, double max_range) {
    const Vec2 d{std::cos(world_angle), std::sin(world_angle)};
    double best = max_range;
    for (const Segment& s : map.walls()) best = std::min(best, ray_segment(origin, d, s));
    for (const Circle& c : map.obstacles()) best = std::min(best, ray_circle(origin, d, c));
    return best;
}

RangeScan raycast(const WorldMap& map, const Pose2& pose, std::span<const double> beam_angles,
                  double max_range) {
    RangeScan scan;
    scan.beam_angles.assign(beam_angles.begin(), beam_angles.end());
    scan.ranges.reserve(beam_angles.size());
    for (double beam : beam_angles)
        scan.ranges.push_back(cast_ray(map, {pose.x, pose.y}, pose.psi + beam, max_range));
    return scan;
}

std::vector<double> uniform_beams(int count) {
    if (count < 1) throw std::invalid_argument("beam count must be at least 1");
    std::vector<double> beams(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        beams[static_cast<std::size_t>(i)] =
            -std::numbers::pi + 2.0 * std::numbers::pi * static_cast<double>(i) / count;
    return beams;
}

double clearance(const WorldMap& map, Vec2 center, double radius) {
    if (!map.contains(center)) {
        const double dx = std::max({-center.x, center.x - map.width(), 0.0});
        const double dy = std::max({-center.y, center.y - map.height(), 0.0});
        return -std::hypot(dx, dy) - radius;
    }
    double best = std::numeric_limits<double>::infinity();
    for (const Segment& s : map.walls()) best = std::min(best, point_segment_distance(center, s));
    for (const Circle& c : map.obstacles())
        best = std::min(best, std::hypot(center.x - c.center.x, center.y - c.center.y) - c.radius);
    return best - radius;
}

bool collision_check(const WorldMap& map, const Pose2& pose, double footprint_radius) {
    return clearance(map, {pose.x, pose.y}, footprint_radius) <= 0.0;
}

Pose2 sample_spawn(const WorldMap& map, std::mt19937_64& rng, double clearance_radius) {
    std::uniform_real_distribution<double> ux(0.0, map.width());
    std::uniform_real_distribution<double> uy(0.0, map.height());
    std::uniform_real_distribution<double> upsi(-std::numbers::pi, std::numbers::pi);
    for (int attempt = 0; attempt < kMaxSpawnAttempts; ++attempt) {
        const double x = ux(rng);
        const double y = uy(rng);
        if (clearance(map, {x, y}, clearance_radius) > 0.0) return Pose2{x, y, upsi(rng)};
    }
    throw SpawnError("map too crowded for clearance " + std::to_string(clearance_radius) + " m");
}

}  // namespace rangenav
