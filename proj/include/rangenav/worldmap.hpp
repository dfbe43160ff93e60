#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rangenav {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

/// Planar pose; heading in radians from the world x axis.
struct Pose2 {
    double x = 0.0;
    double y = 0.0;
    double psi = 0.0;
};

struct Segment {
    Vec2 a;
    Vec2 b;
};

struct Circle {
    Vec2 center;
    double radius = 0.0;
};

inline bool operator==(const Vec2& l, const Vec2& r) { return l.x == r.x && l.y == r.y; }
inline bool operator==(const Segment& l, const Segment& r) { return l.a == r.a && l.b == r.b; }
inline bool operator==(const Circle& l, const Circle& r) {
    return l.center == r.center && l.radius == r.radius;
}

class MapError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Static, enclosed 2D arena spanning [0,width]x[0,height]. Immutable once
/// built; the four boundary walls are always the first four entries of walls().
class WorldMap {
public:
    WorldMap(std::string name, double width, double height, std::vector<Segment> interior_walls,
             std::vector<Circle> obstacles);

    const std::string& name() const { return name_; }
    double width() const { return width_; }
    double height() const { return height_; }
    const std::vector<Segment>& walls() const { return walls_; }
    const std::vector<Circle>& obstacles() const { return obstacles_; }
    /// Walls beyond the four synthesized boundary walls.
    std::span<const Segment> interior_walls() const {
        return std::span<const Segment>(walls_).subspan(4);
    }

    bool contains(Vec2 p) const {
        return p.x >= 0.0 && p.x <= width_ && p.y >= 0.0 && p.y <= height_;
    }

    friend bool operator==(const WorldMap&, const WorldMap&) = default;

private:
    std::string name_;
    double width_;
    double height_;
    std::vector<Segment> walls_;
    std::vector<Circle> obstacles_;
};

/// Parses a map document ({"format":1, name, width, height, obstacles, walls}).
/// Boundary walls present in the document are recognised and not duplicated.
WorldMap parse_map(std::string_view document);
WorldMap load_map(const std::string& path);
std::string serialize_map(const WorldMap& map);

struct RangeScan {
    std::vector<double> beam_angles;
    std::vector<double> ranges;
};

/// Distance along a ray to the first wall or obstacle, clipped to max_range.
double cast_ray(const WorldMap& map, Vec2 origin, double world_angle, double max_range);

RangeScan raycast(const WorldMap& map, const Pose2& pose, std::span<const double> beam_angles,
                  double max_range);

/// Evenly spaced beams over the full circle, starting at -pi, ascending.
std::vector<double> uniform_beams(int count);

/// Signed clearance between a disk and the nearest geometry: negative or zero
/// means contact. Leaving the arena counts as contact.
double clearance(const WorldMap& map, Vec2 center, double radius);

bool collision_check(const WorldMap& map, const Pose2& pose, double footprint_radius);

class SpawnError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kMaxSpawnAttempts = 10'000;

Pose2 sample_spawn(const WorldMap& map, std::mt19937_64& rng, double clearance_radius);

double wrap_angle(double angle);

}  // namespace rangenav
