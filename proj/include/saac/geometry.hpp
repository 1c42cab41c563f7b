#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace saac {

// Continuous position in map cells. Origin is the top-left corner, +y points down.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {a.x * s, a.y * s}; }
  friend constexpr bool operator==(Vec2, Vec2) = default;

  double norm() const { return std::hypot(x, y); }
};

inline double distance(Vec2 p, Vec2 q) { return std::hypot(p.x - q.x, p.y - q.y); }

// Rectangular arena [0, width] x [0, height].
class GameDomain {
 public:
  GameDomain() = default;
  GameDomain(double width, double height) : width_(width), height_(height) {
    if (!(width > 0.0) || !(height > 0.0) || !std::isfinite(width) || !std::isfinite(height)) {
      throw std::invalid_argument("game domain extents must be positive and finite");
    }
  }

  double width() const { return width_; }
  double height() const { return height_; }
  double area() const { return width_ * height_; }

  bool contains(Vec2 p) const { return p.x >= 0.0 && p.x <= width_ && p.y >= 0.0 && p.y <= height_; }

  Vec2 clamp(Vec2 p) const { return {std::clamp(p.x, 0.0, width_), std::clamp(p.y, 0.0, height_)}; }

  // Integer cell extents used by observation grids and the action coordinates.
  int cells_x() const { return static_cast<int>(std::ceil(width_)); }
  int cells_y() const { return static_cast<int>(std::ceil(height_)); }

  friend bool operator==(const GameDomain&, const GameDomain&) = default;

 private:
  double width_ = 32.0;
  double height_ = 32.0;
};

/// Longest straight segment inside the arena, i.e. its diagonal.
inline double longest_internal_distance(const GameDomain& domain) {
  return std::hypot(domain.width(), domain.height());
}

struct Cell {
  int x = 0;
  int y = 0;
  friend constexpr bool operator==(Cell, Cell) = default;
};

inline Cell cell_of(Vec2 p, const GameDomain& domain) {
  return {std::clamp(static_cast<int>(std::floor(p.x)), 0, domain.cells_x() - 1),
          std::clamp(static_cast<int>(std::floor(p.y)), 0, domain.cells_y() - 1)};
}

inline Vec2 cell_center(Cell c) { return {c.x + 0.5, c.y + 0.5}; }

}  // namespace saac
