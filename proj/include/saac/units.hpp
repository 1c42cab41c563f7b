#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>

namespace saac {

struct UnitStats {
  std::string name;
  double health_max = 0.0;    // hit points
  double sight = 0.0;         // cells
  double attack_range = 0.0;  // cells
  double speed = 0.0;         // cells per second
  double dps = 0.0;           // hit points per second

  friend bool operator==(const UnitStats&, const UnitStats&) = default;
};

namespace units {

inline const UnitStats& marine() {
  static const UnitStats s{"marine", 45.0, 9.0, 5.0, 3.15, 9.8};
  return s;
}
inline const UnitStats& zergling() {
  static const UnitStats s{"zergling", 35.0, 8.0, 0.1, 4.13, 10.0};
  return s;
}
inline const UnitStats& drone() {
  static const UnitStats s{"drone", 40.0, 8.0, 0.1, 3.94, 4.67};
  return s;
}
inline const UnitStats& void_ray() {
  static const UnitStats s{"void_ray", 150.0, 10.0, 6.0, 3.85, 16.8};
  return s;
}

inline std::array<const UnitStats*, 4> all() { return {&marine(), &zergling(), &drone(), &void_ray()}; }

inline const UnitStats& by_name(std::string_view name) {
  for (const UnitStats* s : all()) {
    if (s->name == name) return *s;
  }
  throw std::invalid_argument("unknown unit type: " + std::string(name));
}

}  // namespace units
}  // namespace saac
