#include "korogrid/basis1d.hpp"

#include <string>

namespace korogrid {

namespace {

// 2^62 is the largest dyadic denominator we index with int64 positions.
constexpr int kMaxLevel = 62;

void check_level(int level) {
  if (level < 1 || level > kMaxLevel)
    throw InvalidLevel("level must be in [1, " + std::to_string(kMaxLevel) +
                       "], got " + std::to_string(level));
}

}  // namespace

bool LevelIndex1D::valid() const {
  if (level < 1 || level > kMaxLevel) return false;
  const std::int64_t last = (std::int64_t{1} << level) - 1;
  return position >= 1 && position <= last;
}

std::vector<double> grid_points(int level) {
  check_level(level);
  const std::int64_t count = (std::int64_t{1} << level) - 1;
  std::vector<double> points;
  points.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 1; i <= count; ++i)
    points.push_back(std::ldexp(static_cast<double>(i), -level));
  return points;
}

std::vector<std::int64_t> hierarchical_positions(int level) {
  check_level(level);
  const std::int64_t last = (std::int64_t{1} << level) - 1;
  std::vector<std::int64_t> positions;
  positions.reserve(static_cast<std::size_t>(std::int64_t{1} << (level - 1)));
  for (std::int64_t i = 1; i <= last; i += 2) positions.push_back(i);
  return positions;
}

std::int64_t containing_position(int level, double x) {
  const std::int64_t cells = std::int64_t{1} << (level - 1);
  auto cell = static_cast<std::int64_t>(std::floor(std::ldexp(x, level - 1)));
  if (cell < 0) cell = 0;
  if (cell >= cells) cell = cells - 1;
  return 2 * cell + 1;
}

}  // namespace korogrid
