#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace korogrid {

/// Level/position pair of a one-dimensional dyadic hat function.
///
/// The hat is centred at x = position * 2^-level with half-width 2^-level.
/// Valid positions are 1 <= position <= 2^level - 1; hierarchical hats
/// additionally require an odd position.
struct LevelIndex1D {
  int level = 1;
  std::int64_t position = 1;

  double mesh_width() const { return std::ldexp(1.0, -level); }
  double center() const { return std::ldexp(static_cast<double>(position), -level); }

  bool valid() const;
  bool hierarchical() const { return valid() && (position % 2 == 1); }

  friend bool operator==(const LevelIndex1D&, const LevelIndex1D&) = default;
};

/// 1 - |x| on [-1, 1], zero elsewhere.
template <typename Scalar>
Scalar mother_hat(Scalar x) {
  using std::abs;
  const Scalar r = Scalar(1) - abs(x);
  return r > Scalar(0) ? r : Scalar(0);
}

/// Hat function of `li` evaluated at `x`.
///
/// At the support endpoints x_{l,i} +- h_l the scaled argument is exactly +-1
/// (dyadic arithmetic), so the result there is exactly 0.
template <typename Scalar>
Scalar hat(const LevelIndex1D& li, Scalar x) {
  return mother_hat<Scalar>((x - Scalar(li.center())) / Scalar(li.mesh_width()));
}

/// Interior points x_{l,i}, i = 1..2^l-1, in increasing order.
std::vector<double> grid_points(int level);

/// Odd positions {1, 3, ..., 2^l - 1}.
std::vector<std::int64_t> hierarchical_positions(int level);

/// Odd position whose level-`level` hat support contains x (x in [0, 1]).
/// At a shared support endpoint the right-hand hat is chosen; both vanish there.
std::int64_t containing_position(int level, double x);

class InvalidLevel : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace korogrid
