#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "lsd/model.hpp"

namespace lsd::testutil {

// Relative error with the denominator floored at 1e-4: coordinates whose
// gradient sits below the central-difference noise floor (~1e-9 absolute for
// these loss magnitudes) are compared absolutely instead of amplifying noise.
inline double rel_err(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-4});
  return std::abs(analytic - numeric) / denom;
}

// Central finite difference of f at coordinate i of the flattened parameters.
template <typename T>
double central_diff(Model<T>& model, std::size_t coordinate,
                    const std::function<double()>& f, double h = 1e-5) {
  std::vector<T> flat = model.params().flatten();
  const T original = flat[coordinate];
  flat[coordinate] = original + static_cast<T>(h);
  model.params().load_flat(flat);
  const double plus = f();
  flat[coordinate] = original - static_cast<T>(h);
  model.params().load_flat(flat);
  const double minus = f();
  flat[coordinate] = original;
  model.params().load_flat(flat);
  return (plus - minus) / (2.0 * h);
}

}  // namespace lsd::testutil
