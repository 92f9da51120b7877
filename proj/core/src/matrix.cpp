#include "cemb/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cemb/errors.hpp"

namespace cemb {

RealMatrix::RealMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("matrix data has " + std::to_string(data_.size()) +
                     " entries, expected " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
}

bool RealMatrix::all_finite() const { return cemb::all_finite(data_); }

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

Vector affine(const RealMatrix& weights, std::span<const double> bias,
              std::span<const double> x) {
  if (weights.cols() != x.size() || weights.rows() != bias.size()) {
    throw ShapeError("affine: weights " + std::to_string(weights.rows()) + "x" +
                     std::to_string(weights.cols()) + ", bias " +
                     std::to_string(bias.size()) + ", input " + std::to_string(x.size()));
  }
  Vector y(bias.begin(), bias.end());
  for (std::size_t r = 0; r < weights.rows(); ++r) {
    const auto w = weights.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < w.size(); ++c) acc += w[c] * x[c];
    y[r] += acc;
  }
  return y;
}

}  // namespace cemb
