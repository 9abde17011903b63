#pragma once

#include "edgeloc/types.hpp"

namespace edgeloc {

/// Global histogram equalization: v -> floor(255 * cdf(v) / N).
GrayImage equalize(const GrayImage& img);

struct CannyParams {
  double sigma = 1.4;
  /// Thresholds on the Sobel gradient magnitude. A negative `high` selects it
  /// by Otsu's method; a negative `low` means 0.4 * high.
  double low = -1.0;
  double high = -1.0;
};

/// Gaussian blur, Sobel gradients, non-maximum suppression, hysteresis.
/// Pixels within ceil(3 sigma) of the border are never edges.
EdgeMap canny(const GrayImage& img, const CannyParams& params = {});

/// Otsu threshold over the given non-negative samples (256 bins on [0, max]).
double otsuThreshold(const Grid<double>& values);

/// equalize() followed by canny(): the test-image edge extraction.
EdgeMap detectTestEdges(const GrayImage& img, const CannyParams& params = {});

}  // namespace edgeloc
