#include "edgeloc/image_pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace edgeloc {

GrayImage equalize(const GrayImage& img) {
  std::array<long, 256> hist{};
  for (Eigen::Index i = 0; i < img.size(); ++i) ++hist[img.data()[i]];
  const long total = static_cast<long>(img.size());
  if (total == 0) return img;
  std::array<std::uint8_t, 256> lut{};
  long cdf = 0;
  for (int v = 0; v < 256; ++v) {
    cdf += hist[v];
    lut[v] = static_cast<std::uint8_t>(255L * cdf / total);
  }
  GrayImage out(img.rows(), img.cols());
  for (Eigen::Index i = 0; i < img.size(); ++i) out.data()[i] = lut[img.data()[i]];
  return out;
}

namespace {

Grid<double> gaussianBlur(const Grid<double>& in, double sigma) {
  if (sigma <= 0) return in;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0;
  for (int k = -radius; k <= radius; ++k) sum += kernel[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));
  for (double& k : kernel) k /= sum;

  const int h = static_cast<int>(in.rows()), w = static_cast<int>(in.cols());
  Grid<double> tmp(h, w), out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int k = -radius; k <= radius; ++k) acc += kernel[k + radius] * in(y, std::clamp(x + k, 0, w - 1));
      tmp(y, x) = acc;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int k = -radius; k <= radius; ++k) acc += kernel[k + radius] * tmp(std::clamp(y + k, 0, h - 1), x);
      out(y, x) = acc;
    }
  return out;
}

}  // namespace

double otsuThreshold(const Grid<double>& values) {
  const double max_v = values.size() ? values.maxCoeff() : 0.0;
  if (!(max_v > 0)) return 0.0;
  constexpr int kBins = 256;
  std::array<double, kBins> hist{};
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const int b = std::min(kBins - 1, static_cast<int>(values.data()[i] / max_v * kBins));
    hist[b] += 1;
  }
  const double total = static_cast<double>(values.size());
  double sum_all = 0;
  for (int b = 0; b < kBins; ++b) sum_all += b * hist[b];
  double w0 = 0, sum0 = 0, best = -1;
  int best_bin = 0;
  for (int b = 0; b < kBins; ++b) {
    w0 += hist[b];
    if (w0 == 0) continue;
    const double w1 = total - w0;
    if (w1 == 0) break;
    sum0 += b * hist[b];
    const double m0 = sum0 / w0, m1 = (sum_all - sum0) / w1;
    const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
    if (between > best) {
      best = between;
      best_bin = b;
    }
  }
  return (best_bin + 1) * max_v / kBins;
}

EdgeMap canny(const GrayImage& img, const CannyParams& params) {
  const int h = static_cast<int>(img.rows()), w = static_cast<int>(img.cols());
  EdgeMap edges = EdgeMap::Zero(h, w);
  const int border = std::max(1, static_cast<int>(std::ceil(3.0 * params.sigma)));
  if (h <= 2 * border || w <= 2 * border) return edges;

  const Grid<double> blurred = gaussianBlur(img.cast<double>(), params.sigma);
  Grid<double> gx = Grid<double>::Zero(h, w), gy = Grid<double>::Zero(h, w), mag = Grid<double>::Zero(h, w);
  for (int y = 1; y < h - 1; ++y)
    for (int x = 1; x < w - 1; ++x) {
      const auto b = [&](int dy, int dx) { return blurred(y + dy, x + dx); };
      gx(y, x) = (b(-1, 1) + 2 * b(0, 1) + b(1, 1)) - (b(-1, -1) + 2 * b(0, -1) + b(1, -1));
      gy(y, x) = (b(1, -1) + 2 * b(1, 0) + b(1, 1)) - (b(-1, -1) + 2 * b(-1, 0) + b(-1, 1));
      mag(y, x) = std::hypot(gx(y, x), gy(y, x));
    }

  double high = params.high;
  if (high < 0) high = otsuThreshold(mag.block(border, border, h - 2 * border, w - 2 * border));
  double low = params.low < 0 ? 0.4 * high : params.low;
  if (low > high) throw PreconditionError("canny: low threshold exceeds high threshold");

  // Non-maximum suppression; strict on the backward neighbor so plateaus stay 1 px wide.
  Grid<double> nms = Grid<double>::Zero(h, w);
  for (int y = border; y < h - border; ++y)
    for (int x = border; x < w - border; ++x) {
      const double m = mag(y, x);
      if (m <= 0) continue;
      double angle = std::atan2(gy(y, x), gx(y, x)) * (180.0 / M_PI);
      if (angle < 0) angle += 180.0;
      int dx, dy;
      if (angle < 22.5 || angle >= 157.5) dx = 1, dy = 0;
      else if (angle < 67.5) dx = 1, dy = 1;
      else if (angle < 112.5) dx = 0, dy = 1;
      else dx = -1, dy = 1;
      if (m > mag(y - dy, x - dx) && m >= mag(y + dy, x + dx)) nms(y, x) = m;
    }

  std::vector<std::pair<int, int>> stack;
  for (int y = border; y < h - border; ++y)
    for (int x = border; x < w - border; ++x)
      if (nms(y, x) >= high && nms(y, x) > 0 && !edges(y, x)) {
        edges(y, x) = 1;
        stack.emplace_back(x, y);
        while (!stack.empty()) {
          const auto [cx, cy] = stack.back();
          stack.pop_back();
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              const int nx = cx + dx, ny = cy + dy;
              if (nx < border || ny < border || nx >= w - border || ny >= h - border) continue;
              if (edges(ny, nx) || nms(ny, nx) < low || nms(ny, nx) <= 0) continue;
              edges(ny, nx) = 1;
              stack.emplace_back(nx, ny);
            }
        }
      }
  return edges;
}

EdgeMap detectTestEdges(const GrayImage& img, const CannyParams& params) { return canny(equalize(img), params); }

}  // namespace edgeloc
