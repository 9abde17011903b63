#include "edgeloc/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "edgeloc/fft.hpp"

namespace edgeloc {

std::string toString(Metric metric) {
  switch (metric) {
    case Metric::WHS: return "whs";
    case Metric::NCC: return "ncc";
    case Metric::SSD: return "ssd";
  }
  return "whs";
}

Metric metricFromString(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "whs") return Metric::WHS;
  if (lower == "ncc") return Metric::NCC;
  if (lower == "ssd") return Metric::SSD;
  throw PreconditionError("unknown metric '" + name + "' (expected whs, ncc or ssd)");
}

Template makeTemplate(EdgeMap patch, EdgeMap mask, Eigen::Vector2i center, Eigen::Vector3d anchor3d) {
  if (patch.rows() != mask.rows() || patch.cols() != mask.cols())
    throw SizeMismatchError("template patch and mask sizes differ");
  Template t;
  t.patch = std::move(patch);
  t.mask = std::move(mask);
  t.center = center;
  t.anchor3d = anchor3d;
  const auto edge = (t.patch != 0);
  const auto in = (t.mask != 0);
  t.c_plus = static_cast<int>((edge && in).count());
  t.c_minus = static_cast<int>((!edge && in).count());
  return t;
}

std::vector<Template> extractTemplates(const EdgeMap& baseline, const EdgeMap& render_mask, const GeometryBuffer& buf,
                                       const CameraModeld& camera, const RigidTransformd& camera_from_station,
                                       const TemplateOptions& options) {
  const int s = options.size;
  if (s <= 0 || (s & (s - 1)) != 0) throw PreconditionError("template size must be a power of two");
  if (options.max_count < 1) throw PreconditionError("template count must be positive");
  const int h = static_cast<int>(baseline.rows()), w = static_cast<int>(baseline.cols());
  const int half = s / 2;

  // Integral image of edge counts.
  Grid<int> integral = Grid<int>::Zero(h + 1, w + 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      integral(y + 1, x + 1) = integral(y, x + 1) + integral(y + 1, x) - integral(y, x) + (baseline(y, x) != 0);
  const auto patchCount = [&](int cx, int cy) {
    const int x0 = cx - half, y0 = cy - half;
    return integral(y0 + s, x0 + s) - integral(y0, x0 + s) - integral(y0 + s, x0) + integral(y0, x0);
  };

  struct Candidate {
    int density;
    int index;
  };
  std::vector<Candidate> candidates;
  for (int y = half; y <= h - half; ++y)
    for (int x = half; x <= w - half; ++x)
      if (y < h && x < w && baseline(y, x) && buf.rendered(x, y)) candidates.push_back({patchCount(x, y), y * w + x});
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.density > b.density; });

  // Spacing test on a coarse grid of accepted centers.
  const double spacing = std::max(0.0, options.min_spacing);
  const int cell = std::max(1, static_cast<int>(std::ceil(spacing)));
  std::unordered_map<long, std::vector<Eigen::Vector2i>> grid;
  const auto cellKey = [&](int gx, int gy) { return static_cast<long>(gy) * 100003L + gx; };

  std::vector<Template> templates;
  for (const Candidate& c : candidates) {
    if (static_cast<int>(templates.size()) >= options.max_count) break;
    const int x = c.index % w, y = c.index / w;
    const int gx = x / cell, gy = y / cell;
    bool ok = true;
    for (int dy = -1; dy <= 1 && ok; ++dy)
      for (int dx = -1; dx <= 1 && ok; ++dx) {
        auto it = grid.find(cellKey(gx + dx, gy + dy));
        if (it == grid.end()) continue;
        for (const Eigen::Vector2i& p : it->second)
          if ((p - Eigen::Vector2i(x, y)).cast<double>().norm() < spacing) {
            ok = false;
            break;
          }
      }
    if (!ok) continue;
    grid[cellKey(gx, gy)].emplace_back(x, y);
    const Eigen::Vector3d anchor = backproject(buf, Eigen::Vector2d(x, y), camera, camera_from_station);
    templates.push_back(makeTemplate(baseline.block(y - half, x - half, s, s), render_mask.block(y - half, x - half, s, s),
                                     Eigen::Vector2i(x, y), anchor));
  }
  if (static_cast<int>(templates.size()) < std::min(4, options.max_count))
    throw TooFewEdgePixelsError("only " + std::to_string(templates.size()) + " template centers available");
  return templates;
}

EdgeMap crop(const EdgeMap& test, const SearchWindow& window) {
  return test.block(window.y0, window.x0, window.height, window.width);
}

namespace {

void checkSizes(const Template& t, const EdgeMap& window) {
  if (t.rows() == 0 || t.cols() == 0) throw SizeMismatchError("empty template");
  if (window.rows() < t.rows() || window.cols() < t.cols())
    throw SizeMismatchError("search window smaller than template");
}

ScoreMatrix emptyScores(Metric metric, const Template& t, const EdgeMap& window) {
  ScoreMatrix m;
  m.metric = metric;
  m.template_rows = t.rows();
  m.template_cols = t.cols();
  m.values.setZero(window.rows() - t.rows() + 1, window.cols() - t.cols() + 1);
  return m;
}

Grid<double> reversed(const Grid<double>& k) { return k.reverse(); }

/// Valid-region crop of a full linear convolution with a kernel of the given size.
Grid<double> validRegion(const Grid<double>& full, int window_rows, int window_cols, int kernel_rows, int kernel_cols) {
  return full.block(kernel_rows - 1, kernel_cols - 1, window_rows - kernel_rows + 1, window_cols - kernel_cols + 1);
}

/// Sum over every template-sized placement, by integral image.
Grid<double> boxSums(const Grid<double>& img, int rows, int cols) {
  const int h = static_cast<int>(img.rows()), w = static_cast<int>(img.cols());
  Grid<double> integral = Grid<double>::Zero(h + 1, w + 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      integral(y + 1, x + 1) = integral(y, x + 1) + integral(y + 1, x) - integral(y, x) + img(y, x);
  Grid<double> out(h - rows + 1, w - cols + 1);
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j)
      out(i, j) = integral(i + rows, j + cols) - integral(i, j + cols) - integral(i + rows, j) + integral(i, j);
  return out;
}

/// Valid cross-correlation of `image` with `kernel` via FFT.
Grid<double> correlateValid(const Grid<double>& image, const Grid<double>& kernel) {
  const int h = static_cast<int>(image.rows()), w = static_cast<int>(image.cols());
  const int kh = static_cast<int>(kernel.rows()), kw = static_cast<int>(kernel.cols());
  const fft::Shape shape = fft::convolutionShape(h, w, kh, kw);
  const fft::Spectrum fi = fft::forward(image, shape);
  const fft::Spectrum fk = fft::forward(reversed(kernel), shape);
  fft::Spectrum acc(shape);
  acc.addProduct(1.0, fk, fi);
  return validRegion(fft::inverse(std::move(acc)), h, w, kh, kw);
}

}  // namespace

ScoreMatrix whsScoresNaive(const Template& t, const EdgeMap& window) {
  checkSizes(t, window);
  ScoreMatrix m = emptyScores(Metric::WHS, t, window);
  const double w_plus = t.c_plus > 0 ? 1.0 / t.c_plus : 0.0;
  const double w_minus = t.c_minus > 0 ? 1.0 / t.c_minus : 0.0;
  std::vector<std::pair<int, int>> edge_px, flat_px;
  for (int u = 0; u < t.rows(); ++u)
    for (int v = 0; v < t.cols(); ++v) {
      if (!t.mask(u, v)) continue;
      (t.patch(u, v) ? edge_px : flat_px).emplace_back(u, v);
    }
  for (Eigen::Index i = 0; i < m.values.rows(); ++i)
    for (Eigen::Index j = 0; j < m.values.cols(); ++j) {
      int s_plus = 0, s_minus = 0;
      for (const auto& [u, v] : edge_px) s_plus += window(i + u, j + v) != 0;
      for (const auto& [u, v] : flat_px) s_minus += window(i + u, j + v) == 0;
      m.values(i, j) = w_plus * s_plus + w_minus * s_minus;
    }
  return m;
}

ScoreMatrix whsScoresFft(const Template& t, const EdgeMap& window) {
  checkSizes(t, window);
  ScoreMatrix m = emptyScores(Metric::WHS, t, window);
  const double w_plus = t.c_plus > 0 ? 1.0 / t.c_plus : 0.0;
  const double w_minus = t.c_minus > 0 ? 1.0 / t.c_minus : 0.0;
  if (w_plus == 0 && w_minus == 0) return m;

  const Grid<double> mask = (t.mask != 0).cast<double>();
  const Grid<double> edge = (t.patch != 0).cast<double>();
  const Grid<double> kernel_plus = mask * edge;
  const Grid<double> kernel_minus = mask * (1.0 - edge);
  const Grid<double> test_plus = (window != 0).cast<double>();
  const Grid<double> test_minus = 1.0 - test_plus;

  const int h = static_cast<int>(window.rows()), w = static_cast<int>(window.cols());
  const fft::Shape shape = fft::convolutionShape(h, w, t.rows(), t.cols());
  fft::Spectrum acc(shape);
  if (w_plus != 0) acc.addProduct(w_plus, fft::forward(reversed(kernel_plus), shape), fft::forward(test_plus, shape));
  if (w_minus != 0)
    acc.addProduct(w_minus, fft::forward(reversed(kernel_minus), shape), fft::forward(test_minus, shape));
  m.values = validRegion(fft::inverse(std::move(acc)), h, w, t.rows(), t.cols());
  return m;
}

ScoreMatrix nccScores(const Template& t, const EdgeMap& window) {
  checkSizes(t, window);
  ScoreMatrix m = emptyScores(Metric::NCC, t, window);
  const Grid<double> patch = (t.patch != 0).cast<double>();
  const double n = static_cast<double>(patch.size());
  const Grid<double> centered = patch - patch.mean();
  const double template_energy = centered.square().sum();
  const Grid<double> img = (window != 0).cast<double>();
  const Grid<double> numerator = correlateValid(img, centered);
  const Grid<double> sums = boxSums(img, t.rows(), t.cols());
  const Grid<double> sq_sums = boxSums(img.square(), t.rows(), t.cols());
  constexpr double kEps = 1e-9;
  for (Eigen::Index i = 0; i < m.values.rows(); ++i)
    for (Eigen::Index j = 0; j < m.values.cols(); ++j) {
      const double window_energy = sq_sums(i, j) - sums(i, j) * sums(i, j) / n;
      if (template_energy <= kEps || window_energy <= kEps) {
        m.values(i, j) = 0.0;
        ++m.zero_variance;
        continue;
      }
      m.values(i, j) = std::clamp(numerator(i, j) / std::sqrt(template_energy * window_energy), -1.0, 1.0);
    }
  return m;
}

ScoreMatrix ssdScores(const Template& t, const EdgeMap& window) {
  checkSizes(t, window);
  ScoreMatrix m = emptyScores(Metric::SSD, t, window);
  const Grid<double> patch = (t.patch != 0).cast<double>();
  const Grid<double> img = (window != 0).cast<double>();
  const Grid<double> cross = correlateValid(img, patch);
  const Grid<double> sq_sums = boxSums(img.square(), t.rows(), t.cols());
  const double template_energy = patch.square().sum();
  m.values = (template_energy + sq_sums - 2.0 * cross).max(0.0);
  return m;
}

ScoreMatrix scoreTemplate(Metric metric, const Template& t, const EdgeMap& window) {
  switch (metric) {
    case Metric::WHS: return whsScoresFft(t, window);
    case Metric::NCC: return nccScores(t, window);
    case Metric::SSD: return ssdScores(t, window);
  }
  return whsScoresFft(t, window);
}

SearchWindow searchWindow(const Eigen::Vector3d& anchor3d, const RigidTransformd& seed, const UncertaintyBox& box,
                          const CameraModeld& camera, int template_size) {
  if (!camera.project(seed * anchor3d)) throw PreconditionError("anchor is not visible from the seed pose");
  double min_x = std::numeric_limits<double>::infinity(), min_y = min_x, max_x = -min_x, max_y = -min_x;
  for (const RigidTransformd& corner : boxCorners(box)) {
    const auto px = camera.project(seed * (corner * anchor3d));
    if (!px) continue;
    min_x = std::min(min_x, px->x());
    min_y = std::min(min_y, px->y());
    max_x = std::max(max_x, px->x());
    max_y = std::max(max_y, px->y());
  }
  const int half = template_size / 2;
  const double lim = 1e7;  // keeps wild projections representable
  int x0 = static_cast<int>(std::floor(std::clamp(min_x, -lim, lim))) - half;
  int y0 = static_cast<int>(std::floor(std::clamp(min_y, -lim, lim))) - half;
  int x1 = static_cast<int>(std::ceil(std::clamp(max_x, -lim, lim))) + half - 1;
  int y1 = static_cast<int>(std::ceil(std::clamp(max_y, -lim, lim))) + half - 1;
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  x1 = std::min(x1, camera.width - 1);
  y1 = std::min(y1, camera.height - 1);
  SearchWindow window{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
  if (window.width < template_size || window.height < template_size)
    throw WindowClippedError("search window clipped below template size");
  return window;
}

Match bestMatch(const ScoreMatrix& scores, const SearchWindow& window) {
  if (scores.values.size() == 0) throw PreconditionError("empty score matrix");
  const bool minimize = scores.metric == Metric::SSD;
  Eigen::Index bi = 0, bj = 0;
  double best = scores.values(0, 0);
  for (Eigen::Index i = 0; i < scores.values.rows(); ++i)
    for (Eigen::Index j = 0; j < scores.values.cols(); ++j) {
      const double v = scores.values(i, j);
      if (minimize ? v < best : v > best) {
        best = v;
        bi = i;
        bj = j;
      }
    }
  Match m;
  m.pixel = Eigen::Vector2d(window.x0 + bj + scores.template_cols / 2, window.y0 + bi + scores.template_rows / 2);
  m.score = best;
  return m;
}

}  // namespace edgeloc

namespace edgeloc {

Match refinePeak(const ScoreMatrix& scores, const Match& match, const SearchWindow& window) {
  const Eigen::Index j = std::lround(match.pixel.x()) - window.x0 - scores.template_cols / 2;
  const Eigen::Index i = std::lround(match.pixel.y()) - window.y0 - scores.template_rows / 2;
  const Grid<double>& v = scores.values;
  if (i < 0 || j < 0 || i >= v.rows() || j >= v.cols()) throw PreconditionError("match lies outside the score matrix");
  const double sign = scores.metric == Metric::SSD ? -1.0 : 1.0;
  Match refined = match;

  if (i > 0 && j > 0 && i + 1 < v.rows() && j + 1 < v.cols()) {
    // Least-squares quadratic a + bx + cy + dx^2 + exy + fy^2 over the 3x3 neighborhood.
    const auto s = [&](int di, int dj) { return sign * v(i + di, j + dj); };
    double sum_x = 0, sum_y = 0, sum_xx = 0, sum_yy = 0, center_row = 0, center_col = 0;
    for (int di = -1; di <= 1; ++di)
      for (int dj = -1; dj <= 1; ++dj) {
        sum_x += dj * s(di, dj);
        sum_y += di * s(di, dj);
        if (dj != 0) sum_xx += s(di, dj);
        else center_col += s(di, dj);
        if (di != 0) sum_yy += s(di, dj);
        else center_row += s(di, dj);
      }
    const double b = sum_x / 6.0, c = sum_y / 6.0;
    const double d = sum_xx / 6.0 - center_col / 3.0, f = sum_yy / 6.0 - center_row / 3.0;
    const double e = (s(1, 1) + s(-1, -1) - s(1, -1) - s(-1, 1)) / 4.0;
    const Eigen::Matrix2d hessian{{2 * d, e}, {e, 2 * f}};
    if (hessian(0, 0) < 0 && hessian.determinant() > 0) {
      const Eigen::Vector2d offset = -hessian.inverse() * Eigen::Vector2d(b, c);
      refined.pixel += offset.cwiseMax(-1.0).cwiseMin(1.0);
      return refined;
    }
  }

  // No 2-D peak: independent parabolas along each axis that has one.
  const auto offset = [&](double a, double b, double c) {
    const double curvature = sign * (a - 2.0 * b + c);
    if (curvature >= 0.0) return 0.0;
    return std::clamp(0.5 * sign * (a - c) / curvature, -0.5, 0.5);
  };
  if (j > 0 && j + 1 < v.cols()) refined.pixel.x() += offset(v(i, j - 1), v(i, j), v(i, j + 1));
  if (i > 0 && i + 1 < v.rows()) refined.pixel.y() += offset(v(i - 1, j), v(i, j), v(i + 1, j));
  return refined;
}

Eigen::Vector2d selfPeakOffset(Metric metric, const Template& t, const EdgeMap& baseline) {
  const int rows = static_cast<int>(t.patch.rows()), cols = static_cast<int>(t.patch.cols());
  const SearchWindow w{t.center.x() - cols / 2 - 1, t.center.y() - rows / 2 - 1, cols + 2, rows + 2};
  if (w.x0 < 0 || w.y0 < 0 || w.x0 + w.width > baseline.cols() || w.y0 + w.height > baseline.rows())
    return Eigen::Vector2d::Zero();
  const ScoreMatrix scores = scoreTemplate(metric, t, crop(baseline, w));
  const Match at_zero{t.center.cast<double>(), scores.values(1, 1)};
  return refinePeak(scores, at_zero, w).pixel - at_zero.pixel;
}

}  // namespace edgeloc
