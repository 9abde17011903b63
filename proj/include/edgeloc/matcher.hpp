#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "edgeloc/camera_model.hpp"
#include "edgeloc/rasterizer.hpp"
#include "edgeloc/rigid_transform.hpp"
#include "edgeloc/types.hpp"
#include "edgeloc/uncertainty.hpp"

namespace edgeloc {

enum class Metric { WHS, NCC, SSD };

std::string toString(Metric metric);
Metric metricFromString(const std::string& name);

/// Baseline patch T with its mask M, centered on a baseline edge pixel.
///
/// The patch covers columns [center.x - size/2, center.x + size/2 - 1] and
/// likewise for rows. c_plus counts masked-in edge pixels and c_minus
/// masked-in non-edge pixels.
struct Template {
  EdgeMap patch;
  EdgeMap mask;
  Eigen::Vector2i center = Eigen::Vector2i::Zero();
  Eigen::Vector3d anchor3d = Eigen::Vector3d::Zero();
  int c_plus = 0;
  int c_minus = 0;

  int rows() const { return static_cast<int>(patch.rows()); }
  int cols() const { return static_cast<int>(patch.cols()); }
};

/// Builds a template and its edge/non-edge counts. Throws SizeMismatchError when patch and mask differ.
Template makeTemplate(EdgeMap patch, EdgeMap mask, Eigen::Vector2i center = Eigen::Vector2i::Zero(),
                      Eigen::Vector3d anchor3d = Eigen::Vector3d::Zero());

/// Axis-aligned pixel rectangle of the test image.
struct SearchWindow {
  int x0 = 0, y0 = 0;
  int width = 0, height = 0;
};

/// Scores for every placement of a template inside a window: entry (i, j)
/// places the template's top-left corner at window row i, column j.
struct ScoreMatrix {
  Grid<double> values;
  Metric metric = Metric::WHS;
  int template_rows = 0, template_cols = 0;
  /// NCC placements whose window (or template) had zero variance; scored 0.
  int zero_variance = 0;
};

struct Match {
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
  double score = 0.0;
};

struct TemplateOptions {
  int size = 32;
  int max_count = 200;
  double min_spacing = 8.0;
};

/// Templates centered on baseline edge pixels, chosen greedily by decreasing
/// edge count inside the patch (ties in row-major order) with at least
/// `min_spacing` px between centers. Patches crossing the image border are
/// skipped; anchors are the back-projected centers in the station frame.
std::vector<Template> extractTemplates(const EdgeMap& baseline, const EdgeMap& render_mask, const GeometryBuffer& buf,
                                       const CameraModeld& camera, const RigidTransformd& camera_from_station,
                                       const TemplateOptions& options = {});

/// Sub-image of `test` covered by the window.
EdgeMap crop(const EdgeMap& test, const SearchWindow& window);

/// WHS by direct summation.
ScoreMatrix whsScoresNaive(const Template& t, const EdgeMap& window);
/// WHS as a weighted sum of two FFT convolutions with reversed kernels.
ScoreMatrix whsScoresFft(const Template& t, const EdgeMap& window);
/// Normalized cross-correlation of the unmasked patch, in [-1, 1].
ScoreMatrix nccScores(const Template& t, const EdgeMap& window);
/// Sum of squared differences of the unmasked patch (lower is better).
ScoreMatrix ssdScores(const Template& t, const EdgeMap& window);

ScoreMatrix scoreTemplate(Metric metric, const Template& t, const EdgeMap& window);

/// Bounding rectangle of the anchor's projections under all box corners
/// applied to the seed, padded by half the template size and clipped to the image.
SearchWindow searchWindow(const Eigen::Vector3d& anchor3d, const RigidTransformd& seed_camera_from_station,
                          const UncertaintyBox& box, const CameraModeld& camera, int template_size);

/// Best placement (argmax, argmin for SSD; first in row-major order on ties),
/// reported as the template-center pixel in test-image coordinates.
Match bestMatch(const ScoreMatrix& scores, const SearchWindow& window);

/// Sub-pixel peak position from a quadratic fitted to the 3x3 scores around
/// the best match, clamped to half a pixel. Without a 2-D maximum it falls
/// back to per-axis parabolas; border axes keep the integer position.
Match refinePeak(const ScoreMatrix& scores, const Match& match, const SearchWindow& window);

/// Offset refinePeak reports when the template is scored against the baseline
/// it was cut from, where the true shift is zero. Subtracting it removes the
/// bias of asymmetric peaks. Zero when the neighborhood leaves the image.
Eigen::Vector2d selfPeakOffset(Metric metric, const Template& t, const EdgeMap& baseline);

}  // namespace edgeloc
