#pragma once

#include <limits>
#include <vector>

#include <Eigen/Core>

#include "edgeloc/camera_model.hpp"
#include "edgeloc/mesh.hpp"
#include "edgeloc/rigid_transform.hpp"
#include "edgeloc/types.hpp"

namespace edgeloc {

/// Per-pixel output of rasterization, in the camera frame.
///
/// depth is the z coordinate of the nearest surface (+inf where nothing was
/// rendered), normal the flat face normal oriented toward the camera,
/// object_id the face label (0 = background).
struct GeometryBuffer {
  DepthImage depth;
  Grid<double> normal_x, normal_y, normal_z;
  LabelImage object_id;
  /// Index of the visible face, -1 for background.
  LabelImage face;

  int width() const { return static_cast<int>(depth.cols()); }
  int height() const { return static_cast<int>(depth.rows()); }
  bool rendered(int x, int y) const { return object_id(y, x) != 0; }
  Eigen::Vector3d normal(int x, int y) const { return {normal_x(y, x), normal_y(y, x), normal_z(y, x)}; }
};

struct RasterizerOptions {
  /// Projected triangle edges whose midpoint strays more than this from the chord are split.
  double curvature_tolerance_px = 0.25;
  int max_subdivision_depth = 8;
  double near_plane_mm = 1.0;
};

/// Z-buffered rasterization of `mesh` seen through `camera_from_station`.
///
/// Vertices go through the full (distorted) camera model; coverage is
/// evaluated at pixel centers with a top-left fill rule, and depth is the
/// exact intersection of each pixel's viewing ray with the face plane.
/// Depth ties keep the lowest face index.
GeometryBuffer rasterize(const TriangleMesh& mesh, const RigidTransformd& camera_from_station,
                         const CameraModeld& camera, const RasterizerOptions& options = {});

struct SalientEdges {
  EdgeMap edges;
  /// 1 where an object was rendered.
  EdgeMap render_mask;
};

/// Marks pixels bordering a normal (> normal_thresh_deg) or depth (> depth_thresh_mm)
/// discontinuity, or the silhouette, over 8-connected neighborhoods. Each
/// discontinuity is marked on its nearer side only.
SalientEdges salientEdges(const GeometryBuffer& buf, double normal_thresh_deg = 30.0, double depth_thresh_mm = 5.0);

/// Station-frame 3D point seen at `pixel`, using the depth of the pixel it falls in.
Eigen::Vector3d backproject(const GeometryBuffer& buf, const Eigen::Vector2d& pixel, const CameraModeld& camera,
                            const RigidTransformd& camera_from_station);

/// Flat-shaded intensity image: background level plus a Lambertian term per face.
GrayImage shade(const GeometryBuffer& buf, const Eigen::Vector3d& light_dir_camera = Eigen::Vector3d(0.3, -0.4, -1.0),
                std::uint8_t background = 25);

}  // namespace edgeloc
