#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

namespace edgeloc {

/// Triangle soup with a per-face object label (>= 1).
struct TriangleMesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<Eigen::Vector3i> faces;
  std::vector<int> labels;

  bool empty() const { return faces.empty(); }
  std::size_t faceCount() const { return faces.size(); }

  /// Appends another mesh; its labels are kept unless `label` > 0.
  void append(const TriangleMesh& other, int label = 0);

  /// Drops zero-area faces; throws PreconditionError on out-of-range indices.
  void cleanup(double min_area = 1e-12);

  /// Splits every triangle into four at edge midpoints.
  TriangleMesh subdivided() const;
};

/// Wavefront OBJ. Polygons are fan-triangulated; `o`/`g` statements start a new label.
TriangleMesh parseObj(std::istream& in);
TriangleMesh loadObj(const std::filesystem::path& path);
void writeObj(std::ostream& out, const TriangleMesh& mesh);
void saveObj(const std::filesystem::path& path, const TriangleMesh& mesh);

// Primitives, outward-facing, in millimetres.
TriangleMesh makeBox(const Eigen::Vector3d& min_corner, const Eigen::Vector3d& max_corner, int label = 1);
TriangleMesh makeQuad(const Eigen::Vector3d& origin, const Eigen::Vector3d& edge_u, const Eigen::Vector3d& edge_v,
                      int label = 1);
/// Closed prism around the z axis with `facets` side faces, base at z0, top at z1.
TriangleMesh makeCylinder(double radius, double z0, double z1, int facets, int label = 1);

/// The reference asymmetric test object: a stepped bracket about 200 x 140 x 118 mm
/// with bolt heads and an octagonal boss.
TriangleMesh makeBracket();

}  // namespace edgeloc
