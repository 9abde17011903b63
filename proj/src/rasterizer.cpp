#include "edgeloc/rasterizer.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace edgeloc {

namespace {

/// Undistorted normalized coordinates of every pixel center.
class NormalizedGrid {
 public:
  explicit NormalizedGrid(const CameraModeld& camera) : camera_(camera), distorted_(camera.hasDistortion()) {
    if (!distorted_) return;
    xs_.resize(camera.height, camera.width);
    ys_.resize(camera.height, camera.width);
    for (int y = 0; y < camera.height; ++y) {
      for (int x = 0; x < camera.width; ++x) {
        const Eigen::Vector2d n = camera.pixelToNormalized(Eigen::Vector2d(x, y));
        xs_(y, x) = n.x();
        ys_(y, x) = n.y();
      }
    }
  }

  Eigen::Vector2d at(int x, int y) const {
    if (distorted_) return {xs_(y, x), ys_(y, x)};
    return {(x - camera_.cx) / camera_.fx, (y - camera_.cy) / camera_.fy};
  }

 private:
  const CameraModeld& camera_;
  bool distorted_;
  Grid<double> xs_, ys_;
};

bool lexLess(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
}

/// Edge function evaluated with a canonical vertex order so that two triangles
/// sharing an edge get exactly opposite values.
double edgeFunction(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& p) {
  if (lexLess(b, a)) return -edgeFunction(b, a, p);
  return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
}

// Top-left style tie rule: a point exactly on an edge belongs to exactly one
// of the two triangles sharing it.
bool ownsEdge(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const double dx = b.x() - a.x(), dy = b.y() - a.y();
  return dy < 0 || (dy == 0 && dx > 0);
}

struct Bounds {
  double min_x = std::numeric_limits<double>::infinity(), min_y = min_x;
  double max_x = -min_x, max_y = -min_x;
  void add(const Eigen::Vector2d& p) {
    min_x = std::min(min_x, p.x());
    min_y = std::min(min_y, p.y());
    max_x = std::max(max_x, p.x());
    max_y = std::max(max_y, p.y());
  }
};

class Rasterizer {
 public:
  Rasterizer(const CameraModeld& camera, const RasterizerOptions& options, GeometryBuffer& buf)
      : camera_(camera), options_(options), grid_(camera), buf_(buf) {}

  void drawFace(int face_index, int label, const std::array<Eigen::Vector3d, 3>& tri) {
    Eigen::Vector3d n = (tri[1] - tri[0]).cross(tri[2] - tri[0]);
    const double len = n.norm();
    if (!(len > 0)) return;
    n /= len;
    if (n.dot(tri[0]) > 0) n = -n;
    const double plane = n.dot(tri[0]);

    // Clip against the near plane.
    std::vector<Eigen::Vector3d> poly;
    for (int i = 0; i < 3; ++i) {
      const Eigen::Vector3d& p = tri[i];
      const Eigen::Vector3d& q = tri[(i + 1) % 3];
      const bool p_in = p.z() >= options_.near_plane_mm, q_in = q.z() >= options_.near_plane_mm;
      if (p_in) poly.push_back(p);
      if (p_in != q_in) {
        const double s = (options_.near_plane_mm - p.z()) / (q.z() - p.z());
        poly.push_back(p + s * (q - p));
      }
    }
    if (poly.size() < 3) return;
    for (std::size_t k = 1; k + 1 < poly.size(); ++k)
      drawTriangle(face_index, label, n, plane, {poly[0], poly[k], poly[k + 1]});
  }

 private:
  // Samples the projected 3D segment densely enough that the polyline stays
  // within the curvature tolerance of the true curve.
  void boundSegment(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector2d& pa,
                    const Eigen::Vector2d& pb, int depth, Bounds& bounds) const {
    bounds.add(pa);
    if (depth >= options_.max_subdivision_depth) return;
    const Eigen::Vector3d m = 0.5 * (a + b);
    const Eigen::Vector2d pm = *camera_.project(m);
    const Eigen::Vector2d chord = pb - pa;
    const double chord_len = chord.norm();
    const double deviation = chord_len > 0 ? std::abs(chord.x() * (pm.y() - pa.y()) - chord.y() * (pm.x() - pa.x())) /
                                                 chord_len
                                           : (pm - pa).norm();
    if (deviation <= options_.curvature_tolerance_px) return;
    boundSegment(a, m, pa, pm, depth + 1, bounds);
    boundSegment(m, b, pm, pb, depth + 1, bounds);
  }

  void drawTriangle(int face_index, int label, const Eigen::Vector3d& n, double plane,
                    std::array<Eigen::Vector3d, 3> tri) {
    std::array<Eigen::Vector2d, 3> v;
    for (int i = 0; i < 3; ++i) v[i] = tri[i].head<2>() / tri[i].z();
    double area = edgeFunction(v[0], v[1], v[2]);
    if (area == 0) return;
    if (area < 0) {
      std::swap(v[1], v[2]);
      std::swap(tri[1], tri[2]);
    }

    Bounds bounds;
    if (camera_.hasDistortion()) {
      std::array<Eigen::Vector2d, 3> px;
      for (int i = 0; i < 3; ++i) px[i] = *camera_.project(tri[i]);
      for (int i = 0; i < 3; ++i) boundSegment(tri[i], tri[(i + 1) % 3], px[i], px[(i + 1) % 3], 0, bounds);
      bounds.add(px[0]);
    } else {
      for (int i = 0; i < 3; ++i) bounds.add(camera_.normalizedToPixel(v[i]));
    }
    const double margin = 1.0 + options_.curvature_tolerance_px;
    const int x0 = std::max(0, static_cast<int>(std::floor(bounds.min_x - margin)));
    const int y0 = std::max(0, static_cast<int>(std::floor(bounds.min_y - margin)));
    const int x1 = std::min(camera_.width - 1, static_cast<int>(std::ceil(bounds.max_x + margin)));
    const int y1 = std::min(camera_.height - 1, static_cast<int>(std::ceil(bounds.max_y + margin)));
    if (x0 > x1 || y0 > y1) return;

    const std::array<bool, 3> owns = {ownsEdge(v[0], v[1]), ownsEdge(v[1], v[2]), ownsEdge(v[2], v[0])};
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const Eigen::Vector2d p = grid_.at(x, y);
        bool inside = true;
        for (int e = 0; e < 3 && inside; ++e) {
          const double w = edgeFunction(v[e], v[(e + 1) % 3], p);
          inside = w > 0 || (w == 0 && owns[e]);
        }
        if (!inside) continue;
        const double denom = n.x() * p.x() + n.y() * p.y() + n.z();
        if (denom == 0) continue;
        const double z = plane / denom;
        if (!(z > 0) || !(z < buf_.depth(y, x))) continue;
        buf_.depth(y, x) = z;
        buf_.normal_x(y, x) = n.x();
        buf_.normal_y(y, x) = n.y();
        buf_.normal_z(y, x) = n.z();
        buf_.object_id(y, x) = label;
        buf_.face(y, x) = face_index;
      }
    }
  }

  const CameraModeld& camera_;
  const RasterizerOptions& options_;
  NormalizedGrid grid_;
  GeometryBuffer& buf_;
};

}  // namespace

GeometryBuffer rasterize(const TriangleMesh& mesh, const RigidTransformd& camera_from_station,
                         const CameraModeld& camera, const RasterizerOptions& options) {
  if (mesh.empty()) throw EmptyMeshError("cannot rasterize an empty mesh");
  if (camera.width <= 0 || camera.height <= 0) throw PreconditionError("camera image size must be positive");
  GeometryBuffer buf;
  buf.depth.setConstant(camera.height, camera.width, std::numeric_limits<double>::infinity());
  buf.normal_x.setZero(camera.height, camera.width);
  buf.normal_y.setZero(camera.height, camera.width);
  buf.normal_z.setZero(camera.height, camera.width);
  buf.object_id.setZero(camera.height, camera.width);
  buf.face.setConstant(camera.height, camera.width, -1);

  std::vector<Eigen::Vector3d> cam_vertices(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) cam_vertices[i] = camera_from_station * mesh.vertices[i];

  Rasterizer raster(camera, options, buf);
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const Eigen::Vector3i& t = mesh.faces[f];
    const std::array<Eigen::Vector3d, 3> tri = {cam_vertices[t[0]], cam_vertices[t[1]], cam_vertices[t[2]]};
    if (tri[0].z() < options.near_plane_mm && tri[1].z() < options.near_plane_mm &&
        tri[2].z() < options.near_plane_mm)
      continue;
    raster.drawFace(static_cast<int>(f), mesh.labels.empty() ? 1 : mesh.labels[f], tri);
  }
  return buf;
}

SalientEdges salientEdges(const GeometryBuffer& buf, double normal_thresh_deg, double depth_thresh_mm) {
  if (!(normal_thresh_deg > 0) || !(depth_thresh_mm > 0))
    throw PreconditionError("salient edge thresholds must be positive");
  const int w = buf.width(), h = buf.height();
  const double cos_thresh = std::cos(normal_thresh_deg * kDegToRad);
  SalientEdges out;
  out.edges.setZero(h, w);
  out.render_mask = (buf.object_id != 0).cast<std::uint8_t>();

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!buf.rendered(x, y)) continue;
      const double dp = buf.depth(y, x);
      const Eigen::Vector3d np = buf.normal(x, y);
      const long ip = static_cast<long>(y) * w + x;
      bool edge = false;
      for (int dy = -1; dy <= 1 && !edge; ++dy) {
        for (int dx = -1; dx <= 1 && !edge; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int qx = x + dx, qy = y + dy;
          if (qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
          if (!buf.rendered(qx, qy)) {
            edge = true;
            break;
          }
          const double dq = buf.depth(qy, qx);
          const long iq = static_cast<long>(qy) * w + qx;
          const bool nearer = dp < dq || (dp == dq && ip < iq);
          if (!nearer) continue;
          if (dq - dp > depth_thresh_mm || np.dot(buf.normal(qx, qy)) < cos_thresh) edge = true;
        }
      }
      out.edges(y, x) = edge ? 1 : 0;
    }
  }
  return out;
}

Eigen::Vector3d backproject(const GeometryBuffer& buf, const Eigen::Vector2d& pixel, const CameraModeld& camera,
                            const RigidTransformd& camera_from_station) {
  const long ix = std::lround(pixel.x()), iy = std::lround(pixel.y());
  if (ix < 0 || iy < 0 || ix >= buf.width() || iy >= buf.height() || !buf.rendered(ix, iy))
    throw UnrenderedPixelError("pixel (" + std::to_string(pixel.x()) + ", " + std::to_string(pixel.y()) +
                               ") is not rendered");
  return camera_from_station.inverse() * camera.backproject(pixel, buf.depth(iy, ix));
}

GrayImage shade(const GeometryBuffer& buf, const Eigen::Vector3d& light_dir_camera, std::uint8_t background) {
  const Eigen::Vector3d light = light_dir_camera.normalized();
  GrayImage img(buf.height(), buf.width());
  for (int y = 0; y < buf.height(); ++y) {
    for (int x = 0; x < buf.width(); ++x) {
      if (!buf.rendered(x, y)) {
        img(y, x) = background;
        continue;
      }
      const double lambert = std::max(0.0, buf.normal(x, y).dot(light));
      img(y, x) = static_cast<std::uint8_t>(std::lround(40.0 + 200.0 * lambert));
    }
  }
  return img;
}

}  // namespace edgeloc
