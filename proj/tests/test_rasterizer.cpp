#include <doctest.h>

#include <algorithm>
#include <limits>
#include <numeric>

#include "edgeloc/image_io.hpp"
#include "edgeloc/rasterizer.hpp"
#include "edgeloc/serialization.hpp"
#include "support.hpp"

using namespace edgeloc;
using testing::pinhole;

namespace {

const RigidTransformd kIdentity;

// Square of side `side` centered on the optical axis at depth z, facing the camera.
TriangleMesh frontSquare(double side, double z, int label = 1) {
  const double h = side / 2;
  return makeQuad({-h, -h, z}, {side, 0, 0}, {0, side, 0}, label);
}

int count(const EdgeMap& m) { return m.cast<int>().sum(); }

// Edge rule written directly from its definition: a rendered pixel is an edge
// when some 8-neighbor is unrendered, or lies farther (ties by raster index)
// across a depth step or crease above threshold.
EdgeMap referenceEdges(const GeometryBuffer& b, double normal_deg, double depth_mm) {
  EdgeMap e = EdgeMap::Zero(b.height(), b.width());
  for (int y = 0; y < b.height(); ++y)
    for (int x = 0; x < b.width(); ++x) {
      if (!b.rendered(x, y)) continue;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int qx = x + dx, qy = y + dy;
          if ((dx == 0 && dy == 0) || qx < 0 || qy < 0 || qx >= b.width() || qy >= b.height()) continue;
          if (!b.rendered(qx, qy)) {
            e(y, x) = 1;
            continue;
          }
          const double dp = b.depth(y, x), dq = b.depth(qy, qx);
          const bool p_nearer = dp < dq || (dp == dq && y * b.width() + x < qy * b.width() + qx);
          if (!p_nearer) continue;
          const double angle =
              std::acos(std::clamp(b.normal(x, y).dot(b.normal(qx, qy)), -1.0, 1.0)) * kRadToDeg;
          if (dq - dp > depth_mm || angle > normal_deg) e(y, x) = 1;
        }
    }
  return e;
}

double distanceToSegment(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (a + t * ab - p).norm();
}

struct Segment {
  Eigen::Vector2d a, b;
};

// Cube edges adjacent to at least one front-facing face: the face junctions
// and the silhouette of a convex box.
std::vector<Segment> visibleCubeEdges(double half, const RigidTransformd& pose, const CameraModeld& cam) {
  const Eigen::Vector3d eye = pose.inverse().translation();
  std::vector<Segment> out;
  for (int axis = 0; axis < 3; ++axis)
    for (int s1 : {-1, 1})
      for (int s2 : {-1, 1}) {
        const int u = (axis + 1) % 3, v = (axis + 2) % 3;
        Eigen::Vector3d a = Eigen::Vector3d::Zero(), b;
        a[u] = s1 * half;
        a[v] = s2 * half;
        b = a;
        a[axis] = -half;
        b[axis] = half;
        // The two faces meeting here have outward normals s1 e_u and s2 e_v.
        const bool face_u = s1 * eye[u] > half, face_v = s2 * eye[v] > half;
        if (face_u || face_v) out.push_back({*cam.project(pose * a), *cam.project(pose * b)});
      }
  return out;
}

struct CubeScene {
  TriangleMesh mesh = loadObj(testing::dataDir() / "cube.obj");
  CameraModeld camera = cameraFromJson(readJsonFile(testing::dataDir() / "cube_camera.json"));
  RigidTransformd pose = poseFromJson(readJsonFile(testing::dataDir() / "cube_pose.json"));
};

}  // namespace

TEST_CASE("rasterize: fronto-parallel square has exact depth and camera-facing normal") {
  const CameraModeld cam = pinhole(500, 200, 160);
  const GeometryBuffer b = rasterize(frontSquare(100, 500), kIdentity, cam);
  int covered = 0;
  for (int y = 0; y < b.height(); ++y)
    for (int x = 0; x < b.width(); ++x) {
      if (!b.rendered(x, y)) continue;
      ++covered;
      CHECK(std::abs(b.depth(y, x) - 500) < 1e-6);
      CHECK((b.normal(x, y) - Eigen::Vector3d(0, 0, -1)).norm() < 1e-12);
    }
  // 100 mm at 500 mm and f = 500 spans 100 px.
  CHECK(covered == 100 * 100);
}

TEST_CASE("rasterize: tilted square depth equals the analytic ray-plane intersection") {
  const CameraModeld cam = pinhole(500, 240, 200);
  const RigidTransformd tilt(Eigen::Matrix3d(Eigen::AngleAxisd(kDegToRad * 45, Eigen::Vector3d::UnitY())),
                             Eigen::Vector3d(0, 0, 500));
  const GeometryBuffer b = rasterize(frontSquare(100, 0), tilt, cam);
  const Eigen::Vector3d n = tilt.rotation() * Eigen::Vector3d(0, 0, 1), c = tilt.translation();
  int covered = 0;
  for (int y = 0; y < b.height(); ++y)
    for (int x = 0; x < b.width(); ++x) {
      const Eigen::Vector3d ray((x - cam.cx) / cam.fx, (y - cam.cy) / cam.fy, 1.0);
      const double z = n.dot(c) / n.dot(ray);
      // Where the ray meets the square, in the square's own coordinates.
      const Eigen::Vector3d local = tilt.inverse() * (ray * z);
      const double margin = std::max(std::abs(local.x()), std::abs(local.y()));
      if (b.rendered(x, y)) {
        ++covered;
        CHECK(std::abs(b.depth(y, x) - z) < 1e-6);
        CHECK(margin <= 50 + 1e-9);
        CHECK(std::abs(std::abs(b.normal(x, y).dot(n)) - 1) < 1e-12);
        CHECK(b.normal(x, y).z() < 0);
      } else if (margin < 49) {
        FAIL("pixel inside the square left unrendered");
      }
    }
  CHECK(covered > 4000);
}

TEST_CASE("rasterize: the nearer of two overlapping squares wins the z-buffer") {
  const CameraModeld cam = pinhole(500, 200, 200);
  TriangleMesh m = frontSquare(100, 600, 1);
  m.append(makeQuad({-20, -20, 400}, {60, 0, 0}, {0, 60, 0}, 2));
  const GeometryBuffer b = rasterize(m, kIdentity, cam);
  // (20 mm, 20 mm) at z = 400 lands 25 px right/below center: inside both.
  const int x = static_cast<int>(cam.cx + 25), y = static_cast<int>(cam.cy + 25);
  CHECK(b.object_id(y, x) == 2);
  CHECK(std::abs(b.depth(y, x) - 400) < 1e-6);
  // Outside the small square only the far one is seen.
  CHECK(b.object_id(static_cast<int>(cam.cy - 40), static_cast<int>(cam.cx - 40)) == 1);
  CHECK(std::abs(b.depth(static_cast<int>(cam.cy - 40), static_cast<int>(cam.cx - 40)) - 600) < 1e-6);
}

TEST_CASE("rasterize: empty mesh and culling behind the camera") {
  const CameraModeld cam = pinhole(500, 64, 64);
  CHECK_THROWS_AS(rasterize(TriangleMesh{}, kIdentity, cam), EmptyMeshError);
  const GeometryBuffer b = rasterize(frontSquare(100, -300), kIdentity, cam);
  CHECK((b.object_id == 0).all());
}

TEST_CASE("GeometryBuffer invariants hold on the bracket scene") {
  const testing::BracketScene s;
  CameraModeld cam = s.camera;
  cam.k1 = -0.05;
  const GeometryBuffer b = rasterize(s.mesh, s.truth, cam);
  for (int y = 0; y < b.height(); ++y)
    for (int x = 0; x < b.width(); ++x) {
      const bool finite = std::isfinite(b.depth(y, x));
      CHECK(finite == (b.object_id(y, x) != 0));
      if (finite) {
        CHECK(b.depth(y, x) > 0);
        CHECK(std::abs(b.normal(x, y).norm() - 1) < 1e-6);
      }
    }
}

TEST_CASE("salient edges: fronto-parallel plane has only silhouette edges") {
  const CameraModeld cam = pinhole(500, 160, 160);
  const GeometryBuffer b = rasterize(frontSquare(100, 500), kIdentity, cam);
  const SalientEdges se = salientEdges(b, 30, 5);
  for (int y = 0; y < b.height(); ++y)
    for (int x = 0; x < b.width(); ++x) {
      bool border = false;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) border |= b.rendered(x, y) && !b.rendered(x + dx, y + dy);
      CHECK(se.edges(y, x) == (border ? 1 : 0));
      CHECK(se.render_mask(y, x) == (b.rendered(x, y) ? 1 : 0));
    }
  CHECK(count(se.edges) == 4 * 100 - 4);
}

TEST_CASE("salient edges follow the discontinuity rule on every pixel") {
  const testing::BracketScene s;
  const GeometryBuffer b = rasterize(s.mesh, s.truth, s.camera);
  for (double normal_deg : {10.0, 30.0, 60.0})
    for (double depth_mm : {1.0, 5.0, 20.0}) {
      const EdgeMap e = salientEdges(b, normal_deg, depth_mm).edges;
      CHECK((e == referenceEdges(b, normal_deg, depth_mm)).all());
      CHECK((e <= 1).all());
      CHECK(((e == 0) || (b.object_id != 0)).all());
    }
  CHECK_THROWS_AS(salientEdges(b, 0, 5), PreconditionError);
  CHECK_THROWS_AS(salientEdges(b, 30, -1), PreconditionError);
}

TEST_CASE("salient edges: corner-on cube marks the face junctions and the silhouette") {
  const CubeScene c;
  const SalientEdges se = salientEdges(rasterize(c.mesh, c.pose, c.camera), 30, 5);
  const std::vector<Segment> segs = visibleCubeEdges(30, c.pose, c.camera);
  CHECK(segs.size() == 9);  // three junctions plus a six-sided silhouette
  for (int y = 0; y < se.edges.rows(); ++y)
    for (int x = 0; x < se.edges.cols(); ++x) {
      if (!se.edges(y, x)) continue;
      double best = 1e9;
      for (const Segment& sg : segs) best = std::min(best, distanceToSegment({x, y}, sg.a, sg.b));
      CHECK(best < 1.5);
    }
  for (const Segment& sg : segs) {
    const double len = (sg.b - sg.a).norm();
    for (double t = 2; t < len - 2; t += 0.5) {
      const Eigen::Vector2d p = sg.a + (sg.b - sg.a) * (t / len);
      bool hit = false;
      for (int dy = -2; dy <= 2; ++dy)
        for (int dx = -2; dx <= 2; ++dx) {
          const int x = static_cast<int>(std::lround(p.x())) + dx, y = static_cast<int>(std::lround(p.y())) + dy;
          hit |= se.edges(y, x) && (Eigen::Vector2d(x, y) - p).norm() < 1.5;
        }
      CHECK(hit);
    }
  }
}

TEST_CASE("salient edges: the committed cube golden file matches") {
  const CubeScene c;
  const SalientEdges se = salientEdges(rasterize(c.mesh, c.pose, c.camera), 30, 5);
  const GrayImage golden = readGray(testing::dataDir() / "cube_edges_golden.pgm");
  REQUIRE(golden.rows() == se.edges.rows());
  REQUIRE(golden.cols() == se.edges.cols());
  CHECK((golden == edgeImage(se.edges)).all());
}

TEST_CASE("salient edges: a 10 mm step lands on the projected column") {
  CameraModeld cam = pinhole(500, 320, 200);
  cam.cx = 160.3;
  TriangleMesh m = makeQuad({-100, -60, 500}, {200, 0, 0}, {0, 120, 0});
  m.append(makeQuad({7, -60, 490}, {93, 0, 0}, {0, 120, 0}));
  const GeometryBuffer b = rasterize(m, kIdentity, cam);
  const SalientEdges se = salientEdges(b, 30, 5);
  // The near half starts at the first pixel center right of the step.
  const int step_col = static_cast<int>(std::ceil(cam.fx * 7 / 490 + cam.cx));
  const int top = static_cast<int>(std::ceil(cam.cy - 60 * cam.fy / 500)) + 3;
  const int bottom = static_cast<int>(std::floor(cam.cy + 60 * cam.fy / 500)) - 3;
  for (int y = top; y <= bottom; ++y) {
    CHECK(se.edges(y, step_col) == 1);
    CHECK(b.depth(y, step_col) == doctest::Approx(490));
    for (int x = 5; x < 315; ++x)
      if (x != step_col && b.rendered(x - 1, y) && b.rendered(x + 1, y)) CHECK(se.edges(y, x) == 0);
  }
}

TEST_CASE("salient edges: threshold 179.9 leaves only depth steps and silhouettes") {
  const CubeScene c;
  const GeometryBuffer b = rasterize(c.mesh, c.pose, c.camera);
  const EdgeMap e = salientEdges(b, 179.9, 5).edges;
  for (int y = 0; y < b.height(); ++y)
    for (int x = 0; x < b.width(); ++x) {
      bool border = false;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int qx = x + dx, qy = y + dy;
          if (qx >= 0 && qy >= 0 && qx < b.width() && qy < b.height())
            border |= b.rendered(x, y) && !b.rendered(qx, qy);
        }
      CHECK(e(y, x) == (border ? 1 : 0));
    }
}

TEST_CASE("backproject: axial pixel, round trips and unrendered pixels") {
  CameraModeld cam = pinhole(500, 161, 161);
  const GeometryBuffer flat = rasterize(frontSquare(100, 500), kIdentity, cam);
  CHECK((backproject(flat, {cam.cx, cam.cy}, cam, kIdentity) - Eigen::Vector3d(0, 0, 500)).norm() < 1e-9);
  CHECK_THROWS_AS(backproject(flat, {2, 2}, cam, kIdentity), UnrenderedPixelError);

  const CubeScene c;
  for (double k1 : {0.0, 0.1}) {
    CameraModeld cc = c.camera;
    cc.k1 = k1;
    const GeometryBuffer b = rasterize(c.mesh, c.pose, cc);
    int checked = 0;
    for (int y = 0; y < b.height(); y += 3)
      for (int x = 0; x < b.width(); x += 3) {
        if (!b.rendered(x, y)) continue;
        const Eigen::Vector3d p = backproject(b, {x, y}, cc, c.pose);
        const auto px = cc.project(c.pose * p);
        REQUIRE(px);
        CHECK((*px - Eigen::Vector2d(x, y)).norm() < 1e-4);
        ++checked;
      }
    CHECK(checked > 500);
  }
}

TEST_CASE("salient edges do not depend on face order") {
  const testing::BracketScene s;
  TriangleMesh shuffled = s.mesh;
  std::vector<std::size_t> order(shuffled.faceCount());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), std::mt19937_64(4));
  for (std::size_t i = 0; i < order.size(); ++i) {
    shuffled.faces[i] = s.mesh.faces[order[i]];
    shuffled.labels[i] = s.mesh.labels[order[i]];
  }
  const EdgeMap a = salientEdges(rasterize(s.mesh, s.truth, s.camera)).edges;
  const EdgeMap b = salientEdges(rasterize(shuffled, s.truth, s.camera)).edges;
  CHECK((a == b).all());
}

TEST_CASE("rendering is bit-identical across runs") {
  const testing::BracketScene s;
  const GeometryBuffer a = rasterize(s.mesh, s.truth, s.camera), b = rasterize(s.mesh, s.truth, s.camera);
  CHECK(std::equal(a.depth.data(), a.depth.data() + a.depth.size(), b.depth.data(),
                   [](double u, double v) { return u == v || (std::isinf(u) && std::isinf(v)); }));
  CHECK((a.normal_x == b.normal_x).all());
  CHECK((a.face == b.face).all());
}

TEST_CASE("subdividing the cube changes under 2% of edge pixels") {
  const CubeScene c;
  const EdgeMap coarse = salientEdges(rasterize(c.mesh, c.pose, c.camera)).edges;
  const EdgeMap fine = salientEdges(rasterize(c.mesh.subdivided().subdivided(), c.pose, c.camera)).edges;
  const int diff = (coarse != fine).cast<int>().sum();
  CHECK(diff < 0.02 * count(coarse));
}

TEST_CASE("a coarse cylinder shows facet seams at 10 degrees but not at 30") {
  const CameraModeld cam = pinhole(500, 240, 240);
  const TriangleMesh cyl = makeCylinder(40, -50, 50, 16);
  const RigidTransformd side = testing::lookAt({0, -400, 0}, Eigen::Vector3d::UnitZ());
  const GeometryBuffer b = rasterize(cyl, side, cam);
  const int row = static_cast<int>(cam.cy);
  // Separate runs of edge pixels along the middle row.
  const auto runsOnRow = [&](double deg) {
    const EdgeMap e = salientEdges(b, deg, 5).edges;
    int runs = 0;
    for (int x = 0; x < e.cols(); ++x) runs += e(row, x) && (x == 0 || !e(row, x - 1));
    return runs;
  };
  // 16 facets meet at 22.5 degrees; 7 seams lie on the visible half, and the outermost two
  // project within 2 px of the silhouette and join its run.
  CHECK(runsOnRow(30) == 2);
  CHECK(runsOnRow(10) == 2 + 5);
}

TEST_CASE("distorted rendering follows curved projections") {
  // A long straight edge under strong barrel distortion must still be marked
  // where the camera model sends it, which needs subdivision.
  CameraModeld cam = pinhole(300, 320, 240);
  cam.k1 = -0.25;
  const GeometryBuffer b = rasterize(makeQuad({-200, -150, 300}, {400, 0, 0}, {0, 150, 0}), kIdentity, cam);
  const EdgeMap e = salientEdges(b).edges;
  for (double x = -190; x <= 190; x += 10) {
    const Eigen::Vector2d p = *cam.project({x, 0, 300});
    bool hit = false;
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int px = static_cast<int>(std::lround(p.x())) + dx, py = static_cast<int>(std::lround(p.y())) + dy;
        if (px >= 0 && py >= 0 && px < cam.width && py < cam.height) hit |= e(py, px) == 1;
      }
    if (cam.inImage(p)) CHECK(hit);
  }
}
