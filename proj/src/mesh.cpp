#include "edgeloc/mesh.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <utility>

#include <Eigen/Geometry>

#include "edgeloc/types.hpp"

namespace edgeloc {

void TriangleMesh::append(const TriangleMesh& other, int label) {
  const int offset = static_cast<int>(vertices.size());
  vertices.insert(vertices.end(), other.vertices.begin(), other.vertices.end());
  for (std::size_t f = 0; f < other.faces.size(); ++f) {
    faces.push_back(other.faces[f] + Eigen::Vector3i::Constant(offset));
    labels.push_back(label > 0 ? label : other.labels[f]);
  }
}

void TriangleMesh::cleanup(double min_area) {
  if (labels.size() != faces.size()) labels.resize(faces.size(), 1);
  const int n = static_cast<int>(vertices.size());
  std::vector<Eigen::Vector3i> kept_faces;
  std::vector<int> kept_labels;
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Eigen::Vector3i& face = faces[f];
    if ((face.array() < 0).any() || (face.array() >= n).any())
      throw PreconditionError("mesh face " + std::to_string(f) + " references a missing vertex");
    const Eigen::Vector3d& a = vertices[face[0]];
    const double area = 0.5 * (vertices[face[1]] - a).cross(vertices[face[2]] - a).norm();
    if (area <= min_area) continue;
    kept_faces.push_back(face);
    kept_labels.push_back(labels[f] > 0 ? labels[f] : 1);
  }
  faces = std::move(kept_faces);
  labels = std::move(kept_labels);
}

TriangleMesh TriangleMesh::subdivided() const {
  TriangleMesh out;
  out.vertices = vertices;
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Eigen::Vector3i& t = faces[f];
    const int base = static_cast<int>(out.vertices.size());
    out.vertices.push_back(0.5 * (vertices[t[0]] + vertices[t[1]]));
    out.vertices.push_back(0.5 * (vertices[t[1]] + vertices[t[2]]));
    out.vertices.push_back(0.5 * (vertices[t[2]] + vertices[t[0]]));
    const int m01 = base, m12 = base + 1, m20 = base + 2;
    for (const Eigen::Vector3i& sub : {Eigen::Vector3i(t[0], m01, m20), Eigen::Vector3i(m01, t[1], m12),
                                       Eigen::Vector3i(m20, m12, t[2]), Eigen::Vector3i(m01, m12, m20)}) {
      out.faces.push_back(sub);
      out.labels.push_back(labels[f]);
    }
  }
  return out;
}

namespace {

int parseIndex(const std::string& token, int vertex_count, int line_no) {
  const std::string head = token.substr(0, token.find('/'));
  int idx = 0;
  try {
    idx = std::stoi(head);
  } catch (const std::exception&) {
    throw IoError("OBJ line " + std::to_string(line_no) + ": bad face index '" + token + "'");
  }
  if (idx < 0) idx = vertex_count + idx;
  else idx -= 1;
  return idx;
}

}  // namespace

TriangleMesh parseObj(std::istream& in) {
  TriangleMesh mesh;
  int label = 1;
  bool group_used = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Eigen::Vector3d v;
      if (!(ls >> v.x() >> v.y() >> v.z())) throw IoError("OBJ line " + std::to_string(line_no) + ": bad vertex");
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> poly;
      std::string tok;
      while (ls >> tok) poly.push_back(parseIndex(tok, static_cast<int>(mesh.vertices.size()), line_no));
      if (poly.size() < 3) throw IoError("OBJ line " + std::to_string(line_no) + ": face with fewer than 3 vertices");
      for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
        mesh.faces.emplace_back(poly[0], poly[k], poly[k + 1]);
        mesh.labels.push_back(label);
      }
      group_used = true;
    } else if (tag == "o" || tag == "g") {
      if (group_used) ++label;
      group_used = false;
    }
  }
  mesh.cleanup();
  return mesh;
}

TriangleMesh loadObj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mesh file: " + path.string());
  return parseObj(in);
}

void writeObj(std::ostream& out, const TriangleMesh& mesh) {
  out << std::setprecision(17);
  for (const auto& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  int current = -1;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    if (mesh.labels[f] != current) {
      current = mesh.labels[f];
      out << "o object" << current << '\n';
    }
    const auto& t = mesh.faces[f];
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  }
}

void saveObj(const std::filesystem::path& path, const TriangleMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write mesh file: " + path.string());
  writeObj(out, mesh);
}

TriangleMesh makeQuad(const Eigen::Vector3d& origin, const Eigen::Vector3d& edge_u, const Eigen::Vector3d& edge_v,
                      int label) {
  TriangleMesh m;
  m.vertices = {origin, origin + edge_u, origin + edge_u + edge_v, origin + edge_v};
  m.faces = {{0, 1, 2}, {0, 2, 3}};
  m.labels = {label, label};
  return m;
}

TriangleMesh makeBox(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi, int label) {
  TriangleMesh m;
  for (int i = 0; i < 8; ++i)
    m.vertices.emplace_back(i & 1 ? hi.x() : lo.x(), i & 2 ? hi.y() : lo.y(), i & 4 ? hi.z() : lo.z());
  // Counter-clockwise seen from outside.
  const int quads[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
  for (const auto& q : quads) {
    m.faces.emplace_back(q[0], q[1], q[2]);
    m.faces.emplace_back(q[0], q[2], q[3]);
  }
  m.labels.assign(m.faces.size(), label);
  return m;
}

TriangleMesh makeCylinder(double radius, double z0, double z1, int facets, int label) {
  TriangleMesh m;
  for (int i = 0; i < facets; ++i) {
    const double a = 2.0 * M_PI * i / facets;
    m.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), z0);
    m.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), z1);
  }
  const int bottom = static_cast<int>(m.vertices.size());
  m.vertices.emplace_back(0, 0, z0);
  m.vertices.emplace_back(0, 0, z1);
  for (int i = 0; i < facets; ++i) {
    const int j = (i + 1) % facets;
    const int b0 = 2 * i, t0 = 2 * i + 1, b1 = 2 * j, t1 = 2 * j + 1;
    m.faces.emplace_back(b0, b1, t1);
    m.faces.emplace_back(b0, t1, t0);
    m.faces.emplace_back(bottom, b1, b0);
    m.faces.emplace_back(bottom + 1, t0, t1);
  }
  m.labels.assign(m.faces.size(), label);
  return m;
}

TriangleMesh makeBracket() {
  TriangleMesh m;
  m.append(makeBox({-100, -70, 0}, {100, 70, 20}), 1);
  m.append(makeBox({40, 10, 20}, {100, 70, 110}), 1);
  m.append(makeBox({55, 25, 110}, {85, 55, 118}), 1);
  m.append(makeBox({-100, -55, 20}, {-80, 55, 60}), 1);
  m.append(makeBox({20, -65, 20}, {60, -30, 45}), 1);
  // Bolt heads and pads of distinct footprints so no two look alike.
  m.append(makeBox({-61, 39, 20}, {-49, 51, 28}), 1);
  m.append(makeBox({-49, -50, 20}, {-31, -40, 26}), 1);
  m.append(makeBox({-4, 21, 20}, {4, 29, 32}), 1);
  m.append(makeBox({-17, -27, 20}, {-3, -13, 24}), 1);
  m.append(makeBox({75, -58, 20}, {85, -42, 30}), 1);
  TriangleMesh boss = makeCylinder(14, 20, 50, 8);
  for (auto& v : boss.vertices) v += Eigen::Vector3d(-40, 5, 0);
  m.append(boss, 1);
  return m;
}

}  // namespace edgeloc
