#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pack/error.hpp"
#include "pack/geometry.hpp"

namespace pack {

struct TriMesh {
  std::vector<Vec3> vertices;                 // meters
  std::vector<std::array<int, 3>> faces;      // CCW seen from outside
};

enum class MeshFormat { OBJ, STL };

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

namespace detail {

inline bool parse_double(std::string_view tok, double& out) {
  // from_chars rejects a leading '+', which some exporters emit.
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc{} && p == tok.data() + tok.size() && std::isfinite(out);
}

inline bool parse_int(std::string_view tok, long& out) {
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc{} && p == tok.data() + tok.size();
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open mesh file: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void require_min_vertices(const TriMesh& m) {
  if (m.vertices.size() < 4)
    throw DegenerateMeshError("mesh has " + std::to_string(m.vertices.size()) +
                              " vertices; at least 4 are required");
}

}  // namespace detail

// ASCII Wavefront OBJ: `v` and `f` records, polygons fan-triangulated.
inline TriMesh parse_obj(std::string_view text, double scale = 1.0) {
  TriMesh mesh;
  struct PendingFace { std::vector<long> idx; std::size_t offset; };
  std::vector<PendingFace> pending;

  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const std::string_view line = text.substr(pos, eol - pos);
    const std::size_t line_offset = pos;
    pos = eol + 1;

    auto toks = detail::split_ws(line);
    if (toks.empty() || toks[0].front() == '#') continue;
    if (toks[0] == "v") {
      if (toks.size() < 4) throw FormatError("vertex record needs 3 coordinates", line_offset);
      Vec3 v;
      if (!detail::parse_double(toks[1], v.x) || !detail::parse_double(toks[2], v.y) ||
          !detail::parse_double(toks[3], v.z))
        throw FormatError("malformed vertex coordinate", line_offset);
      mesh.vertices.push_back(v * scale);
    } else if (toks[0] == "f") {
      if (toks.size() < 4) throw FormatError("face record needs at least 3 vertices", line_offset);
      PendingFace f{{}, line_offset};
      for (std::size_t k = 1; k < toks.size(); ++k) {
        std::string_view ref = toks[k].substr(0, toks[k].find('/'));
        long i = 0;
        if (!detail::parse_int(ref, i) || i == 0)
          throw FormatError("malformed face index '" + std::string(toks[k]) + "'", line_offset);
        f.idx.push_back(i);
      }
      pending.push_back(std::move(f));
    }
  }

  const long nv = static_cast<long>(mesh.vertices.size());
  for (const auto& f : pending) {
    std::vector<int> resolved;
    for (long i : f.idx) {
      const long r = i > 0 ? i - 1 : nv + i;
      if (r < 0 || r >= nv) throw FormatError("face index out of range", f.offset);
      resolved.push_back(static_cast<int>(r));
    }
    for (std::size_t k = 1; k + 1 < resolved.size(); ++k)
      mesh.faces.push_back({resolved[0], resolved[k], resolved[k + 1]});
  }
  detail::require_min_vertices(mesh);
  return mesh;
}

// Binary STL; coincident corners are merged by exact coordinate match.
inline TriMesh parse_stl(std::string_view bytes, double scale = 1.0) {
  if (bytes.size() < 84) throw FormatError("STL shorter than its 84-byte header", bytes.size());
  std::uint32_t n = 0;
  std::memcpy(&n, bytes.data() + 80, 4);
  const std::size_t expected = 84 + std::size_t{n} * 50;
  if (bytes.size() != expected)
    throw FormatError("STL size does not match triangle count " + std::to_string(n),
                      std::min(bytes.size(), expected));

  TriMesh mesh;
  std::map<Vec3, int> index;
  for (std::uint32_t t = 0; t < n; ++t) {
    const std::size_t base = 84 + std::size_t{t} * 50 + 12;  // skip normal
    std::array<int, 3> face{};
    for (int c = 0; c < 3; ++c) {
      float xyz[3];
      std::memcpy(xyz, bytes.data() + base + c * 12, 12);
      for (float f : xyz)
        if (!std::isfinite(f)) throw FormatError("non-finite STL coordinate", base + c * 12);
      const Vec3 v = Vec3{xyz[0], xyz[1], xyz[2]} * scale;
      auto [it, inserted] = index.try_emplace(v, static_cast<int>(mesh.vertices.size()));
      if (inserted) mesh.vertices.push_back(v);
      face[c] = it->second;
    }
    mesh.faces.push_back(face);
  }
  detail::require_min_vertices(mesh);
  return mesh;
}

inline TriMesh load_mesh(const std::filesystem::path& path, MeshFormat format, double scale = 1.0) {
  const std::string bytes = detail::read_file(path);
  return format == MeshFormat::OBJ ? parse_obj(bytes, scale) : parse_stl(bytes, scale);
}

inline MeshFormat format_from_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".obj") return MeshFormat::OBJ;
  if (ext == ".stl") return MeshFormat::STL;
  throw Error("unsupported mesh extension: " + path.string());
}

inline void write_obj(std::ostream& out, const TriMesh& mesh) {
  out.precision(17);
  for (const auto& v : mesh.vertices) out << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
  for (const auto& f : mesh.faces) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

// ---------------------------------------------------------------------------
// Topology and integrals
// ---------------------------------------------------------------------------

// Every undirected edge shared by exactly two faces, traversed once in each
// direction (consistent orientation).
inline bool is_watertight(const TriMesh& mesh) {
  if (mesh.faces.empty()) return false;
  std::map<std::pair<int, int>, int> directed;
  for (const auto& f : mesh.faces)
    for (int k = 0; k < 3; ++k) {
      const int a = f[k], b = f[(k + 1) % 3];
      if (a == b) return false;
      if (++directed[{a, b}] > 1) return false;
    }
  for (const auto& [e, count] : directed)
    if (!directed.contains({e.second, e.first})) return false;
  return true;
}

inline double signed_volume_unchecked(const TriMesh& mesh) {
  const Vec3 ref = mesh.vertices.empty() ? Vec3{} : mesh.vertices.front();
  double v = 0;
  for (const auto& f : mesh.faces) {
    const Vec3 a = mesh.vertices[f[0]] - ref, b = mesh.vertices[f[1]] - ref, c = mesh.vertices[f[2]] - ref;
    v += dot(a, cross(b, c));
  }
  return v / 6.0;
}

inline double mesh_volume(const TriMesh& mesh) {
  if (!is_watertight(mesh)) throw WatertightError("mesh is not watertight");
  return signed_volume_unchecked(mesh);
}

// Center of mass of the enclosed solid, uniform density.
inline Vec3 mesh_centroid(const TriMesh& mesh) {
  const Vec3 ref = mesh.vertices.front();
  double vol = 0;
  Vec3 acc{};
  for (const auto& f : mesh.faces) {
    const Vec3 a = mesh.vertices[f[0]] - ref, b = mesh.vertices[f[1]] - ref, c = mesh.vertices[f[2]] - ref;
    const double v = dot(a, cross(b, c)) / 6.0;
    vol += v;
    acc = acc + (a + b + c) * (v / 4.0);
  }
  return ref + acc * (1.0 / vol);
}

struct Aabb {
  Vec3 lo{}, hi{};
  Vec3 extent() const { return hi - lo; }
};

inline Aabb bounds(std::span<const Vec3> pts) {
  Aabb b{pts.front(), pts.front()};
  for (const auto& p : pts) {
    b.lo = {std::min(b.lo.x, p.x), std::min(b.lo.y, p.y), std::min(b.lo.z, p.z)};
    b.hi = {std::max(b.hi.x, p.x), std::max(b.hi.y, p.y), std::max(b.hi.z, p.z)};
  }
  return b;
}

inline TriMesh transformed(const TriMesh& mesh, const Mat3& r) {
  TriMesh out = mesh;
  for (auto& v : out.vertices) v = r * v;
  return out;
}

// ---------------------------------------------------------------------------
// Convex hull
// ---------------------------------------------------------------------------

namespace detail {

struct HullFace {
  std::array<int, 3> v;
  Vec3 n;
  double d;
  bool alive = true;
};

class IncrementalHull {
 public:
  IncrementalHull(const std::vector<Vec3>& pts, double eps) : pts_(pts), eps_(eps) {}

  std::vector<HullFace> build() {
    const auto seed = initial_simplex();
    Vec3 inner{};
    for (int i : seed) inner = inner + pts_[i] * 0.25;
    const std::array<std::array<int, 3>, 4> tri{{{seed[0], seed[1], seed[2]},
                                                 {seed[0], seed[1], seed[3]},
                                                 {seed[0], seed[2], seed[3]},
                                                 {seed[1], seed[2], seed[3]}}};
    for (auto t : tri) {
      HullFace f = make_face(t[0], t[1], t[2]);
      if (f.d - dot(f.n, inner) < 0) f = make_face(t[0], t[2], t[1]);
      add_face(f);
    }
    std::vector<char> used(pts_.size(), 0);
    for (int i : seed) used[i] = 1;
    for (std::size_t i = 0; i < pts_.size(); ++i)
      if (!used[i]) insert(static_cast<int>(i));

    std::vector<HullFace> alive;
    for (const auto& f : faces_)
      if (f.alive) alive.push_back(f);
    return alive;
  }

 private:
  HullFace make_face(int a, int b, int c) const {
    Vec3 n = cross(pts_[b] - pts_[a], pts_[c] - pts_[a]);
    n = n * (1.0 / norm(n));
    return {{a, b, c}, n, dot(n, pts_[a])};
  }

  double signed_dist(const HullFace& f, int p) const { return dot(f.n, pts_[p]) - f.d; }

  void add_face(const HullFace& f) {
    const int id = static_cast<int>(faces_.size());
    faces_.push_back(f);
    for (int k = 0; k < 3; ++k) edge_owner_[{f.v[k], f.v[(k + 1) % 3]}] = id;
  }

  std::array<int, 4> initial_simplex() const {
    const int n = static_cast<int>(pts_.size());
    int a = 0;
    for (int i = 1; i < n; ++i)
      if (pts_[i] < pts_[a]) a = i;
    int b = -1;
    double best = eps_;
    for (int i = 0; i < n; ++i)
      if (double d = norm(pts_[i] - pts_[a]); d > best) best = d, b = i;
    if (b < 0) throw DegenerateGeometryError("all points coincide");
    const Vec3 dir = (pts_[b] - pts_[a]) * (1.0 / norm(pts_[b] - pts_[a]));
    int c = -1;
    best = eps_;
    for (int i = 0; i < n; ++i)
      if (double d = norm(cross(pts_[i] - pts_[a], dir)); d > best) best = d, c = i;
    if (c < 0) throw DegenerateGeometryError("points are collinear");
    Vec3 nrm = cross(pts_[b] - pts_[a], pts_[c] - pts_[a]);
    nrm = nrm * (1.0 / norm(nrm));
    int d4 = -1;
    best = eps_;
    for (int i = 0; i < n; ++i)
      if (double d = std::abs(dot(pts_[i] - pts_[a], nrm)); d > best) best = d, d4 = i;
    if (d4 < 0) throw DegenerateGeometryError("points are coplanar");
    return {a, b, c, d4};
  }

  void insert(int p) {
    int start = -1;
    double best = eps_;
    for (std::size_t i = 0; i < faces_.size(); ++i)
      if (faces_[i].alive)
        if (double d = signed_dist(faces_[i], p); d > best) best = d, start = static_cast<int>(i);
    if (start < 0) return;  // inside or on the hull

    // Flood the connected visible region so the horizon is a single loop.
    std::vector<int> visible;
    std::set<int> seen{start};
    std::queue<int> q;
    q.push(start);
    while (!q.empty()) {
      const int f = q.front();
      q.pop();
      visible.push_back(f);
      for (int k = 0; k < 3; ++k) {
        const int a = faces_[f].v[k], b = faces_[f].v[(k + 1) % 3];
        const int nb = edge_owner_.at({b, a});
        if (!seen.contains(nb) && signed_dist(faces_[nb], p) > eps_) {
          seen.insert(nb);
          q.push(nb);
        }
      }
    }
    std::vector<std::pair<int, int>> horizon;
    for (int f : visible)
      for (int k = 0; k < 3; ++k) {
        const int a = faces_[f].v[k], b = faces_[f].v[(k + 1) % 3];
        if (!seen.contains(edge_owner_.at({b, a}))) horizon.emplace_back(a, b);
      }
    for (int f : visible) {
      faces_[f].alive = false;
      for (int k = 0; k < 3; ++k) edge_owner_.erase({faces_[f].v[k], faces_[f].v[(k + 1) % 3]});
    }
    for (auto [a, b] : horizon) add_face(make_face(a, b, p));
  }

  const std::vector<Vec3>& pts_;
  double eps_;
  std::vector<HullFace> faces_;
  std::map<std::pair<int, int>, int> edge_owner_;
};

inline double hull_tolerance(std::span<const Vec3> pts) {
  const Aabb b = bounds(pts);
  const Vec3 e = b.extent();
  const double scale = std::max({e.x, e.y, e.z, std::abs(b.lo.x), std::abs(b.lo.y),
                                 std::abs(b.lo.z), std::abs(b.hi.x), std::abs(b.hi.y),
                                 std::abs(b.hi.z), 1e-300});
  return 1e-11 * scale;
}

// A hull vertex is extreme iff its incident faces span at least three
// distinct planes; otherwise it sits inside a facet or along an edge.
inline std::vector<char> extreme_flags(const std::vector<HullFace>& faces, std::size_t n) {
  std::vector<std::vector<Vec3>> normals(n);
  for (const auto& f : faces)
    for (int v : f.v) {
      auto& ns = normals[v];
      const bool dup = std::any_of(ns.begin(), ns.end(),
                                   [&](const Vec3& m) { return dot(m, f.n) > 1.0 - 1e-10; });
      if (!dup) ns.push_back(f.n);
    }
  std::vector<char> flags(n, 0);
  for (std::size_t i = 0; i < n; ++i) flags[i] = normals[i].size() >= 3;
  return flags;
}

}  // namespace detail

// Exact convex hull; output vertices are the extreme points in lexicographic
// order and faces are outward-wound triangles.
inline TriMesh convexify(const TriMesh& mesh) {
  std::vector<Vec3> pts = mesh.vertices;
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 4) throw DegenerateGeometryError("fewer than 4 distinct points");
  const double eps = detail::hull_tolerance(pts);

  for (;;) {
    detail::IncrementalHull builder(pts, eps);
    const auto faces = builder.build();
    const auto extreme = detail::extreme_flags(faces, pts.size());

    std::vector<char> on_hull(pts.size(), 0);
    for (const auto& f : faces)
      for (int v : f.v) on_hull[v] = 1;
    bool drop = false;
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (on_hull[i] && !extreme[i]) drop = true;

    if (!drop) {
      std::vector<int> remap(pts.size(), -1);
      TriMesh out;
      for (std::size_t i = 0; i < pts.size(); ++i)
        if (on_hull[i]) {
          remap[i] = static_cast<int>(out.vertices.size());
          out.vertices.push_back(pts[i]);
        }
      for (const auto& f : faces) out.faces.push_back({remap[f.v[0]], remap[f.v[1]], remap[f.v[2]]});
      return out;
    }
    std::vector<Vec3> kept;
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (on_hull[i] && extreme[i]) kept.push_back(pts[i]);
    if (kept.size() < 4) throw DegenerateGeometryError("hull collapsed while removing non-extreme points");
    pts = std::move(kept);
  }
}

// ---------------------------------------------------------------------------
// Object model
// ---------------------------------------------------------------------------

struct ObjectModel {
  std::string id;
  std::string category;
  TriMesh mesh;     // convex, watertight
  double volume = 0;
  Vec3 aabb{};      // extents in the authored orientation
  Vec3 centroid{};  // center of mass, uniform density
};

inline ObjectModel make_object(std::string id, std::string category, const TriMesh& raw) {
  ObjectModel m;
  m.id = std::move(id);
  m.category = std::move(category);
  m.mesh = convexify(raw);
  m.volume = mesh_volume(m.mesh);
  if (!(m.volume > 0)) throw DegenerateGeometryError("object '" + m.id + "' has zero volume");
  m.aabb = bounds(m.mesh.vertices).extent();
  m.centroid = mesh_centroid(m.mesh);
  return m;
}

// Rigidly rotated copy; volume is carried over rather than recomputed.
inline ObjectModel rotated(const ObjectModel& m, const Mat3& r) {
  ObjectModel out = m;
  out.mesh = transformed(m.mesh, r);
  out.aabb = bounds(out.mesh.vertices).extent();
  out.centroid = r * m.centroid;
  return out;
}

// Axis-aligned box with one corner at the origin.
inline TriMesh make_box_mesh(double lx, double ly, double lz) {
  TriMesh m;
  for (int i = 0; i < 8; ++i)
    m.vertices.push_back({(i & 1) ? lx : 0.0, (i & 2) ? ly : 0.0, (i & 4) ? lz : 0.0});
  m.faces = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
             {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return m;
}

// Point cloud approximating a sphere (latitude/longitude rings); feed to convexify.
inline TriMesh make_sphere_points(double radius, int rings = 16, int segments = 32) {
  TriMesh m;
  m.vertices.push_back({0, 0, radius});
  m.vertices.push_back({0, 0, -radius});
  for (int r = 1; r < rings; ++r) {
    const double phi = std::numbers::pi * r / rings;
    for (int s = 0; s < segments; ++s) {
      const double th = 2 * std::numbers::pi * s / segments;
      m.vertices.push_back({radius * std::sin(phi) * std::cos(th), radius * std::sin(phi) * std::sin(th),
                            radius * std::cos(phi)});
    }
  }
  return m;
}

// Upright cylinder point cloud, base at z = 0, axis through the origin.
inline TriMesh make_cylinder_points(double radius, double height, int segments = 24) {
  TriMesh m;
  for (int s = 0; s < segments; ++s) {
    const double th = 2 * std::numbers::pi * s / segments;
    const double x = radius * std::cos(th), y = radius * std::sin(th);
    m.vertices.push_back({x, y, 0});
    m.vertices.push_back({x, y, height});
  }
  return m;
}

}  // namespace pack
