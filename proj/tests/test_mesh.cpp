#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <set>
#include <sstream>

#include "pack/pack.hpp"
#include "support.hpp"

using namespace pack;

namespace {

const char* kCubeObj = R"(# unit cube
v 0 0 0
v 1 0 0
v 0 1 0
v 1 1 0
v 0 0 1
v 1 0 1
v 0 1 1
v 1 1 1
f 1 3 2
f 2 3 4
f 5 6 7
f 6 8 7
f 1 2 5
f 2 6 5
f 3 7 4
f 4 7 8
f 1 5 3
f 3 5 7
f 2 4 6
f 4 8 6
)";

std::string stl_bytes(const std::vector<std::array<Vec3, 3>>& tris) {
  std::string out(80, '\0');
  auto put = [&](const void* p, std::size_t n) { out.append(static_cast<const char*>(p), n); };
  const auto n = static_cast<std::uint32_t>(tris.size());
  put(&n, 4);
  for (const auto& t : tris) {
    const float normal[3] = {0, 0, 0};
    put(normal, 12);
    for (const auto& v : t) {
      const float f[3] = {static_cast<float>(v.x), static_cast<float>(v.y), static_cast<float>(v.z)};
      put(f, 12);
    }
    const std::uint16_t attr = 0;
    put(&attr, 2);
  }
  return out;
}

// Brute-force oracle: every point is on the inner side of every face plane.
void expect_contains_all(const TriMesh& hull, const std::vector<Vec3>& pts, double tol) {
  for (const auto& f : hull.faces) {
    const Vec3 a = hull.vertices[f[0]], b = hull.vertices[f[1]], c = hull.vertices[f[2]];
    Vec3 n = cross(b - a, c - a);
    n = n * (1.0 / norm(n));
    for (const auto& p : pts) ASSERT_LE(dot(n, p - a), tol);
  }
}

bool inside_hull(const TriMesh& hull, const Vec3& p) {
  for (const auto& f : hull.faces) {
    const Vec3 a = hull.vertices[f[0]];
    const Vec3 n = cross(hull.vertices[f[1]] - a, hull.vertices[f[2]] - a);
    if (dot(n, p - a) > 0) return false;
  }
  return true;
}

std::vector<Vec3> ball_points(testkit::Gen& g, int n) {
  std::vector<Vec3> pts;
  while (static_cast<int>(pts.size()) < n) {
    const Vec3 p{g.uniform(-1, 1), g.uniform(-1, 1), g.uniform(-1, 1)};
    if (dot(p, p) <= 1) pts.push_back(p);
  }
  return pts;
}

Mat3 random_rotation(testkit::Gen& g) {
  const double a = g.uniform(0, 2 * std::numbers::pi), b = g.uniform(0, std::numbers::pi), c = g.uniform(0, 2 * std::numbers::pi);
  auto rx = [](double t) { return Mat3{{1, 0, 0, 0, std::cos(t), -std::sin(t), 0, std::sin(t), std::cos(t)}}; };
  return yaw_rotation(a) * rx(b) * yaw_rotation(c);
}

}  // namespace

TEST(LoadMesh, CubeObjHasEightVertices) {
  const TriMesh m = parse_obj(kCubeObj);
  EXPECT_EQ(m.vertices.size(), 8u);
  EXPECT_EQ(m.faces.size(), 12u);
  EXPECT_TRUE(is_watertight(m));
  EXPECT_NEAR(mesh_volume(m), 1.0, 1e-12);
}

TEST(LoadMesh, ObjSlashRefsNegativeIndicesAndQuads) {
  const TriMesh m = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1/1 2//2 3/3 -1\n", 2.0);
  ASSERT_EQ(m.faces.size(), 2u);
  EXPECT_EQ(m.faces[1], (std::array<int, 3>{0, 2, 3}));
  EXPECT_DOUBLE_EQ(m.vertices[2].x, 2.0);
}

TEST(LoadMesh, MalformedFaceNamesByteOffset) {
  const std::string text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 2 x\n";
  try {
    parse_obj(text);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.byte_offset(), text.find("f 1 2 x"));
    EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos);
  }
  EXPECT_THROW(parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 2 9\n"), FormatError);
  EXPECT_THROW(parse_obj("v 0 0\n"), FormatError);
}

TEST(LoadMesh, FewerThanFourVerticesIsDegenerate) {
  EXPECT_THROW(parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n"), DegenerateMeshError);
}

TEST(LoadMesh, StlTetrahedron) {
  const Vec3 o{0, 0, 0}, x{1, 0, 0}, y{0, 1, 0}, z{0, 0, 1};
  const TriMesh m = parse_stl(stl_bytes({{o, y, x}, {o, x, z}, {o, z, y}, {x, y, z}}));
  EXPECT_EQ(m.vertices.size(), 4u);
  EXPECT_EQ(m.faces.size(), 4u);
  EXPECT_TRUE(is_watertight(m));
  EXPECT_NEAR(mesh_volume(m), 1.0 / 6.0, 1e-12);
}

TEST(LoadMesh, StlTruncatedIsFormatError) {
  std::string b = stl_bytes({{Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{0, 1, 0}}});
  b.resize(b.size() - 5);
  EXPECT_THROW(parse_stl(b), FormatError);
  EXPECT_THROW(parse_stl("short"), FormatError);
}

TEST(LoadMesh, FileRoundTripAndScale) {
  const auto dir = std::filesystem::temp_directory_path() / "pack_mesh_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "cube.obj";
  {
    std::ofstream out(path);
    write_obj(out, make_box_mesh(1, 2, 3));
  }
  EXPECT_EQ(format_from_extension(path), MeshFormat::OBJ);
  const TriMesh m = load_mesh(path, MeshFormat::OBJ, 0.5);
  EXPECT_NEAR(mesh_volume(m), 6.0 * 0.125, 1e-12);
  EXPECT_THROW(load_mesh(dir / "missing.obj", MeshFormat::OBJ), Error);
}

TEST(MeshVolume, CubeAndTetra) {
  EXPECT_NEAR(mesh_volume(make_box_mesh(1, 1, 1)), 1.0, 1e-15);
  const TriMesh t{{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, {{0, 2, 1}, {0, 1, 3}, {0, 3, 2}, {1, 2, 3}}};
  EXPECT_NEAR(mesh_volume(t), 1.0 / 6.0, 1e-15);
}

TEST(MeshVolume, OpenMeshRaisesWatertightError) {
  TriMesh m = make_box_mesh(1, 1, 1);
  m.faces.pop_back();
  EXPECT_FALSE(is_watertight(m));
  EXPECT_THROW(mesh_volume(m), WatertightError);
}

TEST(Convexify, CubeCornersGiveUnitVolume) {
  const TriMesh h = convexify(make_box_mesh(1, 1, 1));
  EXPECT_EQ(h.vertices.size(), 8u);
  EXPECT_TRUE(is_watertight(h));
  EXPECT_NEAR(mesh_volume(h), 1.0, 1e-12);
}

TEST(Convexify, InteriorPointRemoved) {
  TriMesh m = make_box_mesh(1, 1, 1);
  m.vertices.push_back({0.5, 0.5, 0.5});
  const TriMesh h = convexify(m);
  EXPECT_EQ(h.vertices.size(), 8u);
  EXPECT_NEAR(mesh_volume(h), 1.0, 1e-12);
}

TEST(Convexify, FaceAndEdgeMidpointsRemoved) {
  TriMesh m = make_box_mesh(1, 1, 1);
  m.vertices.push_back({0.5, 0.5, 0.0});
  m.vertices.push_back({0.5, 0.0, 0.0});
  const TriMesh h = convexify(m);
  EXPECT_EQ(h.vertices.size(), 8u);
}

TEST(Convexify, CoplanarAndCollinearInputsAreDegenerate) {
  TriMesh flat;
  for (int i = 0; i < 10; ++i) flat.vertices.push_back({std::cos(i * 0.6), std::sin(i * 0.6), 0.0});
  EXPECT_THROW(convexify(flat), DegenerateGeometryError);
  TriMesh line;
  for (int i = 0; i < 6; ++i) line.vertices.push_back({double(i), 2.0 * i, 0.0});
  EXPECT_THROW(convexify(line), DegenerateGeometryError);
}

TEST(Convexify, RandomBallAgainstFacetOracle) {
  testkit::Gen g(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pts = ball_points(g, 200);
    const TriMesh h = convexify({pts, {}});
    EXPECT_TRUE(is_watertight(h));
    expect_contains_all(h, pts, 1e-9);
    const double v = mesh_volume(h);
    EXPECT_GT(v, 0);
    EXPECT_LE(v, 4.0 / 3.0 * std::numbers::pi);
    // Every hull vertex is an input point.
    std::set<Vec3> input(pts.begin(), pts.end());
    for (const auto& p : h.vertices) EXPECT_TRUE(input.contains(p));
  }
}

TEST(Convexify, VolumeMatchesMonteCarlo) {
  testkit::Gen g(11);
  const auto pts = ball_points(g, 60);
  const TriMesh h = convexify({pts, {}});
  const Aabb b = bounds(h.vertices);
  const Vec3 e = b.extent();
  const int n = 1000000;
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    const Vec3 p{b.lo.x + e.x * g.uniform(), b.lo.y + e.y * g.uniform(), b.lo.z + e.z * g.uniform()};
    hits += inside_hull(h, p) ? 1 : 0;
  }
  const double mc = e.x * e.y * e.z * hits / n;
  EXPECT_NEAR(mesh_volume(h), mc, 0.01 * mc);
}

TEST(Convexify, Idempotent) {
  testkit::Gen g(3);
  for (int trial = 0; trial < 10; ++trial) {
    TriMesh cloud{ball_points(g, 80), {}};
    if (trial % 2) {
      // Points on the faces of a box: many coplanar points.
      cloud = make_box_mesh(0.3, 0.2, 0.1);
      for (int i = 0; i < 40; ++i) cloud.vertices.push_back({g.uniform(0, 0.3), g.uniform(0, 0.2), 0.1});
    }
    const TriMesh once = convexify(cloud);
    const TriMesh twice = convexify(once);
    auto a = once.vertices, b = twice.vertices;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    EXPECT_EQ(a, b);
  }
}

TEST(Convexify, VolumeRotationInvariant) {
  testkit::Gen g(5);
  const TriMesh h = convexify({ball_points(g, 100), {}});
  const double v = mesh_volume(h);
  for (int i = 0; i < 20; ++i) {
    const TriMesh r = convexify(transformed(h, random_rotation(g)));
    EXPECT_NEAR(mesh_volume(r), v, 1e-9 * v);
  }
  for (const auto& r : axis_rotations()) EXPECT_NEAR(mesh_volume(transformed(h, r)), v, 1e-12 * v);
}

TEST(ObjectModel, SignedTetraSumAndCentroid) {
  const ObjectModel m = testkit::box_object("b", 0.2, 0.1, 0.05);
  EXPECT_NEAR(m.volume, 0.2 * 0.1 * 0.05, 1e-15);
  EXPECT_NEAR(m.volume, signed_volume_unchecked(m.mesh), 1e-9 * m.volume);
  EXPECT_NEAR(m.centroid.x, 0.1, 1e-12);
  EXPECT_NEAR(m.centroid.y, 0.05, 1e-12);
  EXPECT_NEAR(m.centroid.z, 0.025, 1e-12);
  EXPECT_NEAR(m.aabb.x, 0.2, 1e-15);
}

TEST(Geometry, AxisRotationsAreDistinctProperRotations) {
  const auto& rs = axis_rotations();
  std::set<std::array<double, 9>> seen;
  for (const auto& r : rs) {
    EXPECT_DOUBLE_EQ(r.det(), 1.0);
    seen.insert(r.m);
  }
  EXPECT_EQ(seen.size(), 24u);
  const Vec3 p{1, 2, 3}, q = rs[0] * p;
  EXPECT_EQ(q, p);
}

TEST(Geometry, YawRotationSnapsQuarterTurns) {
  const Vec3 v = yaw_rotation(std::numbers::pi / 2) * Vec3{1, 0, 0};
  EXPECT_EQ(v.x, 0.0);
  EXPECT_EQ(v.y, 1.0);
}

TEST(Geometry, PolygonDistance) {
  const std::vector<Vec2> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  EXPECT_EQ(distance_to_convex_polygon({0.5, 0.5}, sq), 0.0);
  EXPECT_NEAR(distance_to_convex_polygon({2, 0.5}, sq), 1.0, 1e-15);
  EXPECT_NEAR(distance_to_convex_polygon({2, 2}, sq), std::sqrt(2.0), 1e-15);
  const std::vector<Vec2> pt{{0, 0}};
  EXPECT_NEAR(distance_to_convex_polygon({3, 4}, pt), 5.0, 1e-15);
  EXPECT_NEAR(polygon_area(sq), 1.0, 1e-15);
  EXPECT_NEAR(polygon_perimeter(sq), 4.0, 1e-15);
}
