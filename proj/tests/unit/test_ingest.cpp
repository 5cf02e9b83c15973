#include <gtest/gtest.h>

#include <Eigen/Geometry>

#include <bit>
#include <filesystem>
#include <random>

#include "planstitch/error.hpp"
#include "planstitch/io.hpp"
#include "planstitch/planes.hpp"
#include "planstitch/premerge.hpp"
#include "planstitch/synth.hpp"

using namespace planstitch;

namespace {

constexpr double kPi = 3.14159265358979323846;

double angle_deg(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return std::acos(std::clamp(std::abs(a.normalized().dot(b.normalized())), 0.0, 1.0)) * 180.0 / kPi;
}

std::vector<Point3> plane_points(const Eigen::Vector3d& origin, const Eigen::Vector3d& u, const Eigen::Vector3d& v,
                                 int nu, int nv, double step) {
  std::vector<Point3> out;
  for (int i = 0; i < nu; ++i) {
    for (int j = 0; j < nv; ++j) out.push_back(origin + i * step * u + j * step * v);
  }
  return out;
}

// Floor plus three walls of a 4 x 3 box, x up.
Fragment box_fragment() {
  Fragment f;
  f.id = "box";
  auto add = [&](std::vector<Point3> pts) { f.points.insert(f.points.end(), pts.begin(), pts.end()); };
  add(plane_points({0, 0, 0}, Eigen::Vector3d::UnitY(), Eigen::Vector3d::UnitZ(), 40, 30, 0.1));
  add(plane_points({0, 0, 0}, Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitZ(), 26, 30, 0.1));
  add(plane_points({0, 0, 0}, Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY(), 26, 40, 0.1));
  add(plane_points({0, 4, 0}, Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitZ(), 26, 30, 0.1));
  return f;
}

PlaneModel plane_with_normal(const Eigen::Vector3d& n, int inliers) {
  PlaneModel p;
  p.normal = n.normalized();
  p.inlierCount = inliers;
  return p;
}

// Wall band points along the perimeter interval [u0, u1] of a loop.
std::vector<Point3> perimeter_points(const std::vector<Vec2>& loop, double u0, double u1, double ppm) {
  std::vector<Point3> out;
  double acc = 0.0;
  const double step = 1.0 / ppm;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const Vec2 a = loop[i], b = loop[(i + 1) % loop.size()];
    const double len = (b - a).norm();
    for (double s = 0.0; s < len; s += step) {
      const double u = acc + s;
      if (u < u0 || u > u1) continue;
      const Vec2 q = a + (b - a) * (s / len);
      for (double h = 0.0; h <= 2.6; h += step) out.emplace_back(h, q.x(), q.y());
    }
    acc += len;
  }
  return out;
}

double perimeter(const std::vector<Vec2>& loop) {
  double p = 0.0;
  for (std::size_t i = 0; i < loop.size(); ++i) p += (loop[(i + 1) % loop.size()] - loop[i]).norm();
  return p;
}

Fragment moved(Fragment f, int rotIndex, const Vec2& t) {
  for (auto& p : f.points) {
    const Vec2 q = rotate_quarter(Vec2(p.y(), p.z()), rotIndex) + t;
    p = Point3(p.x(), q.x(), q.y());
  }
  return f;
}

}  // namespace

TEST(Parse, AsciiPlyKeepsFileOrder) {
  const std::string ply =
      "ply\nformat ascii 1.0\ncomment test\nelement vertex 3\nproperty float x\nproperty float y\n"
      "property float z\nproperty uchar red\nend_header\n1 2 3 255\n4 5 6 0\n-1 0.5 2e1 7\n";
  const auto pts = parse_points(ply, PointFormat::PlyAscii);
  ASSERT_EQ(pts.size(), 3u);
  EXPECT_EQ(pts[0], Point3(1, 2, 3));
  EXPECT_EQ(pts[1], Point3(4, 5, 6));
  EXPECT_EQ(pts[2], Point3(-1, 0.5, 20));
}

TEST(Parse, XyzSkipsBlanksAndComments) {
  const std::string xyz = "# header\n\n1 2 3\n   \n# mid\n4 5 6 extra\n";
  const auto pts = parse_points(xyz, PointFormat::Xyz);
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_EQ(pts[1], Point3(4, 5, 6));
}

TEST(Parse, BinaryPlyRoundTripIsBitExact) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<float> u(-100.0f, 100.0f);
  std::vector<Point3> pts;
  for (int i = 0; i < 500; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
  const auto back = parse_points(format_ply(pts, true), PointFormat::PlyBinaryLE);
  ASSERT_EQ(back.size(), pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      EXPECT_EQ(std::bit_cast<std::uint32_t>(static_cast<float>(back[i][c])),
                std::bit_cast<std::uint32_t>(static_cast<float>(pts[i][c])));
    }
  }
  const auto ascii = parse_points(format_ply(pts, false), PointFormat::PlyAscii);
  ASSERT_EQ(ascii.size(), pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_EQ(static_cast<float>(ascii[i].x()), static_cast<float>(pts[i].x()));
}

TEST(Parse, BinaryDoubleAndMixedProperties) {
  std::string ply =
      "ply\nformat binary_little_endian 1.0\nelement vertex 1\nproperty double x\nproperty uchar flag\n"
      "property double y\nproperty double z\nend_header\n";
  auto put = [&](double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) ply.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
  };
  put(1.25);
  ply.push_back('\x07');
  put(-2.5);
  put(3.0e-3);
  const auto pts = parse_points(ply, PointFormat::PlyBinaryLE);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_EQ(pts[0], Point3(1.25, -2.5, 3.0e-3));
}

TEST(Parse, MalformedInputsReportOffsets) {
  EXPECT_THROW(parse_points("plx\n", PointFormat::PlyAscii), ParseError);
  const std::string noEnd = "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\n";
  EXPECT_THROW(parse_points(noEnd, PointFormat::PlyAscii), ParseError);
  const std::string big =
      "ply\nformat binary_big_endian 1.0\nelement vertex 1\nproperty float x\nproperty float y\n"
      "property float z\nend_header\n";
  EXPECT_THROW(parse_points(big, PointFormat::PlyBinaryLE), ParseError);
  const std::string truncated =
      "ply\nformat binary_little_endian 1.0\nelement vertex 2\nproperty float x\nproperty float y\n"
      "property float z\nend_header\n12345678901234567890";
  try {
    parse_points(truncated, PointFormat::PlyBinaryLE);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_GT(e.offset(), 0u);
  }
  const std::string badAscii =
      "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\n"
      "end_header\n1 2 3\n4 five 6\n";
  EXPECT_THROW(parse_points(badAscii, PointFormat::PlyAscii), ParseError);
  EXPECT_THROW(parse_points("1 2\n", PointFormat::Xyz), ParseError);
}

TEST(Parse, PoseMustBeRigid) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = Eigen::AngleAxisd(0.3, Eigen::Vector3d::UnitX()).toRotationMatrix();
  m(0, 3) = 1.5;
  const Eigen::Matrix4d back = parse_pose(format_pose(m));
  EXPECT_TRUE(back.isApprox(m, 1e-12));
  EXPECT_THROW(parse_pose("1 0 0 0 0 2 0 0 0 0 1 0 0 0 0 1"), ParseError);
  EXPECT_THROW(parse_pose("1 0 0"), ParseError);
}

TEST(Parse, FragmentFileReadsSiblingCamera) {
  const auto dir = std::filesystem::temp_directory_path() / "planstitch_ingest_cam";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const std::vector<Point3> pts{{0, 0, 0}, {1, 1, 1}};
  write_ply(dir / "scan.ply", pts, true);
  Fragment f = parse_fragment(dir / "scan.ply");
  EXPECT_EQ(f.id, "scan");
  EXPECT_EQ(f.points.size(), 2u);
  EXPECT_FALSE(f.cameraPose.has_value());
  write_file(dir / "scan.cam", format_pose(Eigen::Matrix4d::Identity()));
  f = parse_fragment(dir / "scan.ply");
  EXPECT_TRUE(f.cameraPose.has_value());
  std::filesystem::remove_all(dir);
}

TEST(Planes, SinglePlaneWithOutliers) {
  Fragment f;
  f.id = "floor";
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int i = 0; i < 5000; ++i) f.points.emplace_back(u(rng), u(rng), 0.0);
  for (int i = 0; i < 100; ++i) f.points.emplace_back(u(rng), u(rng), u(rng) - 5.0);
  const auto planes = extract_planes(f);
  ASSERT_EQ(planes.size(), 1u);
  EXPECT_LT(angle_deg(planes[0].normal, Eigen::Vector3d::UnitZ()), 1.0);
  EXPECT_GE(planes[0].inlierCount, 4900);
  EXPECT_NEAR(planes[0].normal.norm(), 1.0, 1e-6);
}

TEST(Planes, TwoPerpendicularWalls) {
  Fragment f;
  f.id = "walls";
  auto a = plane_points({0, 0, 0}, Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY(), 30, 40, 0.05);
  auto b = plane_points({0, 0, 0.05}, Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitZ(), 30, 40, 0.05);
  f.points = a;
  f.points.insert(f.points.end(), b.begin(), b.end());
  const auto planes = extract_planes(f);
  ASSERT_EQ(planes.size(), 2u);
  EXPECT_NEAR(angle_deg(planes[0].normal, planes[1].normal), 90.0, 1.0);
}

TEST(Planes, UniformNoiseHasNoPlane) {
  Fragment f;
  f.id = "noise";
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int i = 0; i < 3000; ++i) f.points.emplace_back(u(rng), u(rng), u(rng));
  EXPECT_TRUE(extract_planes(f).empty());
}

TEST(Planes, InlierSetsAreDisjointAndDeterministic) {
  const Fragment f = box_fragment();
  const auto planes = extract_planes(f);
  EXPECT_EQ(planes.size(), 4u);
  std::vector<int> seen(f.points.size(), 0);
  for (const auto& p : planes) {
    EXPECT_EQ(p.inlierCount, static_cast<int>(p.inliers.size()));
    for (int i : p.inliers) EXPECT_EQ(seen[i]++, 0);
  }
  const auto again = extract_planes(f);
  ASSERT_EQ(again.size(), planes.size());
  for (std::size_t i = 0; i < planes.size(); ++i) EXPECT_EQ(again[i].inliers, planes[i].inliers);
}

TEST(MwFrame, AxisNormalsGiveIdentity) {
  const std::vector<PlaneModel> planes{plane_with_normal({1, 0, 0}, 900), plane_with_normal({0, 1, 0}, 800),
                                       plane_with_normal({0, 0, 1}, 700)};
  const ManhattanFrame fr = estimate_mw_frame(planes);
  EXPECT_TRUE(fr.matrix().isApprox(Eigen::Matrix3d::Identity(), 1e-9));
  EXPECT_TRUE(fr.is_valid());
}

TEST(MwFrame, RecoversRotationAboutUp) {
  const Eigen::Matrix3d r = Eigen::AngleAxisd(30.0 * kPi / 180.0, Eigen::Vector3d::UnitX()).toRotationMatrix();
  const std::vector<PlaneModel> planes{plane_with_normal(r.col(0), 900), plane_with_normal(r.col(1), 800),
                                       plane_with_normal(-r.col(2), 700)};
  const ManhattanFrame fr = estimate_mw_frame(planes);
  EXPECT_LT(angle_deg(fr.axisX, Eigen::Vector3d::UnitX()), 1.0);
  const double e1 = std::min(angle_deg(fr.axisY, r.col(1)), angle_deg(fr.axisY, r.col(2)));
  EXPECT_LT(e1, 1.0);
}

TEST(MwFrame, TwoWallsCompletedByCrossProduct) {
  const std::vector<PlaneModel> planes{plane_with_normal({0, 1, 0}, 800), plane_with_normal({0, 0, 1}, 700)};
  const ManhattanFrame fr = estimate_mw_frame(planes);
  EXPECT_TRUE(fr.is_valid());
  EXPECT_LT(angle_deg(fr.axisX, Eigen::Vector3d::UnitX()), 1e-6);
  EXPECT_NEAR(fr.axisX.cross(fr.axisY).dot(fr.axisZ), 1.0, 1e-9);
}

TEST(MwFrame, OnlyHorizontalPlanesFail) {
  const std::vector<PlaneModel> planes{plane_with_normal({1, 0, 0}, 800), plane_with_normal({1, 0.01, 0}, 700)};
  EXPECT_THROW(estimate_mw_frame(planes), FrameEstimationError);
}

TEST(MwFrame, ValidForRandomBoxRotations) {
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> ang(-0.2, 0.2), yaw(-kPi, kPi);
  for (int trial = 0; trial < 20; ++trial) {
    Fragment f = box_fragment();
    const Eigen::Matrix3d r = (Eigen::AngleAxisd(yaw(rng), Eigen::Vector3d::UnitX()) *
                               Eigen::AngleAxisd(ang(rng), Eigen::Vector3d::UnitY()) *
                               Eigen::AngleAxisd(ang(rng), Eigen::Vector3d::UnitZ()))
                                  .toRotationMatrix();
    for (auto& p : f.points) p = r * p;
    const ManhattanFrame fr = estimate_mw_frame(extract_planes(f));
    EXPECT_TRUE(fr.is_valid(1e-6));
    EXPECT_LT(angle_deg(fr.axisX, r.col(0)), 1.0);
  }
}

TEST(AlignUp, TiltRemovedAndRigid) {
  Fragment f = box_fragment();
  const std::vector<Point3> orig = f.points;
  const Eigen::Matrix3d tilt = Eigen::AngleAxisd(15.0 * kPi / 180.0, Eigen::Vector3d::UnitY()).toRotationMatrix();
  for (auto& p : f.points) p = tilt * p;
  f.planes = extract_planes(f);
  f.frame = estimate_mw_frame(f.planes);
  const Eigen::Matrix3d applied = align_up(f);
  EXPECT_LT(std::acos(std::clamp(f.frame->axisX.dot(Eigen::Vector3d::UnitX()), -1.0, 1.0)), 1e-6);
  // Minimal rotation: its axis has no up component.
  const Eigen::AngleAxisd aa(applied);
  if (aa.angle() > 1e-9) EXPECT_NEAR(aa.axis().x(), 0.0, 1e-9);
  for (int i = 0; i < 50; ++i) {
    const int a = i * 37 % static_cast<int>(orig.size()), b = i * 91 % static_cast<int>(orig.size());
    EXPECT_NEAR((f.points[a] - f.points[b]).norm(), (orig[a] - orig[b]).norm(), 1e-9);
  }
}

TEST(AlignUp, AlignedFragmentUntouched) {
  Fragment f = box_fragment();
  f.planes = extract_planes(f);
  f.frame = estimate_mw_frame(f.planes);
  EXPECT_TRUE(align_up(f).isApprox(Eigen::Matrix3d::Identity(), 1e-9));
}

TEST(AlignUp, MissingFrameIsPrecondition) {
  Fragment f = box_fragment();
  EXPECT_THROW(align_up(f), PreconditionError);
}

TEST(Premerge, IdenticalCopiesMerge) {
  const auto loop = gen_scene(3, 8).vertices;
  Fragment a;
  a.id = "a";
  a.points = perimeter_points(loop, 0.0, 0.5 * perimeter(loop), 20);
  Fragment b = moved(a, 3, {2.0, -1.0});
  b.id = "b";
  const auto res = premerge_overlapping({a, b});
  ASSERT_EQ(res.fragments.size(), 1u);
  EXPECT_EQ(res.members[0].size(), 2u);
  EXPECT_EQ(res.members[0][0].id, "a");
  EXPECT_GT(best_overlap(a, b).score, 0.95);
}

TEST(Premerge, OverlapThresholdGate) {
  const auto loop = gen_scene(5, 10).vertices;
  const double half = 0.45 * perimeter(loop);
  auto pair_with_overlap = [&](double frac) {
    Fragment a, b;
    a.id = "a";
    b.id = "b";
    a.points = perimeter_points(loop, 0.0, half, 20);
    b.points = perimeter_points(loop, (1.0 - frac) * half, (2.0 - frac) * half, 20);
    b = moved(b, 2, {0.7, 3.1});
    return std::vector<Fragment>{a, b};
  };
  EXPECT_EQ(premerge_overlapping(pair_with_overlap(0.7)).fragments.size(), 1u);
  EXPECT_EQ(premerge_overlapping(pair_with_overlap(0.2)).fragments.size(), 2u);
}

// Opposite ends of one room with different wall structure: a long plain
// corner and a staircase. Congruent pieces (two bare corners) cannot be told
// apart by wall geometry alone, which is why premerge is off by default.
TEST(Premerge, DisjointDistinctFragmentsStaySeparateAndIdempotent) {
  auto polyline_points = [](const std::vector<Vec2>& line) {
    std::vector<Vec2> loop = line;
    std::vector<Point3> out;
    for (std::size_t i = 0; i + 1 < loop.size(); ++i) {
      const Vec2 a = loop[i], b = loop[i + 1];
      const double len = (b - a).norm();
      for (double s = 0.0; s < len; s += 0.05) {
        const Vec2 q = a + (b - a) * (s / len);
        for (double h = 0.0; h <= 2.6; h += 0.05) out.emplace_back(h, q.x(), q.y());
      }
    }
    return out;
  };
  Fragment a, b;
  a.id = "a";
  b.id = "b";
  a.points = polyline_points({{0, 4}, {0, 0}, {5, 0}});
  b.points = polyline_points({{9, 2}, {9, 2.5}, {8.5, 2.5}, {8.5, 3}, {8, 3}, {8, 3.5}, {7.5, 3.5}, {7.5, 4}});
  EXPECT_LT(best_overlap(a, b).score, 0.6);
  const auto once = premerge_overlapping({a, b});
  ASSERT_EQ(once.fragments.size(), 2u);
  const auto twice = premerge_overlapping(once.fragments);
  ASSERT_EQ(twice.fragments.size(), once.fragments.size());
  for (std::size_t i = 0; i < once.fragments.size(); ++i) {
    EXPECT_EQ(twice.fragments[i].id, once.fragments[i].id);
    EXPECT_EQ(twice.fragments[i].points.size(), once.fragments[i].points.size());
  }
  Fragment c = a;
  c.id = "c";
  const auto merged = premerge_overlapping({a, b, c});
  ASSERT_EQ(merged.fragments.size(), 2u);
  const auto again = premerge_overlapping(merged.fragments);
  ASSERT_EQ(again.fragments.size(), merged.fragments.size());
  for (std::size_t i = 0; i < merged.fragments.size(); ++i) {
    EXPECT_EQ(again.fragments[i].points.size(), merged.fragments[i].points.size());
  }
}
