#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "hbflow/mesh.hpp"

using namespace hbflow;

namespace {

// Unit square split at x = 0.5 into two triangles, tag 1 on the left.
const char* kTwoTriangles = R"(hbmesh 1
# two triangles sharing the diagonal-free vertical edge
nodes 4
0 0
0.5 0
0.5 1
0 1
)";

std::string two_subdomain_square() {
  return R"(hbmesh 1
nodes 6
0 0
0.5 0
1 0
0 1
0.5 1
1 1
triangles 4
0 1 4 1
0 4 3 1
1 2 5 2
1 5 4 2
boundary 7
0 1 1
4 3 1
3 0 1
1 2 2
2 5 2
5 4 2
1 4 0
)";
}

// [0, 2] x [0, 1] with nx x ny squares per half, each cut into two triangles,
// tags split at x = 1; written independently of the channel generator.
std::string split_rectangle(int nx, int ny) {
  std::ostringstream s;
  const int cols = 2 * nx + 1;
  auto id = [&](int i, int j) { return j * cols + i; };
  s << "hbmesh 1\nnodes " << cols * (ny + 1) << '\n';
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i < cols; ++i) s << 2.0 * i / (2 * nx) << ' ' << 1.0 * j / ny << '\n';
  s << "triangles " << 2 * 2 * nx * ny << '\n';
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < 2 * nx; ++i) {
      const int tag = i < nx ? 1 : 2;
      s << id(i, j) << ' ' << id(i + 1, j) << ' ' << id(i + 1, j + 1) << ' ' << tag << '\n';
      s << id(i, j) << ' ' << id(i + 1, j + 1) << ' ' << id(i, j + 1) << ' ' << tag << '\n';
    }
  std::ostringstream b;
  int count = 0;
  for (int i = 0; i < 2 * nx; ++i) {
    const int label = i < nx ? 1 : 2;
    b << id(i, 0) << ' ' << id(i + 1, 0) << ' ' << label << '\n';
    b << id(i, ny) << ' ' << id(i + 1, ny) << ' ' << label << '\n';
    count += 2;
  }
  for (int j = 0; j < ny; ++j) {
    b << id(0, j) << ' ' << id(0, j + 1) << " 1\n";
    b << id(2 * nx, j) << ' ' << id(2 * nx, j + 1) << " 2\n";
    b << id(nx, j) << ' ' << id(nx, j + 1) << " 0\n";
    count += 3;
  }
  s << "boundary " << count << '\n' << b.str();
  return s.str();
}

std::string parse_error(const std::string& text) {
  try {
    parse_mesh(text);
  } catch (const InputError& e) {
    return e.what();
  } catch (const InvariantError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(ParseMesh, TwoSubdomainSquare) {
  const TwoPhaseMesh m = parse_mesh(two_subdomain_square());
  ASSERT_EQ(m.interface_edges().size(), 1u);
  const Point2 n = interface_normal(m, 0);
  EXPECT_NEAR(n.x, 1.0, 1e-15);
  EXPECT_NEAR(n.y, 0.0, 1e-15);
  EXPECT_NEAR(m.subdomain_area(1), 0.5, 1e-15);
  EXPECT_NEAR(m.subdomain_area(2), 0.5, 1e-15);
}

TEST(ParseMesh, SplitRectangleInterface) {
  for (const int ny : {1, 3, 8}) {
    const TwoPhaseMesh m = parse_mesh(split_rectangle(2, ny));
    EXPECT_EQ(m.interface_edges().size(), static_cast<std::size_t>(ny));
    double length = 0.0;
    for (const auto& e : m.interface_edges()) {
      length += e.length;
      EXPECT_NEAR(e.normal.x, 1.0, 1e-14);
    }
    EXPECT_NEAR(length, 1.0, 1e-14);
  }
}

TEST(ParseMesh, UnknownTag) {
  std::string text = two_subdomain_square();
  text.replace(text.find("1 2 5 2"), 7, "1 2 5 3");
  EXPECT_NE(parse_error(text).find("unknown subdomain tag"), std::string::npos) << parse_error(text);
}

TEST(ParseMesh, SyntaxErrorsCarryLineAndColumn) {
  std::string text = two_subdomain_square();
  text.replace(text.find("0.5 0\n"), 5, "0.5 x");
  const std::string err = parse_error(text);
  EXPECT_NE(err.find("line 4"), std::string::npos) << err;
  EXPECT_NE(err.find("expected a number"), std::string::npos) << err;
  EXPECT_NE(parse_error("mesh 2\n").find("hbmesh"), std::string::npos);
  EXPECT_NE(parse_error(kTwoTriangles).find("sections"), std::string::npos) << parse_error(kTwoTriangles);
  EXPECT_EQ(parse_error(""), "empty mesh file");
}

TEST(ParseMesh, InvariantViolations) {
  // Clockwise triangle.
  std::string text = two_subdomain_square();
  text.replace(text.find("0 1 4 1"), 7, "0 4 1 1");
  EXPECT_FALSE(parse_error(text).empty());
  // Interface edge missing its label.
  text = two_subdomain_square();
  text.replace(text.find("1 4 0\n"), 5, "1 4 1");
  EXPECT_FALSE(parse_error(text).empty());
  // Wall of fluid 2 labeled as wall of fluid 1.
  text = two_subdomain_square();
  text.replace(text.find("2 5 2"), 5, "2 5 1");
  EXPECT_FALSE(parse_error(text).empty());
  // No wall for fluid 2.
  text = two_subdomain_square();
  for (const char* e : {"1 2 2", "2 5 2", "5 4 2"}) text.replace(text.find(e), 5, "");
  EXPECT_FALSE(parse_error(text).empty());
}

TEST(WriteMesh, RoundTripIsCanonical) {
  for (const TwoPhaseMesh& m : {parse_mesh(two_subdomain_square()), parse_mesh(split_rectangle(3, 2)),
                                generate_channel_mesh(5, 4, 0.5)}) {
    const std::string text = write_mesh(m);
    const TwoPhaseMesh again = parse_mesh(text);
    EXPECT_TRUE(again == m);
    EXPECT_EQ(write_mesh(again), text);
  }
}

TEST(ChannelMesh, Counts) {
  const TwoPhaseMesh m = generate_channel_mesh(2, 2, 0.5);
  EXPECT_EQ(m.num_triangles(), 8u);
  int tag1 = 0;
  for (const auto& t : m.triangles()) tag1 += t.tag == 1;
  EXPECT_EQ(tag1, 4);

  const TwoPhaseMesh m4 = generate_channel_mesh(ChannelSpec{4, 4, 0.5, 3.0});
  EXPECT_EQ(m4.interface_edges().size(), 4u);
  double length = 0.0;
  for (const auto& e : m4.interface_edges()) {
    length += e.length;
    EXPECT_NEAR(e.normal.x, 0.0, 1e-15);
    EXPECT_NEAR(e.normal.y, 1.0, 1e-15);
  }
  EXPECT_NEAR(length, 3.0, 1e-14);
}

TEST(ChannelMesh, AreasAndOrientation) {
  for (const int n : {4, 5, 16})
    for (const double split : {0.25, 0.5, 0.7})
      for (const auto closure : {ChannelClosure::periodic, ChannelClosure::box}) {
        const TwoPhaseMesh m = generate_channel_mesh(ChannelSpec{n + 1, n, split, 2.0, closure});
        const double h1 = static_cast<double>(snapped_split_row(n, split)) / n;
        for (std::size_t t = 0; t < m.num_triangles(); ++t) EXPECT_GT(m.area(static_cast<int>(t)), 0.0);
        EXPECT_NEAR(m.subdomain_area(1), 2.0 * h1, 1e-12 * 2.0);
        EXPECT_NEAR(m.subdomain_area(2), 2.0 * (1 - h1), 1e-12 * 2.0);
        EXPECT_EQ(m.has_periodic(), closure == ChannelClosure::periodic);
      }
}

TEST(ChannelMesh, InterfaceEdgesSeparateTags) {
  const TwoPhaseMesh m = generate_channel_mesh(6, 6, 0.5);
  for (const auto& e : m.interface_edges()) {
    EXPECT_EQ(m.triangle(e.tri1).tag, 1);
    EXPECT_EQ(m.triangle(e.tri2).tag, 2);
  }
}

TEST(ChannelMesh, DegenerateResolution) {
  EXPECT_THROW(generate_channel_mesh(1, 4, 0.5), InputError);
  EXPECT_THROW(generate_channel_mesh(4, 2, 0.1), InputError);
  EXPECT_THROW(generate_channel_mesh(4, 4, 1.5), InputError);
}

TEST(InterfaceNormal, FollowsRotation) {
  const TwoPhaseMesh m = generate_channel_mesh(ChannelSpec{4, 4, 0.5, 1.0, ChannelClosure::box});
  for (const double theta : {0.3, 1.2, 2.5, -0.7}) {
    const double c = std::cos(theta), s = std::sin(theta);
    const TwoPhaseMesh r = m.transformed([&](Point2 p) { return Point2{c * p.x - s * p.y, s * p.x + c * p.y}; });
    for (std::size_t k = 0; k < m.interface_edges().size(); ++k) {
      const Point2 n = m.interface_edges()[k].normal;
      const Point2 nr = interface_normal(r, k);
      EXPECT_NEAR(nr.x, c * n.x - s * n.y, 1e-14);
      EXPECT_NEAR(nr.y, s * n.x + c * n.y, 1e-14);
      EXPECT_NEAR(norm(nr), 1.0, 1e-14);
    }
  }
}

TEST(InterfaceNormal, RejectsNonInterfaceEdge) {
  const TwoPhaseMesh m = generate_channel_mesh(4, 4, 0.5);
  EXPECT_THROW(interface_normal(m, m.interface_edges().size()), std::out_of_range);
  EXPECT_THROW(interface_normal(m, 0, 1), std::out_of_range);
}
