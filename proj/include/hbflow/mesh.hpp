#pragma once

// Two-subdomain triangulation: Omega = Omega1 u Omega2, with boundary parts
// Gamma1 (label 1, no-slip wall of fluid 1), Gamma2 (label 2, wall of fluid 2)
// and the fluid-fluid interface Gamma0 (label 0). The interface normal points
// out of Omega1 into Omega2.
//
// File format (line oriented, '#' starts a comment):
//
//   hbmesh 1
//   nodes N          followed by N lines   x y
//   triangles M      followed by M lines   i j k tag      (0-based, tag 1|2)
//   boundary B       followed by B lines   i j label      (label 0|1|2)
//   periodic P       optional, P lines     i j            (node i == node j)

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hbflow/errors.hpp"

namespace hbflow {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(const Point2&, const Point2&) = default;
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }

struct Triangle {
  std::array<int, 3> v{};
  int tag = 1;
  friend bool operator==(const Triangle&, const Triangle&) = default;
};

struct BoundaryEdge {
  std::array<int, 2> v{};
  int label = 0;
  friend bool operator==(const BoundaryEdge&, const BoundaryEdge&) = default;
};

struct PeriodicPair {
  int a = 0;
  int b = 0;
  friend bool operator==(const PeriodicPair&, const PeriodicPair&) = default;
};

/// Edge of Gamma0 with its two adjacent triangles.
struct InterfaceEdge {
  std::array<int, 2> v{};
  int tri1 = -1;  // adjacent triangle in Omega1
  int tri2 = -1;  // adjacent triangle in Omega2
  Point2 normal;  // unit, from Omega1 into Omega2
  double length = 0.0;
};

namespace detail {

inline std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

inline double signed_area(Point2 a, Point2 b, Point2 c) { return 0.5 * cross(b - a, c - a); }

// Union-find over node indices, used for periodic identification.
class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  int find(int i) {
    while (parent_[i] != i) {
      parent_[i] = parent_[parent_[i]];
      i = parent_[i];
    }
    return i;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);  // smallest index is the representative
  }

 private:
  std::vector<int> parent_;
};

}  // namespace detail

class TwoPhaseMesh {
 public:
  /// Validates every topological invariant and derives the interface.
  /// Throws InvariantError naming the violated invariant and entity.
  static TwoPhaseMesh create(std::vector<Point2> nodes, std::vector<Triangle> triangles,
                             std::vector<BoundaryEdge> boundary, std::vector<PeriodicPair> periodic = {}) {
    TwoPhaseMesh m;
    m.nodes_ = std::move(nodes);
    m.triangles_ = std::move(triangles);
    m.boundary_ = std::move(boundary);
    m.periodic_ = std::move(periodic);
    m.validate_and_derive();
    return m;
  }

  const std::vector<Point2>& nodes() const { return nodes_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_; }
  const std::vector<PeriodicPair>& periodic_pairs() const { return periodic_; }
  const std::vector<InterfaceEdge>& interface_edges() const { return interface_; }

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_triangles() const { return triangles_.size(); }

  Point2 node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  const Triangle& triangle(int t) const { return triangles_[static_cast<std::size_t>(t)]; }

  double area(int t) const {
    const auto& tr = triangle(t);
    return detail::signed_area(node(tr.v[0]), node(tr.v[1]), node(tr.v[2]));
  }

  double subdomain_area(int tag) const {
    double s = 0.0;
    for (std::size_t t = 0; t < triangles_.size(); ++t)
      if (triangles_[t].tag == tag) s += area(static_cast<int>(t));
    return s;
  }

  /// Total length of boundary edges carrying `label`.
  double boundary_measure(int label) const {
    double s = 0.0;
    for (const auto& e : boundary_)
      if (e.label == label) s += norm(node(e.v[1]) - node(e.v[0]));
    return s;
  }

  /// Periodic representative of a node (the smallest index in its class).
  int periodic_rep(int i) const { return rep_[static_cast<std::size_t>(i)]; }

  bool has_periodic() const { return !periodic_.empty(); }

  /// Copy with node coordinates transformed; topology and labels kept.
  template <typename Map>
  TwoPhaseMesh transformed(Map&& map) const {
    std::vector<Point2> moved;
    moved.reserve(nodes_.size());
    for (const auto& p : nodes_) moved.push_back(map(p));
    return create(std::move(moved), triangles_, boundary_, periodic_);
  }

  friend bool operator==(const TwoPhaseMesh& a, const TwoPhaseMesh& b) {
    return a.nodes_ == b.nodes_ && a.triangles_ == b.triangles_ && a.boundary_ == b.boundary_ &&
           a.periodic_ == b.periodic_;
  }

 private:
  TwoPhaseMesh() = default;

  [[noreturn]] static void fail(const std::string& what) { throw InvariantError(what); }

  void validate_and_derive();

  std::vector<Point2> nodes_;
  std::vector<Triangle> triangles_;
  std::vector<BoundaryEdge> boundary_;
  std::vector<PeriodicPair> periodic_;
  std::vector<InterfaceEdge> interface_;
  std::vector<int> rep_;
};

inline void TwoPhaseMesh::validate_and_derive() {
  const int n = static_cast<int>(nodes_.size());
  auto check_node = [n](int i, const char* what, std::size_t idx) {
    if (i < 0 || i >= n) {
      std::ostringstream msg;
      msg << what << ' ' << idx << ": node index " << i << " out of range [0, " << n << ')';
      fail(msg.str());
    }
  };

  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (!std::isfinite(nodes_[i].x) || !std::isfinite(nodes_[i].y))
      fail("node " + std::to_string(i) + ": non-finite coordinate");

  // Edge ownership: which triangles use each edge.
  struct Owners {
    int t[2] = {-1, -1};
    int count = 0;
  };
  std::unordered_map<std::uint64_t, Owners> owners;
  owners.reserve(triangles_.size() * 2);
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const auto& tr = triangles_[t];
    if (tr.tag != 1 && tr.tag != 2)
      fail("triangle " + std::to_string(t) + ": unknown subdomain tag " + std::to_string(tr.tag));
    for (int k = 0; k < 3; ++k) check_node(tr.v[k], "triangle", t);
    if (tr.v[0] == tr.v[1] || tr.v[1] == tr.v[2] || tr.v[0] == tr.v[2])
      fail("triangle " + std::to_string(t) + ": repeated vertex");
    const double a = area(static_cast<int>(t));
    if (!(a > 0.0)) {
      std::ostringstream msg;
      msg << "triangle " << t << ": signed area " << a << " is not positive";
      fail(msg.str());
    }
    for (int k = 0; k < 3; ++k) {
      auto& o = owners[detail::edge_key(tr.v[k], tr.v[(k + 1) % 3])];
      if (o.count == 2)
        fail("triangle " + std::to_string(t) + ": edge shared by more than two triangles (non-conforming mesh)");
      o.t[o.count++] = static_cast<int>(t);
    }
  }

  detail::DisjointSets sets(nodes_.size());
  for (std::size_t k = 0; k < periodic_.size(); ++k) {
    check_node(periodic_[k].a, "periodic pair", k);
    check_node(periodic_[k].b, "periodic pair", k);
    if (periodic_[k].a == periodic_[k].b) fail("periodic pair " + std::to_string(k) + ": node paired with itself");
    sets.unite(periodic_[k].a, periodic_[k].b);
  }
  rep_.resize(nodes_.size());
  std::vector<char> periodic_node(nodes_.size(), 0);
  for (int i = 0; i < n; ++i) rep_[static_cast<std::size_t>(i)] = sets.find(i);
  for (const auto& pp : periodic_) periodic_node[static_cast<std::size_t>(pp.a)] = periodic_node[static_cast<std::size_t>(pp.b)] = 1;

  // Labeled edges.
  std::unordered_map<std::uint64_t, int> labels;
  for (std::size_t k = 0; k < boundary_.size(); ++k) {
    const auto& e = boundary_[k];
    check_node(e.v[0], "boundary edge", k);
    check_node(e.v[1], "boundary edge", k);
    if (e.label < 0 || e.label > 2)
      fail("boundary edge " + std::to_string(k) + ": unknown boundary label " + std::to_string(e.label));
    const auto key = detail::edge_key(e.v[0], e.v[1]);
    const auto it = owners.find(key);
    if (it == owners.end()) fail("boundary edge " + std::to_string(k) + ": not an edge of any triangle");
    if (!labels.emplace(key, e.label).second) fail("boundary edge " + std::to_string(k) + ": listed twice");
    const Owners& o = it->second;
    if (e.label == 0) {
      if (o.count != 2 || triangles_[o.t[0]].tag == triangles_[o.t[1]].tag)
        fail("boundary edge " + std::to_string(k) + ": labeled 0 but not shared by a tag-1 and a tag-2 triangle");
    } else {
      if (o.count != 1)
        fail("boundary edge " + std::to_string(k) + ": labeled " + std::to_string(e.label) +
             " but is interior to the mesh");
      if (triangles_[o.t[0]].tag != e.label)
        fail("boundary edge " + std::to_string(k) + ": label " + std::to_string(e.label) +
             " on the boundary of a tag-" + std::to_string(triangles_[o.t[0]].tag) + " triangle");
    }
  }

  // Derived interface, single-owner edge closure, hanging nodes.
  interface_.clear();
  std::vector<std::pair<std::uint64_t, Owners>> sorted(owners.begin(), owners.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [key, o] : sorted) {
    const int a = static_cast<int>(key >> 32);
    const int b = static_cast<int>(key & 0xffffffffu);
    if (o.count == 2) {
      const int ta = triangles_[o.t[0]].tag;
      const int tb = triangles_[o.t[1]].tag;
      if (ta == tb) continue;
      if (!labels.contains(key))
        fail("edge (" + std::to_string(a) + ", " + std::to_string(b) +
             ") separates the subdomains but is not labeled 0");
      InterfaceEdge ie;
      ie.tri1 = ta == 1 ? o.t[0] : o.t[1];
      ie.tri2 = ta == 1 ? o.t[1] : o.t[0];
      ie.v = {a, b};
      const Point2 pa = node(a), pb = node(b);
      ie.length = norm(pb - pa);
      Point2 nrm{(pb.y - pa.y) / ie.length, -(pb.x - pa.x) / ie.length};
      const auto& t1 = triangle(ie.tri1);
      const Point2 c1 = (1.0 / 3.0) * (node(t1.v[0]) + node(t1.v[1]) + node(t1.v[2]));
      if (dot(0.5 * (pa + pb) - c1, nrm) < 0.0) nrm = -1.0 * nrm;
      ie.normal = nrm;
      interface_.push_back(ie);
    } else {
      if (!labels.contains(key) && !(periodic_node[a] && periodic_node[b]))
        fail("edge (" + std::to_string(a) + ", " + std::to_string(b) +
             ") lies on the outer boundary but carries no label and no periodic pairing");
      const Point2 pa = node(a), pb = node(b);
      const Point2 t = pb - pa;
      const double len2 = dot(t, t);
      for (int i = 0; i < n; ++i) {
        if (i == a || i == b) continue;
        const Point2 d = node(i) - pa;
        const double s = dot(d, t) / len2;
        if (s <= 1e-12 || s >= 1.0 - 1e-12) continue;
        if (std::abs(cross(t, d)) <= 1e-12 * len2)
          fail("node " + std::to_string(i) + " hangs on edge (" + std::to_string(a) + ", " + std::to_string(b) +
               "): mesh is not conforming");
      }
    }
  }

  if (!(boundary_measure(1) > 0.0)) fail("meas(Gamma1) = 0: no edge labeled 1");
  if (!(boundary_measure(2) > 0.0)) fail("meas(Gamma2) = 0: no edge labeled 2");
}

/// Unit normal of interface edge `k`, pointing from Omega1 into Omega2.
inline Point2 interface_normal(const TwoPhaseMesh& mesh, std::size_t k) {
  if (k >= mesh.interface_edges().size())
    throw std::out_of_range("interface_normal: edge " + std::to_string(k) + " is not on the interface");
  return mesh.interface_edges()[k].normal;
}

/// Same, looked up by the edge's end nodes.
inline Point2 interface_normal(const TwoPhaseMesh& mesh, int a, int b) {
  for (const auto& e : mesh.interface_edges())
    if ((e.v[0] == a && e.v[1] == b) || (e.v[0] == b && e.v[1] == a)) return e.normal;
  throw std::out_of_range("interface_normal: edge (" + std::to_string(a) + ", " + std::to_string(b) +
                          ") is not on the interface");
}

// ---------------------------------------------------------------------------
// Text format

namespace detail {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next non-empty, comment-stripped line split into tokens with their columns.
  bool next(std::vector<std::pair<std::string, int>>& tokens) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      tokens.clear();
      std::size_t i = 0;
      while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i >= line.size()) break;
        const std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        tokens.emplace_back(line.substr(start, i - start), static_cast<int>(start) + 1);
      }
      if (!tokens.empty()) return true;
    }
    return false;
  }

  [[noreturn]] void error(int column, const std::string& what) const {
    std::ostringstream msg;
    msg << "line " << line_no_ << ", column " << column << ": " << what;
    throw InputError(msg.str());
  }

  int line() const { return line_no_; }

 private:
  std::istream& in_;
  int line_no_ = 0;
};

template <typename T>
T parse_number(const LineReader& r, const std::pair<std::string, int>& tok) {
  std::istringstream ss(tok.first);
  T v{};
  ss >> v;
  if (ss.fail() || !ss.eof()) r.error(tok.second, "expected a number, got '" + tok.first + "'");
  return v;
}

}  // namespace detail

inline TwoPhaseMesh parse_mesh(std::istream& in) {
  detail::LineReader r(in);
  std::vector<std::pair<std::string, int>> tok;

  if (!r.next(tok)) throw InputError("empty mesh file");
  if (tok.size() != 2 || tok[0].first != "hbmesh") r.error(tok[0].second, "expected header 'hbmesh 1'");
  if (tok[1].first != "1") r.error(tok[1].second, "unsupported mesh format version '" + tok[1].first + "'");

  std::vector<Point2> nodes;
  std::vector<Triangle> tris;
  std::vector<BoundaryEdge> bnd;
  std::vector<PeriodicPair> per;
  bool seen_nodes = false, seen_tris = false, seen_bnd = false, seen_per = false;

  auto expect_count = [&](std::size_t want) {
    if (tok.size() != want) {
      const int col = tok.size() > want ? tok[want].second : tok.back().second;
      r.error(col, "expected " + std::to_string(want) + " fields, got " + std::to_string(tok.size()));
    }
  };

  while (r.next(tok)) {
    const std::string kw = tok[0].first;
    if (tok.size() != 2) r.error(tok[0].second, "expected a section header '<name> <count>'");
    const long count = detail::parse_number<long>(r, tok[1]);
    if (count < 0) r.error(tok[1].second, "negative count");
    const auto want = static_cast<std::size_t>(count);
    bool* seen = nullptr;
    if (kw == "nodes") seen = &seen_nodes;
    else if (kw == "triangles") seen = &seen_tris;
    else if (kw == "boundary") seen = &seen_bnd;
    else if (kw == "periodic") seen = &seen_per;
    else r.error(tok[0].second, "unknown section '" + kw + "'");
    if (*seen) r.error(tok[0].second, "duplicate section '" + kw + "'");
    *seen = true;

    for (std::size_t k = 0; k < want; ++k) {
      if (!r.next(tok)) throw InputError("unexpected end of file in section '" + kw + "'");
      if (kw == "nodes") {
        expect_count(2);
        nodes.push_back({detail::parse_number<double>(r, tok[0]), detail::parse_number<double>(r, tok[1])});
      } else if (kw == "triangles") {
        expect_count(4);
        Triangle t;
        for (int i = 0; i < 3; ++i) t.v[i] = detail::parse_number<int>(r, tok[i]);
        t.tag = detail::parse_number<int>(r, tok[3]);
        if (t.tag != 1 && t.tag != 2) r.error(tok[3].second, "unknown subdomain tag " + std::to_string(t.tag));
        tris.push_back(t);
      } else if (kw == "boundary") {
        expect_count(3);
        BoundaryEdge e;
        e.v = {detail::parse_number<int>(r, tok[0]), detail::parse_number<int>(r, tok[1])};
        e.label = detail::parse_number<int>(r, tok[2]);
        if (e.label < 0 || e.label > 2) r.error(tok[2].second, "unknown boundary label " + std::to_string(e.label));
        bnd.push_back(e);
      } else {
        expect_count(2);
        per.push_back({detail::parse_number<int>(r, tok[0]), detail::parse_number<int>(r, tok[1])});
      }
    }
  }
  if (!seen_nodes || !seen_tris || !seen_bnd) throw InputError("mesh file needs 'nodes', 'triangles' and 'boundary' sections");
  return TwoPhaseMesh::create(std::move(nodes), std::move(tris), std::move(bnd), std::move(per));
}

inline TwoPhaseMesh parse_mesh(const std::string& text) {
  std::istringstream in(text);
  return parse_mesh(in);
}

/// Canonical text form; parse_mesh(write_mesh(m)) == m.
inline void write_mesh(std::ostream& out, const TwoPhaseMesh& m) {
  out << "hbmesh 1\n";
  out << "nodes " << m.nodes().size() << '\n';
  out << std::setprecision(17);
  for (const auto& p : m.nodes()) out << p.x << ' ' << p.y << '\n';
  out << "triangles " << m.triangles().size() << '\n';
  for (const auto& t : m.triangles()) out << t.v[0] << ' ' << t.v[1] << ' ' << t.v[2] << ' ' << t.tag << '\n';
  out << "boundary " << m.boundary_edges().size() << '\n';
  for (const auto& e : m.boundary_edges()) out << e.v[0] << ' ' << e.v[1] << ' ' << e.label << '\n';
  if (m.has_periodic()) {
    out << "periodic " << m.periodic_pairs().size() << '\n';
    for (const auto& p : m.periodic_pairs()) out << p.a << ' ' << p.b << '\n';
  }
}

inline std::string write_mesh(const TwoPhaseMesh& m) {
  std::ostringstream out;
  write_mesh(out, m);
  return out.str();
}

// ---------------------------------------------------------------------------
// Channel generator

enum class ChannelClosure { periodic, box };

struct ChannelSpec {
  int nx = 16;
  int ny = 16;
  double split = 0.5;    // interface height as a fraction of the unit channel height
  double length = 1.0;   // extent in x
  ChannelClosure closure = ChannelClosure::periodic;
};

/// Row index of the interface after snapping `split` to the nearest mesh line.
inline int snapped_split_row(int ny, double split) {
  return static_cast<int>(std::lround(split * ny));
}

/// Structured triangulation of [0, length] x [0, 1]; Omega1 = {y < split}.
/// Walls y = 0 and y = 1 carry labels 1 and 2. Periodic closure pairs the
/// x = 0 and x = length columns; box closure labels the side walls instead.
inline TwoPhaseMesh generate_channel_mesh(const ChannelSpec& spec) {
  const int nx = spec.nx, ny = spec.ny;
  if (nx < 2 || ny < 2) throw InputError("channel mesh needs nx, ny >= 2");
  if (!(spec.split > 0.0 && spec.split < 1.0)) throw InputError("channel split must lie in (0, 1)");
  if (!(spec.length > 0.0)) throw InputError("channel length must be positive");
  const int js = snapped_split_row(ny, spec.split);
  if (js < 1 || js > ny - 1)
    throw InputError("channel split snaps onto a wall; increase ny (degenerate resolution)");

  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  std::vector<Point2> nodes;
  nodes.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      nodes.push_back({spec.length * i / nx, static_cast<double>(j) / ny});

  std::vector<Triangle> tris;
  tris.reserve(static_cast<std::size_t>(2 * nx * ny));
  for (int j = 0; j < ny; ++j) {
    const int tag = j < js ? 1 : 2;
    for (int i = 0; i < nx; ++i) {
      tris.push_back({{id(i, j), id(i + 1, j), id(i + 1, j + 1)}, tag});
      tris.push_back({{id(i, j), id(i + 1, j + 1), id(i, j + 1)}, tag});
    }
  }

  std::vector<BoundaryEdge> bnd;
  for (int i = 0; i < nx; ++i) bnd.push_back({{id(i, 0), id(i + 1, 0)}, 1});
  for (int i = 0; i < nx; ++i) bnd.push_back({{id(i, ny), id(i + 1, ny)}, 2});
  for (int i = 0; i < nx; ++i) bnd.push_back({{id(i, js), id(i + 1, js)}, 0});

  std::vector<PeriodicPair> per;
  if (spec.closure == ChannelClosure::periodic) {
    for (int j = 0; j <= ny; ++j) per.push_back({id(0, j), id(nx, j)});
  } else {
    for (int j = 0; j < ny; ++j) {
      const int label = j < js ? 1 : 2;
      bnd.push_back({{id(0, j), id(0, j + 1)}, label});
      bnd.push_back({{id(nx, j), id(nx, j + 1)}, label});
    }
  }
  return TwoPhaseMesh::create(std::move(nodes), std::move(tris), std::move(bnd), std::move(per));
}

inline TwoPhaseMesh generate_channel_mesh(int nx, int ny, double split) {
  return generate_channel_mesh(ChannelSpec{nx, ny, split});
}

}  // namespace hbflow
