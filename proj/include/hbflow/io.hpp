#pragma once

// File output: legacy ASCII VTK for fields, CSV tables, key=value summaries,
// and readers for each so the formats can be round-tripped.

#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "hbflow/errors.hpp"
#include "hbflow/space.hpp"

namespace hbflow {

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// VTK

/// Field sampled at triangle vertices. Interface vertices appear once per
/// subdomain (the pressure is two-valued there) and periodic copies are kept
/// apart so every cell is drawn where it lies.
struct VtkField {
  std::vector<Point2> points;
  std::vector<std::array<int, 3>> cells;
  std::vector<Point2> velocity;
  std::vector<double> pressure;
  std::vector<int> subdomain;
};

inline VtkField sample_vertices(const MixedSpace& space, const MixedField& f) {
  const TwoPhaseMesh& m = space.mesh();
  VtkField out;
  std::map<std::pair<int, int>, int> index;  // (mesh vertex, tag) -> point
  for (int e = 0; e < space.num_elements(); ++e) {
    const auto& t = m.triangle(e);
    std::array<int, 3> c{};
    for (int a = 0; a < 3; ++a) {
      const auto key = std::make_pair(t.v[a], t.tag);
      auto it = index.find(key);
      if (it == index.end()) {
        it = index.emplace(key, static_cast<int>(out.points.size())).first;
        out.points.push_back(m.node(t.v[a]));
        const int vn = space.velocity_node(e, a);
        out.velocity.push_back({f.velocity[2 * vn], f.velocity[2 * vn + 1]});
        out.pressure.push_back(f.pressure[space.pressure_dof(e, a)]);
      }
      c[static_cast<std::size_t>(a)] = it->second;
    }
    out.cells.push_back(c);
    out.subdomain.push_back(t.tag);
  }
  return out;
}

inline void write_vtk(std::ostream& os, const VtkField& v, const std::string& title = "hbflow solution") {
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << v.points.size() << " double\n";
  for (const auto& p : v.points) os << format_real(p.x) << ' ' << format_real(p.y) << " 0\n";
  os << "CELLS " << v.cells.size() << ' ' << 4 * v.cells.size() << '\n';
  for (const auto& c : v.cells) os << "3 " << c[0] << ' ' << c[1] << ' ' << c[2] << '\n';
  os << "CELL_TYPES " << v.cells.size() << '\n';
  for (std::size_t i = 0; i < v.cells.size(); ++i) os << "5\n";
  os << "CELL_DATA " << v.cells.size() << "\nSCALARS subdomain int 1\nLOOKUP_TABLE default\n";
  for (int s : v.subdomain) os << s << '\n';
  os << "POINT_DATA " << v.points.size() << "\nVECTORS velocity double\n";
  for (const auto& u : v.velocity) os << format_real(u.x) << ' ' << format_real(u.y) << " 0\n";
  os << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
  for (double p : v.pressure) os << format_real(p) << '\n';
}

/// Reads the subset of legacy VTK written by write_vtk.
inline VtkField read_vtk(std::istream& is) {
  VtkField v;
  std::string line;
  auto fail = [](const std::string& what) { throw InputError("vtk: " + what); };
  if (!std::getline(is, line) || line.rfind("# vtk DataFile", 0) != 0) fail("missing header");
  std::getline(is, line);  // title
  if (!std::getline(is, line) || line != "ASCII") fail("only ASCII files are supported");
  if (!std::getline(is, line) || line != "DATASET UNSTRUCTURED_GRID") fail("expected DATASET UNSTRUCTURED_GRID");
  std::string word;
  std::size_t n = 0;
  enum class Block { none, cell, point } block = Block::none;
  while (is >> word) {
    if (word == "POINTS") {
      std::string type;
      is >> n >> type;
      v.points.resize(n);
      for (auto& p : v.points) {
        double z;
        if (!(is >> p.x >> p.y >> z)) fail("truncated POINTS");
      }
    } else if (word == "CELLS") {
      std::size_t total;
      is >> n >> total;
      v.cells.resize(n);
      for (auto& c : v.cells) {
        int k;
        if (!(is >> k >> c[0] >> c[1] >> c[2]) || k != 3) fail("only triangles are supported");
      }
    } else if (word == "CELL_TYPES") {
      is >> n;
      for (std::size_t i = 0; i < n; ++i) {
        int t;
        if (!(is >> t) || t != 5) fail("unexpected cell type");
      }
    } else if (word == "CELL_DATA") {
      is >> n;
      block = Block::cell;
    } else if (word == "POINT_DATA") {
      is >> n;
      block = Block::point;
    } else if (word == "SCALARS") {
      std::string name, type, lt, table;
      int comps;
      is >> name >> type >> comps >> lt >> table;
      if (block == Block::cell && name == "subdomain") {
        v.subdomain.resize(n);
        for (auto& s : v.subdomain)
          if (!(is >> s)) fail("truncated subdomain data");
      } else if (block == Block::point && name == "pressure") {
        v.pressure.resize(n);
        for (auto& p : v.pressure)
          if (!(is >> p)) fail("truncated pressure data");
      } else {
        fail("unexpected scalar array " + name);
      }
    } else if (word == "VECTORS") {
      std::string name, type;
      is >> name >> type;
      if (block != Block::point || name != "velocity") fail("unexpected vector array " + name);
      v.velocity.resize(n);
      for (auto& u : v.velocity) {
        double z;
        if (!(is >> u.x >> u.y >> z)) fail("truncated velocity data");
      }
    } else {
      fail("unexpected keyword " + word);
    }
  }
  return v;
}

// ---------------------------------------------------------------------------
// CSV and key=value

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw InputError("csv: no column " + name);
  }
  double real(std::size_t row, const std::string& name) const { return std::stod(rows.at(row).at(column(name))); }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline CsvTable read_csv(std::istream& is) {
  CsvTable t;
  std::string line;
  if (!std::getline(is, line)) throw InputError("csv: empty file");
  t.header = split_csv_line(line);
  std::size_t ln = 1;
  while (std::getline(is, line)) {
    ++ln;
    if (line.empty()) continue;
    auto row = split_csv_line(line);
    if (row.size() != t.header.size())
      throw InputError("csv: line " + std::to_string(ln) + " has " + std::to_string(row.size()) + " fields, expected " +
                       std::to_string(t.header.size()));
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline void write_csv(std::ostream& os, const CsvTable& t) {
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
}

/// Ordered key = value record.
using Summary = std::vector<std::pair<std::string, std::string>>;

inline void write_summary(std::ostream& os, const Summary& s) {
  for (const auto& [k, v] : s) os << k << " = " << v << '\n';
}

inline std::map<std::string, std::string> read_summary(std::istream& is) {
  std::map<std::string, std::string> out;
  std::string line;
  int ln = 0;
  while (std::getline(is, line)) {
    ++ln;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw InputError("summary: line " + std::to_string(ln) + " is not 'key = value'");
    out[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return out;
}

template <typename Writer>
void write_file(const std::string& path, Writer&& w) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot open " + path + " for writing");
  w(os);
  if (!os) throw InputError("failed writing " + path);
}

}  // namespace hbflow
