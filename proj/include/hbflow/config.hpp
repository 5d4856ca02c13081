#pragma once

// Run configuration: line-oriented `key = value` text with sections
//
//   [mesh]    file | generator = channel, nx, ny, split, length, closure
//   [fluid1]  mu, g, p, f = "fx fy"
//   [fluid2]  same
//   [solver]  eps_schedule, tol_rel, max_picard, damping, linearization,
//             tol_fixed_point, max_outer, relaxation, seed, samples,
//             continuity_check
//   [output]  dir
//
// '#' starts a comment. Unknown sections or keys are errors.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hbflow/assembly.hpp"
#include "hbflow/channel_oracle.hpp"
#include "hbflow/errors.hpp"
#include "hbflow/inner_solver.hpp"
#include "hbflow/mesh.hpp"
#include "hbflow/outer_fixed_point.hpp"

namespace hbflow {

struct RunConfig {
  std::optional<std::string> mesh_file;  // resolved path; otherwise the channel generator
  ChannelSpec channel;
  Materials materials{};
  BodyForces forces{};
  InnerConfig inner;
  OuterConfig outer;
  int samples = 201;  // oracle profile samples
  std::string output_dir = "out";

  /// Loads the mesh named by the config.
  TwoPhaseMesh load_mesh() const {
    if (!mesh_file) return generate_channel_mesh(channel);
    std::ifstream in(*mesh_file);
    if (!in) throw InputError("cannot open mesh file " + *mesh_file);
    return parse_mesh(in);
  }

  /// Two-layer channel problem for the oracle; requires the generator and a
  /// uniform x-directed force.
  ChannelProblem channel_problem() const {
    if (mesh_file) throw InputError("the channel oracle needs the channel generator, not a mesh file");
    if (channel.closure != ChannelClosure::periodic) throw InputError("the channel oracle needs a periodic channel");
    if (forces[0].y != 0.0 || forces[1].y != 0.0 || forces[0].x != forces[1].x)
      throw InputError("the channel oracle needs the same x-directed force in both fluids");
    if (forces[0].x < 0.0) throw InputError("the channel oracle needs a nonnegative force");
    ChannelProblem p;
    p.h1 = static_cast<double>(snapped_split_row(channel.ny, channel.split)) / channel.ny;
    p.h2 = 1.0 - p.h1;
    p.fluid1 = materials[0];
    p.fluid2 = materials[1];
    p.f = forces[0].x;
    return p;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

}  // namespace detail

inline RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {}) {
  RunConfig cfg;
  std::string section;
  std::set<std::string> seen;
  std::string line;
  int ln = 0;
  bool generator_set = false;
  std::optional<std::string> file;

  auto err = [&](const std::string& what) -> InputError {
    return InputError("config line " + std::to_string(ln) + ": " + what);
  };
  auto real = [&](const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      const double d = std::stod(v, &pos);
      if (pos != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw err("'" + key + "' expects a real number, got '" + v + "'");
    }
  };
  auto integer = [&](const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      const long long i = std::stoll(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return i;
    } catch (const std::exception&) {
      throw err("'" + key + "' expects an integer, got '" + v + "'");
    }
  };
  auto reals = [&](const std::string& key, const std::string& v) {
    std::string s = v;
    for (char& c : s)
      if (c == ',' || c == '[' || c == ']') c = ' ';
    std::istringstream ss(s);
    std::vector<double> out;
    std::string tok;
    while (ss >> tok) out.push_back(real(key, tok));
    return out;
  };

  while (std::getline(in, line)) {
    ++ln;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw err("malformed section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      if (section != "mesh" && section != "fluid1" && section != "fluid2" && section != "solver" && section != "output")
        throw err("unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw err("expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::unquote(detail::trim(line.substr(eq + 1)));
    if (section.empty()) throw err("key '" + key + "' outside any section");
    if (!seen.insert(section + "." + key).second) throw err("duplicate key '" + key + "' in [" + section + "]");
    auto unknown = [&] { return err("unknown key '" + key + "' in [" + section + "]"); };

    if (section == "mesh") {
      if (key == "file") file = value;
      else if (key == "generator") {
        if (value != "channel") throw err("unknown mesh generator '" + value + "' (only 'channel')");
        generator_set = true;
      } else if (key == "nx") cfg.channel.nx = static_cast<int>(integer(key, value));
      else if (key == "ny") cfg.channel.ny = static_cast<int>(integer(key, value));
      else if (key == "split") cfg.channel.split = real(key, value);
      else if (key == "length") cfg.channel.length = real(key, value);
      else if (key == "closure") {
        if (value == "periodic") cfg.channel.closure = ChannelClosure::periodic;
        else if (value == "box") cfg.channel.closure = ChannelClosure::box;
        else throw err("closure must be 'periodic' or 'box'");
      } else throw unknown();
    } else if (section == "fluid1" || section == "fluid2") {
      const std::size_t i = section == "fluid1" ? 0 : 1;
      FluidParams& fp = cfg.materials[i];
      if (key == "mu") fp.mu = real(key, value);
      else if (key == "g") fp.g = real(key, value);
      else if (key == "p") fp.p = real(key, value);
      else if (key == "f") {
        const auto v = reals(key, value);
        if (v.size() != 2) throw err("'f' expects two components \"fx fy\"");
        cfg.forces[i] = {v[0], v[1]};
      } else throw unknown();
    } else if (section == "solver") {
      if (key == "eps_schedule") cfg.inner.eps_schedule = reals(key, value);
      else if (key == "tol_rel") cfg.inner.tol_rel = real(key, value);
      else if (key == "max_picard") cfg.inner.max_picard = static_cast<int>(integer(key, value));
      else if (key == "damping") cfg.inner.damping = real(key, value);
      else if (key == "linearization") {
        if (value == "picard") cfg.inner.linearization = Linearization::picard;
        else if (value == "newton") cfg.inner.linearization = Linearization::newton;
        else throw err("linearization must be 'picard' or 'newton'");
      } else if (key == "tol_fixed_point") cfg.outer.tol_fixed_point = real(key, value);
      else if (key == "max_outer") cfg.outer.max_outer = static_cast<int>(integer(key, value));
      else if (key == "relaxation") cfg.outer.relaxation = real(key, value);
      else if (key == "seed") cfg.outer.seed = static_cast<unsigned long long>(integer(key, value));
      else if (key == "samples") cfg.samples = static_cast<int>(integer(key, value));
      else if (key == "continuity_check") {
        if (value == "true") cfg.outer.continuity_check = true;
        else if (value == "false") cfg.outer.continuity_check = false;
        else throw err("continuity_check must be 'true' or 'false'");
      }
      else throw unknown();
    } else if (section == "output") {
      if (key == "dir") cfg.output_dir = value;
      else throw unknown();
    }
  }

  if (file && generator_set) throw InputError("config: [mesh] sets both 'file' and 'generator'");
  if (file) {
    std::filesystem::path p(*file);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    cfg.mesh_file = p.string();
  } else {
    if (cfg.channel.nx < 2 || cfg.channel.ny < 2) throw InputError("config: channel needs nx, ny >= 2");
    if (!(cfg.channel.split > 0.0 && cfg.channel.split < 1.0)) throw InputError("config: split must lie in (0, 1)");
    if (!(cfg.channel.length > 0.0)) throw InputError("config: length must be positive");
  }
  for (std::size_t i = 0; i < 2; ++i) {
    try {
      validate(cfg.materials[i]);
    } catch (const InputError& e) {
      throw InputError("config [fluid" + std::to_string(i + 1) + "]: " + e.what());
    }
  }
  cfg.inner.validate();
  cfg.outer.validate();
  if (cfg.samples < 100) throw InputError("config: samples must be at least 100");
  for (auto& fp : cfg.materials) fp.eps = cfg.inner.eps_final();
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path);
  return parse_config(in, std::filesystem::path(path).parent_path());
}

}  // namespace hbflow
