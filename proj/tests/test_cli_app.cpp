#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "hbflow/app.hpp"

using namespace hbflow;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hbflow_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::string parse_error(const std::string& text) {
  try {
    parse(text);
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

const char* kChannel = R"([mesh]
generator = channel
nx = 6
ny = 6
[fluid1]
mu = 1
g = 0.05
p = 1.7
f = "1 0"
[fluid2]
mu = 3
g = 0.15
p = 2
f = "1 0"
)";

int run_hb(const std::string& args) {
  const int status = std::system((std::string(HB_EXE) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, ParsesAllSections) {
  const RunConfig c = parse(std::string(kChannel) + R"(
[solver]
eps_schedule = 1e-2, 1e-3   # shorter schedule
tol_rel = 1e-9
max_picard = 50
damping = 0.5
linearization = picard
tol_fixed_point = 1e-6
max_outer = 7
relaxation = 0.5
seed = 42
samples = 150
continuity_check = true
[output]
dir = somewhere
)");
  EXPECT_EQ(c.channel.nx, 6);
  EXPECT_EQ(c.materials[0].p, 1.7);
  EXPECT_EQ(c.materials[1].mu, 3.0);
  EXPECT_EQ(c.materials[0].eps, 1e-3);
  EXPECT_EQ(c.forces[1].x, 1.0);
  EXPECT_EQ(c.inner.eps_schedule, (std::vector<double>{1e-2, 1e-3}));
  EXPECT_EQ(c.inner.linearization, Linearization::picard);
  EXPECT_EQ(c.inner.damping, 0.5);
  EXPECT_EQ(c.outer.max_outer, 7);
  EXPECT_EQ(c.outer.seed, 42u);
  EXPECT_TRUE(c.outer.continuity_check);
  EXPECT_EQ(c.samples, 150);
  EXPECT_EQ(c.output_dir, "somewhere");
  const ChannelProblem p = c.channel_problem();
  EXPECT_EQ(p.h1, 0.5);
  EXPECT_EQ(p.f, 1.0);
}

TEST(Config, Errors) {
  EXPECT_NE(parse_error(std::string(kChannel) + "[fluid1]\nbogus = 1\n").find("unknown key 'bogus'"),
            std::string::npos);
  EXPECT_NE(parse_error("[weird]\n").find("unknown section"), std::string::npos);
  EXPECT_NE(parse_error(std::string(kChannel) + "[fluid1]\nmu = 2\n").find("duplicate"), std::string::npos);
  EXPECT_NE(parse_error("[mesh]\nnx = abc\n").find("line 2"), std::string::npos);
  std::string bad = kChannel;
  bad.replace(bad.find("p = 1.7"), 7, "p = 1.2");
  const std::string err = parse_error(bad);
  EXPECT_NE(err.find("[fluid1]"), std::string::npos) << err;
  EXPECT_NE(err.find("admissible window [1.5, 2]"), std::string::npos) << err;
  EXPECT_FALSE(parse_error(std::string(kChannel) + "[solver]\neps_schedule = 1e-4, 1e-2\n").empty());
  EXPECT_FALSE(parse_error("[mesh]\nfile = a.msh\ngenerator = channel\n").empty());
}

TEST(Config, OracleNeedsPlainChannel) {
  RunConfig c = parse(kChannel);
  c.forces[1].x = 2.0;
  EXPECT_THROW(c.channel_problem(), InputError);
  c = parse(kChannel);
  c.channel.closure = ChannelClosure::box;
  EXPECT_THROW(c.channel_problem(), InputError);
}

TEST(Config, SampleConfigsParse) {
  for (const char* name : {"newtonian_two_layer", "bingham_symmetric", "heterogeneous", "below_threshold", "cavity"})
    EXPECT_NO_THROW(load_config(std::string(HBFLOW_CONFIG_DIR) + "/" + name + ".cfg")) << name;
  EXPECT_THROW(load_config(std::string(HBFLOW_CONFIG_DIR) + "/invalid_exponent.cfg"), InputError);
}

TEST(Vtk, RoundTrip) {
  auto mesh = std::make_shared<const TwoPhaseMesh>(generate_channel_mesh(4, 4, 0.5));
  const MixedSpace space(mesh);
  MixedField f = space.zero_field();
  for (Eigen::Index i = 0; i < f.velocity.size(); ++i) f.velocity[i] = 0.1 * i + 1.0 / 3.0;
  for (Eigen::Index i = 0; i < f.pressure.size(); ++i) f.pressure[i] = -0.7 * i;
  const VtkField v = sample_vertices(space, f);
  // Interface vertices appear once per subdomain, periodic copies stay apart.
  EXPECT_EQ(v.points.size(), mesh->num_nodes() + 5);
  std::stringstream ss;
  write_vtk(ss, v);
  const VtkField back = read_vtk(ss);
  ASSERT_EQ(back.points.size(), v.points.size());
  for (std::size_t i = 0; i < v.points.size(); ++i) {
    EXPECT_EQ(back.points[i].x, v.points[i].x);
    EXPECT_EQ(back.velocity[i].x, v.velocity[i].x);
    EXPECT_EQ(back.velocity[i].y, v.velocity[i].y);
    EXPECT_EQ(back.pressure[i], v.pressure[i]);
  }
  EXPECT_EQ(back.cells, v.cells);
  EXPECT_EQ(back.subdomain, v.subdomain);
}

TEST(Csv, RoundTripAndErrors) {
  CsvTable t;
  t.header = {"a", "b", "c"};
  t.rows = {{"1", "2.5", ""}, {"x", "", "3"}};
  std::stringstream ss;
  write_csv(ss, t);
  const CsvTable back = read_csv(ss);
  EXPECT_EQ(back.header, t.header);
  EXPECT_EQ(back.rows, t.rows);
  std::stringstream bad("a,b\n1,2,3\n");
  EXPECT_THROW(read_csv(bad), InputError);
}

TEST(Summary, RoundTrip) {
  const Summary s{{"alpha", "1"}, {"beta value", "x = y"}};
  std::stringstream ss;
  write_summary(ss, s);
  const auto back = read_summary(ss);
  EXPECT_EQ(back.at("alpha"), "1");
  EXPECT_EQ(back.at("beta value"), "x = y");
}

TEST(RunSolve, ZeroForceWritesZeroField) {
  RunConfig c = parse(kChannel);
  c.forces = {Point2{}, Point2{}};
  c.output_dir = scratch("zero").string();
  std::ostringstream log;
  EXPECT_EQ(run_solve(c, log), exit_ok);
  std::ifstream in(fs::path(c.output_dir) / "solution.vtk");
  const VtkField v = read_vtk(in);
  for (const auto& u : v.velocity) EXPECT_EQ(norm(u), 0.0);
  std::ifstream cs(fs::path(c.output_dir) / "convergence.csv");
  EXPECT_EQ(read_csv(cs).rows.size(), 1u);
}

TEST(RunSolve, NewtonianSummaryAndDeterminism) {
  RunConfig c = load_config(std::string(HBFLOW_CONFIG_DIR) + "/newtonian_two_layer.cfg");
  c.channel.nx = c.channel.ny = 8;
  std::ostringstream log;
  c.output_dir = scratch("newt_a").string();
  ASSERT_EQ(run_solve(c, log), exit_ok);
  std::ifstream in(fs::path(c.output_dir) / "summary.txt");
  const auto s = read_summary(in);
  EXPECT_EQ(s.at("converged"), "true");
  EXPECT_EQ(s.at("ball_ok"), "true");
  EXPECT_EQ(s.at("battery_passed"), "true");
  EXPECT_LT(std::stod(s.at("oracle_relative_l2_error")), 0.01);
  const std::string first_dir = c.output_dir;
  c.output_dir = scratch("newt_b").string();
  ASSERT_EQ(run_solve(c, log), exit_ok);
  for (const char* f : {"solution.vtk", "convergence.csv", "summary.txt"})
    EXPECT_EQ(slurp(fs::path(first_dir) / f), slurp(fs::path(c.output_dir) / f)) << f;
}

TEST(RunSolve, NonConvergenceExitCode) {
  RunConfig c = parse(kChannel);
  c.inner.max_picard = 1;
  c.output_dir = scratch("nonconv").string();
  std::ostringstream log;
  EXPECT_EQ(run_solve(c, log), exit_not_converged);
  EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / "summary.txt"));
}

TEST(RunOracle, WritesProfile) {
  RunConfig c = parse(kChannel);
  c.output_dir = scratch("oracle").string();
  std::ostringstream log;
  EXPECT_EQ(run_oracle(c, log), exit_ok);
  std::ifstream in(fs::path(c.output_dir) / "profile.csv");
  const CsvTable t = read_csv(in);
  EXPECT_EQ(t.rows.size(), 201u);
  EXPECT_EQ(t.real(0, "u"), 0.0);
}

TEST(RunRefine, ZeroForceHasZeroErrors) {
  RunConfig c = parse(kChannel);
  c.channel.nx = c.channel.ny = 2;
  c.forces = {Point2{}, Point2{}};
  const auto study = refine_study(c, 3);
  ASSERT_EQ(study.size(), 3u);
  for (const auto& r : study) EXPECT_EQ(r.error, 0.0);
  EXPECT_EQ(study[2].h, 0.125);
  EXPECT_EQ(first_error_increase(study), -1);
  const CsvTable t = refine_table(study);
  EXPECT_EQ(t.header, (std::vector<std::string>{"level", "h", "L2_error_vs_oracle", "V_norm", "outer_iters"}));
}

TEST(RunRefine, RejectsSingleLevel) { EXPECT_THROW(refine_study(parse(kChannel), 1), InputError); }

TEST(RunVerify, SeedsAndSelfTest) {
  VerifyOptions opt;
  opt.tensor_pairs = 2000;
  opt.field_pairs = 10;
  std::ostringstream out;
  EXPECT_EQ(run_verify(opt, out), exit_ok) << out.str();
  opt.seed = 77;
  EXPECT_EQ(run_verify(opt, out), exit_ok) << out.str();
  opt.corrupt_certificate = true;
  std::ostringstream bad;
  EXPECT_EQ(run_verify(opt, bad), exit_property_failure);
  EXPECT_NE(bad.str().find("FAIL  monotonicity certificate"), std::string::npos) << bad.str();
}

TEST(Executable, ExitCodes) {
  EXPECT_EQ(run_hb("verify --seed 5"), 0);
  EXPECT_EQ(run_hb("verify --self-test"), 3);
  EXPECT_EQ(run_hb(std::string("solve ") + HBFLOW_CONFIG_DIR + "/invalid_exponent.cfg"), 1);
  EXPECT_EQ(run_hb("solve /nonexistent/config.cfg"), 1);
  EXPECT_EQ(run_hb("frobnicate"), 1);
  EXPECT_EQ(run_hb(std::string("refine ") + HBFLOW_CONFIG_DIR + "/newtonian_two_layer.cfg --levels 1"), 1);
}
