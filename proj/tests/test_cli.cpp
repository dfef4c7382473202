#include "sgdchain/cli.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace sgdchain;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "sgdchain");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "sgdchain_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string random_word(RngStream& s) {
  static const char alphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789_-/.";
  std::string w;
  const auto len = 1 + s.below(12);
  for (std::size_t i = 0; i < len; ++i) w += alphabet[s.below(sizeof(alphabet) - 1)];
  return w;
}

double random_double(RngStream& s) {
  switch (s.below(3)) {
    case 0: return s.normal() * 1e3;
    case 1: return std::ldexp(s.uniform(), -static_cast<int>(s.below(40)));
    default: return static_cast<double>(s.below(100));
  }
}

Point random_point(RngStream& s) {
  Vector v(static_cast<Eigen::Index>(1 + s.below(5)));
  for (auto& x : v) x = random_double(s);
  return Point(v);
}

RunSpec random_spec(RngStream& s) {
  RunSpec r;
  r.objective.name = random_word(s);
  r.objective.dim = 1 + s.below(50);
  r.objective.lambda = random_double(s);
  r.objective.nu = random_double(s);
  r.objective.R = random_double(s);
  if (s.below(2)) r.objective.center = random_point(s);
  if (s.below(2)) r.objective.data_path = random_word(s);
  r.objective.data_m = s.below(100000);
  r.objective.data_df = random_double(s);
  r.objective.data_seed = s();
  r.noise.kind = random_word(s);
  r.noise.sigma = random_double(s);
  r.noise.df = random_double(s);
  r.noise.scale = random_double(s);
  r.noise.with_replacement = s.below(2);
  r.sgd.eta = random_double(s);
  r.sgd.n_iters = s.below(1u << 30);
  r.sgd.burn_in = s.below(1000);
  if (s.below(2)) r.sgd.theta0 = random_point(s);
  r.sgd.seed = (static_cast<std::uint64_t>(s()) << 32) | s();
  r.sgd.batch_size = 1 + s.below(64);
  r.test_functions.clear();
  for (std::size_t i = s.below(4); i > 0; --i) r.test_functions.push_back(random_word(s));
  r.experiment.N = s.below(5000);
  for (std::size_t i = s.below(5); i > 0; --i) r.experiment.etas.push_back(random_double(s));
  for (std::size_t i = s.below(3); i > 0; --i) r.experiment.inits.push_back(random_point(s));
  r.experiment.skew_tol = random_double(s);
  r.experiment.kurt_tol = random_double(s);
  r.experiment.level = s.uniform();
  r.experiment.strategy = random_word(s);
  r.experiment.batch_len = s.below(10000);
  r.experiment.trace_points = s.below(1000);
  r.experiment.force = s.below(2);
  r.output_dir = random_word(s);
  return r;
}

}  // namespace

TEST(RunSpecFormat, RandomRoundTrips) {
  RngStream s(2024, 0);
  for (int i = 0; i < 100; ++i) {
    const auto spec = random_spec(s);
    const auto text = serialize_run_spec(spec);
    EXPECT_EQ(parse_run_spec(text), spec) << text;
  }
}

TEST(RunSpecFormat, DefaultsRoundTripAndEveryKeySerialized) {
  const RunSpec def;
  const auto text = serialize_run_spec(def);
  EXPECT_EQ(parse_run_spec(text), def);
  for (const auto& key : run_spec_keys()) EXPECT_NE(text.find(key + " ="), std::string::npos) << key;
}

TEST(RunSpecFormat, CommentsAndBlankLines) {
  const auto spec = parse_run_spec("# a comment\n\nsgd.eta = 0.25\n  objective.name=quadsine  \n");
  EXPECT_EQ(spec.sgd.eta, 0.25);
  EXPECT_EQ(spec.objective.name, "quadsine");
}

TEST(RunSpecFormat, Errors) {
  EXPECT_THROW(parse_run_spec("sgd.etaa = 1"), InvalidArgument);
  EXPECT_THROW(parse_run_spec("sgd.eta 1"), InvalidArgument);
  EXPECT_THROW(parse_run_spec("sgd.eta = fast"), InvalidArgument);
  EXPECT_THROW(parse_run_spec("experiment.force = maybe"), InvalidArgument);
  RunSpec r;
  EXPECT_THROW(apply_setting(r, "nope", "1"), InvalidArgument);
  apply_setting(r, "experiment.inits", "1,1;1.5,1.5");
  ASSERT_EQ(r.experiment.inits.size(), 2u);
  EXPECT_EQ(r.experiment.inits[1], Point({1.5, 1.5}));
}

TEST(Builders, ObjectiveNoiseAndTestFunctions) {
  RunSpec r;
  r.objective.name = "simplified-bz";
  r.objective.dim = 3;
  const auto obj = build_objective(r);
  EXPECT_EQ(obj->dim(), 3u);
  r.noise.kind = "student-t";
  r.noise.df = 6;
  EXPECT_NE(build_noise(r, obj).describe().find("student"), std::string::npos);
  EXPECT_EQ(build_test_function("coord:2", obj).label(), "coord:2");
  EXPECT_THROW(build_test_function("coord:3", obj), InvalidArgument);
  EXPECT_THROW(build_test_function("banana", obj), InvalidArgument);
  r.sgd.theta0 = Point({1.0, 2.0});
  EXPECT_THROW(build_sgd_config(r, 3), InvalidArgument);
  r.noise.kind = "minibatch";
  EXPECT_THROW(build_noise(r, obj), InvalidArgument);  // needs a finite-sum objective
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli({}).code, kExitUsage);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(cli({"generate-data", "--m", "0", "--d", "3", "--seed", "1"}).code, kExitUsage);
  const auto dir = scratch("usage");
  const auto r = cli({"run", "--objective", "quadratic", "--dim", "1", "--eta", "0.1", "--out",
                      dir.string()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("binding"), std::string::npos) << r.err;
  EXPECT_EQ(cli({"run", "--set", "sgd.bogus=1"}).code, kExitUsage);
}

TEST(Cli, DivergenceIsNumerical) {
  const auto dir = scratch("diverge");
  const auto r = cli({"run", "--objective", "quadratic", "--dim", "1", "--eta", "3.5", "--theta0", "1",
                      "--noise", "none", "--n-iters", "1000", "--force", "--out", dir.string()});
  EXPECT_EQ(r.code, kExitNumerical) << r.err;
}

TEST(Cli, RunWritesIteratesAndSummary) {
  const auto dir = scratch("run");
  const auto r = cli({"run", "--objective", "quadratic", "--dim", "2", "--eta", "0.0001", "--n-iters",
                      "50", "--burn-in", "10", "--out", dir.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto j = nlohmann::json::parse(slurp(dir / "run.json"));
  EXPECT_EQ(j["n_iters"], 50);
  std::ifstream in(dir / "iterates.csv");
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 41);  // header plus iterations 11..50
}

TEST(Cli, ConfigThenFlagsThenSet) {
  const auto dir = scratch("precedence");
  const auto cfg = dir / "run.cfg";
  std::ofstream(cfg) << "objective.name = quadratic\nobjective.dim = 1\nsgd.eta = 0.5\nsgd.n_iters = 20\n";
  const auto r = cli({"run", "--config", cfg.string(), "--eta", "0.25", "--set", "sgd.eta=0.0002",
                      "--out", dir.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "run.json"))["eta"], 0.0002);
}

TEST(Cli, GenerateDataDeterministic) {
  const auto dir = scratch("gen");
  ASSERT_EQ(cli({"generate-data", "--m", "200", "--d", "4", "--seed", "3", "--out", (dir / "a").string()}).code,
            kExitOk);
  ASSERT_EQ(cli({"generate-data", "--m", "200", "--d", "4", "--seed", "3", "--out", (dir / "b").string()}).code,
            kExitOk);
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
  EXPECT_FALSE(slurp(dir / "a.csv").empty());
}

TEST(Cli, ConstantsReportsClosedForms) {
  const auto dir = scratch("constants");
  const auto r = cli({"constants", "--L", "1", "--alpha", "1", "--beta", "25", "--L-xi", "1", "--out",
                      dir.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto j = nlohmann::json::parse(slurp(dir / "constants.json"));
  EXPECT_EQ(j["mu2"], 53.0);
  // alpha^2 = 1 < 3 L^2 + L_xi: c_{L,alpha} = alpha / (3 L^2 + L_xi) = 1/4.
  EXPECT_EQ(j["step_size_caps"]["c_L_alpha"], 0.25);
  EXPECT_FALSE(j.contains("D"));

  const auto with_eta = cli({"constants", "--L", "1", "--alpha", "1", "--beta", "1", "--eta", "0.0001",
                             "--out", dir.string()});
  ASSERT_EQ(with_eta.code, kExitOk) << with_eta.err;
  const auto k = nlohmann::json::parse(slurp(dir / "constants.json"));
  EXPECT_NEAR(k["D"].get<double>(), 64.0 * std::sqrt(513.0), 1e-9);
}

TEST(Cli, CheckCertificates) {
  const auto dir = scratch("check");
  auto r = cli({"check", "--objective", "quadsine", "--assumption", "dissipativity", "--alpha", "1",
                "--out", dir.string()});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  auto j = nlohmann::json::parse(slurp(dir / "certificate.json"));
  EXPECT_TRUE(j["certified"].get<bool>());
  EXPECT_LE(j["checks"]["dissipativity"]["beta_hat"].get<double>(), 25.0);

  r = cli({"check", "--objective", "simplified-cauchy", "--dim", "3", "--assumption", "convexity",
           "--out", dir.string()});
  EXPECT_EQ(r.code, kExitCertification) << r.out << r.err;
}

TEST(Cli, CltAndBiasOutputs) {
  const auto dir = scratch("clt");
  auto r = cli({"clt", "--objective", "quadratic", "--dim", "1", "--noise", "gaussian", "--etas", "0.1,0.2",
                "--inits", "0;1", "-N", "120", "--n-iters", "2000", "--burn-in", "100", "--test", "coord:0",
                "--force", "--workers", "2", "--out", dir.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (const char* f : {"clt_cell0.csv", "clt_cell3.csv", "clt_cell0_normality.json",
                        "clt_ks_eta1_init0_vs_init1.json", "clt_summary.json"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const auto s = nlohmann::json::parse(slurp(dir / "clt_summary.json"));
  EXPECT_EQ(s["cells"].size(), 4u);
  EXPECT_EQ(s["eta_comparisons"].size(), 1u);

  const auto bdir = scratch("bias");
  r = cli({"bias", "--objective", "quadratic", "--dim", "1", "--test", "norm2", "--etas", "0.05,0.1,0.2",
           "-N", "20", "--n-iters", "5000", "--burn-in", "500", "--trace-points", "10", "--force",
           "--out", bdir.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto b = nlohmann::json::parse(slurp(bdir / "bias_curve.json"));
  EXPECT_EQ(b["etas"].size(), 3u);
  std::ifstream in(bdir / "bias_trace.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "eta,iteration,abs_bias");

  r = cli({"bias", "--objective", "cauchy-mle", "--dim", "2", "--data-m", "50", "--force", "--out",
           bdir.string()});
  EXPECT_EQ(r.code, kExitUsage);
}

TEST(Cli, VarianceStrategies) {
  const auto dir = scratch("variance");
  auto r = cli({"variance", "--objective", "quadratic", "--dim", "1", "--eta", "0.1", "--test", "coord:0",
                "--n-iters", "200000", "--burn-in", "1000", "--force", "--out", dir.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto j = nlohmann::json::parse(slurp(dir / "variance.json"));
  EXPECT_NEAR(j["sigma2"].get<double>(), 1.0, 0.35);
  r = cli({"variance", "--objective", "quadratic", "--dim", "1", "--eta", "0.1", "--level", "1.5",
           "--force", "--out", dir.string()});
  EXPECT_EQ(r.code, kExitUsage);
}
