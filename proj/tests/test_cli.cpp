#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "repcalc/cli.hpp"

using namespace repcalc;
using cli::kComputation;
using cli::kOk;
using cli::kUsage;

namespace {

std::string model(const char* name) { return std::string(REPCALC_MODELS_DIR) + "/" + name + ".json"; }

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "repcalc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

Complex cx(const Json& j) { return j.is_string() ? parse_complex(j.get<std::string>()) : Complex(j.get<double>()); }

// the installed binary, exit status only
int run_binary(const std::string& args) {
  const std::string cmd = std::string(REPCALC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::filesystem::path tmp(const char* name) { return std::filesystem::temp_directory_path() / name; }

}  // namespace

TEST(Cli, GbmRatioDrift) {
  const Result r = run({"drift", "--model", model("gbm_ratio"), "--xi", "ratio"});
  ASSERT_EQ(r.code, kOk) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_NEAR(cx(j["total"][0]).real(), 0.034, 1e-15);
}

TEST(Cli, DriftWithTruncationAndEta) {
  const Result a = run({"drift", "--model", model("merton_1d"), "--xi", "log_return"});
  const Result b = run({"drift", "--model", model("merton_1d"), "--xi", "log_return", "--truncation", "zero"});
  ASSERT_EQ(a.code, kOk) << a.err;
  ASSERT_EQ(b.code, kOk) << b.err;
  EXPECT_NEAR(cx(Json::parse(a.out)["total"][0]).real(), cx(Json::parse(b.out)["total"][0]).real(), 1e-12);
  const Result q = run({"drift", "--model", model("merton_1d"), "--xi", "identity", "--eta", "exp_utility", "--eta-params",
                     R"({"lambda":0.5})"});
  ASSERT_EQ(q.code, kOk) << q.err;
  EXPECT_TRUE(Json::parse(q.out).contains("cross_term"));
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({"drift", "--model", model("gbm_ratio"), "--xi", "no_such_function"}).code, kUsage);
  EXPECT_EQ(run({"drift", "--model", "/nonexistent/model.json"}).code, kUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kUsage);
  EXPECT_EQ(run({}).code, kUsage);
  EXPECT_EQ(run({"cumulant", "--model", model("merton_1d"), "--re", "0,1"}).code, kUsage);
  EXPECT_EQ(run({"price-margrabe", "--model", model("merton_1d")}).code, kUsage);
  EXPECT_EQ(run({"utility", "--model", model("trinomial"), "--lo", "1", "--hi", "-1"}).code, kUsage);
  EXPECT_EQ(run({"mc-verify", "--model", model("merton_1d"), "--target", "nothing"}).code, kUsage);
  EXPECT_EQ(run({"drift", "--model", model("gbm_ratio"), "--format", "csv"}).code, kUsage);
}

TEST(Cli, BadModelFile) {
  const auto p = tmp("repcalc_bad_model.json");
  std::ofstream(p) << R"({"type": "levy", "dim": 1, "b": [0.0], "c": [[-1.0]], "truncation": ["zero"], "jumps": []})";
  EXPECT_EQ(run({"drift", "--model", p.string()}).code, kUsage);
  std::ofstream(p) << "{ not json";
  EXPECT_EQ(run({"drift", "--model", p.string()}).code, kUsage);
  std::filesystem::remove(p);
}

TEST(Cli, ComputationErrorExitCode) {
  // log return of an atom at -1 is undefined
  const auto p = tmp("repcalc_pole_model.json");
  std::ofstream(p) << R"({"type": "levy", "dim": 1, "b": [0.0], "c": [[0.0]], "truncation": ["zero"],
                          "jumps": [{"kind": "atoms", "atoms": [{"x": [-1.0], "intensity": 1.0}]}]})";
  const Result r = run({"drift", "--model", p.string(), "--xi", "log_return"});
  EXPECT_EQ(r.code, kComputation) << r.out << r.err;
  std::filesystem::remove(p);
}

TEST(Cli, DiscreteUtility) {
  const Result r = run({"discrete", "--model", model("trinomial"), "--what", "utility", "--lambda", "1", "--T", "1"});
  ASSERT_EQ(r.code, kOk) << r.err;
  const double want = 0.3 * std::exp(-0.1) + 0.4 + 0.3 * std::exp(0.1);
  EXPECT_NEAR(cx(Json::parse(r.out)["value"]).real(), want, 1e-12);
}

TEST(Cli, DiscreteOptimizeMatchesLogOdds) {
  const Result r = run({"utility", "--model", model("trinomial_skewed")});
  ASSERT_EQ(r.code, kOk) << r.err;
  const Result s = run({"discrete", "--model", model("trinomial_skewed"), "--what", "optimize"});
  ASSERT_EQ(s.code, kOk) << s.err;
  EXPECT_EQ(Json::parse(r.out)["lambda_star"], Json::parse(s.out)["lambda_star"]);
}

TEST(Cli, MargrabeNoJumpPrice) {
  const Result r = run({"price-margrabe", "--model", model("margrabe_nojump")});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_NEAR(Json::parse(r.out)["price"].get<double>(), 10.5243, 1e-4);
}

TEST(Cli, CumulantCsv) {
  const Result r = run({"cumulant", "--model", model("merton_1d"), "--re", "0,1,3", "--im", "0,0,1"});
  ASSERT_EQ(r.code, kOk) << r.err;
  std::istringstream in(r.out);
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  EXPECT_EQ(header, "re_v,im_v,re_kappa,im_kappa,status");
  EXPECT_EQ(first, "0,0,0,0,ok");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 2);
}

TEST(Cli, CumulantJsonAndMargrabeKappa) {
  const Result r = run({"cumulant", "--model", model("margrabe_defaults"), "--format", "json", "--re", "-0.5,-0.5,1",
                     "--im", "-5,5,3"});
  ASSERT_EQ(r.code, kOk) << r.err;
  const Json j = Json::parse(r.out);
  ASSERT_EQ(j.size(), 3u);
  // conjugate symmetry across the real axis
  EXPECT_LT(std::abs(cx(j[0]["kappa"]) - std::conj(cx(j[2]["kappa"]))), 1e-12);
}

TEST(Cli, GridPointFailureFlagsRow) {
  // e^{-800 x} overflows at the atom x = -1
  const auto p = tmp("repcalc_pole_grid.json");
  std::ofstream(p) << R"({"type": "levy", "dim": 1, "b": [0.0], "c": [[0.0]], "truncation": ["zero"],
                          "jumps": [{"kind": "atoms", "atoms": [{"x": [-1.0], "intensity": 1.0}]}]})";
  const Result r = run({"cumulant", "--model", p.string(), "--re", "-800,0,2"});
  std::filesystem::remove(p);
  EXPECT_EQ(r.code, kComputation);
  EXPECT_NE(r.out.find("error:"), std::string::npos);
  EXPECT_NE(r.out.find("0,0,0,0,ok"), std::string::npos);
}

TEST(Cli, MemmZeroAtOne) {
  const Result r = run({"memm", "--model", model("merton_1d"), "--format", "json", "--re", "0,1,2"});
  ASSERT_EQ(r.code, kOk) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_EQ(cx(j["rows"][0]["kappa_q"]), Complex(0.0));
  EXPECT_LT(std::abs(cx(j["rows"][1]["kappa_q"])), 1e-12);
}

TEST(Cli, McVerifyWithinThreeSigma) {
  const Result r = run({"mc-verify", "--model", model("merton_1d"), "--target", "cumulant", "--v", "0.5+1i", "--paths",
                     "20000", "--seed", "7"});
  ASSERT_EQ(r.code, kOk) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_LT(std::abs(j["z_re"].get<double>()), 3.0);
  EXPECT_LT(std::abs(j["z_im"].get<double>()), 3.0);
  EXPECT_EQ(j["mc"]["n_paths"].get<std::size_t>(), 20000u);
}

TEST(Cli, ThreadsEnvironmentDoesNotChangeResult) {
  const std::vector<std::string> args = {"mc-verify", "--model", model("merton_1d"), "--paths", "4000"};
  ::setenv("REPCALC_THREADS", "1", 1);
  const Result a = run(args);
  ::setenv("REPCALC_THREADS", "3", 1);
  const Result b = run(args);
  ::setenv("REPCALC_THREADS", "many", 1);
  const Result c = run(args);
  ::unsetenv("REPCALC_THREADS");
  ASSERT_EQ(a.code, kOk);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(c.code, kUsage);
}

TEST(Cli, OutFileOption) {
  const auto p = tmp("repcalc_out.json");
  const Result r = run({"utility", "--model", model("trinomial"), "--out", p.string()});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_TRUE(r.out.empty());
  std::ifstream f(p);
  const Json j = Json::parse(f);
  EXPECT_NEAR(j["lambda_star"].get<double>(), 0.0, 1e-8);
  std::filesystem::remove(p);
}

TEST(Cli, ModelJsonRoundTrip) {
  for (const char* name : {"atoms_1d", "gbm_ratio", "margrabe_defaults", "merton_1d", "trinomial"}) {
    const Model m = load_model(model(name));
    const Json once = to_json(m);
    EXPECT_EQ(to_json(model_from_json(once)), once) << name;
  }
}

TEST(CliBinary, ExitCodes) {
  EXPECT_EQ(run_binary("drift --model " + model("gbm_ratio") + " --xi ratio"), 0);
  EXPECT_EQ(run_binary("drift --model " + model("gbm_ratio") + " --xi nope"), 2);
  EXPECT_EQ(run_binary("bogus"), 2);
  const auto p = tmp("repcalc_bin_pole.json");
  std::ofstream(p) << R"({"type": "levy", "dim": 1, "b": [0.0], "c": [[0.0]], "truncation": ["zero"],
                          "jumps": [{"kind": "atoms", "atoms": [{"x": [-1.0], "intensity": 1.0}]}]})";
  EXPECT_EQ(run_binary("drift --model " + p.string() + " --xi log_return"), 1);
  std::filesystem::remove(p);
  EXPECT_EQ(run_binary("--help"), 0);
}
