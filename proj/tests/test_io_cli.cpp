#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"

using namespace polyiso;

namespace {

const std::string kData = POLYISO_TEST_DATA;

template <class F>
void expect_error(ErrorCode code, F&& f) {
  try {
    f();
    ADD_FAILURE() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("polyiso_test_" + name)).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(PolygonCsv, ParsesCommentsAndBlankLines) {
  std::istringstream in("# header\n\n0,0\n 2 , 0 # trailing\n2,1\r\n+0,1e0\n");
  const auto pts = parse_polygon_csv(in);
  ASSERT_EQ(pts.size(), 4u);
  EXPECT_EQ(pts[1].x, 2.0);
  EXPECT_EQ(pts[3].y, 1.0);
}

TEST(PolygonCsv, Errors) {
  for (const char* bad : {"0,0\n1\n", "0,0,0\n", "a,b\n", "1,2x\n", ",1\n"}) {
    std::istringstream in(bad);
    expect_error(ErrorCode::ParseError, [&] { parse_polygon_csv(in); });
  }
  expect_error(ErrorCode::ParseError, [] { read_polygon_csv("/nonexistent/file.csv"); });
  expect_error(ErrorCode::TooFewVertices, [] { read_polygon_csv(kData + "/two_points.csv"); });
}

TEST(PolygonCsv, RoundTripsExactly) {
  const VertexPolygon p = from_vertices({{0.1, 0.2}, {1.0 / 3.0, -0.7}, {2.5, 1e-7}});
  std::ostringstream out;
  write_polygon_csv(out, p);
  std::istringstream in(out.str());
  const auto q = parse_polygon_csv(in);
  ASSERT_EQ(q.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(q[i].x, p.vertices()[i].x);
    EXPECT_EQ(q[i].y, p.vertices()[i].y);
  }
}

TEST(ManifoldJson, RoundTrip) {
  const ManifoldPoint m = sample(6, std::uint64_t{3}, 100).point;
  const ManifoldPoint back = manifold_point_from_json(Json::parse(dump_json(to_json(m))));
  EXPECT_EQ(back.x, m.x);
  EXPECT_EQ(back.r, m.r);
}

TEST(ManifoldJson, Errors) {
  expect_error(ErrorCode::ParseError, [] { manifold_point_from_json(Json::parse(R"({"x": [1, 2]})")); });
  expect_error(ErrorCode::ParseError,
               [] { manifold_point_from_json(Json::parse(R"({"n": 3, "x": [1, 2], "r": [1, 2]})")); });
  expect_error(ErrorCode::ParseError, [] { manifold_point_from_json(Json::parse(R"({"x": [1, 2], "r": [1]})")); });
  expect_error(ErrorCode::ParseError, [] { manifold_point_from_json(Json::parse(R"({"x": "no", "r": [1]})")); });
  expect_error(ErrorCode::ParseError, [] { read_manifold_point_json("/nonexistent.json"); });
}

TEST(JsonWriter, FixedFormat) {
  Json j{{"b", 0.1}, {"a", 1}, {"inf", std::numeric_limits<double>::infinity()}, {"list", Json::array({1.5, "s"})}};
  EXPECT_EQ(dump_json(j, 0), R"({"b":0.10000000000000001,"a":1,"inf":null,"list":[1.5,"s"]})");
  EXPECT_EQ(dump_json(Json::object(), 2), "{}");
  EXPECT_EQ(dump_json(Json{{"k", Json::array()}}, 2), "{\n  \"k\": []\n}");
}

TEST(ParseNList, Forms) {
  EXPECT_EQ(cli::parse_n_list("4"), (std::vector<int>{4}));
  EXPECT_EQ(cli::parse_n_list("3-6"), (std::vector<int>{3, 4, 5, 6}));
  EXPECT_EQ(cli::parse_n_list("3,5,9-10"), (std::vector<int>{3, 5, 9, 10}));
  expect_error(ErrorCode::ParseError, [] { cli::parse_n_list("x"); });
  expect_error(ErrorCode::ParseError, [] { cli::parse_n_list("6-3"); });
  expect_error(ErrorCode::ParseError, [] { cli::parse_n_list("3,,4"); });
  expect_error(ErrorCode::TooFewVertices, [] { cli::parse_n_list("2-4"); });
}

TEST(Cli, VerifyRectangle) {
  const CliResult r = run_cli({"verify", "--input", kData + "/rect.csv"});
  EXPECT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["command"], "verify");
  EXPECT_EQ(j["seed"], 1);
  bool found = false;
  for (const auto& rec : j["report"]["records"]) {
    if (rec["name"] == "shilleto") {
      EXPECT_NEAR(rec["slack"].get<double>(), 8.0, 1e-12);
      found = true;
    }
  }
  EXPECT_TRUE(found);
}

TEST(Cli, VerifyFailingConstantExitsOne) {
  const CliResult r = run_cli({"verify", "--input", kData + "/rect.csv", "--c-main", "0.1"});
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(Json::parse(r.out)["report"]["pass"].get<bool>());
}

TEST(Cli, VerifyManifoldJson) {
  EXPECT_EQ(run_cli({"verify", "--input", kData + "/star_point.json"}).code, 0);
  const CliResult off = run_cli({"verify", "--input", kData + "/off_manifold.json"});
  EXPECT_EQ(off.code, 2);
  EXPECT_NE(off.err.find("NotOnManifold"), std::string::npos);
}

TEST(Cli, VerifyCsvHasSeedLine) {
  const CliResult r = run_cli({"verify", "--input", kData + "/rect.csv", "--format", "csv", "--seed", "17"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("# seed=17\nname,lhs,rhs,slack,applicable,pass\n", 0), 0u);
}

TEST(Cli, InputErrorsExitTwo) {
  const CliResult two = run_cli({"verify", "--input", kData + "/two_points.csv"});
  EXPECT_EQ(two.code, 2);
  EXPECT_NE(two.err.find("TooFewVertices"), std::string::npos);

  const CliResult bad = run_cli({"verify", "--input", kData + "/bad_number.csv"});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("ParseError"), std::string::npos);

  EXPECT_EQ(run_cli({"verify"}).code, 2);
  EXPECT_EQ(run_cli({"spectral", "--n", "2"}).code, 2);
}

TEST(Cli, UsageErrorsPrintSynopsis) {
  const CliResult none = run_cli({});
  EXPECT_EQ(none.code, 2);
  EXPECT_NE(none.err.find("Subcommands"), std::string::npos);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({"spectral", "--format", "xml"}).code, 2);
  EXPECT_EQ(run_cli({"spectral", "--bogus"}).code, 2);
}

TEST(Cli, Spectral) {
  const CliResult r = run_cli({"spectral", "--n", "4"});
  EXPECT_EQ(r.code, 0);
  const Json res = Json::parse(r.out)["results"][0];
  EXPECT_EQ(res["eigenvalues"], Json::parse("[0,4,4,4]"));
  EXPECT_EQ(res["min_eig_on_Z"].get<double>(), 8.0);
  EXPECT_EQ(res["basis_norms"].size(), 4u);
}

TEST(Cli, SampleIsJsonLinesAndReproducible) {
  const CliResult a = run_cli({"sample", "--n", "5", "--count", "4", "--seed", "9"});
  const CliResult b = run_cli({"sample", "--n", "5", "--count", "4", "--seed", "9"});
  EXPECT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  std::istringstream lines(a.out);
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    const Json j = Json::parse(line);
    EXPECT_EQ(j["seed"], 9);
    EXPECT_EQ(j["n"], 5);
    EXPECT_LE(std::abs(j["residuals"]["angle_sum"].get<double>()), 1e-9);
    ++count;
  }
  EXPECT_EQ(count, 4);
  EXPECT_NE(a.out, run_cli({"sample", "--n", "5", "--count", "4", "--seed", "10"}).out);
}

TEST(Cli, EstimateCnByteIdentical) {
  const std::vector<std::string> args{"estimate-cn", "--n", "4", "--budget", "300", "--seed", "5", "--count", "50"};
  const CliResult a = run_cli(args);
  const CliResult b = run_cli(args);
  EXPECT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  const Json j = Json::parse(a.out);
  EXPECT_EQ(j["seed"], 5);
  EXPECT_EQ(j["results"][0]["holdout"]["violations"], 0);
  EXPECT_NEAR(j["results"][0]["c_hat"].get<double>(), 0.25, 1e-6);
  EXPECT_EQ(j["results"][0]["side_variance_constant"]["source"], "empirical");
  EXPECT_GT(j["results"][0]["side_variance_constant"]["value"].get<double>(), 0.0);

  const CliResult csv = run_cli({"estimate-cn", "--n", "4", "--budget", "100", "--format", "csv"});
  EXPECT_EQ(csv.out.rfind("# seed=1\nn,c_hat,sigma,min_eig_on_Z\n4,", 0), 0u);
}

TEST(Cli, Derivatives) {
  const CliResult r = run_cli({"derivatives", "--n", "3-5"});
  EXPECT_EQ(r.code, 0) << r.out;
  const Json j = Json::parse(r.out);
  ASSERT_EQ(j["results"].size(), 3u);
  EXPECT_TRUE(j["results"][1]["pass"].get<bool>());
  EXPECT_GT(j["results"][1]["sigma"].get<double>(), 0.0);
}

TEST(Cli, Sharpness) {
  const CliResult r = run_cli({"sharpness", "--n", "3", "--count", "5"});
  EXPECT_EQ(r.code, 0);
  const Json j = Json::parse(r.out);
  EXPECT_LE(j["results"][0]["max_relative_error"].get<double>(), 0.02);
  EXPECT_EQ(j["results"][0]["directions"].size(), 5u);
}

TEST(Cli, ScalingDefaultsToRectangle) {
  const CliResult r = run_cli({"scaling"});
  EXPECT_EQ(r.code, 0);
  const Json j = Json::parse(r.out);
  EXPECT_NEAR(j["reports"][1]["dilated"]["deficit"].get<double>(), 16.0, 1e-12);
  EXPECT_GT(j["shrinking"][3]["ratio_growth"].get<double>(), 1e5);
  EXPECT_EQ(run_cli({"scaling", "--alpha", "0"}).code, 2);
}

TEST(Cli, ConvexifyWithTraceAndOut) {
  const std::string trace = temp_path("trace.jsonl");
  const std::string out = temp_path("final.json");
  const CliResult r = run_cli({"convexify", "--input", kData + "/dented_square.csv", "--trace", trace, "--out", out});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  const Json j = Json::parse(slurp(out));
  EXPECT_EQ(j["flips"], 1);
  EXPECT_TRUE(j["final"]["convex"].get<bool>());
  const Json step = Json::parse(slurp(trace));
  EXPECT_EQ(step["step"], 1);
  EXPECT_EQ(step["pocket"], Json::parse("[1]"));
  EXPECT_NEAR(step["area"].get<double>(), 1.1, 1e-15);
  std::filesystem::remove(trace);
  std::filesystem::remove(out);

  const CliResult csv = run_cli({"convexify", "--input", kData + "/dented_square.csv", "--format", "csv"});
  EXPECT_EQ(csv.out.rfind("# seed=1\n0,0\n0.5,-0.20000000000000001\n", 0), 0u);
}

TEST(Cli, ConvexifyBudget) {
  EXPECT_EQ(run_cli({"convexify", "--input", kData + "/dented_square.csv", "--max-flips", "0"}).code, 2);
  EXPECT_EQ(run_cli({"convexify"}).code, 2);
}
