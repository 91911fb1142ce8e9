#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "semistable/io.hpp"

using namespace semistable;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun run_cli(const std::string& args) {
  CliRun r;
  const std::string cmd = std::string(SEMISTABLE_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

TEST(Format, RoundTripsDoubles) {
  for (double x : {0.0, 1.0, -2.5e-300, 1.0 / 3.0, 6.02214076e23, std::nextafter(1.0, 2.0)})
    EXPECT_EQ(*io::parse_double(io::format_double(x)), x);
  EXPECT_TRUE(std::isinf(*io::parse_double("inf")));
  EXPECT_TRUE(std::isnan(*io::parse_double("nan")));
  EXPECT_FALSE(io::parse_double("").has_value());
}

TEST(Json, NonFiniteNumbers) {
  EXPECT_EQ(io::number(INFINITY), "inf");
  EXPECT_TRUE(io::number(NAN).is_null());
  EXPECT_TRUE(io::number(std::optional<double>{}).is_null());
}

TEST(Csv, RoundTrip) {
  io::CsvTable t;
  t.header = {"a", "b"};
  t.rows = {{1.0 / 3.0, std::nullopt}, {-4.0, 1e-17}};
  std::stringstream ss;
  io::write_csv(ss, t);
  const io::CsvTable back = io::read_csv(ss);
  EXPECT_EQ(back.header, t.header);
  EXPECT_EQ(back.rows, t.rows);
  std::stringstream bad("a,b\n1\n");
  EXPECT_THROW(io::read_csv(bad), ParseError);
}

TEST(Csv, BranchColumns) {
  const Nonlinearity e = Nonlinearity::exponential();
  const Branch b = branch_sweep(e, 2, {0.5, 1.0});
  const TrackTable tr = track(b, e, {QuantitySpec::lp_norm(2)});
  const io::CsvTable t = io::branch_csv(b, &tr);
  const std::vector<std::string> want{"m", "R", "lambda", "mu1", "u_inf", "residual", "L2_norm"};
  EXPECT_EQ(t.header, want);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_FALSE(t.rows[0][3].has_value());  // mu1 not requested
  EXPECT_EQ(*t.rows[1][0], 1.0);
}

TEST(Json, VerdictKeys) {
  const io::json j = io::to_json(regularity_verdict(build_profile(Nonlinearity::exponential()), 9));
  for (const char* k : {"profile", "certificates", "all_dimensions_linf", "h1_all_dimensions", "not_fired",
                        "fprime_integrability", "thresholds", "requested", "table"})
    EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_TRUE(j["thresholds"].contains("linf"));
  EXPECT_TRUE(j["thresholds"].contains("h10"));
  const std::string md = io::to_markdown(regularity_verdict(build_profile(Nonlinearity::exponential()), 9), 9);
  EXPECT_NE(md.find("| n |"), std::string::npos);
}

TEST(Cli, ClassifyExponential) {
  const CliRun r = run_cli("classify --family exp");
  EXPECT_EQ(r.code, 0);
  const io::json j = io::json::parse(r.out);
  EXPECT_EQ(j["profile"]["tau_minus"], 1.0);
}

TEST(Cli, LinearIsRejected) {
  EXPECT_EQ(run_cli("classify --expr t").code, 1);
}

TEST(Cli, BadOptionsFail) {
  EXPECT_EQ(run_cli("classify --family nosuch").code, 1);
  EXPECT_EQ(run_cli("verdict --no-such-flag").code, 1);
  EXPECT_EQ(run_cli("").code, 1);
}

TEST(Cli, LinLogVerdictIsBounded) {
  const CliRun r = run_cli("verdict --family linlog --n 50");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(io::json::parse(r.out)["requested"]["guarantee"], "Linf");
}

TEST(Cli, BranchOutputsAreDeterministic) {
  const auto base = std::filesystem::temp_directory_path() / "semistable_cli_test";
  std::filesystem::remove_all(base);
  const std::string common = "branch --family exp --n 3 --m-min 0.2 --m-max 3 --m-count 12 --out ";
  const CliRun a = run_cli(common + (base / "a").string() + " --threads 1");
  const CliRun b = run_cli(common + (base / "b").string() + " --threads 2");
  ASSERT_EQ(a.code, 0);
  ASSERT_EQ(b.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(slurp(base / "a" / "branch.csv"), slurp(base / "b" / "branch.csv"));
  EXPECT_EQ(slurp(base / "a" / "branch_summary.json"), a.out);
  std::ifstream csv(base / "a" / "branch.csv");
  const io::CsvTable t = io::read_csv(csv);
  EXPECT_EQ(t.header.front(), "m");
  EXPECT_EQ(t.rows.size(), 12u + 30u);
  std::filesystem::remove_all(base);
}
