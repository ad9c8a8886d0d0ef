#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ensemblekit/cli.hpp"
#include "ensemblekit/io.hpp"

using namespace ek;
namespace fs = std::filesystem;

namespace {

struct Workspace {
  fs::path dir;
  Workspace() {
    dir = fs::temp_directory_path() / ("ensemblekit_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream f(dir / name, std::ios::binary);
    f << text;
    return (dir / name).string();
  }
};

struct CliRun {
  int code;
  std::string out, err;
};

CliRun run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = ek::cli::run_command(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

const char* kCw = R"({"kind": "curie_weiss"})";
const char* kTab3 = R"({"kind": "tabular", "table_I": [0.0, 0.5, 0.2], "table_H": [0.0, 1.0, 2.0]})";

}  // namespace

TEST_CASE("entropy command writes the documented CSV schema") {
  Workspace ws;
  auto model = ws.write("cw.json", kCw);
  auto out = ws.path("s.csv");
  auto r = run({"entropy", "--model", model, "--u-grid", "-0.5:0:101", "--out", out});
  REQUIRE(r.code == 0);
  CsvTable t = read_csv(out);
  CHECK(t.header == std::vector<std::string>{"u", "s", "s_hull", "beta_minus", "beta_plus", "in_C",
                                             "in_T"});
  CHECK(t.rows() == 101);
  // s <= 0 along the sweep and the hull majorizes
  for (size_t i = 0; i < t.rows(); ++i) {
    REQUIRE(t.columns[1][i] <= 1e-9);
    REQUIRE(t.columns[2][i] >= t.columns[1][i] - 1e-12);
  }
}

TEST_CASE("entropy diagnostics JSON records per-point solver state") {
  Workspace ws;
  auto model = ws.write("cw.json", kCw);
  auto out = ws.path("s.csv");
  auto diag = ws.path("diag.json");
  REQUIRE(run({"entropy", "--model", model, "--u-grid", "-0.5:0:11", "--out", out, "--diag",
               diag}).code == 0);
  auto j = nlohmann::json::parse(slurp(diag));
  REQUIRE(j.at("points").size() == 11);
  for (const auto& p : j.at("points")) {
    CHECK(p.at("feasible").get<bool>());
    CHECK(p.at("converged").get<bool>());
  }
}

TEST_CASE("verify prints the decision table and the disjointness tally") {
  Workspace ws;
  auto model = ws.write("tab3.json", kTab3);
  auto report = ws.path("report.json");
  auto r = run({"verify", "--model", model, "--beta-grid", "-5:5:1001", "--out", report});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("Nonequivalent") != std::string::npos);
  CHECK(r.out.find("1001/1001 disjointness checks passed") != std::string::npos);
  CHECK(r.out.find("RESULT: PASS") != std::string::npos);
  auto j = nlohmann::json::parse(slurp(report));
  CHECK(j.at("all_verified").get<bool>());
  CHECK(j.at("schema_version").get<std::string>() == "1");
}

TEST_CASE("classify writes a report plus the CSV mirror") {
  Workspace ws;
  auto model = ws.write("tab3.json", kTab3);
  auto report = ws.path("report.json");
  auto mirror = ws.path("mirror.csv");
  auto r = run({"classify", "--model", model, "--out", report, "--csv", mirror});
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(slurp(report));
  REQUIRE(j.at("points").size() == 3);
  CHECK(j.at("points")[1].at("label").get<std::string>() == "Nonequivalent");
  CHECK(read_csv(mirror).rows() == 3);
}

TEST_CASE("macrostates command serializes equilibrium sets") {
  Workspace ws;
  auto model = ws.write("tab3.json", kTab3);
  auto out = ws.path("set.json");
  auto r = run({"macrostates", "--model", model, "--ensemble", "canonical", "--beta", "-0.2",
                "--out", out});
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(slurp(out));
  CHECK(j.at("certification").get<std::string>() == "exact");
  REQUIRE(j.at("members").size() == 1);
  CHECK(j.at("members")[0].at("index").get<int>() == 2);
}

TEST_CASE("equilibrium-set JSON round-trips through the reader") {
  Workspace ws;
  auto model = ws.write("cw.json", kCw);
  auto out = ws.path("set.json");
  REQUIRE(run({"macrostates", "--model", model, "--ensemble", "microcanonical", "--u", "-0.125",
               "--out", out}).code == 0);
  auto j = nlohmann::json::parse(slurp(out));
  REQUIRE(j.at("members").size() == 2);
  for (const auto& mj : j.at("members")) {
    Macrostate x = macrostate_from_json(mj);
    REQUIRE(check_macrostate(x).empty());
    CHECK(std::fabs(std::fabs(x.weights[1] - x.weights[0]) - 0.5) <= 1e-6);
  }
}

TEST_CASE("mixed command sweeps a conditioned curve") {
  Workspace ws;
  auto model = ws.write("tm.json",
                        R"({"kind": "tabular_mixed", "table_I": [0.0, 0.4, 0.3, 0.1],
                            "table_H": [[0.0, 1.0, 0.0, 1.0], [0.0, 0.0, 1.0, 1.0]]})");
  auto out = ws.path("mixed.csv");
  auto report = ws.path("mixed.json");
  auto r = run({"mixed", "--model", model, "--mode", "fixed-beta1", "--value", "0", "--out", out,
                "--report", report});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("RESULT: PASS") != std::string::npos);
  CsvTable t = read_csv(out);
  REQUIRE(t.rows() == 2);
  CHECK(t.columns[1][1] == Catch::Approx(-0.1).margin(1e-12));
}

TEST_CASE("sample command is byte-deterministic for a fixed seed") {
  Workspace ws;
  auto model = ws.write("cw.json", kCw);
  auto out1 = ws.path("chain1.json");
  auto out2 = ws.path("chain2.json");
  std::vector<std::string> args = {"sample", "--model", model,   "--ensemble", "canonical",
                                   "--beta", "2",       "--n",   "64",         "--sweeps",
                                   "5000",   "--seed",  "7",     "--out",      out1};
  REQUIRE(run(args).code == 0);
  args.back() = out2;
  REQUIRE(run(args).code == 0);
  CHECK(slurp(out1) == slurp(out2));
  auto j = nlohmann::json::parse(slurp(out1));
  CHECK(j.at("sites").get<int>() == 64);
}

TEST_CASE("plot renders a standalone chart from any curve CSV") {
  Workspace ws;
  auto model = ws.write("cw.json", kCw);
  auto csv = ws.path("s.csv");
  REQUIRE(run({"entropy", "--model", model, "--u-grid", "-0.5:0:21", "--out", csv}).code == 0);
  auto svg = ws.path("s.svg");
  REQUIRE(run({"plot", "--in", csv, "--out", svg}).code == 0);
  std::string body = slurp(svg);
  CHECK(body.rfind("<svg", 0) == 0);
  CHECK(body.find("s_hull") != std::string::npos);  // second series picked up

  // the CSV written by one command is re-readable by another without loss
  CsvTable t = read_csv(csv);
  auto round = ws.path("round.csv");
  write_csv(round, t);
  CHECK(slurp(csv) == slurp(round));
}

TEST_CASE("exit codes distinguish bad input from runtime diagnostics") {
  Workspace ws;
  auto model = ws.write("cw.json", kCw);
  SECTION("unknown flags and subcommands") {
    CHECK(run({"entropy", "--model", model, "--frobnicate", "1"}).code == 1);
    CHECK(run({"no-such-command"}).code == 1);
    CHECK(run({}).code == 1);
  }
  SECTION("malformed grid") {
    CHECK(run({"entropy", "--model", model, "--u-grid", "0:1", "--out", ws.path("x.csv")}).code == 1);
    CHECK(run({"entropy", "--model", model, "--u-grid", "1:0:5", "--out", ws.path("x.csv")}).code == 1);
    CHECK(run({"entropy", "--model", model, "--u-grid", "0:1:1", "--out", ws.path("x.csv")}).code == 1);
  }
  SECTION("missing or malformed model") {
    CHECK(run({"entropy", "--model", ws.path("nope.json"), "--u-grid", "0:1:3", "--out",
               ws.path("x.csv")}).code == 1);
    auto broken = ws.write("broken.json", R"({"kind": "curie_weiss", "extra_field": 3})");
    CHECK(run({"entropy", "--model", broken, "--u-grid", "0:1:3", "--out", ws.path("x.csv")}).code == 1);
  }
  SECTION("unreachable shell is a diagnostic") {
    auto r = run({"sample", "--model", model, "--ensemble", "shell", "--u", "0.4", "--r", "0.01",
                  "--n", "32", "--sweeps", "500", "--out", ws.path("x.json")});
    CHECK(r.code == 2);
    CHECK(r.err.find("diagnostic") != std::string::npos);
  }
  SECTION("help exits cleanly") { CHECK(run({"--help"}).code == 0); }
}

TEST_CASE("installed binary behaves like the library entry point") {
  const char* bin = std::getenv("ENSEMBLEKIT_CLI_BIN");
  if (bin == nullptr) SKIP("ENSEMBLEKIT_CLI_BIN not set");
  Workspace ws;
  auto model = ws.write("cw.json", kCw);
  auto out = ws.path("bin.csv");
  std::string cmd = std::string("\"") + bin + "\" entropy --model " + model +
                    " --u-grid -0.5:0:11 --out " + out + " >/dev/null 2>&1";
  REQUIRE(std::system(cmd.c_str()) == 0);
  auto direct = ws.path("lib.csv");
  REQUIRE(run({"entropy", "--model", model, "--u-grid", "-0.5:0:11", "--out", direct}).code == 0);
  CHECK(slurp(out) == slurp(direct));
}
