#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cli.hpp"
#include "json_io.hpp"
#include "svg_plot.hpp"

namespace fs = std::filesystem;
namespace cli = hybridlab::cli;
using hybridlab::InputError;

namespace {

std::string data(const char* name) { return std::string(HYBRIDLAB_DATA_DIR) + "/" + name; }

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hybridlab_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::size_t occurrences(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("sha256 digests") {
  CHECK(cli::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(cli::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("exit codes for invalid input, resource limits and usage errors") {
  ::unsetenv("HYBRIDLAB_SEED");
  const fs::path dir = scratch("codes");
  CHECK(run({"bounds-twrc", data("fig8.json"), "--r", "1.2", "-o", (dir / "t.json").string()}).code == 2);
  write(dir / "empty.csv", "");
  CHECK(run({"plot", (dir / "empty.csv").string(), "-o", (dir / "e.svg").string()}).code == 2);
  const Run big = run({"simulate", data("hybrid_trend.json"), "--n", "200", "-o", (dir / "s.json").string()});
  CHECK(big.code == 3);
  CHECK_FALSE(fs::exists(dir / "s.json"));
  CHECK(run({"no-such-command"}).code == 2);
  CHECK(run({"bounds-diamond", data("example1.json")}).code == 2);  // missing -o
  CHECK(run({"check-thm1", data("example1.json"), "-o", (dir / "k.json").string()}).code == 2);  // wrong kind
}

TEST_CASE("diamond bounds through the command line") {
  ::unsetenv("HYBRIDLAB_SEED");
  const fs::path dir = scratch("diamond");
  const Run r = run({"bounds-diamond", data("diamond_single_relay.json"), "-o", (dir / "d.json").string()});
  REQUIRE(r.code == 0);
  const auto j = cli::load_json((dir / "d.json").string());
  CHECK(j.at("hybrid").at("value").get<double>() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(j.at("cutset").at("value").get<double>() == doctest::Approx(1.0).epsilon(1e-9));
  const auto m = cli::load_json((dir / "d.json.manifest.json").string());
  CHECK(m.at("subcommand") == "bounds-diamond");
  CHECK(m.at("outputs").at(0).at("sha256") == cli::sha256_file((dir / "d.json").string()));
  CHECK(m.at("inputs").at(0).at("sha256") == cli::sha256_file(data("diamond_single_relay.json")));
}

TEST_CASE("replay reproduces outputs with a different worker count") {
  ::unsetenv("HYBRIDLAB_SEED");
  const fs::path dir = scratch("replay");
  REQUIRE(run({"simulate", data("hybrid_trend.json"), "--n", "8", "12", "--trials", "300", "--trials-csv",
               (dir / "t.csv").string(), "--jobs", "1", "-o", (dir / "s.json").string()})
              .code == 0);
  const Run rep = run({"replay", (dir / "s.json.manifest.json").string(), "--jobs", "3", "--out-dir",
                       (dir / "again").string()});
  CHECK(rep.code == 0);
  CHECK(occurrences(rep.out, "identical") == 2);
  CHECK(occurrences(rep.out, "DIFFERENT") == 0);
  CHECK(slurp(dir / "t.csv") == slurp(dir / "again" / "t.csv"));
}

TEST_CASE("seed environment variable takes precedence over the flag") {
  const fs::path dir = scratch("seed");
  const std::vector<std::string> base{"simulate", data("hybrid_trend.json"), "--n", "8", "--trials", "200",
                                      "--seed", "11"};
  auto with_out = [&](const char* name) {
    auto a = base;
    a.push_back("-o");
    a.push_back((dir / name).string());
    return a;
  };
  ::setenv("HYBRIDLAB_SEED", "5", 1);
  REQUIRE(run(with_out("env.json")).code == 0);
  ::unsetenv("HYBRIDLAB_SEED");
  REQUIRE(run(with_out("flag.json")).code == 0);
  auto plain = with_out("five.json");
  plain[7] = "5";
  REQUIRE(run(plain).code == 0);
  const auto m = cli::load_json((dir / "env.json.manifest.json").string());
  CHECK(m.at("seed").get<std::uint64_t>() == 5);
  CHECK(m.at("seed_source") == "environment");
  CHECK(slurp(dir / "env.json") == slurp(dir / "five.json"));
  CHECK(slurp(dir / "env.json") != slurp(dir / "flag.json"));

  // The override also applies to replay, which then reports a mismatch.
  ::setenv("HYBRIDLAB_SEED", "6", 1);
  const Run rep = run({"replay", (dir / "flag.json.manifest.json").string()});
  ::unsetenv("HYBRIDLAB_SEED");
  CHECK(rep.code == 4);
  CHECK(rep.out.find("DIFFERENT") != std::string::npos);
}

TEST_CASE("svg rendering is deterministic and draws one series per column") {
  ::unsetenv("HYBRIDLAB_SEED");
  const fs::path dir = scratch("plot");
  REQUIRE(run({"bounds-twrc", data("fig8.json"), "--sweep", "--r", "0.2", "0.4", "0.6", "-o",
               (dir / "f.json").string()})
              .code == 0);
  REQUIRE(fs::exists(dir / "f.csv"));
  REQUIRE(run({"plot", (dir / "f.csv").string(), "-o", (dir / "a.svg").string(), "--title", "sum rates"}).code == 0);
  REQUIRE(run({"plot", (dir / "f.csv").string(), "-o", (dir / "b.svg").string(), "--title", "sum rates"}).code == 0);
  const std::string svg = slurp(dir / "a.svg");
  CHECK(svg == slurp(dir / "b.svg"));
  CHECK(occurrences(svg, "<polyline class=\"series\"") == 4);
  for (const char* name : {"R_CS", "R_AF", "R_NNC", "R_HC"}) CHECK(svg.find(name) != std::string::npos);

  const auto single = cli::parse_csv("x,a,b\n1,2,3\n");
  const std::string dots = cli::render_svg(single);
  CHECK(occurrences(dots, "<polyline class=\"series\"") == 0);
  CHECK(occurrences(dots, "<circle class=\"series\"") == 2);
}

TEST_CASE("csv parsing rejects malformed tables") {
  CHECK_THROWS_AS(cli::parse_csv(""), InputError);
  CHECK_THROWS_AS(cli::parse_csv("x,y\n"), InputError);
  CHECK_THROWS_AS(cli::parse_csv("x\n1\n"), InputError);
  CHECK_THROWS_AS(cli::parse_csv("x,y\n1,2\n3\n"), InputError);
  CHECK_THROWS_AS(cli::parse_csv("x,y\n1,abc\n"), InputError);
  const auto t = cli::parse_csv("x,y\n1,2\n3,4.5\n");
  CHECK(t.rows.size() == 2);
  CHECK(t.header.size() == 2);
}

TEST_CASE("kernel specifications in scenario files") {
  using nlohmann::json;
  const auto bsc = cli::kernel_from(json::parse(R"({"bsc": 0.1})"));
  CHECK(bsc.matrix()(0, 1) == doctest::Approx(0.1));
  const auto bec = cli::kernel_from(json::parse(R"({"bec": 0.25})"));
  CHECK(bec.outputs() == 3);
  CHECK(bec.matrix()(1, 1) == doctest::Approx(0.25));
  const auto id = cli::kernel_from(json::parse(R"({"identity": 3})"));
  CHECK(id.as_map() == std::vector<int>{0, 1, 2});
  const auto map = cli::kernel_from(json::parse(R"({"map": [1, 0, 1], "outputs": 2})"));
  CHECK(map.as_map() == std::vector<int>{1, 0, 1});
  const auto mat = cli::kernel_from(json::parse("[[0.5, 0.5], [1, 0]]"));
  CHECK(mat.inputs() == 2);
  CHECK_THROWS_AS(cli::kernel_from(json::parse("[[0.5, 0.6], [1, 0]]")), InputError);
  CHECK_THROWS_AS(cli::pmf_from(json::parse("[0.5, 0.4]")), InputError);
  CHECK_THROWS_AS(cli::kernel_from(json::parse(R"({"erasure": 0.1})")), InputError);
}
