#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "pqflex/cli.hpp"
#include "pqflex/report.hpp"
#include "support.hpp"

using namespace pqflex;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "pqflex");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  static std::mt19937 rng(std::random_device{}());
  const fs::path p = fs::temp_directory_path() / ("pqflex_test_" + name + "_" + std::to_string(rng()));
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) { return read_file(p.string()); }

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

const std::string kCase = pqtest::data_file("cases/synthetic38.case");

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run({"--version"}).code == 0);
  CHECK(run({"trace"}).code == 2);
  const Run missing = run({"trace", "/nonexistent/x.case", "--out", scratch("m").string()});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("file not found") != std::string::npos);
  CHECK(run({"trace", kCase, "--step", "0", "--out", scratch("s").string()}).code == 2);
  CHECK(run({"trace", kCase, "--mode", "spiral", "--out", scratch("s").string()}).code == 2);
  const Run unknown = run({"trace", kCase, "--config", "nope", "--out", scratch("u").string()});
  CHECK(unknown.code == 2);
  CHECK(run({"validate", scratch("empty").string()}).code == 2);

  const fs::path bad = scratch("bad");
  fs::create_directories(bad);
  std::string text = slurp(kCase);
  text.replace(text.find("[lines]"), 7, "[linez]");
  spit(bad / "bad.case", text);
  const Run parse = run({"trace", (bad / "bad.case").string(), "--out", (bad / "run").string()});
  CHECK(parse.code == 2);
  CHECK(parse.err.find("bad.case:") != std::string::npos);
  fs::remove_all(bad);
}

TEST_CASE("trace, validate and tamper detection") {
  const fs::path dir = scratch("trace");
  const Run t = run({"--deterministic", "--out", dir.string(), "trace", kCase, "--config", "NOP-open", "--step", "0.2"});
  REQUIRE(t.code == 0);
  CHECK(fs::exists(dir / "boundary_NOP-open.csv"));
  CHECK(fs::exists(dir / "setpoints_boundary_NOP-open.csv"));
  CHECK(fs::exists(dir / "overlay.svg"));
  int boundary_files = 0;
  for (const auto& e : fs::directory_iterator(dir))
    boundary_files += e.path().filename().string().rfind("boundary_", 0) == 0 ? 1 : 0;
  CHECK(boundary_files == 1);

  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["configurations"] == nlohmann::json::array({"NOP-open"}));
  CHECK_FALSE(manifest.contains("created"));
  for (const auto& o : manifest["outputs"])
    CHECK(o["sha256"] == sha256_hex(slurp(dir / o["file"].get<std::string>())));

  const Run v = run({"validate", dir.string()});
  CHECK(v.code == 0);
  CHECK(v.out.find("0 problems") != std::string::npos);

  CHECK(run({"--out", dir.string(), "trace", kCase, "--config", "NOP-open"}).code == 2);

  // Edit a setpoint, then repair its hash so only re-verification can catch it.
  const fs::path sp = dir / "setpoints_boundary_NOP-open.csv";
  const std::string original = slurp(sp);
  std::string edited = original;
  const std::string header = edited.substr(0, edited.find('\n'));
  int column = 0;
  for (std::size_t at = 0; at < header.find("B_p_up"); ++at) column += header[at] == ',' ? 1 : 0;
  std::size_t col = edited.find('\n') + 1;
  for (int k = 0; k < column; ++k) col = edited.find(',', col) + 1;
  const std::size_t end = edited.find(',', col);
  edited.replace(col, end - col, format_number(std::stod(edited.substr(col, end - col)) + 0.5));
  spit(sp, edited);
  const Run h = run({"validate", dir.string()});
  CHECK(h.code == 1);
  CHECK(h.err.find("hash mismatch") != std::string::npos);

  auto m = manifest;
  for (auto& o : m["outputs"])
    if (o["file"] == "setpoints_boundary_NOP-open.csv") o["sha256"] = sha256_hex(edited);
  spit(dir / "manifest.json", m.dump(2));
  const Run r = run({"validate", dir.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("hash mismatch") == std::string::npos);
  CHECK(r.out.find("0 problems") == std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("secure area of a single configuration is its boundary") {
  const fs::path dir = scratch("secure1");
  const Run s = run({"--deterministic", "--out", dir.string(), "secure", kCase, "--config", "NOP-open", "--step", "0.2"});
  REQUIRE(s.code == 0);
  const auto doc = nlohmann::json::parse(slurp(dir / "secure.json"));
  const auto bnd = nlohmann::json::parse(slurp(dir / "boundaries.json"));
  CHECK(doc["area_mva2"].get<double>() ==
        doctest::Approx(bnd["boundaries"][0]["area_mva2"].get<double>()).epsilon(1e-9));
  fs::remove_all(dir);
}

TEST_CASE("secure reports an infeasible configuration as a warning") {
  const fs::path dir = scratch("secure2");
  fs::create_directories(dir);
  std::string text = slurp(kCase);
  const std::string tie = "18, 33, 0.04, 0.03, 4.5, true, false";
  REQUIRE(text.find(tie) != std::string::npos);
  text.replace(text.find(tie), tie.size(), "18, 33, 0.04, 0.03, 0.01, true, false");
  spit(dir / "weak_tie.case", text);
  const Run s = run({"--deterministic", "--out", (dir / "run").string(), "secure", (dir / "weak_tie.case").string(),
                     "--config", "NOP-open,feeder-1-only", "--step", "0.2"});
  CHECK(s.code == 0);
  CHECK(s.err.find("warning: feeder-1-only") != std::string::npos);
  fs::remove_all(dir);
}
