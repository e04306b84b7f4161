/*
 * Copyright 2026 The unlink-eval Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <doctest.h>

#include <fstream>
#include <sstream>

#include "oracle.hpp"
#include "unlink/commands.hpp"
#include "unlink/protocol.hpp"

using namespace unlinkeval;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "unlink_eval");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_column(const std::filesystem::path& p, const std::vector<double>& v) {
  write_score_column(p, v);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("eval on identical and disjoint fixtures") {
  const auto dir = oracle::scratch_dir("cli_eval");
  const auto same = oracle::normal_sample(10000, 0.5, 0.1, 1);
  write_column(dir / "m.csv", same);
  write_column(dir / "n.csv", same);
  auto r = cli({"eval", "--mated", (dir / "m.csv").string(), "--nonmated", (dir / "n.csv").string(),
                "--out", (dir / "a").string(), "--plot"});
  CHECK(r.code == 0);
  CHECK(r.out == "D_sys = 0.0000\n");
  CHECK(std::filesystem::exists(dir / "a" / "linkability.json"));
  CHECK(std::filesystem::exists(dir / "a" / "baselines.json"));
  CHECK(std::filesystem::exists(dir / "a" / "linkability.svg"));

  write_column(dir / "far.csv", oracle::normal_sample(10000, 0.9, 0.01, 2));
  r = cli({"eval", "--mated", (dir / "m.csv").string(), "--nonmated", (dir / "far.csv").string(),
           "--out", (dir / "b").string()});
  CHECK(r.code == 0);
  write_column(dir / "lo.csv", {0.1, 0.2, 0.15});
  write_column(dir / "hi.csv", {0.8, 0.9, 0.85});
  r = cli({"eval", "--mated", (dir / "lo.csv").string(), "--nonmated", (dir / "hi.csv").string(),
           "--out", (dir / "c").string()});
  CHECK(r.code == 0);
  CHECK(r.out == "D_sys = 1.0000\n");
  const auto base = nlohmann::json::parse(slurp(dir / "c" / "baselines.json"));
  CHECK(base["kl"] == "undefined");
}

TEST_CASE("eval validation errors exit with 2") {
  const auto dir = oracle::scratch_dir("cli_eval_errors");
  write_column(dir / "m.csv", {0.1, 0.2});
  write_column(dir / "n.csv", {0.8, 0.9});
  const auto m = (dir / "m.csv").string(), n = (dir / "n.csv").string();
  auto r = cli({"eval", "--mated", m, "--nonmated", n, "--omega", "-1", "--out", dir.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("omega must be positive") != std::string::npos);
  r = cli({"eval", "--mated", m, "--nonmated", (dir / "absent.csv").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("absent.csv") != std::string::npos);
  r = cli({"eval", "--mated", m, "--nonmated", n, "--bins", "many"});
  CHECK(r.code == 2);
  CHECK(r.err.find("--bins") != std::string::npos);
  r = cli({"eval", "--mated", m, "--nonmated", n, "--subjects", "1"});
  CHECK(r.code == 2);
  CHECK(r.err.find("--subjects") != std::string::npos);
  r = cli({"eval", "--mated", m, "--nonmated", n, "--omega", "0.5", "--subjects", "3"});
  CHECK(r.code == 2);
  r = cli({"frobnicate"});
  CHECK(r.code == 2);
  r = cli({"--help"});
  CHECK(r.code == 0);
}

TEST_CASE("synth determinism and manifest") {
  const auto dir = oracle::scratch_dir("cli_synth");
  for (const char* out : {"a", "b"}) {
    const auto r = cli({"synth", "--scheme", "xor", "--function", "pic_hd", "--seed", "7",
                        "--subjects", "50", "--samples", "4", "--keys", "10", "--bits", "1024",
                        "--out", (dir / out).string()});
    REQUIRE(r.code == 0);
  }
  for (const char* f : {"mated.csv", "nonmated.csv", "accuracy_mated.csv", "accuracy_nonmated.csv",
                        "manifest.json"}) {
    CAPTURE(f);
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
    CHECK_FALSE(slurp(dir / "a" / f).empty());
  }
  const auto manifest = nlohmann::json::parse(slurp(dir / "a" / "manifest.json"));
  CHECK(manifest["keys"] == 10);
  CHECK(manifest["subjects"] == 50);
  CHECK(manifest["counts"]["mated"] == 50 * 6 * 45);

  auto r = cli({"synth", "--scheme", "bloom", "--function", "reconstruction", "--out",
                (dir / "c").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("experimental") != std::string::npos);
  r = cli({"synth", "--scheme", "bloom", "--function", "reconstruction", "--experimental",
           "--subjects", "10", "--bits", "256", "--bloom-width", "8", "--out", (dir / "d").string()});
  CHECK(r.code == 0);
  r = cli({"synth", "--scheme", "xor", "--keys", "1", "--out", (dir / "e").string()});
  CHECK(r.code == 2);
}

TEST_CASE("compare renders the table and three plots") {
  const auto dir = oracle::scratch_dir("cli_compare");
  write_column(dir / "am.csv", oracle::normal_sample(2000, 0.2, 0.05, 1));
  write_column(dir / "an.csv", oracle::normal_sample(2000, 0.5, 0.05, 2));
  write_column(dir / "cm.csv", oracle::normal_sample(2000, 0.5, 0.05, 3));
  write_column(dir / "cn.csv", oracle::normal_sample(2000, 0.5, 0.05, 4));
  auto r = cli({"compare", "--accuracy-mated", (dir / "am.csv").string(), "--accuracy-nonmated",
                (dir / "an.csv").string(), "--crosskey-mated", (dir / "cm.csv").string(),
                "--crosskey-nonmated", (dir / "cn.csv").string(), "--out", (dir / "o").string()});
  REQUIRE(r.code == 0);
  for (const char* f : {"compare.json", "det.svg", "rtmr.svg", "linkability.svg"}) {
    CHECK(std::filesystem::exists(dir / "o" / f));
  }
  const auto j = nlohmann::json::parse(slurp(dir / "o" / "compare.json"));
  CHECK(j["eer_cross_key"].get<double>() == doctest::Approx(0.5).epsilon(0.1));
  CHECK(j["d_sys"].get<double>() < 0.1);
  CHECK(r.out.find("D_sys") != std::string::npos);

  // Separable cross-key fixture: KL cell reads "undefined".
  write_column(dir / "sm.csv", {0.1, 0.12, 0.11});
  write_column(dir / "sn.csv", {0.8, 0.82, 0.81});
  r = cli({"compare", "--accuracy-mated", (dir / "am.csv").string(), "--accuracy-nonmated",
           (dir / "an.csv").string(), "--crosskey-mated", (dir / "sm.csv").string(),
           "--crosskey-nonmated", (dir / "sn.csv").string(), "--out", (dir / "p").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("undefined") != std::string::npos);

  r = cli({"compare", "--accuracy-mated", (dir / "am.csv").string()});
  CHECK(r.code == 2);
}

TEST_CASE("protocol command") {
  const auto dir = oracle::scratch_dir("cli_protocol");
  std::ofstream(dir / "k10.json")
      << R"({"keys": 10, "functions": ["pic_hd"], "corpus": {"subjects": 20, "bits": 512}})";
  auto r = cli({"protocol", (dir / "k10.json").string(), "--out", (dir / "out").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("report: ") != std::string::npos);
  const auto report = nlohmann::json::parse(slurp(dir / "out" / "report.json"));
  CHECK(report["metadata"]["keys"] == 10);

  std::ofstream(dir / "k1.json") << R"({"keys": 1, "functions": ["pic_hd"]})";
  CHECK(cli({"protocol", (dir / "k1.json").string()}).code == 2);
  std::ofstream(dir / "nof.json") << R"({"keys": 10})";
  CHECK(cli({"protocol", (dir / "nof.json").string()}).code == 2);
  std::ofstream(dir / "broken.json") << R"({"keys": )";
  CHECK(cli({"protocol", (dir / "broken.json").string()}).code == 2);
  CHECK(cli({"protocol", (dir / "absent.json").string()}).code == 2);
}

}  // TEST_SUITE
