// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <sys/wait.h>

#include "crs/cli.hpp"
#include "crs/corpus.hpp"
#include "crs/eval.hpp"
#include "crs/jsonl.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace crs;

namespace {

struct Outcome {
  int status = 0;
  std::string out;
  std::string err;
};

Outcome crs_run(const std::vector<std::string>& args, const std::string& input = {}) {
  std::istringstream in(input);
  std::ostringstream out, err;
  Outcome o;
  o.status = cli::run(args, in, out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

/// Synthetic data, a built store and trained factors, shared by the file.
struct Workspace {
  fixture::TempDir dir;
  std::string data, store;
  Workspace() {
    data = (dir / "data").string();
    store = (dir / "store").string();
    REQUIRE(crs_run({"synth", "--out", data, "--users", "600"}).status == 0);
    REQUIRE(crs_run({"stats", "build", "--data", data, "--out", store}).status == 0);
    REQUIRE(crs_run({"mf", "train", "--store", store, "--dim", "8", "--epochs", "5"}).status == 0);
  }
};

Workspace& workspace() {
  static Workspace w;
  return w;
}

/// Runs the real binary through the shell; stdout and stderr are merged.
Outcome shell(const std::string& args) {
  Outcome o;
  const std::string cmd = std::string(CRS_BINARY) + " " + args + " 2>&1";
  FILE* p = ::popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) o.out.append(buf, n);
  const int st = ::pclose(p);
  o.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return o;
}

}  // namespace

TEST_CASE("usage errors exit nonzero") {
  for (const char* args : {"", "frobnicate", "probes gen --bogus", "eval probes", "corpus build --data"}) {
    const auto o = shell(args);
    CHECK_MESSAGE(o.status != 0, args);
    CHECK_MESSAGE(o.out.find("Usage") != std::string::npos, args);
  }
  CHECK(shell("--help").status == 0);
}

TEST_CASE("runtime errors exit nonzero with a message") {
  const auto o = crs_run({"probes", "gen", "--store", "/nonexistent/store", "--out", "/tmp/x.jsonl"});
  CHECK(o.status != 0);
  CHECK(o.err.find("/nonexistent/store") != std::string::npos);
}

TEST_CASE("probe generation is byte-identical across runs") {
  auto& w = workspace();
  const auto a = (w.dir / "a.jsonl").string(), b = (w.dir / "b.jsonl").string();
  REQUIRE(crs_run({"probes", "gen", "--family", "all", "--seed", "5", "--store", w.store, "--out", a}).status == 0);
  REQUIRE(crs_run({"probes", "gen", "--family", "all", "--seed", "5", "--store", w.store, "--out", b}).status == 0);
  CHECK(fixture::slurp(a) == fixture::slurp(b));
  CHECK_FALSE(fixture::slurp(a).empty());
  const auto c = (w.dir / "c.jsonl").string();
  REQUIRE(crs_run({"probes", "gen", "--family", "all", "--seed", "6", "--store", w.store, "--out", c}).status == 0);
  CHECK(fixture::slurp(a) != fixture::slurp(c));
}

TEST_CASE("corpus manifest counts match the files") {
  auto& w = workspace();
  const auto out = w.dir / "corpus";
  REQUIRE(crs_run({"corpus", "build", "--tasks", "all", "--seed", "3", "--data", w.data, "--out", out.string()})
              .status == 0);
  const auto manifest = Json::parse(fixture::slurp(out / "manifest.json"));
  std::size_t total = 0;
  for (const auto& [label, n] : manifest.at("counts").items()) {
    const auto task = task_from_label(label);
    REQUIRE(task);
    const auto file = out / (std::string(task_file_stem(*task)) + ".jsonl");
    CHECK(jsonl::count_lines(file) == n.get<std::size_t>());
    total += n.get<std::size_t>();
  }
  CHECK(manifest.at("counts").size() == 4);
  CHECK(jsonl::count_lines(out / "mixed.jsonl") == total);
  CHECK(manifest.at("mixed_count").get<std::size_t>() == total);
}

TEST_CASE("composite evaluation reports every family") {
  auto& w = workspace();
  const auto probes = (w.dir / "all.jsonl").string();
  REQUIRE(crs_run({"probes", "gen", "--family", "all", "--store", w.store, "--out", probes}).status == 0);
  ::setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
  const auto r1 = (w.dir / "r1.json").string(), r2 = (w.dir / "r2.json").string();
  const auto run1 = crs_run({"eval", "probes", "--probes", probes, "--scorer", "composite", "--store", w.store,
                             "--mf", "--report", r1});
  const auto run2 = crs_run({"eval", "probes", "--probes", probes, "--scorer", "composite", "--store", w.store,
                             "--mf", "--report", r2});
  ::unsetenv("SOURCE_DATE_EPOCH");
  REQUIRE(run1.status == 0);
  REQUIRE(run2.status == 0);
  CHECK(fixture::slurp(r1) == fixture::slurp(r2));
  CHECK(run1.out == run2.out);
  CHECK(run1.out.find("Rec Probe") != std::string::npos);

  const auto report = read_report(r1);
  CHECK(report.timestamp == "2023-11-14T22:13:20Z");
  for (auto f : {ProbeFamily::recommendation, ProbeFamily::attribute, ProbeFamily::combination,
                 ProbeFamily::description}) {
    REQUIRE(report.probes.count(f));
    CHECK(report.probes.at(f).scored() + report.probes.at(f).unscored > 0);
  }
  CHECK(report.probes.at(ProbeFamily::recommendation).score() >= 0.9);
}

TEST_CASE("bleu and recall subcommands") {
  auto& w = workspace();
  const auto cands = w.dir / "cands.txt", refs = w.dir / "refs.txt";
  fixture::spit(cands, "have you seen @ heat (1995) @ ? it is great\nthe cat sat on the mat\n");
  fixture::spit(refs, "have you seen @ alien (1979) @ ? it is great\nthe cat sat on the mat\n");
  const auto o = crs_run({"eval", "bleu", "--candidates", cands.string(), "--references", refs.string()});
  REQUIRE(o.status == 0);
  CHECK(o.out.find("100") != std::string::npos);

  const auto gen = w.dir / "gen.jsonl", ref = w.dir / "ref.jsonl";
  fixture::spit(gen, R"({"conversation_id":"c","turn":1,"text":"@ a @ @ b @"})" "\n");
  fixture::spit(ref, R"({"conversation_id":"c","turn":1,"text":"try @ a @"})" "\n");
  const auto report = (w.dir / "recall.json").string();
  const auto r = crs_run({"eval", "recall", "--generated", gen.string(), "--reference", ref.string(),
                          "--report", report});
  REQUIRE(r.status == 0);
  CHECK(read_report(report).recall->percentage == doctest::Approx(50.0));
}

TEST_CASE("terminal chat") {
  auto& w = workspace();
  const auto o = crs_run({"chat", "--store", w.store}, "hello\n/reset\n/quit\n");
  CHECK(o.status == 0);
  CHECK_FALSE(o.out.empty());
}
