// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "crs/error.hpp"
#include "crs/eval.hpp"
#include "crs/mf.hpp"
#include "crs/rng.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace crs;

namespace {

/// Scores from a lookup of "<input>|<target>"; missing keys throw.
class TableScorer : public Scorer {
 public:
  std::map<std::string, double> values;
  std::string id() const override { return "table"; }
  ScoreResult score(std::string_view in, std::string_view t) const override {
    auto it = values.find(std::string(in) + "|" + std::string(t));
    if (it == values.end()) throw ScoringError("no value");
    return {it->second, id()};
  }
};

class ConstantScorer : public Scorer {
 public:
  std::string id() const override { return "constant"; }
  ScoreResult score(std::string_view, std::string_view) const override { return {-1.0, id()}; }
};

ProbeCase two_target(const std::string& in, const std::string& pos, const std::string& neg) {
  ProbeCase p;
  p.family = ProbeFamily::recommendation;
  p.inputs = {in};
  p.targets = {pos, neg};
  p.metadata.positive_movie = 1;
  p.metadata.negative_movie = 2;
  return p;
}

const std::vector<std::string> kCands = {
    "the cat sat on the mat", "there is a cat on the mat", "a quick brown fox jumps over the lazy dog",
    "have you seen __unk__ ? it is great", "i think you would like it a lot"};
const std::vector<std::string> kRefs = {
    "the cat is on the mat", "there is a cat on the mat today", "the quick brown fox jumped over the lazy dog",
    "have you seen __unk__ ? it is really great", "i think you will like it"};

}  // namespace

TEST_CASE("title masking") {
  CHECK(mask_titles("sure, have you seen @ heat (1995) @ ?") == "sure, have you seen __unk__ ?");
  CHECK(mask_titles("no titles") == "no titles");
  const std::string three = "@ a @ and @ b (1990) @ or @ c @!";
  const auto masked = mask_titles(three);
  std::size_t n = 0;
  for (std::size_t pos = masked.find("__unk__"); pos != std::string::npos; pos = masked.find("__unk__", pos + 1)) ++n;
  CHECK(n == 3);
  CHECK(masked.find('@') == std::string::npos);
  CHECK_THROWS_AS(mask_titles("odd @ sign"), DelimiterError);
}

TEST_CASE("bleu against the brute-force oracle") {
  CHECK(std::abs(bleu(kCands, kRefs) - oracle::bleu(kCands, kRefs)) <= 1e-6);
  for (std::size_t i = 0; i < kCands.size(); ++i) {
    const std::vector<std::string> c{kCands[i]}, r{kRefs[i]};
    CHECK(std::abs(bleu(c, r) - oracle::bleu(c, r)) <= 1e-6);
    CHECK(std::abs(bleu(c, r, 1) - oracle::bleu(c, r, 1)) <= 1e-6);
  }
}

TEST_CASE("bleu hand cases") {
  CHECK(bleu(kRefs, kRefs) == doctest::Approx(100.0));
  // Clipped unigram precision 1/3; candidate longer than reference, so no penalty.
  CHECK(std::abs(bleu({"a a a"}, {"a"}, 1) - 100.0 / 3.0) <= 1e-9);
  // Candidate shorter: precision 1, penalty exp(1 - 3/1).
  CHECK(std::abs(bleu({"a"}, {"a a a"}, 1) - 100.0 * std::exp(-2.0)) <= 1e-9);
  CHECK(bleu({"x y z w"}, {"a b c d"}) == 0.0);
  CHECK_THROWS_AS(bleu({}, {}), Error);
  CHECK_THROWS_AS(bleu({"a"}, {"a", "b"}), Error);
}

TEST_CASE("property: bleu is permutation invariant and perfect on itself") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    auto c = kCands, r = kRefs;
    std::vector<std::size_t> order{0, 1, 2, 3, 4};
    rng.shuffle(order);
    std::vector<std::string> c2, r2;
    for (auto i : order) {
      c2.push_back(c[i]);
      r2.push_back(r[i]);
    }
    CHECK(bleu(c2, r2) == doctest::Approx(bleu(c, r)).epsilon(1e-12));
    CHECK(bleu(c2, c2) == doctest::Approx(100.0));
  }
}

TEST_CASE("end-to-end recall") {
  std::vector<DialogueTurn> ref, gen;
  ref.push_back({"c1", 1, "have you seen @ a (1990) @ or @ b (1991) @ ?"});
  ref.push_back({"c2", 1, "try @ c (1992) @"});
  ref.push_back({"c2", 3, "or @ d (1993) @"});
  gen.push_back({"c1", 1, "@ A (1990) @ @ x @ @ y @ @ z @"});  // 1 of 4
  gen.push_back({"c2", 1, "@ c (1992) @ @ d (1993) @ @ a (1990) @"});  // 2 of 3; a belongs to c1
  gen.push_back({"c2", 3, "@ q @ @ r @ @ s @"});  // 0 of 3
  const auto r = recall_end_to_end(gen, ref);
  CHECK(r.generated == 10);
  CHECK(r.matched == 3);
  CHECK(r.percentage == doctest::Approx(30.0));
  CHECK_FALSE(r.zero_denominator);

  const auto same = recall_end_to_end(ref, ref);
  CHECK(same.percentage == 100.0);

  const auto none = recall_end_to_end({{"c1", 1, "no titles"}}, ref);
  CHECK(none.percentage == 0.0);
  CHECK(none.zero_denominator);
  CHECK_THROWS_AS(recall_end_to_end({{"c9", 1, "x"}}, ref), Error);
}

TEST_CASE("probe suite tallies") {
  TableScorer t;
  std::vector<ProbeCase> probes;
  probes.push_back(two_target("i", "p1", "n1"));
  probes.push_back(two_target("i", "p2", "n2"));
  probes.push_back(two_target("i", "p3", "n3"));
  probes.push_back(two_target("i", "p4", "n4"));
  ProbeCase d;
  d.family = ProbeFamily::description;
  d.inputs = {"good", "bad"};
  d.targets = {"review"};
  probes.push_back(d);
  t.values = {{"i|p1", -1}, {"i|n1", -2}, {"i|p2", -3}, {"i|n2", -2}, {"i|p3", -1}, {"i|n3", -1},
              {"good|review", -0.5}, {"bad|review", -4}};
  ProbeSuiteOptions opt;
  opt.prefix_task_label = false;
  const auto res = run_probe_suite(probes, t, opt);
  const auto& rec = res.families.at(ProbeFamily::recommendation);
  CHECK(rec.successes == 1);
  CHECK(rec.failures == 1);
  CHECK(rec.ties == 1);
  CHECK(rec.unscored == 1);
  CHECK(rec.scored() == 3);
  CHECK(rec.score() == doctest::Approx(1.0 / 3));
  CHECK(res.families.at(ProbeFamily::description).successes == 1);

  // Strictly monotone transform of every score and a reversed probe order.
  TableScorer u;
  for (const auto& [k, v] : t.values) u.values[k] = -std::exp(-v);
  auto reversed = probes;
  std::reverse(reversed.begin(), reversed.end());
  CHECK(run_probe_suite(reversed, u, opt).families == res.families);
}

TEST_CASE("probe suite degenerate scorers") {
  const auto& store = fixture::planted_store();
  const auto probes = gen_recommendation_probes(store, {}).cases;
  const auto res = run_probe_suite(probes, ConstantScorer{});
  const auto& f = res.families.at(ProbeFamily::recommendation);
  CHECK(f.successes == 0);
  CHECK(f.ties == probes.size());

  TableScorer fav;
  for (const auto& p : probes) {
    fav.values["redial conversation: " + p.inputs[0] + "|" + p.targets[0]] = -1;
    fav.values["redial conversation: " + p.inputs[0] + "|" + p.targets[1]] = -2;
  }
  // Probes share inputs, so a movie can be a positive in one probe and a
  // negative in another; positives are written last and win.
  for (const auto& p : probes) fav.values["redial conversation: " + p.inputs[0] + "|" + p.targets[0]] = -1;
  const auto best = run_probe_suite(probes, fav).families.at(ProbeFamily::recommendation);
  CHECK(best.score() >= 0.99);
  CHECK_THROWS_AS(run_probe_suite({}, ConstantScorer{}), Error);
}

TEST_CASE("report round trip and summary") {
  EvalReport r;
  r.backend_id = "composite(0.5,0.4,0.1)";
  r.seed = 13;
  r.timestamp = "2024-01-01T00:00:00Z";
  r.bleu = 12.5;
  r.recall = RecallResult{30.0, 3, 10, false};
  r.probes[ProbeFamily::recommendation] = {9, 1, 0, 2};
  r.probes[ProbeFamily::description] = {1, 1, 2, 0};
  const auto back = EvalReport::from_json(r.to_json());
  CHECK(back.to_json() == r.to_json());
  const auto table = format_summary({r, back});
  CHECK(table.find("Rec Probe") != std::string::npos);
  CHECK(table.find("0.9000") != std::string::npos);
  CHECK(table.find("0.2500") != std::string::npos);

  ::setenv("SOURCE_DATE_EPOCH", "86400", 1);
  CHECK(timestamp_now() == "1970-01-02T00:00:00Z");
  ::unsetenv("SOURCE_DATE_EPOCH");
  fixture::TempDir dir;
  write_report(dir / "r.json", r);
  CHECK(read_report(dir / "r.json").to_json() == r.to_json());
}

TEST_CASE("mf baseline on probes") {
  const auto& store = fixture::planted_store();
  MfHyperparameters hp;
  hp.dim = 16;
  const auto model = train_mf(interactions_from_windows(store.windows), hp);
  const auto probes = gen_recommendation_probes(store, {}).cases;
  const auto f = mf_probe_accuracy(probes, model);
  CHECK(f.scored() + f.unscored == probes.size());
  CHECK(f.score() > 0.5);
}
