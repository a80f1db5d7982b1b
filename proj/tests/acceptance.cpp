// SPDX-License-Identifier: Apache-2.0
// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "crs/corpus.hpp"
#include "crs/error.hpp"
#include "crs/eval.hpp"
#include "crs/mf.hpp"
#include "crs/probes.hpp"
#include "crs/rng.hpp"
#include "crs/scoring.hpp"
#include "crs/service.hpp"
#include "crs/stats.hpp"
#include "crs/store.hpp"
#include "crs/synthetic.hpp"
#include "crs/text.hpp"
#include "fixtures.hpp"
#include "httplib.h"
#include "oracles.hpp"

using namespace crs;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

/// Collects failed sub-checks; the criterion passes when none failed.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    ++total_;
    if (!ok && failed_.size() < 5) failed_.push_back(what);
    if (!ok) ++failures_;
  }
  void note(const std::string& s) { notes_ += (notes_.empty() ? "" : "; ") + s; }
  Verdict verdict() const {
    std::string d = notes_;
    if (failures_) {
      d += (d.empty() ? "" : "; ") + std::to_string(failures_) + " of " + std::to_string(total_) + " checks failed:";
      for (const auto& f : failed_) d += " [" + f + "]";
    } else {
      d += (d.empty() ? "" : "; ") + std::to_string(total_) + " checks";
    }
    return {failures_ == 0, d};
  }

 private:
  std::size_t total_ = 0, failures_ = 0;
  std::vector<std::string> failed_;
  std::string notes_;
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string fmt_e(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

Catalog numbered_catalog(int n) {
  std::vector<MovieRecord> movies;
  for (int i = 1; i <= n; ++i) movies.push_back({i, "Movie " + std::to_string(i) + " (2000)", {}});
  return Catalog(movies);
}

std::vector<RatingEvent> likes(UserId user, int count, double rating, MovieId first = 1) {
  std::vector<RatingEvent> out;
  for (int i = 0; i < count; ++i) out.push_back({user, first + i, rating, 1000 + i});
  return out;
}

std::vector<std::string> split_tags(std::string s) {
  std::vector<std::string> out;
  std::size_t pos;
  while ((pos = s.find(", ")) != std::string::npos) {
    out.push_back(s.substr(0, pos));
    s.erase(0, pos + 2);
  }
  out.push_back(s);
  return out;
}

// ---------------------------------------------------------------------------

Verdict corpus_cardinality() {
  Checks c;
  const auto& d = fixture::planted_data();
  c.expect(d.redial_records.size() == 50, "50 dialogues");
  std::size_t examples = 0;
  for (std::size_t i = 0; i < d.redial_records.size(); ++i) {
    const auto& raw = d.redial_records[i];
    // Oracle: count messages sent by the respondent worker in the raw record.
    const auto respondent = raw.at("respondentWorkerId").get<long long>();
    std::size_t expected = 0;
    for (const auto& m : raw.at("messages")) expected += m.at("senderWorkerId").get<long long>() == respondent;
    const auto got = corpus::build_redial_examples(d.conversations.at(i)).size();
    c.expect(got == expected, "conversation " + raw.at("conversationId").dump());
    examples += got;
  }
  c.note(std::to_string(examples) + " examples");
  return c.verdict();
}

Verdict sequence_task() {
  Checks c;
  const Catalog cat = numbered_catalog(20);
  const auto ten = corpus::build_sequence_examples(std::span<const RatingEvent>(likes(1, 10, 5.0)), cat);
  c.expect(ten.size() == 9, "10 liked -> 9 examples");
  for (std::size_t n = 1; n <= ten.size(); ++n) {
    std::string in = "@";
    for (std::size_t i = 1; i <= n; ++i) in += " movie " + std::to_string(i) + " (2000) @";
    c.expect(ten[n - 1].input == in, "prefix length " + std::to_string(n));
    c.expect(ten[n - 1].target == "movie " + std::to_string(n + 1) + " (2000)", "target " + std::to_string(n));
  }
  c.expect(corpus::build_sequence_examples(std::span<const RatingEvent>(likes(1, 9, 5.0)), cat).empty(),
           "9 liked -> 0");
  auto boundary = likes(1, 9, 4.5);
  boundary.push_back({1, 10, 4.0, 2000});
  c.expect(corpus::build_sequence_examples(std::span<const RatingEvent>(boundary), cat).empty(),
           "rating 4.0 not liked");
  boundary.back().rating = 4.5;
  c.expect(corpus::build_sequence_examples(std::span<const RatingEvent>(boundary), cat).size() == 9,
           "rating 4.5 liked");
  return c.verdict();
}

Verdict tag_task() {
  Checks c;
  const std::vector<TagRelevance> rel = {{1, "at threshold", 0.80}, {1, "above", 0.81}, {2, "above", 0.95}};
  const auto idx = TagIndex::build(rel, 0.8);
  c.expect(!idx.has(1, "at threshold"), "0.80 excluded");
  c.expect(idx.has(1, "above"), "0.81 included");

  const auto& d = fixture::planted_data();
  const auto& store = fixture::planted_store();
  // Oracle tag lists straight from the raw relevance rows.
  std::map<std::string, std::set<std::string>> by_title;
  for (const auto& r : d.tag_relevances) {
    if (r.relevance > 0.8) by_title[text::to_lower(d.movies.at(r.movie_id - 1).title)].insert(r.tag);
  }
  const auto ex = corpus::build_tag_examples(store.tags, store.catalog, 11);
  for (const auto& e : ex) {
    const auto picked = split_tags(e.input);
    c.expect(picked.size() >= 1 && picked.size() <= 5, "1-5 tags: " + e.input);
    const auto& own = by_title[e.target];
    for (const auto& p : picked) c.expect(own.count(p) == 1, p + " belongs to " + e.target);
  }
  c.note(std::to_string(ex.size()) + " tag examples");
  return c.verdict();
}

Verdict review_task() {
  Checks c;
  Review r;
  r.review_id = "r";
  r.movie_id = 1;
  r.text = "A slow start. The middle picks up! Worth it in the end?";
  r.sentences = text::split_sentences(r.text);
  const auto ex = corpus::build_review_examples(std::vector<Review>{r}, numbered_catalog(1));
  c.expect(ex.size() == 3, "3 examples");
  std::string joined;
  for (const auto& e : ex) joined += (joined.empty() ? "" : " ") + e.target;
  c.expect(joined == text::to_lower(r.text), "targets partition the review");
  if (ex.size() == 3) {
    c.expect(ex[0].input == "review for @ movie 1 (2000) @:", "t = 0 prompt");
    c.expect(ex[2].input == "review for @ movie 1 (2000) @: a slow start. the middle picks up!", "t = 2 prompt");
  }
  return c.verdict();
}

Verdict pmi2_agreement() {
  Checks c;
  Rng rng(2024);
  std::vector<corpus::LikedWindow> windows;
  std::vector<oracle::Window> raw;
  for (int w = 0; w < 120; ++w) {
    std::set<MovieId> pick;
    while (pick.size() < 10) pick.insert(static_cast<MovieId>(1 + rng.below(50)));
    corpus::LikedWindow win(pick.begin(), pick.end());
    rng.shuffle(win);
    windows.push_back(win);
    raw.emplace_back(win.begin(), win.end());
  }
  const auto table = CooccurrenceTable::build(windows);
  double worst = 0.0;
  std::size_t pairs = 0;
  oracle::PairCounts pc{&raw};
  for (MovieId a = 1; a <= 50; ++a) {
    for (MovieId b = 1; b <= 50; ++b) {
      if (a == b) continue;
      c.expect(table.count(a, b) == static_cast<std::uint64_t>(pc.pair(a, b)), "count");
      if (pc.pair(a, b) == 0) continue;
      const double got = pmi2(a, b, table);
      worst = std::max(worst, std::abs(got - oracle::pmi2(raw, a, b)));
      c.expect(got == pmi2(b, a, table), "symmetry");
      ++pairs;
    }
  }
  c.expect(worst <= 1e-9, "max abs error " + fmt_e(worst));
  c.note("max abs error " + fmt_e(worst) + " over " + std::to_string(pairs) + " ordered pairs");
  return c.verdict();
}

/// Independent audit: popularity, rankings and tags recomputed from raw data.
Verdict probe_audit() {
  Checks c;
  const auto& d = fixture::planted_data();
  const auto& store = fixture::planted_store();
  const auto liked = store.liked_windows();
  std::vector<oracle::Window> raw;
  for (const auto& w : liked) raw.emplace_back(w.begin(), w.end());

  std::map<MovieId, long long> count;
  for (const auto& w : raw) {
    for (auto m : w) ++count[m];
  }
  std::vector<MovieId> eligible;
  for (const auto& [m, n] : count) {
    if (n > 30) eligible.push_back(m);
  }
  auto by_pop = eligible;
  std::sort(by_pop.begin(), by_pop.end(), [&](MovieId a, MovieId b) {
    return count[a] != count[b] ? count[a] > count[b] : a < b;
  });
  const std::size_t top_n = static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(eligible.size())));
  const std::set<MovieId> top(by_pop.begin(), by_pop.begin() + static_cast<std::ptrdiff_t>(top_n));

  // Tenth-best oracle PMI^2 among eligible neighbors, per eligible query.
  oracle::PairCounts pc{&raw};
  std::map<MovieId, std::map<MovieId, double>> pmi;
  std::map<MovieId, double> tenth;
  for (MovieId a : eligible) {
    std::vector<double> vals;
    for (MovieId b : eligible) {
      if (a == b || pc.pair(a, b) == 0) continue;
      pmi[a][b] = oracle::pmi2(raw, a, b);
      vals.push_back(pmi[a][b]);
    }
    std::sort(vals.rbegin(), vals.rend());
    tenth[a] = vals.size() >= 10 ? vals[9] : (vals.empty() ? 0.0 : vals.back());
  }
  auto in_top10 = [&](MovieId q, MovieId m) {
    auto it = pmi[q].find(m);
    return it != pmi[q].end() && it->second >= tenth[q] - 1e-9;
  };
  std::map<MovieId, std::set<std::string>> tags;
  for (const auto& r : d.tag_relevances) {
    if (r.relevance > 0.8) tags[r.movie_id].insert(r.tag);
  }
  std::map<std::string, const Review*> reviews;
  for (const auto& r : d.reviews) reviews[r.review_id] = &r;

  std::map<ProbeFamily, std::size_t> n;
  for (auto f : {ProbeFamily::recommendation, ProbeFamily::attribute, ProbeFamily::combination,
                 ProbeFamily::description}) {
    for (const auto& p : gen_probes(store, f, {}).cases) {
      ++n[f];
      const auto& md = p.metadata;
      const std::string id = std::string(family_name(f)) + " #" + std::to_string(n[f]);
      c.expect(top.count(md.negative_movie) == 1, id + " negative in top decile");
      c.expect(md.negative_movie != md.positive_movie, id + " negative differs");
      if (f == ProbeFamily::recommendation) {
        c.expect(md.query_movie && in_top10(*md.query_movie, md.positive_movie), id + " positive in top-10");
        c.expect(md.query_movie && !in_top10(*md.query_movie, md.negative_movie), id + " negative outside top-10");
      }
      if (f == ProbeFamily::attribute || f == ProbeFamily::combination) {
        c.expect(md.tag && tags[md.positive_movie].count(*md.tag), id + " positive has the tag");
        c.expect(md.tag && !tags[md.negative_movie].count(*md.tag), id + " negative lacks the tag");
      }
      if (f == ProbeFamily::combination) {
        c.expect(md.query_movie && in_top10(*md.query_movie, md.positive_movie), id + " positive related");
      }
      if (f == ProbeFamily::description) {
        const Review* r = md.review_id ? reviews[*md.review_id] : nullptr;
        c.expect(r != nullptr, id + " review exists");
        if (r) {
          const auto sentences = text::split_sentences(r->text);
          std::string first;
          for (std::size_t i = 0; i < sentences.size() && i < 4; ++i) {
            first += (first.empty() ? "" : " ") + sentences[i];
          }
          c.expect(text::to_lower(first) == p.targets.at(0), id + " target is the first 4 sentences");
        }
      }
      c.expect(audit_probe(p, store, {}).empty(), id + " library audit");
    }
  }
  for (const auto& [f, k] : n) c.note(std::string(family_name(f)) + " " + std::to_string(k));
  return c.verdict();
}

double family_score(const std::vector<ProbeCase>& probes, CompositeWeights w, ProbeFamily f) {
  CompositeScorer s(fixture::planted_store(), w);
  return run_probe_suite(probes, s).families.at(f).score();
}

const std::vector<ProbeCase>& family_probes(ProbeFamily f) {
  static std::map<ProbeFamily, std::vector<ProbeCase>> cache;
  auto it = cache.find(f);
  if (it == cache.end()) it = cache.emplace(f, gen_probes(fixture::planted_store(), f, {}).cases).first;
  return it->second;
}

Verdict directional() {
  Checks c;
  const auto& rec = family_probes(ProbeFamily::recommendation);
  const auto& attr = family_probes(ProbeFamily::attribute);
  CompositeScorer relation(fixture::planted_store(), {1, 0, 0});
  const auto r = run_probe_suite(rec, relation).families.at(ProbeFamily::recommendation);
  c.expect(r.score() >= 0.9, "relation rec " + fmt(r.score()));

  CompositeScorer pop(fixture::planted_store(), {0, 0, 1});
  const auto p = run_probe_suite(rec, pop).families.at(ProbeFamily::recommendation);
  const double tie_share = p.scored() ? static_cast<double>(p.ties) / static_cast<double>(p.scored()) : 0.0;
  c.expect(p.score() <= 0.5 + tie_share, "popularity rec " + fmt(p.score()));

  const double attr_rel = family_score(attr, {1, 0, 0}, ProbeFamily::attribute);
  const double attr_tag = family_score(attr, {1, 1, 0}, ProbeFamily::attribute);
  c.expect(attr_tag > attr_rel, "attr " + fmt(attr_rel) + " -> " + fmt(attr_tag));
  c.note("rec relation " + fmt(r.score()) + ", rec popularity " + fmt(p.score()) + " (ties " + fmt(tie_share) +
         "), attr relation " + fmt(attr_rel) + " -> with tags " + fmt(attr_tag));
  return c.verdict();
}

Verdict combination_synergy() {
  Checks c;
  const auto& combo = family_probes(ProbeFamily::combination);
  const double both = family_score(combo, {1, 1, 0}, ProbeFamily::combination);
  const double rel = family_score(combo, {1, 0, 0}, ProbeFamily::combination);
  const double tag = family_score(combo, {0, 1, 0}, ProbeFamily::combination);
  const double pri = family_score(combo, {0, 0, 1}, ProbeFamily::combination);
  c.expect(both >= rel, "vs relation");
  c.expect(both >= tag, "vs tag");
  c.expect(both >= pri, "vs prior");
  c.note("both " + fmt(both) + ", relation " + fmt(rel) + ", tag " + fmt(tag) + ", prior " + fmt(pri));
  return c.verdict();
}

Verdict mf_checks() {
  Checks c;
  MfHyperparameters hp;
  hp.dim = 4;
  hp.init_scale = 0.5;
  MfModel model(hp, {1, 2, 3, 4, 5}, {10, 20, 30, 40, 50});
  std::vector<MfSample> samples;
  for (std::size_t u = 0; u < 5; ++u) {
    for (std::size_t i = 0; i < 5; ++i) samples.push_back({u, i, (u * 3 + i) % 4 == 0 ? 1.0 : 0.0});
  }
  const double reg = 0.01, h = 1e-5;
  const auto grad = mf_gradient(model, samples, reg);
  double worst = 0.0;
  std::size_t k = 0;
  for (auto* block : {&model.user_factors(), &model.item_factors()}) {
    for (double& x : *block) {
      const double keep = x;
      x = keep + h;
      const double up = mf_loss(model, samples, reg);
      x = keep - h;
      const double down = mf_loss(model, samples, reg);
      x = keep;
      const double fd = (up - down) / (2 * h);
      worst = std::max(worst, std::abs(fd - grad[k]) / std::max({std::abs(fd), std::abs(grad[k]), 1e-6}));
      ++k;
    }
  }
  c.expect(worst < 1e-4, "gradient relative error " + fmt_e(worst));

  // Users of block b like exactly the items of block b.
  std::vector<Interaction> liked;
  const int blocks = 4, users = 12, items = 6;
  for (int b = 0; b < blocks; ++b) {
    for (int u = 0; u < users; ++u) {
      for (int i = 0; i < items; ++i) liked.push_back({b * users + u + 1, b * items + i + 1});
    }
  }
  MfHyperparameters train;
  train.dim = 8;
  train.epochs = 40;
  const auto trained = train_mf(liked, train);
  std::size_t correct = 0, total = 0;
  const int n = blocks * items;
  for (MovieId q = 1; q <= n; ++q) {
    for (MovieId same = 1; same <= n; ++same) {
      if (same == q || (same - 1) / items != (q - 1) / items) continue;
      for (MovieId other = 1; other <= n; ++other) {
        if ((other - 1) / items == (q - 1) / items) continue;
        ++total;
        correct += mf_pair_decision(q, same, other, trained) == 1;
      }
    }
  }
  const double acc = static_cast<double>(correct) / static_cast<double>(total);
  c.expect(acc >= 0.9, "block accuracy " + fmt(acc));
  c.note("gradient error " + fmt_e(worst) + ", block accuracy " + fmt(acc));
  return c.verdict();
}

Verdict bleu_checks() {
  Checks c;
  const std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> cases = {
      {{"the cat sat on the mat"}, {"the cat is on the mat"}},
      {{"there is a cat on the mat", "a quick brown fox jumps over the lazy dog"},
       {"there is a cat on the mat today", "the quick brown fox jumped over the lazy dog"}},
      {{"have you seen __unk__ ? it is great"}, {"have you seen __unk__ ? it is really great"}},
      {{"i think you would like it a lot", "sure thing , enjoy the movie tonight"},
       {"i think you will like it", "sure , enjoy the movie tonight"}},
      {{"one two three four five six", "seven eight nine ten eleven", "a b c d e"},
       {"one two three four five six seven", "seven eight nine ten", "a b c d e f"}}};
  double worst = 0.0;
  for (const auto& [cand, ref] : cases) worst = std::max(worst, std::abs(bleu(cand, ref) - oracle::bleu(cand, ref)));
  c.expect(worst <= 1e-6, "oracle difference " + fmt_e(worst));
  c.expect(std::abs(bleu(cases[1].second, cases[1].second) - 100.0) <= 1e-9, "bleu(x, x)");
  const double hand = bleu({"a a a"}, {"a"}, 1);
  c.expect(std::abs(hand - 100.0 / 3.0) <= 1e-9, "a a a / a = " + fmt(hand, 10));

  const std::string text = "@ heat (1995) @ or @ alien @? maybe @ up (2009) @ and @ x @";
  const auto masked = mask_titles(text);
  std::size_t unk = 0;
  for (auto pos = masked.find(kUnknownToken); pos != std::string::npos; pos = masked.find(kUnknownToken, pos + 1)) {
    ++unk;
  }
  c.expect(unk == text::find_title_spans(text).size() && unk == 4, "masked " + std::to_string(unk) + " of 4");
  c.expect(masked.find('@') == std::string::npos, "no delimiter left");
  c.note("oracle difference " + fmt_e(worst) + ", hand BLEU-1 " + fmt(hand, 10));
  return c.verdict();
}

Verdict recall_check() {
  Checks c;
  std::vector<DialogueTurn> ref = {{"c1", 1, "have you seen @ a (1990) @ or @ b (1991) @ ?"},
                                   {"c2", 1, "try @ c (1992) @"},
                                   {"c2", 3, "or @ d (1993) @"}};
  std::vector<DialogueTurn> gen = {{"c1", 1, "@ a (1990) @ @ x @ @ y @ @ z @"},
                                   {"c2", 1, "@ c (1992) @ @ d (1993) @ @ a (1990) @"},
                                   {"c2", 3, "@ q @ @ r @ @ s @"}};
  const auto r = recall_end_to_end(gen, ref);
  c.expect(r.generated == 10 && r.matched == 3, std::to_string(r.matched) + "/" + std::to_string(r.generated));
  c.expect(r.percentage == 30.0, "recall " + fmt(r.percentage));
  c.note("recall " + fmt(r.percentage, 2) + "%");
  return c.verdict();
}

Verdict determinism() {
  Checks c;
  const auto& store = fixture::planted_store();
  const auto& d = fixture::planted_data();
  fixture::TempDir dir;

  std::map<Task, std::vector<TrainingExample>> corpora;
  for (const auto& conv : d.conversations) {
    for (auto& e : corpus::build_redial_examples(conv)) corpora[Task::redial].push_back(std::move(e));
  }
  corpora[Task::sequence] = corpus::build_sequence_examples(d.ratings, store.catalog);
  corpora[Task::tags] = corpus::build_tag_examples(store.tags, store.catalog, 5);
  corpora[Task::review] = corpus::build_review_examples(d.reviews, store.catalog);
  const auto a = corpus::mix_and_export(corpora, dir / "ca", 5);
  const auto b = corpus::mix_and_export(corpora, dir / "cb", 5);
  for (const auto& name : {"mixed.jsonl", "manifest.json", "redial_conversation.jsonl", "movielens_tags.jsonl"}) {
    c.expect(fixture::slurp(dir / "ca" / name) == fixture::slurp(dir / "cb" / name), std::string("corpus ") + name);
  }
  for (const auto& [task, path] : a.task_files) {
    c.expect(corpus::load_examples(path) == corpora[task], "reload " + path.filename().string());
  }

  std::vector<ProbeCase> probes;
  for (auto f : {ProbeFamily::recommendation, ProbeFamily::attribute, ProbeFamily::combination,
                 ProbeFamily::description}) {
    for (auto& p : gen_probes(store, f, {}).cases) probes.push_back(std::move(p));
  }
  std::vector<ProbeCase> again;
  for (auto f : {ProbeFamily::recommendation, ProbeFamily::attribute, ProbeFamily::combination,
                 ProbeFamily::description}) {
    for (auto& p : gen_probes(store, f, {}).cases) again.push_back(std::move(p));
  }
  write_probes(dir / "pa.jsonl", probes);
  write_probes(dir / "pb.jsonl", again);
  c.expect(fixture::slurp(dir / "pa.jsonl") == fixture::slurp(dir / "pb.jsonl"), "probe files");
  c.expect(read_probes(dir / "pa.jsonl") == probes, "probe reload");

  ::setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
  auto report = [&] {
    CompositeScorer s(store);
    EvalReport r;
    r.backend_id = s.id();
    r.seed = 13;
    r.timestamp = timestamp_now();
    r.probes = run_probe_suite(probes, s).families;
    return r;
  };
  const auto ra = report(), rb = report();
  ::unsetenv("SOURCE_DATE_EPOCH");
  write_report(dir / "ra.json", ra);
  write_report(dir / "rb.json", rb);
  c.expect(fixture::slurp(dir / "ra.json") == fixture::slurp(dir / "rb.json"), "report files");
  c.expect(read_report(dir / "ra.json").to_json() == ra.to_json(), "report reload");

  save_store(store, dir / "sa");
  const auto loaded = load_store(dir / "sa");
  save_store(loaded, dir / "sb");
  for (const auto& entry : std::filesystem::directory_iterator(dir / "sa")) {
    const auto name = entry.path().filename();
    c.expect(fixture::slurp(entry.path()) == fixture::slurp(dir / "sb" / name), "store " + name.string());
  }
  c.expect(loaded.windows == store.windows, "store windows");
  c.expect(loaded.rankings.lists() == store.rankings.lists(), "store rankings");
  c.note(std::to_string(a.manifest.mixed_count) + " examples, " + std::to_string(probes.size()) + " probes");
  return c.verdict();
}

/// Remote stub: batch value for input "q<i>" is -(i / 4), "-inf" for i = 7.
struct Stub {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  Stub() {
    server.Post("/v1/score_batch", [](const httplib::Request& req, httplib::Response& res) {
      const auto body = Json::parse(req.body);
      Json out = Json::array();
      for (const auto& p : body.at("pairs")) {
        const int i = std::stoi(p.at("input").get<std::string>().substr(1));
        out.push_back(i == 7 ? Json("-inf") : Json(-static_cast<double>(i) / 4.0));
      }
      res.set_content(Json{{"log_likelihoods", out}}.dump(), "application/json");
    });
    server.Post("/v1/score", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"log_likelihood": -3.25})", "application/json");
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~Stub() {
    server.stop();
    thread.join();
  }
};

Verdict service_checks() {
  Checks c;
  fixture::TempDir dir;
  save_store(fixture::planted_store(), dir / "store");
  ServiceConfig cfg;
  cfg.store = dir / "store";
  cfg.port = 0;
  Service service(cfg);
  const int port = service.bind();
  std::thread runner([&] { service.listen(); });
  for (int i = 0; i < 400 && !service.running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));

  const auto& store = service.store();
  const auto& eligible = store.popularity.eligible_movies();
  constexpr int kClients = 32;
  std::vector<int> status(kClients, 0);
  std::vector<std::string> bodies(kClients);
  std::vector<std::thread> clients;
  for (int i = 0; i < kClients; ++i) {
    clients.emplace_back([&, i] {
      httplib::Client cli("127.0.0.1", port);
      cli.set_read_timeout(60, 0);
      const Json body{{"messages", {{{"role", "user"},
                                     {"text", "i liked @ " + store.catalog.title(eligible[i % eligible.size()]) + " @"}}}}};
      if (auto res = cli.Post("/v1/chat", body.dump(), "application/json")) {
        status[i] = res->status;
        bodies[i] = res->body;
      }
    });
  }
  for (auto& t : clients) t.join();
  service.stop();
  runner.join();
  int ok = 0;
  for (int i = 0; i < kClients; ++i) {
    bool valid = status[i] == 200;
    if (valid) {
      const auto j = Json::parse(bodies[i], nullptr, false);
      valid = !j.is_discarded() && j.contains("reply") && j.at("reply").is_string() &&
              j.contains("recommendations") && j.at("recommendations").is_array() &&
              !j.at("recommendations").empty();
    }
    c.expect(valid, "client " + std::to_string(i));
    ok += valid;
  }

  Stub stub;
  RemoteEndpoint ep;
  ep.port = stub.port;
  ep.batch_size = 7;
  ep.max_in_flight = 4;
  RemoteScorer remote(ep);
  std::vector<ScorePair> pairs;
  for (int i = 0; i < 100; ++i) pairs.push_back({"q" + std::to_string(i), "t"});
  const auto got = remote.score_batch(pairs);
  c.expect(got.size() == pairs.size(), "batch size");
  std::size_t exact = 0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    const double want = i == 7 ? -std::numeric_limits<double>::infinity() : -static_cast<double>(i) / 4.0;
    const bool same = got[i].result && got[i].result->log_likelihood == want;
    c.expect(same, "pair " + std::to_string(i));
    exact += same;
  }
  c.expect(remote.score("Q", "T").log_likelihood == -3.25, "single score");
  c.note(std::to_string(ok) + "/32 chats ok, " + std::to_string(exact) + "/100 remote values exact and in order");
  return c.verdict();
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"corpus cardinality", corpus_cardinality},
      {"sequence task", sequence_task},
      {"tag task", tag_task},
      {"review task", review_task},
      {"pmi2 oracle agreement", pmi2_agreement},
      {"probe constraint audit", probe_audit},
      {"directional probe scores", directional},
      {"combination synergy", combination_synergy},
      {"mf gradient and block accuracy", mf_checks},
      {"bleu", bleu_checks},
      {"end-to-end recall", recall_check},
      {"determinism and round trip", determinism},
      {"service concurrency and remote scorer", service_checks},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s  %-40s %s\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str());
    std::fflush(stdout);
    failed += !v.pass;
  }
  std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
  return failed == 0 ? 0 : 1;
}
