// SPDX-License-Identifier: Apache-2.0
#include "crs/eval.hpp"

#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "crs/corpus.hpp"
#include "crs/error.hpp"
#include "crs/text.hpp"

namespace crs {

std::string mask_titles(std::string_view s) {
  const auto spans = text::find_title_spans(s);
  std::string out;
  std::size_t pos = 0;
  for (const auto& span : spans) {
    out.append(s.substr(pos, span.open - pos));
    out.append(kUnknownToken);
    pos = span.close + 1;
  }
  out.append(s.substr(pos));
  return out;
}

namespace {

using Ngram = std::vector<std::string>;

std::map<Ngram, std::size_t> ngram_counts(const std::vector<std::string>& tokens, std::size_t n) {
  std::map<Ngram, std::size_t> out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++out[Ngram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return out;
}

}  // namespace

double bleu(const std::vector<std::string>& candidates, const std::vector<std::string>& references,
            std::size_t max_order) {
  if (candidates.empty()) throw Error("bleu: empty corpus");
  if (candidates.size() != references.size()) throw Error("bleu: candidate and reference counts differ");
  if (max_order == 0) throw Error("bleu: max_order must be >= 1");
  std::vector<double> matched(max_order, 0.0), total(max_order, 0.0);
  double cand_len = 0, ref_len = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto c = text::split_whitespace(candidates[i]);
    const auto r = text::split_whitespace(references[i]);
    cand_len += static_cast<double>(c.size());
    ref_len += static_cast<double>(r.size());
    for (std::size_t n = 1; n <= max_order; ++n) {
      const auto cc = ngram_counts(c, n);
      const auto rc = ngram_counts(r, n);
      for (const auto& [g, count] : cc) {
        auto it = rc.find(g);
        matched[n - 1] += static_cast<double>(std::min(count, it == rc.end() ? 0 : it->second));
        total[n - 1] += static_cast<double>(count);
      }
    }
  }
  double log_sum = 0.0;
  for (std::size_t n = 0; n < max_order; ++n) {
    if (matched[n] == 0 || total[n] == 0) return 0.0;
    log_sum += std::log(matched[n] / total[n]);
  }
  const double bp = cand_len > ref_len ? 1.0 : std::exp(1.0 - ref_len / cand_len);
  return 100.0 * bp * std::exp(log_sum / static_cast<double>(max_order));
}

RecallResult recall_end_to_end(const std::vector<DialogueTurn>& generated,
                               const std::vector<DialogueTurn>& reference) {
  std::map<std::string, std::set<std::string>> human;
  std::set<std::pair<std::string, std::size_t>> reference_turns;
  for (const auto& t : reference) {
    reference_turns.insert({t.conversation_id, t.turn});
    auto& titles = human[t.conversation_id];
    for (const auto& span : text::find_title_spans(t.text)) titles.insert(text::to_lower(span.title));
  }
  RecallResult r;
  for (const auto& t : generated) {
    if (!reference_turns.count({t.conversation_id, t.turn})) {
      throw Error("generated turn " + std::to_string(t.turn) + " of conversation " + t.conversation_id +
                  " has no reference turn");
    }
    const auto& titles = human[t.conversation_id];
    for (const auto& span : text::find_title_spans(t.text)) {
      ++r.generated;
      if (titles.count(text::to_lower(span.title))) ++r.matched;
    }
  }
  r.zero_denominator = r.generated == 0;
  r.percentage = r.zero_denominator ? 0.0 : 100.0 * static_cast<double>(r.matched) / static_cast<double>(r.generated);
  return r;
}

double FamilyScore::score() const {
  const auto n = scored();
  return n == 0 ? 0.0 : static_cast<double>(successes) / static_cast<double>(n);
}

namespace {

void tally(FamilyScore& f, ProbeOutcome::Kind k) {
  switch (k) {
    case ProbeOutcome::success: ++f.successes; break;
    case ProbeOutcome::failure: ++f.failures; break;
    case ProbeOutcome::tie: ++f.ties; break;
    case ProbeOutcome::unscored: ++f.unscored; break;
  }
}

ProbeOutcome::Kind compare(double pos, double neg) {
  if (pos > neg) return ProbeOutcome::success;
  if (pos < neg) return ProbeOutcome::failure;
  return ProbeOutcome::tie;
}

}  // namespace

ProbeSuiteResult run_probe_suite(const std::vector<ProbeCase>& probes, const Scorer& scorer,
                                 const ProbeSuiteOptions& options) {
  if (probes.empty()) throw Error("run_probe_suite: empty probe list");
  const std::string label(task_label(Task::redial));
  auto prefixed = [&](const std::string& s) { return options.prefix_task_label ? label + " " + s : s; };

  std::vector<ScorePair> pairs;
  pairs.reserve(probes.size() * 2);
  for (const auto& p : probes) {
    const std::size_t pos = p.positive_index, neg = 1 - p.positive_index;
    if (p.family == ProbeFamily::description) {
      pairs.push_back({prefixed(p.inputs.at(pos)), p.targets.at(0)});
      pairs.push_back({prefixed(p.inputs.at(neg)), p.targets.at(0)});
    } else {
      pairs.push_back({prefixed(p.inputs.at(0)), p.targets.at(pos)});
      pairs.push_back({prefixed(p.inputs.at(0)), p.targets.at(neg)});
    }
  }
  const auto scores = scorer.score_batch(pairs, options.max_threads);

  ProbeSuiteResult result;
  result.outcomes.resize(probes.size());
  for (std::size_t i = 0; i < probes.size(); ++i) {
    auto& o = result.outcomes[i];
    const auto& a = scores[2 * i];
    const auto& b = scores[2 * i + 1];
    if (!a.result || !b.result) {
      o.kind = ProbeOutcome::unscored;
      o.error = !a.result ? a.error : b.error;
    } else {
      o.positive = a.result->log_likelihood;
      o.negative = b.result->log_likelihood;
      o.kind = compare(o.positive, o.negative);
    }
    tally(result.families[probes[i].family], o.kind);
  }
  return result;
}

FamilyScore mf_probe_accuracy(const std::vector<ProbeCase>& probes, const MfModel& model) {
  FamilyScore f;
  for (const auto& p : probes) {
    if (p.family != ProbeFamily::recommendation || !p.metadata.query_movie) continue;
    const MovieId q = *p.metadata.query_movie;
    const MovieId pos = p.metadata.positive_movie, neg = p.metadata.negative_movie;
    if (!model.has_item(q) || !model.has_item(pos) || !model.has_item(neg)) {
      ++f.unscored;
      continue;
    }
    const double sp = model.similarity(q, pos), sn = model.similarity(q, neg);
    if (sp == sn) {
      ++f.ties;
    } else if (mf_pair_decision(q, pos, neg, model) == 1) {
      ++f.successes;
    } else {
      ++f.failures;
    }
  }
  return f;
}

namespace {

Json family_json(const FamilyScore& f) {
  return {{"score", f.score()},       {"successes", f.successes}, {"failures", f.failures},
          {"ties", f.ties},           {"scored", f.scored()},     {"unscored", f.unscored}};
}

}  // namespace

Json EvalReport::to_json() const {
  Json j = {{"backend_id", backend_id}, {"seed", seed}, {"timestamp", timestamp}};
  j["bleu"] = bleu ? Json(*bleu) : Json(nullptr);
  if (recall) {
    j["recall_end_to_end"] = {{"percentage", recall->percentage},
                              {"matched", recall->matched},
                              {"generated", recall->generated},
                              {"zero_denominator", recall->zero_denominator}};
  } else {
    j["recall_end_to_end"] = nullptr;
  }
  Json fams = Json::object();
  for (const auto& [family, score] : probes) fams[std::string(family_name(family))] = family_json(score);
  j["probes"] = fams;
  return j;
}

EvalReport EvalReport::from_json(const Json& j) {
  EvalReport r;
  r.backend_id = j.at("backend_id").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.timestamp = j.at("timestamp").get<std::string>();
  if (j.contains("bleu") && !j.at("bleu").is_null()) r.bleu = j.at("bleu").get<double>();
  if (j.contains("recall_end_to_end") && !j.at("recall_end_to_end").is_null()) {
    const auto& rc = j.at("recall_end_to_end");
    r.recall = RecallResult{rc.at("percentage").get<double>(), rc.at("matched").get<std::size_t>(),
                            rc.at("generated").get<std::size_t>(), rc.at("zero_denominator").get<bool>()};
  }
  for (const auto& [name, f] : j.at("probes").items()) {
    auto family = parse_family(name);
    if (!family) throw ParseError("unknown probe family in report: " + name);
    FamilyScore s;
    s.successes = f.at("successes").get<std::size_t>();
    s.failures = f.at("failures").get<std::size_t>();
    s.ties = f.at("ties").get<std::size_t>();
    s.unscored = f.at("unscored").get<std::size_t>();
    if (f.at("scored").get<std::size_t>() != s.scored()) throw ParseError("report counts do not add up for " + name);
    r.probes[*family] = s;
  }
  return r;
}

std::string format_summary(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-28s %10s %10s %11s %10s %8s %8s\n", "Backend", "Rec Probe", "Attr Probe",
                "Combo Probe", "Desc Probe", "BLEU", "Recall");
  out << line << std::string(90, '-') << "\n";
  for (const auto& r : reports) {
    auto cell = [&](ProbeFamily f) {
      auto it = r.probes.find(f);
      if (it == r.probes.end() || it->second.scored() == 0) return std::string("-");
      char b[32];
      std::snprintf(b, sizeof b, "%.4f", it->second.score());
      return std::string(b);
    };
    auto num = [](const std::optional<double>& v) {
      if (!v) return std::string("-");
      char b[32];
      std::snprintf(b, sizeof b, "%.2f", *v);
      return std::string(b);
    };
    std::string id = r.backend_id.size() > 28 ? r.backend_id.substr(0, 28) : r.backend_id;
    std::snprintf(line, sizeof line, "%-28s %10s %10s %11s %10s %8s %8s\n", id.c_str(),
                  cell(ProbeFamily::recommendation).c_str(), cell(ProbeFamily::attribute).c_str(),
                  cell(ProbeFamily::combination).c_str(), cell(ProbeFamily::description).c_str(),
                  num(r.bleu).c_str(),
                  num(r.recall ? std::optional<double>(r.recall->percentage) : std::nullopt).c_str());
    out << line;
  }
  return out.str();
}

std::string timestamp_now() {
  std::time_t t = std::time(nullptr);
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) {
    try {
      t = static_cast<std::time_t>(std::stoll(env));
    } catch (const std::exception&) {
      throw Error("SOURCE_DATE_EPOCH is not an integer");
    }
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_report(const std::filesystem::path& path, const EvalReport& report) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write report " + path.string());
  out << report.to_json().dump(2) << "\n";
}

EvalReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open report " + path.string());
  return EvalReport::from_json(Json::parse(in));
}

}  // namespace crs
