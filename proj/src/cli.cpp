// SPDX-License-Identifier: Apache-2.0
#include "crs/cli.hpp"

#include <csignal>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "crs/chat.hpp"
#include "crs/corpus.hpp"
#include "crs/error.hpp"
#include "crs/eval.hpp"
#include "crs/mf.hpp"
#include "crs/probes.hpp"
#include "crs/scoring.hpp"
#include "crs/service.hpp"
#include "crs/store.hpp"
#include "crs/synthetic.hpp"
#include "crs/text.hpp"

namespace crs::cli {
namespace {

namespace fs = std::filesystem;

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open " + p.string());
  return in;
}

template <typename T>
void take(Parsed<T>& parsed, std::vector<T>& into, const fs::path& file, RawData& raw) {
  for (const auto& e : parsed.errors) raw.problems.push_back(file.string() + ":" + std::to_string(e.line) + ": " + e.message);
  into = std::move(parsed.records);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto t = std::string(text::trim(item));
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

CompositeWeights parse_weights(const std::string& s) {
  const auto parts = split_list(s);
  if (parts.size() != 3) throw Error("--weights needs three comma-separated numbers");
  try {
    return {std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2])};
  } catch (const std::exception&) {
    throw Error("--weights needs three comma-separated numbers");
  }
}

std::vector<std::string> read_lines(const fs::path& p) {
  auto in = open_in(p);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

std::vector<DialogueTurn> read_turns(const fs::path& p) {
  std::vector<DialogueTurn> out;
  for (const auto& j : jsonl::read_file(p)) {
    out.push_back({j.at("conversation_id").is_string() ? j.at("conversation_id").get<std::string>()
                                                        : j.at("conversation_id").dump(),
                   j.at("turn").get<std::size_t>(), j.at("text").get<std::string>()});
  }
  return out;
}

void print_recommendations(std::ostream& out, const ChatReply& reply) {
  out << reply.reply << "\n";
  for (std::size_t i = 0; i < reply.recommendations.size(); ++i) {
    const auto& r = reply.recommendations[i];
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", r.score);
    out << "  " << i + 1 << ". " << r.title << "  [" << evidence_name(r.evidence) << " " << buf << "]\n";
  }
}

Service* g_service = nullptr;
extern "C" void on_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

RawData load_data_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("data directory not found: " + dir.string());
  RawData raw;
  if (auto p = dir / "movies.csv"; fs::exists(p)) {
    auto in = open_in(p);
    auto parsed = ingest::parse_movies(in);
    take(parsed, raw.movies, p, raw);
    raw.present.push_back("movies");
  }
  if (auto p = dir / "ratings.csv"; fs::exists(p)) {
    auto in = open_in(p);
    auto parsed = ingest::parse_ratings(in);
    take(parsed, raw.ratings, p, raw);
    raw.present.push_back("ratings");
  }
  if (auto p = dir / "genome-scores.csv"; fs::exists(p)) {
    auto scores = open_in(p);
    auto names = open_in(dir / "genome-tags.csv");
    auto parsed = ingest::parse_tag_genome(scores, names);
    take(parsed, raw.tag_relevances, p, raw);
    raw.present.push_back("genome");
  }
  if (auto p = dir / "reviews.jsonl"; fs::exists(p)) {
    auto in = open_in(p);
    auto parsed = ingest::parse_reviews(in);
    take(parsed, raw.reviews, p, raw);
    raw.present.push_back("reviews");
  }
  if (auto p = dir / "redial.jsonl"; fs::exists(p)) {
    auto in = open_in(p);
    auto parsed = ingest::parse_redial(in);
    take(parsed, raw.conversations, p, raw);
    raw.present.push_back("redial");
  }
  return raw;
}

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"conversational movie recommender workbench", "crs"};
  app.require_subcommand(1);
  app.fallthrough(false);

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "Validate one raw dataset and write normalized JSONL");
  std::string dataset;
  std::string ingest_in, ingest_out, ingest_tags;
  bool strict = false;
  ingest_cmd->add_option("dataset", dataset, "redial | ratings | movies | genome | reviews")
      ->required()
      ->check(CLI::IsMember({"redial", "ratings", "movies", "genome", "reviews"}));
  ingest_cmd->add_option("--in", ingest_in, "Input file")->required();
  ingest_cmd->add_option("--out", ingest_out, "Output JSONL")->required();
  ingest_cmd->add_option("--tags", ingest_tags, "genome-tags.csv (genome only)");
  ingest_cmd->add_flag("--strict", strict, "Exit nonzero when any record is rejected");

  // corpus build
  auto* corpus_cmd = app.add_subcommand("corpus", "Training corpora");
  corpus_cmd->require_subcommand(1);
  auto* corpus_build = corpus_cmd->add_subcommand("build", "Build task corpora, the mixed file and a manifest");
  std::string tasks = "all", data_dir, corpus_out;
  std::uint64_t seed = 13;
  corpus_build->add_option("--tasks", tasks, "Comma list of redial,sequence,tags,review or all");
  corpus_build->add_option("--seed", seed, "Sampling and mixing seed");
  corpus_build->add_option("--data", data_dir, "Raw data directory")->required();
  corpus_build->add_option("--out", corpus_out, "Output directory")->required();

  // stats build
  auto* stats_cmd = app.add_subcommand("stats", "Statistics store");
  stats_cmd->require_subcommand(1);
  auto* stats_build = stats_cmd->add_subcommand("build", "Build co-occurrence, PMI2, popularity and tag tables");
  std::string stats_data, stats_out;
  stats_build->add_option("--data", stats_data, "Raw data directory")->required();
  stats_build->add_option("--out", stats_out, "Store directory")->required();

  // mf train
  auto* mf_cmd = app.add_subcommand("mf", "Matrix factorization baseline");
  mf_cmd->require_subcommand(1);
  auto* mf_train = mf_cmd->add_subcommand("train", "Train item factors and save them into the store");
  MfHyperparameters hp;
  std::string mf_store;
  mf_train->add_option("--store", mf_store, "Store directory")->required();
  mf_train->add_option("--dim", hp.dim, "Factor dimension");
  mf_train->add_option("--epochs", hp.epochs, "SGD epochs");
  mf_train->add_option("--seed", hp.seed, "Initialization and sampling seed");
  mf_train->add_option("--lr", hp.learning_rate, "Learning rate");
  mf_train->add_option("--reg", hp.regularization, "L2 regularization");

  // probes gen
  auto* probes_cmd = app.add_subcommand("probes", "Probe sets");
  probes_cmd->require_subcommand(1);
  auto* probes_gen = probes_cmd->add_subcommand("gen", "Generate probe cases");
  std::string family = "all", probes_store, probes_out;
  ProbeOptions probe_options;
  probes_gen->add_option("--family", family, "rec | attr | combo | desc | all");
  probes_gen->add_option("--seed", probe_options.seed, "Negative sampling seed");
  probes_gen->add_option("--store", probes_store, "Store directory")->required();
  probes_gen->add_option("--out", probes_out, "Output JSONL")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Metrics");
  eval_cmd->require_subcommand(1);
  std::string report_path;
  auto* eval_bleu = eval_cmd->add_subcommand("bleu", "Title-masked corpus BLEU-4");
  std::string candidates_path, references_path;
  eval_bleu->add_option("--candidates", candidates_path, "One candidate per line")->required();
  eval_bleu->add_option("--references", references_path, "One reference per line")->required();
  eval_bleu->add_option("--report", report_path, "Write a JSON report");

  auto* eval_recall = eval_cmd->add_subcommand("recall", "End-to-end recall");
  std::string generated_path, reference_path;
  eval_recall->add_option("--generated", generated_path, "JSONL {conversation_id, turn, text}")->required();
  eval_recall->add_option("--reference", reference_path, "JSONL of human recommender turns")->required();
  eval_recall->add_option("--report", report_path, "Write a JSON report");

  auto* eval_probes = eval_cmd->add_subcommand("probes", "Probe-suite scores");
  std::string probes_path, eval_store, scorer_name = "composite", weights = "0.5,0.4,0.1";
  std::string endpoint = "http://127.0.0.1:8080";
  std::vector<std::string> ngram_train;
  std::size_t order = 3;
  double k = 0.1;
  int timeout_ms = 10000;
  bool with_mf = false, no_prefix = false;
  std::uint64_t eval_seed = 13;
  eval_probes->add_option("--probes", probes_path, "Probe JSONL")->required();
  eval_probes->add_option("--scorer", scorer_name, "composite | ngram | remote")
      ->check(CLI::IsMember({"composite", "ngram", "remote"}));
  eval_probes->add_option("--store", eval_store, "Store directory (composite, --mf)");
  eval_probes->add_option("--weights", weights, "Composite weights relation,tag,prior");
  eval_probes->add_option("--ngram-train", ngram_train, "Corpus JSONL files for the n-gram scorer");
  eval_probes->add_option("--order", order, "n-gram order");
  eval_probes->add_option("--k", k, "Add-k smoothing constant");
  eval_probes->add_option("--endpoint", endpoint, "Remote scorer base URL");
  eval_probes->add_option("--timeout-ms", timeout_ms, "Remote timeout");
  eval_probes->add_option("--seed", eval_seed, "Seed recorded in the report");
  eval_probes->add_flag("--mf", with_mf, "Also report the MF baseline on recommendation probes");
  eval_probes->add_flag("--no-task-prefix", no_prefix, "Score probe inputs without the dialogue task label");
  eval_probes->add_option("--report", report_path, "Write a JSON report");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "HTTP service");
  std::string serve_store, serve_config, serve_host;
  int port = -1;
  serve_cmd->add_option("--port", port, "Port (0 picks one)");
  serve_cmd->add_option("--store", serve_store, "Store directory");
  serve_cmd->add_option("--config", serve_config, "JSON config file");
  serve_cmd->add_option("--host", serve_host, "Bind address");

  // chat
  auto* chat_cmd = app.add_subcommand("chat", "Interactive terminal chat");
  std::string chat_store;
  chat_cmd->add_option("--store", chat_store, "Store directory")->required();

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Write a planted synthetic dataset");
  synth::Options synth_options;
  std::string synth_out;
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  synth_cmd->add_option("--seed", synth_options.seed, "Generator seed");
  synth_cmd->add_option("--users", synth_options.users, "Number of users");

  std::vector<std::string> argv_store{"crs"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code != 0 && e.get_name() != "CallForHelp") err << app.help();
    return code;
  }

  try {
    if (*ingest_cmd) {
      auto src = open_in(ingest_in);
      std::vector<Json> rows;
      std::vector<RecordIssue> errors, warnings;
      auto collect = [&](auto& parsed) {
        for (const auto& r : parsed.records) rows.push_back(ingest::to_json(r));
        errors = parsed.errors;
        warnings = parsed.warnings;
      };
      if (dataset == "redial") {
        auto p = ingest::parse_redial(src);
        collect(p);
      } else if (dataset == "ratings") {
        auto p = ingest::parse_ratings(src);
        collect(p);
      } else if (dataset == "movies") {
        auto p = ingest::parse_movies(src);
        collect(p);
      } else if (dataset == "genome") {
        fs::path tags_path = ingest_tags.empty() ? fs::path(ingest_in).parent_path() / "genome-tags.csv"
                                                 : fs::path(ingest_tags);
        auto names = open_in(tags_path);
        auto p = ingest::parse_tag_genome(src, names);
        collect(p);
      } else {
        auto p = ingest::parse_reviews(src);
        collect(p);
      }
      jsonl::write_file(ingest_out, rows);
      for (const auto& e : errors) err << ingest_in << ":" << e.line << ": error: " << e.message << "\n";
      for (const auto& w : warnings) err << ingest_in << ":" << w.line << ": warning: " << w.message << "\n";
      out << dataset << ": " << rows.size() << " records, " << errors.size() << " rejected, " << warnings.size()
          << " skipped\n";
      return strict && !errors.empty() ? 1 : 0;
    }

    if (*corpus_build) {
      std::vector<Task> selected;
      if (tasks == "all") {
        selected.assign(kAllTasks.begin(), kAllTasks.end());
      } else {
        for (const auto& name : split_list(tasks)) {
          auto t = parse_task_name(name);
          if (!t) throw Error("unknown task \"" + name + "\"");
          selected.push_back(*t);
        }
      }
      const RawData raw = load_data_dir(data_dir);
      for (const auto& p : raw.problems) err << "warning: " << p << "\n";
      const Catalog catalog(raw.movies);
      std::map<Task, std::vector<TrainingExample>> corpora;
      auto need = [&](const char* what) {
        if (std::find(raw.present.begin(), raw.present.end(), what) == raw.present.end()) {
          throw Error(std::string("data directory lacks the ") + what + " file");
        }
      };
      for (Task t : selected) {
        auto& v = corpora[t];
        switch (t) {
          case Task::redial:
            need("redial");
            for (const auto& c : raw.conversations) {
              auto ex = corpus::build_redial_examples(c);
              v.insert(v.end(), ex.begin(), ex.end());
            }
            break;
          case Task::sequence:
            need("ratings");
            need("movies");
            v = corpus::build_sequence_examples(std::span<const RatingEvent>(raw.ratings), catalog);
            break;
          case Task::tags:
            need("genome");
            need("movies");
            v = corpus::build_tag_examples(TagIndex::build(raw.tag_relevances), catalog, seed);
            break;
          case Task::review:
            need("reviews");
            need("movies");
            v = corpus::build_review_examples(raw.reviews, catalog);
            break;
        }
      }
      const auto result = corpus::mix_and_export(corpora, corpus_out, seed);
      for (const auto& [task, count] : result.manifest.counts) out << task_label(task) << " " << count << "\n";
      out << "mixed " << result.manifest.mixed_count << "\n";
      return 0;
    }

    if (*stats_build) {
      const RawData raw = load_data_dir(stats_data);
      for (const auto& p : raw.problems) err << "warning: " << p << "\n";
      if (raw.movies.empty() || raw.ratings.empty()) throw Error("stats build needs movies.csv and ratings.csv");
      auto store = StatsStore::build(Catalog(raw.movies), raw.ratings, raw.tag_relevances, raw.reviews);
      save_store(store, stats_out);
      out << "windows " << store.windows.size() << ", pairs " << store.cooccurrence.distinct_pairs()
          << ", eligible " << store.popularity.eligible_movies().size() << ", top decile "
          << store.popularity.top_decile().size() << "\n";
      return 0;
    }

    if (*mf_train) {
      auto store = load_store(mf_store);
      const auto liked = interactions_from_windows(store.windows);
      auto model = train_mf(liked, hp);
      save_mf(model, mf_store);
      for (std::size_t e = 0; e < model.loss_history.size(); ++e) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "epoch %zu loss %.6f", e + 1, model.loss_history[e]);
        out << buf << "\n";
      }
      return 0;
    }

    if (*probes_gen) {
      const auto store = load_store(probes_store);
      std::vector<ProbeFamily> families;
      if (family == "all") {
        families.assign(std::begin(kAllFamilies), std::end(kAllFamilies));
      } else {
        auto f = parse_family(family);
        if (!f) throw Error("unknown probe family \"" + family + "\"");
        families.push_back(*f);
      }
      std::vector<ProbeCase> all;
      for (ProbeFamily f : families) {
        auto set = gen_probes(store, f, probe_options);
        out << family_name(f) << " " << set.cases.size() << " probes";
        if (set.skipped_no_negative) out << " (" << set.skipped_no_negative << " skipped: no valid negative)";
        out << "\n";
        all.insert(all.end(), set.cases.begin(), set.cases.end());
      }
      write_probes(probes_out, all);
      return 0;
    }

    if (*eval_bleu) {
      auto cands = read_lines(candidates_path);
      auto refs = read_lines(references_path);
      for (auto& c : cands) c = mask_titles(text::to_lower(c));
      for (auto& r : refs) r = mask_titles(text::to_lower(r));
      EvalReport report;
      report.backend_id = "file:" + fs::path(candidates_path).filename().string();
      report.timestamp = timestamp_now();
      report.bleu = bleu(cands, refs);
      char buf[64];
      std::snprintf(buf, sizeof buf, "BLEU %.4f", *report.bleu);
      out << buf << "\n";
      if (!report_path.empty()) write_report(report_path, report);
      return 0;
    }

    if (*eval_recall) {
      EvalReport report;
      report.backend_id = "file:" + fs::path(generated_path).filename().string();
      report.timestamp = timestamp_now();
      report.recall = recall_end_to_end(read_turns(generated_path), read_turns(reference_path));
      char buf[128];
      std::snprintf(buf, sizeof buf, "Recall %.4f%% (%zu/%zu)%s", report.recall->percentage, report.recall->matched,
                    report.recall->generated, report.recall->zero_denominator ? " [no generated mentions]" : "");
      out << buf << "\n";
      if (!report_path.empty()) write_report(report_path, report);
      return 0;
    }

    if (*eval_probes) {
      const auto probes = read_probes(probes_path);
      ScorerConfig config;
      config.backend = *parse_backend(scorer_name);
      config.weights = parse_weights(weights);
      config.order = order;
      config.k = k;
      for (const auto& f : ngram_train) config.ngram_training.emplace_back(f);
      config.endpoint = endpoint;
      config.timeout_ms = timeout_ms;
      std::optional<StatsStore> store;
      if (config.backend == Backend::composite || with_mf) {
        if (eval_store.empty()) throw Error("--store is required for the composite scorer and --mf");
        store = load_store(eval_store);
      }
      const auto scorer = make_scorer(config, store ? &*store : nullptr);
      ProbeSuiteOptions suite_options;
      suite_options.prefix_task_label = !no_prefix;
      const auto result = run_probe_suite(probes, *scorer, suite_options);
      std::vector<EvalReport> reports(1);
      reports[0].backend_id = scorer->id();
      reports[0].seed = eval_seed;
      reports[0].timestamp = timestamp_now();
      reports[0].probes = result.families;
      if (with_mf) {
        if (!store->mf) throw Error("store has no MF model; run `crs mf train` first");
        EvalReport mf;
        mf.backend_id = "mf-baseline";
        mf.seed = eval_seed;
        mf.timestamp = reports[0].timestamp;
        mf.probes[ProbeFamily::recommendation] = mf_probe_accuracy(probes, *store->mf);
        reports.push_back(mf);
      }
      out << format_summary(reports);
      std::size_t unscored = 0;
      for (const auto& [f, s] : result.families) unscored += s.unscored;
      if (unscored) err << unscored << " probes could not be scored\n";
      if (!report_path.empty()) write_report(report_path, reports[0]);
      return 0;
    }

    if (*serve_cmd) {
      ServiceConfig config = serve_config.empty() ? ServiceConfig{} : ServiceConfig::load(serve_config);
      if (!serve_store.empty()) config.store = serve_store;
      if (port >= 0) config.port = port;
      if (!serve_host.empty()) config.host = serve_host;
      Service service(config);
      const int bound = service.bind();
      out << "listening on " << config.host << ":" << bound << std::endl;
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      service.listen();
      g_service = nullptr;
      return 0;
    }

    if (*chat_cmd) {
      const auto store = load_store(chat_store);
      ChatPolicy policy(store);
      std::vector<ChatTurn> history;
      print_recommendations(out, policy.respond(history));
      std::string line;
      while (out << "> " << std::flush, std::getline(in, line)) {
        const auto t = std::string(text::trim(line));
        if (t.empty()) continue;
        if (t == "/quit" || t == "/exit") break;
        if (t == "/reset") {
          history.clear();
          print_recommendations(out, policy.respond(history));
          continue;
        }
        history.push_back({ChatRole::user, "[user] " + t});
        const auto reply = policy.respond(history);
        print_recommendations(out, reply);
        history.push_back({ChatRole::assistant, reply.reply});
      }
      return 0;
    }

    if (*synth_cmd) {
      const auto data = synth::generate(synth_options);
      synth::write(data, synth_out);
      out << "movies " << data.movies.size() << ", ratings " << data.ratings.size() << ", reviews "
          << data.reviews.size() << ", dialogues " << data.redial_records.size() << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << app.help();
  return 2;
}

}  // namespace crs::cli
