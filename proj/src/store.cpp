// SPDX-License-Identifier: Apache-2.0
#include "crs/store.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "crs/error.hpp"
#include "crs/jsonl.hpp"
#include "crs/text.hpp"

namespace crs {
namespace {

constexpr char kMagic[8] = {'C', 'R', 'S', 'M', 'A', 'T', '0', '1'};
constexpr int kStoreVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "factor files are written in host order, which must be little-endian");

std::vector<Json> read_required(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw StoreError("store file missing: " + path.string());
  return jsonl::read_file(path);
}

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::filesystem::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw StoreError("truncated factor file " + path.string());
  }
  return v;
}

}  // namespace

StatsStore StatsStore::build(Catalog catalog, std::span<const RatingEvent> ratings,
                             std::span<const TagRelevance> tag_relevances, std::vector<Review> reviews,
                             StoreOptions options) {
  std::vector<RatingEvent> known;
  known.reserve(ratings.size());
  for (const auto& r : ratings) {
    if (catalog.find(r.movie_id)) known.push_back(r);
  }
  auto windows = corpus::liked_windows_by_user(known);
  return build(std::move(catalog), std::move(windows), TagIndex::build(tag_relevances),
               std::move(reviews), options);
}

StatsStore StatsStore::build(Catalog catalog, std::vector<corpus::UserWindow> windows, TagIndex tags,
                             std::vector<Review> reviews, StoreOptions options) {
  StatsStore s;
  s.catalog = std::move(catalog);
  s.windows = std::move(windows);
  s.options = options;
  const auto liked = s.liked_windows();
  s.cooccurrence = CooccurrenceTable::build(liked);
  s.popularity = PopularityIndex::build(liked, options.eligible_above, options.top_fraction);
  s.rankings = PmiRanking::build(s.cooccurrence, s.popularity, &s.catalog, options.ranking_depth);
  s.tags = std::move(tags);
  for (auto& r : reviews) {
    if (!r.movie_id || !s.catalog.find(*r.movie_id)) {
      r.movie_id = r.title.empty() ? std::nullopt : s.catalog.find_title(r.title);
    }
    if (!r.movie_id) continue;
    if (r.sentences.empty()) r.sentences = text::split_sentences(r.text);
    s.reviews.push_back(std::move(r));
  }
  return s;
}

std::vector<corpus::LikedWindow> StatsStore::liked_windows() const {
  std::vector<corpus::LikedWindow> out;
  out.reserve(windows.size());
  for (const auto& w : windows) out.push_back(w.movies);
  return out;
}

void write_factor_matrix(const std::filesystem::path& path, const FactorMatrix& m) {
  if (m.values.size() != m.ids.size() * m.dim) throw StoreError("factor matrix shape mismatch");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StoreError("cannot write " + path.string());
  out.write(kMagic, sizeof kMagic);
  put<std::uint64_t>(out, m.ids.size());
  put<std::uint64_t>(out, m.dim);
  put<std::uint64_t>(out, m.seed);
  out.write(reinterpret_cast<const char*>(m.ids.data()),
            static_cast<std::streamsize>(m.ids.size() * sizeof(std::int64_t)));
  out.write(reinterpret_cast<const char*>(m.values.data()),
            static_cast<std::streamsize>(m.values.size() * sizeof(double)));
  if (!out) throw StoreError("write failed for " + path.string());
}

FactorMatrix read_factor_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StoreError("store file missing: " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw StoreError("not a factor matrix file: " + path.string());
  }
  FactorMatrix m;
  const auto rows = get<std::uint64_t>(in, path);
  m.dim = get<std::uint64_t>(in, path);
  m.seed = get<std::uint64_t>(in, path);
  m.ids.resize(rows);
  m.values.resize(rows * m.dim);
  if (!in.read(reinterpret_cast<char*>(m.ids.data()),
               static_cast<std::streamsize>(rows * sizeof(std::int64_t))) ||
      !in.read(reinterpret_cast<char*>(m.values.data()),
               static_cast<std::streamsize>(m.values.size() * sizeof(double)))) {
    throw StoreError("truncated factor file " + path.string());
  }
  return m;
}

void save_mf(const MfModel& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& hp = model.hyperparameters();
  write_factor_matrix(dir / "mf_users.bin",
                      {{model.users().begin(), model.users().end()}, hp.dim, hp.seed, model.user_factors()});
  write_factor_matrix(dir / "mf_items.bin",
                      {{model.items().begin(), model.items().end()}, hp.dim, hp.seed, model.item_factors()});
  Json meta = {{"dim", hp.dim},
               {"learning_rate", hp.learning_rate},
               {"regularization", hp.regularization},
               {"epochs", hp.epochs},
               {"negatives_per_positive", hp.negatives_per_positive},
               {"seed", hp.seed},
               {"init_scale", hp.init_scale},
               {"loss_history", model.loss_history}};
  std::ofstream out(dir / "mf.json", std::ios::trunc);
  out << meta.dump(2) << '\n';
}

std::optional<MfModel> load_mf(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "mf.json")) return std::nullopt;
  std::ifstream in(dir / "mf.json");
  const Json meta = Json::parse(in);
  MfHyperparameters hp;
  hp.dim = meta.at("dim").get<std::size_t>();
  hp.learning_rate = meta.at("learning_rate").get<double>();
  hp.regularization = meta.at("regularization").get<double>();
  hp.epochs = meta.at("epochs").get<std::size_t>();
  hp.negatives_per_positive = meta.at("negatives_per_positive").get<std::size_t>();
  hp.seed = meta.at("seed").get<std::uint64_t>();
  hp.init_scale = meta.at("init_scale").get<double>();
  auto users = read_factor_matrix(dir / "mf_users.bin");
  auto items = read_factor_matrix(dir / "mf_items.bin");
  if (users.dim != hp.dim || items.dim != hp.dim) throw StoreError("factor dimension disagrees with mf.json");
  MfModel model(hp, std::move(users.ids), std::move(users.values), std::move(items.ids),
                std::move(items.values));
  model.loss_history = meta.at("loss_history").get<std::vector<double>>();
  return model;
}

void save_store(const StatsStore& store, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<Json> rows;

  for (const auto& m : store.catalog.movies()) rows.push_back(ingest::to_json(m));
  jsonl::write_file(dir / "catalog.jsonl", rows);

  rows.clear();
  for (const auto& w : store.windows) rows.push_back({{"user", w.user}, {"movies", w.movies}});
  jsonl::write_file(dir / "windows.jsonl", rows);

  rows.clear();
  for (const auto& [a, list] : store.cooccurrence.adjacency()) {
    for (const auto& e : list) {
      if (e.other > a) rows.push_back({{"a", a}, {"b", e.other}, {"count", e.count}});
    }
  }
  jsonl::write_file(dir / "cooccurrence.jsonl", rows);

  rows.clear();
  for (const auto& [m, n] : store.popularity.counts()) rows.push_back({{"movie_id", m}, {"count", n}});
  jsonl::write_file(dir / "popularity.jsonl", rows);

  rows.clear();
  for (const auto& [m, list] : store.rankings.lists()) {
    Json related = Json::array();
    for (const auto& r : list) related.push_back({{"movie_id", r.movie}, {"pmi2", r.score}, {"count", r.count}});
    rows.push_back({{"movie_id", m}, {"related", related}});
  }
  jsonl::write_file(dir / "rankings.jsonl", rows);

  rows.clear();
  for (const auto& [m, tags] : store.tags.by_movie()) rows.push_back({{"movie_id", m}, {"tags", tags}});
  jsonl::write_file(dir / "tags.jsonl", rows);

  rows.clear();
  for (const auto& r : store.reviews) rows.push_back(ingest::to_json(r));
  jsonl::write_file(dir / "reviews.jsonl", rows);

  if (store.mf) save_mf(*store.mf, dir);

  Json manifest = {{"format", "crs-store"},
                   {"version", kStoreVersion},
                   {"eligible_above", store.options.eligible_above},
                   {"top_fraction", store.options.top_fraction},
                   {"ranking_depth", store.options.ranking_depth},
                   {"movies", store.catalog.size()},
                   {"windows", store.windows.size()},
                   {"total_pair_events", store.cooccurrence.total()},
                   {"distinct_pairs", store.cooccurrence.distinct_pairs()},
                   {"eligible", store.popularity.eligible_movies().size()},
                   {"top_decile", store.popularity.top_decile().size()},
                   {"tagged_movies", store.tags.by_movie().size()},
                   {"reviews", store.reviews.size()}};
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  out << manifest.dump(2) << '\n';
}

StatsStore load_store(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw StoreError("store directory missing: " + dir.string());
  const auto manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) throw StoreError("store file missing: " + manifest_path.string());
  std::ifstream min(manifest_path);
  const Json manifest = Json::parse(min);
  if (manifest.value("format", "") != "crs-store") throw StoreError("not a statistics store: " + dir.string());

  StatsStore s;
  s.options.eligible_above = manifest.at("eligible_above").get<std::uint64_t>();
  s.options.top_fraction = manifest.at("top_fraction").get<double>();
  s.options.ranking_depth = manifest.at("ranking_depth").get<std::size_t>();

  std::vector<MovieRecord> movies;
  for (const auto& j : read_required(dir / "catalog.jsonl")) movies.push_back(ingest::movie_from_json(j));
  s.catalog = Catalog(std::move(movies));

  for (const auto& j : read_required(dir / "windows.jsonl")) {
    s.windows.push_back({j.at("user").get<UserId>(), j.at("movies").get<std::vector<MovieId>>()});
  }
  for (const auto& j : read_required(dir / "cooccurrence.jsonl")) {
    s.cooccurrence.add(j.at("a").get<MovieId>(), j.at("b").get<MovieId>(), j.at("count").get<std::uint64_t>());
  }
  s.cooccurrence.finalize();

  std::map<MovieId, std::uint64_t> counts;
  for (const auto& j : read_required(dir / "popularity.jsonl")) {
    counts[j.at("movie_id").get<MovieId>()] = j.at("count").get<std::uint64_t>();
  }
  s.popularity = PopularityIndex::from_counts(std::move(counts), s.options.eligible_above, s.options.top_fraction);

  for (const auto& j : read_required(dir / "rankings.jsonl")) {
    std::vector<RelatedMovie> related;
    for (const auto& r : j.at("related")) {
      related.push_back({r.at("movie_id").get<MovieId>(), r.at("pmi2").get<double>(), r.at("count").get<std::uint64_t>()});
    }
    s.rankings.set(j.at("movie_id").get<MovieId>(), std::move(related));
  }
  for (const auto& j : read_required(dir / "tags.jsonl")) {
    const auto m = j.at("movie_id").get<MovieId>();
    for (const auto& t : j.at("tags")) s.tags.add(m, t.get<std::string>());
  }
  for (const auto& j : read_required(dir / "reviews.jsonl")) s.reviews.push_back(ingest::review_from_json(j));
  s.mf = load_mf(dir);
  return s;
}

}  // namespace crs
