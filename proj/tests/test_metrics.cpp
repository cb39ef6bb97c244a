#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "dmsr/baselines.hpp"
#include "dmsr/errors.hpp"
#include "dmsr/evaluate.hpp"
#include "dmsr/metrics.hpp"
#include "doctest.h"

using namespace dmsr;

namespace {

// 2-D table with unit vectors at known angles
EmbeddingTable angle_table() {
  EmbeddingTable t(2);
  t.insert("east", {1.0f, 0.0f});
  t.insert("north", {0.0f, 1.0f});
  t.insert("diag", {1.0f, 1.0f});
  t.insert("west", {-1.0f, 0.0f});
  return t;
}

Slate make_slate(std::vector<std::string> items, int n = -1,
                 const std::string& slate_id = "ref") {
  Slate s;
  s.slate_id = slate_id;
  s.true_length = static_cast<int>(items.size());
  s.items = std::move(items);
  if (n > s.true_length) s.items.resize(n, kPadId);
  return s;
}

// independent double-precision transcription of the per-position score rule
std::vector<double> oracle_scores(const std::vector<std::string>& gen, const Slate& ref,
                                  const EmbeddingTable& table, int k) {
  std::vector<double> s;
  for (int i = 0; i < std::min<int>(k, gen.size()); ++i) {
    if (gen[i] == kPadId) {
      s.push_back(0.0);
      continue;
    }
    bool hit = false;
    for (int j = 0; j < ref.true_length; ++j) hit |= ref.items[j] == gen[i];
    if (hit) {
      s.push_back(1.0);
      continue;
    }
    int rp = std::min(i, ref.true_length - 1);
    double c = cosine_similarity(table.vector(gen[i]), table.vector(ref.items[rp]),
                                 table.dim());
    s.push_back(std::min(1.0, std::max(0.0, c)));
  }
  return s;
}

EmbeddingTable random_table(int count, int dim, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> dist(0.0f, 1.0f);
  EmbeddingTable table(dim);
  for (int i = 0; i < count; ++i) {
    std::vector<float> v(dim);
    for (float& x : v) x = dist(rng);
    table.insert("it" + std::to_string(100 + i), v);
  }
  return table;
}

}  // namespace

TEST_CASE("per-position similarity: hits, positional pairing, clamping, pads") {
  EmbeddingTable table = angle_table();
  Slate ref = make_slate({"east", "north"}, 4);
  // diag misses and pairs with position 0 (east): cos 45deg; west clamps to 0;
  // position 3 is beyond the reference and pairs with its last item (north)
  std::vector<float> s =
      similarity_scores({"diag", "west", "east", "north"}, ref, table, 4);
  REQUIRE(s.size() == 4);
  CHECK(s[0] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
  CHECK(s[1] == 0.0f);
  CHECK(s[2] == 1.0f);
  CHECK(s[3] == 1.0f);

  std::vector<float> with_pad = similarity_scores({"east", kPadId}, ref, table, 4);
  REQUIRE(with_pad.size() == 2);
  CHECK(with_pad[1] == 0.0f);

  // beyond-reference pairing uses the last real item, not a pad
  std::vector<float> beyond = similarity_scores({"west", "west", "north"}, ref, table, 3);
  CHECK(beyond[2] == 1.0f);

  CHECK_THROWS_AS(similarity_scores({"east"}, make_slate({}), table, 1), DataError);
}

TEST_CASE("ranking metrics on a worked 2-D example") {
  EmbeddingTable table = angle_table();
  Slate ref = make_slate({"east", "north"});
  std::vector<std::string> gen = {"diag", "north", "east"};
  // scores are [cos45, 1, 1] = [0.7071068, 1, 1]
  // ndcg: (0.7071068*1 + 1/log2(3) + 1*0.5) / (1 + 1/log2(3) + 0.5) = 0.8625525
  CHECK(ndcg_sim(gen, ref, table, 3) == doctest::Approx(0.8625525).epsilon(1e-6));
  // map: mean of running means: (0.7071068 + 0.8535534 + 0.9023689) / 3 = 0.8210097
  CHECK(map_sim(gen, ref, table, 3) == doctest::Approx(0.8210097).epsilon(1e-6));
  // embed F1: precision (0.7071068+1+1)/3 = 0.9023689, recall 1 -> 0.9486833
  CHECK(embed_score(gen, ref, table) == doctest::Approx(0.9486833).epsilon(1e-5));
}

TEST_CASE("ranking metrics equal an independent transcription on random pairs") {
  EmbeddingTable table = random_table(40, 6, 3);
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> pick(0, 39);
  for (int trial = 0; trial < 1000; ++trial) {
    int k = 1 + trial % 12;
    std::vector<std::string> gen;
    for (int i = 0; i < 3 + trial % 8; ++i) gen.push_back("it" + std::to_string(100 + pick(rng)));
    std::vector<std::string> ref_items;
    for (int i = 0; i < 1 + trial % 6; ++i)
      ref_items.push_back("it" + std::to_string(100 + pick(rng)));
    Slate ref = make_slate(ref_items, 8);

    std::vector<double> s = oracle_scores(gen, ref, table, k);
    double dcg = 0.0, idcg = 0.0, map_total = 0.0, prefix = 0.0;
    for (int i = 0; i < k; ++i) {
      double disc = 1.0 / std::log2(i + 2.0);
      if (i < static_cast<int>(s.size())) {
        dcg += s[i] * disc;
        prefix += s[i];
      }
      idcg += disc;
      map_total += prefix / (i + 1.0);
    }
    CHECK(ndcg_sim(gen, ref, table, k) == doctest::Approx(dcg / idcg).epsilon(1e-5));
    CHECK(map_sim(gen, ref, table, k) == doctest::Approx(map_total / k).epsilon(1e-5));
  }
}

TEST_CASE("ndcg and map never decrease when a miss becomes a hit") {
  EmbeddingTable table = random_table(30, 5, 7);
  std::mt19937_64 rng(29);
  std::uniform_int_distribution<int> pick(0, 29);
  for (int trial = 0; trial < 200; ++trial) {
    Slate ref = make_slate({"it105", "it111", "it119"});
    std::vector<std::string> gen;
    for (int i = 0; i < 5; ++i) gen.push_back("it" + std::to_string(100 + pick(rng)));
    int pos = trial % 5;
    std::vector<std::string> better = gen;
    better[pos] = ref.items[trial % 3];
    CHECK(ndcg_sim(better, ref, table, 5) >= ndcg_sim(gen, ref, table, 5) - 1e-6f);
    CHECK(map_sim(better, ref, table, 5) >= map_sim(gen, ref, table, 5) - 1e-6f);
  }
}

TEST_CASE("embed score is symmetric-ish sanity and exact on identical slates") {
  EmbeddingTable table = random_table(20, 4, 11);
  Slate ref = make_slate({"it103", "it107", "it113"});
  std::vector<std::string> same = {"it103", "it107", "it113"};
  CHECK(embed_score(same, ref, table) == doctest::Approx(1.0).epsilon(1e-6));
  // permutation-invariant: greedy matching ignores order
  std::vector<std::string> perm = {"it113", "it103", "it107"};
  CHECK(embed_score(perm, ref, table) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_THROWS_AS(embed_score({kPadId}, ref, table), DataError);
}

TEST_CASE("category similarity on a worked example") {
  std::vector<CatalogItem> catalog = {
      {"r1", "", {{"categories", {"rock"}}}, 0},
      {"r2", "", {{"categories", {"rock", "pop"}}}, 0},
      {"g", "", {{"categories", {"pop"}}}, 0},
      {"plain", "", {}, 0},
  };
  Slate ref = make_slate({"r1", "r2"});
  // generated counts over {g, r2, r1}: pop 2, rock 2; reference: rock 2, pop 1
  // cos = (2*2 + 2*1) / (sqrt(8) * sqrt(5)) = 6 / 6.3245553 = 0.9486833
  CHECK(category_sim({"g", "r2", "r1"}, ref, catalog, 3) ==
        doctest::Approx(0.9486833).epsilon(1e-6));
  CHECK(category_sim({"r1", "r2"}, ref, catalog, 2) == doctest::Approx(1.0).epsilon(1e-6));
  // no categories anywhere on one side -> 0
  CHECK(category_sim({"plain"}, ref, catalog, 1) == 0.0f);
  // k truncates both sides: only r1 vs r1
  CHECK(category_sim({"r1", "g"}, ref, catalog, 1) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("freshness marks items unseen in all earlier runs") {
  FreshnessResult f = freshness({{"a", "b"}, {"b", "c"}, {"a", "d"}});
  REQUIRE(f.grid.size() == 3);
  CHECK(f.grid[0] == std::vector<int>{1, 1});
  CHECK(f.grid[1] == std::vector<int>{0, 1});
  CHECK(f.grid[2] == std::vector<int>{0, 1});
  CHECK(f.per_run_ratio[0] == doctest::Approx(1.0));
  CHECK(f.per_run_ratio[1] == doctest::Approx(0.5));
  CHECK(f.per_run_ratio[2] == doctest::Approx(0.5));
  // a repeat inside one run is fresh only the first time it is ever seen
  FreshnessResult g = freshness({{"x", "x"}});
  CHECK(g.grid[0] == std::vector<int>{1, 1});
}

TEST_CASE("popularity exposure buckets and ratios on a worked example") {
  std::vector<CatalogItem> catalog = {
      {"a", "", {}, 0}, {"b", "", {}, 1}, {"c", "", {}, 2}, {"d", "", {}, 5}};
  auto buckets = popularity_exposure({{"a", "b"}}, {{"b", "d"}}, catalog);
  // edges 0,1,2,4,8 -> four buckets
  REQUIRE(buckets.size() == 4);
  CHECK(buckets[0].pop_lo == 0);
  CHECK(buckets[0].pop_hi == 1);
  CHECK(buckets[3].pop_lo == 4);
  CHECK(buckets[3].pop_hi == 8);
  CHECK(buckets[0].generated_share == doctest::Approx(0.5));
  CHECK(buckets[0].reference_share == doctest::Approx(0.0));
  CHECK(!buckets[0].ratio_defined);
  CHECK(buckets[1].ratio_defined);
  CHECK(buckets[1].ratio == doctest::Approx(1.0));
  CHECK(buckets[3].ratio_defined);
  CHECK(buckets[3].ratio == doctest::Approx(0.0));
  // pads and unknown ids are ignored
  auto with_pad = popularity_exposure({{kPadId, "a"}}, {{"d"}}, catalog);
  CHECK(with_pad[0].generated_share == doctest::Approx(1.0));
}

TEST_CASE("popularity baseline ranks by count with id tie-breaks") {
  std::vector<CatalogItem> catalog = {
      {"zeta", "", {}, 10}, {"alpha", "", {}, 3}, {"beta", "", {}, 3}, {"low", "", {}, 1}};
  CHECK(baseline_popularity(catalog, 3) == std::vector<std::string>{"zeta", "alpha", "beta"});
  CHECK_THROWS_AS(baseline_popularity(catalog, 5), DataError);
}

TEST_CASE("bm25 scores match a three-document hand computation") {
  std::vector<CatalogItem> catalog = {
      {"d1", "red fish", {}, 0},
      {"d2", "red red bird", {}, 0},
      {"d3", "blue fish fish", {}, 0},
  };
  Bm25Index index(catalog);
  // N=3, df(red)=2, df(fish)=2, avg_len = 8/3, k1=1.2, b=0.75
  double idf = std::log((3.0 - 2.0 + 0.5) / (2.0 + 0.5) + 1.0);  // ln(1.6)
  double norm_d1 = 1.0 * 2.2 / (1.0 + 1.2 * (0.25 + 0.75 * 2.0 / (8.0 / 3.0)));
  double norm_tf2_len3 = 2.0 * 2.2 / (2.0 + 1.2 * (0.25 + 0.75 * 3.0 / (8.0 / 3.0)));
  CHECK(index.score("red fish", "d1") == doctest::Approx(2.0 * idf * norm_d1).epsilon(1e-9));
  CHECK(index.score("red fish", "d2") ==
        doctest::Approx(idf * norm_tf2_len3).epsilon(1e-9));
  CHECK(index.score("red fish", "d3") ==
        doctest::Approx(idf * norm_tf2_len3).epsilon(1e-9));
  CHECK(index.score("dragon", "d1") == 0.0);
  // d2 and d3 tie; lexicographic id breaks it
  CHECK(index.top_k("red fish", 3) == std::vector<std::string>{"d1", "d2", "d3"});
  CHECK_THROWS_AS(index.score("red", "nope"), DataError);
  CHECK_THROWS_AS(index.top_k("red", 4), DataError);
}

TEST_CASE("bm25 indexes metadata text too") {
  std::vector<CatalogItem> catalog = {
      {"x", "some title", {{"keywords", {"sunrise", "calm"}}}, 0},
      {"y", "other title", {}, 0},
  };
  Bm25Index index(catalog);
  CHECK(index.score("sunrise", "x") > 0.0);
  CHECK(index.score("sunrise", "y") == 0.0);
  CHECK(index.top_k("calm sunrise", 1) == std::vector<std::string>{"x"});
}

TEST_CASE("prompt2vec learns to retrieve items from their own descriptions") {
  std::vector<CatalogItem> catalog;
  const char* words[] = {"ocean", "desert", "forest", "glacier", "volcano", "meadow"};
  for (int i = 0; i < 6; ++i)
    catalog.push_back({"item" + std::to_string(i), words[i],
                       {{"keywords", {words[i]}}}, 0});
  EmbeddingTable table(4);
  std::mt19937_64 rng(13);
  std::normal_distribution<float> dist(0.0f, 1.0f);
  for (int i = 0; i < 6; ++i) {
    std::vector<float> v(4);
    for (float& x : v) x = dist(rng);
    table.insert("item" + std::to_string(i), v);
  }
  NeighborIndex index(table);
  std::vector<std::string> docs;
  for (const CatalogItem& c : catalog) docs.push_back(Bm25Index::item_document(c));
  PromptTokenizer tok = PromptTokenizer::build(docs, 6, 1);
  Prompt2Vec::Config cfg;
  cfg.hidden_dim = 64;
  cfg.epochs = 400;
  cfg.lr = 3e-3f;
  Prompt2Vec p2v(tok, 4, cfg);
  p2v.train(catalog, table);
  int correct = 0;
  for (int i = 0; i < 6; ++i) {
    auto top = p2v.top_k(words[i], index, 1);
    correct += top[0] == "item" + std::to_string(i);
  }
  CHECK(correct >= 5);
}

TEST_CASE("evaluation protocol: per-prompt means, aggregate mean and stddev") {
  EmbeddingTable table = random_table(20, 4, 23);
  std::vector<CatalogItem> catalog;
  for (const std::string& id : table.ids()) catalog.push_back({id, id, {}, 0});
  std::vector<Slate> test = {make_slate({"it103", "it107"}, -1, "p1"),
                             make_slate({"it111", "it115"}, -1, "p2"),
                             make_slate({"it104", "it109"}, -1, "p3")};
  EvalConfig cfg{2, 5};
  // the oracle generator echoes the reference: every metric with categories
  // absent is 1 except category_sim, which is 0 for both sides empty
  MetricReport r = evaluate(oracle_generator(), test, table, catalog, cfg);
  REQUIRE(r.per_prompt.size() == 3);
  for (const auto& [prompt, metrics] : r.per_prompt) {
    CHECK(metrics.at("ndcg_sim") == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(metrics.at("map_sim") == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(metrics.at("embed_score") == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(metrics.at("category_sim") == doctest::Approx(0.0));
  }
  CHECK(r.aggregate.at("ndcg_sim").mean == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.aggregate.at("ndcg_sim").stddev == doctest::Approx(0.0).epsilon(1e-6));

  // aggregate equals a recomputation from the per-prompt table
  MetricReport r2 = evaluate(fixed_slate_generator({"it103", "it111"}), test, table, catalog,
                             cfg);
  for (const std::string& m : {"ndcg_sim", "map_sim", "embed_score"}) {
    double mean = 0.0;
    for (const auto& [p, metrics] : r2.per_prompt) mean += metrics.at(m);
    mean /= 3.0;
    double var = 0.0;
    for (const auto& [p, metrics] : r2.per_prompt)
      var += (metrics.at(m) - mean) * (metrics.at(m) - mean);
    var /= 3.0;
    CHECK(r2.aggregate.at(m).mean == doctest::Approx(mean).epsilon(1e-12));
    CHECK(r2.aggregate.at(m).stddev == doctest::Approx(std::sqrt(var)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(evaluate(oracle_generator(), {}, table, catalog, cfg), DataError);
}

TEST_CASE("metric report csv round-trips") {
  MetricReport r;
  r.k = 2;
  r.per_prompt["p1"] = {{"ndcg_sim", 0.5}, {"map_sim", 0.25}};
  r.per_prompt["p2"] = {{"ndcg_sim", 0.75}, {"map_sim", 1.0}};
  r.aggregate["ndcg_sim"] = {0.625, 0.125};
  r.aggregate["map_sim"] = {0.625, 0.375};
  r.write_csv("test_metrics_report.csv");
  MetricReport back = MetricReport::read_csv("test_metrics_report.csv");
  CHECK(back.per_prompt.at("p1").at("ndcg_sim") == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(back.per_prompt.at("p2").at("map_sim") == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(back.aggregate.at("ndcg_sim").mean == doctest::Approx(0.625).epsilon(1e-12));
  CHECK(back.aggregate.at("map_sim").stddev == doctest::Approx(0.375).epsilon(1e-12));
  std::ifstream f("test_metrics_report.csv");
  std::string header;
  std::getline(f, header);
  CHECK(header == "prompt_id,metric,value");
  f.close();
  std::remove("test_metrics_report.csv");
}
