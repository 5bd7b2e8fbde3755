#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "phishintel/pipeline.hpp"
#include "pipeline_support.hpp"
#include "support.hpp"

using namespace phishintel;

namespace {

struct Trained {
  PipelineConfig cfg;
  SyntheticCorpus corpus;
  PipelineResources res;
  ForestModel model;

  Trained() : corpus(generate_synthetic(1, SynthConfig{.n_reports = 120, .n_benign = 380})) {
    cfg.forest.n_trees = 30;
    res = testsupport::resources_for(corpus, cfg);
    model = train_model(corpus.posts, testsupport::labels_of(corpus), cfg, res, 0);
  }
};

const Trained& trained() {
  static const Trained t;
  return t;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("config parsing, unknown keys and validation") {
  auto c = parse_config(R"({"top_k": 5, "cycle_period": 1800, "forest": {"n_trees": 7, "seed": 3},
                            "schema": {"visual_dim": 8}, "ranks": "r.csv", "start": "2023-01-01"})",
                        "/base");
  CHECK(c.top_k == 5);
  CHECK(c.cycle_period == 1800);
  CHECK(c.forest.n_trees == 7);
  CHECK(c.forest.seed == 3);
  CHECK(c.schema.visual_dim == 8);
  CHECK(c.schema.dimension() == 93);
  CHECK(c.ranks_path == "/base/r.csv");
  CHECK(c.start == std::optional<Timestamp>(1672531200));

  auto round = parse_config(config_to_json(c));
  CHECK(round.top_k == 5);
  CHECK(round.forest.n_trees == 7);
  CHECK(round.schema == c.schema);
  CHECK(round.start == c.start);

  CHECK_THROWS_AS(parse_config(R"({"topk": 5})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config(R"({"forest": {"trees": 5}})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config(R"({"top_k": "many"})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config(R"({"top_k": 0})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config(R"({"security_keywords": {"en": []}})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config(R"({"class_threshold": 0})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config(R"({"whois_provider": "dns"})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config(R"({"visual_provider": "catalog"})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("[1]"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("{"), std::invalid_argument);
  try {
    parse_config(R"({"window_duration": -1})");
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("window_duration") != std::string::npos);
  }
}

TEST_CASE("state JSON round trip and atomic save") {
  CycleState s;
  s.cycle = 4;
  s.cursor = 1672545600;
  s.keywords[Lang::en] = {"Amazon", "USPS"};
  s.keywords[Lang::ja] = {"ヤマト"};
  s.model_ref = "model.bin";
  s.window.push_back({"p1", 1672540000, Lang::en, {"Amazon"}, true});
  s.window.push_back({"p2", 1672540001, Lang::ja, {}, false});
  CHECK(state_from_json(state_to_json(s)) == s);

  const auto path = temp_path("phishintel_state_test.json");
  save_state(s, path);
  CHECK_FALSE(std::filesystem::exists(path + ".tmp"));
  CHECK(load_state(path) == s);
  s.cycle = 5;
  save_state(s, path);
  CHECK(load_state(path).cycle == 5);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(state_from_json("{\"cycle\": 1}"), std::runtime_error);
  CHECK_THROWS_AS(load_state(temp_path("phishintel_missing_state.json")), std::runtime_error);
}

TEST_CASE("initial state floors the earliest post to the period") {
  PipelineConfig cfg;
  MemoryPostSource src({testsupport::post("b", 7300, "x"), testsupport::post("a", 3700, "y")});
  auto s = initial_state(cfg, src, "m");
  CHECK(s.cursor == 3600);
  CHECK(s.cycle == 0);
  CHECK(s.model_ref == "m");
  CHECK(s.keywords.at(Lang::en).empty());
  CHECK(s.window.empty());
  cfg.start = 100;
  CHECK(initial_state(cfg, src).cursor == 100);
  CHECK(src.fetch(3700, 7300).size() == 1);
  CHECK(src.exhausted(7301));
  CHECK_FALSE(src.exhausted(7300));
}

TEST_CASE("schema mismatch is rejected and leaves state untouched") {
  const auto& t = trained();
  PipelineConfig cfg = t.cfg;
  cfg.schema.context_dim = 40;
  CHECK_THROWS_AS(check_model_schema(t.model, cfg.schema), std::invalid_argument);
  MemoryPostSource src(t.corpus.posts);
  auto s = initial_state(cfg, src);
  s.keywords[Lang::en] = {"Amazon"};
  const CycleState before = s;
  CHECK_THROWS_AS(run_cycle(s, cfg, t.res, t.model, src), std::invalid_argument);
  CHECK(s == before);
}

TEST_CASE("cycles: empty hour keeps keywords, exhaustion, determinism") {
  const auto& t = trained();
  auto posts = t.corpus.posts;
  MemoryPostSource src(posts);
  auto s = initial_state(t.cfg, src);
  s.keywords[Lang::en] = {"Keepme"};
  s.keywords[Lang::ja] = {"保持"};
  s.cursor -= 10 * t.cfg.cycle_period;  // an hour with no posts at all
  auto r = run_cycle(s, t.cfg, t.res, t.model, src);
  CHECK_FALSE(r.exhausted);
  CHECK(r.outputs.collected.empty());
  CHECK(r.state.keywords == s.keywords);
  CHECK(r.state.cycle == 1);
  CHECK(r.state.cursor == s.cursor + t.cfg.cycle_period);

  auto run_all = [&](CycleState st) {
    std::vector<CycleState> states;
    std::size_t reports = 0;
    while (true) {
      auto res = run_cycle(st, t.cfg, t.res, t.model, src);
      if (res.exhausted) {
        CHECK(res.state == st);
        break;
      }
      for (const auto& [lang, kws] : res.outputs.keywords) CHECK(kws.size() <= t.cfg.top_k);
      CHECK(res.outputs.scores.size() == res.outputs.collected.size());
      for (const auto& e : res.state.window) CHECK(e.created_at >= res.outputs.end - t.cfg.window_duration);
      reports += res.outputs.reports.size();
      st = res.state;
      states.push_back(st);
    }
    return std::make_pair(states, reports);
  };
  auto a = run_all(initial_state(t.cfg, src));
  auto b = run_all(initial_state(t.cfg, src));
  CHECK(a.first == b.first);
  CHECK(a.second > 0);
  const Timestamp first = initial_state(t.cfg, src).cursor;
  const auto expected = static_cast<std::size_t>((posts.back().created_at - first) / t.cfg.cycle_period + 1);
  CHECK(a.first.size() == expected);
}

TEST_CASE("a brand reported in a low-prevalence stream becomes a keyword") {
  const auto& t = trained();
  SynthConfig sc;
  sc.n_reports = 40;
  sc.n_benign = 1200;
  sc.brands_en = {"Zetabank"};
  sc.ja_fraction = 0;
  sc.span = 24 * 3600;
  sc.start = t.corpus.posts.back().created_at + 3600;
  auto stream = generate_synthetic(9, sc);
  MemoryPostSource src(stream.posts);
  const auto res = testsupport::resources_for(stream, t.cfg);
  auto s = initial_state(t.cfg, src);

  std::optional<std::size_t> entered;
  bool queried = false;
  while (true) {
    auto r = run_cycle(s, t.cfg, res, t.model, src);
    if (r.exhausted) break;
    if (entered)
      for (const auto& p : r.outputs.collected)
        if (std::find(p.matched_keywords.begin(), p.matched_keywords.end(), "Zetabank") != p.matched_keywords.end())
          queried = true;
    const auto& kw = r.state.keywords.at(Lang::en);
    if (!entered && std::find(kw.begin(), kw.end(), "Zetabank") != kw.end()) entered = r.outputs.cycle;
    s = r.state;
  }
  REQUIRE(entered.has_value());
  CHECK(queried);
}

TEST_CASE("chronological evaluation on a synthetic corpus") {
  auto c = generate_synthetic(2, SynthConfig{.n_reports = 150, .n_benign = 500});
  PipelineConfig cfg;
  cfg.forest.n_trees = 30;
  auto res = testsupport::resources_for(c, cfg);
  auto ev = evaluate_chronological(c.posts, testsupport::labels_of(c), cfg, res);
  CHECK(ev.train_posts + ev.test_posts == c.posts.size());
  CHECK(*ev.metrics.accuracy >= 0.9);
  CHECK(*ev.metrics.tpr >= 0.9);
  CHECK(*ev.metrics.tnr >= 0.9);
  const std::string j = metrics_to_json(ev.metrics);
  for (const char* k : {"accuracy", "tpr", "tnr", "precision", "f_measure"}) CHECK(j.find(k) != std::string::npos);

  cfg.train_fraction = 0.0001;
  CHECK_THROWS_AS(evaluate_chronological(c.posts, testsupport::labels_of(c), cfg, res), std::invalid_argument);
}

TEST_CASE("score_post marks posts without surviving indicators as excluded") {
  const auto& t = trained();
  auto p = testsupport::post("x", t.corpus.posts.front().created_at, "no links here at all #phishing");
  auto processed = process_post(p, t.res);
  auto s = score_post(p, processed, t.model, t.res, 0.5);
  CHECK(s.excluded);
  CHECK_FALSE(s.label);
  CHECK(s.scores.empty());

  auto q = testsupport::post("y", t.corpus.posts.front().created_at, "Zetabank alert https://zetabank-verify[.]top/login");
  auto pq = process_post(q, t.res);
  auto sq = score_post(q, pq, t.model, t.res, 0.5);
  CHECK_FALSE(sq.excluded);
  CHECK(sq.scores.size() == pq.instances.size());
  for (double v : sq.scores) CHECK((v >= 0.0 && v <= 1.0));
}

TEST_CASE("writers") {
  const auto& t = trained();
  std::ostringstream a, b, c, d;
  const auto& p = t.corpus.posts.front();
  auto processed = process_post(p, t.res);
  write_indicators_jsonl(a, p.post_id, processed.extracted);
  const std::string lines = a.str();
  CHECK(static_cast<std::size_t>(std::count(lines.begin(), lines.end(), '\n')) == processed.extracted.size());
  write_verdicts_jsonl(b, p.post_id, processed.screening);
  write_scores_jsonl(c, {score_post(p, processed, t.model, t.res, 0.5)});
  CHECK(c.str().find(p.post_id) != std::string::npos);
  write_keywords_csv(d, {});
  CHECK(!d.str().empty());
}

}  // TEST_SUITE
