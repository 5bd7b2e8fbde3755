#include <doctest.h>

#include <Eigen/Dense>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>

#include "phishintel/features.hpp"
#include "phishintel/screening.hpp"
#include "phishintel/synth.hpp"
#include "support.hpp"

using namespace phishintel;

namespace {

Indicator ind(const std::string& text) {
  auto r = extract_indicators(text, IndicatorSource::text);
  REQUIRE(r.size() == 1);
  return r[0];
}

// ASCII-only reference counts.
struct AsciiCounts {
  double chars = 0, words = 0, symbols = 0, digits = 0;
};
AsciiCounts ascii_counts(const std::string& s) {
  AsciiCounts c;
  c.chars = static_cast<double>(s.size());
  std::istringstream in(s);
  std::string w;
  while (in >> w) c.words += 1;
  for (unsigned char ch : s) {
    if (std::isdigit(ch)) c.digits += 1;
    else if (!std::isalpha(ch) && !std::isspace(ch)) c.symbols += 1;
  }
  return c;
}

linalg::Matrix random_matrix(testsupport::Lcg& rng, std::size_t n, std::size_t d) {
  // Low effective rank with a decaying spectrum, plus noise.
  const std::size_t r = 1 + rng.below(std::min(n, d));
  linalg::Matrix a(n, r), b(r, d), m(n, d);
  for (auto& v : a.data()) v = rng.unit() * 2 - 1;
  for (std::size_t k = 0; k < r; ++k)
    for (std::size_t j = 0; j < d; ++j) b(k, j) = (rng.unit() * 2 - 1) / static_cast<double>(k + 1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0;
      for (std::size_t k = 0; k < r; ++k) s += a(i, k) * b(k, j);
      m(i, j) = s + 1e-3 * (rng.unit() - 0.5) + 3.0;
    }
  return m;
}

// Dimension choice and retained variance from a full SVD of the centered matrix.
std::pair<std::size_t, double> oracle_choice(const linalg::Matrix& m, double target) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  e.rowwise() -= e.colwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(e);
  Eigen::VectorXd var = svd.singularValues().array().square() / static_cast<double>(m.rows());
  const double total = var.sum();
  double cum = 0;
  for (Eigen::Index k = 0; k < var.size(); ++k) {
    cum += var(k);
    if (cum / total >= target) return {static_cast<std::size_t>(k + 1), total};
  }
  return {static_cast<std::size_t>(var.size()), total};
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("schema dimension and column names") {
  FeatureSchema s;
  CHECK(s.dimension() == 101);
  CHECK(s.column_names().size() == 101);
  CHECK(s.column_names()[13] == "url_total_chars");
  CHECK(s.column_names()[16] == "url_tld_com");
  FeatureSchema small{.visual_dim = 4, .context_dim = 6};
  CHECK(small.dimension() == 30 + 4 + 6);
}

TEST_CASE("build_instances splits per image and per indicator") {
  auto p = testsupport::post("p", 1, "");
  p.image_texts = {{"i1", "a"}, {"i2", std::nullopt}};
  auto a = ind("https://evil.top/x");
  CHECK(build_instances(p, {a}).size() == 2);
  auto q = testsupport::post("q", 1, "");
  auto b = ind("https://evil.xyz/y");
  auto inst = build_instances(q, {a, b}, true);
  REQUIRE(inst.size() == 2);
  CHECK_FALSE(inst[0].image_id.has_value());
  CHECK(inst[1].label == std::optional<bool>(true));
}

TEST_CASE("content features") {
  auto empty = testsupport::post("p", 1, "");
  Instance plain{"p", std::nullopt, ind("https://evil.top/x"), std::nullopt};
  auto f0 = content_features(empty, plain);
  for (double v : f0) CHECK(v == 0.0);

  const std::string text = "Fake AmEx site example[.]com #scam";
  auto p = testsupport::post("p", 1, text);
  p.hashtags = {"scam"};
  p.image_texts = {{"i1", std::nullopt}};
  auto found = extract_indicators(text, IndicatorSource::text);
  REQUIRE(found.size() == 1);
  Instance inst{"p", "i1", found[0], std::nullopt};
  auto f = content_features(p, inst);
  auto ref = ascii_counts(text);
  CHECK(f[0] == ref.chars);
  CHECK(f[1] == ref.words);
  CHECK(f[2] == 1);
  CHECK(f[3] == 1);
  CHECK(f[4 + static_cast<int>(DefangForm::bracket_dot)] == 1.0);
  CHECK(std::accumulate(f.begin() + 4, f.end(), 0.0) == 1.0);

  p.hashtags = {"scam", "fraud"};
  CHECK(content_features(p, inst)[2] == 2);
}

TEST_CASE("Japanese word count uses script runs") {
  auto p = testsupport::post("p", 1, "アマゾンを名乗るSMSが届いた。", Lang::ja);
  Instance inst{"p", std::nullopt, ind("https://evil.top/"), std::nullopt};
  // アマゾン | を | 名乗 | る | SMS | が | 届 | いた
  CHECK(content_features(p, inst)[1] == 8);
}

TEST_CASE("url features") {
  const std::string u = "https://login.secure.example.top/verify";
  auto f = url_features(ind(u));
  CHECK(f[0] == static_cast<double>(u.size()));
  CHECK(f[1] == static_cast<double>(std::string("login.secure.example.top").size()));
  CHECK(f[2] == 0);
  CHECK(f[3 + 2] == 1.0);  // top
  CHECK(std::accumulate(f.begin() + 3, f.end(), 0.0) == 1.0);

  auto io = url_features(ind("https://evil.io/x"));
  CHECK(std::accumulate(io.begin() + 3, io.end(), 0.0) == 0.0);

  auto d = url_features(ind("https://a1.example.com/2fa"));
  CHECK(d[2] == 2);
  CHECK(d[3 + 0] == 1.0);  // com
}

TEST_CASE("ocr features") {
  auto p = testsupport::post("p", 1, "");
  Instance none{"p", std::nullopt, ind("https://evil.top/"), std::nullopt};
  for (double v : ocr_features(none, p)) CHECK(v == 0.0);

  const std::string t = "Your account! Verify: http://x.co 24h";
  p.image_texts = {{"i1", t}, {"i2", ""}, {"i3", std::nullopt}};
  Instance a{"p", "i1", ind("https://evil.top/"), std::nullopt};
  auto f = ocr_features(a, p);
  auto ref = ascii_counts(t);
  CHECK(f[0] == ref.chars);
  CHECK(f[1] == ref.words);
  CHECK(f[2] == ref.symbols);
  CHECK(f[3] == ref.digits);
  for (const char* id : {"i2", "i3"}) {
    Instance e{"p", std::string(id), ind("https://evil.top/"), std::nullopt};
    for (double v : ocr_features(e, p)) CHECK(v == 0.0);
  }
}

TEST_CASE("hashing embedders are deterministic and discriminate inputs") {
  HashingContextEmbedder ctx(64, 1);
  CHECK(ctx.embed("same text") == ctx.embed("same text"));
  CHECK(ctx.embed("a") != ctx.embed("b"));
  CHECK(ctx.embed("a").size() == 64);
  HashingVisualEmbedder vis(64, 2);
  auto v = vis.embed({"img", "some text"});
  REQUIRE(v.has_value());
  CHECK(v->size() == 64);
  CatalogVisualEmbedder cat(3);
  cat.add("known", {1, 2, 3});
  CHECK(cat.embed({"known", std::nullopt}) == std::optional<std::vector<double>>({1, 2, 3}));
  CHECK_FALSE(cat.embed({"unknown", std::nullopt}).has_value());
}

TEST_CASE("projection on three orthogonal axes keeps three components") {
  testsupport::Lcg rng(3);
  linalg::Matrix m(60, 8);
  for (std::size_t i = 0; i < 60; ++i) {
    m(i, 1) = rng.unit() * 5;
    m(i, 4) = rng.unit() * 3;
    m(i, 6) = rng.unit() * 2;
  }
  auto p = fit_projection(m, 0.99);
  CHECK(p.out_dim() == 3);
  CHECK(p.cumulative_ratio() >= 0.99);
}

TEST_CASE("identical rows give one constant component") {
  linalg::Matrix m(5, 4, 2.5);
  auto p = fit_projection(m, 0.99);
  CHECK(p.out_dim() == 1);
  auto t = p.transform(std::vector<double>{2.5, 2.5, 2.5, 2.5});
  CHECK(t[0] == 0.0);
  CHECK_THROWS_AS(fit_projection(linalg::Matrix(1, 4), 0.99), std::invalid_argument);
}

TEST_CASE("projection matches a full SVD oracle") {
  testsupport::Lcg rng(101);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 2 + rng.below(99);
    const std::size_t d = 1 + rng.below(64);
    auto m = random_matrix(rng, n, d);
    auto p = fit_projection(m, 0.99);
    auto [k, total] = oracle_choice(m, 0.99);
    CHECK(p.out_dim() == k);
    CHECK(p.total_variance == doctest::Approx(total).epsilon(1e-9));

    for (std::size_t a = 0; a < p.out_dim(); ++a)
      for (std::size_t b = 0; b < p.out_dim(); ++b) {
        double s = 0;
        for (std::size_t j = 0; j < d; ++j) s += p.components(j, a) * p.components(j, b);
        CHECK(std::abs(s - (a == b ? 1.0 : 0.0)) < 1e-8);
      }

    double err = 0;
    for (std::size_t i = 0; i < n; ++i) {
      auto r = p.reconstruct(p.transform(m.row(i)));
      for (std::size_t j = 0; j < d; ++j) err += (r[j] - m(i, j)) * (r[j] - m(i, j));
    }
    err /= static_cast<double>(n);
    CHECK(err <= (1 - p.cumulative_ratio()) * p.total_variance + 1e-6);
  }
}

TEST_CASE("max_dim caps the projection") {
  testsupport::Lcg rng(7);
  auto m = random_matrix(rng, 40, 20);
  auto full = fit_projection(m, 0.999999);
  auto capped = fit_projection(m, 0.999999, 2);
  CHECK(capped.out_dim() == std::min<std::size_t>(2, full.out_dim()));
}

TEST_CASE("standardizer zero-mean unit-variance and constant passthrough") {
  testsupport::Lcg rng(9);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 50; ++i) rows.push_back({rng.unit() * 100, 7.0, rng.unit() - 40});
  auto s = Standardizer::fit(rows);
  CHECK(s.stddev[1] == 1.0);
  for (auto& r : rows) s.apply(r);
  for (std::size_t j : {0u, 2u}) {
    double mean = 0, var = 0;
    for (const auto& r : rows) mean += r[j];
    mean /= 50;
    for (const auto& r : rows) var += (r[j] - mean) * (r[j] - mean);
    var /= 50;
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(var - 1) < 1e-6);
  }
  CHECK(rows[0][1] == 0.0);
}

TEST_CASE("assembled vectors on a synthetic corpus") {
  auto c = generate_synthetic(12, SynthConfig{.n_reports = 60, .n_benign = 140});
  FeatureSchema schema{.visual_raw_dim = 64, .context_raw_dim = 64};
  DefaultEmbedders emb(schema);
  std::vector<std::vector<Instance>> per_post;
  std::vector<TrainingItem> items;
  for (const auto& p : c.posts) {
    per_post.push_back(build_instances(p, extract_post_indicators(p)));
    for (const auto& i : per_post.back()) items.push_back({&p, i});
  }
  auto art = fit_artifacts(items, emb.view(), schema);
  std::size_t checked = 0;
  for (std::size_t k = 0; k < c.posts.size(); ++k) {
    auto a = assemble(c.posts[k], per_post[k], emb.view(), art);
    CHECK(a.rows.size() == per_post[k].size());
    CHECK(assemble(c.posts[k], per_post[k], emb.view(), art).rows.size() == a.rows.size());
    for (const auto& r : a.rows) {
      const auto flat = r.vector.flatten();
      CHECK(flat.size() == schema.dimension());
      CHECK(std::accumulate(r.vector.content.begin() + 4, r.vector.content.end(), 0.0) <= 1.0);
      CHECK(std::accumulate(r.vector.url.begin() + 3, r.vector.url.end(), 0.0) <= 1.0);
      if (!r.instance.image_id) {
        for (double v : r.vector.ocr) CHECK(v == 0.0);
        for (double v : r.vector.visual) CHECK(v == 0.0);
      }
      ++checked;
    }
  }
  CHECK(checked == items.size());

  std::ostringstream csv;
  write_feature_csv(csv, schema, assemble(c.posts[0], per_post[0], emb.view(), art).rows);
  CHECK(csv.str().rfind("post_id,image_id,url,label,content_chars", 0) == 0);
}

}  // TEST_SUITE
