#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "phishintel/cooccur.hpp"
#include "support.hpp"

using namespace phishintel;

namespace {

WindowCounts counts_of(const std::vector<std::set<std::string>>& posts, const std::vector<bool>& labels) {
  WindowCounts c;
  for (std::size_t i = 0; i < posts.size(); ++i) c.add_post(posts[i], labels[i]);
  return c;
}

struct RandomCorpus {
  std::vector<std::set<std::string>> posts;
  std::vector<bool> labels;
};

RandomCorpus random_corpus(testsupport::Lcg& rng) {
  RandomCorpus rc;
  const std::size_t n = 1 + rng.below(50);
  const std::size_t vocab = 1 + rng.below(20);
  const double density = rng.unit();
  for (std::size_t i = 0; i < n; ++i) {
    std::set<std::string> toks;
    for (std::size_t t = 0; t < vocab; ++t)
      if (rng.unit() < density) toks.insert("T" + std::to_string(t));
    rc.posts.push_back(toks);
    rc.labels.push_back(rng.below(3) == 0);
  }
  return rc;
}

}  // namespace

TEST_SUITE("cooccur") {

TEST_CASE("proper noun heuristic") {
  CHECK(extract_proper_nouns("Amazon says your account is locked", Lang::en) == std::set<std::string>{"Amazon"});
  CHECK(extract_proper_nouns("got this from ATT today", Lang::en) == std::set<std::string>{"ATT"});
  CHECK(extract_proper_nouns("nothing here", Lang::en).empty());
  auto ja = extract_proper_nouns("アマゾンを名乗るSMSが届いた", Lang::ja);
  CHECK(ja.count("アマゾン") == 1);
}

TEST_CASE("window counts invariants") {
  testsupport::Lcg rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto rc = random_corpus(rng);
    auto c = counts_of(rc.posts, rc.labels);
    CHECK(c.n_pos() + c.n_neg() == c.n_posts());
    for (const auto& t : c.tokens()) {
      CHECK(c.count(t, Label::pos) + c.count(t, Label::neg) == c.count(t));
      CHECK(c.count(t) <= c.n_posts());
    }
  }
}

TEST_CASE("four-post example") {
  std::vector<std::set<std::string>> posts = {{"Brand"}, {"Brand"}, {}, {}};
  std::vector<bool> labels = {true, true, false, false};
  auto c = counts_of(posts, labels);
  CHECK(compute_pmi(c, "Brand", Label::pos) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(compute_pmi(c, "Brand", Label::neg) == 0.0);
  CHECK(compute_soa(c, "Brand") == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("token in every post has zero PMI for both labels") {
  std::vector<std::set<std::string>> posts(4, {"Everywhere"});
  auto c = counts_of(posts, {true, true, false, false});
  CHECK(compute_pmi(c, "Everywhere", Label::pos) == 0.0);
  CHECK(compute_pmi(c, "Everywhere", Label::neg) == 0.0);
  CHECK(std::abs(compute_soa(c, "Everywhere")) < 1e-12);
}

TEST_CASE("unseen token and empty window are errors") {
  auto c = counts_of({{"A"}}, {true});
  CHECK_THROWS_AS(compute_pmi(c, "B", Label::pos), std::invalid_argument);
  WindowCounts empty;
  CHECK_THROWS_AS(compute_soa(empty, "A"), std::invalid_argument);
}

TEST_CASE("PMI and SoA match a naive recount") {
  testsupport::Lcg rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    auto rc = random_corpus(rng);
    auto c = counts_of(rc.posts, rc.labels);
    for (const auto& t : c.tokens()) {
      const double pos = testsupport::naive_pmi(rc.posts, rc.labels, t, true);
      const double neg = testsupport::naive_pmi(rc.posts, rc.labels, t, false);
      CHECK(std::abs(compute_pmi(c, t, Label::pos) - pos) < 1e-9);
      CHECK(std::abs(compute_pmi(c, t, Label::neg) - neg) < 1e-9);
      CHECK(std::abs(compute_soa(c, t) - (pos - neg)) < 1e-9);
    }
  }
}

TEST_CASE("label swap negates SoA for tokens seen under both labels") {
  testsupport::Lcg rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    auto rc = random_corpus(rng);
    std::vector<bool> swapped;
    for (bool b : rc.labels) swapped.push_back(!b);
    auto a = counts_of(rc.posts, rc.labels);
    auto b = counts_of(rc.posts, swapped);
    for (const auto& t : a.tokens())
      if (a.count(t, Label::pos) > 0 && a.count(t, Label::neg) > 0)
        CHECK(std::abs(compute_soa(a, t) + compute_soa(b, t)) < 1e-12);
  }
}

TEST_CASE("report-only token: SoA equals PMI") {
  auto c = counts_of({{"Only"}, {}, {}, {}, {}}, {true, false, false, false, true});
  CHECK(compute_pmi(c, "Only", Label::neg) == 0.0);
  CHECK(compute_soa(c, "Only") == compute_pmi(c, "Only", Label::pos));
}

TEST_CASE("brand in 20 of 200 posts, all reports: SoA is log2(10)") {
  // 20 positives in 200 posts caps a report-only token at log2(200/20) = 3.32,
  // below the default threshold of 4.
  std::vector<std::set<std::string>> posts;
  std::vector<bool> labels;
  for (int i = 0; i < 200; ++i) {
    posts.push_back(i < 20 ? std::set<std::string>{"Brand"} : std::set<std::string>{"Other" + std::to_string(i % 5)});
    labels.push_back(i < 20);
  }
  auto c = counts_of(posts, labels);
  CHECK(compute_soa(c, "Brand") == doctest::Approx(std::log2(10.0)).epsilon(1e-12));
  CHECK(select_keywords(posts, labels, Lang::en).empty());
  auto lowered = select_keywords(posts, labels, Lang::en, KeywordSelection{3.0, 10});
  REQUIRE(!lowered.empty());
  CHECK(lowered[0].token == "Brand");
}

TEST_CASE("planted brand selected at the default threshold") {
  // 25 reports among 500 posts: a report-only token reaches log2(20) = 4.32.
  std::vector<std::set<std::string>> posts;
  std::vector<bool> labels;
  for (int i = 0; i < 500; ++i) {
    const bool pos = i % 20 == 0;
    std::set<std::string> t;
    if (pos) t.insert("Brand");
    t.insert("Common" + std::to_string(i % 3));
    posts.push_back(t);
    labels.push_back(pos);
  }
  auto sel = select_keywords(posts, labels, Lang::en, {}, 12345);
  REQUIRE(sel.size() == 1);
  CHECK(sel[0].token == "Brand");
  CHECK(sel[0].soa == doctest::Approx(std::log2(20.0)).epsilon(1e-12));
  CHECK(sel[0].support == 25);
  CHECK(sel[0].window_end == 12345);
  CHECK(sel[0].soa == sel[0].pmi_pos - sel[0].pmi_neg);
}

TEST_CASE("top_k truncation and ordering") {
  std::vector<std::set<std::string>> posts;
  std::vector<bool> labels;
  for (int i = 0; i < 400; ++i) {
    const bool pos = i < 20;
    std::set<std::string> t;
    if (pos)
      for (int k = 0; k < 15; ++k)
        if ((i + k) % 3 != 0 || k < 5) t.insert("Brand" + std::string(1, static_cast<char>('A' + k)));
    posts.push_back(t);
    labels.push_back(pos);
  }
  auto all = select_keywords(posts, labels, Lang::en, KeywordSelection{4.0, 100});
  CHECK(all.size() == 15);
  auto top = select_keywords(posts, labels, Lang::en);
  CHECK(top.size() == 10);
  for (std::size_t i = 1; i < top.size(); ++i) {
    const auto& a = top[i - 1];
    const auto& b = top[i];
    CHECK((a.soa > b.soa || (a.soa == b.soa && (a.support > b.support ||
                                                 (a.support == b.support && a.token < b.token)))));
  }
  CHECK(std::equal(top.begin(), top.end(), all.begin(),
                   [](const KeywordCandidate& x, const KeywordCandidate& y) { return x.token == y.token; }));
}

TEST_CASE("uniform tokens select nothing; empty window selects nothing") {
  std::vector<std::set<std::string>> posts(100, {"Everyone"});
  std::vector<bool> labels;
  for (int i = 0; i < 100; ++i) labels.push_back(i % 2 == 0);
  CHECK(select_keywords(posts, labels, Lang::en).empty());
  CHECK(select_keywords(std::vector<std::set<std::string>>{}, {}, Lang::en).empty());
  CHECK_THROWS_AS(select_keywords(posts, {true}, Lang::en), std::invalid_argument);
}

TEST_CASE("selection is invariant under post reordering") {
  testsupport::Lcg rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    auto rc = random_corpus(rng);
    auto base = select_keywords(rc.posts, rc.labels, Lang::en, KeywordSelection{0.5, 5});
    std::vector<std::size_t> idx(rc.posts.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
    std::vector<std::set<std::string>> p2;
    std::vector<bool> l2;
    for (auto i : idx) {
      p2.push_back(rc.posts[i]);
      l2.push_back(rc.labels[i]);
    }
    auto shuffled = select_keywords(p2, l2, Lang::en, KeywordSelection{0.5, 5});
    REQUIRE(base.size() == shuffled.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
      CHECK(base[i].token == shuffled[i].token);
      CHECK(base[i].soa == shuffled[i].soa);
    }
  }
}

TEST_CASE("a benign post without tracked tokens leaves support ordering unchanged") {
  testsupport::Lcg rng(43);
  for (int trial = 0; trial < 50; ++trial) {
    auto rc = random_corpus(rng);
    auto before = select_keywords(rc.posts, rc.labels, Lang::en, KeywordSelection{-100, 100});
    rc.posts.push_back({});
    rc.labels.push_back(false);
    auto after = select_keywords(rc.posts, rc.labels, Lang::en, KeywordSelection{-100, 100});
    REQUIRE(before.size() == after.size());
    auto by_token = [](std::vector<KeywordCandidate> v) {
      std::sort(v.begin(), v.end(), [](auto& a, auto& b) { return a.token < b.token; });
      return v;
    };
    auto b = by_token(before), a = by_token(after);
    for (std::size_t i = 0; i < b.size(); ++i) {
      CHECK(b[i].token == a[i].token);
      CHECK(b[i].support == a[i].support);
    }
  }
}

TEST_CASE("post overload uses the provider and the posts' language") {
  std::vector<PostRecord> posts;
  std::vector<bool> labels;
  for (int i = 0; i < 400; ++i) {
    const bool pos = i % 25 == 0;
    posts.push_back(testsupport::post("p" + std::to_string(i), 100 + i,
                                      pos ? "ヤマトを名乗る不在通知" : "今日はいい天気", Lang::ja));
    labels.push_back(pos);
  }
  auto sel = select_keywords(posts, labels, {}, 999);
  REQUIRE(!sel.empty());
  CHECK(sel[0].token == "ヤマト");
  CHECK(sel[0].lang == Lang::ja);
}

}  // TEST_SUITE
