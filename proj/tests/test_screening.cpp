#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "phishintel/screening.hpp"
#include "phishintel/synth.hpp"
#include "support.hpp"

using namespace phishintel;

namespace {

constexpr Timestamp kNow = 1'700'000'000;
constexpr Timestamp kDay = 86400;

Indicator first(const std::string& text, IndicatorSource src = IndicatorSource::text) {
  auto r = extract_indicators(text, src, src == IndicatorSource::image ? std::optional<std::string>("i") : std::nullopt);
  REQUIRE(!r.empty());
  return r[0];
}

struct Fixture {
  RankList ranks;
  DomainSet shorteners{"bit.ly", "t.co"};
  DomainSet dyndns{"duckdns.org"};
  FixtureWhois whois;

  Fixture() {
    ranks.add("google.com", 1);
    ranks.add("bit.ly", 50);
    ranks.add("t.co", 70);
    ranks.add("rare-site.com", 20000);
    whois.set("old-phish.com", kNow - 400 * kDay);
    whois.set("fresh-phish.com", kNow - 10 * kDay);
    whois.set("edge-phish.com", kNow - 365 * kDay);
    whois.set("edge2-phish.com", kNow - 366 * kDay);
    whois.set("nodate.com", std::nullopt);
  }
  ScreeningContext ctx() const { return {&ranks, &shorteners, &dyndns, &whois, kNow}; }
};

}  // namespace

TEST_SUITE("screening") {

TEST_CASE("rank-listed domain is dropped") {
  Fixture f;
  auto v = screen(first("https://www.google.com/search"), f.ctx());
  CHECK_FALSE(v.kept);
  CHECK(v.has(ScreenReason::rank_allowlisted));
}

TEST_CASE("ranked shortener is kept and annotated") {
  Fixture f;
  auto v = screen(first("https://bit.ly/3abcd"), f.ctx());
  CHECK(v.kept);
  CHECK(v.has(ScreenReason::shortener));
  CHECK_FALSE(v.has(ScreenReason::rank_allowlisted));
}

TEST_CASE("rank beyond the cutoff is not allowlisted") {
  Fixture f;
  auto v = screen(first("https://rare-site.com/"), f.ctx());
  CHECK(v.kept);
  f.ranks.set_cutoff(30000);
  CHECK_FALSE(screen(first("https://rare-site.com/"), f.ctx()).kept);
}

TEST_CASE("WHOIS age rule") {
  Fixture f;
  auto old = screen(first("https://old-phish.com/x"), f.ctx());
  CHECK_FALSE(old.kept);
  CHECK(old.has(ScreenReason::too_old));
  CHECK(old.domain_age_days == std::optional<long>(400));

  auto fresh = screen(first("https://fresh-phish.com/x"), f.ctx());
  CHECK(fresh.kept);
  CHECK(fresh.domain_age_days == std::optional<long>(10));

  CHECK(screen(first("https://edge-phish.com/"), f.ctx()).kept);
  CHECK_FALSE(screen(first("https://edge2-phish.com/"), f.ctx()).kept);
}

TEST_CASE("WHOIS failure and missing creation date keep the indicator") {
  Fixture f;
  for (const char* url : {"https://unknown-phish.com/", "https://nodate.com/"}) {
    auto v = screen(first(url), f.ctx());
    CHECK(v.kept);
    CHECK(v.has(ScreenReason::whois_unavailable));
    CHECK_FALSE(v.domain_age_days.has_value());
  }
}

TEST_CASE("dynamic DNS is an annotation only") {
  Fixture f;
  auto v = screen(first("https://login-bank.duckdns.org/x"), f.ctx());
  CHECK(v.kept);
  CHECK(v.has(ScreenReason::dynamic_dns));
}

TEST_CASE("dropped verdicts always carry a drop reason") {
  Fixture f;
  for (const char* url : {"https://google.com/", "https://old-phish.com/", "https://bit.ly/x", "https://new.top/"}) {
    auto v = screen(first(url), f.ctx());
    if (!v.kept) CHECK((v.has(ScreenReason::rank_allowlisted) || v.has(ScreenReason::too_old)));
  }
}

TEST_CASE("promote_domain_to_url") {
  auto d = first("evil[.]top");
  auto p = promote_domain_to_url(d);
  CHECK(p.normalized_url == "https://evil.top/");
  CHECK_FALSE(p.is_url);
  CHECK(promote_domain_to_url(first("a.b.c.example.xyz")).normalized_url == "https://a.b.c.example.xyz/");
  CHECK_THROWS_AS(promote_domain_to_url(first("https://evil.top/x")), std::invalid_argument);
}

TEST_CASE("screen_post exclusion and dedup") {
  Fixture f;
  auto p = testsupport::post("p", kNow, "");
  auto both_ranked = screen_post(p, {first("https://google.com/a"), first("https://google.com/b")}, f.ctx());
  CHECK(both_ranked.excluded);
  CHECK(both_ranked.kept.empty());

  auto mixed = screen_post(p, {first("https://google.com/a"), first("https://fresh-phish.com/x")}, f.ctx());
  CHECK_FALSE(mixed.excluded);
  CHECK(mixed.kept.size() == 1);
  CHECK(mixed.verdicts.size() == 2);

  auto dup = screen_post(
      p, {first("https://fresh-phish.com/x"), first("https://fresh-phish.com/x", IndicatorSource::image)}, f.ctx());
  CHECK(dup.kept.size() == 1);
  CHECK(dup.kept[0].source == IndicatorSource::text);
}

TEST_CASE("extract_post_indicators reads text and image texts") {
  auto p = testsupport::post("p", kNow, "see evil[.]top");
  p.image_texts = {{"i1", "go to https://evil.top/x"}, {"i2", std::nullopt}};
  auto r = extract_post_indicators(p);
  REQUIRE(r.size() == 2);
  CHECK(r[0].source == IndicatorSource::text);
  CHECK(r[1].source == IndicatorSource::image);
  CHECK(r[1].image_id == std::optional<std::string>("i1"));
}

TEST_CASE("monotone in rank cutoff and fail-open WHOIS on a synthetic corpus") {
  auto c = generate_synthetic(4, SynthConfig{.n_reports = 80, .n_benign = 220});
  RankList ranks;
  for (const auto& [r, d] : c.ranks) ranks.add(d, r);
  DomainSet shorteners(c.shorteners.begin(), c.shorteners.end());
  DomainSet dyndns(c.dynamic_dns.begin(), c.dynamic_dns.end());
  FixtureWhois whois;
  for (const auto& [d, t] : c.whois) whois.set(d, t);
  UnavailableWhois failing;

  auto kept_urls = [&](int cutoff, const WhoisClient* w) {
    ranks.set_cutoff(cutoff);
    std::set<std::string> kept;
    for (const auto& p : c.posts) {
      ScreeningContext ctx{&ranks, &shorteners, &dyndns, w, p.created_at};
      for (const auto& ind : screen_post(p, extract_post_indicators(p), ctx).kept)
        kept.insert(p.post_id + " " + ind.normalized_url);
    }
    return kept;
  };
  auto includes = [](const std::set<std::string>& big, const std::set<std::string>& small) {
    return std::includes(big.begin(), big.end(), small.begin(), small.end());
  };
  auto k10 = kept_urls(10, &whois);
  auto k100 = kept_urls(100, &whois);
  auto k10000 = kept_urls(10000, &whois);
  CHECK(includes(k10, k100));
  CHECK(includes(k100, k10000));
  CHECK(includes(kept_urls(10000, &failing), k10000));
  CHECK(kept_urls(10000, &whois) == k10000);
}

TEST_CASE("rank list and domain set parsing") {
  std::istringstream csv("rank,domain\n1,google.com\n2,youtube.com\n");
  auto r = RankList::parse(csv);
  CHECK(r.rank("youtube.com") == std::optional<int>(2));
  std::istringstream bad("1,a.com\n2,a.com\n");
  CHECK_THROWS(RankList::parse(bad));
  std::istringstream neg("0,a.com\n");
  CHECK_THROWS(RankList::parse(neg));

  std::istringstream list("# shorteners\nbit.ly\n\nt.co\n");
  auto s = parse_domain_set(list);
  CHECK(s.size() == 2);
  CHECK(matches_domain_set(s, "bit.ly"));
  CHECK(matches_domain_set(s, "x.t.co"));
  CHECK_FALSE(matches_domain_set(s, "notbit.ly"));
}

TEST_CASE("ISO-8601 parsing and formatting") {
  CHECK(parse_iso8601("2023-01-01") == std::optional<Timestamp>(1672531200));
  CHECK(parse_iso8601("2023-01-01T01:00:00Z") == std::optional<Timestamp>(1672534800));
  CHECK(parse_iso8601("2023-01-01T09:00:00+09:00") == std::optional<Timestamp>(1672531200));
  CHECK_FALSE(parse_iso8601("yesterday").has_value());
  CHECK(format_iso8601(1672531200) == "2023-01-01T00:00:00Z");
  CHECK(format_iso8601(951782400) == "2000-02-29T00:00:00Z");
  for (Timestamp t : {0LL, 86399LL, 1234567890LL, 4102444800LL}) CHECK(parse_iso8601(format_iso8601(t)) == t);
}

TEST_CASE("WHOIS fixture JSON and raw response parsing") {
  auto w = FixtureWhois::parse(R"({"a.com":"2020-05-01T00:00:00Z","b.com":null})");
  CHECK(w.lookup("a.com").status == WhoisResult::Status::ok);
  CHECK(w.lookup("b.com").status == WhoisResult::Status::no_creation_date);
  CHECK(w.lookup("c.com").status == WhoisResult::Status::unavailable);

  CHECK(parse_whois_creation_date("Domain Name: X.COM\r\n   Creation Date: 1997-09-15T04:00:00Z\r\n") ==
        parse_iso8601("1997-09-15T04:00:00Z"));
  CHECK_FALSE(parse_whois_creation_date("No match for domain").has_value());
  CHECK(parse_whois_referral("refer:        whois.verisign-grs.com\n") ==
        std::optional<std::string>("whois.verisign-grs.com"));
}

}  // TEST_SUITE
