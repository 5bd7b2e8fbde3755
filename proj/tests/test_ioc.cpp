#include <doctest.h>

#include <algorithm>

#include "phishintel/ioc.hpp"
#include "phishintel/text.hpp"
#include "support.hpp"

using namespace phishintel;

TEST_SUITE("ioc_extract") {

TEST_CASE("refang examples") {
  CHECK(refang("hxxp://evil[.]com/a") == "http://evil.com/a");
  CHECK(refang("visit example(.)com now") == "visit example.com now");
  CHECK(refang("no indicators here") == "no indicators here");
  CHECK(refang("http[:]//a{.}b\\.com[/]") == "http://a.b.com");
  CHECK(refang("example .com") == "example.com");
  CHECK(refang("sentence ends . Next") == "sentence ends . Next");
  CHECK(refang("evil．com") == "evil.com");
}

TEST_CASE("refang origin map points back into the input") {
  const std::string in = "go hxxps://a[.]b.top[/]x";
  auto r = refang_with_origin(in);
  CHECK(r.text == "go https://a.b.top/x");
  REQUIRE(r.origin.size() == r.text.size() + 1);
  CHECK(r.origin.back() == in.size());
  for (std::size_t i = 0; i < r.text.size(); ++i) CHECK(r.origin[i] < in.size());
  CHECK(std::is_sorted(r.origin.begin(), r.origin.end()));
}

TEST_CASE("classify_defang_form") {
  CHECK(classify_defang_form("example[.]com") == DefangForm::bracket_dot);
  CHECK(classify_defang_form("hXXp://example.com") == DefangForm::hXXp_mixed);
  CHECK(classify_defang_form("http://example.com") == DefangForm::none);
  CHECK(classify_defang_form("hxxp://evil[.]com") == DefangForm::hxxp_lower);
  CHECK(classify_defang_form("http[:]//evil[.]com") == DefangForm::bracket_colon);
  CHECK(classify_defang_form("evil.com[/]") == DefangForm::bracket_slash);
  CHECK(classify_defang_form("evil(.)com") == DefangForm::paren_dot);
  CHECK(classify_defang_form("evil{.}com") == DefangForm::brace_dot);
  CHECK(classify_defang_form("evil\\.com") == DefangForm::backslash_dot);
  CHECK(classify_defang_form("evil .com") == DefangForm::space_dot);
  for (int i = 0; i <= static_cast<int>(DefangForm::none); ++i) {
    auto f = static_cast<DefangForm>(i);
    CHECK(parse_defang_form(to_string(f)) == f);
  }
}

TEST_CASE("validate_url examples") {
  auto ok = validate_url("https://a.example.com/p?q=1");
  REQUIRE(std::holds_alternative<UrlParts>(ok));
  const auto& parts = std::get<UrlParts>(ok);
  CHECK(parts.scheme == "https");
  CHECK(parts.host == "a.example.com");
  CHECK(parts.path == "/p");
  CHECK(parts.query == "q=1");
  CHECK(std::get<UrlError>(validate_url("http://")) == UrlError::bad_host);
  CHECK(std::get<UrlError>(validate_url("https://exa mple.com")) == UrlError::bad_char);
  CHECK(std::get<UrlError>(validate_url("ftp://example.com")) == UrlError::bad_scheme);
}

TEST_CASE("validate_domain examples") {
  CHECK_FALSE(validate_domain("login.example.com").has_value());
  CHECK(validate_domain("a..b.com") == DomainError::empty_label);
  CHECK(validate_domain(std::string(64, 'a') + ".com") == DomainError::label_too_long);
  CHECK_FALSE(validate_domain(std::string(63, 'a') + ".com").has_value());
}

TEST_CASE("public suffix rules") {
  auto psl = PublicSuffixList::parse("com\nuk\nco.uk\n*.ck\n!www.ck\n// comment\n");
  CHECK(psl.registrable_domain("a.b.example.co.uk") == "example.co.uk");
  CHECK(psl.registrable_domain("login.example.com") == "example.com");
  CHECK(psl.public_suffix("foo.bar.ck") == "bar.ck");
  CHECK(psl.registrable_domain("a.www.ck") == "www.ck");
  CHECK(psl.is_known_tld("uk"));
  CHECK_FALSE(psl.is_known_tld("zz"));
  const auto& bundled = PublicSuffixList::bundled();
  CHECK(bundled.size() > 500);
  CHECK(bundled.is_known_tld("top"));
  CHECK(bundled.registrable_domain("x.y.example.co.jp") == "example.co.jp");
}

TEST_CASE("extract_indicators examples") {
  auto a = extract_indicators("PHISHING hxxps://login.evil.top/x", IndicatorSource::text);
  REQUIRE(a.size() == 1);
  CHECK(a[0].defang_form == DefangForm::hxxp_lower);
  CHECK(a[0].tld == "top");
  CHECK(a[0].host == "login.evil.top");
  CHECK(a[0].normalized_url == "https://login.evil.top/x");
  CHECK(a[0].raw == "hxxps://login.evil.top/x");
  CHECK(a[0].is_url);

  auto b = extract_indicators("evil[.]com and https://evil.com/a", IndicatorSource::text);
  REQUIRE(b.size() == 2);
  CHECK(b[0].host == "evil.com");
  CHECK(b[1].host == "evil.com");
  CHECK_FALSE(b[0].is_url);
  CHECK(b[0].normalized_url == "https://evil.com/");
  CHECK(b[0].defang_form == DefangForm::bracket_dot);
  CHECK(b[1].normalized_url == "https://evil.com/a");
  CHECK(b[1].defang_form == DefangForm::none);

  CHECK(extract_indicators("", IndicatorSource::text).empty());
}

TEST_CASE("duplicates collapse and bare domains inside URLs are not repeated") {
  auto r = extract_indicators("https://evil.com/a then hxxps://evil[.]com/a and evil.com", IndicatorSource::text);
  REQUIRE(r.size() == 2);
  CHECK(r[0].normalized_url == "https://evil.com/a");
  CHECK(r[0].defang_form == DefangForm::none);
  CHECK(r[1].normalized_url == "https://evil.com/");
}

TEST_CASE("image source and id are recorded") {
  auto r = extract_indicators("verify at usps-track(.)online", IndicatorSource::image, "img1");
  REQUIRE(r.size() == 1);
  CHECK(r[0].source == IndicatorSource::image);
  CHECK(r[0].image_id == std::optional<std::string>("img1"));
  CHECK(r[0].registrable_domain == "usps-track.online");
}

TEST_CASE("Japanese full-width dots") {
  auto r = extract_indicators("詳細はamazon-verify．info/loginへ", IndicatorSource::text);
  REQUIRE(r.size() == 1);
  CHECK(r[0].host == "amazon-verify.info");
}

TEST_CASE("bare words with unknown TLDs are not domains") {
  CHECK(extract_indicators("file.txt and config.yamlx", IndicatorSource::text).empty());
}

TEST_CASE("extraction is invariant under prior refanging up to defang form") {
  const std::vector<std::string> texts = {"hxxp://a[.]evil.top/x and b(.)evil.xyz",
                                          "evil{.}com[/] then http[:]//c.evil.info/y?z=1",
                                          "詳細はevil．shop/へ", "nothing"};
  for (const auto& t : texts) {
    auto a = extract_indicators(t, IndicatorSource::text);
    auto b = extract_indicators(refang(t), IndicatorSource::text);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].normalized_url == b[i].normalized_url);
      CHECK(a[i].host == b[i].host);
      CHECK(a[i].is_url == b[i].is_url);
      CHECK(b[i].defang_form == DefangForm::none);
    }
  }
}

TEST_CASE("fuzz: refang idempotent, outputs revalidate, hosts are valid") {
  const std::string alphabet = "abcxp.-/:[](){}\\ hXtsom0123．あ#?=";
  std::vector<std::string> pieces = {"hxxp", "hXXps", "[.]", "(.)", "{.}", "\\.", "[:]", "[/]", " .",
                                     "://", "evil", "com", "top", "www", ".", "/", "．", "https", "example"};
  testsupport::Lcg rng(99);
  auto decoded = text::decode(alphabet);
  for (int i = 0; i < 3000; ++i) {
    std::string t;
    const std::size_t n = rng.below(30);
    for (std::size_t k = 0; k < n; ++k) {
      if (rng.below(2)) t += pieces[rng.below(pieces.size())];
      else t += text::encode(decoded[rng.below(decoded.size())]);
    }
    const std::string once = refang(t);
    CHECK(refang(once) == once);
    for (const auto& ind : extract_indicators(t, IndicatorSource::text)) {
      CHECK(std::holds_alternative<UrlParts>(validate_url(ind.normalized_url)));
      CHECK_FALSE(validate_domain(ind.host).has_value());
      CHECK(ind.tld == ind.host.substr(ind.host.rfind('.') + 1));
      CHECK((ind.defang_form == DefangForm::none) == (classify_defang_form(ind.raw) == DefangForm::none));
    }
  }
}

}  // TEST_SUITE
