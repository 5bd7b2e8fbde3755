#include "phishintel/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "phishintel/screening.hpp"
#include "phishintel/text.hpp"

namespace phishintel {

std::size_t SyntheticCorpus::planted_total() const { return std::accumulate(planted.begin(), planted.end(), std::size_t{0}); }

namespace {

constexpr Timestamp kDay = 86400;

class Draw {
 public:
  explicit Draw(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do {
      v = eng_();
    } while (v >= limit);
    return v % n;
  }
  std::int64_t between(std::int64_t lo, std::int64_t hi) {  // inclusive
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }
  double unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return unit() < p; }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[below(v.size())];
  }
  std::size_t weighted(const std::vector<double>& w) {
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    double r = unit() * total;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (r < w[i]) return i;
      r -= w[i];
    }
    return w.size() - 1;
  }
  std::string digits(std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s.push_back(static_cast<char>('0' + below(10)));
    return s;
  }
  std::string code(std::size_t n) {
    static const std::string alphabet = "abcdefghijkmnpqrstuvwxyzABCDEFGHJKLMNPQRSTUVWXYZ23456789";
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s.push_back(alphabet[below(alphabet.size())]);
    return s;
  }

 private:
  std::mt19937_64 eng_;
};

const std::vector<std::string> kTopDomains = {
    "google.com",    "youtube.com",   "facebook.com",      "microsoft.com",  "twitter.com",
    "amazon.com",    "apple.com",     "wikipedia.org",     "github.com",     "bit.ly",
    "bbc.co.uk",     "nytimes.com",   "reuters.com",       "theguardian.com", "cnn.com",
    "linkedin.com",  "t.co",          "yahoo.co.jp",       "nhk.or.jp",      "nikkei.com",
    "itmedia.co.jp", "zdnet.com",     "wired.com",         "arstechnica.com", "bleepingcomputer.com",
    "cisa.gov",      "jpcert.or.jp",  "ipa.go.jp",         "tinyurl.com",    "krebsonsecurity.com",
};
const std::vector<std::string> kShorteners = {"bit.ly", "t.co", "tinyurl.com", "is.gd", "cutt.ly", "rebrand.ly"};
const std::vector<std::string> kDynamicDns = {"duckdns.org", "ddns.net", "dynv6.net", "hopto.org"};

const std::vector<std::string> kLureWords = {"secure", "login", "verify", "account", "support", "update", "delivery",
                                             "billing", "service", "notice", "auth", "id"};
const std::vector<std::string> kReportTlds = {"top", "xyz", "shop", "online", "vip", "info", "cn", "com", "net", "buzz"};
const std::vector<std::string> kReportPaths = {"", "login", "verify", "account/update", "signin", "secure/confirm"};

const std::vector<std::string> kBlogWords = {"cyber", "daily", "tech", "news", "notes", "lab", "research", "insight",
                                             "digest", "weekly", "blog", "review", "defense", "field", "signal"};
const std::vector<std::string> kBlogTlds = {"com", "org", "net", "io", "jp", "co.jp", "info"};
const std::vector<std::string> kBlogPaths = {"", "2023/01/roundup", "article/", "posts/notes-", "research/report-"};

const std::vector<std::string> kReportTemplatesEn = {
    "got a fake {B} text today, do not click {X} #phishing",
    "{B} smishing going around: {X} stay safe",
    "phishing site impersonating {B} {X}",
    "reported another {B} scam page {X} #scam",
    "received this {B} message with link {X} clearly a phishing attempt",
    "new {B} phishing domain {X} #phishing #smishing",
};
const std::vector<std::string> kImageOnlyTemplatesEn = {
    "{B} scam sms again, watch out #smishing",
    "this {B} phishing text just hit my phone",
    "fake {B} delivery notice, scam alert #scam",
};
const std::vector<std::string> kImageTemplatesEn = {
    "[{B}] Your parcel is on hold due to an unpaid fee. Confirm here {U} Reply STOP to 2{N}",
    "{B}: unusual sign-in detected on your account. Verify within 24h {U}",
    "{B} notice: your payment failed. Update billing at {U} ref {N}",
};
const std::vector<std::string> kReportTemplatesJa = {
    "{B}を名乗る偽のショートメールが届きました {X} #フィッシング",
    "{B}の偽サイトに注意 {X} #詐欺",
    "また{B}を装った詐欺 {X}",
    "{B}のフィッシング詐欺です {X} #フィッシング",
};
const std::vector<std::string> kImageOnlyTemplatesJa = {
    "{B}を装った詐欺のショートメールがまた来た #詐欺",
    "この{B}の通知はフィッシングです",
};
const std::vector<std::string> kImageTemplatesJa = {
    "【{B}】お荷物のお届けにあがりましたが不在の為持ち帰りました。確認は {U}",
    "{B}ご利用確認のお願い 下記より手続きしてください {U} 受付番号{N}",
};

const std::vector<std::string> kBenignTemplatesEn = {
    "new report on ransomware trends in healthcare {X} #CyberSecurity",
    "great talk about zero trust architecture at the conference {X} #InfoSec",
    "how to recognize scam calls, a short guide {X}",
    "patch your vpn appliances now, details here {X} #Security",
    "our team's writeup on phishing awareness training {X}",
    "weekly threat roundup {X} #CyberThreat #InfoSec",
    "spam filtering tips for small businesses {X}",
    "tips for email security at home {X} #EmailSecurity",
    "fraud prevention checklist for online shops {X} #CyberCrime",
    "a long read on social engineering and why it works {X}",
};
const std::vector<std::string> kBenignDefangTemplatesEn = {
    "loader analysis, c2 at {X} #ThreatHunting",
    "sinkholed {X} today, nice work everyone #Threat",
};
const std::vector<std::string> kBenignTemplatesJa = {
    "情報セキュリティの最新動向まとめ {X} #セキュリティ",
    "詐欺電話への対策について解説しました {X}",
    "今週の脅威情報 {X} #サイバーセキュリティ",
    "フィッシング対策の基本 {X}",
    "サイバー攻撃の統計が公開されました {X}",
};
const std::vector<std::string> kBenignHashtagsEn = {"CyberSecurity", "InfoSec", "Security", "cloud", "privacy",
                                                    "devsecops"};
const std::vector<std::string> kBenignHashtagsJa = {"セキュリティ", "サイバーセキュリティ", "情報セキュリティ"};
const std::vector<std::string> kBenignImageTexts = {"slide 3 of 12", "conference 2023", "agenda day 2",
                                                    "quarterly numbers", "資料 3ページ"};
const std::vector<std::string> kMentionNames = {"secnews", "infosec_daily", "cert_team", "blueteam", "itnews_jp"};

const std::vector<std::string> kExpertProfilesEn = {"Threat hunter | malware analysis", "SOC analyst. phishing and fraud research",
                                                    "CSIRT member, infosec", "security researcher tracking scam infrastructure"};
const std::vector<std::string> kExpertProfilesJa = {"セキュリティ研究者 フィッシング調査", "CSIRT所属 malware解析",
                                                    "詐欺サイトを追跡しています"};
const std::vector<std::string> kPlainProfilesEn = {"coffee lover", "dad, runner, gamer", "photography and travel",
                                                   "student", "cat person"};
const std::vector<std::string> kPlainProfilesJa = {"コーヒー好き", "写真と旅行", "大学生です"};
const std::vector<std::string> kSecurityRecentEn = {"tracking a new phishing kit today", "smishing wave against banks",
                                                    "scam domains registered overnight", "malware sample shared with the team"};
const std::vector<std::string> kPlainRecentEn = {"lovely weather today", "new coffee place downtown", "weekend hike photos",
                                                 "watching the game tonight", "finally finished my book"};
const std::vector<std::string> kSecurityRecentJa = {"フィッシングサイトを報告しました", "今日も詐欺SMSの調査",
                                                    "サイバー攻撃の分析中"};
const std::vector<std::string> kPlainRecentJa = {"今日はいい天気", "週末は山に行きました", "新しいカフェに行った"};

std::string romanize(const std::string& brand, std::size_t index, Lang lang) {
  static const std::map<std::string, std::string> known = {
      {"アマゾン", "amazon"}, {"ヤマト", "yamato"}, {"ドコモ", "docomo"}, {"メルカリ", "mercari"}};
  if (lang == Lang::ja) {
    auto it = known.find(brand);
    return it != known.end() ? it->second : "brand" + std::to_string(index);
  }
  std::string s;
  for (char c : brand)
    if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) s.push_back(c);
    else if (c >= 'A' && c <= 'Z') s.push_back(static_cast<char>(c - 'A' + 'a'));
  return s.empty() ? "brand" + std::to_string(index) : s;
}

std::string fill(std::string tpl, const std::vector<std::pair<std::string, std::string>>& vars) {
  for (const auto& [key, value] : vars) {
    std::size_t pos = 0;
    while ((pos = tpl.find(key, pos)) != std::string::npos) {
      tpl.replace(pos, key.size(), value);
      pos += value.size();
    }
  }
  return tpl;
}

std::string replace_dots(const std::string& host, const std::string& with) {
  std::string out;
  for (char c : host) {
    if (c == '.') out += with;
    else out.push_back(c);
  }
  return out;
}

// Renders host + path as a URL or bare domain in the requested form.
std::string render(const std::string& host, const std::string& path, bool bare, DefangForm form, bool fullwidth) {
  if (bare) {
    switch (form) {
      case DefangForm::space_dot: return replace_dots(host, " .");
      case DefangForm::bracket_dot: return replace_dots(host, "[.]");
      case DefangForm::paren_dot: return replace_dots(host, "(.)");
      case DefangForm::brace_dot: return replace_dots(host, "{.}");
      case DefangForm::backslash_dot: return replace_dots(host, "\\.");
      default: return fullwidth ? replace_dots(host, "\xEF\xBC\x8E") : host;
    }
  }
  switch (form) {
    case DefangForm::space_dot: return "https://" + replace_dots(host, " .") + "/" + path;
    case DefangForm::bracket_dot: return "https://" + replace_dots(host, "[.]") + "/" + path;
    case DefangForm::paren_dot: return "https://" + replace_dots(host, "(.)") + "/" + path;
    case DefangForm::brace_dot: return "https://" + replace_dots(host, "{.}") + "/" + path;
    case DefangForm::backslash_dot: return "https://" + replace_dots(host, "\\.") + "/" + path;
    case DefangForm::hxxp_lower: return "hxxps://" + host + "/" + path;
    case DefangForm::hXXp_mixed: return "hXXps://" + host + "/" + path;
    case DefangForm::bracket_colon: return "https[:]//" + host + "/" + path;
    case DefangForm::bracket_slash: return "https://" + host + "[/]" + path;
    case DefangForm::none: break;
  }
  return "https://" + (fullwidth ? replace_dots(host, "\xEF\xBC\x8E") : host) + "/" + path;
}

bool is_dot_form(DefangForm f) {
  return f == DefangForm::space_dot || f == DefangForm::bracket_dot || f == DefangForm::paren_dot ||
         f == DefangForm::brace_dot || f == DefangForm::backslash_dot || f == DefangForm::none;
}

struct Campaign {
  std::string host;
  std::string path;
  bool shortener = false;
};

struct Author {
  std::string id;
  Lang lang;
  bool expert;
};

struct Draft {
  Timestamp created_at;
  std::size_t order;
  PostRecord post;
  bool label;
  std::size_t planted;
};

AuthorRecord make_author(Draw& r, const Author& a) {
  AuthorRecord rec;
  rec.author_id = a.id;
  const bool ja = a.lang == Lang::ja;
  rec.profile_text = a.expert ? r.pick(ja ? kExpertProfilesJa : kExpertProfilesEn)
                              : r.pick(ja ? kPlainProfilesJa : kPlainProfilesEn);
  const std::size_t n_security = a.expert ? static_cast<std::size_t>(r.between(6, 10)) : static_cast<std::size_t>(r.between(0, 3));
  for (std::size_t i = 0; i < AuthorRecord::kMaxRecent; ++i) {
    const bool sec = i < n_security;
    rec.recent_texts.push_back(sec ? r.pick(ja ? kSecurityRecentJa : kSecurityRecentEn)
                                   : r.pick(ja ? kPlainRecentJa : kPlainRecentEn));
  }
  return rec;
}

}  // namespace

SyntheticCorpus generate_synthetic(std::uint64_t seed, const SynthConfig& cfg) {
  if (cfg.n_reports + cfg.n_benign == 0) throw std::invalid_argument("synthetic corpus: zero posts requested");
  if (cfg.span <= 0) throw std::invalid_argument("synthetic corpus: span must be positive");
  if (cfg.defang_mix.size() != kDefangFormCount + 1)
    throw std::invalid_argument("synthetic corpus: defang_mix needs one weight per form plus none");
  if (cfg.n_reports > 0 && cfg.brands_en.empty() && cfg.ja_fraction < 1.0)
    throw std::invalid_argument("synthetic corpus: no English brands");
  if (cfg.n_reports > 0 && cfg.brands_ja.empty() && cfg.ja_fraction > 0.0)
    throw std::invalid_argument("synthetic corpus: no Japanese brands");

  Draw r(seed);
  const auto& psl = PublicSuffixList::bundled();
  SyntheticCorpus out;
  out.shorteners = kShorteners;
  out.dynamic_dns = kDynamicDns;
  for (std::size_t i = 0; i < kTopDomains.size(); ++i) out.ranks.emplace_back(static_cast<int>(i + 1), kTopDomains[i]);

  char seed_tag[24];
  std::snprintf(seed_tag, sizeof seed_tag, "%llx", static_cast<unsigned long long>(seed));

  // Reporting users: a fixed fraction shares once, the rest two or more times.
  std::vector<Author> reporters;
  std::vector<std::size_t> report_author;
  if (cfg.n_reports > 0) {
    const double f = std::clamp(cfg.single_share_fraction, 0.0, 1.0);
    std::size_t users = static_cast<std::size_t>(std::llround(static_cast<double>(cfg.n_reports) / (f + (1.0 - f) * 3.0)));
    users = std::clamp<std::size_t>(users, 1, cfg.n_reports);
    std::size_t once = static_cast<std::size_t>(std::llround(f * static_cast<double>(users)));
    std::size_t multi = users - once;
    while (multi > 0 && once + 2 * multi > cfg.n_reports) {
      --multi;
      ++once;
    }
    if (multi == 0) once = cfg.n_reports;
    std::vector<std::size_t> shares(once + multi, 1);
    for (std::size_t i = once; i < shares.size(); ++i) shares[i] = 2;
    std::size_t remaining = cfg.n_reports - once - 2 * multi;
    while (remaining-- > 0) ++shares[once + r.below(multi)];
    for (std::size_t u = 0; u < shares.size(); ++u) {
      reporters.push_back({"r" + std::string(seed_tag) + "-" + std::to_string(u),
                           r.chance(cfg.ja_fraction) ? Lang::ja : Lang::en, r.chance(cfg.expert_fraction)});
      for (std::size_t k = 0; k < shares[u]; ++k) report_author.push_back(u);
    }
    for (std::size_t i = report_author.size(); i > 1; --i) std::swap(report_author[i - 1], report_author[r.below(i)]);
  }

  std::vector<Author> benign_authors;
  if (cfg.n_benign > 0) {
    const std::size_t n = std::max<std::size_t>(1, cfg.n_benign / 4);
    for (std::size_t u = 0; u < n; ++u)
      benign_authors.push_back({"b" + std::string(seed_tag) + "-" + std::to_string(u),
                                r.chance(cfg.ja_fraction) ? Lang::ja : Lang::en, r.chance(0.3)});
  }

  // Benign link targets: popular domains, long-registered blogs and blogs
  // absent from the WHOIS fixture.
  std::vector<std::string> old_blogs;
  std::vector<std::string> unknown_blogs;
  for (std::size_t i = 0; i < 60; ++i) {
    std::string host = r.pick(kBlogWords) + "-" + r.pick(kBlogWords) + std::to_string(i) + "." + r.pick(kBlogTlds);
    if (i % 2 == 0) {
      old_blogs.push_back(host);
      out.whois[psl.registrable_domain(host)] =
          i % 10 == 0 ? std::optional<Timestamp>() : std::optional<Timestamp>(cfg.start - r.between(2 * 365, 20 * 365) * kDay);
    } else {
      unknown_blogs.push_back(host);
    }
  }
  // Popular domains are old.
  for (const auto& d : kTopDomains)
    if (std::find(kShorteners.begin(), kShorteners.end(), d) == kShorteners.end())
      out.whois[d] = cfg.start - r.between(10 * 365, 25 * 365) * kDay;

  std::map<std::string, std::vector<Campaign>> campaigns;
  auto new_campaign = [&](const std::string& brand_slug) {
    Campaign c;
    const double kind = r.unit();
    if (kind < 0.12) {
      c.host = r.pick(kShorteners);
      c.path = r.code(7);
      c.shortener = true;
      return c;
    }
    if (kind < 0.22) {
      c.host = brand_slug + "-" + r.pick(kLureWords) + r.digits(2) + "." + r.pick(kDynamicDns);
    } else {
      c.host = brand_slug + "-" + r.pick(kLureWords) + (r.chance(0.5) ? r.digits(static_cast<std::size_t>(r.between(2, 4))) : "") +
               "." + r.pick(kReportTlds);
      if (r.chance(0.2)) c.host = r.pick(kLureWords) + "." + c.host;
      // Fresh registration.
      out.whois[psl.registrable_domain(c.host)] = cfg.start - r.between(1, 200) * kDay;
    }
    c.path = r.pick(kReportPaths);
    return c;
  };

  std::vector<Draft> drafts;
  std::size_t order = 0;

  for (std::size_t i = 0; i < cfg.n_reports; ++i) {
    const Author& a = reporters[report_author[i]];
    const bool ja = a.lang == Lang::ja;
    const auto& brands = ja ? cfg.brands_ja : cfg.brands_en;
    const std::size_t brand_index = r.below(brands.size());
    const std::string& brand = brands[brand_index];
    const std::string slug = romanize(brand, brand_index, a.lang);

    auto& pool = campaigns[slug];
    Campaign c = (!pool.empty() && r.chance(0.35)) ? r.pick(pool) : new_campaign(slug);
    if (pool.empty() || std::none_of(pool.begin(), pool.end(), [&](const Campaign& p) { return p.host == c.host && p.path == c.path; }))
      pool.push_back(c);

    DefangForm form = static_cast<DefangForm>(r.weighted(cfg.defang_mix));
    const bool bare = !c.shortener && r.chance(cfg.bare_domain_fraction);
    if (bare && !is_dot_form(form)) form = DefangForm::bracket_dot;
    const bool fullwidth = ja && form == DefangForm::none && r.chance(0.3);
    const std::string shown = render(c.host, c.path, bare, form, fullwidth);

    // Non-experts mostly post screenshots; some carry the link only there.
    const double image_p = a.expert ? 0.3 : 0.85;
    std::size_t n_images = r.chance(image_p) ? static_cast<std::size_t>(r.between(1, 2)) : 0;
    const bool image_only = n_images > 0 && !a.expert && r.chance(0.4);

    PostRecord p;
    p.author_id = a.id;
    p.lang = a.lang;
    p.created_at = cfg.start + static_cast<Timestamp>(r.below(static_cast<std::uint64_t>(cfg.span)));
    std::size_t planted = 0;
    if (image_only) {
      p.text = fill(r.pick(ja ? kImageOnlyTemplatesJa : kImageOnlyTemplatesEn), {{"{B}", brand}});
    } else {
      p.text = fill(r.pick(ja ? kReportTemplatesJa : kReportTemplatesEn), {{"{B}", brand}, {"{X}", shown}});
      ++planted;
    }
    const std::string plain_url = "https://" + c.host + "/" + c.path;
    for (std::size_t k = 0; k < n_images; ++k) {
      ImageText im;
      im.image_id = "img-" + std::string(seed_tag) + "-" + std::to_string(i) + "-" + std::to_string(k);
      if (k == 0) {
        im.text = fill(r.pick(ja ? kImageTemplatesJa : kImageTemplatesEn),
                       {{"{B}", brand}, {"{U}", plain_url}, {"{N}", r.digits(4)}});
        ++planted;
      } else if (r.chance(0.5)) {
        im.text = ja ? "送信元 +81 " + r.digits(4) : "Sent from +1 " + r.digits(4);
      }
      p.image_texts.push_back(std::move(im));
    }
    // Hashtags as written in the text.
    for (const auto& tok : text::split_whitespace(p.text))
      if (tok.size() > 1 && tok[0] == '#') p.hashtags.push_back(tok.substr(1));
    drafts.push_back({p.created_at, order++, std::move(p), true, planted});
  }

  for (std::size_t i = 0; i < cfg.n_benign; ++i) {
    const Author& a = r.pick(benign_authors);
    const bool ja = a.lang == Lang::ja;
    PostRecord p;
    p.author_id = a.id;
    p.lang = a.lang;
    p.created_at = cfg.start + static_cast<Timestamp>(r.below(static_cast<std::uint64_t>(cfg.span)));

    std::string host;
    std::string path;
    std::string shown;
    std::string tpl;
    if (!ja && r.chance(cfg.benign_defang_fraction)) {
      host = r.pick(kLureWords) + r.digits(3) + "." + r.pick(kReportTlds);
      out.whois[psl.registrable_domain(host)] = cfg.start - r.between(1, 200) * kDay;
      shown = render(host, "", true, DefangForm::bracket_dot, false);
      tpl = r.pick(kBenignDefangTemplatesEn);
    } else {
      const double kind = r.unit();
      if (kind < 0.35) {
        const std::string& top = r.pick(kTopDomains);
        host = (std::find(kShorteners.begin(), kShorteners.end(), top) == kShorteners.end() && r.chance(0.5)) ? "www." + top : top;
      } else if (kind < 0.65) {
        host = r.pick(old_blogs);
      } else {
        host = r.pick(unknown_blogs);
      }
      path = r.pick(kBlogPaths);
      if (!path.empty() && path.back() == '-') path += std::to_string(r.between(1, 999));
      if (!path.empty() && path.back() == '/') path += std::to_string(r.between(1000, 9999));
      shown = render(host, path, false, DefangForm::none, false);
      tpl = r.pick(ja ? kBenignTemplatesJa : kBenignTemplatesEn);
    }
    p.text = fill(tpl, {{"{X}", shown}});
    if (r.chance(0.4)) {
      const std::size_t n_mentions = static_cast<std::size_t>(r.between(1, 2));
      for (std::size_t k = 0; k < n_mentions; ++k) {
        const std::string& m = r.pick(kMentionNames);
        if (std::find(p.mentions.begin(), p.mentions.end(), m) != p.mentions.end()) continue;
        p.mentions.push_back(m);
        p.text += " @" + m;
      }
    }
    const std::size_t extra_tags = static_cast<std::size_t>(r.between(0, 2));
    for (std::size_t k = 0; k < extra_tags; ++k) p.text += " #" + r.pick(ja ? kBenignHashtagsJa : kBenignHashtagsEn);
    if (r.chance(0.4)) {
      ImageText im;
      im.image_id = "img-" + std::string(seed_tag) + "-b" + std::to_string(i);
      if (r.chance(0.5)) im.text = r.pick(kBenignImageTexts);
      p.image_texts.push_back(std::move(im));
    }
    for (const auto& tok : text::split_whitespace(p.text))
      if (tok.size() > 1 && tok[0] == '#' &&
          std::find(p.hashtags.begin(), p.hashtags.end(), tok.substr(1)) == p.hashtags.end())
        p.hashtags.push_back(tok.substr(1));
    drafts.push_back({p.created_at, order++, std::move(p), false, 1});
  }

  std::sort(drafts.begin(), drafts.end(), [](const Draft& x, const Draft& y) {
    return x.created_at != y.created_at ? x.created_at < y.created_at : x.order < y.order;
  });
  for (std::size_t i = 0; i < drafts.size(); ++i) {
    auto& d = drafts[i];
    d.post.post_id = "p" + std::string(seed_tag) + "-" + std::to_string(i);
    d.post.matched_keywords = match_queries(d.post, default_security_keywords(d.post.lang));
    out.posts.push_back(std::move(d.post));
    out.labels.push_back(d.label);
    out.planted.push_back(d.planted);
  }

  for (const auto& a : reporters) out.authors.push_back(make_author(r, a));
  for (const auto& a : benign_authors) out.authors.push_back(make_author(r, a));
  return out;
}

void save_synthetic(const SyntheticCorpus& corpus, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(fs::path(dir) / name, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + (fs::path(dir) / name).string() + "'");
    return f;
  };
  {
    auto f = open("posts.jsonl");
    write_posts(f, corpus.posts);
  }
  {
    auto f = open("authors.jsonl");
    write_authors(f, corpus.authors);
  }
  {
    auto f = open("labels.jsonl");
    write_labels(f, corpus.posts, corpus.labels);
  }
  {
    auto f = open("ranks.csv");
    f << "rank,domain\n";
    for (const auto& [rank, domain] : corpus.ranks) f << rank << ',' << domain << '\n';
  }
  {
    auto f = open("shorteners.txt");
    for (const auto& d : corpus.shorteners) f << d << '\n';
  }
  {
    auto f = open("dyndns.txt");
    for (const auto& d : corpus.dynamic_dns) f << d << '\n';
  }
  {
    auto f = open("whois.json");
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [domain, created] : corpus.whois)
      j[domain] = created ? nlohmann::json(format_iso8601(*created)) : nlohmann::json(nullptr);
    f << j.dump(1) << '\n';
  }
}

}  // namespace phishintel
