#include "phishintel/analysis.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "phishintel/text.hpp"

namespace phishintel {

std::string_view to_string(UserCategory c) { return c == UserCategory::expert ? "expert" : "non_expert"; }

std::string_view to_string(ExpertReason r) {
  return r == ExpertReason::profile_keyword ? "profile_keyword" : "recent_security_majority";
}

std::string_view to_string(KeywordType t) { return t == KeywordType::security ? "Security" : "Co-occurrence"; }

namespace {

constexpr UserCategory kCategories[] = {UserCategory::expert, UserCategory::non_expert};

std::string fold_term(std::string_view term) {
  if (!term.empty() && term.front() == '#') term.remove_prefix(1);
  return text::fold_case(text::nfc(term));
}

std::vector<std::string> fold_terms(const std::vector<std::string>& terms) {
  std::vector<std::string> out;
  for (const auto& t : terms) {
    std::string f = fold_term(t);
    if (!f.empty()) out.push_back(std::move(f));
  }
  return out;
}

bool mentions_any(std::string_view s, const std::vector<std::string>& folded_terms) {
  const std::string hay = text::fold_case(text::nfc(s));
  return std::any_of(folded_terms.begin(), folded_terms.end(),
                     [&](const std::string& t) { return text::contains_folded(hay, t); });
}

double median(std::vector<std::size_t> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return static_cast<double>(v[n / 2]);
  return (static_cast<double>(v[n / 2 - 1]) + static_cast<double>(v[n / 2])) / 2.0;
}

double mean(const std::vector<std::size_t>& v) {
  if (v.empty()) return 0.0;
  return static_cast<double>(std::accumulate(v.begin(), v.end(), std::size_t{0})) / static_cast<double>(v.size());
}

// The set entry matching `host` or one of its parents.
std::optional<std::string> matching_entry(const DomainSet& set, std::string_view host) {
  while (true) {
    if (set.count(std::string(host))) return std::string(host);
    const auto dot = host.find('.');
    if (dot == std::string_view::npos) return std::nullopt;
    host.remove_prefix(dot + 1);
  }
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::string fmt_double(double x) {
  std::ostringstream ss;
  ss.precision(6);
  ss << x;
  return ss.str();
}

}  // namespace

std::vector<std::string> default_profile_terms() {
  std::vector<std::string> terms = default_security_keywords(Lang::en);
  const auto& ja = default_security_keywords(Lang::ja);
  terms.insert(terms.end(), ja.begin(), ja.end());
  terms.insert(terms.end(), {"threat hunter", "infosec", "malware", "CSIRT"});
  return terms;
}

UserCategorization categorize_user(const AuthorRecord& author, const std::vector<std::string>& security_terms) {
  const auto terms = fold_terms(security_terms);
  UserCategorization out;
  out.author_id = author.author_id;
  if (mentions_any(author.profile_text, terms)) out.reasons.push_back(ExpertReason::profile_keyword);
  const auto related = std::count_if(author.recent_texts.begin(), author.recent_texts.end(),
                                     [&](const std::string& t) { return mentions_any(t, terms); });
  if (2 * static_cast<std::size_t>(related) > author.recent_texts.size())
    out.reasons.push_back(ExpertReason::recent_security_majority);
  out.category = out.reasons.empty() ? UserCategory::non_expert : UserCategory::expert;
  return out;
}

CategoryMap categorize_users(const std::vector<AuthorRecord>& authors, const std::vector<std::string>& security_terms) {
  CategoryMap out;
  for (const auto& a : authors) out[a.author_id] = categorize_user(a, security_terms).category;
  return out;
}

UserCategory category_of(const CategoryMap& categories, const std::string& author_id) {
  auto it = categories.find(author_id);
  return it == categories.end() ? UserCategory::non_expert : it->second;
}

Report make_report(const PostRecord& post, std::vector<Indicator> indicators) {
  Report r;
  r.post_id = post.post_id;
  r.author_id = post.author_id;
  r.created_at = post.created_at;
  r.indicators = std::move(indicators);
  r.hashtags = post.hashtags.size();
  r.mentions = post.mentions.size();
  r.matched_keywords = post.matched_keywords;
  return r;
}

// ---- share distribution ------------------------------------------------

double ShareDistribution::cdf_at(std::size_t count) const {
  double value = 0.0;
  for (const auto& [x, f] : cdf) {
    if (x > count) break;
    value = f;
  }
  return value;
}

ShareDistribution share_distribution(const std::vector<Report>& reports, ShareKey key) {
  std::map<std::string, std::size_t> counts;
  for (const auto& r : reports) {
    if (key == ShareKey::by_user) {
      ++counts[r.author_id];
    } else {
      std::set<std::string> urls;
      for (const auto& ind : r.indicators) urls.insert(ind.normalized_url);
      for (const auto& u : urls) ++counts[u];
    }
  }
  ShareDistribution d;
  d.keys = counts.size();
  for (const auto& [k, c] : counts) ++d.histogram[c];
  std::size_t cumulative = 0;
  for (const auto& [x, f] : d.histogram) {
    cumulative += f;
    d.cdf.emplace_back(x, static_cast<double>(cumulative) / static_cast<double>(d.keys));
  }
  return d;
}

// ---- per-category tables -----------------------------------------------

std::vector<UserTypeRow> user_type_stats(const std::vector<Report>& reports, const CategoryMap& categories) {
  std::vector<UserTypeRow> rows;
  for (UserCategory cat : kCategories) {
    std::map<std::string, std::size_t> per_user;
    for (const auto& r : reports)
      if (category_of(categories, r.author_id) == cat) ++per_user[r.author_id];
    UserTypeRow row{cat};
    std::vector<std::size_t> shared;
    for (const auto& [u, c] : per_user) shared.push_back(c);
    row.users = shared.size();
    row.reports = std::accumulate(shared.begin(), shared.end(), std::size_t{0});
    if (!shared.empty()) {
      row.shared_min = *std::min_element(shared.begin(), shared.end());
      row.shared_max = *std::max_element(shared.begin(), shared.end());
      row.shared_median = median(shared);
      row.shared_mean = mean(shared);
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<UrlTypeRow> url_type_stats(const std::vector<Report>& reports, const CategoryMap& categories,
                                       const DomainSet& shorteners, const DomainSet& dynamic_dns) {
  std::vector<UrlTypeRow> rows;
  for (UserCategory cat : kCategories) {
    std::set<std::string> urls, hosts, services, providers;
    std::size_t shortened = 0, dyn = 0;
    for (const auto& r : reports) {
      if (category_of(categories, r.author_id) != cat) continue;
      for (const auto& ind : r.indicators) {
        if (urls.insert(ind.normalized_url).second) {
          if (auto s = matching_entry(shorteners, ind.host)) {
            ++shortened;
            services.insert(*s);
          }
        }
        if (hosts.insert(ind.host).second) {
          if (auto p = matching_entry(dynamic_dns, ind.host)) {
            ++dyn;
            providers.insert(*p);
          }
        }
      }
    }
    rows.push_back({cat, urls.size(), shortened, services.size(), hosts.size(), dyn, providers.size()});
  }
  return rows;
}

std::vector<SharingMethodRow> sharing_method_stats(const std::vector<Report>& reports, const CategoryMap& categories) {
  std::vector<SharingMethodRow> rows;
  for (UserCategory cat : kCategories) {
    SharingMethodRow row{cat};
    std::vector<std::size_t> hashtags, mentions;
    for (const auto& r : reports) {
      if (category_of(categories, r.author_id) != cat) continue;
      ++row.reports;
      hashtags.push_back(r.hashtags);
      mentions.push_back(r.mentions);
      for (const auto& ind : r.indicators) (ind.source == IndicatorSource::image ? row.urls_in_images : row.urls_in_texts)++;
    }
    row.empty = row.reports == 0;
    const std::size_t urls = row.urls_in_images + row.urls_in_texts;
    if (urls > 0) {
      row.image_share = static_cast<double>(row.urls_in_images) / static_cast<double>(urls);
      row.text_share = static_cast<double>(row.urls_in_texts) / static_cast<double>(urls);
    }
    row.hashtag_median = median(hashtags);
    row.hashtag_mean = mean(hashtags);
    row.mention_median = median(mentions);
    row.mention_mean = mean(mentions);
    rows.push_back(row);
  }
  return rows;
}

std::vector<KeywordRow> keyword_effectiveness(const std::vector<Report>& reports, const CategoryMap& categories,
                                              const std::vector<std::string>& security_keywords, std::size_t top_n) {
  std::set<std::string> security;
  for (const auto& k : security_keywords) security.insert(text::fold_case(text::nfc(k)));

  std::vector<KeywordRow> rows;
  for (UserCategory cat : kCategories) {
    std::map<std::string, std::set<std::string>> collected;
    for (const auto& r : reports) {
      if (category_of(categories, r.author_id) != cat) continue;
      for (const auto& k : r.matched_keywords) collected[k].insert(r.post_id);
    }
    std::vector<std::pair<std::string, std::size_t>> ranked;
    for (const auto& [k, ids] : collected) ranked.emplace_back(k, ids.size());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (top_n > 0 && ranked.size() > top_n) ranked.resize(top_n);
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      const auto& [k, n] = ranked[i];
      const KeywordType type =
          security.count(text::fold_case(text::nfc(k))) ? KeywordType::security : KeywordType::cooccurrence;
      rows.push_back({cat, i + 1, k, type, n});
    }
  }
  return rows;
}

// ---- indicator feed ----------------------------------------------------

std::vector<FeedRecord> emit_feed(const std::vector<Report>& reports, const FeedAnnotations& annotations) {
  std::map<std::string, FeedRecord> feed;
  for (const auto& r : reports) {
    std::set<std::string> counted;
    for (const auto& ind : r.indicators) {
      auto [it, fresh] = feed.try_emplace(ind.normalized_url);
      FeedRecord& rec = it->second;
      if (fresh) {
        rec.url = ind.normalized_url;
        rec.first_seen = rec.last_seen = r.created_at;
        rec.shortener = annotations.shorteners && matches_domain_set(*annotations.shorteners, ind.host);
        rec.dynamic_dns = annotations.dynamic_dns && matches_domain_set(*annotations.dynamic_dns, ind.host);
        if (annotations.vt_detections) {
          auto vt = annotations.vt_detections->find(ind.normalized_url);
          if (vt != annotations.vt_detections->end()) rec.vt_detections = vt->second;
        }
      }
      rec.first_seen = std::min(rec.first_seen, r.created_at);
      rec.last_seen = std::max(rec.last_seen, r.created_at);
      rec.sources.insert(std::string(to_string(ind.source)));
      if (counted.insert(ind.normalized_url).second) {
        ++rec.shares;
        const UserCategory cat =
            annotations.categories ? category_of(*annotations.categories, r.author_id) : UserCategory::non_expert;
        if (annotations.categories) rec.categories.insert(std::string(to_string(cat)));
      }
    }
  }
  std::vector<FeedRecord> out;
  out.reserve(feed.size());
  for (auto& [url, rec] : feed) out.push_back(std::move(rec));
  return out;
}

std::unordered_map<std::string, int> load_vt_fixture(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open VirusTotal fixture '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(std::string("VirusTotal fixture: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::runtime_error("VirusTotal fixture must be a JSON object");
  std::unordered_map<std::string, int> out;
  for (const auto& [url, v] : j.items()) {
    if (!v.is_number_integer()) throw std::runtime_error("VirusTotal fixture: count for '" + url + "' is not an integer");
    out[url] = v.get<int>();
  }
  return out;
}

void write_feed_jsonl(std::ostream& out, const std::vector<FeedRecord>& feed) {
  for (const auto& r : feed) {
    nlohmann::json flags = nlohmann::json::array();
    if (r.shortener) flags.push_back("shortener");
    if (r.dynamic_dns) flags.push_back("dynamic_dns");
    nlohmann::json j = {{"url", r.url},
                        {"first_seen", format_iso8601(r.first_seen)},
                        {"last_seen", format_iso8601(r.last_seen)},
                        {"shares", r.shares},
                        {"sources", r.sources},
                        {"flags", flags},
                        {"categories", r.categories}};
    if (r.vt_detections) j["vt_detections"] = *r.vt_detections;
    out << j.dump() << '\n';
  }
}

void write_feed_csv(std::ostream& out, const std::vector<FeedRecord>& feed) {
  auto join = [](const std::set<std::string>& s) {
    std::string o;
    for (const auto& x : s) o += (o.empty() ? "" : ";") + x;
    return o;
  };
  out << "url,first_seen,last_seen,shares,sources,shortener,dynamic_dns,categories,vt_detections\n";
  for (const auto& r : feed) {
    out << csv_field(r.url) << ',' << format_iso8601(r.first_seen) << ',' << format_iso8601(r.last_seen) << ','
        << r.shares << ',' << join(r.sources) << ',' << (r.shortener ? 1 : 0) << ',' << (r.dynamic_dns ? 1 : 0) << ','
        << join(r.categories) << ',' << (r.vt_detections ? std::to_string(*r.vt_detections) : "") << '\n';
  }
}

void write_share_csv(std::ostream& out, const ShareDistribution& d) {
  out << "shares,keys,cdf\n";
  for (const auto& [x, f] : d.cdf) out << x << ',' << d.histogram.at(x) << ',' << fmt_double(f) << '\n';
}

void write_user_type_csv(std::ostream& out, const std::vector<UserTypeRow>& rows) {
  out << "user_type,users,reports,shared_min,shared_median,shared_mean,shared_max\n";
  for (const auto& r : rows)
    out << to_string(r.category) << ',' << r.users << ',' << r.reports << ',' << r.shared_min << ','
        << fmt_double(r.shared_median) << ',' << fmt_double(r.shared_mean) << ',' << r.shared_max << '\n';
}

void write_url_type_csv(std::ostream& out, const std::vector<UrlTypeRow>& rows) {
  out << "user_type,urls,shortened_urls,shortener_services,fqdns,dynamic_dns_fqdns,dynamic_dns_providers\n";
  for (const auto& r : rows)
    out << to_string(r.category) << ',' << r.urls << ',' << r.shortened_urls << ',' << r.shortener_services << ','
        << r.fqdns << ',' << r.dynamic_dns_fqdns << ',' << r.dynamic_dns_providers << '\n';
}

void write_sharing_method_csv(std::ostream& out, const std::vector<SharingMethodRow>& rows) {
  out << "user_type,empty,reports,urls_in_images,image_share,urls_in_texts,text_share,hashtag_median,hashtag_mean,"
         "mention_median,mention_mean\n";
  for (const auto& r : rows)
    out << to_string(r.category) << ',' << (r.empty ? 1 : 0) << ',' << r.reports << ',' << r.urls_in_images << ','
        << fmt_double(r.image_share) << ',' << r.urls_in_texts << ',' << fmt_double(r.text_share) << ','
        << fmt_double(r.hashtag_median) << ',' << fmt_double(r.hashtag_mean) << ',' << fmt_double(r.mention_median)
        << ',' << fmt_double(r.mention_mean) << '\n';
}

void write_keyword_csv(std::ostream& out, const std::vector<KeywordRow>& rows) {
  out << "user_type,rank,keyword,type,reports\n";
  for (const auto& r : rows)
    out << to_string(r.category) << ',' << r.rank << ',' << csv_field(r.keyword) << ',' << to_string(r.type) << ','
        << r.reports << '\n';
}

}  // namespace phishintel
