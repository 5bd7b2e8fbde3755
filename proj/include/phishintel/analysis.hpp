#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "phishintel/corpus.hpp"
#include "phishintel/ioc.hpp"
#include "phishintel/screening.hpp"

namespace phishintel {

enum class UserCategory { expert, non_expert };
std::string_view to_string(UserCategory c);

enum class ExpertReason { profile_keyword, recent_security_majority };
std::string_view to_string(ExpertReason r);

struct UserCategorization {
  std::string author_id;
  UserCategory category = UserCategory::non_expert;
  std::vector<ExpertReason> reasons;  // empty iff non_expert
};

// Security keywords of both languages plus a few profile-style terms.
std::vector<std::string> default_profile_terms();

// Terms match case-insensitively as substrings; a leading '#' is ignored.
UserCategorization categorize_user(const AuthorRecord& author, const std::vector<std::string>& security_terms);

using CategoryMap = std::unordered_map<std::string, UserCategory>;
CategoryMap categorize_users(const std::vector<AuthorRecord>& authors, const std::vector<std::string>& security_terms);

// A post classified as a phishing report, with its surviving indicators.
struct Report {
  std::string post_id;
  std::string author_id;
  Timestamp created_at = 0;
  std::vector<Indicator> indicators;
  std::size_t hashtags = 0;
  std::size_t mentions = 0;
  std::vector<std::string> matched_keywords;
};

Report make_report(const PostRecord& post, std::vector<Indicator> indicators);

// Authors missing from the map count as non-experts.
UserCategory category_of(const CategoryMap& categories, const std::string& author_id);

// ---- share distribution ------------------------------------------------

enum class ShareKey { by_user, by_url };

struct ShareDistribution {
  std::map<std::size_t, std::size_t> histogram;  // share count -> number of keys
  std::vector<std::pair<std::size_t, double>> cdf;  // fraction of keys with count <= x
  std::size_t keys = 0;

  // Fraction of keys shared at most `count` times; 0 for an empty distribution.
  double cdf_at(std::size_t count) const;
};

// by_user counts reports per author; by_url counts reports per normalized_url.
ShareDistribution share_distribution(const std::vector<Report>& reports, ShareKey key);

// ---- per-category tables -----------------------------------------------

struct UserTypeRow {
  UserCategory category;
  std::size_t users = 0;
  std::size_t reports = 0;
  std::size_t shared_min = 0;
  double shared_median = 0;
  double shared_mean = 0;
  std::size_t shared_max = 0;
};

std::vector<UserTypeRow> user_type_stats(const std::vector<Report>& reports, const CategoryMap& categories);

struct UrlTypeRow {
  UserCategory category;
  std::size_t urls = 0;            // unique normalized URLs
  std::size_t shortened_urls = 0;
  std::size_t shortener_services = 0;
  std::size_t fqdns = 0;           // unique hosts
  std::size_t dynamic_dns_fqdns = 0;
  std::size_t dynamic_dns_providers = 0;
};

std::vector<UrlTypeRow> url_type_stats(const std::vector<Report>& reports, const CategoryMap& categories,
                                       const DomainSet& shorteners, const DomainSet& dynamic_dns);

struct SharingMethodRow {
  UserCategory category;
  bool empty = true;
  std::size_t reports = 0;
  std::size_t urls_in_images = 0;
  std::size_t urls_in_texts = 0;
  double image_share = 0;  // fraction of the category's URLs
  double text_share = 0;
  double hashtag_median = 0;
  double hashtag_mean = 0;
  double mention_median = 0;
  double mention_mean = 0;
};

// URLs are counted once per report, by the source they were kept from.
std::vector<SharingMethodRow> sharing_method_stats(const std::vector<Report>& reports, const CategoryMap& categories);

enum class KeywordType { security, cooccurrence };
std::string_view to_string(KeywordType t);

struct KeywordRow {
  UserCategory category;
  std::size_t rank = 0;  // 1-based
  std::string keyword;
  KeywordType type = KeywordType::cooccurrence;
  std::size_t reports = 0;
};

// Keywords ranked per category by distinct reports collected, ties broken by
// byte order. `top_n` = 0 keeps every keyword.
std::vector<KeywordRow> keyword_effectiveness(const std::vector<Report>& reports, const CategoryMap& categories,
                                              const std::vector<std::string>& security_keywords, std::size_t top_n = 10);

// ---- indicator feed ----------------------------------------------------

struct FeedRecord {
  std::string url;
  Timestamp first_seen = 0;
  Timestamp last_seen = 0;
  std::size_t shares = 0;
  std::set<std::string> sources;  // "text", "image"
  bool shortener = false;
  bool dynamic_dns = false;
  std::set<std::string> categories;
  std::optional<int> vt_detections;
};

struct FeedAnnotations {
  const DomainSet* shorteners = nullptr;
  const DomainSet* dynamic_dns = nullptr;
  const CategoryMap* categories = nullptr;
  const std::unordered_map<std::string, int>* vt_detections = nullptr;  // url -> engines flagging it
};

// One record per normalized_url, sorted by url.
std::vector<FeedRecord> emit_feed(const std::vector<Report>& reports, const FeedAnnotations& annotations = {});

// JSON object {url: detection count}.
std::unordered_map<std::string, int> load_vt_fixture(const std::string& path);

void write_feed_jsonl(std::ostream& out, const std::vector<FeedRecord>& feed);
void write_feed_csv(std::ostream& out, const std::vector<FeedRecord>& feed);
void write_share_csv(std::ostream& out, const ShareDistribution& d);
void write_user_type_csv(std::ostream& out, const std::vector<UserTypeRow>& rows);
void write_url_type_csv(std::ostream& out, const std::vector<UrlTypeRow>& rows);
void write_sharing_method_csv(std::ostream& out, const std::vector<SharingMethodRow>& rows);
void write_keyword_csv(std::ostream& out, const std::vector<KeywordRow>& rows);

}  // namespace phishintel
