#pragma once

#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "phishintel/corpus.hpp"
#include "phishintel/ioc.hpp"

namespace phishintel {

// Tranco-style popularity ranking; domains ranked within `cutoff` are treated
// as legitimate.
class RankList {
 public:
  static constexpr int kDefaultCutoff = 10000;

  RankList() = default;
  explicit RankList(int cutoff) : cutoff_(cutoff) {}

  // CSV lines "rank,domain". Throws std::runtime_error on malformed rows,
  // non-positive ranks or a domain listed twice.
  static RankList parse(std::istream& in, int cutoff = kDefaultCutoff);
  static RankList load(const std::string& path, int cutoff = kDefaultCutoff);

  void add(const std::string& domain, int rank);
  std::optional<int> rank(const std::string& domain) const;
  bool in_top(const std::string& domain) const;

  int cutoff() const { return cutoff_; }
  void set_cutoff(int cutoff) { cutoff_ = cutoff; }
  std::size_t size() const { return ranks_.size(); }

 private:
  std::unordered_map<std::string, int> ranks_;
  int cutoff_ = kDefaultCutoff;
};

using DomainSet = std::unordered_set<std::string>;

// Newline-delimited domain list; blank lines and '#' comments skipped.
DomainSet load_domain_set(const std::string& path);
DomainSet parse_domain_set(std::istream& in);

// Matches `host` or any parent domain of it against the set.
bool matches_domain_set(const DomainSet& set, const std::string& host);

// ---- WHOIS -------------------------------------------------------------

struct WhoisResult {
  enum class Status { ok, no_creation_date, unavailable };
  Status status = Status::unavailable;
  Timestamp created = 0;  // valid when status == ok
};

// Parses "2023-01-05", "2023-01-05T12:00:00Z" or with a numeric UTC offset.
std::optional<Timestamp> parse_iso8601(std::string_view s);
// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_iso8601(Timestamp t);

class WhoisClient {
 public:
  virtual ~WhoisClient() = default;
  // Implementations must be safe to call concurrently.
  virtual WhoisResult lookup(const std::string& domain) const = 0;
};

// JSON object mapping domain -> ISO-8601 creation date (null: record without
// a creation date). Domains missing from the map are reported unavailable.
class FixtureWhois final : public WhoisClient {
 public:
  FixtureWhois() = default;
  static FixtureWhois parse(std::string_view json_text);
  static FixtureWhois load(const std::string& path);

  void set(const std::string& domain, std::optional<Timestamp> created);
  WhoisResult lookup(const std::string& domain) const override;
  std::size_t size() const { return entries_.size(); }

 private:
  std::unordered_map<std::string, std::optional<Timestamp>> entries_;
};

// Always fails; useful as the fail-open baseline.
class UnavailableWhois final : public WhoisClient {
 public:
  WhoisResult lookup(const std::string&) const override { return {}; }
};

// Port-43 client: asks whois.iana.org for the TLD's registry server, then
// queries that server. Network errors map to `unavailable`.
class TcpWhois final : public WhoisClient {
 public:
  explicit TcpWhois(int timeout_seconds = 10) : timeout_seconds_(timeout_seconds) {}
  WhoisResult lookup(const std::string& domain) const override;

 private:
  int timeout_seconds_;
};

// Extracts the creation date from a raw WHOIS response.
std::optional<Timestamp> parse_whois_creation_date(std::string_view response);
// "refer:" / "whois:" server named in an IANA response.
std::optional<std::string> parse_whois_referral(std::string_view response);

// ---- screening ---------------------------------------------------------

enum class ScreenReason { rank_allowlisted, too_old, whois_unavailable, shortener, dynamic_dns };
std::string_view to_string(ScreenReason r);

struct ScreeningVerdict {
  Indicator indicator;
  bool kept = true;
  std::vector<ScreenReason> reasons;
  std::optional<long> domain_age_days;

  bool has(ScreenReason r) const;
};

struct ScreeningContext {
  static constexpr long kDefaultMaxAgeDays = 365;

  const RankList* ranks = nullptr;
  const DomainSet* shorteners = nullptr;
  const DomainSet* dynamic_dns = nullptr;
  const WhoisClient* whois = nullptr;
  Timestamp now = 0;
  long max_age_days = kDefaultMaxAgeDays;
};

ScreeningVerdict screen(const Indicator& ind, const ScreeningContext& ctx);

// Gives a bare-domain indicator its https URL form. Throws std::invalid_argument
// for URL indicators.
Indicator promote_domain_to_url(const Indicator& ind);

struct PostScreening {
  std::vector<ScreeningVerdict> verdicts;  // one per input indicator
  std::vector<Indicator> kept;             // survivors, unique by normalized_url
  bool excluded = true;                    // no survivor in text or image
};

PostScreening screen_post(const PostRecord& post, const std::vector<Indicator>& indicators,
                          const ScreeningContext& ctx);

// Runs extraction over the post text and every image text.
std::vector<Indicator> extract_post_indicators(const PostRecord& post,
                                               const PublicSuffixList& psl = PublicSuffixList::bundled());

}  // namespace phishintel
