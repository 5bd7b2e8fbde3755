#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <variant>
#include <vector>

namespace phishintel {

// The nine defanged renderings plus the plain form. Enumerator order is the
// one-hot layout used by the content features.
enum class DefangForm {
  space_dot,      // "example .com"
  bracket_dot,    // "example[.]com"
  paren_dot,      // "example(.)com"
  brace_dot,      // "example{.}com"
  backslash_dot,  // "example\.com"
  hxxp_lower,     // "hxxp://example.com"
  hXXp_mixed,     // "hXXp://example.com"
  bracket_colon,  // "http[:]//example.com"
  bracket_slash,  // "http://example.com[/]"
  none,
};

inline constexpr std::size_t kDefangFormCount = 9;

std::string_view to_string(DefangForm f);
DefangForm parse_defang_form(std::string_view s);

enum class IndicatorSource { text, image };
std::string_view to_string(IndicatorSource s);
IndicatorSource parse_indicator_source(std::string_view s);

struct Indicator {
  std::string raw;
  std::string normalized_url;
  IndicatorSource source = IndicatorSource::text;
  std::optional<std::string> image_id;
  DefangForm defang_form = DefangForm::none;
  std::string host;
  std::string registrable_domain;
  std::string tld;
  bool is_url = false;

  bool operator==(const Indicator&) const = default;
};

// ---- refanging ---------------------------------------------------------

// Rewrites every defanged pattern to its plain form. Input is NFC-normalized
// and full-width dots become '.'; text without patterns is returned as-is.
std::string refang(std::string_view text);

// As refang, also reporting for each output byte the input byte offset it
// came from. `origin` has one extra trailing entry equal to text.size().
struct RefangResult {
  std::string text;
  std::vector<std::size_t> origin;
};
RefangResult refang_with_origin(std::string_view text);

// First matching form by precedence hxxp > hXXp > [:] > [/] > [.] > (.) > {.} > \. > " .".
DefangForm classify_defang_form(std::string_view raw);

// ---- validation --------------------------------------------------------

enum class UrlError { bad_scheme, bad_host, bad_char };
std::string_view to_string(UrlError e);

struct UrlParts {
  std::string scheme;
  std::string userinfo;
  std::string host;
  std::optional<unsigned> port;
  std::string path;
  std::string query;
  std::string fragment;
};

using UrlValidation = std::variant<UrlParts, UrlError>;
UrlValidation validate_url(std::string_view s);

enum class DomainError { empty, too_long, empty_label, label_too_long, bad_char, hyphen_edge, single_label, bad_tld };
std::string_view to_string(DomainError e);

// nullopt when the name is a valid hostname.
std::optional<DomainError> validate_domain(std::string_view s);

// ---- public suffixes ---------------------------------------------------

// Public-suffix rule set with wildcard ("*.ck") and exception ("!www.ck") rules.
// Names absent from every rule fall back to the implicit "*" rule.
class PublicSuffixList {
 public:
  static PublicSuffixList parse(std::string_view data);
  static PublicSuffixList load(const std::string& path);
  // Snapshot compiled into the library.
  static const PublicSuffixList& bundled();

  std::string public_suffix(std::string_view host) const;
  std::string registrable_domain(std::string_view host) const;
  // True when `tld` is the last label of some listed rule.
  bool is_known_tld(std::string_view tld) const;

  std::size_t size() const { return rules_.size() + wildcards_.size() + exceptions_.size(); }

 private:
  std::unordered_set<std::string> rules_;
  std::unordered_set<std::string> wildcards_;   // stored without "*."
  std::unordered_set<std::string> exceptions_;  // stored without "!"
  std::unordered_set<std::string> tlds_;
};

// ---- extraction --------------------------------------------------------

// "https://" + host + "/", the canonical URL of a bare domain indicator.
std::string domain_url(std::string_view host);

// Finds URLs and bare domains after refanging. Bare domains inside a URL are
// not reported separately; duplicates (same normalized_url) collapse to the
// first occurrence. Bare domains must end in a TLD known to `psl`.
std::vector<Indicator> extract_indicators(std::string_view text, IndicatorSource source,
                                          std::optional<std::string> image_id = std::nullopt,
                                          const PublicSuffixList& psl = PublicSuffixList::bundled());

}  // namespace phishintel
