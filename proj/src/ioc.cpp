#include "phishintel/ioc.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "phishintel/text.hpp"

namespace phishintel {

namespace detail {
extern const char* const kBundledPublicSuffixes;
}

std::string_view to_string(DefangForm f) {
  switch (f) {
    case DefangForm::space_dot: return "space_dot";
    case DefangForm::bracket_dot: return "bracket_dot";
    case DefangForm::paren_dot: return "paren_dot";
    case DefangForm::brace_dot: return "brace_dot";
    case DefangForm::backslash_dot: return "backslash_dot";
    case DefangForm::hxxp_lower: return "hxxp_lower";
    case DefangForm::hXXp_mixed: return "hXXp_mixed";
    case DefangForm::bracket_colon: return "bracket_colon";
    case DefangForm::bracket_slash: return "bracket_slash";
    case DefangForm::none: return "none";
  }
  return "none";
}

DefangForm parse_defang_form(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(DefangForm::none); ++i) {
    auto f = static_cast<DefangForm>(i);
    if (to_string(f) == s) return f;
  }
  throw std::invalid_argument("unknown defang form '" + std::string(s) + "'");
}

std::string_view to_string(IndicatorSource s) { return s == IndicatorSource::text ? "text" : "image"; }

IndicatorSource parse_indicator_source(std::string_view s) {
  if (s == "text") return IndicatorSource::text;
  if (s == "image") return IndicatorSource::image;
  throw std::invalid_argument("unknown indicator source '" + std::string(s) + "'");
}

std::string_view to_string(UrlError e) {
  switch (e) {
    case UrlError::bad_scheme: return "bad_scheme";
    case UrlError::bad_host: return "bad_host";
    case UrlError::bad_char: return "bad_char";
  }
  return "bad_char";
}

std::string_view to_string(DomainError e) {
  switch (e) {
    case DomainError::empty: return "empty";
    case DomainError::too_long: return "too_long";
    case DomainError::empty_label: return "empty_label";
    case DomainError::label_too_long: return "label_too_long";
    case DomainError::bad_char: return "bad_char";
    case DomainError::hyphen_edge: return "hyphen_edge";
    case DomainError::single_label: return "single_label";
    case DomainError::bad_tld: return "bad_tld";
  }
  return "bad_char";
}

namespace {

bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alnum(char c) { return is_alpha(c) || is_digit(c); }
bool is_label_char(char c) { return is_alnum(c) || c == '-'; }
char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = lower(c);
  return out;
}

bool is_unreserved(char c) { return is_alnum(c) || c == '-' || c == '.' || c == '_' || c == '~'; }
bool is_sub_delim(char c) {
  switch (c) {
    case '!': case '$': case '&': case '\'': case '(': case ')':
    case '*': case '+': case ',': case ';': case '=':
      return true;
    default:
      return false;
  }
}
bool is_gen_delim(char c) {
  switch (c) {
    case ':': case '/': case '?': case '#': case '[': case ']': case '@':
      return true;
    default:
      return false;
  }
}
bool is_uri_char(char c) { return is_unreserved(c) || is_sub_delim(c) || is_gen_delim(c) || c == '%'; }

// Case-insensitive "hxxp" at i, not preceded by a letter, followed by
// "://", "s://", "[:]" or "s[:]".
bool hxxp_at(std::string_view s, std::size_t i) {
  if (i + 4 > s.size()) return false;
  if (lower(s[i]) != 'h' || lower(s[i + 1]) != 'x' || lower(s[i + 2]) != 'x' || lower(s[i + 3]) != 'p') return false;
  if (i > 0 && is_alpha(s[i - 1])) return false;
  std::string_view rest = s.substr(i + 4);
  if (!rest.empty() && lower(rest.front()) == 's') rest.remove_prefix(1);
  return rest.starts_with("://") || rest.starts_with("[:]");
}

// Length of a valid DNS label ending right before `end` (exclusive), or 0.
std::size_t label_before(std::string_view s, std::size_t end) {
  std::size_t b = end;
  while (b > 0 && is_label_char(s[b - 1])) --b;
  std::size_t len = end - b;
  if (len == 0 || len > 63) return 0;
  if (s[b] == '-' || s[end - 1] == '-') return 0;
  return len;
}

std::size_t label_after(std::string_view s, std::size_t begin) {
  std::size_t e = begin;
  while (e < s.size() && is_label_char(s[e])) ++e;
  std::size_t len = e - begin;
  if (len == 0 || len > 63) return 0;
  if (s[begin] == '-' || s[e - 1] == '-') return 0;
  return len;
}

bool space_dot_at(std::string_view s, std::size_t i) {
  return i + 1 < s.size() && s[i] == ' ' && s[i + 1] == '.' && label_before(s, i) > 0 && label_after(s, i + 2) > 0;
}

// "[/]" is dropped at the end of text, before whitespace and before sentence
// punctuation; anywhere else it becomes "/". Non-ASCII followers keep the
// slash so removal never joins a base character with a combining mark.
bool continues_url(std::string_view s, std::size_t i) {
  if (i >= s.size()) return false;
  const auto c = static_cast<unsigned char>(s[i]);
  if (c >= 0x80) return true;
  return is_alnum(s[i]) || c == '-' || c == '_' || c == '~' || c == '%' || c == '/' || c == '?' || c == '#' ||
         c == '=' || c == '&';
}

// One rewrite pass; returns true if anything changed.
bool refang_pass(std::string_view in, std::string& out, std::vector<std::size_t>& origin) {
  out.clear();
  origin.clear();
  out.reserve(in.size());
  origin.reserve(in.size() + 1);
  bool changed = false;
  auto emit = [&](char c, std::size_t from) {
    out.push_back(c);
    origin.push_back(from);
  };
  std::size_t i = 0;
  while (i < in.size()) {
    std::string_view rest = in.substr(i);
    if (rest.starts_with("[.]") || rest.starts_with("(.)") || rest.starts_with("{.}")) {
      emit('.', i);
      i += 3;
      changed = true;
    } else if (rest.starts_with("\\.")) {
      emit('.', i);
      i += 2;
      changed = true;
    } else if (rest.starts_with("[:]")) {
      emit(':', i);
      i += 3;
      changed = true;
    } else if (rest.starts_with("[/]")) {
      if (continues_url(in, i + 3)) emit('/', i);
      i += 3;
      changed = true;
    } else if (hxxp_at(in, i)) {
      const char* plain = "http";
      if (in.substr(i, 4) != "http") changed = true;
      for (int k = 0; k < 4; ++k) emit(plain[k], i + static_cast<std::size_t>(k));
      i += 4;
    } else if (space_dot_at(in, i)) {
      emit('.', i);
      i += 2;
      changed = true;
    } else {
      emit(in[i], i);
      ++i;
    }
  }
  origin.push_back(in.size());
  return changed;
}

}  // namespace

RefangResult refang_with_origin(std::string_view input) {
  const std::string normalized = text::nfc(input);

  RefangResult r;
  // Full-width full stop U+FF0E (EF BC 8E) counts as a dot.
  r.text.reserve(normalized.size());
  r.origin.reserve(normalized.size() + 1);
  for (std::size_t i = 0; i < normalized.size();) {
    if (normalized.compare(i, 3, "\xEF\xBC\x8E") == 0) {
      r.text.push_back('.');
      r.origin.push_back(i);
      i += 3;
    } else {
      r.text.push_back(normalized[i]);
      r.origin.push_back(i);
      ++i;
    }
  }
  r.origin.push_back(normalized.size());

  std::string next;
  std::vector<std::size_t> pass_origin;
  while (refang_pass(r.text, next, pass_origin)) {
    std::vector<std::size_t> composed(pass_origin.size());
    for (std::size_t j = 0; j < pass_origin.size(); ++j) composed[j] = r.origin[pass_origin[j]];
    r.text.swap(next);
    r.origin.swap(composed);
  }
  return r;
}

std::string refang(std::string_view text) { return refang_with_origin(text).text; }

DefangForm classify_defang_form(std::string_view raw) {
  const std::string folded = lowercase(raw);
  if (auto pos = folded.find("hxxp"); pos != std::string::npos) {
    return raw.substr(pos + 1, 2) == "xx" ? DefangForm::hxxp_lower : DefangForm::hXXp_mixed;
  }
  if (raw.find("[:]") != std::string_view::npos) return DefangForm::bracket_colon;
  if (raw.find("[/]") != std::string_view::npos) return DefangForm::bracket_slash;
  if (raw.find("[.]") != std::string_view::npos) return DefangForm::bracket_dot;
  if (raw.find("(.)") != std::string_view::npos) return DefangForm::paren_dot;
  if (raw.find("{.}") != std::string_view::npos) return DefangForm::brace_dot;
  if (raw.find("\\.") != std::string_view::npos) return DefangForm::backslash_dot;
  for (std::size_t i = 0; i + 1 < raw.size(); ++i)
    if (space_dot_at(raw, i)) return DefangForm::space_dot;
  return DefangForm::none;
}

// ---- validation --------------------------------------------------------

std::optional<DomainError> validate_domain(std::string_view s) {
  if (s.empty()) return DomainError::empty;
  if (s.size() > 253) return DomainError::too_long;
  for (char c : s)
    if (!is_label_char(c) && c != '.') return DomainError::bad_char;
  std::size_t labels = 0;
  std::string_view last;
  std::size_t start = 0;
  while (true) {
    std::size_t dot = s.find('.', start);
    std::string_view label = s.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start);
    if (label.empty()) return DomainError::empty_label;
    if (label.size() > 63) return DomainError::label_too_long;
    if (label.front() == '-' || label.back() == '-') return DomainError::hyphen_edge;
    ++labels;
    last = label;
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  if (labels < 2) return DomainError::single_label;
  for (char c : last)
    if (!is_alpha(c)) return DomainError::bad_tld;
  return std::nullopt;
}

UrlValidation validate_url(std::string_view s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (!is_uri_char(c)) return UrlError::bad_char;
    if (c == '%') {
      if (i + 2 >= s.size() || !std::isxdigit(static_cast<unsigned char>(s[i + 1])) ||
          !std::isxdigit(static_cast<unsigned char>(s[i + 2])))
        return UrlError::bad_char;
    }
  }
  const std::size_t colon = s.find(':');
  if (colon == std::string_view::npos || colon == 0) return UrlError::bad_scheme;
  UrlParts parts;
  parts.scheme = lowercase(s.substr(0, colon));
  if (parts.scheme != "http" && parts.scheme != "https") return UrlError::bad_scheme;
  std::string_view rest = s.substr(colon + 1);
  if (!rest.starts_with("//")) return UrlError::bad_host;
  rest.remove_prefix(2);

  const std::size_t auth_end = rest.find_first_of("/?#");
  std::string_view authority = rest.substr(0, auth_end);
  std::string_view tail = auth_end == std::string_view::npos ? std::string_view{} : rest.substr(auth_end);

  if (auto at = authority.rfind('@'); at != std::string_view::npos) {
    parts.userinfo = std::string(authority.substr(0, at));
    if (parts.userinfo.find_first_of("[]@") != std::string::npos) return UrlError::bad_char;
    authority.remove_prefix(at + 1);
  }
  if (auto pc = authority.rfind(':'); pc != std::string_view::npos) {
    std::string_view port = authority.substr(pc + 1);
    authority = authority.substr(0, pc);
    if (!port.empty()) {
      unsigned value = 0;
      auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
      if (ec != std::errc() || ptr != port.data() + port.size() || value > 65535) return UrlError::bad_host;
      parts.port = value;
    }
  }
  if (authority.empty() || validate_domain(authority)) return UrlError::bad_host;
  parts.host = lowercase(authority);

  if (auto hash = tail.find('#'); hash != std::string_view::npos) {
    parts.fragment = std::string(tail.substr(hash + 1));
    tail = tail.substr(0, hash);
  }
  if (auto q = tail.find('?'); q != std::string_view::npos) {
    parts.query = std::string(tail.substr(q + 1));
    tail = tail.substr(0, q);
  }
  parts.path = std::string(tail);
  if (parts.path.find_first_of("[]") != std::string::npos) return UrlError::bad_char;
  return parts;
}

// ---- public suffixes ---------------------------------------------------

PublicSuffixList PublicSuffixList::parse(std::string_view data) {
  PublicSuffixList psl;
  std::istringstream in{std::string(data)};
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string rule;
    if (!(ls >> rule) || rule.starts_with("//")) continue;
    rule = lowercase(rule);
    std::string base;
    if (rule.starts_with("!")) {
      base = rule.substr(1);
      psl.exceptions_.insert(base);
    } else if (rule.starts_with("*.")) {
      base = rule.substr(2);
      psl.wildcards_.insert(base);
    } else {
      base = rule;
      psl.rules_.insert(base);
    }
    auto dot = base.rfind('.');
    psl.tlds_.insert(dot == std::string::npos ? base : base.substr(dot + 1));
  }
  return psl;
}

PublicSuffixList PublicSuffixList::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open public suffix file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const PublicSuffixList& PublicSuffixList::bundled() {
  static const PublicSuffixList psl = parse(detail::kBundledPublicSuffixes);
  return psl;
}

bool PublicSuffixList::is_known_tld(std::string_view tld) const { return tlds_.count(lowercase(tld)) > 0; }

std::string PublicSuffixList::public_suffix(std::string_view host_in) const {
  const std::string host = lowercase(host_in);
  std::vector<std::size_t> starts{0};
  for (std::size_t i = 0; i < host.size(); ++i)
    if (host[i] == '.') starts.push_back(i + 1);

  // Exception rules win: the suffix is the exception minus its first label.
  for (std::size_t k = 0; k < starts.size(); ++k) {
    std::string_view cand = std::string_view(host).substr(starts[k]);
    if (exceptions_.count(std::string(cand))) {
      return k + 1 < starts.size() ? host.substr(starts[k + 1]) : std::string(cand);
    }
  }
  // Longest matching rule (starts are ordered longest first).
  for (std::size_t k = 0; k < starts.size(); ++k) {
    std::string cand = host.substr(starts[k]);
    if (rules_.count(cand)) return cand;
    if (k + 1 < starts.size() && wildcards_.count(host.substr(starts[k + 1]))) return cand;
  }
  return host.substr(starts.back());
}

std::string PublicSuffixList::registrable_domain(std::string_view host_in) const {
  const std::string host = lowercase(host_in);
  const std::string suffix = public_suffix(host);
  if (suffix.size() >= host.size()) return {};
  std::string_view head = std::string_view(host).substr(0, host.size() - suffix.size() - 1);
  auto dot = head.rfind('.');
  std::string_view label = dot == std::string_view::npos ? head : head.substr(dot + 1);
  return std::string(label) + "." + suffix;
}

// ---- extraction --------------------------------------------------------

std::string domain_url(std::string_view host) { return "https://" + lowercase(host) + "/"; }

namespace {

std::string normalize(const UrlParts& p) {
  std::string out = p.scheme + "://";
  if (!p.userinfo.empty()) out += p.userinfo + "@";
  out += p.host;
  if (p.port) out += ":" + std::to_string(*p.port);
  out += p.path.empty() ? "/" : p.path;
  if (!p.query.empty()) out += "?" + p.query;
  if (!p.fragment.empty()) out += "#" + p.fragment;
  return out;
}

void fill_domain_parts(Indicator& ind, const PublicSuffixList& psl) {
  auto dot = ind.host.rfind('.');
  ind.tld = dot == std::string::npos ? ind.host : ind.host.substr(dot + 1);
  ind.registrable_domain = psl.registrable_domain(ind.host);
  if (ind.registrable_domain.empty()) ind.registrable_domain = ind.host;
}

struct Span {
  std::size_t begin, end;
};

// Trims trailing punctuation that usually belongs to the sentence, keeping
// a closing parenthesis when the URL itself opened one.
std::size_t trim_url_end(std::string_view s, std::size_t begin, std::size_t end) {
  while (end > begin) {
    char c = s[end - 1];
    if (c == ')') {
      auto body = s.substr(begin, end - begin);
      if (std::count(body.begin(), body.end(), '(') >= std::count(body.begin(), body.end(), ')')) break;
      --end;
    } else if (c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?' || c == '\'' || c == '"' ||
               c == ']' || c == '}' || c == '*') {
      --end;
    } else {
      break;
    }
  }
  return end;
}

bool scheme_at(std::string_view s, std::size_t i, std::size_t& after) {
  auto match = [&](std::string_view word) {
    if (i + word.size() > s.size()) return false;
    for (std::size_t k = 0; k < word.size(); ++k)
      if (lower(s[i + k]) != word[k]) return false;
    return true;
  };
  if (i > 0 && is_alnum(s[i - 1])) return false;
  if (match("https://")) {
    after = i + 8;
    return true;
  }
  if (match("http://")) {
    after = i + 7;
    return true;
  }
  return false;
}

}  // namespace

std::vector<Indicator> extract_indicators(std::string_view input, IndicatorSource source,
                                          std::optional<std::string> image_id, const PublicSuffixList& psl) {
  std::vector<Indicator> out;
  if (input.empty()) return out;

  const RefangResult rf = refang_with_origin(input);
  const std::string normalized_input = text::nfc(input);
  const std::string& s = rf.text;

  auto raw_of = [&](Span sp) {
    const std::size_t b = rf.origin[sp.begin];
    const std::size_t e = rf.origin[sp.end];
    return normalized_input.substr(b, e - b);
  };
  std::vector<std::pair<std::size_t, Indicator>> found;

  std::vector<Span> url_spans;
  for (std::size_t i = 0; i < s.size();) {
    std::size_t after = 0;
    if (!scheme_at(s, i, after)) {
      ++i;
      continue;
    }
    std::size_t end = after;
    while (end < s.size() && is_uri_char(s[end])) ++end;
    end = trim_url_end(s, i, end);
    Span sp{i, end};
    url_spans.push_back(sp);
    auto parsed = validate_url(std::string_view(s).substr(i, end - i));
    if (auto* parts = std::get_if<UrlParts>(&parsed)) {
      Indicator ind;
      ind.raw = raw_of(sp);
      ind.normalized_url = normalize(*parts);
      ind.source = source;
      ind.image_id = image_id;
      ind.defang_form = classify_defang_form(ind.raw);
      ind.host = parts->host;
      ind.is_url = true;
      fill_domain_parts(ind, psl);
      found.emplace_back(i, std::move(ind));
    }
    i = std::max(end, after);
  }

  auto inside_url = [&](std::size_t pos) {
    for (const auto& sp : url_spans)
      if (pos >= sp.begin && pos < sp.end) return true;
    return false;
  };

  for (std::size_t i = 0; i < s.size();) {
    if (!(is_label_char(s[i]) || s[i] == '.') || inside_url(i)) {
      ++i;
      continue;
    }
    std::size_t b = i;
    std::size_t e = i;
    while (e < s.size() && (is_label_char(s[e]) || s[e] == '.') && !inside_url(e)) ++e;
    i = e;
    const bool email_like = (b > 0 && s[b - 1] == '@') || (e < s.size() && s[e] == '@');
    const bool path_like = b > 0 && (s[b - 1] == '/' || s[b - 1] == '\\' || s[b - 1] == '_');
    if (email_like || path_like) continue;
    while (b < e && (s[b] == '.' || s[b] == '-')) ++b;
    while (e > b && (s[e - 1] == '.' || s[e - 1] == '-')) --e;
    if (b >= e) continue;
    std::string_view cand = std::string_view(s).substr(b, e - b);
    if (validate_domain(cand)) continue;
    std::string host = lowercase(cand);
    auto dot = host.rfind('.');
    if (!psl.is_known_tld(host.substr(dot + 1))) continue;
    Indicator ind;
    ind.raw = raw_of({b, e});
    ind.host = host;
    ind.normalized_url = domain_url(host);
    ind.source = source;
    ind.image_id = image_id;
    ind.defang_form = classify_defang_form(ind.raw);
    ind.is_url = false;
    fill_domain_parts(ind, psl);
    found.emplace_back(b, std::move(ind));
  }

  std::stable_sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [pos, ind] : found) {
    const bool dup = std::any_of(out.begin(), out.end(),
                                 [&](const Indicator& o) { return o.normalized_url == ind.normalized_url; });
    if (!dup) out.push_back(std::move(ind));
  }
  return out;
}

}  // namespace phishintel
