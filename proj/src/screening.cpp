#include "phishintel/screening.hpp"

#include <netdb.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace phishintel {

// ---- lists -------------------------------------------------------------

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower_ascii(std::string s) {
  for (char& c : s)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return s;
}

}  // namespace

RankList RankList::parse(std::istream& in, int cutoff) {
  RankList list(cutoff);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error("rank list line " + std::to_string(line_no) + ": expected 'rank,domain'");
    const std::string rank_text = trim(std::string_view(line).substr(0, comma));
    int rank = 0;
    auto [ptr, ec] = std::from_chars(rank_text.data(), rank_text.data() + rank_text.size(), rank);
    if (ec != std::errc() || ptr != rank_text.data() + rank_text.size()) {
      if (line_no == 1) continue;  // header row
      throw std::runtime_error("rank list line " + std::to_string(line_no) + ": bad rank '" + rank_text + "'");
    }
    try {
      list.add(trim(std::string_view(line).substr(comma + 1)), rank);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("rank list line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return list;
}

RankList RankList::load(const std::string& path, int cutoff) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open rank list '" + path + "'");
  return parse(in, cutoff);
}

void RankList::add(const std::string& domain, int rank) {
  if (rank < 1) throw std::invalid_argument("rank must be positive");
  if (domain.empty()) throw std::invalid_argument("empty domain");
  if (!ranks_.emplace(lower_ascii(domain), rank).second)
    throw std::invalid_argument("domain '" + domain + "' ranked twice");
}

std::optional<int> RankList::rank(const std::string& domain) const {
  auto it = ranks_.find(lower_ascii(domain));
  if (it == ranks_.end()) return std::nullopt;
  return it->second;
}

bool RankList::in_top(const std::string& domain) const {
  auto r = rank(domain);
  return r && *r <= cutoff_;
}

DomainSet parse_domain_set(std::istream& in) {
  DomainSet set;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    set.insert(lower_ascii(line));
  }
  return set;
}

DomainSet load_domain_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open domain list '" + path + "'");
  return parse_domain_set(in);
}

bool matches_domain_set(const DomainSet& set, const std::string& host_in) {
  std::string_view host = host_in;
  while (!host.empty()) {
    if (set.count(std::string(host))) return true;
    auto dot = host.find('.');
    if (dot == std::string_view::npos) break;
    host.remove_prefix(dot + 1);
  }
  return false;
}

// ---- WHOIS -------------------------------------------------------------

namespace {

// Days from 1970-01-01 to the given civil date (proleptic Gregorian).
long days_from_civil(long y, unsigned m, unsigned d) {
  y -= m <= 2;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long>(doe) - 719468;
}

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, out);
  return ec == std::errc() && ptr == s.data() + pos + len;
}

}  // namespace

std::optional<Timestamp> parse_iso8601(std::string_view s) {
  int y = 0, mo = 0, d = 0;
  if (s.size() < 10 || !read_int(s, 0, 4, y) || !read_int(s, 5, 2, mo) || !read_int(s, 8, 2, d)) return std::nullopt;
  const char sep = s[4];
  if ((sep != '-' && sep != '/' && sep != '.') || s[7] != sep) return std::nullopt;
  if (mo < 1 || mo > 12 || d < 1 || d > 31) return std::nullopt;
  Timestamp t = days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 86400L;
  std::string_view rest = s.substr(10);
  if (rest.empty()) return t;
  if (rest.front() != 'T' && rest.front() != ' ') return std::nullopt;
  int hh = 0, mm = 0, ss = 0;
  if (!read_int(rest, 1, 2, hh) || rest.size() < 6 || rest[3] != ':' || !read_int(rest, 4, 2, mm))
    return std::nullopt;
  std::size_t pos = 6;
  if (pos < rest.size() && rest[pos] == ':') {
    if (!read_int(rest, pos + 1, 2, ss)) return std::nullopt;
    pos += 3;
  }
  if (pos < rest.size() && rest[pos] == '.') {
    ++pos;
    while (pos < rest.size() && rest[pos] >= '0' && rest[pos] <= '9') ++pos;
  }
  t += hh * 3600L + mm * 60L + ss;
  std::string_view zone = rest.substr(pos);
  if (zone.empty() || zone == "Z" || zone == "z") return t;
  if (zone.front() == '+' || zone.front() == '-') {
    int zh = 0, zm = 0;
    if (!read_int(zone, 1, 2, zh)) return std::nullopt;
    std::size_t mpos = (zone.size() > 3 && zone[3] == ':') ? 4 : 3;
    if (zone.size() > mpos && !read_int(zone, mpos, 2, zm)) return std::nullopt;
    const long offset = zh * 3600L + zm * 60L;
    return zone.front() == '+' ? t - offset : t + offset;
  }
  return std::nullopt;
}

std::string format_iso8601(Timestamp t) {
  Timestamp days = t / 86400;
  Timestamp secs = t % 86400;
  if (secs < 0) {
    secs += 86400;
    --days;
  }
  // Civil-from-days (proleptic Gregorian).
  days += 719468;
  const Timestamp era = (days >= 0 ? days : days - 146096) / 146097;
  const Timestamp doe = days - era * 146097;
  const Timestamp yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const Timestamp doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const Timestamp mp = (5 * doy + 2) / 153;
  const Timestamp d = doy - (153 * mp + 2) / 5 + 1;
  const Timestamp m = mp < 10 ? mp + 3 : mp - 9;
  const Timestamp y = yoe + era * 400 + (m <= 2 ? 1 : 0);
  char buf[128];
  std::snprintf(buf, sizeof buf, "%04lld-%02lld-%02lldT%02lld:%02lld:%02lldZ", static_cast<long long>(y),
                static_cast<long long>(m), static_cast<long long>(d), static_cast<long long>(secs / 3600),
                static_cast<long long>(secs / 60 % 60), static_cast<long long>(secs % 60));
  return buf;
}

FixtureWhois FixtureWhois::parse(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(std::string("WHOIS fixture: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::runtime_error("WHOIS fixture must be a JSON object");
  FixtureWhois w;
  for (const auto& [domain, value] : j.items()) {
    if (value.is_null()) {
      w.set(domain, std::nullopt);
    } else if (value.is_string()) {
      auto t = parse_iso8601(value.get<std::string>());
      if (!t) throw std::runtime_error("WHOIS fixture: bad date for '" + domain + "'");
      w.set(domain, t);
    } else {
      throw std::runtime_error("WHOIS fixture: value for '" + domain + "' must be a date string or null");
    }
  }
  return w;
}

FixtureWhois FixtureWhois::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open WHOIS fixture '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void FixtureWhois::set(const std::string& domain, std::optional<Timestamp> created) {
  entries_[lower_ascii(domain)] = created;
}

WhoisResult FixtureWhois::lookup(const std::string& domain) const {
  auto it = entries_.find(lower_ascii(domain));
  if (it == entries_.end()) return {};
  if (!it->second) return {WhoisResult::Status::no_creation_date, 0};
  return {WhoisResult::Status::ok, *it->second};
}

std::optional<Timestamp> parse_whois_creation_date(std::string_view response) {
  static const char* const keys[] = {"creation date:", "created:", "created on:", "registered on:",
                                     "registration time:", "domain registration date:", "registered:",
                                     "[登録年月日]", "[created on]"};
  std::istringstream in{std::string(response)};
  std::string line;
  while (std::getline(in, line)) {
    std::string folded = lower_ascii(trim(line));
    for (const char* key : keys) {
      if (!folded.starts_with(key)) continue;
      std::string value = trim(std::string_view(folded).substr(std::strlen(key)));
      if (!value.empty() && value.back() == ')') {
        if (auto p = value.find(" ("); p != std::string::npos) value.resize(p);
      }
      if (value.size() >= 10) {
        // Uppercase the 'T'/'Z' markers lost by folding.
        for (char& c : value)
          if (c == 't' || c == 'z') c = static_cast<char>(c - 'a' + 'A');
        if (auto t = parse_iso8601(value)) return t;
        if (auto t = parse_iso8601(value.substr(0, 10))) return t;
      }
    }
  }
  return std::nullopt;
}

std::optional<std::string> parse_whois_referral(std::string_view response) {
  std::istringstream in{std::string(response)};
  std::string line;
  while (std::getline(in, line)) {
    std::string folded = lower_ascii(trim(line));
    for (std::string_view key : {"refer:", "whois:"}) {
      if (folded.starts_with(key)) {
        std::string server = trim(std::string_view(folded).substr(key.size()));
        if (!server.empty()) return server;
      }
    }
  }
  return std::nullopt;
}

namespace {

class Socket {
 public:
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket() {
    if (fd_ >= 0) ::close(fd_);
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  int fd() const { return fd_; }

 private:
  int fd_;
};

std::optional<std::string> whois_query(const std::string& server, const std::string& query, int timeout_seconds) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(server.c_str(), "43", &hints, &res) != 0) return std::nullopt;
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(res, &::freeaddrinfo);

  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    Socket sock(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
    if (sock.fd() < 0) continue;
    timeval tv{timeout_seconds, 0};
    ::setsockopt(sock.fd(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    ::setsockopt(sock.fd(), SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
    if (::connect(sock.fd(), ai->ai_addr, ai->ai_addrlen) != 0) continue;
    const std::string request = query + "\r\n";
    if (::send(sock.fd(), request.data(), request.size(), 0) != static_cast<ssize_t>(request.size())) continue;
    std::string response;
    char buf[4096];
    while (true) {
      ssize_t n = ::recv(sock.fd(), buf, sizeof buf, 0);
      if (n <= 0) break;
      response.append(buf, static_cast<std::size_t>(n));
      if (response.size() > (1u << 20)) break;
    }
    if (!response.empty()) return response;
  }
  return std::nullopt;
}

}  // namespace

WhoisResult TcpWhois::lookup(const std::string& domain) const {
  const auto dot = domain.rfind('.');
  const std::string tld = dot == std::string::npos ? domain : domain.substr(dot + 1);
  auto iana = whois_query("whois.iana.org", tld, timeout_seconds_);
  if (!iana) return {};
  auto server = parse_whois_referral(*iana);
  if (!server) return {};
  auto response = whois_query(*server, domain, timeout_seconds_);
  if (!response) return {};
  if (auto created = parse_whois_creation_date(*response)) return {WhoisResult::Status::ok, *created};
  return {WhoisResult::Status::no_creation_date, 0};
}

// ---- screening ---------------------------------------------------------

std::string_view to_string(ScreenReason r) {
  switch (r) {
    case ScreenReason::rank_allowlisted: return "rank_allowlisted";
    case ScreenReason::too_old: return "too_old";
    case ScreenReason::whois_unavailable: return "whois_unavailable";
    case ScreenReason::shortener: return "shortener";
    case ScreenReason::dynamic_dns: return "dynamic_dns";
  }
  return "";
}

bool ScreeningVerdict::has(ScreenReason r) const {
  return std::find(reasons.begin(), reasons.end(), r) != reasons.end();
}

ScreeningVerdict screen(const Indicator& ind, const ScreeningContext& ctx) {
  ScreeningVerdict v;
  v.indicator = ind;
  const std::string& domain = ind.registrable_domain.empty() ? ind.host : ind.registrable_domain;

  const bool shortener = ctx.shorteners && matches_domain_set(*ctx.shorteners, ind.host);
  if (shortener) v.reasons.push_back(ScreenReason::shortener);
  if (ctx.dynamic_dns && matches_domain_set(*ctx.dynamic_dns, domain)) v.reasons.push_back(ScreenReason::dynamic_dns);

  if (ctx.ranks && ctx.ranks->in_top(domain) && !shortener) {
    v.kept = false;
    v.reasons.push_back(ScreenReason::rank_allowlisted);
  }

  const WhoisResult who = ctx.whois ? ctx.whois->lookup(domain) : WhoisResult{};
  if (who.status == WhoisResult::Status::ok) {
    const Timestamp delta = ctx.now - who.created;
    // Whole days, rounded toward negative infinity.
    long days = static_cast<long>(delta / 86400);
    if (delta % 86400 != 0 && delta < 0) --days;
    v.domain_age_days = days;
    if (days > ctx.max_age_days) {
      v.kept = false;
      v.reasons.push_back(ScreenReason::too_old);
    }
  } else {
    v.reasons.push_back(ScreenReason::whois_unavailable);
  }
  return v;
}

Indicator promote_domain_to_url(const Indicator& ind) {
  if (ind.is_url) throw std::invalid_argument("promote_domain_to_url: indicator is already a URL");
  Indicator out = ind;
  out.normalized_url = domain_url(ind.host);
  return out;
}

PostScreening screen_post(const PostRecord&, const std::vector<Indicator>& indicators, const ScreeningContext& ctx) {
  PostScreening result;
  for (const auto& ind : indicators) {
    ScreeningVerdict v = screen(ind, ctx);
    if (v.kept) {
      const bool dup = std::any_of(result.kept.begin(), result.kept.end(),
                                   [&](const Indicator& k) { return k.normalized_url == ind.normalized_url; });
      if (!dup) result.kept.push_back(ind);
    }
    result.verdicts.push_back(std::move(v));
  }
  result.excluded = result.kept.empty();
  return result;
}

std::vector<Indicator> extract_post_indicators(const PostRecord& post, const PublicSuffixList& psl) {
  std::vector<Indicator> out = extract_indicators(post.text, IndicatorSource::text, std::nullopt, psl);
  for (const auto& im : post.image_texts) {
    if (!im.text) continue;
    auto found = extract_indicators(*im.text, IndicatorSource::image, im.image_id, psl);
    out.insert(out.end(), std::make_move_iterator(found.begin()), std::make_move_iterator(found.end()));
  }
  return out;
}

}  // namespace phishintel
