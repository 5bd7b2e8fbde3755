#include "phishintel/cooccur.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include <unicode/uchar.h>

#include "phishintel/text.hpp"

namespace phishintel {

namespace {

const std::unordered_set<std::string>& english_stopwords() {
  static const std::unordered_set<std::string> words = {
      "A",       "An",      "The",     "This",     "That",    "These",   "Those",   "Your",    "You",
      "My",      "We",      "I",       "It",       "Its",     "Our",     "He",      "She",     "They",
      "Please",  "Hi",      "Hello",   "Dear",     "Got",     "Just",    "If",      "In",      "On",
      "At",      "To",      "For",     "From",     "And",     "But",     "Or",      "So",      "Do",
      "Is",      "Are",     "Was",     "Be",       "Not",     "No",      "Yes",     "Today",   "Yesterday",
      "Beware",  "Warning", "Alert",   "Click",    "Verify",  "Check",   "Watch",   "What",    "When",
      "Why",     "How",     "Who",     "Where",    "Here",    "There",   "Received", "Another", "New",
      "Never",   "Don't",   "Stay",    "Thanks",   "Thank",   "Good",    "Great",   "Nice",    "Look",
      "Again",   "Also",    "Still",   "OK",       "Ok",      "RT",      "Via",     "By",      "With",
      "As",      "All",     "Some",    "Any",      "Now",     "Then",    "Today's", "Has",     "Have",
      "Had",     "Can",     "Will",    "Would",    "Should",  "Could",   "May",     "Might",   "Must",
      "Let's",   "Lets",    "Keep",    "Report",   "Reported", "Someone", "Anyone",  "Everyone", "Be",
      "Wow",     "Oh",      "Lol",     "Lovely",   "Morning", "Evening", "Weekend", "Sunday",  "Monday",
      "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Happy", "Best",   "Enjoy",   "Coffee",
  };
  return words;
}

const std::unordered_set<std::string>& katakana_stopwords() {
  static const std::unordered_set<std::string> words = {
      "メール", "アカウント", "パスワード", "リンク", "サイト", "ログイン", "カード", "フィッシング",
      "スパム", "ショートメール", "メッセージ", "アクセス", "クリック", "セキュリティ", "サービス",
      "スマホ", "ページ", "アプリ", "ニュース", "コーヒー", "ランチ", "カフェ", "スミッシング",
  };
  return words;
}

bool ascii_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool ascii_lower(char c) { return c >= 'a' && c <= 'z'; }
bool ascii_digit(char c) { return c >= '0' && c <= '9'; }

bool looks_like_link(std::string_view tok) {
  if (tok.find("://") != std::string_view::npos || tok.find("[.]") != std::string_view::npos) return true;
  if (!tok.empty() && tok.front() == '@') return true;
  // Interior dot between alphanumerics ("evil.com", "a.b").
  for (std::size_t i = 1; i + 1 < tok.size(); ++i)
    if (tok[i] == '.' && std::isalnum(static_cast<unsigned char>(tok[i - 1])) &&
        std::isalnum(static_cast<unsigned char>(tok[i + 1])))
      return true;
  return false;
}

bool is_edge_punct(char c) {
  return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?' || c == '"' || c == '\'' ||
         c == '(' || c == ')' || c == '[' || c == ']' || c == '{' || c == '}' || c == '*' || c == '<' ||
         c == '>' || c == '|';
}

// Word-level proper-noun runs over ASCII-ish text. Tokens separated by
// anything other than a single space-run end the current run.
void extract_latin(std::string_view s, std::set<std::string>& out) {
  std::vector<std::string> run;
  auto flush = [&] {
    // Trailing numeric-only tokens are kept ("Microsoft 365"); a run of only
    // numbers never starts.
    if (!run.empty()) {
      std::string joined;
      for (const auto& w : run) {
        if (!joined.empty()) joined += ' ';
        joined += w;
      }
      out.insert(joined);
    }
    run.clear();
  };

  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == ' ' || s[i] == '\t' || s[i] == '\n' || s[i] == '\r') {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\n' && s[j] != '\r') ++j;
    std::string_view tok = s.substr(i, j - i);
    i = j;

    if (looks_like_link(tok)) {
      flush();
      continue;
    }
    bool lead_break = false;
    while (!tok.empty() && (is_edge_punct(tok.front()) || tok.front() == '#')) {
      lead_break = lead_break || tok.front() != '#';
      tok.remove_prefix(1);
    }
    bool trail_break = false;
    while (!tok.empty() && is_edge_punct(tok.back())) {
      tok.remove_suffix(1);
      trail_break = true;
    }
    if (lead_break) flush();

    bool ok_chars = !tok.empty();
    bool has_upper_start = !tok.empty() && ascii_upper(tok.front());
    bool all_digits = !tok.empty();
    for (char c : tok) {
      if (!(ascii_upper(c) || ascii_lower(c) || ascii_digit(c) || c == '-' || c == '&' || c == '\'')) ok_chars = false;
      if (!ascii_digit(c)) all_digits = false;
    }
    const bool proper = ok_chars && has_upper_start && !english_stopwords().count(std::string(tok));
    const bool numeric_tail = ok_chars && all_digits && !run.empty();

    if (proper || numeric_tail) {
      run.emplace_back(tok);
    } else {
      flush();
    }
    if (trail_break) flush();
  }
  flush();
}

}  // namespace

std::set<std::string> HeuristicProperNouns::extract(std::string_view input, Lang lang) const {
  std::set<std::string> out;
  const std::string normalized = text::nfc(input);
  if (lang == Lang::en) {
    extract_latin(normalized, out);
    return out;
  }

  // Japanese: katakana runs, plus Latin brand-like words with every
  // non-ASCII character acting as a run break.
  std::string latin;
  std::vector<char32_t> kata;
  auto flush_kata = [&] {
    if (kata.size() >= 2) {
      std::string word = text::encode(kata);
      if (!katakana_stopwords().count(word)) out.insert(word);
    }
    kata.clear();
  };
  for (char32_t cp : text::decode(normalized)) {
    if (text::is_katakana(cp) && cp != 0x30FB) {  // U+30FB middle dot separates words
      kata.push_back(cp);
    } else {
      flush_kata();
    }
    if (cp < 0x80) {
      latin.push_back(static_cast<char>(cp));
    } else {
      latin += " | ";
    }
  }
  flush_kata();
  extract_latin(latin, out);
  out.erase("|");
  return out;
}

std::set<std::string> extract_proper_nouns(std::string_view text, Lang lang) {
  static const HeuristicProperNouns provider;
  return provider.extract(text, lang);
}

void WindowCounts::add_post(const std::set<std::string>& tokens, bool positive) {
  (positive ? n_pos_ : n_neg_)++;
  for (const auto& t : tokens) {
    auto& c = counts_[t];
    (positive ? c.pos : c.neg)++;
  }
}

std::size_t WindowCounts::count(const std::string& token) const {
  auto it = counts_.find(token);
  return it == counts_.end() ? 0 : it->second.pos + it->second.neg;
}

std::size_t WindowCounts::count(const std::string& token, Label l) const {
  auto it = counts_.find(token);
  if (it == counts_.end()) return 0;
  return l == Label::pos ? it->second.pos : it->second.neg;
}

std::vector<std::string> WindowCounts::tokens() const {
  std::vector<std::string> out;
  out.reserve(counts_.size());
  for (const auto& [t, _] : counts_) out.push_back(t);
  std::sort(out.begin(), out.end());
  return out;
}

double compute_pmi(const WindowCounts& c, const std::string& token, Label label) {
  if (c.n_posts() == 0) throw std::invalid_argument("compute_pmi: empty window");
  if (!c.seen(token)) throw std::invalid_argument("compute_pmi: token '" + token + "' not seen in window");
  const auto joint = static_cast<double>(c.count(token, label));
  if (joint == 0) return 0.0;
  const auto n = static_cast<double>(c.n_posts());
  const auto marginal = static_cast<double>(c.count(token));
  const auto n_label = static_cast<double>(c.n_label(label));
  return std::log2((joint * n) / (marginal * n_label));
}

double compute_soa(const WindowCounts& c, const std::string& token) {
  return compute_pmi(c, token, Label::pos) - compute_pmi(c, token, Label::neg);
}

std::vector<KeywordCandidate> select_keywords(const std::vector<std::set<std::string>>& tokens,
                                              const std::vector<bool>& labels, Lang lang,
                                              const KeywordSelection& opts, Timestamp window_end) {
  if (tokens.size() != labels.size()) throw std::invalid_argument("select_keywords: labels not aligned with posts");
  WindowCounts counts;
  for (std::size_t i = 0; i < tokens.size(); ++i) counts.add_post(tokens[i], labels[i]);

  std::vector<KeywordCandidate> out;
  if (counts.n_posts() == 0) return out;
  for (const auto& t : counts.tokens()) {
    KeywordCandidate k;
    k.token = t;
    k.lang = lang;
    k.pmi_pos = compute_pmi(counts, t, Label::pos);
    k.pmi_neg = compute_pmi(counts, t, Label::neg);
    k.soa = k.pmi_pos - k.pmi_neg;
    k.support = counts.count(t);
    k.window_end = window_end;
    if (k.soa > opts.threshold) out.push_back(std::move(k));
  }
  std::sort(out.begin(), out.end(), [](const KeywordCandidate& a, const KeywordCandidate& b) {
    if (a.soa != b.soa) return a.soa > b.soa;
    if (a.support != b.support) return a.support > b.support;
    return a.token < b.token;
  });
  if (out.size() > opts.top_k) out.resize(opts.top_k);
  return out;
}

std::vector<KeywordCandidate> select_keywords(const std::vector<PostRecord>& posts, const std::vector<bool>& labels,
                                              const KeywordSelection& opts, Timestamp window_end,
                                              const ProperNounProvider* provider) {
  static const HeuristicProperNouns fallback;
  const ProperNounProvider& p = provider ? *provider : fallback;
  std::vector<std::set<std::string>> tokens;
  tokens.reserve(posts.size());
  for (const auto& post : posts) tokens.push_back(p.extract(post.text, post.lang));
  const Lang lang = posts.empty() ? Lang::en : posts.front().lang;
  return select_keywords(tokens, labels, lang, opts, window_end);
}

}  // namespace phishintel
