#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "phishintel/corpus.hpp"

namespace phishintel {

// Pluggable proper-noun tagger. The default is a capitalization and script
// heuristic; a neural tagger can be dropped in behind the same interface.
class ProperNounProvider {
 public:
  virtual ~ProperNounProvider() = default;
  virtual std::set<std::string> extract(std::string_view text, Lang lang) const = 0;
};

class HeuristicProperNouns final : public ProperNounProvider {
 public:
  std::set<std::string> extract(std::string_view text, Lang lang) const override;
};

std::set<std::string> extract_proper_nouns(std::string_view text, Lang lang);

enum class Label { pos, neg };

// Per-post document frequencies over one window.
class WindowCounts {
 public:
  void add_post(const std::set<std::string>& tokens, bool positive);

  std::size_t n_posts() const { return n_pos_ + n_neg_; }
  std::size_t n_pos() const { return n_pos_; }
  std::size_t n_neg() const { return n_neg_; }
  std::size_t n_label(Label l) const { return l == Label::pos ? n_pos_ : n_neg_; }

  bool seen(const std::string& token) const { return counts_.count(token) > 0; }
  std::size_t count(const std::string& token) const;
  std::size_t count(const std::string& token, Label l) const;

  std::vector<std::string> tokens() const;  // sorted

 private:
  struct TokenCounts {
    std::size_t pos = 0;
    std::size_t neg = 0;
  };
  std::unordered_map<std::string, TokenCounts> counts_;
  std::size_t n_pos_ = 0;
  std::size_t n_neg_ = 0;
};

// log2(P(token, label) / (P(token) P(label))), with 0 when the token never
// occurs under the label. Throws std::invalid_argument for an unseen token
// or an empty window.
double compute_pmi(const WindowCounts& c, const std::string& token, Label label);

// pmi(token, pos) - pmi(token, neg)
double compute_soa(const WindowCounts& c, const std::string& token);

struct KeywordCandidate {
  std::string token;
  Lang lang = Lang::en;
  double pmi_pos = 0;
  double pmi_neg = 0;
  double soa = 0;
  std::size_t support = 0;
  Timestamp window_end = 0;
};

struct KeywordSelection {
  static constexpr double kDefaultThreshold = 4.0;
  static constexpr std::size_t kDefaultTopK = 10;

  double threshold = kDefaultThreshold;
  std::size_t top_k = kDefaultTopK;
};

// Tokens with soa strictly above the threshold, ordered by soa desc, support
// desc, token asc; at most top_k. `labels` must align with `posts`.
std::vector<KeywordCandidate> select_keywords(const std::vector<PostRecord>& posts, const std::vector<bool>& labels,
                                              const KeywordSelection& opts = {}, Timestamp window_end = 0,
                                              const ProperNounProvider* provider = nullptr);

// Same selection over precomputed token sets.
std::vector<KeywordCandidate> select_keywords(const std::vector<std::set<std::string>>& tokens,
                                              const std::vector<bool>& labels, Lang lang,
                                              const KeywordSelection& opts = {}, Timestamp window_end = 0);

}  // namespace phishintel
