#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace phishintel {

using Timestamp = std::int64_t;  // UTC seconds

enum class Lang { en, ja };

std::string_view to_string(Lang lang);
Lang parse_lang(std::string_view s);

struct ImageText {
  std::string image_id;
  std::optional<std::string> text;  // absent: image present, nothing extracted

  bool operator==(const ImageText&) const = default;
};

struct PostRecord {
  std::string post_id;
  std::string author_id;
  Timestamp created_at = 0;
  Lang lang = Lang::en;
  std::string text;
  std::vector<std::string> hashtags;
  std::vector<std::string> mentions;
  std::vector<ImageText> image_texts;
  std::vector<std::string> matched_keywords;

  bool operator==(const PostRecord&) const = default;
};

struct AuthorRecord {
  static constexpr std::size_t kMaxRecent = 10;

  std::string author_id;
  std::string profile_text;
  std::vector<std::string> recent_texts;

  bool operator==(const AuthorRecord&) const = default;
};

struct Window {
  static constexpr Timestamp kDefaultDuration = 21 * 3600;

  Timestamp end = 0;
  Timestamp duration = kDefaultDuration;

  bool contains(Timestamp t) const { return end - duration <= t && t < end; }
};

// Raised for malformed input files. `line` is 1-based; 0 when not line-specific.
class CorpusError : public std::runtime_error {
 public:
  CorpusError(const std::string& what, std::size_t line)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Validates the record invariants; throws CorpusError.
void validate(const PostRecord& post, std::size_t line = 0);

PostRecord post_from_json_line(std::string_view line, std::size_t line_no);
std::string post_to_json_line(const PostRecord& post);

std::vector<PostRecord> read_posts(std::istream& in);
std::vector<PostRecord> load_posts(const std::string& path);
void write_posts(std::ostream& out, const std::vector<PostRecord>& posts);

std::vector<AuthorRecord> read_authors(std::istream& in);
std::vector<AuthorRecord> load_authors(const std::string& path);
void write_authors(std::ostream& out, const std::vector<AuthorRecord>& authors);

// Ground-truth labels, JSON-lines {"post_id": ..., "label": true|false}.
using LabelMap = std::unordered_map<std::string, bool>;
LabelMap read_labels(std::istream& in);
LabelMap load_labels(const std::string& path);
void write_labels(std::ostream& out, const std::vector<PostRecord>& posts, const std::vector<bool>& labels);

// Half-open [end - duration, end); order preserved.
std::vector<PostRecord> select_window(const std::vector<PostRecord>& records, const Window& w);

// Security keywords first, then co-occurrence keywords not already present
// (case-insensitive). Throws std::invalid_argument on an empty security list.
std::vector<std::string> build_query_set(const std::vector<std::string>& security,
                                         const std::vector<std::string>& cooccur);

// Case-insensitive substring match against post text and hashtags.
// A leading '#' on the query matches hashtags as well as literal text.
std::vector<std::string> match_queries(const PostRecord& post, const std::vector<std::string>& queries);

// The Table-of-keywords defaults: 20 English security keywords and their Japanese counterparts.
const std::vector<std::string>& default_security_keywords(Lang lang);

}  // namespace phishintel
