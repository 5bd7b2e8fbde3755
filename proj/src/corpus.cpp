#include "phishintel/corpus.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include <json.hpp>

#include "phishintel/text.hpp"

namespace phishintel {

using nlohmann::json;

std::string_view to_string(Lang lang) { return lang == Lang::en ? "en" : "ja"; }

Lang parse_lang(std::string_view s) {
  if (s == "en") return Lang::en;
  if (s == "ja") return Lang::ja;
  throw std::invalid_argument("unknown lang '" + std::string(s) + "'");
}

namespace {

bool has_whitespace(const std::string& s) {
  for (char32_t cp : text::decode(s))
    if (text::is_space(cp)) return true;
  return false;
}

std::vector<std::string> string_array(const json& j, const char* key, std::size_t line) {
  std::vector<std::string> out;
  if (!j.contains(key) || j.at(key).is_null()) return out;
  const auto& arr = j.at(key);
  if (!arr.is_array()) throw CorpusError(std::string("field '") + key + "' must be an array", line);
  for (const auto& v : arr) {
    if (!v.is_string()) throw CorpusError(std::string("field '") + key + "' must hold strings", line);
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::string required_string(const json& j, const char* key, std::size_t line) {
  if (!j.contains(key) || !j.at(key).is_string())
    throw CorpusError(std::string("missing or non-string field '") + key + "'", line);
  return j.at(key).get<std::string>();
}

}  // namespace

void validate(const PostRecord& post, std::size_t line) {
  if (post.post_id.empty()) throw CorpusError("post_id must be nonempty", line);
  if (post.created_at <= 0) throw CorpusError("created_at must be positive", line);
  for (const auto& h : post.hashtags)
    if (has_whitespace(h)) throw CorpusError("hashtag contains whitespace", line);
  for (const auto& m : post.mentions)
    if (has_whitespace(m)) throw CorpusError("mention contains whitespace", line);
}

PostRecord post_from_json_line(std::string_view line, std::size_t line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw CorpusError(std::string("invalid JSON: ") + e.what(), line_no);
  }
  if (!j.is_object()) throw CorpusError("record must be a JSON object", line_no);

  PostRecord p;
  p.post_id = required_string(j, "post_id", line_no);
  p.author_id = required_string(j, "author_id", line_no);
  if (!j.contains("created_at") || !j.at("created_at").is_number_integer())
    throw CorpusError("missing or non-integer field 'created_at'", line_no);
  p.created_at = j.at("created_at").get<Timestamp>();
  try {
    p.lang = parse_lang(required_string(j, "lang", line_no));
  } catch (const std::invalid_argument& e) {
    throw CorpusError(e.what(), line_no);
  }
  p.text = required_string(j, "text", line_no);
  p.hashtags = string_array(j, "hashtags", line_no);
  p.mentions = string_array(j, "mentions", line_no);
  p.matched_keywords = string_array(j, "matched_keywords", line_no);
  if (j.contains("image_texts") && !j.at("image_texts").is_null()) {
    const auto& arr = j.at("image_texts");
    if (!arr.is_array()) throw CorpusError("field 'image_texts' must be an array", line_no);
    for (const auto& im : arr) {
      if (!im.is_object()) throw CorpusError("image_texts entries must be objects", line_no);
      ImageText it;
      it.image_id = required_string(im, "image_id", line_no);
      if (im.contains("text") && !im.at("text").is_null()) {
        if (!im.at("text").is_string()) throw CorpusError("image text must be a string", line_no);
        it.text = im.at("text").get<std::string>();
      }
      p.image_texts.push_back(std::move(it));
    }
  }
  validate(p, line_no);
  return p;
}

std::string post_to_json_line(const PostRecord& p) {
  json images = json::array();
  for (const auto& im : p.image_texts) {
    json o = {{"image_id", im.image_id}};
    if (im.text) o["text"] = *im.text;
    images.push_back(std::move(o));
  }
  json j = {{"post_id", p.post_id},
            {"author_id", p.author_id},
            {"created_at", p.created_at},
            {"lang", to_string(p.lang)},
            {"text", p.text},
            {"hashtags", p.hashtags},
            {"mentions", p.mentions},
            {"image_texts", std::move(images)},
            {"matched_keywords", p.matched_keywords}};
  return j.dump();
}

std::vector<PostRecord> read_posts(std::istream& in) {
  std::vector<PostRecord> out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    PostRecord p = post_from_json_line(line, line_no);
    if (!seen.insert(p.post_id).second) throw CorpusError("duplicate post_id '" + p.post_id + "'", line_no);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<PostRecord> load_posts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open post file '" + path + "'", 0);
  return read_posts(in);
}

void write_posts(std::ostream& out, const std::vector<PostRecord>& posts) {
  for (const auto& p : posts) out << post_to_json_line(p) << '\n';
}

std::vector<AuthorRecord> read_authors(std::istream& in) {
  std::vector<AuthorRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw CorpusError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    AuthorRecord a;
    a.author_id = required_string(j, "author_id", line_no);
    if (j.contains("profile_text") && j.at("profile_text").is_string()) a.profile_text = j.at("profile_text");
    a.recent_texts = string_array(j, "recent_texts", line_no);
    if (a.recent_texts.size() > AuthorRecord::kMaxRecent)
      throw CorpusError("recent_texts holds more than 10 entries", line_no);
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<AuthorRecord> load_authors(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open author file '" + path + "'", 0);
  return read_authors(in);
}

void write_authors(std::ostream& out, const std::vector<AuthorRecord>& authors) {
  for (const auto& a : authors) {
    json j = {{"author_id", a.author_id}, {"profile_text", a.profile_text}, {"recent_texts", a.recent_texts}};
    out << j.dump() << '\n';
  }
}

LabelMap read_labels(std::istream& in) {
  LabelMap out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw CorpusError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    const std::string id = required_string(j, "post_id", line_no);
    if (!j.contains("label") || !j.at("label").is_boolean()) throw CorpusError("missing boolean 'label'", line_no);
    if (!out.emplace(id, j.at("label").get<bool>()).second)
      throw CorpusError("duplicate label for post_id '" + id + "'", line_no);
  }
  return out;
}

LabelMap load_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open label file '" + path + "'", 0);
  return read_labels(in);
}

void write_labels(std::ostream& out, const std::vector<PostRecord>& posts, const std::vector<bool>& labels) {
  if (posts.size() != labels.size()) throw std::invalid_argument("write_labels: labels not aligned with posts");
  for (std::size_t i = 0; i < posts.size(); ++i) {
    json j = {{"post_id", posts[i].post_id}, {"label", static_cast<bool>(labels[i])}};
    out << j.dump() << '\n';
  }
}

std::vector<PostRecord> select_window(const std::vector<PostRecord>& records, const Window& w) {
  std::vector<PostRecord> out;
  for (const auto& r : records)
    if (w.contains(r.created_at)) out.push_back(r);
  return out;
}

std::vector<std::string> build_query_set(const std::vector<std::string>& security,
                                         const std::vector<std::string>& cooccur) {
  if (security.empty()) throw std::invalid_argument("security keyword list is empty");
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  auto add = [&](const std::string& k) {
    if (seen.insert(text::fold_case(k)).second) out.push_back(k);
  };
  for (const auto& k : security) add(k);
  for (const auto& k : cooccur) add(k);
  return out;
}

std::vector<std::string> match_queries(const PostRecord& post, const std::vector<std::string>& queries) {
  const std::string body = text::fold_case(post.text);
  std::vector<std::string> tags;
  tags.reserve(post.hashtags.size());
  for (const auto& h : post.hashtags) tags.push_back(text::fold_case(h));

  std::vector<std::string> out;
  for (const auto& q : queries) {
    const std::string fq = text::fold_case(q);
    bool hit = text::contains_folded(body, fq);
    if (!hit) {
      std::string_view bare = fq;
      if (!bare.empty() && bare.front() == '#') bare.remove_prefix(1);
      for (const auto& t : tags) {
        if (text::contains_folded(t, bare)) {
          hit = true;
          break;
        }
      }
    }
    if (hit) out.push_back(q);
  }
  return out;
}

const std::vector<std::string>& default_security_keywords(Lang lang) {
  static const std::vector<std::string> en = {
      "Cyber Attack",     "Fake Site",        "Fraud",           "Scam",
      "Malicious Site",   "Phishing",         "Opendir",         "Spam",
      "Social Engineering", "Smishing",       "#CyberCrime",     "#CyberSecurity",
      "#CyberThreat",     "#IdentityTheft",   "#InformationSecurity", "#InfoSec",
      "#EmailSecurity",   "#ThreatHunting",   "#Threat",         "#Security"};
  static const std::vector<std::string> ja = {
      "サイバー攻撃",       "偽サイト",           "詐欺",             "スキャム",
      "悪質サイト",         "フィッシング",       "オープンディレクトリ", "スパム",
      "ソーシャルエンジニアリング", "スミッシング", "#サイバー犯罪",     "#サイバーセキュリティ",
      "#サイバー脅威",      "#なりすまし",        "#情報セキュリティ", "#インフォセック",
      "#メールセキュリティ", "#脅威ハンティング",  "#脅威",             "#セキュリティ"};
  return lang == Lang::en ? en : ja;
}

}  // namespace phishintel
