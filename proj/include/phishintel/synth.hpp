#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "phishintel/corpus.hpp"
#include "phishintel/ioc.hpp"

namespace phishintel {

struct SynthConfig {
  std::size_t n_reports = 300;
  std::size_t n_benign = 1700;
  std::vector<std::string> brands_en = {"Amazon", "ATT", "USPS", "Netflix", "PayPal", "Apple"};
  std::vector<std::string> brands_ja = {"アマゾン", "ヤマト", "ドコモ", "メルカリ"};
  double ja_fraction = 0.15;
  Timestamp start = 1672531200;  // 2023-01-01T00:00:00Z
  Timestamp span = 72 * 3600;
  // Weight per DefangForm in enum order, `none` last.
  std::vector<double> defang_mix = {1, 2, 1, 1, 1, 2, 1, 1, 1, 2};
  double bare_domain_fraction = 0.2;
  double expert_fraction = 0.4;
  // Fraction of reporting users who share exactly one report.
  double single_share_fraction = 0.53;
  // Benign posts that nevertheless carry a defanged, fresh-looking link.
  double benign_defang_fraction = 0.03;
};

struct SyntheticCorpus {
  std::vector<PostRecord> posts;  // chronological
  std::vector<AuthorRecord> authors;
  std::vector<bool> labels;            // aligned with posts
  std::vector<std::size_t> planted;    // indicators per post, counted per text/image source
  std::vector<std::pair<int, std::string>> ranks;
  std::vector<std::string> shorteners;
  std::vector<std::string> dynamic_dns;
  std::map<std::string, std::optional<Timestamp>> whois;

  std::size_t planted_total() const;
};

// Deterministic for a fixed (seed, cfg). Throws std::invalid_argument when
// the config asks for zero posts or has no brands for a used language.
SyntheticCorpus generate_synthetic(std::uint64_t seed, const SynthConfig& cfg = {});

// Writes posts.jsonl, authors.jsonl, labels.jsonl, ranks.csv, shorteners.txt,
// dyndns.txt and whois.json into `dir` (created if missing).
void save_synthetic(const SyntheticCorpus& corpus, const std::string& dir);

}  // namespace phishintel
