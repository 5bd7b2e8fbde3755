#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "phishintel/corpus.hpp"

namespace testsupport {

inline std::string data_path(const std::string& name) { return std::string(PHISHINTEL_TEST_DATA) + "/" + name; }

// Rows of a tab-separated fixture, header skipped.
inline std::vector<std::vector<std::string>> read_tsv(const std::string& name) {
  std::ifstream in(data_path(name));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
      auto tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    rows.push_back(std::move(cols));
  }
  return rows;
}

inline phishintel::PostRecord post(std::string id, phishintel::Timestamp t, std::string text,
                                   phishintel::Lang lang = phishintel::Lang::en) {
  phishintel::PostRecord p;
  p.post_id = std::move(id);
  p.author_id = "u-" + p.post_id;
  p.created_at = t;
  p.lang = lang;
  p.text = std::move(text);
  return p;
}

// Small deterministic generator for property tests.
struct Lcg {
  std::uint64_t s;
  explicit Lcg(std::uint64_t seed) : s(seed * 6364136223846793005ULL + 1442695040888963407ULL) {}
  std::uint64_t next() {
    s = s * 6364136223846793005ULL + 1442695040888963407ULL;
    std::uint64_t z = s;
    z ^= z >> 33;
    z *= 0xff51afd7ed558ccdULL;
    z ^= z >> 33;
    return z;
  }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }
  double unit() { return static_cast<double>(next() >> 11) / 9007199254740992.0; }
};

// ---- oracles ------------------------------------------------------------

// PMI recounted from raw token sets, natural log converted to base 2.
inline double naive_pmi(const std::vector<std::set<std::string>>& posts, const std::vector<bool>& labels,
                        const std::string& token, bool positive) {
  double n = 0, n_label = 0, n_token = 0, n_joint = 0;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    n += 1;
    const bool has = posts[i].count(token) > 0;
    const bool in_label = labels[i] == positive;
    if (in_label) n_label += 1;
    if (has) n_token += 1;
    if (has && in_label) n_joint += 1;
  }
  if (n_joint == 0) return 0.0;
  return std::log((n_joint / n) / ((n_token / n) * (n_label / n))) / std::log(2.0);
}

inline std::vector<phishintel::PostRecord> brute_window(const std::vector<phishintel::PostRecord>& posts,
                                                        phishintel::Timestamp end, phishintel::Timestamp duration) {
  std::vector<phishintel::PostRecord> out;
  for (const auto& p : posts) {
    bool inside = true;
    if (p.created_at < end - duration) inside = false;
    if (p.created_at >= end) inside = false;
    if (inside) out.push_back(p);
  }
  return out;
}

// Best depth-1 split by exhaustive enumeration of every feature and every
// midpoint between distinct sorted values; weighted Gini impurity, lowest
// feature then lowest threshold on ties.
struct GiniSplit {
  bool found = false;
  int feature = -1;
  double threshold = 0;
  double left_p = 0;   // positive fraction left
  double right_p = 0;
};

inline GiniSplit exhaustive_gini(const std::vector<std::vector<double>>& x, const std::vector<bool>& y) {
  GiniSplit best;
  double best_impurity = std::numeric_limits<double>::infinity();
  auto gini = [](double pos, double size) {
    if (size == 0) return 0.0;
    const double p = pos / size;
    return 1.0 - p * p - (1 - p) * (1 - p);
  };
  const std::size_t d = x.empty() ? 0 : x[0].size();
  for (std::size_t f = 0; f < d; ++f) {
    std::set<double> values;
    for (const auto& r : x) values.insert(r[f]);
    std::vector<double> v(values.begin(), values.end());
    for (std::size_t k = 0; k + 1 < v.size(); ++k) {
      const double t = v[k] + (v[k + 1] - v[k]) / 2;
      double lp = 0, ln = 0, rp = 0, rn = 0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i][f] <= t) (y[i] ? lp : ln) += 1;
        else (y[i] ? rp : rn) += 1;
      }
      const double nl = lp + ln, nr = rp + rn;
      const double impurity = (nl * gini(lp, nl) + nr * gini(rp, nr)) / (nl + nr);
      if (impurity < best_impurity - 1e-12) {
        best_impurity = impurity;
        best = {true, static_cast<int>(f), t, lp / nl, rp / nr};
      }
    }
  }
  return best;
}

}  // namespace testsupport
