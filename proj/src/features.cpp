#include "phishintel/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "phishintel/text.hpp"

namespace phishintel {

const std::array<std::string_view, 10>& tracked_tlds() {
  static const std::array<std::string_view, 10> tlds = {"com", "org", "top",  "info", "xyz",
                                                        "online", "net", "shop", "cn",   "vip"};
  return tlds;
}

std::vector<Instance> build_instances(const PostRecord& post, const std::vector<Indicator>& indicators,
                                      std::optional<bool> label) {
  std::vector<Instance> out;
  for (const auto& ind : indicators) {
    if (post.image_texts.empty()) {
      out.push_back({post.post_id, std::nullopt, ind, label});
    } else {
      for (const auto& im : post.image_texts) out.push_back({post.post_id, im.image_id, ind, label});
    }
  }
  return out;
}

std::vector<std::string> FeatureSchema::column_names() const {
  std::vector<std::string> names = {"content_chars", "content_words", "content_hashtags", "content_images"};
  for (std::size_t i = 0; i < kDefangFormCount; ++i)
    names.push_back("content_defang_" + std::string(to_string(static_cast<DefangForm>(i))));
  names.insert(names.end(), {"url_total_chars", "url_fqdn_chars", "url_digits"});
  for (auto tld : tracked_tlds()) names.push_back("url_tld_" + std::string(tld));
  names.insert(names.end(), {"ocr_chars", "ocr_words", "ocr_symbols", "ocr_digits"});
  for (std::size_t i = 0; i < visual_dim; ++i) names.push_back("visual_" + std::to_string(i));
  for (std::size_t i = 0; i < context_dim; ++i) names.push_back("context_" + std::to_string(i));
  return names;
}

std::vector<double> FeatureVector::flatten() const {
  std::vector<double> out;
  out.reserve(content.size() + url.size() + ocr.size() + visual.size() + context.size());
  out.insert(out.end(), content.begin(), content.end());
  out.insert(out.end(), url.begin(), url.end());
  out.insert(out.end(), ocr.begin(), ocr.end());
  out.insert(out.end(), visual.begin(), visual.end());
  out.insert(out.end(), context.begin(), context.end());
  return out;
}

namespace {

std::size_t count_words(std::string_view s, Lang lang) {
  return lang == Lang::ja ? text::count_words_script_runs(s) : text::count_words_whitespace(s);
}

const ImageText* find_image(const PostRecord& post, const std::optional<std::string>& id) {
  if (!id) return nullptr;
  for (const auto& im : post.image_texts)
    if (im.image_id == *id) return &im;
  return nullptr;
}

}  // namespace

std::array<double, kContentDim> content_features(const PostRecord& post, const Instance& inst) {
  std::array<double, kContentDim> f{};
  const std::string body = text::nfc(post.text);
  f[0] = static_cast<double>(text::count_chars(body).chars);
  f[1] = static_cast<double>(count_words(body, post.lang));
  f[2] = static_cast<double>(post.hashtags.size());
  f[3] = static_cast<double>(post.image_texts.size());
  if (inst.indicator.defang_form != DefangForm::none) f[4 + static_cast<std::size_t>(inst.indicator.defang_form)] = 1.0;
  return f;
}

std::array<double, kUrlDim> url_features(const Indicator& ind) {
  std::array<double, kUrlDim> f{};
  f[0] = static_cast<double>(ind.normalized_url.size());
  f[1] = static_cast<double>(ind.host.size());
  f[2] = static_cast<double>(std::count_if(ind.normalized_url.begin(), ind.normalized_url.end(),
                                           [](char c) { return c >= '0' && c <= '9'; }));
  const auto& tlds = tracked_tlds();
  for (std::size_t i = 0; i < tlds.size(); ++i)
    if (ind.tld == tlds[i]) f[3 + i] = 1.0;
  return f;
}

std::array<double, kOcrDim> ocr_features(const Instance& inst, const PostRecord& post) {
  std::array<double, kOcrDim> f{};
  const ImageText* im = find_image(post, inst.image_id);
  if (!im || !im->text || im->text->empty()) return f;
  const std::string s = text::nfc(*im->text);
  const auto counts = text::count_chars(s);
  f[0] = static_cast<double>(counts.chars);
  f[1] = static_cast<double>(count_words(s, post.lang));
  f[2] = static_cast<double>(counts.symbols);
  f[3] = static_cast<double>(counts.digits);
  return f;
}

// ---- embedders ---------------------------------------------------------

namespace {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_feature(std::string_view s, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ mix64(seed);
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(h);
}

}  // namespace

std::vector<double> hash_embed(std::string_view input, std::size_t dim, std::uint64_t seed) {
  std::vector<double> v(dim, 0.0);
  if (dim == 0) return v;
  const std::string folded = text::fold_case(text::nfc(input));
  auto add = [&](std::string_view feature, double weight) {
    const std::uint64_t h = hash_feature(feature, seed);
    v[h % dim] += (h >> 63) ? -weight : weight;
  };
  for (const auto& w : text::split_whitespace(folded)) add("w:" + w, 1.0);
  const auto cps = text::decode(folded);
  if (!cps.empty()) {
    std::vector<char32_t> padded;
    padded.reserve(cps.size() + 2);
    padded.push_back(U' ');
    padded.insert(padded.end(), cps.begin(), cps.end());
    padded.push_back(U' ');
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
      std::vector<char32_t> tri(padded.begin() + static_cast<std::ptrdiff_t>(i),
                                padded.begin() + static_cast<std::ptrdiff_t>(i + 3));
      add("c:" + text::encode(tri), 0.5);
    }
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm > 0) {
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  }
  return v;
}

std::optional<std::vector<double>> HashingVisualEmbedder::embed(const ImageText& image) const {
  if (image.text && !image.text->empty()) return hash_embed(*image.text, dim_, seed_);
  return hash_embed("image:" + image.image_id, dim_, seed_);
}

CatalogVisualEmbedder CatalogVisualEmbedder::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open image vector file '" + path + "'");
  std::optional<CatalogVisualEmbedder> cat;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("image_id") || !j.contains("vector"))
      throw std::runtime_error("image vectors line " + std::to_string(line_no) + ": expected {image_id, vector}");
    auto v = j.at("vector").get<std::vector<double>>();
    if (!cat) cat.emplace(v.size());
    cat->add(j.at("image_id").get<std::string>(), std::move(v));
  }
  if (!cat) throw std::runtime_error("image vector file '" + path + "' is empty");
  return *cat;
}

void CatalogVisualEmbedder::add(const std::string& image_id, std::vector<double> v) {
  if (v.size() != dim_) throw std::invalid_argument("image vector for '" + image_id + "' has wrong dimension");
  vectors_[image_id] = std::move(v);
}

std::optional<std::vector<double>> CatalogVisualEmbedder::embed(const ImageText& image) const {
  auto it = vectors_.find(image.image_id);
  if (it == vectors_.end()) return std::nullopt;
  return it->second;
}

// ---- projection --------------------------------------------------------

double Projection::cumulative_ratio() const {
  double s = 0.0;
  for (double r : explained_variance_ratio) s += r;
  return s;
}

std::vector<double> Projection::transform(std::span<const double> raw) const {
  std::vector<double> out(out_dim(), 0.0);
  if (raw.size() != raw_dim()) throw std::invalid_argument("Projection::transform: dimension mismatch");
  for (std::size_t r = 0; r < raw_dim(); ++r) {
    const double x = raw[r] - mean[r];
    if (x == 0.0) continue;
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += x * components(r, c);
  }
  return out;
}

std::vector<double> Projection::reconstruct(std::span<const double> projected) const {
  std::vector<double> out = mean;
  for (std::size_t r = 0; r < raw_dim(); ++r)
    for (std::size_t c = 0; c < projected.size(); ++c) out[r] += components(r, c) * projected[c];
  return out;
}

Projection fit_projection(const linalg::Matrix& x, double target_ratio, std::size_t max_dim) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (n < 2) throw std::invalid_argument("fit_projection: need at least 2 rows");
  if (d < 1) throw std::invalid_argument("fit_projection: need at least 1 column");

  Projection p;
  p.mean.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) p.mean[j] += x(i, j);
  for (double& m : p.mean) m /= static_cast<double>(n);

  linalg::Matrix xc(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) xc(i, j) = x(i, j) - p.mean[j];

  std::vector<double> variances;
  linalg::Matrix vectors;  // d x m
  if (d <= n) {
    linalg::Matrix cov(d, d);
    for (std::size_t i = 0; i < n; ++i) {
      auto row = xc.row(i);
      for (std::size_t a = 0; a < d; ++a) {
        if (row[a] == 0.0) continue;
        for (std::size_t b = a; b < d; ++b) cov(a, b) += row[a] * row[b];
      }
    }
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = a; b < d; ++b) {
        cov(a, b) /= static_cast<double>(n);
        cov(b, a) = cov(a, b);
      }
    auto eig = linalg::symmetric_eigen(cov);
    variances = std::move(eig.values);
    vectors = std::move(eig.vectors);
  } else {
    linalg::Matrix gram(n, n);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a; b < n; ++b) {
        gram(a, b) = linalg::dot(xc.row(a), xc.row(b)) / static_cast<double>(n);
        gram(b, a) = gram(a, b);
      }
    auto eig = linalg::symmetric_eigen(gram);
    variances = eig.values;
    vectors = linalg::Matrix(d, n);
    for (std::size_t k = 0; k < n; ++k) {
      if (eig.values[k] <= 0.0) continue;
      double norm = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += xc(i, j) * eig.vectors(i, k);
        vectors(j, k) = s;
        norm += s * s;
      }
      norm = std::sqrt(norm);
      if (norm > 0)
        for (std::size_t j = 0; j < d; ++j) vectors(j, k) /= norm;
    }
  }
  for (double& v : variances) v = std::max(v, 0.0);

  double total = 0.0;
  for (double v : variances) total += v;
  p.total_variance = total;
  const double lambda_max = variances.empty() ? 0.0 : variances.front();

  std::size_t rank = 0;
  for (double v : variances)
    if (v > 1e-12 * lambda_max && v > 0.0) ++rank;

  if (total <= 1e-300 || rank == 0) {
    // Constant input: a single component carrying no variance.
    p.components = linalg::Matrix(d, 1);
    p.components(0, 0) = 1.0;
    p.explained_variance_ratio = {1.0};
    return p;
  }

  std::size_t k = 0;
  double cum = 0.0;
  while (k < rank) {
    cum += variances[k] / total;
    ++k;
    if (cum >= target_ratio - 1e-12) break;
  }
  if (max_dim > 0) k = std::min(k, max_dim);

  p.components = linalg::Matrix(d, k);
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t c = 0; c < k; ++c) p.components(j, c) = vectors(j, c);
  p.explained_variance_ratio.resize(k);
  for (std::size_t c = 0; c < k; ++c) p.explained_variance_ratio[c] = variances[c] / total;
  return p;
}

Standardizer Standardizer::fit(const std::vector<std::vector<double>>& rows) {
  Standardizer s;
  if (rows.empty()) return s;
  const std::size_t d = rows.front().size();
  s.mean.assign(d, 0.0);
  s.stddev.assign(d, 0.0);
  const auto n = static_cast<double>(rows.size());
  for (const auto& r : rows) {
    if (r.size() != d) throw std::invalid_argument("Standardizer::fit: ragged rows");
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += r[j];
  }
  for (double& m : s.mean) m /= n;
  for (const auto& r : rows)
    for (std::size_t j = 0; j < d; ++j) s.stddev[j] += (r[j] - s.mean[j]) * (r[j] - s.mean[j]);
  for (std::size_t j = 0; j < d; ++j) {
    const double sd = std::sqrt(s.stddev[j] / n);
    s.stddev[j] = sd <= 1e-12 * std::max(1.0, std::abs(s.mean[j])) ? 1.0 : sd;
  }
  return s;
}

void Standardizer::apply(std::vector<double>& row) const {
  if (row.size() != mean.size()) throw std::invalid_argument("Standardizer::apply: dimension mismatch");
  for (std::size_t j = 0; j < row.size(); ++j) row[j] = (row[j] - mean[j]) / stddev[j];
}

// ---- assembly ----------------------------------------------------------

namespace {

std::vector<double> project_padded(const Projection& p, const std::vector<double>& raw, std::size_t width) {
  std::vector<double> out(width, 0.0);
  if (p.out_dim() == 0 || p.raw_dim() != raw.size()) return out;
  auto projected = p.transform(raw);
  for (std::size_t i = 0; i < std::min(width, projected.size()); ++i) out[i] = projected[i];
  return out;
}

}  // namespace

FeatureVector featurize(const PostRecord& post, const Instance& inst, const Embedders& providers,
                        const FeatureArtifacts& artifacts, std::vector<std::string>* warnings) {
  const FeatureSchema& schema = artifacts.schema;
  FeatureVector v;
  v.schema_version = schema.version;
  v.content = content_features(post, inst);
  v.url = url_features(inst.indicator);
  v.ocr = ocr_features(inst, post);
  v.visual.assign(schema.visual_dim, 0.0);
  v.context.assign(schema.context_dim, 0.0);

  if (inst.image_id && providers.visual) {
    const ImageText* im = find_image(post, inst.image_id);
    std::optional<std::vector<double>> raw;
    if (im) raw = providers.visual->embed(*im);
    if (raw) {
      v.visual = project_padded(artifacts.visual, *raw, schema.visual_dim);
    } else if (warnings) {
      warnings->push_back("post " + post.post_id + ": no visual embedding for image '" + *inst.image_id + "'");
    }
  }
  if (providers.context) {
    v.context = project_padded(artifacts.context, providers.context->embed(post.text), schema.context_dim);
  }
  return v;
}

AssembleResult assemble(const PostRecord& post, const std::vector<Instance>& instances, const Embedders& providers,
                        const FeatureArtifacts& artifacts) {
  AssembleResult result;
  for (const auto& inst : instances) {
    if (inst.post_id != post.post_id) throw std::invalid_argument("assemble: instance belongs to another post");
    result.rows.push_back({inst, featurize(post, inst, providers, artifacts, &result.warnings)});
  }
  return result;
}

std::vector<double> model_input(const FeatureVector& v, const FeatureArtifacts& artifacts) {
  std::vector<double> row = v.flatten();
  if (row.size() != artifacts.schema.dimension())
    throw std::invalid_argument("feature vector does not match schema dimension");
  if (artifacts.standardizer) artifacts.standardizer->apply(row);
  return row;
}

FeatureArtifacts fit_artifacts(const std::vector<TrainingItem>& items, const Embedders& providers,
                               const FeatureSchema& schema, double target_ratio) {
  FeatureArtifacts a;
  a.schema = schema;

  std::vector<std::vector<double>> visual_rows;
  std::vector<std::vector<double>> context_rows;
  for (const auto& item : items) {
    if (providers.context) context_rows.push_back(providers.context->embed(item.post->text));
    if (item.instance.image_id && providers.visual) {
      const ImageText* im = find_image(*item.post, item.instance.image_id);
      if (im) {
        if (auto raw = providers.visual->embed(*im)) visual_rows.push_back(std::move(*raw));
      }
    }
  }
  auto to_matrix = [](const std::vector<std::vector<double>>& rows) {
    linalg::Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
      std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
    return m;
  };
  if (visual_rows.size() >= 2) a.visual = fit_projection(to_matrix(visual_rows), target_ratio, schema.visual_dim);
  if (context_rows.size() >= 2) a.context = fit_projection(to_matrix(context_rows), target_ratio, schema.context_dim);

  std::vector<std::vector<double>> raw;
  raw.reserve(items.size());
  for (const auto& item : items) raw.push_back(featurize(*item.post, item.instance, providers, a).flatten());
  if (!raw.empty()) a.standardizer = Standardizer::fit(raw);
  return a;
}

void write_feature_csv(std::ostream& out, const FeatureSchema& schema, const std::vector<AssembledInstance>& rows) {
  out << "post_id,image_id,url,label";
  for (const auto& name : schema.column_names()) out << ',' << name;
  out << '\n';
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  };
  char buf[32];
  for (const auto& r : rows) {
    out << quote(r.instance.post_id) << ',' << quote(r.instance.image_id.value_or("")) << ','
        << quote(r.instance.indicator.normalized_url) << ','
        << (r.instance.label ? (*r.instance.label ? "1" : "0") : "");
    for (double x : r.vector.flatten()) {
      std::snprintf(buf, sizeof buf, "%.17g", x);
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace phishintel
