#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "phishintel/corpus.hpp"
#include "phishintel/ioc.hpp"
#include "phishintel/linalg.hpp"

namespace phishintel {

inline constexpr std::size_t kContentDim = 4 + kDefangFormCount;  // 13
inline constexpr std::size_t kUrlDim = 3 + 10;                    // 13
inline constexpr std::size_t kOcrDim = 4;

// TLDs with a dedicated one-hot slot, in slot order.
const std::array<std::string_view, 10>& tracked_tlds();

// One classification unit: a post split per image, per surviving indicator.
struct Instance {
  std::string post_id;
  std::optional<std::string> image_id;
  Indicator indicator;
  std::optional<bool> label;
};

// k images -> k instances per indicator; no image -> one per indicator.
std::vector<Instance> build_instances(const PostRecord& post, const std::vector<Indicator>& indicators,
                                      std::optional<bool> label = std::nullopt);

struct FeatureSchema {
  static constexpr int kVersion = 1;

  std::size_t visual_dim = 16;
  std::size_t context_dim = 55;
  std::size_t visual_raw_dim = 1280;
  std::size_t context_raw_dim = 768;
  std::uint64_t embed_seed = 0x5eed;
  int version = kVersion;

  std::size_t dimension() const { return kContentDim + kUrlDim + kOcrDim + visual_dim + context_dim; }
  std::vector<std::string> column_names() const;

  bool operator==(const FeatureSchema&) const = default;
};

struct FeatureVector {
  std::array<double, kContentDim> content{};
  std::array<double, kUrlDim> url{};
  std::array<double, kOcrDim> ocr{};
  std::vector<double> visual;
  std::vector<double> context;
  int schema_version = FeatureSchema::kVersion;

  std::vector<double> flatten() const;
};

std::array<double, kContentDim> content_features(const PostRecord& post, const Instance& inst);
std::array<double, kUrlDim> url_features(const Indicator& ind);
std::array<double, kOcrDim> ocr_features(const Instance& inst, const PostRecord& post);

// ---- embedding providers ----------------------------------------------

class ContextEmbedder {
 public:
  virtual ~ContextEmbedder() = default;
  virtual std::size_t dim() const = 0;
  virtual std::vector<double> embed(std::string_view text) const = 0;
};

class VisualEmbedder {
 public:
  virtual ~VisualEmbedder() = default;
  virtual std::size_t dim() const = 0;
  // nullopt when the provider knows nothing about the image.
  virtual std::optional<std::vector<double>> embed(const ImageText& image) const = 0;
};

// Signed feature hashing of word unigrams and character trigrams, L2-normalized.
std::vector<double> hash_embed(std::string_view text, std::size_t dim, std::uint64_t seed);

class HashingContextEmbedder final : public ContextEmbedder {
 public:
  HashingContextEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {}
  std::size_t dim() const override { return dim_; }
  std::vector<double> embed(std::string_view text) const override { return hash_embed(text, dim_, seed_); }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

// Hashes the image's extracted text, or its id when no text was extracted.
class HashingVisualEmbedder final : public VisualEmbedder {
 public:
  HashingVisualEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {}
  std::size_t dim() const override { return dim_; }
  std::optional<std::vector<double>> embed(const ImageText& image) const override;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

// Precomputed vectors keyed by image_id, e.g. exported from an image model.
// JSON-lines input: {"image_id": "...", "vector": [...]}.
class CatalogVisualEmbedder final : public VisualEmbedder {
 public:
  explicit CatalogVisualEmbedder(std::size_t dim) : dim_(dim) {}
  static CatalogVisualEmbedder load(const std::string& path);

  void add(const std::string& image_id, std::vector<double> v);
  std::size_t dim() const override { return dim_; }
  std::optional<std::vector<double>> embed(const ImageText& image) const override;

 private:
  std::size_t dim_;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

struct Embedders {
  const VisualEmbedder* visual = nullptr;
  const ContextEmbedder* context = nullptr;
};

// Default providers sized by the schema.
struct DefaultEmbedders {
  explicit DefaultEmbedders(const FeatureSchema& schema)
      : visual(schema.visual_raw_dim, schema.embed_seed ^ 0x76697375616cULL),
        context(schema.context_raw_dim, schema.embed_seed) {}
  Embedders view() const { return {&visual, &context}; }

  HashingVisualEmbedder visual;
  HashingContextEmbedder context;
};

// ---- projection and standardization -----------------------------------

struct Projection {
  std::vector<double> mean;                    // raw_dim
  linalg::Matrix components;                   // raw_dim x out_dim, orthonormal columns
  std::vector<double> explained_variance_ratio;  // per component
  double total_variance = 0.0;

  std::size_t raw_dim() const { return components.rows(); }
  std::size_t out_dim() const { return components.cols(); }
  double cumulative_ratio() const;

  std::vector<double> transform(std::span<const double> raw) const;
  std::vector<double> reconstruct(std::span<const double> projected) const;

  bool operator==(const Projection&) const = default;
};

// Truncated SVD of the centered matrix: keeps the smallest number of
// components reaching `target_ratio` of the variance, capped at `max_dim`.
// Works on the smaller of the covariance and Gram matrices.
Projection fit_projection(const linalg::Matrix& rows, double target_ratio = 0.99, std::size_t max_dim = 0);

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stddev;  // zero-variance columns stored as 1

  static Standardizer fit(const std::vector<std::vector<double>>& rows);
  void apply(std::vector<double>& row) const;

  bool operator==(const Standardizer&) const = default;
};

// ---- assembly ----------------------------------------------------------

struct FeatureArtifacts {
  FeatureSchema schema;
  Projection visual;
  Projection context;
  std::optional<Standardizer> standardizer;

  bool operator==(const FeatureArtifacts&) const = default;
};

struct AssembledInstance {
  Instance instance;
  FeatureVector vector;
};

struct AssembleResult {
  std::vector<AssembledInstance> rows;
  std::vector<std::string> warnings;
};

// Raw (pre-standardization) vector for one instance.
FeatureVector featurize(const PostRecord& post, const Instance& inst, const Embedders& providers,
                        const FeatureArtifacts& artifacts, std::vector<std::string>* warnings = nullptr);

AssembleResult assemble(const PostRecord& post, const std::vector<Instance>& instances, const Embedders& providers,
                        const FeatureArtifacts& artifacts);

// Model input: flattened vector with the standardizer applied when fitted.
std::vector<double> model_input(const FeatureVector& v, const FeatureArtifacts& artifacts);

struct TrainingItem {
  const PostRecord* post;
  Instance instance;
};

// Fits both projections on training instances (visual on image instances
// only), then the standardizer on the resulting raw vectors.
FeatureArtifacts fit_artifacts(const std::vector<TrainingItem>& items, const Embedders& providers,
                               const FeatureSchema& schema, double target_ratio = 0.99);

void write_feature_csv(std::ostream& out, const FeatureSchema& schema, const std::vector<AssembledInstance>& rows);

}  // namespace phishintel
