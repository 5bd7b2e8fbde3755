#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "phishintel/features.hpp"

namespace phishintel {

struct ForestParams {
  std::size_t n_trees = 100;
  std::size_t max_depth = 0;  // 0: unlimited
  std::size_t min_samples_leaf = 1;
  std::size_t features_per_split = 0;  // 0: ceil(sqrt(d))
  bool bootstrap = true;
  std::uint64_t seed = 0;
  unsigned n_threads = 1;  // scheduling only; the model does not depend on it

  bool operator==(const ForestParams&) const = default;
};

struct TreeNode {
  static constexpr std::int32_t kLeaf = -1;

  std::int32_t feature = kLeaf;
  double threshold = 0.0;  // x[feature] <= threshold goes left
  std::int32_t left = -1;
  std::int32_t right = -1;
  double probability = 0.0;  // positive-class fraction (leaves)

  bool is_leaf() const { return feature == kLeaf; }
  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> x) const;
  std::size_t depth() const;
  bool operator==(const Tree&) const = default;
};

struct TrainMetadata {
  Timestamp trained_at = 0;
  std::uint64_t corpus_hash = 0;
  std::size_t n_instances = 0;

  bool operator==(const TrainMetadata&) const = default;
};

struct ForestModel {
  static constexpr std::uint32_t kFormatVersion = 1;

  ForestParams params;
  std::size_t n_features = 0;
  std::vector<Tree> trees;
  FeatureArtifacts artifacts;
  TrainMetadata metadata;

  bool operator==(const ForestModel&) const = default;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Trains on already-prepared model inputs (one row per instance). Throws
// TrainingError for fewer than two rows, a single class, ragged rows or a
// non-finite value.
ForestModel train(const std::vector<std::vector<double>>& x, const std::vector<bool>& y, const ForestParams& params);

// Mean of per-tree leaf probabilities. Throws std::invalid_argument on a
// dimension mismatch.
double predict(const ForestModel& model, std::span<const double> x);

// Featurizes and standardizes with the model's artifacts before predicting.
double predict(const ForestModel& model, const FeatureVector& v);

struct PostClassification {
  std::string post_id;
  bool label = false;
  std::vector<double> scores;
};

struct ScoredInstance {
  std::string post_id;
  double score = 0.0;
};

// label = max(score) >= threshold. Throws std::invalid_argument for an empty
// list or mixed post ids.
PostClassification classify_post(const std::vector<ScoredInstance>& instances, double threshold = 0.5);

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t total() const { return tp + fp + tn + fn; }
};

// Entries are nullopt when their denominator is zero (e.g. one-class sets).
struct Metrics {
  ConfusionCounts counts;
  std::optional<double> accuracy, tpr, tnr, precision, f_measure;
};

Metrics compute_metrics(const std::vector<bool>& truth, const std::vector<bool>& predicted);

// Instance-level evaluation at `threshold`.
Metrics evaluate(const ForestModel& model, const std::vector<std::vector<double>>& x, const std::vector<bool>& y,
                 double threshold = 0.5);

class ModelFormatError : public std::runtime_error {
 public:
  enum class Kind { corrupt, version };
  ModelFormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::string serialize(const ForestModel& model);
ForestModel deserialize(std::string_view bytes);
void save(const ForestModel& model, const std::string& path);
ForestModel load_model(const std::string& path);

}  // namespace phishintel
