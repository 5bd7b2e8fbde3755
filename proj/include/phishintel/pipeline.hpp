#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "phishintel/analysis.hpp"
#include "phishintel/cooccur.hpp"
#include "phishintel/corpus.hpp"
#include "phishintel/features.hpp"
#include "phishintel/forest.hpp"
#include "phishintel/screening.hpp"

namespace phishintel {

struct PipelineConfig {
  std::map<Lang, std::vector<std::string>> security_keywords = {
      {Lang::en, default_security_keywords(Lang::en)}, {Lang::ja, default_security_keywords(Lang::ja)}};
  Timestamp window_duration = Window::kDefaultDuration;
  Timestamp cycle_period = 3600;
  std::optional<Timestamp> start;  // first cycle start; default: earliest post, floored to the period
  double soa_threshold = KeywordSelection::kDefaultThreshold;
  std::size_t top_k = KeywordSelection::kDefaultTopK;
  int rank_cutoff = RankList::kDefaultCutoff;
  long whois_max_age_days = ScreeningContext::kDefaultMaxAgeDays;
  ForestParams forest;
  double class_threshold = 0.5;
  double svd_target = 0.99;
  double train_fraction = 0.7;
  FeatureSchema schema;
  std::vector<std::string> profile_terms = default_profile_terms();

  std::string whois_provider = "fixture";  // fixture | none | tcp
  std::string visual_provider = "hashing";  // hashing | catalog

  std::string posts_path;
  std::string authors_path;
  std::string labels_path;
  std::string ranks_path;
  std::string shorteners_path;
  std::string dyndns_path;
  std::string whois_path;
  std::string visual_catalog_path;
  std::string model_path;
  std::string vt_path;

  // Throws std::invalid_argument naming the first offending field.
  void validate() const;
};

// JSON object; unknown keys are rejected. Relative paths resolve against `base_dir`.
PipelineConfig parse_config(std::string_view json_text, const std::string& base_dir = "");
PipelineConfig load_config(const std::string& path);
std::string config_to_json(const PipelineConfig& cfg);

// Fixtures and providers named by a config.
struct PipelineResources {
  RankList ranks;
  DomainSet shorteners;
  DomainSet dynamic_dns;
  std::unique_ptr<WhoisClient> whois;
  std::unique_ptr<VisualEmbedder> visual;
  std::unique_ptr<ContextEmbedder> context;
  CategoryMap categories;  // from the author file, when configured
  long max_age_days = ScreeningContext::kDefaultMaxAgeDays;

  ScreeningContext screening(Timestamp now) const;
  Embedders embedders() const { return {visual.get(), context.get()}; }
};

PipelineResources load_resources(const PipelineConfig& cfg);

// ---- per-post stages ---------------------------------------------------

struct ProcessedPost {
  std::vector<Indicator> extracted;
  PostScreening screening;
  std::vector<Indicator> kept;  // survivors, bare domains promoted
  std::vector<Instance> instances;
};

// extract -> screen (now = post time) -> promote -> split into instances.
ProcessedPost process_post(const PostRecord& post, const PipelineResources& res,
                           std::optional<bool> label = std::nullopt);

struct PostScore {
  std::string post_id;
  bool excluded = true;  // no indicator survived screening
  bool label = false;
  std::vector<double> scores;
  std::vector<Indicator> indicators;
};

// Throws std::invalid_argument when the model's schema differs from `schema`.
void check_model_schema(const ForestModel& model, const FeatureSchema& schema);

PostScore score_post(const PostRecord& post, const ProcessedPost& processed, const ForestModel& model,
                     const PipelineResources& res, double threshold, std::vector<std::string>* warnings = nullptr);

// Fits artifacts and a forest on every non-excluded post. Posts without a
// label are skipped.
ForestModel train_model(const std::vector<PostRecord>& posts, const LabelMap& labels, const PipelineConfig& cfg,
                        const PipelineResources& res, Timestamp trained_at);

struct SplitEvaluation {
  Metrics metrics;  // post level, test posts with surviving indicators
  std::size_t train_posts = 0;
  std::size_t test_posts = 0;
  std::size_t test_excluded = 0;
  ForestModel model;
};

// Chronological split: the earliest `train_fraction` of posts train the model.
SplitEvaluation evaluate_chronological(const std::vector<PostRecord>& posts, const LabelMap& labels,
                                       const PipelineConfig& cfg, const PipelineResources& res);

std::string metrics_to_json(const Metrics& m);

// ---- hourly cycles -----------------------------------------------------

struct WindowEntry {
  std::string post_id;
  Timestamp created_at = 0;
  Lang lang = Lang::en;
  std::vector<std::string> tokens;
  bool label = false;

  bool operator==(const WindowEntry&) const = default;
};

struct CycleState {
  std::size_t cycle = 0;
  Timestamp cursor = 0;
  std::map<Lang, std::vector<std::string>> keywords;  // active co-occurrence keywords
  std::string model_ref;
  std::vector<WindowEntry> window;  // trailing predictions used for keyword mining

  bool operator==(const CycleState&) const = default;
};

std::string state_to_json(const CycleState& s);
CycleState state_from_json(std::string_view text);
// Write to a temporary file, then rename over `path`.
void save_state(const CycleState& s, const std::string& path);
CycleState load_state(const std::string& path);

class PostSource {
 public:
  virtual ~PostSource() = default;
  // Posts with begin <= created_at < end, chronological.
  virtual std::vector<PostRecord> fetch(Timestamp begin, Timestamp end) const = 0;
  // True when no post at or after `t` remains.
  virtual bool exhausted(Timestamp t) const = 0;
  virtual std::optional<Timestamp> earliest() const = 0;
};

class MemoryPostSource final : public PostSource {
 public:
  explicit MemoryPostSource(std::vector<PostRecord> posts);
  std::vector<PostRecord> fetch(Timestamp begin, Timestamp end) const override;
  bool exhausted(Timestamp t) const override;
  std::optional<Timestamp> earliest() const override;

 private:
  std::vector<PostRecord> posts_;
};

CycleState initial_state(const PipelineConfig& cfg, const PostSource& source, std::string model_ref = "");

struct CycleOutputs {
  std::size_t cycle = 0;
  Timestamp begin = 0;
  Timestamp end = 0;
  std::vector<PostRecord> collected;  // with matched_keywords from this cycle's queries
  std::vector<PostScore> scores;      // aligned with collected
  std::vector<Report> reports;
  std::vector<FeedRecord> feed;
  std::map<Lang, std::vector<KeywordCandidate>> keywords;  // selected for the next cycle
  std::vector<std::string> warnings;
};

struct CycleResult {
  bool exhausted = false;  // nothing left to collect; state unchanged
  CycleState state;
  CycleOutputs outputs;
};

// Pure with respect to `state`: on any exception the caller's state is untouched.
CycleResult run_cycle(const CycleState& state, const PipelineConfig& cfg, const PipelineResources& res,
                      const ForestModel& model, const PostSource& source);

void write_indicators_jsonl(std::ostream& out, const std::string& post_id, const std::vector<Indicator>& indicators);
void write_verdicts_jsonl(std::ostream& out, const std::string& post_id, const PostScreening& screening);
void write_scores_jsonl(std::ostream& out, const std::vector<PostScore>& scores);
void write_keywords_csv(std::ostream& out, const std::vector<KeywordCandidate>& keywords);

}  // namespace phishintel
