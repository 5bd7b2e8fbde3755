// Command-line front end: one subcommand per pipeline stage.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "phishintel/analysis.hpp"
#include "phishintel/cooccur.hpp"
#include "phishintel/corpus.hpp"
#include "phishintel/features.hpp"
#include "phishintel/forest.hpp"
#include "phishintel/pipeline.hpp"
#include "phishintel/screening.hpp"
#include "phishintel/synth.hpp"

namespace fs = std::filesystem;
using namespace phishintel;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string posts;
  std::string labels;
  std::string model;
};

PipelineConfig make_config(const Common& c) {
  PipelineConfig cfg = c.config.empty() ? PipelineConfig{} : load_config(c.config);
  if (!c.posts.empty()) cfg.posts_path = c.posts;
  if (!c.labels.empty()) cfg.labels_path = c.labels;
  if (!c.model.empty()) cfg.model_path = c.model;
  if (c.seed) cfg.forest.seed = *c.seed;
  cfg.validate();
  return cfg;
}

std::vector<PostRecord> read_posts_arg(const std::string& path) {
  if (path.empty()) throw std::runtime_error("no posts file given (positional argument, --posts or config 'posts')");
  if (path == "-") return read_posts(std::cin);
  return load_posts(path);
}

// Writes to --out when given, stdout otherwise.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
      if (!*file_) throw std::runtime_error("cannot write '" + path + "'");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::ofstream open_file(const fs::path& p, std::ios::openmode mode = std::ios::trunc) {
  std::ofstream f(p, std::ios::binary | mode);
  if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
  return f;
}

// Chronological split of labeled posts.
std::pair<std::vector<PostRecord>, std::vector<PostRecord>> split_posts(const std::vector<PostRecord>& posts,
                                                                        const LabelMap& labels, double fraction) {
  std::vector<PostRecord> labeled;
  for (const auto& p : posts)
    if (labels.count(p.post_id)) labeled.push_back(p);
  std::stable_sort(labeled.begin(), labeled.end(),
                   [](const PostRecord& a, const PostRecord& b) { return a.created_at < b.created_at; });
  const auto cut = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(labeled.size())));
  if (cut == 0 || cut == labeled.size()) throw std::runtime_error("chronological split leaves an empty side");
  std::vector<PostRecord> train(labeled.begin(), labeled.begin() + static_cast<std::ptrdiff_t>(cut));
  std::vector<PostRecord> test(labeled.begin() + static_cast<std::ptrdiff_t>(cut), labeled.end());
  return {std::move(train), std::move(test)};
}

LabelMap require_labels(const PipelineConfig& cfg) {
  if (cfg.labels_path.empty()) throw std::runtime_error("no labels file given (--labels or config 'labels')");
  return load_labels(cfg.labels_path);
}

ForestModel require_model(const PipelineConfig& cfg) {
  if (cfg.model_path.empty()) throw std::runtime_error("no model file given (--model or config 'model')");
  ForestModel m = load_model(cfg.model_path);
  check_model_schema(m, cfg.schema);
  return m;
}

// Reports from model predictions, or from ground truth when labels are given.
std::vector<Report> collect_reports(const std::vector<PostRecord>& posts, const PipelineConfig& cfg,
                                    const PipelineResources& res, bool use_labels) {
  std::vector<Report> reports;
  if (use_labels) {
    const LabelMap labels = require_labels(cfg);
    for (const auto& p : posts) {
      auto it = labels.find(p.post_id);
      if (it == labels.end() || !it->second) continue;
      auto processed = process_post(p, res);
      if (!processed.kept.empty()) reports.push_back(make_report(p, processed.kept));
    }
    return reports;
  }
  const ForestModel model = require_model(cfg);
  for (const auto& p : posts) {
    auto processed = process_post(p, res);
    auto s = score_post(p, processed, model, res, cfg.class_threshold);
    if (!s.excluded && s.label) reports.push_back(make_report(p, s.indicators));
  }
  return reports;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phishing-report extraction, screening and classification"};
  app.require_subcommand(1);
  Common c;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", c.config, "Pipeline configuration (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--seed", c.seed, "Seed for every random choice");
    sub->add_option("--out", c.out, "Output file or directory");
  };

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  add_common(synth);
  SynthConfig scfg;
  synth->add_option("--reports", scfg.n_reports, "Planted phishing reports");
  synth->add_option("--benign", scfg.n_benign, "Benign posts");
  synth->add_option("--span-hours", scfg.span, "Time span in hours")->transform([](std::string s) {
    return std::to_string(std::stoll(s) * 3600);
  });

  // extract
  auto* extract = app.add_subcommand("extract", "Extract indicators from posts (JSONL out)");
  add_common(extract);
  extract->add_option("posts", c.posts, "Posts JSONL ('-' for stdin)");

  // screen
  auto* screen_cmd = app.add_subcommand("screen", "Screen extracted indicators (JSONL verdicts out)");
  add_common(screen_cmd);
  screen_cmd->add_option("posts", c.posts, "Posts JSONL ('-' for stdin)");

  // keywords
  auto* keywords = app.add_subcommand("keywords", "Select co-occurrence keywords over one window (CSV out)");
  add_common(keywords);
  keywords->add_option("posts", c.posts, "Posts JSONL");
  keywords->add_option("--labels", c.labels, "Label JSONL; otherwise the model predicts");
  keywords->add_option("--model", c.model, "Model file");
  std::optional<Timestamp> window_end;
  keywords->add_option("--window-end", window_end, "Window end (UTC seconds); default just after the last post");

  // featurize
  auto* featurize_cmd = app.add_subcommand("featurize", "Feature vectors per instance (CSV out)");
  add_common(featurize_cmd);
  featurize_cmd->add_option("posts", c.posts, "Posts JSONL");
  featurize_cmd->add_option("--labels", c.labels, "Label JSONL");
  featurize_cmd->add_option("--model", c.model, "Take projections and scaling from this model");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a model on the chronological training split");
  add_common(train_cmd);
  train_cmd->add_option("--posts", c.posts, "Posts JSONL");
  train_cmd->add_option("--labels", c.labels, "Label JSONL");
  bool train_all = false;
  train_cmd->add_flag("--all", train_all, "Train on every labeled post instead of the split");

  // classify
  auto* classify_cmd = app.add_subcommand("classify", "Score posts with a model (JSONL out)");
  add_common(classify_cmd);
  classify_cmd->add_option("posts", c.posts, "Posts JSONL");
  classify_cmd->add_option("--model", c.model, "Model file");
  double threshold = -1;
  classify_cmd->add_option("--threshold", threshold, "Decision threshold (default from config)");

  // evaluate
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Metrics on the chronological test split (JSON out)");
  add_common(evaluate_cmd);
  evaluate_cmd->add_option("--posts", c.posts, "Posts JSONL");
  evaluate_cmd->add_option("--labels", c.labels, "Label JSONL");
  evaluate_cmd->add_option("--model", c.model, "Model file; trained on the split when absent");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Contributor and feed analysis (CSV/JSONL into --out dir)");
  add_common(analyze);
  analyze->add_option("--posts", c.posts, "Posts JSONL");
  analyze->add_option("--labels", c.labels, "Use ground-truth labels instead of model predictions");
  analyze->add_option("--model", c.model, "Model file");

  // run
  auto* run = app.add_subcommand("run", "Run hourly collection cycles");
  add_common(run);
  std::size_t cycles = 1;
  std::string state_path;
  run->add_option("--cycles", cycles, "Number of cycles")->check(CLI::PositiveNumber);
  run->add_option("--state", state_path, "State file (created when missing)")->required();
  run->add_option("--posts", c.posts, "Posts JSONL");
  run->add_option("--model", c.model, "Model file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      auto corpus = generate_synthetic(c.seed.value_or(0), scfg);
      if (c.out.empty()) {
        write_posts(std::cout, corpus.posts);
      } else {
        save_synthetic(corpus, c.out);
        std::cerr << "wrote " << corpus.posts.size() << " posts (" << std::count(corpus.labels.begin(), corpus.labels.end(), true)
                  << " reports, " << corpus.planted_total() << " planted indicators) to " << c.out << '\n';
      }
      return 0;
    }

    const PipelineConfig cfg = make_config(c);

    if (extract->parsed()) {
      const auto posts = read_posts_arg(cfg.posts_path);
      Output out(c.out);
      for (const auto& p : posts) write_indicators_jsonl(out.stream(), p.post_id, extract_post_indicators(p));
      return 0;
    }

    const PipelineResources res = load_resources(cfg);

    if (screen_cmd->parsed()) {
      const auto posts = read_posts_arg(cfg.posts_path);
      Output out(c.out);
      for (const auto& p : posts) write_verdicts_jsonl(out.stream(), p.post_id, process_post(p, res).screening);
      return 0;
    }

    if (keywords->parsed()) {
      const auto posts = read_posts_arg(cfg.posts_path);
      Timestamp end = 0;
      for (const auto& p : posts) end = std::max(end, p.created_at + 1);
      if (window_end) end = *window_end;
      const auto windowed = select_window(posts, Window{end, cfg.window_duration});
      std::vector<bool> labels;
      if (!cfg.labels_path.empty()) {
        const auto truth = load_labels(cfg.labels_path);
        for (const auto& p : windowed) {
          auto it = truth.find(p.post_id);
          labels.push_back(it != truth.end() && it->second);
        }
      } else {
        const ForestModel model = require_model(cfg);
        for (const auto& p : windowed) {
          auto s = score_post(p, process_post(p, res), model, res, cfg.class_threshold);
          labels.push_back(!s.excluded && s.label);
        }
      }
      Output out(c.out);
      std::vector<KeywordCandidate> all;
      for (Lang lang : {Lang::en, Lang::ja}) {
        std::vector<PostRecord> subset;
        std::vector<bool> sublabels;
        for (std::size_t i = 0; i < windowed.size(); ++i)
          if (windowed[i].lang == lang) {
            subset.push_back(windowed[i]);
            sublabels.push_back(labels[i]);
          }
        if (subset.empty()) continue;
        auto sel = select_keywords(subset, sublabels, KeywordSelection{cfg.soa_threshold, cfg.top_k}, end);
        all.insert(all.end(), sel.begin(), sel.end());
      }
      write_keywords_csv(out.stream(), all);
      return 0;
    }

    if (featurize_cmd->parsed()) {
      const auto posts = read_posts_arg(cfg.posts_path);
      LabelMap labels;
      if (!cfg.labels_path.empty()) labels = load_labels(cfg.labels_path);
      auto label_of = [&](const std::string& id) -> std::optional<bool> {
        auto it = labels.find(id);
        if (it == labels.end()) return std::nullopt;
        return it->second;
      };
      std::vector<ProcessedPost> processed;
      for (const auto& p : posts) processed.push_back(process_post(p, res, label_of(p.post_id)));
      FeatureArtifacts artifacts;
      if (!cfg.model_path.empty()) {
        artifacts = require_model(cfg).artifacts;
      } else {
        std::vector<TrainingItem> items;
        for (std::size_t i = 0; i < posts.size(); ++i)
          for (const auto& inst : processed[i].instances) items.push_back({&posts[i], inst});
        artifacts = fit_artifacts(items, res.embedders(), cfg.schema, cfg.svd_target);
        artifacts.standardizer.reset();
      }
      std::vector<AssembledInstance> rows;
      for (std::size_t i = 0; i < posts.size(); ++i) {
        auto a = assemble(posts[i], processed[i].instances, res.embedders(), artifacts);
        for (const auto& w : a.warnings) std::cerr << "warning: " << w << '\n';
        rows.insert(rows.end(), a.rows.begin(), a.rows.end());
      }
      Output out(c.out);
      write_feature_csv(out.stream(), cfg.schema, rows);
      return 0;
    }

    if (train_cmd->parsed()) {
      if (c.out.empty()) throw std::runtime_error("train needs --out <model file>");
      const auto posts = read_posts_arg(cfg.posts_path);
      const auto labels = require_labels(cfg);
      std::vector<PostRecord> train_posts;
      if (train_all) {
        train_posts = posts;
      } else {
        train_posts = split_posts(posts, labels, cfg.train_fraction).first;
      }
      Timestamp trained_at = 0;
      for (const auto& p : train_posts) trained_at = std::max(trained_at, p.created_at);
      const ForestModel model = train_model(train_posts, labels, cfg, res, trained_at);
      save(model, c.out);
      std::cerr << "trained " << model.trees.size() << " trees on " << model.metadata.n_instances << " instances\n";
      return 0;
    }

    if (classify_cmd->parsed()) {
      const auto posts = read_posts_arg(cfg.posts_path);
      const ForestModel model = require_model(cfg);
      const double t = threshold >= 0 ? threshold : cfg.class_threshold;
      std::vector<PostScore> scores;
      std::vector<std::string> warnings;
      for (const auto& p : posts) scores.push_back(score_post(p, process_post(p, res), model, res, t, &warnings));
      for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
      Output out(c.out);
      write_scores_jsonl(out.stream(), scores);
      return 0;
    }

    if (evaluate_cmd->parsed()) {
      const auto posts = read_posts_arg(cfg.posts_path);
      const auto labels = require_labels(cfg);
      Metrics metrics;
      if (cfg.model_path.empty()) {
        metrics = evaluate_chronological(posts, labels, cfg, res).metrics;
      } else {
        const ForestModel model = require_model(cfg);
        const auto test = split_posts(posts, labels, cfg.train_fraction).second;
        std::vector<bool> truth, predicted;
        for (const auto& p : test) {
          auto s = score_post(p, process_post(p, res), model, res, cfg.class_threshold);
          if (s.excluded) continue;
          truth.push_back(labels.at(p.post_id));
          predicted.push_back(s.label);
        }
        metrics = compute_metrics(truth, predicted);
      }
      Output out(c.out);
      out.stream() << metrics_to_json(metrics) << '\n';
      return 0;
    }

    if (analyze->parsed()) {
      if (c.out.empty()) throw std::runtime_error("analyze needs --out <directory>");
      const auto posts = read_posts_arg(cfg.posts_path);
      const auto reports = collect_reports(posts, cfg, res, !c.labels.empty());
      fs::create_directories(c.out);
      const fs::path dir(c.out);
      {
        auto f = open_file(dir / "share_by_user.csv");
        write_share_csv(f, share_distribution(reports, ShareKey::by_user));
      }
      {
        auto f = open_file(dir / "share_by_url.csv");
        write_share_csv(f, share_distribution(reports, ShareKey::by_url));
      }
      {
        auto f = open_file(dir / "user_types.csv");
        write_user_type_csv(f, user_type_stats(reports, res.categories));
      }
      {
        auto f = open_file(dir / "url_types.csv");
        write_url_type_csv(f, url_type_stats(reports, res.categories, res.shorteners, res.dynamic_dns));
      }
      {
        auto f = open_file(dir / "sharing_methods.csv");
        write_sharing_method_csv(f, sharing_method_stats(reports, res.categories));
      }
      {
        std::vector<std::string> security = cfg.security_keywords.at(Lang::en);
        const auto& ja = cfg.security_keywords.at(Lang::ja);
        security.insert(security.end(), ja.begin(), ja.end());
        auto f = open_file(dir / "keywords.csv");
        write_keyword_csv(f, keyword_effectiveness(reports, res.categories, security));
      }
      std::unordered_map<std::string, int> vt;
      if (!cfg.vt_path.empty()) vt = load_vt_fixture(cfg.vt_path);
      FeedAnnotations notes{&res.shorteners, &res.dynamic_dns, &res.categories, cfg.vt_path.empty() ? nullptr : &vt};
      const auto feed = emit_feed(reports, notes);
      {
        auto f = open_file(dir / "feed.jsonl");
        write_feed_jsonl(f, feed);
      }
      {
        auto f = open_file(dir / "feed.csv");
        write_feed_csv(f, feed);
      }
      std::cerr << reports.size() << " reports, " << feed.size() << " feed entries written to " << c.out << '\n';
      return 0;
    }

    if (run->parsed()) {
      if (c.out.empty()) throw std::runtime_error("run needs --out <directory>");
      const auto posts = read_posts_arg(cfg.posts_path);
      const MemoryPostSource source(posts);

      ForestModel model;
      std::string model_ref = cfg.model_path;
      if (!cfg.model_path.empty() && fs::exists(cfg.model_path)) {
        model = require_model(cfg);
      } else {
        const auto labels = require_labels(cfg);
        const auto train_posts = split_posts(posts, labels, cfg.train_fraction).first;
        model = train_model(train_posts, labels, cfg, res, train_posts.back().created_at);
        if (!cfg.model_path.empty()) save(model, cfg.model_path);
        else model_ref = "(trained in memory)";
      }

      const bool resume = fs::exists(state_path);
      CycleState state = resume ? load_state(state_path) : initial_state(cfg, source, model_ref);
      fs::create_directories(c.out);
      const fs::path dir(c.out);
      const auto mode = resume ? std::ios::app : std::ios::trunc;
      auto summary = open_file(dir / "cycles.jsonl", mode);
      auto scores = open_file(dir / "scores.jsonl", mode);
      auto feed = open_file(dir / "feed.jsonl", mode);
      auto keyword_log = open_file(dir / "keywords.csv", mode);
      if (!resume) keyword_log << "cycle,token,lang,pmi_pos,pmi_neg,soa,support,window_end\n";

      for (std::size_t i = 0; i < cycles; ++i) {
        CycleResult r = run_cycle(state, cfg, res, model, source);
        if (r.exhausted) {
          std::cerr << "source exhausted after cycle " << state.cycle << '\n';
          break;
        }
        const auto& o = r.outputs;
        write_scores_jsonl(scores, o.scores);
        write_feed_jsonl(feed, o.feed);
        for (const auto& [lang, list] : o.keywords) {
          std::ostringstream rows;
          write_keywords_csv(rows, list);
          std::string line;
          std::istringstream lines(rows.str());
          std::getline(lines, line);  // header
          while (std::getline(lines, line)) keyword_log << o.cycle << ',' << line << '\n';
        }
        nlohmann::json kw = nlohmann::json::object();
        for (const auto& [lang, list] : r.state.keywords) kw[std::string(to_string(lang))] = list;
        nlohmann::json line = {{"cycle", o.cycle},     {"begin", o.begin},
                               {"end", o.end},         {"collected", o.collected.size()},
                               {"reports", o.reports.size()}, {"feed", o.feed.size()},
                               {"keywords", kw},       {"warnings", o.warnings.size()}};
        summary << line.dump() << '\n';
        summary.flush();
        scores.flush();
        feed.flush();
        keyword_log.flush();
        save_state(r.state, state_path);
        state = std::move(r.state);
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
