#include "phishintel/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "phishintel/text.hpp"

namespace phishintel {

using nlohmann::json;

// ---- configuration -----------------------------------------------------

void PipelineConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("config: " + what); };
  for (Lang lang : {Lang::en, Lang::ja}) {
    auto it = security_keywords.find(lang);
    if (it == security_keywords.end() || it->second.empty())
      fail("security_keywords." + std::string(to_string(lang)) + " must be nonempty");
  }
  if (window_duration <= 0) fail("window_duration must be positive");
  if (cycle_period <= 0) fail("cycle_period must be positive");
  if (!(soa_threshold > 0)) fail("soa_threshold must be positive");
  if (top_k < 1) fail("top_k must be positive");
  if (rank_cutoff < 1) fail("rank_cutoff must be positive");
  if (whois_max_age_days < 1) fail("whois_max_age_days must be positive");
  if (forest.n_trees < 1) fail("forest.n_trees must be positive");
  if (forest.min_samples_leaf < 1) fail("forest.min_samples_leaf must be positive");
  if (forest.n_threads < 1) fail("forest.n_threads must be positive");
  if (!(class_threshold > 0 && class_threshold <= 1)) fail("class_threshold must be in (0, 1]");
  if (!(svd_target > 0 && svd_target <= 1)) fail("svd_target must be in (0, 1]");
  if (!(train_fraction > 0 && train_fraction < 1)) fail("train_fraction must be in (0, 1)");
  if (schema.visual_dim < 1 || schema.context_dim < 1 || schema.visual_raw_dim < 1 || schema.context_raw_dim < 1)
    fail("schema dimensions must be positive");
  if (profile_terms.empty()) fail("profile_terms must be nonempty");
  if (whois_provider != "fixture" && whois_provider != "none" && whois_provider != "tcp")
    fail("whois_provider must be fixture, none or tcp");
  if (visual_provider != "hashing" && visual_provider != "catalog") fail("visual_provider must be hashing or catalog");
  if (visual_provider == "catalog" && visual_catalog_path.empty()) fail("visual_catalog is required for the catalog provider");
}

namespace {

template <typename T>
T get_as(const json& j, const char* key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument(std::string("config: bad value for '") + key + "'");
  }
}

std::string resolve(const std::string& base_dir, const std::string& p) {
  if (p.empty() || base_dir.empty() || std::filesystem::path(p).is_absolute()) return p;
  return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

}  // namespace

PipelineConfig parse_config(std::string_view json_text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");

  PipelineConfig c;
  const std::map<std::string, std::string*> paths = {
      {"posts", &c.posts_path},           {"authors", &c.authors_path}, {"labels", &c.labels_path},
      {"ranks", &c.ranks_path},           {"shorteners", &c.shorteners_path}, {"dyndns", &c.dyndns_path},
      {"whois", &c.whois_path},           {"visual_catalog", &c.visual_catalog_path}, {"model", &c.model_path},
      {"vt", &c.vt_path}};

  for (const auto& [key, v] : j.items()) {
    const char* k = key.c_str();
    if (key == "security_keywords") {
      if (!v.is_object()) throw std::invalid_argument("config: security_keywords must be an object");
      for (const auto& [lang, list] : v.items())
        c.security_keywords[parse_lang(lang)] = get_as<std::vector<std::string>>(list, k);
    } else if (key == "window_duration") {
      c.window_duration = get_as<Timestamp>(v, k);
    } else if (key == "cycle_period") {
      c.cycle_period = get_as<Timestamp>(v, k);
    } else if (key == "start") {
      if (v.is_string()) {
        auto t = parse_iso8601(v.get<std::string>());
        if (!t) throw std::invalid_argument("config: bad start date");
        c.start = *t;
      } else {
        c.start = get_as<Timestamp>(v, k);
      }
    } else if (key == "soa_threshold") {
      c.soa_threshold = get_as<double>(v, k);
    } else if (key == "top_k") {
      c.top_k = get_as<std::size_t>(v, k);
    } else if (key == "rank_cutoff") {
      c.rank_cutoff = get_as<int>(v, k);
    } else if (key == "whois_max_age_days") {
      c.whois_max_age_days = get_as<long>(v, k);
    } else if (key == "class_threshold") {
      c.class_threshold = get_as<double>(v, k);
    } else if (key == "svd_target") {
      c.svd_target = get_as<double>(v, k);
    } else if (key == "train_fraction") {
      c.train_fraction = get_as<double>(v, k);
    } else if (key == "profile_terms") {
      c.profile_terms = get_as<std::vector<std::string>>(v, k);
    } else if (key == "whois_provider") {
      c.whois_provider = get_as<std::string>(v, k);
    } else if (key == "visual_provider") {
      c.visual_provider = get_as<std::string>(v, k);
    } else if (key == "forest") {
      if (!v.is_object()) throw std::invalid_argument("config: forest must be an object");
      for (const auto& [fk, fv] : v.items()) {
        const char* f = fk.c_str();
        if (fk == "n_trees") c.forest.n_trees = get_as<std::size_t>(fv, f);
        else if (fk == "max_depth") c.forest.max_depth = get_as<std::size_t>(fv, f);
        else if (fk == "min_samples_leaf") c.forest.min_samples_leaf = get_as<std::size_t>(fv, f);
        else if (fk == "features_per_split") c.forest.features_per_split = get_as<std::size_t>(fv, f);
        else if (fk == "bootstrap") c.forest.bootstrap = get_as<bool>(fv, f);
        else if (fk == "seed") c.forest.seed = get_as<std::uint64_t>(fv, f);
        else if (fk == "n_threads") c.forest.n_threads = get_as<unsigned>(fv, f);
        else throw std::invalid_argument("config: unknown key 'forest." + fk + "'");
      }
    } else if (key == "schema") {
      if (!v.is_object()) throw std::invalid_argument("config: schema must be an object");
      for (const auto& [sk, sv] : v.items()) {
        const char* f = sk.c_str();
        if (sk == "visual_dim") c.schema.visual_dim = get_as<std::size_t>(sv, f);
        else if (sk == "context_dim") c.schema.context_dim = get_as<std::size_t>(sv, f);
        else if (sk == "visual_raw_dim") c.schema.visual_raw_dim = get_as<std::size_t>(sv, f);
        else if (sk == "context_raw_dim") c.schema.context_raw_dim = get_as<std::size_t>(sv, f);
        else if (sk == "embed_seed") c.schema.embed_seed = get_as<std::uint64_t>(sv, f);
        else throw std::invalid_argument("config: unknown key 'schema." + sk + "'");
      }
    } else if (auto it = paths.find(key); it != paths.end()) {
      *it->second = resolve(base_dir, get_as<std::string>(v, k));
    } else {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::filesystem::path(path).parent_path().string());
}

std::string config_to_json(const PipelineConfig& c) {
  json kw = json::object();
  for (const auto& [lang, list] : c.security_keywords) kw[std::string(to_string(lang))] = list;
  json j = {{"security_keywords", kw},
            {"window_duration", c.window_duration},
            {"cycle_period", c.cycle_period},
            {"soa_threshold", c.soa_threshold},
            {"top_k", c.top_k},
            {"rank_cutoff", c.rank_cutoff},
            {"whois_max_age_days", c.whois_max_age_days},
            {"class_threshold", c.class_threshold},
            {"svd_target", c.svd_target},
            {"train_fraction", c.train_fraction},
            {"profile_terms", c.profile_terms},
            {"whois_provider", c.whois_provider},
            {"visual_provider", c.visual_provider},
            {"forest",
             {{"n_trees", c.forest.n_trees},
              {"max_depth", c.forest.max_depth},
              {"min_samples_leaf", c.forest.min_samples_leaf},
              {"features_per_split", c.forest.features_per_split},
              {"bootstrap", c.forest.bootstrap},
              {"seed", c.forest.seed},
              {"n_threads", c.forest.n_threads}}},
            {"schema",
             {{"visual_dim", c.schema.visual_dim},
              {"context_dim", c.schema.context_dim},
              {"visual_raw_dim", c.schema.visual_raw_dim},
              {"context_raw_dim", c.schema.context_raw_dim},
              {"embed_seed", c.schema.embed_seed}}}};
  if (c.start) j["start"] = *c.start;
  const std::pair<const char*, const std::string*> paths[] = {
      {"posts", &c.posts_path},   {"authors", &c.authors_path}, {"labels", &c.labels_path},
      {"ranks", &c.ranks_path},   {"shorteners", &c.shorteners_path}, {"dyndns", &c.dyndns_path},
      {"whois", &c.whois_path},   {"visual_catalog", &c.visual_catalog_path}, {"model", &c.model_path},
      {"vt", &c.vt_path}};
  for (const auto& [k, p] : paths)
    if (!p->empty()) j[k] = *p;
  return j.dump(2);
}

// ---- resources ---------------------------------------------------------

ScreeningContext PipelineResources::screening(Timestamp now) const {
  ScreeningContext ctx;
  ctx.ranks = &ranks;
  ctx.shorteners = &shorteners;
  ctx.dynamic_dns = &dynamic_dns;
  ctx.whois = whois.get();
  ctx.now = now;
  ctx.max_age_days = max_age_days;
  return ctx;
}

PipelineResources load_resources(const PipelineConfig& cfg) {
  cfg.validate();
  PipelineResources r;
  r.ranks = cfg.ranks_path.empty() ? RankList(cfg.rank_cutoff) : RankList::load(cfg.ranks_path, cfg.rank_cutoff);
  if (!cfg.shorteners_path.empty()) r.shorteners = load_domain_set(cfg.shorteners_path);
  if (!cfg.dyndns_path.empty()) r.dynamic_dns = load_domain_set(cfg.dyndns_path);
  if (cfg.whois_provider == "fixture") {
    r.whois = std::make_unique<FixtureWhois>(cfg.whois_path.empty() ? FixtureWhois() : FixtureWhois::load(cfg.whois_path));
  } else if (cfg.whois_provider == "tcp") {
    r.whois = std::make_unique<TcpWhois>();
  } else {
    r.whois = std::make_unique<UnavailableWhois>();
  }
  const DefaultEmbedders defaults(cfg.schema);
  if (cfg.visual_provider == "catalog") {
    r.visual = std::make_unique<CatalogVisualEmbedder>(CatalogVisualEmbedder::load(cfg.visual_catalog_path));
  } else {
    r.visual = std::make_unique<HashingVisualEmbedder>(defaults.visual);
  }
  r.context = std::make_unique<HashingContextEmbedder>(defaults.context);
  if (!cfg.authors_path.empty()) r.categories = categorize_users(load_authors(cfg.authors_path), cfg.profile_terms);
  r.max_age_days = cfg.whois_max_age_days;
  return r;
}

// ---- per-post stages ---------------------------------------------------

ProcessedPost process_post(const PostRecord& post, const PipelineResources& res, std::optional<bool> label) {
  ProcessedPost p;
  p.extracted = extract_post_indicators(post);
  p.screening = screen_post(post, p.extracted, res.screening(post.created_at));
  for (const auto& ind : p.screening.kept) p.kept.push_back(ind.is_url ? ind : promote_domain_to_url(ind));
  p.instances = build_instances(post, p.kept, label);
  return p;
}

void check_model_schema(const ForestModel& model, const FeatureSchema& schema) {
  if (model.artifacts.schema != schema || model.n_features != schema.dimension())
    throw std::invalid_argument("model schema mismatch: model expects " + std::to_string(model.n_features) +
                                " features (visual " + std::to_string(model.artifacts.schema.visual_dim) + ", context " +
                                std::to_string(model.artifacts.schema.context_dim) + "), configuration gives " +
                                std::to_string(schema.dimension()));
}

PostScore score_post(const PostRecord& post, const ProcessedPost& processed, const ForestModel& model,
                     const PipelineResources& res, double threshold, std::vector<std::string>* warnings) {
  PostScore s;
  s.post_id = post.post_id;
  s.indicators = processed.kept;
  if (processed.instances.empty()) return s;
  s.excluded = false;
  auto assembled = assemble(post, processed.instances, res.embedders(), model.artifacts);
  if (warnings) warnings->insert(warnings->end(), assembled.warnings.begin(), assembled.warnings.end());
  std::vector<ScoredInstance> scored;
  for (const auto& row : assembled.rows) scored.push_back({post.post_id, predict(model, row.vector)});
  auto c = classify_post(scored, threshold);
  s.label = c.label;
  s.scores = std::move(c.scores);
  return s;
}

namespace {

std::uint64_t corpus_hash(const std::vector<std::pair<const PostRecord*, bool>>& items) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xff;
    h *= 0x100000001b3ULL;
  };
  for (const auto& [p, label] : items) {
    feed(p->post_id);
    feed(label ? "1" : "0");
  }
  return h;
}

}  // namespace

ForestModel train_model(const std::vector<PostRecord>& posts, const LabelMap& labels, const PipelineConfig& cfg,
                        const PipelineResources& res, Timestamp trained_at) {
  std::vector<TrainingItem> items;
  std::vector<std::pair<const PostRecord*, bool>> used;
  for (const auto& post : posts) {
    auto it = labels.find(post.post_id);
    if (it == labels.end()) continue;
    auto processed = process_post(post, res, it->second);
    if (processed.instances.empty()) continue;
    used.emplace_back(&post, it->second);
    for (auto& inst : processed.instances) items.push_back({&post, std::move(inst)});
  }
  if (items.empty()) throw TrainingError("train: no labeled post has a surviving indicator");

  const auto embedders = res.embedders();
  FeatureArtifacts artifacts = fit_artifacts(items, embedders, cfg.schema, cfg.svd_target);
  std::vector<std::vector<double>> x;
  std::vector<bool> y;
  x.reserve(items.size());
  for (const auto& item : items) {
    x.push_back(model_input(featurize(*item.post, item.instance, embedders, artifacts), artifacts));
    y.push_back(*item.instance.label);
  }
  ForestModel model = train(x, y, cfg.forest);
  model.artifacts = std::move(artifacts);
  model.metadata.trained_at = trained_at;
  model.metadata.corpus_hash = corpus_hash(used);
  return model;
}

SplitEvaluation evaluate_chronological(const std::vector<PostRecord>& posts, const LabelMap& labels,
                                       const PipelineConfig& cfg, const PipelineResources& res) {
  std::vector<const PostRecord*> order;
  for (const auto& p : posts)
    if (labels.count(p.post_id)) order.push_back(&p);
  std::stable_sort(order.begin(), order.end(),
                   [](const PostRecord* a, const PostRecord* b) { return a->created_at < b->created_at; });
  const auto cut = static_cast<std::size_t>(std::floor(cfg.train_fraction * static_cast<double>(order.size())));
  if (cut == 0 || cut == order.size()) throw std::invalid_argument("evaluate: split leaves an empty side");

  std::vector<PostRecord> train_posts;
  for (std::size_t i = 0; i < cut; ++i) train_posts.push_back(*order[i]);
  SplitEvaluation ev;
  ev.train_posts = cut;
  ev.test_posts = order.size() - cut;
  ev.model = train_model(train_posts, labels, cfg, res, train_posts.back().created_at);

  std::vector<bool> truth, predicted;
  for (std::size_t i = cut; i < order.size(); ++i) {
    const auto& post = *order[i];
    auto processed = process_post(post, res);
    auto s = score_post(post, processed, ev.model, res, cfg.class_threshold);
    if (s.excluded) {
      ++ev.test_excluded;
      continue;
    }
    truth.push_back(labels.at(post.post_id));
    predicted.push_back(s.label);
  }
  ev.metrics = compute_metrics(truth, predicted);
  return ev;
}

std::string metrics_to_json(const Metrics& m) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json j = {{"accuracy", opt(m.accuracy)},
            {"tpr", opt(m.tpr)},
            {"tnr", opt(m.tnr)},
            {"precision", opt(m.precision)},
            {"f_measure", opt(m.f_measure)},
            {"confusion", {{"tp", m.counts.tp}, {"fp", m.counts.fp}, {"tn", m.counts.tn}, {"fn", m.counts.fn}}}};
  return j.dump(2);
}

// ---- state -------------------------------------------------------------

std::string state_to_json(const CycleState& s) {
  json kw = json::object();
  for (const auto& [lang, list] : s.keywords) kw[std::string(to_string(lang))] = list;
  json window = json::array();
  for (const auto& e : s.window)
    window.push_back({{"post_id", e.post_id},
                      {"created_at", e.created_at},
                      {"lang", to_string(e.lang)},
                      {"tokens", e.tokens},
                      {"label", e.label}});
  json j = {{"cycle", s.cycle}, {"cursor", s.cursor}, {"keywords", kw}, {"model_ref", s.model_ref}, {"window", window}};
  return j.dump(1);
}

CycleState state_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    CycleState s;
    s.cycle = j.at("cycle").get<std::size_t>();
    s.cursor = j.at("cursor").get<Timestamp>();
    for (const auto& [lang, list] : j.at("keywords").items())
      s.keywords[parse_lang(lang)] = list.get<std::vector<std::string>>();
    s.model_ref = j.value("model_ref", "");
    for (const auto& e : j.at("window")) {
      WindowEntry w;
      w.post_id = e.at("post_id").get<std::string>();
      w.created_at = e.at("created_at").get<Timestamp>();
      w.lang = parse_lang(e.at("lang").get<std::string>());
      w.tokens = e.at("tokens").get<std::vector<std::string>>();
      w.label = e.at("label").get<bool>();
      s.window.push_back(std::move(w));
    }
    return s;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("invalid state file: ") + e.what());
  }
}

void save_state(const CycleState& s, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write state file '" + tmp + "'");
    out << state_to_json(s) << '\n';
    out.flush();
    if (!out) throw std::runtime_error("failed writing state file '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

CycleState load_state(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open state file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return state_from_json(ss.str());
}

// ---- sources -----------------------------------------------------------

MemoryPostSource::MemoryPostSource(std::vector<PostRecord> posts) : posts_(std::move(posts)) {
  std::stable_sort(posts_.begin(), posts_.end(),
                   [](const PostRecord& a, const PostRecord& b) { return a.created_at < b.created_at; });
}

std::vector<PostRecord> MemoryPostSource::fetch(Timestamp begin, Timestamp end) const {
  auto lo = std::lower_bound(posts_.begin(), posts_.end(), begin,
                             [](const PostRecord& p, Timestamp t) { return p.created_at < t; });
  std::vector<PostRecord> out;
  for (auto it = lo; it != posts_.end() && it->created_at < end; ++it) out.push_back(*it);
  return out;
}

bool MemoryPostSource::exhausted(Timestamp t) const { return posts_.empty() || posts_.back().created_at < t; }

std::optional<Timestamp> MemoryPostSource::earliest() const {
  if (posts_.empty()) return std::nullopt;
  return posts_.front().created_at;
}

CycleState initial_state(const PipelineConfig& cfg, const PostSource& source, std::string model_ref) {
  CycleState s;
  if (cfg.start) {
    s.cursor = *cfg.start;
  } else if (auto first = source.earliest()) {
    Timestamp t = *first;
    Timestamp floored = t - ((t % cfg.cycle_period) + cfg.cycle_period) % cfg.cycle_period;
    s.cursor = floored;
  }
  s.keywords[Lang::en] = {};
  s.keywords[Lang::ja] = {};
  s.model_ref = std::move(model_ref);
  return s;
}

// ---- cycles ------------------------------------------------------------

namespace {

std::set<std::string> folded_security_tokens(const std::vector<std::string>& keywords) {
  std::set<std::string> out;
  for (std::string_view k : keywords) {
    if (!k.empty() && k.front() == '#') k.remove_prefix(1);
    out.insert(text::fold_case(text::nfc(k)));
  }
  return out;
}

}  // namespace

CycleResult run_cycle(const CycleState& state, const PipelineConfig& cfg, const PipelineResources& res,
                      const ForestModel& model, const PostSource& source) {
  CycleResult result;
  if (source.exhausted(state.cursor)) {
    result.exhausted = true;
    result.state = state;
    return result;
  }
  check_model_schema(model, cfg.schema);

  CycleOutputs& out = result.outputs;
  out.cycle = state.cycle;
  out.begin = state.cursor;
  out.end = state.cursor + cfg.cycle_period;

  std::map<Lang, std::vector<std::string>> queries;
  for (Lang lang : {Lang::en, Lang::ja}) {
    auto it = state.keywords.find(lang);
    queries[lang] = build_query_set(cfg.security_keywords.at(lang),
                                    it == state.keywords.end() ? std::vector<std::string>{} : it->second);
  }

  for (auto& post : source.fetch(out.begin, out.end)) {
    auto matched = match_queries(post, queries.at(post.lang));
    if (matched.empty()) continue;
    post.matched_keywords = std::move(matched);
    out.collected.push_back(std::move(post));
  }

  for (const auto& post : out.collected) {
    auto processed = process_post(post, res);
    out.scores.push_back(score_post(post, processed, model, res, cfg.class_threshold, &out.warnings));
  }

  for (std::size_t i = 0; i < out.collected.size(); ++i) {
    const auto& s = out.scores[i];
    if (!s.excluded && s.label) out.reports.push_back(make_report(out.collected[i], s.indicators));
  }
  FeedAnnotations notes;
  notes.shorteners = &res.shorteners;
  notes.dynamic_dns = &res.dynamic_dns;
  notes.categories = &res.categories;
  out.feed = emit_feed(out.reports, notes);

  CycleState next = state;
  const Timestamp window_start = out.end - cfg.window_duration;
  std::erase_if(next.window, [&](const WindowEntry& e) { return e.created_at < window_start; });
  for (std::size_t i = 0; i < out.collected.size(); ++i) {
    const auto& post = out.collected[i];
    WindowEntry e;
    e.post_id = post.post_id;
    e.created_at = post.created_at;
    e.lang = post.lang;
    const auto nouns = extract_proper_nouns(post.text, post.lang);
    e.tokens.assign(nouns.begin(), nouns.end());
    e.label = !out.scores[i].excluded && out.scores[i].label;
    next.window.push_back(std::move(e));
  }

  KeywordSelection selection{cfg.soa_threshold, cfg.top_k};
  for (Lang lang : {Lang::en, Lang::ja}) {
    const auto excluded = folded_security_tokens(cfg.security_keywords.at(lang));
    std::vector<std::set<std::string>> tokens;
    std::vector<bool> labels;
    for (const auto& e : next.window) {
      if (e.lang != lang) continue;
      std::set<std::string> t;
      for (const auto& tok : e.tokens)
        if (!excluded.count(text::fold_case(tok))) t.insert(tok);
      tokens.push_back(std::move(t));
      labels.push_back(e.label);
    }
    // An empty window keeps the previous keywords.
    if (tokens.empty()) continue;
    auto selected = select_keywords(tokens, labels, lang, selection, out.end);
    std::vector<std::string> words;
    for (const auto& k : selected) words.push_back(k.token);
    next.keywords[lang] = std::move(words);
    out.keywords[lang] = std::move(selected);
  }

  next.cycle = state.cycle + 1;
  next.cursor = out.end;
  result.state = std::move(next);
  return result;
}

// ---- writers -----------------------------------------------------------

namespace {

json indicator_json(const std::string& post_id, const Indicator& ind) {
  return {{"post_id", post_id},
          {"raw", ind.raw},
          {"normalized_url", ind.normalized_url},
          {"source", to_string(ind.source)},
          {"image_id", ind.image_id ? json(*ind.image_id) : json(nullptr)},
          {"defang_form", to_string(ind.defang_form)},
          {"host", ind.host},
          {"registrable_domain", ind.registrable_domain},
          {"tld", ind.tld},
          {"is_url", ind.is_url}};
}

}  // namespace

void write_indicators_jsonl(std::ostream& out, const std::string& post_id, const std::vector<Indicator>& indicators) {
  for (const auto& ind : indicators) out << indicator_json(post_id, ind).dump() << '\n';
}

void write_verdicts_jsonl(std::ostream& out, const std::string& post_id, const PostScreening& screening) {
  for (const auto& v : screening.verdicts) {
    json j = indicator_json(post_id, v.indicator);
    j["kept"] = v.kept;
    json reasons = json::array();
    for (auto r : v.reasons) reasons.push_back(to_string(r));
    j["reasons"] = reasons;
    j["domain_age_days"] = v.domain_age_days ? json(*v.domain_age_days) : json(nullptr);
    j["post_excluded"] = screening.excluded;
    out << j.dump() << '\n';
  }
}

void write_scores_jsonl(std::ostream& out, const std::vector<PostScore>& scores) {
  for (const auto& s : scores) {
    json urls = json::array();
    for (const auto& ind : s.indicators) urls.push_back(ind.normalized_url);
    json j = {{"post_id", s.post_id}, {"excluded", s.excluded}, {"label", s.label}, {"scores", s.scores}, {"urls", urls}};
    out << j.dump() << '\n';
  }
}

void write_keywords_csv(std::ostream& out, const std::vector<KeywordCandidate>& keywords) {
  out << "token,lang,pmi_pos,pmi_neg,soa,support,window_end\n";
  char buf[64];
  for (const auto& k : keywords) {
    std::string token = k.token;
    if (token.find_first_of(",\"\n") != std::string::npos) {
      std::string q = "\"";
      for (char c : token) {
        if (c == '"') q += '"';
        q += c;
      }
      token = q + "\"";
    }
    out << token << ',' << to_string(k.lang);
    for (double v : {k.pmi_pos, k.pmi_neg, k.soa}) {
      std::snprintf(buf, sizeof buf, "%.12g", v);
      out << ',' << buf;
    }
    out << ',' << k.support << ',' << k.window_end << '\n';
  }
}

}  // namespace phishintel
