#include "phishintel/forest.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

namespace phishintel {

// ---- RNG ---------------------------------------------------------------

namespace {

// splitmix64: small, portable and identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do {
      v = next();
    } while (v >= limit);
    return v % n;
  }

 private:
  std::uint64_t state_;
};

std::uint64_t tree_seed(std::uint64_t seed, std::size_t tree) {
  Rng r(seed ^ (0xa0761d6478bd642fULL * (tree + 1)));
  return r.next();
}

using Int128 = __int128;

// Split quality as an exact fraction: sum over children of (pos^2 + neg^2) / size.
// Larger is better (equivalent to lower weighted Gini impurity).
struct SplitScore {
  Int128 num = 0;
  Int128 den = 1;

  static SplitScore of(std::int64_t lp, std::int64_t ln, std::int64_t rp, std::int64_t rn) {
    const std::int64_t l = lp + ln;
    const std::int64_t r = rp + rn;
    SplitScore s;
    s.num = Int128(lp * lp + ln * ln) * r + Int128(rp * rp + rn * rn) * l;
    s.den = Int128(l) * r;
    return s;
  }
  int compare(const SplitScore& o) const {
    const Int128 a = num * o.den;
    const Int128 b = o.num * den;
    return a < b ? -1 : (a > b ? 1 : 0);
  }
};

struct Candidate {
  bool valid = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  SplitScore score;

  bool better_than(const Candidate& o) const {
    if (!o.valid) return true;
    int c = score.compare(o.score);
    if (c != 0) return c > 0;
    if (feature != o.feature) return feature < o.feature;
    return threshold < o.threshold;
  }
};

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<std::vector<double>>& x, const std::vector<bool>& y, const ForestParams& p,
              std::size_t features_per_split, std::uint64_t seed)
      : x_(x), y_(y), p_(p), m_(features_per_split), rng_(seed), d_(x.front().size()) {}

  Tree build() {
    std::vector<std::uint32_t> samples;
    const std::size_t n = x_.size();
    samples.reserve(n);
    if (p_.bootstrap) {
      for (std::size_t i = 0; i < n; ++i) samples.push_back(static_cast<std::uint32_t>(rng_.below(n)));
    } else {
      for (std::size_t i = 0; i < n; ++i) samples.push_back(static_cast<std::uint32_t>(i));
    }
    grow(samples, 0);
    return std::move(tree_);
  }

 private:
  std::int32_t grow(std::vector<std::uint32_t>& samples, std::size_t depth) {
    const auto index = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();

    std::int64_t pos = 0;
    for (auto s : samples) pos += y_[s] ? 1 : 0;
    const auto n = static_cast<std::int64_t>(samples.size());
    tree_.nodes[static_cast<std::size_t>(index)].probability = static_cast<double>(pos) / static_cast<double>(n);

    const bool pure = pos == 0 || pos == n;
    const bool depth_capped = p_.max_depth > 0 && depth >= p_.max_depth;
    if (pure || depth_capped || n < static_cast<std::int64_t>(2 * p_.min_samples_leaf)) return index;

    Candidate best = find_split(samples, pos);
    if (!best.valid) return index;

    std::vector<std::uint32_t> left, right;
    for (auto s : samples) (x_[s][best.feature] <= best.threshold ? left : right).push_back(s);
    std::vector<std::uint32_t>().swap(samples);

    const std::int32_t l = grow(left, depth + 1);
    const std::int32_t r = grow(right, depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(index)];
    node.feature = static_cast<std::int32_t>(best.feature);
    node.threshold = best.threshold;
    node.left = l;
    node.right = r;
    return index;
  }

  Candidate find_split(const std::vector<std::uint32_t>& samples, std::int64_t pos_total) {
    std::vector<std::size_t> order(d_);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = d_; i > 1; --i) std::swap(order[i - 1], order[rng_.below(i)]);

    Candidate best;
    std::vector<std::pair<double, bool>> values(samples.size());
    for (std::size_t k = 0; k < d_; ++k) {
      // Past the sampled subset, keep drawing only until some valid split exists.
      if (k >= m_ && best.valid) break;
      const std::size_t f = order[k];
      for (std::size_t i = 0; i < samples.size(); ++i) values[i] = {x_[samples[i]][f], y_[samples[i]]};
      std::sort(values.begin(), values.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });

      const auto n = static_cast<std::int64_t>(values.size());
      const auto min_leaf = static_cast<std::int64_t>(p_.min_samples_leaf);
      std::int64_t lp = 0;
      for (std::int64_t i = 0; i + 1 < n; ++i) {
        if (values[static_cast<std::size_t>(i)].second) ++lp;
        const double a = values[static_cast<std::size_t>(i)].first;
        const double b = values[static_cast<std::size_t>(i + 1)].first;
        if (!(a < b)) continue;
        const std::int64_t l = i + 1;
        if (l < min_leaf || n - l < min_leaf) continue;
        Candidate c;
        c.valid = true;
        c.feature = f;
        c.threshold = a + (b - a) / 2.0;
        if (!(c.threshold < b)) c.threshold = a;
        c.score = SplitScore::of(lp, l - lp, pos_total - lp, (n - l) - (pos_total - lp));
        if (c.better_than(best)) best = c;
      }
    }
    return best;
  }

  const std::vector<std::vector<double>>& x_;
  const std::vector<bool>& y_;
  const ForestParams& p_;
  std::size_t m_;
  Rng rng_;
  std::size_t d_;
  Tree tree_;
};

}  // namespace

double Tree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes[i].probability;
}

std::size_t Tree::depth() const {
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  std::size_t best = 0;
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (!nodes[i].is_leaf()) {
      stack.push_back({static_cast<std::size_t>(nodes[i].left), d + 1});
      stack.push_back({static_cast<std::size_t>(nodes[i].right), d + 1});
    }
  }
  return best;
}

ForestModel train(const std::vector<std::vector<double>>& x, const std::vector<bool>& y, const ForestParams& params) {
  if (x.size() < 2) throw TrainingError("train: need at least 2 instances");
  if (x.size() != y.size()) throw TrainingError("train: labels not aligned with instances");
  if (params.n_trees < 1) throw TrainingError("train: n_trees must be at least 1");
  if (params.min_samples_leaf < 1) throw TrainingError("train: min_samples_leaf must be at least 1");
  const std::size_t d = x.front().size();
  if (d == 0) throw TrainingError("train: instances have no features");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].size() != d) throw TrainingError("train: instance " + std::to_string(i) + " has wrong dimension");
    for (double v : x[i])
      if (!std::isfinite(v)) throw TrainingError("train: instance " + std::to_string(i) + " has a non-finite feature");
  }
  const auto positives = std::count(y.begin(), y.end(), true);
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(y.size()))
    throw TrainingError("train: both classes must be present");

  std::size_t m = params.features_per_split;
  if (m == 0) m = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
  if (m > d) throw TrainingError("train: features_per_split exceeds feature count");

  ForestModel model;
  model.params = params;
  model.params.n_threads = 1;
  model.n_features = d;
  model.trees.resize(params.n_trees);
  model.metadata.n_instances = x.size();

  auto build_range = [&](std::size_t begin, std::size_t step) {
    for (std::size_t t = begin; t < params.n_trees; t += step)
      model.trees[t] = TreeBuilder(x, y, params, m, tree_seed(params.seed, t)).build();
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(params.n_threads, static_cast<unsigned>(params.n_trees)));
  if (workers == 1) {
    build_range(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(build_range, w, workers);
    for (auto& t : pool) t.join();
  }
  return model;
}

double predict(const ForestModel& model, std::span<const double> x) {
  if (x.size() != model.n_features)
    throw std::invalid_argument("predict: expected " + std::to_string(model.n_features) + " features, got " +
                                std::to_string(x.size()));
  double sum = 0.0;
  for (const auto& t : model.trees) sum += t.predict(x);
  return sum / static_cast<double>(model.trees.size());
}

double predict(const ForestModel& model, const FeatureVector& v) {
  if (v.schema_version != model.artifacts.schema.version)
    throw std::invalid_argument("predict: feature schema version mismatch");
  const auto row = model_input(v, model.artifacts);
  return predict(model, std::span<const double>(row));
}

PostClassification classify_post(const std::vector<ScoredInstance>& instances, double threshold) {
  if (instances.empty()) throw std::invalid_argument("classify_post: no instances");
  PostClassification out;
  out.post_id = instances.front().post_id;
  double best = -1.0;
  for (const auto& i : instances) {
    if (i.post_id != out.post_id) throw std::invalid_argument("classify_post: instances from different posts");
    out.scores.push_back(i.score);
    best = std::max(best, i.score);
  }
  out.label = best >= threshold;
  return out;
}

Metrics compute_metrics(const std::vector<bool>& truth, const std::vector<bool>& predicted) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("compute_metrics: size mismatch");
  Metrics m;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i]) {
      (predicted[i] ? m.counts.tp : m.counts.fn)++;
    } else {
      (predicted[i] ? m.counts.fp : m.counts.tn)++;
    }
  }
  const auto& c = m.counts;
  auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  m.accuracy = ratio(c.tp + c.tn, c.total());
  m.tpr = ratio(c.tp, c.tp + c.fn);
  m.tnr = ratio(c.tn, c.tn + c.fp);
  m.precision = ratio(c.tp, c.tp + c.fp);
  if (m.precision && m.tpr) {
    const double p = *m.precision;
    const double r = *m.tpr;
    m.f_measure = (p + r) > 0 ? 2.0 * p * r / (p + r) : 0.0;
  }
  return m;
}

Metrics evaluate(const ForestModel& model, const std::vector<std::vector<double>>& x, const std::vector<bool>& y,
                 double threshold) {
  if (x.empty()) throw std::invalid_argument("evaluate: empty test set");
  std::vector<bool> predicted;
  predicted.reserve(x.size());
  for (const auto& row : x) predicted.push_back(predict(model, std::span<const double>(row)) >= threshold);
  return compute_metrics(y, predicted);
}

// ---- persistence -------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'P', 'H', 'I', 'F'};

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  template <typename T>
  void pod(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void u64(std::uint64_t v) { pod(v); }
  void f64(double v) { pod(v); }
  void doubles(const std::vector<double>& v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  void matrix(const linalg::Matrix& m) {
    u64(m.rows());
    u64(m.cols());
    for (double x : m.data()) f64(x);
  }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  template <typename T>
  T pod() {
    if (pos_ + sizeof(T) > in_.size()) throw ModelFormatError(ModelFormatError::Kind::corrupt, "model file truncated");
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::uint64_t u64() { return pod<std::uint64_t>(); }
  double f64() { return pod<double>(); }
  std::size_t count(std::size_t elem_size) {
    const std::uint64_t n = u64();
    if (elem_size && n > (in_.size() - pos_) / elem_size)
      throw ModelFormatError(ModelFormatError::Kind::corrupt, "model file: implausible element count");
    return static_cast<std::size_t>(n);
  }
  std::vector<double> doubles() {
    std::vector<double> v(count(sizeof(double)));
    for (double& x : v) x = f64();
    return v;
  }
  linalg::Matrix matrix() {
    const std::size_t rows = count(0);
    const std::size_t cols = count(0);
    if (cols && rows > (in_.size() - pos_) / sizeof(double) / cols)
      throw ModelFormatError(ModelFormatError::Kind::corrupt, "model file: implausible matrix size");
    linalg::Matrix m(rows, cols);
    for (double& x : m.data()) x = f64();
    return m;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::string_view in_;
  std::size_t pos_ = 0;
};

void write_projection(Writer& w, const Projection& p) {
  w.doubles(p.mean);
  w.matrix(p.components);
  w.doubles(p.explained_variance_ratio);
  w.f64(p.total_variance);
}

Projection read_projection(Reader& r) {
  Projection p;
  p.mean = r.doubles();
  p.components = r.matrix();
  p.explained_variance_ratio = r.doubles();
  p.total_variance = r.f64();
  if (p.mean.size() != p.components.rows() || p.explained_variance_ratio.size() != p.components.cols())
    throw ModelFormatError(ModelFormatError::Kind::corrupt, "model file: inconsistent projection");
  return p;
}

}  // namespace

std::string serialize(const ForestModel& model) {
  Writer w;
  const auto& p = model.params;
  w.u64(p.n_trees);
  w.u64(p.max_depth);
  w.u64(p.min_samples_leaf);
  w.u64(p.features_per_split);
  w.pod<std::uint8_t>(p.bootstrap ? 1 : 0);
  w.u64(p.seed);
  w.u64(model.n_features);

  w.u64(model.trees.size());
  for (const auto& t : model.trees) {
    w.u64(t.nodes.size());
    for (const auto& n : t.nodes) {
      w.pod<std::int32_t>(n.feature);
      w.f64(n.threshold);
      w.pod<std::int32_t>(n.left);
      w.pod<std::int32_t>(n.right);
      w.f64(n.probability);
    }
  }

  const auto& s = model.artifacts.schema;
  w.u64(s.visual_dim);
  w.u64(s.context_dim);
  w.u64(s.visual_raw_dim);
  w.u64(s.context_raw_dim);
  w.u64(s.embed_seed);
  w.pod<std::int32_t>(s.version);
  write_projection(w, model.artifacts.visual);
  write_projection(w, model.artifacts.context);
  w.pod<std::uint8_t>(model.artifacts.standardizer ? 1 : 0);
  if (model.artifacts.standardizer) {
    w.doubles(model.artifacts.standardizer->mean);
    w.doubles(model.artifacts.standardizer->stddev);
  }

  w.pod<std::int64_t>(model.metadata.trained_at);
  w.u64(model.metadata.corpus_hash);
  w.u64(model.metadata.n_instances);

  const std::string payload = std::move(w.bytes());
  Writer framed;
  framed.bytes().append(kMagic, sizeof kMagic);
  framed.pod<std::uint32_t>(ForestModel::kFormatVersion);
  framed.u64(payload.size());
  framed.bytes() += payload;
  framed.u64(fnv1a(payload));
  return std::move(framed.bytes());
}

ForestModel deserialize(std::string_view bytes) {
  using Kind = ModelFormatError::Kind;
  if (bytes.size() < sizeof kMagic + 4 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw ModelFormatError(Kind::corrupt, "not a model file");
  Reader header(bytes.substr(sizeof kMagic));
  const auto version = header.pod<std::uint32_t>();
  if (version != ForestModel::kFormatVersion)
    throw ModelFormatError(Kind::version, "unsupported model format version " + std::to_string(version));
  const std::uint64_t length = header.u64();
  const std::size_t payload_at = sizeof kMagic + 4 + 8;
  if (bytes.size() < payload_at || length > bytes.size() - payload_at || bytes.size() - payload_at - length != 8)
    throw ModelFormatError(Kind::corrupt, "model file truncated");
  const std::string_view payload = bytes.substr(payload_at, static_cast<std::size_t>(length));
  std::uint64_t checksum;
  std::memcpy(&checksum, bytes.data() + payload_at + length, 8);
  if (checksum != fnv1a(payload)) throw ModelFormatError(Kind::corrupt, "model file checksum mismatch");

  Reader r(payload);
  ForestModel m;
  auto& p = m.params;
  p.n_trees = r.u64();
  p.max_depth = r.u64();
  p.min_samples_leaf = r.u64();
  p.features_per_split = r.u64();
  p.bootstrap = r.pod<std::uint8_t>() != 0;
  p.seed = r.u64();
  m.n_features = r.u64();

  m.trees.resize(r.count(8));
  for (auto& t : m.trees) {
    t.nodes.resize(r.count(28));
    for (auto& n : t.nodes) {
      n.feature = r.pod<std::int32_t>();
      n.threshold = r.f64();
      n.left = r.pod<std::int32_t>();
      n.right = r.pod<std::int32_t>();
      n.probability = r.f64();
    }
    for (const auto& n : t.nodes) {
      const auto size = static_cast<std::int32_t>(t.nodes.size());
      if (!n.is_leaf() && (n.feature < 0 || static_cast<std::size_t>(n.feature) >= m.n_features || n.left <= 0 ||
                           n.right <= 0 || n.left >= size || n.right >= size))
        throw ModelFormatError(Kind::corrupt, "model file: invalid tree node");
    }
    if (t.nodes.empty()) throw ModelFormatError(Kind::corrupt, "model file: empty tree");
  }

  auto& s = m.artifacts.schema;
  s.visual_dim = r.u64();
  s.context_dim = r.u64();
  s.visual_raw_dim = r.u64();
  s.context_raw_dim = r.u64();
  s.embed_seed = r.u64();
  s.version = r.pod<std::int32_t>();
  m.artifacts.visual = read_projection(r);
  m.artifacts.context = read_projection(r);
  if (r.pod<std::uint8_t>()) {
    Standardizer st;
    st.mean = r.doubles();
    st.stddev = r.doubles();
    m.artifacts.standardizer = std::move(st);
  }
  m.metadata.trained_at = r.pod<std::int64_t>();
  m.metadata.corpus_hash = r.u64();
  m.metadata.n_instances = r.u64();
  if (!r.done()) throw ModelFormatError(Kind::corrupt, "model file: trailing bytes");
  return m;
}

void save(const ForestModel& model, const std::string& path) {
  const std::string bytes = serialize(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write model file '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing model file '" + path + "'");
}

ForestModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

}  // namespace phishintel
