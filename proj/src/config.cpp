#include "okbc/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "okbc/error.hpp"

namespace okbc::config {

namespace {

const std::map<std::string, std::string>& defaults() {
  static const std::map<std::string, std::string> d = {
      {"seed", "0"},
      {"threads", "1"},
      {"paths.corpus_dir", ""},
      {"paths.tuples", ""},
      {"paths.sentences", ""},
      {"paths.gold", ""},
      {"paths.np_embeddings", ""},
      {"paths.rp_embeddings", ""},
      {"paths.sentence_embeddings", ""},
      {"paths.out", "out"},
      {"embed.d0", "32"},
      {"embed.svd_rank", "32"},
      {"embed.svd_oversampling", "10"},
      {"embed.svd_power_iterations", "8"},
      {"pairs.theta_meta_pos", "0.75"},
      {"pairs.theta_neg", "0.7"},
      {"pairs.theta_intra_pos", "0.8"},
      {"pairs.theta_intra_neg", "0"},
      {"pairs.tau_prune", "0"},
      {"pairs.top_l", "50"},
      {"pairs.max_pairs_per_set", "20000"},
      {"pairs.eps_den", "0.1"},
      {"sampler.m_meta", "10"},
      {"sampler.m_intra", "10"},
      {"sampler.top_l", "50"},
      {"sampler.resample_each_epoch", "true"},
      {"loss.alpha", "0.4"},
      {"loss.beta", "0.4"},
      {"loss.gamma1", "0.1"},
      {"loss.gamma2", "0.1"},
      {"loss.gamma3", "0.1"},
      {"loss.pairs_per_term", "256"},
      {"train.epochs", "30"},
      {"train.steps_per_epoch", "10"},
      {"train.learning_rate", "0.01"},
      {"train.optimizer", "sgd_momentum"},
      {"train.K", "2"},
      {"train.d", "32"},
      {"train.nonlinearity", "relu"},
      {"ablation.use_L1", "true"},
      {"ablation.use_L2", "true"},
      {"ablation.use_L3", "true"},
      {"ablation.use_meta_neighbors", "true"},
      {"ablation.use_gnn", "true"},
      {"cluster.linkage", "complete"},
      {"cluster.np_threshold", "auto"},
      {"cluster.rp_threshold", "same"},
      {"cluster.fallback_threshold", "0.3"},
      {"cluster.validation_fraction", "0.2"},
      {"cluster.grid", "default"},
      {"output.graph", "false"},
      {"output.pairs", "false"},
      {"output.model", "false"},
  };
  return d;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const char* what) {
  throw Error(Errc::invalid_config, key + " = '" + value + "': expected " + what);
}

double to_double(const KeyValues& kv, const std::string& key) {
  const auto& v = kv.get(key);
  double x = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) bad(key, v, "a number");
  return x;
}

std::uint64_t to_uint(const KeyValues& kv, const std::string& key) {
  const auto& v = kv.get(key);
  std::uint64_t x = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) bad(key, v, "a non-negative integer");
  return x;
}

bool to_bool(const KeyValues& kv, const std::string& key) {
  const auto& v = kv.get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad(key, v, "true/false");
}

std::optional<double> to_threshold(const KeyValues& kv, const std::string& key, const char* keyword) {
  if (kv.get(key) == keyword) return std::nullopt;
  const double t = to_double(kv, key);
  if (t < 0.0) bad(key, kv.get(key), "a threshold >= 0");
  return t;
}

}  // namespace

KeyValues::KeyValues() : values_(defaults()) {}

void KeyValues::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error(Errc::invalid_config, "unknown config key '" + key + "'");
  it->second = value;
}

void KeyValues::merge_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw Error(Errc::invalid_config, origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    try {
      set(trim(std::string_view(body).substr(0, eq)), trim(std::string_view(body).substr(eq + 1)));
    } catch (const Error& e) {
      throw Error(Errc::invalid_config, origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void KeyValues::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  merge_text(ss.str(), path.string());
}

void KeyValues::merge_assignment(const std::string& assignment) { merge_text(assignment, "--set"); }

const std::string& KeyValues::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error(Errc::invalid_config, "unknown config key '" + key + "'");
  return it->second;
}

std::string KeyValues::dump() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

RunConfig resolve(const KeyValues& kv) {
  RunConfig c;
  c.resolved = kv;
  c.seed = to_uint(kv, "seed");
  c.threads = to_uint(kv, "threads");
  if (c.threads < 1) bad("threads", kv.get("threads"), "at least 1");

  c.corpus_dir = kv.get("paths.corpus_dir");
  c.tuples = kv.get("paths.tuples");
  c.sentences = kv.get("paths.sentences");
  c.gold = kv.get("paths.gold");
  c.np_embeddings = kv.get("paths.np_embeddings");
  c.rp_embeddings = kv.get("paths.rp_embeddings");
  c.sentence_embeddings = kv.get("paths.sentence_embeddings");
  c.out = kv.get("paths.out");

  c.d0 = to_uint(kv, "embed.d0");
  if (c.d0 < 1) bad("embed.d0", kv.get("embed.d0"), "at least 1");
  c.svd.rank = to_uint(kv, "embed.svd_rank");
  c.svd.oversampling = to_uint(kv, "embed.svd_oversampling");
  c.svd.power_iterations = to_uint(kv, "embed.svd_power_iterations");
  c.svd.seed = sub_seed(c.seed, "bow_svd");

  auto& p = c.pairs;
  p.theta_meta_pos = to_double(kv, "pairs.theta_meta_pos");
  p.theta_neg = to_double(kv, "pairs.theta_neg");
  p.theta_intra_pos = to_double(kv, "pairs.theta_intra_pos");
  p.theta_intra_neg = to_double(kv, "pairs.theta_intra_neg");
  p.tau_prune = to_double(kv, "pairs.tau_prune");
  p.top_l = to_uint(kv, "pairs.top_l");
  p.max_pairs_per_set = to_uint(kv, "pairs.max_pairs_per_set");
  p.eps_den = to_double(kv, "pairs.eps_den");
  metagraph::validate(p);

  auto& l = c.loss;
  l.alpha = to_double(kv, "loss.alpha");
  l.beta = to_double(kv, "loss.beta");
  l.gamma1 = to_double(kv, "loss.gamma1");
  l.gamma2 = to_double(kv, "loss.gamma2");
  l.gamma3 = to_double(kv, "loss.gamma3");
  l.pairs_per_term = to_uint(kv, "loss.pairs_per_term");
  train::validate(l);

  auto& t = c.train;
  t.seed = c.seed;
  t.epochs = to_uint(kv, "train.epochs");
  t.steps_per_epoch = to_uint(kv, "train.steps_per_epoch");
  t.learning_rate = to_double(kv, "train.learning_rate");
  t.optimizer = train::parse_optimizer(kv.get("train.optimizer"));
  t.K = to_uint(kv, "train.K");
  t.d = to_uint(kv, "train.d");
  t.act = gnn::parse_nonlinearity(kv.get("train.nonlinearity"));
  t.use_L1 = to_bool(kv, "ablation.use_L1");
  t.use_L2 = to_bool(kv, "ablation.use_L2");
  t.use_L3 = to_bool(kv, "ablation.use_L3");
  t.use_gnn = to_bool(kv, "ablation.use_gnn");
  t.sampler.use_meta_neighbors = to_bool(kv, "ablation.use_meta_neighbors");
  t.sampler.m_meta = to_uint(kv, "sampler.m_meta");
  t.sampler.m_intra = to_uint(kv, "sampler.m_intra");
  t.sampler.top_l = to_uint(kv, "sampler.top_l");
  t.sampler.resample_each_epoch = to_bool(kv, "sampler.resample_each_epoch");
  train::validate(t);

  c.linkage = cluster::parse_linkage(kv.get("cluster.linkage"));
  c.np_threshold = to_threshold(kv, "cluster.np_threshold", "auto");
  c.rp_threshold = to_threshold(kv, "cluster.rp_threshold", "same");
  c.fallback_threshold = to_double(kv, "cluster.fallback_threshold");
  c.validation_fraction = to_double(kv, "cluster.validation_fraction");
  if (!(c.validation_fraction > 0.0 && c.validation_fraction < 1.0)) {
    bad("cluster.validation_fraction", kv.get("cluster.validation_fraction"), "a value in (0, 1)");
  }
  const auto& grid = kv.get("cluster.grid");
  if (grid == "default") {
    c.grid = cluster::default_grid();
  } else {
    std::stringstream ss(grid);
    for (std::string item; std::getline(ss, item, ',');) {
      item = trim(item);
      double x = 0.0;
      const auto r = std::from_chars(item.data(), item.data() + item.size(), x);
      if (r.ec != std::errc() || r.ptr != item.data() + item.size() || x < 0.0) {
        bad("cluster.grid", grid, "'default' or comma-separated thresholds");
      }
      c.grid.push_back(x);
    }
    if (c.grid.empty()) throw Error(Errc::empty_grid, "cluster.grid is empty");
  }

  c.write_graph = to_bool(kv, "output.graph");
  c.write_pairs = to_bool(kv, "output.pairs");
  c.write_model = to_bool(kv, "output.model");
  return c;
}

}  // namespace okbc::config
