#include "afe/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace afe {

namespace pt = boost::property_tree;

namespace {

// Typed access that records which keys were consumed so leftovers can be
// reported as typos.
class Ini {
 public:
  explicit Ini(const pt::ptree& tree) : tree_(tree) {}

  template <typename T>
  void get(const std::string& section, const std::string& key, T& out) {
    const auto raw = lookup(section, key);
    if (!raw) return;
    if constexpr (std::is_same_v<T, std::string>) {
      out = *raw;
    } else {
      T v{};
      const auto* b = raw->data();
      const auto* e = b + raw->size();
      auto [p, ec] = std::from_chars(b, e, v);
      if (ec != std::errc() || p != e) throw ConfigError("[" + section + "] " + key + ": cannot parse '" + *raw + "'");
      out = v;
    }
  }

  std::optional<std::string> lookup(const std::string& section, const std::string& key) {
    used_.insert(section + "." + key);
    const auto sec = tree_.get_child_optional(pt::ptree::path_type(section, '\0'));
    if (!sec) return std::nullopt;
    const auto v = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    std::string s = *v;
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    std::size_t b = 0;
    while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    return s.substr(b);
  }

  void reject_unknown() const {
    for (const auto& [section, child] : tree_) {
      if (child.empty() && !child.data().empty())
        throw ConfigError("key '" + section + "' must be inside a [section]");
      for (const auto& [key, value] : child)
        if (!used_.contains(section + "." + key)) throw ConfigError("unknown config key [" + section + "] " + key);
    }
  }

 private:
  const pt::ptree& tree_;
  std::set<std::string> used_;
};

std::vector<int> parse_int_list(const std::string& s, const std::string& what) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t b = item.find_first_not_of(" \t"), e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ConfigError(what + ": empty list item");
    item = item.substr(b, e - b + 1);
    int v = 0;
    auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || p != item.data() + item.size()) throw ConfigError(what + ": cannot parse '" + item + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

void RunConfig::validate() const {
  if (sample_rate < 8000) throw ConfigError("sample_rate must be at least 8000 Hz");
  if (!(window_seconds > 0.0)) throw ConfigError("window_seconds must be positive");
  features.validate();
  if (window_seconds * sample_rate < features.frames.frame_length * 2.0)
    throw ConfigError("window too short for two analysis frames");
  if (!(fence_multiplier > 0.0)) throw ConfigError("fence_multiplier must be positive");
  select.validate();
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");
  if (!(meta_fraction > 0.0 && meta_fraction < 1.0)) throw ConfigError("meta_fraction must lie in (0, 1)");
  if (neighbors < 1) throw ConfigError("balance neighbors must be at least 1");
  if (k < 2 || k_outer < 2 || k_inner < 2) throw ConfigError("fold counts must be at least 2");
  shrink.validate();
  if (stop_epochs.size() != 3)
    throw ConfigError("exactly three NN stop epochs are required (one per network snapshot slot)");
  nn_config(0).validate();
  if (per_class < 1) throw ConfigError("synth per_class must be at least 1");
}

std::uint64_t RunConfig::require_seed() const {
  if (!seed) throw ConfigError("a seed is required: set [run] seed or pass --seed");
  return *seed;
}

TrainConfig RunConfig::nn_config(std::uint64_t stage_seed) const {
  TrainConfig t;
  t.batch_size = batch_size;
  t.learning_rate = learning_rate;
  t.stop_epochs = stop_epochs;
  t.max_epochs = stop_epochs.empty() ? 1 : *std::max_element(stop_epochs.begin(), stop_epochs.end());
  t.seed = stage_seed;
  return t;
}

RunConfig parse_config(std::string_view ini_text, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  std::istringstream in{std::string(ini_text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  Ini ini(tree);
  RunConfig c;

  auto path = [&](const std::string& key, std::filesystem::path& out) {
    if (auto v = ini.lookup("paths", key)) {
      std::filesystem::path p(*v);
      out = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    }
  };
  path("manifest", c.manifest);
  path("out", c.out_dir);
  path("music_manifest", c.music_manifest);
  path("speech_manifest", c.speech_manifest);

  ini.get("audio", "sample_rate", c.sample_rate);
  ini.get("audio", "window_seconds", c.window_seconds);

  ini.get("frames", "frame_length", c.features.frames.frame_length);
  ini.get("frames", "hop", c.features.frames.hop);
  if (auto w = ini.lookup("frames", "window"); w && *w != "hann")
    throw ConfigError("[frames] window: only 'hann' is supported");
  ini.get("frames", "mfcc_filters", c.features.mfcc_filters);
  ini.get("frames", "mfcc_coeffs", c.features.mfcc_coeffs);
  ini.get("frames", "mel_bands", c.features.mel_bands);
  ini.get("frames", "rolloff_fraction", c.features.rolloff_fraction);

  ini.get("preprocess", "fence_multiplier", c.fence_multiplier);

  ini.get("select", "variance_threshold", c.select.variance_threshold);
  ini.get("select", "chi2_k", c.select.chi2_k);
  ini.get("select", "kde_overlap", c.select.kde_overlap);
  ini.get("select", "kde_grid", c.select.kde_grid);
  ini.get("select", "spearman_threshold", c.select.spearman_threshold);

  ini.get("split", "test_fraction", c.test_fraction);
  ini.get("split", "meta_fraction", c.meta_fraction);

  ini.get("balance", "neighbors", c.neighbors);

  ini.get("cv", "k", c.k);
  ini.get("cv", "k_outer", c.k_outer);
  ini.get("cv", "k_inner", c.k_inner);
  ini.get("cv", "span_fraction", c.shrink.span_fraction);
  ini.get("cv", "decay", c.shrink.decay);
  ini.get("cv", "points", c.shrink.points);
  ini.get("cv", "c_epsilon", c.shrink.c_epsilon);
  ini.get("cv", "gamma_epsilon", c.shrink.gamma_epsilon);

  ini.get("nn", "batch_size", c.batch_size);
  ini.get("nn", "learning_rate", c.learning_rate);
  if (auto v = ini.lookup("nn", "stop_epochs")) c.stop_epochs = parse_int_list(*v, "[nn] stop_epochs");

  ini.get("synth", "per_class", c.per_class);

  if (auto v = ini.lookup("run", "seed")) {
    std::uint64_t s = 0;
    auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), s);
    if (ec != std::errc() || p != v->data() + v->size()) throw ConfigError("[run] seed: cannot parse '" + *v + "'");
    c.seed = s;
  }

  ini.reject_unknown();
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

}  // namespace afe
