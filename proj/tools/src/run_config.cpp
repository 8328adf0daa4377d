#include "run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace llm3dti::cli {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  }
  return value;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"networks.dir", "", "directory holding <kind>.tsv edge lists"},
      {"topology.drug", "", "precomputed drug topology embedding (EMB1 or TSV)"},
      {"topology.protein", "", "precomputed protein topology embedding (EMB1 or TSV)"},
      {"text.drug", "", "drug text embeddings (TSV or EMB1)"},
      {"text.protein", "", "protein text embeddings (TSV or EMB1)"},
      {"text.alt_drug", "", "replacement drug text vectors for wo_llm_text"},
      {"text.alt_protein", "", "replacement protein text vectors for wo_llm_text"},
      {"dataset", "", "interaction TSV: drug, protein, label[, split]"},
      {"output.root", "runs", "parent of run directories"},
      {"output.dir", "", "explicit run directory (overrides output.root naming)"},
      {"rwr.restart", "0.5", "restart probability"},
      {"rwr.max_iter", "1000", "power-iteration cap"},
      {"rwr.tol", "1e-08", "max-norm convergence tolerance"},
      {"dca.dim.drug", "100", "drug topology dimension"},
      {"dca.dim.protein", "100", "protein topology dimension"},
      {"dca.center", "true", "center DCA feature columns before the Gram matrix"},
      {"train.epochs", "100", "training epochs"},
      {"train.batch_size", "64", "mini-batch size"},
      {"train.lr", "0.001", "AdamW learning rate"},
      {"train.weight_decay", "1e-06", "AdamW decoupled weight decay"},
      {"train.hidden", "128", "hidden dimension"},
      {"train.loss", "bce", "bce or focal"},
      {"train.focal_gamma", "2", "focal-loss gamma"},
      {"train.focal_alpha", "0.25", "focal-loss alpha"},
      {"train.variant", "full", "full, wo_llm_text, wo_cra or wo_tsfusion"},
      {"seeds", "0,1,2,3,4", "comma-separated seeds"},
      {"negatives.ratio", "1", "negatives per positive"},
      {"split.train", "0.7", "training fraction"},
      {"split.valid", "0.1", "validation fraction"},
      {"split.test", "0.2", "test fraction"},
      {"ablate.variants", "full,wo_llm_text,wo_cra,wo_tsfusion", "variants to compare"},
      {"coldstart.side", "drug", "drug or protein"},
      {"coldstart.fractions", "0.1,0.2,0.3,0.4,0.5", "visible fractions"},
      {"casestudy.holdout", "", "comma-separated entity ids to hold out"},
      {"sweep.param", "batch_size", "batch_size, lr, hidden or ratio"},
      {"sweep.values", "", "comma-separated values"},
      {"sweep.losses", "", "losses for ratio sweeps (default: train.loss)"},
      {"evaluate.checkpoint", "", "checkpoint to evaluate"},
      {"evaluate.dump", "false", "write fused pair representations"},
      {"synth.out", "", "directory for the synthetic world"},
      {"synth.drugs", "100", "synthetic drug count"},
      {"synth.proteins", "150", "synthetic protein count"},
      {"synth.structure_groups", "4", "planted structure groups"},
      {"synth.text_groups", "4", "planted text groups"},
      {"synth.text_dim", "32", "synthetic text dimension"},
      {"synth.text_noise", "0.3", "text noise norm"},
      {"synth.seed", "0", "synthetic world seed"},
  };
  return keys;
}

RunConfig::RunConfig() {
  for (const auto& k : config_keys()) values_[k.name] = k.default_value;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second = value;
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  load_text(buf.str(), path.string());
}

void RunConfig::load_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(n) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    try {
      set(key, trim(std::string_view(t).substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(n) + ": " + e.what());
    }
  }
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

double RunConfig::real(const std::string& key) const { return parse_number<double>(key, get(key)); }

std::size_t RunConfig::count(const std::string& key) const {
  return parse_number<std::size_t>(key, get(key));
}

std::uint64_t RunConfig::u64(const std::string& key) const {
  return parse_number<std::uint64_t>(key, get(key));
}

bool RunConfig::flag(const std::string& key) const {
  const auto& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': expected true or false, got '" + v + "'");
}

std::vector<std::string> RunConfig::list(const std::string& key) const {
  std::vector<std::string> out;
  std::istringstream in(get(key));
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> RunConfig::reals(const std::string& key) const {
  std::vector<double> out;
  for (const auto& s : list(key)) out.push_back(parse_number<double>(key, s));
  return out;
}

std::vector<std::uint64_t> RunConfig::u64s(const std::string& key) const {
  std::vector<std::uint64_t> out;
  for (const auto& s : list(key)) out.push_back(parse_number<std::uint64_t>(key, s));
  return out;
}

std::string RunConfig::dump() const {
  std::string out;
  for (const auto& k : config_keys()) out += k.name + " = " + values_.at(k.name) + "\n";
  return out;
}

}  // namespace llm3dti::cli
