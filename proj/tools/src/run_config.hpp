#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace llm3dti::cli {

// Malformed or unknown configuration; exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
};

// Every recognised key, in dump order.
const std::vector<ConfigKey>& config_keys();

inline constexpr const char* kOutputRootEnv = "LLM3DTI_OUTPUT_ROOT";

// Flat `key = value` configuration. Later sources override earlier ones:
// built-in defaults, the output-root environment variable, a config file,
// then command-line flags.
class RunConfig {
 public:
  RunConfig();

  void set(const std::string& key, const std::string& value);
  // Lines of `key = value`; blank lines and lines starting with '#' are
  // skipped.
  void load_file(const std::filesystem::path& path);
  void load_text(const std::string& text, const std::string& origin);

  const std::string& get(const std::string& key) const;
  bool is_set(const std::string& key) const { return !get(key).empty(); }

  double real(const std::string& key) const;
  std::size_t count(const std::string& key) const;
  std::uint64_t u64(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<std::string> list(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;
  std::vector<std::uint64_t> u64s(const std::string& key) const;

  // Effective configuration in key order, one `key = value` per line.
  std::string dump() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace llm3dti::cli
