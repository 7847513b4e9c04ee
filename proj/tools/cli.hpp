#ifndef RERE_TOOLS_CLI_HPP
#define RERE_TOOLS_CLI_HPP

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "rere/pipeline.hpp"

namespace rere::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kBadInput = 2, kTrainingFailed = 3, kCheckpointFailed = 4 };

// Flat configuration keyed by dotted names ("train.epochs"). Layers, last
// wins: built-in defaults, a JSON config file (nested objects flatten into
// dotted keys), then command-line overrides. Unknown keys are rejected. The
// seed falls back to RERE_SEED when no layer sets it.
class RunConfig {
 public:
  RunConfig();

  void merge_file(const std::filesystem::path& path);
  void merge_json(const nlohmann::json& object);
  void set_text(const std::string& key, const std::string& value);
  void apply_seed_fallback(const char* env_value);

  bool has(const std::string& key) const;  // set and not null
  const nlohmann::json& get(const std::string& key) const;
  double number(const std::string& key) const;
  long long integer(const std::string& key) const;
  std::string text(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<std::string> texts(const std::string& key) const;
  std::filesystem::path path(const std::string& key) const;

  // ConfigError unless the key is set; for inputs also unless the file exists.
  void require(const std::string& key) const;
  void require_input(const std::string& key) const;

  TrainConfig train_config(Stage stage) const;
  InferenceOptions inference() const;
  std::uint64_t seed() const;

  // Every key with its effective value.
  const nlohmann::json& values() const noexcept { return values_; }

 private:
  void assign(const std::string& key, nlohmann::json value);

  nlohmann::json values_;
  std::set<std::string> explicit_;
};

// Key names with a one-line description, for --help output.
std::vector<std::pair<std::string, std::string>> config_keys();

// Entry point shared by the binary and the tests. args excludes argv[0].
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rere::cli

#endif  // RERE_TOOLS_CLI_HPP
