#include <charconv>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "rere/errors.hpp"

namespace rere::cli {

using json = nlohmann::json;

namespace {

enum class Kind { kInt, kUInt, kNumber, kOptNumber, kText, kBool, kPath, kNumberList, kUIntList, kTextList };

struct KeySpec {
  const char* name;
  Kind kind;
  json fallback;
  const char* help;
};

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = [] {
    const TrainConfig t;
    const InferenceOptions inf;
    return std::vector<KeySpec>{
        {"seed", Kind::kUInt, 1, "master seed (falls back to RERE_SEED)"},
        {"out", Kind::kPath, nullptr, "output directory (file for audit/evaluate reports)"},
        {"data.input", Kind::kPath, nullptr, "input dataset or NYT-style file"},
        {"data.train", Kind::kPath, nullptr, "training set (canonical JSONL)"},
        {"data.dev", Kind::kPath, nullptr, "dev set for model selection"},
        {"data.test", Kind::kPath, nullptr, "test / gold set"},
        {"data.catalog", Kind::kPath, nullptr, "relation catalog JSON"},
        {"data.predictions", Kind::kPath, nullptr, "predictions JSONL"},
        {"data.sentences", Kind::kPath, nullptr, "raw sentences, one per line"},
        {"kb.path", Kind::kPath, nullptr, "KB triples TSV"},
        {"kb.mapping", Kind::kPath, nullptr, "KB relation -> catalog relation TSV"},
        {"kb.keep", Kind::kTextList, json::array(), "relation names to keep (empty = all)"},
        {"audit.original", Kind::kPath, nullptr, "original labeling"},
        {"audit.relabeled", Kind::kPath, nullptr, "relabeled labeling"},
        {"audit.counts", Kind::kUIntList, json::array(), "original,relabeled,union counts"},
        {"audit.paradigm", Kind::kText, "P3", "P1 | P2 | P3"},
        {"audit.predictions", Kind::kPath, nullptr, "where kb-match writes its predictions"},
        {"fn.rate", Kind::kNumber, 0.0, "triple removal probability"},
        {"fn.seed", Kind::kUInt, nullptr, "removal seed (defaults to seed)"},
        {"train.stage", Kind::kText, "both", "rc | ee | both"},
        {"train.epochs", Kind::kInt, t.epochs, "maximum epochs per stage"},
        {"train.batch_size", Kind::kInt, t.batch_size, "minibatch size"},
        {"train.lr", Kind::kNumber, t.learning_rate, "learning rate"},
        {"train.optimizer", Kind::kText, t.optimizer, "adam"},
        {"train.patience", Kind::kInt, t.patience, "early-stopping patience"},
        {"train.negative_query_prob", Kind::kNumber, t.negative_query_prob, "stage-2 negative query rate"},
        {"train.grad_clip", Kind::kNumber, t.grad_clip, "gradient norm clip (<= 0 off)"},
        {"loss.kind", Kind::kText, std::string(pu::to_string(t.loss)), "cpu | bce"},
        {"loss.bce_positive_weight", Kind::kNumber, t.bce_positive_weight, "BCE positive-class weight"},
        {"pu.pi_rc", Kind::kOptNumber, nullptr, "stage-1 class prior (null = estimate)"},
        {"pu.pi_ee", Kind::kOptNumber, nullptr, "stage-2 class prior (null = estimate)"},
        {"pu.tau", Kind::kNumber, t.tau, "false-negative ratio"},
        {"pu.gamma_rc", Kind::kNumber, t.gamma, "stage-1 positive weight"},
        {"pu.gamma_ee", Kind::kNumber, t.gamma, "stage-2 positive weight"},
        {"pu.epsilon", Kind::kNumber, t.epsilon, "log clamp"},
        {"encoder.embedding_dim", Kind::kInt, t.encoder.embedding_dim, "token embedding width"},
        {"encoder.hidden_dim", Kind::kInt, t.encoder.hidden_dim, "representation width d"},
        {"encoder.layers", Kind::kInt, t.encoder.layers, "BiLSTM layers"},
        {"encoder.dropout", Kind::kNumber, t.encoder.dropout, "dropout rate"},
        {"encoder.max_length", Kind::kInt, static_cast<long long>(t.encoder.max_length), "max encoder sequence"},
        {"encoder.min_frequency", Kind::kInt, static_cast<long long>(t.min_vocab_frequency), "vocabulary cutoff"},
        {"encoder.share_embeddings", Kind::kBool, false, "seed stage-2 embeddings from stage 1"},
        {"infer.rc_threshold", Kind::kNumber, inf.rc_threshold, "stage-1 decision threshold"},
        {"infer.ee_threshold", Kind::kNumber, inf.ee_threshold, "stage-2 mark threshold"},
        {"infer.combine", Kind::kText, std::string(to_string(inf.combine)), "min | product"},
        {"checkpoint", Kind::kPath, nullptr, "model checkpoint"},
        {"checkpoint.ee", Kind::kPath, nullptr, "separate stage-2 checkpoint to merge"},
        {"eval.match", Kind::kText, "exact", "exact | partial"},
        {"eval.pr_steps", Kind::kInt, 20, "PR curve quantile steps"},
        {"eval.pr_curve", Kind::kPath, nullptr, "write PR curve CSV here"},
        {"sweep.fn_rates", Kind::kNumberList, json::array({0.0, 0.3, 0.5}), "FN rates"},
        {"sweep.seeds", Kind::kUIntList, json::array({1, 2, 3}), "seeds (median over them)"},
        {"sweep.losses", Kind::kTextList, json::array({"cpu", "bce"}), "losses to compare"},
        {"synth.train", Kind::kInt, 5000, "synthetic train sentences"},
        {"synth.dev", Kind::kInt, 500, "synthetic dev sentences"},
        {"synth.test", Kind::kInt, 500, "synthetic test sentences"},
    };
  }();
  return table;
}

const KeySpec& spec_of(const std::string& key) {
  for (const auto& k : key_table())
    if (key == k.name) return k;
  throw ConfigError("unknown config key '" + key + "'");
}

json check_type(const KeySpec& k, const json& v) {
  const std::string name = k.name;
  auto fail = [&](const char* want) -> json { throw ConfigError("config key '" + name + "' expects " + want); };
  if (v.is_null()) {
    if (k.kind == Kind::kOptNumber || k.kind == Kind::kPath || k.fallback.is_null()) return v;
    return fail("a value");
  }
  switch (k.kind) {
    case Kind::kInt:
      return v.is_number_integer() ? v : fail("an integer");
    case Kind::kUInt:
      return v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0) ? json(v.get<std::uint64_t>())
                                                                                          : fail("a non-negative integer");
    case Kind::kNumber:
    case Kind::kOptNumber:
      return v.is_number() ? json(v.get<double>()) : fail("a number");
    case Kind::kText:
    case Kind::kPath:
      return v.is_string() ? v : fail("a string");
    case Kind::kBool:
      return v.is_boolean() ? v : fail("true or false");
    case Kind::kNumberList: {
      if (!v.is_array()) return fail("a list of numbers");
      json out = json::array();
      for (const auto& e : v) out.push_back(e.is_number() ? json(e.get<double>()) : fail("a list of numbers"));
      return out;
    }
    case Kind::kUIntList: {
      if (!v.is_array()) return fail("a list of non-negative integers");
      for (const auto& e : v)
        if (!(e.is_number_unsigned() || (e.is_number_integer() && e.get<long long>() >= 0)))
          return fail("a list of non-negative integers");
      return v;
    }
    case Kind::kTextList: {
      if (!v.is_array()) return fail("a list of strings");
      for (const auto& e : v)
        if (!e.is_string()) return fail("a list of strings");
      return v;
    }
  }
  return v;
}

template <typename T>
T parse_int(const std::string& key, const std::string& text) {
  T v{};
  const auto* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end) throw ConfigError("config key '" + key + "': '" + text + "' is not an integer");
  return v;
}

double parse_double(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw ConfigError("config key '" + key + "': '" + text + "' is not a number");
  return v;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  if (text.empty()) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

void flatten(const json& j, const std::string& prefix, std::vector<std::pair<std::string, json>>& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    bool is_key = false;
    for (const auto& k : key_table()) is_key = is_key || key == k.name;
    if (it->is_object() && !is_key)
      flatten(*it, key, out);
    else
      out.emplace_back(key, *it);
  }
}

}  // namespace

std::vector<std::pair<std::string, std::string>> config_keys() {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : key_table()) out.emplace_back(k.name, k.help);
  return out;
}

RunConfig::RunConfig() : values_(json::object()) {
  for (const auto& k : key_table()) values_[k.name] = k.fallback;
}

void RunConfig::assign(const std::string& key, json value) {
  values_[key] = check_type(spec_of(key), value);
  explicit_.insert(key);
}

void RunConfig::merge_json(const json& object) {
  if (!object.is_object()) throw ConfigError("config file must hold a JSON object");
  std::vector<std::pair<std::string, json>> flat;
  flatten(object, "", flat);
  for (auto& [k, v] : flat) assign(k, std::move(v));
}

void RunConfig::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  merge_json(j);
}

void RunConfig::set_text(const std::string& key, const std::string& value) {
  const auto& k = spec_of(key);
  if (value == "null" && (k.kind == Kind::kOptNumber || k.kind == Kind::kPath || k.fallback.is_null())) {
    assign(key, nullptr);
    return;
  }
  switch (k.kind) {
    case Kind::kInt:
      assign(key, parse_int<long long>(key, value));
      break;
    case Kind::kUInt:
      assign(key, parse_int<std::uint64_t>(key, value));
      break;
    case Kind::kNumber:
    case Kind::kOptNumber:
      assign(key, parse_double(key, value));
      break;
    case Kind::kText:
    case Kind::kPath:
      assign(key, value);
      break;
    case Kind::kBool:
      if (value != "true" && value != "false") throw ConfigError("config key '" + key + "' expects true or false");
      assign(key, value == "true");
      break;
    case Kind::kNumberList: {
      json arr = json::array();
      for (const auto& s : split_list(value)) arr.push_back(parse_double(key, s));
      assign(key, arr);
      break;
    }
    case Kind::kUIntList: {
      json arr = json::array();
      for (const auto& s : split_list(value)) arr.push_back(parse_int<std::uint64_t>(key, s));
      assign(key, arr);
      break;
    }
    case Kind::kTextList: {
      json arr = json::array();
      for (const auto& s : split_list(value)) arr.push_back(s);
      assign(key, arr);
      break;
    }
  }
}

void RunConfig::apply_seed_fallback(const char* env_value) {
  if (explicit_.count("seed") || !env_value || !*env_value) return;
  try {
    set_text("seed", env_value);
  } catch (const ConfigError&) {
    throw ConfigError(std::string("RERE_SEED must be a non-negative integer, got '") + env_value + "'");
  }
}

bool RunConfig::has(const std::string& key) const {
  spec_of(key);
  return !values_.at(key).is_null();
}

const json& RunConfig::get(const std::string& key) const {
  spec_of(key);
  return values_.at(key);
}

double RunConfig::number(const std::string& key) const {
  require(key);
  return get(key).get<double>();
}

long long RunConfig::integer(const std::string& key) const {
  require(key);
  return get(key).get<long long>();
}

std::string RunConfig::text(const std::string& key) const {
  require(key);
  return get(key).get<std::string>();
}

bool RunConfig::flag(const std::string& key) const { return get(key).get<bool>(); }

std::vector<double> RunConfig::numbers(const std::string& key) const { return get(key).get<std::vector<double>>(); }

std::vector<std::string> RunConfig::texts(const std::string& key) const {
  return get(key).get<std::vector<std::string>>();
}

std::filesystem::path RunConfig::path(const std::string& key) const { return text(key); }

void RunConfig::require(const std::string& key) const {
  if (!has(key)) throw ConfigError("missing required config key '" + key + "'");
}

void RunConfig::require_input(const std::string& key) const {
  require(key);
  if (!std::filesystem::exists(path(key)))
    throw ConfigError("config key '" + key + "': no such file " + path(key).string());
}

std::uint64_t RunConfig::seed() const { return get("seed").get<std::uint64_t>(); }

TrainConfig RunConfig::train_config(Stage stage) const {
  const std::string suffix = stage == Stage::kRc ? "_rc" : "_ee";
  auto positive = [&](const std::string& key) {
    const auto v = integer(key);
    if (v < 0) throw ConfigError("config key '" + key + "' must be >= 0");
    return static_cast<std::size_t>(v);
  };
  TrainConfig c;
  c.stage = stage;
  c.epochs = static_cast<int>(integer("train.epochs"));
  c.batch_size = static_cast<int>(integer("train.batch_size"));
  c.learning_rate = number("train.lr");
  c.optimizer = text("train.optimizer");
  c.patience = static_cast<int>(integer("train.patience"));
  c.seed = seed();
  c.loss = pu::parse_loss_kind(text("loss.kind"));
  if (has("pu.pi" + suffix)) c.pi = number("pu.pi" + suffix);
  c.tau = number("pu.tau");
  c.gamma = number("pu.gamma" + suffix);
  c.epsilon = number("pu.epsilon");
  c.bce_positive_weight = number("loss.bce_positive_weight");
  c.negative_query_prob = number("train.negative_query_prob");
  c.grad_clip = number("train.grad_clip");
  c.min_vocab_frequency = positive("encoder.min_frequency");
  c.encoder.embedding_dim = static_cast<int>(integer("encoder.embedding_dim"));
  c.encoder.hidden_dim = static_cast<int>(integer("encoder.hidden_dim"));
  c.encoder.layers = static_cast<int>(integer("encoder.layers"));
  c.encoder.dropout = number("encoder.dropout");
  c.encoder.max_length = positive("encoder.max_length");
  c.rc_threshold = number("infer.rc_threshold");
  c.ee_threshold = number("infer.ee_threshold");
  c.validate();
  return c;
}

InferenceOptions RunConfig::inference() const {
  InferenceOptions o;
  o.rc_threshold = number("infer.rc_threshold");
  o.ee_threshold = number("infer.ee_threshold");
  o.combine = parse_score_combine(text("infer.combine"));
  if (!(o.rc_threshold > 0.0 && o.rc_threshold < 1.0) || !(o.ee_threshold > 0.0 && o.ee_threshold < 1.0))
    throw ConfigError("inference thresholds must lie in (0,1)");
  return o;
}

}  // namespace rere::cli
