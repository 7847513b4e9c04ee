#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "rere/audit.hpp"
#include "rere/errors.hpp"
#include "rere/evalkit.hpp"
#include "rere/synthetic.hpp"

namespace rere::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Context {
  RunConfig config;
  std::ostream& out;
  std::ostream& err;
};

json echo(const RunConfig& c) { return c.values(); }

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f) throw Error("failed writing " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

fs::path out_dir(const RunConfig& c) {
  c.require("out");
  const auto dir = c.path("out");
  fs::create_directories(dir);
  return dir;
}

// JSON reports go to the `out` file when set, stdout otherwise.
void emit_report(Context& ctx, const json& report) {
  if (ctx.config.has("out"))
    write_json(ctx.config.path("out"), report);
  else
    ctx.out << report.dump(2) << "\n";
}

Dataset load_dataset(const RunConfig& c, const std::string& key, const RelationCatalog* catalog = nullptr) {
  c.require_input(key);
  if (catalog) {
    std::ifstream in(c.path(key));
    return read_canonical(in, *catalog);
  }
  std::optional<fs::path> catalog_path;
  if (c.has("data.catalog")) {
    c.require_input("data.catalog");
    catalog_path = c.path("data.catalog");
  }
  return import_canonical(c.path(key), catalog_path);
}

void write_dataset(const fs::path& dir, const Dataset& ds) {
  export_canonical(ds, dir / "data.jsonl", dir / "catalog.json");
}

std::set<RelationId> kept_relations(const RunConfig& c, const RelationCatalog& catalog) {
  std::set<RelationId> keep;
  const auto names = c.texts("kb.keep");
  if (names.empty()) {
    for (const auto& e : catalog.entries()) keep.insert(e.id);
  } else {
    for (const auto& n : names) keep.insert(catalog.id_of(n));
  }
  return keep;
}

audit::KbTripleStore load_kb(const RunConfig& c, const RelationCatalog& catalog) {
  c.require_input("kb.path");
  auto kb = audit::load_kb_tsv(c.path("kb.path"));
  if (c.has("kb.mapping")) {
    c.require_input("kb.mapping");
    std::ifstream in(c.path("kb.mapping"));
    audit::read_relation_mapping(in, catalog, kb);
  }
  return kb;
}

// --- commands --------------------------------------------------------------

int cmd_import(Context& ctx) {
  auto& c = ctx.config;
  c.require_input("data.input");
  ImportStats stats;
  const auto ds = import_nyt_jsonl(c.path("data.input"), &stats);
  const auto dir = out_dir(c);
  write_dataset(dir, ds);
  json report{{"config", echo(c)},
              {"sentences", ds.size()},
              {"relations", ds.catalog.size()},
              {"triples", ds.triple_count()},
              {"lines", stats.lines},
              {"mentions", stats.mentions},
              {"unresolved_mentions", stats.unresolved_mentions},
              {"na_mentions", stats.na_mentions}};
  write_json(dir / "import.json", report);
  ctx.out << "imported " << ds.size() << " sentences, " << ds.triple_count() << " triples, " << ds.catalog.size()
          << " relations\n";
  return kOk;
}

int cmd_label(Context& ctx) {
  auto& c = ctx.config;
  c.require_input("data.sentences");
  c.require_input("data.catalog");
  const auto catalog = load_catalog(c.path("data.catalog"));
  const auto kb = load_kb(c, catalog);
  std::vector<std::vector<std::string>> sentences;
  std::ifstream in(c.path("data.sentences"));
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    sentences.push_back(tokenize_words(line));
  }
  const auto keep = kept_relations(c, catalog);
  const auto ds = audit::distant_label(sentences, kb, catalog, &keep);
  const auto dir = out_dir(c);
  write_dataset(dir, ds);
  write_json(dir / "label.json", {{"config", echo(c)}, {"sentences", ds.size()}, {"triples", ds.triple_count()}});
  ctx.out << "labeled " << ds.size() << " sentences with " << ds.triple_count() << " triples\n";
  return kOk;
}

int cmd_audit(Context& ctx, const std::string& report) {
  auto& c = ctx.config;
  json result;
  if (report == "fnr") {
    audit::FnrReport r;
    const auto counts = c.get("audit.counts").get<std::vector<std::uint64_t>>();
    if (!counts.empty()) {
      if (counts.size() != 3) throw ConfigError("audit.counts needs original,relabeled,union");
      if (counts[2] < std::max(counts[0], counts[1]) || counts[2] > counts[0] + counts[1])
        throw ConfigError("audit.counts: union must lie between max(original, relabeled) and their sum");
      r = audit::fnr_from_counts(counts[0], counts[1], counts[2]);
    } else {
      r = audit::fnr_report(load_dataset(c, "audit.original"), load_dataset(c, "audit.relabeled"));
    }
    result = json::parse(audit::fnr_json(r, -1));
  } else if (report == "priors") {
    const auto p = audit::class_priors(load_dataset(c, "data.input"), audit::parse_paradigm(c.text("audit.paradigm")));
    result = json::parse(audit::priors_json(p, -1));
  } else if (report == "kb-match") {
    const auto test = load_dataset(c, "data.test");
    const auto kb = load_kb(c, test.catalog);
    const auto predictions = audit::kb_match_baseline(test, kb, kept_relations(c, test.catalog));
    if (c.has("audit.predictions")) export_predictions(predictions, c.path("audit.predictions"));
    const auto mode = eval::parse_match_mode(c.text("eval.match"));
    result = json::parse(eval::metrics_json(eval::score(predictions, test, mode), -1));
    result["match"] = std::string(eval::to_string(mode));
  } else {
    throw ConfigError("audit report must be fnr, priors or kb-match, got '" + report + "'");
  }
  emit_report(ctx, {{"report", report}, {"config", echo(c)}, {"result", result}});
  return kOk;
}

int cmd_synthesize(Context& ctx) {
  auto& c = ctx.config;
  const auto ds = load_dataset(c, "data.input");
  const std::uint64_t seed = c.has("fn.seed") ? c.get("fn.seed").get<std::uint64_t>() : c.seed();
  const auto noisy = audit::synthesize_fn(ds, c.number("fn.rate"), seed);
  const auto dir = out_dir(c);
  write_dataset(dir, noisy);
  write_json(dir / "synthesize.json", {{"config", echo(c)},
                                       {"triples_before", ds.triple_count()},
                                       {"triples_after", noisy.triple_count()}});
  ctx.out << "kept " << noisy.triple_count() << " of " << ds.triple_count() << " triples\n";
  return kOk;
}

Checkpoint load_models(const RunConfig& c) {
  c.require("checkpoint");
  auto cp = load_checkpoint(c.path("checkpoint"));
  if (c.has("checkpoint.ee")) {
    auto ee_part = load_checkpoint(c.path("checkpoint.ee"), &cp.catalog);
    cp = merge_checkpoints(std::move(cp), std::move(ee_part));
  }
  if (!cp.rc || !cp.ee) throw CheckpointError("extraction needs both a relation classifier and an entity extractor");
  return cp;
}

// Trains the configured stage(s); log lines go to `log` when non-null.
Checkpoint train_models(Context& ctx, const Dataset& train, const Dataset& dev, pu::LossKind loss,
                        std::ostream* log, bool quiet) {
  auto& c = ctx.config;
  const std::string stage = c.text("train.stage");
  if (stage != "rc" && stage != "ee" && stage != "both")
    throw ConfigError("train.stage must be rc, ee or both, got '" + stage + "'");
  auto sink_for = [&](Stage s) -> TrainLogSink {
    return [&, s](const TrainLogEntry& e) {
      json line = json::parse(to_json_line(e));
      line["stage"] = std::string(to_string(s));
      if (log) *log << line.dump() << "\n";
      if (!quiet)
        ctx.err << to_string(s) << " epoch " << e.epoch << " loss " << e.loss << " dev_f1 " << e.dev_f1 << "\n";
    };
  };
  auto config_for = [&](Stage s) {
    auto tc = c.train_config(s);
    tc.loss = loss;
    return tc;
  };

  Checkpoint rc_part, ee_part;
  if (stage != "ee") rc_part = train_stage(train, dev, config_for(Stage::kRc), sink_for(Stage::kRc));
  if (stage != "rc") {
    const RelationClassifier* share = nullptr;
    Checkpoint given;
    if (c.flag("encoder.share_embeddings")) {
      if (stage == "both") {
        share = &*rc_part.rc;
      } else {
        c.require("checkpoint");
        given = load_checkpoint(c.path("checkpoint"), &train.catalog);
        if (!given.rc) throw CheckpointError("embedding sharing needs a checkpoint with a relation classifier");
        share = &*given.rc;
      }
    }
    ee_part = train_stage(train, dev, config_for(Stage::kEe), sink_for(Stage::kEe), share);
  }
  Checkpoint out;
  if (stage == "both") {
    out = merge_checkpoints(std::move(rc_part), std::move(ee_part));
  } else {
    out = stage == "rc" ? std::move(rc_part) : std::move(ee_part);
  }
  json cfg = json::parse(out.config_json);
  out.config_json = json{{"run", echo(c)}, {"stages", cfg}}.dump();
  return out;
}

int cmd_train(Context& ctx) {
  auto& c = ctx.config;
  const auto train = load_dataset(c, "data.train");
  Dataset dev;
  if (c.has("data.dev")) dev = load_dataset(c, "data.dev", &train.catalog);
  const auto dir = out_dir(c);
  std::ostringstream log;
  const auto cp = train_models(ctx, train, dev, pu::parse_loss_kind(c.text("loss.kind")), &log, false);
  save_checkpoint(cp, dir / "checkpoint.json");
  write_text(dir / "train_log.jsonl", log.str());
  write_json(dir / "config.json", echo(c));
  ctx.out << "wrote " << (dir / "checkpoint.json").string() << "\n";
  return kOk;
}

int cmd_extract(Context& ctx) {
  auto& c = ctx.config;
  const auto cp = load_models(c);
  const auto data = load_dataset(c, "data.input", &cp.catalog);
  const auto predictions = predict_corpus(data, *cp.rc, *cp.ee, c.inference());
  const auto dir = out_dir(c);
  export_predictions(predictions, dir / "predictions.jsonl");
  write_json(dir / "config.json", {{"run", echo(c)}, {"checkpoint", json::parse(cp.config_json)}});
  ctx.out << "wrote " << (dir / "predictions.jsonl").string() << "\n";
  return kOk;
}

int cmd_evaluate(Context& ctx) {
  auto& c = ctx.config;
  PredictionSet predictions;
  Dataset gold;
  if (c.has("data.predictions")) {
    gold = load_dataset(c, "data.test");
    c.require_input("data.predictions");
    predictions = import_predictions(c.path("data.predictions"), gold.catalog);
  } else if (c.has("checkpoint")) {
    const auto cp = load_models(c);
    gold = c.has("data.catalog") ? load_dataset(c, "data.test") : load_dataset(c, "data.test", &cp.catalog);
    predictions = predict_corpus(gold, *cp.rc, *cp.ee, c.inference());
  } else {
    throw ConfigError("evaluate needs data.predictions or checkpoint");
  }
  const auto mode = eval::parse_match_mode(c.text("eval.match"));
  const auto metrics = eval::score(predictions, gold, mode);
  if (c.has("eval.pr_curve")) {
    const auto steps = c.integer("eval.pr_steps");
    if (steps < 0) throw ConfigError("eval.pr_steps must be >= 0");
    const auto curve = eval::pr_curve(predictions, gold, mode, static_cast<std::size_t>(steps));
    std::ostringstream csv;
    eval::write_pr_csv(curve, csv);
    const auto path = c.path("eval.pr_curve");
    write_text(path, csv.str());
    write_json(fs::path(path.string() + ".config.json"), echo(c));
  }
  json report{{"config", echo(c)}, {"match", std::string(eval::to_string(mode))},
              {"metrics", json::parse(eval::metrics_json(metrics, -1))}};
  emit_report(ctx, report);
  return kOk;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int cmd_sweep(Context& ctx) {
  auto& c = ctx.config;
  const auto train = load_dataset(c, "data.train");
  const auto test = load_dataset(c, "data.test", &train.catalog);
  Dataset dev;
  if (c.has("data.dev")) dev = load_dataset(c, "data.dev", &train.catalog);
  const auto rates = c.numbers("sweep.fn_rates");
  const auto seeds = c.get("sweep.seeds").get<std::vector<std::uint64_t>>();
  std::vector<pu::LossKind> losses;
  for (const auto& l : c.texts("sweep.losses")) losses.push_back(pu::parse_loss_kind(l));
  if (seeds.empty() || losses.empty() || rates.empty()) throw ConfigError("sweep needs seeds, losses and FN rates");
  const auto mode = eval::parse_match_mode(c.text("eval.match"));
  const auto dir = out_dir(c);
  const std::string stage_setting = c.text("train.stage");
  if (stage_setting != "both") throw ConfigError("sweep trains the full pipeline; train.stage must be both");

  json per_seed = json::array();
  std::ostringstream csv;
  csv << "seed,fn_rate,loss,precision,recall,f1,delta_f1\n";
  std::map<std::pair<double, std::string>, std::vector<double>> f1s, deltas;
  for (auto seed : seeds) {
    Context run{c, ctx.out, ctx.err};
    run.config.set_text("seed", std::to_string(seed));
    std::vector<eval::FnVariant> variants;
    for (double r : rates) variants.push_back({r, r == 0.0 ? train : audit::synthesize_fn(train, r, seed)});
    auto trainer = [&](const Dataset& t, pu::LossKind loss) {
      double rate = 0.0;
      for (const auto& v : variants)
        if (&v.train == &t) rate = v.fn_rate;
      ctx.err << "sweep seed " << seed << " fn_rate " << rate << " loss " << pu::to_string(loss) << "\n";
      const auto cp = train_models(run, t, dev, loss, nullptr, true);
      return predict_corpus(test, *cp.rc, *cp.ee, run.config.inference());
    };
    const auto report = eval::robustness_sweep(variants, test, trainer, losses, mode);
    per_seed.push_back({{"seed", seed}, {"report", json::parse(eval::robustness_json(report, -1))}});
    for (const auto& row : report.rows) {
      const std::string loss(pu::to_string(row.loss));
      f1s[{row.fn_rate, loss}].push_back(row.metrics.f1);
      deltas[{row.fn_rate, loss}].push_back(row.delta_f1);
      csv << seed << ',' << json(row.fn_rate).dump() << ',' << loss << ',' << json(row.metrics.precision).dump() << ','
          << json(row.metrics.recall).dump() << ',' << json(row.metrics.f1).dump() << ','
          << json(row.delta_f1).dump() << '\n';
    }
  }

  json medians = json::array();
  for (const auto& [key, values] : f1s)
    medians.push_back({{"fn_rate", key.first},
                       {"loss", key.second},
                       {"median_f1", median(values)},
                       {"median_delta_f1", median(deltas[key])}});
  json report{{"config", echo(c)}, {"match", std::string(eval::to_string(mode))}, {"seeds", per_seed},
              {"median", medians}};
  write_json(dir / "robustness.json", report);
  write_text(dir / "robustness.csv", csv.str());
  write_json(dir / "robustness.csv.config.json", echo(c));
  ctx.out << "wrote " << (dir / "robustness.json").string() << "\n";
  return kOk;
}

int cmd_synth(Context& ctx) {
  auto& c = ctx.config;
  auto count = [&](const char* key) {
    const auto v = c.integer(key);
    if (v < 0) throw ConfigError(std::string(key) + " must be >= 0");
    return static_cast<std::size_t>(v);
  };
  const auto corpus = synthetic::generate({count("synth.train"), count("synth.dev"), count("synth.test"), c.seed()});
  const auto dir = out_dir(c);
  save_catalog(corpus.catalog, dir / "catalog.json");
  for (const auto& [name, ds] : {std::pair<const char*, const Dataset*>{"train", &corpus.train},
                                 {"dev", &corpus.dev},
                                 {"test", &corpus.test}}) {
    std::ostringstream buf;
    write_canonical(*ds, buf);
    write_text(dir / (std::string(name) + ".jsonl"), buf.str());
  }
  write_json(dir / "synth.json", {{"config", echo(c)},
                                  {"train", corpus.train.size()},
                                  {"dev", corpus.dev.size()},
                                  {"test", corpus.test.size()}});
  ctx.out << "wrote synthetic corpus to " << dir.string() << "\n";
  return kOk;
}

// --- argument handling -----------------------------------------------------

// Turns the leftover "--key value" / "--key=value" arguments into overrides.
void apply_overrides(RunConfig& config, const std::vector<std::string>& extras) {
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& a = extras[i];
    if (a.rfind("--", 0) != 0 || a.size() < 3) throw ConfigError("unexpected argument '" + a + "'");
    std::string key = a.substr(2), value;
    if (auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key = key.substr(0, eq);
    } else {
      if (i + 1 >= extras.size()) throw ConfigError("missing value for --" + key);
      value = extras[++i];
    }
    config.set_text(key, value);
  }
}

std::string key_help() {
  std::ostringstream s;
  s << "\nConfig keys (JSON file via --config, or --key value):\n";
  for (const auto& [k, h] : config_keys()) s << "  " << k << std::string(k.size() < 28 ? 28 - k.size() : 1, ' ') << h << "\n";
  return s.str();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"rere: two-stage relation extraction with a collective PU loss"};
  app.require_subcommand(1);
  app.footer(key_help());
  std::string config_file;
  std::string audit_report;
  struct Command {
    const char* name;
    const char* help;
    CLI::App* app = nullptr;
  };
  std::vector<Command> commands{{"import", "convert NYT-style JSON lines into a canonical dataset"},
                                {"label", "distantly label raw sentences from a KB"},
                                {"audit", "fnr | priors | kb-match reports"},
                                {"synthesize-fn", "drop gold triples at a fixed rate"},
                                {"train", "train stage rc, ee or both"},
                                {"extract", "run the pipeline over a dataset"},
                                {"evaluate", "micro P/R/F1 and PR curve"},
                                {"sweep", "FN-rate robustness sweep over losses and seeds"},
                                {"synth", "write the templated synthetic corpus"}};
  for (auto& cmd : commands) {
    cmd.app = app.add_subcommand(cmd.name, cmd.help);
    cmd.app->allow_extras();
    cmd.app->add_option("--config", config_file, "JSON config file");
    if (std::string(cmd.name) == "audit")
      cmd.app->add_option("report", audit_report, "fnr | priors | kb-match")->required();
  }

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kBadInput;
  }

  try {
    Context ctx{RunConfig{}, out, err};
    const Command* chosen = nullptr;
    for (const auto& cmd : commands)
      if (cmd.app->parsed()) chosen = &cmd;
    if (!config_file.empty()) ctx.config.merge_file(config_file);
    apply_overrides(ctx.config, chosen->app->remaining());
    ctx.config.apply_seed_fallback(std::getenv("RERE_SEED"));

    const std::string name = chosen->name;
    if (name == "import") return cmd_import(ctx);
    if (name == "label") return cmd_label(ctx);
    if (name == "audit") return cmd_audit(ctx, audit_report);
    if (name == "synthesize-fn") return cmd_synthesize(ctx);
    if (name == "train") return cmd_train(ctx);
    if (name == "extract") return cmd_extract(ctx);
    if (name == "evaluate") return cmd_evaluate(ctx);
    if (name == "sweep") return cmd_sweep(ctx);
    return cmd_synth(ctx);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const TrainingError& e) {
    err << "error: training failed: " << e.what() << "\n";
    return kTrainingFailed;
  } catch (const CheckpointError& e) {
    err << "error: " << e.what() << "\n";
    return kCheckpointFailed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace rere::cli
