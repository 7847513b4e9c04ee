#include "rere/audit.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <tuple>

#include <json.hpp>

#include "rere/errors.hpp"
#include "rere/labels.hpp"
#include "rere/log.hpp"
#include "rere/nn.hpp"
#include "rere/pu_loss.hpp"

namespace rere::audit {

using json = nlohmann::json;

// --- KB store ------------------------------------------------------------

void KbTripleStore::add(KbTriple triple) {
  if (seen_.insert(triple).second) triples_.push_back(std::move(triple));
}

void KbTripleStore::map_relation(const std::string& kb_relation, RelationId target) {
  auto& targets = mapping_[kb_relation];
  if (std::find(targets.begin(), targets.end(), target) == targets.end()) targets.push_back(target);
}

void KbTripleStore::validate(const RelationCatalog& catalog) const {
  for (const auto& [name, targets] : mapping_)
    for (RelationId id : targets)
      if (!catalog.contains(id))
        throw CatalogError("mapping of KB relation '" + name + "' targets id " + std::to_string(id.value) +
                           " outside the catalog");
}

std::vector<RelationId> KbTripleStore::targets(const std::string& kb_relation, const RelationCatalog& catalog) const {
  if (auto it = mapping_.find(kb_relation); it != mapping_.end()) return it->second;
  if (auto id = catalog.find(kb_relation)) return {*id};
  return {};
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  if (!fields.empty() && !fields.back().empty() && fields.back().back() == '\r') fields.back().pop_back();
  return fields;
}

bool skippable(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos || line.front() == '#';
}

}  // namespace

KbTripleStore read_kb_tsv(std::istream& in) {
  KbTripleStore kb;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    auto f = split_tabs(line);
    if (f.size() != 3) throw ParseError("expected subject<TAB>relation<TAB>object", lineno);
    if (f[0].empty() || f[1].empty() || f[2].empty()) throw ParseError("empty KB field", lineno);
    kb.add({f[0], f[1], f[2]});
  }
  return kb;
}

KbTripleStore load_kb_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return read_kb_tsv(in);
}

void read_relation_mapping(std::istream& in, const RelationCatalog& catalog, KbTripleStore& kb) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    auto f = split_tabs(line);
    if (f.size() != 2) throw ParseError("expected kb_relation<TAB>catalog_relation", lineno);
    auto id = catalog.find(f[1]);
    if (!id) throw CatalogError("line " + std::to_string(lineno) + ": mapping target '" + f[1] + "' not in catalog");
    kb.map_relation(f[0], *id);
  }
}

// --- distant labeling ----------------------------------------------------

Dataset distant_label(std::span<const std::vector<std::string>> sentences, const KbTripleStore& kb,
                      const RelationCatalog& catalog, const std::set<RelationId>* keep) {
  kb.validate(catalog);
  struct Fact {
    std::vector<std::string> subject, object;
    std::vector<RelationId> relations;
  };
  std::vector<Fact> facts;
  for (const auto& t : kb.triples()) {
    Fact f;
    for (RelationId id : kb.targets(t.relation, catalog))
      if (!keep || keep->count(id)) f.relations.push_back(id);
    if (f.relations.empty()) continue;
    try {
      f.subject = tokenize_words(t.subject);
      f.object = tokenize_words(t.object);
    } catch (const EmptyInput&) {
      continue;
    }
    facts.push_back(std::move(f));
  }

  Dataset ds;
  ds.catalog = catalog;
  ds.instances.reserve(sentences.size());
  for (const auto& tokens : sentences) {
    LabeledInstance inst;
    inst.tokens = tokens;
    std::set<std::string_view> vocab(tokens.begin(), tokens.end());
    for (const auto& f : facts) {
      if (!vocab.count(f.subject.front()) || !vocab.count(f.object.front())) continue;
      auto s = find_first(tokens, f.subject);
      if (!s) continue;
      auto o = find_first(tokens, f.object);
      if (!o) continue;
      for (RelationId id : f.relations) inst.add_triple({*s, id, *o});
    }
    ds.instances.push_back(std::move(inst));
  }
  return ds;
}

// --- false negative rates ------------------------------------------------

FnrReport fnr_from_counts(std::size_t original, std::size_t relabeled, std::size_t union_count) {
  FnrReport r;
  r.count_original = original;
  r.count_relabeled = relabeled;
  r.count_union = union_count;
  r.count_intersection = original + relabeled >= union_count ? original + relabeled - union_count : 0;
  if (union_count > 0) {
    r.fnr_original = 1.0 - static_cast<double>(original) / static_cast<double>(union_count);
    r.fnr_relabeled = 1.0 - static_cast<double>(relabeled) / static_cast<double>(union_count);
  }
  return r;
}

FnrReport fnr_report(const Dataset& original, const Dataset& relabeled) {
  if (original.size() != relabeled.size())
    throw AlignmentError("datasets have " + std::to_string(original.size()) + " and " +
                         std::to_string(relabeled.size()) + " sentences");
  using Key = std::tuple<Span, std::string, Span>;
  auto keys = [](const LabeledInstance& inst, const RelationCatalog& catalog) {
    std::set<Key> out;
    for (const auto& t : inst.triples) out.emplace(t.subject, catalog.at(t.relation).name, t.object);
    return out;
  };
  std::size_t n_orig = 0, n_relab = 0, n_union = 0;
  for (std::size_t i = 0; i < original.size(); ++i) {
    const auto& a = original.instances[i];
    const auto& b = relabeled.instances[i];
    if (a.tokens != b.tokens) throw AlignmentError("sentence " + std::to_string(i) + " differs between the datasets");
    const auto ka = keys(a, original.catalog);
    const auto kb = keys(b, relabeled.catalog);
    std::size_t common = 0;
    for (const auto& k : ka) common += kb.count(k);
    n_orig += ka.size();
    n_relab += kb.size();
    n_union += ka.size() + kb.size() - common;
  }
  return fnr_from_counts(n_orig, n_relab, n_union);
}

// --- class priors --------------------------------------------------------

Paradigm parse_paradigm(std::string_view text) {
  if (text == "P1" || text == "p1") return Paradigm::kP1;
  if (text == "P2" || text == "p2") return Paradigm::kP2;
  if (text == "P3" || text == "p3") return Paradigm::kP3;
  throw ConfigError("paradigm must be P1, P2 or P3, got '" + std::string(text) + "'");
}

std::string_view to_string(Paradigm p) {
  switch (p) {
    case Paradigm::kP1:
      return "P1";
    case Paradigm::kP2:
      return "P2";
    case Paradigm::kP3:
      break;
  }
  return "P3";
}

namespace {

// Subject-first tagging: per instance the subject start/end tags, and per
// distinct subject the object start/end tags across every relation.
PriorReport p2_priors(const Dataset& ds) {
  const double n_mean = ds.mean_length();
  const double r = static_cast<double>(ds.catalog.size());
  double pi1_sum = 0.0, pi2_sum = 0.0;
  std::size_t subjects_total = 0;
  for (const auto& inst : ds.instances) {
    std::set<std::size_t> starts, ends;
    std::set<Span> subjects;
    for (const auto& t : inst.triples) {
      starts.insert(t.subject.start);
      ends.insert(t.subject.end);
      subjects.insert(t.subject);
    }
    pi1_sum += static_cast<double>(starts.size() + ends.size()) / n_mean;
    for (const auto& s : subjects) {
      std::set<std::pair<std::uint32_t, std::size_t>> o_starts, o_ends;
      for (const auto& t : inst.triples) {
        if (t.subject != s) continue;
        o_starts.emplace(t.relation.value, t.object.start);
        o_ends.emplace(t.relation.value, t.object.end);
      }
      pi2_sum += static_cast<double>(o_starts.size() + o_ends.size()) / (n_mean * r);
      ++subjects_total;
    }
  }
  if (subjects_total == 0) throw EmptyInput("no subjects to estimate the P2 object-tagging prior from");
  PriorReport out;
  out.paradigm = Paradigm::kP2;
  out.pi1 = pi1_sum / static_cast<double>(ds.size());
  out.pi2 = pi2_sum / static_cast<double>(subjects_total);
  return out;
}

}  // namespace

PriorReport class_priors(const Dataset& dataset, Paradigm paradigm) {
  if (dataset.empty()) throw EmptyInput("cannot compute class priors of an empty dataset");
  if (dataset.catalog.empty()) throw EmptyInput("cannot compute class priors with an empty catalog");
  PriorReport out;
  out.paradigm = paradigm;
  switch (paradigm) {
    case Paradigm::kP1:
      out.pi2 = pu::estimate_prior(dataset, pu::Task::kRelation);
      return out;
    case Paradigm::kP2:
      return p2_priors(dataset);
    case Paradigm::kP3:
      break;
  }
  out.pi1 = pu::estimate_prior(dataset, pu::Task::kRelation);
  out.pi2 = pu::estimate_prior(dataset, pu::Task::kEntity);
  return out;
}

// --- false negative synthesis -------------------------------------------

Dataset synthesize_fn(const Dataset& dataset, double removal_prob, std::uint64_t seed) {
  if (!(removal_prob >= 0.0 && removal_prob < 1.0))
    throw ConfigError("removal probability must lie in [0,1), got " + std::to_string(removal_prob));
  nn::Rng rng(seed);
  Dataset out;
  out.catalog = dataset.catalog;
  out.instances.reserve(dataset.size());
  for (const auto& inst : dataset.instances) {
    LabeledInstance copy;
    copy.tokens = inst.tokens;
    for (const auto& t : inst.triples)
      if (!rng.bernoulli(removal_prob)) copy.triples.push_back(t);
    out.instances.push_back(std::move(copy));
  }
  return out;
}

PredictionSet kb_match_baseline(const Dataset& test, const KbTripleStore& kb, const std::set<RelationId>& keep) {
  for (RelationId id : keep)
    if (!test.catalog.contains(id)) throw CatalogError("kept relation id " + std::to_string(id.value) + " not in catalog");
  std::vector<std::vector<std::string>> sentences;
  sentences.reserve(test.size());
  for (const auto& inst : test.instances) sentences.push_back(inst.tokens);
  return as_predictions(distant_label(sentences, kb, test.catalog, &keep));
}

std::string fnr_json(const FnrReport& r, int indent) {
  return json{{"count_original", r.count_original},
              {"count_relabeled", r.count_relabeled},
              {"count_intersection", r.count_intersection},
              {"count_union", r.count_union},
              {"fnr_original", r.fnr_original},
              {"fnr_relabeled", r.fnr_relabeled}}
      .dump(indent);
}

std::string priors_json(const PriorReport& r, int indent) {
  json j{{"paradigm", std::string(to_string(r.paradigm))}, {"pi2", r.pi2}};
  j["pi1"] = r.pi1 ? json(*r.pi1) : json(nullptr);
  return j.dump(indent);
}

}  // namespace rere::audit
