#ifndef RERE_AUDIT_HPP
#define RERE_AUDIT_HPP

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rere/datamodel.hpp"

namespace rere::audit {

struct KbTriple {
  std::string subject;
  std::string relation;
  std::string object;

  friend auto operator<=>(const KbTriple&, const KbTriple&) = default;
};

// KB facts plus the table mapping KB relation names onto catalog relations.
// A KB relation without a mapping entry falls back to the catalog relation
// of the same name, and is ignored when there is none.
class KbTripleStore {
 public:
  void add(KbTriple triple);
  void map_relation(const std::string& kb_relation, RelationId target);

  // Every mapping target must exist in the catalog (CatalogError).
  void validate(const RelationCatalog& catalog) const;
  std::vector<RelationId> targets(const std::string& kb_relation, const RelationCatalog& catalog) const;

  const std::vector<KbTriple>& triples() const noexcept { return triples_; }
  const std::map<std::string, std::vector<RelationId>>& mapping() const noexcept { return mapping_; }
  std::size_t size() const noexcept { return triples_.size(); }

 private:
  std::vector<KbTriple> triples_;
  std::set<KbTriple> seen_;
  std::map<std::string, std::vector<RelationId>> mapping_;
};

// subject<TAB>relation<TAB>object per line; blank lines and lines starting
// with '#' are skipped. ParseError (with line number) otherwise.
KbTripleStore read_kb_tsv(std::istream& in);
KbTripleStore load_kb_tsv(const std::filesystem::path& path);
// kb_relation<TAB>catalog_relation_name per line.
void read_relation_mapping(std::istream& in, const RelationCatalog& catalog, KbTripleStore& kb);

// Distant supervision: every KB fact whose subject and object texts both
// occur in a sentence (as token subsequences, first occurrence) labels that
// sentence with each mapped relation. `keep` restricts the relations used.
Dataset distant_label(std::span<const std::vector<std::string>> sentences, const KbTripleStore& kb,
                      const RelationCatalog& catalog, const std::set<RelationId>* keep = nullptr);

struct FnrReport {
  std::size_t count_original = 0;
  std::size_t count_relabeled = 0;
  std::size_t count_intersection = 0;
  std::size_t count_union = 0;
  double fnr_original = 0.0;   // 1 - original / union
  double fnr_relabeled = 0.0;  // 1 - relabeled / union
};

// Compares two labelings of the same sentences. Triples are identified by
// (subject span, relation name, object span). AlignmentError when the
// sentence lists differ.
FnrReport fnr_report(const Dataset& original, const Dataset& relabeled);
FnrReport fnr_from_counts(std::size_t original, std::size_t relabeled, std::size_t union_count);

enum class Paradigm { kP1, kP2, kP3 };
Paradigm parse_paradigm(std::string_view text);  // "P1" | "P2" | "P3"
std::string_view to_string(Paradigm p);

struct PriorReport {
  Paradigm paradigm = Paradigm::kP3;
  std::optional<double> pi1;  // absent for P1
  double pi2 = 0.0;
};

// Class priors of the two tasks under each paradigm:
//  P1  pi2 = E_i[distinct relations / |R|]
//  P2  pi1 = E_i[subject start/end ones / N_mean],
//      pi2 = E_(i,subject)[object start/end ones over all relations / (N_mean |R|)]
//  P3  pi1 = E_i[distinct relations / |R|],
//      pi2 = E_(i,relation)[pointer-grid ones / (4 N_i)]
PriorReport class_priors(const Dataset& dataset, Paradigm paradigm);

// Drops each triple independently with probability removal_prob. Sentences
// and tokens are kept; fully stripped sentences become NA.
Dataset synthesize_fn(const Dataset& dataset, double removal_prob, std::uint64_t seed);

// KB alignment on the test sentences, restricted to `keep`, as predictions
// with confidence 1.
PredictionSet kb_match_baseline(const Dataset& test, const KbTripleStore& kb, const std::set<RelationId>& keep);

std::string fnr_json(const FnrReport& report, int indent = 2);
std::string priors_json(const PriorReport& report, int indent = 2);

}  // namespace rere::audit

#endif  // RERE_AUDIT_HPP
