#ifndef RERE_SYNTHETIC_HPP
#define RERE_SYNTHETIC_HPP

#include <cstddef>
#include <cstdint>

#include "rere/datamodel.hpp"

namespace rere::synthetic {

struct CorpusConfig {
  std::size_t train = 5000;
  std::size_t dev = 500;
  std::size_t test = 500;
  std::uint64_t seed = 7;
};

struct Corpus {
  RelationCatalog catalog;
  Dataset train, dev, test;
};

// Templated English-like sentences over 8 relations (born_in, works_for,
// founded, located_in, headquartered_in, spouse, nationality, capital_of).
// Every sentence carries 1-3 triples; templates include shared entities,
// chained triples, repeated relations, objects preceding their subject and
// distractor entities. Deterministic under the seed.
Corpus generate(const CorpusConfig& config);

// The 8-relation catalog used by generate().
RelationCatalog catalog();

}  // namespace rere::synthetic

#endif  // RERE_SYNTHETIC_HPP
