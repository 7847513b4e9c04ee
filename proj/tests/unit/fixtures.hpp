#ifndef RERE_TESTS_FIXTURES_HPP
#define RERE_TESTS_FIXTURES_HPP

#include <memory>
#include <string>
#include <vector>

#include "rere/datamodel.hpp"
#include "rere/encoder.hpp"
#include "rere/log.hpp"

namespace fixtures {

inline std::vector<std::string> words(std::initializer_list<const char*> w) { return {w.begin(), w.end()}; }

inline rere::RelationCatalog two_relations() {
  rere::RelationCatalog c;
  c.add("born_in", "born in");
  c.add("works_for", "works for");
  return c;
}

inline std::unique_ptr<rere::RecurrentEncoder> tiny_encoder(int d = 8, std::uint64_t seed = 3) {
  auto vocab = rere::Vocabulary::from_tokens(words({"Ann", "Bob", "Rome", "Acme", "was", "born", "in", "works", "for"}));
  rere::EncoderConfig cfg;
  cfg.vocab_size = vocab.size();
  cfg.embedding_dim = d;
  cfg.hidden_dim = d;
  cfg.dropout = 0.0;
  cfg.seed = seed;
  return std::make_unique<rere::RecurrentEncoder>(cfg, vocab);
}

// Collects warnings instead of printing them for the lifetime of the object.
struct CaptureWarnings {
  std::vector<std::string> seen;
  rere::log::Sink previous;
  CaptureWarnings() {
    previous = rere::log::set_warning_sink([this](std::string_view m) { seen.emplace_back(m); });
  }
  ~CaptureWarnings() { rere::log::set_warning_sink(previous); }
  CaptureWarnings(const CaptureWarnings&) = delete;
  CaptureWarnings& operator=(const CaptureWarnings&) = delete;
};

}  // namespace fixtures

#endif  // RERE_TESTS_FIXTURES_HPP
