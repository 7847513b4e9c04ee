#include "rere/synthetic.hpp"

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "rere/nn.hpp"

namespace rere::synthetic {

namespace {

constexpr std::string_view kFirstNames[] = {
    "Alice",   "Bruno",  "Carla",   "Dmitri", "Elena",  "Farid",   "Greta",  "Hiro",    "Ines",    "Jonas",
    "Keiko",   "Lars",   "Maria",   "Nikhil", "Olga",   "Pavel",   "Quinn",  "Rosa",    "Stefan",  "Tara",
    "Umar",    "Vera",   "Walter",  "Ximena", "Yusuf",  "Zofia",   "Amir",   "Beatriz", "Cyril",   "Dana",
    "Emil",    "Fatima", "Gustav",  "Helga",  "Ivan",   "Julia",   "Kofi",   "Leila",   "Marco",   "Nadia",
    "Oscar",   "Priya",  "Rafael",  "Sofia",  "Tomas",  "Ulla",    "Viktor", "Wanda",   "Xavier",  "Yara",
    "Zane",    "Anika",  "Boris",   "Chloe",  "Diego",  "Esther",  "Felix",  "Gloria",  "Hassan",  "Irene",
    "Jamal",   "Katya",  "Lorenzo", "Mirela", "Nils",   "Odette",  "Piotr",  "Renata",  "Samir",   "Tilde",
    "Ugo",     "Valeria", "Wim",    "Yasmin", "Zoran",  "Agnes",   "Bastian", "Celine", "Darius",  "Edith",
    "Florin",  "Gita",   "Henrik",  "Ilse",   "Joaquin", "Kirsi",  "Luca",   "Malia",   "Noor",    "Otto"};

constexpr std::string_view kLastNames[] = {
    "Abbott",   "Bauer",    "Castillo", "Dvorak",  "Eriksen",  "Fischer", "Garcia",   "Haddad",   "Ivanova",
    "Jensen",   "Kowalski", "Lindqvist", "Moreau", "Novak",    "Okafor",  "Petrov",   "Quist",    "Rossi",
    "Schmidt",  "Tanaka",   "Ueda",     "Varga",   "Weber",    "Xu",      "Yilmaz",   "Zeller",   "Andersen",
    "Brandt",   "Conti",    "Dubois",   "Esposito", "Farkas",  "Gruber",  "Horvat",   "Ibsen",    "Jovanovic",
    "Kaur",     "Larsen",   "Mendes",   "Nakamura", "Olsen",   "Popescu", "Ramos",    "Silva",    "Torres",
    "Urban",    "Vogel",    "Wagner",   "Yamada",  "Zimmer",   "Akhtar",  "Bianchi",  "Costa",    "Duarte",
    "Engel",    "Falk",     "Gomez",    "Holm",    "Iqbal",    "Keller",
    "Lang",     "Mazur",    "Nilsson",  "Orlov",   "Pereira",  "Richter", "Sato",     "Thorsen",  "Ulrich",
    "Vidal",    "Winter",   "Young",    "Zapata",  "Arnaud",   "Berg",    "Carvalho", "Dahl",     "Eklund",
    "Ferrari",  "Goldberg", "Hansen",   "Ito",     "Jung",     "Kuznetsov", "Lopez",  "Marino",   "Nowak"};

constexpr std::string_view kCities[] = {
    "Amberley",   "Brixton",     "Carrow",      "Dunmore",     "Eastwick",   "Fairhaven",  "Glenrock",
    "Harlow",     "Ivybridge",   "Jarrow",      "Kingsford",   "Lindale",    "Marston",    "Northby",
    "Oakmere",    "Pemberton",   "Queensbury",  "Redfield",    "Stonehill",  "Thornbury",  "Upton",
    "Valemont",   "Westbrook",   "Yarmouth",    "Ashford",     "Bramwell",   "Colwood",    "Dalston",
    "Elmstead",   "Foxley",      "Greyport",    "Hollins",     "Irvale",     "Kestrel",    "Larkspur",
    "Millbrook",  "Norcastle",   "Orwell",      "Port Aven",   "San Telmo",  "New Carlow", "Santa Rita",
    "Port Elric", "New Harlan",  "San Ferro",   "Mount Ives",  "Lake Orin",  "Cape Verran", "East Lorn",
    "West Maren", "Rivermouth",  "Silverton",   "Wolfden",     "Brightwater", "Coldharbor", "Deepdale",
    "Ember Falls", "Frostholm",  "Goldcrest",   "Highgate",    "Ironbridge", "Juniper Bay", "Kingsbay",
    "Lowmoor",    "Moonfield",   "Nettleton"};

constexpr std::string_view kCountries[] = {
    "Arvania",     "Belmora",    "Calestia",  "Dravonia",   "Eldoria",     "Fenmark",      "Galvoria",
    "Hestria",     "Istrovia",   "Jorvik",    "Kaldera",    "Lunaria",     "Morvania",     "Norland",
    "Ostravia",    "Pelagia",    "Quorvia",   "Rovenia",    "Selvania",    "Tarsis",       "Umbria",
    "Valdora",     "Wexland",    "Zembla",    "New Arcadia", "South Tirra", "North Veldt",  "East Morova",
    "West Calder", "Upper Ossia", "Lower Brenn", "Great Marrow", "Isle Carra", "Saint Verin", "Grand Ostia",
    "Little Faro", "Outer Ralm",  "Inner Kesh", "Old Tavor",  "High Sarn"};

constexpr std::string_view kOrgStems[] = {
    "Acme",     "Borealis", "Cobalt",   "Dynamo",  "Everline", "Fulcrum", "Granite",   "Helix",    "Initech",
    "Juniper",  "Kinetic",  "Lumen",    "Meridian", "Nimbus",  "Orion",   "Pinnacle",  "Quasar",   "Radiant",
    "Sable",    "Tessera",  "Umbra",    "Vertex",  "Wavecrest", "Xylem",  "Yonder",    "Zenith",   "Aurora",
    "Beacon",   "Cascade",  "Delta",    "Ember",   "Falcon",   "Gemini",  "Harbor",    "Ionic",    "Jasper",
    "Keystone", "Lattice",  "Monarch",  "Nova",    "Onyx",     "Polaris", "Quantum",   "Redwood",  "Summit",
    "Titan",    "Unity",    "Vanguard", "Willow",  "Zephyr",   "Atlas",   "Bluefin",   "Crescent", "Drift",
    "Echo",     "Fjord",    "Glacier",  "Horizon", "Indigo",   "Javelin",
    "Keel",     "Lodestar", "Mosaic",   "Nexus",   "Obsidian", "Prism",   "Quill",     "Ripple",   "Sequoia",
    "Tundra"};

constexpr std::string_view kOrgSuffixes[] = {"Corp", "Labs", "Group", "Systems", "Holdings", "Media"};

constexpr std::string_view kPrefixes[] = {"Yesterday ,",        "According to officials ,", "Last year ,",
                                          "In a recent interview ,", "Reportedly ,",        "As expected ,",
                                          "On Monday ,",        "Local papers say that"};

struct RelationDef {
  std::string_view name;
  std::string_view query;
};

constexpr RelationDef kRelations[] = {
    {"born_in", "born in"},         {"works_for", "works for"},
    {"founded", "founded"},         {"located_in", "located in"},
    {"headquartered_in", "headquartered in"}, {"spouse", "spouse of"},
    {"nationality", "nationality"}, {"capital_of", "capital of"},
};

struct TemplateTriple {
  std::string_view subject;
  std::string_view relation;
  std::string_view object;
};

struct Template {
  std::string_view text;  // space-separated; {P1} person, {C1} city, {K1} country, {O1} organization
  std::vector<TemplateTriple> triples;
};

const std::vector<Template>& templates() {
  static const std::vector<Template> all = {
      {"{P1} was born in {C1} .", {{"P1", "born_in", "C1"}}},
      {"{P1} , a native of {C1} , spoke at the meeting .", {{"P1", "born_in", "C1"}}},
      {"Born in {C1} , {P1} moved abroad as a child .", {{"P1", "born_in", "C1"}}},
      {"{P1} works for {O1} .", {{"P1", "works_for", "O1"}}},
      {"{P1} joined {O1} as an engineer last year .", {{"P1", "works_for", "O1"}}},
      {"{P1} , an analyst at {O1} , declined to comment .", {{"P1", "works_for", "O1"}}},
      {"{P1} founded {O1} in the nineties .", {{"P1", "founded", "O1"}}},
      {"{O1} was founded by {P1} .", {{"P1", "founded", "O1"}}},
      {"{P1} , the founder of {O1} , was born in {C1} .", {{"P1", "founded", "O1"}, {"P1", "born_in", "C1"}}},
      {"{C1} is located in {K1} .", {{"C1", "located_in", "K1"}}},
      {"{C1} , a city in {K1} , hosted the summit .", {{"C1", "located_in", "K1"}}},
      {"{O1} is headquartered in {C1} .", {{"O1", "headquartered_in", "C1"}}},
      {"{O1} , based in {C1} , reported strong earnings .", {{"O1", "headquartered_in", "C1"}}},
      {"{P1} is married to {P2} .", {{"P1", "spouse", "P2"}}},
      {"{P1} and his wife {P2} live in {C1} .", {{"P1", "spouse", "P2"}}},
      {"{P1} is a citizen of {K1} .", {{"P1", "nationality", "K1"}}},
      {"{P1} , who holds citizenship of {K1} , works for {O1} .",
       {{"P1", "nationality", "K1"}, {"P1", "works_for", "O1"}}},
      {"{C1} is the capital of {K1} .", {{"C1", "capital_of", "K1"}}},
      {"{K1} 's capital , {C1} , is crowded in summer .", {{"C1", "capital_of", "K1"}}},
      {"{P1} , who was born in {C1} , works for {O1} .", {{"P1", "born_in", "C1"}, {"P1", "works_for", "O1"}}},
      {"{P1} works for {O1} , which is headquartered in {C1} .",
       {{"P1", "works_for", "O1"}, {"O1", "headquartered_in", "C1"}}},
      {"{P1} was born in {C1} , a city in {K1} .", {{"P1", "born_in", "C1"}, {"C1", "located_in", "K1"}}},
      {"{P1} was born in {C1} and {P2} was born in {C2} .", {{"P1", "born_in", "C1"}, {"P2", "born_in", "C2"}}},
      {"{P1} founded {O1} and {O2} .", {{"P1", "founded", "O1"}, {"P1", "founded", "O2"}}},
      {"{P1} , who was born in {C1} , the capital of {K1} , founded {O1} .",
       {{"P1", "born_in", "C1"}, {"C1", "capital_of", "K1"}, {"P1", "founded", "O1"}}},
      {"{P1} and {P2} both work for {O1} .", {{"P1", "works_for", "O1"}, {"P2", "works_for", "O1"}}},
      {"{P1} , a citizen of {K1} , is married to {P2} .", {{"P1", "nationality", "K1"}, {"P1", "spouse", "P2"}}},
      {"{O1} , founded by {P1} , is headquartered in {C1} .",
       {{"P1", "founded", "O1"}, {"O1", "headquartered_in", "C1"}}},
      {"In {C1} , the capital of {K1} , {P1} met {P2} .", {{"C1", "capital_of", "K1"}}},
      {"{P1} works for {O1} and {P2} works for {O2} .", {{"P1", "works_for", "O1"}, {"P2", "works_for", "O2"}}},
      {"{P1} , the spouse of {P2} , was born in {C1} and works for {O1} .",
       {{"P1", "spouse", "P2"}, {"P1", "born_in", "C1"}, {"P1", "works_for", "O1"}}},
      {"{C1} and {C2} are located in {K1} .", {{"C1", "located_in", "K1"}, {"C2", "located_in", "K1"}}},
      {"{P1} , who met {P2} in {C2} , was born in {C1} .", {{"P1", "born_in", "C1"}}},
      {"{O1} and {O2} are headquartered in {C1} .",
       {{"O1", "headquartered_in", "C1"}, {"O2", "headquartered_in", "C1"}}},
      {"{P1} is a citizen of {K1} and was born in {C1} , the capital of {K2} .",
       {{"P1", "nationality", "K1"}, {"P1", "born_in", "C1"}, {"C1", "capital_of", "K2"}}},
      {"{P1} left {O2} to found {O1} , which is based in {C1} .",
       {{"P1", "founded", "O1"}, {"O1", "headquartered_in", "C1"}}},
  };
  return all;
}

std::vector<std::string> split(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    auto j = text.find(' ', i);
    if (j == std::string_view::npos) j = text.size();
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j + 1;
  }
  return out;
}

class Generator {
 public:
  explicit Generator(std::uint64_t seed) : rng_(seed) {}

  LabeledInstance sentence(const RelationCatalog& catalog) {
    const auto& all = templates();
    const Template& tpl = all[rng_.below(all.size())];
    LabeledInstance inst;
    std::map<std::string, Span> slots;
    std::set<std::string> used;
    if (rng_.bernoulli(0.3))
      for (auto& w : split(kPrefixes[rng_.below(std::size(kPrefixes))])) inst.tokens.push_back(std::move(w));
    for (const auto& piece : split(tpl.text)) {
      if (piece.size() > 2 && piece.front() == '{' && piece.back() == '}') {
        const std::string slot = piece.substr(1, piece.size() - 2);
        const auto words = draw_entity(slot[0], used);
        const std::size_t start = inst.tokens.size();
        inst.tokens.insert(inst.tokens.end(), words.begin(), words.end());
        slots[slot] = Span{start, inst.tokens.size() - 1};
      } else {
        inst.tokens.push_back(piece);
      }
    }
    for (const auto& t : tpl.triples)
      inst.add_triple({slots.at(std::string(t.subject)), catalog.id_of(t.relation), slots.at(std::string(t.object))});
    return inst;
  }

 private:
  std::vector<std::string> draw_entity(char kind, std::set<std::string>& used) {
    while (true) {
      std::string text;
      switch (kind) {
        case 'P':
          text = std::string(pick(kFirstNames)) + " " + std::string(pick(kLastNames));
          break;
        case 'C':
          text = pick(kCities);
          break;
        case 'K':
          text = pick(kCountries);
          break;
        default:
          text = std::string(pick(kOrgStems));
          if (rng_.bernoulli(0.7)) text += " " + std::string(pick(kOrgSuffixes));
          break;
      }
      if (used.insert(text).second) return split(text);
    }
  }

  template <std::size_t N>
  std::string_view pick(const std::string_view (&pool)[N]) {
    return pool[rng_.below(N)];
  }

  nn::Rng rng_;
};

Dataset make_split(Generator& gen, const RelationCatalog& cat, std::size_t n) {
  Dataset ds;
  ds.catalog = cat;
  ds.instances.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ds.instances.push_back(gen.sentence(cat));
  return ds;
}

}  // namespace

RelationCatalog catalog() {
  RelationCatalog cat;
  for (const auto& r : kRelations) cat.add(std::string(r.name), std::string(r.query));
  return cat;
}

Corpus generate(const CorpusConfig& config) {
  Corpus c;
  c.catalog = catalog();
  Generator gen(config.seed);
  c.train = make_split(gen, c.catalog, config.train);
  c.dev = make_split(gen, c.catalog, config.dev);
  c.test = make_split(gen, c.catalog, config.test);
  return c;
}

}  // namespace rere::synthetic
