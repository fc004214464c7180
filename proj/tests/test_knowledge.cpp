#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "core/knowledge.hpp"
#include "core/rng.hpp"

using namespace rockid;

namespace {

std::vector<std::string> labels_of(const std::string& space_separated) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (pos < space_separated.size()) {
    size_t sp = space_separated.find(' ', pos);
    if (sp == std::string::npos) sp = space_separated.size();
    if (sp > pos) out.push_back(space_separated.substr(pos, sp - pos));
    pos = sp + 1;
  }
  return out;
}

// Golden-suite compositions used repeatedly below.
const std::vector<std::string> kCase25(10, "Calcite");
const auto kCase1 = labels_of(
    "Albite Anorthite Quartz Quartz Annite Muscovite Quartz Albite Annite Orthoclase");
const auto kCase3 = labels_of(
    "Jadeite Quartz Quartz Jadeite Orthoclase Jadeite Anorthite Quartz Annite Quartz");
const auto kCase22 = labels_of(
    "Andalusite Calcite Calcite Albite Orthoclase Calcite Calcite Kyanite Pyrite Calcite");
const auto kCase28 = labels_of(
    "Sanidine Quartz Sanidine Calcite Dolomite Sanidine Calcite Calcite Calcite Calcite");

const WeightedAssemblage& assemblage(const KnowledgeBase& kb, const std::string& rock,
                                     const std::string& group) {
  for (const auto& r : kb.rules)
    if (r.rock_name == rock)
      for (const auto& a : r.assemblages)
        if (a.group == group) return a;
  throw std::runtime_error("assemblage not found");
}

const RockRule& rule_of(const KnowledgeBase& kb, const std::string& rock) {
  for (const auto& r : kb.rules)
    if (r.rock_name == rock) return r;
  throw std::runtime_error("rule not found");
}

}  // namespace

TEST_CASE("default KB carries the published parameters") {
  auto kb = default_knowledge_base();
  CHECK(kb.confidence_threshold == 0.7);
  CHECK(kb.dominance_threshold == 0.3);

  const auto& gq = assemblage(kb, "granite", "quartz");
  CHECK(gq.weight == 0.6);
  CHECK(gq.p_min == 0.20);
  CHECK(gq.p_max == 0.40);

  const auto& lc = assemblage(kb, "limestone", "calcite");
  CHECK(lc.weight == 0.9);
  CHECK(lc.p_min == 0.90);
  CHECK(lc.p_max == 1.00);

  const auto& sq = assemblage(kb, "sandstone", "quartz");
  CHECK(sq.weight == 0.9);
  CHECK(sq.p_min == 0.70);

  CHECK(kb.exclusions.size() == 11);
  CHECK(kb.group_of("Albite") == std::string("feldspars"));
  CHECK(kb.group_of("phlogopite") == std::string("micas"));
  CHECK(!kb.group_of("Rhodochrosite"));
}

TEST_CASE("hierarchy mirrors the rule structure") {
  auto kb = default_knowledge_base();
  auto h = kb.hierarchy();
  int rocks = 0, groups = 0, species = 0;
  for (const auto& n : h.nodes) {
    if (n.kind == "rock") ++rocks;
    if (n.kind == "group") ++groups;
    if (n.kind == "species") ++species;
  }
  CHECK(rocks == 3);
  CHECK(groups == 9);    // 3 assemblages per rock
  CHECK(species == 17);  // granite 7, sandstone 7, limestone 3 leaves
  for (const auto& [p, c] : h.edges) CHECK(h.nodes[static_cast<size_t>(c)].parent == p);
}

TEST_CASE("mineral_proportions") {
  auto kb = default_knowledge_base();

  auto p25 = mineral_proportions(kCase25, kb);
  CHECK(p25.at("calcite") == 1.0);
  CHECK(p25.at("dolomite") == 0.0);
  CHECK(p25.at("quartz") == 0.0);

  auto p1 = mineral_proportions(kCase1, kb);
  CHECK(p1.at("quartz") == doctest::Approx(0.3));
  CHECK(p1.at("feldspars") == doctest::Approx(0.4));
  CHECK(p1.at("micas") == doctest::Approx(0.3));

  std::vector<std::string> half(5, "Quartz");
  half.insert(half.end(), 5, kUnknownLabel);
  auto ph = mineral_proportions(half, kb);
  CHECK(ph.at("quartz") == 0.5);  // UNKNOWN stays in the denominator

  CHECK_THROWS_AS(mineral_proportions({}, kb), Error);
}

TEST_CASE("indicator: inclusive bounds") {
  WeightedAssemblage a{"quartz", 0.6, 0.20, 0.40};
  CHECK(indicator(0.20, a) == 1);
  CHECK(indicator(0.40, a) == 1);
  CHECK(indicator(0.41, a) == 0);
  CHECK(indicator(0.19, a) == 0);
  WeightedAssemblage m{"micas", 0.3, 0.0, 0.15};
  CHECK(indicator(0.0, m) == 1);
}

TEST_CASE("rock_weight: frozen evaluations") {
  auto kb = default_knowledge_base();

  auto p25 = mineral_proportions(kCase25, kb);
  CHECK(rock_weight(p25, rule_of(kb, "limestone")) == doctest::Approx(1.1));

  std::map<std::string, double> granite_perfect = {
      {"quartz", 0.3}, {"feldspars", 0.6}, {"micas", 0.1}, {"calcite", 0}, {"dolomite", 0}};
  CHECK(rock_weight(granite_perfect, rule_of(kb, "granite")) == doctest::Approx(1.7));

  std::map<std::string, double> outside = {
      {"quartz", 0.55}, {"feldspars", 0.9}, {"micas", 0.5}, {"calcite", 0.5}, {"dolomite", 0.9}};
  CHECK(rock_weight(outside, rule_of(kb, "granite")) == 0.0);
}

TEST_CASE("membership") {
  auto kb = default_knowledge_base();
  const auto& feld = assemblage(kb, "granite", "feldspars");
  const auto& quar = assemblage(kb, "granite", "quartz");

  std::map<std::string, double> props = {{"feldspars", 0.5}, {"quartz", 0.5}};
  CHECK(membership("Albite", feld, props, kb) == 0.8);
  CHECK(membership("Albite", quar, props, kb) == 0.0);   // not a member
  CHECK(membership("Quartz", quar, props, kb) == 0.0);   // 0.5 outside [0.2,0.4]
}

TEST_CASE("evaluate_constraint") {
  auto kb = default_knowledge_base();

  ConstraintSpec count_q{"quartz", ConstraintSpec::Kind::CountAtLeast, {}, 1};
  CHECK_FALSE(evaluate_constraint(kCase25, count_q, kb));
  CHECK(evaluate_constraint(kCase3, count_q, kb));

  ConstraintSpec prop_c{"calcite", ConstraintSpec::Kind::ProportionInRange, {0.9, 1.0}, 0};
  CHECK(evaluate_constraint(kCase25, prop_c, kb));

  ConstraintSpec vacuous{"quartz", ConstraintSpec::Kind::CountAtLeast, {}, 0};
  CHECK(evaluate_constraint(kCase25, vacuous, kb));

  ConstraintSpec bad{"calcite", ConstraintSpec::Kind::ProportionInRange, {0.9}, 0};
  CHECK_THROWS_AS(evaluate_constraint(kCase25, bad, kb), Error);
}

TEST_CASE("rule_fires") {
  auto kb = default_knowledge_base();
  CHECK(rule_fires(kCase25, rule_of(kb, "limestone"), kb));
  CHECK_FALSE(rule_fires(kCase25, rule_of(kb, "granite"), kb));

  // empty constraint list reduces to the confidence predicate
  RockRule bare = rule_of(kb, "limestone");
  bare.constraints.clear();
  CHECK(rule_fires(kCase25, bare, kb));
}

TEST_CASE("assemblage_probability") {
  auto kb = default_knowledge_base();

  // dolomite proportion 0 is outside [0.10, 0.50], so delta zeroes the product
  CHECK(assemblage_probability(kCase25, rule_of(kb, "limestone"), kb) == 0.0);

  KnowledgeBase custom = kb;
  custom.rules = {{"qrock", {{"quartz", 0.6, 0.0, 1.0}}, {}}};
  std::vector<std::string> one = {"Quartz"};
  CHECK(assemblage_probability(one, custom.rules[0], custom) == doctest::Approx(0.6));

  // counts zero but 0 in range for every assemblage: product of deltas = 1
  KnowledgeBase zeros = kb;
  zeros.rules = {{"zrock",
                  {{"quartz", 0.6, 0.0, 1.0}, {"micas", 0.3, 0.0, 1.0}},
                  {}}};
  std::vector<std::string> cal = {"Calcite"};
  CHECK(assemblage_probability(cal, zeros.rules[0], zeros) == 1.0);
}

TEST_CASE("check_exclusions") {
  auto kb = default_knowledge_base();

  auto fired22 = check_exclusions(kCase22, kb, "limestone");
  REQUIRE(fired22.size() == 2);  // andalusite + kyanite
  CHECK(std::any_of(fired22.begin(), fired22.end(),
                    [](const ExclusionRule& e) { return e.species == "andalusite"; }));
  CHECK(std::any_of(fired22.begin(), fired22.end(),
                    [](const ExclusionRule& e) { return e.species == "kyanite"; }));

  auto fired28 = check_exclusions(kCase28, kb, "limestone");
  REQUIRE(fired28.size() == 1);
  CHECK(fired28[0].species == "sanidine");
  CHECK(fired28[0].reason == ExclusionRule::Reason::MagmaticIndicator);
  // sanidine does not veto granite
  CHECK(check_exclusions(kCase28, kb, "granite").empty());

  CHECK(check_exclusions(kCase25, kb, "limestone").empty());
}

TEST_CASE("classify: frozen expert-suite evaluations") {
  auto kb = default_knowledge_base();

  auto r25 = classify(kCase25, kb);
  CHECK(r25.label == "limestone");
  CHECK(r25.w_max == doctest::Approx(1.1));
  CHECK(r25.w_second == doctest::Approx(0.3));  // granite via micas-at-zero
  CHECK(r25.margin() == doctest::Approx(0.8));
  CHECK(r25.fired_exclusions.empty());

  auto r3 = classify(kCase3, kb);
  CHECK(r3.label == kOtherRock);
  CHECK(r3.top_rock == "granite");
  CHECK(r3.w_max == doctest::Approx(0.9));
  REQUIRE(r3.fired_exclusions.size() == 1);
  CHECK(r3.fired_exclusions[0].species == "jadeite");

  auto r1 = classify(kCase1, kb);
  CHECK(r1.label == kOtherRock);
  CHECK(r1.w_max == doctest::Approx(0.6));  // below the confidence threshold

  // single quartz measurement: sandstone fires (quartz 1.0 in [0.7,1.0])
  std::vector<std::string> quartz_only = {"Quartz"};
  auto rq = classify(quartz_only, kb);
  CHECK(rq.label == "sandstone");
  CHECK(rq.w_max == doctest::Approx(0.9));
  CHECK(rq.w_second == doctest::Approx(0.3));
}

TEST_CASE("classify: empty input") {
  auto kb = default_knowledge_base();
  CHECK_THROWS_AS(classify({}, kb), Error);
}

TEST_CASE("kb json round trip, shipped example matches the built-in default") {
  auto kb = default_knowledge_base();
  std::string text = knowledge_base_to_json(kb);
  auto back = knowledge_base_from_json(text);
  CHECK(knowledge_base_to_json(back) == text);

  auto shipped = load_knowledge_base(std::filesystem::path(ROCKID_DATA_DIR) /
                                     "examples/kb_default.json");
  CHECK(knowledge_base_to_json(shipped) == text);
}

TEST_CASE("kb loader reports the first violation with a path") {
  auto kb = default_knowledge_base();
  kb.rules[1].assemblages[0].p_min = 0.8;
  kb.rules[1].assemblages[0].p_max = 0.2;
  std::string text = knowledge_base_to_json(kb);
  try {
    knowledge_base_from_json(text);
    FAIL("expected validation error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("kb.rules[1].assemblages[0]") != std::string::npos);
  }

  KnowledgeBase overlap = default_knowledge_base();
  overlap.groups[0].members.push_back("Albite");  // also in feldspars
  CHECK_THROWS_AS(knowledge_base_from_json(knowledge_base_to_json(overlap)), Error);
}

// ---------------- randomized property checks ----------------

namespace {

const std::vector<std::string> kVocabulary = {
    "Quartz",   "Albite",     "Anorthite", "Orthoclase", "Annite",   "Muscovite",
    "Phlogopite", "Calcite",  "Dolomite",  "Pyrite",     "Rutile",   "Tourmaline",
    "Jadeite",  "Epidote",    "Sanidine",  "Glaucophane", "UNKNOWN", "Rhodochrosite"};

std::vector<std::string> random_sequence(Rng& rng, size_t max_len = 40) {
  size_t n = static_cast<size_t>(rng.uniform_int(1, static_cast<int64_t>(max_len)));
  std::vector<std::string> out;
  for (size_t i = 0; i < n; ++i)
    out.push_back(kVocabulary[static_cast<size_t>(
        rng.uniform_int(0, static_cast<int64_t>(kVocabulary.size()) - 1))]);
  return out;
}

bool same_classification(const RockClassification& a, const RockClassification& b) {
  if (a.label != b.label || a.top_rock != b.top_rock) return false;
  if (a.weights != b.weights || a.proportions != b.proportions) return false;
  if (a.w_max != b.w_max || a.w_second != b.w_second) return false;
  if (a.fired_exclusions.size() != b.fired_exclusions.size()) return false;
  return true;
}

}  // namespace

TEST_CASE("property: permutation and duplication invariance, result consistency") {
  auto kb = default_knowledge_base();
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    auto seq = random_sequence(rng);
    auto base = classify(seq, kb);

    auto shuffled = seq;
    rng.shuffle(shuffled);
    CHECK(same_classification(base, classify(shuffled, kb)));

    auto doubled = seq;
    doubled.insert(doubled.end(), seq.begin(), seq.end());
    CHECK(same_classification(base, classify(doubled, kb)));

    // consistency invariants on the result record
    CHECK(base.w_max >= base.w_second);
    double sum_weights = 0;
    for (const auto& r : kb.rules) {
      double w = base.weights.at(r.rock_name);
      double cap = 0;
      for (const auto& a : r.assemblages) cap += a.weight;
      CHECK(w >= 0.0);
      CHECK(w <= cap + 1e-12);
      sum_weights += w;
    }
    if (base.label != kOtherRock) {
      CHECK(base.w_max >= kb.confidence_threshold);
      CHECK(base.margin() >= kb.dominance_threshold);
      CHECK(base.fired_exclusions.empty());
    }
  }
}

TEST_CASE("property: raising thresholds only rejects") {
  auto base_kb = default_knowledge_base();
  Rng rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    auto seq = random_sequence(rng);
    auto kb_hi = base_kb;
    kb_hi.confidence_threshold = std::min(1.0, base_kb.confidence_threshold + rng.uniform() * 0.3);
    kb_hi.dominance_threshold = std::min(1.0, base_kb.dominance_threshold + rng.uniform() * 0.3);
    auto lo = classify(seq, base_kb);
    auto hi = classify(seq, kb_hi);
    if (hi.label != kOtherRock) CHECK(hi.label == lo.label);
    if (lo.label == kOtherRock) CHECK(hi.label == kOtherRock);
  }
}
