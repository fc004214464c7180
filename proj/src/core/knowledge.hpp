#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/common.hpp"

namespace rockid {

// Reserved label for measurement points the classifier could not name.
// It never matches a mineral group but always counts in proportion
// denominators.
inline constexpr const char* kUnknownLabel = "UNKNOWN";
inline constexpr const char* kOtherRock = "other";

struct MineralGroup {
  std::string name;                  // e.g. "feldspars"
  std::vector<std::string> members;  // species names, matched case-insensitively
};

// (group, weight, [p_min, p_max]) entry of a rock's weighted assemblage set.
struct WeightedAssemblage {
  std::string group;
  double weight = 0.0;
  double p_min = 0.0;
  double p_max = 1.0;
};

struct ConstraintSpec {
  enum class Kind { CountAtLeast, ProportionInRange };
  std::string group;
  Kind kind = Kind::CountAtLeast;
  std::vector<double> parameters;  // ProportionInRange: [lo, hi]
  double threshold = 0.0;          // CountAtLeast: minimum group count
};

struct RockRule {
  std::string rock_name;
  std::vector<WeightedAssemblage> assemblages;
  std::vector<ConstraintSpec> constraints;
};

struct ExclusionRule {
  enum class Reason { MetamorphicIndicator, MagmaticIndicator };
  std::string species;
  Reason reason = Reason::MetamorphicIndicator;
  std::vector<std::string> applies_to;  // rock names vetoed by this species

  bool applies_to_rock(const std::string& rock) const;
};

// rock -> group -> species decision-tree view, derived from the rules.
struct Hierarchy {
  struct Node {
    std::string name;
    std::string kind;  // "rock" | "group" | "species"
    int parent = -1;
    // composition parameters attached to group nodes
    double weight = 0.0;
    double p_min = 0.0;
    double p_max = 0.0;
  };
  std::vector<Node> nodes;
  std::vector<std::pair<int, int>> edges;  // (parent, child)
};

struct KnowledgeBase {
  std::vector<MineralGroup> groups;
  std::vector<RockRule> rules;
  double confidence_threshold = 0.7;  // theta_c
  double dominance_threshold = 0.3;   // theta_d
  std::vector<ExclusionRule> exclusions;

  void validate() const;
  const MineralGroup* find_group(const std::string& name) const;
  // group name owning a species, if any (case-insensitive species match)
  std::optional<std::string> group_of(const std::string& species) const;
  Hierarchy hierarchy() const;
};

struct AssemblageTrace {
  std::string group;
  double weight = 0.0;
  double proportion = 0.0;
  bool in_range = false;
};

struct RockClassification {
  std::map<std::string, double> weights;  // rock -> w_{R_l}
  double w_max = 0.0;
  double w_second = 0.0;
  std::string top_rock;  // argmax rock (first rule in KB order on ties)
  std::string label;     // winning rock name or "other"
  std::vector<ExclusionRule> fired_exclusions;
  std::map<std::string, double> proportions;  // group -> f_i(M)
  std::map<std::string, std::vector<AssemblageTrace>> trace;

  double margin() const { return w_max - w_second; }
  std::string to_json() const;
};

// The built-in default: granite/sandstone/limestone assemblages with
// their composition ranges, thresholds 0.7/0.3, and the indicator-mineral
// exclusion list from the expert test-case reasoning.
KnowledgeBase default_knowledge_base();

// f_i(M): per-group share of the measurement sequence. UNKNOWN and species
// outside every group stay in the denominator.
std::map<std::string, double> mineral_proportions(std::span<const std::string> measurements,
                                                  const KnowledgeBase& kb);

// delta_i: 1 iff p_min <= proportion <= p_max, bounds inclusive.
int indicator(double proportion, const WeightedAssemblage& assemblage);

// w_{R_l} = sum of assemblage weights whose indicator is 1 (unnormalized).
double rock_weight(const std::map<std::string, double>& proportions, const RockRule& rule);

// Weighted membership: the assemblage weight if the mineral belongs to the
// group and the group's proportion is within range, else 0.
double membership(const std::string& mineral, const WeightedAssemblage& assemblage,
                  const std::map<std::string, double>& proportions, const KnowledgeBase& kb);

bool evaluate_constraint(std::span<const std::string> measurements, const ConstraintSpec& spec,
                         const KnowledgeBase& kb);

// Rule firing: every constraint holds, and the dual-threshold confidence
// predicate holds with this rule as the winner.
bool rule_fires(std::span<const std::string> measurements, const RockRule& rule,
                const KnowledgeBase& kb);

// Multiplicative confidence-adjusted score: product over assemblages of
// weight^count * delta. Any out-of-range assemblage zeroes the product.
double assemblage_probability(std::span<const std::string> measurements, const RockRule& rule,
                              const KnowledgeBase& kb);

std::vector<ExclusionRule> check_exclusions(std::span<const std::string> measurements,
                                            const KnowledgeBase& kb,
                                            const std::string& candidate_rock);

// Dual-threshold classification with exclusion veto on the would-be winner.
RockClassification classify(std::span<const std::string> measurements, const KnowledgeBase& kb);

// Structured-text (JSON) persistence for operator-supplied knowledge bases.
KnowledgeBase load_knowledge_base(const std::filesystem::path& path);
void save_knowledge_base(const KnowledgeBase& kb, const std::filesystem::path& path);
KnowledgeBase knowledge_base_from_json(const std::string& text);
std::string knowledge_base_to_json(const KnowledgeBase& kb);

}  // namespace rockid
