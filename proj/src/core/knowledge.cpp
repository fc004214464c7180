#include "core/knowledge.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace rockid {

using nlohmann::json;

bool ExclusionRule::applies_to_rock(const std::string& rock) const {
  std::string r = to_lower(rock);
  return std::any_of(applies_to.begin(), applies_to.end(),
                     [&](const std::string& a) { return to_lower(a) == r; });
}

const MineralGroup* KnowledgeBase::find_group(const std::string& name) const {
  std::string n = to_lower(name);
  for (const auto& g : groups)
    if (to_lower(g.name) == n) return &g;
  return nullptr;
}

std::optional<std::string> KnowledgeBase::group_of(const std::string& species) const {
  std::string s = to_lower(species);
  for (const auto& g : groups)
    for (const auto& m : g.members)
      if (to_lower(m) == s) return g.name;
  return std::nullopt;
}

void KnowledgeBase::validate() const {
  if (!(confidence_threshold > 0.0 && confidence_threshold <= 1.0))
    fail(Status::InvalidArgument, "kb.confidence_threshold: must be in (0,1]");
  if (!(dominance_threshold >= 0.0 && dominance_threshold <= 1.0))
    fail(Status::InvalidArgument, "kb.dominance_threshold: must be in [0,1]");
  if (groups.empty()) fail(Status::InvalidArgument, "kb.groups: empty");
  if (rules.empty()) fail(Status::InvalidArgument, "kb.rules: empty");

  std::set<std::string> group_names;
  std::set<std::string> species_seen;
  for (size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& g = groups[gi];
    std::string path = "kb.groups[" + std::to_string(gi) + "]";
    if (g.name.empty()) fail(Status::InvalidArgument, path + ".name: empty");
    if (!group_names.insert(to_lower(g.name)).second)
      fail(Status::InvalidArgument, path + ".name: duplicate group '" + g.name + "'");
    if (g.members.empty()) fail(Status::InvalidArgument, path + ".members: empty");
    for (const auto& m : g.members) {
      if (!species_seen.insert(to_lower(m)).second)
        fail(Status::InvalidArgument,
             path + ".members: species '" + m + "' appears in more than one group");
    }
  }

  std::set<std::string> rock_names;
  for (size_t ri = 0; ri < rules.size(); ++ri) {
    const auto& r = rules[ri];
    std::string path = "kb.rules[" + std::to_string(ri) + "]";
    if (r.rock_name.empty()) fail(Status::InvalidArgument, path + ".rock_name: empty");
    if (!rock_names.insert(to_lower(r.rock_name)).second)
      fail(Status::InvalidArgument, path + ": duplicate rock '" + r.rock_name + "'");
    if (r.assemblages.empty()) fail(Status::InvalidArgument, path + ".assemblages: empty");
    for (size_t ai = 0; ai < r.assemblages.size(); ++ai) {
      const auto& a = r.assemblages[ai];
      std::string apath = path + ".assemblages[" + std::to_string(ai) + "]";
      if (!find_group(a.group))
        fail(Status::InvalidArgument, apath + ".group: unknown group '" + a.group + "'");
      if (!(a.weight >= 0.0 && a.weight <= 1.0))
        fail(Status::InvalidArgument, apath + ".weight: must be in [0,1]");
      if (!(a.p_min <= a.p_max))
        fail(Status::InvalidArgument, apath + ": p_min must be <= p_max");
      if (a.p_min < 0.0 || a.p_max > 1.0)
        fail(Status::InvalidArgument, apath + ": range must be within [0,1]");
    }
    for (size_t ci = 0; ci < r.constraints.size(); ++ci) {
      const auto& c = r.constraints[ci];
      std::string cpath = path + ".constraints[" + std::to_string(ci) + "]";
      if (!find_group(c.group))
        fail(Status::InvalidArgument, cpath + ".group: unknown group '" + c.group + "'");
      if (!std::isfinite(c.threshold))
        fail(Status::InvalidArgument, cpath + ".threshold: must be finite");
      if (c.kind == ConstraintSpec::Kind::ProportionInRange && c.parameters.size() != 2)
        fail(Status::InvalidArgument, cpath + ".parameters: proportion-in-range needs [lo, hi]");
    }
  }

  for (size_t ei = 0; ei < exclusions.size(); ++ei) {
    const auto& e = exclusions[ei];
    std::string path = "kb.exclusions[" + std::to_string(ei) + "]";
    if (e.species.empty()) fail(Status::InvalidArgument, path + ".species: empty");
    if (e.applies_to.empty()) fail(Status::InvalidArgument, path + ".applies_to: empty");
    for (const auto& rock : e.applies_to)
      if (!rock_names.count(to_lower(rock)))
        fail(Status::InvalidArgument, path + ".applies_to: unknown rock '" + rock + "'");
  }
}

Hierarchy KnowledgeBase::hierarchy() const {
  Hierarchy h;
  for (const auto& rule : rules) {
    int rock_node = static_cast<int>(h.nodes.size());
    h.nodes.push_back({rule.rock_name, "rock", -1, 0, 0, 0});
    for (const auto& a : rule.assemblages) {
      int group_node = static_cast<int>(h.nodes.size());
      h.nodes.push_back({a.group, "group", rock_node, a.weight, a.p_min, a.p_max});
      h.edges.emplace_back(rock_node, group_node);
      const MineralGroup* g = find_group(a.group);
      if (!g) continue;
      for (const auto& m : g->members) {
        int leaf = static_cast<int>(h.nodes.size());
        h.nodes.push_back({m, "species", group_node, 0, 0, 0});
        h.edges.emplace_back(group_node, leaf);
      }
    }
  }
  return h;
}

KnowledgeBase default_knowledge_base() {
  KnowledgeBase kb;
  kb.groups = {
      {"quartz", {"Quartz"}},
      {"feldspars", {"Albite", "Anorthite", "Orthoclase"}},
      {"micas", {"Annite", "Muscovite", "Phlogopite"}},
      {"calcite", {"Calcite"}},
      {"dolomite", {"Dolomite"}},
  };

  RockRule granite;
  granite.rock_name = "granite";
  granite.assemblages = {
      {"feldspars", 0.8, 0.45, 0.80},
      {"quartz", 0.6, 0.20, 0.40},
      {"micas", 0.3, 0.00, 0.15},
  };

  RockRule sandstone;
  sandstone.rock_name = "sandstone";
  sandstone.assemblages = {
      {"quartz", 0.9, 0.70, 1.00},
      {"feldspars", 0.5, 0.05, 0.25},
      {"micas", 0.2, 0.02, 0.03},
  };

  RockRule limestone;
  limestone.rock_name = "limestone";
  limestone.assemblages = {
      {"calcite", 0.9, 0.90, 1.00},
      {"dolomite", 0.7, 0.10, 0.50},
      {"quartz", 0.2, 0.00, 0.10},
  };

  kb.rules = {granite, sandstone, limestone};
  kb.confidence_threshold = 0.7;
  kb.dominance_threshold = 0.3;

  const std::vector<std::string> all_rocks = {"granite", "sandstone", "limestone"};
  for (const char* sp : {"jadeite", "omphacite", "glaucophane", "staurolite", "almandine",
                         "garnet", "pyrope", "andalusite", "kyanite", "epidote"})
    kb.exclusions.push_back({sp, ExclusionRule::Reason::MetamorphicIndicator, all_rocks});
  // Sanidine indicates a magmatic origin: it vetoes the sedimentary rocks but
  // not granite.
  kb.exclusions.push_back(
      {"sanidine", ExclusionRule::Reason::MagmaticIndicator, {"sandstone", "limestone"}});

  kb.validate();
  return kb;
}

std::map<std::string, double> mineral_proportions(std::span<const std::string> measurements,
                                                  const KnowledgeBase& kb) {
  if (measurements.empty()) fail(Status::EmptyInput, "mineral_proportions: empty measurements");
  std::map<std::string, int> counts;  // group -> count
  for (const auto& g : kb.groups) counts[g.name] = 0;
  for (const auto& m : measurements) {
    auto g = kb.group_of(m);
    if (g) counts[*g] += 1;
  }
  std::map<std::string, double> props;
  double n = static_cast<double>(measurements.size());
  for (const auto& [group, c] : counts) props[group] = static_cast<double>(c) / n;
  return props;
}

int indicator(double proportion, const WeightedAssemblage& assemblage) {
  return (assemblage.p_min <= proportion && proportion <= assemblage.p_max) ? 1 : 0;
}

double rock_weight(const std::map<std::string, double>& proportions, const RockRule& rule) {
  // Group names are matched case-insensitively everywhere in this module.
  std::map<std::string, double> lowered;
  for (const auto& [g, p] : proportions) lowered[to_lower(g)] = p;
  double w = 0.0;
  for (const auto& a : rule.assemblages) {
    auto it = lowered.find(to_lower(a.group));
    double p = (it == lowered.end()) ? 0.0 : it->second;
    w += a.weight * indicator(p, a);
  }
  return w;
}

double membership(const std::string& mineral, const WeightedAssemblage& assemblage,
                  const std::map<std::string, double>& proportions, const KnowledgeBase& kb) {
  const MineralGroup* g = kb.find_group(assemblage.group);
  if (!g) return 0.0;
  std::string m = to_lower(mineral);
  bool member = std::any_of(g->members.begin(), g->members.end(),
                            [&](const std::string& s) { return to_lower(s) == m; });
  if (!member) return 0.0;
  auto it = proportions.find(g->name);
  double p = (it == proportions.end()) ? 0.0 : it->second;
  return indicator(p, assemblage) ? assemblage.weight : 0.0;
}

namespace {

int group_count(std::span<const std::string> measurements, const std::string& group,
                const KnowledgeBase& kb) {
  const MineralGroup* g = kb.find_group(group);
  if (!g) return 0;
  int n = 0;
  for (const auto& m : measurements) {
    std::string ml = to_lower(m);
    for (const auto& s : g->members)
      if (to_lower(s) == ml) {
        ++n;
        break;
      }
  }
  return n;
}

}  // namespace

bool evaluate_constraint(std::span<const std::string> measurements, const ConstraintSpec& spec,
                         const KnowledgeBase& kb) {
  switch (spec.kind) {
    case ConstraintSpec::Kind::CountAtLeast:
      return group_count(measurements, spec.group, kb) >= spec.threshold;
    case ConstraintSpec::Kind::ProportionInRange: {
      if (spec.parameters.size() != 2)
        fail(Status::InvalidArgument, "proportion-in-range constraint needs [lo, hi]");
      auto props = mineral_proportions(measurements, kb);
      auto it = props.find(kb.find_group(spec.group) ? kb.find_group(spec.group)->name
                                                     : spec.group);
      double p = (it == props.end()) ? 0.0 : it->second;
      return spec.parameters[0] <= p && p <= spec.parameters[1];
    }
  }
  fail(Status::InvalidArgument, "unknown constraint function kind");
}

double assemblage_probability(std::span<const std::string> measurements, const RockRule& rule,
                              const KnowledgeBase& kb) {
  auto props = mineral_proportions(measurements, kb);
  double prob = 1.0;
  for (const auto& a : rule.assemblages) {
    int n = group_count(measurements, a.group, kb);
    auto it = props.find(a.group);
    double p = (it == props.end()) ? 0.0 : it->second;
    prob *= std::pow(a.weight, static_cast<double>(n)) * indicator(p, a);
  }
  return prob;
}

std::vector<ExclusionRule> check_exclusions(std::span<const std::string> measurements,
                                            const KnowledgeBase& kb,
                                            const std::string& candidate_rock) {
  std::set<std::string> present;
  for (const auto& m : measurements) present.insert(to_lower(m));
  std::vector<ExclusionRule> fired;
  for (const auto& e : kb.exclusions)
    if (present.count(to_lower(e.species)) && e.applies_to_rock(candidate_rock))
      fired.push_back(e);
  return fired;
}

RockClassification classify(std::span<const std::string> measurements, const KnowledgeBase& kb) {
  if (measurements.empty()) fail(Status::EmptyInput, "classify: empty measurements");

  RockClassification result;
  result.proportions = mineral_proportions(measurements, kb);

  for (const auto& rule : kb.rules) {
    double w = rock_weight(result.proportions, rule);
    result.weights[rule.rock_name] = w;
    auto& tr = result.trace[rule.rock_name];
    for (const auto& a : rule.assemblages) {
      const MineralGroup* g = kb.find_group(a.group);
      auto it = g ? result.proportions.find(g->name) : result.proportions.end();
      double p = (it == result.proportions.end()) ? 0.0 : it->second;
      tr.push_back({a.group, a.weight, p, indicator(p, a) == 1});
    }
  }

  // argmax in rule order; ties keep the first, and a tie means margin 0,
  // which the dominance threshold rejects anyway.
  result.w_max = 0.0;
  result.top_rock.clear();
  for (const auto& rule : kb.rules) {
    double w = result.weights.at(rule.rock_name);
    if (result.top_rock.empty() || w > result.w_max) {
      result.w_max = w;
      result.top_rock = rule.rock_name;
    }
  }
  result.w_second = 0.0;
  bool have_second = false;
  for (const auto& rule : kb.rules) {
    if (rule.rock_name == result.top_rock) continue;
    if (!have_second || result.weights.at(rule.rock_name) > result.w_second) {
      result.w_second = result.weights.at(rule.rock_name);
      have_second = true;
    }
  }

  result.fired_exclusions = check_exclusions(measurements, kb, result.top_rock);

  bool confident = result.w_max >= kb.confidence_threshold &&
                   (result.w_max - result.w_second) >= kb.dominance_threshold;
  result.label =
      (confident && result.fired_exclusions.empty()) ? result.top_rock : kOtherRock;
  return result;
}

bool rule_fires(std::span<const std::string> measurements, const RockRule& rule,
                const KnowledgeBase& kb) {
  for (const auto& c : rule.constraints)
    if (!evaluate_constraint(measurements, c, kb)) return false;
  RockClassification r = classify(measurements, kb);
  return r.label == rule.rock_name;
}

// ---------------- persistence ----------------

namespace {

const char* reason_name(ExclusionRule::Reason r) {
  return r == ExclusionRule::Reason::MetamorphicIndicator ? "metamorphic-indicator"
                                                          : "magmatic-indicator";
}

ExclusionRule::Reason reason_from(const std::string& s, const std::string& path) {
  if (s == "metamorphic-indicator") return ExclusionRule::Reason::MetamorphicIndicator;
  if (s == "magmatic-indicator") return ExclusionRule::Reason::MagmaticIndicator;
  fail(Status::ParseError, path + ": unknown exclusion reason '" + s + "'");
}

const char* kind_name(ConstraintSpec::Kind k) {
  return k == ConstraintSpec::Kind::CountAtLeast ? "count-at-least" : "proportion-in-range";
}

ConstraintSpec::Kind kind_from(const std::string& s, const std::string& path) {
  if (s == "count-at-least") return ConstraintSpec::Kind::CountAtLeast;
  if (s == "proportion-in-range") return ConstraintSpec::Kind::ProportionInRange;
  fail(Status::ParseError, path + ": unknown constraint kind '" + s + "'");
}

}  // namespace

std::string knowledge_base_to_json(const KnowledgeBase& kb) {
  json j;
  j["format_version"] = 1;
  j["confidence_threshold"] = kb.confidence_threshold;
  j["dominance_threshold"] = kb.dominance_threshold;
  json groups = json::array();
  for (const auto& g : kb.groups) groups.push_back({{"name", g.name}, {"members", g.members}});
  j["groups"] = groups;
  json rules = json::array();
  for (const auto& r : kb.rules) {
    json asms = json::array();
    for (const auto& a : r.assemblages)
      asms.push_back({{"group", a.group}, {"weight", a.weight},
                      {"p_min", a.p_min}, {"p_max", a.p_max}});
    json cons = json::array();
    for (const auto& c : r.constraints)
      cons.push_back({{"group", c.group}, {"kind", kind_name(c.kind)},
                      {"parameters", c.parameters}, {"threshold", c.threshold}});
    rules.push_back({{"rock", r.rock_name}, {"assemblages", asms}, {"constraints", cons}});
  }
  j["rules"] = rules;
  json excl = json::array();
  for (const auto& e : kb.exclusions)
    excl.push_back({{"species", e.species}, {"reason", reason_name(e.reason)},
                    {"applies_to", e.applies_to}});
  j["exclusions"] = excl;
  return j.dump(2);
}

KnowledgeBase knowledge_base_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(Status::ParseError, std::string("kb: invalid JSON: ") + e.what());
  }
  KnowledgeBase kb;
  try {
    kb.confidence_threshold = j.at("confidence_threshold").get<double>();
    kb.dominance_threshold = j.at("dominance_threshold").get<double>();
    size_t gi = 0;
    for (const auto& g : j.at("groups")) {
      MineralGroup mg;
      mg.name = g.at("name").get<std::string>();
      mg.members = g.at("members").get<std::vector<std::string>>();
      kb.groups.push_back(std::move(mg));
      ++gi;
    }
    size_t ri = 0;
    for (const auto& r : j.at("rules")) {
      RockRule rule;
      rule.rock_name = r.at("rock").get<std::string>();
      for (const auto& a : r.at("assemblages")) {
        rule.assemblages.push_back({a.at("group").get<std::string>(),
                                    a.at("weight").get<double>(), a.at("p_min").get<double>(),
                                    a.at("p_max").get<double>()});
      }
      if (r.contains("constraints")) {
        size_t ci = 0;
        for (const auto& c : r.at("constraints")) {
          ConstraintSpec spec;
          spec.group = c.at("group").get<std::string>();
          spec.kind = kind_from(c.at("kind").get<std::string>(),
                                "kb.rules[" + std::to_string(ri) + "].constraints[" +
                                    std::to_string(ci) + "].kind");
          if (c.contains("parameters"))
            spec.parameters = c.at("parameters").get<std::vector<double>>();
          spec.threshold = c.value("threshold", 0.0);
          rule.constraints.push_back(std::move(spec));
          ++ci;
        }
      }
      kb.rules.push_back(std::move(rule));
      ++ri;
    }
    size_t ei = 0;
    for (const auto& e : j.value("exclusions", json::array())) {
      ExclusionRule ex;
      ex.species = e.at("species").get<std::string>();
      ex.reason = reason_from(e.at("reason").get<std::string>(),
                              "kb.exclusions[" + std::to_string(ei) + "].reason");
      ex.applies_to = e.at("applies_to").get<std::vector<std::string>>();
      kb.exclusions.push_back(std::move(ex));
      ++ei;
    }
  } catch (const json::exception& e) {
    fail(Status::ParseError, std::string("kb: missing or mistyped field: ") + e.what());
  }
  kb.validate();
  return kb;
}

KnowledgeBase load_knowledge_base(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Status::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return knowledge_base_from_json(ss.str());
}

void save_knowledge_base(const KnowledgeBase& kb, const std::filesystem::path& path) {
  kb.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Status::IoError, "cannot write " + path.string());
  out << knowledge_base_to_json(kb) << "\n";
}

std::string RockClassification::to_json() const {
  json j;
  j["label"] = label;
  j["top_rock"] = top_rock;
  j["w_max"] = w_max;
  j["w_second"] = w_second;
  j["margin"] = margin();
  j["weights"] = weights;
  j["proportions"] = proportions;
  json fired = json::array();
  for (const auto& e : fired_exclusions)
    fired.push_back({{"species", e.species}, {"reason", reason_name(e.reason)}});
  j["fired_exclusions"] = fired;
  json tr;
  for (const auto& [rock, entries] : trace) {
    json arr = json::array();
    for (const auto& t : entries)
      arr.push_back({{"group", t.group}, {"weight", t.weight},
                     {"proportion", t.proportion}, {"in_range", t.in_range}});
    tr[rock] = arr;
  }
  j["trace"] = tr;
  return j.dump();
}

}  // namespace rockid
