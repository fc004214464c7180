#include "core/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace rockid {

using nlohmann::json;

int64_t ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), int64_t{0});
}

std::string ConfusionMatrix::to_json() const {
  json j;
  j["format_version"] = 1;
  j["class_names"] = class_names;
  const size_t n = class_names.size();
  json rows = json::array();
  for (size_t i = 0; i < n; ++i) {
    json row = json::array();
    for (size_t k = 0; k < n; ++k) row.push_back(counts[i * n + k]);
    rows.push_back(row);
  }
  j["counts"] = rows;
  return j.dump(2);
}

ConfusionMatrix confusion(const std::vector<std::string>& true_labels,
                          const std::vector<std::string>& predicted_labels,
                          const std::vector<std::string>& class_names) {
  if (true_labels.size() != predicted_labels.size())
    fail(Status::ShapeMismatch, "confusion: label sequences differ in length");

  std::map<std::string, size_t> index;
  for (size_t i = 0; i < class_names.size(); ++i) index[to_lower(class_names[i])] = i;

  auto lookup = [&](const std::string& label) -> std::optional<size_t> {
    auto it = index.find(to_lower(label));
    if (it == index.end()) return std::nullopt;
    return it->second;
  };

  bool needs_other = false;
  for (const auto& l : true_labels)
    if (!lookup(l)) needs_other = true;
  for (const auto& l : predicted_labels)
    if (!lookup(l)) needs_other = true;

  ConfusionMatrix cm;
  cm.class_names = class_names;
  if (needs_other) cm.class_names.push_back(kOtherRock);
  const size_t n = cm.class_names.size();
  cm.counts.assign(n * n, 0);

  for (size_t i = 0; i < true_labels.size(); ++i) {
    size_t r = lookup(true_labels[i]).value_or(n - 1);
    size_t c = lookup(predicted_labels[i]).value_or(n - 1);
    cm.counts[r * n + c] += 1;
  }
  return cm;
}

ClassMetrics metrics_from_counts(int64_t tp, int64_t fp, int64_t fn) {
  ClassMetrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  if (tp + fp > 0) m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (m.precision && m.recall && (*m.precision + *m.recall) > 0.0)
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  else if (m.precision && m.recall)
    m.f1 = 0.0;
  return m;
}

MetricsReport metrics(const ConfusionMatrix& cm) {
  MetricsReport rep;
  const size_t n = cm.class_names.size();
  int64_t total = cm.total();
  int64_t diag = 0;
  for (size_t i = 0; i < n; ++i) diag += cm.at(i, i);
  rep.accuracy = total > 0 ? static_cast<double>(diag) / static_cast<double>(total) : 0.0;

  int np = 0, nr = 0, nf = 0;
  for (size_t i = 0; i < n; ++i) {
    int64_t tp = cm.at(i, i);
    int64_t fp = 0, fn = 0;
    for (size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      fp += cm.at(k, i);
      fn += cm.at(i, k);
    }
    ClassMetrics m = metrics_from_counts(tp, fp, fn);
    if (m.precision) {
      rep.macro_precision += *m.precision;
      ++np;
    }
    if (m.recall) {
      rep.macro_recall += *m.recall;
      ++nr;
    }
    if (m.f1) {
      rep.macro_f1 += *m.f1;
      ++nf;
    }
    rep.per_class[cm.class_names[i]] = m;
  }
  if (np) rep.macro_precision /= np;
  if (nr) rep.macro_recall /= nr;
  if (nf) rep.macro_f1 /= nf;
  return rep;
}

namespace {

json metric_or_null(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

std::string MetricsReport::to_json() const {
  json j;
  j["format_version"] = 1;
  j["accuracy"] = accuracy;
  json pc;
  for (const auto& [name, m] : per_class)
    pc[name] = {{"precision", metric_or_null(m.precision)},
                {"recall", metric_or_null(m.recall)},
                {"f1", metric_or_null(m.f1)},
                {"tp", m.tp},
                {"fp", m.fp},
                {"fn", m.fn}};
  j["per_class"] = pc;
  j["macro_precision"] = macro_precision;
  j["macro_recall"] = macro_recall;
  j["macro_f1"] = macro_f1;
  return j.dump(2);
}

std::string MetricsReport::to_text() const {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "accuracy: %.1f%%\n", accuracy * 100.0);
  os << buf;
  os << "class                precision   recall       f1\n";
  for (const auto& [name, m] : per_class) {
    std::string prec = m.precision
                           ? (std::snprintf(buf, sizeof(buf), "%.1f%%", *m.precision * 100.0), buf)
                           : std::string("n/a");
    std::string rec = m.recall
                          ? (std::snprintf(buf, sizeof(buf), "%.1f%%", *m.recall * 100.0), buf)
                          : std::string("n/a");
    std::string f1 = m.f1 ? (std::snprintf(buf, sizeof(buf), "%.2f", *m.f1), buf)
                          : std::string("n/a");
    std::snprintf(buf, sizeof(buf), "%-20s %9s %8s %8s\n", name.c_str(), prec.c_str(),
                  rec.c_str(), f1.c_str());
    os << buf;
  }
  return os.str();
}

std::vector<Fold> kfold_split(const std::vector<int>& labels, int num_classes, int k,
                              uint64_t seed) {
  if (k < 2) fail(Status::InvalidArgument, "kfold_split: k must be >= 2");
  std::vector<std::vector<size_t>> per_class(static_cast<size_t>(num_classes));
  for (size_t i = 0; i < labels.size(); ++i)
    per_class[static_cast<size_t>(labels[i])].push_back(i);
  for (size_t c = 0; c < per_class.size(); ++c) {
    if (!per_class[c].empty() && per_class[c].size() < static_cast<size_t>(k))
      fail(Status::InvalidArgument, "kfold_split: class " + std::to_string(c) + " has only " +
                                        std::to_string(per_class[c].size()) + " samples for k=" +
                                        std::to_string(k));
  }

  std::vector<std::vector<size_t>> test_folds(static_cast<size_t>(k));
  for (size_t c = 0; c < per_class.size(); ++c) {
    Rng rng(seed, stream_id("kfold-class", c));
    auto idx = per_class[c];
    rng.shuffle(idx);
    for (size_t i = 0; i < idx.size(); ++i) test_folds[i % static_cast<size_t>(k)].push_back(idx[i]);
  }

  std::vector<Fold> folds(static_cast<size_t>(k));
  for (size_t f = 0; f < folds.size(); ++f) {
    folds[f].test = test_folds[f];
    std::sort(folds[f].test.begin(), folds[f].test.end());
    for (size_t g = 0; g < folds.size(); ++g) {
      if (g == f) continue;
      folds[f].train.insert(folds[f].train.end(), test_folds[g].begin(), test_folds[g].end());
    }
    std::sort(folds[f].train.begin(), folds[f].train.end());
  }
  return folds;
}

std::string CvReport::to_json() const {
  json j;
  j["format_version"] = 1;
  j["mean_accuracy"] = mean_accuracy;
  j["std_error"] = std_error;
  json fl = json::array();
  for (const auto& f : folds) fl.push_back({{"accuracy", f.accuracy}, {"epochs", f.epochs}});
  j["folds"] = fl;
  return j.dump(2);
}

CvReport cross_validate(const LabeledDataset& dataset, const nn::ModelSpec& spec,
                        const nn::TrainConfig& config, int k, uint64_t seed, int max_workers) {
  config.validate();
  dataset.validate();
  std::vector<Fold> folds =
      kfold_split(dataset.labels, static_cast<int>(dataset.class_names.size()), k, seed);

  CvReport rep;
  rep.folds.resize(folds.size());

  // Each fold's training is a pure function of (dataset, fold, fold seed), so
  // running folds on a thread pool cannot change the numbers.
  auto run_fold = [&](size_t f) {
    nn::TrainConfig fold_cfg = config;
    fold_cfg.seed = Rng::mix(seed ^ stream_id("cv-fold", f));
    // Within-fold validation split for early stopping comes from the fold's
    // training subset; the test subset stays untouched until scoring.
    Rng split_rng(fold_cfg.seed, stream_id("split", 0));
    std::vector<int> sub_labels;
    sub_labels.reserve(folds[f].train.size());
    for (size_t i : folds[f].train) sub_labels.push_back(dataset.labels[i]);
    nn::SplitIndices sub = nn::stratified_split(
        sub_labels, static_cast<int>(dataset.class_names.size()),
        config.validation_fraction, split_rng);
    std::vector<size_t> train_idx, val_idx;
    for (size_t i : sub.train) train_idx.push_back(folds[f].train[i]);
    for (size_t i : sub.val) val_idx.push_back(folds[f].train[i]);

    nn::Model model = nn::train_on_split(dataset, train_idx, val_idx, spec, fold_cfg);
    rep.folds[f].accuracy = nn::evaluate_accuracy(model, dataset, folds[f].test);
    rep.folds[f].epochs = static_cast<int>(model.history.size());
  };

  int workers = max_workers > 0 ? max_workers
                                : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min<int>(workers, static_cast<int>(folds.size())));
  if (workers == 1) {
    for (size_t f = 0; f < folds.size(); ++f) run_fold(f);
  } else {
    std::vector<std::future<void>> futures;
    for (size_t f = 0; f < folds.size(); ++f)
      futures.push_back(std::async(std::launch::async, run_fold, f));
    for (auto& fu : futures) fu.get();
  }

  double mean = 0.0;
  for (const auto& f : rep.folds) mean += f.accuracy;
  mean /= static_cast<double>(rep.folds.size());
  double var = 0.0;
  for (const auto& f : rep.folds) var += (f.accuracy - mean) * (f.accuracy - mean);
  var = rep.folds.size() > 1 ? var / static_cast<double>(rep.folds.size() - 1) : 0.0;
  rep.mean_accuracy = mean;
  rep.std_error = std::sqrt(var / static_cast<double>(rep.folds.size()));
  return rep;
}

// ---------------- golden suite ----------------

uint64_t golden_checksum(const std::vector<GoldenCase>& cases) {
  std::string canon;
  for (const auto& c : cases) {
    canon += std::to_string(c.id);
    canon += '|';
    for (size_t i = 0; i < c.labels.size(); ++i) {
      if (i) canon += ',';
      canon += c.labels[i];
    }
    canon += '|';
    canon += c.expert_result;
    canon += '|';
    canon += c.oracle_expected;
    canon += '\n';
  }
  return fnv1a64(canon);
}

std::vector<GoldenCase> load_golden_fixture(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Status::FixtureError, "golden fixture missing: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(Status::FixtureError, "golden fixture unreadable: " + std::string(e.what()));
  }
  std::vector<GoldenCase> cases;
  try {
    for (const auto& c : j.at("cases")) {
      GoldenCase gc;
      gc.id = c.at("id").get<int>();
      gc.labels = c.at("labels").get<std::vector<std::string>>();
      gc.expert_result = c.at("expert_result").get<std::string>();
      gc.oracle_expected = c.at("oracle_expected").get<std::string>();
      if (gc.labels.size() != 10)
        fail(Status::FixtureError,
             "golden case " + std::to_string(gc.id) + " must have exactly 10 labels");
      cases.push_back(std::move(gc));
    }
    std::string stored = j.at("checksum").get<std::string>();
    if (stored != hex_u64(golden_checksum(cases)))
      fail(Status::FixtureError, "golden fixture checksum mismatch: " + path.string());
  } catch (const json::exception& e) {
    fail(Status::FixtureError, "golden fixture malformed: " + std::string(e.what()));
  }
  if (cases.empty()) fail(Status::FixtureError, "golden fixture has no cases");
  return cases;
}

namespace {

std::string display_rock(const std::string& label) {
  if (label == kOtherRock) return label;
  std::string out = label;
  if (!out.empty() && out[0] >= 'a' && out[0] <= 'z')
    out[0] = static_cast<char>(out[0] - 'a' + 'A');
  return out;
}

bool agrees_with_expert(const std::string& expert, const std::string& classified) {
  if (expert.rfind("Not a ", 0) == 0) return classified == kOtherRock;
  return display_rock(classified) == expert;
}

}  // namespace

GoldenReport run_golden_suite(const KnowledgeBase& kb, const std::vector<GoldenCase>& cases) {
  GoldenReport rep;
  std::vector<std::string> truths, preds;
  for (const auto& c : cases) {
    RockClassification r = classify(c.labels, kb);
    GoldenReport::CaseResult cr;
    cr.id = c.id;
    cr.classified = display_rock(r.label);
    cr.oracle_expected = c.oracle_expected;
    cr.expert_result = c.expert_result;
    cr.oracle_match = (cr.classified == c.oracle_expected);
    cr.expert_agreement = agrees_with_expert(c.expert_result, r.label);
    rep.oracle_matches += cr.oracle_match;
    rep.expert_agreements += cr.expert_agreement;
    rep.cases.push_back(std::move(cr));

    truths.push_back(c.expert_result.rfind("Not a ", 0) == 0 ? kOtherRock
                                                             : to_lower(c.expert_result));
    preds.push_back(r.label);
  }
  std::vector<std::string> rocks;
  for (const auto& rule : kb.rules) rocks.push_back(rule.rock_name);
  rep.rock_confusion = confusion(truths, preds, rocks);
  rep.rock_metrics = metrics(rep.rock_confusion);
  return rep;
}

std::string GoldenReport::to_json() const {
  json j;
  j["format_version"] = 1;
  j["oracle_matches"] = oracle_matches;
  j["expert_agreements"] = expert_agreements;
  j["num_cases"] = cases.size();
  j["rock_confusion"] = json::parse(rock_confusion.to_json());
  j["rock_metrics"] = json::parse(rock_metrics.to_json());
  json arr = json::array();
  for (const auto& c : cases)
    arr.push_back({{"id", c.id},
                   {"classified", c.classified},
                   {"oracle_expected", c.oracle_expected},
                   {"expert_result", c.expert_result},
                   {"oracle_match", c.oracle_match},
                   {"expert_agreement", c.expert_agreement}});
  j["cases"] = arr;
  return j.dump(2);
}

std::string GoldenReport::to_text() const {
  std::ostringstream os;
  char buf[200];
  os << "case  classified  oracle      expert             oracle_match  expert_agreement\n";
  for (const auto& c : cases) {
    std::snprintf(buf, sizeof(buf), "%4d  %-10s  %-10s  %-17s  %-12s  %s\n", c.id,
                  c.classified.c_str(), c.oracle_expected.c_str(), c.expert_result.c_str(),
                  c.oracle_match ? "yes" : "NO", c.expert_agreement ? "yes" : "divergence");
    os << buf;
  }
  std::snprintf(buf, sizeof(buf), "oracle match %d/%zu, expert agreement %d/%zu\n",
                oracle_matches, cases.size(), expert_agreements, cases.size());
  os << buf;
  os << "\nrock-level confusion (rows: expert intent, cols: classified):\n";
  const size_t n = rock_confusion.class_names.size();
  os << "            ";
  for (const auto& name : rock_confusion.class_names) {
    std::snprintf(buf, sizeof(buf), "%11s", name.c_str());
    os << buf;
  }
  os << "\n";
  for (size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof(buf), "%-12s", rock_confusion.class_names[i].c_str());
    os << buf;
    for (size_t k = 0; k < n; ++k) {
      std::snprintf(buf, sizeof(buf), "%11lld",
                    static_cast<long long>(rock_confusion.at(i, k)));
      os << buf;
    }
    os << "\n";
  }
  os << rock_metrics.to_text();
  return os.str();
}

}  // namespace rockid
