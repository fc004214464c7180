// rockid command-line front end. Everything goes through the C API in
// rockid.h; this file owns argument handling, the run-config file, and
// report presentation only.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rockid.h"

namespace {

using nlohmann::json;

// exit codes: 0 success, 1 usage error, 2 data error, 3 internal invariant
int exit_code_for(rockid_status s) {
  switch (s) {
    case ROCKID_OK: return 0;
    case ROCKID_E_INVALID_ARGUMENT: return 1;
    case ROCKID_E_IO:
    case ROCKID_E_PARSE:
    case ROCKID_E_EMPTY_INPUT:
    case ROCKID_E_TOO_FEW_POINTS:
    case ROCKID_E_FIXTURE:
    case ROCKID_E_TRAINING: return 2;
    case ROCKID_E_SHAPE_MISMATCH:
    case ROCKID_E_INTERNAL: return 3;
  }
  return 3;
}

[[noreturn]] void die(rockid_status s, const std::string& stage) {
  std::cerr << "rockid: " << stage << ": " << rockid_status_name(s) << ": "
            << rockid_last_error() << "\n";
  std::exit(exit_code_for(s));
}

void check(rockid_status s, const std::string& stage) {
  if (s != ROCKID_OK) die(s, stage);
}

std::string take_string(char* s) {
  std::string out = s ? s : "";
  rockid_string_free(s);
  return out;
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (std::getline(is, tok, sep)) {
    tok = trim(tok);
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

uint64_t fnv1a64(const std::string& data) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ---------------- run configuration ----------------
//
// Flat "key = value" file, '#' comments. Flags override config values;
// config values override built-in defaults.

struct RunConfig {
  std::map<std::string, std::string> values;

  static RunConfig load(const std::string& path) {
    RunConfig cfg;
    if (path.empty()) return cfg;
    std::ifstream in(path);
    if (!in) {
      std::cerr << "rockid: cannot read config file " << path << "\n";
      std::exit(2);
    }
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::string s = trim(line);
      if (s.empty() || s[0] == '#') continue;
      size_t eq = s.find('=');
      if (eq == std::string::npos) {
        std::cerr << "rockid: " << path << ":" << line_no << ": expected key = value\n";
        std::exit(2);
      }
      cfg.values[trim(s.substr(0, eq))] = trim(s.substr(eq + 1));
    }
    return cfg;
  }

  template <typename T>
  void apply(const std::string& key, T& target) const {
    auto it = values.find(key);
    if (it == values.end()) return;
    std::istringstream is(it->second);
    T v{};
    if (is >> v)
      target = v;
    else {
      std::cerr << "rockid: config key '" << key << "' has invalid value '" << it->second
                << "'\n";
      std::exit(2);
    }
  }

  void apply(const std::string& key, std::string& target) const {
    auto it = values.find(key);
    if (it != values.end()) target = it->second;
  }
};

struct EffectiveConfig {
  rockid_grid grid = rockid_grid_default();
  rockid_augment_config augment = rockid_augment_config_default();
  rockid_cnn_config cnn = rockid_cnn_config_default();
  rockid_train_config train = rockid_train_config_default();
  std::vector<std::string> class_names;
  std::string kb_path;
  int min_points = 10;
  uint64_t seed = 0;

  void merge_file(const RunConfig& cfg) {
    cfg.apply("grid.min_wavenumber", grid.min_wavenumber);
    cfg.apply("grid.max_wavenumber", grid.max_wavenumber);
    cfg.apply("grid.num_points", grid.num_points);
    cfg.apply("augment.target_multiplier", augment.target_multiplier);
    cfg.apply("augment.pca_min_samples", augment.pca_min_samples);
    cfg.apply("augment.pca_components", augment.pca_components);
    cfg.apply("augment.coeff_sigma_scale", augment.coeff_sigma_scale);
    cfg.apply("augment.noise_sigma", augment.noise_sigma);
    cfg.apply("augment.shift_max", augment.shift_max);
    cfg.apply("augment.scale_min", augment.scale_min);
    cfg.apply("augment.scale_max", augment.scale_max);
    cfg.apply("cnn.conv1_channels", cnn.conv1_channels);
    cfg.apply("cnn.conv2_channels", cnn.conv2_channels);
    cfg.apply("cnn.kernel_size", cnn.kernel_size);
    cfg.apply("cnn.pool_size", cnn.pool_size);
    cfg.apply("cnn.hidden_units", cnn.hidden_units);
    cfg.apply("cnn.dropout_rate", cnn.dropout_rate);
    cfg.apply("train.learning_rate", train.learning_rate);
    cfg.apply("train.adam_beta1", train.adam_beta1);
    cfg.apply("train.adam_beta2", train.adam_beta2);
    cfg.apply("train.adam_epsilon", train.adam_epsilon);
    cfg.apply("train.batch_size", train.batch_size);
    cfg.apply("train.max_epochs", train.max_epochs);
    cfg.apply("train.patience", train.patience);
    cfg.apply("train.validation_fraction", train.validation_fraction);
    cfg.apply("train.mc_passes", train.mc_passes);
    cfg.apply("train.unknown_threshold", train.unknown_threshold);
    cfg.apply("kb_path", kb_path);
    cfg.apply("min_points", min_points);
    cfg.apply("seed", seed);
    auto it = cfg.values.find("class_names");
    if (it != cfg.values.end()) class_names = split_list(it->second, ',');
  }

  // Canonical dump; the hash of this string is embedded in every output file.
  std::string canonical() const {
    std::ostringstream os;
    os.precision(17);
    os << "augment.coeff_sigma_scale=" << augment.coeff_sigma_scale << "\n"
       << "augment.noise_sigma=" << augment.noise_sigma << "\n"
       << "augment.pca_components=" << augment.pca_components << "\n"
       << "augment.pca_min_samples=" << augment.pca_min_samples << "\n"
       << "augment.scale_max=" << augment.scale_max << "\n"
       << "augment.scale_min=" << augment.scale_min << "\n"
       << "augment.shift_max=" << augment.shift_max << "\n"
       << "augment.target_multiplier=" << augment.target_multiplier << "\n";
    os << "class_names=";
    for (size_t i = 0; i < class_names.size(); ++i) os << (i ? "," : "") << class_names[i];
    os << "\n";
    os << "cnn.conv1_channels=" << cnn.conv1_channels << "\n"
       << "cnn.conv2_channels=" << cnn.conv2_channels << "\n"
       << "cnn.dropout_rate=" << cnn.dropout_rate << "\n"
       << "cnn.hidden_units=" << cnn.hidden_units << "\n"
       << "cnn.kernel_size=" << cnn.kernel_size << "\n"
       << "cnn.pool_size=" << cnn.pool_size << "\n"
       << "grid.max_wavenumber=" << grid.max_wavenumber << "\n"
       << "grid.min_wavenumber=" << grid.min_wavenumber << "\n"
       << "grid.num_points=" << grid.num_points << "\n"
       << "kb_path=" << kb_path << "\n"
       << "min_points=" << min_points << "\n"
       << "seed=" << seed << "\n"
       << "train.adam_beta1=" << train.adam_beta1 << "\n"
       << "train.adam_beta2=" << train.adam_beta2 << "\n"
       << "train.adam_epsilon=" << train.adam_epsilon << "\n"
       << "train.batch_size=" << train.batch_size << "\n"
       << "train.learning_rate=" << train.learning_rate << "\n"
       << "train.max_epochs=" << train.max_epochs << "\n"
       << "train.mc_passes=" << train.mc_passes << "\n"
       << "train.patience=" << train.patience << "\n"
       << "train.unknown_threshold=" << train.unknown_threshold << "\n"
       << "train.validation_fraction=" << train.validation_fraction << "\n";
    return os.str();
  }

  std::string hash() const { return hex64(fnv1a64(canonical())); }
};

const std::vector<std::string> kDefaultClasses = {
    "Quartz",  "Albite",   "Anorthite",  "Orthoclase", "Annite",  "Muscovite", "Phlogopite",
    "Calcite", "Dolomite", "Pyrite",     "Rutile",     "Tourmaline", "Jadeite", "Epidote"};

std::vector<const char*> c_strings(const std::vector<std::string>& v) {
  std::vector<const char*> out;
  out.reserve(v.size());
  for (const auto& s : v) out.push_back(s.c_str());
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) {
    std::cerr << "rockid: cannot write " << path << "\n";
    std::exit(2);
  }
  os << content;
}

// Reports carry the config hash and seed that produced them.
std::string stamp_report(const std::string& report_json, const EffectiveConfig& cfg) {
  json j = json::parse(report_json);
  j["config_hash"] = cfg.hash();
  j["seed"] = cfg.seed;
  return j.dump(2) + "\n";
}

struct KbHandle {
  rockid_kb* kb = nullptr;
  ~KbHandle() { rockid_kb_free(kb); }
};

KbHandle open_kb(const std::string& kb_path) {
  KbHandle h;
  if (kb_path.empty())
    check(rockid_kb_default(&h.kb), "kb");
  else
    check(rockid_kb_load(kb_path.c_str(), &h.kb), "kb load");
  return h;
}

std::vector<std::string> read_label_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "rockid: cannot read labels file " << path << "\n";
    std::exit(2);
  }
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    for (const auto& tok : split_list(s, ',')) labels.push_back(tok);
  }
  return labels;
}

// ---------------- subcommands ----------------

int cmd_ingest(const std::string& dir, const std::string& out_path,
               const EffectiveConfig& cfg, const std::string& report_path) {
  const auto& classes = cfg.class_names.empty() ? kDefaultClasses : cfg.class_names;
  auto cls = c_strings(classes);
  rockid_dataset* ds = nullptr;
  char* report = nullptr;
  rockid_status s = rockid_dataset_ingest_dir(dir.c_str(), cls.data(),
                                              static_cast<int32_t>(cls.size()), &cfg.grid, &ds,
                                              &report);
  if (s == ROCKID_E_EMPTY_INPUT) {
    std::cerr << "rockid: ingest: no spectra found\n";
    return 2;
  }
  check(s, "ingest");
  std::string report_s = take_string(report);
  check(rockid_dataset_save(ds, out_path.c_str(), cfg.hash().c_str(), cfg.seed), "dataset save");

  json rj = json::parse(report_s);
  int skipped = 0;
  for (const auto& [k, v] : rj["skipped"].items()) skipped += v.get<int>();
  std::cout << "ingested: " << rockid_dataset_num_samples(ds) << " spectra, "
            << rockid_dataset_num_classes(ds) << " classes\n";
  std::cout << "skipped: " << skipped << "\n";
  std::cout << "parse failures: " << rj["failures"].size() << "\n";
  if (!report_path.empty()) write_file(report_path, stamp_report(report_s, cfg));
  rockid_dataset_free(ds);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_synth(const std::string& out_path, const std::string& expand_path,
              const std::string& spec_path, int per_class, double noise,
              const EffectiveConfig& cfg, const std::string& manifest_path) {
  rockid_dataset* ds = nullptr;
  if (!expand_path.empty()) {
    rockid_dataset* in = nullptr;
    check(rockid_dataset_open(expand_path.c_str(), &in), "dataset open");
    rockid_augment_config ac = cfg.augment;
    ac.seed = cfg.seed;
    char* manifest = nullptr;
    check(rockid_dataset_expand(in, &ac, &ds, &manifest), "expand");
    std::string manifest_s = take_string(manifest);
    json mj = json::parse(manifest_s);
    for (const auto& c : mj["classes"])
      std::cout << c["class"].get<std::string>() << ": " << c["original"].get<int>() << " + "
                << c["synthetic"].get<int>() << " synthetic (" << c["path"].get<std::string>()
                << ")\n";
    if (!manifest_path.empty()) write_file(manifest_path, stamp_report(manifest_s, cfg));
    rockid_dataset_free(in);
  } else if (!spec_path.empty()) {
    check(rockid_dataset_synthetic_from_spec(spec_path.c_str(), per_class, &cfg.grid, noise,
                                             cfg.seed, &ds),
          "synth");
  } else {
    check(rockid_dataset_synthetic(per_class, &cfg.grid, noise, cfg.seed, &ds), "synth");
  }
  check(rockid_dataset_save(ds, out_path.c_str(), cfg.hash().c_str(), cfg.seed), "dataset save");
  std::cout << "wrote " << out_path << " (" << rockid_dataset_num_samples(ds) << " samples, "
            << rockid_dataset_num_classes(ds) << " classes)\n";
  rockid_dataset_free(ds);
  return 0;
}

int cmd_train(const std::string& dataset_path, const std::string& out_path,
              const std::string& model_kind, bool uncertainty, const EffectiveConfig& cfg,
              const std::string& history_path) {
  rockid_dataset* ds = nullptr;
  check(rockid_dataset_open(dataset_path.c_str(), &ds), "dataset open");
  int32_t kind = model_kind == "mlp" ? ROCKID_MODEL_MLP : ROCKID_MODEL_CNN;
  rockid_train_config tc = cfg.train;
  tc.seed = cfg.seed;
  rockid_model* model = nullptr;
  char* history = nullptr;
  check(rockid_model_train(ds, kind, uncertainty ? 1 : 0, &cfg.cnn, &tc, &model, &history),
        "train");
  std::string history_s = take_string(history);
  check(rockid_model_save(model, out_path.c_str(), cfg.hash().c_str(), cfg.seed), "model save");

  json hj = json::parse(history_s);
  size_t epochs = hj["history"].size();
  int best_epoch = hj.value("best_epoch", 0);
  double best_acc = (best_epoch >= 1 && static_cast<size_t>(best_epoch) <= epochs)
                        ? hj["history"][static_cast<size_t>(best_epoch - 1)]["val_accuracy"]
                              .get<double>()
                        : 0.0;
  char line[160];
  std::snprintf(line, sizeof(line),
                "trained %s%s: %zu epochs, returned epoch %d (validation accuracy %.1f%%)\n",
                model_kind.c_str(), uncertainty ? " (uncertainty-aware)" : "", epochs,
                best_epoch, best_acc * 100.0);
  std::cout << line;
  if (!history_path.empty()) write_file(history_path, stamp_report(history_s, cfg));
  std::cout << "wrote " << out_path << "\n";
  rockid_model_free(model);
  rockid_dataset_free(ds);
  return 0;
}

int cmd_classify(const std::string& model_path, const std::string& labels_path,
                 const std::string& sample_dir, const std::string& samples_root,
                 const std::string& mode, const EffectiveConfig& cfg,
                 const std::string& out_path) {
  KbHandle kb = open_kb(cfg.kb_path);
  std::ostringstream records;
  int failures = 0, total = 0;

  auto emit = [&](const std::string& record_json) {
    json j = json::parse(record_json);
    j["config_hash"] = cfg.hash();
    j["seed"] = cfg.seed;
    std::string line = j.dump();
    records << line << "\n";
    std::cout << j["sample_id"].get<std::string>() << ": "
              << j["classification"]["label"].get<std::string>()
              << " (w_max " << j["classification"]["w_max"].get<double>() << ", margin "
              << j["classification"]["margin"].get<double>() << ")\n";
  };

  if (labels_path.empty() && sample_dir.empty() && samples_root.empty()) {
    std::cerr << "rockid: classify: nothing to classify "
                 "(use --labels, --sample-dir or --samples-root)\n";
    return 1;
  }

  if (!labels_path.empty()) {
    auto labels = read_label_file(labels_path);
    auto cls = c_strings(labels);
    char* out = nullptr;
    ++total;
    check(rockid_classify_labels(kb.kb, cls.data(), static_cast<int32_t>(cls.size()),
                                 std::filesystem::path(labels_path).stem().string().c_str(),
                                 &out),
          "classify labels");
    emit(take_string(out));
  } else {
    if (model_path.empty()) {
      std::cerr << "rockid: classify: spectral mode needs --model\n";
      return 1;
    }
    rockid_model* model = nullptr;
    check(rockid_model_open(model_path.c_str(), &model), "model open");
    rockid_train_config tc = cfg.train;
    tc.seed = cfg.seed;
    int32_t pmode = mode == "mc" ? ROCKID_PREDICT_MC : ROCKID_PREDICT_BASE;

    std::vector<std::string> dirs;
    if (!sample_dir.empty()) dirs.push_back(sample_dir);
    if (!samples_root.empty()) {
      for (const auto& e : std::filesystem::directory_iterator(samples_root))
        if (e.is_directory()) dirs.push_back(e.path().string());
      std::sort(dirs.begin(), dirs.end());
    }
    for (const auto& d : dirs) {
      ++total;
      char* out = nullptr;
      rockid_status s = rockid_classify_sample_dir(model, kb.kb, d.c_str(), pmode,
                                                   cfg.min_points, &tc, &out);
      if (s != ROCKID_OK) {
        ++failures;
        json err = {{"sample_id", std::filesystem::path(d).filename().string()},
                    {"error", rockid_last_error()},
                    {"status", rockid_status_name(s)}};
        records << err.dump() << "\n";
        std::cerr << "rockid: " << d << ": " << rockid_last_error() << "\n";
        continue;
      }
      emit(take_string(out));
    }
    rockid_model_free(model);
  }

  if (!out_path.empty()) write_file(out_path, records.str());
  if (failures == total && total > 0) return 2;
  return 0;
}

int cmd_evaluate(bool golden, const std::string& fixture, bool cv,
                 const std::string& dataset_path, int k, const std::string& model_kind,
                 const EffectiveConfig& cfg, const std::string& out_path) {
  if (golden) {
    KbHandle kb = open_kb(cfg.kb_path);
    char* report = nullptr;
    check(rockid_eval_golden(kb.kb, fixture.c_str(), &report), "golden suite");
    std::string report_s = take_string(report);
    json j = json::parse(report_s);
    std::printf("case  classified  oracle      expert             oracle  expert\n");
    for (const auto& c : j["cases"])
      std::printf("%4d  %-10s  %-10s  %-17s  %-6s  %s\n", c["id"].get<int>(),
                  c["classified"].get<std::string>().c_str(),
                  c["oracle_expected"].get<std::string>().c_str(),
                  c["expert_result"].get<std::string>().c_str(),
                  c["oracle_match"].get<bool>() ? "match" : "MISS",
                  c["expert_agreement"].get<bool>() ? "agree" : "divergence");
    std::printf("oracle match %d/%d, expert agreement %d/%d\n",
                j["oracle_matches"].get<int>(), static_cast<int>(j["num_cases"].get<size_t>()),
                j["expert_agreements"].get<int>(),
                static_cast<int>(j["num_cases"].get<size_t>()));
    const auto& cm = j["rock_confusion"];
    auto names = cm["class_names"].get<std::vector<std::string>>();
    std::printf("\nrock-level confusion (rows: expert intent, cols: classified):\n%-12s", "");
    for (const auto& n : names) std::printf("%11s", n.c_str());
    std::printf("\n");
    for (size_t i = 0; i < names.size(); ++i) {
      std::printf("%-12s", names[i].c_str());
      for (size_t k = 0; k < names.size(); ++k)
        std::printf("%11lld", cm["counts"][i][k].get<long long>());
      std::printf("\n");
    }
    if (!out_path.empty()) write_file(out_path, stamp_report(report_s, cfg));
    return 0;
  }

  if (cv) {
    rockid_dataset* ds = nullptr;
    check(rockid_dataset_open(dataset_path.c_str(), &ds), "dataset open");
    rockid_train_config tc = cfg.train;
    tc.seed = cfg.seed;

    std::vector<std::pair<std::string, std::pair<int32_t, int32_t>>> kinds;  // name -> (kind, unk)
    if (model_kind == "all") {
      kinds = {{"cnn", {ROCKID_MODEL_CNN, 0}},
               {"cnn-unk", {ROCKID_MODEL_CNN, 1}},
               {"mlp", {ROCKID_MODEL_MLP, 0}}};
    } else if (model_kind == "cnn-unk") {
      kinds = {{"cnn-unk", {ROCKID_MODEL_CNN, 1}}};
    } else if (model_kind == "mlp") {
      kinds = {{"mlp", {ROCKID_MODEL_MLP, 0}}};
    } else {
      kinds = {{"cnn", {ROCKID_MODEL_CNN, 0}}};
    }

    // plot-ready rows: model, mean accuracy, standard error (bar-chart data)
    json bars = json::array();
    for (const auto& [name, kp] : kinds) {
      char* report = nullptr;
      check(rockid_eval_cross_validate(ds, kp.first, kp.second, &cfg.cnn, &tc, k, cfg.seed,
                                       &report),
            "cross-validation (" + name + ")");
      json j = json::parse(take_string(report));
      std::printf("%-8s mean accuracy %.2f%% +- %.2f%% (k=%d)\n", name.c_str(),
                  j["mean_accuracy"].get<double>() * 100.0, j["std_error"].get<double>() * 100.0,
                  k);
      bars.push_back({{"model", name},
                      {"mean_accuracy", j["mean_accuracy"]},
                      {"std_error", j["std_error"]},
                      {"folds", j["folds"]}});
    }
    rockid_dataset_free(ds);
    if (!out_path.empty()) {
      json out = {{"format_version", 1}, {"k", k}, {"models", bars}};
      write_file(out_path, stamp_report(out.dump(), cfg));
    }
    return 0;
  }

  std::cerr << "rockid: evaluate: choose --golden or --cv\n";
  return 1;
}

int cmd_report(const std::string& results_path, const std::string& truth_path,
               const std::string& out_path, const EffectiveConfig& cfg) {
  std::ifstream in(results_path);
  if (!in) {
    std::cerr << "rockid: cannot read " << results_path << "\n";
    return 2;
  }
  std::map<std::string, std::string> predicted;
  int errors = 0;
  std::string line;
  std::printf("%-24s %-10s %8s %8s  %s\n", "sample", "label", "w_max", "margin", "exclusions");
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      std::cerr << "rockid: report: skipping unparseable record line\n";
      continue;
    }
    if (j.contains("error")) {
      ++errors;
      std::printf("%-24s ERROR: %s\n", j["sample_id"].get<std::string>().c_str(),
                  j["error"].get<std::string>().c_str());
      continue;
    }
    const auto& c = j["classification"];
    std::string fired;
    for (const auto& e : c["fired_exclusions"])
      fired += (fired.empty() ? "" : ", ") + e["species"].get<std::string>();
    std::printf("%-24s %-10s %8.3f %8.3f  %s\n", j["sample_id"].get<std::string>().c_str(),
                c["label"].get<std::string>().c_str(), c["w_max"].get<double>(),
                c["margin"].get<double>(), fired.c_str());
    predicted[j["sample_id"].get<std::string>()] = c["label"].get<std::string>();
  }
  if (errors) std::printf("%d error record(s)\n", errors);

  if (!truth_path.empty()) {
    std::ifstream tin(truth_path);
    if (!tin) {
      std::cerr << "rockid: cannot read " << truth_path << "\n";
      return 2;
    }
    std::vector<std::string> tls, pls;
    while (std::getline(tin, line)) {
      std::string s = trim(line);
      if (s.empty() || s[0] == '#') continue;
      auto parts = split_list(s, ',');
      if (parts.size() != 2) {
        std::cerr << "rockid: truth file lines must be 'sample_id, rock'\n";
        return 2;
      }
      auto it = predicted.find(parts[0]);
      if (it == predicted.end()) continue;
      tls.push_back(parts[1]);
      pls.push_back(it->second);
    }
    const std::vector<std::string> rocks = {"granite", "sandstone", "limestone", "other"};
    std::vector<int64_t> counts(rocks.size() * rocks.size(), 0);
    auto idx = [&](const std::string& l) {
      std::string low;
      for (char ch : l) low += static_cast<char>(::tolower(ch));
      for (size_t i = 0; i < rocks.size(); ++i)
        if (rocks[i] == low) return i;
      return rocks.size() - 1;  // anything else counts as "other"
    };
    for (size_t i = 0; i < tls.size(); ++i)
      counts[idx(tls[i]) * rocks.size() + idx(pls[i])] += 1;

    // rock-level confusion table
    std::printf("\nconfusion (rows true / cols predicted):\n%-12s", "");
    for (const auto& r : rocks) std::printf("%12s", r.c_str());
    std::printf("\n");
    for (size_t i = 0; i < rocks.size(); ++i) {
      std::printf("%-12s", rocks[i].c_str());
      for (size_t jx = 0; jx < rocks.size(); ++jx)
        std::printf("%12lld", static_cast<long long>(counts[i * rocks.size() + jx]));
      std::printf("\n");
    }

    auto cls = c_strings(rocks);
    char* metrics_json = nullptr;
    check(rockid_metrics_from_confusion(counts.data(), cls.data(),
                                        static_cast<int32_t>(rocks.size()), &metrics_json),
          "metrics");
    std::string mj = take_string(metrics_json);
    json m = json::parse(mj);
    std::printf("\naccuracy: %.1f%%\n", m["accuracy"].get<double>() * 100.0);
    for (const auto& r : rocks) {
      const auto& pm = m["per_class"][r];
      auto pct = [](const json& v) {
        return v.is_null() ? std::string("n/a")
                           : (std::ostringstream{}
                                  << static_cast<int>(v.get<double>() * 1000 + 0.5) / 10.0
                                  << "%")
                                 .str();
      };
      auto f1s = [](const json& v) {
        if (v.is_null()) return std::string("n/a");
        char b[16];
        std::snprintf(b, sizeof(b), "%.2f", v.get<double>());
        return std::string(b);
      };
      std::printf("%-12s precision %-6s recall %-6s f1 %s\n", r.c_str(),
                  pct(pm["precision"]).c_str(), pct(pm["recall"]).c_str(),
                  f1s(pm["f1"]).c_str());
    }
    if (!out_path.empty()) {
      json out = {{"format_version", 1},
                  {"confusion", {{"class_names", rocks}, {"counts", counts}}},
                  {"metrics", m}};
      write_file(out_path, stamp_report(out.dump(), cfg));
    }
  } else if (!out_path.empty()) {
    json out = {{"format_version", 1}, {"samples", predicted}, {"errors", errors}};
    write_file(out_path, stamp_report(out.dump(), cfg));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rockid: mineral identification from Raman spectra and rule-based rock-type "
               "deduction"};
  app.require_subcommand(1);

  // shared options, merged per subcommand: flags > config file > defaults
  struct Common {
    std::string config_path;
    std::optional<uint64_t> seed;
    std::optional<std::string> kb_path;
    std::optional<int> grid_points;
    std::optional<double> grid_min, grid_max;
    std::optional<std::string> classes;
    std::optional<int> min_points;
  };

  auto add_common = [](CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_path, "run-config file (key = value lines)");
    cmd->add_option("--seed", c.seed, "random seed");
    cmd->add_option("--kb", c.kb_path, "knowledge-base JSON (default: built-in)");
    cmd->add_option("--grid-points", c.grid_points, "wavenumber grid length");
    cmd->add_option("--grid-min", c.grid_min, "grid lower bound, cm^-1");
    cmd->add_option("--grid-max", c.grid_max, "grid upper bound, cm^-1");
    cmd->add_option("--classes", c.classes, "comma-separated mineral class list");
    cmd->add_option("--min-points", c.min_points, "minimum measurement points per sample");
  };

  auto effective = [](const Common& c) {
    EffectiveConfig cfg;
    cfg.merge_file(RunConfig::load(c.config_path));
    if (c.seed) cfg.seed = *c.seed;
    if (c.kb_path) cfg.kb_path = *c.kb_path;
    if (c.grid_points) cfg.grid.num_points = *c.grid_points;
    if (c.grid_min) cfg.grid.min_wavenumber = *c.grid_min;
    if (c.grid_max) cfg.grid.max_wavenumber = *c.grid_max;
    if (c.classes) cfg.class_names = split_list(*c.classes, ',');
    if (c.min_points) cfg.min_points = *c.min_points;
    return cfg;
  };

  // ingest
  auto* ingest = app.add_subcommand("ingest", "parse a directory of spectrum files into a "
                                              "dataset file");
  Common ing_c;
  std::string ing_dir, ing_out, ing_report;
  ingest->add_option("--dir", ing_dir, "directory of RRUFF-style spectrum files")->required();
  ingest->add_option("--out", ing_out, "output dataset file")->required();
  ingest->add_option("--report", ing_report, "write the skip/failure report JSON here");
  add_common(ingest, ing_c);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus or expand a dataset");
  Common syn_c;
  std::string syn_out, syn_expand, syn_spec, syn_manifest;
  int syn_per_class = 50;
  double syn_noise = 0.01;
  std::optional<double> syn_multiplier;
  synth->add_option("--out", syn_out, "output dataset file")->required();
  synth->add_option("--expand", syn_expand, "expand this dataset file instead of generating");
  synth->add_option("--spec", syn_spec, "mineral spec file (key-value) for corpus generation");
  synth->add_option("--per-class", syn_per_class, "samples per class for corpus generation");
  synth->add_option("--noise", syn_noise, "corpus noise sigma");
  synth->add_option("--multiplier", syn_multiplier, "expansion target multiplier");
  synth->add_option("--manifest", syn_manifest, "write the expansion manifest JSON here");
  add_common(synth, syn_c);

  // train
  auto* train = app.add_subcommand("train", "train a mineral classifier");
  Common trn_c;
  std::string trn_dataset, trn_out, trn_model = "cnn", trn_history;
  bool trn_unc = false;
  train->add_option("--dataset", trn_dataset, "dataset file")->required();
  train->add_option("--out", trn_out, "output checkpoint file")->required();
  train->add_option("--model", trn_model, "cnn | mlp")->check(CLI::IsMember({"cnn", "mlp"}));
  train->add_flag("--uncertainty", trn_unc, "train the uncertainty-aware variant");
  train->add_option("--history", trn_history, "write the loss history JSON here");
  add_common(train, trn_c);

  // classify
  auto* classify = app.add_subcommand("classify", "classify rock samples");
  Common cls_c;
  std::string cls_model, cls_labels, cls_dir, cls_root, cls_mode = "base", cls_out;
  classify->add_option("--model", cls_model, "model checkpoint");
  classify->add_option("--labels", cls_labels, "mineral label file (oracle-labels mode)");
  classify->add_option("--sample-dir", cls_dir, "directory of spectra for one sample");
  classify->add_option("--samples-root", cls_root, "directory of sample directories");
  classify->add_option("--mode", cls_mode, "base | mc")->check(CLI::IsMember({"base", "mc"}));
  classify->add_option("--out", cls_out, "write RockResult records (JSONL) here");
  add_common(classify, cls_c);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "golden suite or cross-validation");
  Common evl_c;
  bool evl_golden = false, evl_cv = false;
  std::string evl_fixture = "data/golden_cases.json", evl_dataset, evl_model = "cnn", evl_out;
  int evl_k = 5;
  evaluate->add_flag("--golden", evl_golden, "run the 30-case golden suite");
  evaluate->add_option("--fixture", evl_fixture, "golden fixture file");
  evaluate->add_flag("--cv", evl_cv, "run k-fold cross-validation");
  evaluate->add_option("--dataset", evl_dataset, "dataset file for --cv");
  evaluate->add_option("--k", evl_k, "number of folds");
  evaluate->add_option("--model", evl_model, "cnn | cnn-unk | mlp | all")
      ->check(CLI::IsMember({"cnn", "cnn-unk", "mlp", "all"}));
  evaluate->add_option("--out", evl_out, "write the report JSON here");
  add_common(evaluate, evl_c);

  // report
  auto* report = app.add_subcommand("report", "summarize RockResult records");
  Common rep_c;
  std::string rep_results, rep_truth, rep_out;
  report->add_option("--results", rep_results, "JSONL records from classify")->required();
  report->add_option("--truth", rep_truth, "ground-truth file: 'sample_id, rock' lines");
  report->add_option("--out", rep_out, "write the summary JSON here");
  add_common(report, rep_c);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) return cmd_ingest(ing_dir, ing_out, effective(ing_c), ing_report);
    if (*synth) {
      EffectiveConfig cfg = effective(syn_c);
      if (syn_multiplier) cfg.augment.target_multiplier = *syn_multiplier;
      return cmd_synth(syn_out, syn_expand, syn_spec, syn_per_class, syn_noise, cfg,
                       syn_manifest);
    }
    if (*train) return cmd_train(trn_dataset, trn_out, trn_model, trn_unc, effective(trn_c),
                                 trn_history);
    if (*classify)
      return cmd_classify(cls_model, cls_labels, cls_dir, cls_root, cls_mode, effective(cls_c),
                          cls_out);
    if (*evaluate)
      return cmd_evaluate(evl_golden, evl_fixture, evl_cv, evl_dataset, evl_k, evl_model,
                          effective(evl_c), evl_out);
    if (*report) return cmd_report(rep_results, rep_truth, rep_out, effective(rep_c));
  } catch (const std::exception& e) {
    std::cerr << "rockid: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
