#include "core/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "core/binio.hpp"

namespace rockid {

namespace fs = std::filesystem;

void LabeledDataset::validate() const {
  grid.validate();
  if (data.size() != labels.size() * static_cast<size_t>(grid.num_points))
    fail(Status::ShapeMismatch, "dataset: data size does not match labels x grid");
  std::set<std::string> seen(class_names.begin(), class_names.end());
  if (seen.size() != class_names.size())
    fail(Status::InvalidArgument, "dataset: class names not unique");
  for (int l : labels)
    if (l < 0 || static_cast<size_t>(l) >= class_names.size())
      fail(Status::InvalidArgument, "dataset: label index out of range");
}

std::string LoadReport::to_json() const {
  nlohmann::json j;
  j["format_version"] = 1;
  j["loaded"] = loaded;
  j["skipped"] = skipped_by_name;
  nlohmann::json fl = nlohmann::json::array();
  for (const auto& f : failures) fl.push_back({{"file", f.file}, {"error", f.error}});
  j["failures"] = fl;
  return j.dump(2);
}

LabeledDataset load_dataset(const fs::path& dir,
                            const std::vector<std::string>& class_names,
                            const GridSpec& grid, LoadReport* report) {
  grid.validate();
  if (class_names.empty()) fail(Status::InvalidArgument, "load_dataset: empty class list");
  std::error_code ec;
  if (!fs::is_directory(dir, ec))
    fail(Status::IoError, "load_dataset: not a readable directory: " + dir.string());

  std::map<std::string, int> class_index;  // lower-cased name -> label
  for (size_t i = 0; i < class_names.size(); ++i)
    class_index[to_lower(class_names[i])] = static_cast<int>(i);

  // Deterministic file order regardless of directory iteration order.
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  LabeledDataset ds;
  ds.class_names = class_names;
  ds.grid = grid;
  LoadReport local;
  LoadReport& rep = report ? *report : local;

  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
      rep.failures.push_back({file.string(), "unreadable"});
      continue;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
      ParsedSpectrum parsed = parse_spectrum_file(ss.str());
      auto it = class_index.find(to_lower(parsed.metadata.mineral_name));
      if (it == class_index.end()) {
        std::string key = parsed.metadata.mineral_name.empty() ? "(unnamed)"
                                                               : parsed.metadata.mineral_name;
        rep.skipped_by_name[key] += 1;
        continue;
      }
      std::vector<double> v = normalize(resample(parsed.spectrum, grid));
      ds.data.insert(ds.data.end(), v.begin(), v.end());
      ds.labels.push_back(it->second);
      rep.loaded += 1;
    } catch (const Error& e) {
      rep.failures.push_back({file.string(), e.what()});
    }
  }

  if (ds.labels.empty())
    fail(Status::EmptyInput, "load_dataset: no spectra found for the configured classes in " +
                                 dir.string());
  return ds;
}

namespace {
constexpr uint32_t kDatasetMagic = 0x53444b52;  // "RKDS"
constexpr uint32_t kDatasetVersion = 1;
}  // namespace

void save_dataset(const LabeledDataset& ds, const fs::path& path,
                  const std::string& config_hash, uint64_t seed) {
  ds.validate();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(Status::IoError, "cannot write " + path.string());
  binio::put_u32(os, kDatasetMagic);
  binio::put_u32(os, kDatasetVersion);
  binio::put_string(os, config_hash);
  binio::put_u64(os, seed);
  binio::put_f64(os, ds.grid.min_wavenumber);
  binio::put_f64(os, ds.grid.max_wavenumber);
  binio::put_u32(os, static_cast<uint32_t>(ds.grid.num_points));
  binio::put_u32(os, static_cast<uint32_t>(ds.class_names.size()));
  for (const auto& name : ds.class_names) binio::put_string(os, name);
  binio::put_u32(os, static_cast<uint32_t>(ds.labels.size()));
  for (int l : ds.labels) binio::put_u32(os, static_cast<uint32_t>(l));
  for (double d : ds.data) binio::put_f64(os, d);
  if (!os) fail(Status::IoError, "write failed: " + path.string());
}

LabeledDataset load_dataset_file(const fs::path& path, DatasetFileInfo* info) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(Status::IoError, "cannot read " + path.string());
  if (binio::get_u32(is) != kDatasetMagic)
    fail(Status::ParseError, path.string() + ": not a dataset file");
  uint32_t version = binio::get_u32(is);
  if (version != kDatasetVersion)
    fail(Status::ParseError, path.string() + ": unsupported dataset version");
  std::string config_hash = binio::get_string(is);
  uint64_t seed = binio::get_u64(is);
  if (info) {
    info->version = version;
    info->config_hash = config_hash;
    info->seed = seed;
  }
  LabeledDataset ds;
  ds.grid.min_wavenumber = binio::get_f64(is);
  ds.grid.max_wavenumber = binio::get_f64(is);
  ds.grid.num_points = static_cast<int>(binio::get_u32(is));
  uint32_t num_classes = binio::get_u32(is);
  ds.class_names.reserve(num_classes);
  for (uint32_t i = 0; i < num_classes; ++i) ds.class_names.push_back(binio::get_string(is));
  uint32_t num_samples = binio::get_u32(is);
  ds.labels.reserve(num_samples);
  for (uint32_t i = 0; i < num_samples; ++i)
    ds.labels.push_back(static_cast<int>(binio::get_u32(is)));
  ds.data.resize(static_cast<size_t>(num_samples) * static_cast<size_t>(ds.grid.num_points));
  for (double& d : ds.data) d = binio::get_f64(is);
  ds.validate();
  return ds;
}

}  // namespace rockid
