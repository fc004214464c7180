#include "core/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

namespace rockid {

void AugmentConfig::validate() const {
  if (!(target_multiplier >= 1.0))
    fail(Status::InvalidArgument, "augment.target_multiplier: must be >= 1");
  if (pca_min_samples < 2) fail(Status::InvalidArgument, "augment.pca_min_samples: must be >= 2");
  if (pca_components < 1) fail(Status::InvalidArgument, "augment.pca_components: must be >= 1");
  if (shift_max < 0) fail(Status::InvalidArgument, "augment.shift_max: must be >= 0");
  if (!(scale_range[0] > 0.0 && scale_range[0] <= scale_range[1]))
    fail(Status::InvalidArgument, "augment.scale_range: must satisfy 0 < lo <= hi");
  if (noise_sigma < 0.0) fail(Status::InvalidArgument, "augment.noise_sigma: must be >= 0");
  if (coeff_sigma_scale < 0.0)
    fail(Status::InvalidArgument, "augment.coeff_sigma_scale: must be >= 0");
}

namespace {

int synthetic_count(double multiplier, size_t originals) {
  double extra = (multiplier - 1.0) * static_cast<double>(originals);
  return static_cast<int>(std::ceil(extra - 1e-12));
}

}  // namespace

SampleMatrix pca_augment(const SampleMatrix& class_vectors, const AugmentConfig& config,
                         Rng& rng) {
  config.validate();
  const size_t n = class_vectors.rows;
  const size_t d = class_vectors.cols;
  if (n < static_cast<size_t>(config.pca_min_samples))
    fail(Status::InvalidArgument, "pca_augment: too few samples (" + std::to_string(n) + " < " +
                                      std::to_string(config.pca_min_samples) + ")");

  Eigen::MatrixXd x(n, d);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < d; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
        class_vectors.data[i * d + j];

  Eigen::RowVectorXd mean = x.colwise().mean();
  Eigen::MatrixXd centered = x.rowwise() - mean;

  // PCA via the n x n Gram matrix; class sizes are small compared to the
  // grid length so this is the cheap side of the duality.
  Eigen::MatrixXd gram = centered * centered.transpose() / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success) fail(Status::Internal, "pca_augment: eigensolver failed");

  int k = std::min<int>({config.pca_components, static_cast<int>(n) - 1, static_cast<int>(d)});
  // eigenvalues ascend; take the top k.
  std::vector<int> order;
  for (int i = static_cast<int>(n) - 1; i >= 0 && static_cast<int>(order.size()) < k; --i)
    order.push_back(i);

  Eigen::MatrixXd components(k, d);  // unit-norm principal directions
  std::vector<double> comp_std(static_cast<size_t>(k), 0.0);
  for (int c = 0; c < k; ++c) {
    double lambda = std::max(0.0, eig.eigenvalues()(order[static_cast<size_t>(c)]));
    Eigen::VectorXd u = eig.eigenvectors().col(order[static_cast<size_t>(c)]);
    Eigen::RowVectorXd dir = u.transpose() * centered;
    double norm = dir.norm();
    if (norm > 1e-12) {
      dir /= norm;
      // Deterministic sign: largest-magnitude entry positive.
      Eigen::Index imax = 0;
      dir.cwiseAbs().maxCoeff(&imax);
      if (dir(imax) < 0.0) dir = -dir;
    } else {
      dir.setZero();
    }
    components.row(c) = dir;
    comp_std[static_cast<size_t>(c)] = std::sqrt(lambda);
  }

  // Per-sample coefficients in component space.
  Eigen::MatrixXd coeffs = centered * components.transpose();  // n x k

  const int new_count = synthetic_count(config.target_multiplier, n);
  SampleMatrix out;
  out.rows = static_cast<size_t>(new_count);
  out.cols = d;
  out.data.resize(out.rows * d, 0.0);

  for (int s = 0; s < new_count; ++s) {
    const Eigen::Index base = static_cast<Eigen::Index>(s % static_cast<int>(n));
    Eigen::RowVectorXd sample = mean;
    for (int c = 0; c < k; ++c) {
      double sigma = config.coeff_sigma_scale * comp_std[static_cast<size_t>(c)];
      double coeff = coeffs(base, c) + (sigma > 0.0 ? rng.normal(0.0, sigma) : 0.0);
      sample += coeff * components.row(c);
    }
    for (size_t j = 0; j < d; ++j)
      out.data[static_cast<size_t>(s) * d + j] =
          std::max(0.0, sample(static_cast<Eigen::Index>(j)));
  }
  return out;
}

std::vector<double> direct_variation(std::span<const double> vec, const AugmentConfig& config,
                                     Rng& rng) {
  config.validate();
  const size_t d = vec.size();
  std::vector<double> out(d, 0.0);

  int shift = config.shift_max > 0
                  ? static_cast<int>(rng.uniform_int(-config.shift_max, config.shift_max))
                  : 0;
  double scale = (config.scale_range[0] == config.scale_range[1])
                     ? config.scale_range[0]
                     : rng.uniform(config.scale_range[0], config.scale_range[1]);

  for (size_t i = 0; i < d; ++i) {
    long src = static_cast<long>(i) - shift;
    double v = (src >= 0 && src < static_cast<long>(d)) ? vec[static_cast<size_t>(src)] : 0.0;
    v *= scale;
    if (config.noise_sigma > 0.0) v += rng.normal(0.0, config.noise_sigma);
    out[i] = std::max(0.0, v);
  }
  return out;
}

std::string ExpandManifest::to_json() const {
  nlohmann::json j;
  j["format_version"] = 1;
  j["seed"] = seed;
  nlohmann::json cl = nlohmann::json::array();
  for (const auto& c : classes)
    cl.push_back({{"class", c.name}, {"original", c.original}, {"synthetic", c.synthetic},
                  {"path", c.path}, {"error", c.error}});
  j["classes"] = cl;
  return j.dump(2);
}

LabeledDataset expand_dataset(const LabeledDataset& dataset, const AugmentConfig& config,
                              ExpandManifest* manifest) {
  config.validate();
  dataset.validate();
  if (dataset.labels.empty()) fail(Status::EmptyInput, "expand_dataset: empty dataset");

  const size_t d = static_cast<size_t>(dataset.grid.num_points);
  LabeledDataset out;
  out.class_names = dataset.class_names;
  out.grid = dataset.grid;
  // Originals first, unchanged.
  out.data = dataset.data;
  out.labels = dataset.labels;

  ExpandManifest local;
  ExpandManifest& man = manifest ? *manifest : local;
  man.seed = config.seed;
  man.classes.clear();

  for (size_t cls = 0; cls < dataset.class_names.size(); ++cls) {
    std::vector<size_t> idx;
    for (size_t i = 0; i < dataset.labels.size(); ++i)
      if (dataset.labels[i] == static_cast<int>(cls)) idx.push_back(i);

    ExpandManifest::PerClass entry;
    entry.name = dataset.class_names[cls];
    entry.original = static_cast<int>(idx.size());

    if (idx.empty()) {
      entry.path = "none";
      man.classes.push_back(entry);
      continue;
    }

    const int new_count = synthetic_count(config.target_multiplier, idx.size());
    if (new_count == 0) {
      entry.path = "none";
      man.classes.push_back(entry);
      continue;
    }

    // Independent per-class stream so classes can be expanded concurrently
    // without changing results.
    Rng rng(config.seed, stream_id("expand-class", cls));
    try {
      if (idx.size() >= static_cast<size_t>(config.pca_min_samples)) {
        entry.path = "pca";
        SampleMatrix m;
        m.rows = idx.size();
        m.cols = d;
        m.data.resize(m.rows * d);
        for (size_t r = 0; r < idx.size(); ++r) {
          auto row = dataset.row(idx[r]);
          std::copy(row.begin(), row.end(), m.row(r).begin());
        }
        SampleMatrix synth = pca_augment(m, config, rng);
        for (size_t r = 0; r < synth.rows; ++r) {
          out.data.insert(out.data.end(), synth.row(r).begin(), synth.row(r).end());
          out.labels.push_back(static_cast<int>(cls));
        }
        entry.synthetic = static_cast<int>(synth.rows);
      } else {
        entry.path = "direct";
        for (int s = 0; s < new_count; ++s) {
          auto row = dataset.row(idx[static_cast<size_t>(s) % idx.size()]);
          std::vector<double> v = direct_variation(row, config, rng);
          out.data.insert(out.data.end(), v.begin(), v.end());
          out.labels.push_back(static_cast<int>(cls));
        }
        entry.synthetic = new_count;
      }
    } catch (const Error& e) {
      entry.error = e.what();
    }
    man.classes.push_back(entry);
  }

  return out;
}

std::vector<SyntheticMineralSpec> default_mineral_specs() {
  auto mk = [](std::string name, std::vector<SyntheticMineralSpec::Peak> peaks) {
    SyntheticMineralSpec s;
    s.name = std::move(name);
    s.peaks = std::move(peaks);
    return s;
  };
  return {
      mk("Quartz", {{464, 10, 1.0}, {206, 14, 0.45}, {355, 9, 0.2}}),
      mk("Albite", {{507, 9, 1.0}, {478, 8, 0.75}, {291, 10, 0.3}}),
      mk("Anorthite", {{487, 9, 1.0}, {560, 11, 0.5}, {198, 12, 0.3}}),
      mk("Orthoclase", {{513, 9, 1.0}, {475, 8, 0.55}, {815, 12, 0.25}}),
      mk("Annite", {{550, 12, 1.0}, {190, 14, 0.55}, {1035, 16, 0.3}}),
      mk("Muscovite", {{702, 10, 1.0}, {264, 11, 0.7}, {410, 12, 0.35}}),
      mk("Phlogopite", {{680, 11, 1.0}, {326, 12, 0.5}, {1090, 15, 0.2}}),
      mk("Calcite", {{1086, 9, 1.0}, {712, 9, 0.3}, {281, 12, 0.35}}),
      mk("Dolomite", {{1098, 9, 1.0}, {725, 9, 0.3}, {299, 12, 0.35}}),
      mk("Pyrite", {{343, 8, 1.0}, {379, 8, 0.85}, {430, 10, 0.3}}),
      mk("Rutile", {{612, 12, 1.0}, {447, 11, 0.9}, {240, 16, 0.4}}),
      mk("Tourmaline", {{375, 11, 1.0}, {711, 12, 0.6}, {1062, 13, 0.3}}),
      mk("Jadeite", {{698, 9, 1.0}, {989, 10, 0.5}, {375, 10, 0.35}, {204, 11, 0.3}}),
      mk("Epidote", {{445, 10, 1.0}, {565, 10, 0.6}, {1090, 12, 0.25}, {915, 10, 0.3}}),
  };
}

std::string serialize_mineral_specs(const std::vector<SyntheticMineralSpec>& specs) {
  std::ostringstream os;
  char buf[96];
  for (const auto& s : specs) {
    os << "mineral = " << s.name << "\n";
    for (const auto& p : s.peaks) {
      std::snprintf(buf, sizeof(buf), "peak = %g, %g, %g\n", p.center, p.width, p.height);
      os << buf;
    }
    os << "\n";
  }
  return os.str();
}

std::vector<SyntheticMineralSpec> load_mineral_specs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Status::IoError, "cannot read " + path.string());

  std::vector<SyntheticMineralSpec> specs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    size_t eq = s.find('=');
    if (eq == std::string::npos)
      fail(Status::ParseError,
           path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    std::string key = to_lower(trim(s.substr(0, eq)));
    std::string value = trim(s.substr(eq + 1));
    if (key == "mineral") {
      if (value.empty())
        fail(Status::ParseError, path.string() + ":" + std::to_string(line_no) + ": empty name");
      specs.push_back({value, {}});
    } else if (key == "peak") {
      if (specs.empty())
        fail(Status::ParseError,
             path.string() + ":" + std::to_string(line_no) + ": peak before any mineral");
      auto parts = split(value, ',');
      if (parts.size() != 3)
        fail(Status::ParseError, path.string() + ":" + std::to_string(line_no) +
                                     ": peak needs center, width, height");
      SyntheticMineralSpec::Peak p;
      try {
        p.center = std::stod(trim(parts[0]));
        p.width = std::stod(trim(parts[1]));
        p.height = std::stod(trim(parts[2]));
      } catch (const std::exception&) {
        fail(Status::ParseError,
             path.string() + ":" + std::to_string(line_no) + ": non-numeric peak value");
      }
      specs.back().peaks.push_back(p);
    } else {
      fail(Status::ParseError,
           path.string() + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  if (specs.empty()) fail(Status::EmptyInput, path.string() + ": no mineral blocks");
  return specs;
}

LabeledDataset make_synthetic_corpus(const std::vector<SyntheticMineralSpec>& specs,
                                     int per_class, const GridSpec& grid, double noise_sigma,
                                     uint64_t seed) {
  grid.validate();
  if (specs.empty()) fail(Status::EmptyInput, "make_synthetic_corpus: no specs");
  if (per_class < 1) fail(Status::InvalidArgument, "make_synthetic_corpus: per_class must be >= 1");
  if (noise_sigma < 0.0)
    fail(Status::InvalidArgument, "make_synthetic_corpus: noise_sigma must be >= 0");

  std::set<std::string> names;
  for (const auto& s : specs) {
    if (!names.insert(to_lower(s.name)).second)
      fail(Status::InvalidArgument, "make_synthetic_corpus: duplicate mineral '" + s.name + "'");
    for (const auto& p : s.peaks) {
      if (p.center < grid.min_wavenumber || p.center > grid.max_wavenumber)
        fail(Status::InvalidArgument, "make_synthetic_corpus: peak at " +
                                          std::to_string(p.center) + " cm^-1 outside grid (" +
                                          s.name + ")");
      if (!(p.width > 0.0) || !(p.height > 0.0))
        fail(Status::InvalidArgument,
             "make_synthetic_corpus: peak width/height must be > 0 (" + s.name + ")");
    }
  }

  const size_t d = static_cast<size_t>(grid.num_points);
  LabeledDataset ds;
  ds.grid = grid;
  for (const auto& s : specs) ds.class_names.push_back(s.name);
  ds.data.reserve(specs.size() * static_cast<size_t>(per_class) * d);

  std::vector<double> base(d);
  for (size_t cls = 0; cls < specs.size(); ++cls) {
    std::fill(base.begin(), base.end(), 0.0);
    for (const auto& p : specs[cls].peaks) {
      double inv2s2 = 1.0 / (2.0 * p.width * p.width);
      for (size_t i = 0; i < d; ++i) {
        double dx = grid.point(static_cast<int>(i)) - p.center;
        base[i] += p.height * std::exp(-dx * dx * inv2s2);
      }
    }
    Rng rng(seed, stream_id("corpus-class", cls));
    std::vector<double> sample(d);
    for (int s = 0; s < per_class; ++s) {
      for (size_t i = 0; i < d; ++i)
        sample[i] = base[i] + (noise_sigma > 0.0 ? rng.normal(0.0, noise_sigma) : 0.0);
      std::vector<double> norm = normalize(sample);
      ds.data.insert(ds.data.end(), norm.begin(), norm.end());
      ds.labels.push_back(static_cast<int>(cls));
    }
  }
  return ds;
}

}  // namespace rockid
