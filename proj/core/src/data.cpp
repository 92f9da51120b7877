#include "cemb/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "cemb/errors.hpp"
#include "cemb/random.hpp"
#include "cemb/text.hpp"

namespace cemb {

Dataset Dataset::make(RealMatrix features, std::vector<std::size_t> labels,
                      std::size_t class_count, std::string provenance,
                      bool require_every_class) {
  if (features.rows() != labels.size()) {
    throw ShapeError("dataset has " + std::to_string(features.rows()) + " rows but " +
                     std::to_string(labels.size()) + " labels");
  }
  Dataset d;
  d.class_counts.assign(class_count, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= class_count) {
      throw SchemaError("sample " + std::to_string(i) + " has label " +
                        std::to_string(labels[i]) + " but there are " +
                        std::to_string(class_count) + " classes");
    }
    ++d.class_counts[labels[i]];
  }
  if (require_every_class) {
    for (std::size_t c = 0; c < class_count; ++c) {
      if (d.class_counts[c] == 0) {
        throw SchemaError("class " + std::to_string(c) + " has no samples");
      }
    }
  }
  if (!features.all_finite()) throw NumericError("dataset has non-finite features");
  d.features = std::move(features);
  d.labels = std::move(labels);
  d.class_count = class_count;
  d.provenance = std::move(provenance);
  return d;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  RealMatrix f(indices.size(), width());
  std::vector<std::size_t> l;
  l.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto src = row(indices[r]);
    std::copy(src.begin(), src.end(), f.row(r).begin());
    l.push_back(labels[indices[r]]);
  }
  return make(std::move(f), std::move(l), class_count, provenance, false);
}

void SynthConfig::validate() const {
  if (classes < 1) throw ConfigError("synth: need at least one class");
  if (class_counts.size() != classes) {
    throw ConfigError("synth: class_counts has " + std::to_string(class_counts.size()) +
                      " entries for " + std::to_string(classes) + " classes");
  }
  for (std::size_t c = 0; c < classes; ++c) {
    if (class_counts[c] < 2) {
      throw ConfigError("synth: class " + std::to_string(c) +
                        " needs at least 2 samples so genuine pairs exist");
    }
  }
  if (input_width() == 0) throw ConfigError("synth: zero input dimensions");
  if (!noise_scales.empty() && noise_scales.size() != input_width()) {
    throw ConfigError("synth: noise_scales has " + std::to_string(noise_scales.size()) +
                      " entries for " + std::to_string(input_width()) + " dims");
  }
  for (double s : noise_scales) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("synth: noise scales must be >= 0");
  }
  if (!(corrupted_fraction >= 0.0 && corrupted_fraction <= 1.0)) {
    throw ConfigError("synth: corrupted_fraction must lie in [0, 1]");
  }
  if (!(corruption_multiplier >= 0.0) || !std::isfinite(corruption_multiplier)) {
    throw ConfigError("synth: corruption_multiplier must be >= 0");
  }
  if (!std::isfinite(separation)) throw ConfigError("synth: separation must be finite");
}

SynthConfig SynthConfig::from_kv(const KvConfig& kv) {
  SynthConfig c;
  c.seed = kv.u64("seed", c.seed);
  c.classes = kv.size("classes", c.classes);
  c.class_counts = kv.sizes("class_counts", c.class_counts);
  c.signal_dims = kv.size("signal_dims", c.signal_dims);
  c.noise_dims = kv.size("noise_dims", c.noise_dims);
  c.separation = kv.real("separation", c.separation);
  c.noise_scales = kv.reals("noise_scales", c.noise_scales);
  c.corrupted_fraction = kv.real("corrupted_fraction", c.corrupted_fraction);
  c.corruption_multiplier = kv.real("corruption_multiplier", c.corruption_multiplier);
  kv.reject_unused();
  c.validate();
  return c;
}

KvConfig SynthConfig::to_kv() const {
  auto join_sizes = [](const std::vector<std::size_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
  };
  KvConfig kv;
  kv.set("seed", std::to_string(seed));
  kv.set("classes", std::to_string(classes));
  kv.set("class_counts", join_sizes(class_counts));
  kv.set("signal_dims", std::to_string(signal_dims));
  kv.set("noise_dims", std::to_string(noise_dims));
  kv.set("separation", text::format_real(separation));
  std::string scales;
  for (std::size_t i = 0; i < noise_scales.size(); ++i) {
    scales += (i ? "," : "") + text::format_real(noise_scales[i]);
  }
  kv.set("noise_scales", scales);
  kv.set("corrupted_fraction", text::format_real(corrupted_fraction));
  kv.set("corruption_multiplier", text::format_real(corruption_multiplier));
  return kv;
}

SyntheticData synth_generate_with_mask(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng = Rng::stream(cfg.seed, "data");
  const std::size_t width = cfg.input_width();

  // Noise dims carry no class information: their centers stay at zero.
  RealMatrix centers(cfg.classes, width);
  for (std::size_t c = 0; c < cfg.classes; ++c) {
    for (std::size_t d = 0; d < cfg.signal_dims; ++d) centers(c, d) = cfg.separation * rng.normal();
  }

  std::vector<std::size_t> labels;
  for (std::size_t c = 0; c < cfg.classes; ++c) labels.insert(labels.end(), cfg.class_counts[c], c);
  const std::size_t n = labels.size();
  // Fisher-Yates so rows are not grouped by class.
  for (std::size_t i = n; i > 1; --i) std::swap(labels[i - 1], labels[rng.index(i)]);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  const auto corrupted_count =
      static_cast<std::size_t>(std::llround(cfg.corrupted_fraction * static_cast<double>(n)));
  std::vector<bool> corrupted(n, false);
  for (std::size_t i = 0; i < corrupted_count; ++i) corrupted[order[i]] = true;

  RealMatrix features(n, width);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = features.row(i);
    const auto center = centers.row(labels[i]);
    for (std::size_t d = 0; d < width; ++d) {
      double scale = cfg.noise_scales.empty() ? 1.0 : cfg.noise_scales[d];
      if (corrupted[i] && d >= cfg.signal_dims) scale *= cfg.corruption_multiplier;
      row[d] = center[d] + scale * rng.normal();
    }
  }
  std::ostringstream prov;
  prov << "synth seed=" << cfg.seed;
  return {Dataset::make(std::move(features), std::move(labels), cfg.classes, prov.str()),
          std::move(corrupted)};
}

Dataset synth_generate(const SynthConfig& cfg) { return synth_generate_with_mask(cfg).dataset; }

std::vector<Fold> kfold_split(const Dataset& data, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw StratificationError("k-fold needs k >= 2");
  std::vector<std::vector<std::size_t>> by_class(data.class_count);
  for (std::size_t i = 0; i < data.size(); ++i) by_class[data.labels[i]].push_back(i);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].size() < k) {
      throw StratificationError("class " + std::to_string(c) + " has " +
                                std::to_string(by_class[c].size()) + " samples, fewer than k=" +
                                std::to_string(k));
    }
  }
  Rng rng = Rng::stream(seed, "folds");
  std::vector<Fold> folds(k);
  // Continue the round-robin across classes so fold sizes stay within one.
  std::size_t next = 0;
  for (auto& members : by_class) {
    for (std::size_t i = members.size(); i > 1; --i) {
      std::swap(members[i - 1], members[rng.index(i)]);
    }
    for (std::size_t idx : members) {
      folds[next].test.push_back(idx);
      next = (next + 1) % k;
    }
  }
  for (std::size_t f = 0; f < k; ++f) {
    auto& test = folds[f].test;
    std::sort(test.begin(), test.end());
    for (std::size_t g = 0; g < k; ++g) {
      if (g == f) continue;
      const auto& other = folds[g].test;
      folds[f].train.insert(folds[f].train.end(), other.begin(), other.end());
    }
  }
  // The other folds' test lists must be sorted before merging into train.
  for (auto& fold : folds) std::sort(fold.train.begin(), fold.train.end());
  return folds;
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  for (std::size_t d = 0; d < data.width(); ++d) out << 'f' << d << ',';
  out << "label\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.row(i)) out << text::format_real(v) << ',';
    out << data.labels[i] << '\n';
  }
}

Dataset read_dataset_csv(std::istream& in, const std::string& source,
                         std::optional<std::size_t> class_count) {
  std::string line;
  if (!std::getline(in, line) || text::trim(line).empty()) {
    throw ParseError(source + ":1: empty dataset file (missing header)");
  }
  const auto header = text::split(text::trim(line), ',');
  if (header.size() < 2 || text::trim(header.back()) != "label") {
    throw ParseError(source + ":1: header must be f0,...,f{D-1},label");
  }
  const std::size_t width = header.size() - 1;
  for (std::size_t d = 0; d < width; ++d) {
    if (text::trim(header[d]) != "f" + std::to_string(d)) {
      throw ParseError(source + ":1: header column " + std::to_string(d) + " should be f" +
                       std::to_string(d));
    }
  }

  std::vector<double> values;
  std::vector<std::size_t> labels;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(text::trim(line), ',');
    if (fields.size() != header.size()) {
      throw ParseError(source + ":" + std::to_string(lineno) + ": row has " +
                       std::to_string(fields.size()) + " fields, header has " +
                       std::to_string(header.size()));
    }
    for (std::size_t d = 0; d < width; ++d) {
      double v;
      if (!text::parse_real(fields[d], v) || !std::isfinite(v)) {
        throw ParseError(source + ":" + std::to_string(lineno) + ": bad value in column f" +
                         std::to_string(d));
      }
      values.push_back(v);
    }
    std::size_t label;
    if (!text::parse_size(fields.back(), label)) {
      throw ParseError(source + ":" + std::to_string(lineno) + ": bad label");
    }
    if (class_count && label >= *class_count) {
      throw SchemaError(source + ":" + std::to_string(lineno) + ": label " +
                        std::to_string(label) + " >= class count " +
                        std::to_string(*class_count));
    }
    labels.push_back(label);
  }
  if (labels.empty()) throw ParseError(source + ": dataset has a header but no rows");
  const std::size_t classes =
      class_count ? *class_count : *std::max_element(labels.begin(), labels.end()) + 1;
  const std::size_t rows = labels.size();
  return Dataset::make(RealMatrix(rows, width, std::move(values)), std::move(labels), classes,
                       source);
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_dataset_csv(out, data);
  if (!out) throw Error("failed writing " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path, std::optional<std::size_t> class_count) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset " + path.string());
  return read_dataset_csv(in, path.string(), class_count);
}

}  // namespace cemb
