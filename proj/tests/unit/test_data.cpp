#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "cemb/data.hpp"
#include "cemb/errors.hpp"

using namespace cemb;

namespace {
SynthConfig small(std::vector<std::size_t> counts) {
  SynthConfig c;
  c.classes = counts.size();
  c.class_counts = std::move(counts);
  c.signal_dims = 2;
  c.noise_dims = 2;
  c.seed = 3;
  return c;
}

double noise_variance(const SyntheticData& s, std::size_t first_noise_dim) {
  double sum = 0, sq = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.dataset.size(); ++i) {
    for (std::size_t d = first_noise_dim; d < s.dataset.width(); ++d) {
      const double v = s.dataset.features(i, d);
      sum += v;
      sq += v * v;
      ++n;
    }
  }
  const double mean = sum / static_cast<double>(n);
  return sq / static_cast<double>(n) - mean * mean;
}
}  // namespace

TEST_CASE("generator honours class counts and is deterministic") {
  const auto cfg = small({670, 12});
  const Dataset a = synth_generate(cfg);
  CHECK(a.class_counts == std::vector<std::size_t>{670, 12});
  CHECK(a.size() == 682);
  CHECK(a.width() == 4);
  const Dataset b = synth_generate(cfg);
  CHECK(a == b);
  auto other = cfg;
  other.seed = 4;
  CHECK_FALSE(synth_generate(other) == a);
}

TEST_CASE("corruption inflates noise-dim variance") {
  auto clean = small({300, 300});
  clean.corrupted_fraction = 0.0;
  auto dirty = clean;
  dirty.corrupted_fraction = 0.3;
  const auto c = synth_generate_with_mask(clean);
  const auto d = synth_generate_with_mask(dirty);
  CHECK(std::count(c.corrupted.begin(), c.corrupted.end(), true) == 0);
  CHECK(std::count(d.corrupted.begin(), d.corrupted.end(), true) == 180);
  CHECK(noise_variance(d, 2) > 2.0 * noise_variance(c, 2));
}

TEST_CASE("generator config validation") {
  auto cfg = small({10, 1});
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small({10, 10});
  cfg.classes = 3;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small({10, 10});
  cfg.noise_scales = {1.0};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small({10, 10});
  cfg.corrupted_fraction = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small({10, 10});
  cfg.signal_dims = 0;
  cfg.noise_dims = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("generator config key-value round trip") {
  auto cfg = small({5, 7, 9});
  cfg.noise_scales = {1, 2, 3, 4};
  const SynthConfig back = SynthConfig::from_kv(cfg.to_kv());
  CHECK(back.class_counts == cfg.class_counts);
  CHECK(back.noise_scales == cfg.noise_scales);
  CHECK(synth_generate(back) == synth_generate(cfg));
  KvConfig kv = cfg.to_kv();
  kv.set("sepration", "1");
  CHECK_THROWS_AS(SynthConfig::from_kv(kv), ConfigError);
}

TEST_CASE("kfold: ten samples into five folds") {
  const Dataset d = synth_generate(small({5, 5}));
  const auto folds = kfold_split(d, 5, 1);
  REQUIRE(folds.size() == 5);
  std::vector<int> seen(10, 0);
  for (const auto& f : folds) {
    CHECK(f.test.size() == 2);
    CHECK(f.train.size() == 8);
    for (auto i : f.test) ++seen[i];
    std::set<std::size_t> all(f.train.begin(), f.train.end());
    for (auto i : f.test) CHECK(all.insert(i).second);
    CHECK(all.size() == 10);
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](int v) { return v == 1; }));
}

TEST_CASE("kfold keeps class proportions within one sample") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Dataset d = synth_generate(small({83, 21}));
    const auto folds = kfold_split(d, 5, seed);
    for (const auto& f : folds) {
      std::size_t c1 = 0;
      for (auto i : f.test) c1 += d.labels[i];
      const std::size_t c0 = f.test.size() - c1;
      CHECK(std::abs(static_cast<double>(c0) - 83.0 / 5) <= 1.0);
      CHECK(std::abs(static_cast<double>(c1) - 21.0 / 5) <= 1.0);
      CHECK(std::is_sorted(f.test.begin(), f.test.end()));
    }
    CHECK(kfold_split(d, 5, seed)[2].test == folds[2].test);
  }
}

TEST_CASE("kfold errors") {
  const Dataset d = synth_generate(small({10, 3}));
  CHECK_THROWS_AS(kfold_split(d, 5, 0), StratificationError);
  CHECK_THROWS_AS(kfold_split(d, 1, 0), StratificationError);
  CHECK(kfold_split(d, 3, 0).size() == 3);
}

TEST_CASE("dataset csv round trip") {
  auto cfg = small({7, 9, 4});
  const Dataset d = synth_generate(cfg);
  std::stringstream buf;
  write_dataset_csv(buf, d);
  const Dataset back = read_dataset_csv(buf, "mem");
  CHECK(back == d);
  const auto dir = std::filesystem::temp_directory_path() / "cemb_data_test";
  std::filesystem::create_directories(dir);
  save_dataset(d, dir / "d.csv");
  CHECK(load_dataset(dir / "d.csv", 3) == d);
  std::filesystem::remove_all(dir);
}

TEST_CASE("dataset csv errors") {
  auto read = [](const std::string& text, std::optional<std::size_t> c = std::nullopt) {
    std::istringstream in(text);
    return read_dataset_csv(in, "mem", c);
  };
  CHECK_THROWS_AS(read(""), ParseError);
  CHECK_THROWS_AS(read("f0,f1,label\n"), ParseError);
  CHECK_THROWS_AS(read("f0,label\n1.0,0\n2.0\n"), ParseError);
  CHECK_THROWS_AS(read("f0,label\n1.0,0\nx,1\n"), ParseError);
  CHECK_THROWS_AS(read("f0,label\n1.0,-1\n"), ParseError);
  CHECK_THROWS_AS(read("f0,label\n1.0,0\n1.0,2\n", 2), SchemaError);
  try {
    read("f0,f1,label\n1,2,0\n3,4,1\n5,0\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(":4") != std::string::npos);
  }
}

TEST_CASE("dataset invariants") {
  CHECK_THROWS_AS(Dataset::make(RealMatrix(2, 1), {0, 3}, 2, ""), SchemaError);
  CHECK_THROWS_AS(Dataset::make(RealMatrix(2, 1), {0, 0}, 2, ""), SchemaError);
  CHECK_NOTHROW(Dataset::make(RealMatrix(2, 1), {0, 0}, 2, "", false));
  CHECK_THROWS_AS(Dataset::make(RealMatrix(3, 1), {0, 0}, 1, ""), ShapeError);
  const Dataset d = synth_generate(small({4, 4}));
  const std::vector<std::size_t> idx{7, 0};
  const Dataset s = d.subset(idx);
  CHECK(s.labels == std::vector<std::size_t>{d.labels[7], d.labels[0]});
  CHECK(s.features(0, 1) == d.features(7, 1));
}
