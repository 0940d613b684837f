#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

#include "ntal/dataset.hpp"

namespace ntal {
namespace {

void expect_records_valid(const Dataset& d) {
  for (const auto& r : d.records()) {
    ASSERT_EQ(r.features.size(), d.n_features());
    ASSERT_LT(r.label, d.n_classes());
    for (double v : r.features) ASSERT_TRUE(std::isfinite(v));
  }
}

Dataset parse(const std::string& text, CsvConfig cfg = {}) {
  std::istringstream in(text);
  return parse_csv(in, cfg);
}

Errc parse_error(const std::string& text, CsvConfig cfg = {}) {
  try {
    parse(text, cfg);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return Errc::io_error;
}

TEST(Schema, RejectsDuplicatesAndTooFewClasses) {
  EXPECT_THROW(FeatureSchema({"a", "a"}, {"x", "y"}), Error);
  EXPECT_THROW(FeatureSchema({"a"}, {"x", "x"}), Error);
  EXPECT_THROW(FeatureSchema({"a"}, {"x"}), Error);
  EXPECT_THROW(FeatureSchema({}, {"x", "y"}), Error);
  EXPECT_NO_THROW(FeatureSchema({"a"}, {"x", "y"}));
}

TEST(LoadCsv, ThreeRowFixture) {
  const auto d = parse("bytes,pkts,label\n1.5,2,a\n3,4e1,a\n-5,6,b\n");
  EXPECT_EQ(d.n_classes(), 2u);
  EXPECT_EQ(d.n_features(), 2u);
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d[0].label, 0u);
  EXPECT_EQ(d[1].label, 0u);
  EXPECT_EQ(d[2].label, 1u);
  EXPECT_EQ(d[0].features, (std::vector<double>{1.5, 2.0}));
  EXPECT_EQ(d[1].features, (std::vector<double>{3.0, 40.0}));
  EXPECT_EQ(d[2].features, (std::vector<double>{-5.0, 6.0}));
  EXPECT_EQ(d.schema().class_names(), (std::vector<std::string>{"a", "b"}));
}

TEST(LoadCsv, LabelsEncodedByFirstAppearance) {
  const auto d = parse("x,label\n1,zeta\n2,alpha\n3,zeta\n4,mid\n");
  EXPECT_EQ(d.schema().class_names(), (std::vector<std::string>{"zeta", "alpha", "mid"}));
  EXPECT_EQ(d[3].label, 2u);
}

TEST(LoadCsv, CambridgeShapedFixtureHasTwelveClasses) {
  const std::vector<std::string> classes{"WWW",      "MAIL",       "FTP-CONTROL", "FTP-PASV", "ATTACK", "P2P",
                                         "DATABASE", "FTP-DATA",   "MULTIMEDIA",  "SERVICES", "INTERACTIVE",
                                         "GAMES"};
  std::ostringstream csv;
  csv << "server_port,client_port,total_packets,mean_iat,classification\n";
  for (int rep = 0; rep < 3; ++rep)
    for (std::size_t c = 0; c < classes.size(); ++c)
      csv << 80 + c << ',' << 40000 + rep << ',' << 10 * (c + 1) << ',' << 0.25 * rep << ',' << classes[c] << '\n';
  CsvConfig cfg;
  cfg.label_column = "classification";
  const auto d = parse(csv.str(), cfg);
  EXPECT_EQ(d.n_classes(), 12u);
  EXPECT_EQ(d.size(), 36u);
  EXPECT_EQ(d.n_features(), 4u);
  expect_records_valid(d);
}

TEST(LoadCsv, FeatureSubsetInConfigOrder) {
  CsvConfig cfg;
  cfg.features = {"c", "a"};
  const auto d = parse("a,b,c,label\n1,2,3,x\n4,5,6,y\n", cfg);
  EXPECT_EQ(d.schema().feature_names(), (std::vector<std::string>{"c", "a"}));
  EXPECT_EQ(d[1].features, (std::vector<double>{6.0, 4.0}));
}

TEST(LoadCsv, HeaderOnlyStrictIsEmptyDataset) {
  EXPECT_EQ(parse_error("a,b,label\n"), Errc::empty_dataset);
  CsvConfig lax;
  lax.strict = false;
  lax.class_names = {"x", "y"};
  EXPECT_TRUE(parse("a,b,label\n", lax).empty());
}

TEST(LoadCsv, ErrorPaths) {
  EXPECT_EQ(parse_error("a,b,class\n1,2,x\n"), Errc::missing_column);
  CsvConfig cfg;
  cfg.features = {"a", "nope"};
  EXPECT_EQ(parse_error("a,b,label\n1,2,x\n", cfg), Errc::missing_column);
  EXPECT_EQ(parse_error("a,b,label\n1,2,x\n1,2\n"), Errc::dimension_mismatch);
  EXPECT_EQ(parse_error("a,b,label\n1,2,x\n1,,y\n"), Errc::non_numeric_value);
  EXPECT_EQ(parse_error("a,b,label\n1,2,x\n1,nan,y\n"), Errc::non_numeric_value);
  EXPECT_EQ(parse_error("a,b,label\n1,2,x\n1,inf,y\n"), Errc::non_numeric_value);
  EXPECT_EQ(parse_error("a,b,label\n1,2,x\n1,2,x\n"), Errc::insufficient_classes);
  CsvConfig declared;
  declared.class_names = {"x", "y"};
  EXPECT_EQ(parse_error("a,label\n1,x\n2,z\n", declared), Errc::unknown_label);
}

TEST(LoadCsv, NonNumericErrorNamesRowAndColumn) {
  try {
    parse("a,bytes,label\n1,2,x\n3,abc,y\n");
    FAIL();
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("row 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("bytes"), std::string::npos) << msg;
  }
}

TEST(LoadCsv, WriteThenReadIsLossless) {
  SyntheticSpec spec;
  spec.n_classes = 3;
  spec.per_class = 7;
  spec.n_features = 3;
  spec.seed = 11;
  const auto d = generate_synthetic(spec);
  std::stringstream io;
  write_csv(io, d);
  CsvConfig cfg;
  cfg.class_names = d.schema().class_names();
  EXPECT_EQ(parse_csv(io, cfg), d);
}

TEST(LoadCsv, MissingFileIsIoError) {
  try {
    load_csv("/nonexistent/flows.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::io_error);
  }
}

Dataset toy(std::size_t n, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.n_classes = 2 + seed % 3;
  spec.per_class = n;
  spec.n_features = 1 + seed % 4;
  spec.seed = seed;
  return generate_synthetic(spec);
}

TEST(ShuffleAndSubset, IdentityFraction) {
  const auto d = toy(20, 1);
  const auto s = shuffle_and_subset(d, 1.0, 5);
  EXPECT_EQ(s.subset.size(), d.size());
  EXPECT_TRUE(s.remainder.empty());
}

TEST(ShuffleAndSubset, RoundHalfUpSizing) {
  // 0.005 * 9159 = 45.795
  EXPECT_EQ(subset_size(0.005, 9159), 46u);
  EXPECT_EQ(subset_size(0.5, 3), 2u);
  EXPECT_EQ(subset_size(0.25, 2), 1u);
  EXPECT_EQ(subset_size(0.2, 2), 0u);
  for (std::size_t n = 1; n < 400; n += 7)
    for (double f : {0.005, 0.01, 0.02, 0.04, 0.08, 0.16, 0.32, 0.64, 0.3, 0.999}) {
      const double diff = static_cast<double>(subset_size(f, n)) - f * static_cast<double>(n);
      EXPECT_GT(diff, -0.5 - 1e-9);
      EXPECT_LE(diff, 0.5 + 1e-9);
    }
}

TEST(ShuffleAndSubset, NineThousandRows) {
  SyntheticSpec spec;
  spec.n_classes = 3;
  spec.per_class = 3053;  // 9159 records
  spec.n_features = 2;
  const auto d = generate_synthetic(spec);
  ASSERT_EQ(d.size(), 9159u);
  const auto s = shuffle_and_subset(d, 0.005, 42);
  EXPECT_EQ(s.subset.size(), 46u);
  EXPECT_EQ(s.remainder.size(), 9159u - 46u);
}

TEST(ShuffleAndSubset, Determinism) {
  const auto d = toy(30, 2);
  const auto a = shuffle_and_subset(d, 0.3, 77);
  const auto b = shuffle_and_subset(d, 0.3, 77);
  EXPECT_EQ(a.subset, b.subset);
  EXPECT_EQ(a.remainder, b.remainder);
  const auto c = shuffle_and_subset(d, 0.3, 78);
  EXPECT_NE(a.subset, c.subset);
}

TEST(ShuffleAndSubset, InvalidFraction) {
  const auto d = toy(5, 3);
  for (double f : {0.0, -0.1, 1.0001, std::nan("")}) {
    try {
      shuffle_and_subset(d, f, 0);
      FAIL() << f;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::invalid_fraction);
    }
  }
}

TEST(ShuffleAndSubset, PartitionPropertyFuzz) {
  Rng rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const auto d = toy(1 + uniform_below(rng, 40), trial);
    const double f = 0.001 + 0.999 * uniform01(rng);
    const auto s = shuffle_and_subset(d, f, rng());
    auto joined = s.subset.records();
    joined.insert(joined.end(), s.remainder.records().begin(), s.remainder.records().end());
    auto original = d.records();
    auto less = [](const FlowRecord& a, const FlowRecord& b) {
      return std::tie(a.features, a.label) < std::tie(b.features, b.label);
    };
    std::sort(joined.begin(), joined.end(), less);
    std::sort(original.begin(), original.end(), less);
    EXPECT_EQ(joined, original);
    EXPECT_EQ(s.subset.size(), std::min(subset_size(f, d.size()), d.size()));
  }
}

TEST(Synthetic, CountsPerLabel) {
  SyntheticSpec spec;
  spec.n_classes = 3;
  spec.per_class = 10;
  const auto d = generate_synthetic(spec);
  ASSERT_EQ(d.size(), 30u);
  std::vector<int> counts(3, 0);
  for (const auto& r : d.records()) ++counts[r.label];
  EXPECT_EQ(counts, (std::vector<int>{10, 10, 10}));
  expect_records_valid(d);
}

TEST(Synthetic, PureInSpec) {
  SyntheticSpec spec;
  spec.n_classes = 4;
  spec.per_class = 25;
  spec.seed = 9;
  EXPECT_EQ(generate_synthetic(spec), generate_synthetic(spec));
  auto other = spec;
  other.seed = 10;
  EXPECT_NE(generate_synthetic(spec), generate_synthetic(other));
}

TEST(Synthetic, DriftAtEndIsNoDrift) {
  SyntheticSpec spec;
  spec.n_classes = 3;
  spec.per_class = 20;
  spec.seed = 4;
  auto drifted = spec;
  drifted.drift = DriftSpec{60, {5.0}};
  EXPECT_EQ(generate_synthetic(spec), generate_synthetic(drifted));
}

TEST(Synthetic, DriftShiftsMeansAfterOnset) {
  SyntheticSpec spec;
  spec.n_classes = 2;
  spec.per_class = 2000;
  spec.n_features = 3;
  spec.noise_stddev = 1.0;
  spec.seed = 5;
  const double shift = 2.5;
  spec.drift = DriftSpec{2000, {shift}};
  const auto d = generate_synthetic(spec);

  // Sample means per (class, feature, segment): independent tally.
  for (ClassIndex c = 0; c < 2; ++c)
    for (std::size_t j = 0; j < 3; ++j) {
      double before = 0, after = 0;
      std::size_t nb = 0, na = 0;
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (d[i].label != c) continue;
        if (i < 2000) before += d[i].features[j], ++nb;
        else after += d[i].features[j], ++na;
      }
      before /= static_cast<double>(nb);
      after /= static_cast<double>(na);
      const double tol = 3.0 * spec.noise_stddev / std::sqrt(static_cast<double>(std::min(nb, na)));
      EXPECT_NEAR(after - before, shift, tol) << "class " << c << " feature " << j;
    }
}

TEST(Synthetic, PerFeatureShiftVector) {
  SyntheticSpec spec;
  spec.n_features = 2;
  spec.drift = DriftSpec{0, {1.0, 2.0, 3.0}};
  EXPECT_THROW(generate_synthetic(spec), Error);
  spec.drift = DriftSpec{0, {1.0, 2.0}};
  EXPECT_NO_THROW(generate_synthetic(spec));
}

TEST(Synthetic, InvalidSpec) {
  SyntheticSpec spec;
  spec.n_classes = 1;
  EXPECT_THROW(generate_synthetic(spec), Error);
  spec = {};
  spec.per_class = 0;
  EXPECT_THROW(generate_synthetic(spec), Error);
  spec = {};
  spec.noise_stddev = -1;
  EXPECT_THROW(generate_synthetic(spec), Error);
  spec = {};
  spec.drift = DriftSpec{spec.n_classes * spec.per_class + 1, {1.0}};
  EXPECT_THROW(generate_synthetic(spec), Error);
}

TEST(Synthetic, LatticeMeansAreSeparated) {
  for (std::size_t k : {2u, 5u, 12u})
    for (std::size_t d : {1u, 3u, 6u}) {
      const auto means = synthetic_class_means(k, d, 4.0);
      for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = a + 1; b < k; ++b) {
          double dist2 = 0;
          for (std::size_t j = 0; j < d; ++j) dist2 += (means[a][j] - means[b][j]) * (means[a][j] - means[b][j]);
          EXPECT_GE(std::sqrt(dist2), 4.0 - 1e-12);
        }
    }
}

TEST(Standardize, ClosedFormColumn) {
  const Dataset d(FeatureSchema({"x", "k"}, {"a", "b"}), {{{1.0, 7.0}, 0}, {{2.0, 7.0}, 1}, {{3.0, 7.0}, 0}});
  const auto s = standardize(d);
  EXPECT_DOUBLE_EQ(s.mean[0], 2.0);
  EXPECT_NEAR(s.stddev[0], std::sqrt(2.0 / 3.0), 1e-12);
  const auto t = s.apply(d);
  EXPECT_NEAR(t[0].features[0], -1.224744871391589, 1e-9);
  EXPECT_NEAR(t[1].features[0], 0.0, 1e-12);
  EXPECT_NEAR(t[2].features[0], 1.224744871391589, 1e-9);
  for (const auto& r : t.records()) EXPECT_EQ(r.features[1], 0.0);
}

TEST(Standardize, TrainMeanIsZero) {
  SyntheticSpec spec;
  spec.n_classes = 3;
  spec.per_class = 50;
  spec.n_features = 5;
  spec.class_mean_separation = 10;
  const auto d = generate_synthetic(spec);
  const auto t = standardize(d).apply(d);
  for (std::size_t j = 0; j < 5; ++j) {
    double m = 0;
    for (const auto& r : t.records()) m += r.features[j];
    EXPECT_NEAR(m / static_cast<double>(t.size()), 0.0, 1e-9);
  }
}

TEST(Standardize, ErrorPaths) {
  EXPECT_THROW(standardize(Dataset(FeatureSchema({"x"}, {"a", "b"}), {})), Error);
  const Dataset d(FeatureSchema({"x"}, {"a", "b"}), {{{1.0}, 0}});
  const Dataset wide(FeatureSchema({"x", "y"}, {"a", "b"}), {{{1.0, 2.0}, 0}});
  try {
    standardize(d).apply(wide);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::schema_mismatch);
  }
}

TEST(Dataset, RejectsNonConformingRecords) {
  const FeatureSchema schema({"x"}, {"a", "b"});
  EXPECT_THROW(Dataset(schema, {{{1.0, 2.0}, 0}}), Error);
  EXPECT_THROW(Dataset(schema, {{{1.0}, 2}}), Error);
  EXPECT_THROW(Dataset(schema, {{{std::nan("")}, 0}}), Error);
}

}  // namespace
}  // namespace ntal
