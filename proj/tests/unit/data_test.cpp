// SPDX-License-Identifier: Apache-2.0
#include "fedagg/data.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "fedagg/error.hpp"

namespace fedagg {
namespace {

namespace fs = std::filesystem;

class CsvTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("fedagg_csv_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& body) {
    const auto p = dir_ / name;
    std::ofstream(p) << body;
    return p;
  }

  fs::path dir_;
};

TEST_F(CsvTest, LabelsMapInOrderOfFirstAppearance) {
  const auto p = write("a.csv", "x,label,y\n1.5,a,2\n-3,b,4e-1\n0,a,7\n");
  const auto d = load_csv(p, "label");
  EXPECT_EQ(d.labels, (std::vector<int>{0, 1, 0}));
  EXPECT_EQ(d.class_names, (std::vector<std::string>{"a", "b"}));
  ASSERT_EQ(d.features.cols(), 2u);
  EXPECT_EQ(d.features(0, 0), 1.5);
  EXPECT_EQ(d.features(1, 1), 0.4);
  EXPECT_EQ(d.features(2, 1), 7.0);
}

TEST_F(CsvTest, IntegerLabelsAndQuotedCells) {
  const auto p = write("q.csv", "\"f 1\",class\n\"2.5\",3\n1,1\n4,3\n");
  const auto d = load_csv(p, "class");
  EXPECT_EQ(d.labels, (std::vector<int>{0, 1, 0}));
  EXPECT_EQ(d.class_names, (std::vector<std::string>{"3", "1"}));
  EXPECT_EQ(d.features(0, 0), 2.5);
}

TEST_F(CsvTest, ErrorKinds) {
  auto kind_of = [](const fs::path& p, const std::string& label) {
    try {
      load_csv(p, label);
    } catch (const ParseError& e) {
      return e.kind();
    }
    ADD_FAILURE() << "no ParseError for " << p;
    return ParseError::Kind::kMissingFile;
  };
  EXPECT_EQ(kind_of(dir_ / "does_not_exist.csv", "label"), ParseError::Kind::kMissingFile);
  EXPECT_EQ(kind_of(write("e.csv", ""), "label"), ParseError::Kind::kEmpty);
  EXPECT_EQ(kind_of(write("h.csv", "x,label\n"), "label"), ParseError::Kind::kEmpty);
  EXPECT_EQ(kind_of(write("m.csv", "x,y\n1,2\n"), "label"), ParseError::Kind::kMissingColumn);
  EXPECT_EQ(kind_of(write("r.csv", "x,label\n1,a\n2\n"), "label"), ParseError::Kind::kRaggedRow);
  EXPECT_EQ(kind_of(write("n.csv", "x,label\nnan,a\n"), "label"), ParseError::Kind::kBadCell);
  EXPECT_EQ(kind_of(write("b.csv", "x,label\n,a\n"), "label"), ParseError::Kind::kBadCell);
}

TEST_F(CsvTest, BadCellCitesRowAndColumn) {
  const auto p = write("bad.csv", "x,y,label\n1,2,a\n3,4,b\n5,6,a\n7,8,b\n9,oops,a\n");
  try {
    load_csv(p, "label");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.kind(), ParseError::Kind::kBadCell);
    EXPECT_EQ(e.row(), 5u);
    EXPECT_EQ(e.column(), 2u);
    EXPECT_NE(std::string(e.what()).find("row 5"), std::string::npos) << e.what();
  }
}

TEST(BlobsTest, CountsAndDeterminism) {
  const auto d = generate_blobs(100, 4, 20, 1.0, 7);
  EXPECT_EQ(d.size(), 400u);
  EXPECT_EQ(d.features.cols(), 20u);
  EXPECT_EQ(d.class_counts(), (std::vector<std::size_t>{100, 100, 100, 100}));
  EXPECT_EQ(d.class_names, (std::vector<std::string>{"class_0", "class_1", "class_2", "class_3"}));
  const auto again = generate_blobs(100, 4, 20, 1.0, 7);
  EXPECT_EQ(d.features, again.features);
  EXPECT_EQ(d.labels, again.labels);
  EXPECT_NE(d.features, generate_blobs(100, 4, 20, 1.0, 8).features);
}

TEST(BlobsTest, ZeroSpreadCollapsesOntoCentres) {
  const auto d = generate_blobs(10, 3, 5, 0.0, 1);
  std::vector<std::vector<double>> centre(3);
  for (std::size_t r = 0; r < d.size(); ++r) {
    const auto row = d.features.row(r);
    auto& c = centre[static_cast<std::size_t>(d.labels[r])];
    if (c.empty()) c.assign(row.begin(), row.end());
    EXPECT_TRUE(std::equal(row.begin(), row.end(), c.begin()));
  }
  std::size_t correct = 0;
  for (std::size_t r = 0; r < d.size(); ++r) {
    int best = 0;
    double best_d = 1e300;
    for (int k = 0; k < 3; ++k) {
      double dist = 0;
      for (std::size_t j = 0; j < 5; ++j) {
        const double diff = d.features(r, j) - centre[static_cast<std::size_t>(k)][j];
        dist += diff * diff;
      }
      if (dist < best_d) {
        best_d = dist;
        best = k;
      }
    }
    correct += best == d.labels[r];
  }
  EXPECT_EQ(correct, d.size());
}

TEST(BlobsTest, RejectsDegenerateArguments) {
  EXPECT_THROW(generate_blobs(10, 1, 3, 1.0, 0), ArgumentError);
  EXPECT_THROW(generate_blobs(10, 2, 0, 1.0, 0), ArgumentError);
  EXPECT_THROW(generate_blobs(0, 2, 3, 1.0, 0), ArgumentError);
  EXPECT_THROW(generate_blobs(10, 2, 3, -1.0, 0), ArgumentError);
}

Dataset two_class(std::size_t a, std::size_t b) {
  Dataset d;
  d.class_names = {"a", "b"};
  for (std::size_t i = 0; i < a + b; ++i) {
    d.features.push_row(std::vector<double>{static_cast<double>(i)});
    d.labels.push_back(i < a ? 0 : 1);
  }
  return d;
}

TEST(PartitionTest, BalancedShards) {
  const auto d = two_class(50, 50);
  const auto shards = stratified_partition(d, 4, 3);
  ASSERT_EQ(shards.size(), 4u);
  for (const auto& s : shards) {
    EXPECT_EQ(s.size(), 25u);
    for (auto c : s.class_counts()) EXPECT_TRUE(c == 12 || c == 13) << c;
  }
  EXPECT_THROW(stratified_partition(two_class(3, 10), 4, 0), ArgumentError);
  EXPECT_THROW(stratified_partition(d, 0, 0), ArgumentError);
}

TEST(PartitionTest, SingleClientIsThePermutedInput) {
  const auto d = two_class(7, 5);
  const auto idx = stratified_partition_indices(d, 1, 9);
  ASSERT_EQ(idx.size(), 1u);
  auto sorted = idx[0];
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> all(d.size());
  std::iota(all.begin(), all.end(), 0);
  EXPECT_EQ(sorted, all);
}

TEST(PartitionProperty, DisjointCoverWithBoundedImbalance) {
  std::mt19937_64 rng(50);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = std::uniform_int_distribution<std::size_t>(1, 6)(rng);
    const std::size_t classes = std::uniform_int_distribution<std::size_t>(2, 5)(rng);
    Dataset d;
    for (std::size_t c = 0; c < classes; ++c) {
      d.class_names.push_back(std::to_string(c));
      const auto n = std::uniform_int_distribution<std::size_t>(k, 40)(rng);
      for (std::size_t i = 0; i < n; ++i) {
        d.features.push_row(std::vector<double>{static_cast<double>(d.size())});
        d.labels.push_back(static_cast<int>(c));
      }
    }
    const auto idx = stratified_partition_indices(d, k, trial);
    EXPECT_EQ(idx, stratified_partition_indices(d, k, trial));
    std::vector<std::size_t> seen;
    std::size_t lo_total = d.size(), hi_total = 0;
    for (const auto& shard : idx) {
      seen.insert(seen.end(), shard.begin(), shard.end());
      lo_total = std::min(lo_total, shard.size());
      hi_total = std::max(hi_total, shard.size());
    }
    std::sort(seen.begin(), seen.end());
    std::vector<std::size_t> all(d.size());
    std::iota(all.begin(), all.end(), 0);
    EXPECT_EQ(seen, all);
    EXPECT_LE(hi_total - lo_total, 1u);
    for (std::size_t c = 0; c < classes; ++c) {
      std::size_t lo = d.size(), hi = 0;
      for (const auto& shard : idx) {
        const auto n = static_cast<std::size_t>(std::count_if(
            shard.begin(), shard.end(), [&](std::size_t r) { return d.labels[r] == static_cast<int>(c); }));
        lo = std::min(lo, n);
        hi = std::max(hi, n);
      }
      EXPECT_LE(hi - lo, 1u);
    }
  }
}

TEST(SplitTest, Arithmetic) {
  EXPECT_EQ(stratified_train_count(40, 0.2), 8u);
  EXPECT_EQ(stratified_train_count(10, 0.2), 2u);
  EXPECT_EQ(stratified_train_count(3, 0.2), 1u);
  EXPECT_EQ(stratified_train_count(2, 0.01), 1u);
  EXPECT_EQ(stratified_train_count(2, 0.99), 1u);
  EXPECT_EQ(stratified_train_count(5, 0.5), 3u);  // 2.5 rounds up
  EXPECT_THROW(stratified_train_count(1, 0.5), ArgumentError);
  EXPECT_THROW(stratified_train_count(10, 0.0), ArgumentError);
  EXPECT_THROW(stratified_train_count(10, 1.0), ArgumentError);

  auto single = two_class(40, 0);
  single.class_names = {"a"};
  auto [train, test] = stratified_train_test_split(single, 0.2, 1);
  EXPECT_EQ(train.size(), 8u);
  EXPECT_EQ(test.size(), 32u);

  const auto blobs = generate_blobs(10, 4, 2, 1.0, 0);
  auto [btrain, btest] = stratified_train_test_split(blobs, 0.2, 1);
  EXPECT_EQ(btrain.class_counts(), (std::vector<std::size_t>{2, 2, 2, 2}));
  EXPECT_EQ(btest.class_counts(), (std::vector<std::size_t>{8, 8, 8, 8}));

  auto [t3, s3] = stratified_train_test_split(two_class(3, 4), 0.2, 2);
  EXPECT_EQ(t3.class_counts(), (std::vector<std::size_t>{1, 1}));
  EXPECT_EQ(s3.class_counts(), (std::vector<std::size_t>{2, 3}));

  EXPECT_THROW(stratified_train_test_split(two_class(1, 4), 0.2, 0), ArgumentError);
}

TEST(SplitProperty, DisjointDeterministicCover) {
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = std::uniform_int_distribution<std::size_t>(2, 60)(rng);
    const auto b = std::uniform_int_distribution<std::size_t>(2, 60)(rng);
    const double frac = std::uniform_real_distribution<double>(0.05, 0.95)(rng);
    const auto d = two_class(a, b);
    const auto [train, test] = stratified_split_indices(d, frac, trial);
    EXPECT_EQ(stratified_split_indices(d, frac, trial), std::make_pair(train, test));
    std::set<std::size_t> all(train.begin(), train.end());
    for (auto r : test) EXPECT_TRUE(all.insert(r).second) << "row " << r << " on both sides";
    EXPECT_EQ(all.size(), d.size());
    const auto na = static_cast<std::size_t>(
        std::count_if(train.begin(), train.end(), [&](std::size_t r) { return d.labels[r] == 0; }));
    EXPECT_EQ(na, stratified_train_count(a, frac));
    EXPECT_EQ(train.size() - na, stratified_train_count(b, frac));
  }
}

TEST(ClientShardsTest, IdsAndLayout) {
  const auto d = generate_blobs(40, 4, 3, 1.0, 2);
  const auto shards = make_client_shards(d, 4, 0.2, 5);
  ASSERT_EQ(shards.size(), 4u);
  std::size_t total = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(shards[i].client_id, "client_" + std::to_string(i));
    EXPECT_EQ(shards[i].train.class_counts(), (std::vector<std::size_t>{2, 2, 2, 2}));
    EXPECT_EQ(shards[i].test.class_counts(), (std::vector<std::size_t>{8, 8, 8, 8}));
    total += shards[i].train.size() + shards[i].test.size();
  }
  EXPECT_EQ(total, d.size());
  const auto again = make_client_shards(d, 4, 0.2, 5);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(shards[i].train.features, again[i].train.features);
    EXPECT_EQ(shards[i].test.labels, again[i].test.labels);
  }
}

}  // namespace
}  // namespace fedagg
