#include "dstsgnn/data.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dstsgnn/verify.hpp"

namespace dstsgnn {
namespace {

using verify::random_matrix;
using verify::Rng;

DatasetManifest manifest(std::int64_t rows, std::int64_t cols) { return {"fixture", rows, cols, 0, std::nullopt}; }

Dataset parse(const std::string& text, const DatasetManifest& m) {
  std::istringstream in(text);
  return parse_csv(in, m, "fixture.csv");
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::Dimension;
}

TEST(ParseCsv, InlineTwoByTwo) {
  const Dataset ds = parse("1.5,2\n-3,4e-1\n", manifest(2, 2));
  Matrix expected(2, 2);
  expected << 1.5, 2, -3, 0.4;
  EXPECT_EQ(ds.values, expected);
  EXPECT_TRUE(ds.feature_names.empty());
}

TEST(ParseCsv, HeaderAndDateColumn) {
  DatasetManifest m = manifest(2, 2);
  m.skip_columns = 1;
  const Dataset ds = parse("date,a,b\n2020-01-01,1,2\n2020-01-02,3,4\n", m);
  EXPECT_EQ(ds.feature_names, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(ds.values(1, 1), 4.0);
}

TEST(ParseCsv, NumericHeaderForced) {
  DatasetManifest m = manifest(1, 2);
  m.header = true;
  const Dataset ds = parse("0,1\n5,6\n", m);
  EXPECT_EQ(ds.feature_names, (std::vector<std::string>{"0", "1"}));
  EXPECT_EQ(ds.values(0, 0), 5.0);
}

TEST(ParseCsv, CrLfAndBlankLines) {
  const Dataset ds = parse("1,2\r\n\r\n3,4\r\n", manifest(2, 2));
  EXPECT_EQ(ds.values(1, 0), 3.0);
}

TEST(ParseCsv, NonNumericCellNamesLocation) {
  try {
    parse("1,2\n3,x\n", manifest(2, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Parse);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("column 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'x'"), std::string::npos) << msg;
  }
}

TEST(ParseCsv, RejectsNanAndEmpty) {
  EXPECT_EQ(kind_of([] { parse("1,nan\n", manifest(1, 2)); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { parse("1,2\n1,\n", manifest(2, 2)); }), ErrorKind::Parse);
}

TEST(ParseCsv, ShapeMismatch) {
  EXPECT_EQ(kind_of([] { parse("1,2\n3,4\n", manifest(3, 2)); }), ErrorKind::Shape);
  EXPECT_EQ(kind_of([] { parse("1,2\n3,4\n", manifest(2, 3)); }), ErrorKind::Shape);
  EXPECT_EQ(kind_of([] { parse("1,2\n3,4,5\n", manifest(2, 2)); }), ErrorKind::Shape);
}

TEST(LoadCsv, MissingFileIsIoError) {
  EXPECT_EQ(kind_of([] { load_csv("/nonexistent/dir/data.csv", manifest(1, 1)); }), ErrorKind::Io);
}

TEST(LoadCsv, ReadsFile) {
  const auto path = std::filesystem::temp_directory_path() / "dstsgnn_test_load.csv";
  std::ofstream(path) << "a,b,c\n1,2,3\n4,5,6\n7,8,9\n";
  const Dataset ds = load_csv(path.string(), manifest(3, 3));
  EXPECT_EQ(ds.values.rows(), 3);
  EXPECT_EQ(ds.values(2, 2), 9.0);
  std::filesystem::remove(path);
}

TEST(Manifest, JsonRoundTripAndUnknownKey) {
  const auto m = DatasetManifest::from_json({{"name", "exchange_rate"}, {"rows", 7588}, {"cols", 8}, {"skip_columns", 1}});
  EXPECT_EQ(m.rows, 7588);
  EXPECT_EQ(m.skip_columns, 1);
  EXPECT_EQ(DatasetManifest::from_json(m.to_json()).to_json(), m.to_json());
  EXPECT_EQ(kind_of([] { DatasetManifest::from_json({{"name", "x"}, {"rows", 1}, {"cols", 1}, {"bogus", 1}}); }),
            ErrorKind::Config);
  EXPECT_EQ(kind_of([] { DatasetManifest::from_json({{"name", "x"}, {"rows", 0}, {"cols", 1}}); }), ErrorKind::Config);
}

Dataset ramp(Eigen::Index rows, Eigen::Index cols = 2) {
  Dataset ds;
  ds.values.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index c = 0; c < cols; ++c) ds.values(i, c) = static_cast<double>(i * cols + c);
  return ds;
}

TEST(ChronologicalSplit, TenRows) {
  const DataSplits s = chronological_split(ramp(10), {});
  EXPECT_EQ(s.train.rows(), 7);
  EXPECT_EQ(s.val.rows(), 1);
  EXPECT_EQ(s.test.rows(), 2);
}

TEST(ChronologicalSplit, ExchangeRateRowCount) {
  const DataSplits s = chronological_split(ramp(7588, 1), {});
  EXPECT_EQ(s.train.rows(), 5311);
  EXPECT_EQ(s.val.rows(), 758);
  EXPECT_EQ(s.test.rows(), 1519);
}

TEST(ChronologicalSplit, ConcatenationIsOriginal) {
  const Dataset ds = ramp(37, 3);
  const DataSplits s = chronological_split(ds, {0.5, 0.3, 0.2});
  Matrix joined(37, 3);
  joined << s.train, s.val, s.test;
  EXPECT_EQ(joined, ds.values);
  EXPECT_EQ(s.val_begin, s.train.rows());
  EXPECT_EQ(s.test_begin, s.train.rows() + s.val.rows());
}

TEST(ChronologicalSplit, InvalidSpec) {
  EXPECT_EQ(kind_of([] { chronological_split(ramp(10), {0.5, 0.5, 0.5}); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([] { chronological_split(ramp(10), {1.2, -0.1, -0.1}); }), ErrorKind::Config);
}

TEST(SlidingWindows, CountAndAlignment) {
  const Matrix split = ramp(10, 1).values;
  const auto pairs = sliding_windows(split, 4, 2);
  ASSERT_EQ(pairs.size(), 5u);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    EXPECT_EQ(p.window.values(0, 0), static_cast<double>(i));
    // Target starts right after the window and never overlaps it.
    EXPECT_EQ(p.target(0, 0), p.window.values(3, 0) + 1.0);
    EXPECT_GT(p.target.minCoeff(), p.window.values.maxCoeff());
  }
  EXPECT_EQ(pairs.back().target(1, 0), split(9, 0));
}

TEST(SlidingWindows, StrideAndErrors) {
  EXPECT_EQ(window_starts(10, 4, 2, 2), (std::vector<Eigen::Index>{0, 2, 4}));
  EXPECT_EQ(window_starts(6, 4, 2).size(), 1u);
  EXPECT_EQ(kind_of([] { window_starts(5, 4, 2); }), ErrorKind::Data);
}

TEST(Metrics, Examples) {
  Rng rng(1);
  const Matrix a = random_matrix(3, 2, rng);
  const Metrics same = metrics({a}, {a});
  EXPECT_EQ(same.mse, 0.0);
  EXPECT_EQ(same.mae, 0.0);
  Matrix p(1, 2), t = Matrix::Zero(1, 2);
  p << 1, 2;
  const Metrics m = metrics({p}, {t});
  EXPECT_DOUBLE_EQ(m.mse, 2.5);
  EXPECT_DOUBLE_EQ(m.mae, 1.5);
}

TEST(Metrics, ScalarLoopOracleAndSymmetry) {
  Rng rng(2);
  std::vector<Matrix> a, b;
  for (int i = 0; i < 4; ++i) {
    a.push_back(random_matrix(5, 3, rng));
    b.push_back(random_matrix(5, 3, rng));
  }
  double se = 0, ae = 0;
  int count = 0;
  for (int i = 0; i < 4; ++i)
    for (int r = 0; r < 5; ++r)
      for (int c = 0; c < 3; ++c) {
        const double d = a[i](r, c) - b[i](r, c);
        se += d * d;
        ae += std::abs(d);
        ++count;
      }
  const Metrics m = metrics(a, b), r = metrics(b, a);
  EXPECT_NEAR(m.mse, se / count, 1e-15);
  EXPECT_NEAR(m.mae, ae / count, 1e-15);
  EXPECT_EQ(m.mse, r.mse);
  EXPECT_EQ(m.mae, r.mae);
  EXPECT_GT(m.mse, 0.0);
  EXPECT_THROW(metrics({a[0]}, {Matrix::Zero(2, 2)}), Error);
  EXPECT_THROW(metrics({}, {}), Error);
}

TEST(Standardizer, FitApplyInvert) {
  Rng rng(3);
  const Matrix m = random_matrix(40, 3, rng, 10, 20);
  const Standardizer s = Standardizer::fit(m);
  const Matrix z = s.apply(m);
  EXPECT_LT(z.colwise().mean().cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((s.invert(z) - m).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Persistence, RepeatsLastRow) {
  Matrix v(3, 2);
  v << 1, 2, 3, 4, 5, 6;
  const Matrix f = persistence_forecast({v, 0}, 4);
  ASSERT_EQ(f.rows(), 4);
  for (Eigen::Index r = 0; r < 4; ++r) EXPECT_EQ(f.row(r), v.row(2));
}

}  // namespace
}  // namespace dstsgnn
