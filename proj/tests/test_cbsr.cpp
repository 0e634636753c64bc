#include <gtest/gtest.h>
#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <limits>
#include <random>

#include "maxk/cbsr.hpp"
#include "maxk/error.hpp"
#include "support/oracle.hpp"

using namespace maxk;

namespace {

std::vector<std::uint32_t> row_indices(const CbsrMatrix& c, std::size_t r) {
  std::vector<std::uint32_t> out;
  for (std::size_t j = 0; j < c.dim_k(); ++j) out.push_back(c.index_at(r, j));
  return out;
}

std::vector<std::uint32_t> selected_by_pivot(std::span<const float> row, std::size_t k) {
  const auto sel = pivot_select_row<float>(row, k);
  std::vector<std::uint32_t> out(k);
  collect_selected<float, std::uint32_t>(row, sel, out);
  return out;
}

}  // namespace

TEST(IndexWidth, SmallestThatFits) {
  EXPECT_EQ(select_index_width(1), IndexWidth::u8);
  EXPECT_EQ(select_index_width(256), IndexWidth::u8);
  EXPECT_EQ(select_index_width(257), IndexWidth::u16);
  EXPECT_EQ(select_index_width(65536), IndexWidth::u16);
  EXPECT_EQ(select_index_width(65537), IndexWidth::u32);
}

TEST(IndexWidth, OverrideTooNarrowThrows) {
  EXPECT_THROW(CbsrMatrix(2, 300, 4, IndexWidth::u8), DimensionError);
  EXPECT_EQ(CbsrMatrix(2, 300, 4, IndexWidth::u32).sp_index().width_bytes(), 4u);
}

TEST(Cbsr, SparsityAccounting) { EXPECT_DOUBLE_EQ(CbsrMatrix(1, 256, 32).sparsity(), 0.875); }

TEST(Cbsr, ShapeChecks) {
  EXPECT_THROW(CbsrMatrix(2, 4, 5), DimensionError);
  EXPECT_THROW(CbsrMatrix(2, 4, 0), DimensionError);
}

TEST(Cbsr, ValidateRejectsUnsortedRow) {
  CbsrMatrix c(1, 4, 2);
  c.sp_index().set(0, 2);
  c.sp_index().set(1, 1);
  EXPECT_THROW(c.validate(), DimensionError);
}

TEST(MaxkForward, FourValueRow) {
  const Matrix<float> x(1, 4, {0.9f, -0.2f, 0.5f, 0.1f});
  const CbsrMatrix c = maxk_forward(x, 2).cbsr;
  EXPECT_EQ(row_indices(c, 0), (std::vector<std::uint32_t>{0, 2}));
  EXPECT_EQ(c.data_row(0)[0], 0.9f);
  EXPECT_EQ(c.data_row(0)[1], 0.5f);
}

TEST(MaxkForward, AllEqualRowTakesLowestIndices) {
  const Matrix<float> x(1, 5, 0.3f);
  EXPECT_EQ(row_indices(maxk_forward(x, 2).cbsr, 0), (std::vector<std::uint32_t>{0, 1}));
}

TEST(MaxkForward, AllNegativeRowKeepsNegatives) {
  const Matrix<float> x(1, 4, {-3.0f, -1.0f, -4.0f, -2.0f});
  const CbsrMatrix c = maxk_forward(x, 2).cbsr;
  EXPECT_EQ(row_indices(c, 0), (std::vector<std::uint32_t>{1, 3}));
  EXPECT_EQ(c.data_row(0)[0], -1.0f);
  EXPECT_EQ(c.data_row(0)[1], -2.0f);
}

TEST(MaxkForward, FullWidthIsIdentity) {
  std::mt19937_64 rng(1);
  const auto x = oracle::random_matrix<float>(9, 13, rng);
  EXPECT_EQ(densify(maxk_forward(x, 13).cbsr), x);
}

TEST(MaxkForward, Errors) {
  EXPECT_THROW(maxk_forward(Matrix<float>(2, 3), 4), DimensionError);
  Matrix<float> x(2, 3, 1.0f);
  x(1, 2) = std::numeric_limits<float>::quiet_NaN();
  EXPECT_THROW(maxk_forward(x, 1), NumericError);
}

TEST(MaxkForward, MatchesSortOracle) {
  std::mt19937_64 rng(2);
  for (std::size_t cols : {8u, 33u, 256u, 300u}) {
    const auto x = oracle::random_matrix<float>(20, cols, rng);
    for (std::size_t k : {std::size_t{1}, cols / 4, cols}) {
      const CbsrMatrix c = maxk_forward(x, k).cbsr;
      c.validate();
      EXPECT_EQ(oracle::max_abs_diff(densify(c), oracle::maxk_dense(x, k)), 0.0);
      for (std::size_t r = 0; r < x.rows(); ++r) {
        EXPECT_EQ(row_indices(c, r), oracle::topk_indices<float>(x.row(r), k));
        for (std::size_t j = 0; j < k; ++j) EXPECT_EQ(c.data_row(r)[j], x(r, c.index_at(r, j)));
      }
    }
  }
}

TEST(MaxkForward, SecondApplicationIsFixedPoint) {
  std::mt19937_64 rng(3);
  const auto x = oracle::random_matrix<float>(10, 32, rng);
  const auto once = densify(maxk_forward(x, 8).cbsr);
  EXPECT_EQ(densify(maxk_forward(once, 8).cbsr), once);
}

TEST(MaxkForward, DeterministicAcrossRuns) {
  std::mt19937_64 rng(4);
  const auto x = oracle::random_matrix<float>(64, 96, rng);
  EXPECT_EQ(maxk_forward(x, 12).cbsr, maxk_forward(x, 12).cbsr);
}

TEST(MaxkForward, DoublePrecision) {
  const Matrix<double> x(1, 3, {1.0, 3.0, 2.0});
  const auto c = maxk_forward(x, 1).cbsr;
  EXPECT_EQ(c.index_at(0, 0), 1u);
  EXPECT_EQ(c.data_row(0)[0], 3.0);
}

TEST(Densify, EmptyMatrix) {
  const auto d = densify(maxk_forward(Matrix<float>(0, 4), 2).cbsr);
  EXPECT_EQ(d.rows(), 0u);
  EXPECT_EQ(d.cols(), 4u);
}

TEST(PivotSelect, StandardNormalMedianIterations) {
  std::mt19937_64 rng(5);
  std::normal_distribution<float> nd;
  std::vector<std::uint32_t> iters;
  for (int t = 0; t < 201; ++t) {
    std::vector<float> row(256);
    for (float& v : row) v = nd(rng);
    const auto sel = pivot_select_row<float>(row, 32);
    EXPECT_LE(sel.stats.iterations, kDefaultPivotIterations);
    EXPECT_EQ(selected_by_pivot(row, 32), oracle::topk_indices<float>(row, 32));
    iters.push_back(sel.stats.iterations);
  }
  std::nth_element(iters.begin(), iters.begin() + 100, iters.end());
  EXPECT_LE(iters[100], 10u);
}

TEST(PivotSelect, KEqualsLengthNeedsNoIterations) {
  const std::vector<float> row{5, 4, 3, 2, 1};
  const auto sel = pivot_select_row<float>(row, 5);
  EXPECT_EQ(sel.stats.iterations, 0u);
  EXPECT_LT(sel.threshold, 1.0f);
  EXPECT_FALSE(sel.stats.fallback_used);
}

TEST(PivotSelect, ManyTiesUseFallback) {
  std::vector<float> row(40, 0.7f);
  const auto sel = pivot_select_row<float>(row, 16);
  EXPECT_TRUE(sel.stats.fallback_used);
  EXPECT_EQ(selected_by_pivot(row, 16), oracle::topk_indices<float>(row, 16));
}

TEST(PivotSelect, IterationCapRespected) {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> small(0, 3);
  for (std::uint32_t cap : {0u, 1u, 3u}) {
    std::vector<float> row(64);
    for (float& v : row) v = static_cast<float>(small(rng));
    const auto sel = pivot_select_row<float>(row, 10, cap);
    EXPECT_LE(sel.stats.iterations, cap);
    EXPECT_EQ(selected_by_pivot(row, 10), oracle::topk_indices<float>(row, 10));
  }
}

TEST(PivotSelect, ExactOnThousandRows) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> dim(8, 1024);
  std::uniform_int_distribution<int> kind(0, 3);
  std::normal_distribution<float> nd;
  std::uniform_int_distribution<int> few(-2, 2);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = dim(rng);
    std::uniform_int_distribution<std::size_t> kd(1, n);
    const std::size_t k = kd(rng);
    std::vector<float> row(n);
    switch (kind(rng)) {
      case 0: for (float& v : row) v = nd(rng); break;
      case 1: std::fill(row.begin(), row.end(), -1.25f); break;
      case 2: for (float& v : row) v = static_cast<float>(few(rng)); break;
      default: for (std::size_t i = 0; i < n; ++i) row[i] = static_cast<float>(i % 7) * 1e-30f; break;
    }
    ASSERT_EQ(selected_by_pivot(row, k), oracle::topk_indices<float>(row, k)) << "trial " << t;
  }
}

TEST(MaxkBackward, ScatterOfTwo) {
  const Matrix<float> x(1, 4, {3.0f, 0.0f, 2.0f, -1.0f});
  const CbsrMatrix fwd = maxk_forward(x, 2).cbsr;
  const CbsrMatrix up = fwd.with_values({10.0f, 20.0f});
  const Matrix<float> d = maxk_backward(up, fwd);
  EXPECT_EQ(d, Matrix<float>(1, 4, {10.0f, 0.0f, 20.0f, 0.0f}));
}

TEST(MaxkBackward, FullWidthIsCopy) {
  std::mt19937_64 rng(8);
  const auto x = oracle::random_matrix<float>(5, 6, rng);
  const auto g = oracle::random_matrix<float>(5, 6, rng);
  const CbsrMatrix fwd = maxk_forward(x, 6).cbsr;
  EXPECT_EQ(maxk_backward(maxk_gather(g, fwd), fwd), g);
}

TEST(MaxkBackward, GatherThenScatterIsMask) {
  std::mt19937_64 rng(9);
  const auto x = oracle::random_matrix<float>(12, 40, rng);
  const auto g = oracle::random_matrix<float>(12, 40, rng);
  const CbsrMatrix fwd = maxk_forward(x, 7).cbsr;
  const Matrix<float> got = maxk_backward(maxk_gather(g, fwd), fwd);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto keep = oracle::topk_indices<float>(x.row(r), 7);
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const bool kept = std::binary_search(keep.begin(), keep.end(), static_cast<std::uint32_t>(c));
      EXPECT_EQ(got(r, c), kept ? g(r, c) : 0.0f);
    }
  }
}

TEST(MaxkBackward, PatternMismatch) {
  const Matrix<float> a(1, 4, {1, 2, 3, 4});
  const Matrix<float> b(1, 4, {4, 3, 2, 1});
  EXPECT_THROW(maxk_backward(maxk_forward(a, 2).cbsr, maxk_forward(b, 2).cbsr), PatternError);
}

TEST(CbsrFile, RoundTrip) {
  std::mt19937_64 rng(10);
  const auto path = std::filesystem::temp_directory_path() / ("maxk_cbsr_" + std::to_string(::getpid()) + ".bin");
  for (IndexWidth w : {IndexWidth::u8, IndexWidth::u16, IndexWidth::u32}) {
    const CbsrMatrix c = maxk_forward(oracle::random_matrix<float>(7, 50, rng), 5, w).cbsr;
    save_cbsr(c, path);
    EXPECT_EQ(load_cbsr(path), c);
  }
  std::filesystem::resize_file(path, 20);
  EXPECT_THROW(load_cbsr(path), LengthError);
  std::filesystem::remove(path);
}
