#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

#include "maxk/dense.hpp"

namespace maxk {

enum class IndexWidth : std::uint8_t { automatic = 0, u8 = 1, u16 = 2, u32 = 4 };

/// Smallest of {1,2,4} bytes able to hold every column id below dim_origin.
IndexWidth select_index_width(std::size_t dim_origin);

/// The sp_index block: N*k column ids stored at a fixed byte width.
class IndexBlock {
 public:
  IndexBlock() : IndexBlock(IndexWidth::u8, 0) {}
  IndexBlock(IndexWidth width, std::size_t size);

  unsigned width_bytes() const noexcept { return static_cast<unsigned>(data_.index() == 0 ? 1 : data_.index() == 1 ? 2 : 4); }
  IndexWidth width() const noexcept { return static_cast<IndexWidth>(width_bytes()); }
  std::size_t size() const noexcept {
    return std::visit([](const auto& v) { return v.size(); }, data_);
  }

  std::uint32_t operator[](std::size_t i) const noexcept {
    return std::visit([i](const auto& v) { return static_cast<std::uint32_t>(v[i]); }, data_);
  }
  void set(std::size_t i, std::uint32_t value) noexcept {
    std::visit([&](auto& v) { v[i] = static_cast<typename std::decay_t<decltype(v)>::value_type>(value); }, data_);
  }

  /// Calls f with a std::span<const U> over the typed storage.
  template <typename F>
  decltype(auto) visit(F&& f) const {
    return std::visit([&](const auto& v) -> decltype(auto) { return f(std::span(v)); }, data_);
  }
  template <typename F>
  decltype(auto) visit_mut(F&& f) {
    return std::visit([&](auto& v) -> decltype(auto) { return f(std::span(v)); }, data_);
  }

  bool operator==(const IndexBlock&) const = default;

 private:
  std::variant<std::vector<std::uint8_t>, std::vector<std::uint16_t>, std::vector<std::uint32_t>> data_;
};

/// Compressed Balanced Sparse Row matrix: exactly dim_k entries per row,
/// held as two adjacent N x dim_k blocks (sp_index, sp_data). Column ids are
/// strictly increasing inside each row.
template <typename T>
class BasicCbsr {
 public:
  BasicCbsr() = default;
  BasicCbsr(std::size_t rows, std::size_t dim_origin, std::size_t dim_k,
            IndexWidth width = IndexWidth::automatic);
  BasicCbsr(std::size_t rows, std::size_t dim_origin, std::size_t dim_k, IndexBlock index,
            std::vector<T> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dim_origin() const noexcept { return dim_origin_; }
  std::size_t dim_k() const noexcept { return dim_k_; }
  double sparsity() const noexcept {
    return 1.0 - static_cast<double>(dim_k_) / static_cast<double>(dim_origin_);
  }

  const IndexBlock& sp_index() const noexcept { return index_; }
  IndexBlock& sp_index() noexcept { return index_; }
  std::span<const T> sp_data() const noexcept { return data_; }
  std::span<T> sp_data() noexcept { return data_; }

  std::span<const T> data_row(std::size_t r) const noexcept { return {data_.data() + r * dim_k_, dim_k_}; }
  std::span<T> data_row(std::size_t r) noexcept { return {data_.data() + r * dim_k_, dim_k_}; }
  std::uint32_t index_at(std::size_t r, std::size_t j) const noexcept { return index_[r * dim_k_ + j]; }

  bool same_pattern(const BasicCbsr& other) const noexcept {
    return rows_ == other.rows_ && dim_origin_ == other.dim_origin_ && dim_k_ == other.dim_k_ &&
           index_.size() == other.index_.size() && pattern_equal(other);
  }

  /// Same pattern, new values.
  BasicCbsr with_values(std::vector<T> values) const;

  /// Throws DimensionError unless every row holds strictly increasing ids
  /// below dim_origin.
  void validate() const;

  bool operator==(const BasicCbsr&) const = default;

 private:
  bool pattern_equal(const BasicCbsr& other) const noexcept;

  std::size_t rows_ = 0;
  std::size_t dim_origin_ = 1;
  std::size_t dim_k_ = 1;
  IndexBlock index_;
  std::vector<T> data_;
};

using CbsrMatrix = BasicCbsr<float>;

// -- pivot-based k-th value selection ----------------------------------------

struct PivotStats {
  std::uint32_t iterations = 0;
  bool converged_exactly = false;
  bool fallback_used = false;
};

/// Describes the selected set of a row: every value strictly above
/// `threshold`, plus the first `take_equal` values equal to it (index order).
template <typename T>
struct PivotSelection {
  T threshold{};
  std::size_t take_equal = 0;
  PivotStats stats;
};

inline constexpr std::uint32_t kDefaultPivotIterations = 10;

/// Bisects the value range with pivot (lo+hi)/2 until exactly k values lie
/// above the pivot. Falls back to exact partial selection when the bisection
/// cannot separate ties or runs out of iterations, so the selected set always
/// equals the k largest values with lowest-index tie-break.
template <typename T>
PivotSelection<T> pivot_select_row(std::span<const T> row, std::size_t k,
                                   std::uint32_t max_iterations = kDefaultPivotIterations);

/// Writes the ascending column ids chosen by `sel` into `out` (size k).
template <typename T, typename Index>
void collect_selected(std::span<const T> row, const PivotSelection<T>& sel, std::span<Index> out);

// -- MaxK nonlinearity --------------------------------------------------------

struct PivotSummary {
  std::size_t rows = 0;
  std::size_t converged = 0;
  std::size_t fallbacks = 0;
  std::uint64_t total_iterations = 0;
  std::uint32_t max_iterations_seen = 0;
};

template <typename T>
struct MaxkResult {
  BasicCbsr<T> cbsr;
  PivotSummary pivots;
};

/// Keeps the k largest values (by value, negatives included) of every row.
template <typename T>
MaxkResult<T> maxk_forward(const Matrix<T>& x, std::size_t k, IndexWidth width = IndexWidth::automatic,
                           std::uint32_t max_iterations = kDefaultPivotIterations);

/// Scatters sp_data into a dense N x dim_origin matrix, zeros elsewhere.
template <typename T>
Matrix<T> densify(const BasicCbsr<T>& c);

/// Reads dense values at the positions of `pattern`.
template <typename T>
BasicCbsr<T> maxk_gather(const Matrix<T>& dense, const BasicCbsr<T>& pattern);

/// Backward of MaxK: scatters the gradient values through the forward mask.
/// Throws PatternError when `upstream` does not share `forward`'s sp_index.
template <typename T>
Matrix<T> maxk_backward(const BasicCbsr<T>& upstream, const BasicCbsr<T>& forward);

/// "CBSR" dump: u32 version=1, u64 N, u32 dim_origin, u32 dim_k, u8 width,
/// then the sp_index block, then the f32 sp_data block. Little-endian.
void save_cbsr(const CbsrMatrix& c, const std::filesystem::path& path);
CbsrMatrix load_cbsr(const std::filesystem::path& path);

}  // namespace maxk
