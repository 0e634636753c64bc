#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "maxk/cbsr.hpp"
#include "maxk/error.hpp"

namespace maxk {
namespace {

template <typename T>
std::size_t count_above(std::span<const T> row, T pivot) noexcept {
  std::size_t c = 0;
  for (T v : row) c += v > pivot;
  return c;
}

// Exact k-th value by partial selection over (value desc, index asc).
template <typename T>
PivotSelection<T> exact_select(std::span<const T> row, std::size_t k, PivotStats stats) {
  std::vector<std::uint32_t> order(row.size());
  std::iota(order.begin(), order.end(), 0u);
  const auto before = [&](std::uint32_t a, std::uint32_t b) {
    return row[a] > row[b] || (row[a] == row[b] && a < b);
  };
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k - 1), order.end(), before);
  const T kth = row[order[k - 1]];
  stats.fallback_used = true;
  stats.converged_exactly = false;
  return {kth, k - count_above(row, kth), stats};
}

}  // namespace

template <typename T>
PivotSelection<T> pivot_select_row(std::span<const T> row, std::size_t k, std::uint32_t max_iterations) {
  if (k == 0 || k > row.size()) {
    throw DimensionError("pivot selection needs 1 <= k <= row length (k=" + std::to_string(k) +
                         ", length=" + std::to_string(row.size()) + ")");
  }
  const auto [min_it, max_it] = std::minmax_element(row.begin(), row.end());
  T lo = *min_it;
  T hi = *max_it;

  if (k == row.size()) {
    return {std::nextafter(lo, -std::numeric_limits<T>::infinity()), 0, {0, true, false}};
  }

  PivotStats stats;
  for (std::uint32_t it = 1; it <= max_iterations; ++it) {
    const T pivot = std::midpoint(lo, hi);
    if (pivot <= lo || pivot >= hi) break;  // interval collapsed: ties
    stats.iterations = it;
    const std::size_t above = count_above(row, pivot);
    if (above == k) {
      stats.converged_exactly = true;
      return {pivot, 0, stats};
    }
    if (above > k) {
      lo = pivot;
    } else {
      hi = pivot;
    }
  }
  return exact_select(row, k, stats);
}

template <typename T, typename Index>
void collect_selected(std::span<const T> row, const PivotSelection<T>& sel, std::span<Index> out) {
  std::size_t n = 0;
  std::size_t equal_left = sel.take_equal;
  for (std::size_t i = 0; i < row.size() && n < out.size(); ++i) {
    if (row[i] > sel.threshold) {
      out[n++] = static_cast<Index>(i);
    } else if (equal_left > 0 && row[i] == sel.threshold) {
      out[n++] = static_cast<Index>(i);
      --equal_left;
    }
  }
  if (n != out.size()) throw NumericError("selection produced fewer than k entries");
}

template PivotSelection<float> pivot_select_row(std::span<const float>, std::size_t, std::uint32_t);
template PivotSelection<double> pivot_select_row(std::span<const double>, std::size_t, std::uint32_t);

#define MAXK_INSTANTIATE_COLLECT(T, I) \
  template void collect_selected(std::span<const T>, const PivotSelection<T>&, std::span<I>);
MAXK_INSTANTIATE_COLLECT(float, std::uint8_t)
MAXK_INSTANTIATE_COLLECT(float, std::uint16_t)
MAXK_INSTANTIATE_COLLECT(float, std::uint32_t)
MAXK_INSTANTIATE_COLLECT(double, std::uint8_t)
MAXK_INSTANTIATE_COLLECT(double, std::uint16_t)
MAXK_INSTANTIATE_COLLECT(double, std::uint32_t)
#undef MAXK_INSTANTIATE_COLLECT

}  // namespace maxk
