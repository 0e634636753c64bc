#include "maxk/cbsr.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "maxk/detail/binary_io.hpp"
#include "maxk/error.hpp"

namespace maxk {

IndexWidth select_index_width(std::size_t dim_origin) {
  if (dim_origin <= 0x100) return IndexWidth::u8;
  if (dim_origin <= 0x10000) return IndexWidth::u16;
  return IndexWidth::u32;
}

IndexBlock::IndexBlock(IndexWidth width, std::size_t size) {
  switch (width) {
    case IndexWidth::u8: data_.emplace<0>(size); break;
    case IndexWidth::u16: data_.emplace<1>(size); break;
    case IndexWidth::u32: data_.emplace<2>(size); break;
    default: throw ParameterError("index width must be 1, 2 or 4 bytes");
  }
}

namespace {

IndexWidth resolve_width(IndexWidth requested, std::size_t dim_origin) {
  const IndexWidth needed = select_index_width(dim_origin);
  if (requested == IndexWidth::automatic) return needed;
  if (static_cast<unsigned>(requested) < static_cast<unsigned>(needed)) {
    throw DimensionError("index width of " + std::to_string(static_cast<unsigned>(requested)) +
                         " bytes cannot address dim_origin=" + std::to_string(dim_origin));
  }
  return requested;
}

void check_dims(std::size_t dim_origin, std::size_t dim_k) {
  if (dim_k < 1 || dim_k > dim_origin) {
    throw DimensionError("CBSR needs 1 <= dim_k <= dim_origin (dim_k=" + std::to_string(dim_k) +
                         ", dim_origin=" + std::to_string(dim_origin) + ")");
  }
}

}  // namespace

template <typename T>
BasicCbsr<T>::BasicCbsr(std::size_t rows, std::size_t dim_origin, std::size_t dim_k, IndexWidth width)
    : rows_(rows), dim_origin_(dim_origin), dim_k_(dim_k) {
  check_dims(dim_origin, dim_k);
  index_ = IndexBlock(resolve_width(width, dim_origin), rows * dim_k);
  data_.assign(rows * dim_k, T{});
}

template <typename T>
BasicCbsr<T>::BasicCbsr(std::size_t rows, std::size_t dim_origin, std::size_t dim_k, IndexBlock index,
                        std::vector<T> data)
    : rows_(rows), dim_origin_(dim_origin), dim_k_(dim_k), index_(std::move(index)), data_(std::move(data)) {
  check_dims(dim_origin, dim_k);
  resolve_width(index_.width(), dim_origin);
  if (index_.size() != rows * dim_k || data_.size() != rows * dim_k) {
    throw DimensionError("CBSR blocks must both hold N*dim_k entries");
  }
}

template <typename T>
BasicCbsr<T> BasicCbsr<T>::with_values(std::vector<T> values) const {
  return BasicCbsr(rows_, dim_origin_, dim_k_, index_, std::move(values));
}

template <typename T>
bool BasicCbsr<T>::pattern_equal(const BasicCbsr& other) const noexcept {
  for (std::size_t i = 0; i < index_.size(); ++i) {
    if (index_[i] != other.index_[i]) return false;
  }
  return true;
}

template <typename T>
void BasicCbsr<T>::validate() const {
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t j = 0; j < dim_k_; ++j) {
      const std::uint32_t c = index_at(r, j);
      if (c >= dim_origin_) throw DimensionError("sp_index entry out of range in row " + std::to_string(r));
      if (j > 0 && c <= index_at(r, j - 1)) {
        throw DimensionError("sp_index not strictly increasing in row " + std::to_string(r));
      }
    }
  }
}

template <typename T>
MaxkResult<T> maxk_forward(const Matrix<T>& x, std::size_t k, IndexWidth width, std::uint32_t max_iterations) {
  const std::size_t n = x.rows();
  const std::size_t dim = x.cols();
  if (k > dim) {
    throw DimensionError("k=" + std::to_string(k) + " exceeds feature width " + std::to_string(dim));
  }
  for (T v : x.flat()) {
    if (!std::isfinite(v)) throw NumericError("maxk_forward input contains a non-finite value");
  }

  MaxkResult<T> result{BasicCbsr<T>(n, dim, k, width), {}};
  auto& out = result.cbsr;
  std::size_t converged = 0, fallbacks = 0;
  std::uint64_t total_iters = 0;
  std::uint32_t max_seen = 0;
  const auto signed_n = static_cast<std::ptrdiff_t>(n);

  out.sp_index().visit_mut([&](auto index) {
#pragma omp parallel for schedule(static) reduction(+ : converged, fallbacks, total_iters) reduction(max : max_seen)
    for (std::ptrdiff_t r = 0; r < signed_n; ++r) {
      const auto row = x.row(static_cast<std::size_t>(r));
      const auto sel = pivot_select_row<T>(row, k, max_iterations);
      auto idx = index.subspan(static_cast<std::size_t>(r) * k, k);
      collect_selected<T>(row, sel, idx);
      auto vals = out.data_row(static_cast<std::size_t>(r));
      for (std::size_t j = 0; j < k; ++j) vals[j] = row[idx[j]];
      converged += sel.stats.converged_exactly;
      fallbacks += sel.stats.fallback_used;
      total_iters += sel.stats.iterations;
      max_seen = std::max(max_seen, sel.stats.iterations);
    }
  });

  result.pivots = {n, converged, fallbacks, total_iters, max_seen};
  return result;
}

template <typename T>
Matrix<T> densify(const BasicCbsr<T>& c) {
  Matrix<T> d(c.rows(), c.dim_origin());
  for (std::size_t r = 0; r < c.rows(); ++r) {
    const auto vals = c.data_row(r);
    for (std::size_t j = 0; j < c.dim_k(); ++j) d(r, c.index_at(r, j)) = vals[j];
  }
  return d;
}

template <typename T>
BasicCbsr<T> maxk_gather(const Matrix<T>& dense, const BasicCbsr<T>& pattern) {
  if (dense.rows() != pattern.rows() || dense.cols() != pattern.dim_origin()) {
    throw DimensionError("gather source shape does not match CBSR pattern");
  }
  std::vector<T> vals(pattern.rows() * pattern.dim_k());
  for (std::size_t r = 0; r < pattern.rows(); ++r) {
    for (std::size_t j = 0; j < pattern.dim_k(); ++j) {
      vals[r * pattern.dim_k() + j] = dense(r, pattern.index_at(r, j));
    }
  }
  return pattern.with_values(std::move(vals));
}

template <typename T>
Matrix<T> maxk_backward(const BasicCbsr<T>& upstream, const BasicCbsr<T>& forward) {
  if (!upstream.same_pattern(forward)) {
    throw PatternError("gradient sp_index does not match the forward MaxK pattern");
  }
  return densify(upstream);
}

void save_cbsr(const CbsrMatrix& c, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  detail::BinaryWriter wr(out);
  wr.magic("CBSR");
  wr.u32(1);
  wr.u64(c.rows());
  wr.u32(static_cast<std::uint32_t>(c.dim_origin()));
  wr.u32(static_cast<std::uint32_t>(c.dim_k()));
  wr.u8(static_cast<std::uint8_t>(c.sp_index().width_bytes()));
  c.sp_index().visit([&](auto idx) {
    for (auto v : idx) {
      if constexpr (sizeof(v) == 1) wr.u8(v);
      else if constexpr (sizeof(v) == 2) wr.u16(v);
      else wr.u32(v);
    }
  });
  for (float v : c.sp_data()) wr.f32(v);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

CbsrMatrix load_cbsr(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  detail::BinaryReader rd(in, path.string());
  rd.expect_magic("CBSR");
  if (const auto v = rd.u32(); v != 1) throw FormatError("unsupported CBSR version " + std::to_string(v));
  const std::uint64_t rows = rd.u64();
  const std::uint32_t dim_origin = rd.u32();
  const std::uint32_t dim_k = rd.u32();
  const std::uint8_t width = rd.u8();
  if (width != 1 && width != 2 && width != 4) throw FormatError("bad CBSR index width " + std::to_string(width));

  IndexBlock index(static_cast<IndexWidth>(width), rows * dim_k);
  index.visit_mut([&](auto idx) {
    for (auto& v : idx) {
      if constexpr (sizeof(v) == 1) v = rd.u8();
      else if constexpr (sizeof(v) == 2) v = rd.u16();
      else v = rd.u32();
    }
  });
  std::vector<float> data(rows * dim_k);
  for (auto& v : data) v = rd.f32();
  CbsrMatrix c(rows, dim_origin, dim_k, std::move(index), std::move(data));
  c.validate();
  return c;
}

template class BasicCbsr<float>;
template class BasicCbsr<double>;

template MaxkResult<float> maxk_forward(const Matrix<float>&, std::size_t, IndexWidth, std::uint32_t);
template MaxkResult<double> maxk_forward(const Matrix<double>&, std::size_t, IndexWidth, std::uint32_t);
template Matrix<float> densify(const BasicCbsr<float>&);
template Matrix<double> densify(const BasicCbsr<double>&);
template BasicCbsr<float> maxk_gather(const Matrix<float>&, const BasicCbsr<float>&);
template BasicCbsr<double> maxk_gather(const Matrix<double>&, const BasicCbsr<double>&);
template Matrix<float> maxk_backward(const BasicCbsr<float>&, const BasicCbsr<float>&);
template Matrix<double> maxk_backward(const BasicCbsr<double>&, const BasicCbsr<double>&);

}  // namespace maxk
