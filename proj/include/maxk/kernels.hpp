#pragma once

#include <cstdint>

#include "maxk/cbsr.hpp"
#include "maxk/dense.hpp"
#include "maxk/graph.hpp"
#include "maxk/partition.hpp"

namespace maxk {

/// deterministic: edge groups run one after another in plan order (the
///   serial reference).
/// parallel: edge groups run as independent OpenMP tasks and accumulate
///   into the output with atomic adds.
enum class ExecMode { deterministic, parallel };

/// Simulated global-memory accesses of one kernel call, ignoring caches.
struct TrafficCounter {
  std::uint64_t read_bytes = 0;
  std::uint64_t write_bytes = 0;
  std::uint64_t atomic_ops = 0;

  TrafficCounter& operator+=(const TrafficCounter& o) noexcept {
    read_bytes += o.read_bytes;
    write_bytes += o.write_bytes;
    atomic_ops += o.atomic_ops;
    return *this;
  }
  bool operator==(const TrafficCounter&) const = default;
};

struct ExecOptions {
  ExecMode mode = ExecMode::deterministic;
  int threads = 0;  // 0: OpenMP default
  TrafficCounter* counter = nullptr;
};

/// Row-wise SpGEMM of a CSR adjacency with a CBSR feature matrix, producing
/// a dense N x dim_origin result.
///
/// Each edge group accumulates e(i,j) * sp_data[j,:] into a dim_origin
/// scratch buffer at positions sp_index[j,:], then adds the whole buffer
/// into output row i. Counted traffic per edge is the CBSR row fetch
/// (value + index bytes per selected entry); each group flush counts
/// dim_origin atomic adds.
template <typename T>
Matrix<T> spgemm_forward(const CsrGraph& a, const BasicCbsr<T>& xs, const EdgeGroupPlan& plan,
                         const ExecOptions& opts = {});

/// Outer-product SSpMM: A^T * dxl sampled at the sp_index pattern of the
/// forward CBSR matrix. Returns a CBSR matrix sharing `pattern`'s index.
///
/// Column i of A^T is walked group by group; the dense row dxl[i,:] is
/// staged in a scratch buffer, and every edge (i,j) adds
/// e(i,j) * buf[sp_index[j,k]] into sp_data[j,k].
template <typename T>
BasicCbsr<T> sspmm_backward(const CscView& at, const Matrix<T>& dxl, const BasicCbsr<T>& pattern,
                            const EdgeGroupPlan& plan, const ExecOptions& opts = {});

template <typename T>
BasicCbsr<T> sspmm_backward(const CsrGraph& a, const Matrix<T>& dxl, const BasicCbsr<T>& pattern,
                            const EdgeGroupPlan& plan, const ExecOptions& opts = {}) {
  return sspmm_backward(transpose_view(a), dxl, pattern, plan, opts);
}

/// Plain CSR x dense product, columns accumulated in ascending order. This
/// is both the SpMM baseline and the reference the sparse kernels are
/// checked against.
template <typename T>
Matrix<T> dense_spmm(const CsrGraph& a, const Matrix<T>& x, TrafficCounter* counter = nullptr);

/// A^T x computed by scattering row i of x along row i of A.
template <typename T>
Matrix<T> dense_spmm_transpose(const CsrGraph& a, const Matrix<T>& x);

}  // namespace maxk
