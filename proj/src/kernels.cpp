#include "maxk/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <string>
#include <vector>

#include "maxk/error.hpp"

namespace maxk {
namespace {

int thread_count(const ExecOptions& opts) {
  return opts.threads > 0 ? opts.threads : omp_get_max_threads();
}

void check_plan(const CsrGraph& a, const EdgeGroupPlan& plan) {
  plan.check_covers(a);
}

}  // namespace

template <typename T>
Matrix<T> spgemm_forward(const CsrGraph& a, const BasicCbsr<T>& xs, const EdgeGroupPlan& plan,
                         const ExecOptions& opts) {
  if (xs.rows() != a.num_nodes()) {
    throw DimensionError("CBSR rows (" + std::to_string(xs.rows()) + ") != graph nodes (" +
                         std::to_string(a.num_nodes()) + ")");
  }
  check_plan(a, plan);

  const std::size_t dim_origin = xs.dim_origin();
  const std::size_t dim_k = xs.dim_k();
  Matrix<T> out(a.num_nodes(), dim_origin);
  const auto& groups = plan.groups();
  const auto cols = a.col_idx();
  const auto vals = a.edge_val();
  const T* sp_data = xs.sp_data().data();
  const auto index_bytes = xs.sp_index().width_bytes();

  std::uint64_t reads = 0, writes = 0, atomics = 0;

  xs.sp_index().visit([&](auto sp_index) {
    // Accumulate one edge group into buf.
    const auto accumulate = [&](const EdgeGroup& eg, T* buf) {
      for (EdgeOffset e = eg.edge_start; e < eg.edge_start + eg.edge_count; ++e) {
        const std::size_t j = cols[e];
        const T ev = static_cast<T>(vals[e]);
        const auto* idx = sp_index.data() + j * dim_k;
        const T* data = sp_data + j * dim_k;
        for (std::size_t k = 0; k < dim_k; ++k) buf[idx[k]] += ev * data[k];
      }
    };
    const std::uint64_t per_edge = (sizeof(T) + index_bytes) * dim_k;
    const auto signed_groups = static_cast<std::ptrdiff_t>(groups.size());

    if (opts.mode == ExecMode::deterministic) {
      std::vector<T> buf(dim_origin);
      for (const EdgeGroup& eg : groups) {
        std::fill(buf.begin(), buf.end(), T{});
        accumulate(eg, buf.data());
        auto dst = out.row(eg.row);
        for (std::size_t c = 0; c < dim_origin; ++c) dst[c] += buf[c];
        reads += per_edge * eg.edge_count;
        writes += sizeof(T) * dim_origin;
        atomics += dim_origin;
      }
      return;
    }

    std::uint64_t t_reads = 0, t_writes = 0, t_atomics = 0;
#pragma omp parallel num_threads(thread_count(opts)) reduction(+ : t_reads, t_writes, t_atomics)
    {
      std::vector<T> buf(dim_origin);
#pragma omp for schedule(dynamic, 16)
      for (std::ptrdiff_t gi = 0; gi < signed_groups; ++gi) {
        const EdgeGroup& eg = groups[static_cast<std::size_t>(gi)];
        std::fill(buf.begin(), buf.end(), T{});
        accumulate(eg, buf.data());
        T* dst = out.row(eg.row).data();
        for (std::size_t c = 0; c < dim_origin; ++c) {
#pragma omp atomic
          dst[c] += buf[c];
        }
        t_reads += per_edge * eg.edge_count;
        t_writes += sizeof(T) * dim_origin;
        t_atomics += dim_origin;
      }
    }
    reads += t_reads;
    writes += t_writes;
    atomics += t_atomics;
  });

  if (opts.counter) *opts.counter += TrafficCounter{reads, writes, atomics};
  return out;
}

template <typename T>
BasicCbsr<T> sspmm_backward(const CscView& at, const Matrix<T>& dxl, const BasicCbsr<T>& pattern,
                            const EdgeGroupPlan& plan, const ExecOptions& opts) {
  const std::size_t n = at.num_nodes();
  if (pattern.rows() != n || dxl.rows() != n) {
    throw DimensionError("SSpMM operands disagree on the node count");
  }
  if (dxl.cols() != pattern.dim_origin()) {
    throw DimensionError("upstream gradient width != CBSR dim_origin");
  }
  const std::size_t dim_origin = dxl.cols();
  const std::size_t dim_k = pattern.dim_k();
  for (std::size_t i = 0; i < pattern.sp_index().size(); ++i) {
    if (pattern.sp_index()[i] >= dim_origin) throw BoundsError("sp_index entry >= dim_origin");
  }
  check_plan(at.base(), plan);

  BasicCbsr<T> result = pattern.with_values(std::vector<T>(n * dim_k, T{}));
  T* out = result.sp_data().data();
  const auto& groups = plan.groups();
  const auto rows = at.row_idx();
  const auto vals = at.values();
  const auto index_bytes = pattern.sp_index().width_bytes();

  // Stage 1 stages every dense row once.
  std::uint64_t reads = sizeof(T) * n * dim_origin, writes = 0, atomics = 0;

  pattern.sp_index().visit([&](auto sp_index) {
    // Column i of A^T (= row i of A) against the staged row buf = dxl[i,:].
    const auto process = [&](const EdgeGroup& eg, const T* buf, auto&& add) {
      for (EdgeOffset e = eg.edge_start; e < eg.edge_start + eg.edge_count; ++e) {
        const std::size_t j = rows[e];
        const T ev = static_cast<T>(vals[e]);
        const auto* idx = sp_index.data() + j * dim_k;
        T* dst = out + j * dim_k;
        for (std::size_t k = 0; k < dim_k; ++k) add(dst[k], ev * buf[idx[k]]);
      }
    };
    const std::uint64_t read_per_edge = (sizeof(T) + index_bytes) * dim_k;
    const std::uint64_t write_per_edge = sizeof(T) * dim_k;
    const auto signed_groups = static_cast<std::ptrdiff_t>(groups.size());

    if (opts.mode == ExecMode::deterministic) {
      std::vector<T> buf(dim_origin);
      for (const EdgeGroup& eg : groups) {
        const auto src = dxl.row(eg.row);
        std::copy(src.begin(), src.end(), buf.begin());
        process(eg, buf.data(), [](T& d, T v) { d += v; });
        reads += read_per_edge * eg.edge_count;
        writes += write_per_edge * eg.edge_count;
        atomics += dim_k * eg.edge_count;
      }
      return;
    }

    std::uint64_t t_reads = 0, t_writes = 0, t_atomics = 0;
#pragma omp parallel num_threads(thread_count(opts)) reduction(+ : t_reads, t_writes, t_atomics)
    {
      std::vector<T> buf(dim_origin);
#pragma omp for schedule(dynamic, 16)
      for (std::ptrdiff_t gi = 0; gi < signed_groups; ++gi) {
        const EdgeGroup& eg = groups[static_cast<std::size_t>(gi)];
        const auto src = dxl.row(eg.row);
        std::copy(src.begin(), src.end(), buf.begin());
        process(eg, buf.data(), [](T& d, T v) {
#pragma omp atomic
          d += v;
        });
        t_reads += read_per_edge * eg.edge_count;
        t_writes += write_per_edge * eg.edge_count;
        t_atomics += dim_k * eg.edge_count;
      }
    }
    reads += t_reads;
    writes += t_writes;
    atomics += t_atomics;
  });

  if (opts.counter) *opts.counter += TrafficCounter{reads, writes, atomics};
  return result;
}

template <typename T>
Matrix<T> dense_spmm(const CsrGraph& a, const Matrix<T>& x, TrafficCounter* counter) {
  if (x.rows() != a.num_nodes()) throw DimensionError("dense operand rows != graph nodes");
  const std::size_t f = x.cols();
  Matrix<T> out(a.num_nodes(), f);
  for (std::size_t i = 0; i < a.num_nodes(); ++i) {
    const auto cols = a.row_cols(i);
    const auto vals = a.row_vals(i);
    auto dst = out.row(i);
    for (std::size_t e = 0; e < cols.size(); ++e) {
      const auto src = x.row(cols[e]);
      const T ev = static_cast<T>(vals[e]);
      for (std::size_t c = 0; c < f; ++c) dst[c] += ev * src[c];
    }
  }
  if (counter) {
    *counter += TrafficCounter{sizeof(T) * f * a.num_edges(), sizeof(T) * f * a.num_nodes(), 0};
  }
  return out;
}

template <typename T>
Matrix<T> dense_spmm_transpose(const CsrGraph& a, const Matrix<T>& x) {
  if (x.rows() != a.num_nodes()) throw DimensionError("dense operand rows != graph nodes");
  const std::size_t f = x.cols();
  Matrix<T> out(a.num_nodes(), f);
  for (std::size_t i = 0; i < a.num_nodes(); ++i) {
    const auto cols = a.row_cols(i);
    const auto vals = a.row_vals(i);
    const auto src = x.row(i);
    for (std::size_t e = 0; e < cols.size(); ++e) {
      auto dst = out.row(cols[e]);
      const T ev = static_cast<T>(vals[e]);
      for (std::size_t c = 0; c < f; ++c) dst[c] += ev * src[c];
    }
  }
  return out;
}

#define MAXK_INSTANTIATE_KERNELS(T)                                                                     \
  template Matrix<T> spgemm_forward(const CsrGraph&, const BasicCbsr<T>&, const EdgeGroupPlan&,       \
                                    const ExecOptions&);                                               \
  template BasicCbsr<T> sspmm_backward(const CscView&, const Matrix<T>&, const BasicCbsr<T>&,         \
                                       const EdgeGroupPlan&, const ExecOptions&);                      \
  template Matrix<T> dense_spmm(const CsrGraph&, const Matrix<T>&, TrafficCounter*);                  \
  template Matrix<T> dense_spmm_transpose(const CsrGraph&, const Matrix<T>&);
MAXK_INSTANTIATE_KERNELS(float)
MAXK_INSTANTIATE_KERNELS(double)
#undef MAXK_INSTANTIATE_KERNELS

}  // namespace maxk
