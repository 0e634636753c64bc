#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "maxk/kernels.hpp"

namespace maxk {

enum class KernelKind { spmm, spgemm, sspmm };
std::string_view to_string(KernelKind k);

struct TrafficParams {
  std::uint64_t num_nodes = 1;
  std::uint64_t nnz = 0;
  std::uint32_t dim_origin = 256;
  std::uint32_t dim_k = 32;
  std::uint32_t index_bytes = 1;
  std::uint32_t w = kDefaultGroupSize;
  /// Number of edge groups when a concrete plan is known. Without it the
  /// atomic count falls back to the closed form N * dim_origin * avgdeg / w,
  /// rounded up.
  std::optional<std::uint64_t> edge_groups;
};

/// Pre-cache global-memory traffic of one kernel, in bytes, with the
/// comparison against the dense-feature SpMM it replaces.
///
/// Baselines: the forward kernels compare against row-wise SpMM reading
/// 4*dim_origin bytes per edge. The backward SSpMM compares against the
/// naive outer-product SpMM, which reads the staged rows plus a full output
/// row per edge and writes a full output row per edge.
struct TrafficReport {
  KernelKind kernel = KernelKind::spmm;
  std::uint64_t read_bytes = 0;
  std::uint64_t write_bytes = 0;
  std::uint64_t atomic_ops = 0;
  double atomic_ops_closed_form = 0.0;  // N * dim_origin * (nnz/N) / w
  std::uint64_t baseline_read_bytes = 0;
  std::uint64_t baseline_write_bytes = 0;
  std::int64_t read_reduction_bytes = 0;
  std::int64_t write_reduction_bytes = 0;
  double reduction_vs_spmm_pct = 0.0;
  TrafficParams params;

  bool no_benefit() const noexcept { return reduction_vs_spmm_pct <= 0.0; }
};

/// (4*dim_origin - (4+index_bytes)*dim_k) / (4*dim_origin), as a percentage.
/// Pure arithmetic; index_bytes is not validated.
double read_reduction_pct(double dim_origin, double dim_k, double index_bytes);

TrafficReport traffic_spmm(const TrafficParams& p);
TrafficReport traffic_spgemm_forward(const TrafficParams& p);
TrafficReport traffic_sspmm_backward(const TrafficParams& p);
TrafficReport traffic_for(KernelKind kind, const TrafficParams& p);

/// Report built from an instrumented kernel run. Counted bytes replace the
/// analytical ones; baselines and reductions use `p`.
TrafficReport measured_traffic(KernelKind kind, const TrafficCounter& counted, const TrafficParams& p);

inline constexpr std::string_view kCacheCaveat =
    "model counts pre-cache global-memory bytes; profiler totals include L2 effects and are not expected to match exactly";

/// Node and edge counts of well-known benchmark graphs.
struct GraphStats {
  std::string_view name;
  std::uint64_t nodes;
  std::uint64_t edges;
};

std::span<const GraphStats> known_graph_stats();
std::optional<GraphStats> find_graph_stats(std::string_view name);

}  // namespace maxk
