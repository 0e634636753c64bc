#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "maxk/graph.hpp"

namespace maxk {

inline constexpr std::uint32_t kWarpWidth = 32;
inline constexpr std::uint32_t kDefaultGroupSize = 32;

/// A contiguous run of at most w nonzeros from one adjacency row.
struct EdgeGroup {
  NodeId row = 0;
  EdgeOffset edge_start = 0;
  std::uint32_t edge_count = 0;

  bool operator==(const EdgeGroup&) const = default;
};

/// Lanes of one warp serving a group. For dim_k <= 16 a group owns dim_k
/// lanes of a shared warp; above that it owns the whole warp and loops
/// ceil(dim_k / 32) times.
struct WarpSlot {
  std::uint32_t warp = 0;
  std::uint8_t lane_begin = 0;
  std::uint8_t lane_count = 0;

  bool operator==(const WarpSlot&) const = default;
};

class EdgeGroupPlan {
 public:
  EdgeGroupPlan() = default;
  EdgeGroupPlan(std::uint32_t w, std::uint32_t dim_k, std::vector<EdgeGroup> groups);

  std::uint32_t w() const noexcept { return w_; }
  std::uint32_t dim_k() const noexcept { return dim_k_; }
  const std::vector<EdgeGroup>& groups() const noexcept { return groups_; }
  const std::vector<WarpSlot>& warp_assignments() const noexcept { return slots_; }

  std::uint32_t groups_per_warp() const noexcept { return dim_k_ <= 16 ? kWarpWidth / dim_k_ : 1; }
  std::uint32_t lane_iterations() const noexcept { return (dim_k_ + kWarpWidth - 1) / kWarpWidth; }
  std::size_t warps_used() const noexcept { return slots_.empty() ? 0 : slots_.back().warp + 1; }

  /// Throws PlanError unless the groups tile g's nonzeros exactly, in row
  /// order, each inside its own row.
  void check_covers(const CsrGraph& g) const;

  bool operator==(const EdgeGroupPlan&) const = default;

 private:
  std::uint32_t w_ = kDefaultGroupSize;
  std::uint32_t dim_k_ = 1;
  std::vector<EdgeGroup> groups_;
  std::vector<WarpSlot> slots_;
};

/// Work counter for the partitioner: one tick per row visited and per group
/// emitted.
struct PlanCounter {
  std::uint64_t row_visits = 0;
  std::uint64_t groups_emitted = 0;
  std::uint64_t total() const noexcept { return row_visits + groups_emitted; }
};

/// Single pass over the rows: each row of degree d becomes ceil(d / w)
/// groups of at most w edges; groups are then packed greedily into warps in
/// row order.
EdgeGroupPlan build_plan(const CsrGraph& g, std::size_t dim_k, std::size_t w = kDefaultGroupSize,
                         PlanCounter* counter = nullptr);

struct PlanStats {
  std::size_t groups = 0;
  std::size_t max_group = 0;
  std::size_t min_group = 0;
  double mean_group = 0.0;
  std::size_t warps_used = 0;
  double imbalance = 0.0;  // max / mean group size
};

PlanStats plan_stats(const EdgeGroupPlan& p);

/// "EGPL" dump: u32 version=1, u32 w, u32 dim_k, u64 group count, then
/// (u32 row, u64 edge_start, u32 edge_count) per group. Little-endian.
void save_plan(const EdgeGroupPlan& p, const std::filesystem::path& path);
EdgeGroupPlan load_plan(const std::filesystem::path& path);

}  // namespace maxk
