#include "maxk/partition.hpp"

#include <algorithm>
#include <fstream>
#include <string>

#include "maxk/detail/binary_io.hpp"
#include "maxk/error.hpp"

namespace maxk {

EdgeGroupPlan::EdgeGroupPlan(std::uint32_t w, std::uint32_t dim_k, std::vector<EdgeGroup> groups)
    : w_(w), dim_k_(dim_k), groups_(std::move(groups)) {
  if (w_ < 1) throw ParameterError("edge group size w must be >= 1");
  if (dim_k_ < 1) throw ParameterError("dim_k must be >= 1");
  slots_.reserve(groups_.size());
  const std::uint32_t per_warp = groups_per_warp();
  const auto lanes = static_cast<std::uint8_t>(dim_k_ <= 16 ? dim_k_ : kWarpWidth);
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    const auto slot = static_cast<std::uint32_t>(i % per_warp);
    slots_.push_back({static_cast<std::uint32_t>(i / per_warp), static_cast<std::uint8_t>(slot * lanes), lanes});
  }
}

void EdgeGroupPlan::check_covers(const CsrGraph& g) const {
  EdgeOffset next = 0;
  const auto row_ptr = g.row_ptr();
  for (const EdgeGroup& eg : groups_) {
    if (eg.row >= g.num_nodes()) throw PlanError("plan references row outside the graph");
    if (eg.edge_count == 0 || eg.edge_count > w_) throw PlanError("edge group size outside [1, w]");
    if (eg.edge_start != next) throw PlanError("edge groups do not tile the edge array");
    if (eg.edge_start < row_ptr[eg.row] || eg.edge_start + eg.edge_count > row_ptr[eg.row + 1]) {
      throw PlanError("edge group crosses its row boundary");
    }
    next = eg.edge_start + eg.edge_count;
  }
  if (next != g.num_edges()) throw PlanError("plan does not cover every nonzero of the graph");
}

EdgeGroupPlan build_plan(const CsrGraph& g, std::size_t dim_k, std::size_t w, PlanCounter* counter) {
  if (w < 1) throw ParameterError("edge group size w must be >= 1");
  if (dim_k < 1) throw ParameterError("dim_k must be >= 1");
  PlanCounter local;
  std::vector<EdgeGroup> groups;
  groups.reserve(g.num_edges() / w + g.num_nodes());
  const auto row_ptr = g.row_ptr();
  for (std::size_t r = 0; r < g.num_nodes(); ++r) {
    ++local.row_visits;
    for (EdgeOffset e = row_ptr[r]; e < row_ptr[r + 1]; e += w) {
      const auto count = static_cast<std::uint32_t>(std::min<EdgeOffset>(w, row_ptr[r + 1] - e));
      groups.push_back({static_cast<NodeId>(r), e, count});
      ++local.groups_emitted;
    }
  }
  if (counter) *counter = local;
  return EdgeGroupPlan(static_cast<std::uint32_t>(w), static_cast<std::uint32_t>(dim_k), std::move(groups));
}

PlanStats plan_stats(const EdgeGroupPlan& p) {
  PlanStats s;
  s.groups = p.groups().size();
  s.warps_used = p.warps_used();
  if (s.groups == 0) return s;
  std::size_t total = 0;
  s.min_group = p.groups().front().edge_count;
  for (const EdgeGroup& eg : p.groups()) {
    total += eg.edge_count;
    s.max_group = std::max<std::size_t>(s.max_group, eg.edge_count);
    s.min_group = std::min<std::size_t>(s.min_group, eg.edge_count);
  }
  s.mean_group = static_cast<double>(total) / static_cast<double>(s.groups);
  s.imbalance = static_cast<double>(s.max_group) / s.mean_group;
  return s;
}

void save_plan(const EdgeGroupPlan& p, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  detail::BinaryWriter wr(out);
  wr.magic("EGPL");
  wr.u32(1);
  wr.u32(p.w());
  wr.u32(p.dim_k());
  wr.u64(p.groups().size());
  for (const EdgeGroup& eg : p.groups()) {
    wr.u32(eg.row);
    wr.u64(eg.edge_start);
    wr.u32(eg.edge_count);
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

EdgeGroupPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  detail::BinaryReader rd(in, path.string());
  rd.expect_magic("EGPL");
  if (const auto v = rd.u32(); v != 1) throw FormatError("unsupported EGPL version " + std::to_string(v));
  const std::uint32_t w = rd.u32();
  const std::uint32_t dim_k = rd.u32();
  const std::uint64_t count = rd.u64();
  std::vector<EdgeGroup> groups;
  groups.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 24)));
  for (std::uint64_t i = 0; i < count; ++i) {
    EdgeGroup eg;
    eg.row = rd.u32();
    eg.edge_start = rd.u64();
    eg.edge_count = rd.u32();
    groups.push_back(eg);
  }
  return EdgeGroupPlan(w, dim_k, std::move(groups));
}

}  // namespace maxk
