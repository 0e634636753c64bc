#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "maxk/dense.hpp"

namespace maxk {

using NodeId = std::uint32_t;
using EdgeOffset = std::uint64_t;

/// Edge weighting applied to the adjacency before aggregation.
///   none      - weights kept as loaded (sum aggregator)
///   mean      - 1/deg(i) on every edge of row i (SAGE mean aggregator)
///   symmetric - 1/sqrt(deg(i) deg(j)) (GCN)
enum class Normalization { none, mean, symmetric };

Normalization parse_normalization(std::string_view name);
std::string_view to_string(Normalization kind);

struct Edge {
  NodeId src;
  NodeId dst;
  float weight = 1.0f;
};

/// Square sparse adjacency in compressed sparse row form.
///
/// Rows are sorted by column with no duplicates, so two graphs holding the
/// same edge set are bitwise equal. Immutable after construction.
class CsrGraph {
 public:
  CsrGraph() : row_ptr_{0} {}

  /// Takes ownership of already-canonical arrays; throws if any invariant
  /// is violated.
  CsrGraph(std::size_t num_nodes, std::vector<EdgeOffset> row_ptr,
           std::vector<NodeId> col_idx, std::vector<float> edge_val);

  /// Builds the canonical form of an arbitrary edge list. Duplicate edges
  /// are merged by summing their weights.
  static CsrGraph from_edges(std::size_t num_nodes, std::vector<Edge> edges);

  std::size_t num_nodes() const noexcept { return row_ptr_.size() - 1; }
  std::size_t num_edges() const noexcept { return col_idx_.size(); }
  double avg_degree() const noexcept {
    return num_nodes() ? static_cast<double>(num_edges()) / static_cast<double>(num_nodes()) : 0.0;
  }
  std::size_t degree(std::size_t row) const noexcept {
    return static_cast<std::size_t>(row_ptr_[row + 1] - row_ptr_[row]);
  }

  std::span<const EdgeOffset> row_ptr() const noexcept { return row_ptr_; }
  std::span<const NodeId> col_idx() const noexcept { return col_idx_; }
  std::span<const float> edge_val() const noexcept { return edge_val_; }

  std::span<const NodeId> row_cols(std::size_t row) const noexcept {
    return std::span<const NodeId>(col_idx_).subspan(row_ptr_[row], degree(row));
  }
  std::span<const float> row_vals(std::size_t row) const noexcept {
    return std::span<const float>(edge_val_).subspan(row_ptr_[row], degree(row));
  }

  /// Same structure, new values.
  CsrGraph with_values(std::vector<float> values) const;

  bool operator==(const CsrGraph&) const = default;

 private:
  std::vector<EdgeOffset> row_ptr_;
  std::vector<NodeId> col_idx_;
  std::vector<float> edge_val_;
};

/// Column-major view of the transpose of a CsrGraph.
///
/// Column j of A^T is row j of A, so the view stores nothing but a pointer
/// to the original graph. The graph must outlive the view.
class CscView {
 public:
  struct Column {
    std::span<const NodeId> rows;
    std::span<const float> values;
  };

  explicit CscView(const CsrGraph& g) noexcept : graph_(&g) {}

  std::size_t num_nodes() const noexcept { return graph_->num_nodes(); }
  std::size_t num_edges() const noexcept { return graph_->num_edges(); }
  std::span<const EdgeOffset> col_ptr() const noexcept { return graph_->row_ptr(); }
  std::span<const NodeId> row_idx() const noexcept { return graph_->col_idx(); }
  std::span<const float> values() const noexcept { return graph_->edge_val(); }

  Column column(std::size_t j) const noexcept { return {graph_->row_cols(j), graph_->row_vals(j)}; }

  const CsrGraph& base() const noexcept { return *graph_; }

 private:
  const CsrGraph* graph_;
};

inline CscView transpose_view(const CsrGraph& g) noexcept { return CscView(g); }

CsrGraph normalize(const CsrGraph& g, Normalization kind);

/// Adds a unit-weight self-loop to every node that lacks one.
CsrGraph add_self_loops(const CsrGraph& g);

CsrGraph identity_graph(std::size_t num_nodes);

Matrix<double> to_dense(const CsrGraph& g);
/// Materializes A^T by walking the columns of the view.
Matrix<double> to_dense(const CscView& t);

// -- file formats -----------------------------------------------------------

/// Matrix Market coordinate file (pattern, real or integer field; general or
/// symmetric). Pattern entries load with weight 1.
CsrGraph load_matrix_market(const std::filesystem::path& path);
void save_matrix_market(const CsrGraph& g, const std::filesystem::path& path);

/// Little-endian edge list: "MXKG", u32 version=1, u64 N, u64 nnz, then nnz
/// records of (u32 src, u32 dst, f32 weight).
CsrGraph load_edge_list_binary(const std::filesystem::path& path);
void save_edge_list_binary(const CsrGraph& g, const std::filesystem::path& path);

/// Dispatches on extension: ".mtx" is Matrix Market, anything else binary.
CsrGraph load_graph(const std::filesystem::path& path);

}  // namespace maxk
