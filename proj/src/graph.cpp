#include "maxk/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace maxk {

Normalization parse_normalization(std::string_view name) {
  if (name == "none" || name == "sum") return Normalization::none;
  if (name == "mean" || name == "sage") return Normalization::mean;
  if (name == "symmetric" || name == "sym" || name == "gcn") return Normalization::symmetric;
  throw ParameterError("unknown normalization '" + std::string(name) + "'");
}

std::string_view to_string(Normalization kind) {
  switch (kind) {
    case Normalization::none: return "none";
    case Normalization::mean: return "mean";
    case Normalization::symmetric: return "symmetric";
  }
  return "?";
}

CsrGraph::CsrGraph(std::size_t num_nodes, std::vector<EdgeOffset> row_ptr,
                   std::vector<NodeId> col_idx, std::vector<float> edge_val)
    : row_ptr_(std::move(row_ptr)), col_idx_(std::move(col_idx)), edge_val_(std::move(edge_val)) {
  if (row_ptr_.size() != num_nodes + 1) throw DimensionError("row_ptr must have N+1 entries");
  if (col_idx_.size() != edge_val_.size()) throw DimensionError("col_idx and edge_val differ in length");
  if (row_ptr_.front() != 0 || row_ptr_.back() != col_idx_.size()) {
    throw DimensionError("row_ptr must start at 0 and end at nnz");
  }
  for (std::size_t r = 0; r < num_nodes; ++r) {
    if (row_ptr_[r + 1] < row_ptr_[r]) throw DimensionError("row_ptr is decreasing at row " + std::to_string(r));
    for (EdgeOffset e = row_ptr_[r]; e < row_ptr_[r + 1]; ++e) {
      if (col_idx_[e] >= num_nodes) throw BoundsError("column index out of range in row " + std::to_string(r));
      if (e > row_ptr_[r] && col_idx_[e] <= col_idx_[e - 1]) {
        throw DimensionError("columns not strictly increasing in row " + std::to_string(r));
      }
      if (!std::isfinite(edge_val_[e])) throw NumericError("non-finite edge value in row " + std::to_string(r));
    }
  }
}

CsrGraph CsrGraph::from_edges(std::size_t num_nodes, std::vector<Edge> edges) {
  for (const Edge& e : edges) {
    if (e.src >= num_nodes || e.dst >= num_nodes) {
      throw BoundsError("edge (" + std::to_string(e.src) + "," + std::to_string(e.dst) +
                        ") outside a graph of " + std::to_string(num_nodes) + " nodes");
    }
  }
  std::stable_sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return a.src != b.src ? a.src < b.src : a.dst < b.dst;
  });

  std::vector<EdgeOffset> row_ptr(num_nodes + 1, 0);
  std::vector<NodeId> cols;
  std::vector<float> vals;
  cols.reserve(edges.size());
  vals.reserve(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (i > 0 && edges[i].src == edges[i - 1].src && edges[i].dst == edges[i - 1].dst) {
      vals.back() += edges[i].weight;
      continue;
    }
    cols.push_back(edges[i].dst);
    vals.push_back(edges[i].weight);
    ++row_ptr[edges[i].src + 1];
  }
  for (std::size_t r = 0; r < num_nodes; ++r) row_ptr[r + 1] += row_ptr[r];
  return CsrGraph(num_nodes, std::move(row_ptr), std::move(cols), std::move(vals));
}

CsrGraph CsrGraph::with_values(std::vector<float> values) const {
  return CsrGraph(num_nodes(), row_ptr_, col_idx_, std::move(values));
}

CsrGraph normalize(const CsrGraph& g, Normalization kind) {
  if (kind == Normalization::none) return g;
  std::vector<float> vals(g.num_edges());
  for (std::size_t r = 0; r < g.num_nodes(); ++r) {
    const auto cols = g.row_cols(r);
    const EdgeOffset base = g.row_ptr()[r];
    const double dr = static_cast<double>(cols.size());
    for (std::size_t e = 0; e < cols.size(); ++e) {
      double v;
      if (kind == Normalization::mean) {
        v = 1.0 / dr;
      } else {
        // A column with no outgoing edges of its own is treated as degree 1.
        const double dc = static_cast<double>(std::max<std::size_t>(1, g.degree(cols[e])));
        v = 1.0 / std::sqrt(dr * dc);
      }
      vals[base + e] = static_cast<float>(v);
    }
  }
  return g.with_values(std::move(vals));
}

CsrGraph add_self_loops(const CsrGraph& g) {
  std::vector<Edge> edges;
  edges.reserve(g.num_edges() + g.num_nodes());
  for (std::size_t r = 0; r < g.num_nodes(); ++r) {
    bool has_loop = false;
    const auto cols = g.row_cols(r);
    const auto vals = g.row_vals(r);
    for (std::size_t e = 0; e < cols.size(); ++e) {
      edges.push_back({static_cast<NodeId>(r), cols[e], vals[e]});
      has_loop |= cols[e] == r;
    }
    if (!has_loop) edges.push_back({static_cast<NodeId>(r), static_cast<NodeId>(r), 1.0f});
  }
  return CsrGraph::from_edges(g.num_nodes(), std::move(edges));
}

CsrGraph identity_graph(std::size_t num_nodes) {
  std::vector<EdgeOffset> row_ptr(num_nodes + 1);
  std::vector<NodeId> cols(num_nodes);
  for (std::size_t i = 0; i <= num_nodes; ++i) row_ptr[i] = i;
  for (std::size_t i = 0; i < num_nodes; ++i) cols[i] = static_cast<NodeId>(i);
  return CsrGraph(num_nodes, std::move(row_ptr), std::move(cols), std::vector<float>(num_nodes, 1.0f));
}

Matrix<double> to_dense(const CsrGraph& g) {
  Matrix<double> d(g.num_nodes(), g.num_nodes());
  for (std::size_t r = 0; r < g.num_nodes(); ++r) {
    const auto cols = g.row_cols(r);
    const auto vals = g.row_vals(r);
    for (std::size_t e = 0; e < cols.size(); ++e) d(r, cols[e]) = vals[e];
  }
  return d;
}

Matrix<double> to_dense(const CscView& t) {
  Matrix<double> d(t.num_nodes(), t.num_nodes());
  for (std::size_t j = 0; j < t.num_nodes(); ++j) {
    const auto col = t.column(j);
    for (std::size_t e = 0; e < col.rows.size(); ++e) d(col.rows[e], j) = col.values[e];
  }
  return d;
}

}  // namespace maxk
