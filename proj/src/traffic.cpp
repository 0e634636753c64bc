#include "maxk/traffic.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <string>

#include "maxk/error.hpp"

namespace maxk {
namespace {

constexpr std::uint64_t kValueBytes = 4;

void validate(const TrafficParams& p) {
  if (p.num_nodes < 1) throw ParameterError("traffic model needs N >= 1");
  if (p.dim_origin < 1 || p.dim_k < 1) throw ParameterError("traffic model needs dim_origin, dim_k >= 1");
  if (p.w < 1) throw ParameterError("traffic model needs w >= 1");
  if (p.index_bytes != 1 && p.index_bytes != 2 && p.index_bytes != 4) {
    throw ParameterError("index_bytes must be 1, 2 or 4 (got " + std::to_string(p.index_bytes) + ")");
  }
}

double closed_form_atomics(const TrafficParams& p) {
  const double avgdeg = static_cast<double>(p.nnz) / static_cast<double>(p.num_nodes);
  return static_cast<double>(p.num_nodes) * p.dim_origin * (avgdeg / p.w);
}

std::uint64_t grouped_atomics(const TrafficParams& p) {
  if (p.edge_groups) return *p.edge_groups * p.dim_origin;
  return static_cast<std::uint64_t>(std::ceil(closed_form_atomics(p)));
}

double pct(std::int64_t saved, std::uint64_t baseline) {
  return baseline == 0 ? 0.0 : 100.0 * static_cast<double>(saved) / static_cast<double>(baseline);
}

std::int64_t diff(std::uint64_t a, std::uint64_t b) {
  return static_cast<std::int64_t>(a) - static_cast<std::int64_t>(b);
}

// Fills baselines and reductions from read/write_bytes and params.
void compare_with_baseline(TrafficReport& r) {
  const TrafficParams& p = r.params;
  const std::uint64_t dense_row = kValueBytes * p.dim_origin;
  switch (r.kernel) {
    case KernelKind::spmm:
    case KernelKind::spgemm:
      r.baseline_read_bytes = dense_row * p.nnz;
      r.baseline_write_bytes = kValueBytes * grouped_atomics(p);
      r.read_reduction_bytes = diff(r.baseline_read_bytes, r.read_bytes);
      r.write_reduction_bytes = 0;
      r.reduction_vs_spmm_pct = pct(r.read_reduction_bytes, r.baseline_read_bytes);
      break;
    case KernelKind::sspmm:
      r.baseline_read_bytes = dense_row * p.num_nodes + dense_row * p.nnz;
      r.baseline_write_bytes = dense_row * p.nnz;
      r.read_reduction_bytes = diff(r.baseline_read_bytes, r.read_bytes);
      r.write_reduction_bytes = diff(r.baseline_write_bytes, r.write_bytes);
      r.reduction_vs_spmm_pct = pct(r.read_reduction_bytes + r.write_reduction_bytes,
                                    r.baseline_read_bytes + r.baseline_write_bytes);
      break;
  }
}

constexpr std::array<GraphStats, 24> kGraphStats{{
    {"am", 881680, 5668682},
    {"amazon0505", 410236, 4878874},
    {"amazon0601", 403394, 5478357},
    {"artist", 50515, 1638396},
    {"citation", 2927963, 30387995},
    {"collab", 235868, 2358104},
    {"com-amazon", 334863, 1851744},
    {"DD", 334925, 1686092},
    {"ddi", 4267, 2135822},
    {"Flickr", 89250, 989006},
    {"ogbn-arxiv", 169343, 1166243},
    {"ogbn-products", 2449029, 123718280},
    {"ogbn-proteins", 132534, 79122504},
    {"OVCAR-8H", 1889542, 3946402},
    {"ppa", 576289, 42463862},
    {"PROTEINS_full", 43466, 162088},
    {"pubmed", 19717, 99203},
    {"ppi", 56944, 818716},
    {"Reddit", 232965, 114615891},
    {"SW-620H", 1888584, 3944206},
    {"TWITTER-Partial", 580768, 1435116},
    {"Yeast", 1710902, 3636546},
    {"Yelp", 716847, 13954819},
    {"youtube", 1138499, 5980886},
}};

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i]))) return false;
  }
  return true;
}

}  // namespace

std::string_view to_string(KernelKind k) {
  switch (k) {
    case KernelKind::spmm: return "spmm";
    case KernelKind::spgemm: return "spgemm";
    case KernelKind::sspmm: return "sspmm";
  }
  return "?";
}

double read_reduction_pct(double dim_origin, double dim_k, double index_bytes) {
  const double dense = kValueBytes * dim_origin;
  return 100.0 * (dense - (kValueBytes + index_bytes) * dim_k) / dense;
}

TrafficReport traffic_spmm(const TrafficParams& p) {
  validate(p);
  TrafficReport r;
  r.kernel = KernelKind::spmm;
  r.params = p;
  r.read_bytes = kValueBytes * p.dim_origin * p.nnz;
  r.atomic_ops = grouped_atomics(p);
  r.atomic_ops_closed_form = closed_form_atomics(p);
  r.write_bytes = kValueBytes * r.atomic_ops;
  compare_with_baseline(r);
  return r;
}

TrafficReport traffic_spgemm_forward(const TrafficParams& p) {
  validate(p);
  TrafficReport r;
  r.kernel = KernelKind::spgemm;
  r.params = p;
  r.read_bytes = (kValueBytes + p.index_bytes) * p.dim_k * p.nnz;
  r.atomic_ops = grouped_atomics(p);
  r.atomic_ops_closed_form = closed_form_atomics(p);
  r.write_bytes = kValueBytes * r.atomic_ops;
  compare_with_baseline(r);
  return r;
}

TrafficReport traffic_sspmm_backward(const TrafficParams& p) {
  validate(p);
  TrafficReport r;
  r.kernel = KernelKind::sspmm;
  r.params = p;
  r.read_bytes = kValueBytes * p.num_nodes * p.dim_origin + (kValueBytes + p.index_bytes) * p.dim_k * p.nnz;
  r.write_bytes = kValueBytes * p.dim_k * p.nnz;
  r.atomic_ops = static_cast<std::uint64_t>(p.dim_k) * p.nnz;
  r.atomic_ops_closed_form = static_cast<double>(r.atomic_ops);
  compare_with_baseline(r);
  return r;
}

TrafficReport traffic_for(KernelKind kind, const TrafficParams& p) {
  switch (kind) {
    case KernelKind::spmm: return traffic_spmm(p);
    case KernelKind::spgemm: return traffic_spgemm_forward(p);
    case KernelKind::sspmm: return traffic_sspmm_backward(p);
  }
  throw ParameterError("unknown kernel kind");
}

TrafficReport measured_traffic(KernelKind kind, const TrafficCounter& counted, const TrafficParams& p) {
  TrafficReport r = traffic_for(kind, p);
  r.read_bytes = counted.read_bytes;
  r.write_bytes = counted.write_bytes;
  r.atomic_ops = counted.atomic_ops;
  compare_with_baseline(r);
  return r;
}

std::span<const GraphStats> known_graph_stats() { return kGraphStats; }

std::optional<GraphStats> find_graph_stats(std::string_view name) {
  for (const GraphStats& s : kGraphStats) {
    if (iequals(s.name, name)) return s;
  }
  return std::nullopt;
}

}  // namespace maxk
