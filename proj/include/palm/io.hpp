#pragma once

#include <string>

#include <json.hpp>  // vendored nlohmann/json

#include "palm/coupling.hpp"
#include "palm/solver.hpp"
#include "palm/transport.hpp"

namespace palm {

struct OutputSpec {
  std::string out_dir = ".";
  bool plot = false;
  double density_threshold = 1e-12;
};

// Parsed instance description: geometry, the two measure specs (kept as raw
// JSON so experiments can re-instantiate them with fresh seeds), solver and
// output options.
struct InstanceSpec {
  Geometry geometry = Geometry::euclidean(1);
  nlohmann::json phi_spec;
  nlohmann::json psi_spec;
  SolveOptions solver;
  OutputSpec output;
};

Geometry parse_geometry(const nlohmann::json& j);
InstanceSpec parse_instance(const nlohmann::json& j);
InstanceSpec load_instance_file(const std::string& path);

// Measure spec schema (the "type" field selects the constructor):
//   atoms          {"type":"atoms","atoms":[{"pos":[..],"weight":w},..]}
//   grid_lebesgue  {"type":"grid_lebesgue","window":[[lo,hi],..],
//                   "resolution":n|[n..],"scale":s,"jitter_seed":u?}
//   lattice        {"type":"lattice","spacing":s,"weight":w,
//                   "translation_seed":u?,"jitter_seed":u?,"window":..?}
//   poisson        {"type":"poisson","intensity":l,"seed":u,"window":..?}
//   product        {"type":"product","factors":[spec,spec]}
//   sum            {"type":"sum","terms":[spec,..]}
// Torus windows default to the full period. Product factors may carry a
// "dimension" (default 1); on a torus each factor takes its slice of the
// period vector in order.
AtomicMeasure build_measure(const Geometry& geom, const nlohmann::json& spec);

// Sparse density CSV: comment header recording the tie tolerance, the
// constraint mode and the sparsity threshold, then site_index,center_index,f
// rows for entries above the threshold.
void write_density_csv(const std::string& path, const ConstrainedDensity& f,
                       const SolveResult* result, double threshold);
ConstrainedDensity read_density_csv(const std::string& path,
                                    std::shared_ptr<const PairTable> table);

nlohmann::json summary_json(const SolveResult& result);
nlohmann::json validation_json(const ValidationReport& rep);
nlohmann::json balance_json(const BalanceReport& rep);
nlohmann::json stability_json(const StabilityReport& rep);
nlohmann::json palm_statistics_json(const PalmStatistics& stats);

// atom dump: index, coordinates, weight
void write_atoms_csv(const std::string& path, const AtomicMeasure& m);
void write_unstable_pairs_csv(const std::string& path, const StabilityReport& rep);

void write_text_file(const std::string& path, const std::string& content);

// static SVG plots (d <= 2)
std::string density_support_svg(const ConstrainedDensity& f);      // d = 1
std::string assignment_map_svg(const ConstrainedDensity& f,
                               std::size_t max_sites = 4000);      // d = 2
std::string territories_svg(const AtomicMeasure& psi, std::size_t rays = 180);

}  // namespace palm
