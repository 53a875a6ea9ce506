#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "palm/measure.hpp"

namespace palm {

// Dense (site, center) pair universe with both atom sets' distance orderings
// and tie classes precomputed. Rows are sites sorted by distance; the column
// view reuses the same pair ids, so a density over the table can be read from
// either side without transposition.
//
// Immutable after build; shared by solver results and verification passes.
class PairTable {
 public:
  static std::shared_ptr<const PairTable> build(AtomicMeasure phi, AtomicMeasure psi);

  const AtomicMeasure& phi() const { return phi_; }
  const AtomicMeasure& psi() const { return psi_; }
  const Geometry& geometry() const { return phi_.geometry(); }
  double epsilon() const { return eps_; }

  std::size_t sites() const { return n_; }
  std::size_t centers() const { return m_; }
  std::size_t pairs() const { return pair_dist_.size(); }

  // pair arrays, indexed by pair id (site-major, sorted by distance in-row)
  std::uint32_t pair_site(std::size_t p) const { return pair_site_[p]; }
  std::uint32_t pair_center(std::size_t p) const { return pair_center_[p]; }
  double pair_distance(std::size_t p) const { return pair_dist_[p]; }
  std::uint32_t pair_site_shell(std::size_t p) const { return pair_site_shell_[p]; }

  // site-side layout
  std::pair<std::uint64_t, std::uint64_t> row_range(std::size_t i) const {
    return {row_ptr_[i], row_ptr_[i + 1]};
  }
  std::size_t site_shell_count(std::size_t i) const {
    return site_shell_ptr_[i + 1] - site_shell_ptr_[i];
  }
  // pair-id range of shell k of site i
  std::pair<std::uint64_t, std::uint64_t> site_shell_range(std::size_t i,
                                                           std::size_t k) const {
    std::uint64_t base = site_shell_ptr_[i];
    std::uint64_t begin = k == 0 ? row_ptr_[i] : site_shell_end_[base + k - 1];
    return {begin, site_shell_end_[base + k]};
  }
  double site_shell_radius(std::size_t i, std::size_t k) const {
    return site_shell_radius_[site_shell_ptr_[i] + k];
  }

  // center-side layout; entries of col_pair are pair ids sorted by distance
  std::pair<std::uint64_t, std::uint64_t> col_range(std::size_t j) const {
    return {col_ptr_[j], col_ptr_[j + 1]};
  }
  std::uint32_t col_pair(std::uint64_t idx) const { return col_pair_[idx]; }
  std::size_t center_shell_count(std::size_t j) const {
    return center_shell_ptr_[j + 1] - center_shell_ptr_[j];
  }
  // index range into col_pair of shell k of center j
  std::pair<std::uint64_t, std::uint64_t> center_shell_range(std::size_t j,
                                                             std::size_t k) const {
    std::uint64_t base = center_shell_ptr_[j];
    std::uint64_t begin = k == 0 ? col_ptr_[j] : center_shell_end_[base + k - 1];
    return {begin, center_shell_end_[base + k]};
  }
  double center_shell_radius(std::size_t j, std::size_t k) const {
    return center_shell_radius_[center_shell_ptr_[j] + k];
  }
  std::uint32_t pair_center_shell(std::size_t p) const { return pair_center_shell_[p]; }

  // pair id for (site, center); pairs() if absent (never, for a full table)
  std::size_t find_pair(std::uint32_t site, std::uint32_t center) const;

 private:
  PairTable() = default;

  AtomicMeasure phi_{Geometry::euclidean(1), {0.0}, {1.0}};
  AtomicMeasure psi_{Geometry::euclidean(1), {0.0}, {1.0}};
  double eps_ = 0.0;
  std::size_t n_ = 0, m_ = 0;

  std::vector<std::uint64_t> row_ptr_;
  std::vector<std::uint32_t> pair_site_;
  std::vector<std::uint32_t> pair_center_;
  std::vector<double> pair_dist_;
  std::vector<std::uint32_t> pair_site_shell_;
  std::vector<std::uint32_t> pair_center_shell_;

  std::vector<std::uint64_t> site_shell_ptr_;
  std::vector<std::uint64_t> site_shell_end_;
  std::vector<double> site_shell_radius_;

  std::vector<std::uint64_t> col_ptr_;
  std::vector<std::uint32_t> col_pair_;
  std::vector<std::uint64_t> center_shell_ptr_;
  std::vector<std::uint64_t> center_shell_end_;
  std::vector<double> center_shell_radius_;
};

}  // namespace palm
