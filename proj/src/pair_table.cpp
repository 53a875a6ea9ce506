#include "palm/pair_table.hpp"

#include <algorithm>
#include <numeric>

#include "palm/parallel.hpp"

namespace palm {

namespace {
constexpr std::size_t kMaxPairs = 300'000'000;  // memory guard
}

std::shared_ptr<const PairTable> PairTable::build(AtomicMeasure phi, AtomicMeasure psi) {
  if (!(phi.geometry() == psi.geometry()))
    throw ContractViolation("pair table: measures must share a geometry");
  if (phi.size() == 0 || psi.size() == 0)
    throw ContractViolation("pair table: measures must be non-empty");

  auto table = std::shared_ptr<PairTable>(new PairTable());
  PairTable& t = *table;
  t.phi_ = std::move(phi);
  t.psi_ = std::move(psi);
  t.n_ = t.phi_.size();
  t.m_ = t.psi_.size();
  t.eps_ = std::max(t.phi_.shell_epsilon(), t.psi_.shell_epsilon());

  const std::size_t n = t.n_, m = t.m_;
  if (n > kMaxPairs / m) throw SpecError("instance too large: site*center count");
  const std::size_t P = n * m;

  t.row_ptr_.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) t.row_ptr_[i] = i * m;
  t.pair_site_.resize(P);
  t.pair_center_.resize(P);
  t.pair_dist_.resize(P);
  t.pair_site_shell_.resize(P);
  t.pair_center_shell_.resize(P);

  // per-site rows: distances sorted ascending, ties broken by center index
  std::vector<std::size_t> shells_per_site(n);
  parallel_for(n, [&](std::size_t lo, std::size_t hi) {
    std::vector<std::uint32_t> ord(m);
    std::vector<double> dist(m);
    for (std::size_t i = lo; i < hi; ++i) {
      auto xi = t.phi_.position(i);
      for (std::size_t j = 0; j < m; ++j)
        dist[j] = t.geometry().distance(xi, t.psi_.position(j));
      std::iota(ord.begin(), ord.end(), 0u);
      std::sort(ord.begin(), ord.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (dist[a] != dist[b]) return dist[a] < dist[b];
        return a < b;
      });
      const std::uint64_t base = t.row_ptr_[i];
      std::uint32_t shell = 0;
      for (std::size_t k = 0; k < m; ++k) {
        const std::uint64_t p = base + k;
        t.pair_site_[p] = static_cast<std::uint32_t>(i);
        t.pair_center_[p] = ord[k];
        t.pair_dist_[p] = dist[ord[k]];
        if (k > 0 && dist[ord[k]] - dist[ord[k - 1]] > t.eps_) ++shell;
        t.pair_site_shell_[p] = shell;
      }
      shells_per_site[i] = shell + 1;
    }
  });

  t.site_shell_ptr_.resize(n + 1);
  t.site_shell_ptr_[0] = 0;
  for (std::size_t i = 0; i < n; ++i)
    t.site_shell_ptr_[i + 1] = t.site_shell_ptr_[i] + shells_per_site[i];
  t.site_shell_end_.resize(t.site_shell_ptr_[n]);
  t.site_shell_radius_.resize(t.site_shell_ptr_[n]);
  parallel_for(n, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const std::uint64_t base = t.row_ptr_[i];
      const std::uint64_t sbase = t.site_shell_ptr_[i];
      for (std::size_t k = 0; k < m; ++k) {
        const std::uint64_t p = base + k;
        const std::uint32_t s = t.pair_site_shell_[p];
        t.site_shell_end_[sbase + s] = p + 1;
        t.site_shell_radius_[sbase + s] = t.pair_dist_[p];  // max dist in class
      }
    }
  });

  // center-side view: pair ids per center sorted by (distance, site index)
  t.col_ptr_.resize(m + 1);
  for (std::size_t j = 0; j <= m; ++j) t.col_ptr_[j] = j * n;
  t.col_pair_.resize(P);
  std::vector<std::size_t> shells_per_center(m);
  parallel_for(m, [&](std::size_t lo, std::size_t hi) {
    std::vector<std::uint32_t> ord(n);
    std::vector<double> dist(n);
    for (std::size_t j = lo; j < hi; ++j) {
      auto cj = t.psi_.position(j);
      for (std::size_t i = 0; i < n; ++i)
        dist[i] = t.geometry().distance(t.phi_.position(i), cj);
      std::iota(ord.begin(), ord.end(), 0u);
      std::sort(ord.begin(), ord.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (dist[a] != dist[b]) return dist[a] < dist[b];
        return a < b;
      });
      const std::uint64_t cbase = t.col_ptr_[j];
      std::uint32_t shell = 0;
      for (std::size_t k = 0; k < n; ++k) {
        const std::uint32_t i = ord[k];
        // locate pair id (i, j): binary search the row by (distance, center)
        const std::uint64_t rb = t.row_ptr_[i], re = t.row_ptr_[i + 1];
        const double dij = dist[i];
        std::uint64_t lo2 = rb, hi2 = re;
        while (lo2 < hi2) {
          const std::uint64_t mid = (lo2 + hi2) / 2;
          if (t.pair_dist_[mid] < dij ||
              (t.pair_dist_[mid] == dij && t.pair_center_[mid] < j))
            lo2 = mid + 1;
          else
            hi2 = mid;
        }
        t.col_pair_[cbase + k] = static_cast<std::uint32_t>(lo2);
        if (k > 0 && dist[i] - dist[ord[k - 1]] > t.eps_) ++shell;
        t.pair_center_shell_[lo2] = shell;
      }
      shells_per_center[j] = shell + 1;
    }
  });

  t.center_shell_ptr_.resize(m + 1);
  t.center_shell_ptr_[0] = 0;
  for (std::size_t j = 0; j < m; ++j)
    t.center_shell_ptr_[j + 1] = t.center_shell_ptr_[j] + shells_per_center[j];
  t.center_shell_end_.resize(t.center_shell_ptr_[m]);
  t.center_shell_radius_.resize(t.center_shell_ptr_[m]);
  parallel_for(m, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t j = lo; j < hi; ++j) {
      const std::uint64_t cbase = t.col_ptr_[j];
      const std::uint64_t sbase = t.center_shell_ptr_[j];
      for (std::size_t k = 0; k < n; ++k) {
        const std::uint32_t p = t.col_pair_[cbase + k];
        const std::uint32_t s = t.pair_center_shell_[p];
        t.center_shell_end_[sbase + s] = cbase + k + 1;
        t.center_shell_radius_[sbase + s] = t.pair_dist_[p];
      }
    }
  });

  return table;
}

std::size_t PairTable::find_pair(std::uint32_t site, std::uint32_t center) const {
  auto [b, e] = row_range(site);
  for (std::uint64_t p = b; p < e; ++p)
    if (pair_center_[p] == center) return p;
  return pairs();
}

}  // namespace palm
