// Acceptance suite: runs every verification gate at its stated tolerance and
// prints one pass/fail line per criterion. Exit code = number of failures.

#include <chrono>
#include <cmath>
#include <cstring>
#include <iostream>
#include <sstream>

#include "palm/coupling.hpp"
#include "palm/instances.hpp"
#include "palm/rng.hpp"
#include "palm/transport.hpp"
#include "palm/voronoi.hpp"

using namespace palm;

namespace {

struct Criterion {
  int id;
  std::string title;
  bool (*run)(std::string& detail);
};

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point t0 = clock::now();
  return std::chrono::duration<double>(clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(5);
  os << v;
  return os.str();
}

bool outcome_to_detail(const ExampleOutcome& out, std::string& detail) {
  std::ostringstream os;
  for (const auto& c : out.checks)
    if (!c.pass) os << "[" << c.label << ": " << c.detail << "] ";
  if (out.pass) os << "all checks passed";
  os << " (" << fmt(out.seconds) << " s)";
  detail = os.str();
  return out.pass;
}

// --- criteria 1-5: golden instances -----------------------------------------

bool criterion1(std::string& detail) {
  ExampleParams p;
  p.alpha = 2.0;
  p.resolution = 2000;
  p.tol = 1e-10;
  return outcome_to_detail(run_example("interval", p), detail);
}

bool criterion2(std::string& detail) {
  ExampleParams p;
  p.period = 11.0;
  p.resolution = 1100;
  return outcome_to_detail(run_example("z-line", p), detail);
}

bool criterion3(std::string& detail) {
  ExampleParams p;
  p.resolution = 200;
  std::string d1, d2;
  const bool hex = outcome_to_detail(run_example("z-cross-r", p), d1);
  const bool sq = outcome_to_detail(run_example("square-kernel", p), d2);
  detail = "hexagon: " + d1 + "; square kernel: " + d2;
  return hex && sq;
}

bool criterion4(std::string& detail) {
  ExampleParams p;
  p.resolution = 1500;
  return outcome_to_detail(run_example("half-lines", p), detail);
}

bool criterion5(std::string& detail) {
  ExampleParams p;
  p.period = 10.0;
  p.resolution = 1000;
  return outcome_to_detail(run_example("z-plus-r", p), detail);
}

// --- criterion 6: randomized property suite ----------------------------------

struct GenericInstance {
  AtomicMeasure phi;
  AtomicMeasure psi;
};

// torus instances on a dyadic coordinate lattice: distances are then exactly
// translation invariant, so equivariance can be asserted bit for bit
GenericInstance generic_instance(std::uint64_t seed) {
  Rng rng(seed);
  const int dim = rng.uniform01() < 0.5 ? 1 : 2;
  const Geometry geom =
      dim == 1 ? Geometry::torus({8.0}) : Geometry::torus({8.0, 8.0});
  auto dyadic = [&] { return static_cast<double>(rng.uniform_index(8 << 13)) * 0x1p-13; };
  auto dyadic_w = [&] {
    return (1.0 + static_cast<double>(rng.uniform_index(511))) * 0x1p-7;
  };

  auto make_random = [&](bool allow_grid) -> AtomicMeasure {
    if (allow_grid && rng.uniform01() < 0.45) {
      const std::size_t res = dim == 1 ? (rng.uniform01() < 0.5 ? 128 : 256)
                                       : (rng.uniform01() < 0.5 ? 8 : 16);
      const double scale = (1.0 + static_cast<double>(rng.uniform_index(7))) * 0.25;
      return make_grid_lebesgue(geom, {}, std::vector<std::size_t>(dim, res), scale);
    }
    const std::size_t n = 3 + rng.uniform_index(48);
    std::vector<double> c, w;
    for (std::size_t i = 0; i < n; ++i) {
      for (int k = 0; k < dim; ++k) c.push_back(dyadic());
      w.push_back(dyadic_w());
    }
    return make_explicit(geom, c, w);
  };

  AtomicMeasure phi = make_random(true);
  AtomicMeasure psi = make_random(true);
  if (rng.uniform01() < 0.7) {
    // equal total masses; weight scaling does not touch coordinates
    std::vector<double> w(psi.weights().begin(), psi.weights().end());
    const double s = phi.total_mass() / psi.total_mass();
    for (double& v : w) v *= s;
    psi = AtomicMeasure(psi.geometry(),
                        {psi.coords_flat().begin(), psi.coords_flat().end()},
                        std::move(w));
  }
  return {std::move(phi), std::move(psi)};
}

bool criterion6(std::string& detail) {
  const double t_start = now_seconds();
  const std::size_t kInstances = 100;
  std::size_t failures = 0;
  std::ostringstream log;

  for (std::uint64_t seed = 1; seed <= kInstances; ++seed) {
    auto inst = generic_instance(seed);
    auto table = PairTable::build(inst.phi, inst.psi);
    SolveOptions opts;
    opts.max_stages = 50000;  // tie-class draining can outlast the default cap

    bool stage_ok = true;
    std::vector<double> prevA(table->pairs(), 0.0), prevR(table->pairs(), 0.0);
    std::vector<double> prev_arad(table->sites(), 0.0);
    std::vector<double> prev_rrad(table->centers(),
                                  std::numeric_limits<double>::infinity());
    std::vector<char> was_sated(table->centers(), 0);

    StageObserver obs = [&](const StageView& v) {
      for (std::size_t p = 0; p < v.A.size(); ++p) {
        stage_ok &= v.A[p] >= prevA[p] - 1e-12 && v.R[p] >= prevR[p] - 1e-12;
        stage_ok &= v.R[p] <= v.A[p] + 1e-12 && v.A[p] <= 1.0 + 1e-12;
      }
      for (std::size_t i = 0; i < table->sites(); ++i) {
        stage_ok &= v.proposer_radius[i] >= prev_arad[i] - 1e-12;
        prev_arad[i] = v.proposer_radius[i];
        auto [b, e] = table->row_range(i);
        double net = 0.0;
        for (std::uint64_t p = b; p < e; ++p)
          net += (v.A[p] - prevR[p]) * table->psi().weight(table->pair_center(p));
        stage_ok &= net <= 1.0 + 1e-9;
        if (std::isfinite(v.proposer_radius[i])) stage_ok &= std::fabs(net - 1.0) <= 1e-9;
      }
      for (std::size_t j = 0; j < table->centers(); ++j) {
        stage_ok &= v.responder_radius[j] <= prev_rrad[j] + 1e-12;
        prev_rrad[j] = v.responder_radius[j];
        auto [b, e] = table->col_range(j);
        double net = 0.0;
        for (std::uint64_t idx = b; idx < e; ++idx) {
          const std::uint32_t p = table->col_pair(idx);
          net += (v.A[p] - v.R[p]) * table->phi().weight(table->pair_site(p));
        }
        stage_ok &= net <= 1.0 + 1e-9;
        if (std::isfinite(v.responder_radius[j])) stage_ok &= std::fabs(net - 1.0) <= 1e-9;
        if (was_sated[j]) stage_ok &= std::fabs(net - 1.0) <= 1e-9;
        if (std::fabs(net - 1.0) <= 1e-12) was_sated[j] = 1;
      }
      prevA.assign(v.A.begin(), v.A.end());
      prevR.assign(v.R.begin(), v.R.end());
    };

    auto res = solve_site_optimal(table, opts, obs);
    bool ok = stage_ok && res.converged;

    ok &= validate_constrained(res.density).ok();
    auto stab = check_stable(res.density, 1e-9);
    ok &= stab.stable();
    ok &= stab.unexhausted_mass < 1.0 || stab.unsated_mass < 1.0;

    // mass transport identity on a radius grid plus infinity
    const double diam = 8.0;
    for (int k = 0; k <= 40; ++k) {
      const double t = k == 40 ? std::numeric_limits<double>::infinity()
                               : diam * static_cast<double>(k) / 40.0;
      auto [a, b] = mass_transport_identity(res.density, t);
      ok &= std::fabs(a - b) <= 1e-9 * (1.0 + std::max(std::fabs(a), std::fabs(b)));
    }

    // exact equivariance under a dyadic translation
    Rng trng(seed * 1337 + 11);
    std::vector<double> v;
    for (int k = 0; k < inst.phi.dim(); ++k)
      v.push_back(static_cast<double>(trng.uniform_index(8 << 13)) * 0x1p-13);
    auto shifted = PairTable::build(translate(inst.phi, v), translate(inst.psi, v));
    auto res2 = solve_site_optimal(shifted, opts);
    ok &= res2.density.f.size() == res.density.f.size();
    if (ok)
      ok &= std::memcmp(res2.density.f.data(), res.density.f.data(),
                        res.density.f.size() * sizeof(double)) == 0;

    if (!ok) {
      ++failures;
      log << "seed " << seed << " failed; ";
    }
  }

  const double elapsed = now_seconds() - t_start;
  std::ostringstream os;
  os << kInstances - failures << "/" << kInstances << " instances ok, "
     << fmt(elapsed) << " s";
  if (failures) os << "; " << log.str();
  detail = os.str();
  return failures == 0 && elapsed <= 600.0;
}

// --- criterion 7: optimality and monotonicity orderings -----------------------

bool criterion7(std::string& detail) {
  const double t_start = now_seconds();
  std::size_t failures = 0;
  std::ostringstream log;

  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed * 101);
    const int dim = seed % 2 ? 1 : 2;
    const Geometry geom =
        dim == 1 ? Geometry::torus({8.0}) : Geometry::torus({8.0, 8.0});
    const std::size_t n = 5 + rng.uniform_index(12), m = 5 + rng.uniform_index(12);
    std::vector<double> pc, pw, qc, qw;
    for (std::size_t i = 0; i < n; ++i) {
      for (int k = 0; k < dim; ++k) pc.push_back(rng.uniform(0.0, 8.0));
      pw.push_back(rng.uniform(0.3, 1.2));
    }
    for (std::size_t j = 0; j < m; ++j) {
      for (int k = 0; k < dim; ++k) qc.push_back(rng.uniform(0.0, 8.0));
      qw.push_back(rng.uniform(0.3, 1.2));
    }
    auto phi = make_explicit(geom, pc, pw);
    auto psi = make_explicit(geom, qc, qw);
    auto table = PairTable::build(phi, psi);
    auto fs = solve_site_optimal(table, {});
    auto fc = solve_center_optimal(table, {});
    bool ok = fs.converged && fc.converged;

    // optimality sandwich at every tie-class radius
    for (std::size_t i = 0; ok && i < table->sites(); ++i) {
      auto gs = g_shell_prefix(fs.density, i);
      auto gc = g_shell_prefix(fc.density, i);
      for (std::size_t k = 0; k < gs.size(); ++k) ok &= gc[k] <= gs[k] + 1e-9;
    }
    for (std::size_t j = 0; ok && j < table->centers(); ++j) {
      auto hs = h_shell_prefix(fs.density, j);
      auto hc = h_shell_prefix(fc.density, j);
      for (std::size_t k = 0; k < hs.size(); ++k) ok &= hs[k] <= hc[k] + 1e-9;
    }

    // ordered-weight pairs: mu >= phi, nu <= psi on the same atoms
    auto mw = pw;
    auto nw = qw;
    for (double& w : mw)
      if (rng.uniform01() < 0.4) w *= 1.0 + rng.uniform(0.1, 0.8);
    for (double& w : nw)
      if (rng.uniform01() < 0.4) w *= rng.uniform(0.4, 0.95);
    auto small_table =
        PairTable::build(make_explicit(geom, pc, mw), make_explicit(geom, qc, nw));
    auto f_small = solve_site_optimal(small_table, {});
    ok &= f_small.converged && check_stable(f_small.density, 1e-9).stable();
    if (ok) {
      auto rep = check_monotonicity(f_small.density, fs, 1e-9);
      ok &= rep.ok();
    }
    auto f_small_c = solve_center_optimal(small_table, {});
    if (ok && f_small_c.converged) {
      auto rep = check_monotonicity(f_small_c.density, fs, 1e-9);
      ok &= rep.ok();
    }

    if (!ok) {
      ++failures;
      log << "seed " << seed << " failed; ";
    }
  }
  std::ostringstream os;
  os << 20 - failures << "/20 instances ok, " << fmt(now_seconds() - t_start) << " s";
  if (failures) os << "; " << log.str();
  detail = os.str();
  return failures == 0;
}

// --- criterion 8: extra-head sampling against the Palm prediction -------------

bool criterion8(std::string& detail) {
  const double t_start = now_seconds();
  SlivnyakOptions opts;
  opts.intensity = 1.0;
  opts.period = 10.0;
  opts.dimension = 2;
  opts.grid_resolution = 100;
  opts.samples = 500;
  opts.seed = 20240817;
  opts.radii = {1.0};
  auto stats = slivnyak_experiment(opts);

  const double target = M_PI;  // unit intensity; disc of radius one
  // independent reference: direct simulation of a realization with an atom
  // placed at the origin
  auto ref = poisson_plus_origin_reference(1.0, 10.0, 2, 20000, 7, {1.0});

  const bool origin_ok = stats.origin_always_atom;
  const bool kept_ok =
      stats.dropped == 0 ||
      static_cast<double>(stats.dropped) /
              static_cast<double>(stats.samples + stats.dropped) <
          0.01;
  const bool mean_ok = std::fabs(stats.mean_count[0] - target) <= 3.0 * stats.std_error[0];
  const bool ref_ok = std::fabs(ref.mean_count[0] - target) <= 3.0 * ref.std_error[0];
  const double elapsed = now_seconds() - t_start;

  std::ostringstream os;
  os << "mean " << fmt(stats.mean_count[0]) << " +- " << fmt(stats.std_error[0])
     << " vs pi=" << fmt(target) << " (reference sim " << fmt(ref.mean_count[0])
     << " +- " << fmt(ref.std_error[0]) << "), " << stats.samples << " samples, "
     << stats.dropped << " dropped, origin atom "
     << (origin_ok ? "always present" : "MISSING"), os << ", " << fmt(elapsed) << " s";
  detail = os.str();
  return origin_ok && kept_ok && mean_ok && ref_ok && elapsed <= 1800.0;
}

// --- criterion 9: unequal intensities ------------------------------------------

bool criterion9(std::string& detail) {
  const double t_start = now_seconds();
  const double period = 10.0;
  const double volume = period * period;
  const Geometry geom = Geometry::torus({period, period});
  const Rng master(555);

  double sum_mg = 0.0, sum_mh = 0.0, sum_unsated = 0.0, sum_expected = 0.0;
  std::size_t kept = 0;
  for (std::size_t s = 0; s < 50; ++s) {
    Rng rng = master.fork(s);
    auto psi = make_poisson(geom, 2.0, rng.next_u64());
    if (psi.size() < 2) continue;
    // phi at half the sample intensity of psi
    auto phi = make_grid_lebesgue(geom, {}, {100, 100},
                                  psi.total_mass() / (2.0 * volume));
    auto table = PairTable::build(std::move(phi), psi);
    auto res = solve_site_optimal(table, {1e-10, 500000, ConstraintMode::density_cap});
    if (!res.converged) continue;
    auto [mg, mh] = spatial_averages(res.density);
    auto cases = coupling_cases_check(res.density);
    sum_mg += mg;
    sum_mh += mh;
    sum_unsated += cases.unsated_deficit;
    sum_expected += cases.predicted_deficit;
    ++kept;
  }
  const double n = static_cast<double>(kept);
  const double mg = sum_mg / n, mh = sum_mh / n;
  const double unsated = sum_unsated / n, expected = sum_expected / n;
  const double gap_vol = 1.0 * volume;  // intensity gap times volume
  const double elapsed = now_seconds() - t_start;

  std::ostringstream os;
  os << "mean g " << fmt(mg) << " (target 1), mean h " << fmt(mh)
     << " (target 0.5), undelivered center capacity " << fmt(unsated)
     << " vs gap*volume " << fmt(gap_vol) << ", " << kept << "/50 samples, "
     << fmt(elapsed) << " s";
  detail = os.str();
  return kept >= 50 && std::fabs(mg - 1.0) <= 0.02 && std::fabs(mh - 0.5) <= 0.02 &&
         std::fabs(unsated - expected) <= 1e-6 * (1.0 + expected) &&
         std::fabs(unsated - gap_vol) <= 0.10 * gap_vol;
}

// --- criterion 10: generalized voronoi ------------------------------------------

bool criterion10(std::string& detail) {
  const double t_start = now_seconds();
  Rng rng(808);
  std::size_t disagreements = 0, queries = 0, norm_failures = 0;

  for (int inst = 0; inst < 10; ++inst) {
    auto g = Geometry::euclidean(2);
    const std::size_t m = 8 + rng.uniform_index(18);
    std::vector<double> c;
    for (std::size_t k = 0; k < 2 * m; ++k) c.push_back(rng.uniform(-5.0, 5.0));
    auto psi = make_explicit(g, c, std::vector<double>(m, 1.0));
    for (int q = 0; q < 10000; ++q) {
      double x[] = {rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
      const std::size_t j = rng.uniform_index(m);
      double dj = g.distance(x, psi.position(j));
      double dmin = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < m; ++k)
        dmin = std::min(dmin, g.distance(x, psi.position(k)));
      if (std::fabs(dj - dmin) <= 1e-9) continue;  // bisector tie class
      ++queries;
      if (in_territory(psi, x, j) != (dj < dmin)) ++disagreements;
    }
    // exact normalization at random queries
    for (int q = 0; q < 200; ++q) {
      double x[] = {rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
      auto row = voronoi_density_row(psi, x);
      double total = 0.0;
      for (std::size_t k = 0; k < m; ++k) total += row[k] * psi.weight(k);
      if (std::fabs(total - 1.0) > 1e-12) ++norm_failures;
    }
  }

  // half-weight equilateral triangle: star-shaped but not convex
  auto g = Geometry::euclidean(2);
  std::vector<double> tri;
  for (int k = 0; k < 3; ++k) {
    tri.push_back(2.0 * std::cos(2.0 * M_PI * k / 3.0));
    tri.push_back(2.0 * std::sin(2.0 * M_PI * k / 3.0));
  }
  auto half = make_explicit(g, tri, std::vector<double>(3, 0.5));
  auto diag = territory_diagnostics(half, 0, 360, 40.0);
  bool nonconvex = false;
  {
    auto p1 = half.position(1);
    auto p2 = half.position(2);
    double a[] = {p1[0] * 0.98, p1[1] * 0.98};
    double b[] = {p2[0] * 0.98, p2[1] * 0.98};
    double mid[] = {(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0};
    nonconvex = in_territory(half, a, 0) && in_territory(half, b, 0) &&
                !in_territory(half, mid, 0);
  }

  std::ostringstream os;
  os << queries << " off-bisector queries, " << disagreements << " disagreements, "
     << norm_failures << " normalization failures, triangle star="
     << (diag.star_shaped ? "yes" : "no") << " nonconvex="
     << (nonconvex ? "yes" : "no") << ", " << fmt(now_seconds() - t_start) << " s";
  detail = os.str();
  return queries >= 90000 && disagreements == 0 && norm_failures == 0 &&
         diag.star_shaped && nonconvex;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int a = 1; a < argc; ++a)
    if (std::strcmp(argv[a], "--only") == 0 && a + 1 < argc) only = std::atoi(argv[a + 1]);

  const Criterion criteria[] = {
      {1, "interval golden run (alpha 2, res 2000)", criterion1},
      {2, "integer-line golden run (torus 11, res 1100)", criterion2},
      {3, "planar line measure golden run + square-kernel witness", criterion3},
      {4, "half-line block pairing (res 1500)", criterion4},
      {5, "doubled grid vs grid-plus-atoms golden run", criterion5},
      {6, "randomized property suite (100 instances)", criterion6},
      {7, "optimality and monotonicity orderings (20 instances)", criterion7},
      {8, "extra-head sampling matches the Palm prediction", criterion8},
      {9, "unequal intensities: spatial averages and mass gap", criterion9},
      {10, "generalized voronoi territories", criterion10},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (only && c.id != only) continue;
    std::string detail;
    bool pass = false;
    try {
      pass = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::cout << (pass ? "[PASS]" : "[FAIL]") << " criterion " << c.id << ": "
              << c.title << " -- " << detail << std::endl;
    if (!pass) ++failures;
  }
  return failures;
}
