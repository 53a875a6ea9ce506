#include "palm/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "palm/voronoi.hpp"

namespace palm {

using nlohmann::json;

namespace {

std::vector<std::pair<double, double>> parse_window(const json& j) {
  std::vector<std::pair<double, double>> w;
  for (const auto& axis : j) {
    if (!axis.is_array() || axis.size() != 2)
      throw SpecError("window must be a list of [lo, hi] pairs");
    w.push_back({axis[0].get<double>(), axis[1].get<double>()});
  }
  return w;
}

std::optional<std::uint64_t> opt_seed(const json& j, const char* key) {
  if (!j.contains(key)) return {};
  return j.at(key).get<std::uint64_t>();
}

}  // namespace

Geometry parse_geometry(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "euclidean") {
    return Geometry::euclidean(j.value("dimension", 1));
  }
  if (type == "torus") {
    return Geometry::torus(j.at("period").get<std::vector<double>>());
  }
  throw SpecError("geometry type must be 'euclidean' or 'torus'");
}

AtomicMeasure build_measure(const Geometry& geom, const json& spec) {
  const std::string type = spec.at("type").get<std::string>();

  if (type == "atoms") {
    std::vector<double> coords, weights;
    for (const auto& atom : spec.at("atoms")) {
      const auto pos = atom.at("pos").get<std::vector<double>>();
      if (static_cast<int>(pos.size()) != geom.dimension)
        throw SpecError("atom position dimension mismatch");
      coords.insert(coords.end(), pos.begin(), pos.end());
      weights.push_back(atom.at("weight").get<double>());
    }
    return make_explicit(geom, std::move(coords), std::move(weights));
  }

  if (type == "grid_lebesgue") {
    std::vector<std::pair<double, double>> window;
    if (spec.contains("window")) window = parse_window(spec.at("window"));
    std::vector<std::size_t> res;
    const auto& r = spec.at("resolution");
    if (r.is_array())
      res = r.get<std::vector<std::size_t>>();
    else
      res = {r.get<std::size_t>()};
    return make_grid_lebesgue(geom, std::move(window), std::move(res),
                              spec.value("scale", 1.0),
                              opt_seed(spec, "jitter_seed"));
  }

  if (type == "lattice") {
    std::vector<std::pair<double, double>> window;
    if (spec.contains("window")) window = parse_window(spec.at("window"));
    return make_lattice(geom, spec.at("spacing").get<double>(),
                        spec.value("weight", 1.0),
                        opt_seed(spec, "translation_seed"),
                        opt_seed(spec, "jitter_seed"), std::move(window));
  }

  if (type == "poisson") {
    std::vector<std::pair<double, double>> window;
    if (spec.contains("window")) window = parse_window(spec.at("window"));
    return make_poisson(geom, spec.at("intensity").get<double>(),
                        spec.value("seed", std::uint64_t{1}), std::move(window));
  }

  if (type == "product") {
    const auto& factors = spec.at("factors");
    if (!factors.is_array() || factors.size() != 2)
      throw SpecError("product requires exactly two factors");
    const int d1 = factors[0].value("dimension", 1);
    const int d2 = factors[1].value("dimension", 1);
    if (d1 + d2 != geom.dimension)
      throw SpecError("product factor dimensions must sum to the geometry dimension");
    Geometry g1 = Geometry::euclidean(d1), g2 = Geometry::euclidean(d2);
    if (geom.is_torus()) {
      g1 = Geometry::torus({geom.period.begin(), geom.period.begin() + d1});
      g2 = Geometry::torus({geom.period.begin() + d1, geom.period.end()});
    }
    return make_product(build_measure(g1, factors[0]), build_measure(g2, factors[1]),
                        geom);
  }

  if (type == "sum") {
    const auto& terms = spec.at("terms");
    if (!terms.is_array() || terms.empty()) throw SpecError("sum requires terms");
    AtomicMeasure acc = build_measure(geom, terms[0]);
    for (std::size_t k = 1; k < terms.size(); ++k)
      acc = make_sum(acc, build_measure(geom, terms[k]));
    return acc;
  }

  throw SpecError("unknown measure type '" + type + "'");
}

InstanceSpec parse_instance(const json& j) {
  InstanceSpec spec;
  spec.geometry = parse_geometry(j.at("geometry"));
  spec.phi_spec = j.at("phi");
  spec.psi_spec = j.at("psi");
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    spec.solver.convergence_tol = s.value("convergence_tol", 1e-12);
    spec.solver.max_stages = s.value("max_stages", std::size_t{10000});
    const std::string mode = s.value("constraint_mode", "density");
    if (mode == "density")
      spec.solver.constraint_mode = ConstraintMode::density_cap;
    else if (mode == "counting")
      spec.solver.constraint_mode = ConstraintMode::counting_cap;
    else
      throw SpecError("constraint_mode must be 'density' or 'counting'");
  }
  if (j.contains("output")) {
    const auto& o = j.at("output");
    spec.output.out_dir = o.value("out_dir", std::string("."));
    spec.output.plot = o.value("plot", false);
    spec.output.density_threshold = o.value("density_threshold", 1e-12);
  }
  if (!(spec.solver.convergence_tol > 0.0))
    throw SpecError("convergence_tol must be positive");
  return spec;
}

InstanceSpec load_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open instance file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw SpecError("invalid JSON in " + path + ": " + e.what());
  }
  try {
    return parse_instance(j);
  } catch (const json::exception& e) {
    throw SpecError("invalid instance spec in " + path + ": " + e.what());
  }
}

void write_density_csv(const std::string& path, const ConstrainedDensity& f,
                       const SolveResult* result, double threshold) {
  std::ofstream out(path);
  if (!out) throw SpecError("cannot write density file: " + path);
  const PairTable& t = *f.table;
  out.precision(17);
  out << "# palm-transport density v1\n";
  out << "# sites: " << t.sites() << " centers: " << t.centers() << "\n";
  out << "# tie_epsilon: " << t.epsilon() << "\n";
  out << "# constraint_mode: "
      << (f.mode == ConstraintMode::density_cap ? "density" : "counting") << "\n";
  out << "# threshold: " << threshold << "\n";
  if (result)
    out << "# stages: " << result->stages_run << " residual: " << result->residual
        << " converged: " << (result->converged ? 1 : 0) << "\n";
  out << "site_index,center_index,f\n";
  for (std::size_t p = 0; p < t.pairs(); ++p)
    if (f.f[p] > threshold)
      out << t.pair_site(p) << ',' << t.pair_center(p) << ',' << f.f[p] << '\n';
}

ConstrainedDensity read_density_csv(const std::string& path,
                                    std::shared_ptr<const PairTable> table) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open density file: " + path);
  ConstrainedDensity f;
  f.table = table;
  f.f.assign(table->pairs(), 0.0);
  std::string line;
  bool seen_header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') {
      if (line.find("constraint_mode: counting") != std::string::npos)
        f.mode = ConstraintMode::counting_cap;
      continue;
    }
    if (!seen_header && line.rfind("site_index", 0) == 0) {
      seen_header = true;
      continue;
    }
    std::istringstream row(line);
    std::string a, b, c;
    if (!std::getline(row, a, ',') || !std::getline(row, b, ',') ||
        !std::getline(row, c))
      throw SpecError("malformed density row: " + line);
    const std::size_t i = std::stoul(a);
    const std::size_t j = std::stoul(b);
    if (i >= table->sites() || j >= table->centers())
      throw SpecError("density row indexes outside the instance: " + line);
    const std::size_t p = table->find_pair(static_cast<std::uint32_t>(i),
                                           static_cast<std::uint32_t>(j));
    f.f[p] = std::stod(c);
  }
  return f;
}

json summary_json(const SolveResult& result) {
  json j;
  j["stages_run"] = result.stages_run;
  j["residual"] = result.residual;
  j["converged"] = result.converged;
  j["role_swap"] = result.role_swap;
  j["site_g"] = result.site_g_inf;
  j["center_h"] = result.center_h_inf;
  double unexh = 0.0, unsat = 0.0;
  const PairTable& t = *result.density.table;
  for (std::size_t i = 0; i < t.sites(); ++i)
    if (result.site_g_inf[i] < 1.0 - 1e-6) unexh += t.phi().weight(i);
  for (std::size_t jx = 0; jx < t.centers(); ++jx)
    if (result.center_h_inf[jx] < 1.0 - 1e-6) unsat += t.psi().weight(jx);
  j["unexhausted_mass"] = unexh;
  j["unsated_mass"] = unsat;
  return j;
}

json validation_json(const ValidationReport& rep) {
  json j;
  j["ok"] = rep.ok();
  j["violation_count"] = rep.violation_count;
  j["max_excess"] = rep.max_excess;
  json list = json::array();
  for (const auto& v : rep.violations) {
    const char* kind = v.kind == ConstraintViolationEntry::Kind::cap        ? "cap"
                       : v.kind == ConstraintViolationEntry::Kind::row      ? "row"
                       : v.kind == ConstraintViolationEntry::Kind::column   ? "column"
                                                                            : "negative";
    list.push_back({{"kind", kind},
                    {"site", v.site},
                    {"center", v.center},
                    {"value", v.value},
                    {"bound", v.bound}});
  }
  j["violations"] = list;
  return j;
}

json balance_json(const BalanceReport& rep) {
  return {{"max_row_deviation", rep.max_row_deviation},
          {"max_col_deviation", rep.max_col_deviation}};
}

json stability_json(const StabilityReport& rep) {
  json j;
  j["stable"] = rep.stable();
  j["unstable_count"] = rep.unstable_count;
  j["unexhausted_mass"] = rep.unexhausted_mass;
  j["unsated_mass"] = rep.unsated_mass;
  j["unexhausted_deficit"] = rep.unexhausted_deficit;
  j["unsated_deficit"] = rep.unsated_deficit;
  json list = json::array();
  for (const auto& p : rep.unstable_pairs) {
    auto reason = [](DesireReason r) {
      return r == DesireReason::unsatisfied ? "unsatisfied" : "farther_partner";
    };
    list.push_back({{"site", p.site},
                    {"center", p.center},
                    {"distance", p.distance},
                    {"site_reason", reason(p.site_reason)},
                    {"center_reason", reason(p.center_reason)}});
  }
  j["unstable_pairs"] = list;
  return j;
}

json palm_statistics_json(const PalmStatistics& stats) {
  json j;
  j["radii"] = stats.radii;
  j["mean_count"] = stats.mean_count;
  j["std_error"] = stats.std_error;
  j["samples"] = stats.samples;
  j["dropped"] = stats.dropped;
  j["origin_always_atom"] = stats.origin_always_atom;
  json log = json::array();
  for (const auto& rec : stats.per_sample)
    log.push_back({{"index", rec.index}, {"kept", rec.kept}, {"counts", rec.counts}});
  j["per_sample"] = log;
  return j;
}

void write_atoms_csv(const std::string& path, const AtomicMeasure& m) {
  std::ofstream out(path);
  if (!out) throw SpecError("cannot write atoms file: " + path);
  out.precision(17);
  out << "index";
  for (int k = 0; k < m.dim(); ++k) out << ",x" << k;
  out << ",weight\n";
  for (std::size_t i = 0; i < m.size(); ++i) {
    out << i;
    for (int k = 0; k < m.dim(); ++k) out << ',' << m.position(i)[k];
    out << ',' << m.weight(i) << '\n';
  }
}

void write_unstable_pairs_csv(const std::string& path, const StabilityReport& rep) {
  std::ofstream out(path);
  if (!out) throw SpecError("cannot write unstable pairs file: " + path);
  out.precision(17);
  out << "site_index,center_index,distance,site_reason,center_reason\n";
  auto reason = [](DesireReason r) {
    return r == DesireReason::unsatisfied ? "unsatisfied" : "farther_partner";
  };
  for (const auto& p : rep.unstable_pairs)
    out << p.site << ',' << p.center << ',' << p.distance << ',' << reason(p.site_reason)
        << ',' << reason(p.center_reason) << '\n';
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw SpecError("cannot write file: " + path);
  out << content;
}

namespace {

struct SvgCanvas {
  std::ostringstream body;
  double width, height;
  SvgCanvas(double w, double h) : width(w), height(h) {}
  std::string finish() const {
    std::ostringstream out;
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='"
        << height << "' viewBox='0 0 " << width << " " << height << "'>\n"
        << "<rect width='100%' height='100%' fill='white'/>\n"
        << body.str() << "</svg>\n";
    return out.str();
  }
};

}  // namespace

std::string density_support_svg(const ConstrainedDensity& f) {
  const PairTable& t = *f.table;
  if (t.geometry().dimension != 1)
    throw ContractViolation("density_support_svg: d = 1 only");
  double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
  for (std::size_t i = 0; i < t.sites(); ++i) {
    xlo = std::min(xlo, t.phi().position(i)[0]);
    xhi = std::max(xhi, t.phi().position(i)[0]);
  }
  for (std::size_t j = 0; j < t.centers(); ++j) {
    ylo = std::min(ylo, t.psi().position(j)[0]);
    yhi = std::max(yhi, t.psi().position(j)[0]);
  }
  const double size = 640.0, pad = 20.0;
  const double sx = (size - 2 * pad) / std::max(1e-12, xhi - xlo);
  const double sy = (size - 2 * pad) / std::max(1e-12, yhi - ylo);
  const double cw = std::max(1.0, (size - 2 * pad) / static_cast<double>(t.sites()));
  const double ch = std::max(1.0, (size - 2 * pad) / static_cast<double>(t.centers()));
  SvgCanvas svg(size, size);
  for (std::size_t p = 0; p < t.pairs(); ++p) {
    if (f.f[p] <= 1e-9) continue;
    const double x = pad + (t.phi().position(t.pair_site(p))[0] - xlo) * sx;
    const double y = size - pad - (t.psi().position(t.pair_center(p))[0] - ylo) * sy;
    const int alpha = f.f[p] >= 0.5 ? 255 : 110;
    svg.body << "<rect x='" << x - cw / 2 << "' y='" << y - ch / 2 << "' width='" << cw
             << "' height='" << ch << "' fill='rgb(30,60,160)' fill-opacity='"
             << alpha / 255.0 << "'/>\n";
  }
  return svg.finish();
}

std::string assignment_map_svg(const ConstrainedDensity& f, std::size_t max_sites) {
  const PairTable& t = *f.table;
  if (t.geometry().dimension != 2)
    throw ContractViolation("assignment_map_svg: d = 2 only");
  double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
  auto widen = [&](std::span<const double> p) {
    xlo = std::min(xlo, p[0]);
    xhi = std::max(xhi, p[0]);
    ylo = std::min(ylo, p[1]);
    yhi = std::max(yhi, p[1]);
  };
  for (std::size_t i = 0; i < t.sites(); ++i) widen(t.phi().position(i));
  for (std::size_t j = 0; j < t.centers(); ++j) widen(t.psi().position(j));
  const double size = 720.0, pad = 24.0;
  const double s = (size - 2 * pad) / std::max({1e-12, xhi - xlo, yhi - ylo});
  auto X = [&](double v) { return pad + (v - xlo) * s; };
  auto Y = [&](double v) { return size - pad - (v - ylo) * s; };

  SvgCanvas svg(size, size);
  const std::size_t stride = std::max<std::size_t>(1, t.sites() / max_sites);
  for (std::size_t i = 0; i < t.sites(); i += stride) {
    auto [b, e] = t.row_range(i);
    for (std::uint64_t p = b; p < e; ++p) {
      if (f.f[p] <= 0.5) continue;
      auto ps = t.phi().position(i);
      auto pc = t.psi().position(t.pair_center(p));
      // skip pairs joined through the torus seam; they would span the plot
      if (t.geometry().is_torus() &&
          (std::fabs(ps[0] - pc[0]) > t.geometry().period[0] / 2.0 ||
           std::fabs(ps[1] - pc[1]) > t.geometry().period[1] / 2.0))
        continue;
      svg.body << "<line x1='" << X(ps[0]) << "' y1='" << Y(ps[1]) << "' x2='"
               << X(pc[0]) << "' y2='" << Y(pc[1])
               << "' stroke='rgb(140,160,210)' stroke-width='0.6'/>\n";
    }
  }
  for (std::size_t j = 0; j < t.centers(); ++j) {
    auto pc = t.psi().position(j);
    svg.body << "<circle cx='" << X(pc[0]) << "' cy='" << Y(pc[1])
             << "' r='3' fill='rgb(190,40,40)'/>\n";
  }
  return svg.finish();
}

std::string territories_svg(const AtomicMeasure& psi, std::size_t rays) {
  if (psi.dim() != 2) throw ContractViolation("territories_svg: d = 2 only");
  const Geometry& geom = psi.geometry();
  double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
  for (std::size_t j = 0; j < psi.size(); ++j) {
    xlo = std::min(xlo, psi.position(j)[0]);
    xhi = std::max(xhi, psi.position(j)[0]);
    ylo = std::min(ylo, psi.position(j)[1]);
    yhi = std::max(yhi, psi.position(j)[1]);
  }
  if (geom.is_torus()) {
    xlo = 0;
    xhi = geom.period[0];
    ylo = 0;
    yhi = geom.period[1];
  }
  const double size = 720.0, pad = 24.0;
  const double s = (size - 2 * pad) / std::max({1e-12, xhi - xlo, yhi - ylo});
  auto X = [&](double v) { return pad + (v - xlo) * s; };
  auto Y = [&](double v) { return size - pad - (v - ylo) * s; };

  bool counting = true;
  for (std::size_t j = 0; j < psi.size(); ++j)
    counting &= std::fabs(psi.weight(j) - 1.0) < 1e-9;

  SvgCanvas svg(size, size);
  for (std::size_t j = 0; j < psi.size(); ++j) {
    std::vector<std::array<double, 2>> boundary;
    if (counting) {
      boundary = classical_cell_polygon(psi, j);
    } else {
      // ray-sampled outline of the membership region
      auto c = psi.position(j);
      double limit = 0.0;
      if (geom.is_torus())
        limit = std::min(geom.period[0], geom.period[1]) / 2.0;
      else
        limit = (xhi - xlo) + (yhi - ylo);
      std::vector<double> probe(2);
      for (std::size_t k = 0; k < rays; ++k) {
        const double a = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(rays);
        double extent = 0.0;
        for (int step = 1; step <= 160; ++step) {
          const double tt = limit * step / 160.0;
          probe[0] = c[0] + tt * std::cos(a);
          probe[1] = c[1] + tt * std::sin(a);
          geom.canonicalize(probe);
          if (in_territory(psi, probe, j))
            extent = tt;
          else
            break;
        }
        boundary.push_back({c[0] + extent * std::cos(a), c[1] + extent * std::sin(a)});
      }
    }
    if (boundary.size() < 3) continue;
    svg.body << "<polygon points='";
    for (auto& v : boundary) svg.body << X(v[0]) << ',' << Y(v[1]) << ' ';
    svg.body << "' fill='none' stroke='rgb(60,60,60)' stroke-width='1'/>\n";
    auto c = psi.position(j);
    svg.body << "<circle cx='" << X(c[0]) << "' cy='" << Y(c[1])
             << "' r='2.5' fill='rgb(190,40,40)'/>\n";
  }
  return svg.finish();
}

}  // namespace palm
