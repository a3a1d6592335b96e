#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "contactlab/scene.hpp"

namespace contactlab {

using json = nlohmann::json;

namespace {

constexpr long kMaxPointTable = 32768;

std::string fnv1a_hex(const std::string& s) {
  unsigned long long h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", h);
  return buf;
}

json report_of(const PositivityReport& r) {
  json j;
  j["condition"] = r.condition;
  j["pass"] = r.pass;
  j["min_margin"] = r.min_margin;
  j["argmin_point"] = r.argmin_point;
  j["argmin_index"] = r.argmin_index;
  j["grid_resolution"] = r.grid.resolution;
  j["grid_points"] = r.grid.points;
  if (r.warning) j["warning"] = true;
  if (!r.note.empty()) j["note"] = r.note;
  if (r.degenerate_top_count) j["degenerate_top_count"] = r.degenerate_top_count;
  if (!r.history.empty()) {
    json h = json::array();
    for (const auto& s : r.history)
      h.push_back({{"resolution", s.resolution}, {"min_margin", s.min_margin}});
    j["history"] = h;
  }
  return j;
}

struct CommandContext {
  const Scene& scene;
  RunOverrides ov;
  Tolerances tol;
  json& out;
  bool& pass;

  std::vector<int> grid_for(const ChartedManifold& M) const {
    std::vector<int> g = !ov.grid.empty() ? ov.grid : scene.grid;
    const int axes = M.sample_axes();
    if (g.empty()) g.assign(axes, 8);
    if (static_cast<int>(g.size()) == 1) g.assign(axes, g[0]);
    if (static_cast<int>(g.size()) != axes)
      throw Error(ErrorCode::DimensionMismatch,
                  "grid has " + std::to_string(g.size()) + " entries, manifold needs " +
                      std::to_string(axes));
    return g;
  }

  std::string opt(const std::string& key, const std::string& fallback = "") const {
    auto it = scene.options.find(key);
    return it == scene.options.end() ? fallback : it->second;
  }

  const ChartedManifold& manifold_of_form(const std::string& form_name) const {
    auto it = scene.forms.find(form_name);
    if (it == scene.forms.end())
      throw Error(ErrorCode::SceneParseError, "unknown form '" + form_name + "'");
    return *scene.manifolds.at(it->second.manifold);
  }

  KForm form(const std::string& name) const {
    auto it = scene.forms.find(name);
    if (it == scene.forms.end())
      throw Error(ErrorCode::SceneParseError, "unknown form '" + name + "'");
    return build_form(scene, it->second);
  }
};

void attach_point_table(CommandContext& cc, const KForm& vol,
                        const ChartedManifold& M, const std::vector<int>& grid) {
  auto samples = M.sample_grid(grid, cc.tol);
  if (static_cast<long>(samples.size()) > kMaxPointTable) return;
  json rows = json::array();
  EvalContext ctx(M, samples.empty() ? std::vector<double>(M.ncoords(), 0.0)
                                     : samples[0].x,
                  cc.tol);
  for (const auto& p : samples) {
    ctx.move_to(p.x);
    TangentFrame f = M.tangent_frame(p, cc.tol);
    json row;
    row["index"] = p.grid_index;
    row["point"] = p.x;
    row["margin"] = form_on_frame(vol, ctx, f);
    rows.push_back(row);
  }
  cc.out["tables"]["margins_by_point"] = rows;
}

void cmd_check_contact(CommandContext& cc) {
  const std::string fname = cc.opt("form", "alpha");
  KForm alpha = cc.form(fname);
  const ChartedManifold& M = cc.manifold_of_form(fname);
  auto grid = cc.grid_for(M);
  PositivityReport r = contact_check(alpha, M, grid, cc.tol, cc.ov.threads);
  cc.out["checks"].push_back(report_of(r));
  cc.pass = r.pass;
  const int n = (M.dim() + 1) / 2;
  KForm vol = wedge(alpha, wedge_power(exterior_derivative(alpha), n - 1));
  attach_point_table(cc, vol, M, grid);
}

void cmd_check_adjusted(CommandContext& cc) {
  const std::string fname = cc.opt("form", "alpha");
  KForm alpha = cc.form(fname);
  const ChartedManifold& M = cc.manifold_of_form(fname);
  SubmanifoldSpec Z = named_locus(cc.opt("locus"), M);
  auto grid = cc.grid_for(M);
  AdjustedReport r = adjusted_check(alpha, M, Z, grid, cc.tol, cc.ov.threads);
  cc.out["checks"].push_back(report_of(r.away));
  cc.out["checks"].push_back(report_of(r.restriction));
  cc.pass = r.pass;
}

void cmd_check_weak(CommandContext& cc) {
  const std::string fname = cc.opt("form", "alpha");
  KForm alpha = cc.form(fname);
  KForm omega = cc.form(cc.opt("omega", "omega"));
  const ChartedManifold& M = cc.manifold_of_form(fname);
  auto grid = cc.grid_for(M);
  WeakDominationReport r =
      weak_domination_check(alpha, omega, M, grid, cc.tol, cc.ov.threads);
  json j = report_of(r.report);
  j["failed_points"] = r.failed_points;
  if (r.failed_points) j["worst_witness_tau"] = r.worst_witness_tau;
  cc.out["checks"].push_back(j);
  cc.pass = r.report.pass;
}

OpenBookMap scene_obd(const CommandContext& cc, const Scene::ObdDecl& decl,
                      const ChartedManifold& M) {
  OpenBookMap ob;
  ob.phi1 = scene_expr_field(cc.scene, decl.phi1);
  ob.phi2 = scene_expr_field(cc.scene, decl.phi2);
  ob.r_bind = decl.r_bind;
  if (!decl.binding.empty()) {
    ob.binding = named_locus(decl.binding, M);
    ob.has_binding = true;
  }
  return ob;
}

void cmd_obd_check(CommandContext& cc) {
  const std::string oname = cc.opt("openbook", "ob");
  auto it = cc.scene.openbooks.find(oname);
  if (it == cc.scene.openbooks.end())
    throw Error(ErrorCode::SceneParseError, "unknown openbook '" + oname + "'");
  const ChartedManifold& M = *cc.scene.manifolds.at(it->second.manifold);
  KForm alpha = cc.form(cc.opt("form", "alpha"));
  OpenBookMap ob = scene_obd(cc, it->second, M);
  auto grid = cc.grid_for(M);
  ObdReport r = obd_check(ob, alpha, M, grid, cc.tol, cc.ov.threads);
  json j;
  j["condition"] = "open book adapted";
  j["pass"] = r.pass;
  j["binding"] = report_of(r.binding);
  j["page"] = report_of(r.page);
  j["min_transversality"] = r.min_transversality;
  j["near_binding_samples"] = r.near_binding_samples;
  j["empty_binding"] = r.empty_binding;
  if (!r.note.empty()) j["note"] = r.note;
  cc.out["checks"].push_back(j);
  cc.pass = r.pass;
}

void cmd_obd_roundtrip(CommandContext& cc) {
  const std::string oname = cc.opt("openbook", "ob");
  auto it = cc.scene.openbooks.find(oname);
  if (it == cc.scene.openbooks.end())
    throw Error(ErrorCode::SceneParseError, "unknown openbook '" + oname + "'");
  const ChartedManifold& M = *cc.scene.manifolds.at(it->second.manifold);
  KForm alpha = cc.form(cc.opt("form", "alpha"));
  OpenBookMap ob = scene_obd(cc, it->second, M);
  auto grid = cc.grid_for(M);
  const double eps = cc.ov.eps > 0 ? cc.ov.eps : 0.25;

  FieldsFromObdResult fw = fields_from_obd(ob, alpha, M, grid, eps, cc.tol);
  ObdFromFieldsResult bw = obd_from_fields(fw.pair, alpha, M, grid, cc.tol);

  // proportionality of the recovered map against the rescaled input
  double min_cos = 1.0, min_scale = std::numeric_limits<double>::infinity();
  {
    auto samples = M.sample_grid(grid, cc.tol);
    EvalContext ctx(M, samples.empty() ? std::vector<double>(M.ncoords(), 0.0)
                                       : samples[0].x,
                    cc.tol);
    ScalarField rho = rho_field(ob);
    for (const auto& p : samples) {
      ctx.move_to(p.x);
      if (field_value(rho, ctx) < ob.r_bind) continue;
      const double a1 = field_value(bw.recovered.phi1, ctx);
      const double a2 = field_value(bw.recovered.phi2, ctx);
      const double b1 = field_value(fw.phi1_resc, ctx);
      const double b2 = field_value(fw.phi2_resc, ctx);
      const double na = std::hypot(a1, a2), nb = std::hypot(b1, b2);
      if (na < 1e-14 || nb < 1e-14) continue;
      min_cos = std::min(min_cos, (a1 * b1 + a2 * b2) / (na * nb));
      min_scale = std::min(min_scale, na / nb);
    }
  }
  json j;
  j["condition"] = "open book round trip";
  j["max_alpha_bracket"] = fw.max_alpha_bracket;
  j["max_contract_residual"] = fw.max_contract_residual;
  j["max_identity_residual"] = bw.max_identity_residual;
  j["min_zero_transversality"] = bw.min_zero_transversality;
  j["refined_zero_points"] = bw.refined_zero_points;
  j["k_set_distances"] = bw.k_set_distances;
  j["min_cosine_similarity"] = min_cos;
  j["min_scale"] = min_scale;
  const bool ok = fw.max_alpha_bracket < -cc.tol.pos && min_cos >= 1.0 - 1e-8 &&
                  min_scale > 0.0 && bw.max_identity_residual <= 1e-7;
  j["pass"] = ok;
  cc.out["checks"].push_back(j);
  cc.pass = ok;
}

BourgeoisModel scene_bourgeois(const CommandContext& cc, const Scene::BourgeoisDecl& d) {
  auto it = cc.scene.manifolds.find(d.base);
  if (it == cc.scene.manifolds.end())
    throw Error(ErrorCode::SceneParseError, "unknown base manifold '" + d.base + "'");
  return make_bourgeois(it->second, d.beta, d.phi1, d.phi2, d.eps);
}

void cmd_bourgeois(CommandContext& cc) {
  auto it = cc.scene.bourgeois.begin();
  if (it == cc.scene.bourgeois.end())
    throw Error(ErrorCode::SceneParseError, "scene has no bourgeois block");
  BourgeoisModel m = scene_bourgeois(cc, it->second);
  auto tgrid = cc.grid_for(*m.total);
  std::vector<int> bgrid(tgrid.begin(), tgrid.end() - 2);

  BourgeoisFormReport fr = bourgeois_form(m, bgrid, tgrid, cc.tol, cc.ov.threads);
  json j;
  j["condition"] = "bourgeois form";
  j["contact"] = report_of(fr.contact);
  if (fr.domain_condition_checked)
    j["domain_condition_min"] = fr.domain_condition_min;
  Potential split = potential_of(m, m.alpha, tgrid, cc.tol);
  Potential ham = potential_hamiltonian(m);
  const double cross = potential_cross_check(m, split, ham, tgrid, cc.tol);
  j["potential_cross_check"] = cross;
  BourgeoisCriterion crit = bourgeois_criterion(m, split, tgrid, cc.tol);
  j["criterion"] = {{"max_dnabla", crit.max_dnabla},
                    {"max_beta_bracket", crit.max_beta_bracket},
                    {"max_beta_combined", crit.max_beta_total},
                    {"bourgeois", crit.bourgeois},
                    {"lerman_contact", crit.lerman_contact}};
  // recovered fiber map (psi_eta diagnostic): (beta(A_x), -beta(A_y))
  {
    ScalarField r1 = pairing(m.beta_total, split.A_x);
    ScalarField r2 = scale_field(pairing(m.beta_total, split.A_y), -1.0);
    auto samples = m.total->sample_grid(tgrid, cc.tol);
    double min_abs_cos = 1.0;
    EvalContext ctx(*m.total, samples.empty() ? std::vector<double>(m.total->ncoords(), 0.0)
                                              : samples[0].x,
                    cc.tol);
    for (const auto& p : samples) {
      ctx.move_to(p.x);
      const double a1 = field_value(r1, ctx), a2 = field_value(r2, ctx);
      const double b1 = m.eps * field_value(m.phi1, ctx),
                   b2 = m.eps * field_value(m.phi2, ctx);
      const double na = std::hypot(a1, a2), nb = std::hypot(b1, b2);
      if (na < 1e-12 || nb < 1e-12) continue;
      min_abs_cos = std::min(min_abs_cos, std::abs(a1 * b1 + a2 * b2) / (na * nb));
    }
    j["recovered_map_abs_cosine"] = min_abs_cos;
  }
  const bool ok = fr.pass && cross <= 1e-7 && crit.bourgeois;
  j["pass"] = ok;
  cc.out["checks"].push_back(j);
  cc.pass = ok;
}

void cmd_bourgeois_fill(CommandContext& cc) {
  auto it = cc.scene.bourgeois.begin();
  if (it == cc.scene.bourgeois.end())
    throw Error(ErrorCode::SceneParseError, "scene has no bourgeois block");
  BourgeoisModel m = scene_bourgeois(cc, it->second);
  auto tgrid = cc.grid_for(*m.total);
  std::vector<int> bgrid(tgrid.begin(), tgrid.end() - 2);
  // omega on the base and its lift (same coefficient expressions)
  KForm omega_base(*m.base, 2), omega_total(*m.total, 2);
  for (const auto& [names, e] : it->second.omega) {
    std::vector<int> ib, itot;
    for (const auto& n : names) {
      ib.push_back(m.base->coord_index(n));
      itot.push_back(m.total->coord_index(n));
    }
    omega_base.add(ib, 1.0, scene_expr_field(cc.scene, e));
    omega_total.add(itot, 1.0, scene_expr_field(cc.scene, e));
  }
  const double eps_min = cc.ov.eps_min > 0 ? cc.ov.eps_min : std::pow(2.0, -30);
  WeakFillingResult r = bourgeois_weak_filling_check(m, omega_base, omega_total,
                                                     bgrid, tgrid, cc.tol, eps_min,
                                                     cc.ov.threads);
  json j;
  j["condition"] = "bourgeois weak filling";
  j["eps"] = r.eps;
  j["base"] = report_of(r.base.report);
  j["total"] = report_of(r.total.report);
  j["pass"] = true;
  cc.out["checks"].push_back(j);
  json hist = json::array();
  for (const auto& [e, mmin] : r.eps_history) hist.push_back({e, mmin});
  cc.out["tables"]["margin_vs_eps"] = hist;
  cc.pass = true;
}

BranchedCoverSpec scene_cover(const CommandContext& cc, int* k_out) {
  auto it = cc.scene.covers.begin();
  if (it == cc.scene.covers.end())
    throw Error(ErrorCode::SceneParseError, "scene has no cover block");
  Scene::CoverDecl d = it->second;
  if (cc.ov.k > 0) d.k = cc.ov.k;
  if (cc.ov.delta > 0) d.delta = cc.ov.delta;
  if (k_out) *k_out = d.k;
  if (d.model == "local") return local_model_cover(d.k, d.delta);
  if (d.model == "s3") return s3_cyclic_cover(d.k);
  throw Error(ErrorCode::SceneParseError, "unknown cover model '" + d.model + "'");
}

KForm cover_downstairs_alpha(const BranchedCoverSpec& spec) {
  const ChartedManifold& T = *spec.target;
  KForm a(T, 1);
  if (spec.name.rfind("local", 0) == 0) {
    a.set({T.coord_index("theta")}, const_field(1.0));
    a.set({T.coord_index("U")}, expr_field("0 - V"));
    a.set({T.coord_index("V")}, expr_field("U"));
  } else {
    a.set({T.coord_index("x1")}, expr_field("0 - y1"));
    a.set({T.coord_index("y1")}, expr_field("x1"));
    a.set({T.coord_index("x2")}, expr_field("0 - y2"));
    a.set({T.coord_index("y2")}, expr_field("x2"));
  }
  return a;
}

void cmd_cover_contactize(CommandContext& cc) {
  BranchedCoverSpec spec = scene_cover(cc, nullptr);
  KForm alpha = cover_downstairs_alpha(spec);
  auto sgrid = cc.grid_for(*spec.source);
  auto tgrid = cc.grid_for(*spec.target);
  PullbackResult pb = pullback_branched(spec, alpha, sgrid, tgrid, cc.tol);
  const double eps_min = cc.ov.eps_min > 0 ? cc.ov.eps_min : std::pow(2.0, -30);
  EpsilonSearchResult es =
      epsilon_search(pb.pulled, spec, sgrid, {}, cc.tol, eps_min, cc.ov.threads);
  KForm final_form = contactize(pb.pulled, spec, es.eps, 1.0);
  DeckInvarianceReport deck = deck_invariance_check(final_form, spec, sgrid, cc.tol);
  // margin of the raw pullback (s = 0): expected 0 exactly on the locus
  PositivityReport s0 = contact_check(pb.pulled, *spec.source, sgrid, cc.tol,
                                      cc.ov.threads);
  json j;
  j["condition"] = "contact branched covering";
  j["eps"] = es.eps;
  j["adjusted_away"] = report_of(pb.adjusted.away);
  j["adjusted_restriction"] = report_of(pb.adjusted.restriction);
  j["pullback_margin_s0"] = s0.min_margin;
  j["deck_max_deviation"] = deck.max_deviation;
  j["delta"] = spec.delta;
  json table = json::array();
  for (const auto& [s, margin] : es.margins) table.push_back({s, margin});
  cc.out["tables"]["margin_vs_s"] = table;
  json hist = json::array();
  hist.push_back({es.eps, es.margins.empty() ? 0.0 : es.margins.back().second});
  cc.out["tables"]["margin_vs_eps"] = hist;
  const bool ok = pb.adjusted.pass && deck.pass;
  j["pass"] = ok;
  cc.out["checks"].push_back(j);
  cc.pass = ok;
}

KForm cover_downstairs_omega(const BranchedCoverSpec& spec) {
  const ChartedManifold& T = *spec.target;
  KForm w(T, 2);
  if (spec.name.rfind("local", 0) == 0) {
    w.set({T.coord_index("U"), T.coord_index("V")}, const_field(2.0));
  } else {
    // d(alpha_std)
    w.set({T.coord_index("x1"), T.coord_index("y1")}, const_field(2.0));
    w.set({T.coord_index("x2"), T.coord_index("y2")}, const_field(2.0));
  }
  return w;
}

void cmd_cover_fill(CommandContext& cc) {
  BranchedCoverSpec spec = scene_cover(cc, nullptr);
  KForm alpha = cover_downstairs_alpha(spec);
  KForm omega = cover_downstairs_omega(spec);
  auto sgrid = cc.grid_for(*spec.source);
  auto tgrid = cc.grid_for(*spec.target);
  const double eps_min = cc.ov.eps_min > 0 ? cc.ov.eps_min : std::pow(2.0, -30);
  BoundaryFillingResult r = boundary_filling_form(omega, alpha, spec, sgrid, tgrid,
                                                  cc.tol, eps_min, cc.ov.threads);
  json j;
  j["condition"] = "branched covering boundary filling";
  j["eps_contact"] = r.eps_contact;
  j["eps_filling"] = r.eps_filling;
  j["downstairs"] = report_of(r.downstairs.report);
  j["upstairs"] = report_of(r.upstairs.report);
  j["delta"] = spec.delta;
  j["pass"] = true;
  cc.out["checks"].push_back(j);
  cc.pass = true;
}

void cmd_reeb(CommandContext& cc) {
  const std::string fname = cc.opt("form", "alpha");
  KForm alpha = cc.form(fname);
  const ChartedManifold& M = cc.manifold_of_form(fname);
  auto grid = cc.grid_for(M);
  VectorField R = reeb_vector_field(alpha);
  auto samples = M.sample_grid(grid, cc.tol);
  ReebResidual res = reeb_residuals(alpha, R, samples, cc.tol);
  json j;
  j["condition"] = "reeb field residuals";
  j["worst_alpha_residual"] = res.worst_alpha;
  j["worst_dalpha_residual"] = res.worst_dalpha;
  const bool ok = res.worst_alpha <= 1e-9 && res.worst_dalpha <= 1e-9;
  j["pass"] = ok;
  cc.out["checks"].push_back(j);
  if (static_cast<long>(samples.size()) <= kMaxPointTable) {
    json rows = json::array();
    EvalContext ctx(M, samples.empty() ? std::vector<double>(M.ncoords(), 0.0)
                                       : samples[0].x,
                    cc.tol);
    for (const auto& p : samples) {
      ctx.move_to(p.x);
      json row;
      row["point"] = p.x;
      row["reeb"] = vector_values(R, ctx);
      rows.push_back(row);
    }
    cc.out["tables"]["reeb_by_point"] = rows;
  }
  cc.pass = ok;
}

void orbit_rows(json& out, const std::vector<OrbitRecord>& records) {
  json rows = json::array();
  for (const auto& r : records) {
    json row;
    row["seed"] = r.seed;
    row["period"] = r.period;
    row["residual"] = r.residual;
    row["winding"] = r.winding;
    rows.push_back(row);
  }
  out["tables"]["orbits"] = rows;
}

void cmd_orbits(CommandContext& cc) {
  OrbitSearchOptions opt;
  if (cc.ov.tmax > 0) opt.t_max = cc.ov.tmax;
  const int nseeds = cc.ov.seeds > 0 ? cc.ov.seeds : 16;

  json j;
  std::vector<OrbitRecord> records;
  ContractibleAuditReport audit;
  bool audited = false;
  if (!cc.scene.normal_forms.empty()) {
    const auto& d = cc.scene.normal_forms.begin()->second;
    ReebNormalFormData nf{d.h1, d.h2, d.delta, d.n};
    TubeModel tm = build_tube_model(nf);
    VectorField R = reeb_vector_field(tm.alpha);
    const ChartedManifold& P = *tm.tube_torus;
    std::vector<int> sg = {5, 5, 5, 2, 2};
    auto samples = P.sample_grid(sg, cc.tol);
    std::vector<std::vector<double>> seeds;
    for (size_t i = 0; i < samples.size() && static_cast<int>(seeds.size()) < nseeds;
         i += std::max<size_t>(1, samples.size() / nseeds))
      seeds.push_back(samples[i].x);
    // always include a binding seed
    std::vector<double> bind(P.ncoords(), 0.0);
    seeds.insert(seeds.begin(), bind);
    records = closed_orbit_search(R, seeds, opt);
    ScalarField r_dist = sqrt_field(expr_field("u^2 + v^2"));
    audit = contractible_orbit_audit(records, P, r_dist,
                                     {P.coord_index("x"), P.coord_index("y")});
    audited = true;
  } else {
    const std::string fname = cc.opt("form", "alpha");
    KForm alpha = cc.form(fname);
    const ChartedManifold& M = cc.manifold_of_form(fname);
    VectorField R = reeb_vector_field(alpha);
    std::vector<std::vector<double>> seeds;
    for (int i = 0; i < nseeds; ++i) {
      std::vector<double> s(M.ncoords(), 0.0);
      s[0] = 2.0 * M_PI * i / nseeds;
      seeds.push_back(s);
    }
    records = closed_orbit_search(R, seeds, opt);
    std::vector<int> torus_coords;
    for (int i = 0; i < M.ncoords(); ++i)
      if (M.coord_periodic(i)) torus_coords.push_back(i);
  }
  j["condition"] = "closed orbit search";
  j["orbits_found"] = records.size();
  if (audited) {
    j["audit_pass"] = audit.pass;
    j["zero_winding_orbits"] = audit.zero_winding_orbits;
    j["max_binding_distance"] = audit.max_binding_distance;
    j["max_torus_spread"] = audit.max_torus_spread;
    if (!audit.note.empty()) j["note"] = audit.note;
    cc.pass = audit.pass;
  } else {
    j["note"] = "winding data reported; contractibility in M is topological input";
    cc.pass = true;
  }
  j["pass"] = cc.pass;
  cc.out["checks"].push_back(j);
  orbit_rows(cc.out, records);
}

void cmd_normal_form(CommandContext& cc) {
  if (cc.scene.normal_forms.empty())
    throw Error(ErrorCode::SceneParseError, "scene has no normalform block");
  const auto& d = cc.scene.normal_forms.begin()->second;
  ReebNormalFormData nf{d.h1, d.h2, cc.ov.delta > 0 ? cc.ov.delta : d.delta, d.n};
  ProfileReport prof = binding_profile_check(nf);
  json j;
  j["condition"] = "reeb normal form";
  j["profile_valid"] = prof.valid;
  if (!prof.valid) {
    j["violated_condition"] = prof.violated;
    j["witness_r"] = prof.witness_r;
    j["pass"] = false;
    cc.out["checks"].push_back(j);
    cc.pass = false;
    return;
  }
  std::vector<int> grid = !cc.ov.grid.empty()
                              ? cc.ov.grid
                              : (cc.scene.grid.empty() ? std::vector<int>{8, 9, 9, 4, 4}
                                                       : cc.scene.grid);
  NormalFormComparison cmp = predicted_reeb_bourgeois(nf, grid, cc.tol);
  j["max_deviation"] = cmp.max_deviation;
  j["lambda0"] = cmp.lambda0;
  j["max_torus_component_at_binding"] = cmp.max_torus_component_at_binding;
  j["max_outer_region_error"] = cmp.max_outer_region_error;
  j["pass"] = cmp.pass;
  cc.out["checks"].push_back(j);
  // radial profiles table
  json rows = json::array();
  const int nr = 64;
  for (int i = 0; i <= nr; ++i) {
    const double r = nf.delta * i / (nr + 1);
    rows.push_back({r, normal_form_lambda(nf, r), normal_form_mu(nf, r)});
  }
  cc.out["tables"]["radial_profiles"] = rows;
  cc.pass = cmp.pass;
}

}  // namespace

RunResult run_scene(const Scene& scene, const std::string& command,
                    const RunOverrides& overrides) {
  RunResult result;
  json out;
  out["tool"] = "contactlab";
  out["version"] = "0.1.0";
  out["scene"] = scene.name;
  out["scene_hash"] = fnv1a_hex(scene.source_text);
  out["command"] = command;
  out["orientation_convention"] =
      "level-set frames satisfy det(grad c_1..c_m, F) > 0 in ambient coordinates; "
      "box frames follow coordinate order; products concatenate";
  Tolerances tol;
  if (overrides.tol > 0) {
    tol.pos = overrides.tol;
  }
  out["tolerances"] = {{"level", tol.level},
                       {"rank", tol.rank},
                       {"tangent", tol.tangent},
                       {"pos", tol.pos}};
  out["checks"] = json::array();
  out["tables"] = json::object();

  bool pass = false;
  const auto t0 = std::chrono::steady_clock::now();
  int exit_code = 0;
  try {
    CommandContext cc{scene, overrides, tol, out, pass};
    if (command == "check-contact") cmd_check_contact(cc);
    else if (command == "check-adjusted") cmd_check_adjusted(cc);
    else if (command == "check-weak") cmd_check_weak(cc);
    else if (command == "obd-check") cmd_obd_check(cc);
    else if (command == "obd-roundtrip") cmd_obd_roundtrip(cc);
    else if (command == "bourgeois") cmd_bourgeois(cc);
    else if (command == "bourgeois-fill") cmd_bourgeois_fill(cc);
    else if (command == "cover-contactize") cmd_cover_contactize(cc);
    else if (command == "cover-fill") cmd_cover_fill(cc);
    else if (command == "reeb") cmd_reeb(cc);
    else if (command == "orbits") cmd_orbits(cc);
    else if (command == "normal-form") cmd_normal_form(cc);
    else
      throw Error(ErrorCode::UnknownCommand, "command '" + command + "'");
    exit_code = pass ? 0 : 1;
  } catch (const Error& e) {
    out["error"] = {{"code", error_code_name(e.code())}, {"message", e.what()}};
    switch (e.code()) {
      case ErrorCode::SceneParseError:
      case ErrorCode::UnknownCommand:
      case ErrorCode::UnknownIdentifier:
      case ErrorCode::SyntaxError:
      case ErrorCode::DimensionMismatch:
      case ErrorCode::UnparametrizedLevelSet:
        exit_code = 2;
        break;
      case ErrorCode::NumericallyIndeterminate:
        exit_code = 3;
        break;
      default:
        exit_code = 1;
    }
    pass = false;
  }
  const auto t1 = std::chrono::steady_clock::now();
  out["pass"] = pass;
  out["wall_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();

  result.report_json = out.dump(2);
  result.exit_code = exit_code;
  result.pass = pass;
  return result;
}

std::string emit_plot_data(const std::string& report_json, const std::string& selector) {
  json rep = json::parse(report_json);
  std::ostringstream csv;
  const json tables = rep.value("tables", json::object());
  if (selector == "margins-by-point") {
    if (!tables.contains("margins_by_point"))
      throw Error(ErrorCode::SelectorNotFound, selector);
    csv << "grid_index,point,margin\n";
    for (const auto& row : tables["margins_by_point"]) {
      std::string idx, pt;
      for (const auto& i : row["index"]) idx += (idx.empty() ? "" : " ") + i.dump();
      for (const auto& c : row["point"]) pt += (pt.empty() ? "" : " ") + c.dump();
      csv << '"' << idx << "\",\"" << pt << "\"," << row["margin"].dump() << "\n";
    }
    return csv.str();
  }
  if (selector == "margin-vs-eps") {
    if (!tables.contains("margin_vs_eps"))
      throw Error(ErrorCode::SelectorNotFound, selector);
    csv << "eps,min_margin\n";
    for (const auto& row : tables["margin_vs_eps"])
      csv << row[0].dump() << "," << row[1].dump() << "\n";
    return csv.str();
  }
  if (selector == "orbit-windings") {
    if (!tables.contains("orbits"))
      throw Error(ErrorCode::SelectorNotFound, selector);
    csv << "seed,period,residual,windings\n";
    for (const auto& row : tables["orbits"]) {
      std::string seed, w;
      for (const auto& c : row["seed"]) seed += (seed.empty() ? "" : " ") + c.dump();
      for (const auto& c : row["winding"]) w += (w.empty() ? "" : " ") + c.dump();
      csv << '"' << seed << "\"," << row["period"].dump() << ","
          << row["residual"].dump() << ",\"" << w << "\"\n";
    }
    return csv.str();
  }
  if (selector == "radial-profiles") {
    if (!tables.contains("radial_profiles"))
      throw Error(ErrorCode::SelectorNotFound, selector);
    csv << "r,lambda,mu\n";
    for (const auto& row : tables["radial_profiles"])
      csv << row[0].dump() << "," << row[1].dump() << "," << row[2].dump() << "\n";
    return csv.str();
  }
  throw Error(ErrorCode::SelectorNotFound, selector);
}

namespace {

std::string validate_node(const json& value, const json& schema, const std::string& path) {
  if (schema.contains("type")) {
    const std::string t = schema["type"];
    const bool ok = (t == "object" && value.is_object()) ||
                    (t == "array" && value.is_array()) ||
                    (t == "string" && value.is_string()) ||
                    (t == "number" && value.is_number()) ||
                    (t == "integer" && value.is_number_integer()) ||
                    (t == "boolean" && value.is_boolean());
    if (!ok) return path + ": expected type " + t;
  }
  if (schema.contains("enum")) {
    bool found = false;
    for (const auto& e : schema["enum"])
      if (e == value) found = true;
    if (!found) return path + ": value not in enum";
  }
  if (schema.contains("required"))
    for (const auto& k : schema["required"])
      if (!value.contains(k.get<std::string>()))
        return path + ": missing required key " + k.get<std::string>();
  if (schema.contains("properties") && value.is_object()) {
    for (const auto& [k, sub] : schema["properties"].items()) {
      if (value.contains(k)) {
        std::string err = validate_node(value[k], sub, path + "/" + k);
        if (!err.empty()) return err;
      }
    }
  }
  if (schema.contains("items") && value.is_array()) {
    for (size_t i = 0; i < value.size(); ++i) {
      std::string err =
          validate_node(value[i], schema["items"], path + "[" + std::to_string(i) + "]");
      if (!err.empty()) return err;
    }
  }
  return "";
}

}  // namespace

std::string validate_report_against_schema(const std::string& report_json,
                                           const std::string& schema_json) {
  json rep = json::parse(report_json);
  json schema = json::parse(schema_json);
  return validate_node(rep, schema, "");
}

}  // namespace contactlab
