#include "contactlab/scene.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace contactlab {

namespace {

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  size_t b = s.find_last_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

struct LineReader {
  std::vector<std::string> lines;
  size_t pos = 0;
  size_t offset = 0;  // byte offset of the current line

  explicit LineReader(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
      const size_t hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      lines.push_back(line);
    }
  }
  bool next(std::string& out) {
    while (pos < lines.size()) {
      out = trim(lines[pos]);
      ++pos;
      if (!out.empty()) return true;
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& msg) {
    throw Error(ErrorCode::SceneParseError,
                "line " + std::to_string(pos) + ": " + msg);
  }
};

double to_num(LineReader& r, const std::string& s) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) r.fail("bad number '" + s + "'");
    return v;
  } catch (const Error&) {
    throw;
  } catch (...) {
    r.fail("bad number '" + s + "'");
  }
}

// key: value split (first colon)
bool key_value(const std::string& line, std::string& key, std::string& value) {
  const size_t colon = line.find(':');
  if (colon == std::string::npos) return false;
  key = trim(line.substr(0, colon));
  value = trim(line.substr(colon + 1));
  return true;
}

std::shared_ptr<ChartedManifold> build_manifold(LineReader& r, Scene& scene) {
  std::string kind;
  std::vector<std::string> coords;
  std::vector<double> periods;
  std::vector<std::string> parts;
  double radius = 1.0;
  std::string line;
  while (r.next(line)) {
    if (line == "end") break;
    std::string k, v;
    if (!key_value(line, k, v)) r.fail("expected 'key: value' or 'end'");
    if (k == "kind") kind = v;
    else if (k == "coords") coords = split_ws(v);
    else if (k == "periods") {
      for (const auto& w : split_ws(v)) periods.push_back(to_num(r, w));
    } else if (k == "parts") parts = split_ws(v);
    else if (k == "radius") radius = to_num(r, v);
    else r.fail("unknown manifold key '" + k + "'");
  }
  if (kind == "periodic_box") {
    BoxFactor f;
    f.names = coords;
    for (size_t i = 0; i < coords.size(); ++i) {
      f.periodic.push_back(true);
      f.period.push_back(i < periods.size() ? periods[i] : 2.0 * M_PI);
      f.lo.push_back(0.0);
      f.hi.push_back(f.period.back());
    }
    return std::make_shared<ChartedManifold>(ChartedManifold::box(std::move(f)));
  }
  if (kind == "sphere3")
    return std::make_shared<ChartedManifold>(ChartedManifold::sphere3());
  if (kind == "disk") {
    if (coords.size() != 2) r.fail("disk needs two coords");
    return std::make_shared<ChartedManifold>(
        ChartedManifold::disk2(radius, coords[0], coords[1]));
  }
  if (kind == "product") {
    std::vector<ChartedManifold> ps;
    for (const auto& p : parts) {
      auto it = scene.manifolds.find(p);
      if (it == scene.manifolds.end()) r.fail("unknown product part '" + p + "'");
      ps.push_back(*it->second);
    }
    return std::make_shared<ChartedManifold>(ChartedManifold::product(std::move(ps)));
  }
  r.fail("unknown manifold kind '" + kind + "'");
}

Expr parse_expr_or_fail(LineReader& r, const std::string& src) {
  try {
    return Expr::parse(src);
  } catch (const Error& e) {
    r.fail(std::string("expression error: ") + e.what());
  }
}

}  // namespace

Scene parse_scene_text(const std::string& text, const std::string& name) {
  Scene scene;
  scene.name = name;
  scene.source_text = text;
  LineReader r(text);
  std::string line;
  while (r.next(line)) {
    auto words = split_ws(line);
    std::string k, v;
    if (key_value(line, k, v) && words.size() >= 1 && words[0].back() == ':') {
      if (k == "scene") scene.name = v;
      else if (k == "command") scene.default_command = v;
      else if (k == "grid") {
        scene.grid.clear();
        for (const auto& w : split_ws(v)) scene.grid.push_back((int)to_num(r, w));
      } else r.fail("unknown top-level key '" + k + "'");
      continue;
    }
    if (words[0] == "param") {
      if (words.size() != 3) r.fail("param NAME VALUE");
      (*scene.params)[words[1]] = to_num(r, words[2]);
      continue;
    }
    if (words[0] == "manifold") {
      if (words.size() != 2) r.fail("manifold NAME");
      if (scene.manifolds.count(words[1])) r.fail("duplicate manifold '" + words[1] + "'");
      scene.manifolds[words[1]] = build_manifold(r, scene);
      continue;
    }
    if (words[0] == "form") {
      // form NAME on MANIFOLD degree K
      if (words.size() < 4 || words[2] != "on") r.fail("form NAME on MANIFOLD [degree K]");
      Scene::FormDecl decl;
      decl.manifold = words[3];
      decl.degree = 1;
      if (words.size() >= 6 && words[4] == "degree") decl.degree = (int)to_num(r, words[5]);
      std::string fl;
      while (r.next(fl)) {
        if (fl == "end") break;
        std::string fk, fv;
        if (!key_value(fl, fk, fv)) r.fail("expected 'coords: expr' or 'end'");
        decl.coeffs.push_back({split_ws(fk), parse_expr_or_fail(r, fv)});
      }
      if (scene.forms.count(words[1])) r.fail("duplicate form '" + words[1] + "'");
      scene.forms[words[1]] = std::move(decl);
      continue;
    }
    if (words[0] == "openbook") {
      if (words.size() < 4 || words[2] != "on") r.fail("openbook NAME on MANIFOLD");
      Scene::ObdDecl decl;
      decl.manifold = words[3];
      std::string fl;
      while (r.next(fl)) {
        if (fl == "end") break;
        std::string fk, fv;
        if (!key_value(fl, fk, fv)) r.fail("expected 'key: value' or 'end'");
        if (fk == "phi1") decl.phi1 = parse_expr_or_fail(r, fv);
        else if (fk == "phi2") decl.phi2 = parse_expr_or_fail(r, fv);
        else if (fk == "r_bind") decl.r_bind = to_num(r, fv);
        else if (fk == "binding") decl.binding = fv;
        else r.fail("unknown openbook key '" + fk + "'");
      }
      scene.openbooks[words[1]] = std::move(decl);
      continue;
    }
    if (words[0] == "bourgeois") {
      if (words.size() != 2) r.fail("bourgeois NAME");
      Scene::BourgeoisDecl decl;
      std::string fl;
      while (r.next(fl)) {
        if (fl == "end") break;
        std::string fk, fv;
        if (!key_value(fl, fk, fv)) r.fail("expected 'key: value' or 'end'");
        auto kw = split_ws(fk);
        if (fk == "base") decl.base = fv;
        else if (fk == "phi1") decl.phi1 = parse_expr_or_fail(r, fv);
        else if (fk == "phi2") decl.phi2 = parse_expr_or_fail(r, fv);
        else if (fk == "eps") decl.eps = to_num(r, fv);
        else if (kw.size() == 2 && kw[0] == "beta")
          decl.beta.push_back({kw[1], parse_expr_or_fail(r, fv)});
        else if (kw.size() >= 2 && kw[0] == "omega") {
          std::vector<std::string> idx(kw.begin() + 1, kw.end());
          decl.omega.push_back({idx, parse_expr_or_fail(r, fv)});
        } else r.fail("unknown bourgeois key '" + fk + "'");
      }
      scene.bourgeois[words[1]] = std::move(decl);
      continue;
    }
    if (words[0] == "cover") {
      if (words.size() != 2) r.fail("cover NAME");
      Scene::CoverDecl decl;
      std::string fl;
      while (r.next(fl)) {
        if (fl == "end") break;
        std::string fk, fv;
        if (!key_value(fl, fk, fv)) r.fail("expected 'key: value' or 'end'");
        if (fk == "model") decl.model = fv;
        else if (fk == "k") decl.k = (int)to_num(r, fv);
        else if (fk == "delta") decl.delta = to_num(r, fv);
        else r.fail("unknown cover key '" + fk + "'");
      }
      scene.covers[words[1]] = std::move(decl);
      continue;
    }
    if (words[0] == "normalform") {
      if (words.size() != 2) r.fail("normalform NAME");
      Scene::NormalFormDecl decl;
      std::string fl;
      while (r.next(fl)) {
        if (fl == "end") break;
        std::string fk, fv;
        if (!key_value(fl, fk, fv)) r.fail("expected 'key: value' or 'end'");
        if (fk == "h1") decl.h1 = parse_expr_or_fail(r, fv);
        else if (fk == "h2") decl.h2 = parse_expr_or_fail(r, fv);
        else if (fk == "delta") decl.delta = to_num(r, fv);
        else if (fk == "n") decl.n = (int)to_num(r, fv);
        else r.fail("unknown normalform key '" + fk + "'");
      }
      scene.normal_forms[words[1]] = std::move(decl);
      continue;
    }
    if (words[0] == "check") {
      std::string fl;
      while (r.next(fl)) {
        if (fl == "end") break;
        std::string fk, fv;
        if (!key_value(fl, fk, fv)) r.fail("expected 'key: value' or 'end'");
        scene.options[fk] = fv;
      }
      continue;
    }
    r.fail("unknown section '" + words[0] + "'");
  }

  // validate: names resolve, expressions use declared coordinates/params
  std::vector<std::string> param_names;
  for (const auto& [k, v] : *scene.params) param_names.push_back(k);
  auto check_expr = [&](const Expr& e, const ChartedManifold& M) {
    std::vector<std::string> ok = M.coords();
    ok.insert(ok.end(), param_names.begin(), param_names.end());
    e.validate(ok);
  };
  for (const auto& [name, decl] : scene.forms) {
    auto it = scene.manifolds.find(decl.manifold);
    if (it == scene.manifolds.end())
      throw Error(ErrorCode::SceneParseError,
                  "form '" + name + "' references unknown manifold '" +
                      decl.manifold + "'");
    for (const auto& [idx, e] : decl.coeffs) check_expr(e, *it->second);
  }
  for (const auto& [name, decl] : scene.openbooks) {
    auto it = scene.manifolds.find(decl.manifold);
    if (it == scene.manifolds.end())
      throw Error(ErrorCode::SceneParseError,
                  "openbook '" + name + "' references unknown manifold");
    check_expr(decl.phi1, *it->second);
    check_expr(decl.phi2, *it->second);
  }
  return scene;
}

Scene parse_scene_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::SceneParseError, "cannot open scene file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string base = path;
  const size_t slash = base.find_last_of('/');
  if (slash != std::string::npos) base = base.substr(slash + 1);
  const size_t dot = base.find_last_of('.');
  if (dot != std::string::npos) base = base.substr(0, dot);
  return parse_scene_text(ss.str(), base);
}

ScalarField scene_expr_field(const Scene& scene, const Expr& e) {
  if (scene.params->empty()) return expr_field(e);
  return expr_field(e, scene.params);
}

KForm build_form(const Scene& scene, const Scene::FormDecl& decl) {
  auto it = scene.manifolds.find(decl.manifold);
  if (it == scene.manifolds.end())
    throw Error(ErrorCode::SceneParseError, "unknown manifold " + decl.manifold);
  const ChartedManifold& M = *it->second;
  KForm f(M, decl.degree);
  for (const auto& [names, e] : decl.coeffs) {
    if (static_cast<int>(names.size()) != decl.degree)
      throw Error(ErrorCode::SceneParseError, "coefficient index arity mismatch");
    std::vector<int> idx;
    for (const auto& n : names) idx.push_back(M.coord_index(n));
    // sort with sign
    int sign = 1;
    for (size_t i = 0; i < idx.size(); ++i)
      for (size_t j = i + 1; j < idx.size(); ++j)
        if (idx[j] < idx[i]) {
          std::swap(idx[i], idx[j]);
          sign = -sign;
        }
    f.add(idx, sign, scene_expr_field(scene, e));
  }
  return f;
}

SubmanifoldSpec named_locus(const std::string& name, const ChartedManifold& M) {
  SubmanifoldSpec Z;
  Z.name = name;
  const int nt = 24;
  if (name == "s3_unknot") {
    Z.distance = sqrt_field(expr_field("x2^2 + y2^2"));
    for (int i = 0; i < nt; ++i) {
      const double a = 2.0 * M_PI * i / nt;
      Z.samples.push_back({std::cos(a), std::sin(a), 0.0, 0.0});
      TangentFrame f;
      f.vectors.push_back({-std::sin(a), std::cos(a), 0.0, 0.0});
      Z.frames.push_back(f);
    }
    Z.exclusion_radius = 0.05;
    return Z;
  }
  if (name == "tube_circle") {
    const int iu = M.coord_index("u"), iv = M.coord_index("v");
    Z.distance = sqrt_field(expr_field(M.coords()[iu] + "^2 + " + M.coords()[iv] + "^2"));
    const int itheta = M.coord_index("thetaB");
    for (int i = 0; i < nt; ++i) {
      std::vector<double> p(M.ncoords(), 0.0);
      p[itheta] = 2.0 * M_PI * i / nt;
      Z.samples.push_back(p);
      TangentFrame f;
      std::vector<double> dir(M.ncoords(), 0.0);
      dir[itheta] = 1.0;
      f.vectors.push_back(dir);
      Z.frames.push_back(f);
    }
    Z.exclusion_radius = 0.05;
    return Z;
  }
  if (name == "t3_fiber_circle") {
    // the circle {theta = 0, y = 0} inside T^3, with frame d_x
    Z.distance = sqrt_field(expr_field("2 - 2*cos(theta) + 2 - 2*cos(y)"));
    const int ix = M.coord_index("x");
    for (int i = 0; i < nt; ++i) {
      std::vector<double> p(M.ncoords(), 0.0);
      p[ix] = 2.0 * M_PI * i / nt;
      Z.samples.push_back(p);
      TangentFrame f;
      std::vector<double> dir(M.ncoords(), 0.0);
      dir[ix] = 1.0;
      f.vectors.push_back(dir);
      Z.frames.push_back(f);
    }
    Z.exclusion_radius = 0.05;
    return Z;
  }
  throw Error(ErrorCode::SceneParseError, "unknown locus '" + name + "'");
}

}  // namespace contactlab
