#include "subflow/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "subflow/error.hpp"

namespace subflow {

namespace {

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string &s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

double to_double(const std::string &key, const std::string &v) {
  double out = 0.0;
  const auto *end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(out))
    throw std::invalid_argument(key + ": '" + v + "' is not a finite number");
  return out;
}

long to_long(const std::string &key, const std::string &v) {
  long out = 0;
  const auto *end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end)
    throw std::invalid_argument(key + ": '" + v + "' is not an integer");
  return out;
}

std::vector<double> to_doubles(const std::string &key, const std::string &v) {
  std::vector<double> out;
  for (const auto &s : split(v, ','))
    out.push_back(to_double(key, s));
  return out;
}

// "1,0,0; 0,1,0" (two entries per row are padded with a zero third entry).
std::vector<std::array<long, 3>> to_winding(const std::string &key, const std::string &v) {
  std::vector<std::array<long, 3>> rows;
  for (const auto &row : split(v, ';')) {
    const auto parts = split(row, ',');
    if (parts.size() < 2 || parts.size() > 3)
      throw std::invalid_argument(key + ": each row needs 2 or 3 integers");
    std::array<long, 3> r{0, 0, 0};
    for (std::size_t c = 0; c < parts.size(); ++c)
      r[c] = to_long(key, parts[c]);
    rows.push_back(r);
  }
  return rows;
}

Scheme to_scheme(const std::string &key, const std::string &v) {
  if (v == "projected-euler")
    return Scheme::projected_euler;
  if (v == "tubular-euler")
    return Scheme::tubular_euler;
  throw std::invalid_argument(key + ": expected projected-euler or tubular-euler");
}

TensionScheme to_tension(const std::string &key, const std::string &v) {
  if (v == "variational")
    return TensionScheme::variational;
  if (v == "pointwise")
    return TensionScheme::pointwise;
  throw std::invalid_argument(key + ": expected variational or pointwise");
}

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

using Setter = std::function<void(RunConfig &, const std::string &, const std::string &)>;

const std::map<std::string, Setter> &setters() {
  static const std::map<std::string, Setter> table = {
      {"model", [](RunConfig &c, auto &, auto &v) { c.model = v; }},
      {"grid.nx", [](RunConfig &c, auto &k, auto &v) { c.grid.nx = static_cast<int>(to_long(k, v)); }},
      {"grid.ny", [](RunConfig &c, auto &k, auto &v) { c.grid.ny = static_cast<int>(to_long(k, v)); }},
      {"grid.nz", [](RunConfig &c, auto &k, auto &v) { c.grid.nz = static_cast<int>(to_long(k, v)); }},
      {"target", [](RunConfig &c, auto &, auto &v) { c.target = v; }},
      {"target.dim",
       [](RunConfig &c, auto &k, auto &v) {
         const long d = to_long(k, v);
         if (d < 1)
           throw std::invalid_argument(k + ": must be positive");
         c.target_dim = static_cast<std::size_t>(d);
       }},
      {"potential", [](RunConfig &c, auto &, auto &v) { c.potential.name = v; }},
      {"potential.eps", [](RunConfig &c, auto &k, auto &v) { c.potential.eps = to_double(k, v); }},
      {"potential.axis",
       [](RunConfig &c, auto &k, auto &v) {
         const long a = to_long(k, v);
         if (a < 0)
           throw std::invalid_argument(k + ": must be nonnegative");
         c.potential.axis = static_cast<std::size_t>(a);
       }},
      {"potential.c", [](RunConfig &c, auto &k, auto &v) { c.potential.c = to_double(k, v); }},
      {"potential.kappa", [](RunConfig &c, auto &k, auto &v) { c.potential.kappa = to_double(k, v); }},
      {"potential.linear", [](RunConfig &c, auto &k, auto &v) { c.potential.linear = to_doubles(k, v); }},
      {"initial", [](RunConfig &c, auto &, auto &v) { c.initial.preset = v; }},
      {"initial.amplitude", [](RunConfig &c, auto &k, auto &v) { c.initial.amplitude = to_double(k, v); }},
      {"initial.modes", [](RunConfig &c, auto &k, auto &v) { c.initial.modes = static_cast<int>(to_long(k, v)); }},
      {"initial.winding", [](RunConfig &c, auto &k, auto &v) { c.initial.winding = to_winding(k, v); }},
      {"initial.point", [](RunConfig &c, auto &k, auto &v) { c.initial.point = to_doubles(k, v); }},
      {"initial.pole",
       [](RunConfig &c, auto &k, auto &v) {
         const long a = to_long(k, v);
         if (a < 0)
           throw std::invalid_argument(k + ": must be nonnegative");
         c.initial.pole = static_cast<std::size_t>(a);
       }},
      {"initial.checkpoint", [](RunConfig &c, auto &, auto &v) { c.initial.checkpoint = v; }},
      {"flow.dt", [](RunConfig &c, auto &k, auto &v) { c.flow.dt = to_double(k, v); }},
      {"flow.t_max", [](RunConfig &c, auto &k, auto &v) { c.flow.t_max = to_double(k, v); }},
      {"flow.stop_tolerance", [](RunConfig &c, auto &k, auto &v) { c.flow.stop_tolerance = to_double(k, v); }},
      {"flow.scheme", [](RunConfig &c, auto &k, auto &v) { c.flow.scheme = to_scheme(k, v); }},
      {"flow.tension", [](RunConfig &c, auto &k, auto &v) { c.flow.tension = to_tension(k, v); }},
      {"flow.cfl_safety", [](RunConfig &c, auto &k, auto &v) { c.flow.cfl_safety = to_double(k, v); }},
      {"flow.energy_tolerance", [](RunConfig &c, auto &k, auto &v) { c.flow.energy_tolerance = to_double(k, v); }},
      {"flow.max_halvings", [](RunConfig &c, auto &k, auto &v) { c.flow.max_halvings = static_cast<int>(to_long(k, v)); }},
      {"flow.snapshot_stride", [](RunConfig &c, auto &k, auto &v) { c.flow.snapshot_stride = static_cast<int>(to_long(k, v)); }},
      {"record_stride", [](RunConfig &c, auto &k, auto &v) { c.flow.record_stride = static_cast<int>(to_long(k, v)); }},
      {"output", [](RunConfig &c, auto &, auto &v) { c.output = v; }},
      {"seed",
       [](RunConfig &c, auto &k, auto &v) {
         const long s = to_long(k, v);
         if (s < 0)
           throw std::invalid_argument(k + ": must be nonnegative");
         c.seed = static_cast<std::uint64_t>(s);
       }},
  };
  return table;
}

std::string unquote(const std::string &v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"')
    return v.substr(1, v.size() - 2);
  return v;
}

// Strips a trailing comment that is not inside quotes.
std::string strip_comment(const std::string &line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"')
      quoted = !quoted;
    else if (line[i] == '#' && !quoted)
      return line.substr(0, i);
  }
  return line;
}

} // namespace

Grid parse_grid(const std::string &text) {
  const auto parts = split(text, 'x');
  if (parts.size() != 3)
    throw DomainError("grid must look like NXxNYxNZ, got '" + text + "'");
  try {
    return Grid(static_cast<int>(to_long("grid", parts[0])),
                static_cast<int>(to_long("grid", parts[1])),
                static_cast<int>(to_long("grid", parts[2])));
  } catch (const std::invalid_argument &e) {
    throw DomainError(e.what());
  }
}

RunConfig parse_config(const std::string &text) {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::vector<std::string> violations;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  std::optional<std::string> preset;
  std::map<std::string, int> seen;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string body = trim(strip_comment(line));
    if (body.empty())
      continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      violations.push_back("line " + std::to_string(lineno) + ": expected key = value");
      continue;
    }
    const std::string key = trim(body.substr(0, eq));
    const std::string value = unquote(trim(body.substr(eq + 1)));
    if (seen.count(key)) {
      violations.push_back(key + ": given twice (lines " + std::to_string(seen[key]) + " and " +
                           std::to_string(lineno) + ")");
      continue;
    }
    seen[key] = lineno;
    if (key == "preset")
      preset = value;
    else
      pairs.emplace_back(key, value);
  }

  RunConfig cfg;
  if (preset) {
    try {
      cfg = preset_config(*preset);
    } catch (const ConfigError &e) {
      violations.insert(violations.end(), e.violations().begin(), e.violations().end());
    }
  }
  for (const auto &[key, value] : pairs) {
    const auto it = setters().find(key);
    if (it == setters().end()) {
      violations.push_back(key + ": unknown key");
      continue;
    }
    try {
      it->second(cfg, key, value);
    } catch (const std::invalid_argument &e) {
      violations.push_back(e.what());
    }
  }
  const auto more = validate_config(cfg);
  violations.insert(violations.end(), more.begin(), more.end());
  if (!violations.empty())
    throw ConfigError(violations);
  return cfg;
}

std::vector<std::string> validate_config(const RunConfig &c) {
  std::vector<std::string> v;
  std::optional<GroupModel> model;
  try {
    model = GroupModel::from_name(c.model);
  } catch (const Error &) {
    v.push_back("model: unknown model '" + c.model + "'");
  }
  if (c.grid.nx < 2)
    v.push_back("grid.nx: must be at least 2");
  if (c.grid.ny < 2)
    v.push_back("grid.ny: must be at least 2");
  if (c.grid.nz < 2)
    v.push_back("grid.nz: must be at least 2");
  if (model && model->twist() != 0 && c.grid.ny > 0 && c.grid.nz > 0 &&
      c.grid.nz % c.grid.ny != 0)
    v.push_back("grid.ny = " + std::to_string(c.grid.ny) + " must divide grid.nz = " +
                std::to_string(c.grid.nz) + " for the twisted lattice");

  const bool torus = c.target == "torus";
  const bool sphere = c.target == "sphere";
  const bool disk = c.target == "hyperbolic";
  if (!torus && !sphere && !disk)
    v.push_back("target: unknown target '" + c.target + "' (torus, sphere, hyperbolic)");
  if (disk && c.target_dim != 2)
    v.push_back("target.dim: the hyperbolic target has dimension 2");
  if (sphere && c.target_dim < 2)
    v.push_back("target.dim: sphere needs ambient dimension >= 2");
  if (c.target_dim > 8)
    v.push_back("target.dim: at most 8 components are supported");

  const auto &p = c.potential;
  if (p.name == "cosine") {
    if (!torus)
      v.push_back("potential: cosine potential is defined on torus targets");
    if (p.axis >= c.target_dim)
      v.push_back("potential.axis: out of range for target.dim");
  } else if (p.name == "rho-squared") {
    if (!disk)
      v.push_back("potential: rho-squared needs the hyperbolic target");
    if (!(p.c > 0.0))
      v.push_back("potential.c: rho-squared needs c > 0 (decay condition)");
  } else if (p.name == "ambient-quadratic") {
    if (disk)
      v.push_back("potential: ambient-quadratic needs an embedded target");
    if (!p.linear.empty() && p.linear.size() != c.target_dim)
      v.push_back("potential.linear: needs target.dim entries");
  } else if (p.name != "zero") {
    v.push_back("potential: unknown potential '" + p.name + "'");
  }

  const auto &ini = c.initial;
  if (ini.preset == "winding-perturbed") {
    if (!torus)
      v.push_back("initial: winding-perturbed needs a torus target");
    if (!ini.winding.empty() && ini.winding.size() != c.target_dim)
      v.push_back("initial.winding: needs one row per target component");
    for (const auto &row : ini.winding)
      if (row[2] != 0)
        v.push_back("initial.winding: central (third) entries must be 0");
  } else if (ini.preset == "sphere-perturbed") {
    if (!sphere)
      v.push_back("initial: sphere-perturbed needs a sphere target");
    if (ini.pole >= c.target_dim)
      v.push_back("initial.pole: out of range for target.dim");
  } else if (ini.preset == "disk-perturbed") {
    if (!disk)
      v.push_back("initial: disk-perturbed needs the hyperbolic target");
    if (!ini.point.empty() && ini.point.size() != 2)
      v.push_back("initial.point: needs 2 entries");
  } else if (ini.preset == "constant") {
    if (ini.point.size() != c.target_dim)
      v.push_back("initial.point: needs target.dim entries");
  } else if (ini.preset == "checkpoint") {
    if (!ini.checkpoint)
      v.push_back("initial.checkpoint: required for initial = checkpoint");
  } else {
    v.push_back("initial: unknown initial map '" + ini.preset + "'");
  }
  if (!(ini.amplitude >= 0.0))
    v.push_back("initial.amplitude: must be nonnegative");
  if (ini.modes < 1)
    v.push_back("initial.modes: must be at least 1");

  const auto &f = c.flow;
  if (!(f.dt >= 0.0))
    v.push_back("flow.dt: must be positive (0 selects the stability limit)");
  if (!(f.t_max >= 0.0))
    v.push_back("flow.t_max: must be nonnegative");
  if (!(f.stop_tolerance > 0.0))
    v.push_back("flow.stop_tolerance: must be positive");
  if (!(f.cfl_safety > 0.0 && f.cfl_safety <= 1.0))
    v.push_back("flow.cfl_safety: must lie in (0, 1]");
  if (f.max_halvings < 0)
    v.push_back("flow.max_halvings: must be nonnegative");
  if (f.snapshot_stride < 0)
    v.push_back("flow.snapshot_stride: must be nonnegative");
  if (f.record_stride < 1)
    v.push_back("record_stride: must be at least 1");
  if (f.scheme == Scheme::tubular_euler && !sphere)
    v.push_back("flow.scheme: tubular-euler needs a non-flat embedded target");
  return v;
}

std::string format_config(const RunConfig &c) {
  std::ostringstream os;
  if (!c.preset.empty())
    os << "# preset " << c.preset << '\n';
  os << "model = " << c.model << '\n'
     << "grid.nx = " << c.grid.nx << '\n'
     << "grid.ny = " << c.grid.ny << '\n'
     << "grid.nz = " << c.grid.nz << '\n'
     << "target = " << c.target << '\n'
     << "target.dim = " << c.target_dim << '\n'
     << "potential = " << c.potential.name << '\n';
  if (c.potential.name == "cosine")
    os << "potential.eps = " << fmt(c.potential.eps) << '\n'
       << "potential.axis = " << c.potential.axis << '\n';
  if (c.potential.name == "rho-squared")
    os << "potential.c = " << fmt(c.potential.c) << '\n';
  if (c.potential.name == "ambient-quadratic") {
    os << "potential.kappa = " << fmt(c.potential.kappa) << '\n';
    if (!c.potential.linear.empty()) {
      os << "potential.linear = ";
      for (std::size_t i = 0; i < c.potential.linear.size(); ++i)
        os << (i ? "," : "") << fmt(c.potential.linear[i]);
      os << '\n';
    }
  }
  os << "initial = " << c.initial.preset << '\n'
     << "initial.amplitude = " << fmt(c.initial.amplitude) << '\n'
     << "initial.modes = " << c.initial.modes << '\n';
  if (!c.initial.winding.empty()) {
    os << "initial.winding = ";
    for (std::size_t r = 0; r < c.initial.winding.size(); ++r) {
      const auto &w = c.initial.winding[r];
      os << (r ? "; " : "") << w[0] << ',' << w[1] << ',' << w[2];
    }
    os << '\n';
  }
  if (!c.initial.point.empty()) {
    os << "initial.point = ";
    for (std::size_t i = 0; i < c.initial.point.size(); ++i)
      os << (i ? "," : "") << fmt(c.initial.point[i]);
    os << '\n';
  }
  if (c.initial.preset == "sphere-perturbed")
    os << "initial.pole = " << c.initial.pole << '\n';
  if (c.initial.checkpoint)
    os << "initial.checkpoint = \"" << c.initial.checkpoint->string() << "\"\n";
  os << "flow.dt = " << fmt(c.flow.dt) << '\n'
     << "flow.t_max = " << fmt(c.flow.t_max) << '\n'
     << "flow.stop_tolerance = " << fmt(c.flow.stop_tolerance) << '\n'
     << "flow.scheme = " << to_string(c.flow.scheme) << '\n'
     << "flow.tension = " << to_string(c.flow.tension) << '\n'
     << "flow.cfl_safety = " << fmt(c.flow.cfl_safety) << '\n'
     << "flow.energy_tolerance = " << fmt(c.flow.energy_tolerance) << '\n'
     << "flow.max_halvings = " << c.flow.max_halvings << '\n'
     << "flow.snapshot_stride = " << c.flow.snapshot_stride << '\n'
     << "record_stride = " << c.flow.record_stride << '\n'
     << "output = \"" << c.output.string() << "\"\n"
     << "seed = " << c.seed << '\n';
  return os.str();
}

const std::vector<PresetInfo> &preset_catalogue() {
  static const std::vector<PresetInfo> list = {
      {"torus-eells-sampson",
       "torus target, G = eps*cos(2*pi*theta_1) with lambda_G below eta_min/2: convergence "
       "to a harmonic map with potential in the initial homotopy class"},
      {"torus-harmonic",
       "torus target, G = 0: linear heat flow of a winding map, sup|tau| non-increasing "
       "and vertical energy decreasing"},
      {"hyperbolic-decay",
       "hyperbolic disk target, G = -(c/2) rho^2: exponential decay of sup|tau| and a "
       "constant limit at the base point"},
      {"sphere-tubular",
       "round sphere target, tubular flow without reprojection: the normal defect "
       "integral of |rho(u)|^2 does not increase"},
      {"sphere-projected",
       "round sphere target, projected flow: energy monotonicity and constraint "
       "maintenance for a positively curved target"},
  };
  return list;
}

RunConfig preset_config(const std::string &name) {
  RunConfig c;
  c.preset = name;
  c.output = "subflow-out/" + name;
  if (name == "torus-eells-sampson" || name == "torus-harmonic") {
    c.target = "torus";
    c.target_dim = 2;
    c.initial.preset = "winding-perturbed";
    c.initial.amplitude = 0.05;
    c.initial.modes = 2;
    c.initial.winding = {{1, 0, 0}, {0, 1, 0}};
    c.flow.t_max = 20.0;
    c.flow.stop_tolerance = 1e-6;
    if (name == "torus-eells-sampson") {
      c.potential.name = "cosine";
      c.potential.eps = 1.0 / (16.0 * M_PI * M_PI);
      c.potential.axis = 0;
    }
    return c;
  }
  if (name == "hyperbolic-decay") {
    c.target = "hyperbolic";
    c.target_dim = 2;
    c.potential.name = "rho-squared";
    c.potential.c = 1.0;
    c.initial.preset = "disk-perturbed";
    c.initial.amplitude = 0.15;
    c.initial.point = {0.1, -0.05};
    c.flow.t_max = 40.0;
    c.flow.stop_tolerance = 1e-6;
    return c;
  }
  if (name == "sphere-tubular" || name == "sphere-projected") {
    c.target = "sphere";
    c.target_dim = 3;
    c.initial.preset = "sphere-perturbed";
    c.initial.amplitude = 0.3;
    c.initial.modes = 2;
    c.initial.pole = 2;
    c.flow.scheme =
        name == "sphere-tubular" ? Scheme::tubular_euler : Scheme::projected_euler;
    c.flow.t_max = name == "sphere-tubular" ? 0.05 : 0.5;
    // Explicit steps drift off the sphere at O(dt^2) per step; a smaller
    // step keeps that drift below the monotonicity slack.
    if (name == "sphere-tubular")
      c.flow.cfl_safety = 0.25;
    c.flow.stop_tolerance = 1e-6;
    return c;
  }
  throw ConfigError({"preset: unknown preset '" + name + "'"});
}

} // namespace subflow
