#include "kickedtop/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "kickedtop/output.hpp"

namespace kickedtop {

namespace {

constexpr std::pair<ExperimentKind, std::string_view> kKindNames[] = {
    {ExperimentKind::single_top, "single-top"},   {ExperimentKind::classical, "classical"},
    {ExperimentKind::coupled, "coupled"},         {ExperimentKind::sweep_eps, "sweep-eps"},
    {ExperimentKind::sweep_k, "sweep-k"},         {ExperimentKind::correlation, "correlation"},
    {ExperimentKind::weak_chaos_scan, "weak-chaos-scan"}, {ExperimentKind::pheno_fit, "pheno-fit"},
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view text, const std::string& field) {
  text = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw ConfigError(field, "not a number: '" + std::string(text) + "'");
  return v;
}

template <class Int>
Int parse_int(std::string_view text, const std::string& field) {
  text = trim(text);
  Int v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw ConfigError(field, "not an integer: '" + std::string(text) + "'");
  return v;
}

bool parse_bool(std::string_view text, const std::string& field) {
  text = trim(text);
  if (text == "true" || text == "yes" || text == "1") return true;
  if (text == "false" || text == "no" || text == "0") return false;
  throw ConfigError(field, "expected true or false, got '" + std::string(text) + "'");
}

std::vector<double> parse_doubles(std::string_view text, const std::string& field) {
  std::vector<double> out;
  for (auto item : split(text, ',')) out.push_back(parse_double(item, field));
  return out;
}

std::vector<int> parse_ints(std::string_view text, const std::string& field) {
  std::vector<int> out;
  for (auto item : split(text, ',')) out.push_back(parse_int<int>(item, field));
  return out;
}

std::vector<InitialPair> parse_pairs(std::string_view text, const std::string& field) {
  std::vector<InitialPair> out;
  for (auto item : split(text, ';')) {
    std::vector<double> v;
    std::string tmp(item);
    std::replace(tmp.begin(), tmp.end(), ',', ' ');
    std::istringstream words(tmp);
    std::string w;
    while (words >> w) v.push_back(parse_double(w, field));
    if (v.size() == 2)
      out.push_back({v[0], v[1], v[0], v[1]});
    else if (v.size() == 4)
      out.push_back({v[0], v[1], v[2], v[3]});
    else
      throw ConfigError(field, "each entry needs 2 or 4 angles, got '" + std::string(item) + "'");
  }
  return out;
}

template <class T>
std::string join(const std::vector<T>& v, std::string_view sep = ", ") {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    if constexpr (std::is_same_v<T, double>)
      out += format_double(v[i]);
    else
      out += std::to_string(v[i]);
  }
  return out;
}

std::string pairs_text(const std::vector<InitialPair>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += "; ";
    out += format_double(v[i].theta1) + " " + format_double(v[i].phi1) + " " + format_double(v[i].theta2) + " " +
           format_double(v[i].phi2);
  }
  return out;
}

std::string_view normalization_name(Normalization n) {
  switch (n) {
    case Normalization::none: return "none";
    case Normalization::d0: return "d0";
    case Normalization::diagonal: return "diagonal";
  }
  return "none";
}

struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, std::string_view, const std::string&)> set;

  std::string name() const { return section + "." + key; }
};

#define KT_DOUBLE(sec, member)                                                                         \
  Field {                                                                                               \
    sec, #member, [](const ExperimentConfig& c) { return format_double(c.member); },                  \
        [](ExperimentConfig& c, std::string_view v, const std::string& f) { c.member = parse_double(v, f); } \
  }
#define KT_INT(sec, member)                                                                              \
  Field {                                                                                                \
    sec, #member, [](const ExperimentConfig& c) { return std::to_string(c.member); },                  \
        [](ExperimentConfig& c, std::string_view v, const std::string& f) { c.member = parse_int<int>(v, f); } \
  }
#define KT_DOUBLES(sec, member)                                                                          \
  Field {                                                                                                \
    sec, #member, [](const ExperimentConfig& c) { return join(c.member); },                            \
        [](ExperimentConfig& c, std::string_view v, const std::string& f) { c.member = parse_doubles(v, f); } \
  }
#define KT_OPTIONAL(sec, member)                                                                       \
  Field {                                                                                               \
    sec, #member, [](const ExperimentConfig& c) { return c.member ? format_double(*c.member) : std::string(); }, \
        [](ExperimentConfig& c, std::string_view v, const std::string& f) {                            \
          if (trim(v).empty())                                                                          \
            c.member.reset();                                                                           \
          else                                                                                          \
            c.member = parse_double(v, f);                                                              \
        }                                                                                               \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"experiment", "kind", [](const ExperimentConfig& c) { return std::string(to_string(c.kind)); },
       [](ExperimentConfig& c, std::string_view v, const std::string&) { c.kind = parse_kind(trim(v)); }},
      {"experiment", "seed", [](const ExperimentConfig& c) { return std::to_string(c.seed); },
       [](ExperimentConfig& c, std::string_view v, const std::string& f) { c.seed = parse_int<std::uint64_t>(v, f); }},
      {"experiment", "output_dir", [](const ExperimentConfig& c) { return c.output_dir; },
       [](ExperimentConfig& c, std::string_view v, const std::string&) { c.output_dir = std::string(trim(v)); }},
      KT_INT("experiment", workers),

      KT_DOUBLE("system", j),
      KT_DOUBLE("system", k),
      KT_OPTIONAL("system", k2),
      KT_DOUBLES("system", k_list),
      KT_DOUBLE("system", epsilon),
      KT_DOUBLES("system", eps_list),

      {"initial", "theta1", [](const ExperimentConfig& c) { return format_double(c.initial.theta1); },
       [](ExperimentConfig& c, std::string_view v, const std::string& f) { c.initial.theta1 = parse_double(v, f); }},
      {"initial", "phi1", [](const ExperimentConfig& c) { return format_double(c.initial.phi1); },
       [](ExperimentConfig& c, std::string_view v, const std::string& f) { c.initial.phi1 = parse_double(v, f); }},
      {"initial", "theta2", [](const ExperimentConfig& c) { return format_double(c.initial.theta2); },
       [](ExperimentConfig& c, std::string_view v, const std::string& f) { c.initial.theta2 = parse_double(v, f); }},
      {"initial", "phi2", [](const ExperimentConfig& c) { return format_double(c.initial.phi2); },
       [](ExperimentConfig& c, std::string_view v, const std::string& f) { c.initial.phi2 = parse_double(v, f); }},
      {"initial", "initial_set", [](const ExperimentConfig& c) { return pairs_text(c.initial_set); },
       [](ExperimentConfig& c, std::string_view v, const std::string& f) { c.initial_set = parse_pairs(v, f); }},
      KT_DOUBLES("initial", theta2_list),
      KT_DOUBLE("initial", scan_phi2),

      KT_INT("run", steps),
      KT_INT("run", fit_start),
      KT_INT("run", fit_end),
      KT_INT("run", ensemble),
      KT_OPTIONAL("run", sigma),
      KT_INT("run", lyapunov_steps),
      KT_DOUBLE("run", lag_start_fraction),
      KT_INT("run", zero_padding),
      {"run", "normalize", [](const ExperimentConfig& c) { return std::string(normalization_name(c.normalize)); },
       [](ExperimentConfig& c, std::string_view v, const std::string& f) {
         v = trim(v);
         if (v == "none") c.normalize = Normalization::none;
         else if (v == "d0") c.normalize = Normalization::d0;
         else if (v == "diagonal") c.normalize = Normalization::diagonal;
         else throw ConfigError(f, "expected none, d0 or diagonal");
       }},
      {"run", "perturbative", [](const ExperimentConfig& c) { return std::string(c.perturbative ? "true" : "false"); },
       [](ExperimentConfig& c, std::string_view v, const std::string& f) { c.perturbative = parse_bool(v, f); }},
      {"run", "von_neumann", [](const ExperimentConfig& c) { return std::string(c.von_neumann ? "true" : "false"); },
       [](ExperimentConfig& c, std::string_view v, const std::string& f) { c.von_neumann = parse_bool(v, f); }},
      KT_DOUBLE("run", norm_tolerance),
      {"run", "snapshot_times", [](const ExperimentConfig& c) { return join(c.snapshot_times); },
       [](ExperimentConfig& c, std::string_view v, const std::string& f) { c.snapshot_times = parse_ints(v, f); }},
      KT_INT("run", husimi_theta),
      KT_INT("run", husimi_phi),
      KT_INT("run", poincare_steps),
      KT_DOUBLE("run", eps_fit_min),
      KT_DOUBLE("run", eps_fit_max),

      {"fit", "input", [](const ExperimentConfig& c) { return c.fit_input; },
       [](ExperimentConfig& c, std::string_view v, const std::string&) { c.fit_input = std::string(trim(v)); }},
  };
  return table;
}

#undef KT_DOUBLE
#undef KT_INT
#undef KT_DOUBLES
#undef KT_OPTIONAL

const Field& find_field(std::string_view section, std::string_view key) {
  for (const auto& f : fields())
    if (f.section == section && f.key == key) return f;
  throw ConfigError(std::string(section) + "." + std::string(key), "unknown configuration key");
}

// Error helpers that name the field.
void require(bool ok, const char* field, const std::string& what) {
  if (!ok) throw ConfigError(field, what);
}

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

void check_angles(double theta, double phi, const std::string& prefix, const char* t_name, const char* p_name) {
  if (!(std::isfinite(theta) && theta >= 0.0 && theta <= std::numbers::pi))
    throw ConfigError(prefix + t_name, "theta must lie in [0, pi]");
  if (!(std::isfinite(phi) && phi >= -std::numbers::pi && phi < std::numbers::pi))
    throw ConfigError(prefix + p_name, "phi must lie in [-pi, pi)");
}

void check_off_pole(double theta, double sigma, const std::string& field) {
  if (theta < 3 * sigma || theta > std::numbers::pi - 3 * sigma)
    throw ConfigError(field, "classical ensemble origin within 3 sigma of a pole");
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "unknown";
}

ExperimentKind parse_kind(std::string_view text) {
  for (const auto& [k, name] : kKindNames)
    if (name == text) return k;
  throw ConfigError("experiment.kind", "unknown experiment kind '" + std::string(text) + "'");
}

bool is_sweep(ExperimentKind kind) {
  return kind == ExperimentKind::sweep_eps || kind == ExperimentKind::sweep_k ||
         kind == ExperimentKind::weak_chaos_scan;
}

double ExperimentConfig::classical_sigma() const { return sigma.value_or(1.0 / std::sqrt(j)); }

ExperimentConfig parse_config(std::string_view text) {
  boost::property_tree::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("file", "line " + std::to_string(e.line()) + ": " + e.message());
  }
  ExperimentConfig config;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError(section, "key outside of any section");
    for (const auto& [key, value] : body) {
      const Field& f = find_field(section, key);
      f.set(config, value.data(), f.name());
    }
  }
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("file", "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_ini(const ExperimentConfig& config) {
  std::string out, section;
  for (const auto& f : fields()) {
    if (f.section != section) {
      if (!section.empty()) out += "\n";
      section = f.section;
      out += "[" + section + "]\n";
    }
    out += f.key + " = " + f.get(config) + "\n";
  }
  return out;
}

void apply_override(ExperimentConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError(std::string(assignment), "override must look like section.key=value");
  const std::string_view name = trim(assignment.substr(0, eq));
  const auto dot = name.find('.');
  if (dot == std::string_view::npos) throw ConfigError(std::string(name), "override key must be section.key");
  const Field& f = find_field(name.substr(0, dot), name.substr(dot + 1));
  f.set(config, assignment.substr(eq + 1), f.name());
}

void validate(const ExperimentConfig& c) {
  const ExperimentKind kind = c.kind;
  require(c.workers >= 1, "experiment.workers", "must be at least 1");

  const double twice_j = 2.0 * c.j;
  require(std::isfinite(c.j) && c.j > 0.0 && std::abs(twice_j - std::round(twice_j)) < 1e-12, "system.j",
          "must be a positive integer or half-integer");
  require(finite_nonneg(c.k), "system.k", "must be finite and >= 0");
  if (c.k2) require(finite_nonneg(*c.k2), "system.k2", "must be finite and >= 0");
  for (double v : c.k_list) require(finite_nonneg(v), "system.k_list", "entries must be finite and >= 0");
  require(finite_nonneg(c.epsilon), "system.epsilon", "must be finite and >= 0");
  for (double v : c.eps_list) require(std::isfinite(v) && v > 0.0, "system.eps_list", "entries must be finite and > 0");

  check_angles(c.initial.theta1, c.initial.phi1, "initial.", "theta1", "phi1");
  check_angles(c.initial.theta2, c.initial.phi2, "initial.", "theta2", "phi2");
  for (const auto& p : c.initial_set) {
    check_angles(p.theta1, p.phi1, "initial.", "initial_set", "initial_set");
    check_angles(p.theta2, p.phi2, "initial.", "initial_set", "initial_set");
  }
  for (double t : c.theta2_list) check_angles(t, c.scan_phi2, "initial.", "theta2_list", "scan_phi2");
  check_angles(0.0, c.scan_phi2, "initial.", "theta2_list", "scan_phi2");

  require(c.steps >= 1, "run.steps", "must be at least 1");
  require(c.ensemble >= 1, "run.ensemble", "must be at least 1");
  if (c.sigma) require(std::isfinite(*c.sigma) && *c.sigma > 0.0, "run.sigma", "must be > 0");
  require(c.lyapunov_steps >= 1, "run.lyapunov_steps", "must be at least 1");
  require(c.lag_start_fraction > 0.0 && c.lag_start_fraction < 1.0, "run.lag_start_fraction", "must lie in (0, 1)");
  require(c.zero_padding >= 1, "run.zero_padding", "must be at least 1");
  require(std::isfinite(c.norm_tolerance) && c.norm_tolerance >= 0.0, "run.norm_tolerance", "must be >= 0");
  for (int t : c.snapshot_times)
    require(t >= 0 && t <= c.steps, "run.snapshot_times", "entries must lie in [0, steps]");
  require(c.husimi_theta >= 0 && c.husimi_phi >= 0, "run.husimi_theta", "grid sizes must be >= 0");
  require((c.husimi_theta == 0) == (c.husimi_phi == 0), "run.husimi_phi", "set both grid sizes or neither");
  require(c.poincare_steps >= 0, "run.poincare_steps", "must be >= 0");

  const bool fits = kind == ExperimentKind::sweep_k || kind == ExperimentKind::weak_chaos_scan;
  if (fits) {
    require(c.fit_start >= 0, "run.fit_start", "must be >= 0");
    require(c.fit_end - c.fit_start >= 2, "run.fit_end", "fit window needs at least three points");
    require(c.fit_end <= c.steps, "run.fit_end", "fit window extends beyond run.steps");
  }

  const double sigma = c.classical_sigma();
  switch (kind) {
    case ExperimentKind::single_top:
    case ExperimentKind::coupled:
      break;
    case ExperimentKind::classical:
      check_off_pole(c.initial.theta1, sigma, "initial.theta1");
      break;
    case ExperimentKind::sweep_eps:
      require(c.eps_list.size() >= 2, "system.eps_list", "sweep-eps needs at least two coupling values");
      require(c.eps_fit_min > 0.0 && c.eps_fit_max > c.eps_fit_min, "run.eps_fit_max",
              "fit range must satisfy 0 < eps_fit_min < eps_fit_max");
      break;
    case ExperimentKind::sweep_k:
      for (const auto& p : c.initial_set.empty() ? default_chaotic_set() : c.initial_set) {
        check_off_pole(p.theta1, sigma, "initial.initial_set");
        check_off_pole(p.theta2, sigma, "initial.initial_set");
      }
      require(c.epsilon > 0.0, "system.epsilon", "rates are normalized by eps^2 and need eps > 0");
      require(c.steps >= 16, "run.steps", "frequency estimate needs at least 16 kicks");
      break;
    case ExperimentKind::correlation:
      require(c.steps >= 16, "run.steps", "frequency estimate needs at least 16 kicks");
      require(c.fit_start >= 0 && c.fit_start <= c.fit_end, "run.fit_start", "must lie in [0, fit_end]");
      require(c.fit_start <= c.steps, "run.fit_start", "averaging window starts beyond run.steps");
      break;
    case ExperimentKind::weak_chaos_scan:
      check_off_pole(c.initial.theta1, sigma, "initial.theta1");
      for (double t : c.theta2_list.empty() ? default_scan_thetas() : c.theta2_list)
        check_off_pole(t, sigma, "initial.theta2_list");
      require(c.epsilon > 0.0, "system.epsilon", "rates are normalized by eps^2 and need eps > 0");
      require(c.steps >= 16, "run.steps", "frequency estimate needs at least 16 kicks");
      break;
    case ExperimentKind::pheno_fit:
      require(!c.fit_input.empty(), "fit.input", "pheno-fit needs the path of a sweep CSV");
      break;
  }
}

std::vector<InitialPair> default_chaotic_set() {
  const double pts[][2] = {{0.89, 0.63}, {1.2, -2.0}, {1.6, 2.6}, {0.6, -0.8}, {2.4, -1.5},
                           {1.9, -0.3}, {1.5, -1.6}, {2.2, 2.2}, {1.0, 1.4},  {2.7, 0.5}};
  std::vector<InitialPair> out;
  for (const auto& p : pts) out.push_back({p[0], p[1], p[0], p[1]});
  return out;
}

std::vector<double> default_scan_thetas() {
  std::vector<double> out;
  for (int i = 0; i <= 10; ++i) out.push_back(0.65 + 0.05 * i);
  return out;
}

}  // namespace kickedtop
