#pragma once

// SolverConfig: the flat key = value run description read by the command-line tool.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "fracschrod/errors.hpp"
#include "fracschrod/fbm.hpp"
#include "fracschrod/fraccalc.hpp"
#include "fracschrod/magschrod.hpp"
#include "fracschrod/nonlinear.hpp"
#include "fracschrod/qnoise.hpp"

namespace fracschrod {

/// Parses "0.25", "1e-3", "2^-8", "8pi", "8*pi", "pi".
inline double parse_number(std::string s) {
  s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
  if (s.empty()) throw ConfigError("empty numeric value");
  auto plain = [](const std::string& t) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(t, &pos);
    } catch (const std::exception&) {
      throw ConfigError("cannot parse number '" + t + "'");
    }
    if (pos != t.size()) throw ConfigError("cannot parse number '" + t + "'");
    return v;
  };
  if (s.size() >= 2 && s.compare(s.size() - 2, 2, "pi") == 0) {
    std::string c = s.substr(0, s.size() - 2);
    if (!c.empty() && c.back() == '*') c.pop_back();
    return (c.empty() ? 1.0 : plain(c)) * std::numbers::pi;
  }
  if (const auto caret = s.find('^'); caret != std::string::npos)
    return std::pow(plain(s.substr(0, caret)), plain(s.substr(caret + 1)));
  return plain(s);
}

inline std::vector<double> parse_number_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(item));
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

struct SolverConfig {
  std::string experiment = "single";
  std::uint64_t seed = 1;
  int workers = 1;
  std::string out = "fracschrod_out";

  int dim = 1;
  std::size_t points = 256;
  double length = 8.0 * std::numbers::pi;

  double hurst = 0.75;
  std::size_t modes = 32;
  double decay = 7.0;
  int q = 0;

  NonlinearitySpec nonlinearity = NonlinearitySpec::power(1.0, 1.0);

  // Gaussian packet exp(-|x - c|^2 / (2 w^2)) e^{i k x_1}, centre defaults to the box centre
  double center = -1.0;
  double width = 1.0;
  double wavenumber = 2.0;

  Scheme scheme = Scheme::crank_nicolson_mag;
  double horizon = 1.0;
  std::vector<double> dts{1.0 / 256, 1.0 / 512, 1.0 / 1024, 1.0 / 2048, 1.0 / 4096};

  FracConfig frac{};
  std::vector<double> eps{1.0 / 4, 1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128};

  [[nodiscard]] Grid grid() const { return {dim, points, length}; }
  [[nodiscard]] double packet_center() const { return center < 0.0 ? 0.5 * length : center; }
  [[nodiscard]] double finest_dt() const { return *std::min_element(dts.begin(), dts.end()); }
  /// Noise time step: the finest dt, halved for crank_nicolson_mag (midpoint samples).
  [[nodiscard]] double noise_step() const {
    return scheme == Scheme::crank_nicolson_mag ? 0.5 * finest_dt() : finest_dt();
  }
  [[nodiscard]] std::size_t noise_steps() const {
    return static_cast<std::size_t>(std::llround(horizon / noise_step()));
  }

  void validate() const {
    static const std::set<std::string> experiments{"single", "gauge-equivalence", "fraccalc", "mollification"};
    if (!experiments.count(experiment))
      throw ConfigError("unknown experiment '" + experiment +
                        "' (expected single, gauge-equivalence, fraccalc or mollification)");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (dim < 1 || dim > 3) throw ConfigError("dimension n must be 1, 2 or 3 (got " + std::to_string(dim) + ")");
    if (points < 4 || (points & (points - 1)) != 0)
      throw ConfigError("grid points N must be a power of two >= 4 (got " + std::to_string(points) + ")");
    if (!(length > 0.0) || !std::isfinite(length)) throw ConfigError("box length L must be positive");
    if (!(hurst > 0.5 && hurst < 1.0))
      throw ConfigError("Hurst index H = " + std::to_string(hurst) + " must lie in the open interval (1/2, 1)");
    if (modes < 1) throw ConfigError("number of noise modes P must be >= 1");
    if (q < 0) throw ConfigError("Sobolev index q must be >= 0");
    if (!(decay > min_decay(dim, q)))
      throw ConfigError("noise decay s = " + std::to_string(decay) + " must exceed q + 4 + n/2 + 1 = " +
                        std::to_string(min_decay(dim, q)));
    nonlinearity.validate(dim, q);
    if (!(width > 0.0)) throw ConfigError("initial packet width must be positive");
    frac.validate_stochastic(hurst);
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("final time T must be positive");
    const double h = noise_step();
    for (double dt : dts) {
      if (!(dt > 0.0)) throw ConfigError("time steps must be positive");
      const double steps = horizon / dt;
      if (std::abs(steps - std::round(steps)) > 1e-9 * steps)
        throw ConfigError("T = " + std::to_string(horizon) + " is not a whole number of steps dt = " + std::to_string(dt));
      const double r = dt / h;
      if (std::abs(r - std::round(r)) > 1e-9 * r)
        throw ConfigError("time step " + std::to_string(dt) + " is not a multiple of the finest step");
    }
    for (double e : eps)
      if (!(e > 0.0)) throw ConfigError("mollification eps values must be positive");
  }

  /// Canonical text of every parsed value (fixed key order, round-trip precision).
  [[nodiscard]] std::string canonical() const {
    std::ostringstream os;
    auto num = [](double v) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      return std::string(buf);
    };
    auto list = [&](const std::vector<double>& v) {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + num(v[i]);
      return s;
    };
    os << "experiment=" << experiment << "\nseed=" << seed << "\ndim=" << dim << "\npoints=" << points
       << "\nlength=" << num(length) << "\nhurst=" << num(hurst) << "\nmodes=" << modes << "\ndecay=" << num(decay)
       << "\nq=" << q << "\nnonlinearity=" << to_string(nonlinearity.kind) << "\nsigma=" << num(nonlinearity.sigma)
       << "\nmu=" << num(nonlinearity.mu) << "\ncoupling=" << num(nonlinearity.coupling)
       << "\ncenter=" << num(packet_center()) << "\nwidth=" << num(width) << "\nwavenumber=" << num(wavenumber)
       << "\nscheme=" << to_string(scheme) << "\nT=" << num(horizon) << "\ndt=" << list(dts)
       << "\nalpha=" << num(frac.alpha) << "\nrefinement=" << frac.refinement << "\neps=" << list(eps) << "\n";
    return os.str();
  }
};

/// 64-bit FNV-1a, hex.
inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string config_hash(const SolverConfig& c) { return fnv1a_hex(c.canonical()); }

/// Reads an INI config; unknown sections or keys are rejected so typos do not pass silently.
inline SolverConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  static const std::map<std::string, std::set<std::string>> known{
      {"run", {"experiment", "seed", "workers", "out"}},
      {"grid", {"dim", "points", "length"}},
      {"noise", {"hurst", "modes", "decay", "q"}},
      {"nonlinearity", {"kind", "sigma", "mu", "coupling"}},
      {"initial", {"center", "width", "wavenumber"}},
      {"solver", {"scheme", "T", "dt"}},
      {"fraccalc", {"alpha", "refinement"}},
      {"mollification", {"eps"}},
  };
  for (const auto& [section, body] : tree) {
    const auto it = known.find(section);
    if (it == known.end()) throw ConfigError("unknown config section [" + section + "]");
    for (const auto& [key, value] : body)
      if (!it->second.count(key)) throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
  }
  SolverConfig c;
  auto get = [&](const std::string& path) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(path)) return *v;
    return std::nullopt;
  };
  auto as_int = [](const std::string& key, const std::string& v) {
    const double d = parse_number(v);
    if (d != std::floor(d) || std::abs(d) > 1e15) throw ConfigError(key + " must be an integer (got '" + v + "')");
    return static_cast<long long>(d);
  };
  if (auto v = get("run.experiment")) c.experiment = *v;
  if (auto v = get("run.seed")) {
    try {
      std::size_t pos = 0;
      c.seed = std::stoull(*v, &pos);
      if (pos != v->size()) throw ConfigError("");
    } catch (const std::exception&) {
      throw ConfigError("run.seed must be an unsigned 64-bit integer (got '" + *v + "')");
    }
  }
  if (auto v = get("run.workers")) c.workers = static_cast<int>(as_int("run.workers", *v));
  if (auto v = get("run.out")) c.out = *v;
  if (auto v = get("grid.dim")) c.dim = static_cast<int>(as_int("grid.dim", *v));
  if (auto v = get("grid.points")) {
    const auto n = as_int("grid.points", *v);
    if (n < 0) throw ConfigError("grid.points must be positive");
    c.points = static_cast<std::size_t>(n);
  }
  if (auto v = get("grid.length")) c.length = parse_number(*v);
  if (auto v = get("noise.hurst")) c.hurst = parse_number(*v);
  if (auto v = get("noise.modes")) {
    const auto n = as_int("noise.modes", *v);
    if (n < 1) throw ConfigError("noise.modes must be >= 1");
    c.modes = static_cast<std::size_t>(n);
  }
  if (auto v = get("noise.q")) c.q = static_cast<int>(as_int("noise.q", *v));
  c.decay = c.q + 7.0;
  if (auto v = get("noise.decay")) c.decay = parse_number(*v);
  if (auto v = get("nonlinearity.kind")) c.nonlinearity.kind = parse_nonlinearity(*v);
  if (auto v = get("nonlinearity.sigma")) c.nonlinearity.sigma = parse_number(*v);
  if (auto v = get("nonlinearity.mu")) c.nonlinearity.mu = parse_number(*v);
  if (auto v = get("nonlinearity.coupling")) c.nonlinearity.coupling = parse_number(*v);
  if (auto v = get("initial.center")) c.center = parse_number(*v);
  if (auto v = get("initial.width")) c.width = parse_number(*v);
  if (auto v = get("initial.wavenumber")) c.wavenumber = parse_number(*v);
  if (auto v = get("solver.scheme")) c.scheme = parse_scheme(*v);
  if (auto v = get("solver.T")) c.horizon = parse_number(*v);
  if (auto v = get("solver.dt")) c.dts = parse_number_list(*v);
  if (auto v = get("fraccalc.alpha")) c.frac.alpha = parse_number(*v);
  if (auto v = get("fraccalc.refinement")) c.frac.refinement = static_cast<int>(as_int("fraccalc.refinement", *v));
  if (auto v = get("mollification.eps")) c.eps = parse_number_list(*v);
  return c;
}

inline SolverConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

/// Gaussian packet of the config on its grid.
inline WaveField initial_packet(const SolverConfig& c) {
  const Grid g = c.grid();
  const double x0 = c.packet_center(), w = c.width, k = c.wavenumber;
  return sample_wave(g, [&](const std::array<double, 3>& x) {
    double r2 = 0.0;
    for (int d = 0; d < g.dim; ++d) r2 += (x[static_cast<std::size_t>(d)] - x0) * (x[static_cast<std::size_t>(d)] - x0);
    return std::exp(-r2 / (2 * w * w)) * std::polar(1.0, k * x[0]);
  });
}

/// Noise field of the config, sampled once on the finest time grid.
inline NoiseField config_noise(const SolverConfig& c) {
  const auto spectrum = build_spectrum(c.dim, c.length, c.modes, c.decay, c.q);
  return sample_field(spectrum, c.grid(), c.hurst, uniform_times(c.horizon, c.noise_steps()), c.seed);
}

}  // namespace fracschrod
