#pragma once

// Run configuration: a line-based `key = value` format with `[section]`
// headers and `#` comments. Complex numbers are written `re+imi` (`0.2+1.1i`,
// `1.2i`, `-i`, `3`); lists are comma separated.

#include <algorithm>
#include <array>
#include <cerrno>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "pvi/errors.hpp"
#include "pvi/format.hpp"
#include "pvi/lax_system.hpp"

namespace pvi {

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline bool parse_double_strict(const std::string& s, double& out) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && errno != ERANGE;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) out.push_back(trim(cur));
  return out;
}

}  // namespace detail

/// Parses `3`, `1.2i`, `-i`, `0.2+1.1i`, `1e-3-2e-4i`. Returns false on malformed input.
inline bool parse_complex(const std::string& text, cplx& out) {
  std::string s;
  for (char c : text) {
    if (c != ' ' && c != '\t') s.push_back(c);
  }
  if (s.empty()) return false;
  if (s.back() != 'i') {
    double re;
    if (!detail::parse_double_strict(s, re) || !std::isfinite(re)) return false;
    out = {re, 0.0};
    return true;
  }
  const std::string body = s.substr(0, s.size() - 1);
  std::size_t split = std::string::npos;
  for (std::size_t k = body.size(); k-- > 1;) {
    if ((body[k] == '+' || body[k] == '-') && body[k - 1] != 'e' && body[k - 1] != 'E') {
      split = k;
      break;
    }
  }
  auto imag_part = [](const std::string& t, double& v) {
    if (t.empty() || t == "+") return v = 1.0, true;
    if (t == "-") return v = -1.0, true;
    return detail::parse_double_strict(t, v);
  };
  double re = 0.0, im = 0.0;
  if (split == std::string::npos) {
    if (!imag_part(body, im)) return false;
  } else {
    if (!detail::parse_double_strict(body.substr(0, split), re)) return false;
    if (!imag_part(body.substr(split), im)) return false;
  }
  if (!std::isfinite(re) || !std::isfinite(im)) return false;
  out = {re, im};
  return true;
}

struct RunConfig {
  unsigned long long seed = 1;

  // [model]
  std::array<cplx, 4> alpha_vec{0.25, 0.25, 0.25, 0.25};
  cplx nu{1.0};
  double kappa = 1.0;

  // [state]
  std::vector<cplx> u{cplx(0.23, 0.11)};
  std::vector<cplx> v{cplx(0.4, -0.2)};
  bool centered = false;

  // [multi]: N-component state for integrate-multi, calogero, lax-verify, monodromy
  std::vector<cplx> multi_u{cplx(-0.33, 0.02), cplx(0.01, -0.03), cplx(0.32, 0.01)};
  std::vector<cplx> multi_v{cplx(0.1, 0.05), cplx(-0.15, 0.02), cplx(0.05, -0.07)};

  // [path]
  std::vector<cplx> waypoints{cplx(0.0, 1.2), cplx(0.0, 1.3)};
  int samples = 101;
  double rtol = 1e-10;
  double atol = 1e-12;
  double max_step = std::numeric_limits<double>::infinity();

  // [rational]
  cplx X0{0.3, 0.1};
  cplx Xdot0{0.2, -0.1};
  std::vector<cplx> t_waypoints{cplx(0.5, 0.2), cplx(0.55, 0.25)};

  // [lax]
  cplx lax_tau0{0.0, 1.2};
  RhoConvention rho_convention = RhoConvention::TAU0_MINUS_TAU0BAR;
  ExponentFrame exponent_frame = ExponentFrame::REFERENCE_TAU0;
  Normalization normalization = Normalization::REFERENCE_NORMALIZED;
  cplx alpha_inner{1.0};
  std::vector<cplx> probes{cplx(0.3, 0.5), cplx(0.62, 0.41), cplx(0.45, 0.83)};
  int fe_samples = 50;
  double stencil_h = 1e-4;

  // [calogero]
  cplx calogero_tau0{0.0, 1.2};
  double dt = 1e-3;
  long nsteps = 10000;
  long record_every = 10;
  std::vector<double> kappas{0.1, 0.01, 0.001};
  double horizon = 1.0;

  LaxParams lax_params() const {
    LaxParams lp;
    lp.nu = nu;
    lp.kappa = kappa;
    lp.tau0 = lax_tau0;
    lp.rho_convention = rho_convention;
    lp.exponent_frame = exponent_frame;
    lp.normalization = normalization;
    lp.alpha_inner = alpha_inner;
    return lp;
  }

  void validate() const {
    if (u.empty() || u.size() != v.size()) throw ValidationError("state.u and state.v must have equal nonzero length");
    if (multi_u.size() < 2 || multi_u.size() != multi_v.size()) {
      throw ValidationError("multi.u and multi.v must have equal length >= 2");
    }
    if (waypoints.size() < 2) throw ValidationError("path.waypoints needs at least two entries");
    if (t_waypoints.size() < 2) throw ValidationError("rational.t_waypoints needs at least two entries");
    if (samples < 2) throw ValidationError("path.samples must be >= 2");
    if (!(rtol > 0.0) || !(atol > 0.0)) throw ValidationError("path.rtol and path.atol must be positive");
    if (!(max_step > 0.0)) throw ValidationError("path.max_step must be positive");
    if (!(kappa != 0.0)) throw ValidationError("model.kappa must be nonzero");
    if (!(lax_tau0.imag() >= kMinImTau)) throw ValidationError("lax.tau0 must have Im >= 0.05");
    if (!(calogero_tau0.imag() >= kMinImTau)) throw ValidationError("calogero.tau0 must have Im >= 0.05");
    if (!(dt > 0.0)) throw ValidationError("calogero.dt must be positive");
    if (nsteps < 1 || record_every < 1) throw ValidationError("calogero.nsteps and record_every must be >= 1");
    if (fe_samples < 1) throw ValidationError("lax.fe_samples must be >= 1");
    if (!(stencil_h > 0.0)) throw ValidationError("lax.stencil_h must be positive");
    if (!(horizon > 0.0)) throw ValidationError("calogero.horizon must be positive");
  }
};

namespace detail {

using Setter = std::function<bool(RunConfig&, const std::string&)>;

inline bool set_complex(cplx& dst, const std::string& v) { return parse_complex(v, dst); }

inline bool set_complex_list(std::vector<cplx>& dst, const std::string& v) {
  std::vector<cplx> out;
  for (const auto& item : split_list(v)) {
    cplx z;
    if (!parse_complex(item, z)) return false;
    out.push_back(z);
  }
  dst = std::move(out);
  return true;
}

inline bool set_double(double& dst, const std::string& v) {
  double d;
  if (!parse_double_strict(v, d) || std::isnan(d)) return false;
  dst = d;
  return true;
}

template <class Int>
inline bool set_int(Int& dst, const std::string& v) {
  double d;
  if (!parse_double_strict(v, d) || d != std::floor(d) || std::abs(d) > 9e15) return false;
  dst = static_cast<Int>(d);
  return true;
}

inline bool set_bool(bool& dst, const std::string& v) {
  if (v == "true" || v == "1") return dst = true, true;
  if (v == "false" || v == "0") return dst = false, true;
  return false;
}

template <class Enum>
inline std::function<bool(RunConfig&, const std::string&)> enum_setter(Enum RunConfig::*field,
                                                                       Enum (*conv)(const std::string&)) {
  return [field, conv](RunConfig& c, const std::string& v) {
    c.*field = conv(v);
    return true;
  };
}

inline const std::map<std::string, Setter>& config_setters() {
  static const std::map<std::string, Setter> table = {
      {"seed", [](RunConfig& c, const std::string& v) { return set_int(c.seed, v); }},
      {"model.alpha_vec",
       [](RunConfig& c, const std::string& v) {
         std::vector<cplx> a;
         if (!set_complex_list(a, v) || a.size() != 4) return false;
         std::copy(a.begin(), a.end(), c.alpha_vec.begin());
         return true;
       }},
      {"model.nu", [](RunConfig& c, const std::string& v) { return set_complex(c.nu, v); }},
      {"model.kappa", [](RunConfig& c, const std::string& v) { return set_double(c.kappa, v); }},
      {"state.u", [](RunConfig& c, const std::string& v) { return set_complex_list(c.u, v); }},
      {"state.v", [](RunConfig& c, const std::string& v) { return set_complex_list(c.v, v); }},
      {"state.centered", [](RunConfig& c, const std::string& v) { return set_bool(c.centered, v); }},
      {"multi.u", [](RunConfig& c, const std::string& v) { return set_complex_list(c.multi_u, v); }},
      {"multi.v", [](RunConfig& c, const std::string& v) { return set_complex_list(c.multi_v, v); }},
      {"path.waypoints", [](RunConfig& c, const std::string& v) { return set_complex_list(c.waypoints, v); }},
      {"path.samples", [](RunConfig& c, const std::string& v) { return set_int(c.samples, v); }},
      {"path.rtol", [](RunConfig& c, const std::string& v) { return set_double(c.rtol, v); }},
      {"path.atol", [](RunConfig& c, const std::string& v) { return set_double(c.atol, v); }},
      {"path.max_step", [](RunConfig& c, const std::string& v) { return set_double(c.max_step, v); }},
      {"rational.X0", [](RunConfig& c, const std::string& v) { return set_complex(c.X0, v); }},
      {"rational.Xdot0", [](RunConfig& c, const std::string& v) { return set_complex(c.Xdot0, v); }},
      {"rational.t_waypoints", [](RunConfig& c, const std::string& v) { return set_complex_list(c.t_waypoints, v); }},
      {"lax.tau0", [](RunConfig& c, const std::string& v) { return set_complex(c.lax_tau0, v); }},
      {"lax.rho_convention", enum_setter(&RunConfig::rho_convention, &rho_convention_from_string)},
      {"lax.exponent_frame", enum_setter(&RunConfig::exponent_frame, &exponent_frame_from_string)},
      {"lax.normalization", enum_setter(&RunConfig::normalization, &normalization_from_string)},
      {"lax.alpha_inner", [](RunConfig& c, const std::string& v) { return set_complex(c.alpha_inner, v); }},
      {"lax.probes", [](RunConfig& c, const std::string& v) { return set_complex_list(c.probes, v); }},
      {"lax.fe_samples", [](RunConfig& c, const std::string& v) { return set_int(c.fe_samples, v); }},
      {"lax.stencil_h", [](RunConfig& c, const std::string& v) { return set_double(c.stencil_h, v); }},
      {"calogero.tau0", [](RunConfig& c, const std::string& v) { return set_complex(c.calogero_tau0, v); }},
      {"calogero.dt", [](RunConfig& c, const std::string& v) { return set_double(c.dt, v); }},
      {"calogero.nsteps", [](RunConfig& c, const std::string& v) { return set_int(c.nsteps, v); }},
      {"calogero.record_every", [](RunConfig& c, const std::string& v) { return set_int(c.record_every, v); }},
      {"calogero.kappas",
       [](RunConfig& c, const std::string& v) {
         std::vector<double> out;
         for (const auto& item : split_list(v)) {
           double d;
           if (!parse_double_strict(item, d)) return false;
           out.push_back(d);
         }
         c.kappas = std::move(out);
         return true;
       }},
      {"calogero.horizon", [](RunConfig& c, const std::string& v) { return set_double(c.horizon, v); }},
  };
  return table;
}

}  // namespace detail

/// Parses configuration text. Malformed lines and values raise ParseError
/// with the line number; unknown keys and invalid settings raise
/// ValidationError naming the key.
inline RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  const auto& setters = detail::config_setters();
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(lineno, "unterminated section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ParseError(lineno, "empty section name");
      static const char* known[] = {"model", "state", "multi", "path", "rational", "lax", "calogero"};
      if (std::find(std::begin(known), std::end(known), section) == std::end(known)) {
        throw ValidationError("unknown section '" + section + "'");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(lineno, "expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(lineno, "missing key");
    const std::string full = section.empty() ? key : section + "." + key;
    const auto it = setters.find(full);
    if (it == setters.end()) throw ValidationError("unknown key '" + full + "'");
    const bool ok = it->second(cfg, value);
    if (!ok) throw ParseError(lineno, "cannot parse value for '" + full + "': " + value);
  }
  cfg.validate();
  return cfg;
}

/// Configuration text that reproduces `cfg` (used by --print-defaults).
inline std::string format_config(const RunConfig& c) {
  auto list = [](const auto& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i) s += ", ";
      if constexpr (std::is_same_v<std::decay_t<decltype(xs[i])>, cplx>) {
        s += format_complex(xs[i]);
      } else {
        s += format_double(xs[i]);
      }
    }
    return s;
  };
  auto num = [](double d) { return format_double(d); };
  std::ostringstream o;
  o << "# pvi run configuration\n";
  o << "seed = " << c.seed << "\n\n";
  o << "[model]\n";
  o << "alpha_vec = " << list(c.alpha_vec) << "\n";
  o << "nu = " << format_complex(c.nu) << "\n";
  o << "kappa = " << num(c.kappa) << "\n\n";
  o << "[state]\n";
  o << "u = " << list(c.u) << "\n";
  o << "v = " << list(c.v) << "\n";
  o << "centered = " << (c.centered ? "true" : "false") << "\n\n";
  o << "[multi]\n";
  o << "u = " << list(c.multi_u) << "\n";
  o << "v = " << list(c.multi_v) << "\n\n";
  o << "[path]\n";
  o << "waypoints = " << list(c.waypoints) << "\n";
  o << "samples = " << c.samples << "\n";
  o << "rtol = " << num(c.rtol) << "\n";
  o << "atol = " << num(c.atol) << "\n";
  o << "max_step = " << num(c.max_step) << "\n\n";
  o << "[rational]\n";
  o << "X0 = " << format_complex(c.X0) << "\n";
  o << "Xdot0 = " << format_complex(c.Xdot0) << "\n";
  o << "t_waypoints = " << list(c.t_waypoints) << "\n\n";
  o << "[lax]\n";
  o << "tau0 = " << format_complex(c.lax_tau0) << "\n";
  o << "rho_convention = " << to_string(c.rho_convention) << "\n";
  o << "exponent_frame = " << to_string(c.exponent_frame) << "\n";
  o << "normalization = " << to_string(c.normalization) << "\n";
  o << "alpha_inner = " << format_complex(c.alpha_inner) << "\n";
  o << "probes = " << list(c.probes) << "\n";
  o << "fe_samples = " << c.fe_samples << "\n";
  o << "stencil_h = " << num(c.stencil_h) << "\n\n";
  o << "[calogero]\n";
  o << "tau0 = " << format_complex(c.calogero_tau0) << "\n";
  o << "dt = " << num(c.dt) << "\n";
  o << "nsteps = " << c.nsteps << "\n";
  o << "record_every = " << c.record_every << "\n";
  o << "kappas = " << list(c.kappas) << "\n";
  o << "horizon = " << num(c.horizon) << "\n";
  return o.str();
}

}  // namespace pvi
