#pragma once

#include <charconv>
#include <complex>
#include <string>

namespace pvi {

/// Shortest round-trip decimal form; identical doubles give identical text.
inline std::string format_double(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

/// `re+imi` form accepted by the config parser.
inline std::string format_complex(std::complex<double> z) {
  if (z.imag() == 0.0) return format_double(z.real());
  if (z.real() == 0.0) return format_double(z.imag()) + "i";
  return format_double(z.real()) + (z.imag() < 0.0 ? "" : "+") + format_double(z.imag()) + "i";
}

}  // namespace pvi
