#pragma once

// Adaptive Gauss–Kronrod (7, 15) quadrature of complex-valued integrands on a
// real interval.

#include <array>
#include <cmath>
#include <complex>

#include "pvi/errors.hpp"

namespace pvi {

struct QuadResult {
  std::complex<double> value;
  double error;
  int evaluations;
};

namespace detail {

inline constexpr std::array<double, 8> kGkNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

// Gauss weights for the nodes kGkNodes[1], [3], [5], [7].
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
std::pair<std::complex<double>, double> gk15(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const std::complex<double> fc = f(c);
  std::complex<double> k = kKronrodWeights[7] * fc;
  std::complex<double> g = kGaussWeights[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double dx = h * kGkNodes[i];
    const std::complex<double> s = f(c - dx) + f(c + dx);
    k += kKronrodWeights[i] * s;
    if (i % 2 == 1) g += kGaussWeights[i / 2] * s;
  }
  return {k * h, std::abs((k - g) * h)};
}

template <class F>
void gk_adapt(F& f, double a, double b, double tol, int depth, QuadResult& acc) {
  const auto [val, err] = gk15(f, a, b);
  acc.evaluations += 15;
  if (!std::isfinite(val.real()) || !std::isfinite(val.imag())) throw NonFinite("quadrature integrand");
  if (err <= tol || depth >= 40) {
    acc.value += val;
    acc.error += err;
    return;
  }
  const double m = 0.5 * (a + b);
  gk_adapt(f, a, m, 0.5 * tol, depth + 1, acc);
  gk_adapt(f, m, b, 0.5 * tol, depth + 1, acc);
}

}  // namespace detail

/// ∫_a^b f(x) dx with absolute error target tol.
template <class F>
QuadResult integrate_gk(F&& f, double a, double b, double tol = 1e-13) {
  QuadResult acc{0.0, 0.0, 0};
  if (a == b) return acc;
  detail::gk_adapt(f, a, b, tol, 0, acc);
  return acc;
}

}  // namespace pvi
