#pragma once

#include <charconv>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "repcalc/errors.hpp"

namespace repcalc {

using Complex = std::complex<double>;
using RVector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
inline const Complex kComplexNaN{kNaN, kNaN};

inline bool is_nan(const Complex& z) { return std::isnan(z.real()) || std::isnan(z.imag()); }

inline bool any_nan(const CVector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (is_nan(v[i])) return true;
  return false;
}

inline bool all_finite(const CVector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i].real()) || !std::isfinite(v[i].imag())) return false;
  return true;
}

inline CVector nan_vector(Eigen::Index n) { return CVector::Constant(n, kComplexNaN); }

/// Shortest decimal form that round-trips (up to 17 significant digits).
inline std::string format_real(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// "a", "a+bi" or "a-bi" with full precision.
inline std::string format_complex(const Complex& z) {
  if (z.imag() == 0.0 && !std::signbit(z.imag())) return format_real(z.real());
  std::string out = format_real(z.real());
  if (std::signbit(z.imag()) || std::isnan(z.imag())) {
    out += format_real(z.imag());
  } else {
    out += "+" + format_real(z.imag());
  }
  return out + "i";
}

namespace detail {

inline double parse_double_strict(std::string_view s, std::string_view whole) {
  if (s.empty()) throw UsageError("malformed number '" + std::string(whole) + "'");
  if (s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw UsageError("malformed number '" + std::string(whole) + "'");
  return value;
}

}  // namespace detail

/// Parses "1.5", "-2i", "i", "0.5+1.2i", "1e-3-2.5e+1i".
inline Complex parse_complex(std::string_view text) {
  std::string_view s = text;
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (s.empty()) throw UsageError("empty complex literal");
  if (s.back() != 'i' && s.back() != 'j') return {detail::parse_double_strict(s, text), 0.0};

  s.remove_suffix(1);
  // split point: last sign that is not leading and not an exponent sign
  std::size_t split = std::string_view::npos;
  for (std::size_t k = s.size(); k-- > 1;) {
    if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
      split = k;
      break;
    }
  }
  auto imag_part = [&](std::string_view im) -> double {
    if (im.empty() || im == "+") return 1.0;
    if (im == "-") return -1.0;
    return detail::parse_double_strict(im, text);
  };
  if (split == std::string_view::npos) return {0.0, imag_part(s)};
  return {detail::parse_double_strict(s.substr(0, split), text), imag_part(s.substr(split))};
}

}  // namespace repcalc
