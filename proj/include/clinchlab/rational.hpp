// Copyright 2026 The clinchlab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <charconv>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <system_error>

#include <boost/multiprecision/cpp_int.hpp>

#include "clinchlab/error.hpp"

namespace clinchlab {

/// Arbitrary-precision exact rational.
using Rational = boost::multiprecision::cpp_rational;

inline std::string to_string(const Rational& r) {
  using boost::multiprecision::denominator;
  using boost::multiprecision::numerator;
  if (denominator(r) == 1) return numerator(r).str();
  return numerator(r).str() + "/" + denominator(r).str();
}

/// Shortest decimal text that parses back to the same double.
inline std::string to_string(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

namespace detail {

inline Rational parse_decimal(std::string_view text, std::string_view whole) {
  if (text.empty()) throw Error(ErrorKind::kParse, "empty number");
  bool negative = false;
  std::size_t i = 0;
  if (text[0] == '-' || text[0] == '+') {
    negative = text[0] == '-';
    ++i;
  }
  boost::multiprecision::cpp_int digits = 0;
  long long scale = 0;
  bool seen_digit = false;
  bool seen_point = false;
  for (; i < text.size(); ++i) {
    char ch = text[i];
    if (ch >= '0' && ch <= '9') {
      digits = digits * 10 + (ch - '0');
      if (seen_point) --scale;
      seen_digit = true;
    } else if (ch == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!seen_digit) {
    throw Error(ErrorKind::kParse, "malformed number '" + std::string(whole) + "'");
  }
  if (i < text.size()) {
    if (text[i] != 'e' && text[i] != 'E') {
      throw Error(ErrorKind::kParse, "malformed number '" + std::string(whole) + "'");
    }
    std::string_view exp_text = text.substr(i + 1);
    if (!exp_text.empty() && exp_text[0] == '+') exp_text.remove_prefix(1);
    long long exponent = 0;
    auto [ptr, ec] = std::from_chars(exp_text.data(), exp_text.data() + exp_text.size(), exponent);
    if (ec != std::errc{} || ptr != exp_text.data() + exp_text.size() || exp_text.empty() ||
        exponent > 4000 || exponent < -4000) {
      throw Error(ErrorKind::kParse, "malformed exponent in '" + std::string(whole) + "'");
    }
    scale += exponent;
  }
  Rational value(digits);
  boost::multiprecision::cpp_int ten = 10;
  if (scale > 0) value *= Rational(boost::multiprecision::pow(ten, static_cast<unsigned>(scale)));
  if (scale < 0) value /= Rational(boost::multiprecision::pow(ten, static_cast<unsigned>(-scale)));
  return negative ? Rational(-value) : value;
}

}  // namespace detail

/// Parses "p/q", an integer, or a decimal (optionally with exponent) exactly.
inline Rational parse_rational(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  auto slash = text.find('/');
  if (slash == std::string_view::npos) return detail::parse_decimal(text, text);
  Rational num = detail::parse_decimal(text.substr(0, slash), text);
  Rational den = detail::parse_decimal(text.substr(slash + 1), text);
  if (den == 0) throw Error(ErrorKind::kParse, "zero denominator in '" + std::string(text) + "'");
  return num / den;
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

}  // namespace clinchlab
