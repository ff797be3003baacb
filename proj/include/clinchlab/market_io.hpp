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

// Market documents:
//
//   {"supply": {"divisible": true} | {"units": 4},
//    "bidders": [{"id": "a", "valuation": 4, "budget": 1 | "inf"}, ...],
//    "arrivals": [{"price": 1.5, "id": "t", "valuation": 2.5, "budget": 1}]}
//
// Numbers may be JSON numbers or strings holding "p/q" or a decimal. JSON
// numbers are kept as their source text so decimals convert exactly.

#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "clinchlab/core.hpp"
#include "clinchlab/error.hpp"
#include "clinchlab/rational.hpp"

namespace clinchlab::io {

using json = nlohmann::json;

namespace detail {

/// DOM builder that stores every number as its literal text.
class ExactSax : public nlohmann::json_sax<json> {
 public:
  explicit ExactSax(std::string_view text, std::string source) : text_(text), source_(std::move(source)) {}

  json take() { return std::move(root_); }

  bool null() override { return put(nullptr); }
  bool boolean(bool v) override { return put(v); }
  bool number_integer(number_integer_t v) override { return put(std::to_string(v)); }
  bool number_unsigned(number_unsigned_t v) override { return put(std::to_string(v)); }
  bool number_float(number_float_t, const string_t& s) override { return put(s); }
  bool string(string_t& v) override { return put(v); }
  bool binary(binary_t&) override { return put(nullptr); }
  bool start_object(std::size_t) override { return open(json::object()); }
  bool end_object() override { return close(); }
  bool start_array(std::size_t) override { return open(json::array()); }
  bool end_array() override { return close(); }
  bool key(string_t& k) override {
    key_ = k;
    return true;
  }

  bool parse_error(std::size_t position, const std::string& token, const nlohmann::detail::exception& ex) override {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i + 1 < position && i < text_.size(); ++i) {
      if (text_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string what = ex.what();
    throw Error(ErrorKind::kParse, source_ + ":" + std::to_string(line) + ":" + std::to_string(col) +
                                       ": malformed JSON near '" + token + "' (" + what + ")");
  }

 private:
  json* place(json v) {
    if (stack_.empty()) {
      root_ = std::move(v);
      return &root_;
    }
    json& top = *stack_.back();
    if (top.is_array()) {
      top.push_back(std::move(v));
      return &top.back();
    }
    top[key_] = std::move(v);
    return &top[key_];
  }
  bool put(json v) {
    place(std::move(v));
    return true;
  }
  bool open(json v) {
    stack_.push_back(place(std::move(v)));
    return true;
  }
  bool close() {
    stack_.pop_back();
    return true;
  }

  std::string_view text_;
  std::string source_;
  json root_;
  std::vector<json*> stack_;
  std::string key_;
};

[[noreturn]] inline void fail(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::kParse, where + ": " + what);
}

inline const json& field(const json& obj, const char* name, const std::string& where) {
  if (!obj.is_object()) fail(where, "expected an object");
  auto it = obj.find(name);
  if (it == obj.end()) fail(where, std::string("missing field '") + name + "'");
  return *it;
}

inline Rational number(const json& v, const std::string& where) {
  if (!v.is_string()) fail(where, "expected a number");
  try {
    return parse_rational(v.get<std::string>());
  } catch (const Error& e) {
    fail(where, e.what());
  }
}

inline bool is_unbounded_text(const std::string& s) {
  return s == "inf" || s == "Infinity" || s == "infinity" || s == "unbounded";
}

inline Budget<Rational> budget(const json& v, const std::string& where) {
  if (v.is_string() && is_unbounded_text(v.get<std::string>())) return Budget<Rational>::unbounded();
  return Budget<Rational>(number(v, where));
}

inline std::string id_of(const json& obj, const std::string& fallback) {
  auto it = obj.find("id");
  if (it == obj.end()) return fallback;
  if (!it->is_string()) fail(fallback, "id must be a string or number");
  return it->get<std::string>();
}

inline Bidder<Rational> bidder(const json& obj, const std::string& where, const std::string& default_id) {
  Bidder<Rational> b;
  b.id = id_of(obj, default_id);
  b.valuation = number(field(obj, "valuation", where), where + "/valuation");
  b.budget = budget(field(obj, "budget", where), where + "/budget");
  return b;
}

}  // namespace detail

/// Parses JSON text, keeping numbers as strings. Syntax errors carry
/// source:line:column.
inline json parse_json_exact(std::string_view text, const std::string& source = "<input>") {
  detail::ExactSax sax(text, source);
  json::sax_parse(text.begin(), text.end(), &sax);
  return sax.take();
}

inline Bidder<Rational> bidder_from_json(const json& obj, const std::string& where = "bidder") {
  return detail::bidder(obj, where, "theta");
}

inline Market<Rational> market_from_json(const json& doc, const std::string& source = "<input>") {
  Market<Rational> m;
  if (!doc.is_object()) detail::fail(source, "market document must be an object");

  auto sup = doc.find("supply");
  if (sup == doc.end()) {
    m.supply = Divisible{};
  } else {
    std::string where = source + ": /supply";
    if (!sup->is_object()) detail::fail(where, "expected an object");
    if (sup->contains("units")) {
      Rational u = detail::number((*sup)["units"], where + "/units");
      if (boost::multiprecision::denominator(u) != 1) detail::fail(where + "/units", "units must be an integer");
      m.supply = Indivisible{numerator(u).convert_to<std::int64_t>()};
    } else if (sup->contains("divisible")) {
      const auto& flag = (*sup)["divisible"];
      if (!flag.is_boolean() || !flag.get<bool>()) detail::fail(where, "'divisible' must be true");
      m.supply = Divisible{};
    } else {
      detail::fail(where, "expected 'divisible' or 'units'");
    }
  }

  const json& list = detail::field(doc, "bidders", source);
  if (!list.is_array() || list.empty()) detail::fail(source + ": /bidders", "bidder list must be a non-empty array");
  for (std::size_t i = 0; i < list.size(); ++i) {
    std::string where = source + ": /bidders/" + std::to_string(i);
    m.bidders.push_back(detail::bidder(list[i], where, std::to_string(i + 1)));
  }

  auto arr = doc.find("arrivals");
  if (arr != doc.end() && !arr->is_null()) {
    if (!arr->is_array()) detail::fail(source + ": /arrivals", "expected an array");
    for (std::size_t k = 0; k < arr->size(); ++k) {
      std::string where = source + ": /arrivals/" + std::to_string(k);
      const json& a = (*arr)[k];
      Arrival<Rational> out;
      out.price = detail::number(detail::field(a, "price", where), where + "/price");
      out.bidder = detail::bidder(a, where, "theta" + std::to_string(k + 1));
      m.arrivals.push_back(std::move(out));
    }
  }
  return m;
}

inline Market<Rational> parse_market(std::string_view text, const std::string& source = "<input>") {
  return market_from_json(parse_json_exact(text, source), source);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kParse, path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Market<Rational> load_market(const std::string& path) { return parse_market(read_file(path), path); }

inline std::string number_text(const Rational& v) { return to_string(v); }
inline std::string number_text(double v) { return to_string(v); }

template <class T>
json budget_to_json(const Budget<T>& b) {
  return b.is_unbounded() ? json("inf") : json(number_text(b.amount()));
}

template <class T>
json bidder_to_json(const Bidder<T>& b) {
  return json{{"id", b.id}, {"valuation", number_text(b.valuation)}, {"budget", budget_to_json(b.budget)}};
}

/// Numbers are written as strings: exact "p/q" for rationals, shortest
/// round-trip decimal for doubles.
template <class T>
json market_to_json(const Market<T>& m) {
  json doc;
  if (const auto* u = std::get_if<Indivisible>(&m.supply)) {
    doc["supply"] = json{{"units", u->units}};
  } else {
    doc["supply"] = json{{"divisible", true}};
  }
  doc["bidders"] = json::array();
  for (const auto& b : m.bidders) doc["bidders"].push_back(bidder_to_json(b));
  if (!m.arrivals.empty()) {
    doc["arrivals"] = json::array();
    for (const auto& a : m.arrivals) {
      json row = bidder_to_json(a.bidder);
      row["price"] = number_text(a.price);
      doc["arrivals"].push_back(std::move(row));
    }
  }
  return doc;
}

template <class T>
std::string serialize_market(const Market<T>& m) {
  return market_to_json(m).dump(2) + "\n";
}

/// Markets for the floating-point engine.
inline Market<double> to_double_market(const Market<Rational>& m) { return market_cast<double>(m); }

}  // namespace clinchlab::io
