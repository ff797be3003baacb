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

// Tabular trace export. One row per sampled price: (p, S, x_1..x_n, b_1..b_n,
// active mask, clinching mask). Masks are strings of 0/1 in participant order.

#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "clinchlab/engine_divisible.hpp"
#include "clinchlab/engine_indivisible.hpp"
#include "clinchlab/rational.hpp"

namespace clinchlab::io {

struct TraceRow {
  double price = 0.0;
  double remaining = 0.0;
  std::vector<double> x;
  std::vector<double> b;
  std::string active;
  std::string clinching;
};

inline std::string mask(const std::vector<bool>& bits) {
  std::string out;
  for (bool bit : bits) out.push_back(bit ? '1' : '0');
  return out;
}

inline TraceRow row_of(const divisible::AuctionState& s) {
  return TraceRow{s.price, s.remaining, s.x, s.b, mask(s.active), mask(s.clinching)};
}

/// Rows at every segment boundary plus `samples` interior points per segment,
/// then the final state.
inline std::vector<TraceRow> trace_rows(const divisible::Trace& trace, int samples = 16) {
  std::vector<TraceRow> rows;
  rows.push_back(row_of(trace.initial));
  for (const auto& seg : trace.segments) {
    rows.push_back(row_of(seg.start));
    const double p0 = seg.law.p0;
    const double p1 = seg.end_price;
    for (int k = 1; k <= samples; ++k) {
      double p = p0 + (p1 - p0) * k / (samples + 1);
      if (p > p0 && p < p1) rows.push_back(row_of(divisible::segment_evolve(seg.law, seg.start, p)));
    }
    rows.push_back(row_of(seg.end));
  }
  rows.push_back(row_of(trace.final_state));
  return rows;
}

inline std::vector<TraceRow> state_rows(const std::vector<divisible::AuctionState>& states) {
  std::vector<TraceRow> rows;
  for (const auto& s : states) rows.push_back(row_of(s));
  return rows;
}

inline std::string trace_csv(const std::vector<TraceRow>& rows, bool with_masks = true) {
  std::ostringstream out;
  std::size_t n = rows.empty() ? 0 : rows.front().x.size();
  out << "p,S";
  for (std::size_t i = 1; i <= n; ++i) out << ",x" << i;
  for (std::size_t i = 1; i <= n; ++i) out << ",b" << i;
  if (with_masks) out << ",active,clinching";
  out << "\n";
  for (const auto& r : rows) {
    out << to_string(r.price) << "," << to_string(r.remaining);
    for (double v : r.x) out << "," << to_string(v);
    for (double v : r.b) out << "," << to_string(v);
    if (with_masks) out << "," << r.active << "," << r.clinching;
    out << "\n";
  }
  return out.str();
}

inline nlohmann::json trace_json(const std::vector<TraceRow>& rows) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(to_string(v)); };
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json xs = nlohmann::json::array();
    nlohmann::json bs = nlohmann::json::array();
    for (double v : r.x) xs.push_back(num(v));
    for (double v : r.b) bs.push_back(num(v));
    out.push_back({{"p", num(r.price)}, {"S", num(r.remaining)}, {"x", xs}, {"b", bs},
                   {"active", r.active}, {"clinching", r.clinching}});
  }
  return out;
}

/// Event list with per-bidder instantaneous clinches.
inline std::string events_csv(const divisible::Trace& trace) {
  std::ostringstream out;
  out << "p,kind,bidder,delta\n";
  for (const auto& e : trace.events) {
    out << to_string(e.price) << "," << divisible::event_kind_name(e.kind) << ",";
    if (e.bidder >= 0) out << e.bidder + 1;
    out << ",";
    for (std::size_t i = 0; i < e.delta.size(); ++i) out << (i ? ";" : "") << to_string(e.delta[i]);
    out << "\n";
  }
  return out.str();
}

/// Indivisible event log: (c, kind, bidder, delta vector, remaining units),
/// prices as exact "p/q".
inline std::string indivisible_log_csv(const indivisible::IndivisibleResult& result) {
  std::ostringstream out;
  out << "c,kind,bidder,delta,l\n";
  for (const auto& e : result.log) {
    out << to_string(e.price) << "," << indivisible::event_kind_name(e.kind) << "," << e.bidder + 1 << ",";
    for (std::size_t i = 0; i < e.delta.size(); ++i) out << (i ? ";" : "") << e.delta[i];
    out << "," << e.remaining << "\n";
  }
  return out.str();
}

}  // namespace clinchlab::io
