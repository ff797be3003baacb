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

// Structured and human-readable renderings of run results and comparison
// reports. Everything here is deterministic for a given input.

#pragma once

#include <cstdio>
#include <sstream>
#include <string>

#include "json.hpp"

#include "clinchlab/analysis.hpp"
#include "clinchlab/engine_indivisible.hpp"
#include "clinchlab/market_io.hpp"

namespace clinchlab::io {

inline json num(double v) { return std::isfinite(v) ? json(v) : json(to_string(v)); }

inline json triple_json(const IntervalReport& t) { return json{{"p_s", num(t.p_s)}, {"p_f", num(t.p_f)}, {"kappa", t.kappa}}; }

template <class T>
json metrics_json(const Metrics<T>& m) {
  if constexpr (std::is_same_v<T, double>) {
    return json{{"SW", num(m.sw)}, {"LW", num(m.lw)}, {"REV", num(m.rev)}};
  } else {
    return json{{"SW", to_string(m.sw)}, {"LW", to_string(m.lw)}, {"REV", to_string(m.rev)}};
  }
}

inline json outcome_json(const std::vector<Bidder<double>>& people, const Outcome<double>& o) {
  json rows = json::array();
  for (std::size_t i = 0; i < people.size(); ++i) {
    rows.push_back({{"id", people[i].id}, {"x", num(o.allocation[i])}, {"pi", num(o.payment[i])}});
  }
  return rows;
}

inline json outcome_json(const std::vector<Bidder<Rational>>& people, const Outcome<Rational>& o) {
  json rows = json::array();
  for (std::size_t i = 0; i < people.size(); ++i) {
    rows.push_back({{"id", people[i].id}, {"x", to_string(o.allocation[i])}, {"pi", to_string(o.payment[i])}});
  }
  return rows;
}

/// Divisible run: outcome, interval, metrics.
inline json run_report_json(const ValidatedMarket<double>& market, const divisible::RunResult& run) {
  auto people = market.participants();
  json doc;
  doc["outcome"] = outcome_json(people, run.outcome);
  doc["interval"] = triple_json(clinching_interval(run.trace));
  doc["metrics"] = metrics_json(metrics(market, run.outcome));
  doc["optimal_lw"] = num(optimal_lw(market));
  return doc;
}

inline json indivisible_report_json(const ValidatedMarket<Rational>& market,
                                    const indivisible::IndivisibleResult& result) {
  auto people = market.participants();
  json doc;
  doc["outcome"] = outcome_json(people, result.outcome);
  doc["metrics"] = metrics_json(metrics(market, result.outcome));
  doc["revenue"] = to_string(result.revenue());
  doc["kappa"] = critical_bidder(people, result.outcome, Rational(0));
  json prices = json::array();
  for (const auto& p : result.unit_prices()) prices.push_back(to_string(p));
  doc["unit_prices"] = prices;
  return doc;
}

inline std::string fixed(double v, int digits = 9) {
  if (!std::isfinite(v)) return to_string(v);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

inline std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

inline std::string run_report_table(const ValidatedMarket<double>& market, const divisible::RunResult& run) {
  std::ostringstream out;
  auto people = market.participants();
  out << pad("id", 12) << pad("valuation", 14) << pad("budget", 14) << pad("x", 14) << "pi\n";
  for (std::size_t i = 0; i < people.size(); ++i) {
    out << pad(people[i].id, 12) << pad(fixed(people[i].valuation), 14)
        << pad(fixed(people[i].budget.as_double()), 14) << pad(fixed(run.outcome.allocation[i]), 14)
        << fixed(run.outcome.payment[i]) << "\n";
  }
  auto t = clinching_interval(run.trace);
  auto m = metrics(market, run.outcome);
  out << "p_s=" << fixed(t.p_s) << " p_f=" << fixed(t.p_f) << " kappa=" << t.kappa << "\n";
  out << "SW=" << fixed(m.sw) << " LW=" << fixed(m.lw) << " REV=" << fixed(m.rev)
      << " LW*=" << fixed(optimal_lw(market)) << "\n";
  return out.str();
}

inline std::string run_report_csv(const ValidatedMarket<double>& market, const divisible::RunResult& run) {
  std::ostringstream out;
  auto people = market.participants();
  out << "id,valuation,budget,x,pi\n";
  for (std::size_t i = 0; i < people.size(); ++i) {
    out << people[i].id << "," << to_string(people[i].valuation) << "," << to_string(people[i].budget.as_double())
        << "," << to_string(run.outcome.allocation[i]) << "," << to_string(run.outcome.payment[i]) << "\n";
  }
  return out.str();
}

inline std::string indivisible_report_table(const ValidatedMarket<Rational>& market,
                                            const indivisible::IndivisibleResult& result) {
  std::ostringstream out;
  auto people = market.participants();
  out << pad("id", 12) << pad("valuation", 12) << pad("budget", 12) << pad("units", 8) << "pi\n";
  for (std::size_t i = 0; i < people.size(); ++i) {
    std::string budget = people[i].budget.is_unbounded() ? "inf" : to_string(people[i].budget.amount());
    out << pad(people[i].id, 12) << pad(to_string(people[i].valuation), 12) << pad(budget, 12)
        << pad(to_string(result.outcome.allocation[i]), 8) << to_string(result.outcome.payment[i]) << "\n";
  }
  auto m = metrics(market, result.outcome);
  out << "SW=" << to_string(m.sw) << " LW=" << to_string(m.lw) << " REV=" << to_string(m.rev) << "\n";
  return out.str();
}

inline std::string indivisible_report_csv(const ValidatedMarket<Rational>& market,
                                          const indivisible::IndivisibleResult& result) {
  std::ostringstream out;
  auto people = market.participants();
  out << "id,valuation,budget,units,pi\n";
  for (std::size_t i = 0; i < people.size(); ++i) {
    std::string budget = people[i].budget.is_unbounded() ? "inf" : to_string(people[i].budget.amount());
    out << people[i].id << "," << to_string(people[i].valuation) << "," << budget << ","
        << to_string(result.outcome.allocation[i]) << "," << to_string(result.outcome.payment[i]) << "\n";
  }
  return out.str();
}

inline json comparison_json(const ComparisonReport& r) {
  json doc;
  doc["kind"] = r.kind;
  doc["epsilon"] = r.epsilon;
  doc["base_market"] = market_to_json(r.base_market);
  doc["augmented_market"] = market_to_json(r.augmented_market);
  doc["base"] = outcome_json(r.base_participants(), r.base);
  doc["augmented"] = outcome_json(r.augmented_participants(), r.augmented);
  json deltas = json::array();
  auto base_people = r.base_participants();
  for (std::size_t i = 0; i < base_people.size(); ++i) {
    deltas.push_back({{"id", base_people[i].id}, {"dx", num(r.delta_x(i))}, {"dpi", num(r.delta_pi(i))}});
  }
  doc["deltas"] = deltas;
  doc["base_metrics"] = metrics_json(r.base_metrics());
  doc["augmented_metrics"] = metrics_json(r.augmented_metrics());
  doc["dSW"] = num(r.delta_sw());
  doc["dLW"] = num(r.delta_lw());
  doc["dREV"] = num(r.delta_rev());
  doc["case"] = r.case_label ? json(case_label_name(*r.case_label)) : json(nullptr);
  doc["base_triple"] = triple_json(r.base_triple);
  doc["measured_triple"] = triple_json(r.measured_triple);
  doc["predicted_triple"] = r.predicted_triple ? triple_json(*r.predicted_triple) : json(nullptr);
  json verdicts = json::object();
  for (const auto& [name, v] : r.verdicts) verdicts[name] = verdict_name(v);
  doc["verdicts"] = verdicts;
  return doc;
}

inline std::string comparison_table(const ComparisonReport& r) {
  std::ostringstream out;
  out << "comparison: " << r.kind << "\n";
  out << pad("id", 12) << pad("x", 14) << pad("x~", 14) << pad("dx", 14) << pad("pi", 14) << pad("pi~", 14)
      << "dpi\n";
  auto base_people = r.base_participants();
  auto aug_people = r.augmented_participants();
  std::vector<bool> seen(aug_people.size(), false);
  for (std::size_t i = 0; i < base_people.size(); ++i) {
    std::size_t j = r.augmented_index(i);
    seen[j] = true;
    out << pad(base_people[i].id, 12) << pad(fixed(r.base.allocation[i]), 14) << pad(fixed(r.augmented.allocation[j]), 14)
        << pad(fixed(r.delta_x(i)), 14) << pad(fixed(r.base.payment[i]), 14) << pad(fixed(r.augmented.payment[j]), 14)
        << fixed(r.delta_pi(i)) << "\n";
  }
  for (std::size_t j = 0; j < aug_people.size(); ++j) {
    if (seen[j]) continue;
    out << pad(aug_people[j].id + " (new)", 12) << pad("-", 14) << pad(fixed(r.augmented.allocation[j]), 14)
        << pad("-", 14) << pad("-", 14) << pad(fixed(r.augmented.payment[j]), 14) << "-\n";
  }
  auto bm = r.base_metrics();
  auto am = r.augmented_metrics();
  out << "SW  " << fixed(bm.sw) << " -> " << fixed(am.sw) << "  (" << fixed(r.delta_sw()) << ")\n";
  out << "LW  " << fixed(bm.lw) << " -> " << fixed(am.lw) << "  (" << fixed(r.delta_lw()) << ")\n";
  out << "REV " << fixed(bm.rev) << " -> " << fixed(am.rev) << "  (" << fixed(r.delta_rev()) << ")\n";
  auto triple = [](const IntervalReport& t) {
    return "(" + fixed(t.p_s) + ", " + fixed(t.p_f) + ", " + std::to_string(t.kappa) + ")";
  };
  out << "base triple      " << triple(r.base_triple) << "\n";
  out << "measured triple  " << triple(r.measured_triple) << "\n";
  if (r.predicted_triple) out << "predicted triple " << triple(*r.predicted_triple) << "\n";
  if (r.case_label) out << "case " << case_label_name(*r.case_label) << "\n";
  for (const auto& [name, v] : r.verdicts) out << pad(name, 24) << verdict_name(v) << "\n";
  return out.str();
}

}  // namespace clinchlab::io
