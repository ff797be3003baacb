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

// Seeded scenario generators for the property campaigns. Ties in valuations
// are rejected by resampling so every market is valid for the divisible engine.

#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "clinchlab/core.hpp"
#include "clinchlab/rational.hpp"

namespace clinchlab::gen {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

namespace detail {

inline bool clashes(double v, const std::vector<double>& taken) {
  return std::find(taken.begin(), taken.end(), v) != taken.end();
}

/// Draws from [lo, hi) until the value avoids `taken`.
inline double fresh(Rng& rng, double lo, double hi, std::vector<double>& taken) {
  double v = uniform(rng, lo, hi);
  while (clashes(v, taken) || v <= 0.0) v = uniform(rng, lo, hi);
  taken.push_back(v);
  return v;
}

}  // namespace detail

struct Scenario {
  ValidatedMarket<double> market;
  Bidder<double> theta;
};

/// n in [2, 6], one budget beta in (0, 2], valuations on a scale drawn
/// relative to beta so every critical-bidder regime shows up.
inline ValidatedMarket<double> symmetric_market(Rng& rng, int n_min = 2, int n_max = 6) {
  const int n = uniform_int(rng, n_min, n_max);
  const double beta = 2.0 - uniform(rng, 0.0, 2.0);  // (0, 2]
  const double scale = beta * uniform(rng, 0.5, n + 1.0);
  Market<double> m;
  std::vector<double> taken;
  for (int i = 0; i < n; ++i) {
    double v = detail::fresh(rng, 0.0, scale, taken);
    m.bidders.push_back({"b" + std::to_string(i + 1), v, Budget<double>(beta)});
  }
  return validate_market(std::move(m));
}

/// Symmetric market plus a new bidder with the same budget.
inline Scenario symmetric_add_scenario(Rng& rng) {
  auto market = symmetric_market(rng);
  std::vector<double> taken;
  double top = 0.0;
  for (const auto& b : market.bidders()) {
    taken.push_back(b.valuation);
    top = std::max(top, b.valuation);
  }
  double beta = market.bidders().front().budget.amount();
  double v = detail::fresh(rng, 0.0, 1.25 * top, taken);
  return {market, Bidder<double>{"theta", v, Budget<double>(beta)}};
}

/// Symmetric market with 1..max_arrivals arrivals sharing the budget.
inline ValidatedMarket<double> symmetric_online_market(Rng& rng, int max_arrivals = 3) {
  auto base = symmetric_market(rng);
  Market<double> m = base.market();
  const double beta = m.bidders.front().budget.amount();
  std::vector<double> taken;
  double top = 0.0;
  for (const auto& b : m.bidders) {
    taken.push_back(b.valuation);
    top = std::max(top, b.valuation);
  }
  const int t = uniform_int(rng, 1, max_arrivals);
  std::vector<double> prices;
  for (int k = 0; k < t; ++k) {
    double g = uniform(rng, 0.0, top);
    while (g <= 0.0 || std::find(prices.begin(), prices.end(), g) != prices.end()) g = uniform(rng, 0.0, top);
    prices.push_back(g);
  }
  std::sort(prices.begin(), prices.end());
  for (int k = 0; k < t; ++k) {
    double v = detail::fresh(rng, prices[k], 1.25 * top, taken);
    while (!(v > prices[k])) v = detail::fresh(rng, prices[k], 1.25 * top, taken);
    m.arrivals.push_back({prices[k], Bidder<double>{"t" + std::to_string(k + 1), v, Budget<double>(beta)}});
  }
  return validate_market(std::move(m));
}

/// Independent budgets and valuations.
inline ValidatedMarket<double> asymmetric_market(Rng& rng, int n_min = 2, int n_max = 6, double budget_lo = 0.05,
                                                 double budget_hi = 3.0, double v_lo = 0.1, double v_hi = 5.0) {
  const int n = uniform_int(rng, n_min, n_max);
  Market<double> m;
  std::vector<double> taken;
  for (int i = 0; i < n; ++i) {
    double v = detail::fresh(rng, v_lo, v_hi, taken);
    m.bidders.push_back({"b" + std::to_string(i + 1), v, Budget<double>(uniform(rng, budget_lo, budget_hi))});
  }
  return validate_market(std::move(m));
}

inline Scenario asymmetric_add_scenario(Rng& rng) {
  auto market = asymmetric_market(rng);
  std::vector<double> taken;
  for (const auto& b : market.bidders()) taken.push_back(b.valuation);
  double v = detail::fresh(rng, 0.1, 5.0, taken);
  return {market, Bidder<double>{"theta", v, Budget<double>(uniform(rng, 0.05, 3.0))}};
}

/// Small exact instance: n in [2, 4], l in [1, 5], half-integer valuations
/// and budgets, occasionally unbounded budgets. Ties are allowed.
inline ValidatedMarket<Rational> indivisible_market(Rng& rng, int n_max = 4, int l_max = 5) {
  const int n = uniform_int(rng, 2, n_max);
  Market<Rational> m;
  m.supply = Indivisible{uniform_int(rng, 1, l_max)};
  for (int i = 0; i < n; ++i) {
    Rational v(uniform_int(rng, 1, 20), 2);
    Budget<Rational> b = uniform_int(rng, 0, 4) == 0 ? Budget<Rational>::unbounded()
                                                      : Budget<Rational>(Rational(uniform_int(rng, 1, 20), 2));
    m.bidders.push_back({"b" + std::to_string(i + 1), v, b});
  }
  return validate_market(std::move(m));
}

}  // namespace clinchlab::gen
