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

// Brute-force reference backends. The integrator steps the raw differential
// dynamics with explicit Euler and never uses the engine's closed forms or its
// max-budget shortcut for the clinching set; it is slow on purpose.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "clinchlab/core.hpp"
#include "clinchlab/engine_divisible.hpp"
#include "clinchlab/engine_indivisible.hpp"
#include "clinchlab/error.hpp"
#include "clinchlab/rational.hpp"

namespace clinchlab::oracle {

struct OracleOptions {
  double step = 1e-4;      // price increment h
  int event_refine = 40;   // bisection iterations for sign-change localisation
  std::size_t sample_stride = 0;  // record every k-th step when > 0
};

struct OracleRun {
  Outcome<double> outcome;
  std::vector<divisible::AuctionState> samples;
};

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// others_i / p - S; +inf when others have budget and p = 0.
inline double complement_gap(const divisible::AuctionState& s, std::size_t i) {
  double others = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (j != i && s.active[j]) others += s.b[j];
  }
  if (s.price <= 0.0) return others > 0.0 ? kInf : -s.remaining;
  return others / s.price - s.remaining;
}

inline void recompute_clinching(divisible::AuctionState& s, double band) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    s.clinching[i] = s.active[i] && s.price > 0.0 && complement_gap(s, i) <= band;
  }
}

/// One explicit-Euler step of length tau with C frozen.
inline divisible::AuctionState euler(const divisible::AuctionState& s, double tau) {
  divisible::AuctionState out = s;
  out.price = s.price + tau;
  if (s.price <= 0.0) return out;
  double rate = s.remaining / s.price;
  double sold = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!s.clinching[i]) continue;
    out.x[i] += rate * tau;
    double pay = s.remaining * tau;
    out.paid[i] += pay;
    if (std::isfinite(out.b[i])) out.b[i] -= pay;
    sold += rate * tau;
  }
  out.remaining = s.remaining - sold;
  return out;
}

/// Smallest gap among active non-clinchers.
inline double outsider_gap(const divisible::AuctionState& s) {
  double g = kInf;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.active[i] && !s.clinching[i]) g = std::min(g, complement_gap(s, i));
  }
  return g;
}

/// delta_i = max(0, S - others_i / p) for every active bidder, from the
/// pre-clinch budgets.
inline void clinch_rule(divisible::AuctionState& s) {
  std::vector<double> delta(s.size(), 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!s.active[i]) continue;
    double others = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (j != i && s.active[j]) others += s.b[j];
    }
    double demand = s.price > 0.0 ? others / s.price : (others > 0.0 ? kInf : 0.0);
    delta[i] = std::max(0.0, s.remaining - demand);
  }
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (delta[i] <= 0.0) continue;
    s.x[i] += delta[i];
    s.paid[i] += s.price * delta[i];
    if (std::isfinite(s.b[i])) s.b[i] -= s.price * delta[i];
    s.remaining -= delta[i];
  }
}

}  // namespace detail

/// Integrates the clock auction from p = 0 with step `opts.step`.
inline OracleRun integrate_run(const ValidatedMarket<double>& market, const OracleOptions& opts = {}) {
  if (!market.divisible()) throw Error(ErrorKind::kDomainError, "oracle integrates divisible markets only");
  if (!(opts.step > 0.0)) throw Error(ErrorKind::kDomainError, "oracle step must be positive");
  const double h = opts.step;
  const double band = 5.0 * h;
  const double drift_limit = 100.0 * h;

  const auto people = market.participants();
  const std::size_t n = people.size();
  const std::size_t n0 = market.bidders().size();
  const auto& arrivals = market.arrivals();

  divisible::AuctionState s;
  s.x.assign(n, 0.0);
  s.b.assign(n, 0.0);
  s.paid.assign(n, 0.0);
  s.active.assign(n, false);
  s.clinching.assign(n, false);
  for (std::size_t i = 0; i < n0; ++i) {
    s.active[i] = true;
    s.b[i] = people[i].budget.as_double();
  }
  std::size_t next_arrival = 0;

  OracleRun run;
  std::size_t steps = 0;

  // Drops and arrivals at the current price: drops first (one bidder at a
  // time), then arrivals, then the clinch rule for whatever is left.
  auto settle_events = [&] {
    for (bool again = true; again;) {
      again = false;
      for (std::size_t k = 0; k < n; ++k) {
        if (s.active[k] && people[k].valuation <= s.price) {
          s.active[k] = false;
          s.clinching[k] = false;
          detail::clinch_rule(s);
          again = true;
          break;
        }
      }
    }
    while (next_arrival < arrivals.size() && arrivals[next_arrival].price <= s.price) {
      std::size_t who = n0 + next_arrival;
      s.active[who] = true;
      s.b[who] = people[who].budget.as_double();
      ++next_arrival;
    }
    detail::clinch_rule(s);
  };

  settle_events();
  for (;;) {
    if (s.remaining <= 1e-15) break;
    bool any_active = std::any_of(s.active.begin(), s.active.end(), [](bool a) { return a; });
    if (!any_active && next_arrival >= arrivals.size()) break;

    detail::recompute_clinching(s, band);
    for (std::size_t i = 0; i < n; ++i) {
      if (s.active[i] && s.price > 0.0 && detail::complement_gap(s, i) < -drift_limit) {
        throw Error(ErrorKind::kStepTooLarge, "oracle state drifted beyond 100 h; reduce the step");
      }
    }

    double horizon = detail::kInf;
    for (std::size_t k = 0; k < n; ++k) {
      if (s.active[k]) horizon = std::min(horizon, people[k].valuation);
    }
    if (next_arrival < arrivals.size()) horizon = std::min(horizon, arrivals[next_arrival].price);
    double tau = std::min(h, horizon - s.price);
    bool to_horizon = tau == horizon - s.price;

    divisible::AuctionState trial = detail::euler(s, tau);
    if (detail::outsider_gap(s) > 0.0 && detail::outsider_gap(trial) <= 0.0) {
      // Somebody's complement-demand equality is crossed inside the step.
      double lo = 0.0;
      double hi = tau;
      for (int it = 0; it < opts.event_refine; ++it) {
        double mid = 0.5 * (lo + hi);
        if (detail::outsider_gap(detail::euler(s, mid)) <= 0.0) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      trial = detail::euler(s, hi);
      to_horizon = false;
    }
    s = std::move(trial);
    if (to_horizon || s.price >= horizon) {
      s.price = horizon;
      settle_events();
    }
    ++steps;
    if (opts.sample_stride > 0 && steps % opts.sample_stride == 0) run.samples.push_back(s);
  }
  run.samples.push_back(s);
  run.outcome = Outcome<double>{s.x, s.paid};
  return run;
}

inline Outcome<double> integrate(const ValidatedMarket<double>& market, const OracleOptions& opts = {}) {
  return integrate_run(market, opts).outcome;
}

/// Max-norm distance between two outcomes over allocation and payment.
inline double outcome_distance(const Outcome<double>& a, const Outcome<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d = std::max(d, std::abs(a.allocation[i] - b.allocation[i]));
    d = std::max(d, std::abs(a.payment[i] - b.payment[i]));
  }
  return d;
}

/// 20 evenly spaced bids over [0, 2 v_1].
inline std::vector<double> default_bid_grid(const ValidatedMarket<double>& market, int points = 20) {
  double top = 0.0;
  for (const auto& p : market.participants()) top = std::max(top, p.valuation);
  std::vector<double> grid;
  for (int k = 0; k < points; ++k) grid.push_back(2.0 * top * k / (points - 1));
  return grid;
}

inline std::vector<Rational> default_bid_grid(const ValidatedMarket<Rational>& market, int points = 20) {
  Rational top = 0;
  for (const auto& p : market.participants()) top = std::max(top, p.valuation);
  std::vector<Rational> grid;
  for (int k = 0; k < points; ++k) grid.push_back(Rational(2) * top * k / (points - 1));
  return grid;
}

namespace detail {

/// Market with participant `i` reporting `bid` instead of its valuation.
template <class T>
Market<T> with_report(const ValidatedMarket<T>& market, std::size_t i, const T& bid) {
  Market<T> m = market.market();
  if (i < m.bidders.size()) {
    m.bidders[i].valuation = bid;
  } else {
    m.arrivals.at(i - m.bidders.size()).bidder.valuation = bid;
  }
  return m;
}

/// Moves `bid` off every other participant's valuation.
inline double untie(const ValidatedMarket<double>& market, std::size_t i, double bid) {
  auto people = market.participants();
  for (bool clash = true; clash;) {
    clash = false;
    for (std::size_t j = 0; j < people.size(); ++j) {
      if (j != i && people[j].valuation == bid) {
        bid += 1e-9 * std::max(1.0, bid);
        clash = true;
      }
    }
  }
  return bid;
}

/// Utility with payments up to ~1e-9 over budget counted as feasible; the
/// engine can overshoot an exhausted budget by rounding.
inline double float_utility(const Bidder<double>& me, double x, double pi) {
  if (!me.budget.is_unbounded() && pi > me.budget.amount() + 1e-9 * std::max(1.0, me.budget.amount())) {
    return -std::numeric_limits<double>::infinity();
  }
  return me.valuation * x - pi;
}

}  // namespace detail

/// Largest utility gain participant `i` can get by reporting a bid from
/// `grid` instead of its true valuation (divisible engine).
inline double ic_check(const ValidatedMarket<double>& market, std::size_t i, const std::vector<double>& grid,
                       divisible::EngineOptions opts = {}) {
  auto people = market.participants();
  const auto& me = people.at(i);
  auto truthful = divisible::run_auction(market, opts).outcome;
  double u_truth = detail::float_utility(me, truthful.allocation[i], truthful.payment[i]);
  double best = -std::numeric_limits<double>::infinity();
  const bool arriving = i >= market.bidders().size();
  for (double raw : grid) {
    if (arriving && raw <= market.arrivals()[i - market.bidders().size()].price) continue;
    double bid = detail::untie(market, i, raw);
    auto deviated = validate_market(detail::with_report(market, i, bid));
    auto out = divisible::run_auction(deviated, opts).outcome;
    int k = find_participant(deviated, me.id);
    auto idx = static_cast<std::size_t>(k);
    double u = detail::float_utility(me, out.allocation[idx], out.payment[idx]);
    best = std::max(best, u - u_truth);
  }
  return best;
}

/// Same for the indivisible engine, exactly.
inline Rational ic_check(const ValidatedMarket<Rational>& market, std::size_t i, const std::vector<Rational>& grid) {
  auto people = market.participants();
  const auto& me = people.at(i);
  auto truthful = indivisible::run_indivisible(market).outcome;
  auto u_truth = utility(me, truthful.allocation[i], truthful.payment[i]);
  std::optional<Rational> best;
  for (const auto& bid : grid) {
    auto deviated = validate_market(detail::with_report(market, i, bid));
    auto out = indivisible::run_indivisible(deviated).outcome;
    auto idx = static_cast<std::size_t>(find_participant(deviated, me.id));
    auto u = utility(me, out.allocation[idx], out.payment[idx]);
    if (u.infeasible) continue;  // never better than truthful, which is feasible
    Rational gain = u.value - u_truth.value;
    if (!best || gain > *best) best = gain;
  }
  return best.value_or(Rational(0));
}

}  // namespace clinchlab::oracle
