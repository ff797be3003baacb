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

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "clinchlab/core.hpp"
#include "clinchlab/error.hpp"
#include "clinchlab/rational.hpp"

namespace clinchlab::indivisible {

enum class EventKind { kDrop, kDemandTouch };

inline const char* event_kind_name(EventKind k) { return k == EventKind::kDrop ? "Drop" : "DemandTouch"; }

/// One pass of an inner loop: the trigger, then the clinch sweep it caused.
struct LogEntry {
  Rational price;
  EventKind kind = EventKind::kDrop;
  std::size_t bidder = 0;
  std::vector<std::int64_t> delta;
  std::int64_t remaining = 0;  // units left after the sweep
};

/// Algorithm state: clock, integer allocations and demands, exact payments.
struct IndivisibleState {
  Rational clock;
  std::vector<std::int64_t> x;
  std::vector<Rational> pi;
  std::vector<std::int64_t> d;
  std::int64_t remaining = 0;
};

struct IndivisibleResult {
  Outcome<Rational> outcome;
  std::vector<LogEntry> log;
  IndivisibleState final_state;

  /// Price paid for every unit in clinch order (weakly increasing).
  std::vector<Rational> unit_prices() const {
    std::vector<Rational> out;
    for (const auto& e : log) {
      for (auto q : e.delta) {
        for (std::int64_t u = 0; u < q; ++u) out.push_back(e.price);
      }
    }
    return out;
  }

  Rational revenue() const {
    Rational r = 0;
    for (const auto& p : outcome.payment) r += p;
    return r;
  }
};

namespace detail {

/// delta_i = max(l - sum_{k != i} d_k, 0) for i = 1..n in index order,
/// updating l and d_i as it goes.
inline std::vector<std::int64_t> clinch_sweep(IndivisibleState& s) {
  const std::size_t n = s.x.size();
  std::vector<std::int64_t> delta(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::int64_t others = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k != i) others += s.d[k];
    }
    std::int64_t q = std::max<std::int64_t>(s.remaining - others, 0);
    if (q == 0) continue;
    delta[i] = q;
    s.x[i] += q;
    s.pi[i] += s.clock * q;
    s.d[i] -= q;
    s.remaining -= q;
    if (s.d[i] < 0 || s.remaining < 0) {
      throw Error(ErrorKind::kInvariantViolation, "clinch sweep drove a demand or the supply negative");
    }
  }
  return delta;
}

}  // namespace detail

/// Adaptive clinching auction for `units` identical indivisible units with
/// exact arithmetic. The clinch sweep runs in index order (its result does
/// not depend on it); simultaneous drops or budget touches go in id order.
inline IndivisibleResult run_indivisible(const ValidatedMarket<Rational>& market) {
  const auto* supply = std::get_if<Indivisible>(&market.market().supply);
  if (!supply) throw Error(ErrorKind::kDomainError, "run_indivisible needs indivisible supply");
  if (supply->units < 1) throw Error(ErrorKind::kDomainError, "indivisible supply must be at least one unit");

  const auto& bidders = market.bidders();
  const std::size_t n = bidders.size();
  IndivisibleState s;
  s.clock = 0;
  s.remaining = supply->units;
  s.x.assign(n, 0);
  s.pi.assign(n, Rational(0));
  s.d.assign(n, supply->units + 1);

  std::vector<LogEntry> log;
  // Coincident events are picked by id, never by reported valuation: an
  // order that follows the bids lets a bidder reorder ties and gain a unit.
  std::vector<std::size_t> pick_order(n);
  for (std::size_t j = 0; j < n; ++j) pick_order[j] = j;
  std::stable_sort(pick_order.begin(), pick_order.end(),
                   [&](std::size_t a, std::size_t b) { return bidders[a].id < bidders[b].id; });
  auto active = [&](std::size_t j) { return s.d[j] > 0; };
  auto touches = [&](std::size_t j) {
    const auto& budget = bidders[j].budget;
    return !budget.is_unbounded() && Rational(s.d[j]) * s.clock == budget.amount() - s.pi[j];
  };

  for (;;) {
    std::optional<Rational> next;
    for (std::size_t j = 0; j < n; ++j) {
      if (!active(j)) continue;
      Rational cand = bidders[j].valuation;
      if (!bidders[j].budget.is_unbounded()) {
        Rational touch = (bidders[j].budget.amount() - s.pi[j]) / s.d[j];
        if (touch < cand) cand = touch;
      }
      if (!next || cand < *next) next = cand;
    }
    if (!next) break;
    if (*next < s.clock) throw Error(ErrorKind::kInvariantViolation, "price clock would move backwards");
    s.clock = *next;

    for (bool found = true; found;) {
      found = false;
      for (std::size_t j : pick_order) {
        if (active(j) && bidders[j].valuation == s.clock) {
          s.d[j] = 0;
          auto delta = detail::clinch_sweep(s);
          log.push_back({s.clock, EventKind::kDrop, j, std::move(delta), s.remaining});
          found = true;
          break;
        }
      }
    }
    for (bool found = true; found;) {
      found = false;
      for (std::size_t j : pick_order) {
        if (active(j) && touches(j)) {
          s.d[j] -= 1;
          auto delta = detail::clinch_sweep(s);
          log.push_back({s.clock, EventKind::kDemandTouch, j, std::move(delta), s.remaining});
          found = true;
          break;
        }
      }
    }
  }

  IndivisibleResult result;
  for (std::size_t i = 0; i < n; ++i) {
    result.outcome.allocation.push_back(Rational(s.x[i]));
    result.outcome.payment.push_back(s.pi[i]);
  }
  result.log = std::move(log);
  result.final_state = std::move(s);
  return result;
}

}  // namespace clinchlab::indivisible
