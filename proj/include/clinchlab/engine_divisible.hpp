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

// Continuous adaptive clinching auction for one divisible unit.
//
// The price clock is simulated event to event. Between two events the active
// set A and the clinching set C are constant, every clincher holds the same
// remaining budget beta, and the non-clinchers hold a constant total D. The
// clinching dynamics dx/dp = S/p, db/dp = -S with S = ((c-1) beta + D) / p
// then integrate in closed form:
//
//   c >= 2 (Power): (c-1) beta(p) + D = ((c-1) beta0 + D) (p0/p)^(c-1)
//   c == 1 (Log):   beta(p) = beta0 - D ln(p/p0)
//   c == 0 (Idle):  nothing moves
//
// so a run is exact up to the tolerance used to locate event prices.
// Events are bidder drops (at their valuation), online arrivals, clinching
// start (C empty -> nonempty) and a non-clincher joining C once the clinchers'
// budget has fallen to its own.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clinchlab/core.hpp"
#include "clinchlab/error.hpp"

namespace clinchlab::divisible {

inline constexpr double kRootTolerance = 1e-12;
inline constexpr double kOutcomeTolerance = 1e-9;
inline constexpr double kInvariantTolerance = 1e-9;

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
// Relative slack for "equality" in the clinching condition after a closed-form step.
inline constexpr double kMembershipSlack = 1e-11;
// Remaining supply below this is treated as sold out.
inline constexpr double kExhaustedSupply = 1e-12;

inline double scale(double v) { return std::max(1.0, std::abs(v)); }

}  // namespace detail

/// Live state of the clock auction at `price`. Vectors are indexed by
/// participant (initial bidders, then arrivals); bidders that have not arrived
/// yet are simply inactive with zero allocation.
struct AuctionState {
  double price = 0.0;
  std::vector<double> x;      // allocated quantity x_i(p)
  std::vector<double> b;      // remaining budget b_i(p); +inf when unbounded
  std::vector<double> paid;   // B_i - b_i(p), tracked separately so it stays finite
  std::vector<bool> active;   // A(p)
  std::vector<bool> clinching;  // C(p)
  double remaining = 1.0;     // S(p)

  std::size_t size() const { return x.size(); }

  /// Sum of remaining budgets of active bidders other than `i`.
  double others_budget(std::size_t i) const {
    double sum = 0.0;
    for (std::size_t j = 0; j < size(); ++j) {
      if (j != i && active[j]) sum += b[j];
    }
    return sum;
  }

  /// Total demand of everybody but `i` at the current price.
  double others_demand(std::size_t i) const {
    double others = others_budget(i);
    if (price <= 0.0) return others > 0.0 ? detail::kInf : 0.0;
    return others / price;
  }

  std::size_t active_count() const { return static_cast<std::size_t>(std::count(active.begin(), active.end(), true)); }
  std::size_t clinching_count() const {
    return static_cast<std::size_t>(std::count(clinching.begin(), clinching.end(), true));
  }
  bool any_clinching() const { return clinching_count() > 0; }
};

enum class LawKind { kIdle, kLog, kPower };

inline const char* law_kind_name(LawKind k) {
  switch (k) {
    case LawKind::kIdle: return "idle";
    case LawKind::kLog: return "log";
    case LawKind::kPower: return "power";
  }
  return "?";
}

/// Closed-form evolution on one interval with constant A and C.
struct SegmentLaw {
  double p0 = 0.0;
  int c = 0;           // |C|
  double D = 0.0;      // total budget of active non-clinchers
  double beta0 = 0.0;  // common clincher budget at p0

  LawKind kind() const {
    if (c <= 0) return LawKind::kIdle;
    return c == 1 ? LawKind::kLog : LawKind::kPower;
  }

  /// Clincher budget at p >= p0.
  double beta(double p) const {
    switch (kind()) {
      case LawKind::kIdle:
        return beta0;
      case LawKind::kLog:
        return beta0 - D * std::log(p / p0);
      case LawKind::kPower: {
        double k = c - 1;
        double y0 = k * beta0 + D;
        return (y0 * std::pow(p0 / p, k) - D) / k;
      }
    }
    return beta0;
  }

  /// S(p) implied by the clinching equality; Idle returns `idle_remaining`.
  double remaining(double p, double idle_remaining) const {
    switch (kind()) {
      case LawKind::kIdle:
        return idle_remaining;
      case LawKind::kLog:
        return D / p;
      case LawKind::kPower: {
        double k = c - 1;
        return (k * beta0 + D) * std::pow(p0 / p, k) / p;
      }
    }
    return idle_remaining;
  }

  /// Quantity each clincher gains on [p0, p1]: the integral of S(q)/q.
  double clincher_gain(double p1) const {
    switch (kind()) {
      case LawKind::kIdle:
        return 0.0;
      case LawKind::kLog:
        return D * (1.0 / p0 - 1.0 / p1);
      case LawKind::kPower: {
        double k = c - 1;
        double y0 = k * beta0 + D;
        // y0 p0^(c-1) (p0^-c - p1^-c) / c, written to avoid cancellation near p1 = p0.
        return -(y0 / p0) * std::expm1(c * std::log(p0 / p1)) / c;
      }
    }
    return 0.0;
  }

  /// Money each clincher pays on [p0, p1]: the integral of S(q).
  double clincher_payment(double p1) const {
    switch (kind()) {
      case LawKind::kIdle:
        return 0.0;
      case LawKind::kLog:
        return D * std::log(p1 / p0);
      case LawKind::kPower: {
        double k = c - 1;
        double y0 = k * beta0 + D;
        return -y0 * std::expm1(k * std::log(p0 / p1)) / k;
      }
    }
    return 0.0;
  }
};

/// Builds the law for the interval starting at `state`.
inline SegmentLaw make_law(const AuctionState& state) {
  SegmentLaw law;
  law.p0 = state.price;
  double beta = -detail::kInf;
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (!state.active[i]) continue;
    if (state.clinching[i]) {
      ++law.c;
      beta = std::max(beta, state.b[i]);
    } else {
      law.D += state.b[i];
    }
  }
  law.beta0 = law.c > 0 ? beta : 0.0;
  return law;
}

/// Advances `state` to `p1` along `law`. No event may occur inside (p0, p1).
inline AuctionState segment_evolve(const SegmentLaw& law, const AuctionState& state, double p1) {
  if (p1 < law.p0) throw Error(ErrorKind::kDomainError, "segment end precedes its start");
  AuctionState next = state;
  if (p1 == law.p0) return next;
  next.price = p1;
  if (law.kind() == LawKind::kIdle) return next;
  if (law.p0 <= 0.0) throw Error(ErrorKind::kDomainError, "clinching segment must start at a positive price");

  double gain = law.clincher_gain(p1);
  double pay = law.clincher_payment(p1);
  double beta1 = law.beta(p1);
  for (std::size_t i = 0; i < next.size(); ++i) {
    if (!next.active[i] || !next.clinching[i]) continue;
    next.x[i] += gain;
    next.paid[i] += pay;
    next.b[i] = std::isinf(next.b[i]) ? next.b[i] : std::max(0.0, beta1);
  }
  next.remaining = std::max(0.0, law.remaining(p1, state.remaining));
  return next;
}

/// Wishful allocation x_i + b_i/p.
inline double wishful_allocation(const AuctionState& state, std::size_t i) {
  if (state.price <= 0.0) throw Error(ErrorKind::kDomainError, "wishful allocation needs a positive price");
  return state.x[i] + state.b[i] / state.price;
}

/// Smallest price at which some active bidder's complement demand falls to
/// the remaining supply when nobody is clinching: (sum b - max b) / S.
inline double clinch_start_price(const AuctionState& state) {
  if (state.remaining <= 0.0) return detail::kInf;
  std::optional<std::size_t> top;
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (state.active[i] && (!top || state.b[i] > state.b[*top])) top = i;
  }
  if (!top) return detail::kInf;
  return state.others_budget(*top) / state.remaining;
}

/// Price at which the clinchers' budget under `law` falls to `outsider_budget`.
/// Closed form, then a bracket check with bisection fallback.
inline double join_clinch_price(const SegmentLaw& law, double outsider_budget) {
  if (law.kind() == LawKind::kIdle || !(outsider_budget < law.beta0)) {
    return outsider_budget >= law.beta0 && law.kind() != LawKind::kIdle ? law.p0 : detail::kInf;
  }
  double root = detail::kInf;
  if (law.kind() == LawKind::kLog) {
    if (law.D <= 0.0) return detail::kInf;
    root = law.p0 * std::exp((law.beta0 - outsider_budget) / law.D);
  } else {
    double k = law.c - 1;
    double target = k * outsider_budget + law.D;
    if (target <= 0.0) return detail::kInf;
    root = law.p0 * std::pow((k * law.beta0 + law.D) / target, 1.0 / k);
  }
  if (!std::isfinite(root)) return detail::kInf;

  auto f = [&](double p) { return law.beta(p) - outsider_budget; };
  double lo = root * (1.0 - 4 * kRootTolerance);
  double hi = root * (1.0 + 4 * kRootTolerance);
  lo = std::max(lo, law.p0);
  if (f(lo) >= 0.0 && f(hi) <= 0.0) return root;

  // Closed form landed outside a tight bracket: bisect on [p0, hi'] instead.
  lo = law.p0;
  hi = std::max(root, law.p0) * 2.0;
  int grow = 0;
  while (f(hi) > 0.0) {
    hi *= 2.0;
    if (++grow > 200) throw Error(ErrorKind::kNumericalFailure, "cannot bracket join-clinch root");
  }
  if (f(lo) < 0.0) return law.p0;
  for (int it = 0; it < 200 && hi - lo > kRootTolerance * detail::scale(hi); ++it) {
    double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  if (hi - lo > kRootTolerance * detail::scale(hi)) {
    throw Error(ErrorKind::kNumericalFailure, "join-clinch root did not converge");
  }
  return hi;
}

enum class EventKind { kClinchStart, kDrop, kJoinClinch, kArrival, kExhaust };

inline const char* event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::kClinchStart: return "ClinchStart";
    case EventKind::kDrop: return "Drop";
    case EventKind::kJoinClinch: return "JoinClinch";
    case EventKind::kArrival: return "Arrival";
    case EventKind::kExhaust: return "Exhaust";
  }
  return "?";
}

struct PendingEvent {
  double price = detail::kInf;
  EventKind kind = EventKind::kExhaust;
  int bidder = -1;
};

/// Recomputes C from its defining condition S = sum_{j in A\i} b_j / p
/// (within a relative slack) and equalises the clinchers' budgets.
inline void refresh_clinching(AuctionState& state) {
  std::fill(state.clinching.begin(), state.clinching.end(), false);
  if (state.price <= 0.0 || state.remaining <= 0.0) return;
  double common = -detail::kInf;
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (!state.active[i]) continue;
    double gap = state.others_demand(i) - state.remaining;
    if (gap <= detail::kMembershipSlack * detail::scale(state.remaining)) {
      state.clinching[i] = true;
      common = std::max(common, state.b[i]);
    }
  }
  if (!std::isfinite(common)) return;
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (state.clinching[i] && std::isfinite(state.b[i])) {
      state.paid[i] += state.b[i] - common;
      state.b[i] = common;
    }
  }
}

/// Marks `i` as clinching with budget `budget` (used when an event's own
/// root says it must join even if rounding left it a hair outside).
inline void force_clinching(AuctionState& state, std::size_t i, double budget) {
  state.clinching[i] = true;
  if (std::isfinite(state.b[i]) && std::isfinite(budget)) {
    state.paid[i] += state.b[i] - budget;
    state.b[i] = budget;
  }
}

/// Instantaneous clinch at the current price:
/// delta_i = max(0, S - sum_{j in A\i} b_j / p), computed for all actives
/// from the pre-step budgets. Returns the delta vector.
inline std::vector<double> apply_clinch_rule(AuctionState& state) {
  std::vector<double> delta(state.size(), 0.0);
  if (state.remaining <= 0.0) return delta;
  double total = 0.0;
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (!state.active[i]) continue;
    double d = state.remaining - state.others_demand(i);
    if (d > 0.0) {
      delta[i] = d;
      total += d;
    }
  }
  if (total > state.remaining * (1.0 + 1e-9) + detail::kExhaustedSupply) {
    throw Error(ErrorKind::kInvariantViolation,
                "instantaneous clinch would sell more than the remaining supply (no active bidder has budget?)");
  }
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (delta[i] == 0.0) continue;
    double cost = state.price * delta[i];
    if (cost > state.b[i] + kInvariantTolerance * detail::scale(state.b[i])) {
      throw Error(ErrorKind::kInvariantViolation,
                  "clinch payment exceeds remaining budget of participant " + std::to_string(i));
    }
    state.x[i] += delta[i];
    state.paid[i] += cost;
    if (std::isfinite(state.b[i])) state.b[i] = std::max(0.0, state.b[i] - cost);
  }
  state.remaining -= total;
  if (state.remaining <= detail::kExhaustedSupply) state.remaining = 0.0;
  return delta;
}

/// Bidder `k` drops at its valuation; the remaining actives clinch what the
/// others can no longer absorb. A lone survivor takes all of S.
inline std::vector<double> drop_clinch_step(AuctionState& state, std::size_t k) {
  state.active[k] = false;
  state.clinching[k] = false;
  auto delta = apply_clinch_rule(state);
  refresh_clinching(state);
  return delta;
}

/// An arriving bidder joins with its full budget; C is rebuilt from scratch
/// and typically empties. Allocations do not move.
inline void handle_arrival(AuctionState& state, std::size_t participant, double budget) {
  state.active[participant] = true;
  state.b[participant] = budget;
  refresh_clinching(state);
}

/// Earliest next event for a state/law pair. `valuations` is indexed by
/// participant; `next_arrival` is the price of the next pending arrival.
/// At equal prices: Drop, then Arrival, then ClinchStart/JoinClinch.
inline PendingEvent next_event(const AuctionState& state, const SegmentLaw& law, std::span<const double> valuations,
                               std::optional<double> next_arrival, std::optional<std::size_t> arrival_participant = {}) {
  PendingEvent best;
  if (state.remaining <= 0.0) {
    best.price = state.price;
    best.kind = EventKind::kExhaust;
    return best;
  }
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (state.active[i] && valuations[i] < best.price) {
      best = {valuations[i], EventKind::kDrop, static_cast<int>(i)};
    }
  }
  if (next_arrival && *next_arrival < best.price) {
    best = {*next_arrival, EventKind::kArrival, arrival_participant ? static_cast<int>(*arrival_participant) : -1};
  }
  if (!state.any_clinching()) {
    double p = std::max(state.price, clinch_start_price(state));
    if (p < best.price) best = {p, EventKind::kClinchStart, -1};
  } else {
    int outsider = -1;
    for (std::size_t i = 0; i < state.size(); ++i) {
      if (state.active[i] && !state.clinching[i] && (outsider < 0 || state.b[i] > state.b[outsider])) {
        outsider = static_cast<int>(i);
      }
    }
    if (outsider >= 0) {
      double p = std::max(state.price, join_clinch_price(law, state.b[outsider]));
      if (p < best.price) best = {p, EventKind::kJoinClinch, outsider};
    }
  }
  return best;
}

struct Segment {
  SegmentLaw law;
  double end_price = 0.0;
  AuctionState start;  // state at law.p0 after that price's events
  AuctionState end;    // left limit at end_price
};

struct Event {
  double price = 0.0;
  EventKind kind = EventKind::kExhaust;
  int bidder = -1;
  std::vector<double> delta;  // quantities clinched instantaneously at this event
};

/// Full record of one run: closed-form segments, the events between them,
/// and the initial and final states.
struct Trace {
  AuctionState initial;
  std::vector<Segment> segments;
  std::vector<Event> events;
  AuctionState final_state;

  /// Right-continuous state at price p.
  AuctionState state_at(double p) const {
    if (p <= 0.0 && segments.empty()) return p < final_state.price ? initial : final_state;
    for (const auto& seg : segments) {
      if (seg.law.p0 <= p && p < seg.end_price) return segment_evolve(seg.law, seg.start, p);
    }
    if (p >= final_state.price) return final_state;
    // p sits on an event boundary with no following segment yet (zero-length)
    for (auto it = segments.rbegin(); it != segments.rend(); ++it) {
      if (it->end_price <= p) return it->end;
    }
    return initial;
  }

  /// Left limit at price p > 0, i.e. the state just before p's events.
  AuctionState state_before(double p) const {
    for (const auto& seg : segments) {
      if (seg.law.p0 < p && p <= seg.end_price) return segment_evolve(seg.law, seg.start, p);
    }
    if (!segments.empty() && p > segments.back().end_price) return final_state;
    return initial;
  }

  double final_price() const { return final_state.price; }
};

struct EngineOptions {
  /// Symmetric markets (equal finite budgets, no arrivals) use the closed-form
  /// characterisation instead of the event loop when set.
  bool symmetric_fast_path = true;
};

struct RunResult {
  Outcome<double> outcome;
  Trace trace;
};

struct SymmetricPoint {
  double x = 0.0;
  double b = 0.0;
  double psi = 0.0;
};

/// Closed-form allocation, budget and wishful allocation of each of the
/// kappa clinchers in a symmetric run on [p_s, p_f).
inline SymmetricPoint symmetric_closed_form(int kappa, double beta, double p_s, double p) {
  if (p_s <= 0.0 || p < p_s) throw Error(ErrorKind::kDomainError, "symmetric closed form needs 0 < p_s <= p");
  if (kappa < 1) throw Error(ErrorKind::kDomainError, "kappa must be positive");
  double k = kappa;
  double lead = (k * beta - p_s) * std::pow(p_s, k - 1.0);
  SymmetricPoint out;
  out.x = 1.0 / k - (k - 1.0) * lead * std::pow(p, -k) / k;
  out.b = lead * std::pow(p, -(k - 1.0));
  out.psi = 1.0 / k + lead * std::pow(p, -k) / k;
  return out;
}

namespace detail {

inline AuctionState initial_state(const ValidatedMarket<double>& market) {
  auto people = market.participants();
  std::size_t n = people.size();
  AuctionState s;
  s.x.assign(n, 0.0);
  s.b.assign(n, 0.0);
  s.paid.assign(n, 0.0);
  s.active.assign(n, false);
  s.clinching.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) s.b[i] = people[i].budget.as_double();
  for (std::size_t i = 0; i < market.bidders().size(); ++i) s.active[i] = true;
  return s;
}

inline std::optional<double> common_budget(const ValidatedMarket<double>& market) {
  const auto& bs = market.bidders();
  if (bs.front().budget.is_unbounded()) return std::nullopt;
  double beta = bs.front().budget.amount();
  for (const auto& b : bs) {
    if (b.budget.is_unbounded() || b.budget.amount() != beta) return std::nullopt;
  }
  if (!(beta > 0.0)) return std::nullopt;
  return beta;
}

inline Outcome<double> outcome_of(const AuctionState& s) { return Outcome<double>{s.x, s.paid}; }

/// Closed-form run for equal budgets and no arrivals. Produces the same
/// trace shape as the event loop.
inline RunResult run_symmetric(const ValidatedMarket<double>& market, double beta) {
  const auto& bidders = market.bidders();
  const int n = static_cast<int>(bidders.size());
  auto v = [&](int k) { return k <= n ? bidders[k - 1].valuation : 0.0; };  // 1-based, v_{n+1} = 0

  int kappa = 1;
  for (int k = n; k >= 2; --k) {
    if ((k - 1) * beta <= v(k)) {
      kappa = k;
      break;
    }
  }
  const double p_f = kappa == 1 ? v(2) : v(kappa);
  const double p_s = kappa == 1 ? v(2) : std::max(v(kappa + 1), (kappa - 1) * beta);

  Trace trace;
  AuctionState s = initial_state(market);
  trace.initial = s;

  auto idle_until = [&](double p) {
    if (p > s.price) {
      SegmentLaw law = make_law(s);
      AuctionState end = segment_evolve(law, s, p);
      trace.segments.push_back({law, p, s, end});
      s = end;
    }
  };

  // Bidders below the clinching interval drop without trading.
  int lowest_survivor = kappa == 1 ? 2 : kappa;
  for (int k = n; k > lowest_survivor; --k) {
    if (v(k) >= p_s) break;
    idle_until(v(k));
    s.active[k - 1] = false;
    trace.events.push_back({v(k), EventKind::kDrop, k - 1, std::vector<double>(s.size(), 0.0)});
  }
  idle_until(p_s);

  if (kappa == 1 || p_s == p_f) {
    // Everything trades at p_f when bidder kappa (or 2) drops.
    int dropper = kappa == 1 ? 2 : kappa;
    s.active[dropper - 1] = false;
    std::vector<double> delta(s.size(), 0.0);
    for (int i = 1; i < dropper; ++i) {
      delta[i - 1] = 1.0 / (dropper - 1);
      s.x[i - 1] = delta[i - 1];
      double cost = kappa == 1 ? p_f : beta;
      s.paid[i - 1] = cost;
      s.b[i - 1] = beta - cost;
    }
    s.remaining = 0.0;
    trace.events.push_back({p_f, EventKind::kDrop, dropper - 1, delta});
    trace.events.push_back({p_f, EventKind::kExhaust, -1, {}});
    trace.final_state = s;
    return {outcome_of(s), std::move(trace)};
  }

  // Clinching starts at p_s, either through bidder kappa+1's drop or on its own.
  const SymmetricPoint at_start = symmetric_closed_form(kappa, beta, p_s, p_s);
  std::vector<double> delta(s.size(), 0.0);
  if (kappa + 1 <= n && v(kappa + 1) == p_s) {
    s.active[kappa] = false;
    for (int i = 0; i < kappa; ++i) delta[i] = at_start.x;
    trace.events.push_back({p_s, EventKind::kDrop, kappa, delta});
  } else {
    trace.events.push_back({p_s, EventKind::kClinchStart, -1, delta});
  }
  for (int i = 0; i < kappa; ++i) {
    s.x[i] = at_start.x;
    s.b[i] = at_start.b;
    s.paid[i] = beta - at_start.b;
    s.clinching[i] = true;
  }
  s.remaining = 1.0 - kappa * at_start.x;

  SegmentLaw law = make_law(s);
  AuctionState end = s;
  const SymmetricPoint at_end = symmetric_closed_form(kappa, beta, p_s, p_f);
  end.price = p_f;
  for (int i = 0; i < kappa; ++i) {
    end.x[i] = at_end.x;
    end.b[i] = at_end.b;
    end.paid[i] = beta - at_end.b;
  }
  end.remaining = (kappa - 1) * at_end.b / p_f;
  trace.segments.push_back({law, p_f, s, end});
  s = end;

  // Bidder kappa drops; the rest take their wishful allocation and exhaust.
  std::fill(delta.begin(), delta.end(), 0.0);
  s.active[kappa - 1] = false;
  s.clinching[kappa - 1] = false;
  for (int i = 0; i < kappa - 1; ++i) {
    delta[i] = at_end.b / p_f;
    s.x[i] = at_end.psi;
    s.paid[i] = beta;
    s.b[i] = 0.0;
    s.clinching[i] = false;
  }
  s.remaining = 0.0;
  trace.events.push_back({p_f, EventKind::kDrop, kappa - 1, delta});
  trace.events.push_back({p_f, EventKind::kExhaust, -1, {}});
  trace.final_state = s;
  return {outcome_of(s), std::move(trace)};
}

}  // namespace detail

/// Runs the continuous adaptive clinching auction on a divisible market.
inline RunResult run_auction(const ValidatedMarket<double>& market, EngineOptions opts = {}) {
  if (!market.divisible()) throw Error(ErrorKind::kDomainError, "run_auction needs divisible supply");
  if (opts.symmetric_fast_path && market.arrivals().empty()) {
    if (auto beta = detail::common_budget(market)) return detail::run_symmetric(market, *beta);
  }

  const auto people = market.participants();
  const std::size_t n_initial = market.bidders().size();
  std::vector<double> valuations;
  for (const auto& p : people) valuations.push_back(p.valuation);

  Trace trace;
  AuctionState s = detail::initial_state(market);
  for (std::size_t i = n_initial; i < people.size(); ++i) s.b[i] = 0.0;
  trace.initial = s;

  std::size_t next_arrival = 0;
  const auto& arrivals = market.arrivals();

  // Every event either removes a bidder, adds one, or grows C; a generous cap
  // catches a stalled loop.
  const std::size_t max_iterations = 64 * (people.size() + 1) * (people.size() + 1) + 64;
  for (std::size_t iter = 0;; ++iter) {
    if (iter > max_iterations) throw Error(ErrorKind::kNumericalFailure, "event loop failed to make progress");
    if (s.remaining <= 0.0) {
      trace.events.push_back({s.price, EventKind::kExhaust, -1, {}});
      break;
    }
    if (s.active_count() == 0) {
      if (next_arrival >= arrivals.size()) {
        throw Error(ErrorKind::kInvariantViolation, "all bidders dropped with supply left unsold");
      }
    }

    SegmentLaw law = make_law(s);
    std::optional<double> arrival_price;
    std::optional<std::size_t> arrival_who;
    if (next_arrival < arrivals.size()) {
      arrival_price = arrivals[next_arrival].price;
      arrival_who = n_initial + next_arrival;
    }
    PendingEvent ev = next_event(s, law, valuations, arrival_price, arrival_who);
    if (!std::isfinite(ev.price)) throw Error(ErrorKind::kInvariantViolation, "no further event but supply remains");

    if (ev.price > s.price) {
      AuctionState end = segment_evolve(law, s, ev.price);
      trace.segments.push_back({law, ev.price, s, end});
      s = std::move(end);
    }

    switch (ev.kind) {
      case EventKind::kDrop: {
        auto delta = drop_clinch_step(s, static_cast<std::size_t>(ev.bidder));
        trace.events.push_back({s.price, EventKind::kDrop, ev.bidder, std::move(delta)});
        break;
      }
      case EventKind::kArrival: {
        handle_arrival(s, *arrival_who, people[*arrival_who].budget.as_double());
        ++next_arrival;
        trace.events.push_back({s.price, EventKind::kArrival, ev.bidder, std::vector<double>(s.size(), 0.0)});
        break;
      }
      case EventKind::kClinchStart: {
        // Degenerate starts (p* at or below the clock) trade instantly.
        auto delta = apply_clinch_rule(s);
        refresh_clinching(s);
        if (!s.any_clinching() && s.remaining > 0.0 && s.price > 0.0) {
          double top = -detail::kInf;
          for (std::size_t i = 0; i < s.size(); ++i) {
            if (s.active[i]) top = std::max(top, s.b[i]);
          }
          for (std::size_t i = 0; i < s.size(); ++i) {
            if (s.active[i] && s.b[i] >= top - kRootTolerance * detail::scale(top)) force_clinching(s, i, top);
          }
        }
        trace.events.push_back({s.price, EventKind::kClinchStart, -1, std::move(delta)});
        break;
      }
      case EventKind::kJoinClinch: {
        double beta = law.beta(s.price);
        for (std::size_t i = 0; i < s.size(); ++i) {
          if (s.active[i] && !s.clinching[i] && s.b[i] >= beta - kRootTolerance * detail::scale(beta)) {
            force_clinching(s, i, std::min(beta, s.b[i]));
          }
        }
        for (std::size_t i = 0; i < s.size(); ++i) {
          if (s.clinching[i] && std::isfinite(s.b[i]) && std::isfinite(beta)) {
            s.paid[i] += s.b[i] - std::min(beta, s.b[i]);
            s.b[i] = std::min(beta, s.b[i]);
          }
        }
        trace.events.push_back({s.price, EventKind::kJoinClinch, ev.bidder, std::vector<double>(s.size(), 0.0)});
        break;
      }
      case EventKind::kExhaust:
        break;
    }
  }
  trace.final_state = s;
  return {detail::outcome_of(s), std::move(trace)};
}

/// Describes every violated state invariant at tolerance `tol` (empty when
/// the state is consistent).
inline std::vector<std::string> state_invariant_violations(const AuctionState& s, double tol = kInvariantTolerance) {
  std::vector<std::string> out;
  double sum_x = std::accumulate(s.x.begin(), s.x.end(), 0.0);
  if (std::abs(s.remaining - (1.0 - sum_x)) > tol) out.push_back("remaining != 1 - sum(x)");
  if (s.remaining < -tol || s.remaining > 1.0 + tol) out.push_back("remaining outside [0,1]");
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.x[i] < -tol) out.push_back("negative allocation for participant " + std::to_string(i));
    if (s.b[i] < -tol) out.push_back("negative budget for participant " + std::to_string(i));
  }
  if (s.price > 0.0 && s.remaining > 0.0) {
    double top = -detail::kInf;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s.active[i]) top = std::max(top, s.b[i]);
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!s.active[i]) continue;
      double gap = s.others_demand(i) - s.remaining;
      double slack = tol * detail::scale(s.remaining);
      if (gap < -slack) out.push_back("complement demand below supply for participant " + std::to_string(i));
      if (s.clinching[i] && std::abs(gap) > slack) out.push_back("clincher without equality: " + std::to_string(i));
      if (!s.clinching[i] && std::abs(gap) <= slack * 1e-3 && s.any_clinching()) {
        out.push_back("equality without clinching: " + std::to_string(i));
      }
      if (s.clinching[i] && std::abs(s.b[i] - top) > tol * detail::scale(top) && std::isfinite(top)) {
        out.push_back("clincher not at maximal budget: " + std::to_string(i));
      }
    }
  }
  return out;
}

}  // namespace clinchlab::divisible
