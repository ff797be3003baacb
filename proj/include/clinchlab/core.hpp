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

// Domain types shared by every engine: bidders, markets, outcomes, and the
// validation pass that establishes the ordering conventions the engines rely on
// (bidders in strictly descending valuation order, arrivals by increasing
// price).

#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "clinchlab/error.hpp"
#include "clinchlab/rational.hpp"

namespace clinchlab {

/// A budget that is either a finite nonnegative amount or unbounded.
template <class T>
class Budget {
 public:
  Budget() = default;
  Budget(T amount) : amount_(std::move(amount)) {}  // NOLINT: implicit by design of the input format

  static Budget unbounded() {
    Budget b;
    b.unbounded_ = true;
    return b;
  }

  bool is_unbounded() const { return unbounded_; }
  const T& amount() const { return amount_; }

  /// Finite amounts map to themselves; unbounded maps to +infinity.
  double as_double() const {
    if (unbounded_) return std::numeric_limits<double>::infinity();
    if constexpr (std::is_same_v<T, double>) {
      return amount_;
    } else {
      return to_double(amount_);
    }
  }

  /// True when `value` does not exceed this budget.
  bool covers(const T& value) const { return unbounded_ || value <= amount_; }

  friend bool operator==(const Budget& a, const Budget& b) {
    if (a.unbounded_ || b.unbounded_) return a.unbounded_ == b.unbounded_;
    return a.amount_ == b.amount_;
  }
  friend bool operator<(const Budget& a, const Budget& b) {
    if (a.unbounded_) return false;
    if (b.unbounded_) return true;
    return a.amount_ < b.amount_;
  }

 private:
  T amount_{};
  bool unbounded_ = false;
};

template <class T>
struct Bidder {
  std::string id;
  T valuation{};
  Budget<T> budget;

  friend bool operator==(const Bidder&, const Bidder&) = default;
};

template <class T>
struct Arrival {
  T price{};
  Bidder<T> bidder;

  friend bool operator==(const Arrival&, const Arrival&) = default;
};

struct Divisible {
  friend bool operator==(const Divisible&, const Divisible&) = default;
};

struct Indivisible {
  std::int64_t units = 0;
  friend bool operator==(const Indivisible&, const Indivisible&) = default;
};

using Supply = std::variant<Divisible, Indivisible>;

template <class T>
struct Market {
  std::vector<Bidder<T>> bidders;
  Supply supply = Divisible{};
  std::vector<Arrival<T>> arrivals;

  bool divisible() const { return std::holds_alternative<Divisible>(supply); }

  friend bool operator==(const Market&, const Market&) = default;
};

/// A market that passed `validate_market`. Only constructible through it.
template <class T>
class ValidatedMarket {
 public:
  const Market<T>& market() const { return market_; }
  const std::vector<Bidder<T>>& bidders() const { return market_.bidders; }
  const std::vector<Arrival<T>>& arrivals() const { return market_.arrivals; }
  bool divisible() const { return market_.divisible(); }

  /// Initial bidders followed by arriving bidders in arrival order. Outcome
  /// vectors are indexed the same way.
  std::vector<Bidder<T>> participants() const {
    std::vector<Bidder<T>> all = market_.bidders;
    for (const auto& a : market_.arrivals) all.push_back(a.bidder);
    return all;
  }
  std::size_t participant_count() const { return market_.bidders.size() + market_.arrivals.size(); }

  friend bool operator==(const ValidatedMarket&, const ValidatedMarket&) = default;

 private:
  template <class U>
  friend ValidatedMarket<U> validate_market(Market<U> market);

  explicit ValidatedMarket(Market<T> m) : market_(std::move(m)) {}
  Market<T> market_;
};

template <class T>
struct Outcome {
  std::vector<T> allocation;
  std::vector<T> payment;

  std::size_t size() const { return allocation.size(); }
};

namespace detail {

template <class T>
bool is_negative(const T& v) {
  return v < T(0);
}

template <class T>
bool is_nan(const T& v) {
  if constexpr (std::is_floating_point_v<T>) {
    return std::isnan(v);
  } else {
    return false;
  }
}

template <class T>
void check_bidder(const Bidder<T>& b) {
  if (is_nan(b.valuation) || is_negative(b.valuation)) {
    throw Error(ErrorKind::kNegativeInput, "bidder '" + b.id + "' has a negative valuation");
  }
  if (!b.budget.is_unbounded() && (is_nan(b.budget.amount()) || is_negative(b.budget.amount()))) {
    throw Error(ErrorKind::kNegativeInput, "bidder '" + b.id + "' has a negative budget");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (std::isinf(b.valuation)) {
      throw Error(ErrorKind::kDomainError, "bidder '" + b.id + "' has an infinite valuation");
    }
  }
}

}  // namespace detail

/// Checks every market assumption and returns the market with bidders sorted
/// in descending valuation order (stable for equal valuations).
template <class T>
ValidatedMarket<T> validate_market(Market<T> market) {
  if (market.bidders.size() < 2) {
    throw Error(ErrorKind::kTooFewBidders, "need at least two initial bidders, got " +
                                               std::to_string(market.bidders.size()));
  }
  for (const auto& b : market.bidders) detail::check_bidder(b);
  if (const auto* units = std::get_if<Indivisible>(&market.supply)) {
    if (units->units < 0) throw Error(ErrorKind::kNegativeInput, "negative supply");
    if (!market.arrivals.empty()) {
      throw Error(ErrorKind::kDomainError, "online arrivals are only supported for divisible supply");
    }
  }

  for (std::size_t k = 0; k < market.arrivals.size(); ++k) {
    const auto& a = market.arrivals[k];
    detail::check_bidder(a.bidder);
    if (!(a.price > T(0))) {
      throw Error(ErrorKind::kNegativeInput, "arrival price of '" + a.bidder.id + "' must be positive");
    }
    if (!(a.bidder.valuation > a.price)) {
      throw Error(ErrorKind::kArrivalOrderViolation,
                  "arriving bidder '" + a.bidder.id + "' must value the good above its arrival price");
    }
    if (k > 0 && !(market.arrivals[k - 1].price < a.price)) {
      throw Error(ErrorKind::kArrivalOrderViolation, "arrival prices must be strictly increasing");
    }
  }

  std::stable_sort(market.bidders.begin(), market.bidders.end(),
                   [](const Bidder<T>& a, const Bidder<T>& b) { return b.valuation < a.valuation; });

  std::set<std::string> ids;
  std::vector<T> valuations;
  auto note = [&](const Bidder<T>& b) {
    if (!b.id.empty() && !ids.insert(b.id).second) {
      throw Error(ErrorKind::kDomainError, "duplicate bidder id '" + b.id + "'");
    }
    valuations.push_back(b.valuation);
  };
  for (const auto& b : market.bidders) note(b);
  for (const auto& a : market.arrivals) note(a.bidder);

  if (market.divisible()) {
    std::sort(valuations.begin(), valuations.end());
    auto dup = std::adjacent_find(valuations.begin(), valuations.end());
    if (dup != valuations.end()) {
      throw Error(ErrorKind::kDuplicateValuation,
                  "valuations must be pairwise distinct for divisible supply (repeated " + to_string(*dup) + ")");
    }
  }
  return ValidatedMarket<T>(std::move(market));
}

/// Utility on the extended line: `infeasible` stands for minus infinity.
template <class T>
struct Utility {
  T value{};
  bool infeasible = false;

  static Utility minus_infinity() { return Utility{T{}, true}; }

  double as_double() const {
    if (infeasible) return -std::numeric_limits<double>::infinity();
    if constexpr (std::is_same_v<T, double>) {
      return value;
    } else {
      return to_double(value);
    }
  }

  friend bool operator<(const Utility& a, const Utility& b) {
    if (a.infeasible) return !b.infeasible;
    if (b.infeasible) return false;
    return a.value < b.value;
  }
  friend bool operator==(const Utility& a, const Utility& b) {
    if (a.infeasible || b.infeasible) return a.infeasible == b.infeasible;
    return a.value == b.value;
  }
};

/// v_i x_i - pi_i, or minus infinity when the payment breaks the budget.
template <class T>
Utility<T> utility(const Bidder<T>& bidder, const T& allocation, const T& payment) {
  if (!bidder.budget.covers(payment)) return Utility<T>::minus_infinity();
  return Utility<T>{bidder.valuation * allocation - payment, false};
}

template <class To, class From>
To scalar_cast(const From& v) {
  if constexpr (std::is_same_v<To, From>) {
    return v;
  } else if constexpr (std::is_same_v<To, double>) {
    return to_double(v);
  } else {
    return To(v);
  }
}

template <class To, class From>
Bidder<To> bidder_cast(const Bidder<From>& b) {
  Bidder<To> out;
  out.id = b.id;
  out.valuation = scalar_cast<To>(b.valuation);
  out.budget = b.budget.is_unbounded() ? Budget<To>::unbounded() : Budget<To>(scalar_cast<To>(b.budget.amount()));
  return out;
}

/// Converts the numeric representation of a market (e.g. exact input to the
/// floating-point engine).
template <class To, class From>
Market<To> market_cast(const Market<From>& m) {
  Market<To> out;
  out.supply = m.supply;
  for (const auto& b : m.bidders) out.bidders.push_back(bidder_cast<To>(b));
  for (const auto& a : m.arrivals) out.arrivals.push_back(Arrival<To>{scalar_cast<To>(a.price), bidder_cast<To>(a.bidder)});
  return out;
}

/// Index of the participant with `id`, or -1.
template <class T>
int find_participant(const ValidatedMarket<T>& m, const std::string& id) {
  auto all = m.participants();
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace clinchlab
