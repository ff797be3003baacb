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

// Welfare metrics, clinching-interval extraction, and the monotonicity
// comparison harness. Verdicts are recorded as data; nothing here asserts
// that a property must hold, since asymmetric inputs legitimately break
// several of them.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "clinchlab/core.hpp"
#include "clinchlab/engine_divisible.hpp"
#include "clinchlab/error.hpp"

namespace clinchlab {

/// Exhaustion tolerance for critical-bidder detection in floating point.
/// Load-bearing: misdetecting kappa flips the case classification.
inline constexpr double kExhaustionTolerance = 1e-7;

template <class T>
struct Metrics {
  T sw{};   // sum v_i x_i
  T lw{};   // sum min(v_i x_i, B_i)
  T rev{};  // sum pi_i
};

template <class T>
Metrics<T> metrics(const std::vector<Bidder<T>>& bidders, const Outcome<T>& outcome) {
  if (bidders.size() != outcome.size()) throw Error(ErrorKind::kDomainError, "outcome size does not match market");
  Metrics<T> m;
  for (std::size_t i = 0; i < bidders.size(); ++i) {
    T value = bidders[i].valuation * outcome.allocation[i];
    m.sw += value;
    m.lw += bidders[i].budget.covers(value) ? value : bidders[i].budget.amount();
    m.rev += outcome.payment[i];
  }
  return m;
}

template <class T>
Metrics<T> metrics(const ValidatedMarket<T>& market, const Outcome<T>& outcome) {
  return metrics(market.participants(), outcome);
}

/// Maximum liquid welfare over all splits of the unit: fill bidders in
/// descending valuation order up to their budget cap B_i / v_i.
inline double optimal_lw(const ValidatedMarket<double>& market) {
  auto people = market.participants();
  std::stable_sort(people.begin(), people.end(),
                   [](const Bidder<double>& a, const Bidder<double>& b) { return a.valuation > b.valuation; });
  double left = 1.0;
  double lw = 0.0;
  for (const auto& p : people) {
    if (left <= 0.0 || p.valuation <= 0.0) break;
    double cap = p.budget.is_unbounded() ? left : p.budget.amount() / p.valuation;
    double q = std::min(cap, left);
    lw += p.valuation * q;
    left -= q;
  }
  return lw;
}

/// kappa = |{i : pi_i = B_i}| + 1 (1-based). `tol` is the exhaustion slack;
/// pass zero for exact arithmetic.
template <class T>
int critical_bidder(const std::vector<Bidder<T>>& bidders, const Outcome<T>& outcome, const T& tol) {
  int exhausted = 0;
  for (std::size_t i = 0; i < bidders.size(); ++i) {
    if (bidders[i].budget.is_unbounded()) continue;
    if (!(outcome.payment[i] < bidders[i].budget.amount() - tol)) ++exhausted;
  }
  return exhausted + 1;
}

inline int critical_bidder(const ValidatedMarket<double>& market, const Outcome<double>& outcome,
                           double tol = kExhaustionTolerance) {
  return critical_bidder(market.participants(), outcome, tol);
}

struct IntervalReport {
  double p_s = 0.0;
  double p_f = 0.0;
  int kappa = 1;
};

/// Clinching interval and critical bidder read off a completed trace: p_s is
/// the first price with a nonempty clinching set or a positive instantaneous
/// clinch, p_f the price at which the supply ran out.
inline IntervalReport clinching_interval(const divisible::Trace& trace, double tol = kExhaustionTolerance) {
  IntervalReport r;
  r.p_f = trace.final_price();
  r.p_s = r.p_f;
  for (const auto& e : trace.events) {
    bool traded = std::any_of(e.delta.begin(), e.delta.end(), [](double d) { return d > 0.0; });
    if (e.kind == divisible::EventKind::kClinchStart || traded) {
      r.p_s = e.price;
      break;
    }
  }
  int exhausted = 0;
  for (double b : trace.final_state.b) {
    if (b <= tol) ++exhausted;
  }
  r.kappa = exhausted + 1;
  return r;
}

enum class CaseLabel { kCase1 = 1, kCase2, kCase3, kCase4, kCase5, kCase6, kNotSymmetric };

inline std::string case_label_name(CaseLabel c) {
  if (c == CaseLabel::kNotSymmetric) return "NotSymmetric";
  return "Case" + std::to_string(static_cast<int>(c));
}

struct Prediction {
  CaseLabel label = CaseLabel::kNotSymmetric;
  IntervalReport triple;
};

namespace detail {

inline bool approx_equal(double a, double b, double rel = 1e-12) {
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

/// Common finite budget of every bidder, or nullopt.
inline std::optional<double> common_budget(const std::vector<Bidder<double>>& bidders) {
  if (bidders.empty() || bidders.front().budget.is_unbounded()) return std::nullopt;
  double beta = bidders.front().budget.amount();
  for (const auto& b : bidders) {
    if (b.budget.is_unbounded() || b.budget.amount() != beta) return std::nullopt;
  }
  return beta;
}

}  // namespace detail

/// Predicts the augmented clinching interval and critical bidder when a
/// bidder with valuation v_theta joins a symmetric market whose own triple is
/// `base`. Branches are tested in order; the first match wins.
inline Prediction classify_and_predict(const ValidatedMarket<double>& base_market, const Bidder<double>& theta,
                                       const IntervalReport& base) {
  auto beta_opt = detail::common_budget(base_market.bidders());
  if (!beta_opt || theta.budget.is_unbounded() || theta.budget.amount() != *beta_opt) {
    throw Error(ErrorKind::kNotSymmetric, "case prediction needs equal budgets for all bidders and theta");
  }
  const double beta = *beta_opt;
  const auto& bidders = base_market.bidders();
  const int kappa = base.kappa;
  const double p_s = base.p_s;
  const double p_f = base.p_f;
  const double vt = theta.valuation;
  auto v = [&](int k) { return bidders.at(static_cast<std::size_t>(k - 1)).valuation; };
  const double kb = kappa * beta;
  using detail::approx_equal;

  Prediction out;
  if (vt <= p_s) {
    out = {CaseLabel::kCase1, {p_s, p_f, kappa}};
  } else if (kappa == 1 && std::min(vt, v(1)) < beta && !approx_equal(std::min(vt, v(1)), beta)) {
    double m = std::min(vt, v(1));
    out = {CaseLabel::kCase2, {m, m, 1}};
  } else if (kappa >= 2 && p_s <= v(kappa) && v(kappa) < std::min(vt, kb)) {
    out = {CaseLabel::kCase3, {v(kappa), std::min(vt, v(kappa - 1)), kappa}};
  } else if (kappa >= 2 && p_s < vt && vt < std::min(v(kappa), kb) && !approx_equal(vt, kb)) {
    out = {CaseLabel::kCase4, {vt, v(kappa), kappa}};
  } else if (p_s < kb && approx_equal(kb, std::min(vt, v(kappa)))) {
    out = {CaseLabel::kCase6, {kb, kb, kappa + 1}};
  } else if (p_s < kb && kb < std::min(vt, v(kappa))) {
    out = {CaseLabel::kCase5, {kb, std::min(vt, v(kappa)), kappa + 1}};
  } else {
    throw Error(ErrorKind::kDomainError, "no case matched; base triple is inconsistent with a symmetric run");
  }
  return out;
}

/// Liquid welfare and revenue of a symmetric outcome from kappa alone:
/// ((kappa-1) beta + min(v_kappa x_kappa, beta), (kappa-1) beta + pi_kappa).
inline std::pair<double, double> lw_rev_symmetric_formula(const ValidatedMarket<double>& market,
                                                          const Outcome<double>& outcome, int kappa) {
  auto people = market.participants();
  auto beta = detail::common_budget(people);
  if (!beta) throw Error(ErrorKind::kNotSymmetric, "formula needs equal finite budgets");
  // kappa indexes the valuation order of all participants.
  std::vector<std::size_t> order(people.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return people[a].valuation > people[b].valuation; });
  double lw = (kappa - 1) * *beta;
  double rev = (kappa - 1) * *beta;
  if (static_cast<std::size_t>(kappa) <= people.size()) {
    std::size_t k = order[static_cast<std::size_t>(kappa - 1)];
    lw += std::min(people[k].valuation * outcome.allocation[k], *beta);
    rev += outcome.payment[k];
  }
  return {lw, rev};
}

/// G_kappa(x) = (kappa beta - x) x^(kappa-1) on ((kappa-1) beta, kappa beta).
inline double g_kappa(double x, int kappa, double beta) {
  if (kappa < 1 || !(x > (kappa - 1) * beta) || !(x < kappa * beta)) {
    throw Error(ErrorKind::kDomainError, "G_kappa is defined on ((kappa-1) beta, kappa beta)");
  }
  return (kappa * beta - x) * std::pow(x, kappa - 1);
}

/// H_kappa(x) = x^(kappa-1) (kappa - kappa x + x) for x > 0.
inline double h_kappa(double x, int kappa) {
  if (kappa < 1 || !(x > 0.0)) throw Error(ErrorKind::kDomainError, "H_kappa is defined for x > 0");
  return std::pow(x, kappa - 1) * (kappa - kappa * x + x);
}

/// Property names used as verdict keys.
namespace verdicts {
inline constexpr const char* kAllocationMonotone = "allocation-monotone";  // x, pi do not rise outside kappa
inline constexpr const char* kWelfareMonotone = "lw-rev-monotone";
inline constexpr const char* kRatioBound = "lw-ratio-bound";  // 1 <= LW~/LW <= (kappa+1)/(kappa-1)
inline constexpr const char* kTriplePrediction = "triple-prediction";
inline constexpr const char* kWelfareFormula = "lw-rev-formula";
inline constexpr const char* kEarlyFinish = "early-finish-monotone";  // p_f~ < p_f implies LW, REV monotone
inline constexpr const char* kOnlineFinalClinch = "online-final-clinch";
inline constexpr const char* kOnlineWishfulBound = "online-wishful-bound";
}  // namespace verdicts

enum class Verdict { kPass, kFail, kNotApplicable };

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::kPass: return "pass";
    case Verdict::kFail: return "fail";
    case Verdict::kNotApplicable: return "n/a";
  }
  return "?";
}

inline Verdict verdict_of(bool ok) { return ok ? Verdict::kPass : Verdict::kFail; }

/// Base run versus augmented run (added bidder or online arrivals).
/// Deltas are always recomputed from the stored outcomes.
struct ComparisonReport {
  std::string kind;  // "add-bidder" or "online"
  Market<double> base_market;
  Market<double> augmented_market;
  Outcome<double> base;
  Outcome<double> augmented;
  IntervalReport base_triple;
  IntervalReport measured_triple;
  std::optional<CaseLabel> case_label;
  std::optional<IntervalReport> predicted_triple;
  std::map<std::string, Verdict> verdicts;
  double epsilon = 1e-7;

  std::vector<Bidder<double>> base_participants() const { return participants_of(base_market); }
  std::vector<Bidder<double>> augmented_participants() const { return participants_of(augmented_market); }

  /// Augmented index of base participant i.
  std::size_t augmented_index(std::size_t i) const {
    auto aug = augmented_participants();
    const std::string id = base_participants().at(i).id;
    for (std::size_t j = 0; j < aug.size(); ++j) {
      if (aug[j].id == id) return j;
    }
    throw Error(ErrorKind::kDomainError, "base bidder '" + id + "' missing from augmented market");
  }

  double delta_x(std::size_t i) const { return augmented.allocation[augmented_index(i)] - base.allocation[i]; }
  double delta_pi(std::size_t i) const { return augmented.payment[augmented_index(i)] - base.payment[i]; }

  Metrics<double> base_metrics() const { return metrics(base_participants(), base); }
  Metrics<double> augmented_metrics() const { return metrics(augmented_participants(), augmented); }
  double delta_sw() const { return augmented_metrics().sw - base_metrics().sw; }
  double delta_lw() const { return augmented_metrics().lw - base_metrics().lw; }
  double delta_rev() const { return augmented_metrics().rev - base_metrics().rev; }

  bool all_pass() const {
    return std::none_of(verdicts.begin(), verdicts.end(), [](const auto& kv) { return kv.second == Verdict::kFail; });
  }
  Verdict verdict(const std::string& name) const {
    auto it = verdicts.find(name);
    return it == verdicts.end() ? Verdict::kNotApplicable : it->second;
  }

 private:
  static std::vector<Bidder<double>> participants_of(const Market<double>& m) {
    std::vector<Bidder<double>> all = m.bidders;
    for (const auto& a : m.arrivals) all.push_back(a.bidder);
    return all;
  }
};

namespace detail {

/// Allocation and payment monotonicity for every base bidder except kappa.
inline Verdict allocation_monotone(const ComparisonReport& r) {
  for (std::size_t i = 0; i < r.base.size(); ++i) {
    if (static_cast<int>(i) + 1 == r.base_triple.kappa) continue;
    if (r.delta_x(i) > r.epsilon || r.delta_pi(i) > r.epsilon) return Verdict::kFail;
  }
  return Verdict::kPass;
}

inline Verdict welfare_monotone(const ComparisonReport& r) {
  return verdict_of(r.delta_lw() >= -r.epsilon && r.delta_rev() >= -r.epsilon);
}

inline bool triples_match(const IntervalReport& a, const IntervalReport& b) {
  auto close = [](double x, double y) {
    return std::abs(x - y) <= divisible::kRootTolerance * std::max({1.0, std::abs(x), std::abs(y)});
  };
  return a.kappa == b.kappa && close(a.p_s, b.p_s) && close(a.p_f, b.p_f);
}

inline Verdict formula_matches(const ValidatedMarket<double>& market, const Outcome<double>& outcome, int kappa) {
  auto [lw, rev] = lw_rev_symmetric_formula(market, outcome, kappa);
  auto m = metrics(market, outcome);
  return verdict_of(std::abs(lw - m.lw) <= 1e-9 && std::abs(rev - m.rev) <= 1e-9);
}

}  // namespace detail

/// Runs the market with and without `theta` and records every monotonicity
/// verdict that applies.
inline ComparisonReport compare_add_bidder(const ValidatedMarket<double>& base_market, const Bidder<double>& theta,
                                           double epsilon = 1e-7, divisible::EngineOptions opts = {}) {
  Market<double> aug = base_market.market();
  aug.bidders.push_back(theta);
  auto aug_market = validate_market(aug);

  auto base_run = divisible::run_auction(base_market, opts);
  auto aug_run = divisible::run_auction(aug_market, opts);

  ComparisonReport r;
  r.kind = "add-bidder";
  r.base_market = base_market.market();
  r.augmented_market = aug_market.market();
  r.base = base_run.outcome;
  r.augmented = aug_run.outcome;
  r.base_triple = clinching_interval(base_run.trace);
  r.measured_triple = clinching_interval(aug_run.trace);
  r.epsilon = epsilon;

  r.verdicts[verdicts::kAllocationMonotone] = detail::allocation_monotone(r);
  r.verdicts[verdicts::kWelfareMonotone] = detail::welfare_monotone(r);

  const int kappa = r.base_triple.kappa;
  if (kappa >= 2) {
    auto bm = r.base_metrics();
    auto am = r.augmented_metrics();
    double bound = static_cast<double>(kappa + 1) / (kappa - 1);
    bool ok = am.lw >= bm.lw * (1.0 - epsilon) - epsilon && am.lw <= bm.lw * bound + epsilon &&
              am.rev >= bm.rev * (1.0 - epsilon) - epsilon && am.rev <= bm.rev * bound + epsilon;
    r.verdicts[verdicts::kRatioBound] = verdict_of(ok);
  } else {
    r.verdicts[verdicts::kRatioBound] = Verdict::kNotApplicable;
  }

  if (r.measured_triple.p_f < r.base_triple.p_f) {
    r.verdicts[verdicts::kEarlyFinish] = detail::welfare_monotone(r);
  } else {
    r.verdicts[verdicts::kEarlyFinish] = Verdict::kNotApplicable;
  }

  auto beta = detail::common_budget(base_market.bidders());
  bool symmetric = beta && !theta.budget.is_unbounded() && theta.budget.amount() == *beta;
  if (symmetric) {
    auto prediction = classify_and_predict(base_market, theta, r.base_triple);
    r.case_label = prediction.label;
    r.predicted_triple = prediction.triple;
    r.verdicts[verdicts::kTriplePrediction] = verdict_of(detail::triples_match(prediction.triple, r.measured_triple));
    bool both = detail::formula_matches(base_market, r.base, r.base_triple.kappa) == Verdict::kPass &&
                detail::formula_matches(aug_market, r.augmented, r.measured_triple.kappa) == Verdict::kPass;
    r.verdicts[verdicts::kWelfareFormula] = verdict_of(both);
  } else {
    r.case_label = CaseLabel::kNotSymmetric;
    r.verdicts[verdicts::kTriplePrediction] = Verdict::kNotApplicable;
    r.verdicts[verdicts::kWelfareFormula] = Verdict::kNotApplicable;
  }
  return r;
}

/// Verdict names that only hold under symmetric budgets.
inline const std::vector<std::string>& symmetric_verdicts() {
  static const std::vector<std::string> names{verdicts::kAllocationMonotone, verdicts::kWelfareMonotone,
                                              verdicts::kRatioBound, verdicts::kTriplePrediction,
                                              verdicts::kWelfareFormula};
  return names;
}

/// Compares the run without arrivals to the run with them. Requires equal
/// budgets across initial and arriving bidders.
inline ComparisonReport run_online_experiment(const ValidatedMarket<double>& market, double epsilon = 1e-7,
                                              divisible::EngineOptions opts = {}) {
  auto people = market.participants();
  if (!detail::common_budget(people)) {
    throw Error(ErrorKind::kNotSymmetric, "online experiment needs one common finite budget");
  }
  const double beta = people.front().budget.amount();
  Market<double> offline = market.market();
  offline.arrivals.clear();
  auto base_market = validate_market(offline);

  auto base_run = divisible::run_auction(base_market, opts);
  auto online_run = divisible::run_auction(market, opts);

  ComparisonReport r;
  r.kind = "online";
  r.base_market = base_market.market();
  r.augmented_market = market.market();
  r.base = base_run.outcome;
  r.augmented = online_run.outcome;
  r.base_triple = clinching_interval(base_run.trace);
  r.measured_triple = clinching_interval(online_run.trace);
  r.epsilon = epsilon;

  r.verdicts[verdicts::kAllocationMonotone] = detail::allocation_monotone(r);
  r.verdicts[verdicts::kWelfareMonotone] = detail::welfare_monotone(r);

  // Full sale, and the first drop of a clinching bidder ends the auction
  // with every survivor paying beta.
  {
    double sold = 0.0;
    for (double q : r.augmented.allocation) sold += q;
    bool ok = std::abs(sold - 1.0) <= epsilon;
    const auto& tr = online_run.trace;
    std::optional<double> first_clincher_drop;
    for (const auto& e : tr.events) {
      if (e.kind != divisible::EventKind::kDrop) continue;
      auto before = tr.state_before(e.price);
      if (e.price > 0.0 && before.clinching[static_cast<std::size_t>(e.bidder)]) {
        first_clincher_drop = e.price;
        break;
      }
    }
    if (first_clincher_drop) {
      ok = ok && detail::approx_equal(*first_clincher_drop, tr.final_price(), 1e-12);
      for (std::size_t i = 0; i < tr.final_state.size(); ++i) {
        if (tr.final_state.active[i]) ok = ok && std::abs(r.augmented.payment[i] - beta) <= epsilon;
      }
    }
    r.verdicts[verdicts::kOnlineFinalClinch] = verdict_of(ok);
  }

  // Case 2-1: only [kappa] clinch and they are clinching just before v_kappa.
  r.verdicts[verdicts::kOnlineWishfulBound] = Verdict::kNotApplicable;
  const int kappa = r.base_triple.kappa;
  const auto& arrivals = market.arrivals();
  if (kappa >= 2 && !arrivals.empty() && r.base_triple.p_s <= arrivals.front().price &&
      r.base_triple.p_s < r.base_triple.p_f) {
    const double v_kappa = market.bidders()[static_cast<std::size_t>(kappa - 1)].valuation;
    auto online_before = online_run.trace.state_before(v_kappa);
    auto base_before = base_run.trace.state_before(v_kappa);
    bool only_top = true;
    for (std::size_t j = 0; j < r.augmented.size(); ++j) {
      bool top = j < static_cast<std::size_t>(kappa);
      if (!top && r.augmented.allocation[j] > 0.0) only_top = false;
      if (top && !online_before.clinching[j]) only_top = false;
    }
    if (only_top) {
      bool ok = true;
      for (std::size_t i = 0; i < static_cast<std::size_t>(kappa); ++i) {
        double psi_online = online_before.x[i] + online_before.b[i] / v_kappa;
        double psi_base = base_before.x[i] + base_before.b[i] / v_kappa;
        ok = ok && psi_online <= psi_base + epsilon && online_before.b[i] <= base_before.b[i] + epsilon;
      }
      r.verdicts[verdicts::kOnlineWishfulBound] = verdict_of(ok);
    }
  }
  return r;
}

}  // namespace clinchlab
