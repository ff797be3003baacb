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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "clinchlab/analysis.hpp"
#include "clinchlab/engine_divisible.hpp"
#include "clinchlab/market_io.hpp"
#include "clinchlab/oracle.hpp"
#include "clinchlab/random_markets.hpp"
#include "clinchlab/trace_io.hpp"
#include "test_util.hpp"

namespace clinchlab {
namespace {

using divisible::AuctionState;
using divisible::EngineOptions;
using divisible::EventKind;
using divisible::SegmentLaw;
using test::divisible_market;

constexpr double kE = std::numbers::e;
constexpr EngineOptions kGeneral{false};

// Classical RK4 on db/dp = -S, dx/dp = S/p with S = ((c-1) b + D) / p for one
// clincher; an independent check on the closed-form segment laws.
struct Rk4Result {
  double b;
  double x;
};

Rk4Result rk4_segment(int c, double D, double b0, double p0, double p1, int steps = 20000) {
  auto S = [&](double p, double b) { return ((c - 1) * b + D) / p; };
  double h = (p1 - p0) / steps;
  double b = b0;
  double x = 0.0;
  double p = p0;
  for (int k = 0; k < steps; ++k) {
    double kb1 = -S(p, b), kx1 = S(p, b) / p;
    double kb2 = -S(p + h / 2, b + h / 2 * kb1), kx2 = S(p + h / 2, b + h / 2 * kb1) / (p + h / 2);
    double kb3 = -S(p + h / 2, b + h / 2 * kb2), kx3 = S(p + h / 2, b + h / 2 * kb2) / (p + h / 2);
    double kb4 = -S(p + h, b + h * kb3), kx4 = S(p + h, b + h * kb3) / (p + h);
    b += h / 6 * (kb1 + 2 * kb2 + 2 * kb3 + kb4);
    x += h / 6 * (kx1 + 2 * kx2 + 2 * kx3 + kx4);
    p += h;
  }
  return {b, x};
}

AuctionState blank_state(std::size_t n) {
  AuctionState s;
  s.x.assign(n, 0.0);
  s.b.assign(n, 0.0);
  s.paid.assign(n, 0.0);
  s.active.assign(n, true);
  s.clinching.assign(n, false);
  return s;
}

void expect_outcome(const Outcome<double>& o, const std::vector<double>& x, const std::vector<double>& pi,
                    double tol = 1e-9) {
  ASSERT_EQ(o.size(), x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_NEAR(o.allocation[i], x[i], tol) << "x[" << i << "]";
    EXPECT_NEAR(o.payment[i], pi[i], tol) << "pi[" << i << "]";
  }
}

TEST(RunAuction, TwoBidderSymmetricGolden) {
  auto m = divisible_market({{4, 1}, {3, 1}});
  for (bool fast : {true, false}) {
    auto run = divisible::run_auction(m, EngineOptions{fast});
    expect_outcome(run.outcome, {5.0 / 9, 4.0 / 9}, {1.0, 2.0 / 3});
    auto t = clinching_interval(run.trace);
    EXPECT_NEAR(t.p_s, 1.0, 1e-12);
    EXPECT_NEAR(t.p_f, 3.0, 1e-12);
    EXPECT_EQ(t.kappa, 2);
    ASSERT_GE(run.trace.events.size(), 2u);
    EXPECT_EQ(run.trace.events.front().kind, EventKind::kClinchStart);
  }
}

TEST(RunAuction, SoleClincherUnderLogLaw) {
  // Bidder 1 clinches alone from p = 1/2 with db/dp = -(1/2)/p, then takes
  // S(3) = 1/6 when bidder 2 drops at 3.
  auto m = divisible_market({{5, 1.5}, {3, 0.5}});
  const double pi1 = 0.5 * std::log(6.0) + 0.5;
  auto run = divisible::run_auction(m, kGeneral);
  expect_outcome(run.outcome, {1.0, 0.0}, {pi1, 0.0}, 1e-12);
  EXPECT_NEAR(pi1, 1.3958797346140275, 1e-15);
  // The integrator lands on the same payment.
  auto approx = oracle::integrate(m, {1e-5});
  EXPECT_NEAR(approx.payment[0], 1.3958797346140275, 1e-3);
}

TEST(RunAuction, LateJoinerGolden) {
  auto m = divisible_market({{2, 1.0 / 3}, {1, 2.0 / 3}});
  auto run = divisible::run_auction(m, kGeneral);
  const double x1 = 1.0 / (2 * kE) + kE / 18;
  EXPECT_NEAR(run.outcome.allocation[0], x1, 1e-9);
  EXPECT_NEAR(run.outcome.allocation[1], 1 - x1, 1e-9);
  bool joined = false;
  for (const auto& e : run.trace.events) {
    if (e.kind == EventKind::kJoinClinch) {
      EXPECT_NEAR(e.price, kE / 3, 1e-12);
      joined = true;
    }
  }
  EXPECT_TRUE(joined);
}

TEST(RunAuction, ThreeBidderDropSplitsSupply) {
  auto m = divisible_market({{5, 1.5}, {3, 0.5}, {2, 3}});
  auto run = divisible::run_auction(m, kGeneral);
  expect_outcome(run.outcome, {0.75, 0.25, 0.0}, {1.5, 0.5, 0.0});
}

TEST(RunAuction, SoleSurvivorPaysSecondValuation) {
  auto m = divisible_market({{4, 10}, {3, 10}});
  for (bool fast : {true, false}) {
    auto run = divisible::run_auction(m, EngineOptions{fast});
    expect_outcome(run.outcome, {1.0, 0.0}, {3.0, 0.0});
    auto t = clinching_interval(run.trace);
    EXPECT_DOUBLE_EQ(t.p_s, 3.0);
    EXPECT_DOUBLE_EQ(t.p_f, 3.0);
    EXPECT_EQ(t.kappa, 1);
  }
}

TEST(RunAuction, UnboundedBudgetClinchesAgainstFiniteRival) {
  // x_1(p) = 1 - 1/p on [1, 3], then the last 1/3 at price 3.
  Market<double> raw;
  raw.bidders = {{"1", 5, Budget<double>::unbounded()}, {"2", 3, Budget<double>(1.0)}};
  auto m = validate_market(raw);
  auto run = divisible::run_auction(m);
  expect_outcome(run.outcome, {1.0, 0.0}, {1.0 + std::log(3.0), 0.0}, 1e-12);
  auto approx = oracle::integrate(m, {1e-5});
  EXPECT_NEAR(approx.payment[0], 1.0 + std::log(3.0), 1e-3);
}

TEST(RunAuction, ZeroBudgetRivalsHandOverAtPriceZero) {
  auto m = divisible_market({{4, 0}, {3, 1}});
  auto run = divisible::run_auction(m);
  expect_outcome(run.outcome, {0.0, 1.0}, {0.0, 0.0});
}

TEST(RunAuction, RejectsUnitSupply) {
  Market<double> raw;
  raw.supply = Indivisible{2};
  raw.bidders = {{"1", 4, 1.0}, {"2", 3, 1.0}};
  EXPECT_THROW(divisible::run_auction(validate_market(raw)), Error);
}

TEST(ClinchStartPrice, MatchesBudgetGap) {
  auto s = blank_state(4);
  s.b = {0.7, 0.7, 0.7, 0.7};
  EXPECT_NEAR(divisible::clinch_start_price(s), 3 * 0.7, 1e-15);
  auto t = blank_state(2);
  t.b = {1.5, 0.5};
  EXPECT_DOUBLE_EQ(divisible::clinch_start_price(t), 0.5);
  t.b = {1.0 / 3, 2.0 / 3};
  EXPECT_DOUBLE_EQ(divisible::clinch_start_price(t), 1.0 / 3);
}

TEST(SegmentEvolve, LogLaw) {
  SegmentLaw law{0.5, 1, 0.5, 1.5};
  EXPECT_NEAR(law.beta(3.0), 1.5 - 0.5 * std::log(6.0), 1e-15);
  auto rk = rk4_segment(1, 0.5, 1.5, 0.5, 3.0);
  EXPECT_NEAR(law.beta(3.0), rk.b, 1e-10);
  EXPECT_NEAR(law.clincher_gain(3.0), rk.x, 1e-10);
}

TEST(SegmentEvolve, PowerLaw) {
  SegmentLaw law{1.0, 2, 0.0, 1.0};
  EXPECT_NEAR(law.beta(3.0), 1.0 / 3, 1e-15);
  SegmentLaw late{2.0 / 3, 2, 0.0, 1.0 / 3};
  for (double p : {0.7, 0.9, 1.0}) EXPECT_NEAR(late.beta(p), 2.0 / (9 * p), 1e-15);
  // Mixed power law with outsiders, against RK4.
  SegmentLaw mixed{1.2, 3, 0.4, 0.9};
  auto rk = rk4_segment(3, 0.4, 0.9, 1.2, 2.5);
  EXPECT_NEAR(mixed.beta(2.5), rk.b, 1e-10);
  EXPECT_NEAR(mixed.clincher_gain(2.5), rk.x, 1e-10);
  EXPECT_NEAR(mixed.clincher_payment(2.5), 0.9 - rk.b, 1e-10);
}

TEST(SegmentEvolve, ZeroLengthAndDomain) {
  auto s = blank_state(2);
  s.price = 1.0;
  s.b = {1, 1};
  s.clinching = {true, true};
  SegmentLaw law = divisible::make_law(s);
  auto same = divisible::segment_evolve(law, s, 1.0);
  EXPECT_EQ(same.x, s.x);
  EXPECT_EQ(same.b, s.b);
  EXPECT_THROW(divisible::segment_evolve(law, s, 0.5), Error);
  s.price = 0.0;
  EXPECT_THROW(divisible::segment_evolve(divisible::make_law(s), s, 1.0), Error);
}

TEST(NextEvent, LateJoinerRoot) {
  // Right after p = 1/3 bidder 2 clinches alone; bidder 1 (budget 1/3) is out.
  auto s = blank_state(2);
  s.price = 1.0 / 3;
  s.b = {1.0 / 3, 2.0 / 3};
  s.clinching = {false, true};
  std::vector<double> v{2, 1};
  auto ev = divisible::next_event(s, divisible::make_law(s), v, std::nullopt);
  EXPECT_EQ(ev.kind, EventKind::kJoinClinch);
  EXPECT_EQ(ev.bidder, 0);
  EXPECT_NEAR(ev.price, kE / 3, 1e-12);
}

TEST(NextEvent, DropAndClinchStart) {
  auto s = blank_state(2);
  s.price = 1.0;
  s.b = {1, 1};
  s.clinching = {true, true};
  std::vector<double> v{4, 3};
  auto ev = divisible::next_event(s, divisible::make_law(s), v, std::nullopt);
  EXPECT_EQ(ev.kind, EventKind::kDrop);
  EXPECT_EQ(ev.bidder, 1);
  EXPECT_DOUBLE_EQ(ev.price, 3.0);

  auto idle = blank_state(2);
  idle.b = {1, 1};
  auto start = divisible::next_event(idle, divisible::make_law(idle), v, std::nullopt);
  EXPECT_EQ(start.kind, EventKind::kClinchStart);
  EXPECT_DOUBLE_EQ(start.price, 1.0);
}

TEST(NextEvent, DropWinsTiesAgainstArrival) {
  auto s = blank_state(2);
  s.b = {5, 5};
  std::vector<double> v{4, 3};
  auto ev = divisible::next_event(s, divisible::make_law(s), v, 3.0, std::size_t{2});
  EXPECT_EQ(ev.kind, EventKind::kDrop);
}

TEST(DropClinchStep, SplitsBetweenSurvivors) {
  auto s = blank_state(3);
  s.price = 2.0;
  s.b = {1.5, 0.5, 3};
  auto delta = divisible::drop_clinch_step(s, 2);
  EXPECT_DOUBLE_EQ(delta[0], 0.75);
  EXPECT_DOUBLE_EQ(delta[1], 0.25);
  EXPECT_DOUBLE_EQ(s.remaining, 0.0);
}

TEST(DropClinchStep, SoleSurvivorTakesRemainder) {
  auto s = blank_state(2);
  s.price = 3.0;
  s.x = {4.0 / 9, 4.0 / 9};
  s.b = {1.0 / 3, 1.0 / 3};
  s.paid = {2.0 / 3, 2.0 / 3};
  s.remaining = 1.0 / 9;
  double psi_before = divisible::wishful_allocation(s, 0);
  auto delta = divisible::drop_clinch_step(s, 1);
  EXPECT_NEAR(delta[0], 1.0 / 9, 1e-15);
  EXPECT_NEAR(s.x[0], 5.0 / 9, 1e-15);
  EXPECT_NEAR(divisible::wishful_allocation(s, 0), psi_before, 1e-15);
}

TEST(DropClinchStep, NothingLeft) {
  auto s = blank_state(3);
  s.price = 2.0;
  s.b = {1, 1, 1};
  s.remaining = 0.0;
  auto delta = divisible::drop_clinch_step(s, 2);
  EXPECT_EQ(delta, std::vector<double>(3, 0.0));
}

TEST(WishfulAllocation, Definition) {
  auto s = blank_state(1);
  s.price = 3.0;
  s.x = {4.0 / 9};
  s.b = {1.0 / 3};
  EXPECT_NEAR(divisible::wishful_allocation(s, 0), 5.0 / 9, 1e-15);
  s.b = {0.0};
  EXPECT_EQ(divisible::wishful_allocation(s, 0), 4.0 / 9);
  s.price = 0.0;
  EXPECT_THROW(divisible::wishful_allocation(s, 0), Error);
}

Market<double> with_arrival(Market<double> m, double price, double v, double b, std::string id = "t1") {
  m.arrivals.push_back({price, Bidder<double>{std::move(id), v, Budget<double>(b)}});
  return m;
}

TEST(Arrivals, MidAuctionArrivalGolden) {
  // Hand-derived and checked against the integrator: clinching pauses at
  // 3/2, both incumbents clinch 8/45 when the newcomer drops at 5/2, then
  // resume with b(p) = (5/9)/p until 3.
  auto base = divisible_market({{4, 1}, {3, 1}});
  auto m = validate_market(with_arrival(base.market(), 1.5, 2.5, 1));
  auto run = divisible::run_auction(m);
  expect_outcome(run.outcome, {43.0 / 81, 38.0 / 81, 0.0}, {1.0, 22.0 / 27, 0.0});
  auto approx = oracle::integrate(m, {1e-5});
  EXPECT_LT(oracle::outcome_distance(run.outcome, approx), 1e-3);
}

TEST(Arrivals, EarlyArrivalEqualsInitialBidder) {
  auto base = divisible_market({{4, 1}, {3, 1}});
  auto online = validate_market(with_arrival(base.market(), 0.5, 2, 1));
  Market<double> offline = base.market();
  offline.bidders.push_back({"t1", 2, 1.0});
  auto a = divisible::run_auction(online).outcome;
  auto b = divisible::run_auction(validate_market(offline)).outcome;
  EXPECT_LE(oracle::outcome_distance(a, b), 1e-12);
}

TEST(Arrivals, AfterTheSaleChangesNothing) {
  auto base = divisible_market({{4, 10}, {3, 10}});
  auto m = validate_market(with_arrival(base.market(), 3.5, 5, 10));
  auto run = divisible::run_auction(m);
  expect_outcome(run.outcome, {1.0, 0.0, 0.0}, {3.0, 0.0, 0.0});
}

TEST(Arrivals, ArrivalAtADropPriceComesAfterTheDrop) {
  auto base = divisible_market({{4, 1}, {3, 1}});
  auto m = validate_market(with_arrival(base.market(), 3.0, 3.5, 1));
  auto run = divisible::run_auction(m);
  expect_outcome(run.outcome, {5.0 / 9, 4.0 / 9, 0.0}, {1.0, 2.0 / 3, 0.0});
}

TEST(SymmetricClosedForm, Values) {
  auto pt = divisible::symmetric_closed_form(2, 1.0, 1.0, 3.0);
  EXPECT_NEAR(pt.x, 4.0 / 9, 1e-15);
  EXPECT_NEAR(pt.b, 1.0 / 3, 1e-15);
  EXPECT_NEAR(pt.psi, 5.0 / 9, 1e-15);
  auto at_start = divisible::symmetric_closed_form(3, 0.8, 1.7, 1.7);
  EXPECT_NEAR(at_start.psi, 0.8 / 1.7, 1e-15);
  // db/dp = -2b/p from b(2) = 1, integrated numerically: 0.64 at 2.5.
  auto rk = rk4_segment(3, 0.0, 1.0, 2.0, 2.5);
  EXPECT_NEAR(rk.b, 0.64, 1e-12);
  EXPECT_NEAR(divisible::symmetric_closed_form(3, 1.0, 2.0, 2.5).b, 0.64, 1e-15);
  EXPECT_THROW(divisible::symmetric_closed_form(2, 1.0, 1.0, 0.5), Error);
}

TEST(SymmetricFastPath, AgreesWithEventLoop) {
  gen::Rng rng(2024);
  for (int k = 0; k < 300; ++k) {
    auto m = gen::symmetric_market(rng);
    auto fast = divisible::run_auction(m);
    auto slow = divisible::run_auction(m, kGeneral);
    EXPECT_LE(oracle::outcome_distance(fast.outcome, slow.outcome), 1e-9) << io::serialize_market(m.market());
    auto tf = clinching_interval(fast.trace);
    auto ts = clinching_interval(slow.trace);
    EXPECT_EQ(tf.kappa, ts.kappa);
    EXPECT_NEAR(tf.p_s, ts.p_s, 1e-12 * std::max(1.0, tf.p_s));
    EXPECT_NEAR(tf.p_f, ts.p_f, 1e-12 * std::max(1.0, tf.p_f));
    // Closed form along the event loop's trace.
    if (tf.kappa >= 2 && tf.p_s < tf.p_f) {
      double beta = m.bidders().front().budget.amount();
      for (int j = 0; j < 100; ++j) {
        double p = tf.p_s + (tf.p_f - tf.p_s) * j / 100.0;
        auto s = slow.trace.state_at(p);
        auto cf = divisible::symmetric_closed_form(tf.kappa, beta, tf.p_s, p);
        for (int i = 0; i < tf.kappa; ++i) {
          EXPECT_NEAR(s.x[i], cf.x, 1e-8);
          EXPECT_NEAR(s.b[i], cf.b, 1e-8);
        }
      }
    }
  }
}

TEST(Invariants, HoldAlongSampledTraces) {
  gen::Rng rng(99);
  for (int k = 0; k < 300; ++k) {
    ValidatedMarket<double> m = k % 3 == 0   ? gen::symmetric_market(rng)
                                : k % 3 == 1 ? gen::asymmetric_market(rng)
                                             : gen::symmetric_online_market(rng);
    auto run = divisible::run_auction(m, kGeneral);
    for (const auto& seg : run.trace.segments) {
      for (int j = 0; j <= 8; ++j) {
        double p = seg.law.p0 + (seg.end_price - seg.law.p0) * j / 8.0;
        if (p >= seg.end_price) break;
        auto s = divisible::segment_evolve(seg.law, seg.start, p);
        auto bad = divisible::state_invariant_violations(s);
        EXPECT_TRUE(bad.empty()) << bad.front() << " at p=" << p << "\n" << io::serialize_market(m.market());
      }
    }
    double sold = 0.0;
    for (double q : run.outcome.allocation) sold += q;
    EXPECT_NEAR(sold, 1.0, 1e-9);
  }
}

TEST(Trace, RowsCoverEventsAndSamples) {
  auto m = divisible_market({{4, 1}, {3, 1}});
  auto run = divisible::run_auction(m, kGeneral);
  auto rows = io::trace_rows(run.trace, 16);
  ASSERT_FALSE(rows.empty());
  EXPECT_EQ(rows.front().price, 0.0);
  EXPECT_EQ(rows.back().price, 3.0);
  for (std::size_t k = 1; k < rows.size(); ++k) EXPECT_LE(rows[k - 1].price, rows[k].price);
  std::string csv = io::trace_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "p,S,x1,x2,b1,b2,active,clinching");
}

}  // namespace
}  // namespace clinchlab
