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

#include "clinchlab/analysis.hpp"
#include "clinchlab/engine_indivisible.hpp"
#include "clinchlab/oracle.hpp"
#include "clinchlab/random_markets.hpp"
#include "test_util.hpp"

namespace clinchlab {
namespace {

using indivisible::run_indivisible;
using test::unbounded;
using test::units_market;

Rational lw_of(const ValidatedMarket<Rational>& m, const Outcome<Rational>& o) { return metrics(m, o).lw; }

std::vector<Rational> R(std::initializer_list<Rational> xs) { return xs; }

TEST(Indivisible, LiquidWelfareDropsWhenAnUnboundedBidderJoins) {
  auto base = units_market(4, {{6, Rational(9)}, {5, Rational(15)}});
  auto aug = units_market(4, {{6, Rational(9)}, {5, Rational(15)}, {4, unbounded()}});
  auto a = run_indivisible(base);
  auto b = run_indivisible(aug);
  EXPECT_EQ(a.outcome.allocation, R({1, 3}));
  EXPECT_EQ(b.outcome.allocation, R({2, 2, 0}));
  EXPECT_EQ(lw_of(base, a.outcome), Rational(21));
  EXPECT_EQ(lw_of(aug, b.outcome), Rational(19));
}

TEST(Indivisible, SwappedValuationReadingKeepsWelfare) {
  // Same budgets with the second valuation read as 9: no drop.
  auto base = units_market(4, {{6, Rational(9)}, {9, Rational(15)}});
  auto aug = units_market(4, {{6, Rational(9)}, {9, Rational(15)}, {4, unbounded()}});
  EXPECT_EQ(lw_of(base, run_indivisible(base).outcome), Rational(21));
  EXPECT_EQ(lw_of(aug, run_indivisible(aug).outcome), Rational(21));
}

TEST(Indivisible, RevenueDropsWhenALowBidderJoins) {
  auto base = units_market(5, {{6, Rational(4)}, {5, Rational(2)}, {4, Rational(2)}});
  auto aug = units_market(5, {{6, Rational(4)}, {5, Rational(2)}, {4, Rational(2)}, {1, unbounded()}});
  auto a = run_indivisible(base);
  auto b = run_indivisible(aug);
  EXPECT_EQ(a.revenue(), Rational(16, 3));
  EXPECT_EQ(a.unit_prices(), R({Rational(2, 3), 1, 1, Rational(4, 3), Rational(4, 3)}));
  EXPECT_EQ(b.revenue(), Rational(5));
  EXPECT_EQ(b.unit_prices(), R({1, 1, 1, 1, 1}));
}

TEST(Indivisible, UnboundedBudgetsGiveUniformPriceAuction) {
  // Nobody clinches until one bidder is left; it takes every unit at v_2.
  for (std::int64_t l = 1; l <= 4; ++l) {
    auto m = units_market(l, {{7, unbounded()}, {Rational(9, 2), unbounded()}, {2, unbounded()}});
    auto r = run_indivisible(m);
    EXPECT_EQ(r.outcome.allocation, R({Rational(l), 0, 0}));
    EXPECT_EQ(r.outcome.payment, R({Rational(9, 2) * l, 0, 0}));
  }
}

TEST(Indivisible, EqualValuationsResolveInIdOrder) {
  auto m = units_market(2, {{3, unbounded()}, {3, unbounded()}, {1, unbounded()}});
  auto r = run_indivisible(m);
  EXPECT_EQ(r.outcome.allocation, R({0, 2, 0}));
  EXPECT_EQ(r.outcome.payment, R({0, 6, 0}));
}

TEST(Indivisible, SimultaneousBudgetTouchesIgnoreReportOrder) {
  // Both budgets touch at clock 3 with one unit left. Whoever is picked first
  // gives up the unit, so the pick must not follow the reported valuations.
  Market<Rational> raw;
  raw.supply = Indivisible{4};
  raw.bidders = {{"a", 10, Rational(9, 2)}, {"b", 10, Rational(6)}, {"c", Rational(3, 2), unbounded()}};
  auto honest = validate_market(raw);
  auto truthful = run_indivisible(honest);
  EXPECT_EQ(truthful.outcome.allocation, R({1, 3, 0}));
  EXPECT_EQ(truthful.outcome.payment, R({Rational(3, 2), 6, 0}));
  raw.bidders[0].valuation = Rational(19, 2);  // now sorted after "b"
  auto shaded = validate_market(raw);
  auto r = run_indivisible(shaded);
  auto a = static_cast<std::size_t>(find_participant(shaded, "a"));
  EXPECT_EQ(r.outcome.allocation[a], 1);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_LE(oracle::ic_check(honest, i, oracle::default_bid_grid(honest, 41)), 0);
}

TEST(Indivisible, RejectsDivisibleSupply) {
  Market<Rational> m;
  m.bidders = {{"1", 4, Rational(1)}, {"2", 3, Rational(1)}};
  EXPECT_THROW(run_indivisible(validate_market(m)), Error);
}

TEST(Indivisible, InvariantsOnRandomMarkets) {
  gen::Rng rng(5);
  for (int k = 0; k < 400; ++k) {
    auto m = gen::indivisible_market(rng);
    auto r = run_indivisible(m);
    const auto& people = m.bidders();
    Rational sold = 0;
    for (std::size_t i = 0; i < people.size(); ++i) {
      const auto& x = r.outcome.allocation[i];
      const auto& pi = r.outcome.payment[i];
      sold += x;
      EXPECT_GE(x, 0);
      EXPECT_EQ(x, Rational(boost::multiprecision::numerator(x)));  // integral
      EXPECT_LE(pi, people[i].valuation * x) << "individual rationality";
      EXPECT_TRUE(people[i].budget.covers(pi)) << "budget";
    }
    EXPECT_LE(sold, Rational(std::get<Indivisible>(m.market().supply).units));
    auto prices = r.unit_prices();
    EXPECT_EQ(Rational(static_cast<std::int64_t>(prices.size())), sold);
    for (std::size_t u = 1; u < prices.size(); ++u) EXPECT_LE(prices[u - 1], prices[u]);
  }
}

TEST(Indivisible, TruthfulOnRandomMarkets) {
  gen::Rng rng(17);
  for (int k = 0; k < 40; ++k) {
    auto m = gen::indivisible_market(rng);
    auto grid = oracle::default_bid_grid(m);
    for (std::size_t i = 0; i < m.bidders().size(); ++i) {
      EXPECT_LE(oracle::ic_check(m, i, grid), Rational(0));
    }
  }
}

}  // namespace
}  // namespace clinchlab
