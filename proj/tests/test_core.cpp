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

#include "clinchlab/core.hpp"
#include "clinchlab/market_io.hpp"
#include "clinchlab/random_markets.hpp"
#include "test_util.hpp"

namespace clinchlab {
namespace {

using test::divisible_market;

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorKind::kParse;
}

TEST(ValidateMarket, AcceptsDistinctValuations) {
  auto m = divisible_market({{4, 1}, {3, 1}});
  ASSERT_EQ(m.bidders().size(), 2u);
  EXPECT_EQ(m.bidders()[0].id, "1");
  EXPECT_EQ(m.bidders()[1].id, "2");
}

TEST(ValidateMarket, SortsByDescendingValuation) {
  auto m = divisible_market({{3, 1}, {4, 1}});
  EXPECT_EQ(m.bidders()[0].valuation, 4.0);
  EXPECT_EQ(m.bidders()[0].id, "2");
  EXPECT_EQ(m.bidders()[1].valuation, 3.0);
}

TEST(ValidateMarket, IsIdempotent) {
  auto once = divisible_market({{1, 2}, {5, 1}, {3, 4}});
  auto twice = validate_market(once.market());
  EXPECT_EQ(once, twice);
}

TEST(ValidateMarket, RejectsDuplicateValuationForDivisibleSupply) {
  EXPECT_EQ(kind_of([] { divisible_market({{4, 1}, {4, 1}}); }), ErrorKind::kDuplicateValuation);
}

TEST(ValidateMarket, AllowsDuplicateValuationForUnits) {
  Market<Rational> m;
  m.supply = Indivisible{3};
  m.bidders = {{"a", 4, Rational(1)}, {"b", 4, Rational(2)}};
  EXPECT_NO_THROW(validate_market(m));
}

TEST(ValidateMarket, RejectsNegativeInputs) {
  EXPECT_EQ(kind_of([] { divisible_market({{-1, 1}, {3, 1}}); }), ErrorKind::kNegativeInput);
  EXPECT_EQ(kind_of([] { divisible_market({{4, -1}, {3, 1}}); }), ErrorKind::kNegativeInput);
}

TEST(ValidateMarket, RejectsSingleBidder) {
  EXPECT_EQ(kind_of([] { divisible_market({{4, 1}}); }), ErrorKind::kTooFewBidders);
}

TEST(ValidateMarket, ChecksArrivalOrder) {
  Market<double> m;
  m.bidders = {{"1", 4, 1.0}, {"2", 3, 1.0}};
  m.arrivals = {{2.0, {"t1", 2.5, 1.0}}, {1.0, {"t2", 3.5, 1.0}}};
  EXPECT_EQ(kind_of([&] { validate_market(m); }), ErrorKind::kArrivalOrderViolation);
  m.arrivals = {{1.0, {"t1", 2.5, 1.0}}, {1.0, {"t2", 3.5, 1.0}}};
  EXPECT_EQ(kind_of([&] { validate_market(m); }), ErrorKind::kArrivalOrderViolation);
  m.arrivals = {{2.0, {"t1", 1.5, 1.0}}};
  EXPECT_EQ(kind_of([&] { validate_market(m); }), ErrorKind::kArrivalOrderViolation);
  m.arrivals = {{1.0, {"t1", 3, 1.0}}};
  EXPECT_EQ(kind_of([&] { validate_market(m); }), ErrorKind::kDuplicateValuation);
  m.arrivals = {{1.0, {"t1", 2.5, 1.0}}, {2.0, {"t2", 3.5, 1.0}}};
  EXPECT_NO_THROW(validate_market(m));
}

TEST(Utility, MatchesDefinition) {
  Bidder<Rational> b{"1", 4, Rational(1)};
  auto u = utility(b, Rational(5, 9), Rational(1));
  EXPECT_FALSE(u.infeasible);
  EXPECT_EQ(u.value, Rational(11, 9));
  EXPECT_EQ(utility(b, Rational(0), Rational(0)).value, Rational(0));
  EXPECT_TRUE(utility(b, Rational(1), Rational(2)).infeasible);
  EXPECT_LT(utility(b, Rational(1), Rational(2)), utility(b, Rational(0), Rational(0)));
}

TEST(Budget, UnboundedDominates) {
  auto inf = Budget<double>::unbounded();
  EXPECT_TRUE(Budget<double>(1e300) < inf);
  EXPECT_FALSE(inf < Budget<double>(1e300));
  EXPECT_TRUE(inf.covers(1e308));
  EXPECT_TRUE(std::isinf(inf.as_double()));
}

TEST(Rational, ParsesFractionsAndDecimals) {
  EXPECT_EQ(parse_rational("3/2"), Rational(3, 2));
  EXPECT_EQ(parse_rational("0.1"), Rational(1, 10));
  EXPECT_EQ(parse_rational("-2.5e1"), Rational(-25));
  EXPECT_EQ(parse_rational("  7 "), Rational(7));
  EXPECT_EQ(to_string(Rational(16, 3)), "16/3");
  EXPECT_EQ(to_string(Rational(4)), "4");
  EXPECT_THROW(parse_rational("1/0"), Error);
  EXPECT_THROW(parse_rational("abc"), Error);
  EXPECT_THROW(parse_rational("1.2.3"), Error);
}

TEST(MarketIo, ParsesDocument) {
  auto m = io::parse_market(R"({"supply": {"units": 4},
    "bidders": [{"id": "a", "valuation": 6, "budget": 9}, {"id": "b", "valuation": "5", "budget": "inf"}]})");
  ASSERT_FALSE(m.divisible());
  EXPECT_EQ(std::get<Indivisible>(m.supply).units, 4);
  EXPECT_EQ(m.bidders[1].valuation, Rational(5));
  EXPECT_TRUE(m.bidders[1].budget.is_unbounded());
}

TEST(MarketIo, DecimalsAreExact) {
  auto m = io::parse_market(R"({"bidders": [{"valuation": 0.1, "budget": 1e-1}, {"valuation": 0.3, "budget": "1/3"}]})");
  EXPECT_EQ(m.bidders[0].valuation, Rational(1, 10));
  EXPECT_EQ(m.bidders[0].budget.amount(), Rational(1, 10));
  EXPECT_EQ(m.bidders[1].budget.amount(), Rational(1, 3));
  EXPECT_EQ(m.bidders[0].id, "1");
}

TEST(MarketIo, EmptyBidderListIsAParseError) {
  EXPECT_EQ(kind_of([] { io::parse_market(R"({"bidders": []})"); }), ErrorKind::kParse);
}

TEST(MarketIo, SyntaxErrorsCarryLineContext) {
  try {
    io::parse_market("{\n  \"bidders\": [\n    {\"valuation\": 1,,}\n  ]\n}", "m.json");
    FAIL() << "expected a parse error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kParse);
    EXPECT_NE(std::string(e.what()).find("m.json:3:"), std::string::npos) << e.what();
  }
}

TEST(MarketIo, MissingFieldNamesThePath) {
  try {
    io::parse_market(R"({"bidders": [{"valuation": 1, "budget": 1}, {"valuation": 2}]})", "m.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("/bidders/1"), std::string::npos) << e.what();
  }
}

TEST(MarketIo, RationalRoundTripIsExact) {
  Market<Rational> m;
  m.bidders = {{"a", Rational(7, 3), Rational(1, 3)}, {"b", Rational(1, 10), Budget<Rational>::unbounded()}};
  m.arrivals = {{Rational(1, 7), {"t", Rational(22, 7), Rational(5)}}};
  auto back = io::parse_market(io::serialize_market(m));
  EXPECT_EQ(back, m);
}

TEST(MarketIo, DoubleRoundTripIsBitEqual) {
  gen::Rng rng(11);
  for (int k = 0; k < 50; ++k) {
    auto m = gen::asymmetric_market(rng).market();
    auto back = io::to_double_market(io::parse_market(io::serialize_market(m)));
    EXPECT_EQ(back, m);
  }
}

}  // namespace
}  // namespace clinchlab
