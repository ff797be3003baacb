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

// clinchlab command-line front end.
//
// Exit codes: 0 ok, 1 an asserted verdict failed, 2 input error,
// 3 validation gate (symmetry required but absent), 4 numerical failure.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "clinchlab/clinchlab.hpp"

namespace {

using namespace clinchlab;
using io::json;

constexpr int kExitOk = 0;
constexpr int kExitAssert = 1;
constexpr int kExitInput = 2;
constexpr int kExitGate = 3;
constexpr int kExitNumeric = 4;

struct Common {
  std::string format = "table";
  std::string output;
  double epsilon = 1e-7;
};

void emit(const Common& c, const std::string& text) {
  if (c.output.empty() || c.output == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(c.output, std::ios::binary);
  if (!out) throw Error(ErrorKind::kParse, c.output + ": cannot write file");
  out << text;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kParse, path + ": cannot write file");
  out << text;
}

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNotSymmetric: return kExitGate;
    case ErrorKind::kNumericalFailure:
    case ErrorKind::kInvariantViolation:
    case ErrorKind::kStepTooLarge: return kExitNumeric;
    default: return kExitInput;
  }
}

bool symmetric(const std::vector<Bidder<double>>& people) { return detail::common_budget(people).has_value(); }

// ---- run / run-indiv -------------------------------------------------------

struct RunArgs {
  std::string market;
  bool no_fast_path = false;
  std::string trace;
  std::string trace_format = "csv";
  int samples = 16;
  std::string plot;
};

int run_indivisible_cmd(const Common& c, const ValidatedMarket<Rational>& market, const RunArgs& a) {
  auto result = indivisible::run_indivisible(market);
  if (!a.trace.empty()) write_file(a.trace, io::indivisible_log_csv(result));
  if (c.format == "json") {
    emit(c, dump(io::indivisible_report_json(market, result)));
  } else if (c.format == "csv") {
    emit(c, io::indivisible_report_csv(market, result));
  } else {
    emit(c, io::indivisible_report_table(market, result));
  }
  return kExitOk;
}

int cmd_run(const Common& c, const RunArgs& a, bool force_indivisible) {
  auto exact = io::load_market(a.market);
  if (force_indivisible || !exact.divisible()) {
    if (exact.divisible()) throw Error(ErrorKind::kDomainError, "run-indiv needs a market with integer 'units' supply");
    return run_indivisible_cmd(c, validate_market(exact), a);
  }
  auto market = validate_market(io::to_double_market(exact));
  auto run = divisible::run_auction(market, divisible::EngineOptions{!a.no_fast_path});
  if (!a.trace.empty()) {
    auto rows = io::trace_rows(run.trace, a.samples);
    write_file(a.trace, a.trace_format == "json" ? dump(io::trace_json(rows)) : io::trace_csv(rows));
  }
  if (!a.plot.empty()) write_file(a.plot, io::trace_csv(io::trace_rows(run.trace, a.samples), false));
  if (c.format == "json") {
    emit(c, dump(io::run_report_json(market, run)));
  } else if (c.format == "csv") {
    emit(c, io::run_report_csv(market, run));
  } else {
    emit(c, io::run_report_table(market, run));
  }
  return kExitOk;
}

// ---- compare / online ------------------------------------------------------

struct CompareArgs {
  std::string market;
  std::string theta_file;
  std::optional<std::string> theta_valuation;
  std::optional<std::string> theta_budget;
  std::string theta_id = "theta";
  bool assert_symmetric = false;
  bool require_symmetric = false;
  bool no_fast_path = false;
};

std::string render(const Common& c, const ComparisonReport& r) {
  if (c.format == "json") return dump(io::comparison_json(r));
  if (c.format == "csv") {
    std::ostringstream out;
    out << "id,dx,dpi\n";
    auto people = r.base_participants();
    for (std::size_t i = 0; i < people.size(); ++i) {
      out << people[i].id << "," << to_string(r.delta_x(i)) << "," << to_string(r.delta_pi(i)) << "\n";
    }
    out << "verdict,result\n";
    for (const auto& [name, v] : r.verdicts) out << name << "," << verdict_name(v) << "\n";
    return out.str();
  }
  return io::comparison_table(r);
}

bool symmetric_verdicts_fail(const ComparisonReport& r) {
  for (const auto& [name, v] : r.verdicts) {
    if (v == Verdict::kFail) return true;
  }
  return false;
}

int cmd_compare(const Common& c, const CompareArgs& a) {
  auto base = validate_market(io::to_double_market(io::load_market(a.market)));
  Bidder<Rational> theta_exact;
  if (!a.theta_file.empty()) {
    auto doc = io::parse_json_exact(io::read_file(a.theta_file), a.theta_file);
    theta_exact = io::bidder_from_json(doc, a.theta_file);
  } else {
    if (!a.theta_valuation || !a.theta_budget) {
      throw Error(ErrorKind::kParse, "compare needs --theta FILE or both --theta-valuation and --theta-budget");
    }
    theta_exact.id = a.theta_id;
    theta_exact.valuation = parse_rational(*a.theta_valuation);
    theta_exact.budget = io::detail::is_unbounded_text(*a.theta_budget)
                             ? Budget<Rational>::unbounded()
                             : Budget<Rational>(parse_rational(*a.theta_budget));
  }
  auto theta = bidder_cast<double>(theta_exact);
  auto people = base.participants();
  people.push_back(theta);
  bool sym = symmetric(people);
  if (a.require_symmetric && !sym) {
    std::cerr << "error: --require-symmetric given but budgets differ\n";
    return kExitGate;
  }
  auto report = compare_add_bidder(base, theta, c.epsilon, divisible::EngineOptions{!a.no_fast_path});
  emit(c, render(c, report));
  if (a.assert_symmetric && sym && symmetric_verdicts_fail(report)) return kExitAssert;
  return kExitOk;
}

int cmd_online(const Common& c, const CompareArgs& a) {
  auto market = validate_market(io::to_double_market(io::load_market(a.market)));
  if (market.arrivals().empty()) throw Error(ErrorKind::kDomainError, "online needs a market with arrivals");
  auto report = run_online_experiment(market, c.epsilon, divisible::EngineOptions{!a.no_fast_path});
  emit(c, render(c, report));
  if (a.assert_symmetric && symmetric_verdicts_fail(report)) return kExitAssert;
  return kExitOk;
}

// ---- sweep -----------------------------------------------------------------

struct SweepArgs {
  std::string scenario_class = "symmetric-add";
  int count = 100;
  std::uint64_t seed = 1;
  int threads = 0;
  bool assert_all = false;
};

// Campaigns use the event loop so the symmetric checks are not comparing the
// closed form with itself.
constexpr divisible::EngineOptions kCampaign{false};

struct SweepItem {
  std::optional<ComparisonReport> report;
  std::string error;
};

int cmd_sweep(const Common& c, SweepArgs a) {
  if (const char* env = std::getenv("CLINCHLAB_SEED")) {
    try {
      a.seed = std::stoull(env);
    } catch (const std::exception&) {
      throw Error(ErrorKind::kParse, std::string("CLINCHLAB_SEED is not an integer: ") + env);
    }
  }
  if (a.count < 0) throw Error(ErrorKind::kNegativeInput, "count must be nonnegative");
  const std::string& cls = a.scenario_class;
  if (cls != "symmetric-add" && cls != "symmetric-online" && cls != "asymmetric-search") {
    throw Error(ErrorKind::kParse, "unknown scenario class '" + cls + "'");
  }

  // Scenarios are drawn sequentially so the seed fully determines them; the
  // runs themselves fan out and are merged by index.
  gen::Rng rng(a.seed);
  std::vector<gen::Scenario> adds;
  std::vector<ValidatedMarket<double>> onlines;
  for (int k = 0; k < a.count; ++k) {
    if (cls == "symmetric-add") adds.push_back(gen::symmetric_add_scenario(rng));
    if (cls == "asymmetric-search") adds.push_back(gen::asymmetric_add_scenario(rng));
    if (cls == "symmetric-online") onlines.push_back(gen::symmetric_online_market(rng));
  }
  std::vector<SweepItem> items(static_cast<std::size_t>(a.count));
  auto work = [&](std::size_t k) {
    try {
      if (cls == "symmetric-online") {
        items[k].report = run_online_experiment(onlines[k], c.epsilon, kCampaign);
      } else {
        items[k].report = compare_add_bidder(adds[k].market, adds[k].theta, c.epsilon, kCampaign);
      }
    } catch (const Error& e) {
      items[k].error = e.what();
    }
  };
  unsigned threads = a.threads > 0 ? static_cast<unsigned>(a.threads) : std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t k = t; k < items.size(); k += threads) work(k);
    });
  }
  for (auto& th : pool) th.join();

  std::map<std::string, std::map<std::string, int>> tally;
  std::map<std::string, int> cases;
  json counterexamples = json::array();
  int errors = 0;
  bool any_fail = false;
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (!items[k].report) {
      ++errors;
      counterexamples.push_back({{"index", k}, {"error", items[k].error}});
      continue;
    }
    const auto& r = *items[k].report;
    for (const auto& [name, v] : r.verdicts) {
      ++tally[name][verdict_name(v)];
      if (v == Verdict::kFail) any_fail = true;
    }
    if (r.case_label) ++cases[case_label_name(*r.case_label)];
    bool interesting = cls == "asymmetric-search" ? r.delta_rev() < -c.epsilon : !r.all_pass();
    if (interesting) {
      json entry = io::comparison_json(r);
      entry["index"] = k;
      counterexamples.push_back(std::move(entry));
    }
  }

  if (c.format == "json") {
    json doc;
    doc["class"] = cls;
    doc["count"] = a.count;
    doc["seed"] = a.seed;
    doc["errors"] = errors;
    doc["verdicts"] = tally;
    doc["cases"] = cases;
    doc["counterexamples"] = counterexamples;
    emit(c, dump(doc));
  } else {
    std::ostringstream out;
    out << "class " << cls << "  count " << a.count << "  seed " << a.seed << "  errors " << errors << "\n";
    if (c.format == "csv") {
      out << "verdict,pass,fail,n/a\n";
      for (const auto& [name, t] : tally) {
        auto get = [&](const char* key) { auto it = t.find(key); return it == t.end() ? 0 : it->second; };
        out << name << "," << get("pass") << "," << get("fail") << "," << get("n/a") << "\n";
      }
    } else {
      for (const auto& [name, t] : tally) {
        out << io::pad(name, 24);
        for (const auto& [v, count] : t) out << v << "=" << count << " ";
        out << "\n";
      }
      for (const auto& [label, count] : cases) out << io::pad(label, 14) << count << "\n";
      out << "counterexamples " << counterexamples.size() << "\n";
      for (const auto& ce : counterexamples) {
        if (ce.contains("error")) {
          out << "  #" << ce["index"].get<std::size_t>() << " error: " << ce["error"].get<std::string>() << "\n";
        } else {
          out << "  #" << ce["index"].get<std::size_t>() << " " << ce["base_market"].dump() << " + "
              << ce["augmented_market"]["bidders"].back().dump() << "\n";
        }
      }
    }
    emit(c, out.str());
  }
  if (errors > 0) return kExitNumeric;
  if (a.assert_all && any_fail) return kExitAssert;
  return kExitOk;
}

// ---- oracle-check ----------------------------------------------------------

struct OracleArgs {
  std::string market;
  double step = 1e-4;
  int refine = 40;
  bool ic = false;
};

int cmd_oracle(const Common& c, const OracleArgs& a) {
  auto market = validate_market(io::to_double_market(io::load_market(a.market)));
  auto engine = divisible::run_auction(market);
  oracle::OracleOptions opts;
  opts.step = a.step;
  opts.event_refine = a.refine;
  auto approx = oracle::integrate(market, opts);
  double dist = oracle::outcome_distance(engine.outcome, approx);
  auto people = market.participants();
  std::vector<double> gains;
  if (a.ic) {
    for (std::size_t i = 0; i < people.size(); ++i) {
      gains.push_back(oracle::ic_check(market, i, oracle::default_bid_grid(market)));
    }
  }
  if (c.format == "json") {
    json doc;
    doc["step"] = a.step;
    doc["engine"] = io::outcome_json(people, engine.outcome);
    doc["oracle"] = io::outcome_json(people, approx);
    doc["max_deviation"] = dist;
    if (a.ic) {
      json g = json::object();
      for (std::size_t i = 0; i < people.size(); ++i) g[people[i].id] = gains[i];
      doc["ic_max_gain"] = g;
    }
    emit(c, dump(doc));
  } else {
    std::ostringstream out;
    out << io::pad("id", 12) << io::pad("x", 14) << io::pad("x_oracle", 14) << io::pad("pi", 14) << "pi_oracle\n";
    for (std::size_t i = 0; i < people.size(); ++i) {
      out << io::pad(people[i].id, 12) << io::pad(io::fixed(engine.outcome.allocation[i]), 14)
          << io::pad(io::fixed(approx.allocation[i]), 14) << io::pad(io::fixed(engine.outcome.payment[i]), 14)
          << io::fixed(approx.payment[i]) << "\n";
    }
    out << "step " << to_string(a.step) << "  max deviation " << to_string(dist) << "\n";
    for (std::size_t i = 0; i < gains.size(); ++i) {
      out << "ic " << people[i].id << " max gain " << to_string(gains[i]) << "\n";
    }
    emit(c, out.str());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"clinchlab: adaptive clinching auction simulator and property checker"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--format", common.format, "Output format")
      ->check(CLI::IsMember({"table", "csv", "json"}))
      ->capture_default_str();
  app.add_option("-o,--output", common.output, "Write the report here instead of stdout");
  app.add_option("--epsilon", common.epsilon, "Verdict tolerance")->capture_default_str();

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run the auction on a market file");
  run->add_option("market", run_args.market, "Market file")->required();
  run->add_flag("--no-fast-path", run_args.no_fast_path, "Force the event-driven path for symmetric markets");
  run->add_option("--trace", run_args.trace, "Write the sampled trace (divisible) or event log (indivisible)");
  run->add_option("--trace-format", run_args.trace_format, "Trace format")->check(CLI::IsMember({"csv", "json"}));
  run->add_option("--samples", run_args.samples, "Samples per segment")->capture_default_str();
  run->add_option("--emit-plot-data", run_args.plot, "Write (p, S, x, b) sample table as CSV");

  RunArgs indiv_args;
  auto* indiv = app.add_subcommand("run-indiv", "Run the indivisible-units auction with exact arithmetic");
  indiv->add_option("market", indiv_args.market, "Market file")->required();
  indiv->add_option("--trace", indiv_args.trace, "Write the event log as CSV");

  CompareArgs cmp_args;
  auto* cmp = app.add_subcommand("compare", "Compare a market with and without an added bidder");
  cmp->add_option("market", cmp_args.market, "Base market file")->required();
  cmp->add_option("--theta", cmp_args.theta_file, "Added bidder document {id, valuation, budget}");
  cmp->add_option("--theta-valuation", cmp_args.theta_valuation, "Added bidder valuation");
  cmp->add_option("--theta-budget", cmp_args.theta_budget, "Added bidder budget (or inf)");
  cmp->add_option("--theta-id", cmp_args.theta_id, "Added bidder id")->capture_default_str();
  cmp->add_flag("--assert-symmetric", cmp_args.assert_symmetric, "Exit 1 if a verdict fails on symmetric input");
  cmp->add_flag("--require-symmetric", cmp_args.require_symmetric, "Exit 3 unless all budgets are equal");
  cmp->add_flag("--no-fast-path", cmp_args.no_fast_path, "Force the event-driven path");

  CompareArgs onl_args;
  auto* onl = app.add_subcommand("online", "Compare a market with arrivals against the same market without them");
  onl->add_option("market", onl_args.market, "Market file with arrivals")->required();
  onl->add_flag("--assert-symmetric", onl_args.assert_symmetric, "Exit 1 if a verdict fails");
  onl->add_flag("--no-fast-path", onl_args.no_fast_path, "Force the event-driven path");

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "Randomized comparison campaign");
  sweep->add_option("--class", sweep_args.scenario_class, "symmetric-add | symmetric-online | asymmetric-search")
      ->check(CLI::IsMember({"symmetric-add", "symmetric-online", "asymmetric-search"}))
      ->capture_default_str();
  sweep->add_option("-n,--count", sweep_args.count, "Number of scenarios")->capture_default_str();
  sweep->add_option("--seed", sweep_args.seed, "Seed (CLINCHLAB_SEED overrides)")->capture_default_str();
  sweep->add_option("--threads", sweep_args.threads, "Worker threads (0 = hardware)");
  sweep->add_flag("--assert", sweep_args.assert_all, "Exit 1 if any verdict fails");

  OracleArgs oracle_args;
  auto* orc = app.add_subcommand("oracle-check", "Compare the engine with the step integrator");
  orc->add_option("market", oracle_args.market, "Market file")->required();
  orc->add_option("--step", oracle_args.step, "Integrator step h")->check(CLI::PositiveNumber)->capture_default_str();
  orc->add_option("--refine", oracle_args.refine, "Bisection iterations")->capture_default_str();
  orc->add_flag("--ic", oracle_args.ic, "Also sample bid deviations for every bidder");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*run) return cmd_run(common, run_args, false);
    if (*indiv) return cmd_run(common, indiv_args, true);
    if (*cmp) return cmd_compare(common, cmp_args);
    if (*onl) return cmd_online(common, onl_args);
    if (*sweep) return cmd_sweep(common, sweep_args);
    if (*orc) return cmd_oracle(common, oracle_args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitOk;
}
