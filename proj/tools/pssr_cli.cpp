// pssr: converse bounds, scheme optimization, query synthesis and
// simulation for private structured-subset retrieval.

#include <chrono>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "pssr/converse.hpp"
#include "pssr/errors.hpp"
#include "pssr/io.hpp"
#include "pssr/reduced_program.hpp"
#include "pssr/scheme_program.hpp"
#include "pssr/sim.hpp"
#include "pssr/synth.hpp"

using namespace pssr;

namespace {

constexpr const char* kVersion = "1.0.0";

enum Exit : int {
  kOk = 0,
  kGeneric = 1,
  kParse = 2,
  kInfeasible = 3,
  kBudget = 4,
  kCorrectness = 5,
  kPrivacy = 6,
  kSynthesis = 7,
};

struct Budgets {
  std::uint64_t permutations = 50'000'000;
  long nodes = 200'000;
  double time_limit_s = 0;
};

struct Options {
  std::string instance_path;
  std::string output;
  Budgets budget;
  int jobs = 1;
  // optimize
  std::string stage = "both";
  bool reduced = false;
  bool mpir_restricted = false;
  bool free_l = false;
  std::string rate;
  bool no_orbits = false;
  // synthesize
  std::string counts_path;
  std::string demand = "all";
  std::string render = "machine";
  // simulate
  std::string plans_path;
  std::uint64_t seeds = 100;
  std::uint64_t first_seed = 1;
  std::vector<std::uint32_t> fields{2, 3, 4};
  std::int64_t privacy_trials = 10'000;
  std::uint64_t privacy_seed = 20240601;
};

/// Failure after a partial result document was assembled.
struct PartialResult {
  Json doc;
  int code;
  std::string message;
};

template <class T>
void env_override(const char* name, T& target) {
  const char* v = std::getenv(name);
  if (!v || !*v) return;
  std::istringstream in(v);
  T x{};
  if (!(in >> x)) throw InvalidInput(std::string("environment variable ") + name + " is not a number");
  target = x;
}

SolveOptions solve_options(const Budgets& b) {
  SolveOptions o;
  o.max_nodes = b.nodes;
  o.time_limit = std::chrono::milliseconds(static_cast<long>(b.time_limit_s * 1000));
  return o;
}

ConverseOptions converse_options(const Options& opt) {
  ConverseOptions c;
  c.max_permutations = opt.budget.permutations;
  c.orbit_reduction = !opt.no_orbits;
  return c;
}

void emit(const Options& opt, const std::string& text) {
  if (opt.output.empty() || opt.output == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(opt.output);
  if (!out) throw Error("cannot write " + opt.output);
  out << text;
}

Json provenance(const Options& opt, std::chrono::steady_clock::time_point start) {
  Json p;
  p["tool"] = "pssr";
  p["version"] = kVersion;
  p["budgets"] = {{"ilp_nodes", opt.budget.nodes},
                  {"permutations", opt.budget.permutations},
                  {"time_limit_s", opt.budget.time_limit_s}};
  p["seeds"] = {{"first", opt.first_seed}, {"count", opt.seeds}, {"privacy", opt.privacy_seed}};
  p["wall_time_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
  return p;
}

NormalizedInstance load_instance(const std::string& path) {
  return normalize_instance(instance_from_json(read_json_file(path)));
}

Json instance_section(const NormalizedInstance& ni) {
  Json doc = instance_to_json(ni.instance);
  doc["remap"] = remap_to_json(ni.remap);
  return doc;
}

// Runs fn(j) for j in [0, count) on up to `jobs` threads; results keep
// their index order.
template <class R>
std::vector<R> parallel_map(int count, int jobs, const std::function<R(int)>& fn) {
  std::vector<std::optional<R>> out(static_cast<std::size_t>(count));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  const int workers = std::max(1, std::min(jobs, count));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int j = w; j < count; j += workers) {
        try {
          out[static_cast<std::size_t>(j)] = fn(j);
        } catch (...) {
          errors[static_cast<std::size_t>(j)] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<R> result;
  for (auto& o : out) result.push_back(std::move(*o));
  return result;
}

// ---------------------------------------------------------------------------
// Stages

Json bound_stage(const NormalizedInstance& ni, const Options& opt, std::optional<Rational>* rate_out) {
  const ConverseReport r = rate_upper_bound(ni.instance, converse_options(opt));
  Json doc = converse_to_json(r);
  if (rate_out) *rate_out = r.rate_upper_bound;
  if (!opt.rate.empty()) {
    const Rational rate = parse_rational(opt.rate);
    const auto lb = subpacketization_lower_bound(ni.instance.servers, ni.instance.demand_size, rate);
    doc["subpacketization_lower_bound"] = {
        {"rate", to_string(rate)}, {"L", lb.value.get_str()}, {"divisible_by_servers", lb.divisible_by_servers}};
  }
  return doc;
}

struct OptimizeOutcome {
  Json doc;
  std::optional<SchemeCounts> counts;
};

OptimizeOutcome optimize_stage(const NormalizedInstance& ni, const Options& opt,
                               const std::optional<Rational>& upper) {
  const DemandInstance& inst = ni.instance;
  OptimizeOutcome out;
  if (opt.stage != "rate" && opt.stage != "subpacketization" && opt.stage != "both") {
    throw InvalidInput("--stage must be rate, subpacketization or both");
  }
  if (opt.reduced || opt.mpir_restricted) {
    if (inst.kind != FamilyKind::Full) throw InvalidInput("--reduced and --mpir-restricted need a full family");
    const ReducedProgram rp = opt.mpir_restricted
                                  ? build_mpir_restricted_program(inst.servers, inst.messages, inst.demand_size)
                                  : build_reduced_full_family_program(inst.servers, inst.messages, inst.demand_size);
    const ReducedResult rr = solve_reduced(rp, inst.servers, inst.demand_size, solve_options(opt.budget));
    out.doc["formulation"] = opt.mpir_restricted ? "mpir-restricted" : "reduced";
    out.doc["rate"] = to_string(rr.rate);
    out.doc["normalized_total"] = to_string(rr.normalized_total);
    Json t = Json::object();
    for (const auto& [u, var] : rp.index.t) {
      t[std::to_string(u)] = to_string(rr.solution.values.at(static_cast<std::size_t>(var)));
    }
    out.doc["per_support_size_T"] = t;
    return out;
  }

  const RateResult rr = maximize_rate(inst, solve_options(opt.budget), upper);
  out.doc["formulation"] = "general";
  out.doc["rate"] = to_string(rr.rate);
  out.doc["normalized_total"] = to_string(rr.normalized_total);
  out.doc["lift_multiplier"] = rr.lift_multiplier.get_str();
  out.doc["lifted_L"] = rr.counts.l;
  out.doc["pivots"] = rr.pivots;
  SchemeCounts best = rr.counts;
  if (opt.stage != "rate") {
    const SubpacketizationResult sr =
        opt.free_l ? minimize_subpacketization_free(inst, rr.rate, rr.counts, solve_options(opt.budget))
                   : minimize_subpacketization(inst, rr.rate, rr.counts, solve_options(opt.budget));
    Json cands = Json::array();
    for (const auto& c : sr.candidates) {
      cands.push_back({{"L", c.l}, {"status", to_string(c.status)}, {"nodes", c.nodes}});
    }
    out.doc["subpacketization"] = {{"lower_bound", sr.lower_bound.get_str()},
                                   {"L", sr.counts.l},
                                   {"proven_minimal", sr.proven_minimal},
                                   {"candidates", cands}};
    best = sr.counts;
    if (!sr.proven_minimal) {
      out.doc["L"] = best.l;
      out.doc["T_total"] = best.t_total();
      out.doc["counts"] = counts_to_json(best);
      out.counts = best;
      throw PartialResult{out.doc, kBudget, "subpacketization search ran out of budget; L is an upper bound"};
    }
  }
  out.doc["L"] = best.l;
  out.doc["T_total"] = best.t_total();
  out.doc["counts"] = counts_to_json(best);
  out.counts = best;
  return out;
}

struct SynthesisOutcome {
  Json doc;
  std::vector<SynthesizedPlan> plans;
};

SynthesisOutcome synthesis_stage(const SchemeCounts& counts, const Options& opt) {
  const int e = counts.instance.family_size();
  SynthesisOutcome out;
  out.plans = parallel_map<SynthesizedPlan>(e, opt.jobs, [&](int j) { return synthesize(counts, j); });
  std::vector<QueryPlan> queries;
  for (const auto& p : out.plans) queries.push_back(p.query);
  const PrivacyReport pr = verify_structural_privacy(queries, counts.t);
  Json plans = Json::array();
  for (const auto& p : out.plans) plans.push_back(plan_to_json(p));
  Json per_j = Json::array();
  for (const auto& p : out.plans) {
    per_j.push_back({{"demand", p.query.demand + 1},
                     {"symbols_per_server", p.query.servers.front().size()},
                     {"digest", plan_digest(p)}});
  }
  out.doc["summary"] = per_j;
  out.doc["structural_privacy"] = {{"passed", pr.passed}, {"violations", pr.violations}};
  out.doc["plans"] = plans;
  if (!pr.passed) throw PartialResult{out.doc, kPrivacy, "structural privacy failed: " + pr.violations.front()};
  return out;
}

Json simulation_stage(const DemandInstance& inst, const std::vector<SynthesizedPlan>& plans, const Options& opt) {
  std::vector<CampaignSummary> parts = parallel_map<CampaignSummary>(
      static_cast<int>(plans.size()), opt.jobs,
      [&](int j) { return fuzz_campaign(inst, {plans[static_cast<std::size_t>(j)]}, opt.first_seed, opt.seeds, opt.fields); });
  CampaignSummary total;
  bool first = true;
  for (const auto& p : parts) {
    total.runs += p.runs;
    total.passed += p.passed;
    total.failed += p.failed;
    if (p.runs > p.failed) {
      if (first) {
        total.rate = p.rate;
        first = false;
      } else if (p.rate != total.rate) {
        total.rate_constant = false;
      }
    }
    total.rate_constant = total.rate_constant && p.rate_constant;
    if (p.failure && !total.failure) total.failure = p.failure;
  }
  std::vector<QueryPlan> queries;
  for (const auto& p : plans) queries.push_back(p.query);
  const PrivacyReport structural = verify_structural_privacy(queries);
  const PrivacyTestReport pt = privacy_relabeling_test(queries, opt.privacy_trials, opt.privacy_seed);

  Json doc;
  Json fields = Json::array();
  for (auto q : opt.fields) fields.push_back(q);
  doc["grid"] = {{"demands", plans.size()}, {"first_seed", opt.first_seed}, {"seeds", opt.seeds}, {"fields", fields}};
  doc["campaign"] = campaign_to_json(total, inst);
  doc["structural_privacy"] = {{"passed", structural.passed}, {"violations", structural.violations}};
  doc["privacy_relabeling"] = privacy_test_to_json(pt);
  if (total.failure) {
    throw PartialResult{doc, kCorrectness,
                        "decoding failed for demand " + std::to_string(total.failure->demand + 1) + ", seed " +
                            std::to_string(total.failure->seed) + ", q = " +
                            std::to_string(total.failure->field_order) + ": " + total.failure->message};
  }
  if (!structural.passed) throw PartialResult{doc, kPrivacy, "structural privacy failed: " + structural.violations.front()};
  if (!pt.within_band) {
    std::cerr << "warning: relabeling distance " << pt.max_distance << " exceeds its 3-sigma null band " << pt.band
              << "\n";
  }
  return doc;
}

// ---------------------------------------------------------------------------
// Commands

int run_bound(const Options& opt, Json& doc) {
  const NormalizedInstance ni = load_instance(opt.instance_path);
  doc["instance"] = instance_section(ni);
  doc["converse"] = bound_stage(ni, opt, nullptr);
  return kOk;
}

int run_optimize(const Options& opt, Json& doc) {
  const NormalizedInstance ni = load_instance(opt.instance_path);
  doc["instance"] = instance_section(ni);
  std::optional<Rational> upper;
  if (!opt.reduced && !opt.mpir_restricted) {
    try {
      doc["converse"] = bound_stage(ni, opt, &upper);
    } catch (const BudgetExceeded&) {
      doc["converse"] = {{"status", "budget exceeded"}};
    }
  }
  try {
    doc["achievable"] = optimize_stage(ni, opt, upper).doc;
  } catch (PartialResult& p) {
    doc["achievable"] = p.doc;
    throw PartialResult{doc, p.code, p.message};
  }
  return kOk;
}

SchemeCounts load_counts(const NormalizedInstance& ni, const std::string& path) {
  const Json res = read_json_file(path);
  const Json* counts = nullptr;
  if (res.contains("achievable") && res["achievable"].contains("counts")) {
    counts = &res["achievable"]["counts"];
  } else if (res.contains("counts")) {
    counts = &res["counts"];
  } else {
    counts = &res;
  }
  if (res.contains("instance")) {
    const DemandInstance echoed = instance_from_json(res["instance"]);
    if (echoed.family != ni.instance.family || echoed.servers != ni.instance.servers) {
      throw InvalidInput(path + ": counts were computed for a different instance");
    }
  }
  return counts_from_json(ni.instance, *counts);
}

int run_synthesize(const Options& opt, Json& doc, std::string& text) {
  const NormalizedInstance ni = load_instance(opt.instance_path);
  if (opt.counts_path.empty()) throw InvalidInput("--counts is required");
  const SchemeCounts counts = load_counts(ni, opt.counts_path);
  const auto issues = check_scheme_counts(counts);
  if (!issues.empty()) throw SynthesisFailure("counts violate the scheme constraints: " + issues.front());
  doc["instance"] = instance_section(ni);
  doc["counts"] = counts_to_json(counts);
  SynthesisOutcome so;
  try {
    so = synthesis_stage(counts, opt);
  } catch (PartialResult& p) {
    doc["synthesis"] = p.doc;
    throw PartialResult{doc, p.code, p.message};
  }
  int only = -1;
  if (opt.demand != "all") {
    try {
      only = std::stoi(opt.demand) - 1;
    } catch (...) {
      throw InvalidInput("--demand must be a 1-based index or 'all'");
    }
    if (only < 0 || only >= ni.instance.family_size()) throw InvalidInput("--demand out of range");
  }
  if (opt.render == "text") {
    std::ostringstream os;
    for (const auto& p : so.plans) {
      if (only >= 0 && p.query.demand != only) continue;
      os << render_query_table(p.query) << "\nDecoding\n" << render_decoding_plan(p.decoding) << "\n";
    }
    os << "structural privacy: pass\n";
    text = os.str();
    return kOk;
  }
  if (opt.render != "machine") throw InvalidInput("--render must be text or machine");
  if (only >= 0) {
    Json plans = Json::array();
    plans.push_back(so.doc["plans"][static_cast<std::size_t>(only)]);
    so.doc["plans"] = plans;
  }
  doc["synthesis"] = so.doc;
  return kOk;
}

int run_simulate(const Options& opt, Json& doc) {
  const Json in = read_json_file(opt.plans_path);
  if (!in.contains("instance")) throw InvalidInput(opt.plans_path + ": missing field 'instance'");
  const DemandInstance inst = instance_from_json(in["instance"]);
  const Json* plans_json = nullptr;
  if (in.contains("synthesis") && in["synthesis"].contains("plans")) plans_json = &in["synthesis"]["plans"];
  if (!plans_json) throw InvalidInput(opt.plans_path + ": missing field 'synthesis.plans'");
  std::vector<SynthesizedPlan> plans;
  for (const auto& p : *plans_json) {
    plans.push_back(plan_from_json(p));
    if (plans.back().query.demand < 0 || plans.back().query.demand >= inst.family_size()) {
      throw InvalidInput(opt.plans_path + ": plan demand index out of range");
    }
  }
  doc["instance"] = in["instance"];
  doc["simulation"] = simulation_stage(inst, plans, opt);
  return kOk;
}

int run_pipeline(const Options& opt, Json& doc) {
  const NormalizedInstance ni = load_instance(opt.instance_path);
  doc["instance"] = instance_section(ni);
  std::optional<Rational> upper;
  doc["converse"] = bound_stage(ni, opt, &upper);
  Options o = opt;
  o.stage = "both";
  OptimizeOutcome oo;
  try {
    oo = optimize_stage(ni, o, upper);
  } catch (PartialResult& p) {
    doc["achievable"] = p.doc;
    throw PartialResult{doc, p.code, p.message};
  }
  doc["achievable"] = oo.doc;
  SynthesisOutcome so;
  try {
    so = synthesis_stage(*oo.counts, opt);
  } catch (PartialResult& p) {
    doc["synthesis"] = p.doc;
    throw PartialResult{doc, p.code, p.message};
  }
  doc["synthesis"] = so.doc;
  try {
    doc["simulation"] = simulation_stage(ni.instance, so.plans, opt);
  } catch (PartialResult& p) {
    doc["simulation"] = p.doc;
    throw PartialResult{doc, p.code, p.message};
  }
  return kOk;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const InvalidInput*>(&e)) return kParse;
  if (dynamic_cast<const Infeasible*>(&e)) return kInfeasible;
  if (dynamic_cast<const BudgetExceeded*>(&e)) return kBudget;
  if (dynamic_cast<const CorrectnessFailure*>(&e)) return kCorrectness;
  if (dynamic_cast<const PrivacyFailure*>(&e)) return kPrivacy;
  if (dynamic_cast<const SynthesisFailure*>(&e)) return kSynthesis;
  return kGeneric;
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  CLI::App app{"Private structured-subset retrieval workbench"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  try {
    env_override("PSSR_BUDGET_NODES", opt.budget.nodes);
    env_override("PSSR_BUDGET_PERMUTATIONS", opt.budget.permutations);
    env_override("PSSR_TIME_LIMIT", opt.budget.time_limit_s);
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParse;
  }

  auto common = [&](CLI::App* sub) {
    sub->add_option("-o,--output", opt.output, "Write the result here instead of stdout");
    sub->add_option("--budget-nodes", opt.budget.nodes, "Branch-and-bound node budget per ILP")->capture_default_str();
    sub->add_option("--budget-permutations", opt.budget.permutations, "Ordering-search node budget")
        ->capture_default_str();
    sub->add_option("--time-limit", opt.budget.time_limit_s, "Wall-clock limit per solve in seconds (0: none)")
        ->capture_default_str();
    sub->add_flag("--no-orbit-reduction", opt.no_orbits, "Disable symmetry reduction in the ordering search");
    sub->add_option("--jobs", opt.jobs, "Worker threads for per-demand work")->capture_default_str();
  };
  auto sim_opts = [&](CLI::App* sub) {
    sub->add_option("--seeds", opt.seeds, "Number of message seeds")->capture_default_str();
    sub->add_option("--first-seed", opt.first_seed, "First message seed")->capture_default_str();
    sub->add_option("--fields", opt.fields, "Field orders (primes or 2^m)")->delimiter(',')->capture_default_str();
    sub->add_option("--trials-privacy", opt.privacy_trials, "Relabeling samples per server")->capture_default_str();
    sub->add_option("--seed", opt.privacy_seed, "Seed for relabeling permutations")->capture_default_str();
  };

  auto* bound = app.add_subcommand("bound", "Rate upper bound and subpacketization lower bound");
  bound->add_option("instance", opt.instance_path, "Instance file")->required();
  bound->add_option("--rate", opt.rate, "Rate a/b for the subpacketization lower bound");
  common(bound);

  auto* optimize = app.add_subcommand("optimize", "Maximize the achievable rate, then minimize L");
  optimize->add_option("instance", opt.instance_path, "Instance file")->required();
  optimize->add_option("--stage", opt.stage, "rate, subpacketization or both")->capture_default_str();
  optimize->add_flag("--reduced", opt.reduced, "Symmetry-reduced program (full families)");
  optimize->add_flag("--mpir-restricted", opt.mpir_restricted, "Reduced program restricted to the known MPIR structure");
  optimize->add_flag("--free-l", opt.free_l, "Minimize L in a single ILP instead of scanning candidates");
  common(optimize);

  auto* synth = app.add_subcommand("synthesize", "Build query tables and decoding plans");
  synth->add_option("instance", opt.instance_path, "Instance file")->required();
  synth->add_option("--counts", opt.counts_path, "Result file holding scheme counts")->required();
  synth->add_option("--demand", opt.demand, "1-based demand index or 'all'")->capture_default_str();
  synth->add_option("--render", opt.render, "text or machine")->capture_default_str();
  common(synth);

  auto* simulate = app.add_subcommand("simulate", "Run the protocol over finite fields and test privacy");
  simulate->add_option("plans", opt.plans_path, "Machine-rendered synthesis output")->required();
  sim_opts(simulate);
  common(simulate);

  auto* pipeline = app.add_subcommand("pipeline", "bound, optimize, synthesize and simulate");
  pipeline->add_option("instance", opt.instance_path, "Instance file")->required();
  pipeline->add_flag("--free-l", opt.free_l, "Minimize L in a single ILP instead of scanning candidates");
  sim_opts(pipeline);
  common(pipeline);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kParse;
  }

  const auto start = std::chrono::steady_clock::now();
  Json doc;
  std::string text;
  int rc = kOk;
  std::string failure;
  try {
    if (*bound) rc = run_bound(opt, doc);
    if (*optimize) rc = run_optimize(opt, doc);
    if (*synth) rc = run_synthesize(opt, doc, text);
    if (*simulate) rc = run_simulate(opt, doc);
    if (*pipeline) rc = run_pipeline(opt, doc);
  } catch (PartialResult& p) {
    doc = p.doc;
    rc = p.code;
    failure = p.message;
    text.clear();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  try {
    if (!text.empty()) {
      emit(opt, text);
    } else {
      doc["provenance"] = provenance(opt, start);
      if (!failure.empty()) doc["status"] = failure;
      emit(opt, doc.dump(2) + "\n");
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kGeneric;
  }
  if (!failure.empty()) std::cerr << "error: " << failure << "\n";
  return rc;
}
