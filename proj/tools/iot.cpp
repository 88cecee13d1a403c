// iot: command-line front end.
//
//   iot forward   --cost C --marginals MG
//   iot enumerate --marginals MG
//   iot identify  OBS --mode MODE [--class K] [--box C0] [--cap N] ...
//   iot estimate  OBS [--method ls|lasso] [--lambda L] [--b0 B] [--sigma S] [--level P]
//   iot generate  --truth C --K K --sigma S --seed X --mode MODE --out OBS
//   iot verify    --cost C OBS
//
// Exit codes: 0 identifiable (or success), 2 ambiguous, 3 inconsistent,
// 4 undecided at the cap, 1 input error.

#include <openssl/evp.h>

#include <cstdio>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "iot/iot.hpp"

using namespace iot;
using io::json;

namespace {

constexpr int kExitInput = 1;

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  std::ostringstream os;
  os << "sha256:" << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < len; ++i) os << std::setw(2) << static_cast<int>(md[i]);
  return os.str();
}

int exit_code(Verdict v) {
  switch (v) {
    case Verdict::identifiable:
    case Verdict::identifiable_in_quotient: return 0;
    case Verdict::ambiguous: return 2;
    case Verdict::inconsistent: return 3;
    case Verdict::undecided_cap: return 4;
  }
  return 2;
}

void emit(const std::string& out, const json& doc) {
  if (out.empty() || out == "-")
    std::cout << io::render(doc);
  else
    io::write_file_atomic(out, io::render(doc));
}

struct Loaded {
  std::string bytes;
  json doc;
};

Loaded load(const std::string& path) {
  Loaded l;
  l.bytes = io::read_file(path);
  l.doc = io::parse_json(l.bytes, path);
  return l;
}

// ---------------------------------------------------------------------------

struct IdentifyArgs {
  std::string input, mode, cls, box, sufficient, out;
  std::uint64_t cap = 1000000;
  bool reduce = false, vertex_only = false;
};

IdentifiabilityReport dispatch(const ObservationSet& obs, const IdentifyArgs& a, const IdentifyOptions& opts) {
  const ClassKind k = obs.cost_class.kind;
  if (a.mode == "costs") {
    if (a.sufficient == "equality") return identify_costs_only_equality_sufficient(obs);
    if (k == ClassKind::monge) return identify_costs_monge(obs);
    return identify_costs_only(obs, opts);
  }
  if (a.mode == "potentials") {
    if (k == ClassKind::monge) {
      auto rep = identify_potentials_monge(obs);
      rep.sufficient_condition_met = monge_support_cover_sufficient(obs);
      return rep;
    }
    return identify_potentials(obs, opts);
  }
  if (a.mode == "plans") {
    if (k == ClassKind::sym0) return identify_plans_only_sym(obs, opts);
    return identify_plans_only(obs, opts);
  }
  if (a.mode == "costs+plans") {
    if (k == ClassKind::sym0) return identify_costs_plans_sym(obs, opts);
    if (a.sufficient == "rank") return identify_costs_plans_rank(obs, opts);
    return identify_costs_plans(obs, opts);
  }
  if (a.mode == "full") return identify_full(obs);
  throw std::invalid_argument("unknown mode '" + a.mode + "'");
}

void require_mode_fields(const ObservationSet& obs, const std::string& mode) {
  const bool alpha = mode == "costs" || mode == "costs+plans";
  const bool plan = mode == "plans" || mode == "costs+plans" || mode == "full";
  const bool pot = mode == "potentials" || mode == "full";
  for (std::size_t k = 0; k < obs.records.size(); ++k) {
    const auto& r = obs.records[k];
    const std::string where = "mode " + mode + ": record " + std::to_string(k);
    if (alpha && !r.alpha) throw std::invalid_argument(where + " has no alpha");
    if (plan && !r.plan) throw std::invalid_argument(where + " has no plan");
    if (pot && !r.potentials) throw std::invalid_argument(where + " has no potentials");
  }
}

int cmd_identify(const IdentifyArgs& a) {
  const auto in = load(a.input);
  ObservationSet obs = io::observations_from(in.doc);
  if (!a.cls.empty()) {
    obs.cost_class = {parse_class_kind(a.cls), {}};
    if (obs.cost_class.kind == ClassKind::box) {
      if (a.box.empty()) throw std::invalid_argument("--class box needs --box C0");
      obs.cost_class.box_bound = parse_rational(a.box);
    }
  } else if (!a.box.empty()) {
    obs.cost_class = CostClass::box(parse_rational(a.box));
  }
  for (const auto& v : validate_observation_set(obs))
    if (v.invariant != "mixed-mode") throw std::invalid_argument("record " + std::to_string(v.record) + ": " + v.detail);
  require_mode_fields(obs, a.mode);

  IdentifyOptions opts;
  opts.cap = a.cap;
  opts.reduce_constraints = a.reduce;
  opts.vertex_only = a.vertex_only;
  const auto rep = dispatch(obs, a, opts);

  io::ReportMeta meta;
  meta.mode = a.mode;
  meta.cost_class = to_string(obs.cost_class.kind);
  meta.input_digest = sha256_hex(in.bytes);
  emit(a.out, io::to_json(rep, meta));
  if (!a.out.empty() && a.out != "-") {
    std::cout << "verdict: " << to_string(rep.verdict) << "\n";
    if (rep.residual_dimension) std::cout << "residual dimension S: " << *rep.residual_dimension << "\n";
  }
  return exit_code(rep.verdict);
}

// ---------------------------------------------------------------------------

int cmd_forward(const std::string& cost_path, const std::string& marg_path, const std::string& out) {
  const auto c = io::cost_from(load(cost_path).doc);
  const auto mg = io::marginals_from(load(marg_path).doc);
  if (c.cost.rows() != mg.rows() || c.cost.cols() != mg.cols())
    throw std::invalid_argument("cost is " + std::to_string(c.cost.rows()) + "x" + std::to_string(c.cost.cols()) +
                                " but marginals are " + std::to_string(mg.rows()) + "x" + std::to_string(mg.cols()));
  emit(out, io::to_json(solve_forward(c.cost, mg)));
  return 0;
}

int cmd_enumerate(const std::string& marg_path, const std::string& out) {
  emit(out, io::to_json(enumerate_extreme_points(io::marginals_from(load(marg_path).doc))));
  return 0;
}

// ---------------------------------------------------------------------------

struct EstimateArgs {
  std::string input, method = "ls", out;
  double lambda = 0, b0 = 0;
  std::optional<double> sigma, level;
};

int cmd_estimate(const EstimateArgs& a) {
  const auto in = load(a.input);
  const auto obs = io::observations_from(in.doc);
  const auto design = build_design(obs, a.sigma);
  EstimateReport rep;
  if (a.method == "ls") {
    rep = least_squares(design);
    if (a.level) rep = with_ci(std::move(rep), *a.level);
  } else if (a.method == "lasso") {
    if (a.level) throw std::invalid_argument("--level applies to least squares only");
    rep = lasso_shifted(design, a.lambda, a.b0);
  } else {
    throw std::invalid_argument("unknown method '" + a.method + "'");
  }
  emit(a.out, io::to_json(rep, sha256_hex(in.bytes)));
  return 0;
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string truth, mode = "costs+plans", out;
  long k = 10;
  double sigma = 0;
  std::uint64_t seed = 0;
  long max_weight = 6;
};

int cmd_generate(const GenerateArgs& a) {
  static const std::set<std::string> modes{"costs", "potentials", "plans", "costs+plans", "full"};
  if (!modes.count(a.mode)) throw std::invalid_argument("unknown mode '" + a.mode + "'");
  if (a.sigma > 0 && a.mode == "plans") throw std::invalid_argument("plans are noiseless; sigma > 0 needs a mode with total costs");
  const auto truth = io::cost_from(load(a.truth).doc);
  const std::size_t n = truth.cost.rows(), m = truth.cost.cols();
  auto data = generate_noisy_observations(truth.cost, uniform_weight_sampler(n, m, a.max_weight), a.k, a.sigma, a.seed);

  ObservationSet obs;
  obs.cost_class = truth.cost_class;
  for (auto& r : data.observations.records) {
    ObservationRecord rec{r.marginals, std::nullopt, std::nullopt, std::nullopt};
    const bool alpha = a.mode != "plans";
    if (alpha) rec.alpha = r.alpha;
    if (a.mode == "plans" || a.mode == "costs+plans" || a.mode == "full") rec.plan = r.plan;
    if (a.mode == "potentials" || a.mode == "full") rec.potentials = solve_forward(truth.cost, r.marginals).potentials;
    obs.records.push_back(std::move(rec));
  }
  io::write_file_atomic(a.out, io::render(io::to_json(obs, a.sigma > 0)));
  io::write_file_atomic(a.out + ".truth.json", io::render(io::to_json(truth)));
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_verify(const std::string& cost_path, const std::string& obs_path, const std::string& out) {
  const auto c = io::cost_from(load(cost_path).doc);
  const auto obs = io::observations_from(load(obs_path).doc);
  if (!obs.records.empty() && (obs.rows() != c.cost.rows() || obs.cols() != c.cost.cols()))
    throw std::invalid_argument("cost shape differs from the observations");
  const auto checks = verify_consistency(c.cost, obs);
  auto flag = [](const std::optional<bool>& b) { return b ? (*b ? "ok" : "FAIL") : "-"; };
  std::cout << "record  ot_value  alpha  plan  potentials  result\n";
  json rows = json::array();
  for (const auto& ch : checks) {
    const auto& r = obs.records[ch.record];
    std::cout << ch.record << "  " << ch.ot_value.str();
    if (r.alpha) std::cout << " (observed " << r.alpha->str() << ")";
    std::cout << "  " << flag(ch.alpha_ok) << "  " << flag(ch.plan_ok) << "  " << flag(ch.potentials_ok) << "  "
              << (ch.pass ? "PASS" : "FAIL") << "\n";
    json row{{"record", ch.record}, {"ot_value", ch.ot_value.str()}, {"pass", ch.pass}};
    row["alpha_ok"] = ch.alpha_ok ? json(*ch.alpha_ok) : json(nullptr);
    row["plan_ok"] = ch.plan_ok ? json(*ch.plan_ok) : json(nullptr);
    row["potentials_ok"] = ch.potentials_ok ? json(*ch.potentials_ok) : json(nullptr);
    rows.push_back(std::move(row));
  }
  const bool ok = all_pass(checks);
  std::cout << (ok ? "all records consistent" : "inconsistent records found") << "\n";
  if (!out.empty()) io::write_file_atomic(out, io::render(json{{"format", "iot-verify/1"}, {"pass", ok}, {"records", rows}}));
  return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recover transport cost matrices from observed optimal transport data"};
  app.require_subcommand(1);
  int code = 0;

  std::string cost_path, marg_path, out;

  auto* fwd = app.add_subcommand("forward", "Solve the forward OT problem exactly");
  fwd->add_option("--cost", cost_path, "cost file (iot-cost/1)")->required();
  fwd->add_option("--marginals", marg_path, "marginals file (iot-marginals/1)")->required();
  fwd->add_option("--out", out, "output file (default stdout)");
  fwd->callback([&] { code = cmd_forward(cost_path, marg_path, out); });

  auto* en = app.add_subcommand("enumerate", "List the extreme points of a transportation polytope");
  en->add_option("--marginals", marg_path, "marginals file (iot-marginals/1)")->required();
  en->add_option("--out", out, "output file (default stdout)");
  en->callback([&] { code = cmd_enumerate(marg_path, out); });

  IdentifyArgs ia;
  auto* id = app.add_subcommand("identify", "Decide identifiability of the cost from observations");
  id->add_option("input", ia.input, "observation file (iot-obs/1)")->required();
  id->add_option("--mode", ia.mode, "observed quantities")
      ->required()
      ->check(CLI::IsMember({"costs", "potentials", "plans", "costs+plans", "full"}));
  id->add_option("--class", ia.cls, "cost class (overrides the file)")->check(CLI::IsMember({"general", "monge", "sym0", "box"}));
  id->add_option("--box", ia.box, "box bound C0 for |c_ij| <= C0");
  id->add_option("--cap", ia.cap, "maximum LP evaluations in the combination sweep");
  id->add_flag("--reduce-constraints", ia.reduce, "use the reduced vertex set per observed face");
  id->add_flag("--vertex-only", ia.vertex_only, "treat each observed plan as a single vertex");
  id->add_option("--sufficient", ia.sufficient, "run a sufficient-condition check instead of the exact test")
      ->check(CLI::IsMember({"equality", "rank"}));
  id->add_option("--out", ia.out, "report file (default stdout)");
  id->callback([&] { code = cmd_identify(ia); });

  EstimateArgs ea;
  auto* es = app.add_subcommand("estimate", "Estimate the cost from noisy total costs and plans");
  es->add_option("input", ea.input, "observation file (iot-obs/1)")->required();
  es->add_option("--method", ea.method, "estimator")->check(CLI::IsMember({"ls", "lasso"}));
  es->add_option("--lambda", ea.lambda, "LASSO penalty")->check(CLI::NonNegativeNumber);
  es->add_option("--b0", ea.b0, "LASSO baseline");
  es->add_option("--sigma", ea.sigma, "known noise standard deviation")->check(CLI::NonNegativeNumber);
  es->add_option("--level", ea.level, "confidence level 1 - gamma for intervals")->check(CLI::Range(0.0, 1.0));
  es->add_option("--out", ea.out, "report file (default stdout)");
  es->callback([&] { code = cmd_estimate(ea); });

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "Generate a seeded synthetic observation file");
  gen->add_option("--truth", ga.truth, "true cost file (iot-cost/1)")->required();
  gen->add_option("--K", ga.k, "number of records")->check(CLI::PositiveNumber);
  gen->add_option("--sigma", ga.sigma, "noise standard deviation on total costs")->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", ga.seed, "64-bit seed");
  gen->add_option("--mode", ga.mode, "fields to emit")->check(CLI::IsMember({"costs", "potentials", "plans", "costs+plans", "full"}));
  gen->add_option("--max-weight", ga.max_weight, "marginal weights are drawn from 1..max")->check(CLI::PositiveNumber);
  gen->add_option("--out", ga.out, "observation file; the truth goes to <out>.truth.json")->required();
  gen->callback([&] { code = cmd_generate(ga); });

  std::string verify_obs;
  auto* ve = app.add_subcommand("verify", "Check a cost against every observed record");
  ve->add_option("--cost", cost_path, "cost file (iot-cost/1)")->required();
  ve->add_option("input", verify_obs, "observation file (iot-obs/1)")->required();
  ve->add_option("--out", out, "optional JSON table");
  ve->callback([&] { code = cmd_verify(cost_path, verify_obs, out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  } catch (const RankDeficientError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return code;
}
