// tcitool: command line front end of tcikit.
// Exit status: 0 success or pass, 2 falsified inequality (witness in the
// report), 1 usage or configuration error.

#include "io.hpp"

#include "tcikit/criteria.hpp"
#include "tcikit/devlab.hpp"
#include "tcikit/tensor.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>

using namespace tcikit;
using tcitool::ConfigError;
using tcitool::json;

namespace {

constexpr int kPass = 0;
constexpr int kUsage = 1;
constexpr int kFalsified = 2;

struct Flags {
  std::string space, space2, measure, cost, cost2, alpha, alpha2, family, config, functions, params, name;
  std::string grid, sizes, out, format = "json";
  std::uint64_t seed = 1;
  long replicas = 10000;
  int threads = 1;
  int r_points = 100;
  double step = 0.0;
};

struct Output {
  json body;
  std::string csv;  // empty: no CSV form
  int status = kPass;
};

ProbMeasure need_measure(const std::string& arg, const char* flag) {
  if (arg.empty()) throw ConfigError(std::string(flag) + " is required");
  return tcitool::parse_measure(tcitool::load_json(arg), flag);
}

std::optional<CostMatrix> maybe_cost(const std::string& arg, const char* flag, const ProbMeasure* mu) {
  if (arg.empty()) return std::nullopt;
  return tcitool::parse_cost(tcitool::load_json(arg), flag, mu);
}

CostMatrix need_cost(const std::string& arg, const char* flag, const ProbMeasure* mu) {
  if (arg.empty()) throw ConfigError(std::string(flag) + " is required");
  return *maybe_cost(arg, flag, mu);
}

// --family, or the Lipschitz ball of a metric --cost
std::optional<PotentialFamily> maybe_family(const Flags& f, const ProbMeasure& mu, const std::optional<CostMatrix>& c) {
  if (!f.family.empty()) return tcitool::parse_family(tcitool::load_json(f.family), "--family", mu, c);
  if (c && c->is_metric()) return PotentialFamily::lipschitz_ball(*c);
  return std::nullopt;
}

PotentialFamily need_family(const Flags& f, const ProbMeasure& mu, const std::optional<CostMatrix>& c) {
  auto fam = maybe_family(f, mu, c);
  if (!fam) throw ConfigError("--family is required (or a metric --cost)");
  return *fam;
}

RateFunction need_alpha(const std::string& arg, const char* flag, const ProbMeasure* mu,
                        const PotentialFamily* family) {
  if (arg.empty()) throw ConfigError(std::string(flag) + " is required");
  return tcitool::parse_alpha(tcitool::load_json(arg), flag, {mu, family});
}

std::vector<Real> grid_or(const std::string& arg, std::vector<Real> fallback) {
  return arg.empty() ? fallback : tcitool::parse_grid(arg);
}

std::vector<Real> lin(Real a, Real b, int k) {
  std::vector<Real> out;
  for (int i = 0; i < k; ++i) out.push_back(a + (b - a) * i / (k - 1));
  return out;
}

ExperimentConfig experiment(const Flags& f, const CLI::App& app) {
  ExperimentConfig cfg;
  if (!f.config.empty()) {
    const json j = tcitool::load_json(f.config);
    try {
      if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
      if (j.contains("replicas")) cfg.replicas = j["replicas"].get<long>();
      if (j.contains("sample_sizes")) cfg.sample_sizes = j["sample_sizes"].get<std::vector<int>>();
      if (j.contains("t_grid")) cfg.t_grid = j["t_grid"].get<std::vector<Real>>();
      if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
    } catch (const json::exception& e) {
      throw ConfigError("--config: " + std::string(e.what()));
    }
  }
  if (app.count("--seed")) cfg.seed = f.seed;
  if (app.count("--replicas")) cfg.replicas = f.replicas;
  if (app.count("--threads")) cfg.threads = f.threads;
  if (!f.sizes.empty()) {
    cfg.sample_sizes.clear();
    for (Real n : tcitool::parse_grid(f.sizes)) cfg.sample_sizes.push_back(static_cast<int>(n));
  }
  if (!f.grid.empty()) cfg.t_grid = tcitool::parse_grid(f.grid);
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("experiment: ") + e.what());
  }
  return cfg;
}

Output tail_output(const TailReport& r, const ExperimentConfig& cfg) {
  Output o;
  o.body = tcitool::to_json(r);
  o.body["t_grid"] = cfg.t_grid;
  o.body["sample_sizes"] = cfg.sample_sizes;
  o.csv = tcitool::tail_csv(r);
  o.status = r.all_pass() ? kPass : kFalsified;
  return o;
}

Output curve_output(json curve, const char* x) {
  Output o;
  o.csv = tcitool::curve_csv(curve, x);
  o.body = std::move(curve);
  return o;
}

// ---- subcommands ----

Output run_ot(const Flags& f) {
  const ProbMeasure mu = need_measure(f.space, "--space");
  const ProbMeasure nu = need_measure(f.measure, "--measure");
  const CostMatrix c = need_cost(f.cost, "--cost", &mu);
  const OtSolution s = solve_ot(mu, nu, c);
  json plan = json::array();
  for (Index i = 0; i < s.plan.pi.rows(); ++i) plan.push_back(tcitool::to_json(s.plan.pi.row(i).transpose()));
  Output o;
  o.body = {{"value", s.value},
            {"plan", plan},
            {"psi", tcitool::to_json(s.dual.psi)},
            {"phi", tcitool::to_json(s.dual.phi)},
            {"used_fallback", s.used_fallback}};
  o.csv = "value\n" + json(s.value).dump() + "\n";
  return o;
}

Output run_entropy(const Flags& f) {
  const ProbMeasure mu = need_measure(f.space, "--space");
  const ProbMeasure nu = need_measure(f.measure, "--measure");
  if (mu.size() != nu.size()) throw ConfigError("--measure: size differs from --space");
  const Real h = relative_entropy(nu, mu);
  Output o;
  o.body = {{"entropy", std::isfinite(h) ? json(h) : json(nullptr)}};
  o.csv = "entropy\n" + (std::isfinite(h) ? json(h).dump() : std::string("inf")) + "\n";
  return o;
}

Output run_conjugate(const Flags& f) {
  const RateFunction a = need_alpha(f.alpha, "--alpha", nullptr, nullptr);
  const RateFunction c = monotone_conjugate(a);
  json curve = tcitool::sample_curve(c, grid_or(f.grid, lin(0.0, 4.0, 41)), "s");
  curve["describe"] = c.describe();
  return curve_output(std::move(curve), "s");
}

Output run_infconv(const Flags& f) {
  const RateFunction a = need_alpha(f.alpha, "--alpha", nullptr, nullptr);
  const RateFunction b = need_alpha(f.alpha2, "--alpha2", nullptr, nullptr);
  const RateFunction c = inf_convolution(a, b);
  json curve = tcitool::sample_curve(c, grid_or(f.grid, lin(0.0, 4.0, 41)));
  curve["describe"] = c.describe();
  return curve_output(std::move(curve), "t");
}

Output run_alpha(const Flags& f) {
  if (f.name.empty()) throw ConfigError("--name is required");
  const json p = f.params.empty() ? json::object() : tcitool::load_json(f.params);
  auto vec = [&](const char* key) {
    if (!p.contains(key)) throw ConfigError(std::string("--params: missing field '") + key + "'");
    try {
      const auto v = p[key].get<std::vector<Real>>();
      return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size())));
    } catch (const json::exception& e) {
      throw ConfigError(std::string("--params.") + key + ": " + e.what());
    }
  };
  auto num = [&](const char* key) {
    if (!p.contains(key) || !p[key].is_number())
      throw ConfigError(std::string("--params: missing numeric field '") + key + "'");
    return p[key].get<Real>();
  };
  auto rate = [&](const char* key) {
    if (!p.contains(key)) throw ConfigError(std::string("--params: missing field '") + key + "'");
    return tcitool::parse_alpha(p[key], std::string("--params.") + key);
  };
  const ProbMeasure mu = need_measure(f.space, "--space");
  const std::optional<CostMatrix> c = maybe_cost(f.cost, "--cost", &mu);
  auto cost = [&]() -> const CostMatrix& {
    if (!c) throw ConfigError("--cost is required for " + f.name);
    return *c;
  };
  std::optional<RateFunction> a;
  const std::string& n = f.name;
  try {
    if (n == "best") a = best_alpha(need_family(f, mu, c), mu);
    else if (n == "weighted-ckp") a = alpha_weighted_ckp(vec("chi"), mu);
    else if (n == "orlicz-nei") a = alpha_orlicz_nei(mu);
    else if (n == "lipschitz-orlicz") a = alpha_lipschitz_orlicz(cost(), mu);
    else if (n == "t1-integral") a = alpha_t1_integral(cost(), mu, num("a"), rate("gamma"), static_cast<Index>(num("x1")));
    else if (n == "dp") a = alpha_dp(cost(), num("p"), mu, rate("gamma"), static_cast<Index>(num("x_o")));
    else if (n == "chi-envelope") a = alpha_chi_envelope(vec("chi"), mu, rate("gamma"), static_cast<Index>(num("x_o")));
    else if (n == "small-t") a = alpha_small_t(vec("chi"), mu);
    else if (n == "moment") a = alpha_moment(cost(), mu, rate("beta"));
    else throw ConfigError("--name: unknown constructor '" + n + "'");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError("--params: " + std::string(e.what()));
  }
  json curve = tcitool::sample_curve(*a, grid_or(f.grid, lin(0.0, 2.0, 41)));
  curve["name"] = n;
  curve["describe"] = a->describe();
  return curve_output(std::move(curve), "t");
}

Output run_bg_check(const Flags& f) {
  const ProbMeasure mu = need_measure(f.space, "--space");
  const std::optional<CostMatrix> c = maybe_cost(f.cost, "--cost", &mu);
  const PotentialFamily fam = need_family(f, mu, c);
  const RateFunction a = need_alpha(f.alpha, "--alpha", &mu, &fam);
  const BgReport r = bg_check(a, fam, mu);
  Output o;
  o.body = {{"holds_b", r.holds_b}, {"worst_gap", r.worst_gap}, {"s", r.s}, {"member", r.member},
            {"exact_family", fam.exact()}};
  if (!r.holds_b) {
    const PotentialPair& m = fam.members()[r.member];
    o.body["witness"] = {{"s", r.s}, {"psi", tcitool::to_json(m.psi)}, {"phi", tcitool::to_json(m.phi)}};
    o.status = kFalsified;
  }
  o.csv = "holds_b,worst_gap,s,member\n" + std::string(r.holds_b ? "1" : "0") + "," + json(r.worst_gap).dump() + "," +
          json(r.s).dump() + "," + std::to_string(r.member) + "\n";
  return o;
}

Output run_jphi(const Flags& f) {
  const ProbMeasure mu = need_measure(f.space, "--space");
  const std::optional<CostMatrix> c = maybe_cost(f.cost, "--cost", &mu);
  const PotentialFamily fam = need_family(f, mu, c);
  const IncreasingFunction j = j_phi(fam, mu);
  const RateFunction reg = convex_regularization(j);
  const RateFunction best = best_alpha(fam, mu);
  const std::vector<Real> grid = grid_or(f.grid, lin(0.0, 1.0, 41));
  Output o;
  o.body = tcitool::sample_curve(j, grid);
  o.body["regularized"] = tcitool::sample_curve(reg, grid)["value"];
  o.body["best_alpha"] = tcitool::sample_curve(best, grid)["value"];
  std::ostringstream os;
  os << "t,j_phi,regularized,best_alpha\n";
  for (std::size_t k = 0; k < grid.size(); ++k)
    os << o.body["t"][k].dump() << ',' << o.body["value"][k].dump() << ',' << o.body["regularized"][k].dump() << ','
       << o.body["best_alpha"][k].dump() << '\n';
  o.csv = os.str();
  return o;
}

Output run_brute_j(const Flags& f) {
  const ProbMeasure mu = need_measure(f.space, "--space");
  const Real h = f.step > 0.0 ? f.step : default_simplex_step(mu.size());
  std::optional<IncreasingFunction> j;
  if (!f.cost.empty()) {
    j = best_transport_brute(mu, need_cost(f.cost, "--cost", &mu), h);
  } else {
    const PotentialFamily fam = need_family(f, mu, std::nullopt);
    j = best_transport_brute(mu, FamilyTransport(fam, mu), h);
  }
  json curve = tcitool::sample_curve(*j, grid_or(f.grid, lin(0.0, 1.0, 41)));
  curve["step"] = h;
  return curve_output(std::move(curve), "t");
}

Output run_tensor_check(const Flags& f) {
  const ProbMeasure mu1 = need_measure(f.space, "--space");
  const ProbMeasure mu2 = need_measure(f.space2, "--space2");
  const CostMatrix c1 = need_cost(f.cost, "--cost", &mu1);
  const CostMatrix c2 = need_cost(f.cost2, "--cost2", &mu2);
  const std::optional<PotentialFamily> fam1 = maybe_family(f, mu1, c1);
  const std::optional<PotentialFamily> fam2 = maybe_family(f, mu2, c2);
  const RateFunction a1 = need_alpha(f.alpha, "--alpha", &mu1, fam1 ? &*fam1 : nullptr);
  const RateFunction a2 = need_alpha(f.alpha2.empty() ? f.alpha : f.alpha2, "--alpha2", &mu2, fam2 ? &*fam2 : nullptr);
  const Real h = f.step > 0.0 ? f.step : 1.0 / 180.0;
  const ProductTciReport r = verify_product_tci(mu1, mu2, c1, c2, a1, a2, h);
  Output o;
  o.body = {{"holds", r.holds}, {"worst_slack", r.worst_slack}, {"points", r.points}, {"step", h}};
  o.body["worst_nu"] = tcitool::to_json(r.nu);
  if (!r.holds) {
    o.body["witness"] = {{"nu", tcitool::to_json(r.nu)}, {"slack", r.worst_slack}};
    o.status = kFalsified;
  }
  o.csv = "holds,worst_slack,points\n" + std::string(r.holds ? "1" : "0") + "," + json(r.worst_slack).dump() + "," +
          json(r.points).dump() + "\n";
  return o;
}

Output run_marton(const Flags& f) {
  const ProbMeasure mu = need_measure(f.space, "--space");
  const CostMatrix d = need_cost(f.cost, "--cost", &mu);
  const std::optional<PotentialFamily> fam = maybe_family(f, mu, d);
  const RateFunction a = need_alpha(f.alpha, "--alpha", &mu, fam ? &*fam : nullptr);
  const MartonReport r = marton_bound_check(mu, d, a, f.r_points);
  Output o;
  o.body = tcitool::to_json(r);
  o.status = r.holds && r.lemma_holds && r.concentration_holds ? kPass : kFalsified;
  std::ostringstream os;
  os << "holds,worst_slack,cells,lemma_holds,concentration_holds\n"
     << r.holds << ',' << o.body["worst_slack"].dump() << ',' << r.cells << ',' << r.lemma_holds << ','
     << r.concentration_holds << '\n';
  o.csv = os.str();
  return o;
}

Output run_concentration(const Flags& f) {
  const ProbMeasure mu = need_measure(f.space, "--space");
  const CostMatrix d = need_cost(f.cost, "--cost", &mu);
  const ConcentrationCurve c =
      concentration_function(mu, d, grid_or(f.grid, lin(0.0, d.max_entry(), 21)));
  Output o;
  o.body = {{"r", c.r}, {"value", c.theta}, {"argmax", c.argmax}};
  o.csv = tcitool::curve_csv(o.body, "r");
  return o;
}

Output run_deviate(const Flags& f, const CLI::App& app) {
  const ExperimentConfig cfg = experiment(f, app);
  const ProbMeasure mu = need_measure(f.space, "--space");
  const CostMatrix c = need_cost(f.cost, "--cost", &mu);
  const std::optional<PotentialFamily> fam = maybe_family(f, mu, c);
  const RateFunction a = need_alpha(f.alpha, "--alpha", &mu, fam ? &*fam : nullptr);
  // member cells only when a family was asked for
  return tail_output(deviation_tail(cfg, mu, a, c, f.family.empty() ? nullptr : &*fam), cfg);
}

Output run_emp_process(const Flags& f, const CLI::App& app) {
  const ExperimentConfig cfg = experiment(f, app);
  const ProbMeasure mu = need_measure(f.space, "--space");
  const CostMatrix d = need_cost(f.cost, "--cost", &mu);
  const std::optional<PotentialFamily> fam = maybe_family(f, mu, d);
  const RateFunction a = need_alpha(f.alpha, "--alpha", &mu, fam ? &*fam : nullptr);
  std::vector<Vector> g;
  if (!f.functions.empty()) {
    const json j = tcitool::load_json(f.functions);
    if (!j.is_array()) throw ConfigError("--functions: expected an array of vectors");
    try {
      for (const auto& row : j) {
        const auto v = row.get<std::vector<Real>>();
        g.push_back(Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size())));
      }
    } catch (const json::exception& e) {
      throw ConfigError(std::string("--functions: ") + e.what());
    }
  } else {
    const auto v = lipschitz_vertices(d);
    if (!v) throw ConfigError("--functions is required when the Lipschitz vertices are not enumerable");
    g = *v;
  }
  try {
    return tail_output(empirical_process(cfg, mu, d, g, a), cfg);
  } catch (const DimensionMismatch& e) {
    throw ConfigError(std::string("--functions: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("--functions: ") + e.what());
  }
}

Output run_banach_dev(const Flags& f, const CLI::App& app) {
  const ExperimentConfig cfg = experiment(f, app);
  const ProbMeasure mu = need_measure(f.space, "--space");
  if (!mu.space() || !mu.space()->coords()) throw ConfigError("--space: banach-dev needs 'coords'");
  Output o = tail_output(banach_mean_deviation(cfg, mu), cfg);
  if (!o.body.value("ordering_holds", true)) o.status = kFalsified;
  return o;
}

void emit(const Output& o, const Flags& f) {
  std::string text;
  if (f.format == "csv") {
    if (o.csv.empty()) throw ConfigError("--format csv is not available here");
    text = o.csv;
  } else {
    text = o.body.dump(2) + "\n";
  }
  if (f.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(f.out);
    if (!out) throw ConfigError("--out: cannot write " + f.out);
    out << text;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tcitool: transportation cost inequalities on finite spaces"};
  app.require_subcommand(1);
  Flags f;
  app.add_option("--space", f.space, "reference measure (file or inline JSON)");
  app.add_option("--space2", f.space2, "second factor measure (tensor-check)");
  app.add_option("--measure", f.measure, "target measure (ot, entropy)");
  app.add_option("--cost", f.cost, "cost or metric");
  app.add_option("--cost2", f.cost2, "second factor cost (tensor-check)");
  app.add_option("--alpha", f.alpha, "rate function spec");
  app.add_option("--alpha2", f.alpha2, "second rate function (infconv, tensor-check)");
  app.add_option("--family", f.family, "potential family spec");
  app.add_option("--config", f.config, "experiment config (deviate, emp-process, banach-dev)");
  app.add_option("--functions", f.functions, "1-Lipschitz functions (emp-process)");
  app.add_option("--name", f.name, "constructor name (alpha)");
  app.add_option("--params", f.params, "constructor parameters (alpha)");
  app.add_option("--seed", f.seed, "random seed");
  app.add_option("--replicas", f.replicas, "Monte Carlo replicas");
  app.add_option("--threads", f.threads, "worker threads");
  app.add_option("--sizes", f.sizes, "sample sizes n");
  app.add_option("--grid", f.grid, "t, s or r grid: a,b,c | [a,b] | lin:a:b:k");
  app.add_option("--step", f.step, "simplex lattice step (brute-j, tensor-check)");
  app.add_option("--r-points", f.r_points, "radii per set (marton)");
  app.add_option("--out", f.out, "output file (default stdout)");
  app.add_option("--format", f.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  const std::vector<std::pair<std::string, std::string>> commands{
      {"ot", "solve the transport problem"},
      {"entropy", "relative entropy H(nu | mu)"},
      {"conjugate", "monotone conjugate of --alpha"},
      {"infconv", "inf-convolution of --alpha and --alpha2"},
      {"alpha", "transportation function from a criterion"},
      {"bg-check", "Bobkov-Gotze check of --alpha over a family"},
      {"jphi", "J_Phi, its convex regularization and best_alpha"},
      {"brute-j", "best transportation function by simplex sweep"},
      {"tensor-check", "product TCI sweep"},
      {"marton", "concentration of measure by enumeration"},
      {"concentration", "concentration function"},
      {"deviate", "Monte Carlo tail of T(mu, L_n)"},
      {"emp-process", "Monte Carlo tail of an empirical process"},
      {"banach-dev", "Monte Carlo tail of |empirical mean - mean|"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kUsage;
  }

  try {
    const std::string cmd = app.get_subcommands().front()->get_name();
    Output o;
    if (cmd == "ot") o = run_ot(f);
    else if (cmd == "entropy") o = run_entropy(f);
    else if (cmd == "conjugate") o = run_conjugate(f);
    else if (cmd == "infconv") o = run_infconv(f);
    else if (cmd == "alpha") o = run_alpha(f);
    else if (cmd == "bg-check") o = run_bg_check(f);
    else if (cmd == "jphi") o = run_jphi(f);
    else if (cmd == "brute-j") o = run_brute_j(f);
    else if (cmd == "tensor-check") o = run_tensor_check(f);
    else if (cmd == "marton") o = run_marton(f);
    else if (cmd == "concentration") o = run_concentration(f);
    else if (cmd == "deviate") o = run_deviate(f, app);
    else if (cmd == "emp-process") o = run_emp_process(f, app);
    else if (cmd == "banach-dev") o = run_banach_dev(f, app);
    o.body["command"] = cmd;
    o.body["exit_status"] = o.status;
    emit(o, f);
    if (o.status == kFalsified) std::cerr << "tcitool " << cmd << ": inequality falsified, witness in the report\n";
    return o.status;
  } catch (const ConfigError& e) {
    std::cerr << "tcitool: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "tcitool: " << e.what() << '\n';
    return kUsage;
  }
}
