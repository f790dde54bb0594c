#include "io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace tcitool {

using namespace tcikit;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) { throw ConfigError(where + ": " + what); }

const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) fail(where, std::string("missing field '") + key + "'");
  return *it;
}

Real number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<Real>();
}

Real number_or(const json& j, const char* key, Real fallback, const std::string& where) {
  const auto it = j.find(key);
  return it == j.end() ? fallback : number(*it, where + "." + key);
}

std::vector<Real> numbers(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of numbers");
  std::vector<Real> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(number(j[k], where + "[" + std::to_string(k) + "]"));
  return out;
}

Vector vector_of(const json& j, const std::string& where) {
  const std::vector<Real> v = numbers(j, where);
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

Matrix matrix_of(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where, "expected a nonempty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix m(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string w = where + "[" + std::to_string(i) + "]";
    const std::vector<Real> row = numbers(j[i], w);
    if (row.size() != cols) fail(w, "rows must have equal length");
    for (std::size_t k = 0; k < cols; ++k) m(static_cast<Index>(i), static_cast<Index>(k)) = row[k];
  }
  return m;
}

std::string kind_of(const json& j, const char* key, const std::string& where) {
  const json& k = field(j, key, where);
  if (!k.is_string()) fail(where + "." + key, "expected a string");
  return k.get<std::string>();
}

json finite_or_null(Real x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::string fmt(Real x) {
  if (std::isnan(x)) return "";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

}  // namespace

json load_json(const std::string& arg) {
  const auto first = arg.find_first_not_of(" \t\r\n");
  const bool inline_json = first != std::string::npos && (arg[first] == '{' || arg[first] == '[');
  std::string text;
  if (inline_json) {
    text = arg;
  } else {
    std::ifstream in(arg);
    if (!in) throw ConfigError(arg + ": cannot open file");
    std::ostringstream os;
    os << in.rdbuf();
    text = os.str();
  }
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // the message carries line and column
    throw ConfigError((inline_json ? std::string("inline JSON") : arg) + ": " + e.what());
  }
}

ProbMeasure parse_measure(const json& j, const std::string& where) {
  const Vector w = vector_of(field(j, "weights", where), where + ".weights");
  if (j.contains("n") && number(j["n"], where + ".n") != static_cast<Real>(w.size()))
    fail(where + ".n", "does not match the number of weights");
  std::vector<std::string> labels;
  if (j.contains("labels")) {
    if (!j["labels"].is_array()) fail(where + ".labels", "expected an array of strings");
    for (const auto& l : j["labels"]) {
      if (!l.is_string()) fail(where + ".labels", "expected an array of strings");
      labels.push_back(l.get<std::string>());
    }
    if (labels.size() != static_cast<std::size_t>(w.size())) fail(where + ".labels", "one label per point");
  }
  std::optional<Matrix> coords;
  if (j.contains("coords")) {
    coords = matrix_of(j["coords"], where + ".coords");
    if (coords->rows() != w.size()) fail(where + ".coords", "one coordinate vector per point");
  }
  try {
    auto space = std::make_shared<const FiniteSpace>(w.size(), labels, coords);
    return ProbMeasure(space, w);
  } catch (const std::exception& e) {
    fail(where + ".weights", e.what());
  }
}

CostMatrix parse_cost(const json& j, const std::string& where, const ProbMeasure* mu) {
  const std::string kind = j.contains("matrix") ? (j.contains("kind") ? kind_of(j, "kind", where) : "general")
                                                : kind_of(j, "kind", where);
  try {
    std::optional<CostMatrix> c;
    if (j.contains("matrix")) {
      if (kind != "metric" && kind != "general") fail(where + ".kind", "expected 'metric' or 'general'");
      c.emplace(matrix_of(j["matrix"], where + ".matrix"), kind == "metric" ? CostKind::metric : CostKind::general);
    } else if (kind == "hamming" || kind == "line") {
      const Real n = number(field(j, "n", where), where + ".n");
      if (n < 1 || n != std::floor(n)) fail(where + ".n", "expected a positive integer");
      c.emplace(kind == "hamming" ? CostMatrix::hamming(static_cast<Index>(n), number_or(j, "scale", 1.0, where))
                                  : CostMatrix::line(static_cast<Index>(n)));
    } else if (kind == "euclidean") {
      if (j.contains("coords")) {
        c.emplace(CostMatrix::euclidean(matrix_of(j["coords"], where + ".coords")));
      } else {
        if (!mu || !mu->space() || !mu->space()->coords()) fail(where, "euclidean cost needs coordinates");
        c.emplace(CostMatrix::euclidean(*mu->space()->coords()));
      }
    } else {
      fail(where + ".kind", "unknown cost kind '" + kind + "'");
    }
    if (j.contains("power")) c.emplace(CostMatrix::power(*c, number(j["power"], where + ".power")));
    return *c;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    fail(where, e.what());
  }
}

PotentialFamily parse_family(const json& j, const std::string& where, const ProbMeasure& mu,
                             const std::optional<CostMatrix>& cost) {
  const std::string kind = kind_of(j, "kind", where);
  try {
    if (kind == "lipschitz-ball") {
      if (!cost) fail(where, "lipschitz-ball needs --cost");
      FamilyOptions opts;
      opts.seed = static_cast<std::uint64_t>(number_or(j, "seed", 1.0, where));
      return PotentialFamily::lipschitz_ball(*cost, opts);
    }
    if (kind == "unit-sup-ball") return PotentialFamily::unit_sup_ball(mu.size());
    if (kind == "chi-ball") return PotentialFamily::chi_ball(vector_of(field(j, "chi", where), where + ".chi"));
    if (kind == "from-cost") {
      if (!cost) fail(where, "from-cost needs --cost");
      return PotentialFamily::from_cost(*cost, mu);
    }
    if (kind == "explicit") {
      const json& pairs = field(j, "pairs", where);
      if (!pairs.is_array()) fail(where + ".pairs", "expected an array");
      std::vector<PotentialPair> out;
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        const std::string w = where + ".pairs[" + std::to_string(k) + "]";
        out.push_back({vector_of(field(pairs[k], "psi", w), w + ".psi"), vector_of(field(pairs[k], "phi", w), w + ".phi")});
      }
      return PotentialFamily::explicit_list(out, cost);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    fail(where, e.what());
  }
  fail(where + ".kind", "unknown family kind '" + kind + "'");
}

RateFunction parse_alpha(const json& j, const std::string& where, const AlphaContext& ctx) {
  const std::string form = kind_of(j, "form", where);
  try {
    if (form == "zero") return RateFunction::zero();
    if (form == "pinsker") return RateFunction::pinsker();
    if (form == "quadratic") return RateFunction::quadratic(number(field(j, "a", where), where + ".a"));
    if (form == "linear") return RateFunction::linear(number(field(j, "a", where), where + ".a"));
    if (form == "indicator") return RateFunction::indicator(number(field(j, "a", where), where + ".a"));
    if (form == "sqrt") return RateFunction::sqrt_form(number(field(j, "M", where), where + ".M"));
    if (form == "bernstein") return RateFunction::bernstein(number(field(j, "M", where), where + ".M"));
    if (form == "sampled") {
      const std::vector<Real> t = numbers(field(j, "t", where), where + ".t");
      const std::vector<Real> v = numbers(field(j, "v", where), where + ".v");
      const Real end = j.contains("domain_end") && j["domain_end"].is_null()
                           ? kInf
                           : number_or(j, "domain_end", kInf, where);
      return RateFunction::sampled(t, v, end, number_or(j, "tail_slope", 0.0, where));
    }
    if (form == "max" || form == "sum") {
      const json& of = field(j, "of", where);
      if (!of.is_array() || of.empty()) fail(where + ".of", "expected a nonempty array");
      std::vector<RateFunction> fs;
      for (std::size_t k = 0; k < of.size(); ++k)
        fs.push_back(parse_alpha(of[k], where + ".of[" + std::to_string(k) + "]", ctx));
      return form == "max" ? RateFunction::max_of(fs) : RateFunction::sum_of(fs);
    }
    if (form == "rescaled") {
      const RateFunction f = parse_alpha(field(j, "of", where), where + ".of", ctx);
      return RateFunction::rescaled(f, number_or(j, "outer", 1.0, where), number_or(j, "inner", 1.0, where),
                                    number_or(j, "shift", 0.0, where));
    }
    if (form == "best") {
      if (!ctx.mu || !ctx.family) fail(where, "form 'best' needs a measure and a family");
      return best_alpha(*ctx.family, *ctx.mu);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    fail(where, e.what());
  }
  fail(where + ".form", "unknown form '" + form + "'");
}

std::vector<Real> parse_grid(const std::string& arg) {
  std::vector<Real> out;
  if (arg.rfind("lin:", 0) == 0) {
    Real a = 0, b = 0;
    int k = 0;
    char c1 = 0, c2 = 0;
    std::istringstream is(arg.substr(4));
    if (!(is >> a >> c1 >> b >> c2 >> k) || c1 != ':' || c2 != ':' || k < 2)
      throw ConfigError("--grid: expected lin:a:b:k with k >= 2");
    for (int i = 0; i < k; ++i) out.push_back(a + (b - a) * i / (k - 1));
    return out;
  }
  if (!arg.empty() && arg.front() == '[') {
    json j;
    try {
      j = json::parse(arg);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("--grid: ") + e.what());
    }
    return numbers(j, "--grid");
  }
  std::istringstream is(arg);
  std::string item;
  while (std::getline(is, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("--grid: '" + item + "' is not a number");
    }
  }
  if (out.empty()) throw ConfigError("--grid: empty");
  return out;
}

json to_json(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(finite_or_null(v[i]));
  return a;
}

json to_json(const TailReport& r) {
  json cells = json::array();
  for (const auto& c : r.cells)
    cells.push_back({{"n", c.n},
                     {"t", c.t},
                     {"member", c.member},
                     {"hits", c.hits},
                     {"replicas", c.replicas},
                     {"p_hat", c.p_hat},
                     {"stderr", c.stderr_},
                     {"bound", c.bound},
                     {"reference_bound", finite_or_null(c.reference_bound)},
                     {"pass", c.pass}});
  json j{{"statistic", r.statistic},
         {"seed", r.seed},
         {"replicas", r.replicas},
         {"cells", cells},
         {"centers", r.centers},
         {"all_pass", r.all_pass()}};
  if (!std::isnan(r.m)) {
    j["M"] = r.m;
    j["M0"] = r.m0;
    j["ordering_holds"] = r.ordering_holds;
  }
  if (const auto w = r.witness()) j["witness"] = cells[*w];
  return j;
}

json to_json(const MartonReport& r) {
  json j{{"holds", r.holds},
         {"worst_slack", finite_or_null(r.worst_slack)},
         {"cells", r.cells},
         {"lemma_holds", r.lemma_holds},
         {"lemma_worst", finite_or_null(r.lemma_worst)},
         {"concentration_holds", r.concentration_holds},
         {"concentration_worst", finite_or_null(r.concentration_worst)}};
  if (!r.holds) j["witness"] = {{"set", r.set}, {"r", r.r}, {"r_A", r.r_a}};
  if (!r.lemma_holds) j["lemma_witness"] = {{"member", r.lemma_member}, {"t", r.lemma_t}};
  return j;
}

std::string tail_csv(const TailReport& r) {
  std::ostringstream os;
  const auto w = r.witness();
  os << "n,t,member,hits,replicas,p_hat,stderr,bound,reference_bound,pass,witness\n";
  for (std::size_t k = 0; k < r.cells.size(); ++k) {
    const TailCell& c = r.cells[k];
    os << c.n << ',' << fmt(c.t) << ',' << c.member << ',' << c.hits << ',' << c.replicas << ',' << fmt(c.p_hat) << ','
       << fmt(c.stderr_) << ',' << fmt(c.bound) << ',' << fmt(c.reference_bound) << ',' << (c.pass ? 1 : 0) << ','
       << (w && *w == k ? 1 : 0) << '\n';
  }
  return os.str();
}

json sample_curve(const std::function<Real(Real)>& f, const std::vector<Real>& grid, const char* x) {
  json xs = json::array(), vs = json::array();
  for (Real t : grid) {
    xs.push_back(t);
    vs.push_back(finite_or_null(f(t)));
  }
  return {{x, xs}, {"value", vs}};
}

std::string curve_csv(const json& curve, const char* x) {
  std::ostringstream os;
  os << x << ",value\n";
  const json& xs = curve.at(x);
  const json& vs = curve.at("value");
  for (std::size_t k = 0; k < xs.size(); ++k)
    os << fmt(xs[k].get<Real>()) << ',' << (vs[k].is_null() ? std::string("inf") : fmt(vs[k].get<Real>())) << '\n';
  return os.str();
}

}  // namespace tcitool
