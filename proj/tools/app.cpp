#include "app.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>

#include "isotrig/polyroot.hpp"
#include "isotrig/sampling.hpp"

namespace isotrig::app {

using nlohmann::json;

namespace {

const json& require(const json& j, const char* key, const char* block) {
  if (!j.contains(key)) throw ConfigError(std::string(block) + "." + key + " is required");
  return j.at(key);
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

Eigen::VectorXd to_vector(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json from_vector(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }


std::vector<double> scalar_or_list(const json& j) {
  if (j.is_number()) return {j.get<double>()};
  return j.get<std::vector<double>>();
}

double per_run(const std::vector<double>& v, std::size_t run, const char* what) {
  if (v.empty()) throw ConfigError(std::string(what) + " is not configured");
  if (v.size() == 1) return v.front();
  if (run >= v.size()) throw ConfigError(std::string(what) + " needs one value per sweep value");
  return v[run];
}

ParamMap run_params(const RunConfig& cfg, std::size_t run) {
  ParamMap p = cfg.params;
  if (!cfg.sweep_values.empty()) p[cfg.sweep_parameter] = cfg.sweep_values.at(run);
  return p;
}

Region run_region(const RunConfig& cfg, std::size_t run) {
  Region r = cfg.region;
  if (!cfg.error_ratio.empty()) {
    const ParamMap params = run_params(cfg, run);
    r.error_ratio = evaluate(parse(cfg.error_ratio, std::span<const std::string>{}, params), {});
  }
  return r;
}

json region_json(const Region& r) {
  json j{{"radius", r.radius},
         {"inner_ratio", r.inner_ratio},
         {"max_state_ratio", r.max_state_ratio},
         {"trigger_sublevel", r.trigger_sublevel}};
  j["error_ratio"] = r.error_ratio ? json(*r.error_ratio) : json(nullptr);
  return j;
}

Region region_from_json(const json& j) {
  Region r;
  r.radius = j.at("radius").get<double>();
  r.inner_ratio = j.at("inner_ratio").get<double>();
  r.max_state_ratio = j.at("max_state_ratio").get<double>();
  r.trigger_sublevel = j.at("trigger_sublevel").get<bool>();
  if (!j.at("error_ratio").is_null()) r.error_ratio = j.at("error_ratio").get<double>();
  return r;
}

json record_json(const ModelRecord& m) {
  return json{{"p", m.cm.p},
              {"chi", from_vector(m.cm.chi)},
              {"reversed", m.cm.reversed},
              {"supplied", m.supplied},
              {"verified", m.verified},
              {"max_scaled_residual", m.max_scaled_residual},
              {"margin", m.cm.margin},
              {"training_samples", m.cm.training_samples},
              {"verification_samples", m.cm.verification_samples},
              {"region", region_json(m.cm.region)}};
}

ModelRecord record_from_json(const json& j, double t_star) {
  ModelRecord m;
  m.cm = ComparisonModel::from_chi(to_vector(j.at("chi")), j.at("reversed").get<bool>());
  m.cm.margin = j.at("margin").get<double>();
  m.cm.training_samples = j.at("training_samples").get<std::size_t>();
  m.cm.verification_samples = j.at("verification_samples").get<std::size_t>();
  m.cm.region = region_from_json(j.at("region"));
  m.cm.set_t_star(t_star);
  m.supplied = j.at("supplied").get<bool>();
  m.verified = j.at("verified").get<bool>();
  m.max_scaled_residual = j.at("max_scaled_residual").get<double>();
  return m;
}

std::vector<Eigen::VectorXd> parse_initial_conditions(const json& j, std::size_t n, std::uint64_t seed) {
  std::vector<Eigen::VectorXd> out;
  if (j.contains("explicit")) {
    for (const auto& row : j.at("explicit")) {
      Eigen::VectorXd x = to_vector(row);
      if (static_cast<std::size_t>(x.size()) != n) throw ConfigError("initial condition has the wrong dimension");
      out.push_back(x);
    }
  } else if (j.contains("sphere_boundary")) {
    const auto& s = j.at("sphere_boundary");
    const auto count = get_or<std::size_t>(s, "count", 20);
    const double radius = get_or<double>(s, "radius", 1.0);
    for (const auto& d : sphere_directions(n, count, seed)) out.push_back(radius * d);
  } else if (j.contains("great_circle")) {
    // count points on the circle spanned by two coordinate axes
    const auto& s = j.at("great_circle");
    const auto count = get_or<std::size_t>(s, "count", 20);
    const double radius = get_or<double>(s, "radius", 1.0);
    const auto axes = get_or<std::vector<std::size_t>>(s, "axes", {0, 1});
    if (axes.size() != 2 || axes[0] >= n || axes[1] >= n || axes[0] == axes[1])
      throw ConfigError("great_circle.axes must name two distinct state coordinates");
    for (std::size_t k = 0; k < count; ++k) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(count);
      Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
      x(static_cast<Eigen::Index>(axes[0])) = radius * std::cos(a);
      x(static_cast<Eigen::Index>(axes[1])) = radius * std::sin(a);
      out.push_back(x);
    }
  } else {
    throw ConfigError("experiment.initial_conditions needs explicit, sphere_boundary or great_circle");
  }
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

RunConfig parse_config(const json& j) try {
  RunConfig c;
  c.seed = get_or<std::uint64_t>(j, "seed", 1);

  const auto& m = require(j, "model", "config");
  c.n = require(m, "n", "model").get<std::size_t>();
  c.m = require(m, "m", "model").get<std::size_t>();
  c.f = require(m, "f", "model").get<std::vector<std::string>>();
  c.k = get_or<std::vector<std::string>>(m, "k", {});
  c.gamma = require(m, "gamma", "model").get<std::string>();
  if (m.contains("parameters"))
    for (const auto& [key, val] : m.at("parameters").items()) c.params[key] = val.get<double>();
  if (c.n == 0) throw ConfigError("model.n must be positive");
  if (c.f.size() != c.n) throw ConfigError("model.f needs n expressions");
  if (c.k.size() != c.m) throw ConfigError("model.k needs m expressions");

  const json hom = get_or<json>(j, "homogenization", json::object());
  c.hom_auto = get_or<bool>(hom, "auto", false);
  c.xi = get_or<double>(hom, "xi", 1.0);
  c.theta = get_or<double>(hom, "theta", 1.0);

  const json reg = get_or<json>(j, "region", json::object());
  c.region.radius = get_or<double>(reg, "radius", 1.0);
  c.region.inner_ratio = get_or<double>(reg, "inner_ratio", 1e-3);
  c.region.max_state_ratio = get_or<double>(reg, "max_state_ratio", 1.0);
  c.region.trigger_sublevel = get_or<bool>(reg, "trigger_sublevel", false);
  if (!(c.region.radius > 0.0) || !(c.region.inner_ratio >= 0.0) || !(c.region.inner_ratio < 1.0))
    throw ConfigError("region needs radius > 0 and 0 <= inner_ratio < 1");

  const json cmp = get_or<json>(j, "comparison", json::object());
  c.p_low = get_or<int>(cmp, "p_low", 3);
  if (cmp.contains("p_high") && !cmp.at("p_high").is_null()) c.p_high = cmp.at("p_high").get<int>();
  if (c.p_low < 2) throw ConfigError("comparison.p_low must be at least 2");
  if (c.p_high && *c.p_high < c.p_low) throw ConfigError("comparison.p_high must be at least p_low");
  c.upper = get_or<bool>(cmp, "upper", false);
  if (cmp.contains("t_star")) {
    const auto& t = cmp.at("t_star");
    if (t.is_string()) {
      if (t.get<std::string>() != "auto") throw ConfigError("comparison.t_star must be a number or \"auto\"");
    } else {
      c.t_star = t.get<double>();
      if (!(*c.t_star > 0.0)) throw ConfigError("comparison.t_star must be positive");
    }
  }
  if (cmp.contains("t_star_grid")) {
    const auto& g = cmp.at("t_star_grid");
    c.t_grid_lo = get_or<double>(g, "lo", c.t_grid_lo);
    c.t_grid_hi = get_or<double>(g, "hi", c.t_grid_hi);
    c.t_grid_per_decade = get_or<int>(g, "per_decade", c.t_grid_per_decade);
  }
  c.directions = get_or<std::size_t>(cmp, "directions", 360);
  c.search.training = get_or<std::size_t>(cmp, "training_samples", c.search.training);
  c.search.verification = get_or<std::size_t>(cmp, "verification_samples", c.search.verification);
  c.search.pool_factor = get_or<std::size_t>(cmp, "pool_factor", c.search.pool_factor);
  c.search.max_rounds = get_or<int>(cmp, "max_rounds", c.search.max_rounds);
  if (cmp.contains("chi_low")) c.chi_low = to_vector(cmp.at("chi_low"));
  if (cmp.contains("chi_high")) c.chi_high = to_vector(cmp.at("chi_high"));
  if (cmp.contains("chi_upper")) c.chi_upper = to_vector(cmp.at("chi_upper"));
  if (c.chi_low && c.chi_low->size() != c.p_low) throw ConfigError("comparison.chi_low must have p_low entries");
  if (c.chi_high && (!c.p_high || c.chi_high->size() != *c.p_high))
    throw ConfigError("comparison.chi_high must have p_high entries");
  if (c.chi_upper && c.chi_upper->size() != c.p_low) throw ConfigError("comparison.chi_upper must have p_low entries");
  c.require_verified = get_or<bool>(cmp, "require_verified", true);

  const json ex = get_or<json>(j, "experiment", json::object());
  if (ex.contains("sweep")) {
    c.sweep_parameter = require(ex.at("sweep"), "parameter", "experiment.sweep").get<std::string>();
    c.sweep_values = require(ex.at("sweep"), "values", "experiment.sweep").get<std::vector<double>>();
  }
  if (ex.contains("strategies")) c.strategies = ex.at("strategies").get<std::vector<std::string>>();
  for (const auto& s : c.strategies)
    if (s != "periodic" && s != "selftrig_prev" && s != "selftrig_new" && s != "event")
      throw ConfigError("unknown strategy '" + s + "'");
  if (ex.contains("periodic")) c.periodic = scalar_or_list(ex.at("periodic"));
  if (ex.contains("prior_work")) {
    c.prior_tau_star = scalar_or_list(require(ex.at("prior_work"), "tau_star", "experiment.prior_work"));
    c.prior_r = get_or<double>(ex.at("prior_work"), "r", 1.0);
  }
  if (ex.contains("initial_conditions")) c.initial_conditions = parse_initial_conditions(ex.at("initial_conditions"), c.n, c.seed);
  c.T_end = get_or<double>(ex, "T_end", c.T_end);
  if (c.T_end < 0.0) throw ConfigError("experiment.T_end must be nonnegative");
  if (ex.contains("n_iter")) {
    const auto& ni = ex.at("n_iter");
    c.n_iter = ni.is_number() ? std::vector<int>{ni.get<int>()} : ni.get<std::vector<int>>();
  }
  for (int k : c.n_iter)
    if (k < 1) throw ConfigError("experiment.n_iter entries must be at least 1");
  const auto method = get_or<std::string>(ex, "method", "poly_root");
  if (method == "closed_form") c.method = Method::ClosedForm;
  else if (method == "poly_root") c.method = Method::PolyRoot;
  else if (method == "iterative") c.method = Method::Iterative;
  else throw ConfigError("experiment.method must be closed_form, poly_root or iterative");
  if (c.method == Method::ClosedForm && c.p_low != 3) throw ConfigError("closed_form needs p_low = 3");
  if (c.method == Method::Iterative && !c.p_high) throw ConfigError("iterative needs comparison.p_high");
  if (ex.contains("trace_x0")) c.trace_x0 = to_vector(ex.at("trace_x0"));
  if (c.trace_x0 && static_cast<std::size_t>(c.trace_x0->size()) != c.n)
    throw ConfigError("experiment.trace_x0 has the wrong dimension");
  c.trace_strategy = get_or<std::string>(ex, "trace_strategy", c.trace_strategy);

  const json in = get_or<json>(j, "integrator", json::object());
  c.integrator.rel_tol = get_or<double>(in, "rel_tol", c.integrator.rel_tol);
  c.integrator.abs_tol = get_or<double>(in, "abs_tol", c.integrator.abs_tol);
  c.integrator.event_tol = get_or<double>(in, "event_tol", c.integrator.event_tol);
  c.integrator.horizon = get_or<double>(in, "horizon", c.integrator.horizon);
  c.integrator.max_step = get_or<double>(in, "max_step", c.integrator.max_step);

  const json out = get_or<json>(j, "output", json::object());
  c.out_artifact = get_or<std::string>(out, "artifact", "");
  c.out_table = get_or<std::string>(out, "table", "");
  c.out_manifold = get_or<std::string>(out, "manifold", "");
  c.out_trace = get_or<std::string>(out, "trace", "");
  c.out_executions = get_or<std::string>(out, "executions", "");

  // A number, or an expression in the parameters such as "0.0127*sigma".
  if (reg.contains("error_ratio")) {
    const auto& er = reg.at("error_ratio");
    c.error_ratio = er.is_string() ? er.get<std::string>() : fmt(er.get<double>());
    for (std::size_t r = 0; r < c.runs(); ++r) run_region(c, r);
  }
  c.search.seed = c.seed;
  return c;
} catch (const json::exception& e) {
  throw ConfigError(std::string("config: ") + e.what());
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return parse_config(j);
}

namespace {

ControlModel build_model(const RunConfig& cfg, std::size_t run) {
  const ParamMap params = run_params(cfg, run);
  ControlModel m;
  m.n = cfg.n;
  m.m = cfg.m;
  const auto pv = plant_names(cfg.n, cfg.m);
  for (const auto& f : cfg.f) m.f.push_back(parse(f, pv, params));
  for (const auto& k : cfg.k) m.k.push_back(parse(k, pv, params));
  m.gamma = parse(cfg.gamma, state_names(cfg.n, false), params);
  m.radius = cfg.region.radius;
  return m;
}

bool wants(const RunConfig& cfg, const std::string& strategy) {
  return std::find(cfg.strategies.begin(), cfg.strategies.end(), strategy) != cfg.strategies.end();
}

const ArtifactEntry& entry_for(const RunConfig& cfg, const Artifact& art, std::size_t run) {
  if (art.entries.size() != cfg.runs())
    throw ConfigError("artifact has " + std::to_string(art.entries.size()) + " entries, config has " +
                      std::to_string(cfg.runs()) + " runs");
  return art.entries[run];
}

}  // namespace

System::System(const RunConfig& cfg, std::size_t run)
    : param(cfg.sweep_values.empty() ? 0.0 : cfg.sweep_values.at(run)),
      model(build_model(cfg, run)),
      original(build_extended(model)),
      field(cfg.hom_auto ? homogenize_field(original, cfg.xi) : original),
      gamma(cfg.hom_auto ? homogenize_trigger(model.gamma, model.n, cfg.theta) : model.gamma),
      xi(cfg.xi),
      chain(field, gamma, std::max(cfg.p_low, cfg.p_high.value_or(0))),
      plant(original, model.gamma),
      bound_system(field, gamma) {}

Eigen::VectorXd System::fresh(const Eigen::VectorXd& x) const {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(field.dim()));
  z.head(x.size()) = x;
  if (homogenized()) z(z.size() - 1) = 1.0;
  return z;
}

std::vector<Eigen::VectorXd> System::slice(std::size_t count, std::uint64_t seed) const {
  return slice_directions(model.n, homogenized(), count, seed);
}

json Artifact::to_json() const {
  json j;
  j["sweep_parameter"] = sweep_parameter;
  j["entries"] = json::array();
  for (const auto& e : entries) {
    json je{{"param", e.param}, {"xi", e.xi}, {"homogenized", e.homogenized}, {"t_star", e.t_star}};
    je["low"] = record_json(e.low);
    je["high"] = e.high ? record_json(*e.high) : json(nullptr);
    je["upper"] = e.upper ? record_json(*e.upper) : json(nullptr);
    j["entries"].push_back(je);
  }
  return j;
}

Artifact Artifact::from_json(const json& j) try {
  Artifact a;
  a.sweep_parameter = j.at("sweep_parameter").get<std::string>();
  for (const auto& je : j.at("entries")) {
    ArtifactEntry e;
    e.param = je.at("param").get<double>();
    e.xi = je.at("xi").get<double>();
    e.homogenized = je.at("homogenized").get<bool>();
    e.t_star = je.at("t_star").get<double>();
    e.low = record_from_json(je.at("low"), e.t_star);
    if (!je.at("high").is_null()) e.high = record_from_json(je.at("high"), e.t_star);
    if (!je.at("upper").is_null()) e.upper = record_from_json(je.at("upper"), e.t_star);
    a.entries.push_back(std::move(e));
  }
  return a;
} catch (const json::exception& e) {
  throw ConfigError(std::string("artifact: ") + e.what());
}

Artifact synthesize(const RunConfig& cfg, std::ostream& log) {
  Artifact art;
  art.sweep_parameter = cfg.sweep_parameter;
  for (std::size_t run = 0; run < cfg.runs(); ++run) {
    const System sys(cfg, run);
    const Region region = run_region(cfg, run);
    ArtifactEntry entry;
    entry.param = sys.param;
    entry.xi = sys.xi;
    entry.homogenized = sys.homogenized();

    auto obtain = [&](int p, const std::optional<Eigen::VectorXd>& supplied, bool reversed, const char* role) {
      ModelRecord rec;
      if (supplied) {
        const auto rep = verify_chi(sys.chain, *supplied, reversed, region, cfg.search.verification, cfg.seed);
        rec.cm = ComparisonModel::from_chi(*supplied, reversed);
        rec.cm.region = region;
        rec.cm.margin = std::max(0.0, -rep.max_scaled_residual);
        rec.cm.verification_samples = rep.samples;
        rec.supplied = true;
        rec.verified = rep.pass;
        rec.max_scaled_residual = rep.max_scaled_residual;
        log << "run " << run << ": supplied " << role << " chi " << (rep.pass ? "verified" : "FAILED verification")
            << " (" << rep.violations << " of " << rep.samples << " samples violate, max scaled residual "
            << fmt(rep.max_scaled_residual) << ")\n";
        if (!rep.pass && cfg.require_verified)
          throw VerificationFailed("supplied " + std::string(role) + " coefficients do not satisfy the Lie inequality on the region");
      } else {
        const LieChain own = p == sys.chain.order() ? sys.chain : LieChain(sys.field, sys.gamma, p);
        rec.cm = search_chi(own, region, cfg.search, reversed);
        rec.verified = true;
        rec.max_scaled_residual = -rec.cm.margin;
        log << "run " << run << ": " << role << " chi found with p = " << p << " from "
            << rec.cm.training_samples << " constraints\n";
      }
      return rec;
    };

    entry.low = obtain(cfg.p_low, cfg.chi_low, false, "low");
    if (cfg.p_high) entry.high = obtain(*cfg.p_high, cfg.chi_high, false, "high");
    if (cfg.upper) entry.upper = obtain(cfg.p_low, cfg.chi_upper, true, "upper");

    if (cfg.t_star) {
      entry.t_star = *cfg.t_star;
    } else {
      const auto dirs = sys.slice(cfg.directions, cfg.seed);
      const auto grid = log_grid(cfg.t_grid_lo, cfg.t_grid_hi, cfg.t_grid_per_decade);
      try {
        entry.t_star = select_t_star(entry.low.cm, sys.chain, sys.xi, dirs, grid);
        if (entry.high) entry.t_star = std::max(entry.t_star, select_t_star(entry.high->cm, sys.chain, sys.xi, dirs, grid));
      } catch (const std::runtime_error& e) {
        throw InfeasibleError(e.what());
      }
    }
    entry.low.cm.set_t_star(entry.t_star);
    if (entry.high) entry.high->cm.set_t_star(entry.t_star);
    if (entry.upper) entry.upper->cm.set_t_star(entry.t_star);
    log << "run " << run << ": t* = " << fmt(entry.t_star) << " s\n";
    art.entries.push_back(std::move(entry));
  }
  return art;
}

json verify(const RunConfig& cfg, const std::optional<Artifact>& art, std::ostream& log) {
  json out{{"runs", json::array()}, {"pass", true}};
  for (std::size_t run = 0; run < cfg.runs(); ++run) {
    const System sys(cfg, run);
    std::vector<std::pair<std::string, ComparisonModel>> models;
    if (art) {
      const auto& e = entry_for(cfg, *art, run);
      models.emplace_back("low", e.low.cm);
      if (e.high) models.emplace_back("high", e.high->cm);
      if (e.upper) models.emplace_back("upper", e.upper->cm);
    } else {
      const Region region = run_region(cfg, run);
      auto add = [&](const char* role, const std::optional<Eigen::VectorXd>& chi, bool reversed) {
        if (!chi) return;
        auto cm = ComparisonModel::from_chi(*chi, reversed);
        cm.region = region;
        models.emplace_back(role, cm);
      };
      add("low", cfg.chi_low, false);
      add("high", cfg.chi_high, false);
      add("upper", cfg.chi_upper, true);
    }
    if (models.empty()) throw ConfigError("nothing to verify: give an artifact or chi in the config");
    json jr{{"param", sys.param}, {"models", json::array()}};
    for (const auto& [role, cm] : models) {
      // Independent of the samples used during the search.
      const auto rep = verify_chi(sys.chain, cm.chi, cm.reversed, cm.region, cfg.search.verification, cfg.seed + 7777);
      jr["models"].push_back({{"role", role},
                              {"p", cm.p},
                              {"chi", from_vector(cm.chi)},
                              {"samples", rep.samples},
                              {"violations", rep.violations},
                              {"max_scaled_residual", rep.max_scaled_residual},
                              {"pass", rep.pass}});
      log << "run " << run << " " << role << ": " << (rep.pass ? "pass" : "FAIL") << " (" << rep.violations
          << " violations)\n";
      if (!rep.pass) out["pass"] = false;
    }
    out["runs"].push_back(jr);
  }
  return out;
}

double self_trigger_bound(const System& sys, const ArtifactEntry& e, Method method, int n_iter,
                          const Eigen::VectorXd& x) {
  const Eigen::VectorXd z = sys.fresh(x);
  try {
    switch (method) {
      case Method::ClosedForm:
        return tau_closed_form_p3(beta(e.low.cm, sys.chain, z), e.xi, e.t_star).tau_lower;
      case Method::PolyRoot:
        return tau_poly_root(beta(e.low.cm, sys.chain, z), e.xi, e.t_star).tau_lower;
      case Method::Iterative:
        if (!e.high) throw ConfigError("iterative bound needs a high-order model");
        return tau_iterative(e.low.cm, e.high->cm, sys.chain, e.xi, z, n_iter).tau_lower;
    }
  } catch (const ImmediateTrigger&) {
    return 0.0;
  }
  return 0.0;
}

std::vector<TableRow> table(const RunConfig& cfg, const Artifact& art) {
  std::vector<TableRow> rows;
  if (cfg.initial_conditions.empty()) return rows;
  for (std::size_t run = 0; run < cfg.runs(); ++run) {
    const System sys(cfg, run);
    const auto& e = entry_for(cfg, art, run);
    TableRow row;
    row.param = e.param;
    const auto& ics = cfg.initial_conditions;
    if (wants(cfg, "periodic")) row.periodic = per_run(cfg.periodic, run, "experiment.periodic");
    if (wants(cfg, "selftrig_prev")) {
      const double ts = per_run(cfg.prior_tau_star, run, "experiment.prior_work.tau_star");
      std::vector<double> v;
      for (const auto& x : ics) v.push_back(ts * std::pow(x.norm() / cfg.prior_r, -e.xi));
      row.prior = mean(v);
    }
    if (wants(cfg, "selftrig_new")) {
      if (cfg.method == Method::Iterative) {
        for (int k : cfg.n_iter) {
          std::vector<double> v;
          for (const auto& x : ics) v.push_back(self_trigger_bound(sys, e, cfg.method, k, x));
          row.selftrig_iter.push_back(mean(v));
          row.n_iter.push_back(k);
        }
        row.selftrig = row.selftrig_iter.back();
      } else {
        std::vector<double> v;
        for (const auto& x : ics) v.push_back(self_trigger_bound(sys, e, cfg.method, 1, x));
        row.selftrig = mean(v);
      }
    }
    if (wants(cfg, "event")) {
      std::vector<double> v;
      for (const auto& x : ics) {
        Eigen::VectorXd z = Eigen::VectorXd::Zero(2 * x.size());
        z.head(x.size()) = x;
        v.push_back(sys.plant.gamma(z) < 0.0 ? event_time_oracle(sys.plant, z, cfg.integrator) : 0.0);
      }
      row.event = mean(v);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_table_csv(std::ostream& os, const std::vector<TableRow>& rows) {
  os << "param,periodic_ms,selftrig_prev_ms,selftrig_new_ms,event_ms";
  const std::vector<int> iters = rows.empty() ? std::vector<int>{} : rows.front().n_iter;
  for (int k : iters) os << ",selftrig_new_iter" << k << "_ms";
  os << '\n';
  auto ms = [](const std::optional<double>& v) { return v ? fmt(*v * 1e3) : std::string(); };
  for (const auto& r : rows) {
    os << fmt(r.param) << ',' << ms(r.periodic) << ',' << ms(r.prior) << ',' << ms(r.selftrig) << ',' << ms(r.event);
    for (double v : r.selftrig_iter) os << ',' << fmt(v * 1e3);
    os << '\n';
  }
}

std::vector<ManifoldCloud> manifold(const RunConfig& cfg, const Artifact& art, std::size_t run,
                                    std::optional<double> t_star, const std::vector<CloudKind>& kinds) {
  const System sys(cfg, run);
  const auto& e = entry_for(cfg, art, run);
  const double t = t_star.value_or(e.t_star);
  ComparisonModel cm = e.low.cm;
  cm.set_t_star(t);
  const auto dirs = sys.slice(cfg.directions, cfg.seed);
  std::optional<ManifoldCloud> approx;
  auto get_approx = [&]() -> const ManifoldCloud& {
    if (!approx) approx = sample_approx(cm, sys.chain, e.xi, dirs);
    return *approx;
  };
  std::vector<ManifoldCloud> out;
  for (CloudKind k : kinds) {
    switch (k) {
      case CloudKind::Approx: out.push_back(get_approx()); break;
      case CloudKind::Exact: out.push_back(sample_exact(sys.bound_system, e.xi, dirs, t, cfg.integrator)); break;
      case CloudKind::Sphere: out.push_back(sphere_cloud(dirs, get_approx().mean_radius(), t)); break;
    }
  }
  return out;
}

std::optional<SimTrace> trace(const RunConfig& cfg, const Artifact& art, std::size_t run, const Eigen::VectorXd& x0,
                              const std::string& strategy, std::ostream& log) {
  const System sys(cfg, run);
  const auto& e = entry_for(cfg, art, run);
  if (static_cast<std::size_t>(x0.size()) != sys.model.n) throw ConfigError("initial state has the wrong dimension");

  Strategy s;
  if (strategy == "periodic") s = PeriodicStrategy{per_run(cfg.periodic, run, "experiment.periodic")};
  else if (strategy == "event") s = EventStrategy{};
  else if (strategy == "selftrig_prev")
    s = PriorWorkStrategy{per_run(cfg.prior_tau_star, run, "experiment.prior_work.tau_star"), cfg.prior_r, e.xi};
  else if (strategy == "selftrig_new")
    s = SelfTriggerStrategy{[&](const Eigen::VectorXd& x) {
      return self_trigger_bound(sys, e, cfg.method, cfg.n_iter.back(), x);
    }};
  else throw ConfigError("unknown strategy '" + strategy + "'");

  const Region& r = e.low.cm.region;
  const double nx = x0.norm();
  const bool outside = e.homogenized ? nx > r.max_state_ratio : (nx > r.radius || nx < r.inner_ratio * r.radius);
  if (outside)
    log << "warning: x0 lies outside the region where the comparison coefficients were verified; "
           "the bound may not hold\n";

  if (cfg.T_end == 0.0) return std::nullopt;
  return run_closed_loop(sys.plant, s, x0, cfg.T_end, cfg.integrator, 4);
}

void write_trace_csv(std::ostream& os, std::size_t n, const std::optional<SimTrace>& tr) {
  if (tr) {
    tr->write_csv(os);
    return;
  }
  os << "t";
  for (std::size_t i = 1; i <= n; ++i) os << ",x" << i;
  for (std::size_t i = 1; i <= n; ++i) os << ",e" << i;
  os << ",gamma,exec_flag\n";
}

void write_executions_csv(std::ostream& os, const std::optional<SimTrace>& tr) {
  os << "index,t,inter_exec\n";
  if (!tr) return;
  const auto& t = tr->exec_instants;
  for (std::size_t i = 0; i < t.size(); ++i)
    os << i << ',' << fmt(t[i]) << ',' << (i + 1 < t.size() ? fmt(t[i + 1] - t[i]) : std::string()) << '\n';
}

}  // namespace isotrig::app
