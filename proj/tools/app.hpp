#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "isotrig/comparison.hpp"
#include "isotrig/manifold.hpp"
#include "isotrig/model.hpp"
#include "isotrig/ode.hpp"
#include "isotrig/selftrigger.hpp"
#include "isotrig/sim.hpp"
#include "json.hpp"

namespace isotrig::app {

/// Bad or inconsistent configuration; maps to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Supplied coefficients failed verification while verification was required; exit code 2.
class VerificationFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Method { ClosedForm, PolyRoot, Iterative };

struct RunConfig {
  // model
  std::size_t n = 0, m = 0;
  std::vector<std::string> f, k;
  std::string gamma;
  ParamMap params;
  // homogenization
  bool hom_auto = false;
  double xi = 1.0;
  double theta = 1.0;
  // region and comparison
  Region region;
  std::string error_ratio;  // number or expression in the parameters; empty: no cone
  int p_low = 3;
  std::optional<int> p_high;
  bool upper = false;
  std::optional<double> t_star;  // empty: automatic
  double t_grid_lo = 1e-4, t_grid_hi = 10.0;
  int t_grid_per_decade = 32;
  std::size_t directions = 360;
  SearchConfig search;
  std::optional<Eigen::VectorXd> chi_low, chi_high, chi_upper;
  bool require_verified = true;
  // experiment
  std::string sweep_parameter;
  std::vector<double> sweep_values;  // empty: single run with params as given
  std::vector<std::string> strategies{"periodic", "selftrig_prev", "selftrig_new", "event"};
  std::vector<double> periodic;     // one per sweep value, or one for all
  std::vector<double> prior_tau_star;
  double prior_r = 1.0;
  std::vector<Eigen::VectorXd> initial_conditions;
  double T_end = 5.0;
  std::vector<int> n_iter{1};
  Method method = Method::PolyRoot;
  std::optional<Eigen::VectorXd> trace_x0;
  std::string trace_strategy = "selftrig_new";
  IntegratorConfig integrator;
  // output
  std::string out_artifact, out_table, out_manifold, out_trace, out_executions;
  std::uint64_t seed = 1;

  std::size_t runs() const { return sweep_values.empty() ? 1 : sweep_values.size(); }
};

RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

/// Everything derived from the config for one sweep value.
struct System {
  double param = 0.0;
  ControlModel model;
  ExtendedField original;
  ExtendedField field;  // homogenized when configured
  Expr gamma;           // on the layout of `field`
  double xi = 1.0;
  LieChain chain;
  TriggeredSystem plant;  // original closed loop, for the oracle and simulation
  TriggeredSystem bound_system;

  System(const RunConfig& cfg, std::size_t run);
  bool homogenized() const { return field.homogenized; }
  /// Fresh-sample state (x, 0) or (x, 0, 1).
  Eigen::VectorXd fresh(const Eigen::VectorXd& x) const;
  std::vector<Eigen::VectorXd> slice(std::size_t count, std::uint64_t seed) const;
};

struct ModelRecord {
  ComparisonModel cm;
  bool supplied = false;  // from the config rather than the search
  bool verified = false;
  double max_scaled_residual = 0.0;
};

struct ArtifactEntry {
  double param = 0.0;
  double xi = 1.0;
  bool homogenized = false;
  double t_star = 0.0;
  ModelRecord low;
  std::optional<ModelRecord> high, upper;
};

struct Artifact {
  std::string sweep_parameter;
  std::vector<ArtifactEntry> entries;

  nlohmann::json to_json() const;
  static Artifact from_json(const nlohmann::json& j);
};

/// Search or verify chi for every sweep value and fix t*. Progress goes to `log`.
Artifact synthesize(const RunConfig& cfg, std::ostream& log);
/// Verification of supplied (or artifact) coefficients only.
nlohmann::json verify(const RunConfig& cfg, const std::optional<Artifact>& art, std::ostream& log);

/// Lower bound from a fresh sample x at the given run; 0 when the trigger is
/// already reached.
double self_trigger_bound(const System& sys, const ArtifactEntry& e, Method method, int n_iter,
                          const Eigen::VectorXd& x);

struct TableRow {
  double param = 0.0;
  std::optional<double> periodic, prior, selftrig, event;  // seconds
  std::vector<double> selftrig_iter;                       // per n_iter, seconds
  std::vector<int> n_iter;
};

std::vector<TableRow> table(const RunConfig& cfg, const Artifact& art);
void write_table_csv(std::ostream& os, const std::vector<TableRow>& rows);

std::vector<ManifoldCloud> manifold(const RunConfig& cfg, const Artifact& art, std::size_t run,
                                    std::optional<double> t_star, const std::vector<CloudKind>& kinds);

/// Closed loop from x0 under one strategy (periodic, selftrig_prev, selftrig_new or
/// event). Empty when T_end = 0.
std::optional<SimTrace> trace(const RunConfig& cfg, const Artifact& art, std::size_t run, const Eigen::VectorXd& x0,
                              const std::string& strategy, std::ostream& log);
/// Header only when there is no trace.
void write_trace_csv(std::ostream& os, std::size_t n, const std::optional<SimTrace>& tr);
void write_executions_csv(std::ostream& os, const std::optional<SimTrace>& tr);

}  // namespace isotrig::app
