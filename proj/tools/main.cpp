#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "app.hpp"
#include "isotrig/expr.hpp"

using namespace isotrig;
using namespace isotrig::app;

namespace {

struct Options {
  std::string config, artifact, out;
  std::optional<std::uint64_t> seed;
  std::size_t run = 0;
  std::vector<std::string> kinds{"approx", "exact", "sphere"};
  std::optional<double> t_star;
  std::vector<double> x0;
  std::string strategy;
  std::string executions;
};

RunConfig read_config(const Options& o) {
  std::ifstream in(o.config);
  if (!in) throw ConfigError("cannot open config '" + o.config + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + o.config + "': " + e.what());
  }
  if (o.seed) j["seed"] = *o.seed;
  return parse_config(j);
}

Artifact obtain_artifact(const RunConfig& cfg, const Options& o) {
  if (o.artifact.empty()) return synthesize(cfg, std::cerr);
  std::ifstream in(o.artifact);
  if (!in) throw ConfigError("cannot open artifact '" + o.artifact + "'");
  try {
    return Artifact::from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("artifact '" + o.artifact + "': " + e.what());
  }
}

// Writes to --out, else the configured path, else stdout.
template <typename F>
void emit(const std::string& flag, const std::string& configured, F&& write) {
  const std::string& path = flag.empty() ? configured : flag;
  if (path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  write(out);
}

void check_run(const RunConfig& cfg, std::size_t run) {
  if (run >= cfg.runs()) throw ConfigError("--run must be below " + std::to_string(cfg.runs()));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Self-triggered sampling bounds from isochronous manifolds"};
  cli.require_subcommand(1);
  cli.fallthrough();
  Options o;
  cli.add_option("--config", o.config, "Run configuration (JSON)")->required();
  cli.add_option("--artifact", o.artifact, "Synthesized coefficients (JSON); searched afresh when omitted");
  cli.add_option("--out", o.out, "Output file (default: configured path or stdout)");
  cli.add_option("--seed", o.seed, "Override the configured seed");

  auto* syn = cli.add_subcommand("synthesize", "Search or verify comparison coefficients and fix t*");
  auto* ver = cli.add_subcommand("verify", "Check coefficients on an independent sample set");
  auto* tab = cli.add_subcommand("table", "Average inter-sample times per strategy (CSV, ms)");
  auto* man = cli.add_subcommand("manifold", "Isochrone point clouds on the e = 0 slice (CSV)");
  man->add_option("--kind", o.kinds, "approx, exact and/or sphere");
  man->add_option("--t-star", o.t_star, "Isochrone time (default: the artifact's t*)");
  man->add_option("--run", o.run, "Sweep index");
  auto* trc = cli.add_subcommand("trace", "Closed-loop trace (CSV)");
  trc->add_option("--x0", o.x0, "Initial plant state (default: experiment.trace_x0)");
  trc->add_option("--strategy", o.strategy, "periodic, selftrig_prev, selftrig_new or event");
  trc->add_option("--run", o.run, "Sweep index");
  trc->add_option("--executions", o.executions, "Also write execution instants (CSV)");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return cli.exit(e) == 0 ? 0 : 1;
  }

  try {
    const RunConfig cfg = read_config(o);
    if (syn->parsed()) {
      const Artifact art = synthesize(cfg, std::cerr);
      emit(o.out, cfg.out_artifact, [&](std::ostream& os) { os << art.to_json().dump(2) << '\n'; });
    } else if (ver->parsed()) {
      std::optional<Artifact> art;
      if (!o.artifact.empty()) art = obtain_artifact(cfg, o);
      const auto report = verify(cfg, art, std::cerr);
      emit(o.out, "", [&](std::ostream& os) { os << report.dump(2) << '\n'; });
      if (!report.at("pass").get<bool>()) return 2;
    } else if (tab->parsed()) {
      const Artifact art = obtain_artifact(cfg, o);
      const auto rows = table(cfg, art);
      emit(o.out, cfg.out_table, [&](std::ostream& os) { write_table_csv(os, rows); });
    } else if (man->parsed()) {
      std::vector<CloudKind> kinds;
      for (const auto& k : o.kinds) {
        try {
          kinds.push_back(parse_cloud_kind(k));
        } catch (const std::invalid_argument& e) {
          std::cerr << "usage error: " << e.what() << "\n" << man->help();
          return 1;
        }
      }
      check_run(cfg, o.run);
      const Artifact art = obtain_artifact(cfg, o);
      const auto clouds = manifold(cfg, art, o.run, o.t_star, kinds);
      emit(o.out, cfg.out_manifold, [&](std::ostream& os) { write_clouds_csv(os, clouds); });
    } else if (trc->parsed()) {
      check_run(cfg, o.run);
      Eigen::VectorXd x0;
      if (!o.x0.empty()) x0 = Eigen::Map<const Eigen::VectorXd>(o.x0.data(), static_cast<Eigen::Index>(o.x0.size()));
      else if (cfg.trace_x0) x0 = *cfg.trace_x0;
      else throw ConfigError("no initial state: pass --x0 or set experiment.trace_x0");
      const Artifact art = obtain_artifact(cfg, o);
      const auto tr = trace(cfg, art, o.run, x0, o.strategy.empty() ? cfg.trace_strategy : o.strategy, std::cerr);
      emit(o.out, cfg.out_trace, [&](std::ostream& os) { write_trace_csv(os, cfg.n, tr); });
      const std::string exec_path = o.executions.empty() ? cfg.out_executions : o.executions;
      if (!exec_path.empty()) emit(exec_path, "", [&](std::ostream& os) { write_executions_csv(os, tr); });
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const VerificationFailed& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return 2;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return 2;
  } catch (const IntegrationError& e) {
    std::cerr << "simulation error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
