#include "ghsel_cli/cli.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

namespace ghsel::cli {
namespace {

struct Bound {
  std::map<std::string, std::string> values;
  std::map<std::string, bool> flags;
  std::map<std::string, CLI::Option*> opts;
  std::string config_path;
};

void bind_keys(CLI::App* sub, Bound& b) {
  sub->add_option("--config", b.config_path, "key=value settings file; flags override it");
  for (const auto& k : config_keys()) {
    if (k.is_flag) {
      b.opts[k.key] = sub->add_flag("--" + k.key, b.flags[k.key], k.help);
    } else {
      b.opts[k.key] = sub->add_option("--" + k.key, b.values[k.key], k.help);
    }
  }
}

RunConfig resolve(const Bound& b) {
  RunConfig cfg;
  if (!b.config_path.empty())
    for (const auto& [k, v] : read_config_file(b.config_path)) apply_setting(cfg, k, v);
  for (const auto& k : config_keys()) {
    const auto* opt = b.opts.at(k.key);
    if (opt->count() == 0) continue;
    apply_setting(cfg, k.key, k.is_flag ? "true" : b.values.at(k.key));
  }
  return cfg;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Bayesian variable and hazard-structure selection for General Hazard survival models"};
  app.require_subcommand(1);

  Bound bs, be, bsim, brep;
  std::string select_data, enum_data;

  auto* sel = app.add_subcommand("select", "MCMC model search on a dataset CSV");
  sel->add_option("data", select_data, "CSV with header time,status,<covariates>")->required();
  bind_keys(sel, bs);

  auto* en = app.add_subcommand("enumerate", "exact posterior over every model (p <= 8)");
  en->add_option("data", enum_data, "CSV with header time,status,<covariates>")->required();
  bind_keys(en, be);

  auto* sim = app.add_subcommand("simulate", "simulate a dataset and its truth sidecar");
  bind_keys(sim, bsim);

  auto* rep = app.add_subcommand("replicate", "simulate, select and score repeatedly");
  bind_keys(rep, brep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (sel->parsed()) {
      RunConfig cfg = resolve(bs);
      cfg.finalize();
      const auto data = read_dataset_csv(select_data);
      const auto res = run_select(data, cfg);
      write_select_outputs(res, cfg);
      std::cerr << "top model " << res.top_model << " ("
                << to_string(classify(Gamma::parse(res.top_model))) << "), outputs in " << cfg.out_dir << '\n';
    } else if (en->parsed()) {
      RunConfig cfg = resolve(be);
      cfg.finalize();
      const auto data = read_dataset_csv(enum_data);
      const auto rows = run_enumerate(data, cfg);
      std::filesystem::create_directories(cfg.out_dir);
      const auto path = std::filesystem::path(cfg.out_dir) / "enumerate.csv";
      std::ofstream out(path);
      if (!out) throw std::runtime_error("cannot write " + path.string());
      write_enumerate_csv(out, rows);
      std::cerr << rows.size() << " models written to " << path.string() << '\n';
    } else if (sim->parsed()) {
      RunConfig cfg = resolve(bsim);
      if (bsim.opts.at("out")->count() == 0) cfg.sim_out = "sim.csv";
      cfg.finalize(true);
      const auto side = run_simulate(cfg);
      std::cerr << "wrote " << cfg.sim_out << " and " << side << '\n';
    } else if (rep->parsed()) {
      RunConfig cfg = resolve(brep);
      cfg.finalize(true);
      const auto rows = run_replicate(cfg, &std::cerr);
      const auto agg = aggregate(rows);
      std::filesystem::create_directories(cfg.out_dir);
      const std::filesystem::path dir(cfg.out_dir);
      std::ofstream r(dir / "replicates.csv");
      write_replicate_csv(r, rows, cfg);
      std::ofstream a(dir / "aggregate.csv");
      write_aggregate_csv(a, agg, cfg);
      if (!r || !a) throw std::runtime_error("cannot write replicate tables in " + cfg.out_dir);
      write_aggregate_csv(std::cout, agg, cfg);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace ghsel::cli
