// Command line front end for the experiment harness.
#include "dyadic/harness.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace h = dyadic::harness;

int main(int argc, char** argv) {
  CLI::App app{"dyadic-grid experiments for bilinear iterated commutators"};
  app.require_subcommand(1);

  std::optional<std::string> config, out;
  std::optional<int> dim, levels, trials, k1;
  std::optional<std::uint64_t> seed;
  std::optional<double> p1, p2, q1, r1, r2, s;
  std::vector<std::string> sets;

  const char* names[] = {"upper", "lower", "sparse-dom", "sparse-form", "lemmas", "kernel-validate"};
  for (const char* name : names) {
    CLI::App* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
    sub->add_option("--config", config, "key=value file; flags given here override it");
    sub->add_option("--out", out, "output directory for csv and report");
    sub->add_option("--dim", dim, "1 or 2");
    sub->add_option("--levels", levels, "grid resolution L");
    sub->add_option("--trials", trials);
    sub->add_option("--seed", seed);
    sub->add_option("--p1", p1);
    sub->add_option("--p2", p2);
    sub->add_option("--q1", q1);
    sub->add_option("--r1", r1);
    sub->add_option("--r2", r2);
    sub->add_option("--s", s, "use inf for infinity");
    sub->add_option("--k1", k1);
    sub->add_option("--set", sets, "extra key=value setting, repeatable");
  }
  CLI11_PARSE(app, argc, argv);

  try {
    h::ExperimentConfig cfg;
    if (config) cfg = h::load_config(*config);
    cfg.experiment = h::parse_experiment(app.get_subcommands().front()->get_name());
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw dyadic::Error("--set expects key=value, got '" + kv + "'");
      h::apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (out) cfg.out = *out;
    if (dim) cfg.dim = *dim;
    if (levels) cfg.levels = *levels;
    if (trials) cfg.trials = *trials;
    if (seed) cfg.seed = *seed;
    auto& e = cfg.exponents;
    if (p1) e.p1 = *p1;
    if (p2) e.p2 = *p2;
    if (q1) e.q1 = *q1;
    if (r1) e.r1 = *r1;
    if (r2) e.r2 = *r2;
    if (s) e.s = *s;
    if (k1) e.k1 = *k1;

    const h::RunResult res = h::run(cfg);
    const std::string csv = h::write_outputs(res);
    if (csv.empty()) {
      std::cout << h::to_csv(res.records);
    } else {
      std::cout << "wrote " << csv << "\n";
    }
    std::cerr << to_string(cfg.experiment) << ": " << res.records.size() << " records, max ratio "
              << h::format_number(res.max_ratio()) << "\n";
    for (const auto& suite : res.suites)
      std::cerr << "  " << suite.name << ": " << (suite.passed() ? "pass" : "FAIL") << " (" << suite.violations << "/" << suite.cases
                << ")" << (suite.witness.empty() ? "" : " " + suite.witness) << "\n";
    return res.passed() ? 0 : 1;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  }
}
