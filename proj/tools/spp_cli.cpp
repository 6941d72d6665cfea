// Command-line front end: spp {generate,run,bounds,verify,plot}.

#include "spp/cli.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace {

struct CommonFlags {
  std::string config;
  std::string out;
  std::int64_t seed = -1;
  int threads = -1;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "JSON experiment config (defaults when omitted)");
  cmd->add_option("--out", flags.out, "output directory (overrides output_dir)");
  cmd->add_option("--seed", flags.seed, "master seed override")->check(CLI::NonNegativeNumber);
  cmd->add_option("--threads", flags.threads, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
}

spp::cli::ExperimentConfig resolve(const CommonFlags& flags) {
  auto cfg = flags.config.empty() ? spp::cli::default_config() : spp::cli::load_config(flags.config);
  if (!flags.out.empty()) cfg.output_dir = flags.out;
  if (flags.seed >= 0) cfg.seed = static_cast<std::uint64_t>(flags.seed);
  if (flags.threads >= 0) cfg.threads = flags.threads;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = spp::cli;
  CLI::App app{"Stochastic proximal point experiments"};
  app.require_subcommand(1);

  CommonFlags gen_flags;
  CommonFlags run_flags;
  CommonFlags bounds_flags;
  CommonFlags verify_flags;
  auto* gen = app.add_subcommand("generate", "write the problem JSON and its seed manifest");
  add_common(gen, gen_flags);
  auto* run = app.add_subcommand("run", "run every schedule variant and write mean traces plus a summary");
  add_common(run, run_flags);
  auto* bounds = app.add_subcommand("bounds", "evaluate the recurrence bound per schedule");
  add_common(bounds, bounds_flags);
  auto* verify = app.add_subcommand("verify", "run the randomized invariant suites");
  add_common(verify, verify_flags);
  std::string suite;
  std::size_t trials = 0;
  verify->add_option("--suite", suite, "prox, lemmas, bounds or all");
  verify->add_option("--trials", trials, "random trials per invariant");
  auto* plot = app.add_subcommand("plot", "render trace CSVs as two log-scale SVG figures");
  std::vector<std::string> csvs;
  std::string plot_out = ".";
  plot->add_option("csv", csvs, "trace CSV files")->required();
  plot->add_option("--out", plot_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::exit_ok : cli::exit_config;
  }

  try {
    if (*gen) {
      const auto r = cli::cmd_generate(resolve(gen_flags));
      std::cout << "wrote " << r.problem_file.string() << " (" << r.components << " components)\n";
    } else if (*run) {
      const auto r = cli::cmd_run(resolve(run_flags), &std::cout);
      std::cout << "wrote " << r.summary_file.string() << '\n';
    } else if (*bounds) {
      const auto r = cli::cmd_bounds(resolve(bounds_flags), &std::cout);
      std::cout << "wrote " << r.files.size() << " bound file(s)\n";
    } else if (*verify) {
      auto cfg = resolve(verify_flags);
      if (!suite.empty()) cfg.verify.suite = suite;
      if (trials > 0) cfg.verify.trials = trials;
      const auto report = cli::cmd_verify(cfg, &std::cout);
      if (!report.passed()) return cli::exit_verification;
    } else if (*plot) {
      std::vector<cli::fs::path> files(csvs.begin(), csvs.end());
      for (const auto& p : cli::cmd_plot(files, plot_out)) std::cout << "wrote " << p.string() << '\n';
    }
  } catch (const spp::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::exit_io;
  }
  return cli::exit_ok;
}
