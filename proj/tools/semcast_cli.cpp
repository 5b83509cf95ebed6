#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "semcast/config.hpp"
#include "semcast/error.hpp"
#include "semcast/kernels.hpp"
#include "semcast/selftest.hpp"
#include "semcast/synth_benchmark.hpp"
#include "semcast/trainer.hpp"

namespace fs = std::filesystem;
using namespace semcast;

namespace {

struct Options {
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
};

ConfigStore resolve(const Options& opt) {
  ConfigStore store;
  if (!opt.config.empty()) store.merge_file(opt.config);
  for (const auto& o : opt.overrides) store.apply_override(o);
  if (!opt.out.empty()) store.apply_override("out=" + opt.out);
  return store;
}

void write_effective(const ConfigStore& store, const fs::path& out) {
  fs::create_directories(out);
  std::ofstream f(out / "config.effective.toml");
  for (const auto& line : store.log()) f << "# " << line << '\n';
  f << store.dump();
  for (const auto& line : store.log()) std::cerr << line << '\n';
}

void print_suite(const SuiteResult& s) {
  std::printf("%-28s %zu/%zu  worst %.3g%s%s\n", s.name.c_str(), s.passed, s.total, s.worst,
              s.note.empty() ? "" : "  ", s.note.c_str());
}

int cmd_train(const Options& opt) {
  const auto store = resolve(opt);
  const auto cfg = to_experiment(store);
  write_effective(store, cfg.out);
  const auto ex = make_experiment(cfg);
  std::fprintf(stderr, "train: %zu epochs x %zu iterations, %zu train / %zu test samples\n", cfg.epochs,
               ex.iters_per_epoch(), ex.train.size(), ex.test.size());
  const auto res = train(ex);
  const auto rows = evaluate(ex, res.state, cfg.snr_grid);
  std::ofstream eval(fs::path(cfg.out) / "eval.csv");
  write_eval_csv(eval, rows);
  const auto& last = res.trace.back();
  std::printf("trace %s\nfinal reward %.6f  w", res.trace_path.string().c_str(), last.reward);
  for (double v : last.w) std::printf(" %.4f", v);
  std::printf("\n");
  write_eval_csv(std::cout, rows);
  return 0;
}

int cmd_eval(const Options& opt) {
  const auto store = resolve(opt);
  const auto cfg = to_experiment(store);
  write_effective(store, cfg.out);
  const auto ex = make_experiment(cfg);
  const fs::path dir = cfg.checkpoint.empty() ? fs::path(cfg.out) / "final" : fs::path(cfg.checkpoint);
  const auto state = load_state(dir, ex);
  const auto rows = evaluate(ex, state, cfg.snr_grid);
  std::ofstream f(fs::path(cfg.out) / "eval.csv");
  write_eval_csv(f, rows);
  write_eval_csv(std::cout, rows);
  return 0;
}

int cmd_gradcheck(const Options& opt) {
  const auto cfg = to_experiment(resolve(opt));
  bool ok = true;
  for (const auto& s : run_gradcheck(cfg.seed)) {
    print_suite(s);
    ok = ok && s.ok();
  }
  return ok ? 0 : 1;
}

int cmd_qp_selftest(const Options& opt) {
  const auto cfg = to_experiment(resolve(opt));
  const auto qp = run_qp_oracle(cfg.seed);
  const auto kkt = run_kkt_suite(cfg.seed);
  const auto simplex = run_simplex_oracle(cfg.seed);
  std::printf("qp oracle: %zu/%zu oracle matches (worst L2 %.3g)\n", qp.passed, qp.total, qp.worst);
  print_suite(kkt);
  print_suite(simplex);
  return qp.ok() && kkt.ok() && simplex.ok() ? 0 : 1;
}

int cmd_synth(const Options& opt) {
  const auto cfg = to_experiment(resolve(opt));
  const auto problem = synth_trilevel_benchmark(cfg.synth_n_w, cfg.synth_n_theta, cfg.seed);
  SynthConfig sc;
  sc.eta = cfg.synth_eta;
  sc.beta = cfg.synth_beta;
  sc.inner_lr = cfg.synth_inner_lr;
  sc.inner_steps = cfg.synth_inner_steps;
  sc.iterations = cfg.synth_iterations;
  sc.fallback_threshold = cfg.fallback_threshold;
  const auto rows = run_synth_trilevel(problem, sc, cfg.seed);
  fs::create_directories(cfg.out);
  const fs::path csv = fs::path(cfg.out) / "synth_trilevel.csv";
  std::ofstream f(csv);
  write_synth_csv(f, rows);
  const auto& last = rows.back();
  std::printf("synth-trilevel %zux%zu, %zu iterations -> %s\n", cfg.synth_n_w, cfg.synth_n_theta, rows.size(),
              csv.string().c_str());
  std::printf("final F %.6g  g_tilde %.3g  g %.3g\n", last.f, last.g_tilde, last.g_true);
  const std::size_t early = std::min<std::size_t>(100, rows.size());
  std::printf("min psi over first %zu: %.3g  over all %zu: %.3g\n", early, min_psi(rows, early), rows.size(),
              min_psi(rows, rows.size()));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semcast: tri-level semantic broadcast training and diagnostics"};
  app.require_subcommand(1, 1);
  Options opt;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "config file (TOML-style key = value, or JSON)")->check(CLI::ExistingFile);
    sub->add_option("--set", opt.overrides, "override KEY=VALUE, applied after the file (repeatable)");
    sub->add_option("--out", opt.out, "output directory (overrides the out key)");
  };
  int (*handler)(const Options&) = nullptr;
  auto sub = [&](const char* name, const char* help, int (*fn)(const Options&)) {
    auto* s = app.add_subcommand(name, help);
    add_common(s);
    s->callback([&handler, fn] { handler = fn; });
  };
  sub("train", "run training; writes trace.csv, checkpoints/ and eval.csv", cmd_train);
  sub("eval", "SNR sweep from a checkpoint (eval.checkpoint, default <out>/final)", cmd_eval);
  sub("gradcheck", "finite-difference checks of every backward pass", cmd_gradcheck);
  sub("qp-selftest", "direction QP, KKT and simplex projection oracles", cmd_qp_selftest);
  sub("synth-trilevel", "tri-level loop on the analytic quadratic benchmark", cmd_synth);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }
  try {
    return handler(opt);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
