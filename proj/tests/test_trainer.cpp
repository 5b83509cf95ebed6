#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include "doctest.h"
#include "semcast/error.hpp"
#include "semcast/kernels.hpp"
#include "semcast/trainer.hpp"

using namespace semcast;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("semcast_test_trainer_" + name);
  fs::remove_all(p);
  return p;
}

ConfigStore small_store(const fs::path& out) {
  ConfigStore s;
  s.merge_text(R"(
seed = 11
[data]
source = "synthetic"
synthetic_n = 96
synthetic_test_n = 48
synthetic_dim = 16
synthetic_classes = 4
synthetic_noise = 0.1
[model]
bits = 8
encoder_hidden = 12
latent = 6
critic_hidden = 5
log_sigma_init = -1
[receivers]
hidden = [10, 8]
[train]
batch = 16
kappa = 3
inner_steps = 2
epochs = 2
iters_per_epoch = 4
lr_decoder = 0.3
lr_inner = 0.01
lr_joint = 0.02
lr_critic = 0.05
[eval]
snr_grid = [0, 4, inf]
)");
  s.set("out", out.string());
  return s;
}

Experiment small_experiment(const fs::path& out, std::initializer_list<const char*> overrides = {}) {
  auto s = small_store(out);
  for (const char* o : overrides) s.apply_override(o);
  return make_experiment(to_experiment(s));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("trace header follows the documented column order") {
  CHECK(trace_header(2) ==
        "epoch,iter,reward,w_1,w_2,loss_1,loss_2,metric_1,metric_2,lambda,rho,psi,g_tilde,g_dot_d,fallback");
  CHECK(trace_header(1) == "epoch,iter,reward,w_1,loss_1,metric_1,lambda,rho,psi,g_tilde,g_dot_d,fallback");
}

TEST_CASE("iterations per epoch default to ceil(|train| / T)") {
  auto ex = small_experiment(scratch("l"), {"train.iters_per_epoch=0"});
  CHECK(ex.iters_per_epoch() == 6);
  ex.cfg.batch = 20;
  CHECK(ex.iters_per_epoch() == 5);
}

TEST_CASE("a cycle with kappa = 0, H = 1 and zero rates only syncs theta_old") {
  const auto ex = small_experiment(scratch("noop"), {"train.kappa=0", "train.inner_steps=1", "train.lr_decoder=0",
                                                      "train.lr_inner=0", "train.lr_joint=0", "train.lr_critic=0"});
  auto state = init_state(ex);
  state.theta_old = state.theta;
  state.theta_old[0] += 0.5;  // stale old policy
  const auto before = state;
  const auto rec = run_update_cycle(ex, state, 1, 1);
  CHECK(state.theta == before.theta);
  CHECK(state.chi == before.chi);
  CHECK(state.phis == before.phis);
  CHECK(state.w == before.w);
  CHECK(state.theta_old == state.theta);
  CHECK(rec.w == before.w);
  CHECK(rec.metric.size() == 2);
  CHECK(std::isfinite(rec.psi));
}

TEST_CASE("training keeps w on the simplex and writes complete rows") {
  const auto out = scratch("simplex");
  const auto ex = small_experiment(out);
  const auto res = train(ex);
  REQUIRE(res.trace.size() == 8);
  for (const auto& r : res.trace) {
    CHECK(std::accumulate(r.w.begin(), r.w.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
    for (double v : r.w) CHECK(v >= 0.0);
  }
  std::ifstream in(res.trace_path);
  std::string line;
  std::getline(in, line);
  CHECK(line == trace_header(2));
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 14);
  }
  CHECK(rows == 8);
  CHECK(fs::exists(out / "checkpoints" / "epoch_001" / "encoder.bin"));
  CHECK(fs::exists(out / "checkpoints" / "epoch_002" / "decoder_2.bin"));

  const auto loaded = load_state(res.final_dir, ex);
  CHECK(loaded.theta == res.state.theta);
  CHECK(loaded.chi == res.state.chi);
  CHECK(loaded.phis == res.state.phis);
  CHECK(loaded.w == res.state.w);
}

TEST_CASE("identical seeds give identical traces, across thread counts too") {
  const auto a = scratch("det_a"), b = scratch("det_b"), c = scratch("det_c");
  train(small_experiment(a, {"threads=1"}));
  train(small_experiment(b, {"threads=1"}));
  train(small_experiment(c, {"threads=4"}));
  const auto ta = slurp(a / "trace.csv");
  CHECK(ta.size() > 100);
  CHECK(ta == slurp(b / "trace.csv"));
  CHECK(ta == slurp(c / "trace.csv"));
  const auto other = scratch("det_seed");
  train(small_experiment(other, {"seed=12"}));
  CHECK(ta != slurp(other / "trace.csv"));
  kernels::set_thread_count(1);
}

TEST_CASE("equal-weight ablation keeps w fixed and the same schema") {
  const auto out = scratch("ew");
  const auto res = train(small_experiment(out, {"train.ew=true"}));
  for (const auto& r : res.trace) {
    CHECK(r.w == std::vector<double>{0.5, 0.5});
    CHECK(r.lambda == 0.0);
    CHECK(std::isnan(r.g_tilde));
  }
  std::ifstream in(res.trace_path);
  std::string header;
  std::getline(in, header);
  CHECK(header == trace_header(2));
}

TEST_CASE("keep_checkpoints prunes old epochs") {
  const auto out = scratch("keep");
  train(small_experiment(out, {"train.keep_checkpoints=1", "train.epochs=3", "train.iters_per_epoch=1"}));
  CHECK_FALSE(fs::exists(out / "checkpoints" / "epoch_001"));
  CHECK_FALSE(fs::exists(out / "checkpoints" / "epoch_002"));
  CHECK(fs::exists(out / "checkpoints" / "epoch_003"));
}

TEST_CASE("a diverging run aborts with its location and leaves whole rows") {
  const auto out = scratch("nan");
  const auto ex = small_experiment(out, {"train.lr_joint=1e6", "train.epochs=3"});
  bool threw = false;
  try {
    train(ex);
  } catch (const Error& e) {
    threw = true;
    const std::string msg = e.what();
    CHECK(msg.find("epoch ") != std::string::npos);
    CHECK(msg.find(" iter ") != std::string::npos);
  }
  CHECK(threw);
  std::ifstream in(out / "trace.csv");
  std::string line;
  while (std::getline(in, line)) CHECK(std::count(line.begin(), line.end(), ',') == 14);
}

TEST_CASE("evaluation table shape and sanity") {
  const auto out = scratch("eval");
  const auto ex = small_experiment(out, {"train.epochs=10", "train.iters_per_epoch=20", "train.kappa=5", "model.bits=16"});
  const auto res = train(ex);
  const std::vector<double> grid{-4, 0, 4, INFINITY};
  const auto rows = evaluate(ex, res.state, grid);
  REQUIRE(rows.size() == grid.size() * ex.receivers.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].snr_db == grid[i / 2]);
    CHECK(rows[i].receiver == i % 2 + 1);
  }
  const double n = static_cast<double>(ex.test.size());
  const double chance = 1.0 / static_cast<double>(ex.test.classes());
  const double se = std::sqrt(chance * (1 - chance) / n);
  for (const auto& r : rows) {
    if (r.task == TaskKind::classification) {
      CHECK(r.accuracy >= chance - 3 * se);
      CHECK(std::isnan(r.ssim));
    } else {
      CHECK(std::isnan(r.accuracy));
      CHECK(r.ssim <= 1.0);
      CHECK(r.ssim <= rows[rows.size() - 2].ssim);  // noiseless row dominates
    }
  }
  std::ostringstream csv;
  write_eval_csv(csv, rows);
  CHECK(csv.str().rfind("snr_db,receiver,task,ssim,psnr,accuracy\n", 0) == 0);
  // same model and seed -> same table
  const auto again = evaluate(ex, res.state, grid);
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(std::isnan(rows[i].ssim) == std::isnan(again[i].ssim));
}
