#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "semcast/config.hpp"
#include "semcast/data.hpp"
#include "semcast/encoder.hpp"
#include "semcast/receivers.hpp"
#include "semcast/trilevel.hpp"

namespace semcast {

struct Experiment {
  ExperimentConfig cfg;
  Agent agent;
  std::vector<ReceiverSpec> receivers;
  Dataset train;
  Dataset test;

  std::size_t iters_per_epoch() const;
};

// Loads or synthesizes the data and builds every network spec.
Experiment make_experiment(const ExperimentConfig& cfg);

struct TrainState {
  ParamVector theta;
  ParamVector theta_old;
  ParamVector chi;
  std::vector<ParamVector> phis;
  std::vector<double> w;

  std::vector<ReceiverView> views(const Experiment& ex) const;
};

// Seeded initialization; w starts at 1/N.
TrainState init_state(const Experiment& ex);

struct TraceRecord {
  std::size_t epoch = 0;
  std::size_t iter = 0;
  double reward = 0.0;          // mean reward of the final batch under the pre-update w
  std::vector<double> w;        // after the update
  std::vector<double> loss;     // L_RX_n on the final batch
  std::vector<double> metric;   // held-out mean SSIM (reconstruction) or accuracy (classification)
  double lambda = 0.0;
  double rho = 0.0;
  double psi = 0.0;
  double g_tilde = 0.0;
  double g_dot_d = 0.0;
  bool fallback = false;
};

// One cycle of the tri-level schedule. Every random draw comes from a stream
// keyed by (seed, epoch, iter, purpose, index). Errors are rethrown with the
// epoch and iteration prepended.
TraceRecord run_update_cycle(const Experiment& ex, TrainState& state, std::size_t epoch, std::size_t iter);

std::string trace_header(std::size_t receivers);
void write_trace_row(std::ostream& out, const TraceRecord& r);

struct TrainResult {
  TrainState state;
  std::vector<TraceRecord> trace;
  std::filesystem::path trace_path;
  std::filesystem::path final_dir;
};

// Epoch loop writing <out>/trace.csv row by row and a checkpoint per epoch
// under <out>/checkpoints/epoch_XXX. A non-finite value aborts the run; the
// last completed epoch's checkpoint stays on disk.
TrainResult train(const Experiment& ex);

void save_state(const std::filesystem::path& dir, const TrainState& state);
TrainState load_state(const std::filesystem::path& dir, const Experiment& ex);

struct EvalRow {
  double snr_db = 0.0;
  std::size_t receiver = 0;
  TaskKind task = TaskKind::reconstruction;
  double ssim = 0.0;      // nan for classification
  double psnr = 0.0;      // nan for classification
  double accuracy = 0.0;  // nan for reconstruction
};

// Every receiver at every grid SNR over the whole test set, with fresh channel
// draws; |grid| * N rows in grid order.
std::vector<EvalRow> evaluate(const Experiment& ex, const TrainState& state, const std::vector<double>& snr_grid);
void write_eval_csv(std::ostream& out, const std::vector<EvalRow>& rows);

}  // namespace semcast
