#pragma once

// Monte Carlo experiment runner.
//
// Every trial draws its instance (channel where random, symbols, noise) from
// a seed derived from the base seed, the grid index and the trial index
// only, so all methods see the same realisation. Trials may run on several
// threads; per-trial results are stored by index and summed in order, so the
// output does not depend on the thread count.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "jfsce/config.hpp"
#include "jfsce/csv.hpp"
#include "jfsce/equalizer.hpp"
#include "jfsce/estimators.hpp"
#include "jfsce/loopback.hpp"
#include "jfsce/signal_model.hpp"

namespace jfsce {

enum class ExperimentId { mse_vs_snr, mse_vs_ne, time_vs_ne, mse_vs_sparsity, eq_taps, loopback_index };
enum class Scale { small, full };

std::string_view experiment_name(ExperimentId id);
std::optional<ExperimentId> parse_experiment(std::string_view name);
const std::vector<ExperimentId>& all_experiments();
std::string_view experiment_summary(ExperimentId id);
std::optional<Scale> parse_scale(std::string_view name);

struct ExperimentConfig {
  ExperimentId id = ExperimentId::mse_vs_snr;
  Scale scale = Scale::full;
  FrameConfig frame;                 // M, L, NE (NE is swept by the NE studies)
  int boundary = 500;                // true D_bar
  std::vector<Method> methods;

  std::vector<double> snr_grid;      // dB, mse-vs-snr
  std::vector<double> ne_grid;       // mse-vs-ne, time-vs-ne
  std::vector<double> sparsity_grid; // mse-vs-sparsity
  std::vector<double> budget_grid;   // eq-taps: active equalizer taps
  std::vector<double> index_grid;    // loopback-index: manual channel index i

  double snr_db = 20.0;              // where SNR is not swept
  // Channel for the non-sparsity studies: the 101-tap benchmark at full
  // scale, a random channel of this sparsity at small scale, either fixed
  // by channel_seed or drawn afresh for every trial.
  int channel_sparsity = 10;
  std::uint64_t channel_seed = 7;
  bool benchmark_channel = true;
  bool redraw_channel = false;

  int trials = 200;
  std::uint64_t seed = 1;
  int threads = 0;                   // 0: hardware concurrency
  bool timing = false;               // record wall time (forces one thread)

  int eq_taps = 200;                 // N
  int eq_budget = 0;                 // active taps; 0 means N
  int eval_symbols = 2000;
  EqualizerOptions eq_options;

  SolverParams solver;               // shared knobs; sparsity and noise are set per trial
  EmGmAmpOptions emgmamp;

  // Loopback experiments.
  LoopbackConfig loopback;
  int ssr_sparsity = 6;              // k budget for greedy methods on the loopback stream

  // Throws ConfigError when a grid is empty or a value is out of range.
  void validate() const;
};

ExperimentConfig preset(ExperimentId id, Scale scale);

// Applies `key = value` overrides (one config section) on top of a preset.
// Unknown keys or bad values throw ConfigError.
void apply_overrides(ExperimentConfig& cfg, const KeyValues& values);

// Human-readable listing of the effective settings.
std::string describe(const ExperimentConfig& cfg);

struct TimeSlope {
  std::string method;
  double slope = 0.0;  // least-squares slope of log(time) against log(NE)
  int points = 0;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::vector<TimeSlope> slopes;  // time-vs-ne only
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

// run_experiment with timing forced on, plus the per-method log-log slopes.
ExperimentResult run_time_study(ExperimentConfig cfg);

std::vector<TimeSlope> fit_time_slopes(const std::vector<ResultRow>& rows);

// CSV for the slopes of a time study: method,slope,points.
std::string format_slopes_csv(const std::vector<TimeSlope>& slopes);

// Per-trial record of one method on one instance, exposed for tests.
struct TrialOutcome {
  bool ok = false;
  double mse = 0.0;
  double nmse = 0.0;
  double seconds = 0.0;
  int iterations = 0;
  bool boundary_hit = false;
};

// One synthetic trial on the frame model. `sparsity` < 0 keeps the fixed channel.
std::vector<TrialOutcome> run_model_trial(const ExperimentConfig& cfg, const FrameConfig& frame,
                                          double snr_db, int sparsity, std::uint64_t seed);

// One loopback trial with manual channel index `index` and the equalizer
// budgets listed (one outcome per method per budget, method-major).
std::vector<TrialOutcome> run_loopback_trial(const ExperimentConfig& cfg, int index, double snr_db,
                                             const std::vector<int>& budgets, std::uint64_t seed);

}  // namespace jfsce
