#include "jfsce/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "jfsce/measurement.hpp"
#include "jfsce/rng.hpp"

namespace jfsce {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct ExperimentInfo {
  ExperimentId id;
  std::string_view name;
  std::string_view summary;
  std::string_view sweep;
};

constexpr ExperimentInfo kExperiments[] = {
    {ExperimentId::mse_vs_snr, "mse-vs-snr", "equalized MSE against SNR", "snr_db"},
    {ExperimentId::mse_vs_ne, "mse-vs-ne", "equalized MSE against the number of equations NE", "ne"},
    {ExperimentId::time_vs_ne, "time-vs-ne", "estimator wall time against NE, with log-log slopes", "ne"},
    {ExperimentId::mse_vs_sparsity, "mse-vs-sparsity", "equalized MSE against CIR sparsity k (random CIRs)",
     "sparsity"},
    {ExperimentId::eq_taps, "eq-taps", "loopback equalized MSE against active equalizer taps", "active_taps"},
    {ExperimentId::loopback_index, "loopback-index", "loopback equalized MSE against the manual channel index i",
     "channel_index"},
};

const ExperimentInfo& info(ExperimentId id) {
  for (const auto& e : kExperiments)
    if (e.id == id) return e;
  throw ParameterError("unknown experiment id");
}

bool is_loopback(ExperimentId id) { return id == ExperimentId::eq_taps || id == ExperimentId::loopback_index; }

std::vector<double> ratio_grid(const std::vector<double>& ratios, int combined) {
  std::vector<double> out;
  for (double r : ratios) out.push_back(std::max(1.0, std::round(r * combined)));
  return out;
}

std::vector<double> range(double a, double step, double b) {
  std::vector<double> out;
  for (double v = a; v <= b + 1e-9; v += step) out.push_back(v);
  return out;
}

Cir fixed_channel(const ExperimentConfig& cfg) {
  Cir h = cfg.benchmark_channel ? benchmark_cir()
                                : random_sparse_cir(cfg.frame.cir_memory, cfg.channel_sparsity, cfg.channel_seed);
  if (h.memory() > cfg.frame.cir_memory)
    throw ConfigError("fixed channel memory " + std::to_string(h.memory()) + " exceeds L = " +
                      std::to_string(cfg.frame.cir_memory));
  if (h.memory() < cfg.frame.cir_memory) {
    CVector padded = CVector::Zero(cfg.frame.cir_memory + 1);
    padded.head(h.taps.size()) = h.taps;
    h.taps = padded;
  }
  return h;
}

// Runs fn(0 .. count - 1) on up to `threads` workers; rethrows the first
// exception after every worker has stopped.
template <class Fn>
void parallel_for(int count, int threads, Fn&& fn) {
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, std::max(count, 1));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(count);
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

double nmse(const CVector& estimate, const CVector& truth) {
  const Eigen::Index n = std::max(estimate.size(), truth.size());
  CVector a = CVector::Zero(n), b = CVector::Zero(n);
  a.head(estimate.size()) = estimate;
  b.head(truth.size()) = truth;
  return (a - b).squaredNorm() / b.squaredNorm();
}

SolverParams trial_params(const ExperimentConfig& cfg, int sparsity, double noise_variance) {
  SolverParams p = cfg.solver;
  p.sparsity = std::max(sparsity, 1);
  p.noise_variance = noise_variance;
  return p;
}

// Estimate from a JFSCE method on a measurement system.
EstimateReport estimate_jfsce(Method m, const MeasurementSystem& system, const SolverParams& params,
                              const ExperimentConfig& cfg) {
  switch (m) {
    case Method::classical: return classical_jfsce(system);
    case Method::omp: return omp(system, params);
    case Method::cosamp: return cosamp(system, params);
    case Method::rl1: return reweighted_l1(system, params);
    case Method::sbl: return sbl(system, params);
    case Method::emgmamp: return emgmamp(system, params, cfg.emgmamp);
    default: break;
  }
  throw ParameterError("not a JFSCE method: " + std::string(method_name(m)));
}

int budget_for(const ExperimentConfig& cfg, int requested) {
  if (requested <= 0) return cfg.eq_taps;
  return std::min(requested, cfg.eq_taps);
}

}  // namespace

std::string_view experiment_name(ExperimentId id) { return info(id).name; }

std::optional<ExperimentId> parse_experiment(std::string_view name) {
  for (const auto& e : kExperiments)
    if (e.name == name) return e.id;
  return std::nullopt;
}

const std::vector<ExperimentId>& all_experiments() {
  static const std::vector<ExperimentId> ids = [] {
    std::vector<ExperimentId> v;
    for (const auto& e : kExperiments) v.push_back(e.id);
    return v;
  }();
  return ids;
}

std::string_view experiment_summary(ExperimentId id) { return info(id).summary; }

std::optional<Scale> parse_scale(std::string_view name) {
  if (name == "small") return Scale::small;
  if (name == "full") return Scale::full;
  return std::nullopt;
}

void ExperimentConfig::validate() const {
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (methods.empty()) throw ConfigError("method list is empty");
  if (eq_taps < 1) throw ConfigError("eq_taps must be >= 1");
  if (eq_budget < 0 || eq_budget > eq_taps) throw ConfigError("eq_budget must lie in [0, eq_taps]");
  if (eval_symbols < 1) throw ConfigError("eval_symbols must be >= 1");
  try {
    if (is_loopback(id)) {
      loopback.validate();
    } else {
      frame.validate();
    }
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  } catch (const BoundaryRangeError& e) {
    throw ConfigError(e.what());
  }
  if (!is_loopback(id) && (boundary < 0 || boundary >= frame.data_frame_len))
    throw ConfigError("boundary must lie in [0, M - 1]");
  auto need = [](const std::vector<double>& g, const char* key) {
    if (g.empty()) throw ConfigError(std::string(key) + " is empty");
  };
  switch (id) {
    case ExperimentId::mse_vs_snr: need(snr_grid, "snr_grid"); break;
    case ExperimentId::mse_vs_ne:
    case ExperimentId::time_vs_ne:
      need(ne_grid, "ne_grid");
      for (double ne : ne_grid)
        if (ne < 1) throw ConfigError("ne_grid values must be >= 1");
      break;
    case ExperimentId::mse_vs_sparsity:
      need(sparsity_grid, "sparsity_grid");
      for (double k : sparsity_grid)
        if (k < 1 || k > frame.cir_memory + 1) throw ConfigError("sparsity_grid values must lie in [1, L + 1]");
      break;
    case ExperimentId::eq_taps:
      need(budget_grid, "budget_grid");
      for (double b : budget_grid)
        if (b < 1 || b > eq_taps) throw ConfigError("budget_grid values must lie in [1, eq_taps]");
      break;
    case ExperimentId::loopback_index:
      need(index_grid, "index_grid");
      for (double i : index_grid)
        if (i < 1) throw ConfigError("index_grid values must be >= 1");
      break;
  }
}

ExperimentConfig preset(ExperimentId id, Scale scale) {
  ExperimentConfig c;
  c.id = id;
  c.scale = scale;
  const bool full = scale == Scale::full;
  if (full) {
    c.frame = FrameConfig{1000, 100, 148, 1};
    c.boundary = 500;
    c.benchmark_channel = true;
    c.channel_sparsity = 10;
    c.trials = 200;
    c.eq_taps = 200;
    // SBL and R-l1 cost minutes per trial at M + L = 1100; opt in with --methods.
    c.methods = {Method::conventional, Method::genie_conventional, Method::classical, Method::omp,
                 Method::cosamp, Method::emgmamp, Method::ideal};
  } else {
    c.frame = FrameConfig{100, 20, 40, 1};
    c.boundary = 50;
    c.benchmark_channel = false;
    c.redraw_channel = true;
    c.channel_sparsity = 4;
    c.trials = 2000;
    c.eq_taps = 40;
    c.methods = all_methods();
  }
  const int combined = c.frame.combined_len();
  c.snr_grid = range(0.0, 2.0, 30.0);

  switch (id) {
    case ExperimentId::mse_vs_snr: break;
    case ExperimentId::mse_vs_ne:
      c.ne_grid = ratio_grid({0.05, 0.1, 0.135, 0.2, 0.4, 0.6, 0.8, 1.0, 1.2}, combined);
      break;
    case ExperimentId::time_vs_ne:
      c.ne_grid = ratio_grid({0.05, 0.1, 0.2, 0.4, 0.8}, combined);
      c.trials = full ? 5 : 20;
      c.timing = true;
      c.methods = full ? std::vector<Method>{Method::classical, Method::omp, Method::cosamp, Method::emgmamp}
                        : std::vector<Method>{Method::classical, Method::omp, Method::cosamp, Method::rl1,
                                              Method::sbl, Method::emgmamp};
      break;
    case ExperimentId::mse_vs_sparsity:
      c.sparsity_grid = full ? std::vector<double>{10, 20, 30, 40, 50, 60} : std::vector<double>{2, 4, 6, 8, 10, 12};
      break;
    case ExperimentId::eq_taps:
    case ExperimentId::loopback_index:
      c.loopback = LoopbackConfig{};
      c.loopback.delay = 340;
      c.frame = c.loopback.frame;
      c.boundary = 0;
      c.eq_taps = 200;
      c.trials = 20;
      c.ssr_sparsity = 6;
      c.methods = {Method::conventional, Method::classical, Method::omp, Method::ideal};
      c.budget_grid = {1, 2, 3, 4, 5, 6, 8, 10, 12, 15, 20, 30, 50, 100, 150, 200};
      c.index_grid = {1, 2, 3, 4, 5, 6, 7, 8};
      if (id == ExperimentId::loopback_index) c.eq_budget = 11;
      break;
  }
  return c;
}

void apply_overrides(ExperimentConfig& c, const KeyValues& values) {
  const bool lb = is_loopback(c.id);
  FrameConfig& frame = lb ? c.loopback.frame : c.frame;
  for (const auto& [key, value] : values) {
    auto as_int = [&] { return static_cast<int>(parse_long(key, value)); };
    auto as_double = [&] { return parse_double(key, value); };
    if (key == "scale" || key == "out") {
      continue;  // consumed by the command line front end
    } else if (key == "methods") {
      c.methods.clear();
      for (const auto& name : split_list(value)) {
        const auto m = parse_method(name);
        if (!m) throw ConfigError("unknown method '" + name + "'; valid methods: " + method_list());
        c.methods.push_back(*m);
      }
    } else if (key == "trials") {
      c.trials = as_int();
    } else if (key == "seed") {
      c.seed = static_cast<std::uint64_t>(parse_long(key, value));
    } else if (key == "threads") {
      c.threads = as_int();
    } else if (key == "timing") {
      c.timing = parse_bool(key, value);
    } else if (key == "M") {
      frame.data_frame_len = as_int();
    } else if (key == "L") {
      frame.cir_memory = as_int();
    } else if (key == "NE") {
      frame.num_equations = as_int();
    } else if (key == "period") {
      frame.training_period = as_int();
    } else if (key == "boundary") {
      c.boundary = as_int();
    } else if (key == "snr_db") {
      c.snr_db = as_double();
    } else if (key == "snr_grid") {
      c.snr_grid = parse_grid(key, value);
    } else if (key == "ne_grid") {
      c.ne_grid = parse_grid(key, value);
    } else if (key == "sparsity_grid") {
      c.sparsity_grid = parse_grid(key, value);
    } else if (key == "budget_grid") {
      c.budget_grid = parse_grid(key, value);
    } else if (key == "index_grid") {
      c.index_grid = parse_grid(key, value);
    } else if (key == "channel") {
      c.benchmark_channel = value == "benchmark";
      c.redraw_channel = value == "per-trial";
      if (value != "benchmark" && value != "random" && value != "per-trial")
        throw ConfigError("key 'channel': expected benchmark, random or per-trial");
    } else if (key == "channel_sparsity") {
      c.channel_sparsity = as_int();
    } else if (key == "channel_seed") {
      c.channel_seed = static_cast<std::uint64_t>(parse_long(key, value));
    } else if (key == "eq_taps") {
      c.eq_taps = as_int();
    } else if (key == "eq_budget") {
      c.eq_budget = as_int();
    } else if (key == "eval_symbols") {
      c.eval_symbols = as_int();
    } else if (key == "eq_delay_candidates") {
      c.eq_options.greedy_delay_candidates = as_int();
    } else if (key == "max_iter") {
      c.solver.max_iter = as_int();
    } else if (key == "tol") {
      c.solver.tol = as_double();
    } else if (key == "rl1_passes") {
      c.solver.reweight_passes = as_int();
    } else if (key == "rl1_epsilon") {
      c.solver.weight_damping = as_double();
    } else if (key == "rl1_lambda") {
      c.solver.penalty = as_double();
    } else if (key == "sbl_tol") {
      c.solver.sbl_tol = as_double();
    } else if (key == "sbl_prune") {
      c.solver.prune_ratio = as_double();
    } else if (key == "emgmamp_components") {
      c.emgmamp.components = as_int();
    } else if (key == "emgmamp_damping") {
      c.emgmamp.damping = as_double();
    } else if (key == "emgmamp_em_iter") {
      c.emgmamp.max_em_iter = as_int();
    } else if (key == "emgmamp_gamp_iter") {
      c.emgmamp.max_gamp_iter = as_int();
    } else if (key == "oversampling") {
      c.loopback.oversampling = as_int();
    } else if (key == "rolloff") {
      c.loopback.rolloff = as_double();
    } else if (key == "span") {
      c.loopback.span = as_int();
    } else if (key == "delay") {
      c.loopback.delay = as_int();
    } else if (key == "channel_index") {
      c.loopback.channel_index = as_int();
    } else if (key == "ssr_sparsity") {
      c.ssr_sparsity = as_int();
    } else {
      throw ConfigError("unknown key '" + key + "'");
    }
  }
  if (lb) c.frame = c.loopback.frame;
}

std::string describe(const ExperimentConfig& c) {
  std::ostringstream o;
  auto grid = [](const std::vector<double>& g) {
    std::string s;
    for (std::size_t i = 0; i < g.size(); ++i) s += (i ? "," : "") + format_number(g[i]);
    return s;
  };
  std::string methods;
  for (std::size_t i = 0; i < c.methods.size(); ++i)
    methods += (i ? "," : "") + std::string(method_name(c.methods[i]));
  const FrameConfig& f = is_loopback(c.id) ? c.loopback.frame : c.frame;
  o << "experiment = " << experiment_name(c.id) << "\n"
    << "summary = " << experiment_summary(c.id) << "\n"
    << "scale = " << (c.scale == Scale::full ? "full" : "small") << "\n"
    << "M = " << f.data_frame_len << "\n"
    << "L = " << f.cir_memory << "\n"
    << "M+L = " << f.combined_len() << "\n";
  if (c.id != ExperimentId::mse_vs_ne && c.id != ExperimentId::time_vs_ne) o << "NE = " << f.num_equations << "\n";
  o << "training_len = " << f.training_len() << "\n";
  if (c.id == ExperimentId::mse_vs_snr) o << "snr_grid = " << grid(c.snr_grid) << "\n";
  else o << "snr_db = " << format_number(c.snr_db) << "\n";
  switch (c.id) {
    case ExperimentId::mse_vs_ne:
    case ExperimentId::time_vs_ne: o << "ne_grid = " << grid(c.ne_grid) << "\n"; break;
    case ExperimentId::mse_vs_sparsity: o << "sparsity_grid = " << grid(c.sparsity_grid) << "\n"; break;
    case ExperimentId::eq_taps: o << "budget_grid = " << grid(c.budget_grid) << "\n"; break;
    case ExperimentId::loopback_index: o << "index_grid = " << grid(c.index_grid) << "\n"; break;
    default: break;
  }
  if (is_loopback(c.id)) {
    o << "period = " << f.training_period << "\n"
      << "block_len = " << f.block_len() << "\n"
      << "oversampling = " << c.loopback.oversampling << "\n"
      << "rolloff = " << format_number(c.loopback.rolloff) << "\n"
      << "span = " << c.loopback.span << "\n"
      << "delay = " << c.loopback.delay << "\n";
    if (c.id == ExperimentId::eq_taps) o << "channel_index = " << c.loopback.channel_index << "\n";
    o << "ssr_sparsity = " << c.ssr_sparsity << "\n";
  } else {
    o << "boundary = " << c.boundary << "\n";
    if (c.id == ExperimentId::mse_vs_sparsity)
      o << "channel = random (support and CN amplitudes drawn per trial)\n";
    else if (c.benchmark_channel)
      o << "channel = benchmark\n";
    else if (c.redraw_channel)
      o << "channel = per-trial\nchannel_sparsity = " << c.channel_sparsity << "\n";
    else
      o << "channel = random\nchannel_sparsity = " << c.channel_sparsity << "\nchannel_seed = " << c.channel_seed
        << "\n";
  }
  o << "methods = " << methods << "\n"
    << "trials = " << c.trials << "\n"
    << "seed = " << c.seed << "\n"
    << "eq_taps = " << c.eq_taps << "\n"
    << "eq_budget = " << (c.eq_budget == 0 ? c.eq_taps : c.eq_budget) << "\n"
    << "eval_symbols = " << c.eval_symbols << "\n"
    << "timing = " << (c.timing ? "true" : "false") << "\n";
  return o.str();
}

std::vector<TrialOutcome> run_model_trial(const ExperimentConfig& cfg, const FrameConfig& frame, double snr_db,
                                          int sparsity, std::uint64_t seed) {
  const int M = frame.data_frame_len;
  const int L = frame.cir_memory;
  if (sparsity < 0 && !cfg.benchmark_channel && cfg.redraw_channel) sparsity = cfg.channel_sparsity;
  const Cir h = sparsity < 0 ? fixed_channel(cfg) : random_sparse_cir(L, sparsity, derive_seed(seed, {1}));
  const CombinedChannel truth = build_combined_channel(h, cfg.boundary, M);
  const double sigma2 = noise_variance_from_snr_db(snr_db);

  // history | training | data; the evaluation window is the tail of the data.
  const int history = frame.combined_len() - 1;
  const int mt = frame.training_len();
  const int total = history + mt + cfg.eq_taps + frame.combined_len() + cfg.eval_symbols;
  const CVector x = generate_qpsk(total, derive_seed(seed, {2}));
  const CVector training = x.segment(history, mt);
  const CVector y = channel_output({}, as_span(x), truth, NoiseSpec{sigma2, derive_seed(seed, {3})});
  const CVector samples = y.segment(history, mt);
  const MeasurementSystem system = make_measurement_system(as_span(samples), as_span(training), frame);
  const SolverParams params = trial_params(cfg, h.sparsity(), sigma2);
  const int budget = budget_for(cfg, cfg.eq_budget);

  std::vector<TrialOutcome> out;
  for (Method m : cfg.methods) {
    TrialOutcome o;
    try {
      EstimateReport r;
      if (m == Method::ideal) {
        r = ideal_estimate(truth);
      } else if (m == Method::conventional || m == Method::genie_conventional) {
        int b = cfg.boundary;
        if (m == Method::conventional) {
          const CVector block = y.segment(history, mt + M - 1);
          b = correlate_boundary(as_span(block), as_span(training), M);
        }
        r = conventional_estimate(make_conventional_system(as_span(samples), as_span(training), b, frame), frame, m);
      } else {
        r = estimate_jfsce(m, system, params, cfg);
      }
      const EqualizerDesign eq = design_mmse_equalizer(r.estimate, cfg.eq_taps, sigma2, budget, cfg.eq_options);
      o.mse = evaluate_symbol_mse(eq, y, x, total - cfg.eval_symbols, total);
      o.nmse = nmse(r.estimate, truth.taps);
      o.seconds = r.wall_seconds;
      o.iterations = r.iterations;
      if (m == Method::ideal) o.boundary_hit = true;
      else if (r.boundary) o.boundary_hit = *r.boundary == cfg.boundary;
      else o.boundary_hit = derive_boundary(r, M) == cfg.boundary;
      o.ok = std::isfinite(o.mse);
    } catch (const Error&) {
      o.ok = false;
    }
    out.push_back(o);
  }
  return out;
}

std::vector<TrialOutcome> run_loopback_trial(const ExperimentConfig& cfg, int index, double snr_db,
                                             const std::vector<int>& budgets, std::uint64_t seed) {
  LoopbackConfig lc = cfg.loopback;
  lc.channel_index = index;
  const FrameConfig& frame = lc.frame;
  const int M = frame.data_frame_len;
  const int mbar = frame.block_len();
  const int mt = frame.training_len();
  const double sigma2 = noise_variance_from_snr_db(snr_db);
  const LoopbackRun run = run_loopback(lc, NoiseSpec{sigma2, derive_seed(seed, {3})}, derive_seed(seed, {2}));
  const CVector training = run.training(frame);

  // Receiver: frame delay from correlation, then the training window.
  const int detected = detect_training_delay(run.stream, training, frame);
  const TrainingWindow window = locate_training_window(detected, frame);
  const int offset = window.stream_offset(frame);
  const CVector samples = run.stream.segment(offset, mt);
  const MeasurementSystem system = make_measurement_system(as_span(samples), as_span(training), frame);
  const SolverParams params = trial_params(cfg, cfg.ssr_sparsity, sigma2);
  const CVector x = aligned_symbols(run.block, window.frame_delay, frame);
  const int boundary = run.truth.delay - window.frame_delay * M;

  std::vector<TrialOutcome> out;
  for (Method m : cfg.methods) {
    std::vector<TrialOutcome> per_budget(budgets.size());
    try {
      EstimateReport r;
      CVector truth_taps;
      const bool truth_ok = boundary >= 0 && boundary < M;
      if (truth_ok) truth_taps = build_combined_channel(run.truth.composite, boundary, M).taps;
      if (m == Method::ideal) {
        if (!truth_ok) throw BoundaryRangeError("detected frame delay leaves the boundary outside [0, M-1]");
        r.estimate = truth_taps;
        r.method = Method::ideal;
      } else if (m == Method::conventional || m == Method::genie_conventional) {
        int b = boundary;
        if (m == Method::conventional) {
          const CVector block = run.stream.segment(offset, mt + M - 1);
          b = correlate_boundary(as_span(block), as_span(training), M);
        }
        r = conventional_estimate(make_conventional_system(as_span(samples), as_span(training), b, frame), frame, m);
      } else {
        r = estimate_jfsce(m, system, params, cfg);
      }
      for (std::size_t bi = 0; bi < budgets.size(); ++bi) {
        TrialOutcome& o = per_budget[bi];
        const EqualizerDesign eq =
            design_mmse_equalizer(r.estimate, cfg.eq_taps, sigma2, budget_for(cfg, budgets[bi]), cfg.eq_options);
        o.mse = evaluate_symbol_mse(eq, run.stream, x, mbar, 2 * mbar);
        o.nmse = truth_ok ? nmse(r.estimate, truth_taps) : kNaN;
        o.seconds = r.wall_seconds;
        o.iterations = r.iterations;
        if (m == Method::ideal) o.boundary_hit = true;
        else if (r.boundary) o.boundary_hit = *r.boundary == boundary;
        else o.boundary_hit = derive_boundary(r, M) == boundary;
        o.ok = std::isfinite(o.mse);
      }
    } catch (const Error&) {
      for (auto& o : per_budget) o.ok = false;
    }
    out.insert(out.end(), per_budget.begin(), per_budget.end());
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const ExperimentInfo& ei = info(cfg.id);

  // Grid of (sweep value, per-point trial function); every point yields one
  // outcome per (method, sub-point) where sub-points are equalizer budgets.
  std::vector<double> grid;
  switch (cfg.id) {
    case ExperimentId::mse_vs_snr: grid = cfg.snr_grid; break;
    case ExperimentId::mse_vs_ne:
    case ExperimentId::time_vs_ne: grid = cfg.ne_grid; break;
    case ExperimentId::mse_vs_sparsity: grid = cfg.sparsity_grid; break;
    case ExperimentId::eq_taps: grid = {static_cast<double>(cfg.loopback.channel_index)}; break;
    case ExperimentId::loopback_index: grid = cfg.index_grid; break;
  }
  std::vector<int> budgets{cfg.eq_budget};
  if (cfg.id == ExperimentId::eq_taps) {
    budgets.clear();
    for (double b : cfg.budget_grid) budgets.push_back(static_cast<int>(b));
  }
  const std::size_t methods = cfg.methods.size();

  const int points = static_cast<int>(grid.size());
  std::vector<std::vector<TrialOutcome>> outcomes(static_cast<std::size_t>(points) * cfg.trials);
  const int threads = cfg.timing ? 1 : cfg.threads;
  auto run_job = [&](int job) {
    const int g = job / cfg.trials;
    const int t = job % cfg.trials;
    const double v = grid[static_cast<std::size_t>(g)];
    const std::uint64_t seed =
        derive_seed(cfg.seed, {static_cast<std::uint64_t>(g), static_cast<std::uint64_t>(t)});
    std::vector<TrialOutcome> o;
    switch (cfg.id) {
      case ExperimentId::mse_vs_snr: o = run_model_trial(cfg, cfg.frame, v, -1, seed); break;
      case ExperimentId::mse_vs_ne:
      case ExperimentId::time_vs_ne: {
        FrameConfig f = cfg.frame;
        f.num_equations = static_cast<int>(v);
        o = run_model_trial(cfg, f, cfg.snr_db, -1, seed);
        break;
      }
      case ExperimentId::mse_vs_sparsity:
        o = run_model_trial(cfg, cfg.frame, cfg.snr_db, static_cast<int>(v), seed);
        break;
      case ExperimentId::eq_taps:
      case ExperimentId::loopback_index:
        o = run_loopback_trial(cfg, static_cast<int>(v), cfg.snr_db, budgets, seed);
        break;
    }
    outcomes[static_cast<std::size_t>(job)] = std::move(o);
  };
  if (cfg.timing) {
    // One untimed pass so first-touch allocation and cold caches do not
    // land on the first grid point.
    run_job(0);
  }
  parallel_for(points * cfg.trials, threads, run_job);

  ExperimentResult result;
  for (int g = 0; g < points; ++g) {
    for (std::size_t mi = 0; mi < methods; ++mi) {
      for (std::size_t bi = 0; bi < budgets.size(); ++bi) {
        double mse = 0.0, nm = 0.0, secs = 0.0, iters = 0.0, hits = 0.0;
        int ok = 0, nm_count = 0;
        for (int t = 0; t < cfg.trials; ++t) {
          const auto& row = outcomes[static_cast<std::size_t>(g) * cfg.trials + t];
          const TrialOutcome& o = row[mi * budgets.size() + bi];
          if (!o.ok) continue;
          ++ok;
          mse += o.mse;
          if (std::isfinite(o.nmse)) {
            nm += o.nmse;
            ++nm_count;
          }
          secs += o.seconds;
          iters += o.iterations;
          hits += o.boundary_hit ? 1.0 : 0.0;
        }
        ResultRow r;
        r.experiment = std::string(ei.name);
        r.method = std::string(method_name(cfg.methods[mi]));
        r.sweep_name = std::string(ei.sweep);
        r.sweep_value = cfg.id == ExperimentId::eq_taps ? static_cast<double>(budgets[bi]) : grid[g];
        r.trials = cfg.trials;
        r.failures = cfg.trials - ok;
        r.mse_linear = ok ? mse / ok : kNaN;
        r.mse_db = ok ? 10.0 * std::log10(r.mse_linear) : kNaN;
        r.nmse_db = nm_count ? 10.0 * std::log10(nm / nm_count) : kNaN;
        r.time_s = cfg.timing && ok ? secs / ok : kNaN;
        r.iters = ok ? iters / ok : kNaN;
        r.boundary_hit_rate = ok ? hits / ok : kNaN;
        result.rows.push_back(std::move(r));
      }
    }
  }
  if (cfg.timing) result.slopes = fit_time_slopes(result.rows);
  return result;
}

ExperimentResult run_time_study(ExperimentConfig cfg) {
  cfg.timing = true;
  return run_experiment(cfg);
}

std::vector<TimeSlope> fit_time_slopes(const std::vector<ResultRow>& rows) {
  std::vector<std::string> order;
  for (const auto& r : rows)
    if (std::find(order.begin(), order.end(), r.method) == order.end()) order.push_back(r.method);
  std::vector<TimeSlope> out;
  for (const auto& m : order) {
    std::vector<double> xs, ys;
    for (const auto& r : rows) {
      if (r.method != m || !(r.time_s > 0.0) || !(r.sweep_value > 0.0)) continue;
      xs.push_back(std::log(r.sweep_value));
      ys.push_back(std::log(r.time_s));
    }
    TimeSlope s;
    s.method = m;
    s.points = static_cast<int>(xs.size());
    if (xs.size() >= 2) {
      const double n = static_cast<double>(xs.size());
      double mx = 0.0, my = 0.0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i] / n;
        my += ys[i] / n;
      }
      double sxy = 0.0, sxx = 0.0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
      }
      s.slope = sxx > 0.0 ? sxy / sxx : kNaN;
    } else {
      s.slope = kNaN;
    }
    out.push_back(s);
  }
  return out;
}

std::string format_slopes_csv(const std::vector<TimeSlope>& slopes) {
  std::string out = "method,slope,points\n";
  for (const auto& s : slopes) out += s.method + ',' + format_number(s.slope) + ',' + std::to_string(s.points) + '\n';
  return out;
}

}  // namespace jfsce
