#pragma once

// Experiment runner: steps an optimizer on a problem, records per-parameter
// diagnostics, and writes them as CSV. compare() lines several runs up on one
// problem; lr_sweep() fans a width × lr grid out over worker threads.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "pion/baselines.hpp"
#include "pion/config.hpp"
#include "pion/errors.hpp"
#include "pion/manifold.hpp"
#include "pion/optim.hpp"
#include "pion/problems.hpp"

namespace pion {

struct RunRow {
  std::int64_t step = 0;
  double loss = 0.0;
  std::size_t param_id = 0;
  double update_fro_over_eta = 0.0;
  double spectrum_drift = 0.0;
  double stationarity = 0.0;
  double weight_fro = 0.0;
  double alpha = 0.0;

  friend bool operator==(const RunRow&, const RunRow&) = default;
};

struct ActivationRow {
  std::int64_t step = 0;
  std::vector<double> rms; ///< one entry per hidden layer
};

struct RunSummary {
  double final_loss = 0.0;
  double min_stationarity = 0.0; ///< over recorded steps, summed across parameters
  double max_drift = 0.0;
  double wall_time = 0.0; ///< seconds
  bool diverged = false;
};

struct RunRecord {
  std::vector<RunRow> rows;
  std::vector<ActivationRow> activations;
  RunSummary summary;

  /// Loss at each recorded step, in order.
  [[nodiscard]] std::vector<std::pair<std::int64_t, double>> losses() const {
    std::vector<std::pair<std::int64_t, double>> out;
    for (const auto& r : rows) {
      if (out.empty() || out.back().first != r.step) {
        out.emplace_back(r.step, r.loss);
      }
    }
    return out;
  }
};

/// Thrown when the loss stops being finite or exceeds the divergence
/// threshold. Carries every row recorded before the failure.
class DivergenceError : public std::runtime_error {
public:
  DivergenceError(const std::string& what, RunRecord partial, std::int64_t step)
      : std::runtime_error(what), record_(std::move(partial)), step_(step) {}

  [[nodiscard]] const RunRecord& record() const noexcept { return record_; }
  [[nodiscard]] std::int64_t step() const noexcept { return step_; }

private:
  RunRecord record_;
  std::int64_t step_;
};

inline constexpr double kDivergenceLoss = 1e12;

/// Learning rate used by step t ∈ [1, T].
[[nodiscard]] inline double scheduled_lr(const LrSchedule& s, double lr0, std::int64_t t,
                                         std::int64_t total) {
  if (s.kind == ScheduleKind::constant || total <= 1) {
    return lr0;
  }
  const double progress = static_cast<double>(t - 1) / static_cast<double>(total - 1);
  const double f = s.floor_fraction;
  return lr0 * (f + (1.0 - f) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress)));
}

namespace detail {

using OptState = std::variant<ParamState, SgdState, AdamWState, MuonLiteState>;

struct StepOutcome {
  Matrix w;
  double update_fro_over_eta = 0.0;
  double alpha = 0.0;
};

inline OptState init_state(const OptimizerSpec& spec, const Matrix& w0) {
  return std::visit(
      [&w0](const auto& h) -> OptState {
        using H = std::decay_t<decltype(h)>;
        if constexpr (std::is_same_v<H, PionConfig>) {
          return pion_init(w0.rows(), w0.cols(), w0, h);
        } else if constexpr (std::is_same_v<H, SgdHyper>) {
          return SgdState{};
        } else if constexpr (std::is_same_v<H, AdamWHyper>) {
          return AdamWState{};
        } else {
          return MuonLiteState{};
        }
      },
      spec);
}

inline StepOutcome step_param(const OptimizerSpec& spec, double lr, const Matrix& w,
                              const Matrix& g, OptState& state) {
  return std::visit(
      [&](const auto& h) -> StepOutcome {
        using H = std::decay_t<decltype(h)>;
        H hyper = h;
        hyper.lr = lr;
        StepOutcome out;
        if constexpr (std::is_same_v<H, PionConfig>) {
          auto r = pion_step(w, g, std::get<ParamState>(state), hyper);
          out.w = std::move(r.w);
          out.alpha = r.report.alpha;
          out.update_fro_over_eta = r.report.delta_w_fro_over_eta;
          return out;
        } else if constexpr (std::is_same_v<H, SgdHyper>) {
          out.w = sgd_step(w, g, std::get<SgdState>(state), hyper);
        } else if constexpr (std::is_same_v<H, AdamWHyper>) {
          out.w = adamw_step(w, g, std::get<AdamWState>(state), hyper);
        } else {
          out.w = muon_lite_step(w, g, std::get<MuonLiteState>(state), hyper);
        }
        out.update_fro_over_eta = frobenius_norm(sub(out.w, w)) / lr;
        return out;
      },
      spec);
}

inline void finish_summary(RunRecord& rec, std::chrono::steady_clock::time_point start) {
  auto& s = rec.summary;
  s.final_loss = rec.rows.empty() ? 0.0 : rec.rows.back().loss;
  s.max_drift = 0.0;
  std::map<std::int64_t, double> per_step;
  for (const auto& r : rec.rows) {
    s.max_drift = std::max(s.max_drift, r.spectrum_drift);
    per_step[r.step] += r.stationarity;
  }
  s.min_stationarity = per_step.empty() ? 0.0 : per_step.begin()->second;
  for (const auto& [step, v] : per_step) {
    s.min_stationarity = std::min(s.min_stationarity, v);
  }
  s.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

} // namespace detail

/// Runs `cfg` on an explicit problem instance (which must match the
/// parameter shapes the config would build). The problem is only read.
[[nodiscard]] inline RunRecord run(const RunConfig& cfg, const Problem& problem) {
  validate(cfg);
  const auto start = std::chrono::steady_clock::now();
  ParamList w = problem.initial_params(cfg.seed);
  try {
    problem.check_params(w);
  } catch (const ShapeError& e) {
    throw ConfigError(e.what());
  }

  const std::size_t np = w.size();
  std::vector<SpectrumRef> refs;
  std::vector<detail::OptState> states;
  for (const auto& m : w) {
    refs.push_back(capture_spectrum(m, 0));
    states.push_back(detail::init_state(cfg.optimizer, m));
  }
  std::vector<double> last_update(np, 0.0), last_alpha(np, 0.0);
  const double lr0 = optimizer_lr(cfg.optimizer);

  RunRecord rec;
  auto diverge = [&](const std::string& why, std::int64_t t) {
    detail::finish_summary(rec, start);
    rec.summary.diverged = true;
    throw DivergenceError("diverged at step " + std::to_string(t) + ": " + why, rec, t);
  };

  for (std::int64_t t = 0;; ++t) {
    Evaluation ev;
    try {
      ev = problem.evaluate(w);
    } catch (const std::domain_error& e) {
      diverge(e.what(), t);
    }
    if (!std::isfinite(ev.loss) || ev.loss > kDivergenceLoss) {
      diverge("loss " + std::to_string(ev.loss), t);
    }
    for (const auto& g : ev.grads) {
      if (!all_finite(g)) {
        diverge("non-finite gradient", t);
      }
    }

    if (t == 0 || t % cfg.record_every == 0 || t == cfg.steps) {
      for (std::size_t k = 0; k < np; ++k) {
        RunRow row;
        row.step = t;
        row.loss = ev.loss;
        row.param_id = k;
        row.update_fro_over_eta = last_update[k];
        row.spectrum_drift = spectrum_drift(w[k], refs[k]);
        row.stationarity = stationarity_measure(w[k], ev.grads[k]);
        row.weight_fro = frobenius_norm(w[k]);
        row.alpha = last_alpha[k];
        rec.rows.push_back(row);
      }
      if (problem.activation_rms) {
        rec.activations.push_back({t, problem.activation_rms(w)});
      }
    }
    if (t == cfg.steps) {
      break;
    }

    const double lr = scheduled_lr(cfg.lr_schedule, lr0, t + 1, cfg.steps);
    for (std::size_t k = 0; k < np; ++k) {
      detail::StepOutcome o;
      try {
        o = detail::step_param(cfg.optimizer, lr, w[k], ev.grads[k], states[k]);
      } catch (const std::domain_error& e) {
        diverge(e.what(), t + 1);
      } catch (const SingularityError& e) {
        diverge(e.what(), t + 1);
      } catch (const ConvergenceError& e) {
        diverge(e.what(), t + 1);
      }
      if (!all_finite(o.w) || !std::isfinite(o.update_fro_over_eta) || !std::isfinite(o.alpha)) {
        diverge("non-finite update", t + 1);
      }
      w[k] = std::move(o.w);
      last_update[k] = o.update_fro_over_eta;
      last_alpha[k] = o.alpha;
    }
  }
  detail::finish_summary(rec, start);
  return rec;
}

[[nodiscard]] inline RunRecord run(const RunConfig& cfg) {
  validate(cfg);
  return run(cfg, make_problem(cfg.problem));
}

/// Record of a run that may have diverged, without the exception.
[[nodiscard]] inline RunRecord run_capture(const RunConfig& cfg) {
  try {
    return run(cfg);
  } catch (const DivergenceError& e) {
    return e.record();
  }
}

// ---- CSV ------------------------------------------------------------------

inline constexpr const char* kMetricsHeader =
    "step,loss,param_id,update_fro_over_eta,spectrum_drift,stationarity,weight_fro,alpha";
inline constexpr const char* kSummaryHeader =
    "config_id,width,lr,final_loss,min_stationarity,max_drift,diverged";

[[nodiscard]] inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[nodiscard]] inline std::string metrics_csv(const RunRecord& rec) {
  std::string out = kMetricsHeader;
  out += '\n';
  for (const auto& r : rec.rows) {
    out += std::to_string(r.step) + ',' + format_double(r.loss) + ',' +
           std::to_string(r.param_id) + ',' + format_double(r.update_fro_over_eta) + ',' +
           format_double(r.spectrum_drift) + ',' + format_double(r.stationarity) + ',' +
           format_double(r.weight_fro) + ',' + format_double(r.alpha) + '\n';
  }
  return out;
}

/// Writes through a sibling temp file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) {
      throw IoError("cannot open " + tmp.string() + " for writing");
    }
    f << content;
    f.flush();
    if (!f) {
      throw IoError("write to " + tmp.string() + " failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move " + tmp.string() + " to " + path.string());
  }
}

inline void csv_write(const RunRecord& rec, const std::filesystem::path& path) {
  write_file_atomic(path, metrics_csv(rec));
}

[[nodiscard]] inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw IoError("cannot read " + path.string());
  }
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

[[nodiscard]] inline RunConfig config_load(const std::filesystem::path& path) {
  return config_parse(read_file(path));
}

struct SummaryRow {
  std::string config_id;
  std::size_t width = 0;
  double lr = 0.0;
  RunSummary summary;
};

[[nodiscard]] inline std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out = kSummaryHeader;
  out += '\n';
  for (const auto& r : rows) {
    out += r.config_id + ',' + std::to_string(r.width) + ',' + format_double(r.lr) + ',' +
           format_double(r.summary.final_loss) + ',' + format_double(r.summary.min_stationarity) +
           ',' + format_double(r.summary.max_drift) + ',' + (r.summary.diverged ? "1" : "0") +
           '\n';
  }
  return out;
}

// ---- compare ---------------------------------------------------------------

struct ComparisonTable {
  std::vector<std::string> labels;
  std::vector<std::int64_t> steps; ///< union of recorded steps
  /// losses[k][i]: loss of run k at steps[i], absent if not recorded.
  std::vector<std::vector<std::optional<double>>> losses;
  std::vector<RunRecord> records;
  std::vector<SummaryRow> summaries;
};

/// Runs each config on the shared problem. Diverged runs keep their partial
/// record and are flagged in the summary.
[[nodiscard]] inline ComparisonTable compare(const std::vector<RunConfig>& cfgs,
                                             std::vector<std::string> labels = {}) {
  if (cfgs.empty()) {
    throw ConfigError("compare: no configs");
  }
  for (const auto& c : cfgs) {
    if (!(c.problem == cfgs.front().problem) || c.seed != cfgs.front().seed) {
      throw ConfigError("compare: configs must share the problem spec and seed");
    }
  }
  if (labels.empty()) {
    for (std::size_t k = 0; k < cfgs.size(); ++k) {
      labels.push_back(std::to_string(k));
    }
  }
  if (labels.size() != cfgs.size()) {
    throw ConfigError("compare: label count does not match config count");
  }
  for (const auto& c : cfgs) {
    validate(c);
  }
  const Problem problem = make_problem(cfgs.front().problem);
  ComparisonTable t;
  t.labels = std::move(labels);
  for (std::size_t k = 0; k < cfgs.size(); ++k) {
    RunRecord rec;
    try {
      rec = run(cfgs[k], problem);
    } catch (const DivergenceError& e) {
      rec = e.record();
    }
    t.summaries.push_back({t.labels[k], problem_width(cfgs[k].problem),
                           optimizer_lr(cfgs[k].optimizer), rec.summary});
    t.records.push_back(std::move(rec));
  }
  std::vector<std::int64_t> steps;
  for (const auto& r : t.records) {
    for (const auto& [s, l] : r.losses()) {
      steps.push_back(s);
    }
  }
  std::sort(steps.begin(), steps.end());
  steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
  t.steps = steps;
  for (const auto& r : t.records) {
    std::vector<std::optional<double>> col(steps.size());
    for (const auto& [s, l] : r.losses()) {
      col[static_cast<std::size_t>(std::lower_bound(steps.begin(), steps.end(), s) - steps.begin())] = l;
    }
    t.losses.push_back(std::move(col));
  }
  return t;
}

/// `step,<label>...` with empty cells where a run has no value.
[[nodiscard]] inline std::string comparison_losses_csv(const ComparisonTable& t) {
  std::string out = "step";
  for (const auto& l : t.labels) {
    out += ',' + l;
  }
  out += '\n';
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    out += std::to_string(t.steps[i]);
    for (const auto& col : t.losses) {
      out += ',';
      if (col[i]) {
        out += format_double(*col[i]);
      }
    }
    out += '\n';
  }
  return out;
}

// ---- lr sweep ----------------------------------------------------------------

/// PION_THREADS if set to a positive integer, else the hardware thread count.
[[nodiscard]] inline unsigned default_threads() {
  if (const char* env = std::getenv("PION_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) {
      return static_cast<unsigned>(v);
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

struct SweepCell {
  std::size_t width = 0;
  double lr = 0.0;
  RunSummary summary;
};

struct SweepResult {
  std::vector<SweepCell> cells; ///< width-major, lrs in the given order
  /// Lowest-final-loss lr per width among non-diverged cells.
  std::vector<std::pair<std::size_t, std::optional<double>>> argmin_lr;

  [[nodiscard]] std::vector<SummaryRow> summary_rows() const {
    std::vector<SummaryRow> rows;
    for (std::size_t k = 0; k < cells.size(); ++k) {
      rows.push_back({std::to_string(k), cells[k].width, cells[k].lr, cells[k].summary});
    }
    return rows;
  }
};

/// Runs base_cfg at every (width, lr). Cells are independent and may run on
/// up to `threads` workers (0 picks default_threads()); results do not depend
/// on the thread count.
[[nodiscard]] inline SweepResult lr_sweep(const std::vector<std::size_t>& widths,
                                          const std::vector<double>& lrs,
                                          const RunConfig& base_cfg, unsigned threads = 0) {
  if (widths.empty() || lrs.empty()) {
    throw ConfigError("lr_sweep: widths and lrs must be non-empty");
  }
  std::vector<RunConfig> cfgs;
  SweepResult res;
  for (auto w : widths) {
    for (double lr : lrs) {
      RunConfig c = base_cfg;
      c.problem = scaled_problem(c.problem, w);
      set_optimizer_lr(c.optimizer, lr);
      validate(c);
      cfgs.push_back(std::move(c));
      res.cells.push_back({w, lr, {}});
    }
  }
  if (threads == 0) {
    threads = default_threads();
  }
  threads = std::min<unsigned>(threads, static_cast<unsigned>(cfgs.size()));

  std::vector<std::exception_ptr> errors(cfgs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < cfgs.size(); k = next++) {
      try {
        res.cells[k].summary = run_capture(cfgs[k]).summary;
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) {
      pool.emplace_back(worker);
    }
    for (auto& th : pool) {
      th.join();
    }
  }
  for (const auto& e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }

  for (std::size_t wi = 0; wi < widths.size(); ++wi) {
    std::optional<double> best_lr;
    double best = 0.0;
    for (std::size_t li = 0; li < lrs.size(); ++li) {
      const auto& cell = res.cells[wi * lrs.size() + li];
      if (cell.summary.diverged) {
        continue;
      }
      if (!best_lr || cell.summary.final_loss < best) {
        best = cell.summary.final_loss;
        best_lr = cell.lr;
      }
    }
    res.argmin_lr.emplace_back(widths[wi], best_lr);
  }
  return res;
}

// ---- post-processing ---------------------------------------------------------

/// Trailing moving average; entry i averages values[max(0, i−window+1) .. i].
[[nodiscard]] inline std::vector<double> moving_average(const std::vector<double>& values,
                                                        std::size_t window) {
  if (window < 1) {
    throw DomainError("moving_average: window must be >= 1");
  }
  std::vector<double> out(values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum += values[i];
    if (i >= window) {
      sum -= values[i - window];
    }
    out[i] = sum / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

/// Mean over full windows of the (population) standard deviation of each
/// window of `window` consecutive values. Zero if the series is shorter.
[[nodiscard]] inline double mean_local_std(const std::vector<double>& values, std::size_t window) {
  if (window < 1) {
    throw DomainError("mean_local_std: window must be >= 1");
  }
  if (values.size() < window) {
    return 0.0;
  }
  double total = 0.0;
  const std::size_t n = values.size() - window + 1;
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < window; ++j) {
      mean += values[i + j];
    }
    mean /= static_cast<double>(window);
    double var = 0.0;
    for (std::size_t j = 0; j < window; ++j) {
      var += (values[i + j] - mean) * (values[i + j] - mean);
    }
    total += std::sqrt(var / static_cast<double>(window));
  }
  return total / static_cast<double>(n);
}

} // namespace pion
