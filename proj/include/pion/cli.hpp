#pragma once

// `pion` command-line front end. Exit codes: 0 success, 1 config or usage
// error, 2 divergence (outputs still written), 3 selftest failure.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pion/config.hpp"
#include "pion/errors.hpp"
#include "pion/flops.hpp"
#include "pion/harness.hpp"
#include "pion/linalg.hpp"
#include "pion/selftest.hpp"

namespace pion::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitDiverged = 2;
inline constexpr int kExitSelftest = 3;

/// Reads the inspect format: `rows,cols` on the first line, then rows·cols
/// row-major values separated by commas or whitespace.
[[nodiscard]] inline Matrix parse_matrix_csv(const std::string& text) {
  std::string normalized = text;
  for (char& ch : normalized) {
    if (ch == ',') {
      ch = ' ';
    }
  }
  std::istringstream in(normalized);
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError("matrix file is empty");
  }
  std::istringstream head(line);
  long long rows = -1, cols = -1;
  std::string extra;
  if (!(head >> rows >> cols) || (head >> extra) || rows < 1 || cols < 1) {
    throw ParseError("first line must be 'rows,cols' with positive integers");
  }
  std::vector<double> values;
  std::string tok;
  while (in >> tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') {
      throw ParseError("not a number: '" + tok + "'");
    }
    values.push_back(v);
  }
  const auto expected = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  if (values.size() != expected) {
    throw ParseError("expected " + std::to_string(expected) + " values, found " +
                     std::to_string(values.size()));
  }
  return {static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), std::move(values)};
}

inline void write_spectrum_report(const Matrix& a, std::ostream& out) {
  const auto sv = singular_values(a);
  out << "shape: " << a.rows() << "x" << a.cols() << "\n";
  out << "singular_values:";
  for (std::size_t i = 0; i < sv.size(); ++i) {
    out << (i == 0 ? " " : ",") << format_double(sv[i]);
  }
  out << "\n";
  out << "frobenius_norm: " << format_double(frobenius_norm(a)) << "\n";
  out << "spectral_norm: " << format_double(sv.empty() ? 0.0 : sv.front()) << "\n";
  if (!sv.empty() && sv.back() > 0.0) {
    out << "condition_number: " << format_double(sv.front() / sv.back()) << "\n";
  } else {
    out << "condition_number: inf\n";
  }
  out << "orthogonality_error: " << format_double(orthogonality_error(a)) << "\n";
  if (a.is_square()) {
    out << "skew_error: " << format_double(skew_error(a)) << "\n";
  } else {
    out << "skew_error: n/a\n";
  }
}

namespace detail {

inline RunConfig load_with_overrides(const std::string& path,
                                     const std::vector<std::string>& overrides) {
  RunConfig cfg = config_load(path);
  for (const auto& o : overrides) {
    cfg = apply_override(cfg, o);
  }
  validate(cfg);
  return cfg;
}

inline std::filesystem::path losses_path_for(const std::filesystem::path& out) {
  auto p = out;
  p.replace_extension();
  p += ".losses.csv";
  return p;
}

inline int cmd_run(const std::string& config, const std::string& out_path,
                   const std::vector<std::string>& overrides, std::size_t smooth_window,
                   std::ostream& out, std::ostream& err) {
  const RunConfig cfg = load_with_overrides(config, overrides);
  RunRecord rec;
  int code = kExitOk;
  try {
    rec = run(cfg);
  } catch (const DivergenceError& e) {
    rec = e.record();
    err << "pion run: " << e.what() << "\n";
    code = kExitDiverged;
  }
  csv_write(rec, out_path);
  out << "final_loss " << format_double(rec.summary.final_loss) << "\n";
  out << "min_stationarity " << format_double(rec.summary.min_stationarity) << "\n";
  out << "max_drift " << format_double(rec.summary.max_drift) << "\n";
  if (smooth_window > 0) {
    std::vector<double> losses;
    for (const auto& [s, l] : rec.losses()) {
      losses.push_back(l);
    }
    const auto avg = moving_average(losses, smooth_window);
    out << "smoothed_final_loss " << format_double(avg.empty() ? 0.0 : avg.back()) << "\n";
    out << "mean_local_loss_std " << format_double(mean_local_std(losses, smooth_window)) << "\n";
  }
  return code;
}

inline int cmd_compare(const std::vector<std::string>& configs, const std::string& out_path,
                       const std::string& losses_path, const std::vector<std::string>& overrides,
                       std::ostream& out, std::ostream& err) {
  std::vector<RunConfig> cfgs;
  std::vector<std::string> labels;
  for (const auto& path : configs) {
    cfgs.push_back(load_with_overrides(path, overrides));
    std::string label = std::filesystem::path(path).stem().string();
    // Repeated file names still need distinct columns.
    if (std::find(labels.begin(), labels.end(), label) != labels.end()) {
      label += "_" + std::to_string(labels.size());
    }
    labels.push_back(label);
  }
  const ComparisonTable t = compare(cfgs, labels);
  write_file_atomic(out_path, summary_csv(t.summaries));
  write_file_atomic(losses_path.empty() ? losses_path_for(out_path).string() : losses_path,
                    comparison_losses_csv(t));
  int code = kExitOk;
  for (const auto& s : t.summaries) {
    out << s.config_id << " final_loss " << format_double(s.summary.final_loss)
        << (s.summary.diverged ? " (diverged)" : "") << "\n";
    if (s.summary.diverged) {
      err << "pion compare: run '" << s.config_id << "' diverged\n";
      code = kExitDiverged;
    }
  }
  return code;
}

inline int cmd_sweep(const std::string& config, const std::string& out_path,
                     const std::vector<std::size_t>& widths, const std::vector<double>& lrs,
                     const std::vector<std::string>& overrides, unsigned threads,
                     std::ostream& out, std::ostream& err) {
  if (widths.empty() || lrs.empty()) {
    throw ConfigError("sweep needs non-empty --widths and --lrs");
  }
  const RunConfig base = load_with_overrides(config, overrides);
  const SweepResult res = lr_sweep(widths, lrs, base, threads);
  write_file_atomic(out_path, summary_csv(res.summary_rows()));
  bool any_ok = false;
  for (const auto& [w, lr] : res.argmin_lr) {
    out << "width " << w << " argmin_lr " << (lr ? format_double(*lr) : "none") << "\n";
    any_ok = any_ok || lr.has_value();
  }
  if (!any_ok) {
    err << "pion sweep: every cell diverged\n";
    return kExitDiverged;
  }
  return kExitOk;
}

inline int cmd_inspect(const std::string& path, std::ostream& out) {
  write_spectrum_report(parse_matrix_csv(read_file(path)), out);
  return kExitOk;
}

inline int cmd_selftest(const std::string& corrupt, std::ostream& out) {
  SelftestKernels k;
  if (corrupt == "exp_e2") {
    k.exp_e2 = corrupted_exp_e2;
  } else if (!corrupt.empty()) {
    throw ConfigError("unknown --corrupt target '" + corrupt + "' (known: exp_e2)");
  }
  bool all = true;
  for (const auto& r : run_selftest(k)) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
    all = all && r.passed;
  }
  return all ? kExitOk : kExitSelftest;
}

inline int cmd_flops(std::int64_t d_out, std::int64_t d_in, std::int64_t batch,
                     const std::string& mode, std::ostream& out) {
  PionConfig cfg;
  if (mode == "alternating") {
    cfg.update_mode.kind = UpdateKind::alternating;
  } else if (mode != "bilateral") {
    throw ConfigError("--update-mode must be bilateral or alternating");
  }
  const FlopBreakdown f = flop_estimate(d_out, d_in, batch, cfg);
  out << "lie_gradient " << format_double(f.lie_gradient) << "\n"
      << "rms " << format_double(f.rms) << "\n"
      << "update_apply " << format_double(f.update_apply) << "\n"
      << "update_cubic " << format_double(f.update_cubic) << "\n"
      << "update_side_bilateral " << format_double(f.update_side_bilateral) << "\n"
      << "update_side_alternating " << format_double(f.update_side_alternating) << "\n"
      << "alternation_saving " << format_double(f.alternation_saving) << "\n"
      << "total " << format_double(f.total) << "\n"
      << "baseline " << format_double(f.baseline) << "\n"
      << "relative_overhead " << format_double(f.relative_overhead) << "\n";
  return kExitOk;
}

} // namespace detail

/// Entry point shared by the `pion` binary and the tests.
inline int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectrum-preserving optimizer experiments", "pion"};
  app.require_subcommand(1);

  std::string config, out_path, losses_path, input, corrupt, update_mode = "bilateral";
  std::vector<std::string> configs, overrides;
  std::vector<std::size_t> widths;
  std::vector<double> lrs;
  std::size_t smooth_window = 0;
  unsigned threads = 0;
  std::int64_t d_out = 0, d_in = 0, batch = 0;

  auto* run_cmd = app.add_subcommand("run", "Train one config and write a metrics CSV");
  run_cmd->add_option("--config", config, "Config JSON")->required();
  run_cmd->add_option("--out", out_path, "Metrics CSV path")->required();
  run_cmd->add_option("--set", overrides, "Override key=value (repeatable)");
  run_cmd->add_option("--smooth-window", smooth_window,
                      "Report moving-average loss and local loss std over this window");

  auto* cmp_cmd = app.add_subcommand("compare", "Run several configs on one problem");
  cmp_cmd->add_option("--config", configs, "Config JSON (repeatable)")->required();
  cmp_cmd->add_option("--out", out_path, "Summary CSV path")->required();
  cmp_cmd->add_option("--losses", losses_path, "Aligned loss table (default <out>.losses.csv)");
  cmp_cmd->add_option("--set", overrides, "Override applied to every config");

  auto* sweep_cmd = app.add_subcommand("sweep", "Learning-rate sweep across widths");
  sweep_cmd->add_option("--config", config, "Base config JSON")->required();
  sweep_cmd->add_option("--out", out_path, "Summary CSV path")->required();
  sweep_cmd->add_option("--widths", widths, "Comma-separated widths")->delimiter(',')->required();
  sweep_cmd->add_option("--lrs", lrs, "Comma-separated learning rates")->delimiter(',')->required();
  sweep_cmd->add_option("--set", overrides, "Override key=value (repeatable)");
  sweep_cmd->add_option("--threads", threads, "Worker threads (default PION_THREADS or all cores)");

  auto* inspect_cmd = app.add_subcommand("inspect", "Spectrum report for a matrix CSV");
  inspect_cmd->add_option("input,--in", input, "Matrix file: 'rows,cols' then values")->required();

  auto* self_cmd = app.add_subcommand("selftest", "Run every invariant suite");
  self_cmd->add_option("--corrupt", corrupt, "Swap in a broken kernel (exp_e2)");

  auto* flops_cmd = app.add_subcommand("flops", "Per-step FLOP estimate of one update");
  flops_cmd->add_option("--d-out", d_out, "Output dimension")->required();
  flops_cmd->add_option("--d-in", d_in, "Input dimension")->required();
  flops_cmd->add_option("--batch", batch, "Tokens per batch")->required();
  flops_cmd->add_option("--update-mode", update_mode, "bilateral or alternating");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run_cmd) {
      return detail::cmd_run(config, out_path, overrides, smooth_window, out, err);
    }
    if (*cmp_cmd) {
      return detail::cmd_compare(configs, out_path, losses_path, overrides, out, err);
    }
    if (*sweep_cmd) {
      return detail::cmd_sweep(config, out_path, widths, lrs, overrides, threads, out, err);
    }
    if (*inspect_cmd) {
      return detail::cmd_inspect(input, out);
    }
    if (*self_cmd) {
      return detail::cmd_selftest(corrupt, out);
    }
    if (*flops_cmd) {
      return detail::cmd_flops(d_out, d_in, batch, update_mode, out);
    }
  } catch (const std::exception& e) {
    err << "pion " << app.get_subcommands().front()->get_name() << ": " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}

} // namespace pion::cli
