#pragma once

#include <cstdint>

#include "pion/errors.hpp"
#include "pion/optim.hpp"

namespace pion {

/// Per-step FLOP counts of one Pion update on a d_out×d_in weight.
struct FlopBreakdown {
  double lie_gradient = 0;   ///< 4·d_out·d_in² + 4·d_out²·d_in
  double rms = 0;            ///< 2·d_out²·d_in + 2·d_out·d_in²
  double update_apply = 0;   ///< 2·d_out²·d_in + 2·d_out·d_in²
  double update_cubic = 0;   ///< d_out³ + d_in³ (squared Lie matrices)
  /// rms + update_apply + update_cubic, bilateral.
  double update_side_bilateral = 0;
  /// Same quantity averaged over an out-side and an in-side step.
  double update_side_alternating = 0;
  /// Ratio of the two update-side costs.
  double alternation_saving = 0;
  /// lie_gradient plus the update side of the configured mode.
  double total = 0;
  double baseline = 0; ///< B·d_out·d_in
  /// (d_out + d_in)/B + (d_out³ + d_in³)/(B·d_out·d_in).
  double relative_overhead = 0;
};

[[nodiscard]] inline FlopBreakdown flop_estimate(std::int64_t d_out, std::int64_t d_in,
                                                 std::int64_t batch_tokens,
                                                 const PionConfig& config) {
  if (d_out < 1 || d_in < 1 || batch_tokens < 1) {
    throw DomainError("flop_estimate: dimensions and batch size must be positive");
  }
  const auto o = static_cast<double>(d_out);
  const auto i = static_cast<double>(d_in);
  const auto b = static_cast<double>(batch_tokens);
  FlopBreakdown f;
  f.lie_gradient = 4 * o * i * i + 4 * o * o * i;
  f.rms = 2 * o * o * i + 2 * o * i * i;
  f.update_apply = 2 * o * o * i + 2 * o * i * i;
  f.update_cubic = o * o * o + i * i * i;
  f.update_side_bilateral = f.rms + f.update_apply + f.update_cubic;
  // An out-side step costs 2o²i (rms) + o³ + 2o²i (apply); an in-side step
  // the mirror image. Averaging the two halves every term.
  const double out_step = 2 * o * o * i + o * o * o + 2 * o * o * i;
  const double in_step = 2 * o * i * i + i * i * i + 2 * o * i * i;
  f.update_side_alternating = 0.5 * (out_step + in_step);
  f.alternation_saving = f.update_side_bilateral / f.update_side_alternating;
  f.total = f.lie_gradient + (config.update_mode.kind == UpdateKind::alternating
                                  ? f.update_side_alternating
                                  : f.update_side_bilateral);
  f.baseline = b * o * i;
  f.relative_overhead = (o + i) / b + (o * o * o + i * i * i) / (b * o * i);
  return f;
}

} // namespace pion
