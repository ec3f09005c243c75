// Trains a small least-squares problem with Pion and reports how far the
// weight's singular values moved.

#include <cstdio>

#include "pion/pion.hpp"

int main() {
  const pion::Problem problem = pion::least_squares(16, 32, 64, 7);
  pion::Matrix w = problem.initial_params(1).front();

  pion::PionConfig cfg;
  cfg.lr = 2e-3;
  pion::ParamState state = pion::pion_init(w.rows(), w.cols(), w, cfg);

  std::printf("step  loss          drift\n");
  for (int t = 0; t <= 500; ++t) {
    const pion::Evaluation ev = problem.evaluate({&w, 1});
    if (t % 100 == 0) {
      std::printf("%4d  %.6e  %.3e\n", t, ev.loss, pion::spectrum_drift(w, state.spectrum_ref));
    }
    w = pion::pion_step(w, ev.grads.front(), state, cfg).w;
  }
  return 0;
}
