#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ctxmt/random.hpp"
#include "ctxmt/transformer.hpp"

namespace testutil {

struct GradCheck {
  double worst_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t kinks = 0;  // draws skipped because +-step flips a ReLU
};

// Central differences on `count` randomly chosen parameters of the summed
// label-smoothed loss against accumulate_gradient (model dropout off). The
// loss is not differentiable where a ReLU input is zero; a draw whose two
// probes see different ReLU patterns is skipped and another one is drawn
// (the skip count is reported).
inline GradCheck gradient_check(ctxmt::ToyTransformer& model,
                                const std::vector<ctxmt::TranslationExample>& batch,
                                double label_smoothing, std::size_t count, std::uint64_t seed,
                                double step = 1e-5) {
  std::vector<double> grad(model.parameter_count(), 0.0);
  for (const auto& ex : batch) model.accumulate_gradient(ex, label_smoothing, grad, nullptr);
  auto loss = [&] {
    double s = 0.0;
    for (const auto& ex : batch) s += model.evaluate_loss(ex, label_smoothing).loss_sum;
    return s;
  };
  ctxmt::Rng rng(seed);
  auto params = model.parameters();
  auto pattern = [&] {
    std::vector<bool> p;
    for (const auto& ex : batch) {
      const auto q = model.relu_pattern(ex);
      p.insert(p.end(), q.begin(), q.end());
    }
    return p;
  };
  GradCheck out;
  while (out.checked < count) {
    const auto idx = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(params.size()) - 1));
    const double keep = params[idx];
    params[idx] = keep + step;
    const double up = loss();
    const auto pattern_up = pattern();
    params[idx] = keep - step;
    const double down = loss();
    const auto pattern_down = pattern();
    params[idx] = keep;
    if (pattern_up != pattern_down) {
      ++out.kinks;
      continue;
    }
    const double numeric = (up - down) / (2 * step);
    const double analytic = grad[idx];
    const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
    out.worst_relative_error = std::max(out.worst_relative_error, std::abs(numeric - analytic) / denom);
    ++out.checked;
  }
  return out;
}

}  // namespace testutil
