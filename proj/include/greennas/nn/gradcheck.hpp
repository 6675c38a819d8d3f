#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "greennas/nn/network.hpp"

namespace greennas::nn {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  std::int64_t checked = 0;
};

// Compares the analytic gradient of the MSE loss against central finite
// differences, in double precision, for every scalar of every tensor.
// Relative error is |a - n| / max(|a|, |n|, floor); the floor keeps
// near-zero gradients from turning rounding noise into huge ratios.
inline GradCheckResult gradient_check(const ModelSpec& spec, int T, int B, std::uint64_t seed, double h = 1e-5,
                                      double floor = 1e-6) {
  Network<double> net = init_weights<double>(spec, seed);
  std::mt19937_64 rng(seed + 1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat<double> x(spec.input_features, static_cast<Eigen::Index>(T) * B);
  Mat<double> y(spec.outputs, B);
  for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = u(rng);
  for (Eigen::Index k = 0; k < y.size(); ++k) y.data()[k] = u(rng);

  auto loss = [&] {
    const Mat<double> d = net.forward(x, T, B) - y;
    return d.squaredNorm() / static_cast<double>(d.size());
  };

  Trace<double> trace;
  const Mat<double> diff = net.forward(x, T, B, &trace) - y;
  net.zero_grad();
  net.backward(trace, (2.0 / static_cast<double>(diff.size())) * diff);

  GradCheckResult res;
  for (auto* p : net.params()) {
    for (Eigen::Index k = 0; k < p->value.size(); ++k) {
      double& w = p->value.data()[k];
      const double saved = w;
      w = saved + h;
      const double up = loss();
      w = saved - h;
      const double down = loss();
      w = saved;
      const double numeric = (up - down) / (2 * h);
      const double analytic = p->grad.data()[k];
      const double rel =
          std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
      if (rel > res.max_rel_error) {
        res.max_rel_error = rel;
        res.worst_tensor = p->name;
      }
      ++res.checked;
    }
  }
  return res;
}

}  // namespace greennas::nn
