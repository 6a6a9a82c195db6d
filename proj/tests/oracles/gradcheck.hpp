#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <torch/torch.h>

namespace oracle {

using ScalarFn = std::function<torch::Tensor(void)>;

// Compares autograd against central differences for L = sum(w * f()), with
// w a fixed random projection of f's output. `leaves` are double-precision
// tensors f reads (inputs or module parameters); they are perturbed in
// place. Returns ||g_autograd - g_numeric|| / max(||g_autograd||, ||g_numeric||).
inline double gradcheck_relative_error(const std::function<torch::Tensor()>& f, const std::vector<torch::Tensor>& leaves,
                                       double h = 1e-6, std::uint64_t seed = 123) {
  torch::Tensor w;
  {
    torch::NoGradGuard no_grad;
    auto gen = at::detail::createCPUGenerator(seed);
    w = at::randn(f().sizes(), gen, torch::TensorOptions().dtype(torch::kFloat64));
  }
  auto loss = [&] { return (f() * w).sum(); };

  for (const auto& t : leaves) {
    if (t.grad().defined()) t.mutable_grad().zero_();
  }
  auto l = loss();
  const auto analytic = torch::autograd::grad({l}, leaves, {}, false, false, /*allow_unused=*/true);

  double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
  torch::NoGradGuard no_grad;
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    auto flat = leaves[k].view({-1});
    auto ga = analytic[k].defined() ? analytic[k].reshape({-1}) : torch::zeros_like(flat);
    for (int64_t i = 0; i < flat.numel(); ++i) {
      const double orig = flat[i].item<double>();
      flat[i] = orig + h;
      const double up = loss().item<double>();
      flat[i] = orig - h;
      const double down = loss().item<double>();
      flat[i] = orig;
      const double num = (up - down) / (2.0 * h);
      const double an = ga[i].item<double>();
      diff2 += (an - num) * (an - num);
      a2 += an * an;
      n2 += num * num;
    }
  }
  const double scale = std::max({std::sqrt(a2), std::sqrt(n2), 1e-12});
  return std::sqrt(diff2) / scale;
}

}  // namespace oracle
