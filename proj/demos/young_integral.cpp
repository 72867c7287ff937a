// Pathwise integral of a smooth function against an fBm path, three ways.

#include <cmath>
#include <iostream>

#include "fracschrod/experiments.hpp"

using namespace fracschrod;

int main() {
  const auto t = uniform_times(1.0, 4096);
  const auto path = sample_fbm(0.7, t, 3, FbmMethod::circulant);
  const RealFunction beta(path.times, path.values);
  auto f = [](double s) { return std::exp(-s) * std::cos(4 * s); };
  const auto fs = sample_function(t, f);
  for (double a : {0.35, 0.40, 0.45}) {
    FracConfig cfg;
    cfg.alpha = a;
    std::cout << "fractional quadrature, alpha = " << a << ": " << stieltjes_integral(fs, beta, cfg) << '\n';
  }
  std::cout << "midpoint Riemann-Stieltjes sum:     " << riemann_stieltjes_midpoint(f, beta) << '\n';
  const FracConfig cfg{};
  std::cout << "bound ||f||_{a,1} Lambda_a(g):       " << w_alpha1_norm(fs, cfg) * lambda_alpha(beta, cfg) << '\n';
}
