// Samples a few fBm paths and prints their Hoelder estimates; writes one path as CSV.
//   demo_fbm_paths [out.csv]

#include <fstream>
#include <iostream>

#include "fracschrod/fbm.hpp"

using namespace fracschrod;

int main(int argc, char** argv) {
  for (double H : {0.55, 0.75, 0.95}) {
    const auto path = sample_fbm(H, uniform_times(1.0, 1u << 14), 1, FbmMethod::circulant);
    std::cout << "H = " << H << "  estimated exponent " << estimate_holder(path) << "  B(1) = " << path.values.back()
              << '\n';
  }
  if (argc > 1) {
    std::ofstream out(argv[1]);
    write_csv(out, sample_fbm(0.75, uniform_times(1.0, 1024), 1));
    std::cout << "wrote " << argv[1] << '\n';
  }
}
