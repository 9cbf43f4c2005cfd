#pragma once

// Serial reference implementations. Slow on purpose: these are the oracles the
// parallel kernels and the FFT backend are tested against.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace stratprof::reference {

template <class F>
double serial_sum(std::size_t n, F&& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += f(i);
  return s;
}

void apply_multiplier(std::span<std::complex<double>> data, std::span<const double> mult);
double sum_abs_pow(std::span<const std::complex<double>> data, double p);
double max_abs(std::span<const std::complex<double>> data);
double spectral_energy(std::span<const std::complex<double>> spectrum, std::span<const double> weights);
void axpy(std::complex<double> alpha, std::span<const std::complex<double>> src,
          std::span<std::complex<double>> dst);

/// Unnormalized d-dimensional DFT of an N^d row-major array by direct summation,
/// one axis at a time. sign = -1 forward, +1 backward.
std::vector<std::complex<double>> dft(std::span<const std::complex<double>> in, int dim,
                                      std::size_t n, int sign);

}  // namespace stratprof::reference
