#pragma once

// OpenMP data-parallel kernels. Every kernel here has a serial twin in
// reference.hpp with identical semantics; tests pin the two against each other.
//
// Reductions are chunked over a fixed chunk size and combined serially, so the
// result is bitwise independent of the thread count.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace stratprof {

enum class Exec { Parallel, Serial };

namespace kernels {

inline constexpr std::size_t kChunk = 4096;

template <class F>
double chunked_sum(std::size_t n, F&& f) {
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partial(chunks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < static_cast<std::int64_t>(chunks); ++c) {
    const std::size_t begin = static_cast<std::size_t>(c) * kChunk;
    const std::size_t end = begin + kChunk < n ? begin + kChunk : n;
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) s += f(i);
    partial[static_cast<std::size_t>(c)] = s;
  }
  double total = 0.0;
  for (double s : partial) total += s;
  return total;
}

template <class F>
void parallel_for(std::size_t n, F&& f) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) f(static_cast<std::size_t>(i));
}

void apply_multiplier(std::span<std::complex<double>> data, std::span<const double> mult);

/// sum |z|^p
double sum_abs_pow(std::span<const std::complex<double>> data, double p);

double max_abs(std::span<const std::complex<double>> data);

/// sum w_k |F_k|^2
double spectral_energy(std::span<const std::complex<double>> spectrum, std::span<const double> weights);

/// dst += alpha * src
void axpy(std::complex<double> alpha, std::span<const std::complex<double>> src,
          std::span<std::complex<double>> dst);

int max_threads();

}  // namespace kernels
}  // namespace stratprof
