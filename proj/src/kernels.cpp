#include "stratprof/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "stratprof/errors.hpp"
#include "stratprof/reference.hpp"

namespace stratprof {

namespace {

double abs_pow(std::complex<double> z, double p) {
  const double a = std::abs(z);
  if (p == 2.0) return a * a;
  return std::pow(a, p);
}

}  // namespace

namespace kernels {

void apply_multiplier(std::span<std::complex<double>> data, std::span<const double> mult) {
  if (data.size() != mult.size()) throw LayoutError("apply_multiplier: size mismatch");
  parallel_for(data.size(), [&](std::size_t i) { data[i] *= mult[i]; });
}

double sum_abs_pow(std::span<const std::complex<double>> data, double p) {
  return chunked_sum(data.size(), [&](std::size_t i) { return abs_pow(data[i], p); });
}

double max_abs(std::span<const std::complex<double>> data) {
  const std::size_t chunks = (data.size() + kChunk - 1) / kChunk;
  std::vector<double> partial(chunks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < static_cast<std::int64_t>(chunks); ++c) {
    const std::size_t begin = static_cast<std::size_t>(c) * kChunk;
    const std::size_t end = std::min(begin + kChunk, data.size());
    double m = 0.0;
    for (std::size_t i = begin; i < end; ++i) m = std::max(m, std::abs(data[i]));
    partial[static_cast<std::size_t>(c)] = m;
  }
  double m = 0.0;
  for (double v : partial) m = std::max(m, v);
  return m;
}

double spectral_energy(std::span<const std::complex<double>> spectrum,
                       std::span<const double> weights) {
  if (spectrum.size() != weights.size()) throw LayoutError("spectral_energy: size mismatch");
  return chunked_sum(spectrum.size(),
                     [&](std::size_t i) { return weights[i] * std::norm(spectrum[i]); });
}

void axpy(std::complex<double> alpha, std::span<const std::complex<double>> src,
          std::span<std::complex<double>> dst) {
  if (src.size() != dst.size()) throw LayoutError("axpy: size mismatch");
  parallel_for(src.size(), [&](std::size_t i) { dst[i] += alpha * src[i]; });
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace kernels

namespace reference {

void apply_multiplier(std::span<std::complex<double>> data, std::span<const double> mult) {
  if (data.size() != mult.size()) throw LayoutError("apply_multiplier: size mismatch");
  for (std::size_t i = 0; i < data.size(); ++i) data[i] *= mult[i];
}

double sum_abs_pow(std::span<const std::complex<double>> data, double p) {
  double s = 0.0;
  for (auto z : data) s += abs_pow(z, p);
  return s;
}

double max_abs(std::span<const std::complex<double>> data) {
  double m = 0.0;
  for (auto z : data) m = std::max(m, std::abs(z));
  return m;
}

double spectral_energy(std::span<const std::complex<double>> spectrum,
                       std::span<const double> weights) {
  if (spectrum.size() != weights.size()) throw LayoutError("spectral_energy: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < spectrum.size(); ++i) s += weights[i] * std::norm(spectrum[i]);
  return s;
}

void axpy(std::complex<double> alpha, std::span<const std::complex<double>> src,
          std::span<std::complex<double>> dst) {
  if (src.size() != dst.size()) throw LayoutError("axpy: size mismatch");
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] += alpha * src[i];
}

std::vector<std::complex<double>> dft(std::span<const std::complex<double>> in, int dim,
                                      std::size_t n, int sign) {
  std::size_t total = 1;
  for (int a = 0; a < dim; ++a) total *= n;
  if (in.size() != total) throw LayoutError("dft: array is not N^d");
  std::vector<std::complex<double>> cur(in.begin(), in.end()), next(total);
  std::vector<std::complex<double>> twiddle(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double ang = sign * 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n);
    twiddle[k] = {std::cos(ang), std::sin(ang)};
  }
  std::size_t stride = total;
  for (int axis = 0; axis < dim; ++axis) {
    stride /= n;  // stride of this axis in row-major order
    for (std::size_t base = 0; base < total; ++base) {
      if ((base / stride) % n != 0) continue;  // iterate once per line
      for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc = 0.0;
        for (std::size_t m = 0; m < n; ++m) acc += cur[base + m * stride] * twiddle[(k * m) % n];
        next[base + k * stride] = acc;
      }
    }
    std::swap(cur, next);
  }
  return cur;
}

}  // namespace reference
}  // namespace stratprof
