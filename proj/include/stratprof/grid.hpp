#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace stratprof {

/// Uniform grid on the torus [-R, R)^d with N points per axis (N a power of two).
/// Node k sits at -R + k h, h = 2R/N, so x = 0 is node N/2.
struct GridSpec {
  int dim = 1;
  std::size_t n = 0;
  double extent = 0.0;  // R

  double spacing() const { return 2.0 * extent / static_cast<double>(n); }
  std::size_t size() const;
  double coord(std::size_t k) const { return -extent + static_cast<double>(k) * spacing(); }
  /// Angular wavenumber pi k' / R of FFT bin k, k' the signed bin.
  double wavenumber(std::size_t k) const;
  /// |xi|^2 for every bin in row-major order.
  std::vector<double> frequency_sq() const;
  void validate() const;
  bool operator==(const GridSpec&) const = default;
};

struct GridFunction {
  GridSpec grid;
  std::vector<std::complex<double>> samples;

  GridFunction() = default;
  explicit GridFunction(GridSpec g);

  /// Samples f at every node; f receives the coordinates.
  static GridFunction sample(GridSpec g, const std::function<std::complex<double>(std::span<const double>)>& f);

  std::size_t size() const { return samples.size(); }
  double spacing() const { return grid.spacing(); }
  /// Row-major multi-index of a flat index.
  std::vector<std::size_t> unflatten(std::size_t idx) const;
};

/// Unnormalized in-place DFT: sign = -1 forward, +1 backward. Backed by FFTW.
void fft(std::span<std::complex<double>> data, int dim, std::size_t n, int sign);

/// Forward transform of f's samples.
std::vector<std::complex<double>> spectrum(const GridFunction& f);
/// Inverse of spectrum(): applies the 1/N^d normalization.
GridFunction from_spectrum(GridSpec g, std::vector<std::complex<double>> spec);

/// Binary: little-endian uint32 dim, uint32 N, float64 R, then N^d complex64 (re, im float32).
void write_grid_binary(std::ostream& os, const GridFunction& f);
GridFunction read_grid_binary(std::istream& is);
/// Header {dim, N, R} then one {i, re, im} object per sample.
void write_grid_jsonl(std::ostream& os, const GridFunction& f);
GridFunction read_grid_jsonl(std::istream& is);

}  // namespace stratprof
