#include "stratprof/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <tuple>

#include <json.hpp>

#include "stratprof/errors.hpp"

namespace stratprof {

std::size_t GridSpec::size() const {
  std::size_t t = 1;
  for (int a = 0; a < dim; ++a) t *= n;
  return t;
}

double GridSpec::wavenumber(std::size_t k) const {
  const auto signed_k = k < n / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
  return M_PI * signed_k / extent;
}

std::vector<double> GridSpec::frequency_sq() const {
  std::vector<double> axis(n);
  for (std::size_t k = 0; k < n; ++k) axis[k] = wavenumber(k) * wavenumber(k);
  std::vector<double> out(size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::size_t rem = i;
    double s = 0.0;
    for (int a = 0; a < dim; ++a) {
      s += axis[rem % n];
      rem /= n;
    }
    out[i] = s;
  }
  return out;
}

void GridSpec::validate() const {
  if (dim < 1 || dim > 3) throw DomainError("grid dimension must be 1, 2 or 3");
  if (n < 2 || !std::has_single_bit(n)) throw DomainError("grid size N must be a power of two >= 2");
  if (!(extent > 0.0) || !std::isfinite(extent)) throw DomainError("grid extent R must be positive");
}

GridFunction::GridFunction(GridSpec g) : grid(g) {
  grid.validate();
  samples.assign(grid.size(), {0.0, 0.0});
}

GridFunction GridFunction::sample(GridSpec g,
                                  const std::function<std::complex<double>(std::span<const double>)>& f) {
  GridFunction out(g);
  std::vector<double> x(g.dim);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::size_t rem = i;
    for (int a = g.dim - 1; a >= 0; --a) {
      x[a] = g.coord(rem % g.n);
      rem /= g.n;
    }
    out.samples[i] = f(x);
  }
  return out;
}

std::vector<std::size_t> GridFunction::unflatten(std::size_t idx) const {
  std::vector<std::size_t> m(grid.dim);
  for (int a = grid.dim - 1; a >= 0; --a) {
    m[a] = idx % grid.n;
    idx /= grid.n;
  }
  return m;
}

namespace {

std::mutex plan_mutex;

fftw_plan plan_for(int dim, std::size_t n, int sign) {
  static std::map<std::tuple<int, std::size_t, int>, fftw_plan> cache;
  std::lock_guard<std::mutex> lock(plan_mutex);
  auto key = std::make_tuple(dim, n, sign);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  std::vector<int> dims(dim, static_cast<int>(n));
  std::size_t total = 1;
  for (int a = 0; a < dim; ++a) total *= n;
  auto* buf = fftw_alloc_complex(total);
  fftw_plan p = fftw_plan_dft(dim, dims.data(), buf, buf, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                              FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(buf);
  if (!p) throw Error("FFTW failed to create a plan");
  cache.emplace(key, p);
  return p;
}

}  // namespace

void fft(std::span<std::complex<double>> data, int dim, std::size_t n, int sign) {
  std::size_t total = 1;
  for (int a = 0; a < dim; ++a) total *= n;
  if (data.size() != total) throw LayoutError("fft: array is not N^d");
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan_for(dim, n, sign), ptr, ptr);
}

std::vector<std::complex<double>> spectrum(const GridFunction& f) {
  std::vector<std::complex<double>> s = f.samples;
  fft(s, f.grid.dim, f.grid.n, -1);
  return s;
}

GridFunction from_spectrum(GridSpec g, std::vector<std::complex<double>> spec) {
  GridFunction out(g);
  if (spec.size() != out.size()) throw LayoutError("from_spectrum: size mismatch");
  fft(spec, g.dim, g.n, +1);
  const double inv = 1.0 / static_cast<double>(out.size());
  for (std::size_t i = 0; i < spec.size(); ++i) out.samples[i] = spec[i] * inv;
  return out;
}

namespace {

template <class T>
void put_le(std::ostream& os, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  unsigned char b[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(b), sizeof(T))) throw FormatError("truncated grid file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace

void write_grid_binary(std::ostream& os, const GridFunction& f) {
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(f.grid.dim));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(f.grid.n));
  put_le<double>(os, f.grid.extent);
  for (auto z : f.samples) {
    put_le<float>(os, static_cast<float>(z.real()));
    put_le<float>(os, static_cast<float>(z.imag()));
  }
  if (!os) throw IoError("failed writing grid file");
}

GridFunction read_grid_binary(std::istream& is) {
  GridSpec g;
  g.dim = static_cast<int>(get_le<std::uint32_t>(is));
  g.n = get_le<std::uint32_t>(is);
  g.extent = get_le<double>(is);
  try {
    g.validate();
  } catch (const DomainError& e) {
    throw FormatError(std::string("bad grid header: ") + e.what());
  }
  GridFunction f(g);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const float re = get_le<float>(is), im = get_le<float>(is);
    if (!std::isfinite(re) || !std::isfinite(im))
      throw FormatError("non-finite grid sample at index " + std::to_string(i));
    f.samples[i] = {re, im};
  }
  return f;
}

void write_grid_jsonl(std::ostream& os, const GridFunction& f) {
  os << nlohmann::json{{"format", "grid"}, {"dim", f.grid.dim}, {"N", f.grid.n}, {"R", f.grid.extent}}.dump()
     << '\n';
  for (std::size_t i = 0; i < f.size(); ++i)
    os << nlohmann::json{{"i", i}, {"re", f.samples[i].real()}, {"im", f.samples[i].imag()}}.dump() << '\n';
}

GridFunction read_grid_jsonl(std::istream& is) {
  std::string text;
  std::size_t line = 1;
  if (!std::getline(is, text)) throw FormatError("empty grid file", 1);
  GridSpec g;
  try {
    const auto h = nlohmann::json::parse(text);
    if (h.value("format", std::string{}) != "grid") throw FormatError("bad header: expected format \"grid\"", 1);
    g = {h.at("dim").get<int>(), h.at("N").get<std::size_t>(), h.at("R").get<double>()};
    g.validate();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad header: ") + e.what(), 1);
  } catch (const DomainError& e) {
    throw FormatError(std::string("bad header: ") + e.what(), 1);
  }
  GridFunction f(g);
  std::vector<bool> seen(f.size(), false);
  while (std::getline(is, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto o = nlohmann::json::parse(text);
      const auto i = o.at("i").get<std::size_t>();
      if (i >= f.size()) throw FormatError("sample index out of range", line);
      if (seen[i]) throw FormatError("duplicate sample index", line);
      if (o.at("re").is_null() || o.at("im").is_null()) throw FormatError("non-finite sample", line);
      f.samples[i] = {o.at("re").get<double>(), o.at("im").get<double>()};
      seen[i] = true;
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("bad sample: ") + e.what(), line);
    }
  }
  return f;
}

}  // namespace stratprof
