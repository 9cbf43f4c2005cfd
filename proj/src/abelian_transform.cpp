#include "stratprof/abelian_transform.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>

#include "stratprof/errors.hpp"
#include "stratprof/reference.hpp"

namespace stratprof {

using cvec = std::vector<std::complex<double>>;

KernelSet::KernelSet(const Window& w, int j_min, int j_max, GridSpec grid)
    : psi_([w](double l) { return w.psi_hat(l); }), narrow_(false), j_min_(j_min), j_max_(j_max), grid_(grid) {
  build();
}

KernelSet::KernelSet(const NarrowWindow& w, int j_min, int j_max, GridSpec grid)
    : psi_([w](double l) { return w.psi_hat(l); }), narrow_(true), j_min_(j_min), j_max_(j_max), grid_(grid) {
  build();
}

void KernelSet::build() {
  grid_.validate();
  if (j_min_ > j_max_) throw RangeError("KernelSet needs j_min <= j_max");
  freq_sq_ = grid_.frequency_sq();
  coverage_.assign(freq_sq_.size(), 0.0);
  for (int j = j_min_; j <= j_max_; ++j) {
    std::vector<double> m(freq_sq_.size());
    for (std::size_t k = 0; k < m.size(); ++k) m[k] = psi_(std::ldexp(freq_sq_[k], -2 * j));
    for (std::size_t k = 0; k < m.size(); ++k) coverage_[k] += m[k] * m[k];
    mult_.push_back(std::move(m));
  }
}

std::span<const double> KernelSet::multiplier(int j) const {
  if (j < j_min_ || j > j_max_)
    throw RangeError("scale " + std::to_string(j) + " outside the cached range [" + std::to_string(j_min_) + ", " +
                     std::to_string(j_max_) + "]");
  return mult_[static_cast<std::size_t>(j - j_min_)];
}

std::pair<int, int> KernelSet::fitting_range(const GridSpec& g, bool narrow) {
  g.validate();
  const double nyquist = M_PI / g.spacing();
  const double lowest = M_PI / g.extent;
  // band of scale j in |xi|: [2^{j-1}, 2^{j+1}] (standard), [2^{j-1/2}, 2^j] (narrow)
  const int hi = static_cast<int>(std::floor(std::log2(nyquist))) - (narrow ? 0 : 1);
  const int lo = static_cast<int>(std::floor(std::log2(lowest)));
  return {std::min(lo, hi), hi};
}

namespace {

void check_grid(const GridFunction& f, const KernelSet& ks) {
  if (!(f.grid == ks.grid())) throw LayoutError("grid function and kernel set use different grids");
}

void require_abelian(const SamplingSet& gs, const KernelSet& ks) {
  if (gs.group().law_kind() != LawKind::Abelian)
    throw UnsupportedError("function-level transforms exist only on the abelian model");
  if (gs.group().dimension() != ks.grid().dim) throw LayoutError("sampling set and grid dimensions differ");
}

// (-1)^{sum k}: moves the kernel origin to node N/2.
double centre_sign(const GridSpec& g, std::size_t i) {
  std::size_t total = 0;
  for (int a = 0; a < g.dim; ++a) {
    total += i % g.n;
    i /= g.n;
  }
  return total % 2 ? -1.0 : 1.0;
}

double dot_wavenumbers(const GridSpec& g, std::size_t i, std::span<const double> x) {
  double s = 0.0;
  for (int a = g.dim - 1; a >= 0; --a) {
    s += g.wavenumber(i % g.n) * x[a];
    i /= g.n;
  }
  return s;
}

struct ScaleGeometry {
  std::size_t refine = 1;  // the fine grid has N * refine nodes per axis
  std::size_t stride = 1;  // lattice step measured in fine-grid nodes
};

ScaleGeometry scale_geometry(const GridSpec& g, double step) {
  const double r = step / g.spacing();
  ScaleGeometry s;
  if (r >= 1.0) {
    const double k = std::round(r);
    if (std::abs(r - k) > 1e-9 * r) throw UnsupportedError("lattice step is not a multiple of the grid spacing");
    s.stride = static_cast<std::size_t>(k);
  } else {
    const double k = std::round(1.0 / r);
    if (std::abs(1.0 / r - k) > 1e-9 / r || !std::has_single_bit(static_cast<std::size_t>(k)))
      throw UnsupportedError("lattice step is not a power-of-two fraction of the grid spacing");
    s.refine = static_cast<std::size_t>(k);
  }
  return s;
}

// Flat fine-grid index of coarse bin i (row-major, signed bins keep their sign).
std::size_t fine_bin(const GridSpec& g, std::size_t refine, std::size_t i) {
  const std::size_t nf = g.n * refine;
  std::size_t out = 0, mul = 1;
  for (int a = g.dim - 1; a >= 0; --a) {
    const std::size_t k = i % g.n;
    i /= g.n;
    out += (k < g.n / 2 ? k : k + nf - g.n) * mul;
    mul *= nf;
  }
  return out;
}

std::size_t ipow(std::size_t b, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

double sum_norm(const cvec& v, Exec exec) {
  auto f = [&](std::size_t i) { return std::norm(v[i]); };
  return exec == Exec::Parallel ? kernels::chunked_sum(v.size(), f) : reference::serial_sum(v.size(), f);
}

// Samples of f * psi_j at the lattice points 2^{-j} gamma inside [-R, R)^d, as L1 coefficients.
std::vector<std::pair<LatticeCoords, std::complex<double>>> sample_scale(const cvec& spec, const KernelSet& ks,
                                                                       const SamplingSet& gs, int j) {
  const GridSpec& g = ks.grid();
  const auto geo = scale_geometry(g, std::ldexp(gs.beta(), -j));
  const std::size_t nf = g.n * geo.refine;
  const std::size_t total_f = ipow(nf, g.dim);
  const auto m = ks.multiplier(j);
  cvec fine(total_f, {0.0, 0.0});
  const double lift = static_cast<double>(ipow(geo.refine, g.dim));
  for (std::size_t i = 0; i < spec.size(); ++i) fine[fine_bin(g, geo.refine, i)] = spec[i] * m[i] * lift;
  fft(fine, g.dim, nf, +1);
  const double inv = 1.0 / static_cast<double>(total_f);

  const std::size_t per_axis = nf / geo.stride;
  const auto half = static_cast<std::int64_t>(nf / 2);
  const std::size_t count = ipow(per_axis, g.dim);
  std::vector<std::pair<LatticeCoords, std::complex<double>>> out;
  out.reserve(count);
  // lattice points with fine index nf/2 + gamma*stride in [0, nf): walk gamma from its smallest value
  const std::int64_t gmin = -half / static_cast<std::int64_t>(geo.stride);
  for (std::size_t t = 0; t < count; ++t) {
    LatticeCoords gamma(g.dim);
    std::size_t rem = t, flat = 0, mul = 1;
    bool inside = true;
    for (int a = g.dim - 1; a >= 0; --a) {
      gamma[a] = gmin + static_cast<std::int64_t>(rem % per_axis);
      rem /= per_axis;
      const std::int64_t k = half + gamma[a] * static_cast<std::int64_t>(geo.stride);
      if (k < 0 || k >= static_cast<std::int64_t>(nf)) inside = false;
      flat += static_cast<std::size_t>(k) * mul;
      mul *= nf;
    }
    if (inside) out.emplace_back(std::move(gamma), fine[flat] * inv);
  }
  return out;
}

// Spectrum on the coarse grid of sum_gamma a_gamma delta_{2^{-j} gamma}.
cvec spike_spectrum(const std::vector<std::pair<LatticeCoords, std::complex<double>>>& spikes, const KernelSet& ks,
                    const SamplingSet& gs, int j) {
  const GridSpec& g = ks.grid();
  const auto geo = scale_geometry(g, std::ldexp(gs.beta(), -j));
  const std::size_t nf = g.n * geo.refine;
  const double hf = g.spacing() / static_cast<double>(geo.refine);
  const double cell = std::pow(hf, g.dim);
  cvec fine(ipow(nf, g.dim), {0.0, 0.0});
  const auto nfi = static_cast<std::int64_t>(nf);
  for (const auto& [gamma, a] : spikes) {
    std::size_t flat = 0, mul = 1;
    for (int ax = g.dim - 1; ax >= 0; --ax) {
      std::int64_t k = nfi / 2 + gamma[ax] * static_cast<std::int64_t>(geo.stride);
      k = ((k % nfi) + nfi) % nfi;  // periodic wrap
      flat += static_cast<std::size_t>(k) * mul;
      mul *= nf;
    }
    fine[flat] += a / cell;
  }
  fft(fine, g.dim, nf, -1);
  cvec coarse(g.size());
  const double shrink = 1.0 / static_cast<double>(ipow(geo.refine, g.dim));
  for (std::size_t i = 0; i < coarse.size(); ++i) coarse[i] = fine[fine_bin(g, geo.refine, i)] * shrink;
  return coarse;
}

}  // namespace

GridFunction lp_block(const GridFunction& f, const KernelSet& ks, int j) {
  check_grid(f, ks);
  const auto m = ks.multiplier(j);
  cvec s = spectrum(f);
  kernels::apply_multiplier(s, m);
  return from_spectrum(f.grid, std::move(s));
}

CalderonResult calderon_reconstruct(const GridFunction& f, const KernelSet& ks, Exec exec) {
  check_grid(f, ks);
  cvec s = spectrum(f);
  const auto cov = ks.coverage();
  std::vector<double> gap(cov.size());
  for (std::size_t k = 0; k < gap.size(); ++k) gap[k] = std::max(1.0 - cov[k], 0.0);
  const double total = sum_norm(s, exec);
  const double missing = exec == Exec::Parallel ? kernels::spectral_energy(s, gap) : reference::spectral_energy(s, gap);
  if (exec == Exec::Parallel)
    kernels::apply_multiplier(s, cov);
  else
    reference::apply_multiplier(s, cov);
  return {from_spectrum(f.grid, std::move(s)), total > 0.0 ? missing / total : 0.0};
}

CoefficientField analyze(const GridFunction& f, const KernelSet& ks, const SamplingSet& gs, double p,
                         AnalysisDiagnostics* diag, Exec exec) {
  check_grid(f, ks);
  require_abelian(gs, ks);
  const Normalization target = Normalization::lp(p);
  const cvec spec = spectrum(f);
  const int nj = ks.j_max() - ks.j_min() + 1;
  std::vector<std::vector<std::pair<LatticeCoords, std::complex<double>>>> per_scale(nj);
  if (exec == Exec::Parallel) {
    std::vector<std::string> errors(nj);
#pragma omp parallel for schedule(dynamic)
    for (int t = 0; t < nj; ++t) {
      try {
        per_scale[t] = sample_scale(spec, ks, gs, ks.j_min() + t);
      } catch (const std::exception& e) {
        errors[t] = e.what();
      }
    }
    for (const auto& e : errors)
      if (!e.empty()) throw UnsupportedError(e);
  } else {
    for (int t = 0; t < nj; ++t) per_scale[t] = sample_scale(spec, ks, gs, ks.j_min() + t);
  }

  CoefficientField l1(gs, Normalization::l1());
  for (int t = 0; t < nj; ++t)
    for (auto& [gamma, c] : per_scale[t]) l1.insert({ks.j_min() + t, std::move(gamma)}, c);
  const std::size_t before = l1.size();
  l1.apply_floor();

  if (diag) {
    diag->dropped = before - l1.size();
    const double edge = ks.grid().extent / 2.0;
    double outer = 0.0, all = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const auto m = f.unflatten(i);
      bool far = false;
      for (auto k : m) far |= std::abs(ks.grid().coord(k)) >= edge;
      const double e = std::norm(f.samples[i]);
      all += e;
      if (far) outer += e;
    }
    if (all > 0.0 && outer > 1e-8 * all)
      diag->warnings.push_back("function mass outside the central half of the torus: periodization may alias");
  }
  return l1.to_lp(target.p);
}

GridFunction synthesize(const CoefficientField& c, const KernelSet& ks, const SamplingSet& gs, Exec exec) {
  require_abelian(gs, ks);
  if (!(c.sampling() == gs)) throw PreconditionError("coefficient field uses a different sampling set");
  const CoefficientField l1 = c.to_l1();
  const double q = gs.group().homogeneous_dimension();
  const GridSpec& g = ks.grid();

  std::vector<int> scales;
  std::vector<std::vector<std::pair<LatticeCoords, std::complex<double>>>> spikes;
  for (const auto& [idx, v] : l1.entries()) {
    if (scales.empty() || scales.back() != idx.j) {
      ks.multiplier(idx.j);  // range check
      scales.push_back(idx.j);
      spikes.emplace_back();
    }
    // psi_{j,gamma}^{L1} carries 2^{jQ}; the frame sum weights it by 2^{-jQ}
    spikes.back().emplace_back(idx.gamma, v * std::exp2(-idx.j * q));
  }
  const int ns = static_cast<int>(scales.size());
  std::vector<cvec> parts(ns);
  auto one = [&](int t) {
    cvec s = spike_spectrum(spikes[t], ks, gs, scales[t]);
    const auto m = ks.multiplier(scales[t]);
    for (std::size_t k = 0; k < s.size(); ++k) s[k] *= m[k];
    parts[t] = std::move(s);
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int t = 0; t < ns; ++t) one(t);
  } else {
    for (int t = 0; t < ns; ++t) one(t);
  }
  cvec total(g.size(), {0.0, 0.0});
  for (const auto& p : parts)
    for (std::size_t k = 0; k < total.size(); ++k) total[k] += p[k];
  return from_spectrum(g, std::move(total));
}

FrameResult frame_reconstruct(const CoefficientField& c, const KernelSet& ks, const SamplingSet& gs,
                              int max_iterations, double target) {
  const double w = gs.tile_volume();
  auto T = [&](const GridFunction& f) {
    GridFunction out = synthesize(analyze(f, ks, gs, 2.0), ks, gs);
    for (auto& z : out.samples) z *= w;
    return out;
  };
  GridFunction g0 = synthesize(c, ks, gs);
  for (auto& z : g0.samples) z *= w;
  const double n0 = std::sqrt(reference::sum_abs_pow(g0.samples, 2.0));
  FrameResult r{g0, 0, 0.0};
  if (n0 == 0.0) return r;
  for (;;) {
    const GridFunction tf = T(r.result);
    cvec res(g0.size());
    for (std::size_t i = 0; i < res.size(); ++i) res[i] = g0.samples[i] - tf.samples[i];
    r.residual = std::sqrt(reference::sum_abs_pow(res, 2.0)) / n0;
    if (r.residual <= target || r.iterations >= max_iterations) break;
    for (std::size_t i = 0; i < res.size(); ++i) r.result.samples[i] += res[i];
    ++r.iterations;
  }
  return r;
}

double sobolev_norm(const GridFunction& f, double s, std::string* diagnostic) {
  const cvec spec = spectrum(f);
  const auto freq = f.grid.frequency_sq();
  const double peak = kernels::max_abs(spec);
  const double dc = std::abs(spec[0]);
  if (peak > 0.0 && dc > 1e-12 * peak) {
    if (s < 0.0) throw DomainError("nonzero zero-frequency mode: the homogeneous norm with s < 0 is singular");
    if (diagnostic) *diagnostic = "zero-frequency mode excluded (relative size " + std::to_string(dc / peak) + ")";
  }
  const double energy = kernels::chunked_sum(spec.size(), [&](std::size_t k) {
    if (k == 0) return 0.0;
    return std::pow(freq[k], s) * std::norm(spec[k]);
  });
  const double cell = std::pow(f.spacing(), f.grid.dim) / static_cast<double>(f.size());
  return std::sqrt(energy * cell);
}

double lebesgue_norm(const GridFunction& f, double p, Exec exec) {
  if (!(p >= 1.0)) throw DomainError("lebesgue_norm needs p >= 1");
  if (std::isinf(p)) return exec == Exec::Parallel ? kernels::max_abs(f.samples) : reference::max_abs(f.samples);
  const double s = exec == Exec::Parallel ? kernels::sum_abs_pow(f.samples, p) : reference::sum_abs_pow(f.samples, p);
  return std::pow(s * std::pow(f.spacing(), f.grid.dim), 1.0 / p);
}

BesovResult besov_norm_continuous(const GridFunction& f, const KernelSet& ks, double s, double p, double q) {
  check_grid(f, ks);
  if (!(p >= 1.0 && q >= 1.0) || std::isinf(p) || std::isinf(q))
    throw DomainError("besov_norm_continuous needs 1 <= p, q < inf");
  const cvec spec = spectrum(f);
  BesovResult r;
  double acc = 0.0;
  for (int j = ks.j_min(); j <= ks.j_max(); ++j) {
    cvec b = spec;
    kernels::apply_multiplier(b, ks.multiplier(j));
    const double n = lebesgue_norm(from_spectrum(f.grid, std::move(b)), p);
    acc += std::pow(std::exp2(j * s) * n, q);
  }
  r.value = std::pow(acc, 1.0 / q);
  const auto cov = ks.coverage();
  std::vector<double> gap(cov.size());
  for (std::size_t k = 0; k < gap.size(); ++k) gap[k] = k == 0 ? 0.0 : std::max(1.0 - cov[k], 0.0);
  const double total = sum_norm(spec, Exec::Parallel) - std::norm(spec[0]);
  r.leakage = total > 0.0 ? kernels::spectral_energy(spec, gap) / total : 0.0;
  if (r.leakage > 1e-10)
    r.warning = "band leakage: " + std::to_string(r.leakage) + " of the energy lies outside the covered scales";
  return r;
}

namespace {

// psi_j(x - x0) on the grid, scaled by `scale`.
GridFunction shifted_kernel(const KernelSet& ks, std::span<const double> m, std::span<const double> x0,
                            double scale) {
  const GridSpec& g = ks.grid();
  cvec spec(g.size());
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double ph = -dot_wavenumbers(g, k, x0);
    spec[k] = std::polar(m[k] * centre_sign(g, k), ph);
  }
  GridFunction out = from_spectrum(g, std::move(spec));
  const double factor = scale / std::pow(g.spacing(), g.dim);
  for (auto& z : out.samples) z *= factor;
  return out;
}

}  // namespace

GridFunction kernel_samples(const KernelSet& ks, int j) {
  const std::vector<double> origin(ks.grid().dim, 0.0);
  return shifted_kernel(ks, ks.multiplier(j), origin, 1.0);
}

double fit_kernel_decay(const KernelSet& ks, int j) {
  const GridFunction k = kernel_samples(ks, j);
  const GridSpec& g = ks.grid();
  const double q = g.dim;
  double c = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const auto m = k.unflatten(i);
    double r2 = 0.0, far = 0.0;
    for (auto a : m) {
      const double x = g.coord(a);
      r2 += x * x;
      far = std::max(far, std::abs(x));
    }
    if (far > g.extent / 2.0) continue;
    const double r = std::ldexp(std::sqrt(r2), j);
    c = std::max(c, std::abs(k.samples[i]) * std::exp2(-j * q) * std::pow(1.0 + r, q + 1.0));
  }
  return c;
}

ConvolutionBound convolution_bound(const KernelSet& ks, const SamplingSet& gs, int j, int ell,
                                   const LatticeCoords& gamma) {
  require_abelian(gs, ks);
  const auto mj = ks.multiplier(j), ml = ks.multiplier(ell);
  std::vector<double> m(mj.size());
  for (std::size_t k = 0; k < m.size(); ++k) m[k] = mj[k] * ml[k];
  const Point x0 = gs.position({j, gamma});
  const GridFunction v = shifted_kernel(ks, m, x0.coords, 1.0);
  const GridSpec& g = ks.grid();
  const double q = g.dim;
  ConvolutionBound b;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto idx = v.unflatten(i);
    double r2 = 0.0, far = 0.0;
    for (int a = 0; a < g.dim; ++a) {
      const double dx = g.coord(idx[a]) - x0[a];
      r2 += dx * dx;
      far = std::max(far, std::abs(dx));
    }
    if (far > g.extent / 2.0) continue;
    const double a = std::abs(v.samples[i]);
    b.max_abs = std::max(b.max_abs, a);
    const double r = std::ldexp(std::sqrt(r2), j);  // |gamma^{-1} 2^j x| = 2^j |x - x0|
    b.fitted_constant = std::max(b.fitted_constant, a * std::exp2(-j * q) * std::pow(1.0 + r, q + 1.0));
  }
  return b;
}

std::complex<double> gram_entry(const KernelSet& ks, const SamplingSet& gs, const AtomIndex& a,
                                const AtomIndex& b, double p) {
  require_abelian(gs, ks);
  const GridSpec& g = ks.grid();
  const double q = g.dim;
  const auto ma = ks.multiplier(a.j), mb = ks.multiplier(b.j);
  const Point xa = gs.position(a), xb = gs.position(b);
  std::vector<double> dx(g.dim);
  for (int i = 0; i < g.dim; ++i) dx[i] = xa[i] - xb[i];
  const double re = kernels::chunked_sum(ma.size(), [&](std::size_t k) {
    return ma[k] * mb[k] * std::cos(dot_wavenumbers(g, k, dx));
  });
  const double im = kernels::chunked_sum(ma.size(), [&](std::size_t k) {
    return -ma[k] * mb[k] * std::sin(dot_wavenumbers(g, k, dx));
  });
  const double scale = std::exp2(a.j * q * (1.0 / p - 1.0)) * std::exp2(b.j * q * (1.0 / p - 1.0)) /
                       std::pow(2.0 * g.extent, g.dim);
  return std::complex<double>(re, im) * scale;
}

GridFunction atom_samples(const KernelSet& ks, const SamplingSet& gs, const AtomIndex& idx, double p) {
  require_abelian(gs, ks);
  const double q = ks.grid().dim;
  const Point x0 = gs.position(idx);
  return shifted_kernel(ks, ks.multiplier(idx.j), x0.coords, std::exp2(idx.j * q * (1.0 / p - 1.0)));
}

double function_unconditionality_ratio(const CoefficientField& c_small, const CoefficientField& c_big,
                                       const KernelSet& ks, const SamplingSet& gs, double s) {
  const double denom = sobolev_norm(synthesize(c_big, ks, gs), s);
  if (denom == 0.0) return 0.0;
  return sobolev_norm(synthesize(c_small, ks, gs), s) / denom;
}

UnconditionalityEstimate estimate_unconditionality(const CoefficientField& c, const KernelSet& ks,
                                                   const SamplingSet& gs, double s, int trials, std::uint64_t seed) {
  if (trials < 1) throw PreconditionError("estimate_unconditionality needs trials >= 1");
  UnconditionalityEstimate out;
  const double denom = sobolev_norm(synthesize(c, ks, gs), s);
  if (denom == 0.0 || c.empty()) return out;
  const auto ranked = reorder(c);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> m_pick(1, ranked.size());
  for (int t = 0; t < trials; ++t) {
    CoefficientField small(gs, c.normalization());
    if (t % 2 == 0) {
      // best-M truncation
      const std::size_t M = m_pick(rng);
      for (std::size_t i = 0; i < M; ++i) small.insert(ranked[i].index, ranked[i].d);
    } else {
      // random subset with entrywise shrinking
      for (const auto& r : ranked)
        if (u(rng) < 0.5) small.insert(r.index, r.d * u(rng));
    }
    const double ratio = sobolev_norm(synthesize(small, ks, gs), s) / denom;
    out.max_ratio = std::max(out.max_ratio, ratio);
    ++out.trials;
  }
  return out;
}

}  // namespace stratprof
