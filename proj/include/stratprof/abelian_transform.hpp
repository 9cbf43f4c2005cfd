#pragma once

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "stratprof/coeff_space.hpp"
#include "stratprof/grid.hpp"
#include "stratprof/kernels.hpp"
#include "stratprof/sampling.hpp"
#include "stratprof/spectral_window.hpp"

namespace stratprof {

/// Littlewood-Paley multipliers psi_hat(4^{-j} |xi|^2) on one grid, cached for
/// j in [j_min, j_max]. Read-only after construction.
class KernelSet {
 public:
  KernelSet(const Window& w, int j_min, int j_max, GridSpec grid);
  KernelSet(const NarrowWindow& w, int j_min, int j_max, GridSpec grid);

  int j_min() const { return j_min_; }
  int j_max() const { return j_max_; }
  const GridSpec& grid() const { return grid_; }
  bool narrow() const { return narrow_; }
  double psi_hat(double lambda) const { return psi_(lambda); }
  std::span<const double> multiplier(int j) const;
  /// sum_j m_j^2 per bin.
  std::span<const double> coverage() const { return coverage_; }

  /// Scale range whose bands fit inside the grid: the top band stays below the
  /// Nyquist wavenumber and the bottom band reaches the lowest nonzero bin.
  static std::pair<int, int> fitting_range(const GridSpec& g, bool narrow = false);

 private:
  void build();

  std::function<double(double)> psi_;
  bool narrow_;
  int j_min_, j_max_;
  GridSpec grid_;
  std::vector<double> freq_sq_;
  std::vector<std::vector<double>> mult_;
  std::vector<double> coverage_;
};

/// f * psi_j^*, as the multiplier psi_hat(4^{-j}|xi|^2) applied to f.
GridFunction lp_block(const GridFunction& f, const KernelSet& ks, int j);

struct CalderonResult {
  GridFunction result;
  /// Share of f's L^2 energy outside the fully covered band, sum (1 - sum_j m_j^2) |F|^2 / sum |F|^2.
  double residual_band_energy = 0.0;
};

/// sum_j f * psi_j^* * psi_j.
CalderonResult calderon_reconstruct(const GridFunction& f, const KernelSet& ks, Exec exec = Exec::Parallel);

struct AnalysisDiagnostics {
  std::vector<std::string> warnings;
  std::size_t dropped = 0;  // coefficients under the floor
};

/// Coefficients of f against the atoms of gs for every cached scale, tagged Lp(p).
/// Only the abelian preset is supported; the lattice step at every scale must be a
/// power-of-two multiple or fraction of the grid spacing.
CoefficientField analyze(const GridFunction& f, const KernelSet& ks, const SamplingSet& gs, double p,
                         AnalysisDiagnostics* diag = nullptr, Exec exec = Exec::Parallel);

/// sum_lambda d_lambda psi_lambda on ks's grid (L1 or Lp fields).
GridFunction synthesize(const CoefficientField& c, const KernelSet& ks, const SamplingSet& gs,
                        Exec exec = Exec::Parallel);

struct FrameResult {
  GridFunction result;
  int iterations = 0;
  double residual = 0.0;  // relative, ||g0 - T f_k|| / ||g0||
};

/// Inverts the frame operator T = |W| synthesize o analyze by Neumann iteration,
/// starting from |W| synthesize(c).
FrameResult frame_reconstruct(const CoefficientField& c, const KernelSet& ks, const SamplingSet& gs,
                              int max_iterations = 50, double target = 1e-6);

/// ||(-Delta)^{s/2} f||_2; the zero mode is excluded. Throws DomainError for s < 0
/// when the zero mode is not negligible.
double sobolev_norm(const GridFunction& f, double s, std::string* diagnostic = nullptr);

/// Riemann-sum L^p norm with cell measure h^d; p = inf gives the max.
double lebesgue_norm(const GridFunction& f, double p, Exec exec = Exec::Parallel);

struct BesovResult {
  double value = 0.0;
  double leakage = 0.0;  // residual band energy share
  std::string warning;
};

/// (sum_j (2^{js} ||f * psi_j^*||_p)^q)^{1/q} over the cached scales.
BesovResult besov_norm_continuous(const GridFunction& f, const KernelSet& ks, double s, double p, double q);

/// psi_j on the grid (x = 0 at node N/2). psi_0 is the mother kernel.
GridFunction kernel_samples(const KernelSet& ks, int j);

/// sup |psi(x)| (1 + |x|)^{Q+1} over the central half of the torus.
double fit_kernel_decay(const KernelSet& ks, int j = 0);

struct ConvolutionBound {
  double max_abs = 0.0;
  /// sup |psi_{j,gamma} * psi_l^*(x)| (1 + |gamma^{-1} 2^j x|)^{Q+1} / 2^{jQ}.
  double fitted_constant = 0.0;
};

ConvolutionBound convolution_bound(const KernelSet& ks, const SamplingSet& gs, int j, int ell,
                                   const LatticeCoords& gamma);

/// <psi_a, psi_b> of two L^p-normalized atoms, evaluated spectrally on the grid.
std::complex<double> gram_entry(const KernelSet& ks, const SamplingSet& gs, const AtomIndex& a,
                                const AtomIndex& b, double p = 2.0);

/// Grid samples of the L^p-normalized atom psi_lambda.
GridFunction atom_samples(const KernelSet& ks, const SamplingSet& gs, const AtomIndex& idx, double p);

/// ||synth(c_small)||_{H^s} / ||synth(c_big)||_{H^s}.
double function_unconditionality_ratio(const CoefficientField& c_small, const CoefficientField& c_big,
                                       const KernelSet& ks, const SamplingSet& gs, double s);

struct UnconditionalityEstimate {
  double max_ratio = 0.0;  // lower bound for the unconditionality constant
  int trials = 0;
};

/// Seeded Monte-Carlo search over sub-fields of c (best-M truncations and random
/// shrunken subsets) for the largest H^s ratio against the full synthesis.
UnconditionalityEstimate estimate_unconditionality(const CoefficientField& c, const KernelSet& ks,
                                                   const SamplingSet& gs, double s, int trials, std::uint64_t seed);

}  // namespace stratprof
