#pragma once

#include <complex>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stratprof/kernels.hpp"
#include "stratprof/sampling.hpp"

namespace stratprof {

using Complex = std::complex<double>;

/// Which atom family the coefficients refer to.
///
/// L1: c_{j,gamma} = (f * psi_j^*)(2^{-j} . gamma), the sampled block values.
/// Lp: d_{j,gamma} = 2^{-jQ/p} c_{j,gamma}, the coefficients in front of the
///     L^p-normalized atoms 2^{jQ/p} psi(gamma^{-1} . 2^j . x).
struct Normalization {
  enum class Kind { L1, Lp };
  Kind kind = Kind::L1;
  double p = 1.0;

  static Normalization l1() { return {Kind::L1, 1.0}; }
  static Normalization lp(double p);
  bool operator==(const Normalization&) const = default;
  std::string describe() const;
};

/// Sparse map lambda -> d_lambda over one sampling set, with a normalization tag.
class CoefficientField {
 public:
  CoefficientField(SamplingSet gs, Normalization norm);

  const SamplingSet& sampling() const { return gs_; }
  const GroupSpec& group() const { return gs_.group(); }
  const Normalization& normalization() const { return norm_; }
  const std::map<AtomIndex, Complex>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// Throws on a duplicate index or a non-finite value.
  void insert(const AtomIndex& idx, Complex d);
  /// Overwrites.
  void set(const AtomIndex& idx, Complex d);
  /// Accumulates; entries that cancel to exactly 0 are removed.
  void add(const AtomIndex& idx, Complex d);
  std::optional<Complex> get(const AtomIndex& idx) const;
  Complex value(const AtomIndex& idx) const;

  /// Drops entries below rel * max modulus.
  void apply_floor(double rel = 1e-14);

  CoefficientField scaled(Complex alpha) const;
  /// this - other on the union of supports (same sampling set and normalization).
  CoefficientField minus(const CoefficientField& other) const;
  CoefficientField plus(const CoefficientField& other) const;

  CoefficientField to_l1() const;
  CoefficientField to_lp(double p) const;

  /// Conversions applied to obtain this field, oldest first.
  const std::vector<std::string>& conversion_log() const { return log_; }

  double max_modulus() const;

 private:
  void check_compatible(const CoefficientField& o) const;

  SamplingSet gs_;
  Normalization norm_;
  std::map<AtomIndex, Complex> entries_;
  std::vector<std::string> log_;
};

struct NormParams {
  double s = 0.0;
  double p = 2.0;
  double q = 2.0;

  /// (s, p, p) with p = critical_exponent(g, s).
  static NormParams critical(const GroupSpec& g, double s);
  bool is_critical(const GroupSpec& g, double tol = 1e-12) const;
};

/// (sum_j (sum_gamma (2^{j(s-Q/p)} |c_{j gamma}|)^p)^{q/p})^{1/q} on L1 coefficients;
/// Lp-tagged fields are converted first.
double discrete_besov_norm(const CoefficientField& c, const NormParams& np, Exec exec = Exec::Parallel);

/// Plain l^2 norm of an Lp-tagged field.
double sobolev_seq_norm(const CoefficientField& c, Exec exec = Exec::Parallel);

/// l^p norm of the Lp(p) coefficients, i.e. the b^0_{p,p} norm; stands in for the L^p norm.
double lp_proxy_norm(const CoefficientField& c, double p, Exec exec = Exec::Parallel);

struct RankedEntry {
  int rank = 0;  // 1-based
  AtomIndex index;
  Complex d;
};

/// Decreasing modulus; ties broken by (j ascending, gamma lexicographic).
std::vector<RankedEntry> reorder(const CoefficientField& c);

struct Projection {
  CoefficientField kept;
  std::vector<AtomIndex> e_m;  // in rank order
};

Projection q_m(const CoefficientField& c, int M);

struct CurvePoint {
  int M = 0;
  double error = 0.0;
};

/// ||c - Q_M c|| in the norm given by np, for each M in M_list.
std::vector<CurvePoint> mterm_error_curve(const CoefficientField& c, const NormParams& np,
                                          const std::vector<int>& M_list);

/// ||c_small|| / ||c_big|| in the b^s_{p,q} norm. Requires supp c_small within supp c_big
/// and |c_small| <= |c_big| entrywise.
double unconditionality_ratio(const CoefficientField& c_small, const CoefficientField& c_big,
                              const NormParams& np);

void to_json(nlohmann::json& j, const Normalization& n);
Normalization normalization_from_json(const nlohmann::json& j);

/// JSON-lines: a header object, then one {j, gamma, re, im} object per entry.
void write_field_jsonl(std::ostream& os, const CoefficientField& c);
/// Malformed lines raise FormatError with the 1-based line number.
CoefficientField read_field_jsonl(std::istream& is);

}  // namespace stratprof
