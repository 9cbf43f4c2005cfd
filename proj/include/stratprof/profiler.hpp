#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stratprof/coeff_space.hpp"
#include "stratprof/sampling.hpp"

namespace stratprof {

/// u_n for n in n_values, all tagged Lp(p) over one sampling set.
struct SequenceSnapshots {
  SamplingSet sampling;
  std::vector<int> n_values;
  std::vector<CoefficientField> fields;
  double K_bound = 0.0;

  SequenceSnapshots(SamplingSet gs, std::vector<int> n, std::vector<CoefficientField> f);
  double p() const { return fields.front().normalization().p; }
  std::size_t horizon() const { return n_values.size(); }
  /// Throws PreconditionError when n is not increasing, fields mismatch, or K is not finite.
  void validate() const;
};

/// Scales h_n = 2^{-j(n)} and cores kappa_n = 2^{-j(n)} . gamma(n).
struct ScaleCorePair {
  std::vector<double> h;
  std::vector<Point> kappa;

  std::size_t size() const { return h.size(); }
};

ScaleCorePair track_pair(const SamplingSet& gs, const std::vector<AtomIndex>& track);
/// The static track h = 1, kappa = e.
ScaleCorePair static_pair(const GroupSpec& g, std::size_t length);

enum class Verdict { ScaleOrthogonal, CoreOrthogonal, NotOrthogonal, Undecided };
std::string to_string(Verdict v);

struct Classification {
  Verdict verdict = Verdict::Undecided;
  int j_tilde = 0;          // stabilized log2(h_a / h_b), NotOrthogonal only
  Point gamma_tilde;        // stabilized (2^{j~} . gamma_a)^{-1} gamma_b, NotOrthogonal only
  double final_gap = 0.0;   // log2(h_a / h_b) at the last snapshot
  double final_core_distance = 0.0;  // |kappa_a^{-1} kappa_b| / min(h_a, h_b) at the last snapshot
};

struct ClassifyParams {
  std::size_t tail = 8;
  double T_div = 4.0;
  double eps_stable = 1e-9;
};

/// Verdict over the last `tail` snapshots, checked in this order:
///  NotOrthogonal  scale gap and relative position both constant within eps_stable;
///  ScaleOrthogonal  |gap| nondecreasing, increasing overall, final |gap| > T_div;
///  CoreOrthogonal  gap constant, rescaled core distance nondecreasing, increasing overall, final > T_div;
///  Undecided  otherwise.
Classification classify_pair(const GroupSpec& g, const ScaleCorePair& a, const ScaleCorePair& b,
                             const ClassifyParams& params);

struct ExtractParams {
  int M_max = 16;
  int L_max = 16;
  double eps_conv = 1e-8;
  double T_div = 4.0;
  double eps_stable = 1e-9;
  std::size_t tail = 8;
  bool strict = true;

  ClassifyParams classify() const { return {tail, T_div, eps_stable}; }
};

void to_json(nlohmann::json& j, const ExtractParams& p);
ExtractParams extract_params_from_json(const nlohmann::json& j);

struct ProfileAtom {
  int rank = 0;
  int j_tilde = 0;
  Point gamma_tilde;
  std::optional<LatticeCoords> gamma_tilde_lattice;
  std::complex<double> d;
};

struct Profile {
  std::vector<ProfileAtom> atoms;        // in rank order; atoms[0] is the core atom (0, e)
  std::vector<AtomIndex> core_track;     // lambda_l(n) per snapshot
  std::vector<int> ranks;                // E(l, M_max)
  bool flagged = false;                  // opened without a decided verdict (exploratory mode)
  Verdict escape = Verdict::Undecided;   // core track against the static track
  double energy() const;                 // sum |d|^2
};

struct RankLog {
  int rank = 0;
  std::vector<Classification> against;  // one per existing profile
  int assigned = 0;                     // 0-based profile index
  bool opened = false;
  bool flagged = false;
};

struct EnergyRow {
  int n = 0;
  int L = 0;
  double u_sq = 0.0;
  double profiles_sq = 0.0;
  double remainder_sq = 0.0;
  double defect = 0.0;
};

struct RemainderSplit {
  double r1_norm_Hs = 0.0;
  double r2_norm_Lp_proxy = 0.0;
  double r2_norm_Hs = 0.0;
  double reconstruction_error = 0.0;  // ||r1 + r2 - r_{n,L}||
};

struct RemainderRow {
  int n = 0;
  int L = 0;
  int M = 0;
  RemainderSplit split;
};

struct ProfileDecomposition {
  ExtractParams params;
  std::vector<Profile> profiles;
  std::vector<std::complex<double>> limits;   // d_m, m = 1..M_max
  std::vector<double> limit_radius;           // Cauchy radius over the tail
  std::vector<int> nu;                        // nu(M), M = 1..M_max
  std::vector<int> owner;                     // profile of rank m (0-based), m = 1..M_max
  std::vector<RankLog> log;
  std::vector<EnergyRow> energy;              // every n, L = 0..min(L_max, nu)
  std::vector<RemainderRow> remainders;       // every n, L = 0..min(L_max, nu), M = M_max
  double K_bound = 0.0;
  double max_defect = 0.0;
  std::vector<std::string> diagnostics;
};

/// Finite-horizon profile extraction on Lp-tagged snapshots.
ProfileDecomposition extract(const SequenceSnapshots& s, const ExtractParams& params);

/// Per-n |‖u_n‖^2 - sum_{l<=L} ‖phi^l‖^2 - ‖r_{n,L}‖^2|.
std::vector<double> energy_check(const ProfileDecomposition& d, const SequenceSnapshots& s, int L);

/// r1, r2 at (n index, L, M). Throws InternalError if r1 + r2 differs from r_{n,L} beyond 1e-10.
RemainderSplit remainder_split(const ProfileDecomposition& d, const SequenceSnapshots& s, std::size_t n_index,
                               int L, int M);

/// r1(n,L,M) + r2(n,L,M) as a field, for M-independence checks.
CoefficientField remainder_total(const ProfileDecomposition& d, const SequenceSnapshots& s, std::size_t n_index,
                                 int L, int M);
/// r_{n,L} = u_n - sum_{l<=L} P_l(n).
CoefficientField remainder_field(const ProfileDecomposition& d, const SequenceSnapshots& s, std::size_t n_index,
                                 int L);

struct BookkeepingReport {
  bool partition_ok = true;
  bool nu_steps_ok = true;
  bool nested_ok = true;
  std::vector<std::string> failures;
  bool ok() const { return partition_ok && nu_steps_ok && nested_ok; }
};

/// E(l, M) partitions [1, M], nu(M+1) - nu(M) in {0, 1}, E(l, M) within E(l, M+1).
BookkeepingReport check_bookkeeping(const ProfileDecomposition& d);

/// E(l, M): ranks <= M owned by profile l.
std::vector<int> ranks_of(const ProfileDecomposition& d, int profile, int M);

void to_json(nlohmann::json& j, const ProfileDecomposition& d);
void to_json(nlohmann::json& j, const Classification& c);

}  // namespace stratprof
