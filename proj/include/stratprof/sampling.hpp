#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stratprof/group.hpp"
#include "stratprof/kernels.hpp"

namespace stratprof {

using LatticeCoords = std::vector<std::int64_t>;

/// Axis-aligned half-open box [lo, hi) in group coordinates.
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  bool contains(const Point& x) const;
  bool empty() const;
  double volume() const;
};

/// Wavelet index lambda = (j, gamma): dyadic scale plus a lattice element of Gamma
/// stored by its integer lattice coordinates.
struct AtomIndex {
  int j = 0;
  LatticeCoords gamma;

  auto operator<=>(const AtomIndex&) const = default;
  bool operator==(const AtomIndex&) const = default;
};

/// Regular sampling set Gamma for a preset group, with its Gamma-tile.
///
/// Abelian(d):     Gamma = (beta Z)^d,                           tile [0,beta)^d
/// Heisenberg(d):  Gamma = {(beta a, beta b, beta^2 c / 2)},     tile [0,beta)^{2d} x [0,beta^2/2)
///
/// Lattice arithmetic is exact on integer coordinates: Gamma is closed under the
/// group law, inversion and delta_2.
class SamplingSet {
 public:
  static SamplingSet preset(const GroupSpec& g, double beta);
  /// Same lattice, caller-chosen tile (for tiling diagnostics).
  static SamplingSet with_tile(const GroupSpec& g, double beta, Box tile);

  const GroupSpec& group() const { return group_; }
  double beta() const { return beta_; }
  const Box& tile() const { return tile_; }
  double tile_volume() const { return tile_.volume(); }
  /// Coordinate value of one lattice step along each axis.
  const std::vector<double>& unit() const { return unit_; }

  Point decode(const LatticeCoords& gamma) const;
  /// Lattice coordinates of x when x is in Gamma (to tolerance, per axis in lattice units).
  std::optional<LatticeCoords> encode(const Point& x, double tol = 1e-9) const;

  LatticeCoords multiply(const LatticeCoords& a, const LatticeCoords& b) const;
  LatticeCoords inverse(const LatticeCoords& a) const;
  /// delta_{2^k} on Gamma, k >= 0.
  LatticeCoords dilate2(const LatticeCoords& a, int k) const;

  /// 2^{-j} (.) gamma: the spatial position of the atom.
  Point position(const AtomIndex& idx) const;

  /// The unique gamma with gamma^{-1} . x in the tile (preset tile), and the reduced point.
  std::pair<LatticeCoords, Point> reduce(const Point& x) const;

  /// Every gamma with gamma^{-1} . x in the tile (more than one when the tile overlaps).
  std::vector<LatticeCoords> covering(const Point& x) const;

  bool operator==(const SamplingSet& o) const;

 private:
  SamplingSet(GroupSpec g, double beta, Box tile);
  void check_coords(const LatticeCoords& a) const;

  GroupSpec group_;
  double beta_;
  Box tile_;
  std::vector<double> unit_;
};

/// All (j, gamma) with 2^{-j} (.) gamma in `box`, lexicographic in gamma.
std::vector<AtomIndex> enumerate(const SamplingSet& gs, int j, const Box& box);

struct TilingReport {
  /// Redundant share of the covering: sum(max(count-1,0)) / sum(count). 0 for a tiling,
  /// 1/2 when every point is covered twice.
  double max_overlap_fraction = 0.0;
  /// Share of samples covered by no translate.
  double uncovered_fraction = 0.0;
  std::size_t samples = 0;
};

/// Counts, at the cell centres of a grid_res^D grid over test_box, how many
/// translates gamma.W contain each sample.
TilingReport verify_tiling(const SamplingSet& gs, const Box& test_box, int grid_res,
                           Exec exec = Exec::Parallel);

struct DecayCertificate {
  double partial_sum = 0.0;    // exact lattice terms with |delta^{-1} z| <= radius, times 2^{(eta-j)Q}
  double tail_estimate = 0.0;  // integral comparison for the remaining terms
  double value = 0.0;          // (partial + tail), i.e. S * 2^{eta Q}
  double radius = 0.0;
  std::size_t terms = 0;
  bool converged = false;      // tail <= 1e-14 * partial before the point budget ran out
  bool hypothesis_ok = true;   // n >= Q + 1
  std::string warning;
};

/// S = sum_gamma 2^{-jQ} / (1 + 2^eta |(2^{-j}.gamma)^{-1} x|)^n, returned as S * 2^{eta Q}.
/// Requires eta <= j. n <= Q yields a divergence warning and an infinite value.
DecayCertificate column_decay_certificate(const SamplingSet& gs, int eta, int j, int n,
                                          const Point& x, Exec exec = Exec::Parallel,
                                          std::size_t budget = 4'000'000);

void to_json(nlohmann::json& j, const Box& b);
Box box_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const SamplingSet& gs);
SamplingSet sampling_from_json(const nlohmann::json& j);

}  // namespace stratprof
