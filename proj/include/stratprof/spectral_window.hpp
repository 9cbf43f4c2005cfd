#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace stratprof {

/// Smooth step 0 -> 1 on [0, 1]: S(t) = g(t) / (g(t) + g(1-t)), g(t) = exp(-1/(sigma t)).
double smooth_step(double t, double sharpness);

/// Low-pass window phi_hat and band-pass psi_hat = sqrt(phi_hat(xi/4) - phi_hat(xi)).
///
/// phi_hat is 1 on [0, 1/4], 0 from 1 on, with a log-scale transition in between,
/// so psi_hat is supported in [1/4, 4] and the squares of psi_hat(4^{-j} xi) telescope.
class Window {
 public:
  explicit Window(double sharpness = 1.0);

  double sharpness() const { return sharpness_; }
  double phi_hat(double xi) const;
  double psi_hat(double xi) const;
  double support_lo() const { return 0.25; }
  double support_hi() const { return 4.0; }

  /// sum_{|j|<=m} psi_hat(4^{-j} xi)^2 evaluated term by term.
  double partial_sum(int m, double xi) const;
  /// phi_hat(4^{-m-1} xi) - phi_hat(4^m xi), the closed form of partial_sum.
  double telescoped(int m, double xi) const;

 private:
  double sharpness_;
};

Window build_window(double sharpness);

/// Band-pass window supported in [1/2, 1]: psi_hat^2 rises over [1/2, 2^{-3/4}],
/// equals 1 on [2^{-3/4}, 2^{-1/4}] and falls over [2^{-1/4}, 1]. Its dyadic copies
/// have disjoint supports; the partition sum equals 1 on the plateaus.
class NarrowWindow {
 public:
  explicit NarrowWindow(double sharpness = 1.0);

  double sharpness() const { return sharpness_; }
  double psi_hat(double xi) const;
  double support_lo() const { return 0.5; }
  double support_hi() const { return 1.0; }
  double plateau_lo() const;
  double plateau_hi() const;

 private:
  double sharpness_;
};

NarrowWindow build_narrow_window(double sharpness = 1.0);

struct PartitionReport {
  double max_deviation = 0.0;
  std::size_t used = 0;
  std::size_t excluded = 0;
  std::string warning;
};

/// max over grid of |sum_{|j|<=J} psi_hat(4^{-j} xi)^2 - 1|. Points outside
/// [4^{-J}, 4^J] are excluded and counted.
PartitionReport verify_partition(const Window& w, int J, const std::vector<double>& grid);
/// Same check with an arbitrary band-pass evaluator (e.g. a deliberately broken one).
PartitionReport verify_partition(const std::function<double(double)>& psi_hat, int J,
                                 const std::vector<double>& grid);
/// Checks the narrow window on the plateau copies 4^j [2^{-3/4}, 2^{-1/4}], |j| <= J.
PartitionReport verify_partition(const NarrowWindow& w, int J, int points_per_band);

/// n log-spaced points strictly inside [lo, hi].
std::vector<double> log_grid(double lo, double hi, std::size_t n);

void to_json(nlohmann::json& j, const Window& w);
void to_json(nlohmann::json& j, const NarrowWindow& w);
void to_json(nlohmann::json& j, const PartitionReport& r);

}  // namespace stratprof
