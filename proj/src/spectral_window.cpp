#include "stratprof/spectral_window.hpp"

#include <algorithm>
#include <cmath>

#include "stratprof/errors.hpp"

namespace stratprof {

double smooth_step(double t, double sharpness) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / (sharpness * t));
  const double b = std::exp(-1.0 / (sharpness * (1.0 - t)));
  return a / (a + b);
}

Window::Window(double sharpness) : sharpness_(sharpness) {
  if (!(sharpness > 0.0) || !std::isfinite(sharpness)) throw DomainError("window sharpness must be positive");
}

double Window::phi_hat(double xi) const {
  if (xi <= 0.25) return 1.0;
  if (xi >= 1.0) return 0.0;
  // log4(4 xi) runs over (0, 1) on the transition
  return 1.0 - smooth_step(std::log(4.0 * xi) / std::log(4.0), sharpness_);
}

double Window::psi_hat(double xi) const {
  if (xi <= 0.25 || xi >= 4.0) return 0.0;
  return std::sqrt(std::max(phi_hat(0.25 * xi) - phi_hat(xi), 0.0));
}

double Window::partial_sum(int m, double xi) const {
  double s = 0.0;
  for (int j = -m; j <= m; ++j) {
    const double v = psi_hat(std::ldexp(xi, -2 * j));
    s += v * v;
  }
  return s;
}

double Window::telescoped(int m, double xi) const {
  return phi_hat(std::ldexp(xi, -2 * m - 2)) - phi_hat(std::ldexp(xi, 2 * m));
}

Window build_window(double sharpness) { return Window(sharpness); }

NarrowWindow::NarrowWindow(double sharpness) : sharpness_(sharpness) {
  if (!(sharpness > 0.0) || !std::isfinite(sharpness)) throw DomainError("window sharpness must be positive");
}

double NarrowWindow::plateau_lo() const { return std::exp2(-0.75); }
double NarrowWindow::plateau_hi() const { return std::exp2(-0.25); }

double NarrowWindow::psi_hat(double xi) const {
  if (xi <= 0.5 || xi >= 1.0) return 0.0;
  const double u = std::log2(xi);  // in (-1, 0)
  double sq;
  if (u < -0.75)
    sq = smooth_step(4.0 * (u + 1.0), sharpness_);
  else if (u > -0.25)
    sq = smooth_step(-4.0 * u, sharpness_);
  else
    sq = 1.0;
  return std::sqrt(sq);
}

NarrowWindow build_narrow_window(double sharpness) { return NarrowWindow(sharpness); }

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0 && hi > lo) || n == 0) throw DomainError("log_grid needs 0 < lo < hi and n >= 1");
  std::vector<double> g(n);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = std::exp(a + (b - a) * (static_cast<double>(i) + 0.5) / static_cast<double>(n));
  return g;
}

PartitionReport verify_partition(const std::function<double(double)>& psi_hat, int J,
                                 const std::vector<double>& grid) {
  if (J < 0) throw DomainError("verify_partition needs J >= 0");
  PartitionReport r;
  const double lo = std::ldexp(1.0, -2 * J), hi = std::ldexp(1.0, 2 * J);
  for (double xi : grid) {
    if (!(xi >= lo && xi <= hi)) {
      ++r.excluded;
      continue;
    }
    double s = 0.0;
    for (int j = -J; j <= J; ++j) {
      const double v = psi_hat(std::ldexp(xi, -2 * j));
      s += v * v;
    }
    r.max_deviation = std::max(r.max_deviation, std::abs(s - 1.0));
    ++r.used;
  }
  if (r.excluded > 0)
    r.warning = std::to_string(r.excluded) + " grid points outside the covered band were excluded";
  return r;
}

PartitionReport verify_partition(const Window& w, int J, const std::vector<double>& grid) {
  return verify_partition([&w](double xi) { return w.psi_hat(xi); }, J, grid);
}

PartitionReport verify_partition(const NarrowWindow& w, int J, int points_per_band) {
  if (points_per_band < 1) throw DomainError("verify_partition needs at least one point per band");
  std::vector<double> grid;
  for (int j = -J; j <= J; ++j) {
    const double s = std::ldexp(1.0, 2 * j);
    for (double xi : log_grid(s * w.plateau_lo(), s * w.plateau_hi(), points_per_band)) grid.push_back(xi);
  }
  return verify_partition([&w](double xi) { return w.psi_hat(xi); }, J, grid);
}

void to_json(nlohmann::json& j, const Window& w) {
  j = {{"kind", "standard"}, {"sharpness", w.sharpness()}, {"support", {w.support_lo(), w.support_hi()}}};
}

void to_json(nlohmann::json& j, const NarrowWindow& w) {
  j = {{"kind", "narrow"},
       {"sharpness", w.sharpness()},
       {"support", {w.support_lo(), w.support_hi()}},
       {"plateau", {w.plateau_lo(), w.plateau_hi()}}};
}

void to_json(nlohmann::json& j, const PartitionReport& r) {
  j = {{"max_deviation", r.max_deviation}, {"used", r.used}, {"excluded", r.excluded}};
  if (!r.warning.empty()) j["warning"] = r.warning;
}

}  // namespace stratprof
