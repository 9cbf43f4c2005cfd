#include <doctest.h>

#include <cmath>

#include "stratprof/spectral_window.hpp"

using namespace stratprof;

TEST_CASE("low-pass and band-pass windows") {
  const Window w = build_window(1.0);
  CHECK(w.phi_hat(0.0) == 1.0);
  CHECK(w.phi_hat(0.25) == 1.0);
  CHECK(w.phi_hat(4.0) == 0.0);
  CHECK(w.psi_hat(1.0 / 8.0) == 0.0);
  CHECK(w.psi_hat(8.0) == 0.0);
  CHECK(w.psi_hat(0.25) == 0.0);
  CHECK(w.psi_hat(4.0) == 0.0);
  for (double xi : log_grid(1e-3, 1e3, 400)) {
    CHECK(w.phi_hat(xi) >= 0.0);
    CHECK(w.phi_hat(xi) <= 1.0);
    CHECK(w.psi_hat(xi) >= 0.0);
  }
  // phi_hat nonincreasing
  double prev = 1.0;
  for (double xi : log_grid(0.1, 5.0, 300)) {
    CHECK(w.phi_hat(xi) <= prev);
    prev = w.phi_hat(xi);
  }
}

TEST_CASE("adjacent terms at xi = 2") {
  const Window w = build_window(1.0);
  // only j = 0 and j = 1 see xi = 2: psi(2)^2 + psi(1/2)^2 = phi(1/8) - phi(2) = 1
  const double direct = std::pow(w.psi_hat(2.0), 2) + std::pow(w.psi_hat(0.5), 2);
  double brute = 0.0;
  for (int j = -20; j <= 20; ++j) brute += std::pow(w.psi_hat(std::ldexp(2.0, -2 * j)), 2);
  CHECK(std::abs(direct - brute) <= 1e-15);
  CHECK(std::abs(brute - 1.0) <= 1e-12);
}

TEST_CASE("telescoping identity") {
  for (double sharp : {0.5, 1.0, 3.0}) {
    const Window w = build_window(sharp);
    for (int m : {0, 1, 3, 6})
      for (double xi : log_grid(1e-5, 1e5, 200)) CHECK(std::abs(w.partial_sum(m, xi) - w.telescoped(m, xi)) <= 1e-12);
  }
}

TEST_CASE("partition of unity") {
  const Window w = build_window(1.0);
  auto r = verify_partition(w, 8, log_grid(std::ldexp(1.0, -16), std::ldexp(1.0, 16), 256));
  CHECK(r.used == 256);
  CHECK(r.excluded == 0);
  CHECK(r.max_deviation <= 1e-12);

  // flat region of phi_hat: xi tiny, still covered by large j
  r = verify_partition(w, 8, {1e-4, 2e-4});
  CHECK(r.max_deviation <= 1e-12);

  r = verify_partition(w, 2, {1e-6, 1.0, 1e6});
  CHECK(r.excluded == 2);
  CHECK_FALSE(r.warning.empty());

  // psi_hat used without squaring breaks the identity
  const auto broken = [&](double xi) { return std::sqrt(std::max(w.psi_hat(xi), 0.0)); };
  r = verify_partition(broken, 8, log_grid(1e-3, 1e3, 256));
  CHECK(r.max_deviation > 0.1);
}

TEST_CASE("dyadic disjointness") {
  const Window w = build_window(1.0);
  for (double xi : log_grid(1e-3, 1e3, 500))
    for (int d = 2; d <= 4; ++d) CHECK(w.psi_hat(xi) * w.psi_hat(std::ldexp(xi, -2 * d)) == 0.0);
}

TEST_CASE("narrow window") {
  const NarrowWindow n = build_narrow_window();
  CHECK(n.psi_hat(0.25) == 0.0);
  CHECK(n.psi_hat(0.5) == 0.0);
  CHECK(n.psi_hat(1.0) == 0.0);
  CHECK(n.psi_hat(1.5) == 0.0);
  CHECK(n.psi_hat(std::sqrt(n.plateau_lo() * n.plateau_hi())) == 1.0);
  for (double xi : log_grid(1.0, 10.0, 50)) CHECK(n.psi_hat(xi) == 0.0);
  const auto r = verify_partition(n, 6, 64);
  CHECK(r.max_deviation <= 1e-12);
  // copies at ratio 4 never overlap
  for (double xi : log_grid(0.01, 100.0, 400)) CHECK(n.psi_hat(xi) * n.psi_hat(4.0 * xi) == 0.0);
}

TEST_CASE("window JSON") {
  nlohmann::json j = build_window(2.0);
  CHECK(j.at("sharpness").get<double>() == 2.0);
}
