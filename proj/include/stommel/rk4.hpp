#pragma once

#include <array>
#include <cstddef>

namespace stommel {

/// One classical fourth-order Runge-Kutta step for y' = f(t, y).
template <std::size_t N, typename F>
std::array<double, N> rk4_step(F&& f, double t, const std::array<double, N>& y, double dt) {
  auto axpy = [](const std::array<double, N>& base, double h, const std::array<double, N>& k) {
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) out[i] = base[i] + h * k[i];
    return out;
  };
  const double half = 0.5 * dt;
  const std::array<double, N> k1 = f(t, y);
  const std::array<double, N> k2 = f(t + half, axpy(y, half, k1));
  const std::array<double, N> k3 = f(t + half, axpy(y, half, k2));
  const std::array<double, N> k4 = f(t + dt, axpy(y, dt, k3));
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    out[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return out;
}

}  // namespace stommel
