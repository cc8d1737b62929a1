#include "polytherm/pergrid.hpp"

#include <atomic>
#include <thread>

namespace polytherm {

GridSpec::GridSpec(std::array<int, 3> n_, std::array<double, 3> length_)
    : n(n_), length(length_) {
  for (int a = 0; a < 3; ++a) {
    if (n[a] < 4)
      throw std::invalid_argument("GridSpec: n must be >= 4 on every axis");
    if (!(length[a] > 0.0) || !std::isfinite(length[a]))
      throw std::invalid_argument("GridSpec: period lengths must be positive");
    dx[a] = length[a] / n[a];
  }
}

namespace {
std::atomic<int> g_workers{1};
}

int worker_count() { return g_workers.load(); }

void set_worker_count(int w) {
  if (w < 1) throw std::invalid_argument("worker count must be >= 1");
  g_workers.store(w);
}

void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& body) {
  const int w = worker_count();
  if (w <= 1 || n < 2 * std::size_t(w)) {
    body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(std::size_t(w));
  const std::size_t chunk = (n + std::size_t(w) - 1) / std::size_t(w);
  for (int t = 0; t < w; ++t) {
    const std::size_t lo = std::min(n, std::size_t(t) * chunk);
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

TensorField gradient(const VectorField& v) {
  const GridSpec& g = v.grid();
  TensorField out(g);
  for (int axis = 1; axis <= 3; ++axis) {
    const VectorField dv = diff(v, axis);
    const int a = axis - 1;
    const std::size_t np = g.points();
    for (std::size_t p = 0; p < np; ++p)
      for (int i = 0; i < 3; ++i) out(p, 3 * i + a) = dv(p, i);
  }
  return out;
}

VectorField divergence(const TensorField& T) {
  const GridSpec& g = T.grid();
  VectorField out(g);
  for (int axis = 1; axis <= 3; ++axis) {
    const TensorField dT = diff(T, axis);
    const int a = axis - 1;
    const std::size_t np = g.points();
    for (std::size_t p = 0; p < np; ++p)
      for (int i = 0; i < 3; ++i) out(p, i) += dT(p, 3 * i + a);
  }
  return out;
}

double integrate(const ScalarField& f) {
  const double s =
      detail::pairwise_sum(0, f.points(), [&](std::size_t p) { return f(p, 0); });
  return f.grid().cell_volume() * s;
}

double w1_norm(const VectorField& v) {
  const TensorField G = gradient(v);
  return std::sqrt(inner(v, v) + inner(G, G));
}

double curl_residual(const TensorField& F) {
  double worst = 0.0;
  std::array<TensorField, 3> dF = {diff(F, 1), diff(F, 2), diff(F, 3)};
  const std::size_t np = F.points();
  const double vol = F.grid().cell_volume();
  for (int i = 0; i < 3; ++i) {
    for (int a = 0; a < 3; ++a) {
      for (int b = a + 1; b < 3; ++b) {
        const double s = detail::pairwise_sum(0, np, [&](std::size_t p) {
          const double r = dF[a](p, 3 * i + b) - dF[b](p, 3 * i + a);
          return r * r;
        });
        worst = std::max(worst, std::sqrt(vol * s));
      }
    }
  }
  return worst;
}

} // namespace polytherm
