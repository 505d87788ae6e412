#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <vector>

#include "tomosar/model.hpp"
#include "tomosar/prox.hpp"
#include "tomosar/random.hpp"
#include "tomosar/simulate.hpp"
#include "tomosar/types.hpp"

namespace tomosar::test {

// Entries with real and imaginary parts uniform on [-1, 1].
inline ComplexMatrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
    RandomStream rng(seed, 0, StreamDomain::test);
    ComplexMatrix a(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) a(i, j) = {2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0};
    return a;
}

inline ComplexVector random_vector(Index n, std::uint64_t seed) {
    RandomStream rng(seed, 1, StreamDomain::test);
    ComplexVector v(n);
    for (Index i = 0; i < n; ++i) v[i] = {2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0};
    return v;
}

inline std::shared_ptr<const ComplexMatrix> share(ComplexMatrix a) {
    return std::make_shared<const ComplexMatrix>(std::move(a));
}

// Plain double loop, no Eigen expressions.
inline double naive_f(const ComplexMatrix& a, const ComplexVector& b, const ComplexVector& x) {
    double sum = 0.0;
    for (Index i = 0; i < a.rows(); ++i) {
        std::complex<double> r = -b[i];
        for (Index j = 0; j < a.cols(); ++j) r += a(i, j) * x[j];
        sum += r.real() * r.real() + r.imag() * r.imag();
    }
    return sum;
}

inline double naive_F(const ComplexMatrix& a, const ComplexVector& b, const ComplexVector& x, double lambda) {
    double l1 = 0.0;
    for (Index j = 0; j < x.size(); ++j) l1 += std::hypot(x[j].real(), x[j].imag());
    return naive_f(a, b, x) + lambda * l1;
}

// Irregular-Fourier instance on the reference stack: elevation-only grid of L
// samples spaced rho_s/10, two unit on-grid scatterers, SNR 10 dB.
struct FourierInstance {
    AcquisitionGeometry geometry;
    ParameterGrid grid;
    std::shared_ptr<const ComplexMatrix> dictionary;
    ComplexVector g;
};

inline FourierInstance fourier_instance(std::size_t n, std::size_t l, std::uint64_t seed, double snr_db = 10.0) {
    AcquisitionGeometry geom = reference_geometry(n, 2024);
    ParameterGrid grid = reference_grid(rayleigh_resolution(geom), l, 10.0);
    auto steering = build_steering_matrix(geom, grid);
    RandomStream rng(seed, 7, StreamDomain::test);
    const std::size_t i0 = static_cast<std::size_t>(rng.uniform() * static_cast<double>(l / 2));
    const std::size_t i1 = i0 + 5 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(l / 2 - 5));
    Scenario sc{geom, {}, {}, std::nullopt, 1, seed};
    sc.scatterers.push_back({grid.elevation_at(i0), {}, 1.0, 0.0, snr_db});
    sc.scatterers.push_back({grid.elevation_at(i1), {}, 1.0, 2.0 * rng.uniform() * 3.141592653589793, std::nullopt});
    ComplexVector g = synthesize_pixel(sc, rng);
    return {geom, grid, steering.shared(), g};
}

} // namespace tomosar::test
