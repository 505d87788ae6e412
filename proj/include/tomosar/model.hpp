#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tomosar/types.hpp"

namespace tomosar {

// Multi-baseline, multi-temporal acquisition configuration. Baselines are in
// meters, times in years relative to the master epoch.
class AcquisitionGeometry {
public:
    AcquisitionGeometry(std::vector<double> baselines, std::vector<double> times, double wavelength, double range);

    std::span<const double> baselines() const noexcept { return baselines_; }
    std::span<const double> times() const noexcept { return times_; }
    double wavelength() const noexcept { return wavelength_; }
    double range() const noexcept { return range_; }
    std::size_t size() const noexcept { return baselines_.size(); }

    // max(b) - min(b)
    double aperture() const noexcept;

private:
    std::vector<double> baselines_;
    std::vector<double> times_;
    double wavelength_;
    double range_;
};

enum class BaseFunction { linear, seasonal };

BaseFunction parse_base_function(std::string_view name);
std::string_view to_string(BaseFunction f) noexcept;

// tau_m(t): linear -> t, seasonal -> sin(2 pi t), t in years.
double evaluate_base_function(BaseFunction f, double t) noexcept;

struct UniformAxis {
    double start = 0.0;
    double step = 1.0;
    std::size_t count = 1;

    double at(std::size_t i) const noexcept { return start + step * static_cast<double>(i); }
    double last() const noexcept { return at(count - 1); }
    std::vector<double> samples() const;

    // Accepts explicit samples; throws ConfigError unless they are uniformly
    // spaced and strictly increasing.
    static UniformAxis from_samples(std::span<const double> samples);
};

struct MotionAxis {
    BaseFunction base;
    UniformAxis axis;
};

// Flat index layout is elevation-major: the elevation index varies slowest and
// the last motion axis fastest, so contiguous flat ranges are elevation slabs.
class ParameterGrid {
public:
    explicit ParameterGrid(UniformAxis elevation, std::vector<MotionAxis> motion = {});

    const UniformAxis& elevation() const noexcept { return elevation_; }
    std::span<const MotionAxis> motion() const noexcept { return motion_; }
    std::size_t motion_dims() const noexcept { return motion_.size(); }
    std::vector<BaseFunction> base_functions() const;

    std::size_t flat_size() const noexcept { return flat_size_; }
    // Product of motion axis lengths: number of flat indices per elevation sample.
    std::size_t motion_size() const noexcept { return flat_size_ / elevation_.count; }

    // Multi-index is [elevation, motion_1, ..., motion_M].
    std::size_t flatten(std::span<const std::size_t> multi) const;
    std::vector<std::size_t> unflatten(std::size_t flat) const;

    std::size_t elevation_index(std::size_t flat) const noexcept { return flat / motion_size(); }
    double elevation_at(std::size_t flat) const noexcept { return elevation_.at(elevation_index(flat)); }
    std::vector<double> motion_at(std::size_t flat) const;

private:
    UniformAxis elevation_;
    std::vector<MotionAxis> motion_;
    std::size_t flat_size_;
};

// Dense N x L dictionary. The matrix is shared and immutable so many pixel
// solves can reference it concurrently.
class SteeringMatrix {
public:
    SteeringMatrix(std::shared_ptr<const ComplexMatrix> entries, AcquisitionGeometry geometry, ParameterGrid grid)
        : entries_(std::move(entries)), geometry_(std::move(geometry)), grid_(std::move(grid)) {}

    const ComplexMatrix& matrix() const noexcept { return *entries_; }
    const std::shared_ptr<const ComplexMatrix>& shared() const noexcept { return entries_; }
    const AcquisitionGeometry& geometry() const noexcept { return geometry_; }
    const ParameterGrid& grid() const noexcept { return grid_; }

private:
    std::shared_ptr<const ComplexMatrix> entries_;
    AcquisitionGeometry geometry_;
    ParameterGrid grid_;
};

// 2^26 complex doubles = 1 GiB.
inline constexpr std::size_t kDefaultSteeringBudget = std::size_t{1} << 26;

// xi_n = 2 b_n / (lambda r), in 1/m.
RealVector spatial_frequencies(std::span<const double> baselines, double wavelength, double range);
RealVector spatial_frequencies(const AcquisitionGeometry& geom);

// eta(m, n) = 2 tau_m(t_n) / lambda; one row per base function, in the order given.
RealMatrix temporal_frequencies(const AcquisitionGeometry& geom, std::span<const BaseFunction> base_functions);
RealMatrix temporal_frequencies(const AcquisitionGeometry& geom, std::span<const std::string> base_function_names);

SteeringMatrix build_steering_matrix(const AcquisitionGeometry& geom, const ParameterGrid& grid,
                                     std::size_t max_entries = kDefaultSteeringBudget);

// Single steering column for an arbitrary (possibly off-grid) parameter point.
ComplexVector steering_vector(const AcquisitionGeometry& geom, std::span<const BaseFunction> base_functions,
                              double elevation, std::span<const double> motion);

double rayleigh_resolution(double wavelength, double range, double aperture);
double rayleigh_resolution(const AcquisitionGeometry& geom);
// Half-width of the Fourier main lobe, 1 / (xi_max - xi_min) = lambda r / (2 aperture).
// Two in-phase point scatterers closer than this merge under a linear estimator.
double fourier_resolution(const AcquisitionGeometry& geom);
double normalized_distance(double elevation, double rayleigh);

} // namespace tomosar
