#include "tomosar/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "tomosar/error.hpp"

namespace tomosar {

namespace {

bool all_finite(std::span<const double> values) {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

void check_axis(const UniformAxis& axis, std::string_view what) {
    if (axis.count == 0) {
        throw ConfigError(std::string(what) + " axis must have at least one sample");
    }
    if (!std::isfinite(axis.start) || !std::isfinite(axis.step) || !(axis.step > 0.0)) {
        throw ConfigError(std::string(what) + " axis needs a finite start and a positive finite step");
    }
}

} // namespace

AcquisitionGeometry::AcquisitionGeometry(std::vector<double> baselines, std::vector<double> times, double wavelength,
                                         double range)
    : baselines_(std::move(baselines)), times_(std::move(times)), wavelength_(wavelength), range_(range) {
    if (baselines_.size() != times_.size()) {
        throw InvalidGeometry("baselines and times differ in length");
    }
    if (baselines_.size() < 2) {
        throw InvalidGeometry("at least two acquisitions are required");
    }
    if (!all_finite(baselines_) || !all_finite(times_)) {
        throw InvalidGeometry("baselines and times must be finite");
    }
    if (!std::isfinite(wavelength_) || !(wavelength_ > 0.0)) {
        throw InvalidGeometry("wavelength must be positive and finite");
    }
    if (!std::isfinite(range_) || !(range_ > 0.0)) {
        throw InvalidGeometry("range must be positive and finite");
    }
    if (!(aperture() > 0.0)) {
        throw InvalidGeometry("baseline aperture is zero");
    }
}

double AcquisitionGeometry::aperture() const noexcept {
    const auto [lo, hi] = std::minmax_element(baselines_.begin(), baselines_.end());
    return *hi - *lo;
}

BaseFunction parse_base_function(std::string_view name) {
    if (name == "linear") return BaseFunction::linear;
    if (name == "seasonal") return BaseFunction::seasonal;
    throw ConfigError("unknown base function '" + std::string(name) + "'");
}

std::string_view to_string(BaseFunction f) noexcept {
    switch (f) {
    case BaseFunction::linear: return "linear";
    case BaseFunction::seasonal: return "seasonal";
    }
    return "unknown";
}

double evaluate_base_function(BaseFunction f, double t) noexcept {
    switch (f) {
    case BaseFunction::linear: return t;
    case BaseFunction::seasonal: return std::sin(2.0 * std::numbers::pi * t);
    }
    return 0.0;
}

std::vector<double> UniformAxis::samples() const {
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = at(i);
    return out;
}

UniformAxis UniformAxis::from_samples(std::span<const double> samples) {
    if (samples.empty()) throw ConfigError("axis has no samples");
    if (!all_finite(samples)) throw ConfigError("axis samples must be finite");
    if (samples.size() == 1) return {samples[0], 1.0, 1};

    const double step = (samples.back() - samples.front()) / static_cast<double>(samples.size() - 1);
    if (!(step > 0.0)) throw ConfigError("axis samples must be strictly increasing");
    const UniformAxis axis{samples.front(), step, samples.size()};
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (std::abs(samples[i] - axis.at(i)) > 1e-9 * step) {
            throw ConfigError("axis samples are not uniformly spaced");
        }
    }
    return axis;
}

ParameterGrid::ParameterGrid(UniformAxis elevation, std::vector<MotionAxis> motion)
    : elevation_(elevation), motion_(std::move(motion)), flat_size_(0) {
    check_axis(elevation_, "elevation");
    std::size_t size = elevation_.count;
    for (const auto& m : motion_) {
        check_axis(m.axis, to_string(m.base));
        if (size > std::numeric_limits<std::size_t>::max() / m.axis.count) {
            throw CapacityError("parameter grid size overflows");
        }
        size *= m.axis.count;
    }
    flat_size_ = size;
}

std::vector<BaseFunction> ParameterGrid::base_functions() const {
    std::vector<BaseFunction> out;
    out.reserve(motion_.size());
    for (const auto& m : motion_) out.push_back(m.base);
    return out;
}

std::size_t ParameterGrid::flatten(std::span<const std::size_t> multi) const {
    if (multi.size() != motion_.size() + 1) {
        throw DimensionMismatch("multi-index has wrong rank");
    }
    if (multi[0] >= elevation_.count) throw DomainError("elevation index out of range");
    std::size_t flat = multi[0];
    for (std::size_t m = 0; m < motion_.size(); ++m) {
        if (multi[m + 1] >= motion_[m].axis.count) throw DomainError("motion index out of range");
        flat = flat * motion_[m].axis.count + multi[m + 1];
    }
    return flat;
}

std::vector<std::size_t> ParameterGrid::unflatten(std::size_t flat) const {
    if (flat >= flat_size_) throw DomainError("flat index out of range");
    std::vector<std::size_t> multi(motion_.size() + 1);
    for (std::size_t m = motion_.size(); m-- > 0;) {
        const std::size_t n = motion_[m].axis.count;
        multi[m + 1] = flat % n;
        flat /= n;
    }
    multi[0] = flat;
    return multi;
}

std::vector<double> ParameterGrid::motion_at(std::size_t flat) const {
    const auto multi = unflatten(flat);
    std::vector<double> out(motion_.size());
    for (std::size_t m = 0; m < motion_.size(); ++m) out[m] = motion_[m].axis.at(multi[m + 1]);
    return out;
}

RealVector spatial_frequencies(std::span<const double> baselines, double wavelength, double range) {
    RealVector xi(static_cast<Index>(baselines.size()));
    const double scale = 2.0 / (wavelength * range);
    for (std::size_t n = 0; n < baselines.size(); ++n) {
        xi[static_cast<Index>(n)] = scale * baselines[n];
    }
    if (!xi.allFinite()) throw InvalidGeometry("spatial frequencies are not finite");
    return xi;
}

RealVector spatial_frequencies(const AcquisitionGeometry& geom) {
    return spatial_frequencies(geom.baselines(), geom.wavelength(), geom.range());
}

RealMatrix temporal_frequencies(const AcquisitionGeometry& geom, std::span<const BaseFunction> base_functions) {
    const auto times = geom.times();
    RealMatrix eta(static_cast<Index>(base_functions.size()), static_cast<Index>(times.size()));
    for (std::size_t m = 0; m < base_functions.size(); ++m) {
        for (std::size_t n = 0; n < times.size(); ++n) {
            eta(static_cast<Index>(m), static_cast<Index>(n)) =
                2.0 * evaluate_base_function(base_functions[m], times[n]) / geom.wavelength();
        }
    }
    return eta;
}

RealMatrix temporal_frequencies(const AcquisitionGeometry& geom, std::span<const std::string> base_function_names) {
    std::vector<BaseFunction> parsed;
    parsed.reserve(base_function_names.size());
    for (const auto& name : base_function_names) parsed.push_back(parse_base_function(name));
    return temporal_frequencies(geom, parsed);
}

SteeringMatrix build_steering_matrix(const AcquisitionGeometry& geom, const ParameterGrid& grid,
                                     std::size_t max_entries) {
    const std::size_t rows = geom.size();
    const std::size_t cols = grid.flat_size();
    if (cols != 0 && rows > max_entries / cols) {
        throw CapacityError("steering matrix of " + std::to_string(rows) + " x " + std::to_string(cols) +
                            " exceeds the memory budget of " + std::to_string(max_entries) + " entries");
    }

    const RealVector xi = spatial_frequencies(geom);
    const auto bases = grid.base_functions();
    const RealMatrix eta = temporal_frequencies(geom, bases);
    const std::size_t motion_size = grid.motion_size();

    // Motion phase per (row, motion flat index) is shared by every elevation slab.
    RealMatrix motion_phase = RealMatrix::Zero(static_cast<Index>(rows), static_cast<Index>(motion_size));
    for (std::size_t j = 0; j < motion_size; ++j) {
        const auto p = grid.motion_at(j);
        for (std::size_t m = 0; m < p.size(); ++m) {
            motion_phase.col(static_cast<Index>(j)) += eta.row(static_cast<Index>(m)).transpose() * p[m];
        }
    }

    auto entries = std::make_shared<ComplexMatrix>(static_cast<Index>(rows), static_cast<Index>(cols));
    const double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t e = 0; e < grid.elevation().count; ++e) {
        const double s = grid.elevation().at(e);
        for (std::size_t j = 0; j < motion_size; ++j) {
            const auto col = static_cast<Index>(e * motion_size + j);
            for (std::size_t n = 0; n < rows; ++n) {
                const auto r = static_cast<Index>(n);
                (*entries)(r, col) = std::polar(1.0, two_pi * (xi[r] * s + motion_phase(r, static_cast<Index>(j))));
            }
        }
    }
    return SteeringMatrix(std::move(entries), geom, grid);
}

ComplexVector steering_vector(const AcquisitionGeometry& geom, std::span<const BaseFunction> base_functions,
                              double elevation, std::span<const double> motion) {
    if (motion.size() != base_functions.size()) {
        throw DimensionMismatch("motion parameter count differs from base function count");
    }
    const RealVector xi = spatial_frequencies(geom);
    const RealMatrix eta = temporal_frequencies(geom, base_functions);
    ComplexVector v(xi.size());
    for (Index n = 0; n < xi.size(); ++n) {
        double phase = xi[n] * elevation;
        for (std::size_t m = 0; m < motion.size(); ++m) phase += eta(static_cast<Index>(m), n) * motion[m];
        v[n] = std::polar(1.0, 2.0 * std::numbers::pi * phase);
    }
    return v;
}

double rayleigh_resolution(double wavelength, double range, double aperture) {
    if (!(wavelength > 0.0) || !(range > 0.0) || !(aperture > 0.0)) {
        throw DomainError("Rayleigh resolution needs positive wavelength, range and aperture");
    }
    return wavelength * range / aperture;
}

double rayleigh_resolution(const AcquisitionGeometry& geom) {
    return rayleigh_resolution(geom.wavelength(), geom.range(), geom.aperture());
}

double fourier_resolution(const AcquisitionGeometry& geom) {
    return 0.5 * rayleigh_resolution(geom);
}

double normalized_distance(double elevation, double rayleigh) {
    if (!(rayleigh > 0.0)) throw DomainError("Rayleigh resolution must be positive");
    return elevation / rayleigh;
}

} // namespace tomosar
