#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "tomosar/model.hpp"
#include "tomosar/random.hpp"
#include "tomosar/slimmer.hpp"

namespace tomosar {

struct Scatterer {
    double elevation = 0.0;
    // One coefficient per scenario base function.
    std::vector<double> motion;
    double amplitude = 1.0;
    // Radians; the phase difference between scatterers lives here.
    double phase = 0.0;
    // Required on the reference (first) scatterer unless the scenario fixes
    // the noise variance; optional and consistency-checked elsewhere.
    std::optional<double> snr_db;
};

struct Scenario {
    AcquisitionGeometry geometry;
    std::vector<BaseFunction> base_functions;
    std::vector<Scatterer> scatterers;
    // Overrides the SNR-derived per-sample noise variance E|eps_n|^2.
    std::optional<double> noise_variance;
    std::size_t realizations = 1;
    std::uint64_t seed = 0;

    void validate() const;

    // E|eps_n|^2: the override if set, else a_0^2 / 10^(snr_0/10); zero with no scatterers.
    double noise_power() const;
};

// g = sum_k a_k e^{j phi_k} steering(s_k, p_k) + eps with circular Gaussian eps.
ComplexVector synthesize_pixel(const Scenario& scenario, RandomStream& rng);

// Noise drawn from the (scenario.seed, pixel_id) substream.
ComplexVector synthesize_pixel(const Scenario& scenario, std::uint64_t pixel_id);

// True iff the model order matches the truth and every true scatterer pairs
// with a distinct estimate within tol meters in elevation (closest pairs first).
bool detection_criterion(const ScattererEstimates& estimates, const Scenario& truth, double tol);

struct DetectionResult {
    double kappa = 0.0;
    double snr_db = 0.0;
    Backend method = Backend::rbpg;
    double p_d = 0.0;
    std::size_t realizations = 0;
    std::size_t detections = 0;
    // Pipeline failures, counted as non-detections.
    std::size_t failures = 0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

// Wilson score interval for a binomial proportion (95% by default).
std::pair<double, double> wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

struct MonteCarloSetup {
    // Geometry, base functions and seed; scatterers are generated per cell.
    Scenario base;
    ParameterGrid grid;
    SlimmerConfig pipeline;
    // Elevation of the first scatterer; the second sits kappa * rho_s above it.
    double reference_elevation = 0.0;
    // Phase of the second scatterer relative to the first.
    double delta_phi = 0.0;
    // Elevation length that kappa is measured in; defaults to rho_s.
    std::optional<double> kappa_unit = std::nullopt;
    // Elevation match tolerance; defaults to kappa_unit / 4.
    std::optional<double> match_tol = std::nullopt;
    std::size_t workers = 1;
};

inline constexpr std::size_t kMinMonteCarloRealizations = 100;

// One DetectionResult per (kappa, snr, method), kappa outermost. Noise draws
// are shared across methods within a (kappa, snr) cell so method comparisons
// are paired. svd_wiener runs with mu = sigma^2 / sigma_gamma^2, where the
// reflectivity prior sigma_gamma^2 spreads the true scatterer power evenly over
// the grid cells.
std::vector<DetectionResult> monte_carlo_detection(const MonteCarloSetup& setup, std::span<const double> kappas,
                                                   std::span<const double> snrs_db,
                                                   std::span<const Backend> methods, std::size_t realizations);

// Two-scatterer truth for one Monte Carlo cell (unit amplitudes, equal SNR).
Scenario double_scatterer_scenario(const Scenario& base, double first_elevation, double separation, double snr_db,
                                   double delta_phi);

// Reference stack for simulations: aperture 269.5 m and lambda * r = 10914.75 m^2
// (rho_s = 40.5 m), X-band wavelength, irregular baselines drawn from `seed`,
// 11-day revisit times.
AcquisitionGeometry reference_geometry(std::size_t acquisitions = 29, std::uint64_t seed = 2024);

// `count` elevation samples spaced rho_s / samples_per_resolution apart, with s = 0 on-grid.
ParameterGrid reference_grid(double rho_s, std::size_t count = 100, double samples_per_resolution = 10.0);

} // namespace tomosar
