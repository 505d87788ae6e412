#include "tomosar/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "tomosar/error.hpp"
#include "tomosar/parallel.hpp"

namespace tomosar {

namespace {

double snr_to_linear(double snr_db) { return std::pow(10.0, snr_db / 10.0); }

} // namespace

void Scenario::validate() const {
    if (realizations == 0) throw ConfigError("scenario needs at least one realization");
    if (noise_variance && (!std::isfinite(*noise_variance) || *noise_variance < 0.0)) {
        throw ConfigError("noise_variance must be finite and >= 0");
    }
    for (std::size_t k = 0; k < scatterers.size(); ++k) {
        const auto& s = scatterers[k];
        if (!std::isfinite(s.elevation) || !std::isfinite(s.phase)) {
            throw ConfigError("scatterer " + std::to_string(k) + " has a non-finite elevation or phase");
        }
        if (!std::isfinite(s.amplitude) || s.amplitude < 0.0) {
            throw ConfigError("scatterer " + std::to_string(k) + " needs a finite nonnegative amplitude");
        }
        if (s.motion.size() != base_functions.size()) {
            throw ConfigError("scatterer " + std::to_string(k) + " has " + std::to_string(s.motion.size()) +
                              " motion parameters for " + std::to_string(base_functions.size()) + " base functions");
        }
        if (s.snr_db && !std::isfinite(*s.snr_db)) throw ConfigError("snr_db must be finite");
    }
    if (!noise_variance && !scatterers.empty() && !scatterers.front().snr_db) {
        throw ConfigError("the reference scatterer needs snr_db when noise_variance is not given");
    }
    const double sigma2 = noise_power();
    if (sigma2 > 0.0) {
        for (std::size_t k = 0; k < scatterers.size(); ++k) {
            const auto& s = scatterers[k];
            if (!s.snr_db) continue;
            const double implied = 10.0 * std::log10(s.amplitude * s.amplitude / sigma2);
            if (std::abs(implied - *s.snr_db) > 1e-6) {
                throw ConfigError("scatterer " + std::to_string(k) + " snr_db " + std::to_string(*s.snr_db) +
                                  " disagrees with its amplitude (implies " + std::to_string(implied) + " dB)");
            }
        }
    }
}

double Scenario::noise_power() const {
    if (noise_variance) return *noise_variance;
    if (scatterers.empty()) return 0.0;
    const auto& ref = scatterers.front();
    if (!ref.snr_db) throw ConfigError("the reference scatterer needs snr_db when noise_variance is not given");
    return ref.amplitude * ref.amplitude / snr_to_linear(*ref.snr_db);
}

ComplexVector synthesize_pixel(const Scenario& scenario, RandomStream& rng) {
    const auto n = static_cast<Index>(scenario.geometry.size());
    ComplexVector g = ComplexVector::Zero(n);
    for (const auto& s : scenario.scatterers) {
        const Complex weight = std::polar(s.amplitude, s.phase);
        g += weight * steering_vector(scenario.geometry, scenario.base_functions, s.elevation, s.motion);
    }
    const double sigma2 = scenario.noise_power();
    if (sigma2 > 0.0) {
        for (Index i = 0; i < n; ++i) g[i] += rng.complex_normal(sigma2);
    }
    return g;
}

ComplexVector synthesize_pixel(const Scenario& scenario, std::uint64_t pixel_id) {
    RandomStream rng(scenario.seed, pixel_id, StreamDomain::noise);
    return synthesize_pixel(scenario, rng);
}

bool detection_criterion(const ScattererEstimates& estimates, const Scenario& truth, double tol) {
    if (!(tol > 0.0)) throw DomainError("match tolerance must be positive");
    const std::size_t count = truth.scatterers.size();
    if (estimates.model_order != count || estimates.elevations.size() != count) return false;

    std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
    for (std::size_t t = 0; t < count; ++t) {
        for (std::size_t e = 0; e < count; ++e) {
            pairs.emplace_back(std::abs(truth.scatterers[t].elevation - estimates.elevations[e]), t, e);
        }
    }
    std::sort(pairs.begin(), pairs.end());
    std::vector<bool> truth_used(count, false), est_used(count, false);
    std::size_t matched = 0;
    for (const auto& [dist, t, e] : pairs) {
        if (truth_used[t] || est_used[e]) continue;
        if (dist > tol) break;
        truth_used[t] = est_used[e] = true;
        ++matched;
    }
    return matched == count;
}

std::pair<double, double> wilson_interval(std::size_t successes, std::size_t trials, double z) {
    if (trials == 0) return {0.0, 1.0};
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    // clamp so rounding never pushes p outside its own interval
    return {std::clamp(center - half, 0.0, p), std::clamp(center + half, p, 1.0)};
}

Scenario double_scatterer_scenario(const Scenario& base, double first_elevation, double separation, double snr_db,
                                   double delta_phi) {
    Scenario s = base;
    s.noise_variance.reset();
    const std::vector<double> still(base.base_functions.size(), 0.0);
    s.scatterers = {
        Scatterer{first_elevation, still, 1.0, 0.0, snr_db},
        Scatterer{first_elevation + separation, still, 1.0, delta_phi, snr_db},
    };
    return s;
}

std::vector<DetectionResult> monte_carlo_detection(const MonteCarloSetup& setup, std::span<const double> kappas,
                                                   std::span<const double> snrs_db,
                                                   std::span<const Backend> methods, std::size_t realizations) {
    if (realizations < kMinMonteCarloRealizations) {
        throw ConfigError("Monte Carlo needs at least " + std::to_string(kMinMonteCarloRealizations) +
                          " realizations per cell");
    }
    if (realizations >= (std::uint64_t{1} << 32) || kappas.size() * snrs_db.size() >= (std::uint64_t{1} << 32)) {
        throw CapacityError("Monte Carlo grid too large for 32-bit stream ids");
    }
    setup.pipeline.validate();
    if (setup.base.base_functions != setup.grid.base_functions()) {
        throw ConfigError("scenario base functions differ from the grid motion axes");
    }
    for (double k : kappas) {
        if (!std::isfinite(k) || k < 0.0) throw ConfigError("kappa values must be finite and >= 0");
    }

    const SteeringMatrix steering = build_steering_matrix(setup.base.geometry, setup.grid);
    const double unit = setup.kappa_unit.value_or(rayleigh_resolution(setup.base.geometry));
    if (!(unit > 0.0) || !std::isfinite(unit)) throw ConfigError("kappa_unit must be positive");
    const double tol = setup.match_tol.value_or(unit / 4.0);

    std::vector<SlimmerPipeline> pipelines;
    pipelines.reserve(methods.size());
    for (Backend m : methods) {
        SlimmerConfig cfg = setup.pipeline;
        cfg.backend = m;
        pipelines.emplace_back(steering, cfg);
    }

    std::vector<DetectionResult> results;
    std::vector<ComplexVector> pixels(realizations);
    for (std::size_t ki = 0; ki < kappas.size(); ++ki) {
        for (std::size_t si = 0; si < snrs_db.size(); ++si) {
            const Scenario truth = double_scatterer_scenario(setup.base, setup.reference_elevation, kappas[ki] * unit,
                                                             snrs_db[si], setup.delta_phi);
            const double sigma2 = truth.noise_power();
            double power = 0.0;
            for (const auto& sc : truth.scatterers) power += sc.amplitude * sc.amplitude;
            const double mu = power > 0.0 ? sigma2 * static_cast<double>(setup.grid.flat_size()) / power : sigma2;
            const std::uint64_t cell = static_cast<std::uint64_t>(ki * snrs_db.size() + si) << 32;
            for (std::size_t r = 0; r < realizations; ++r) {
                RandomStream rng(setup.base.seed, cell | r, StreamDomain::noise);
                pixels[r] = synthesize_pixel(truth, rng);
            }

            for (std::size_t mi = 0; mi < methods.size(); ++mi) {
                const SlimmerPipeline pipeline = methods[mi] == Backend::svd_wiener
                                                     ? pipelines[mi].with_svd_noise_power(mu)
                                                     : pipelines[mi];
                std::vector<char> detected(realizations, 0), failed(realizations, 0);
                parallel_for(realizations, setup.workers, [&](std::size_t r) {
                    try {
                        const auto est = pipeline.run(pixels[r], cell | r);
                        detected[r] = detection_criterion(est, truth, tol) ? 1 : 0;
                    } catch (const Error&) {
                        failed[r] = 1;
                    }
                });

                DetectionResult res;
                res.kappa = kappas[ki];
                res.snr_db = snrs_db[si];
                res.method = methods[mi];
                res.realizations = realizations;
                res.detections = static_cast<std::size_t>(std::count(detected.begin(), detected.end(), 1));
                res.failures = static_cast<std::size_t>(std::count(failed.begin(), failed.end(), 1));
                res.p_d = static_cast<double>(res.detections) / static_cast<double>(realizations);
                std::tie(res.ci_low, res.ci_high) = wilson_interval(res.detections, realizations);
                results.push_back(res);
            }
        }
    }
    return results;
}

AcquisitionGeometry reference_geometry(std::size_t acquisitions, std::uint64_t seed) {
    if (acquisitions < 2) throw InvalidGeometry("at least two acquisitions are required");
    constexpr double wavelength = 0.031;
    constexpr double half_aperture = 269.5 / 2.0;
    constexpr double lambda_range = 10914.75;
    constexpr double revisit_years = 11.0 / 365.25;

    RandomStream rng(seed, acquisitions, StreamDomain::geometry);
    std::vector<double> baselines(acquisitions), times(acquisitions);
    for (std::size_t n = 0; n < acquisitions; ++n) {
        if (n == 0) {
            baselines[n] = -half_aperture;
        } else if (n == 1) {
            baselines[n] = half_aperture;
        } else {
            baselines[n] = -half_aperture + 2.0 * half_aperture * rng.uniform();
        }
        times[n] = (static_cast<double>(n) - static_cast<double>(acquisitions / 2)) * revisit_years;
    }
    return AcquisitionGeometry(std::move(baselines), std::move(times), wavelength, lambda_range / wavelength);
}

ParameterGrid reference_grid(double rho_s, std::size_t count, double samples_per_resolution) {
    if (!(rho_s > 0.0) || !(samples_per_resolution > 0.0)) throw DomainError("grid spacing must be positive");
    const double step = rho_s / samples_per_resolution;
    return ParameterGrid(UniformAxis{-static_cast<double>(count / 2) * step, step, count});
}

} // namespace tomosar
