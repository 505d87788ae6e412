#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tomosar/io.hpp"
#include "tomosar/simulate.hpp"
#include "tomosar/slimmer.hpp"

namespace tomosar::cli {

// Process exit codes; a stable contract for scripts.
enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitFormat = 2,
    kExitConsistency = 3,
    kExitNumerical = 4,
};

int exit_code_for(const std::exception& e) noexcept;

// ---- simulate ----

// Writes scenario.realizations pixels to `out`, pixel i drawing its noise from
// substream (scenario.seed, i).
void cmd_simulate(const Scenario& scenario, const std::filesystem::path& out);

// ---- solve ----

struct SolveJob {
    ParameterGrid grid;
    SlimmerConfig pipeline;
    // Overrides the geometry recorded in the stack header.
    std::optional<AcquisitionGeometry> geometry;
};

// {"grid": {...}, "pipeline": {...}, "geometry": {...}?}
SolveJob solve_job_from_json(const io::Json& j);
io::Json to_json(const SolveJob& job);

struct SolveSummary {
    std::size_t pixels = 0;
    std::size_t failed = 0;
};

// Runs the pipeline on every pixel with `workers` threads. Output bytes do not
// depend on the worker count: pixel i uses solver substream i and lines are
// written in pixel order. Per-pixel failures are recorded in the output.
SolveSummary cmd_solve(const io::Stack& stack, const SolveJob& job, std::size_t workers, std::ostream& jsonl,
                       std::ostream* csv = nullptr);

// ---- montecarlo ----

struct MonteCarloJob {
    MonteCarloSetup setup;
    std::vector<double> kappas{};
    std::vector<double> snrs_db{};
    std::vector<Backend> methods{};
    std::size_t realizations = 500;
    // How kappa_unit was given, for the manifest: "rayleigh", "fourier" or "meters".
    std::string kappa_unit_name = "rayleigh";
};

// {"geometry", "grid"?, "kappas", "snrs_db", "methods", "realizations",
//  "delta_phi_rad", "kappa_unit": "rayleigh"|"fourier"|meters, "match_tol_m",
//  "reference_elevation_m", "pipeline", "seed"}
MonteCarloJob montecarlo_job_from_json(const io::Json& j);
io::Json to_json(const MonteCarloJob& job);

std::vector<DetectionResult> cmd_montecarlo(const MonteCarloJob& job);

// ---- bench ----

struct BenchJob {
    std::vector<std::size_t> acquisitions{20, 50, 100};
    // Axis lengths per grid: {elevation}, {elevation, linear} or {elevation, linear, seasonal}.
    std::vector<std::vector<std::size_t>> grids{{100}, {100, 10}, {100, 10, 10}};
    std::vector<Backend> solvers{Backend::rbpg, Backend::ista, Backend::fista};
    std::size_t repetitions = 5;
    double snr_db = 10.0;
    SolverConfig solver = bench_solver_defaults();
    // Grid size used for the extrapolated per-pixel cost.
    double extrapolate_to = 1e6;
    std::uint64_t seed = 0;

    static SolverConfig bench_solver_defaults();
};

BenchJob bench_job_from_json(const io::Json& j);
io::Json to_json(const BenchJob& job);

// Timing report: per (N, L, solver) medians of wall time and iterations, and
// per (N, solver) log-log slopes of time and iterations against L.
io::Json cmd_bench(const BenchJob& job);

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// ---- entry point ----

// Parses argv, runs one subcommand, writes outputs plus a manifest, and maps
// exceptions to exit codes. Diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace tomosar::cli
