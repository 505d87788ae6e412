#include "tomosar/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>

#include "tomosar/error.hpp"
#include "tomosar/parallel.hpp"

namespace tomosar::cli {

namespace {

using io::Json;
namespace fs = std::filesystem;

std::string failure_kind(const std::exception& e) {
    if (dynamic_cast<const LineSearchFailure*>(&e)) return "line_search";
    if (dynamic_cast<const NumericalError*>(&e)) return "numerical";
    if (dynamic_cast<const EstimationError*>(&e)) return "estimation";
    if (dynamic_cast<const DimensionMismatch*>(&e)) return "dimension";
    return "error";
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot create '" + path.string() + "'");
    return out;
}

void write_text(const fs::path& path, std::string_view text) {
    auto out = open_output(path);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

struct ManifestScope {
    io::RunManifest manifest;

    ManifestScope(std::string command, std::uint64_t seed, Json config) {
        manifest.command = std::move(command);
        manifest.code_version = std::string(io::code_version());
        manifest.seed = seed;
        manifest.config = std::move(config);
        manifest.started_at = io::utc_timestamp();
    }

    void input(const fs::path& p) { manifest.inputs.push_back(io::digest_file(p)); }

    // Finalizes after the outputs are closed; the manifest sits next to the first output.
    void finish(const std::vector<fs::path>& outputs) {
        for (const auto& p : outputs) manifest.outputs.push_back(io::digest_file(p));
        manifest.finished_at = io::utc_timestamp();
        write_text(io::manifest_path(outputs.front()), io::to_json(manifest).dump(2) + "\n");
    }
};

double median(std::vector<double> v) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::vector<Backend> parse_backends(const std::vector<std::string>& names) {
    std::vector<Backend> out;
    for (const auto& n : names) out.push_back(parse_backend(n));
    return out;
}

Json backend_names(const std::vector<Backend>& list) {
    Json a = Json::array();
    for (auto b : list) a.push_back(std::string(to_string(b)));
    return a;
}

// Strict key check for the small top-level job objects.
void reject_unknown(const Json& j, std::string_view where, std::initializer_list<std::string_view> keys) {
    if (!j.is_object()) throw FormatError(std::string(where) + ": expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(keys.begin(), keys.end(), it.key()) == keys.end()) {
            throw FormatError(std::string(where) + ": unknown key '" + it.key() + "'");
        }
    }
}

template <class T>
T get_as(const Json& j, std::string_view key, std::string_view where) {
    try {
        return j.at(std::string(key)).get<T>();
    } catch (const Json::exception&) {
        throw FormatError(std::string(where) + "." + std::string(key) + ": missing or of the wrong type");
    }
}

std::size_t get_count(const Json& j, std::string_view key, std::string_view where) {
    const Json& v = j.at(std::string(key));
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
        throw FormatError(std::string(where) + "." + std::string(key) + ": expected a nonnegative integer");
    }
    return v.get<std::size_t>();
}

ParameterGrid bench_grid(const std::vector<std::size_t>& shape, double rho) {
    if (shape.empty() || shape.size() > 3) throw ConfigError("bench grids need 1 to 3 axis lengths");
    const double step = rho / 10.0;
    const UniformAxis elevation{-static_cast<double>(shape[0] / 2) * step, step, shape[0]};
    std::vector<MotionAxis> motion;
    // Linear rate in m/yr, seasonal amplitude in m.
    constexpr double motion_step = 0.002;
    const BaseFunction bases[] = {BaseFunction::linear, BaseFunction::seasonal};
    for (std::size_t m = 1; m < shape.size(); ++m) {
        motion.push_back(MotionAxis{
            bases[m - 1], UniformAxis{-static_cast<double>(shape[m] / 2) * motion_step, motion_step, shape[m]}});
    }
    return ParameterGrid(elevation, std::move(motion));
}

} // namespace

int exit_code_for(const std::exception& e) noexcept {
    if (dynamic_cast<const FormatError*>(&e) || dynamic_cast<const ConfigError*>(&e) ||
        dynamic_cast<const InvalidGeometry*>(&e) || dynamic_cast<const CapacityError*>(&e) ||
        dynamic_cast<const DomainError*>(&e)) {
        return kExitFormat;
    }
    if (dynamic_cast<const ConsistencyError*>(&e) || dynamic_cast<const DimensionMismatch*>(&e)) {
        return kExitConsistency;
    }
    if (dynamic_cast<const NumericalError*>(&e) || dynamic_cast<const LineSearchFailure*>(&e) ||
        dynamic_cast<const EstimationError*>(&e)) {
        return kExitNumerical;
    }
    return kExitFailure;
}

// ---- simulate ----

void cmd_simulate(const Scenario& scenario, const fs::path& out) {
    scenario.validate();
    std::vector<ComplexVector> pixels;
    pixels.reserve(scenario.realizations);
    for (std::size_t i = 0; i < scenario.realizations; ++i) pixels.push_back(synthesize_pixel(scenario, i));
    io::StackHeader header{scenario.geometry.size(), scenario.realizations, io::to_json(scenario.geometry)};
    io::write_stack(out, header, io::pack_pixels(pixels));
}

// ---- solve ----

SolveJob solve_job_from_json(const Json& j) {
    reject_unknown(j, "solve", {"grid", "pipeline", "geometry"});
    if (!j.contains("grid")) throw FormatError("solve: missing required key 'grid'");
    SolveJob job{io::grid_from_json(j["grid"]), {}, std::nullopt};
    if (j.contains("pipeline")) job.pipeline = io::slimmer_config_from_json(j["pipeline"]);
    if (j.contains("geometry")) job.geometry = io::geometry_from_json(j["geometry"]);
    return job;
}

Json to_json(const SolveJob& job) {
    Json j;
    j["grid"] = io::to_json(job.grid);
    j["pipeline"] = io::to_json(job.pipeline);
    if (job.geometry) j["geometry"] = io::to_json(*job.geometry);
    return j;
}

SolveSummary cmd_solve(const io::Stack& stack, const SolveJob& job, std::size_t workers, std::ostream& jsonl,
                       std::ostream* csv) {
    if (csv) *csv << io::estimates_csv_header();
    SolveSummary summary;
    const std::size_t count = stack.header.pixel_count;
    if (count == 0) return summary;

    std::optional<AcquisitionGeometry> geom = job.geometry;
    if (!geom && stack.header.geometry) geom = io::geometry_from_json(*stack.header.geometry);
    if (!geom) throw FormatError("no geometry: the stack header has none and none was given");
    if (geom->size() != stack.header.acquisitions) {
        throw ConsistencyError("stack has N = " + std::to_string(stack.header.acquisitions) +
                               " samples per pixel but the geometry has " + std::to_string(geom->size()));
    }

    const SlimmerPipeline pipeline(build_steering_matrix(*geom, job.grid), job.pipeline);
    const std::size_t chunk = std::max<std::size_t>(64, 16 * workers);
    std::vector<io::PixelResult> results;
    for (std::size_t begin = 0; begin < count; begin += chunk) {
        const std::size_t n = std::min(chunk, count - begin);
        results.assign(n, io::PixelResult{});
        parallel_for(n, workers, [&](std::size_t i) {
            auto& r = results[i];
            r.pixel_id = begin + i;
            try {
                r.estimates = pipeline.run(stack.pixel(r.pixel_id), r.pixel_id);
            } catch (const Error& e) {
                r.status = io::PixelStatus::failed;
                r.error_kind = failure_kind(e);
                r.error_message = e.what();
            }
        });
        for (const auto& r : results) {
            jsonl << io::estimates_jsonl_line(r);
            if (csv) *csv << io::estimates_csv_rows(r);
            if (r.status == io::PixelStatus::failed) ++summary.failed;
        }
        summary.pixels += n;
    }
    return summary;
}

// ---- montecarlo ----

MonteCarloJob montecarlo_job_from_json(const Json& j) {
    static constexpr std::string_view where = "montecarlo";
    reject_unknown(j, where,
                   {"geometry", "grid", "kappas", "snrs_db", "methods", "realizations", "delta_phi_rad",
                    "kappa_unit", "match_tol_m", "reference_elevation_m", "pipeline", "seed", "workers"});
    if (!j.contains("geometry")) throw FormatError("montecarlo: missing required key 'geometry'");
    AcquisitionGeometry geom = io::geometry_from_json(j["geometry"]);
    const double rho = rayleigh_resolution(geom);
    ParameterGrid grid = j.contains("grid") ? io::grid_from_json(j["grid"]) : reference_grid(rho, 100, 10.0);

    MonteCarloJob job{MonteCarloSetup{Scenario{geom, grid.base_functions(), {}, std::nullopt, 1, 0}, grid, {}}};
    job.kappas = get_as<std::vector<double>>(j, "kappas", where);
    job.snrs_db = get_as<std::vector<double>>(j, "snrs_db", where);
    job.methods = parse_backends(j.contains("methods") ? get_as<std::vector<std::string>>(j, "methods", where)
                                                       : std::vector<std::string>{"svd_wiener", "rbpg"});
    if (j.contains("realizations")) job.realizations = get_count(j, "realizations", where);
    if (j.contains("delta_phi_rad")) job.setup.delta_phi = get_as<double>(j, "delta_phi_rad", where);
    if (j.contains("reference_elevation_m")) {
        job.setup.reference_elevation = get_as<double>(j, "reference_elevation_m", where);
    }
    if (j.contains("match_tol_m")) job.setup.match_tol = get_as<double>(j, "match_tol_m", where);
    if (j.contains("workers")) job.setup.workers = std::max<std::size_t>(1, get_count(j, "workers", where));
    if (j.contains("pipeline")) job.setup.pipeline = io::slimmer_config_from_json(j["pipeline"]);
    if (j.contains("seed")) {
        job.setup.base.seed = get_count(j, "seed", where);
        job.setup.pipeline.solver.seed = job.setup.base.seed;
    }
    if (j.contains("kappa_unit")) {
        const Json& u = j["kappa_unit"];
        if (u.is_number()) {
            job.setup.kappa_unit = u.get<double>();
            job.kappa_unit_name = "meters";
        } else if (u == "fourier") {
            job.setup.kappa_unit = fourier_resolution(geom);
            job.kappa_unit_name = "fourier";
        } else if (u != "rayleigh") {
            throw FormatError("montecarlo.kappa_unit: expected \"rayleigh\", \"fourier\" or a length in meters");
        }
    }
    return job;
}

Json to_json(const MonteCarloJob& job) {
    const auto& s = job.setup;
    Json j;
    j["geometry"] = io::to_json(s.base.geometry);
    j["grid"] = io::to_json(s.grid);
    j["kappas"] = job.kappas;
    j["snrs_db"] = job.snrs_db;
    j["methods"] = backend_names(job.methods);
    j["realizations"] = job.realizations;
    j["delta_phi_rad"] = s.delta_phi;
    if (job.kappa_unit_name == "meters") {
        j["kappa_unit"] = s.kappa_unit.value_or(rayleigh_resolution(s.base.geometry));
    } else {
        j["kappa_unit"] = job.kappa_unit_name;
    }
    if (s.match_tol) j["match_tol_m"] = *s.match_tol;
    j["reference_elevation_m"] = s.reference_elevation;
    j["pipeline"] = io::to_json(s.pipeline);
    j["seed"] = s.base.seed;
    return j;
}

std::vector<DetectionResult> cmd_montecarlo(const MonteCarloJob& job) {
    return monte_carlo_detection(job.setup, job.kappas, job.snrs_db, job.methods, job.realizations);
}

// ---- bench ----

SolverConfig BenchJob::bench_solver_defaults() {
    SolverConfig c;
    c.tol = 1e-8;
    return c;
}

BenchJob bench_job_from_json(const Json& j) {
    static constexpr std::string_view where = "bench";
    reject_unknown(j, where,
                   {"acquisitions", "grids", "solvers", "repetitions", "snr_db", "solver", "extrapolate_to", "seed"});
    BenchJob job;
    if (j.contains("acquisitions")) job.acquisitions = get_as<std::vector<std::size_t>>(j, "acquisitions", where);
    if (j.contains("grids")) job.grids = get_as<std::vector<std::vector<std::size_t>>>(j, "grids", where);
    if (j.contains("solvers")) job.solvers = parse_backends(get_as<std::vector<std::string>>(j, "solvers", where));
    if (j.contains("repetitions")) job.repetitions = get_count(j, "repetitions", where);
    if (j.contains("snr_db")) job.snr_db = get_as<double>(j, "snr_db", where);
    if (j.contains("solver")) {
        // Bench defaults apply underneath the given keys.
        Json merged = io::to_json(BenchJob::bench_solver_defaults());
        if (!j["solver"].is_object()) throw FormatError("bench.solver: expected a JSON object");
        for (auto it = j["solver"].begin(); it != j["solver"].end(); ++it) merged[it.key()] = it.value();
        job.solver = io::solver_config_from_json(merged);
    }
    if (j.contains("extrapolate_to")) job.extrapolate_to = get_as<double>(j, "extrapolate_to", where);
    if (j.contains("seed")) job.seed = get_count(j, "seed", where);

    if (job.repetitions < 5) throw ConfigError("bench needs at least 5 repetitions for stable medians");
    for (auto b : job.solvers) {
        if (b == Backend::svd_wiener) throw ConfigError("bench times the iterative solvers only");
    }
    for (auto n : job.acquisitions) {
        if (n < 2) throw ConfigError("bench acquisitions must be >= 2");
    }
    return job;
}

Json to_json(const BenchJob& job) {
    Json j;
    j["acquisitions"] = job.acquisitions;
    j["grids"] = job.grids;
    j["solvers"] = backend_names(job.solvers);
    j["repetitions"] = job.repetitions;
    j["snr_db"] = job.snr_db;
    j["solver"] = io::to_json(job.solver);
    j["extrapolate_to"] = job.extrapolate_to;
    j["seed"] = job.seed;
    return j;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw DomainError("slope needs at least two paired points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw DomainError("log-log slope needs positive data");
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    if (sxx == 0.0) throw DomainError("slope needs distinct x values");
    return sxy / sxx;
}

Json cmd_bench(const BenchJob& job) {
    using Clock = std::chrono::steady_clock;
    Json rows = Json::array();
    Json scaling = Json::array();

    for (std::size_t n : job.acquisitions) {
        const AcquisitionGeometry geom = reference_geometry(n, 2024);
        const double rho = rayleigh_resolution(geom);
        std::vector<std::vector<double>> sizes(job.solvers.size()), times(job.solvers.size()),
            iterations(job.solvers.size());

        for (const auto& shape : job.grids) {
            const ParameterGrid grid = bench_grid(shape, rho);
            const SteeringMatrix steering = build_steering_matrix(geom, grid);

            // Two on-grid scatterers 0.8 rho_s apart, the second one moving.
            const std::size_t e0 = shape[0] / 2, e1 = std::min(shape[0] - 1, e0 + 8);
            std::vector<std::size_t> m0(shape.size(), 0), m1(shape.size(), 0);
            m0[0] = e0;
            m1[0] = e1;
            for (std::size_t a = 1; a < shape.size(); ++a) {
                m0[a] = shape[a] / 2;
                m1[a] = std::min(shape[a] - 1, shape[a] / 2 + 1);
            }
            const std::size_t f0 = grid.flatten(m0), f1 = grid.flatten(m1);
            Scenario truth{geom, grid.base_functions(), {}, std::nullopt, 1, job.seed};
            truth.scatterers = {Scatterer{grid.elevation_at(f0), grid.motion_at(f0), 1.0, 0.0, job.snr_db},
                                Scatterer{grid.elevation_at(f1), grid.motion_at(f1), 1.0, 0.0, job.snr_db}};

            for (std::size_t si = 0; si < job.solvers.size(); ++si) {
                const Backend solver = job.solvers[si];
                const auto setup_start = Clock::now();
                BlockPartition partition;
                double lipschitz = 0.0;
                if (solver == Backend::rbpg) {
                    partition = block_partition(grid.flat_size(), job.solver.num_blocks, steering.matrix());
                } else {
                    lipschitz = lipschitz_constant(steering.matrix());
                }
                const double setup_seconds = std::chrono::duration<double>(Clock::now() - setup_start).count();

                std::vector<double> rep_time, rep_iters;
                std::size_t converged = 0;
                for (std::size_t rep = 0; rep < job.repetitions; ++rep) {
                    const ComplexVector g = synthesize_pixel(truth, rep);
                    const Objective obj(steering.shared(), g, resolve_lambda(steering.matrix(), g, job.solver));
                    SolverConfig cfg = job.solver;
                    cfg.seed = derive_seed(job.seed, rep);
                    const auto start = Clock::now();
                    Solution sol;
                    switch (solver) {
                    case Backend::rbpg: sol = rbpg_solve(obj, cfg, partition); break;
                    case Backend::ista: sol = ista_solve(obj, cfg, lipschitz); break;
                    case Backend::fista: sol = fista_solve(obj, cfg, lipschitz); break;
                    case Backend::svd_wiener: break;
                    }
                    rep_time.push_back(std::chrono::duration<double>(Clock::now() - start).count());
                    rep_iters.push_back(static_cast<double>(sol.iterations_used));
                    if (sol.status == SolveStatus::converged) ++converged;
                }

                const double t = median(rep_time), it = median(rep_iters);
                Json row;
                row["N"] = n;
                row["L"] = grid.flat_size();
                row["grid"] = shape;
                row["solver"] = std::string(to_string(solver));
                row["median_seconds"] = t;
                row["median_iterations"] = it;
                row["median_seconds_per_iteration"] = it > 0 ? t / it : 0.0;
                row["converged"] = converged;
                row["repetitions"] = job.repetitions;
                row["setup_seconds"] = setup_seconds;
                rows.push_back(std::move(row));

                sizes[si].push_back(static_cast<double>(grid.flat_size()));
                times[si].push_back(t);
                iterations[si].push_back(std::max(it, 1.0));
            }
        }

        for (std::size_t si = 0; si < job.solvers.size(); ++si) {
            Json s;
            s["N"] = n;
            s["solver"] = std::string(to_string(job.solvers[si]));
            const auto& x = sizes[si];
            const bool fit = x.size() >= 2 && std::adjacent_find(x.begin(), x.end()) == x.end();
            if (fit) {
                const double ts = loglog_slope(x, times[si]);
                s["time_slope_vs_L"] = ts;
                s["iteration_slope_vs_L"] = loglog_slope(x, iterations[si]);
                // Power-law extrapolation from the largest measured grid.
                const auto big = static_cast<std::size_t>(std::max_element(x.begin(), x.end()) - x.begin());
                s["extrapolated_L"] = job.extrapolate_to;
                s["extrapolated_seconds_per_pixel"] = times[si][big] * std::pow(job.extrapolate_to / x[big], ts);
            } else {
                s["time_slope_vs_L"] = nullptr;
                s["iteration_slope_vs_L"] = nullptr;
            }
            scaling.push_back(std::move(s));
        }
    }

    Json report;
    report["config"] = to_json(job);
    report["results"] = std::move(rows);
    report["scaling"] = std::move(scaling);
    report["notes"] = "Wall-clock seconds of the solve alone; setup (block Lipschitz constants or global "
                      "Lipschitz constant) is reported separately. Slopes are least-squares fits of log(median) "
                      "against log(L). No SOCP column: the second-order solver is not part of this tool.";
    return report;
}

// ---- entry point ----

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sparse TomoSAR inversion: simulation, per-pixel SL1MMER solving, Monte Carlo detection rates "
                 "and solver benchmarks."};
    app.require_subcommand(1);
    app.fallthrough();

    std::optional<std::uint64_t> seed;
    std::size_t workers = 1;
    std::string config_path;
    app.add_option("--seed", seed, "Seed overriding the config's seed");
    app.add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--config", config_path, "JSON configuration for the subcommand");

    std::string out_path, csv_path, stack_path, geometry_path, manifest_file;

    auto* simulate = app.add_subcommand("simulate", "Synthesize a stack from a scenario (--config scenario.json)");
    simulate->add_option("--out", out_path, "Output stack file")->required();

    auto* solve = app.add_subcommand("solve", "Run SL1MMER on every pixel of a stack (--config solve.json)");
    solve->add_option("--stack", stack_path, "Input TSTK1 stack")->required();
    solve->add_option("--geometry", geometry_path, "Geometry JSON overriding the stack header");
    solve->add_option("--out", out_path, "JSON-lines estimates")->required();
    solve->add_option("--csv", csv_path, "Optional point-cloud CSV");

    auto* montecarlo = app.add_subcommand("montecarlo", "Detection-rate Monte Carlo (--config mc.json)");
    montecarlo->add_option("--out", out_path, "CSV of detection rates")->required();

    auto* bench = app.add_subcommand("bench", "Time rbpg/ista/fista across instance sizes (--config bench.json)");
    bench->add_option("--out", out_path, "JSON timing report")->required();

    auto* verify = app.add_subcommand("verify", "Recompute the digests recorded in a manifest");
    verify->add_option("manifest", manifest_file, "Manifest JSON")->required();

    auto* schema = app.add_subcommand("schema", "Print the solver configuration schema with defaults");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitFormat;
    }

    const auto load_config = [&]() -> Json {
        if (config_path.empty()) throw FormatError("this subcommand needs --config");
        return io::read_json_file(config_path);
    };

    try {
        if (*schema) {
            out << io::solver_config_schema().dump(2) << '\n';
            return kExitOk;
        }

        if (*verify) {
            const auto manifest = io::manifest_from_json(io::read_json_file(manifest_file));
            const auto bad = io::verify_manifest(manifest, fs::current_path());
            for (const auto& b : bad) {
                err << "digest mismatch: " << b.path << " expected " << b.expected << " got "
                    << (b.actual.empty() ? std::string("<missing>") : b.actual) << '\n';
            }
            if (!bad.empty()) return kExitConsistency;
            out << "ok: " << manifest.inputs.size() + manifest.outputs.size() << " files verified\n";
            return kExitOk;
        }

        if (*simulate) {
            Scenario scenario = io::scenario_from_json(load_config());
            if (seed) scenario.seed = *seed;
            ManifestScope m("simulate", scenario.seed, io::to_json(scenario));
            m.input(config_path);
            cmd_simulate(scenario, out_path);
            m.finish({out_path});
            return kExitOk;
        }

        if (*solve) {
            SolveJob job = solve_job_from_json(load_config());
            if (!geometry_path.empty()) job.geometry = io::geometry_from_json(io::read_json_file(geometry_path));
            if (seed) job.pipeline.solver.seed = *seed;
            ManifestScope m("solve", job.pipeline.solver.seed, to_json(job));
            m.manifest.config["workers"] = workers;
            m.input(config_path);
            m.input(stack_path);
            if (!geometry_path.empty()) m.input(geometry_path);

            const io::Stack stack = io::read_stack(fs::path(stack_path));
            std::vector<fs::path> outputs{out_path};
            SolveSummary summary;
            {
                auto jsonl = open_output(out_path);
                std::optional<std::ofstream> csv;
                if (!csv_path.empty()) {
                    csv = open_output(csv_path);
                    outputs.emplace_back(csv_path);
                }
                summary = cmd_solve(stack, job, workers, jsonl, csv ? &*csv : nullptr);
                if (!jsonl || (csv && !*csv)) throw Error("failed writing solve outputs");
            }
            m.manifest.config["failed_pixels"] = summary.failed;
            m.finish(outputs);
            if (summary.failed > 0) err << summary.failed << " of " << summary.pixels << " pixels failed\n";
            return kExitOk;
        }

        if (*montecarlo) {
            MonteCarloJob job = montecarlo_job_from_json(load_config());
            if (seed) {
                job.setup.base.seed = *seed;
                job.setup.pipeline.solver.seed = *seed;
            }
            if (app.count("--workers") > 0) job.setup.workers = workers;
            ManifestScope m("montecarlo", job.setup.base.seed, to_json(job));
            m.input(config_path);
            const auto results = cmd_montecarlo(job);
            write_text(out_path, io::detection_csv(results));
            std::size_t failures = 0;
            for (const auto& r : results) failures += r.failures;
            m.manifest.config["pipeline_failures"] = failures;
            m.finish({out_path});
            return kExitOk;
        }

        if (*bench) {
            BenchJob job = config_path.empty() ? BenchJob{} : bench_job_from_json(load_config());
            if (seed) job.seed = *seed;
            ManifestScope m("bench", job.seed, to_json(job));
            if (!config_path.empty()) m.input(config_path);
            write_text(out_path, cmd_bench(job).dump(2) + "\n");
            m.finish({out_path});
            return kExitOk;
        }
    } catch (const FormatError& e) {
        err << "format error: " << e.what() << '\n';
        return kExitFormat;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
    return kExitFailure;
}

} // namespace tomosar::cli
