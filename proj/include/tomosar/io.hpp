#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tomosar/model.hpp"
#include "tomosar/simulate.hpp"
#include "tomosar/slimmer.hpp"
#include "tomosar/solver.hpp"

namespace tomosar::io {

using Json = nlohmann::ordered_json;

// Parses JSON text; syntax errors become FormatError with a 1-based line and column.
Json parse_json(std::string_view text, std::string_view source = "<input>");
Json read_json_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);

// All *_from_json readers reject unknown keys and wrong types with FormatError
// naming the offending JSON path. Semantic range checks throw the library's
// own errors (ConfigError, InvalidGeometry).

// {"baselines_m", "times_yr", "wavelength_m", "range_m"}, or
// {"reference": {"acquisitions": N, "seed": s}} for the built-in simulation stack.
AcquisitionGeometry geometry_from_json(const Json& j);
Json to_json(const AcquisitionGeometry& geom);

// {"elevation": {"start_m", "step_m", "count"},
//  "motion": [{"base": "linear"|"seasonal", "start", "step", "count"}, ...]}
ParameterGrid grid_from_json(const Json& j);
Json to_json(const ParameterGrid& grid);

SolverConfig solver_config_from_json(const Json& j);
Json to_json(const SolverConfig& cfg);
// Every SolverConfig key with type, default and meaning.
Json solver_config_schema();

// {"backend", "k_max", "svd_noise_power", "support_floor", "solver": {...}}
SlimmerConfig slimmer_config_from_json(const Json& j);
Json to_json(const SlimmerConfig& cfg);

// {"geometry", "base_functions", "scatterers": [{"elevation_m", "motion",
//  "amplitude", "phase_rad", "snr_db"}], "noise_variance", "realizations", "seed"}
Scenario scenario_from_json(const Json& j);
Json to_json(const Scenario& scenario);

// ---- stack files ----

inline constexpr std::string_view kStackMagic = "TSTK1";
inline constexpr int kStackVersion = 1;
// Header lines longer than this are rejected before parsing.
inline constexpr std::size_t kMaxStackHeader = std::size_t{1} << 24;

struct StackHeader {
    std::size_t acquisitions = 0;
    std::size_t pixel_count = 0;
    // Geometry the stack was acquired with, if recorded.
    std::optional<Json> geometry;
};

// Pixel-major float32 (re, im) samples, little-endian on disk.
struct Stack {
    StackHeader header;
    std::vector<float> samples;

    ComplexVector pixel(std::size_t index) const;
};

void write_stack(std::ostream& out, const StackHeader& header, std::span<const float> samples);
void write_stack(const std::filesystem::path& path, const StackHeader& header, std::span<const float> samples);
Stack read_stack(std::istream& in);
Stack read_stack(const std::filesystem::path& path);

// Rounds pixels to float32 in stack order.
std::vector<float> pack_pixels(std::span<const ComplexVector> pixels);

// ---- estimates and results ----

enum class PixelStatus { ok, failed };

struct PixelResult {
    std::size_t pixel_id = 0;
    PixelStatus status = PixelStatus::ok;
    ScattererEstimates estimates;
    // Failure category and message when status == failed.
    std::string error_kind;
    std::string error_message;
};

// One JSON object per line.
std::string estimates_jsonl_line(const PixelResult& r);
// Header "pixel_id,k,elevation_m,p1,p2,amp_re,amp_im"; one row per scatterer,
// k counting from 0 within the pixel. Failed pixels produce no rows.
std::string estimates_csv_header();
std::string estimates_csv_rows(const PixelResult& r);

// Header "kappa,snr_db,method,p_d,ci_low,ci_high,n".
std::string detection_csv(std::span<const DetectionResult> results);

// Shortest round-trip decimal form, '.' separator, locale independent.
std::string format_double(double v);

// ---- manifests ----

std::string sha256_file(const std::filesystem::path& path);
std::string sha256_bytes(std::string_view bytes);

struct FileDigest {
    std::string path;
    std::string sha256;
};

struct RunManifest {
    std::string command;
    std::string code_version;
    std::uint64_t seed = 0;
    Json config;
    std::vector<FileDigest> inputs;
    std::vector<FileDigest> outputs;
    std::string started_at;
    std::string finished_at;
};

Json to_json(const RunManifest& m);
RunManifest manifest_from_json(const Json& j);
FileDigest digest_file(const std::filesystem::path& path);

// Manifest path for an output file: "<out>.manifest.json".
std::filesystem::path manifest_path(const std::filesystem::path& output);

struct DigestMismatch {
    std::string path;
    std::string expected;
    // Empty when the file is missing.
    std::string actual;
};

// Recomputes every recorded digest. Relative paths resolve against base_dir.
std::vector<DigestMismatch> verify_manifest(const RunManifest& m, const std::filesystem::path& base_dir);

// UTC, "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_timestamp();

std::string_view code_version() noexcept;

} // namespace tomosar::io
