#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <cstring>
#include <sstream>

#include "support.hpp"
#include "tomosar/error.hpp"
#include "tomosar/io.hpp"

using namespace tomosar;
using io::Json;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const char* name) {
    const fs::path dir = fs::temp_directory_path() / ("tomosar_io_" + std::string(name));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_SUITE("io") {

TEST_CASE("json syntax errors carry line and column") {
    try {
        io::parse_json("{\n  \"a\": 1,\n  }\n", "cfg.json");
        FAIL("expected a FormatError");
    } catch (const FormatError& e) {
        CHECK(e.line() == 3);
        CHECK(e.column() == 3);
        CHECK(std::string(e.what()).rfind("cfg.json:3:3", 0) == 0);
    }
    CHECK_THROWS_AS(io::read_json_file("/nonexistent/tomosar.json"), FormatError);
}

TEST_CASE("geometry json") {
    const Json j = io::parse_json(
        R"({"baselines_m": [-10, 0, 25], "times_yr": [0, 0.1, 0.2], "wavelength_m": 0.031, "range_m": 7e5})");
    const AcquisitionGeometry g = io::geometry_from_json(j);
    CHECK(g.size() == 3);
    CHECK(g.aperture() == doctest::Approx(35.0));
    const AcquisitionGeometry back = io::geometry_from_json(io::to_json(g));
    CHECK(std::equal(back.baselines().begin(), back.baselines().end(), g.baselines().begin()));

    const AcquisitionGeometry ref = io::geometry_from_json(io::parse_json(R"({"reference": {"seed": 7}})"));
    CHECK(ref.size() == 29);
    CHECK(ref.aperture() == doctest::Approx(269.5));

    CHECK_THROWS_AS(io::geometry_from_json(io::parse_json(R"({"baselines_m": [0, 1], "times_yr": [0, 1],
        "wavelength_m": 0.031, "range_m": 7e5, "extra": 1})")),
                    FormatError);
    CHECK_THROWS_AS(io::geometry_from_json(io::parse_json(R"({"baselines_m": [0, 1], "times_yr": [0, 1],
        "wavelength_m": "x", "range_m": 7e5})")),
                    FormatError);
    CHECK_THROWS_AS(io::geometry_from_json(io::parse_json(R"({"baselines_m": [0, 0], "times_yr": [0, 1],
        "wavelength_m": 0.031, "range_m": 7e5})")),
                    InvalidGeometry);
}

TEST_CASE("grid json") {
    const Json j = io::parse_json(R"({"elevation": {"start_m": -20, "step_m": 4, "count": 11},
        "motion": [{"base": "linear", "start": -0.01, "step": 0.002, "count": 11},
                   {"base": "seasonal", "start": 0, "step": 0.001, "count": 3}]})");
    const ParameterGrid g = io::grid_from_json(j);
    CHECK(g.flat_size() == 11 * 11 * 3);
    CHECK(g.base_functions() == std::vector<BaseFunction>{BaseFunction::linear, BaseFunction::seasonal});
    CHECK(io::to_json(io::grid_from_json(io::to_json(g))) == io::to_json(g));
    CHECK_THROWS_AS(io::grid_from_json(io::parse_json(R"({"elevation": {"start_m": 0, "step_m": 1, "count": -3}})")),
                    FormatError);
    CHECK_THROWS_AS(io::grid_from_json(io::parse_json(
                        R"({"elevation": {"start_m": 0, "step_m": 1, "count": 3}, "motion": [{"base": "cubic",
                        "start": 0, "step": 1, "count": 2}]})")),
                    ConfigError);
}

TEST_CASE("solver config json and schema") {
    SolverConfig c;
    c.lambda_reg = 0.25;
    c.num_blocks = 5;
    c.seed = 99;
    const SolverConfig back = io::solver_config_from_json(io::to_json(c));
    CHECK(back.lambda_reg == 0.25);
    CHECK(back.num_blocks == 5);
    CHECK(back.seed == 99);
    CHECK(io::to_json(back) == io::to_json(c));

    const SolverConfig partial = io::solver_config_from_json(io::parse_json(R"({"tol": 1e-6})"));
    CHECK(partial.tol == 1e-6);
    CHECK(partial.num_blocks == SolverConfig{}.num_blocks);
    CHECK_FALSE(partial.lambda_reg.has_value());

    CHECK_THROWS_AS(io::solver_config_from_json(io::parse_json(R"({"tolerance": 1e-6})")), FormatError);
    CHECK_THROWS_AS(io::solver_config_from_json(io::parse_json(R"({"step_shrink": 2})")), ConfigError);

    const Json schema = io::solver_config_schema();
    const Json defaults = io::to_json(SolverConfig{});
    REQUIRE(schema.contains("properties"));
    for (const auto& [key, value] : defaults.items()) {
        INFO(key);
        REQUIRE(schema["properties"].contains(key));
        CHECK(schema["properties"][key]["default"] == value);
        CHECK(schema["properties"][key]["description"].is_string());
    }
    CHECK(schema["properties"].size() == defaults.size());
}

TEST_CASE("scenario json") {
    const Json j = io::parse_json(R"({"geometry": {"reference": {}}, "base_functions": ["linear"],
        "scatterers": [{"elevation_m": 10, "motion": [0.002], "amplitude": 1, "phase_rad": 0.5, "snr_db": 10}],
        "realizations": 3, "seed": 8})");
    const Scenario s = io::scenario_from_json(j);
    CHECK(s.realizations == 3);
    CHECK(s.noise_power() == doctest::Approx(0.1));
    const Scenario back = io::scenario_from_json(io::to_json(s));
    CHECK(back.scatterers[0].motion == s.scatterers[0].motion);
    CHECK(io::to_json(back) == io::to_json(s));
    CHECK_THROWS_AS(io::scenario_from_json(io::parse_json(R"({"geometry": {"reference": {}},
        "scatterers": [{"elevation": 10}]})")),
                    FormatError);
}

TEST_CASE("stack round trip") {
    const AcquisitionGeometry geom = reference_geometry();
    const Scenario sc{geom, {}, {{3.0, {}, 1.0, 0.2, 10.0}}, std::nullopt, 1, 4};
    std::vector<ComplexVector> pixels;
    for (std::uint64_t i = 0; i < 1000; ++i) pixels.push_back(synthesize_pixel(sc, i));
    const std::vector<float> payload = io::pack_pixels(pixels);
    CHECK(payload.size() * sizeof(float) == 232000);

    const io::StackHeader header{29, 1000, io::to_json(geom)};
    std::stringstream buf;
    io::write_stack(buf, header, payload);
    const std::string bytes = buf.str();
    const std::size_t newline = bytes.find('\n');
    CHECK(bytes.size() - newline - 1 == 232000);
    const Json h = Json::parse(bytes.substr(0, newline));
    CHECK(h["magic"] == "TSTK1");
    CHECK(h["N"] == 29);
    CHECK(h["pixel_count"] == 1000);

    std::stringstream in(bytes);
    const io::Stack s = io::read_stack(in);
    CHECK(s.header.acquisitions == 29);
    CHECK(s.header.pixel_count == 1000);
    CHECK(s.samples == payload);
    for (std::size_t p : {0u, 517u, 999u}) {
        const ComplexVector g = s.pixel(p);
        for (Index n = 0; n < 29; ++n) {
            CHECK(g[n].real() == static_cast<double>(static_cast<float>(pixels[p][n].real())));
            CHECK(g[n].imag() == static_cast<double>(static_cast<float>(pixels[p][n].imag())));
        }
    }
    CHECK_THROWS_AS(s.pixel(1000), DomainError);

    // payload is little-endian float32
    float first;
    std::memcpy(&first, bytes.data() + newline + 1, 4);
    CHECK(first == payload[0]);
}

TEST_CASE("malformed stacks") {
    const std::vector<float> payload(2 * 3 * 2, 1.0f);
    std::stringstream good;
    io::write_stack(good, io::StackHeader{3, 2, std::nullopt}, payload);
    const std::string bytes = good.str();

    auto read = [](const std::string& b) {
        std::stringstream in(b);
        return io::read_stack(in);
    };
    CHECK_NOTHROW(read(bytes));
    CHECK_THROWS_AS(read(bytes.substr(0, bytes.size() - 1)), FormatError);
    CHECK_THROWS_AS(read(bytes + "x"), FormatError);
    std::string bad_magic = bytes;
    bad_magic.replace(bad_magic.find("TSTK1"), 5, "TSTK2");
    CHECK_THROWS_AS(read(bad_magic), FormatError);
    std::string bad_version = bytes;
    bad_version.replace(bad_version.find("\"version\":1"), 11, "\"version\":9");
    CHECK_THROWS_AS(read(bad_version), FormatError);
    CHECK_THROWS_AS(read("{\"magic\":\"TSTK1\""), FormatError);
    CHECK_THROWS_AS(read("not json\n"), FormatError);
    CHECK_THROWS_AS(read("{\"magic\":\"TSTK1\",\"version\":1,\"N\":4294967296,\"pixel_count\":4294967296}\n"),
                    CapacityError);
    CHECK_THROWS_AS(io::write_stack(good, io::StackHeader{3, 3, std::nullopt}, payload), DimensionMismatch);

    std::stringstream empty;
    io::write_stack(empty, io::StackHeader{29, 0, std::nullopt}, {});
    const io::Stack e = read(empty.str());
    CHECK(e.header.pixel_count == 0);
    CHECK(e.samples.empty());
}

TEST_CASE("estimate lines") {
    io::PixelResult r;
    r.pixel_id = 12;
    r.estimates.model_order = 2;
    r.estimates.elevations = {1.5, -20.25};
    r.estimates.motion_params = {{0.001}, {-0.002}};
    r.estimates.amplitudes = {{1.0, -0.5}, {0.25, 2.0}};
    r.estimates.selection_scores = {3.0, 1.0, 2.0};
    const Json j = Json::parse(io::estimates_jsonl_line(r));
    CHECK(j["pixel_id"] == 12);
    CHECK(j["status"] == "ok");
    CHECK(j["k"] == 2);
    CHECK(j["elevation_m"][1] == -20.25);
    CHECK(j["amp_im"][0] == -0.5);
    CHECK(io::estimates_csv_header() == "pixel_id,k,elevation_m,p1,p2,amp_re,amp_im\n");
    CHECK(io::estimates_csv_rows(r) == "12,0,1.5,0.001,,1,-0.5\n12,1,-20.25,-0.002,,0.25,2\n");

    io::PixelResult f;
    f.pixel_id = 3;
    f.status = io::PixelStatus::failed;
    f.error_kind = "numerical";
    f.error_message = "boom";
    const Json jf = Json::parse(io::estimates_jsonl_line(f));
    CHECK(jf["status"] == "failed");
    CHECK(jf["error"] == "numerical");
    CHECK(io::estimates_csv_rows(f).empty());
}

TEST_CASE("detection csv and number formatting") {
    DetectionResult d;
    d.kappa = 0.4;
    d.snr_db = 7;
    d.method = Backend::svd_wiener;
    d.p_d = 0.25;
    d.ci_low = 0.1;
    d.ci_high = 0.5;
    d.realizations = 100;
    const std::vector<DetectionResult> rows{d};
    CHECK(io::detection_csv(rows) == "kappa,snr_db,method,p_d,ci_low,ci_high,n\n0.4,7,svd_wiener,0.25,0.1,0.5,100\n");
    CHECK(io::format_double(0.1) == "0.1");
    CHECK(io::format_double(-1e-300) == "-1e-300");
    CHECK(std::stod(io::format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("digests and manifests") {
    // FIPS 180-2 test vector
    CHECK(io::sha256_bytes("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(io::sha256_bytes("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");

    const fs::path dir = scratch_dir("manifest");
    const fs::path file = dir / "data.bin";
    {
        std::ofstream(file, std::ios::binary) << "abc";
    }
    CHECK(io::sha256_file(file) == io::sha256_bytes("abc"));
    CHECK(io::manifest_path(dir / "out.csv") == dir / "out.csv.manifest.json");

    io::RunManifest m;
    m.command = "solve";
    m.code_version = std::string(io::code_version());
    m.seed = 5;
    m.config = Json{{"k", 1}};
    m.inputs = {io::FileDigest{"data.bin", io::sha256_file(file)}};
    m.started_at = io::utc_timestamp();
    m.finished_at = io::utc_timestamp();
    CHECK(m.started_at.size() == 20);
    const io::RunManifest back = io::manifest_from_json(io::to_json(m));
    CHECK(io::to_json(back) == io::to_json(m));
    CHECK(io::verify_manifest(back, dir).empty());

    {
        std::ofstream(file, std::ios::binary) << "abd";
    }
    const auto bad = io::verify_manifest(back, dir);
    REQUIRE(bad.size() == 1);
    CHECK(bad[0].path == "data.bin");
    fs::remove(file);
    const auto missing = io::verify_manifest(back, dir);
    REQUIRE(missing.size() == 1);
    CHECK(missing[0].actual.empty());
    fs::remove_all(dir);
}

}
