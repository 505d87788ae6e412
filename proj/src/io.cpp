#include "tomosar/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <iterator>
#include <memory>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "tomosar/error.hpp"

#ifndef TOMOSAR_VERSION
#define TOMOSAR_VERSION "0.0.0"
#endif

namespace tomosar::io {

namespace {

// Tracks which keys of one JSON object were consumed so leftovers can be rejected.
class ObjectReader {
public:
    ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail("expected a JSON object");
    }

    bool has(std::string_view key) const { return j_.contains(key); }

    const Json& raw(std::string_view key) {
        seen_.emplace(key);
        return j_.at(std::string(key));
    }

    const Json* find(std::string_view key) {
        if (!has(key)) return nullptr;
        return &raw(key);
    }

    double number(std::string_view key) {
        const Json& v = require(key);
        if (!v.is_number()) fail_key(key, "expected a number");
        return v.get<double>();
    }

    std::optional<double> opt_number(std::string_view key) {
        if (!has(key) || j_.at(std::string(key)).is_null()) {
            if (has(key)) seen_.emplace(key);
            return std::nullopt;
        }
        return number(key);
    }

    std::uint64_t unsigned_int(std::string_view key) {
        const Json& v = require(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
            fail_key(key, "expected a nonnegative integer");
        }
        return v.get<std::uint64_t>();
    }

    bool boolean(std::string_view key) {
        const Json& v = require(key);
        if (!v.is_boolean()) fail_key(key, "expected true or false");
        return v.get<bool>();
    }

    std::string string(std::string_view key) {
        const Json& v = require(key);
        if (!v.is_string()) fail_key(key, "expected a string");
        return v.get<std::string>();
    }

    std::vector<double> numbers(std::string_view key) {
        const Json& v = require(key);
        if (!v.is_array()) fail_key(key, "expected an array of numbers");
        std::vector<double> out;
        out.reserve(v.size());
        for (const auto& e : v) {
            if (!e.is_number()) fail_key(key, "expected an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    std::vector<std::string> strings(std::string_view key) {
        const Json& v = require(key);
        if (!v.is_array()) fail_key(key, "expected an array of strings");
        std::vector<std::string> out;
        for (const auto& e : v) {
            if (!e.is_string()) fail_key(key, "expected an array of strings");
            out.push_back(e.get<std::string>());
        }
        return out;
    }

    std::string child(std::string_view key) const { return path_.empty() ? std::string(key) : path_ + "." + std::string(key); }

    // Rejects keys that were never read.
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.contains(it.key())) fail("unknown key '" + it.key() + "'");
        }
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw FormatError((path_.empty() ? std::string("<root>") : path_) + ": " + msg);
    }

    [[noreturn]] void fail_key(std::string_view key, const std::string& msg) const {
        throw FormatError(child(key) + ": " + msg);
    }

private:
    const Json& require(std::string_view key) {
        if (!has(key)) fail("missing required key '" + std::string(key) + "'");
        return raw(key);
    }

    const Json& j_;
    std::string path_;
    std::set<std::string, std::less<>> seen_;
};

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t offset) {
    offset = std::min(offset, text.size());
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i < offset; ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return {line, column};
}

// Native <-> little-endian; the swap is its own inverse.
template <class T>
T from_le(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
    return v;
}

Json axis_json(const UniformAxis& a, std::string_view start_key, std::string_view step_key) {
    Json j;
    j[std::string(start_key)] = a.start;
    j[std::string(step_key)] = a.step;
    j["count"] = a.count;
    return j;
}

std::string hex(const unsigned char* data, std::size_t n) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(2 * n, '0');
    for (std::size_t i = 0; i < n; ++i) {
        out[2 * i] = digits[data[i] >> 4];
        out[2 * i + 1] = digits[data[i] & 0xF];
    }
    return out;
}

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) throw Error("SHA-256 init failed");
    }
    void update(const void* data, std::size_t n) {
        if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw Error("SHA-256 update failed");
    }
    std::string hex_digest() {
        unsigned char md[EVP_MAX_MD_SIZE];
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx_.get(), md, &len) != 1) throw Error("SHA-256 final failed");
        return hex(md, len);
    }

private:
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

} // namespace

Json parse_json(std::string_view text, std::string_view source) {
    try {
        return Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
        // nlohmann reports the byte after the offending token.
        const std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
        const auto [line, column] = line_column(text, offset);
        std::string msg = e.what();
        if (const auto pos = msg.find(": "); pos != std::string::npos && msg.starts_with("[json.exception")) {
            msg = msg.substr(pos + 2);
        }
        throw FormatError(std::string(source) + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + msg,
                          line, column);
    }
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path.string() + "'");
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

Json read_json_file(const std::filesystem::path& path) {
    return parse_json(read_text_file(path), path.string());
}

// ---- geometry and grid ----

AcquisitionGeometry geometry_from_json(const Json& j) {
    ObjectReader r(j, "geometry");
    if (r.has("reference")) {
        ObjectReader ref(r.raw("reference"), "geometry.reference");
        const auto n = ref.has("acquisitions") ? ref.unsigned_int("acquisitions") : 29;
        const auto seed = ref.has("seed") ? ref.unsigned_int("seed") : 2024;
        ref.finish();
        r.finish();
        return reference_geometry(n, seed);
    }
    auto baselines = r.numbers("baselines_m");
    auto times = r.numbers("times_yr");
    const double wavelength = r.number("wavelength_m");
    const double range = r.number("range_m");
    r.finish();
    return AcquisitionGeometry(std::move(baselines), std::move(times), wavelength, range);
}

Json to_json(const AcquisitionGeometry& geom) {
    Json j;
    j["baselines_m"] = std::vector<double>(geom.baselines().begin(), geom.baselines().end());
    j["times_yr"] = std::vector<double>(geom.times().begin(), geom.times().end());
    j["wavelength_m"] = geom.wavelength();
    j["range_m"] = geom.range();
    return j;
}

ParameterGrid grid_from_json(const Json& j) {
    ObjectReader r(j, "grid");
    ObjectReader e(r.raw("elevation"), "grid.elevation");
    UniformAxis elevation{e.number("start_m"), e.number("step_m"), static_cast<std::size_t>(e.unsigned_int("count"))};
    e.finish();

    std::vector<MotionAxis> motion;
    if (const Json* m = r.find("motion")) {
        if (!m->is_array()) throw FormatError("grid.motion: expected an array");
        for (std::size_t i = 0; i < m->size(); ++i) {
            ObjectReader a((*m)[i], "grid.motion[" + std::to_string(i) + "]");
            const BaseFunction base = parse_base_function(a.string("base"));
            UniformAxis axis{a.number("start"), a.number("step"), static_cast<std::size_t>(a.unsigned_int("count"))};
            a.finish();
            motion.push_back(MotionAxis{base, axis});
        }
    }
    r.finish();
    return ParameterGrid(elevation, std::move(motion));
}

Json to_json(const ParameterGrid& grid) {
    Json j;
    j["elevation"] = axis_json(grid.elevation(), "start_m", "step_m");
    Json motion = Json::array();
    for (const auto& m : grid.motion()) {
        Json a;
        a["base"] = std::string(to_string(m.base));
        a["start"] = m.axis.start;
        a["step"] = m.axis.step;
        a["count"] = m.axis.count;
        motion.push_back(std::move(a));
    }
    j["motion"] = std::move(motion);
    return j;
}

// ---- solver and pipeline configs ----

SolverConfig solver_config_from_json(const Json& j) {
    ObjectReader r(j, "solver");
    SolverConfig c;
    c.lambda_reg = r.opt_number("lambda_reg");
    if (r.has("lambda_beta")) c.lambda_beta = r.number("lambda_beta");
    if (r.has("num_blocks")) c.num_blocks = r.unsigned_int("num_blocks");
    if (r.has("max_iters")) c.max_iters = r.unsigned_int("max_iters");
    if (r.has("tol")) c.tol = r.number("tol");
    if (r.has("optimality_tol")) c.optimality_tol = r.number("optimality_tol");
    if (r.has("step_shrink")) c.step_shrink = r.number("step_shrink");
    if (r.has("step_scale")) c.step_scale = r.number("step_scale");
    if (r.has("seed")) c.seed = r.unsigned_int("seed");
    if (r.has("fixed_iterations")) c.fixed_iterations = r.boolean("fixed_iterations");
    if (r.has("max_backtracks")) c.max_backtracks = r.unsigned_int("max_backtracks");
    r.finish();
    c.validate();
    return c;
}

Json to_json(const SolverConfig& c) {
    Json j;
    j["lambda_reg"] = c.lambda_reg ? Json(*c.lambda_reg) : Json(nullptr);
    j["lambda_beta"] = c.lambda_beta;
    j["num_blocks"] = c.num_blocks;
    j["max_iters"] = c.max_iters;
    j["tol"] = c.tol;
    j["optimality_tol"] = c.optimality_tol;
    j["step_shrink"] = c.step_shrink;
    j["step_scale"] = c.step_scale;
    j["seed"] = c.seed;
    j["fixed_iterations"] = c.fixed_iterations;
    j["max_backtracks"] = c.max_backtracks;
    return j;
}

Json solver_config_schema() {
    const SolverConfig d;
    const auto field = [](std::string_view type, Json def, std::string_view doc) {
        Json f;
        f["type"] = type;
        f["default"] = std::move(def);
        f["description"] = doc;
        return f;
    };
    Json props;
    props["lambda_reg"] = field("number|null", nullptr,
                                "Regularization weight; null derives it as lambda_beta * max|A^H g|.");
    props["lambda_beta"] = field("number", d.lambda_beta, "Fraction of max|A^H g| used when lambda_reg is null.");
    props["num_blocks"] = field("integer", d.num_blocks, "RBPG block count J, 1 <= J <= L.");
    props["max_iters"] = field("integer", d.max_iters, "Iteration cap; an RBPG iteration updates one block.");
    props["tol"] = field("number", d.tol, "Stop when the relative objective change over the window falls below tol.");
    props["optimality_tol"] =
        field("number", d.optimality_tol, "Stop when the prox-gradient map norm falls below this; 0 disables.");
    props["step_shrink"] = field("number", d.step_shrink, "Backtracking factor C_alpha in (0, 1).");
    props["step_scale"] = field("number", d.step_scale, "Initial step is step_scale / Lipschitz constant.");
    props["seed"] = field("integer", d.seed, "Seed for RBPG block sampling.");
    props["fixed_iterations"] = field("boolean", d.fixed_iterations, "Run exactly max_iters iterations.");
    props["max_backtracks"] = field("integer", d.max_backtracks, "Step shrinks allowed per iteration.");
    Json schema;
    schema["type"] = "object";
    schema["additionalProperties"] = false;
    schema["properties"] = std::move(props);
    return schema;
}

SlimmerConfig slimmer_config_from_json(const Json& j) {
    ObjectReader r(j, "pipeline");
    SlimmerConfig c;
    if (r.has("backend")) c.backend = parse_backend(r.string("backend"));
    if (r.has("k_max")) c.k_max = r.unsigned_int("k_max");
    if (r.has("svd_noise_power")) c.svd_noise_power = r.number("svd_noise_power");
    if (r.has("support_floor")) c.support_floor = r.number("support_floor");
    if (const Json* s = r.find("solver")) c.solver = solver_config_from_json(*s);
    r.finish();
    c.validate();
    return c;
}

Json to_json(const SlimmerConfig& c) {
    Json j;
    j["backend"] = std::string(to_string(c.backend));
    j["k_max"] = c.k_max;
    j["svd_noise_power"] = c.svd_noise_power;
    j["support_floor"] = c.support_floor;
    j["solver"] = to_json(c.solver);
    return j;
}

// ---- scenarios ----

Scenario scenario_from_json(const Json& j) {
    ObjectReader r(j, "scenario");
    Scenario s{geometry_from_json(r.raw("geometry")), {}, {}, std::nullopt, 1, 0};
    if (r.has("base_functions")) {
        for (const auto& name : r.strings("base_functions")) s.base_functions.push_back(parse_base_function(name));
    }
    if (const Json* list = r.find("scatterers")) {
        if (!list->is_array()) throw FormatError("scenario.scatterers: expected an array");
        for (std::size_t i = 0; i < list->size(); ++i) {
            ObjectReader o((*list)[i], "scenario.scatterers[" + std::to_string(i) + "]");
            Scatterer sc;
            sc.elevation = o.number("elevation_m");
            if (o.has("motion")) sc.motion = o.numbers("motion");
            if (o.has("amplitude")) sc.amplitude = o.number("amplitude");
            if (o.has("phase_rad")) sc.phase = o.number("phase_rad");
            sc.snr_db = o.opt_number("snr_db");
            o.finish();
            s.scatterers.push_back(std::move(sc));
        }
    }
    s.noise_variance = r.opt_number("noise_variance");
    if (r.has("realizations")) s.realizations = r.unsigned_int("realizations");
    if (r.has("seed")) s.seed = r.unsigned_int("seed");
    r.finish();
    s.validate();
    return s;
}

Json to_json(const Scenario& s) {
    Json j;
    j["geometry"] = to_json(s.geometry);
    Json bases = Json::array();
    for (auto b : s.base_functions) bases.push_back(std::string(to_string(b)));
    j["base_functions"] = std::move(bases);
    Json list = Json::array();
    for (const auto& sc : s.scatterers) {
        Json o;
        o["elevation_m"] = sc.elevation;
        o["motion"] = sc.motion;
        o["amplitude"] = sc.amplitude;
        o["phase_rad"] = sc.phase;
        o["snr_db"] = sc.snr_db ? Json(*sc.snr_db) : Json(nullptr);
        list.push_back(std::move(o));
    }
    j["scatterers"] = std::move(list);
    j["noise_variance"] = s.noise_variance ? Json(*s.noise_variance) : Json(nullptr);
    j["realizations"] = s.realizations;
    j["seed"] = s.seed;
    return j;
}

// ---- stack files ----

ComplexVector Stack::pixel(std::size_t index) const {
    if (index >= header.pixel_count) throw DomainError("pixel index out of range");
    const std::size_t n = header.acquisitions;
    ComplexVector g(static_cast<Index>(n));
    const float* p = samples.data() + 2 * n * index;
    for (std::size_t i = 0; i < n; ++i) g[static_cast<Index>(i)] = Complex(p[2 * i], p[2 * i + 1]);
    return g;
}

void write_stack(std::ostream& out, const StackHeader& header, std::span<const float> samples) {
    if (samples.size() != 2 * header.acquisitions * header.pixel_count) {
        throw DimensionMismatch("stack payload size differs from 2 * N * pixel_count floats");
    }
    Json h;
    h["magic"] = kStackMagic;
    h["version"] = kStackVersion;
    h["N"] = header.acquisitions;
    h["pixel_count"] = header.pixel_count;
    if (header.geometry) h["geometry"] = *header.geometry;
    out << h.dump() << '\n';

    constexpr std::size_t chunk = 1 << 14;
    std::vector<float> buffer;
    for (std::size_t i = 0; i < samples.size(); i += chunk) {
        const std::size_t n = std::min(chunk, samples.size() - i);
        buffer.assign(samples.begin() + static_cast<std::ptrdiff_t>(i),
                      samples.begin() + static_cast<std::ptrdiff_t>(i + n));
        for (float& f : buffer) f = from_le(f);
        out.write(reinterpret_cast<const char*>(buffer.data()), static_cast<std::streamsize>(n * sizeof(float)));
    }
    if (!out) throw Error("failed writing stack");
}

void write_stack(const std::filesystem::path& path, const StackHeader& header, std::span<const float> samples) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot create '" + path.string() + "'");
    write_stack(out, header, samples);
}

Stack read_stack(std::istream& in) {
    std::string line;
    char c;
    while (in.get(c) && c != '\n') {
        line.push_back(c);
        if (line.size() > kMaxStackHeader) throw FormatError("stack header line too long");
    }
    if (!in) throw FormatError("stack header is not terminated by a newline");

    const Json h = parse_json(line, "stack header");
    if (!h.is_object() || !h.contains("magic") || h["magic"] != kStackMagic) {
        throw FormatError("not a TSTK1 stack (bad magic)");
    }
    ObjectReader r(h, "stack header");
    r.string("magic");
    if (r.unsigned_int("version") != static_cast<std::uint64_t>(kStackVersion)) {
        throw FormatError("unsupported stack version");
    }
    Stack s;
    s.header.acquisitions = r.unsigned_int("N");
    s.header.pixel_count = r.unsigned_int("pixel_count");
    if (const Json* g = r.find("geometry")) s.header.geometry = *g;
    r.finish();
    if (s.header.acquisitions == 0 && s.header.pixel_count > 0) throw FormatError("stack header has N = 0");

    const std::size_t floats = 2 * s.header.acquisitions * s.header.pixel_count;
    if (s.header.pixel_count != 0 && floats / s.header.pixel_count != 2 * s.header.acquisitions) {
        throw CapacityError("stack dimensions overflow");
    }
    s.samples.resize(floats);
    in.read(reinterpret_cast<char*>(s.samples.data()), static_cast<std::streamsize>(floats * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != floats * sizeof(float)) {
        throw FormatError("stack payload is shorter than the header promises");
    }
    if (in.peek() != std::char_traits<char>::eof()) throw FormatError("stack payload has trailing bytes");
    for (float& f : s.samples) f = from_le(f);
    return s;
}

Stack read_stack(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path.string() + "'");
    return read_stack(in);
}

std::vector<float> pack_pixels(std::span<const ComplexVector> pixels) {
    std::vector<float> out;
    if (pixels.empty()) return out;
    const Index n = pixels.front().size();
    out.reserve(2 * static_cast<std::size_t>(n) * pixels.size());
    for (const auto& g : pixels) {
        if (g.size() != n) throw DimensionMismatch("pixels differ in length");
        for (Index i = 0; i < n; ++i) {
            out.push_back(static_cast<float>(g[i].real()));
            out.push_back(static_cast<float>(g[i].imag()));
        }
    }
    return out;
}

// ---- estimates and results ----

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string estimates_jsonl_line(const PixelResult& r) {
    Json j;
    j["pixel_id"] = r.pixel_id;
    if (r.status == PixelStatus::failed) {
        j["status"] = "failed";
        j["error"] = r.error_kind;
        j["message"] = r.error_message;
        return j.dump() + "\n";
    }
    const auto& e = r.estimates;
    j["status"] = "ok";
    j["k"] = e.model_order;
    j["elevation_m"] = e.elevations;
    j["motion"] = e.motion_params;
    Json re = Json::array(), im = Json::array();
    for (const auto& a : e.amplitudes) {
        re.push_back(a.real());
        im.push_back(a.imag());
    }
    j["amp_re"] = std::move(re);
    j["amp_im"] = std::move(im);
    j["bic"] = e.selection_scores;
    return j.dump() + "\n";
}

std::string estimates_csv_header() { return "pixel_id,k,elevation_m,p1,p2,amp_re,amp_im\n"; }

std::string estimates_csv_rows(const PixelResult& r) {
    if (r.status != PixelStatus::ok) return {};
    std::string out;
    const auto& e = r.estimates;
    for (std::size_t k = 0; k < e.model_order; ++k) {
        const auto& p = e.motion_params[k];
        out += std::to_string(r.pixel_id) + "," + std::to_string(k) + "," + format_double(e.elevations[k]) + ",";
        out += (p.size() > 0 ? format_double(p[0]) : std::string()) + ",";
        out += (p.size() > 1 ? format_double(p[1]) : std::string()) + ",";
        out += format_double(e.amplitudes[k].real()) + "," + format_double(e.amplitudes[k].imag()) + "\n";
    }
    return out;
}

std::string detection_csv(std::span<const DetectionResult> results) {
    std::string out = "kappa,snr_db,method,p_d,ci_low,ci_high,n\n";
    for (const auto& r : results) {
        out += format_double(r.kappa) + "," + format_double(r.snr_db) + "," + std::string(to_string(r.method)) + "," +
               format_double(r.p_d) + "," + format_double(r.ci_low) + "," + format_double(r.ci_high) + "," +
               std::to_string(r.realizations) + "\n";
    }
    return out;
}

// ---- manifests ----

std::string sha256_bytes(std::string_view bytes) {
    Sha256 h;
    h.update(bytes.data(), bytes.size());
    return h.hex_digest();
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path.string() + "'");
    Sha256 h;
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() > 0) h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return h.hex_digest();
}

FileDigest digest_file(const std::filesystem::path& path) { return FileDigest{path.string(), sha256_file(path)}; }

std::filesystem::path manifest_path(const std::filesystem::path& output) {
    return std::filesystem::path(output.string() + ".manifest.json");
}

Json to_json(const RunManifest& m) {
    const auto digests = [](const std::vector<FileDigest>& list) {
        Json a = Json::array();
        for (const auto& d : list) a.push_back(Json{{"path", d.path}, {"sha256", d.sha256}});
        return a;
    };
    Json j;
    j["command"] = m.command;
    j["code_version"] = m.code_version;
    j["seed"] = m.seed;
    j["config"] = m.config;
    j["inputs"] = digests(m.inputs);
    j["outputs"] = digests(m.outputs);
    j["started_at"] = m.started_at;
    j["finished_at"] = m.finished_at;
    return j;
}

RunManifest manifest_from_json(const Json& j) {
    ObjectReader r(j, "manifest");
    RunManifest m;
    m.command = r.string("command");
    m.code_version = r.string("code_version");
    m.seed = r.unsigned_int("seed");
    m.config = r.raw("config");
    const auto digests = [&](std::string_view key) {
        std::vector<FileDigest> out;
        const Json& a = r.raw(key);
        if (!a.is_array()) r.fail_key(key, "expected an array");
        for (std::size_t i = 0; i < a.size(); ++i) {
            ObjectReader d(a[i], r.child(key) + "[" + std::to_string(i) + "]");
            FileDigest fd{d.string("path"), d.string("sha256")};
            d.finish();
            out.push_back(std::move(fd));
        }
        return out;
    };
    m.inputs = digests("inputs");
    m.outputs = digests("outputs");
    m.started_at = r.string("started_at");
    m.finished_at = r.string("finished_at");
    r.finish();
    return m;
}

std::vector<DigestMismatch> verify_manifest(const RunManifest& m, const std::filesystem::path& base_dir) {
    std::vector<DigestMismatch> bad;
    const auto check = [&](const FileDigest& d) {
        std::filesystem::path p(d.path);
        if (p.is_relative()) p = base_dir / p;
        std::string actual;
        if (std::filesystem::is_regular_file(p)) actual = sha256_file(p);
        if (actual != d.sha256) bad.push_back(DigestMismatch{d.path, d.sha256, actual});
    };
    for (const auto& d : m.inputs) check(d);
    for (const auto& d : m.outputs) check(d);
    return bad;
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string_view code_version() noexcept { return TOMOSAR_VERSION; }

} // namespace tomosar::io
