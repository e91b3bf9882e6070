#include "sfhn/harness/config.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <memory>
#include <span>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sfhn/errors.hpp"

namespace sfhn::harness {

using nlohmann::json;

std::string to_string(RunKind kind) {
    switch (kind) {
        case RunKind::forward: return "forward";
        case RunKind::control: return "control";
        case RunKind::verify: return "verify";
        case RunKind::sample_noise: return "sample-noise";
    }
    return "forward";
}

RunKind run_kind_from_string(const std::string& name) {
    if (name == "forward") return RunKind::forward;
    if (name == "control") return RunKind::control;
    if (name == "verify") return RunKind::verify;
    if (name == "sample-noise") return RunKind::sample_noise;
    throw ConfigError("unknown run kind '" + name + "' (expected forward, control, verify, sample-noise)");
}

Profile Profile::constant(double v) {
    Profile p;
    p.value = v;
    return p;
}

Profile Profile::bump(double amplitude, double center, double width) {
    Profile p;
    p.shape = "bump";
    p.value = amplitude;
    p.center = {center, 0.5};
    p.width = width;
    return p;
}

ScalarField make_field(const SpatialGrid& grid, const Profile& profile) {
    const int dim = grid.dimension();
    if (profile.shape == "constant") return ScalarField(grid, profile.value);
    if (profile.shape == "values") {
        if (profile.values.size() != grid.size()) {
            throw ConfigError("profile: 'values' has " + std::to_string(profile.values.size()) +
                              " entries, grid has " + std::to_string(grid.size()));
        }
        return ScalarField(grid, profile.values);
    }
    if (profile.shape == "sine") {
        const double lx = grid.extent(0);
        const double ly = dim == 2 ? grid.extent(1) : 1.0;
        return ScalarField::sample(grid, [&](double x, double y) {
            double v = profile.value * std::sin(profile.mode[0] * M_PI * x / lx);
            if (dim == 2) v *= std::sin(profile.mode[1] * M_PI * y / ly);
            return v;
        });
    }
    if (profile.shape == "bump") {
        if (!(profile.width > 0.0)) throw ConfigError("profile: bump width must be positive");
        return ScalarField::sample(grid, [&](double x, double y) {
            double r2 = std::pow((x - profile.center[0]) / profile.width, 2);
            if (dim == 2) r2 += std::pow((y - profile.center[1]) / profile.width, 2);
            return profile.value * std::exp(-r2);
        });
    }
    throw ConfigError("profile: unknown shape '" + profile.shape + "' (expected constant, sine, bump, values)");
}

SpatialGrid GridConfig::build() const {
    if (dimension == 1) return SpatialGrid::line(points[0], extent[0]);
    if (dimension == 2) return SpatialGrid::rectangle(points[0], points[1], extent[0], extent[1]);
    throw ConfigError("grid.dimension must be 1 or 2");
}

namespace {

// Walks one JSON object, remembers its dotted path for diagnostics and
// rejects keys that were never read.
class Reader {
public:
    Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) fail("", "expected an object");
    }

    template <class T>
    void read(const char* key, T& out) {
        seen_.insert(key);
        auto it = node_.find(key);
        if (it == node_.end()) return;
        try {
            convert(*it, out, key);
        } catch (const json::exception&) {
            fail(key, "has the wrong type");
        }
    }

    Reader child(const char* key) {
        seen_.insert(key);
        static const json empty = json::object();
        auto it = node_.find(key);
        return Reader(it == node_.end() ? empty : *it, join(key));
    }

    bool has(const char* key) const { return node_.contains(key); }

    void finish() const {
        for (auto it = node_.begin(); it != node_.end(); ++it) {
            if (!seen_.count(it.key())) fail(it.key(), "is not a recognised field");
        }
    }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        const std::string where = key.empty() ? (path_.empty() ? std::string("<root>") : path_) : join(key);
        throw ConfigError("config field '" + where + "' " + what);
    }

    std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    template <class T>
    void convert(const json& j, T& out, const char* key) {
        if constexpr (std::is_same_v<T, bool>) {
            if (!j.is_boolean()) fail(key, "expected true or false");
            out = j.get<bool>();
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!j.is_number()) fail(key, "expected a number");
            out = j.get<T>();
            if (!std::isfinite(out)) fail(key, "must be finite");
        } else if constexpr (std::is_integral_v<T>) {
            if (!j.is_number_integer()) fail(key, "expected an integer");
            if constexpr (std::is_unsigned_v<T>) {
                if (j.is_number_integer() && !j.is_number_unsigned() && j.get<long long>() < 0) {
                    fail(key, "must be nonnegative");
                }
            }
            out = j.get<T>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!j.is_string()) fail(key, "expected a string");
            out = j.get<std::string>();
        } else {
            if (!j.is_array()) fail(key, "expected an array");
            out = j.get<T>();
        }
    }

    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

Profile read_profile(Reader r) {
    Profile p;
    r.read("shape", p.shape);
    r.read("value", p.value);
    r.read("mode", p.mode);
    r.read("center", p.center);
    r.read("width", p.width);
    r.read("values", p.values);
    r.finish();
    if (p.shape != "constant" && p.shape != "sine" && p.shape != "bump" && p.shape != "values") {
        r.fail("shape", "must be one of constant, sine, bump, values");
    }
    return p;
}

json write_profile(const Profile& p) {
    return json{{"shape", p.shape}, {"value", p.value},   {"mode", p.mode},
                {"center", p.center}, {"width", p.width}, {"values", p.values}};
}

void check(bool ok, Reader& r, const char* key, const char* what) {
    if (!ok) r.fail(key, what);
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, const std::string& source) {
    json root;
    try {
        root = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        // The reported byte is one past the offending character.
        const auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
        std::string msg = e.what();
        if (const auto pos = msg.find("syntax error"); pos != std::string::npos) msg = msg.substr(pos);
        throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
    }

    ExperimentConfig c;
    try {
        Reader r(root, "");
        std::string kind = to_string(c.kind);
        r.read("kind", kind);
        try {
            c.kind = run_kind_from_string(kind);
        } catch (const ConfigError& e) {
            r.fail("kind", e.what());
        }

        {
            Reader g = r.child("grid");
            g.read("dimension", c.grid.dimension);
            g.read("points", c.grid.points);
            g.read("extent", c.grid.extent);
            g.finish();
            check(c.grid.dimension == 1 || c.grid.dimension == 2, g, "dimension", "must be 1 or 2");
            if (c.grid.dimension == 1) {
                c.grid.points[1] = 1;
                c.grid.extent[1] = 1.0;
            }
            check(c.grid.points[0] >= 3 && (c.grid.dimension == 1 || c.grid.points[1] >= 3), g, "points",
                  "needs at least 3 interior points per axis");
            check(c.grid.extent[0] > 0.0 && c.grid.extent[1] > 0.0, g, "extent", "must be positive");
        }
        {
            Reader m = r.child("model");
            Reader d = m.child("diffusion");
            std::string law = to_string(c.model.diffusion.kind);
            double dc = c.model.diffusion.c, db = c.model.diffusion.b;
            d.read("law", law);
            d.read("c", dc);
            d.read("b", db);
            d.finish();
            try {
                const auto k = diffusion_kind_from_string(law);
                c.model.diffusion = k == DiffusionLaw::Kind::linear        ? DiffusionLaw::linear(dc)
                                    : k == DiffusionLaw::Kind::saturating ? DiffusionLaw::saturating(dc)
                                                                           : DiffusionLaw::cubic_monotone(dc, db);
            } catch (const ConfigError& e) {
                d.fail("", e.what());
            }
            m.read("diffusion_enabled", c.model.diffusion_enabled);
            Reader ion = m.child("ionic");
            double a = c.model.ionic.a, scale = c.model.ionic.scale;
            ion.read("a", a);
            ion.read("scale", scale);
            ion.finish();
            try {
                c.model.ionic = IonicCubic(a, scale);
            } catch (const ConfigError& e) {
                ion.fail("", e.what());
            }
            if (m.has("damping")) c.model.damping = read_profile(m.child("damping"));
            if (m.has("forcing")) c.model.forcing = read_profile(m.child("forcing"));
            if (m.has("initial")) c.model.initial = read_profile(m.child("initial"));
            m.finish();
        }
        {
            Reader n = r.child("noise");
            n.read("enabled", c.noise.enabled);
            n.read("modes", c.noise.modes);
            n.read("decay", c.noise.decay);
            n.finish();
        }
        {
            Reader t = r.child("time");
            t.read("horizon", c.horizon);
            t.read("steps", c.steps);
            t.finish();
            check(c.horizon > 0.0, t, "horizon", "must be positive");
            check(c.steps > 0, t, "steps", "must be positive");
        }
        r.read("seeds", c.seeds);
        {
            Reader s = r.child("stepper");
            s.read("yosida_epsilon", c.stepper.yosida_epsilon);
            s.read("diffusion_regularization", c.stepper.diffusion_regularization);
            s.read("newton_tol", c.stepper.newton_tol);
            s.read("newton_max_iters", c.stepper.newton_max_iters);
            s.read("overflow_guard", c.stepper.overflow_guard);
            s.read("newton_polish", c.stepper.newton_polish);
            s.finish();
            try {
                c.stepper.validate(c.model.ionic);
            } catch (const ConfigError& e) {
                s.fail("", e.what());
            }
        }
        {
            Reader k = r.child("control");
            k.read("alpha", c.control.alpha);
            k.read("bound", c.control.bound);
            if (k.has("running_target")) c.control.running_target = read_profile(k.child("running_target"));
            if (k.has("terminal_target")) c.control.terminal_target = read_profile(k.child("terminal_target"));
            k.read("targets_from_uncontrolled", c.control.targets_from_uncontrolled);
            k.read("mode", c.control.mode);
            k.read("alpha_continuation", c.control.alpha_continuation);
            k.read("tol", c.control.tol);
            k.read("max_iters", c.control.max_iters);
            k.read("flip_adjoint_sign", c.control.flip_adjoint_sign);
            k.finish();
            check(c.control.alpha >= 0.0, k, "alpha", "must be ≥ 0");
            check(c.control.bound > 0.0, k, "bound", "must be positive");
            check(c.control.mode == "frozen" || c.control.mode == "ensemble", k, "mode",
                  "must be 'frozen' or 'ensemble'");
            for (double a : c.control.alpha_continuation) {
                check(a > 0.0, k, "alpha_continuation", "entries must be positive");
            }
            check(c.control.tol > 0.0, k, "tol", "must be positive");
            check(c.control.max_iters >= 0, k, "max_iters", "must be ≥ 0");
        }
        {
            Reader v = r.child("verify");
            v.read("criteria", c.verify.criteria);
            v.read("sde_paths", c.verify.sde_paths);
            v.read("screen_seeds", c.verify.screen_seeds);
            v.read("residual_seeds", c.verify.residual_seeds);
            v.read("mollify_seeds", c.verify.mollify_seeds);
            v.read("gradient_directions", c.verify.gradient_directions);
            if (v.has("saturation_target")) c.verify.saturation_target = read_profile(v.child("saturation_target"));
            v.finish();
            for (int id : c.verify.criteria) check(id >= 1 && id <= 9, v, "criteria", "entries must lie in 1..9");
        }
        {
            Reader o = r.child("output");
            o.read("directory", c.output.directory);
            o.read("checkpoints", c.output.checkpoints);
            o.read("trajectories", c.output.trajectories);
            o.finish();
            check(c.output.checkpoints >= 2, o, "checkpoints", "must be at least 2");
        }
        r.finish();
    } catch (const ConfigError& e) {
        throw ConfigError(source + ": " + e.what());
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.string());
}

std::string serialize_config(const ExperimentConfig& c) {
    json root;
    root["kind"] = to_string(c.kind);
    root["grid"] = {{"dimension", c.grid.dimension}, {"points", c.grid.points}, {"extent", c.grid.extent}};
    root["model"] = {
        {"diffusion", {{"law", to_string(c.model.diffusion.kind)}, {"c", c.model.diffusion.c}, {"b", c.model.diffusion.b}}},
        {"diffusion_enabled", c.model.diffusion_enabled},
        {"ionic", {{"a", c.model.ionic.a}, {"scale", c.model.ionic.scale}}},
        {"damping", write_profile(c.model.damping)},
        {"forcing", write_profile(c.model.forcing)},
        {"initial", write_profile(c.model.initial)},
    };
    root["noise"] = {{"enabled", c.noise.enabled}, {"modes", c.noise.modes}, {"decay", c.noise.decay}};
    root["time"] = {{"horizon", c.horizon}, {"steps", c.steps}};
    root["seeds"] = c.seeds;
    root["stepper"] = {{"yosida_epsilon", c.stepper.yosida_epsilon},
                       {"diffusion_regularization", c.stepper.diffusion_regularization},
                       {"newton_tol", c.stepper.newton_tol},
                       {"newton_max_iters", c.stepper.newton_max_iters},
                       {"overflow_guard", c.stepper.overflow_guard},
                       {"newton_polish", c.stepper.newton_polish}};
    root["control"] = {{"alpha", c.control.alpha},
                       {"bound", c.control.bound},
                       {"running_target", write_profile(c.control.running_target)},
                       {"terminal_target", write_profile(c.control.terminal_target)},
                       {"targets_from_uncontrolled", c.control.targets_from_uncontrolled},
                       {"mode", c.control.mode},
                       {"alpha_continuation", c.control.alpha_continuation},
                       {"tol", c.control.tol},
                       {"max_iters", c.control.max_iters},
                       {"flip_adjoint_sign", c.control.flip_adjoint_sign}};
    root["verify"] = {{"criteria", c.verify.criteria},
                      {"sde_paths", c.verify.sde_paths},
                      {"screen_seeds", c.verify.screen_seeds},
                      {"residual_seeds", c.verify.residual_seeds},
                      {"mollify_seeds", c.verify.mollify_seeds},
                      {"gradient_directions", c.verify.gradient_directions},
                      {"saturation_target", write_profile(c.verify.saturation_target)}};
    root["output"] = {{"directory", c.output.directory},
                      {"checkpoints", c.output.checkpoints},
                      {"trajectories", c.output.trajectories}};
    return root.dump(2) + "\n";
}

std::string git_blob_sha1(std::string_view bytes) {
    const std::string header = "blob " + std::to_string(bytes.size()) + std::string(1, '\0');
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), header.data(), header.size()) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &length) != 1) {
        throw std::runtime_error("SHA-1 digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned char b : std::span<const unsigned char>(digest, length)) {
        out += hex[b >> 4];
        out += hex[b & 15];
    }
    return out;
}

std::string content_hash(const ExperimentConfig& config) { return git_blob_sha1(serialize_config(config)); }

std::vector<std::uint64_t> parse_seed_range(const std::string& text) {
    auto parse = [&](const std::string& s) -> std::uint64_t {
        if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
            throw ConfigError("--seeds expects 'a..b' or a single nonnegative integer, got '" + text + "'");
        }
        return std::stoull(s);
    };
    const auto dots = text.find("..");
    if (dots == std::string::npos) return {parse(text)};
    const std::uint64_t a = parse(text.substr(0, dots));
    const std::uint64_t b = parse(text.substr(dots + 2));
    if (b < a) throw ConfigError("--seeds range '" + text + "' is empty");
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t s = a; s <= b; ++s) seeds.push_back(s);
    return seeds;
}

TimeGrid build_time_grid(const ExperimentConfig& config) { return TimeGrid(config.horizon, config.steps); }

StateProblem build_state_problem(const ExperimentConfig& config) {
    const SpatialGrid grid = config.grid.build();
    StateProblem p(grid);
    p.diffusion = config.model.diffusion;
    p.diffusion_enabled = config.model.diffusion_enabled;
    p.ionic = config.model.ionic;
    p.damping = make_field(grid, config.model.damping);
    const ScalarField forcing = make_field(grid, config.model.forcing);
    if (norm_linf(forcing) > 0.0) p.forcing = [forcing](double) { return forcing; };
    p.initial = make_field(grid, config.model.initial);
    p.horizon = config.horizon;
    p.noise_enabled = config.noise.enabled && config.noise.modes > 0;
    p.noise = p.noise_enabled ? NoiseModel::spectral(grid, config.noise.modes, config.noise.decay)
                              : NoiseModel::none(grid);
    p.validate();
    return p;
}

}  // namespace sfhn::harness
