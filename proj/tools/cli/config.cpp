#include "config.hpp"

#include <cmath>

#include <fmt/format.h>

#include "tracemem/efficiency.hpp"

namespace tracecli {

using tracemem::ConfigError;

Section::Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path))
{
    if (valid() && !node_.IsMap()) fail(fmt::format("'{}' must be a mapping", path_));
}

Section Section::load_file(const std::string& file)
{
    YAML::Node root;
    try {
        root = YAML::LoadFile(file);
    } catch (const YAML::BadFile&) {
        throw ConfigError(fmt::format("cannot read config file '{}'", file));
    } catch (const YAML::Exception& e) {
        throw ConfigError(fmt::format("line {}: {}", e.mark.line + 1, e.msg));
    }
    if (!root || root.IsNull()) throw ConfigError(fmt::format("config file '{}' is empty", file));
    return Section(root, "");
}

bool Section::has(const std::string& key) const
{
    return valid() && static_cast<bool>(node_[key]);
}

int Section::line() const
{
    return valid() ? node_.Mark().line + 1 : 0;
}

void Section::fail(const std::string& message) const
{
    throw ConfigError(fmt::format("line {}: {}", line(), message));
}

YAML::Node Section::get(const std::string& key, bool required)
{
    used_.insert(key);
    YAML::Node value = valid() ? node_[key] : YAML::Node();
    if (!value && required) {
        fail(fmt::format("missing key '{}'", path_.empty() ? key : path_ + "." + key));
    }
    return value;
}

namespace {

std::string qualified(const std::string& path, const std::string& key)
{
    return path.empty() ? key : path + "." + key;
}

template <class T>
T convert(const YAML::Node& value, const std::string& name, const char* what)
{
    if (!value.IsScalar()) {
        throw ConfigError(fmt::format("line {}: '{}' must be {}", value.Mark().line + 1, name, what));
    }
    try {
        return value.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(fmt::format("line {}: '{}' must be {}", value.Mark().line + 1, name, what));
    }
}

double convert_number(const YAML::Node& value, const std::string& name)
{
    if (value.IsScalar()) {
        const auto& s = value.Scalar();
        if (s == "inf" || s == ".inf" || s == "+inf" || s == ".Inf") return INFINITY;
        if (s == "-inf" || s == "-.inf" || s == "-.Inf") return -INFINITY;
    }
    return convert<double>(value, name, "a number");
}

}  // namespace

double Section::number(const std::string& key, std::optional<double> fallback)
{
    const auto value = get(key, !fallback);
    if (!value) return *fallback;
    return convert_number(value, qualified(path_, key));
}

std::size_t Section::count(const std::string& key, std::optional<std::size_t> fallback)
{
    const auto value = get(key, !fallback);
    if (!value) return *fallback;
    const auto name = qualified(path_, key);
    const auto n = convert<long long>(value, name, "an integer");
    if (n < 0) throw ConfigError(fmt::format("line {}: '{}' must be nonnegative", value.Mark().line + 1, name));
    return static_cast<std::size_t>(n);
}

std::string Section::text(const std::string& key, std::optional<std::string> fallback)
{
    const auto value = get(key, !fallback);
    if (!value) return *fallback;
    return convert<std::string>(value, qualified(path_, key), "a string");
}

bool Section::flag(const std::string& key, bool fallback)
{
    const auto value = get(key, false);
    if (!value) return fallback;
    return convert<bool>(value, qualified(path_, key), "true or false");
}

std::vector<double> Section::numbers(const std::string& key)
{
    const auto value = get(key, true);
    const auto name = qualified(path_, key);
    if (!value.IsSequence()) {
        throw ConfigError(fmt::format("line {}: '{}' must be a list", value.Mark().line + 1, name));
    }
    std::vector<double> out;
    for (const auto& item : value) out.push_back(convert_number(item, name));
    return out;
}

Section Section::child(const std::string& key, bool required)
{
    return Section(get(key, required), qualified(path_, key));
}

std::vector<Section> Section::children(const std::string& key)
{
    const auto value = get(key, true);
    const auto name = qualified(path_, key);
    if (!value.IsSequence()) {
        throw ConfigError(fmt::format("line {}: '{}' must be a list", value.Mark().line + 1, name));
    }
    std::vector<Section> out;
    for (std::size_t i = 0; i < value.size(); ++i) out.emplace_back(value[i], fmt::format("{}[{}]", name, i));
    return out;
}

void Section::finish() const
{
    if (!valid()) return;
    for (const auto& item : node_) {
        const auto key = item.first.as<std::string>();
        if (!used_.contains(key)) {
            throw ConfigError(
                fmt::format("line {}: unknown key '{}'", item.first.Mark().line + 1, qualified(path_, key)));
        }
    }
}

tracemem::EnsembleConfig read_ensemble(Section s)
{
    tracemem::EnsembleConfig c;
    c.optical_depth = s.number("optical_depth");
    c.gamma_e = s.number("gamma_e", 1.0);
    c.gamma_s = s.number("gamma_s", 0.0);
    c.delta_plus = s.number("delta_plus", 40.0);
    c.delta_minus = s.number("delta_minus", -c.delta_plus);
    if (s.has("excited_levels")) {
        for (auto level : s.children("excited_levels")) {
            tracemem::ExcitedLevel l;
            l.offset = level.number("offset");
            l.strength = level.number("strength", 1.0);
            level.finish();
            c.excited_levels.push_back(l);
        }
    }
    s.finish();
    return c;
}

tracemem::Grid read_grid(Section s)
{
    const auto nz = s.count("nz", 201);
    const auto nt = s.count("nt");
    const double t_begin = s.number("t_begin");
    const double t_end = s.number("t_end");
    s.finish();
    return with_line(s, [&] {
        if (nt < 2) throw ConfigError("grid.nt must be at least 2");
        if (nz < 2) throw ConfigError("grid.nz must be at least 2");
        if (!(t_end > t_begin)) throw ConfigError("grid.t_end must exceed grid.t_begin");
        return tracemem::Grid::spanning(t_begin, t_end, nt, nz);
    });
}

tracemem::PulseShape read_pulse(Section s)
{
    tracemem::PulseShape p;
    const auto kind = s.text("kind");
    if (kind == "rising_exponential") {
        tracemem::RisingExponential e;
        e.amplitude = s.number("amplitude", 1.0);
        e.rate = s.number("rate");
        e.cutoff = s.number("cutoff", 0.0);
        if (!(e.rate > 0.0)) s.fail("pulse.rate must be positive");
        p.kind = e;
    } else if (kind == "gaussian") {
        tracemem::GaussianPulse g;
        g.amplitude = s.number("amplitude", 1.0);
        g.center = s.number("center", 0.0);
        g.width = s.number("width");
        if (!(g.width > 0.0)) s.fail("pulse.width must be positive");
        p.kind = g;
    } else {
        s.fail(fmt::format("unknown pulse kind '{}' (rising_exponential | gaussian)", kind));
    }
    p.phase = s.number("phase", 0.0);
    s.finish();
    return p;
}

tracemem::phase::GeometryConfig read_geometry(Section s)
{
    tracemem::phase::GeometryConfig g;
    g.lambda_probe = s.number("lambda_probe", g.lambda_probe);
    g.hyperfine_splitting = s.number("hyperfine_splitting", g.hyperfine_splitting);
    g.theta = s.number("theta", g.theta);
    s.finish();
    with_line(s, [&] { g.check(); });
    return g;
}

std::vector<double> read_range(Section s)
{
    std::vector<double> out;
    if (s.has("values")) {
        out = s.numbers("values");
    } else {
        const double start = s.number("start");
        const double stop = s.number("stop");
        const auto points = s.count("points");
        const auto spacing = s.text("spacing", "linear");
        if (points == 0) s.fail("empty sweep range");
        if (spacing == "log") {
            out = with_line(s, [&] {
                if (!(start > 0.0 && stop > start)) throw ConfigError("log range needs 0 < start < stop");
                return tracemem::efficiency::log_range(start, stop, points);
            });
        } else if (spacing == "linear") {
            if (points == 1) {
                out = {start};
            } else {
                for (std::size_t i = 0; i < points; ++i) {
                    out.push_back(start + (stop - start) * static_cast<double>(i) / static_cast<double>(points - 1));
                }
                out.back() = stop;
            }
        } else {
            s.fail(fmt::format("unknown spacing '{}' (linear | log)", spacing));
        }
    }
    s.finish();
    if (out.empty()) s.fail("empty sweep range");
    for (double v : out) {
        if (!std::isfinite(v)) s.fail("sweep values must be finite");
    }
    return out;
}

}  // namespace tracecli
