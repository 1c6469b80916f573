#include "gpcal/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "gpcal/errors.hpp"

namespace gpcal {

namespace {

std::string_view trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct Entry
{
    std::string value;
    int line = 0;
};

/// Section -> key -> entry, plus the line where each section header sits.
struct IniDocument
{
    std::map<std::string, std::map<std::string, Entry>> sections;
};

class ConfigReader
{
public:
    ConfigReader(std::string_view source) : source_(source) { }

    [[noreturn]] void fail(int line, const std::string& msg) const
    {
        throw ValidationError(std::string(source_) + ":" + std::to_string(line) + ": " + msg);
    }

    IniDocument parse(std::string_view text) const
    {
        static const std::map<std::string, std::vector<std::string>> known = {
            { "simulation",
              { "drive", "wheel_radius", "half_width", "half_length", "ticks_per_rev", "scale",
                "tilt_deg", "ripple", "sensor_pose", "interval", "duration", "profile", "script",
                "noise_sigma", "seed", "substeps", "odometry_per_interval", "max_speed",
                "max_lateral_speed", "max_turn_rate" } },
            { "calibration",
              { "model", "huber_c", "edge_stride", "seed", "restarts", "max_iterations",
                "max_fit_points" } },
            { "evaluation", { "output_dir" } },
        };

        IniDocument doc;
        std::string section;
        int lineno = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const auto nl = text.find('\n', pos);
            std::string_view raw = text.substr(pos, nl == std::string_view::npos ? text.size() - pos
                                                                                : nl - pos);
            pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
            ++lineno;
            if (const auto hash = raw.find('#'); hash != std::string_view::npos)
                raw = raw.substr(0, hash);
            const std::string_view line = trim(raw);
            if (line.empty())
                continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    fail(lineno, "malformed section header");
                section = std::string(trim(line.substr(1, line.size() - 2)));
                if (!known.contains(section))
                    fail(lineno, "unknown section [" + section + "]");
                doc.sections[section];
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string_view::npos)
                fail(lineno, "expected key = value");
            if (section.empty())
                fail(lineno, "key outside of a section");
            const std::string key(trim(line.substr(0, eq)));
            const auto& keys = known.at(section);
            if (std::find(keys.begin(), keys.end(), key) == keys.end())
                fail(lineno, "unknown key '" + key + "' in [" + section + "]");
            auto& sec = doc.sections[section];
            if (sec.contains(key))
                fail(lineno, "duplicate key '" + key + "'");
            sec[key] = { std::string(trim(line.substr(eq + 1))), lineno };
        }
        return doc;
    }

    double number(const Entry& e) const
    {
        double v = 0.0;
        const auto* first = e.value.data();
        const auto* last = first + e.value.size();
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last)
            fail(e.line, "expected a number, got '" + e.value + "'");
        return v;
    }

    std::vector<double> numbers(const Entry& e) const
    {
        std::vector<double> out;
        std::string text = e.value;
        std::replace(text.begin(), text.end(), ',', ' ');
        std::istringstream is(text);
        std::string tok;
        while (is >> tok)
            out.push_back(number({ tok, e.line }));
        if (out.empty())
            fail(e.line, "expected at least one number");
        return out;
    }

    std::int64_t integer(const Entry& e) const
    {
        std::int64_t v = 0;
        const auto* first = e.value.data();
        const auto* last = first + e.value.size();
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last)
            fail(e.line, "expected an integer, got '" + e.value + "'");
        return v;
    }

    /// One value broadcast to every wheel, or exactly one per wheel.
    Eigen::VectorXd per_wheel(const Entry& e, int wheels) const
    {
        const auto v = numbers(e);
        if (v.size() == 1)
            return Eigen::VectorXd::Constant(wheels, v[0]);
        if (static_cast<int>(v.size()) != wheels)
            fail(e.line, "expected 1 or " + std::to_string(wheels) + " values");
        return Eigen::Map<const Eigen::VectorXd>(v.data(), wheels);
    }

private:
    std::string_view source_;
};

} // namespace

Config parse_config(std::string_view text, std::string_view source)
{
    const ConfigReader reader(source);
    const IniDocument doc = reader.parse(text);
    Config cfg;

    auto section = [&](const std::string& name) -> const std::map<std::string, Entry>& {
        static const std::map<std::string, Entry> empty;
        auto it = doc.sections.find(name);
        return it == doc.sections.end() ? empty : it->second;
    };

    const auto& sim = section("simulation");
    auto get = [](const std::map<std::string, Entry>& s, const char* key) -> const Entry* {
        auto it = s.find(key);
        return it == s.end() ? nullptr : &it->second;
    };

    DriveKind kind = DriveKind::DiffDrive;
    if (const Entry* e = get(sim, "drive")) {
        if (e->value == "diff_drive")
            kind = DriveKind::DiffDrive;
        else if (e->value == "mecanum")
            kind = DriveKind::Mecanum;
        else
            reader.fail(e->line, "drive must be diff_drive or mecanum");
    }
    SimConfig& sc = cfg.simulation;
    sc = default_sim_config(kind);
    const int wheels = sc.drive.wheel_count();

    if (const Entry* e = get(sim, "wheel_radius"))
        sc.drive.wheel_radii = reader.per_wheel(*e, wheels);
    if (const Entry* e = get(sim, "half_width"))
        sc.drive.half_width = reader.number(*e);
    if (const Entry* e = get(sim, "half_length")) {
        if (kind != DriveKind::Mecanum)
            reader.fail(e->line, "half_length only applies to mecanum drives");
        sc.drive.half_length = reader.number(*e);
    }
    if (const Entry* e = get(sim, "ticks_per_rev")) {
        const Eigen::VectorXd v = reader.per_wheel(*e, wheels);
        for (int i = 0; i < wheels; ++i) {
            if (v(i) != std::floor(v(i)))
                reader.fail(e->line, "ticks_per_rev must be integral");
            sc.drive.ticks_per_rev[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(v(i));
        }
    }
    if (const Entry* e = get(sim, "scale"))
        sc.deform.per_wheel_scale = reader.per_wheel(*e, wheels);
    if (const Entry* e = get(sim, "tilt_deg"))
        sc.deform.tilt_deg = reader.per_wheel(*e, wheels);
    if (const Entry* e = get(sim, "ripple"))
        sc.deform.ripple_amp = reader.per_wheel(*e, wheels);
    if (const Entry* e = get(sim, "sensor_pose")) {
        const auto v = reader.numbers(*e);
        if (v.size() != 3)
            reader.fail(e->line, "sensor_pose needs x y theta");
        sc.sensor_pose = Pose2D(v[0], v[1], v[2]);
    }
    if (const Entry* e = get(sim, "interval"))
        sc.interval = reader.number(*e);
    if (const Entry* e = get(sim, "duration"))
        sc.duration = reader.number(*e);
    if (const Entry* e = get(sim, "profile")) {
        if (e->value == "random_walk")
            sc.profile = CommandProfile::RandomWalk;
        else if (e->value == "figure_eight")
            sc.profile = CommandProfile::FigureEight;
        else if (e->value == "scripted")
            sc.profile = CommandProfile::Scripted;
        else
            reader.fail(e->line, "profile must be random_walk, figure_eight or scripted");
    }
    if (const Entry* e = get(sim, "script")) {
        std::istringstream is(e->value);
        std::string segment;
        while (std::getline(is, segment, ';')) {
            if (trim(segment).empty())
                continue;
            const auto v = reader.numbers({ std::string(trim(segment)), e->line });
            if (v.size() != 4)
                reader.fail(e->line, "script segments are 'duration vx vy omega'");
            sc.script.push_back({ v[0], v[1], v[2], v[3] });
        }
    }
    if (const Entry* e = get(sim, "noise_sigma")) {
        const auto v = reader.numbers(*e);
        if (v.size() != 3)
            reader.fail(e->line, "noise_sigma needs three values (m m rad)");
        sc.noise_sigma = Eigen::Vector3d(v[0], v[1], v[2]);
    }
    if (const Entry* e = get(sim, "seed"))
        sc.seed = static_cast<std::uint64_t>(reader.integer(*e));
    if (const Entry* e = get(sim, "substeps"))
        sc.substeps = static_cast<int>(reader.integer(*e));
    if (const Entry* e = get(sim, "odometry_per_interval"))
        sc.odometry_per_interval = static_cast<int>(reader.integer(*e));
    if (const Entry* e = get(sim, "max_speed"))
        sc.max_speed = reader.number(*e);
    if (const Entry* e = get(sim, "max_lateral_speed"))
        sc.max_lateral_speed = reader.number(*e);
    if (const Entry* e = get(sim, "max_turn_rate"))
        sc.max_turn_rate = reader.number(*e);

    // Cross-field checks: point at the key the message is about.
    try {
        validate(sc);
    } catch (const ValidationError& ex) {
        static const std::vector<std::pair<std::string_view, const char*>> blame = {
            { "duration", "duration" },     { "interval", "interval" },
            { "noise", "noise_sigma" },     { "substeps", "substeps" },
            { "script", "script" },         { "radii", "wheel_radius" },
            { "half width", "half_width" }, { "half length", "half_length" },
            { "ticks_per_rev", "ticks_per_rev" }, { "scale", "scale" },
            { "tilt", "tilt_deg" },         { "ripple", "ripple" },
        };
        const std::string msg = ex.what();
        int line = 0;
        for (const auto& [needle, key] : blame) {
            if (msg.find(needle) != std::string::npos) {
                if (const Entry* e = get(sim, key))
                    line = e->line;
                break;
            }
        }
        reader.fail(line, msg);
    }

    const auto& cal = section("calibration");
    RunSpec& rs = cfg.calibration;
    if (const Entry* e = get(cal, "model")) {
        try {
            rs.kind = parse_model_kind(e->value);
        } catch (const ValidationError& ex) {
            reader.fail(e->line, ex.what());
        }
    }
    if (const Entry* e = get(cal, "huber_c")) {
        rs.huber_c = reader.number(*e);
        if (!(rs.huber_c > 0.0))
            reader.fail(e->line, "huber_c must be positive");
    }
    if (const Entry* e = get(cal, "edge_stride")) {
        rs.edge_stride = static_cast<int>(reader.integer(*e));
        if (rs.edge_stride < 1)
            reader.fail(e->line, "edge_stride must be >= 1");
    }
    if (const Entry* e = get(cal, "seed"))
        rs.fit.seed = static_cast<std::uint64_t>(reader.integer(*e));
    if (const Entry* e = get(cal, "restarts")) {
        rs.fit.restarts = static_cast<int>(reader.integer(*e));
        if (rs.fit.restarts < 1)
            reader.fail(e->line, "restarts must be >= 1");
    }
    if (const Entry* e = get(cal, "max_iterations"))
        rs.fit.max_iterations = static_cast<int>(reader.integer(*e));
    if (const Entry* e = get(cal, "max_fit_points"))
        rs.fit.max_points = static_cast<int>(reader.integer(*e));

    if (const Entry* e = get(section("evaluation"), "output_dir"))
        cfg.output_dir = e->value;
    return cfg;
}

Config load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

void override_seed(Config& config, std::uint64_t seed)
{
    config.simulation.seed = seed;
    config.calibration.fit.seed = seed;
}

} // namespace gpcal
