#include "gpcal/csv_io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "gpcal/errors.hpp"

namespace gpcal {

namespace {

std::vector<std::string_view> split(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        out.push_back(line.substr(pos, comma == std::string_view::npos ? line.size() - pos
                                                                       : comma - pos));
        if (comma == std::string_view::npos)
            break;
        pos = comma + 1;
    }
    return out;
}

class CsvReader
{
public:
    CsvReader(std::istream& is, std::string_view source) : is_(is), source_(source) { }

    [[noreturn]] void fail(const std::string& msg) const
    {
        throw ValidationError(std::string(source_) + ":" + std::to_string(line_) + ": " + msg);
    }

    /// Next non-empty line split on commas; false at end of input.
    bool next(std::vector<std::string_view>& fields)
    {
        while (std::getline(is_, buffer_)) {
            ++line_;
            if (!buffer_.empty() && buffer_.back() == '\r')
                buffer_.pop_back();
            if (buffer_.empty())
                continue;
            fields = split(buffer_);
            return true;
        }
        return false;
    }

    double number(std::string_view field) const
    {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (ec != std::errc() || ptr != field.data() + field.size())
            fail("malformed number '" + std::string(field) + "'");
        return v;
    }

    int line() const { return line_; }

private:
    std::istream& is_;
    std::string_view source_;
    std::string buffer_;
    int line_ = 0;
};

void write_row(std::ostream& os, const std::vector<double>& values)
{
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i)
            os << ',';
        os << format_number(values[i]);
    }
    os << '\n';
}

int count_prefix(const std::vector<std::string_view>& header, std::string_view prefix)
{
    int n = 0;
    for (auto h : header)
        if (h.starts_with(prefix))
            ++n;
    return n;
}

} // namespace

std::string format_number(double v)
{
    std::array<char, 32> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc())
        throw ValidationError("cannot format number");
    return std::string(buf.data(), ptr);
}

void write_dataset(std::ostream& os, const Dataset& dataset)
{
    const int m = dataset.empty() ? 0 : static_cast<int>(dataset.front().ticks.size());
    os << "t_j,t_k";
    for (int i = 1; i <= m; ++i)
        os << ",tick_" << i;
    os << ",sx,sy,stheta";
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            os << ",cov_" << r << c;
    os << '\n';
    for (const auto& s : dataset) {
        std::vector<double> row{ s.t_j, s.t_k };
        for (Eigen::Index i = 0; i < s.ticks.size(); ++i)
            row.push_back(s.ticks(i));
        row.insert(row.end(), { s.s_hat.x(), s.s_hat.y(), s.s_hat.theta() });
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                row.push_back(s.sigma(r, c));
        write_row(os, row);
    }
}

Dataset read_dataset(std::istream& is, std::string_view source)
{
    CsvReader reader(is, source);
    std::vector<std::string_view> fields;
    if (!reader.next(fields))
        reader.fail("missing header");
    const int m = count_prefix(fields, "tick_");
    const std::size_t width = 2 + static_cast<std::size_t>(m) + 3 + 9;
    if (m < 1 || fields.size() != width || fields[0] != "t_j" || fields[1] != "t_k")
        reader.fail("unexpected dataset header");

    Dataset out;
    while (reader.next(fields)) {
        if (fields.size() != width)
            reader.fail("expected " + std::to_string(width) + " columns, got " +
                        std::to_string(fields.size()));
        std::vector<double> v(width);
        for (std::size_t i = 0; i < width; ++i)
            v[i] = reader.number(fields[i]);
        DisplacementSample s;
        s.t_j = v[0];
        s.t_k = v[1];
        s.ticks = Eigen::Map<const Eigen::VectorXd>(v.data() + 2, m);
        const std::size_t o = 2 + static_cast<std::size_t>(m);
        try {
            s.s_hat = Pose2D(v[o], v[o + 1], v[o + 2]);
        } catch (const ValidationError& ex) {
            reader.fail(ex.what());
        }
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                s.sigma(r, c) = v[o + 3 + static_cast<std::size_t>(3 * r + c)];
        try {
            validate(Dataset{ s });
        } catch (const ValidationError& ex) {
            std::string msg = ex.what();
            // drop the "dataset row 0: " prefix of the single-row check
            if (const auto colon = msg.find(": "); colon != std::string::npos)
                msg = msg.substr(colon + 2);
            reader.fail(msg);
        }
        out.push_back(std::move(s));
    }
    return out;
}

void write_odometry(std::ostream& os, const std::vector<OdometryReading>& log)
{
    const auto m = log.empty() ? 0 : log.front().counters.size();
    os << "t";
    for (Eigen::Index i = 1; i <= m; ++i)
        os << ",counter_" << i;
    os << '\n';
    for (const auto& r : log) {
        std::vector<double> row{ r.t };
        for (Eigen::Index i = 0; i < r.counters.size(); ++i)
            row.push_back(r.counters(i));
        write_row(os, row);
    }
}

std::vector<OdometryReading> read_odometry(std::istream& is, std::string_view source)
{
    CsvReader reader(is, source);
    std::vector<std::string_view> fields;
    if (!reader.next(fields))
        reader.fail("missing header");
    const int m = count_prefix(fields, "counter_");
    if (m < 1 || fields.size() != static_cast<std::size_t>(m) + 1 || fields[0] != "t")
        reader.fail("unexpected odometry header");
    std::vector<OdometryReading> out;
    while (reader.next(fields)) {
        if (fields.size() != static_cast<std::size_t>(m) + 1)
            reader.fail("wrong column count");
        OdometryReading r;
        r.t = reader.number(fields[0]);
        r.counters.resize(m);
        for (int i = 0; i < m; ++i)
            r.counters(i) = reader.number(fields[static_cast<std::size_t>(i) + 1]);
        out.push_back(std::move(r));
    }
    return out;
}

void write_truth(std::ostream& os, const SimulationResult& sim)
{
    os << "t,x,y,theta,sensor_x,sensor_y,sensor_theta\n";
    for (std::size_t k = 0; k < sim.event_times.size(); ++k) {
        const auto& q = sim.robot_poses[k];
        const auto& s = sim.sensor_poses[k];
        write_row(os, { sim.event_times[k], q.x(), q.y(), q.theta(), s.x(), s.y(), s.theta() });
    }
}

void write_trajectory(std::ostream& os, const Trajectory& trajectory)
{
    os << "t,x,y,theta\n";
    for (const auto& p : trajectory)
        write_row(os, { p.t, p.pose.x(), p.pose.y(), p.pose.theta() });
}

Trajectory read_trajectory(std::istream& is, std::string_view source)
{
    CsvReader reader(is, source);
    std::vector<std::string_view> fields;
    if (!reader.next(fields))
        reader.fail("missing header");
    std::size_t width = 0;
    std::size_t offset = 1;
    if (fields.size() == 4 && fields[0] == "t" && fields[1] == "x" && fields[2] == "y" &&
        fields[3] == "theta") {
        width = 4;
    } else if (fields.size() == 7 && fields[0] == "t" && fields[4] == "sensor_x") {
        width = 7;
        offset = 4;
    } else {
        reader.fail("unexpected trajectory header");
    }
    Trajectory out;
    double last_t = -std::numeric_limits<double>::infinity();
    while (reader.next(fields)) {
        if (fields.size() != width)
            reader.fail("wrong column count");
        TimedPose p;
        p.t = reader.number(fields[0]);
        if (!(p.t > last_t))
            reader.fail("timestamps must be strictly increasing");
        last_t = p.t;
        try {
            p.pose = Pose2D(reader.number(fields[offset]), reader.number(fields[offset + 1]),
                            reader.number(fields[offset + 2]));
        } catch (const ValidationError& ex) {
            reader.fail(ex.what());
        }
        out.push_back(p);
    }
    return out;
}

void write_metrics_text(std::ostream& os, const MetricsReport& r)
{
    os << "poses = " << r.poses << '\n'
       << "ate_m = " << format_number(r.ate_m) << '\n'
       << "rpe_mm = " << format_number(r.rpe_m * 1e3) << '\n'
       << "ate_rot_rad = " << format_number(r.ate_rot_rad) << '\n'
       << "rpe_rot_rad = " << format_number(r.rpe_rot_rad) << '\n';
}

void write_metrics_csv(std::ostream& os, const MetricsReport& r)
{
    os << "poses,ate_m,rpe_mm,ate_rot_rad,rpe_rot_rad\n"
       << r.poses << ',' << format_number(r.ate_m) << ',' << format_number(r.rpe_m * 1e3) << ','
       << format_number(r.ate_rot_rad) << ',' << format_number(r.rpe_rot_rad) << '\n';
}

void save_text(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << content;
    if (!out)
        throw IoError("write failed for " + path.string());
}

std::string load_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Dataset load_dataset(const std::filesystem::path& path)
{
    std::istringstream is(load_text(path));
    return read_dataset(is, path.string());
}

Trajectory load_trajectory(const std::filesystem::path& path)
{
    std::istringstream is(load_text(path));
    return read_trajectory(is, path.string());
}

} // namespace gpcal
