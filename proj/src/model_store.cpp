#include "gpcal/model_store.hpp"

#include <charconv>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

#include "gpcal/csv_io.hpp"
#include "gpcal/errors.hpp"

namespace gpcal {

namespace {

constexpr std::string_view kMagic = "gpcal-model";

std::string join(const Eigen::Ref<const Eigen::RowVectorXd>& v)
{
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i)
            s += ' ';
        s += format_number(v(i));
    }
    return s;
}

std::string_view mean_tag(MeanKind k) { return k == MeanKind::Zero ? "zero" : "linear"; }

std::string_view kernel_tag(KernelKind k)
{
    switch (k) {
    case KernelKind::Rbf: return "rbf";
    case KernelKind::Linear: return "linear";
    case KernelKind::Sum: return "sum";
    }
    return "";
}

class KeyValues
{
public:
    KeyValues(std::string_view text, std::string_view source) : source_(source)
    {
        std::istringstream is{ std::string(text) };
        std::string line;
        int lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            if (line.empty() || line.front() == '#')
                continue;
            const auto eq = line.find(" = ");
            if (eq == std::string::npos)
                fail(lineno, "expected 'key = value'");
            const std::string key = line.substr(0, eq);
            if (values_.contains(key))
                fail(lineno, "duplicate key '" + key + "'");
            values_[key] = { line.substr(eq + 3), lineno };
        }
    }

    [[noreturn]] void fail(int line, const std::string& msg) const
    {
        throw ValidationError(std::string(source_) + ":" + std::to_string(line) + ": " + msg);
    }
    [[noreturn]] void fail(const std::string& msg) const
    {
        throw ValidationError(std::string(source_) + ": " + msg);
    }

    const std::string& str(const std::string& key) const
    {
        auto it = values_.find(key);
        if (it == values_.end())
            fail("missing key '" + key + "'");
        return it->second.first;
    }

    std::vector<double> numbers(const std::string& key, std::size_t expected) const
    {
        const auto& raw = str(key);
        std::vector<double> out;
        std::size_t pos = 0;
        while (pos < raw.size()) {
            auto end = raw.find(' ', pos);
            if (end == std::string::npos)
                end = raw.size();
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(raw.data() + pos, raw.data() + end, v);
            if (ec != std::errc() || ptr != raw.data() + end)
                fail(values_.at(key).second, "malformed number in '" + key + "'");
            out.push_back(v);
            pos = end + 1;
        }
        if (out.size() != expected)
            fail(values_.at(key).second, "'" + key + "' needs " + std::to_string(expected) +
                                             " values, got " + std::to_string(out.size()));
        return out;
    }

    double number(const std::string& key) const { return numbers(key, 1)[0]; }

    bool has(const std::string& key) const { return values_.contains(key); }

    long long integer(const std::string& key) const
    {
        const double v = number(key);
        if (v != static_cast<double>(static_cast<long long>(v)))
            fail(values_.at(key).second, "'" + key + "' must be an integer");
        return static_cast<long long>(v);
    }

private:
    std::string_view source_;
    std::map<std::string, std::pair<std::string, int>> values_;
};

} // namespace

std::string serialize_model(const CalibrationRun& run)
{
    const RunSpec& spec = run.spec();
    std::ostringstream os;
    os << "format = " << kMagic << '\n'
       << "format_version = " << kModelFormatVersion << '\n'
       << "model_kind = " << to_string(run.kind()) << '\n'
       << "tick_dim = " << run.tick_dim() << '\n'
       << "training_size = " << run.training_size() << '\n'
       << "huber_c = " << format_number(spec.huber_c) << '\n'
       << "edge_stride = " << spec.edge_stride << '\n'
       << "fit_seed = " << spec.fit.seed << '\n'
       << "fit_restarts = " << spec.fit.restarts << '\n'
       << "fit_max_iterations = " << spec.fit.max_iterations << '\n'
       << "fit_max_points = " << spec.fit.max_points << '\n';

    if (const auto* lin = std::get_if<LinearModel>(&run.model())) {
        for (int i = 0; i < kOutputs; ++i)
            os << "W." << i << " = " << join(lin->W.row(i)) << '\n';
        os << "irls_iterations = " << lin->report.iterations << '\n'
           << "huber_objective = " << format_number(lin->report.objective) << '\n'
           << "outliers = " << lin->report.outliers << '\n';
        return os.str();
    }

    const auto& gp = std::get<GpModel>(run.model());
    os << "mean = " << mean_tag(gp.mean().kind) << '\n';
    if (gp.mean().kind == MeanKind::Linear)
        for (int i = 0; i < kOutputs; ++i)
            os << "C." << i << " = " << join(gp.mean().C.row(i)) << '\n';
    os << "kernel = " << kernel_tag(gp.kernel().kind) << '\n';
    if (gp.kernel().has_rbf())
        for (int i = 0; i < kOutputs; ++i) {
            const auto& p = gp.kernel().rbf[static_cast<std::size_t>(i)];
            os << "sigma." << i << " = " << format_number(p.sigma) << '\n'
               << "length_diag." << i << " = " << join(p.length_diag.transpose()) << '\n';
        }
    os << "jitter = " << format_number(gp.output(0).jitter) << ' '
       << format_number(gp.output(1).jitter) << ' ' << format_number(gp.output(2).jitter) << '\n';
    for (int i = 0; i < kOutputs; ++i)
        if (gp.output(i).weight_space)
            os << "weights." << i << " = " << join(gp.output(i).weights.transpose()) << '\n';
    for (int j = 0; j < gp.size(); ++j) {
        os << "input." << j << " = " << join(gp.inputs().row(j)) << '\n';
        os << "noise." << j << " = " << format_number(gp.output(0).noise_var(j)) << ' '
           << format_number(gp.output(1).noise_var(j)) << ' '
           << format_number(gp.output(2).noise_var(j)) << '\n';
        os << "alpha." << j << " = " << format_number(gp.output(0).alpha(j)) << ' '
           << format_number(gp.output(1).alpha(j)) << ' ' << format_number(gp.output(2).alpha(j))
           << '\n';
    }
    return os.str();
}

CalibrationRun deserialize_model(std::string_view text, std::string_view source)
{
    const KeyValues kv(text, source);
    if (kv.str("format") != kMagic)
        kv.fail("not a gpcal model file");
    if (kv.integer("format_version") != kModelFormatVersion)
        kv.fail("unsupported format_version " + kv.str("format_version"));

    RunSpec spec;
    spec.kind = parse_model_kind(kv.str("model_kind"));
    spec.huber_c = kv.number("huber_c");
    spec.edge_stride = static_cast<int>(kv.integer("edge_stride"));
    spec.fit.seed = static_cast<std::uint64_t>(std::stoull(kv.str("fit_seed")));
    spec.fit.restarts = static_cast<int>(kv.integer("fit_restarts"));
    spec.fit.max_iterations = static_cast<int>(kv.integer("fit_max_iterations"));
    spec.fit.max_points = static_cast<int>(kv.integer("fit_max_points"));
    const auto m = static_cast<std::size_t>(kv.integer("tick_dim"));
    const auto n = static_cast<std::size_t>(kv.integer("training_size"));
    if (m < 1)
        kv.fail("tick_dim must be positive");

    auto row = [&](const std::string& key, std::size_t len) {
        const auto v = kv.numbers(key, len);
        return Eigen::RowVectorXd(Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(len)));
    };

    if (spec.kind == ModelKind::LinearHuber) {
        LinearModel lin;
        lin.huber_c = spec.huber_c;
        lin.W.resize(3, static_cast<Eigen::Index>(m));
        for (int i = 0; i < kOutputs; ++i)
            lin.W.row(i) = row("W." + std::to_string(i), m);
        lin.report.iterations = static_cast<int>(kv.integer("irls_iterations"));
        lin.report.objective = kv.number("huber_objective");
        lin.report.outliers = static_cast<int>(kv.integer("outliers"));
        return CalibrationRun(spec, std::move(lin), n, 0.0);
    }

    MeanSpec mean;
    const auto& mtag = kv.str("mean");
    if (mtag == "linear") {
        mean.kind = MeanKind::Linear;
        mean.C.resize(3, static_cast<Eigen::Index>(m));
        for (int i = 0; i < kOutputs; ++i)
            mean.C.row(i) = row("C." + std::to_string(i), m);
    } else if (mtag != "zero") {
        kv.fail("unknown mean '" + mtag + "'");
    }
    if (mean.kind != mean_kind_of(spec.kind))
        kv.fail("mean does not match model_kind");

    KernelSpec kernel;
    const auto& ktag = kv.str("kernel");
    if (ktag == "rbf")
        kernel.kind = KernelKind::Rbf;
    else if (ktag == "linear")
        kernel.kind = KernelKind::Linear;
    else if (ktag == "sum")
        kernel.kind = KernelKind::Sum;
    else
        kv.fail("unknown kernel '" + ktag + "'");
    if (kernel.kind != kernel_kind_of(spec.kind))
        kv.fail("kernel does not match model_kind");
    if (kernel.has_rbf())
        for (int i = 0; i < kOutputs; ++i) {
            auto& p = kernel.rbf[static_cast<std::size_t>(i)];
            p.sigma = kv.number("sigma." + std::to_string(i));
            p.length_diag = row("length_diag." + std::to_string(i), m).transpose();
        }

    const auto jit = kv.numbers("jitter", 3);
    Eigen::MatrixXd inputs(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    Eigen::MatrixXd noise(static_cast<Eigen::Index>(n), 3);
    Eigen::MatrixXd alpha(static_cast<Eigen::Index>(n), 3);
    for (std::size_t j = 0; j < n; ++j) {
        const auto idx = static_cast<Eigen::Index>(j);
        inputs.row(idx) = row("input." + std::to_string(j), m);
        noise.row(idx) = row("noise." + std::to_string(j), 3);
        alpha.row(idx) = row("alpha." + std::to_string(j), 3);
    }
    std::optional<Eigen::MatrixXd> weights;
    if (kv.has("weights.0")) {
        weights = Eigen::MatrixXd(static_cast<Eigen::Index>(m), 3);
        for (int i = 0; i < kOutputs; ++i)
            weights->col(i) = row("weights." + std::to_string(i), m).transpose();
    }
    GpModel gp = gp_restore(mean, kernel, inputs, noise, alpha, Eigen::Vector3d(jit[0], jit[1], jit[2]),
                            weights ? &*weights : nullptr);
    return CalibrationRun(spec, std::move(gp), n, 0.0);
}

void save_model(const std::filesystem::path& path, const CalibrationRun& run)
{
    save_text(path, serialize_model(run));
}

CalibrationRun load_model(const std::filesystem::path& path)
{
    return deserialize_model(load_text(path), path.string());
}

std::string fit_report(const CalibrationRun& run, const Dataset& training)
{
    std::ostringstream os;
    os << "model_kind = " << to_string(run.kind()) << '\n'
       << "training_size = " << run.training_size() << '\n';
    if (const auto* lin = std::get_if<LinearModel>(&run.model())) {
        for (int i = 0; i < kOutputs; ++i)
            os << "W." << i << " = " << join(lin->W.row(i)) << '\n';
        os << "huber_c = " << format_number(lin->huber_c) << '\n'
           << "huber_objective = " << format_number(lin->report.objective) << '\n'
           << "irls_iterations = " << lin->report.iterations << '\n'
           << "outliers = " << lin->report.outliers << '\n';
    } else {
        const auto& gp = std::get<GpModel>(run.model());
        if (gp.mean().kind == MeanKind::Linear)
            for (int i = 0; i < kOutputs; ++i)
                os << "C." << i << " = " << join(gp.mean().C.row(i)) << '\n';
        if (gp.kernel().has_rbf())
            for (int i = 0; i < kOutputs; ++i) {
                const auto& p = gp.kernel().rbf[static_cast<std::size_t>(i)];
                os << "sigma." << i << " = " << format_number(p.sigma) << '\n'
                   << "B_diag." << i << " = " << join(p.length_diag.transpose()) << '\n';
            }
        if (run.fit() && !run.fit()->improved)
            os << "warning = hyperparameter search did not improve on the initial guess\n";
        const Dataset strided = apply_stride(training, run.spec().edge_stride);
        try {
            os << "log_marginal_likelihood = "
               << format_number(log_marginal_likelihood(strided, gp.mean(), gp.kernel())) << '\n';
        } catch (const NumericalError&) {
            os << "log_marginal_likelihood = nan\n";
        }
    }
    os << "wall_time_s = " << format_number(run.train_seconds()) << '\n';
    return os.str();
}

} // namespace gpcal
