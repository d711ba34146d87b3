#include <CLI11.hpp>

#include <gaussldt/gaussldt.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace gaussldt;

namespace {

struct Common {
    std::string config;
    std::string bath;
    std::string out;
    std::string preset;
    std::string dump_dir;
    double dump_s = 1.0;
    int threads = 0;
};

struct Grid {
    std::optional<double> s_min, s_max;
    std::optional<int> s_steps;
    std::string s_grid;
};

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) parts.push_back(item);
    return parts;
}

double to_double(const std::string& s) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("not a number: '" + s + "'");
    }
}

// lo:hi:n
void parse_range(const std::string& text, double& lo, double& hi, int& n) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) throw ConfigError("range must look like lo:hi:n, got '" + text + "'");
    lo = to_double(parts[0]);
    hi = to_double(parts[1]);
    const double nn = to_double(parts[2]);
    if (nn < 1 || nn != std::floor(nn)) throw ConfigError("range point count must be a positive integer");
    n = static_cast<int>(nn);
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
    return v;
}

config::ModelConfig load_model(const Common& c) {
    if (c.config.empty()) throw ConfigError("--config is required");
    return config::load(c.config);
}

std::optional<std::string> bath_override(const Common& c) {
    if (c.bath.empty()) return std::nullopt;
    return c.bath;
}

// Writes to --out, or stdout when it is empty.
class Sink {
public:
    explicit Sink(const std::string& path) {
        if (!path.empty()) {
            if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) throw ConfigError("cannot write " + path);
        }
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

void maybe_dump(const Common& c, const NetworkSpec& net, const CountingSpec& counting) {
    if (c.dump_dir.empty()) return;
    const PhaseSpaceSystem sys = assemble(net);
    const BiasMatrices b = assemble_bias(net, counting, c.dump_s);
    dump_matrices(c.dump_dir, sys, &b);
}

fs::path preset_dir(const Common& c) {
    fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& body) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << body;
}

void report_sweep_failures(const std::vector<SweepRow>& rows) {
    for (const auto& r : rows)
        if (!r.error.empty()) std::cerr << "warning: param " << csv::num(r.param_value) << ": " << r.error << '\n';
}

int run_preset(const Common& c, const std::vector<std::string>& allowed) {
    if (std::find(allowed.begin(), allowed.end(), c.preset) == allowed.end()) {
        std::string list;
        for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
        throw ConfigError("preset '" + c.preset + "' does not belong to this command (expected " + list + ")");
    }
    const unsigned threads = resolve_threads(c.threads);
    const fs::path dir = preset_dir(c);
    for (const auto& series : presets::figure(c.preset)) {
        std::ostringstream body;
        using K = presets::Series::Kind;
        if (series.kind == K::theta_curve) {
            ThetaEvaluator ev(series.model.build(), series.model.counting(series.bath));
            write_theta_csv(body, default_theta_curve(ev, threads));
        } else if (series.kind == K::sweep) {
            const auto rows = run_sweep(series.model, series.bath, series.param, series.values, threads);
            report_sweep_failures(rows);
            write_sweep_csv(body, rows);
        } else {
            write_kappa_csv(body, run_kappa_scan(series.model, series.bath, series.param, series.values, threads));
        }
        write_file(dir / (series.name + ".csv"), body.str());
        std::cerr << "wrote " << (dir / (series.name + ".csv")).string() << '\n';
    }
    return exit_code::ok;
}

int cmd_theta(const Common& c, const Grid& g) {
    if (!c.preset.empty()) return run_preset(c, {"fig1", "fig4"});
    const auto model = load_model(c);
    const NetworkSpec net = model.build();
    const CountingSpec counting = model.counting(bath_override(c));
    maybe_dump(c, net, counting);
    ThetaEvaluator ev(net, counting);
    const unsigned threads = resolve_threads(c.threads);
    ThetaCurve curve;
    if (!g.s_grid.empty()) {
        double lo, hi;
        int n;
        parse_range(g.s_grid, lo, hi, n);
        curve = theta_curve(ev, lo, hi, n, threads);
    } else if (g.s_min || g.s_max || g.s_steps) {
        if (!g.s_min || !g.s_max) throw ConfigError("--s-min and --s-max must be given together");
        curve = theta_curve(ev, *g.s_min, *g.s_max, g.s_steps.value_or(201), threads);
    } else {
        curve = default_theta_curve(ev, threads);
    }
    Sink sink(c.out);
    write_theta_csv(sink.stream(), curve);
    return exit_code::ok;
}

int cmd_sweep(const Common& c, const std::string& param, const std::string& values, const std::string& range,
              bool log_spacing, double threshold) {
    if (!c.preset.empty()) return run_preset(c, {"fig2", "fig3", "fig5", "fig6"});
    auto model = load_model(c);
    std::string p = param;
    std::vector<double> grid;
    if (!values.empty()) {
        for (const auto& v : split(values, ',')) grid.push_back(to_double(v));
    } else if (!range.empty()) {
        double lo, hi;
        int n;
        parse_range(range, lo, hi, n);
        grid = log_spacing ? presets::logspace(lo, hi, n) : linspace(lo, hi, n);
    } else if (model.sweep) {
        grid = model.sweep->values;
        if (p.empty()) p = model.sweep->param;
    }
    if (p.empty() && model.sweep) p = model.sweep->param;
    if (p.empty()) throw ConfigError("no sweep parameter (use --param or a 'sweep' block)");
    if (grid.empty()) throw ConfigError("no sweep values (use --values, --range or a 'sweep' block)");
    const std::string bath = model.counting(bath_override(c)).bath;
    maybe_dump(c, model.build(), {bath});
    const auto rows = run_sweep(model, bath, p, grid, resolve_threads(c.threads), threshold);
    report_sweep_failures(rows);
    Sink sink(c.out);
    write_sweep_csv(sink.stream(), rows);
    return exit_code::ok;
}

int cmd_cumulants(const Common& c, int order, double h) {
    const auto model = load_model(c);
    const NetworkSpec net = model.build();
    const CountingSpec counting = model.counting(bath_override(c));
    maybe_dump(c, net, counting);
    ThetaEvaluator ev(net, counting);
    const CumulantSet k = cumulants(ev, order, h);
    Sink sink(c.out);
    auto& out = sink.stream();
    out << "order,kappa\n";
    for (std::size_t i = 0; i < k.kappa.size(); ++i) csv::row(out, {std::to_string(i + 1), csv::num(k.kappa[i])});
    return exit_code::ok;
}

int cmd_oracle(const Common& c, const Grid& g, double tol, int n_fixed, double max_mib) {
    const auto model = load_model(c);
    const NetworkSpec net = model.build();
    const CountingSpec counting = model.counting(bath_override(c));
    maybe_dump(c, net, counting);
    fock::Limits lim;
    if (max_mib > 0) lim.max_bytes = static_cast<std::size_t>(max_mib * 1024.0 * 1024.0);
    fock::check_supported(net, std::max(n_fixed, 2), lim);
    ThetaEvaluator ev(net, counting);

    std::vector<double> grid;
    if (!g.s_grid.empty()) {
        double lo, hi;
        int n;
        parse_range(g.s_grid, lo, hi, n);
        grid = linspace(lo, hi, n);
    } else if (g.s_min || g.s_max) {
        if (!g.s_min || !g.s_max) throw ConfigError("--s-min and --s-max must be given together");
        grid = linspace(*g.s_min, *g.s_max, g.s_steps.value_or(21));
    } else {
        const Domain d = ev.domain();
        const double mid = 0.5 * (d.lo + d.hi), half = 0.4 * d.width();
        grid = linspace(mid - half, mid + half, g.s_steps.value_or(21));
    }

    struct Row {
        double gauss = NAN, fock = NAN;
        int n_max = 0;
    };
    std::vector<Row> rows(grid.size());
    std::vector<std::string> errors(grid.size());
    parallel_for(grid.size(), resolve_threads(c.threads), [&](std::size_t i) {
        const double s = grid[i];
        const ThetaPoint p = ev.point(s);
        if (p.solvable && ev.domain().contains(s)) rows[i].gauss = p.theta;
        try {
            if (n_fixed > 0) {
                fock::EigenOptions eo;
                eo.limits = lim;
                const fock::TruncatedGenerator gen = fock::build_biased_generator(net, counting, s, n_fixed, lim);
                if (gen.dim > lim.dense_max) {
                    const auto coarse = fock::coarse_estimate(net, counting, s, lim);
                    eo.hint = coarse.theta;
                    eo.gap = coarse.gap;
                }
                rows[i].fock = fock::leading_theta(gen, eo);
                rows[i].n_max = n_fixed;
            } else {
                const fock::Truncation t = fock::auto_truncate(net, counting, s, tol, lim);
                rows[i].fock = t.theta;
                rows[i].n_max = t.n_max;
            }
        } catch (const ResourceRefusal&) {
            throw;
        } catch (const ConvergenceError& e) {
            errors[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (!errors[i].empty()) std::cerr << "warning: s = " << csv::num(grid[i]) << ": " << errors[i] << '\n';

    Sink sink(c.out);
    auto& out = sink.stream();
    out << "s,theta_gauss,theta_fock,abs_diff,n_max\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Row& r = rows[i];
        csv::row(out, {csv::num(grid[i]), csv::num(r.gauss), csv::num(r.fock), csv::num(std::abs(r.gauss - r.fock)),
                       std::to_string(r.n_max)});
    }
    return exit_code::ok;
}

int cmd_validate(const Common& c) {
    const auto model = load_model(c);
    const NetworkSpec net = model.build();
    const ValidationReport rep = validate(net);
    for (const auto& i : rep.issues)
        std::cout << (i.severity == Issue::Severity::error ? "error" : "warning") << ' ' << i.code << ": "
                  << i.message << '\n';
    if (!rep.ok()) return exit_code::config;
    std::cout << "oscillator,gamma_down,gamma_up,lambda_re,lambda_im\n";
    for (std::size_t k = 0; k < rep.aggregate.size(); ++k) {
        const auto& a = rep.aggregate[k];
        csv::row(std::cout, {std::to_string(k), csv::num(a.gamma_down), csv::num(a.gamma_up),
                             csv::num(a.lambda.real()), csv::num(a.lambda.imag())});
    }
    const CountingSpec counting = model.counting(bath_override(c));
    resolve_bath(net, counting);
    const PhaseSpaceSystem sys = assemble(net);
    maybe_dump(c, net, counting);
    const double margin = stability_margin(sys.drift);
    std::cout << "stability_margin," << csv::num(margin) << '\n';
    if (!(margin < 0.0)) {
        std::cout << "unstable: no stationary state\n";
        return exit_code::instability;
    }
    std::cout << "ok\n";
    return exit_code::ok;
}

void add_common(CLI::App* sub, Common& c, bool with_preset) {
    sub->add_option("--config", c.config, "Network description (JSON)");
    sub->add_option("--bath", c.bath, "Label of the reference bath (overrides counting.bath)");
    sub->add_option("--out", c.out, "Output file (directory for presets); stdout if omitted");
    sub->add_option("--threads", c.threads, "Worker threads (default: GAUSSLDT_THREADS or all cores)");
    sub->add_option("--dump-matrices", c.dump_dir, "Write A, D, d(0), F+ and F- as Matrix Market files");
    sub->add_option("--dump-s", c.dump_s, "Bias value used for the dumped F matrices")->capture_default_str();
    if (with_preset) sub->add_option("--preset", c.preset, "Figure preset");
}

void add_grid(CLI::App* sub, Grid& g) {
    sub->add_option("--s-min", g.s_min, "Lower end of the s grid");
    sub->add_option("--s-max", g.s_max, "Upper end of the s grid");
    sub->add_option("--s-steps", g.s_steps, "Number of grid points");
    sub->add_option("--s-grid", g.s_grid, "Grid as lo:hi:n");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Large-deviation functions and local fluctuation theorems for harmonic networks"};
    app.require_subcommand(1);

    Common common;
    Grid grid;

    auto* theta = app.add_subcommand("theta", "theta(s) on an s grid");
    add_common(theta, common, true);
    add_grid(theta, grid);

    std::string param, values, range;
    bool log_spacing = false;
    double threshold = 1e-2;
    auto* sweep = app.add_subcommand("ft-sweep", "Fluctuation-theorem report over a parameter sweep");
    add_common(sweep, common, true);
    sweep->add_option("--param", param, "Swept parameter: T1, g or gamma");
    sweep->add_option("--values", values, "Comma-separated parameter values");
    sweep->add_option("--range", range, "Parameter grid as lo:hi:n");
    sweep->add_flag("--log", log_spacing, "Logarithmic spacing for --range");
    sweep->add_option("--threshold", threshold, "Sym threshold")->capture_default_str();

    int order = 2;
    double h = 0.0;
    auto* cum = app.add_subcommand("cumulants", "Scaled cumulants of the counting process");
    add_common(cum, common, false);
    cum->add_option("--order", order, "Highest cumulant order")->capture_default_str();
    cum->add_option("--step", h, "Finite-difference step (0 = min(1e-3, 2% of the distance to the nearest branch point))")->capture_default_str();

    double tol = 1e-8, max_mib = 0.0;
    int n_fixed = 0;
    auto* oracle = app.add_subcommand("oracle-compare", "Gaussian theta against the truncated Fock-space oracle");
    add_common(oracle, common, false);
    add_grid(oracle, grid);
    oracle->add_option("--tol", tol, "Truncation convergence tolerance")->capture_default_str();
    oracle->add_option("--n-max", n_fixed, "Fixed truncation per mode (disables auto truncation)");
    oracle->add_option("--max-mib", max_mib, "Memory limit for the oracle in MiB (default 2048)");

    auto* val = app.add_subcommand("validate", "Check a network description");
    add_common(val, common, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_code::config;
    }

    try {
        if (*theta) return cmd_theta(common, grid);
        if (*sweep) return cmd_sweep(common, param, values, range, log_spacing, threshold);
        if (*cum) return cmd_cumulants(common, order, h);
        if (*oracle) return cmd_oracle(common, grid, tol, n_fixed, max_mib);
        if (*val) return cmd_validate(common);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
    return exit_code::ok;
}
