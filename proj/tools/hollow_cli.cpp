// hollow - command-line front end.
//
//   simulate  synthetic realizations around a known manifold (+ roles, truth)
//   cluster   dynamic clustering of a CSV stream; prints clusters and the
//             fusion-search trace
//   krige     interpolates a stored model at given independent coordinates
//   monitor   streaming fast/trend monitoring; alarms as JSON Lines on stdout
//   verify    Monte-Carlo checks of the shell statistics
//   report    distance trace, shell band and alarms as CSV + SVG
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hollow/clustering.hpp"
#include "hollow/io.hpp"
#include "hollow/kriging.hpp"
#include "hollow/pipeline.hpp"
#include "hollow/shell_stats.hpp"
#include "hollow/synth.hpp"

namespace {

namespace io = hollow::io;
namespace synth = hollow::synth;
using hollow::Vector;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

Vector parse_vector(const std::string& text, const std::string& flag) {
    Vector out;
    for (const auto& item : split_list(text, ',')) {
        try {
            out.push_back(io::parse_double(item, flag));
        } catch (const io::DataError& e) {
            throw UsageError(e.what());
        }
    }
    if (out.empty()) throw UsageError(flag + ": expected a comma-separated list of numbers");
    return out;
}

// ---------------------------------------------------------------------------
// simulate

struct Defect {
    std::vector<std::size_t> dims;  // empty = all dependent dims
    double offset = 0.0;
    std::size_t from = 0;
};

// "dims:offset:index" where dims is "all", "a-b" or "i,j,k" (0-based).
Defect parse_defect(const std::string& text, std::size_t n) {
    const auto parts = split_list(text, ':');
    if (parts.size() != 3) throw UsageError("--defect: expected dims:offset:index");
    Defect d;
    try {
        d.offset = io::parse_double(parts[1], "--defect offset");
        const double from = io::parse_double(parts[2], "--defect index");
        if (from < 0 || from != std::floor(from)) throw UsageError("--defect: index must be a non-negative integer");
        d.from = static_cast<std::size_t>(from);
        if (parts[0] == "all") {
            for (std::size_t i = 0; i < n; ++i) d.dims.push_back(i);
        } else if (const auto dash = parts[0].find('-'); dash != std::string::npos) {
            const auto lo = static_cast<std::size_t>(io::parse_double(parts[0].substr(0, dash), "--defect dims"));
            const auto hi = static_cast<std::size_t>(io::parse_double(parts[0].substr(dash + 1), "--defect dims"));
            for (std::size_t i = lo; i <= hi; ++i) d.dims.push_back(i);
        } else {
            for (const auto& item : split_list(parts[0], ',')) {
                d.dims.push_back(static_cast<std::size_t>(io::parse_double(item, "--defect dims")));
            }
        }
    } catch (const io::DataError& e) {
        throw UsageError(e.what());
    }
    if (d.dims.empty()) throw UsageError("--defect: empty dimension set");
    for (std::size_t i : d.dims) {
        if (i >= n) throw UsageError("--defect: dimension " + std::to_string(i) + " out of range (N = " + std::to_string(n) + ")");
    }
    return d;
}

struct SimulateArgs {
    std::string manifold = "point";
    std::size_t n = 100;
    std::optional<std::size_t> l;
    double eps0 = 1.0;
    std::size_t m = 1000;
    std::uint64_t seed = 1;
    double radius = 10.0;
    double extent = 10.0;
    std::string defect;
    std::string out;
};

int run_simulate(const SimulateArgs& a) {
    synth::ManifoldSpec spec;
    try {
        spec.kind = synth::parse_manifold_kind(a.manifold);
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("--manifold: ") + e.what());
    }
    if (spec.kind == synth::ManifoldKind::flat) {
        if (!a.l) throw UsageError("--l is required for a flat manifold");
        spec.flat_dims = *a.l;
    } else if (a.l && *a.l != synth::manifold_dims(spec.kind)) {
        throw UsageError("--l " + std::to_string(*a.l) + " does not match manifold '" + a.manifold + "' (L = " +
                         std::to_string(synth::manifold_dims(spec.kind)) + ")");
    }
    spec.dims = a.n;
    spec.eps0 = a.eps0;
    spec.seed = a.seed;
    spec.radius = a.radius;
    spec.extent = a.extent;
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    std::optional<Defect> defect;
    if (!a.defect.empty()) defect = parse_defect(a.defect, a.n);

    auto cloud = synth::gen_cloud(spec, a.m);
    if (defect) synth::inject_defect(cloud.realizations, defect->dims, defect->offset, defect->from);

    const std::size_t L = spec.latent_dims();
    std::vector<std::string> columns;
    io::Json roles = io::Json::object();
    for (std::size_t l = 0; l < L; ++l) {
        columns.push_back("w" + std::to_string(l + 1));
        roles[columns.back()] = "independent";
    }
    for (std::size_t n = 0; n < a.n; ++n) {
        columns.push_back("y" + std::to_string(n + 1));
        roles[columns.back()] = "dependent";
    }
    std::vector<Vector> rows;
    rows.reserve(a.m);
    for (std::size_t m = 0; m < a.m; ++m) {
        Vector row = cloud.latent[m];
        row.insert(row.end(), cloud.realizations[m].begin(), cloud.realizations[m].end());
        rows.push_back(std::move(row));
    }

    std::ofstream out(a.out);
    if (!out) throw io::DataError("cannot write " + a.out);
    io::write_csv(out, columns, rows);

    io::write_json_file(a.out + ".roles.json", roles);

    std::vector<std::string> truth_cols;
    for (std::size_t l = 0; l < L; ++l) truth_cols.push_back("w" + std::to_string(l + 1));
    truth_cols.push_back("noise_length");
    truth_cols.push_back("perpendicular");
    truth_cols.push_back("defect");
    std::vector<Vector> truth;
    for (std::size_t m = 0; m < a.m; ++m) {
        const auto& t = cloud.truth[m];
        Vector row = t.latent;
        row.push_back(t.noise_length);
        // Perpendicular distance of the clean realization; undefined for curves.
        row.push_back(std::isnan(t.perpendicular) ? -1.0 : t.perpendicular);
        row.push_back(defect && m >= defect->from ? 1.0 : 0.0);
        truth.push_back(std::move(row));
    }
    std::ofstream tout(a.out + ".truth.csv");
    if (!tout) throw io::DataError("cannot write " + a.out + ".truth.csv");
    io::write_csv(tout, truth_cols, truth);

    std::cerr << "wrote " << a.m << " realizations (" << columns.size() << " columns) to " << a.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// Shared input loading

struct Stream {
    io::Roles roles;
    std::vector<Vector> rows;
};

Stream load_stream(const std::string& csv, const std::string& roles_path) {
    const io::Table table = io::read_csv_file(csv);
    io::Roles roles = io::resolve_roles(io::read_json_file(roles_path), table.columns);
    if (roles.columns.empty()) throw io::DataError(roles_path + ": no column is used");
    auto rows = io::select_columns(table, roles);
    return {std::move(roles), std::move(rows)};
}

// ---------------------------------------------------------------------------
// cluster

struct ClusterArgs {
    std::string in;
    std::string roles;
    std::size_t kmax = 50;
    double cdist = 1.5;
    std::string model_out;
    std::size_t trace_every = 100;
};

int run_cluster(const ClusterArgs& a) {
    Stream s = load_stream(a.in, a.roles);
    hollow::Mask mask = [&] {
        try {
            return hollow::Mask(s.roles.independent);
        } catch (const std::invalid_argument&) {
            throw io::DataError(a.roles + ": clustering needs at least one independent column");
        }
    }();
    hollow::ClusterModel model(a.kmax, a.cdist, mask);
    hollow::Normalizer norm(s.roles.columns.size());

    std::cout << "# fusion_search_count trace\n";
    std::cout << "kcount,fusion_search_count,shelldist,clusters\n";
    for (std::size_t i = 0; i < s.rows.size(); ++i) {
        norm.observe(s.rows[i]);
        model.ingest(s.rows[i], norm.scales());
        if ((i + 1) % a.trace_every == 0 || i + 1 == s.rows.size()) {
            std::cout << model.kcount() << "," << model.fusion_search_count() << "," << io::format_double(model.shelldist())
                      << "," << model.clusters().size() << "\n";
        }
    }

    std::cout << "\n# clusters\nindex,population,cvar";
    for (std::size_t i : mask.independent_indices()) std::cout << "," << s.roles.columns[i];
    std::cout << "\n";
    for (std::size_t k = 0; k < model.clusters().size(); ++k) {
        const auto& c = model.clusters()[k];
        std::cout << k << "," << c.population << "," << io::format_double(c.cvar);
        for (std::size_t i : mask.independent_indices()) std::cout << "," << io::format_double(c.centroid[i]);
        std::cout << "\n";
    }
    std::cerr << "clusters: " << model.clusters().size() << ", shelldist " << model.shelldist() << ", dmax " << model.dmax()
              << ", fusion searches " << model.fusion_search_count() << "\n";

    if (!a.model_out.empty()) io::write_json_file(a.model_out, io::to_json(s.roles.columns, norm, model));
    return 0;
}

// ---------------------------------------------------------------------------
// krige

struct KrigeArgs {
    std::string model;
    std::string at;
};

int run_krige(const KrigeArgs& a) {
    const Vector w = parse_vector(a.at, "--at");
    const io::Json j = io::read_json_file(a.model);
    io::check_schema(j, "");
    const std::string kind = j.value("kind", "");

    std::optional<hollow::KrigingModel> model;
    std::vector<std::string> columns;
    std::vector<bool> independent;
    if (kind == "cluster") {
        const auto file = io::cluster_file_from_json(j);
        columns = file.columns;
        independent = file.model.mask().flags();
        model = hollow::KrigingModel::fit(file.model.clusters(), file.model.mask(), file.normalizer.scales());
    } else if (kind == "monitor") {
        const auto file = io::monitor_from_json(j);
        columns = file.columns;
        independent = file.monitor.roles();
        if (!file.monitor.kriging()) throw io::DataError(a.model + ": monitor model holds no fitted manifold");
        model = *file.monitor.kriging();
    } else {
        throw io::DataError(a.model + ": unknown model kind '" + kind + "'");
    }
    if (w.size() != model->independent_dims()) {
        throw UsageError("--at: expected " + std::to_string(model->independent_dims()) + " coordinates, got " +
                         std::to_string(w.size()));
    }
    const auto r = model->interpolate(w);
    io::Json out;
    out["at"] = w;
    std::vector<std::string> dep;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (!independent[i]) dep.push_back(columns[i]);
    }
    out["columns"] = dep;
    out["estimate"] = r.estimate;
    out["sigma_m"] = r.sigma_m;
    std::cout << out.dump() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// monitor / report

struct MonitorArgs {
    std::string in;
    std::string roles;
    std::string model_in;
    std::string model_out;
    hollow::MonitorConfig config;
};

struct TraceRow {
    std::uint64_t index;
    hollow::FastTrace fast;
    bool fast_alarm;
    bool trend_alarm;
};

// Runs the monitor over the stream; alarms go to `alarms`, diagnostics to stderr.
std::vector<TraceRow> run_stream(const MonitorArgs& a, const std::vector<const CLI::Option*>& config_flags,
                                 std::ostream* alarms) {
    if (a.roles.empty() && a.model_in.empty()) throw UsageError("--roles is required without --model-in");
    std::vector<std::string> columns;
    std::optional<hollow::Monitor> monitor;
    if (!a.model_in.empty()) {
        for (const auto* opt : config_flags) {
            if (opt->count() > 0) throw UsageError(opt->get_name() + " cannot be combined with --model-in (the model carries its configuration)");
        }
        auto file = io::load(a.model_in);
        columns = std::move(file.columns);
        monitor.emplace(std::move(file.monitor));
    }

    const io::Table table = io::read_csv_file(a.in);
    io::Roles roles;
    if (!a.roles.empty()) {
        roles = io::resolve_roles(io::read_json_file(a.roles), table.columns);
    } else {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            const auto it = std::find(table.columns.begin(), table.columns.end(), columns[i]);
            if (it == table.columns.end()) throw io::DataError(a.in + ": column '" + columns[i] + "' required by the model is missing");
            roles.columns.push_back(columns[i]);
            roles.source.push_back(static_cast<std::size_t>(it - table.columns.begin()));
            roles.independent.push_back(monitor->roles()[i]);
        }
    }
    if (monitor) {
        if (roles.columns != columns || roles.independent != monitor->roles()) {
            throw io::DataError(a.roles + ": roles differ from those stored in " + a.model_in);
        }
    } else {
        try {
            monitor.emplace(roles.independent, a.config);
        } catch (const std::invalid_argument& e) {
            throw io::DataError(std::string("roles: ") + e.what());
        }
        columns = roles.columns;
    }

    const auto rows = io::select_columns(table, roles);
    std::vector<TraceRow> trace;
    trace.reserve(rows.size());
    std::size_t fast = 0;
    std::size_t trend = 0;
    for (const auto& row : rows) {
        const auto r = monitor->process(row);
        for (const auto& d : r.diagnostics) std::cerr << "step " << r.index << ": " << d << "\n";
        if (r.fast_alarm) {
            ++fast;
            if (alarms) *alarms << io::alarm_line(*r.fast_alarm) << "\n";
        }
        if (r.trend_alarm) {
            ++trend;
            if (alarms) *alarms << io::alarm_line(*r.trend_alarm) << "\n";
        }
        trace.push_back({r.index, r.fast, r.fast_alarm.has_value(), r.trend_alarm.has_value()});
    }
    if (alarms) alarms->flush();
    std::cerr << "processed " << rows.size() << " realizations (total " << monitor->index() << "), " << fast
              << " fast and " << trend << " trend alarms\n";
    if (!a.model_out.empty()) io::save(a.model_out, columns, *monitor);
    return trace;
}

void write_svg(const std::string& path, const std::vector<TraceRow>& trace) {
    std::vector<const TraceRow*> pts;
    for (const auto& t : trace) {
        if (t.fast.evaluated) pts.push_back(&t);
    }
    const double width = 1000.0, height = 400.0, pad = 50.0;
    double lo = INFINITY, hi = -INFINITY;
    for (const auto* t : pts) {
        lo = std::min({lo, t->fast.distance, t->fast.shelldist - t->fast.bound});
        hi = std::max({hi, t->fast.distance, t->fast.shelldist + t->fast.bound});
    }
    if (pts.empty()) lo = 0.0, hi = 1.0;
    if (hi <= lo) hi = lo + 1.0;
    const double i0 = pts.empty() ? 0.0 : static_cast<double>(pts.front()->index);
    const double i1 = pts.empty() ? 1.0 : std::max(static_cast<double>(pts.back()->index), i0 + 1.0);
    auto px = [&](double i) { return pad + (i - i0) / (i1 - i0) * (width - 2 * pad); };
    auto py = [&](double v) { return height - pad - (v - lo) / (hi - lo) * (height - 2 * pad); };

    std::ofstream out(path);
    if (!out) throw io::DataError("cannot write " + path);
    out << std::setprecision(6);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    auto polyline = [&](auto value, const char* colour, double stroke) {
        out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"" << stroke << "\" points=\"";
        for (const auto* t : pts) out << px(static_cast<double>(t->index)) << "," << py(value(*t)) << " ";
        out << "\"/>\n";
    };
    polyline([](const TraceRow& t) { return t.fast.shelldist + t.fast.bound; }, "#d08770", 1.0);
    polyline([](const TraceRow& t) { return t.fast.shelldist - t.fast.bound; }, "#d08770", 1.0);
    polyline([](const TraceRow& t) { return t.fast.shelldist; }, "#5e81ac", 1.0);
    polyline([](const TraceRow& t) { return t.fast.distance; }, "#2e3440", 0.5);
    for (const auto* t : pts) {
        if (t->fast_alarm) {
            out << "<circle cx=\"" << px(static_cast<double>(t->index)) << "\" cy=\"" << py(t->fast.distance)
                << "\" r=\"3\" fill=\"#bf616a\"/>\n";
        }
        if (t->trend_alarm) {
            out << "<rect x=\"" << px(static_cast<double>(t->index)) - 2 << "\" y=\"" << pad - 12
                << "\" width=\"4\" height=\"8\" fill=\"#b48ead\"/>\n";
        }
    }
    out << "<text x=\"" << pad << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"12\">distance (black), shell "
           "centre (blue), alarm bound (orange), fast alarms (red), trend alarms (purple)</text>\n";
    out << "<text x=\"" << pad << "\" y=\"" << height - 15 << "\" font-family=\"sans-serif\" font-size=\"11\">index "
        << static_cast<std::uint64_t>(i0) << " - " << static_cast<std::uint64_t>(i1) << ", distance " << lo << " - "
        << hi << "</text>\n";
    out << "</svg>\n";
}

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace) {
    std::ofstream out(path);
    if (!out) throw io::DataError("cannot write " + path);
    out << "index,evaluated,distance,shelldist,sigma_m,bound,fast_alarm,trend_alarm\n";
    for (const auto& t : trace) {
        out << t.index << "," << (t.fast.evaluated ? 1 : 0) << "," << io::format_double(t.fast.distance) << ","
            << io::format_double(t.fast.shelldist) << "," << io::format_double(t.fast.sigma_m) << ","
            << io::format_double(t.fast.bound) << "," << (t.fast_alarm ? 1 : 0) << "," << (t.trend_alarm ? 1 : 0) << "\n";
    }
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
    std::uint64_t seed = 1;
    std::size_t samples = 10000;
};

struct Check {
    std::string name;
    double measured;
    double expected;
    std::string criterion;
    bool pass;
};

struct Sample {
    double mean = 0.0;
    double var = 0.0;
    double var_se = 0.0;  // standard error of the sample variance
};

Sample perpendicular_sample(std::size_t n, std::size_t l, std::size_t count, std::uint64_t seed) {
    synth::ManifoldSpec spec;
    spec.kind = l == 0 ? synth::ManifoldKind::point : synth::ManifoldKind::flat;
    spec.flat_dims = l;
    spec.dims = n;
    spec.seed = seed;
    const auto cloud = synth::gen_cloud(spec, count);
    std::vector<double> d;
    for (const auto& t : cloud.truth) d.push_back(t.perpendicular);
    Sample s;
    for (double v : d) s.mean += v;
    s.mean /= static_cast<double>(count);
    double m4 = 0.0;
    for (double v : d) {
        const double c = (v - s.mean) * (v - s.mean);
        s.var += c;
        m4 += c * c;
    }
    s.var /= static_cast<double>(count);
    m4 /= static_cast<double>(count);
    s.var_se = std::sqrt(std::max(m4 - s.var * s.var, 0.0) / static_cast<double>(count));
    return s;
}

int run_verify(const VerifyArgs& a) {
    std::vector<Check> checks;
    auto rel = [](double x, double y) { return std::fabs(x - y) / std::fabs(y); };

    {
        synth::ManifoldSpec spec;
        spec.dims = 1000;
        spec.seed = a.seed;
        const auto cloud = synth::gen_cloud(spec, a.samples);
        const auto shell = hollow::estimate_point_shell(cloud.realizations).shell;
        const auto chi = synth::chi_moments(1000.0);
        checks.push_back({"sphere hardening mu (N=1000)", shell.mu, chi.mean, "within 0.5%", rel(shell.mu, chi.mean) <= 0.005});
        checks.push_back({"sphere hardening sigma (N=1000)", shell.sigma(), std::sqrt(chi.variance), "within 5%",
                          rel(shell.sigma(), std::sqrt(chi.variance)) <= 0.05});
    }
    {
        const auto t = hollow::theoretical_shell(100, 3, 1.0);
        const auto s = perpendicular_sample(100, 3, a.samples, a.seed + 1);
        checks.push_back({"shell location mu (N=100, L=3)", s.mean, t.mu_exact, "within 1%", rel(s.mean, t.mu_exact) <= 0.01});
        checks.push_back({"  closed form sqrt(N-L)", t.mu_approx, t.mu_exact, "inside 1% band", rel(t.mu_approx, t.mu_exact) <= 0.01});
        checks.push_back({"shell thickness var (N=100, L=3)", s.var, t.var_exact, "within 10%", rel(s.var, t.var_exact) <= 0.10});
        checks.push_back({"  closed form N/(2(N-L))", t.var_approx, s.var, "reported", true});
    }
    {
        const auto t = hollow::theoretical_shell(100, 36, 1.0);
        const auto s = perpendicular_sample(100, 36, a.samples, a.seed + 2);
        const double half = 2.5758293035489 * s.var_se;
        const auto fixed4 = [](double v) {
            std::ostringstream o;
            o << std::fixed << std::setprecision(4) << v;
            return o.str();
        };
        checks.push_back({"shell thickness var (N=100, L=36)", s.var, t.var_exact, "within 10%", rel(s.var, t.var_exact) <= 0.10});
        checks.push_back({"  closed form N/(2(N-L)) vs 99% CI", t.var_approx, s.var, "outside +/-" + fixed4(half),
                          std::fabs(t.var_approx - s.var) > half});
    }
    {
        const auto pair = synth::monte_carlo_pair_distance(1000, 1.0, a.samples, a.seed + 3);
        const double expected = hollow::expected_pair_distance(1000, 0, 1.0);
        checks.push_back({"pair distance (N=1000)", pair.mean, expected, "within 1%", rel(pair.mean, expected) <= 0.01});
        const auto small = synth::monte_carlo_pair_distance(2, 1.0, 10 * a.samples, a.seed + 4);
        const double chi = std::sqrt(2.0) * synth::chi_moments(2.0).mean;
        checks.push_back({"pair distance (N=2) vs exact", small.mean, chi, "within 1%", rel(small.mean, chi) <= 0.01});
        checks.push_back({"  closed form sqrt(2N) (N=2)", hollow::expected_pair_distance(2, 0, 1.0), small.mean,
                          "reported", true});
    }

    bool ok = true;
    std::cout << std::left << std::setw(40) << "check" << std::setw(16) << "measured" << std::setw(16) << "expected"
              << std::setw(24) << "criterion" << "result\n";
    for (const auto& c : checks) {
        std::ostringstream m, e;
        m << std::setprecision(8) << c.measured;
        e << std::setprecision(8) << c.expected;
        std::cout << std::setw(40) << c.name << std::setw(16) << m.str() << std::setw(16) << e.str() << std::setw(24)
                  << c.criterion << (c.pass ? "PASS" : "FAIL") << "\n";
        ok = ok && c.pass;
    }
    if (!ok) {
        std::cerr << "verify: at least one check failed\n";
        return 2;
    }
    return 0;
}

void add_config_flags(CLI::App* cmd, hollow::MonitorConfig& c, std::vector<const CLI::Option*>& flags) {
    flags.push_back(cmd->add_option("--threshold-k", c.threshold_k, "alarm multiple of the shell spread")
                        ->check(CLI::PositiveNumber)->capture_default_str());
    flags.push_back(cmd->add_option("--alpha", c.alpha, "smoothing factor of the actualized response")
                        ->check(CLI::Range(1e-12, 1.0 - 1e-12))->capture_default_str());
    flags.push_back(cmd->add_option("--warmup", c.warmup, "realizations forming the initial history")
                        ->check(CLI::Range(std::uint64_t{4}, std::uint64_t{1} << 62))->capture_default_str());
    flags.push_back(cmd->add_option("--kmax", c.kmax, "number of clusters")->check(CLI::Range(std::size_t{2}, std::size_t{100000}))
                        ->capture_default_str());
    flags.push_back(cmd->add_option("--cdist", c.cdist, "merge radius multiplier")->check(CLI::PositiveNumber)->capture_default_str());
    flags.push_back(cmd->add_option("--refit-interval", c.refit_interval, "ingests between kriging refits")
                        ->check(CLI::PositiveNumber)->capture_default_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hollow-shell manifold monitoring"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "generate realizations around a manifold");
    simulate->add_option("--manifold", sim.manifold, "point | line | circle | curve | plane | flat")->capture_default_str();
    simulate->add_option("--n", sim.n, "dependent dimensions N")->check(CLI::PositiveNumber)->capture_default_str();
    simulate->add_option("--l", sim.l, "manifold dimensions L (required for flat)");
    simulate->add_option("--eps0", sim.eps0, "per-dimension noise sd")->check(CLI::NonNegativeNumber)->capture_default_str();
    simulate->add_option("--m", sim.m, "number of realizations")->check(CLI::PositiveNumber)->capture_default_str();
    simulate->add_option("--seed", sim.seed, "generator seed")->capture_default_str();
    simulate->add_option("--radius", sim.radius, "circle radius")->check(CLI::PositiveNumber)->capture_default_str();
    simulate->add_option("--extent", sim.extent, "parameter range of line/plane/flat/curve")->check(CLI::PositiveNumber)
        ->capture_default_str();
    simulate->add_option("--defect", sim.defect, "dims:offset:index, dims = all | a-b | i,j,...");
    simulate->add_option("--out", sim.out, "output CSV")->required();

    ClusterArgs cl;
    auto* cluster = app.add_subcommand("cluster", "dynamic clustering of a realization stream");
    cluster->add_option("--in", cl.in, "input CSV")->required();
    cluster->add_option("--roles", cl.roles, "roles JSON")->required();
    cluster->add_option("--kmax", cl.kmax, "number of clusters")->check(CLI::Range(std::size_t{2}, std::size_t{100000}))
        ->capture_default_str();
    cluster->add_option("--cdist", cl.cdist, "merge radius multiplier")->check(CLI::PositiveNumber)->capture_default_str();
    cluster->add_option("--model-out", cl.model_out, "write the cluster model (JSON)");
    cluster->add_option("--trace-every", cl.trace_every, "trace period in realizations")->check(CLI::PositiveNumber)
        ->capture_default_str();

    KrigeArgs kr;
    auto* krige = app.add_subcommand("krige", "interpolate a model at independent coordinates");
    krige->add_option("--model", kr.model, "cluster or monitor model (JSON)")->required();
    krige->add_option("--at", kr.at, "w1,...,wL")->required();

    MonitorArgs mon;
    std::vector<const CLI::Option*> mon_flags;
    auto* monitor = app.add_subcommand("monitor", "stream monitoring; alarms as JSON Lines on stdout");
    monitor->add_option("--in", mon.in, "input CSV")->required();
    monitor->add_option("--roles", mon.roles, "roles JSON (optional with --model-in)");
    monitor->add_option("--model-in", mon.model_in, "resume from a saved model");
    monitor->add_option("--model-out", mon.model_out, "save the model after the stream");
    add_config_flags(monitor, mon.config, mon_flags);

    VerifyArgs ver;
    auto* verify = app.add_subcommand("verify", "Monte-Carlo checks of the shell statistics");
    verify->add_option("--seed", ver.seed, "generator seed")->capture_default_str();
    verify->add_option("--samples", ver.samples, "samples per check")->check(CLI::Range(std::size_t{100}, std::size_t{10000000}))
        ->capture_default_str();

    MonitorArgs rep;
    std::vector<const CLI::Option*> rep_flags;
    std::string rep_csv, rep_svg;
    auto* report = app.add_subcommand("report", "distance trace, shell band and alarms as CSV and SVG");
    report->add_option("--in", rep.in, "input CSV")->required();
    report->add_option("--roles", rep.roles, "roles JSON (optional with --model-in)");
    report->add_option("--model-in", rep.model_in, "start from a saved model");
    report->add_option("--csv", rep_csv, "trace CSV output");
    report->add_option("--svg", rep_svg, "SVG plot output");
    add_config_flags(report, rep.config, rep_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*simulate) return run_simulate(sim);
        if (*cluster) return run_cluster(cl);
        if (*krige) return run_krige(kr);
        if (*monitor) {
            try {
                mon.config.validate();
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
            run_stream(mon, mon_flags, &std::cout);
            return 0;
        }
        if (*verify) return run_verify(ver);
        if (*report) {
            if (rep_csv.empty() && rep_svg.empty()) throw UsageError("report: give --csv and/or --svg");
            const auto trace = run_stream(rep, rep_flags, nullptr);
            if (!rep_csv.empty()) write_trace_csv(rep_csv, trace);
            if (!rep_svg.empty()) write_svg(rep_svg, trace);
            return 0;
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
