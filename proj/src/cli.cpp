#include "calib/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <locale>
#include <optional>
#include <regex>
#include <sstream>

#include "calib/verify.hpp"

namespace calib {

namespace {

using Json = nlohmann::ordered_json;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string command;
    int k = 4;
    int n = 0;
    std::string R_text = "pi/3";
    std::string R_grid_text;
    std::string R_seq_text = "1e-1,1e-2,1e-3";
    std::uint64_t seed = 42;
    int samples = 0;
    int boundary_samples = 64;
    double exclusion = 1e-3;
    double ode_tol = 1e-10;
    double quad_tol = 1e-9;
    double margin_tol = 1e-6;
    std::string format = "csv";
    std::string out;
    bool expect_nonnegative = false;

    bool R_given = false;
    bool R_grid_given = false;
    bool R_seq_given = false;

    int ambient() const { return n > 0 ? n : k + 1; }
};

double parse_number(const std::string& text)
{
    double value = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    if (!text.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) throw std::invalid_argument("not a number: '" + text + "'");
    return value;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

std::vector<double> parse_grid(const std::string& text)
{
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
    if (parts.size() != 3) throw UsageError("--R-grid expects start:stop:step, got '" + text + "'");
    const double start = parse_radius(parts[0]);
    const double stop = parse_radius(parts[1]);
    const double step = parse_radius(parts[2]);
    if (!(step > 0.0)) throw UsageError("--R-grid step must be positive");
    if (stop < start) throw UsageError("--R-grid is empty (stop < start)");
    std::vector<double> grid;
    const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9));
    for (long i = 0; i <= count; ++i) grid.push_back(start + static_cast<double>(i) * step);
    return grid;
}

std::vector<double> parse_list(const std::string& text)
{
    std::vector<double> values;
    std::stringstream ss(text);
    for (std::string part; std::getline(ss, part, ',');) values.push_back(parse_radius(part));
    return values;
}

std::string fmt(double v)
{
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os.precision(17);
    os << v;
    return os.str();
}

Json config_json(const RunConfig& c)
{
    Json j;
    j["command"] = c.command;
    j["k"] = c.k;
    j["n"] = c.ambient();
    if (c.R_grid_given) {
        j["R_grid"] = c.R_grid_text;
    } else if (c.command == "euclid") {
        j["R_seq"] = c.R_seq_text;
    } else {
        j["R"] = parse_radius(c.R_text);
    }
    j["seed"] = c.seed;
    j["samples"] = c.samples;
    j["boundary_samples"] = c.boundary_samples;
    j["exclusion_radius"] = c.exclusion;
    j["ode_tol"] = c.ode_tol;
    j["quad_tol"] = c.quad_tol;
    j["margin_tol"] = c.margin_tol;
    j["format"] = c.format;
    j["expect_nonnegative"] = c.expect_nonnegative;
    return j;
}

BuildOptions build_options(const RunConfig& c)
{
    BuildOptions b;
    b.ode.tol = c.ode_tol;
    b.quad.abs_tol = c.quad_tol;
    b.exclusion_radius = c.exclusion;
    return b;
}

// Writes either to --out or to the given stream.
class Sink {
public:
    Sink(const RunConfig& c, std::ostream& fallback) : fallback_(fallback), path_(c.out) {}

    void write(const std::string& text)
    {
        if (path_.empty()) {
            fallback_ << text;
            return;
        }
        std::ofstream file(path_, std::ios::binary);
        if (!file) throw UsageError("cannot open output file '" + path_ + "'");
        file << text;
    }

    // Companion summary next to a CSV file, or on the error stream without --out.
    void write_summary(const Json& summary, std::ostream& err)
    {
        if (path_.empty()) {
            err << summary.dump() << '\n';
            return;
        }
        std::ofstream file(path_ + ".summary.json", std::ios::binary);
        if (!file) throw UsageError("cannot open output file '" + path_ + ".summary.json'");
        file << summary.dump(2) << '\n';
    }

private:
    std::ostream& fallback_;
    std::string path_;
};

void require_even(int k, int minimum)
{
    if (k % 2 != 0) {
        throw UnsupportedDimension("unsupported odd dimension k = " + std::to_string(k) +
                                   ": h is constructed only for even k");
    }
    if (k < minimum) {
        throw UsageError("k must be at least " + std::to_string(minimum) + " for this command");
    }
}

void check_common(const RunConfig& c)
{
    if (!(c.ode_tol > 0.0) || !(c.quad_tol > 0.0) || !(c.margin_tol > 0.0) || !(c.exclusion > 0.0)) {
        throw UsageError("tolerances and the exclusion radius must be positive");
    }
    if (c.n != 0 && c.n < c.k) throw UsageError("--n must be at least k");
}

int cmd_h_profile(const RunConfig& c, std::ostream& out, std::ostream& err)
{
    require_even(c.k, 4);
    const double R = parse_radius(c.R_text);
    if (!(R > 0.0 && R <= kPi / 2 + 1e-15)) throw UsageError("R must lie in (0, pi/2]");
    const int samples = c.samples;
    if (samples < 2) throw UsageError("--samples must be at least 2");

    HSolveOptions opts;
    opts.tol = c.ode_tol;
    const HSolution sol = solve_h(assemble_system(c.k / 2, R), opts);
    const ConstraintReport constraint = constraint_check(c.k, R, opts);

    Json summary;
    summary["config"] = config_json(c);
    summary["k"] = c.k;
    summary["R"] = R;
    summary["integral"] = sol.integral;
    summary["min_h"] = sol.min_h;
    summary["argmin"] = sol.argmin;
    summary["constraint_residual"] = constraint.residual;

    const double s_end = kPi - sol.end_gap;
    std::vector<double> s_values(static_cast<std::size_t>(samples));
    for (int i = 0; i < samples; ++i) s_values[i] = R + (s_end - R) * i / (samples - 1);

    Sink sink(c, out);
    if (c.format == "json") {
        Json profile;
        profile["s"] = s_values;
        Json h_col = Json::array();
        Json f_cols = Json::array();
        for (double s : s_values) {
            h_col.push_back(sol.h(s));
            const Vec f = sol.f(s);
            f_cols.push_back(std::vector<double>(f.data(), f.data() + f.size()));
        }
        profile["h"] = h_col;
        profile["f"] = f_cols;
        summary["profile"] = profile;
        sink.write(summary.dump(2) + "\n");
        return 0;
    }

    std::ostringstream csv;
    csv << "s,h";
    for (int i = 1; i < sol.j(); ++i) csv << ",f_" << i;
    csv << '\n';
    for (double s : s_values) {
        csv << fmt(s) << ',' << fmt(sol.h(s));
        const Vec f = sol.f(s);
        for (int i = 0; i < f.size(); ++i) csv << ',' << fmt(f(i));
        csv << '\n';
    }
    sink.write(csv.str());
    sink.write_summary(summary, err);
    return 0;
}

Json check_entry(bool pass, double value, double tolerance)
{
    Json j;
    j["status"] = pass ? "PASS" : "FAIL";
    j["value"] = value;
    j["tolerance"] = tolerance;
    return j;
}

int cmd_verify(const RunConfig& c, std::ostream& out, std::ostream& err)
{
    require_even(c.k, 2);
    const double R = parse_radius(c.R_text);
    const BallSpec spec = BallSpec::canonical(c.ambient(), c.k, R);
    const BuildOptions build = build_options(c);
    const int samples = c.samples;

    Json report;
    report["config"] = config_json(c);
    Json checks;
    bool all_pass = true;
    auto record = [&](const std::string& name, Json entry) {
        all_pass = all_pass && entry["status"] == "PASS";
        checks[name] = std::move(entry);
    };

    try {
        if (c.k >= 4) {
            const HSolution h = solve_h(assemble_system(c.k / 2, R), build.ode);
            Json sign = check_entry(h.min_h >= -1e-10, h.min_h, 1e-10);
            sign["argmin"] = h.argmin;
            record("h_sign", sign);
            if (h.min_h < -1e-10) {
                throw SignViolation("h has negative values; the divergence bound does not apply");
            }
        }
        const CompositeField field = build_W(spec, build);

        const auto boundary = boundary_samples(spec, c.boundary_samples, c.seed);
        const TangencyReport tangency = tangency_residual(field, boundary);
        record("tangency", check_entry(tangency.max_residual <= c.margin_tol, tangency.max_residual,
                                       c.margin_tol));

        const std::vector<double> radii{1e-1, 1e-2, std::max(1e-3, c.exclusion)};
        const auto rows = singularity_scaling(field, radii);
        const double target = 2.0 * sine_power_integral(c.k, R);
        const double rel = std::abs(rows.back().scaled_magnitude - target) / target;
        bool line_decreasing = true;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            line_decreasing = line_decreasing && (!field.has_line_term() ||
                                                  rows[i].scaled_line_term < rows[i - 1].scaled_line_term);
        }
        Json sing = check_entry(rel <= 0.02 && line_decreasing, rel, 0.02);
        sing["coefficient"] = rows.back().scaled_magnitude;
        sing["target"] = target;
        sing["line_term_decreasing"] = line_decreasing;
        record("singularity", sing);

        ScanOptions scan;
        scan.build = build;
        const DivergenceReport div = div_bound_scan(spec, samples, c.seed, scan);
        Json div_entry = check_entry(div.pass(c.margin_tol), div.min_margin, c.margin_tol);
        div_entry["samples"] = div.samples;
        record("divergence_bound", div_entry);

        const EqualityReport eq = equality_plane_check(field, 100, c.seed);
        record("equality_planes", check_entry(eq.max_plane_deviation <= 1e-8, eq.max_plane_deviation, 1e-8));

        if (c.k >= 2 && R > 0.1) {
            const std::vector<double> eps{1e-1, 5e-2, 2.5e-2};
            const AreaBalanceReport area = area_balance(field, eps);
            double worst = 0.0;
            for (const auto& row : area.rows) worst = std::max(worst, row.residual / area.volume);
            const double flux_rel = std::abs(area.extrapolated_flux - area.volume) / area.volume;
            Json entry = check_entry(worst <= 1e-6 && flux_rel <= 0.01 && area.deficit_decreasing,
                                     flux_rel, 0.01);
            entry["max_relative_residual"] = worst;
            entry["volume"] = area.volume;
            entry["extrapolated_flux"] = area.extrapolated_flux;
            entry["deficit_decreasing"] = area.deficit_decreasing;
            record("area_balance", entry);
        }
    } catch (const SignViolation& e) {
        all_pass = false;
        report["error"] = std::string("SignViolation: ") + e.what();
    } catch (const CalibError& e) {
        all_pass = false;
        report["error"] = e.what();
    }

    report["checks"] = checks;
    report["status"] = all_pass ? "PASS" : "FAIL";

    Sink sink(c, out);
    if (c.format == "json") {
        sink.write(report.dump(2) + "\n");
    } else {
        std::ostringstream csv;
        csv << "check,status,value,tolerance\n";
        for (const auto& [name, entry] : checks.items()) {
            csv << name << ',' << entry["status"].get<std::string>() << ','
                << fmt(entry["value"].get<double>()) << ',' << fmt(entry["tolerance"].get<double>())
                << '\n';
        }
        sink.write(csv.str());
        if (report.contains("error")) err << report["error"].get<std::string>() << '\n';
    }
    return all_pass ? 0 : 1;
}

int cmd_scan(const RunConfig& c, std::ostream& out, std::ostream&)
{
    require_even(c.k, 4);
    const std::vector<double> grid = parse_grid(c.R_grid_given ? c.R_grid_text : "0.1:1.5:0.05");
    for (double R : grid) {
        if (!(R > 0.0 && R <= kPi / 2 + 1e-15)) throw UsageError("grid values must lie in (0, pi/2]");
    }
    HSolveOptions opts;
    opts.tol = c.ode_tol;
    const K8Report scan = k8_scan(grid, opts, c.k);

    Sink sink(c, out);
    if (c.format == "json") {
        Json j;
        j["config"] = config_json(c);
        Json rows = Json::array();
        for (const auto& r : scan.rows) {
            rows.push_back({{"R", r.R}, {"min_h", r.min_h}, {"argmin", r.argmin}, {"flag", r.flagged}});
        }
        j["rows"] = rows;
        Json windows = Json::array();
        for (const auto& w : scan.windows) windows.push_back({{"from", w.from}, {"to", w.to}});
        j["windows"] = windows;
        j["flagged"] = scan.flagged();
        sink.write(j.dump(2) + "\n");
    } else {
        std::ostringstream csv;
        csv << "R,min_h,argmin,flag\n";
        for (const auto& r : scan.rows) {
            csv << fmt(r.R) << ',' << fmt(r.min_h) << ',' << fmt(r.argmin) << ',' << (r.flagged ? 1 : 0)
                << '\n';
        }
        sink.write(csv.str());
    }
    return (c.expect_nonnegative && scan.flagged() > 0) ? 1 : 0;
}

int cmd_euclid(const RunConfig& c, std::ostream& out, std::ostream& err)
{
    if (c.k != 2 && c.k != 4 && c.k != 6) throw UsageError("euclid supports k = 2, 4, 6");
    if (c.R_given && !c.R_seq_given) throw UsageError("euclid needs a sequence of radii (--R-seq)");
    const std::vector<double> seq = parse_list(c.R_seq_text);
    if (seq.size() < 2) throw UsageError("euclid needs at least two radii");
    for (double R : seq) {
        if (!(R > 0.0 && R <= kPi / 2)) throw UsageError("radii must lie in (0, pi/2]");
    }
    const int samples = c.samples;
    const auto points = euclid_samples(c.ambient(), samples, c.seed);
    const EuclidReport rep = euclid_limit_compare(c.k, c.ambient(), seq, points, build_options(c));

    Json summary;
    summary["config"] = config_json(c);
    Json rows = Json::array();
    for (const auto& r : rep.rows) rows.push_back({{"R", r.R}, {"max_error", r.max_error}});
    summary["rows"] = rows;
    summary["slope"] = rep.slope;
    summary["decreasing"] = rep.decreasing;

    Sink sink(c, out);
    if (c.format == "json") {
        sink.write(summary.dump(2) + "\n");
    } else {
        std::ostringstream csv;
        csv << "R,max_error\n";
        for (const auto& r : rep.rows) csv << fmt(r.R) << ',' << fmt(r.max_error) << '\n';
        sink.write(csv.str());
        Json brief;
        brief["slope"] = rep.slope;
        brief["decreasing"] = rep.decreasing;
        brief["config"] = summary["config"];
        sink.write_summary(brief, err);
    }
    return rep.decreasing ? 0 : 1;
}

}  // namespace

double parse_radius(const std::string& raw)
{
    const std::string text = trim(raw);
    static const std::regex pi_form(R"(^([0-9.eE+-]*)\s*\*?\s*pi\s*(?:/\s*([0-9.eE+-]+))?$)");
    std::smatch m;
    if (std::regex_match(text, m, pi_form)) {
        double value = kPi;
        const std::string coeff = trim(m[1].str());
        if (!coeff.empty()) value *= parse_number(coeff == "-" ? "-1" : coeff);
        if (m[2].matched) value /= parse_number(trim(m[2].str()));
        return value;
    }
    return parse_number(text);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    RunConfig c;
    CLI::App app{"Calibration fields on geodesic balls of the round sphere", "calib"};
    app.require_subcommand(1);

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--k", c.k, "submanifold dimension");
        sub->add_option("--n", c.n, "ambient sphere dimension (default k + 1)");
        sub->add_option("--seed", c.seed, "random seed");
        sub->add_option("--samples", c.samples, "sample count");
        sub->add_option("--boundary-samples", c.boundary_samples, "boundary sample count");
        sub->add_option("--exclusion", c.exclusion, "exclusion radius around y");
        sub->add_option("--ode-tol", c.ode_tol, "ODE tolerance");
        sub->add_option("--quad-tol", c.quad_tol, "quadrature absolute tolerance");
        sub->add_option("--margin-tol", c.margin_tol, "tolerance on verification margins");
        sub->add_option("--format", c.format, "output format")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--out", c.out, "output path (default: standard output)");
        sub->add_option("--R", c.R_text, "radius in radians, e.g. 0.9 or pi/3");
        sub->add_option("--R-grid", c.R_grid_text, "radius grid start:stop:step");
        sub->add_option("--R-seq", c.R_seq_text, "comma-separated radii");
        sub->add_flag("--expect-nonnegative", c.expect_nonnegative, "fail if any R is flagged");
    };

    CLI::App* h_profile = app.add_subcommand("h-profile", "solve for h and write its profile");
    CLI::App* verify = app.add_subcommand("verify", "run the field checks for one ball");
    CLI::App* scan = app.add_subcommand("scan", "minimum of h over a grid of radii");
    CLI::App* euclid = app.add_subcommand("euclid", "compare with the Euclidean limit field");
    for (CLI::App* sub : {h_profile, verify, scan, euclid}) add_common(sub);

    try {
        std::vector<std::string> args;
        for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 2;
    }

    CLI::App* active = app.get_subcommands().front();
    c.command = active->get_name();
    c.R_given = active->count("--R") > 0;
    c.R_grid_given = active->count("--R-grid") > 0;
    c.R_seq_given = active->count("--R-seq") > 0;
    if (c.command == "scan" && active->count("--k") == 0) c.k = 8;
    if (c.samples <= 0) {
        c.samples = c.command == "h-profile" ? 1000 : c.command == "verify" ? 500 : 64;
    }

    try {
        check_common(c);
        if (c.command == "h-profile") return cmd_h_profile(c, out, err);
        if (c.command == "verify") return cmd_verify(c, out, err);
        if (c.command == "scan") return cmd_scan(c, out, err);
        return cmd_euclid(c, out, err);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const UnsupportedDimension& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const InvalidSpec& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace calib
