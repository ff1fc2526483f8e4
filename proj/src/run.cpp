#include "psivolterra/run.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "psivolterra/frac_ops.hpp"
#include "psivolterra/io.hpp"
#include "psivolterra/stability.hpp"

namespace psivolterra {

using nlohmann::json;

const char* to_string(Command c) noexcept {
    switch (c) {
        case Command::Solve: return "solve";
        case Command::Certify: return "certify";
        case Command::Operators: return "operators";
        case Command::Converge: return "converge";
    }
    return "?";
}

std::optional<Command> parse_command(std::string_view name) {
    for (Command c : {Command::Solve, Command::Certify, Command::Operators, Command::Converge})
        if (name == to_string(c)) return c;
    return std::nullopt;
}

int exit_code_for(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::Eval:
        case ErrorCode::NonContractive:
        case ErrorCode::NoConvergence: return kExitNumeric;
        default: return kExitUsage;
    }
}

namespace {

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorCode::Config, msg); }

std::string key_path(const std::string& where, std::string_view key) {
    return where.empty() ? std::string(key) : where + "." + std::string(key);
}

void allow_only(const json& obj, const std::string& where, std::initializer_list<std::string_view> keys) {
    if (!obj.is_object()) bad((where.empty() ? "config" : where) + " must be a JSON object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::find(keys.begin(), keys.end(), it.key()) == keys.end())
            bad("unknown key '" + key_path(where, it.key()) + "'");
    }
}

double number(const json& v, const std::string& path) {
    if (!v.is_number()) bad(path + " must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) bad(path + " must be finite");
    return d;
}

std::optional<double> opt_number(const json& obj, const std::string& where, const char* key) {
    if (!obj.contains(key)) return std::nullopt;
    return number(obj.at(key), key_path(where, key));
}

std::size_t count(const json& v, const std::string& path) {
    if (!v.is_number_integer() || v.get<long long>() < 1) bad(path + " must be a positive integer");
    return static_cast<std::size_t>(v.get<long long>());
}

std::string text(const json& v, const std::string& path) {
    if (!v.is_string()) bad(path + " must be a string");
    return v.get<std::string>();
}

enum Vars : unsigned { kT = 1, kS = 2, kX = 4 };

Expr expression(const json& v, const std::string& path, unsigned allowed) {
    const std::string src = text(v, path);
    std::optional<Expr> e;
    try {
        e = Expr::parse(src);
    } catch (const ParseError& pe) {
        throw Error(ErrorCode::Parse, path + ": " + pe.what() + " in \"" + src + "\"");
    }
    auto forbid = [&](bool used, unsigned flag, const char* name) {
        if (used && !(allowed & flag)) bad(path + " may not use the variable " + name);
    };
    forbid(e->uses_t(), kT, "t");
    forbid(e->uses_s(), kS, "s");
    forbid(e->uses_x(), kX, "x");
    return *e;
}

std::vector<Expr> expression_list(const json& v, const std::string& path, unsigned allowed) {
    std::vector<Expr> out;
    if (v.is_string()) {
        out.push_back(expression(v, path, allowed));
    } else if (v.is_array() && !v.empty()) {
        for (std::size_t i = 0; i < v.size(); ++i)
            out.push_back(expression(v[i], path + "[" + std::to_string(i) + "]", allowed));
    } else {
        bad(path + " must be a string or a nonempty array of strings");
    }
    return out;
}

ProblemKind problem_kind(const std::string& s, const std::string& path) {
    if (s == "VIE") return ProblemKind::VIE;
    if (s == "IDE") return ProblemKind::IDE;
    bad(path + " must be \"VIE\", \"IDE\" or \"resolvent\", got \"" + s + "\"");
}

void parse_problem(const json& p, RunConfig& cfg) {
    if (p.is_string()) {
        cfg.catalog = p.get<std::string>();
        catalog_entry(*cfg.catalog);
        return;
    }
    if (!p.is_object()) bad("problem must be a catalog name or an object");
    if (!p.contains("kind")) bad("problem.kind is required");
    const std::string kind = text(p.at("kind"), "problem.kind");
    if (kind == "resolvent") {
        allow_only(p, "problem", {"kind", "A", "Phi", "forcing", "M"});
        for (const char* k : {"A", "Phi", "forcing"})
            if (!p.contains(k)) bad(std::string("problem.") + k + " is required");
        ResolventProblem r{.A = {}, .Phi = expression(p.at("Phi"), "problem.Phi", kT), .forcing = {}, .M = {}};
        const json& A = p.at("A");
        if (!A.is_array() || A.empty()) bad("problem.A must be a nonempty array of rows");
        for (std::size_t i = 0; i < A.size(); ++i) {
            if (!A[i].is_array()) bad("problem.A rows must be arrays");
            std::vector<double> row;
            for (std::size_t j = 0; j < A[i].size(); ++j)
                row.push_back(number(A[i][j], "problem.A[" + std::to_string(i) + "][" + std::to_string(j) + "]"));
            r.A.push_back(std::move(row));
        }
        r.forcing = expression_list(p.at("forcing"), "problem.forcing", kT);
        r.M = opt_number(p, "problem", "M");
        cfg.resolvent = std::move(r);
        return;
    }
    allow_only(p, "problem", {"kind", "g", "K", "dim", "oracle"});
    for (const char* k : {"g", "K"})
        if (!p.contains(k)) bad(std::string("problem.") + k + " is required");
    if (p.contains("dim") && count(p.at("dim"), "problem.dim") != 1)
        bad("problem.dim: expression problems are scalar; use a resolvent problem for systems");
    InlineProblem ip{.kind = problem_kind(kind, "problem.kind"),
                     .g = expression(p.at("g"), "problem.g", kT | kX),
                     .K = expression(p.at("K"), "problem.K", kT | kS | kX),
                     .oracle = std::nullopt};
    if (p.contains("oracle")) ip.oracle = expression(p.at("oracle"), "problem.oracle", kT);
    cfg.inline_problem = std::move(ip);
}

}  // namespace

RunConfig parse_config(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        bad(std::string("config is not valid JSON: ") + e.what());
    }
    allow_only(doc, "", {"command", "problem", "grid", "psi", "params", "lipschitz", "phi", "perturbation", "candidate",
                         "certify_tol", "operators", "output", "tol", "maxit"});
    RunConfig cfg;

    if (doc.contains("command")) {
        const std::string c = text(doc.at("command"), "command");
        cfg.command = parse_command(c);
        if (!cfg.command) bad("command must be solve, certify, operators or converge, got \"" + c + "\"");
    }
    if (doc.contains("problem")) parse_problem(doc.at("problem"), cfg);
    const bool from_catalog = cfg.catalog.has_value();
    if (from_catalog) {
        for (const char* k : {"psi", "params", "lipschitz", "phi"})
            if (doc.contains(k)) bad(std::string("'") + k + "' cannot be combined with a catalog problem");
    }

    if (doc.contains("grid")) {
        const json& g = doc.at("grid");
        if (from_catalog) allow_only(g, "grid", {"N"});
        else allow_only(g, "grid", {"T", "N", "r"});
        if (auto T = opt_number(g, "grid", "T")) cfg.T = *T;
        if (g.contains("N")) cfg.N = count(g.at("N"), "grid.N");
        if (auto r = opt_number(g, "grid", "r")) cfg.r = *r;
    }
    if (doc.contains("psi")) {
        const json& p = doc.at("psi");
        allow_only(p, "psi", {"kind", "params"});
        if (!p.contains("kind")) bad("psi.kind is required");
        std::vector<double> params;
        if (p.contains("params")) {
            if (!p.at("params").is_array()) bad("psi.params must be an array");
            for (std::size_t i = 0; i < p.at("params").size(); ++i)
                params.push_back(number(p.at("params")[i], "psi.params[" + std::to_string(i) + "]"));
        }
        try {
            cfg.psi = PsiScale::from_name(text(p.at("kind"), "psi.kind"), params);
        } catch (const Error& e) {
            bad(std::string("psi: ") + e.what());
        }
    }
    if (doc.contains("params")) {
        const json& p = doc.at("params");
        allow_only(p, "params", {"alpha", "beta"});
        if (!p.contains("alpha") || !p.contains("beta")) bad("params needs alpha and beta");
        cfg.params = FractionalParams{number(p.at("alpha"), "params.alpha"), number(p.at("beta"), "params.beta")};
        try {
            cfg.params->validate();
        } catch (const Error& e) {
            bad(std::string("params: ") + e.what());
        }
    }
    if (doc.contains("lipschitz")) {
        if (cfg.resolvent) bad("lipschitz is derived from A and Phi for a resolvent problem");
        const json& l = doc.at("lipschitz");
        allow_only(l, "lipschitz", {"L1", "L2", "estimated", "samples", "range"});
        cfg.L1 = opt_number(l, "lipschitz", "L1");
        cfg.L2 = opt_number(l, "lipschitz", "L2");
        if (l.contains("estimated")) {
            if (!l.at("estimated").is_boolean()) bad("lipschitz.estimated must be true or false");
            cfg.lipschitz_estimated = l.at("estimated").get<bool>();
        }
        if (cfg.lipschitz_estimated && (cfg.L1 || cfg.L2)) bad("lipschitz: give L1 and L2, or set estimated, not both");
        if (!cfg.lipschitz_estimated && (l.contains("samples") || l.contains("range")))
            bad("lipschitz.samples and lipschitz.range only apply when estimated is true");
        if (l.contains("samples")) cfg.lipschitz_samples = count(l.at("samples"), "lipschitz.samples");
        if (l.contains("range")) {
            const json& r = l.at("range");
            if (!r.is_array() || r.size() != 2) bad("lipschitz.range must be [lo, hi]");
            cfg.lipschitz_lo = number(r[0], "lipschitz.range[0]");
            cfg.lipschitz_hi = number(r[1], "lipschitz.range[1]");
        }
    }
    if (doc.contains("phi")) {
        const json& p = doc.at("phi");
        allow_only(p, "phi", {"expr", "constant", "L"});
        if (p.contains("expr") == p.contains("constant")) bad("phi needs exactly one of expr and constant");
        if (p.contains("expr")) {
            cfg.phi = expression(p.at("expr"), "phi.expr", kT);
        } else {
            const double c = number(p.at("constant"), "phi.constant");
            if (!(c > 0.0)) bad("phi.constant must be > 0");
            cfg.phi = Expr::parse(format_double(c));
        }
        if (!p.contains("L")) bad("phi.L is required");
        cfg.L = number(p.at("L"), "phi.L");
    }
    if (doc.contains("perturbation")) {
        const json& p = doc.at("perturbation");
        allow_only(p, "perturbation", {"epsilon"});
        if (!p.contains("epsilon")) bad("perturbation.epsilon is required");
        cfg.epsilon = number(p.at("epsilon"), "perturbation.epsilon");
        if (!(*cfg.epsilon >= 0.0 && *cfg.epsilon <= 1.0)) bad("perturbation.epsilon must lie in [0, 1]");
    }
    if (doc.contains("candidate")) {
        if (cfg.epsilon) bad("give either perturbation or candidate, not both");
        cfg.candidate = expression_list(doc.at("candidate"), "candidate", kT);
    }
    if (auto v = opt_number(doc, "", "certify_tol")) {
        if (!(*v >= 0.0)) bad("certify_tol must be >= 0");
        cfg.certify_tol = *v;
    }
    if (doc.contains("operators")) {
        const json& o = doc.at("operators");
        allow_only(o, "operators", {"f", "integral_oracle"});
        if (!o.contains("f")) bad("operators.f is required");
        cfg.operator_f = expression(o.at("f"), "operators.f", kT);
        if (o.contains("integral_oracle"))
            cfg.integral_oracle = expression(o.at("integral_oracle"), "operators.integral_oracle", kT);
    }
    if (doc.contains("output")) {
        const json& o = doc.at("output");
        allow_only(o, "output", {"csv", "report"});
        if (o.contains("csv")) cfg.csv = text(o.at("csv"), "output.csv");
        if (o.contains("report")) cfg.report = text(o.at("report"), "output.report");
    }
    if (auto v = opt_number(doc, "", "tol")) {
        if (!(*v > 0.0)) bad("tol must be > 0");
        cfg.tol = *v;
    }
    if (doc.contains("maxit")) cfg.maxit = count(doc.at("maxit"), "maxit");

    // Consistency of what was given.
    const bool has_problem = cfg.catalog || cfg.inline_problem || cfg.resolvent;
    if (!from_catalog && (has_problem || cfg.operator_f)) {
        if (!cfg.N) bad("grid.N is required");
        if (!cfg.params) bad("params is required");
    }
    if (cfg.inline_problem || cfg.resolvent) {
        if (!cfg.phi) bad("phi is required");
        if (cfg.inline_problem && !cfg.lipschitz_estimated && !(cfg.L1 && cfg.L2))
            bad("lipschitz needs L1 and L2 (or estimated: true)");
    } else if (cfg.phi || doc.contains("lipschitz")) {
        if (!has_problem) bad("phi and lipschitz need a problem");
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read config '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

ProblemSpec build_problem(const RunConfig& cfg, std::optional<std::size_t> N_override) {
    if (cfg.catalog) {
        const CatalogEntry& entry = catalog_entry(*cfg.catalog);
        return entry.build(N_override.value_or(cfg.N.value_or(entry.default_N)));
    }
    if (!cfg.inline_problem && !cfg.resolvent) bad("this command needs a problem");
    const std::size_t N = N_override.value_or(*cfg.N);
    const Expr& phi = *cfg.phi;
    if (cfg.resolvent) {
        const ResolventProblem& r = *cfg.resolvent;
        ProblemSpec spec = resolvent_spec(ResolventScenario{.A = r.A,
                                                            .Phi = r.Phi,
                                                            .forcing = r.forcing,
                                                            .T = cfg.T,
                                                            .N = N,
                                                            .r = cfg.r,
                                                            .psi = cfg.psi,
                                                            .params = *cfg.params,
                                                            .phi = phi,
                                                            .L = *cfg.L,
                                                            .M = r.M});
        return spec;
    }
    const InlineProblem& ip = *cfg.inline_problem;
    const Grid grid = make_grid(cfg.T, N, cfg.r, cfg.psi);
    ProblemSpec spec{
        .name = "inline",
        .kind = ip.kind,
        .g = source_from_expr(ip.g),
        .K = kernel_from_expr(ip.K),
        .params = *cfg.params,
        .grid = grid,
        .dim = 1,
        .L1 = cfg.L1.value_or(0.0),
        .L2 = cfg.L2.value_or(0.0),
        .phi = GridFunction::sample(grid, [&](double t) { return phi.eval({.t = t}); }),
        .L = *cfg.L,
        .lipschitz_estimated = cfg.lipschitz_estimated,
    };
    if (cfg.lipschitz_estimated) {
        const LipschitzEstimate est = estimate_lipschitz(spec, cfg.lipschitz_samples, cfg.lipschitz_lo, cfg.lipschitz_hi);
        spec.L1 = est.L1;
        spec.L2 = est.L2;
    }
    spec.validate();
    return spec;
}

namespace {

std::ofstream open_output(const std::filesystem::path& dir, const std::string& name) {
    const std::filesystem::path p = std::filesystem::path(name).is_absolute() ? std::filesystem::path(name) : dir / name;
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::Io, "cannot write '" + p.string() + "'");
    return f;
}

std::string problem_label(const RunConfig& cfg) {
    if (cfg.catalog) return *cfg.catalog;
    if (cfg.resolvent) return "resolvent";
    if (cfg.inline_problem) return "inline";
    return "none";
}

void write_header(std::ostream& os, Command c, const RunConfig& cfg, const Grid& grid, const FractionalParams& p) {
    os << "# psivolterra " << version() << '\n'
       << "# command = " << to_string(c) << '\n'
       << "# problem = " << problem_label(cfg) << '\n'
       << "# grid = T " << format_double(grid.final_time()) << ", N " << grid.intervals() << ", r "
       << format_double(grid.grading()) << ", psi " << grid.psi().name() << '\n'
       << "# alpha = " << format_double(p.alpha) << ", beta = " << format_double(p.beta) << "\n\n";
}

void write_solution_csv(std::ostream& os, const GridFunction& x) {
    os << 't';
    for (std::size_t c = 0; c < x.dim(); ++c) os << ",x" << c;
    os << '\n';
    for (std::size_t j = 0; j < x.size(); ++j) {
        os << format_double(x.grid().node(j));
        for (double v : x.row(j)) os << ',' << format_double(v);
        os << '\n';
    }
}

void write_problem_keys(std::ostream& os, const ProblemSpec& spec) {
    os << "kind = " << to_string(spec.kind) << '\n'
       << "dim = " << spec.dim << '\n'
       << "L1 = " << format_double(spec.L1) << '\n'
       << "L2 = " << format_double(spec.L2) << '\n'
       << "L = " << format_double(spec.L) << '\n'
       << "lipschitz_estimated = " << (spec.lipschitz_estimated ? "true" : "false") << '\n'
       << "q = " << format_double(contraction_factor(spec)) << '\n';
}

SolveOptions solve_options(const RunConfig& cfg) {
    SolveOptions o;
    o.tol = cfg.tol;
    o.maxit = cfg.maxit;
    return o;
}

GridFunction sample_exprs(const Grid& grid, const std::vector<Expr>& es) {
    GridFunction f(grid, es.size());
    for (std::size_t j = 0; j < grid.size(); ++j)
        for (std::size_t c = 0; c < es.size(); ++c) f.at(j, c) = es[c].eval({.t = grid.node(j)});
    return f;
}

int do_solve(const RunConfig& cfg, std::ostream& csv, std::ostream& report, std::ostream& out) {
    const ProblemSpec spec = build_problem(cfg);
    write_header(report, Command::Solve, cfg, spec.grid, spec.params);
    write_problem_keys(report, spec);
    const SolveResult r = fixed_point_solve(spec, solve_options(cfg));
    report << "iterations = " << r.report.iterations << '\n'
           << "converged = true\n"
           << "last_step = " << format_double(r.report.successive_distances.back().value()) << '\n'
           << "a_posteriori_bound = " << format_double(r.report.a_posteriori_bound) << '\n';
    write_solution_csv(csv, r.x);
    out << "solve: converged in " << r.report.iterations << " iterations, q = " << format_double(r.report.q_used)
        << ", a-posteriori bound " << format_double(r.report.a_posteriori_bound) << '\n';
    return kExitOk;
}

int do_certify(const RunConfig& cfg, std::ostream& csv, std::ostream& report, std::ostream& out) {
    const ProblemSpec spec = build_problem(cfg);
    CertifyOptions opts;
    opts.tol = cfg.certify_tol;
    opts.solve = solve_options(cfg);

    std::optional<GridFunction> candidate;
    std::string origin;
    if (!cfg.candidate.empty()) {
        if (cfg.candidate.size() != spec.dim) bad("candidate needs one expression per state component");
        candidate = sample_exprs(spec.grid, cfg.candidate);
        origin = "expression";
    } else {
        const double eps = cfg.epsilon.value_or(0.5);
        // Without a contraction there is no solution to perturb; the
        // certificate is vacuous whatever the candidate, so perturb zero.
        const bool contractive = contraction_factor(spec) < 1.0;
        const GridFunction base = contractive ? fixed_point_solve(spec, opts.solve).x : GridFunction(spec.grid, spec.dim);
        const double gamma = spec.params.gamma();
        candidate = perturb(base, spec.phi, eps, gamma);
        if (spec.kind == ProblemKind::IDE && gamma < 1.0) opts.weighted_initial.assign(spec.dim, eps * spec.phi.at(0));
        origin = std::string(contractive ? "solution" : "zero") + " + epsilon phi, epsilon = " + format_double(eps);
    }

    const StabilityCertificate cert = certify(*candidate, spec, opts);
    write_header(report, Command::Certify, cfg, spec.grid, spec.params);
    report << "# candidate = " << origin << "\n\n";
    write_report(report, cert);
    write_profile_csv(csv, cert);
    out << "certify: " << to_string(cert.verdict);
    if (cert.verdict == Verdict::Vacuous) out << " (" << cert.reason << ")";
    else out << ", max_ratio = " << format_double(cert.max_ratio) << ", C = " << format_double(cert.C);
    out << '\n';
    switch (cert.verdict) {
        case Verdict::Pass: return kExitOk;
        case Verdict::Vacuous: return kExitVacuous;
        case Verdict::Fail: return kExitFail;
    }
    return kExitFail;
}

struct OperatorSetup {
    Grid grid;
    FractionalParams params;
};

OperatorSetup operator_setup(const RunConfig& cfg, std::optional<std::size_t> N) {
    if (!cfg.operator_f) bad("operators.f is required for this command");
    if (cfg.catalog || cfg.inline_problem || cfg.resolvent) {
        const ProblemSpec spec = build_problem(cfg, N);
        return {spec.grid, spec.params};
    }
    return {make_grid(cfg.T, N.value_or(*cfg.N), cfg.r, cfg.psi), *cfg.params};
}

int do_operators(const RunConfig& cfg, std::ostream& csv, std::ostream& report, std::ostream& out) {
    const OperatorSetup s = operator_setup(cfg, std::nullopt);
    const Expr& f_expr = *cfg.operator_f;
    const GridFunction f = GridFunction::sample(s.grid, [&](double t) { return f_expr.eval({.t = t}); });
    const GridFunction I = frac_integral(f, s.params.alpha);
    const GridFunction D = hilfer_derivative(f, s.params);
    write_header(report, Command::Operators, cfg, s.grid, s.params);
    report << "f = " << f_expr.print() << '\n';
    csv << "t,f,integral,derivative\n";
    for (std::size_t j = 0; j < s.grid.size(); ++j)
        csv << format_double(s.grid.node(j)) << ',' << format_double(f.at(j)) << ',' << format_double(I.at(j)) << ','
            << format_double(D.at(j)) << '\n';
    out << "operators: " << s.grid.size() << " nodes written\n";
    return kExitOk;
}

double weighted_error(const GridFunction& x, const GridFunction& ref, std::size_t stride, double gamma) {
    double e = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        double m = 0.0;
        for (std::size_t c = 0; c < x.dim(); ++c) m = std::max(m, std::abs(x.at(j, c) - ref.at(j * stride, c)));
        e = std::max(e, weight(x.grid().shifted(j), gamma) * m);
    }
    return e;
}

int do_converge(const RunConfig& cfg, std::ostream& csv, std::ostream& report, std::ostream& out) {
    constexpr std::size_t kLevels = 5;
    const bool problem = cfg.catalog || cfg.inline_problem || cfg.resolvent;
    std::size_t N0 = 0;
    if (cfg.catalog) N0 = cfg.N.value_or(catalog_entry(*cfg.catalog).default_N);
    else if (cfg.N) N0 = *cfg.N;
    else bad("grid.N is required");

    // With operators.f the study is of the fractional integral, otherwise of the solution.
    const bool integral_study = cfg.operator_f.has_value();
    if (!integral_study && !problem) bad("converge needs a problem or operators.f");
    std::function<double(double)> oracle;
    if (integral_study) {
        if (cfg.integral_oracle) oracle = [e = *cfg.integral_oracle](double t) { return e.eval({.t = t}); };
    } else if (cfg.catalog) {
        oracle = catalog_entry(*cfg.catalog).oracle;
    } else if (cfg.inline_problem && cfg.inline_problem->oracle) {
        oracle = [e = *cfg.inline_problem->oracle](double t) { return e.eval({.t = t}); };
    }

    std::vector<GridFunction> results;
    std::optional<Grid> first_grid;
    FractionalParams params{1.0, 1.0};
    for (std::size_t k = 0; k < kLevels; ++k) {
        const std::size_t N = N0 << k;
        if (!integral_study) {
            const ProblemSpec spec = build_problem(cfg, N);
            params = spec.params;
            results.push_back(fixed_point_solve(spec, solve_options(cfg)).x);
        } else {
            const OperatorSetup s = operator_setup(cfg, N);
            params = s.params;
            const Expr& f_expr = *cfg.operator_f;
            results.push_back(frac_integral(GridFunction::sample(s.grid, [&](double t) { return f_expr.eval({.t = t}); }),
                                            s.params.alpha));
        }
        if (!first_grid) first_grid = results.back().grid();
    }
    if (oracle && results.front().dim() != 1) bad("a closed-form oracle needs a scalar problem");

    const double gamma = params.gamma();
    std::vector<std::pair<std::size_t, double>> rows;
    for (std::size_t k = 0; k < kLevels; ++k) {
        const GridFunction& x = results[k];
        if (oracle) {
            const GridFunction exact = GridFunction::sample(x.grid(), oracle);
            rows.emplace_back(x.grid().intervals(), weighted_error(x, exact, 1, gamma));
        } else if (k + 1 < kLevels) {
            rows.emplace_back(x.grid().intervals(), weighted_error(x, results.back(), std::size_t{1} << (kLevels - 1 - k), gamma));
        }
    }

    write_header(report, Command::Converge, cfg, *first_grid, params);
    report << "reference = " << (oracle ? "closed form" : "finest grid") << '\n'
           << "study = " << (integral_study ? "fractional integral" : "solution") << '\n'
           << "levels = " << kLevels << '\n';
    csv << "N,error,order\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        csv << rows[i].first << ',' << format_double(rows[i].second) << ',';
        if (i > 0 && rows[i].second > 0.0 && rows[i - 1].second > 0.0)
            csv << format_double(std::log2(rows[i - 1].second / rows[i].second));
        csv << '\n';
    }
    out << "converge: " << rows.size() << " levels, finest error " << format_double(rows.back().second) << '\n';
    return kExitOk;
}

const char* default_csv(Command c) {
    switch (c) {
        case Command::Solve: return "solution.csv";
        case Command::Certify: return "certificate.csv";
        case Command::Operators: return "operators.csv";
        case Command::Converge: return "converge.csv";
    }
    return "out.csv";
}

}  // namespace

const char* version() noexcept { return "0.1.0"; }

int run(Command command, const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& out) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create output directory '" + out_dir.string() + "': " + ec.message());
    // Both files are opened up front so an unwritable path fails before any work.
    std::ofstream csv = open_output(out_dir, cfg.csv.value_or(default_csv(command)));
    std::ofstream report = open_output(out_dir, cfg.report.value_or("report.txt"));

    int code = kExitOk;
    switch (command) {
        case Command::Solve: code = do_solve(cfg, csv, report, out); break;
        case Command::Certify: code = do_certify(cfg, csv, report, out); break;
        case Command::Operators: code = do_operators(cfg, csv, report, out); break;
        case Command::Converge: code = do_converge(cfg, csv, report, out); break;
    }
    csv.flush();
    report.flush();
    if (!csv || !report) throw Error(ErrorCode::Io, "writing output files failed");
    return code;
}

int run_file(std::string_view command, const std::filesystem::path& config, const std::filesystem::path& out_dir,
             std::ostream& out, std::ostream& err) {
    const std::optional<Command> cmd = parse_command(command);
    if (!cmd) {
        err << "psivolterra: unknown command '" << command << "' (expected solve, certify, operators or converge)\n";
        return kExitUsage;
    }
    try {
        const RunConfig cfg = load_config(config);
        if (cfg.command && *cfg.command != *cmd)
            bad(std::string("config is for '") + to_string(*cfg.command) + "' but '" + to_string(*cmd) + "' was requested");
        return run(*cmd, cfg, out_dir, out);
    } catch (const Error& e) {
        err << "psivolterra: " << to_string(e.code()) << ": " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "psivolterra: internal error: " << e.what() << '\n';
        return kExitNumeric;
    }
}

}  // namespace psivolterra
