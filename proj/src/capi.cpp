#include "psivolterra/psivolterra.h"

#include <cmath>
#include <cstring>
#include <iostream>
#include <limits>
#include <new>
#include <optional>
#include <sstream>
#include <string>

#include "psivolterra/frac_ops.hpp"
#include "psivolterra/run.hpp"
#include "psivolterra/scenarios.hpp"
#include "psivolterra/stability.hpp"

using namespace psivolterra;

struct pv_problem {
    ProblemSpec spec;
};

struct pv_solution {
    SolveResult result;
};

struct pv_certificate {
    StabilityCertificate cert;
};

namespace {

thread_local std::string last_error;

pv_status status_of(ErrorCode c) {
    switch (c) {
        case ErrorCode::InvalidArgument: return PV_INVALID_ARGUMENT;
        case ErrorCode::GridMismatch: return PV_GRID_MISMATCH;
        case ErrorCode::Parse: return PV_PARSE;
        case ErrorCode::Eval: return PV_EVAL;
        case ErrorCode::NonContractive: return PV_NON_CONTRACTIVE;
        case ErrorCode::NoConvergence: return PV_NO_CONVERGENCE;
        case ErrorCode::WindowViolation: return PV_WINDOW_VIOLATION;
        case ErrorCode::Config: return PV_CONFIG;
        case ErrorCode::Io: return PV_IO;
    }
    return PV_INTERNAL;
}

pv_status fail(pv_status s, std::string msg) {
    last_error = std::move(msg);
    return s;
}

// Runs body, translating exceptions into a status and last_error.
template <class F>
pv_status guarded(F&& body) {
    try {
        body();
        return PV_OK;
    } catch (const Error& e) {
        return fail(status_of(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return fail(PV_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(PV_INTERNAL, e.what());
    } catch (...) {
        return fail(PV_INTERNAL, "unknown error");
    }
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

extern "C" {

const char* pv_version(void) { return version(); }

const char* pv_last_error(void) { return last_error.c_str(); }

const char* pv_status_name(pv_status s) {
    switch (s) {
        case PV_OK: return "OK";
        case PV_INVALID_ARGUMENT: return "INVALID_ARGUMENT";
        case PV_GRID_MISMATCH: return "GRID_MISMATCH";
        case PV_PARSE: return "PARSE";
        case PV_EVAL: return "EVAL";
        case PV_NON_CONTRACTIVE: return "NON_CONTRACTIVE";
        case PV_NO_CONVERGENCE: return "NO_CONVERGENCE";
        case PV_WINDOW_VIOLATION: return "WINDOW_VIOLATION";
        case PV_CONFIG: return "CONFIG";
        case PV_IO: return "IO";
        case PV_INTERNAL: return "INTERNAL";
    }
    return "UNKNOWN";
}

pv_status pv_problem_from_catalog(const char* name, size_t N, pv_problem** out) {
    if (!name || !out) return fail(PV_INVALID_ARGUMENT, "name and out must not be NULL");
    *out = nullptr;
    return guarded([&] {
        const CatalogEntry& e = catalog_entry(name);
        *out = new pv_problem{e.build(N == 0 ? e.default_N : N)};
    });
}

pv_status pv_problem_from_json(const char* json, pv_problem** out) {
    if (!json || !out) return fail(PV_INVALID_ARGUMENT, "json and out must not be NULL");
    *out = nullptr;
    return guarded([&] { *out = new pv_problem{build_problem(parse_config(json))}; });
}

void pv_problem_free(pv_problem* p) { delete p; }

size_t pv_problem_nodes(const pv_problem* p) { return p ? p->spec.grid.size() : 0; }

size_t pv_problem_dim(const pv_problem* p) { return p ? p->spec.dim : 0; }

pv_status pv_problem_times(const pv_problem* p, double* t, size_t len) {
    if (!p || !t) return fail(PV_INVALID_ARGUMENT, "problem and t must not be NULL");
    const auto nodes = p->spec.grid.nodes();
    if (len < nodes.size()) return fail(PV_INVALID_ARGUMENT, "buffer shorter than the number of nodes");
    std::memcpy(t, nodes.data(), nodes.size() * sizeof(double));
    return PV_OK;
}

pv_status pv_problem_contraction_factor(const pv_problem* p, double* q) {
    if (!p || !q) return fail(PV_INVALID_ARGUMENT, "problem and q must not be NULL");
    *q = contraction_factor(p->spec);
    return PV_OK;
}

pv_status pv_problem_uh_constant(const pv_problem* p, double* C) {
    if (!p || !C) return fail(PV_INVALID_ARGUMENT, "problem and C must not be NULL");
    return guarded([&] { *C = uh_constant(p->spec); });
}

pv_status pv_solve(const pv_problem* p, double tol, size_t maxit, pv_solution** out) {
    if (!p || !out) return fail(PV_INVALID_ARGUMENT, "problem and out must not be NULL");
    *out = nullptr;
    SolveOptions opts;
    if (tol > 0.0) opts.tol = tol;
    if (maxit > 0) opts.maxit = maxit;
    return guarded([&] { *out = new pv_solution{fixed_point_solve(p->spec, opts)}; });
}

void pv_solution_free(pv_solution* s) { delete s; }

size_t pv_solution_iterations(const pv_solution* s) { return s ? s->result.report.iterations : 0; }

double pv_solution_bound(const pv_solution* s) { return s ? s->result.report.a_posteriori_bound : kNaN; }

pv_status pv_solution_values(const pv_solution* s, double* x, size_t len) {
    if (!s || !x) return fail(PV_INVALID_ARGUMENT, "solution and x must not be NULL");
    const auto v = s->result.x.values();
    if (len < v.size()) return fail(PV_INVALID_ARGUMENT, "buffer shorter than nodes * dim");
    std::memcpy(x, v.data(), v.size() * sizeof(double));
    return PV_OK;
}

pv_status pv_certify(const pv_problem* p, const double* f, size_t len, double tol, pv_certificate** out) {
    if (!p || !f || !out) return fail(PV_INVALID_ARGUMENT, "problem, f and out must not be NULL");
    *out = nullptr;
    const std::size_t need = p->spec.grid.size() * p->spec.dim;
    if (len != need) return fail(PV_GRID_MISMATCH, "candidate length must equal nodes * dim");
    return guarded([&] {
        const GridFunction candidate(p->spec.grid, p->spec.dim, std::vector<double>(f, f + len));
        CertifyOptions opts;
        if (tol >= 0.0) opts.tol = tol;
        *out = new pv_certificate{certify(candidate, p->spec, opts)};
    });
}

pv_status pv_certify_perturbed(const pv_problem* p, double epsilon, double tol, pv_certificate** out) {
    if (!p || !out) return fail(PV_INVALID_ARGUMENT, "problem and out must not be NULL");
    *out = nullptr;
    return guarded([&] {
        const ProblemSpec& spec = p->spec;
        CertifyOptions opts;
        if (tol >= 0.0) opts.tol = tol;
        const bool contractive = contraction_factor(spec) < 1.0;
        const GridFunction base = contractive ? fixed_point_solve(spec).x : GridFunction(spec.grid, spec.dim);
        const double gamma = spec.params.gamma();
        if (spec.kind == ProblemKind::IDE && gamma < 1.0) opts.weighted_initial.assign(spec.dim, epsilon * spec.phi.at(0));
        *out = new pv_certificate{certify(perturb(base, spec.phi, epsilon, gamma), spec, opts)};
    });
}

void pv_certificate_free(pv_certificate* c) { delete c; }

pv_verdict pv_certificate_verdict(const pv_certificate* c) {
    if (!c) return PV_VACUOUS;
    switch (c->cert.verdict) {
        case Verdict::Pass: return PV_PASS;
        case Verdict::Fail: return PV_FAIL;
        case Verdict::Vacuous: return PV_VACUOUS;
    }
    return PV_VACUOUS;
}

double pv_certificate_max_ratio(const pv_certificate* c) { return c ? c->cert.max_ratio : kNaN; }
double pv_certificate_q(const pv_certificate* c) { return c ? c->cert.q : kNaN; }
double pv_certificate_C(const pv_certificate* c) { return c ? c->cert.C : kNaN; }
double pv_certificate_slack(const pv_certificate* c) { return c ? c->cert.slack : kNaN; }

size_t pv_certificate_report(const pv_certificate* c, char* buf, size_t cap) {
    if (!c) return 0;
    std::ostringstream os;
    write_report(os, c->cert);
    const std::string s = os.str();
    if (buf && cap > 0) {
        const std::size_t n = std::min(cap - 1, s.size());
        std::memcpy(buf, s.data(), n);
        buf[n] = '\0';
    }
    return s.size();
}

int pv_run(const char* command, const char* config_path, const char* out_dir) {
    if (!command || !config_path) {
        std::cerr << "psivolterra: command and config path are required\n";
        return kExitUsage;
    }
    return run_file(command, config_path, out_dir ? out_dir : ".", std::cout, std::cerr);
}

double pv_mittag_leffler(double alpha, double z) {
    try {
        return mittag_leffler(alpha, z);
    } catch (const std::exception& e) {
        last_error = e.what();
        return kNaN;
    }
}

}  // extern "C"
