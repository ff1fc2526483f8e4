#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "psivolterra/frac_ops.hpp"
#include "psivolterra/scenarios.hpp"
#include "psivolterra/stability.hpp"

using namespace psivolterra;

namespace {

GridFunction sample(const Grid& g, const char* text) {
    const Expr e = Expr::parse(text);
    return GridFunction::sample(g, [&](double t) { return e.eval({.t = t}); });
}

ProblemSpec scalar(ProblemKind kind, const char* g, const char* K, FractionalParams p, Grid grid, double L1, double L2,
                   const char* phi, double L) {
    GridFunction phi_samples = sample(grid, phi);
    return ProblemSpec{
        .name = "test",
        .kind = kind,
        .g = source_from_expr(Expr::parse(g)),
        .K = kernel_from_expr(Expr::parse(K)),
        .params = p,
        .grid = grid,
        .dim = 1,
        .L1 = L1,
        .L2 = L2,
        .phi = std::move(phi_samples),
        .L = L,
    };
}

const Grid unit(std::size_t N) { return make_grid(1.0, N, 1.0, PsiScale::identity()); }

}  // namespace

TEST_CASE("phi-condition examples") {
    const ConditionCheck a = check_phi_condition(sample(unit(256), "exp(t)"), 1.0, 1.0);
    CHECK(a.ok);
    CHECK(a.max_ratio == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-5));

    const ConditionCheck b = check_phi_condition(sample(unit(1024), "exp(4 * t)"), 0.5, 0.5);
    CHECK(b.ok);
    CHECK(b.max_ratio < 0.5);
    CHECK(b.max_ratio > 0.45);

    const ConditionCheck c = check_phi_condition(sample(unit(256), "1"), 0.9, 0.5);
    CHECK_FALSE(c.ok);
    CHECK(c.max_ratio == doctest::Approx(1.0 / std::tgamma(1.5)).epsilon(1e-12));

    CHECK_THROWS_AS(check_phi_condition(sample(unit(8), "t"), 1.0, 0.5), Error);
    CHECK_THROWS_AS(check_phi_condition(sample(unit(8), "1 - 2 * t"), 1.0, 0.5), Error);
}

TEST_CASE("memory condition") {
    CHECK(check_memory_condition(sample(unit(256), "exp(4 * t)"), 0.3).ok);
    const ConditionCheck flat = check_memory_condition(sample(unit(256), "1"), 0.3);
    CHECK_FALSE(flat.ok);
    CHECK(flat.max_ratio == doctest::Approx(1.0));
}

TEST_CASE("uh_constant examples") {
    CHECK(uh_constant(ProblemKind::VIE, 0.2, 0.3, 0.1) == doctest::Approx(1.0 / 0.95).epsilon(1e-15));
    CHECK(uh_constant(ProblemKind::IDE, 0.2, 0.3, 0.1) == doctest::Approx(1.1 / 0.747).epsilon(1e-15));
    CHECK(uh_constant(ProblemKind::VIE, 0.7, 0.9, 0.0) == 1.0);
    try {
        uh_constant(ProblemKind::IDE, 0.9, 0.9, 0.5);
        FAIL("expected NON_CONTRACTIVE");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonContractive);
    }
}

TEST_CASE("uh_constant agrees with the written formulas") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int checked = 0;
    while (checked < 20) {
        const double L1 = 0.5 * u(rng), L2 = 0.5 * u(rng), L = u(rng);
        const double vie_den = 1.0 - (L1 + L2) * L;
        const double ide_den = 1.0 - (L1 + (L1 + L2 + L2 * L) * L);
        if (!(ide_den > 0.0)) continue;
        CHECK(std::abs(uh_constant(ProblemKind::VIE, L1, L2, L) - 1.0 / vie_den) <= 1e-15 / vie_den);
        CHECK(std::abs(uh_constant(ProblemKind::IDE, L1, L2, L) - (1.0 + L) / ide_den) <= 1e-15 * (1.0 + L) / ide_den);
        ++checked;
    }
}

TEST_CASE("perturb") {
    const Grid g = make_grid(1.0, 64, 1.5, PsiScale::log_shift());
    const GridFunction f0 = sample(g, "sin(3 * t)");
    const GridFunction phi = sample(g, "1 + t");

    const GridFunction same = perturb(f0, phi, 0.0, 0.7);
    for (std::size_t j = 0; j < g.size(); ++j) CHECK(same.at(j) == f0.at(j));

    const GridFunction plain = perturb(f0, phi, 0.25, 1.0);
    for (std::size_t j = 0; j < g.size(); ++j) CHECK(plain.at(j) == f0.at(j) + 0.25 * phi.at(j));

    for (double gamma : {0.4, 0.85, 1.0}) {
        GridFunction d = perturb(f0, phi, 0.5, gamma);
        d -= f0;
        const GridFunction w = weighted_profile(d, gamma);
        for (std::size_t j = 1; j < g.size(); ++j) CHECK(w.at(j) == doctest::Approx(0.5 * phi.at(j)).epsilon(1e-14));
        if (gamma < 1.0) CHECK(d.at(0) == 0.0);
    }

    CHECK_THROWS_AS(perturb(f0, phi, 1.5, 1.0), Error);
    CHECK_THROWS_AS(perturb(f0, phi, -0.1, 1.0), Error);
}

TEST_CASE("residual examples") {
    const Grid g = unit(32);
    const ProblemSpec zero_vie = scalar(ProblemKind::VIE, "0", "0", {0.5, 1.0}, g, 0, 0, "1", 1);
    const ProblemSpec zero_ide = scalar(ProblemKind::IDE, "0", "0", {0.5, 0.3}, g, 0, 0, "1", 1);
    const GridFunction r0 = residual_vie(GridFunction(g, 1), zero_vie);
    const GridFunction r1 = residual_ide(GridFunction(g, 1), zero_ide);
    for (std::size_t j = 0; j < g.size(); ++j) {
        CHECK(r0.at(j) == 0.0);
        CHECK(r1.at(j) == 0.0);
    }

    // Solved functions leave a residual that shrinks under refinement.
    for (const char* name : {"linear-ml", "hadamard-flavor", "classical-ode", "resolvent-example"}) {
        double prev = INFINITY;
        for (std::size_t N : {64, 128, 256}) {
            const ProblemSpec spec = catalog_entry(name).build(N);
            const SolveResult s = fixed_point_solve(spec, {.tol = 1e-12});
            const GridFunction r = spec.kind == ProblemKind::VIE ? residual_vie(s.x, spec) : residual_ide(s.x, spec);
            double m = 0.0;
            for (double v : r.values()) m = std::max(m, v);
            INFO(name << " N=" << N);
            CHECK(m <= std::max(prev, 1e-9));
            CHECK(m < 1e-2);
            prev = m;
        }
    }

    // A directed perturbation of size eps phi changes the VIE residual by at
    // most eps (1 + (L1 + L2) L) phi.
    const ProblemSpec spec = catalog_entry("linear-ml").build(256);
    const SolveResult s = fixed_point_solve(spec, {.tol = 1e-12});
    const GridFunction r = residual_vie(perturb(s.x, spec.phi, 0.5, 1.0), spec);
    const double bound = 0.5 * (1.0 + (spec.L1 + spec.L2) * spec.L);
    for (std::size_t j = 0; j < r.size(); ++j) CHECK(r.at(j) <= bound * spec.phi.at(j) * (1.0 + 1e-3));
}

TEST_CASE("every catalog problem certifies its perturbed solution") {
    for (const auto& entry : catalog()) {
        const ProblemSpec spec = entry.build(entry.default_N);
        const SolveResult s = fixed_point_solve(spec);
        double prev = INFINITY;
        for (double eps : {1.0, 0.5, 0.1}) {
            const GridFunction f = perturb(s.x, spec.phi, eps, spec.params.gamma());
            const StabilityCertificate c = certify(f, spec);
            INFO(entry.name << " eps=" << eps << " reason=" << c.reason);
            CHECK(c.verdict == Verdict::Pass);
            CHECK(c.residual_ok);
            CHECK(c.phi_condition_ok);
            CHECK(c.max_ratio <= 1.0 + c.slack);
            CHECK(c.C == doctest::Approx(uh_constant(spec)));
            // Smaller perturbations never raise the ratio.
            CHECK(c.max_ratio <= prev);
            prev = c.max_ratio;
            for (std::size_t j = 0; j < c.ratio_profile.size(); ++j)
                CHECK(c.distance_profile[j] <= c.C * c.phi_profile[j] * (1.0 + c.slack));
        }
    }
}

TEST_CASE("one VACUOUS certificate per failed hypothesis") {
    SUBCASE("residual") {
        const ProblemSpec spec = catalog_entry("linear-ml").build(128);
        GridFunction f = fixed_point_solve(spec).x;
        const std::size_t mid = 64;
        f.at(mid) += 2.0 * spec.phi.at(mid);
        const StabilityCertificate c = certify(f, spec);
        CHECK(c.verdict == Verdict::Vacuous);
        CHECK_FALSE(c.residual_ok);
        CHECK(c.phi_condition_ok);
        CHECK(c.q < 1.0);
        CHECK(c.distance_profile.empty());
    }
    SUBCASE("phi-condition") {
        const ProblemSpec spec = scalar(ProblemKind::VIE, "1", "0.1 * x", {0.5, 1.0}, unit(128), 0.0, 0.1, "1", 0.9);
        const StabilityCertificate c = certify(fixed_point_solve(spec).x, spec);
        CHECK(c.verdict == Verdict::Vacuous);
        CHECK(c.residual_ok);
        CHECK_FALSE(c.phi_condition_ok);
        CHECK(c.phi_condition_ratio == doctest::Approx(1.0 / std::tgamma(1.5)));
    }
    SUBCASE("contraction") {
        const ProblemSpec spec = scalar(ProblemKind::IDE, "0", "0", {0.5, 1.0}, unit(64), 0.9, 0.9, "exp(4 * t)", 0.5);
        const StabilityCertificate c = certify(GridFunction(spec.grid, 1), spec);
        CHECK(c.verdict == Verdict::Vacuous);
        CHECK(c.q == doctest::Approx(0.9 + (0.9 + 0.9 + 0.45) * 0.5));
        CHECK(std::isnan(c.C));
        CHECK(c.reason.find("q >= 1") != std::string::npos);
    }
}

TEST_CASE("certificate serialization") {
    const ProblemSpec spec = catalog_entry("linear-ml").build(16);
    const SolveResult s = fixed_point_solve(spec);
    const StabilityCertificate pass = certify(perturb(s.x, spec.phi, 0.5, 1.0), spec);
    std::ostringstream report, csv;
    write_report(report, pass);
    write_profile_csv(csv, pass);
    CHECK(report.str().rfind("verdict = PASS\n", 0) == 0);
    CHECK(report.str().find("\nC = ") != std::string::npos);
    std::istringstream lines(csv.str());
    std::string line;
    std::getline(lines, line);
    CHECK(line == "t,residual,phi,distance,ratio");
    std::getline(lines, line);
    CHECK(line.rfind("0,", 0) == 0);
    const std::string text = csv.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 18);

    GridFunction bad = s.x;
    bad.at(3) += 10.0;
    const StabilityCertificate vac = certify(bad, spec);
    std::ostringstream vcsv;
    write_profile_csv(vcsv, vac);
    std::istringstream vlines(vcsv.str());
    std::getline(vlines, line);
    std::getline(vlines, line);
    CHECK(line.size() >= 2);
    CHECK(line.substr(line.size() - 2) == ",,");
}

TEST_CASE("certify rejects a candidate on another grid") {
    const ProblemSpec spec = catalog_entry("linear-ml").build(16);
    CHECK_THROWS_AS(certify(GridFunction(unit(8), 1), spec), Error);
}
