#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "psivolterra/run.hpp"

using namespace psivolterra;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("pv_test_run_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run_text(const std::string& command, const std::string& json, const fs::path& dir) {
    const fs::path cfg = dir / "config.json";
    std::ofstream(cfg) << json;
    std::ostringstream out, err;
    const int code = run_file(command, cfg, dir / "out", out, err);
    return {code, out.str(), err.str()};
}

ErrorCode config_error_code(const std::string& json) {
    try {
        parse_config(json);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("config was accepted: " << json);
    return ErrorCode::Io;
}

const char* kInlineVie = R"J({"problem": {"kind": "VIE", "g": "1", "K": "0.25 * x"},
  "grid": {"T": 1, "N": 64}, "params": {"alpha": 0.5, "beta": 1},
  "lipschitz": {"L1": 0, "L2": 0.25}, "phi": {"expr": "exp(2 * t)", "L": 0.75}})J";

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST_CASE("commands") {
    CHECK(parse_command("solve") == Command::Solve);
    CHECK(parse_command("converge") == Command::Converge);
    CHECK_FALSE(parse_command("Solve"));
    CHECK(exit_code_for(ErrorCode::NonContractive) == 2);
    CHECK(exit_code_for(ErrorCode::NoConvergence) == 2);
    CHECK(exit_code_for(ErrorCode::Parse) == 1);
    CHECK(exit_code_for(ErrorCode::Config) == 1);
}

TEST_CASE("config validation") {
    CHECK(config_error_code(R"J({"problem": "linear-ml", "tolerance": 1})J") == ErrorCode::Config);
    CHECK(config_error_code(R"J({"problem": "linear-ml", "grid": {"N": 8, "T": 2}})J") == ErrorCode::Config);
    CHECK(config_error_code(R"J({"problem": "linear-ml", "phi": {"constant": 1, "L": 1}})J") == ErrorCode::Config);
    CHECK(config_error_code(R"J({"problem": "no-such-problem"})J") == ErrorCode::Config);
    CHECK(config_error_code(R"J({"problem": "linear-ml", "grid": {"N": 0}})J") == ErrorCode::Config);
    CHECK(config_error_code(R"J({"problem": "linear-ml", "grid": {"N": 8.5}})J") == ErrorCode::Config);
    CHECK(config_error_code(R"J({"problem": "linear-ml",)") == ErrorCode::Config);
    CHECK(config_error_code(R"([1, 2])J") == ErrorCode::Config);
    CHECK(config_error_code(R"J({"problem": "linear-ml", "perturbation": {"epsilon": 2}})J") == ErrorCode::Config);
    CHECK(config_error_code(R"J({"problem": "linear-ml", "perturbation": {"epsilon": 0.5}, "candidate": "1"})J") ==
          ErrorCode::Config);
    CHECK(config_error_code(R"J({"command": "plot", "problem": "linear-ml"})J") == ErrorCode::Config);

    // Unknown keys are caught at every level.
    std::string nested = kInlineVie;
    nested.replace(nested.find("\"L\": 0.75"), 9, "\"L\": 0.75, \"Ll\": 1");
    CHECK(config_error_code(nested) == ErrorCode::Config);

    // Expressions parse at load time and may only use their own variables.
    std::string broken = kInlineVie;
    broken.replace(broken.find("\"g\": \"1\""), 8, "\"g\": \"t +\"");
    CHECK(config_error_code(broken) == ErrorCode::Parse);
    std::string wrong_var = kInlineVie;
    wrong_var.replace(wrong_var.find("\"g\": \"1\""), 8, "\"g\": \"s\"");
    CHECK(config_error_code(wrong_var) == ErrorCode::Config);

    std::string missing = kInlineVie;
    missing.replace(missing.find("\"L1\": 0, "), 9, "");
    CHECK(config_error_code(missing) == ErrorCode::Config);

    const RunConfig ok = parse_config(kInlineVie);
    CHECK(ok.inline_problem);
    CHECK(*ok.N == 64);
    CHECK(ok.params->alpha == 0.5);
    CHECK(ok.tol == 1e-10);
}

TEST_CASE("built problems match their description") {
    const ProblemSpec a = build_problem(parse_config(kInlineVie));
    CHECK(a.kind == ProblemKind::VIE);
    CHECK(a.grid.intervals() == 64);
    CHECK(contraction_factor(a) == doctest::Approx(0.1875));
    CHECK(build_problem(parse_config(kInlineVie), 16).grid.intervals() == 16);

    const ProblemSpec cat = build_problem(parse_config(R"J({"problem": "hadamard-flavor", "grid": {"N": 32}})J"));
    CHECK(cat.grid.intervals() == 32);
    CHECK(cat.grid.psi() == PsiScale::log_shift());

    const ProblemSpec est = build_problem(parse_config(R"J({"problem": {"kind": "VIE", "g": "0.5 * x", "K": "0.2 * x"},
      "grid": {"N": 32}, "params": {"alpha": 0.5, "beta": 1}, "lipschitz": {"estimated": true, "range": [-2, 2]},
      "phi": {"constant": 1, "L": 1}})J"));
    CHECK(est.lipschitz_estimated);
    CHECK(est.L1 == doctest::Approx(0.5));
    CHECK(est.L2 == doctest::Approx(0.2));

    const ProblemSpec res = build_problem(parse_config(R"J({"problem": {"kind": "resolvent", "A": [[0.3, 0.1], [0, 0.3]],
      "Phi": "exp(-t)", "forcing": ["1", "t"]}, "grid": {"N": 32}, "psi": {"kind": "affine", "params": [0.05, 0]},
      "params": {"alpha": 0.5, "beta": 1}, "phi": {"constant": 1, "L": 0.2}})J"));
    CHECK(res.dim == 2);
    CHECK(res.L1 == doctest::Approx(0.4));
}

TEST_CASE("exit codes through run_file") {
    TempDir dir("exits");
    const Outcome pass = run_text("certify", R"J({"problem": "linear-ml", "grid": {"N": 64}, "perturbation": {"epsilon": 0.5}})J",
                                  dir.path);
    CHECK(pass.code == 0);
    CHECK(pass.out.find("PASS") != std::string::npos);
    CHECK(slurp(dir.path / "out" / "report.txt").find("verdict = PASS") != std::string::npos);

    const Outcome vac = run_text("certify", R"J({"problem": "linear-ml", "grid": {"N": 64}, "candidate": "5"})J", dir.path);
    CHECK(vac.code == 3);
    CHECK(slurp(dir.path / "out" / "report.txt").find("verdict = VACUOUS") != std::string::npos);

    const std::string nc = R"J({"problem": {"kind": "IDE", "g": "0.9 * x", "K": "0.9 * x"}, "grid": {"N": 16},
      "params": {"alpha": 0.5, "beta": 1}, "lipschitz": {"L1": 0.9, "L2": 0.9}, "phi": {"expr": "exp(4 * t)", "L": 0.5}})J";
    const Outcome non = run_text("solve", nc, dir.path);
    CHECK(non.code == 2);
    CHECK(non.err.find("NON_CONTRACTIVE") != std::string::npos);
    CHECK(run_text("certify", nc, dir.path).code == 3);

    const Outcome parse = run_text("solve", R"J({"problem": {"kind": "VIE", "g": "t +", "K": "0"}, "grid": {"N": 8},
      "params": {"alpha": 0.5, "beta": 1}, "lipschitz": {"L1": 0, "L2": 0}, "phi": {"constant": 1, "L": 1}})J", dir.path);
    CHECK(parse.code == 1);
    CHECK(parse.err.find("byte 3") != std::string::npos);

    const Outcome slow = run_text("solve", R"J({"problem": "linear-ml", "grid": {"N": 32}, "maxit": 2})J", dir.path);
    CHECK(slow.code == 2);
    CHECK(slow.err.find("NO_CONVERGENCE") != std::string::npos);

    const Outcome eval = run_text("solve", R"J({"problem": {"kind": "VIE", "g": "1 / (t - 0.5)", "K": "0"}, "grid": {"N": 8},
      "params": {"alpha": 0.5, "beta": 1}, "lipschitz": {"L1": 0, "L2": 0}, "phi": {"constant": 1, "L": 1}})J", dir.path);
    CHECK(eval.code == 2);
    CHECK(eval.err.find("t=0.5") != std::string::npos);

    CHECK(run_text("solve", R"J({"problem": "linear-ml", "command": "certify"})J", dir.path).code == 1);
    CHECK(run_text("fly", R"J({"problem": "linear-ml"})J", dir.path).code == 1);
    std::ostringstream o, e;
    CHECK(run_file("solve", dir.path / "missing.json", dir.path, o, e) == 1);
}

TEST_CASE("solve and operator outputs") {
    TempDir dir("outputs");
    REQUIRE(run_text("solve", R"J({"problem": "linear-ml", "grid": {"N": 16}, "output": {"csv": "x.csv"}})J", dir.path).code == 0);
    const auto sol = lines(slurp(dir.path / "out" / "x.csv"));
    REQUIRE(sol.size() == 18);
    CHECK(sol[0] == "t,x0");
    CHECK(sol[1] == "0,1");
    CHECK(sol[17].rfind("1,", 0) == 0);

    // I^0.5 of t is t^1.5 / Gamma(2.5); D^{0.5,1} of t is t^0.5 / Gamma(1.5).
    REQUIRE(run_text("operators", R"J({"operators": {"f": "t"}, "grid": {"N": 64}, "params": {"alpha": 0.5, "beta": 1}})J",
                     dir.path)
                .code == 0);
    const auto ops = lines(slurp(dir.path / "out" / "operators.csv"));
    REQUIRE(ops.size() == 66);
    CHECK(ops[0] == "t,f,integral,derivative");
    std::istringstream last(ops.back());
    std::string t, f, I, D;
    std::getline(last, t, ',');
    std::getline(last, f, ',');
    std::getline(last, I, ',');
    std::getline(last, D, ',');
    CHECK(std::stod(I) == doctest::Approx(1.0 / std::tgamma(2.5)).epsilon(1e-12));
    CHECK(std::stod(D) == doctest::Approx(1.0 / std::tgamma(1.5)).epsilon(1e-3));

    REQUIRE(run_text("solve", R"J({"problem": {"kind": "resolvent", "A": [[0.3, 0.1], [0, 0.3]], "Phi": "exp(-t)",
      "forcing": ["1", "t"]}, "grid": {"N": 8}, "psi": {"kind": "affine", "params": [0.05, 0]},
      "params": {"alpha": 0.5, "beta": 1}, "phi": {"constant": 1, "L": 0.2}})J", dir.path)
                .code == 0);
    CHECK(lines(slurp(dir.path / "out" / "solution.csv"))[0] == "t,x0,x1");
}

TEST_CASE("convergence studies") {
    TempDir dir("converge");
    REQUIRE(run_text("converge", R"J({"problem": "classical-ode", "grid": {"N": 16}})J", dir.path).code == 0);
    const auto rows = lines(slurp(dir.path / "out" / "converge.csv"));
    REQUIRE(rows.size() == 6);
    CHECK(rows[0] == "N,error,order");
    CHECK(rows[1].rfind("16,", 0) == 0);
    CHECK(rows[1].back() == ',');
    CHECK(rows[5].rfind("256,", 0) == 0);
    const double order = std::stod(rows[5].substr(rows[5].rfind(',') + 1));
    CHECK(order == doctest::Approx(2.0).epsilon(0.05));

    // No oracle: four rows against the finest grid.
    REQUIRE(run_text("converge", R"J({"problem": "hadamard-flavor", "grid": {"N": 16}})J", dir.path).code == 0);
    const auto self = lines(slurp(dir.path / "out" / "converge.csv"));
    REQUIRE(self.size() == 5);
    CHECK(slurp(dir.path / "out" / "report.txt").find("reference = finest grid") != std::string::npos);

    REQUIRE(run_text("converge", R"J({"operators": {"f": "t^1.5", "integral_oracle": "0.6646701940895685 * t^2"},
      "grid": {"N": 16}, "params": {"alpha": 0.5, "beta": 1}})J", dir.path)
                .code == 0);
    const auto integral = lines(slurp(dir.path / "out" / "converge.csv"));
    REQUIRE(integral.size() == 6);
}

TEST_CASE("identical configs give byte-identical files") {
    TempDir a("repro_a"), b("repro_b");
    const std::string cfg = R"J({"problem": "resolvent-example", "grid": {"N": 64}, "perturbation": {"epsilon": 0.5}})J";
    REQUIRE(run_text("certify", cfg, a.path).code == 0);
    REQUIRE(run_text("certify", cfg, b.path).code == 0);
    CHECK(slurp(a.path / "out" / "certificate.csv") == slurp(b.path / "out" / "certificate.csv"));
    CHECK(slurp(a.path / "out" / "report.txt") == slurp(b.path / "out" / "report.txt"));
}
