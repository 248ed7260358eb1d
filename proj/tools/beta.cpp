// beta: command-line front end for the composite event-state machine.
//
// Exit codes: 0 success, 1 diagnostics or malformed input data,
// 2 usage error (bad flags, missing files, arguments out of range),
// 3 numeric or internal error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "beta/beta.hpp"

namespace {

enum Exit { kOk = 0, kDiagnostics = 1, kUsage = 2, kInternal = 3 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Output {
    bool json = false;
    std::string out_path;

    void emit(const std::string& text) const {
        if (out_path.empty()) {
            std::cout << text;
            return;
        }
        std::ofstream f(out_path, std::ios::binary);
        if (!f) throw UsageError("cannot write " + out_path);
        f << text;
    }

    void emit(const nlohmann::json& report, const std::string& text) const {
        emit(json ? report.dump(2) + "\n" : text);
    }
};

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw UsageError("cannot read " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void print_diagnostics(const std::string& path, const std::vector<beta::dsl::Diagnostic>& diags) {
    for (const auto& d : diags)
        std::cerr << path << ":" << d.line << ":" << d.column << ": "
                  << (d.severity == beta::dsl::Diagnostic::Severity::error ? "error" : "warning") << ": "
                  << d.message << "\n";
}

std::string fmt_double(double v) {
    std::ostringstream ss;
    ss.precision(12);
    ss << v;
    return ss.str();
}

template <class Seq>
std::string join(const Seq& xs, const char* sep = ", ") {
    std::ostringstream ss;
    bool first = true;
    for (const auto& x : xs) {
        if (!first) ss << sep;
        ss << x;
        first = false;
    }
    return ss.str();
}

std::string matrix_text(const nlohmann::json& rows) {
    std::string out = "[";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i) out += ",";
        out += "[" + join(rows[i].get<std::vector<std::int64_t>>(), ",") + "]";
    }
    return out + "]";
}

// ---------------------------------------------------------------------------

struct RunArgs {
    std::string path;
    std::optional<std::int64_t> shots, max_steps;
    std::optional<std::uint64_t> seed;
    std::optional<double> epsilon;
    std::optional<std::string> mode;
};

int cmd_run(const RunArgs& a, const Output& out) {
    namespace dsl = beta::dsl;
    dsl::SourceProgram src{read_file(a.path), a.path};
    dsl::RunOverrides ov;
    if (a.shots) {
        if (*a.shots < 1) throw UsageError("--shots must be at least 1");
        ov.shots = a.shots;
    }
    if (a.epsilon) {
        if (!(*a.epsilon > 0.0)) throw UsageError("--epsilon must be positive");
        ov.epsilon = a.epsilon;
    }
    if (a.max_steps) {
        if (*a.max_steps < 1) throw UsageError("--max-steps must be at least 1");
        ov.max_steps = a.max_steps;
    }
    ov.seed = a.seed;
    if (a.mode) ov.mode = *a.mode == "exact" ? beta::machine::SampleMode::Kind::exact
                                             : beta::machine::SampleMode::Kind::sampled;

    auto res = dsl::run_source(src, ov);
    if (!res.ok()) {
        print_diagnostics(a.path, res.diagnostics);
        return kDiagnostics;
    }
    const auto& r = res.report;
    std::ostringstream text;
    text << "program " << a.path << " (digest " << r["program_digest"].get<std::string>() << ")\n";
    text << "shots " << r["shots"] << ", seed " << r["seed"] << ", mode " << r["mode"].get<std::string>()
         << ", epsilon " << fmt_double(r["epsilon"].get<double>()) << "\n";
    for (const auto& st : r["steps"]) {
        text << "t=" << st["t"] << "  entropy=" << fmt_double(st["entropy"].get<double>());
        for (const auto& f : st["branches_fired"])
            text << "  fired " << f["rule"].get<std::string>() << "#" << f["branch"];
        text << "\n";
        for (const auto& p : st["prints"]) text << "  > " << p.get<std::string>() << "\n";
    }
    if (r["converged"].get<bool>())
        text << "converged at T=" << r["T"] << ", class " << r["decided_class"].get<std::string>() << "\n";
    else
        text << "not converged after " << r["max_steps"] << " steps\n";
    out.emit(r, text.str());
    return kOk;
}

// ---------------------------------------------------------------------------

int cmd_classify(const Output& out) {
    const auto verdicts = beta::omega::classify_binary_2x2();
    const auto rep = beta::omega::classify_report(verdicts);
    std::ostringstream text;
    for (const auto& v : rep["verdicts"])
        text << matrix_text(v["matrix"]) << "  discriminant " << v["discriminant"] << "  "
             << (v["in_omega"].get<bool>() ? "in Omega" : "-") << "\n";
    text << rep["in_omega_count"] << " of 16 in Omega\n";
    if (rep.contains("note")) text << "note: " << rep["note"].get<std::string>() << "\n";
    out.emit(rep, text.str());
    return kOk;
}

int cmd_fib(int n, const Output& out) {
    const auto rep = beta::omega::fib_report(n);
    std::ostringstream text;
    text << "F(" << n << ") = " << rep["value"] << "\n";
    if (rep.contains("golden_ratio_gap"))
        text << "|F(n+1)/F(n) - tau| = " << fmt_double(rep["golden_ratio_gap"].get<double>()) << "\n";
    out.emit(rep, text.str());
    return kOk;
}

int cmd_euclid(std::int64_t p, std::int64_t q, const Output& out) {
    const auto rep = beta::omega::euclid_report(p, q);
    std::ostringstream text;
    text << "quotients (" << join(rep["quotients"].get<std::vector<std::int64_t>>()) << ")\n";
    text << "gcd " << rep["gcd"] << " in " << rep["steps"] << " steps\n";
    out.emit(rep, text.str());
    return kOk;
}

int cmd_word(int k, const Output& out) {
    const auto rep = beta::omega::word_report(k);
    out.emit(rep, rep["word"].get<std::string>() + "\n");
    return kOk;
}

int cmd_ca(const std::string& arith, int code, const Output& out) {
    const auto a = arith == "mod2" ? beta::omega::Arithmetic::mod2 : beta::omega::Arithmetic::integer;
    const auto rep = beta::omega::ca_report(beta::omega::ca_linear_impossibility(a, code));
    std::ostringstream text;
    text << "rule " << code << " (" << arith << " arithmetic): " << rep["matches"] << " of "
         << rep["candidates_checked"] << " binary 3x3 candidates reproduce the rule table\n";
    for (const auto& e : rep["rule1_candidate"]["evaluations"])
        text << "  " << matrix_text(rep["rule1_candidate"]["matrix"]) << " * (" << join(e["input"].get<std::vector<int>>())
             << ") = (" << join(e["output"].get<std::vector<std::int64_t>>()) << "), automaton gives ("
             << join(e["expected"].get<std::vector<int>>()) << ")\n";
    out.emit(rep, text.str());
    return kOk;
}

int cmd_almost_period(const beta::omega::AlmostPeriodConfig& cfg, const Output& out) {
    const auto rep = beta::omega::almost_period_search(cfg);
    const auto js = beta::omega::almost_period_json(cfg, rep);
    std::ostringstream text;
    if (rep.found)
        text << "shift " << fmt_double(rep.shift) << " gives max deviation " << fmt_double(rep.max_deviation)
             << " < " << fmt_double(rep.epsilon) << "\n";
    else
        text << "no shift below epsilon " << fmt_double(rep.epsilon) << "; best " << fmt_double(rep.shift)
             << " with deviation " << fmt_double(rep.max_deviation) << "\n";
    out.emit(js, text.str());
    return kOk;
}

// ---------------------------------------------------------------------------

int cmd_lattice(int dim, int trials, std::uint64_t seed, const Output& out) {
    if (dim < 2) throw UsageError("--dim must be at least 2");
    if (trials < 0) throw UsageError("--trials must be non-negative");
    const auto w = beta::logic::distributivity_witness(static_cast<std::size_t>(dim));
    const auto om = beta::logic::orthomodular_spot_checks(static_cast<std::size_t>(dim),
                                                          static_cast<std::size_t>(trials), seed);
    nlohmann::json rep;
    rep["schema"] = beta::logic::kSchema;
    rep["kind"] = "lattice";
    rep["dim"] = dim;
    rep["witness"] = {{"p_rank", w.p.rank()},
                      {"q_rank", w.q.rank()},
                      {"r_rank", w.r.rank()},
                      {"left_rank", w.left.rank()},
                      {"right_rank", w.right.rank()},
                      {"violated", w.violated}};
    rep["orthomodular"] = {{"trials", om.trials},
                           {"passed", om.passed},
                           {"max_residual", om.max_residual},
                           {"tolerance", om.tolerance},
                           {"seed", om.seed}};
    std::ostringstream text;
    text << "p = span(e1), q = span(e2), r = span((e1+e2)/sqrt2) in dim " << dim << "\n";
    text << "rank r^(p v q) = " << w.left.rank() << ", rank (r^p) v (r^q) = " << w.right.rank()
         << (w.violated ? "  distributivity fails\n" : "  distributivity holds\n");
    text << "orthomodular checks: " << om.passed << "/" << om.trials << " passed (max residual "
         << fmt_double(om.max_residual) << ")\n";
    out.emit(rep, text.str());
    return om.passed == om.trials ? kOk : kInternal;
}

// ---------------------------------------------------------------------------

struct HypothesizeArgs {
    std::string path;
    std::string family = "binary";
    std::string family_file;
    unsigned workers = 1;
    bool partial = false;
};

int cmd_hypothesize(const HypothesizeArgs& a, const Output& out) {
    namespace m = beta::machine;
    const std::string raw = read_file(a.path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed trajectory JSON: ") + e.what());
    }
    if (doc.is_object() && doc.contains("trajectory")) doc = doc["trajectory"];
    if (!doc.is_array()) throw DataError("trajectory must be a JSON list of integer vectors");
    if (doc.size() < 2) throw UsageError("trajectory needs at least two states, got " + std::to_string(doc.size()));
    std::vector<std::vector<std::int64_t>> traj;
    try {
        traj = doc.get<std::vector<std::vector<std::int64_t>>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("trajectory entries must be integer vectors: ") + e.what());
    }
    const std::size_t dim = traj.front().size();
    for (const auto& v : traj)
        if (v.size() != dim || dim == 0) throw DataError("trajectory vectors must share one positive dimension");

    std::vector<m::IntMatrix> family;
    std::string family_name = a.family;
    if (!a.family_file.empty()) {
        family_name = "file:" + a.family_file;
        nlohmann::json fam;
        try {
            fam = nlohmann::json::parse(read_file(a.family_file));
            for (const auto& mat : fam) {
                m::IntMatrix im{mat.size(), {}};
                for (const auto& row : mat) {
                    if (row.size() != mat.size()) throw DataError("family matrices must be square");
                    for (const auto& x : row) im.a.push_back(x.get<std::int64_t>());
                }
                family.push_back(std::move(im));
            }
        } catch (const nlohmann::json::exception& e) {
            throw DataError(std::string("malformed family JSON: ") + e.what());
        }
    } else if (a.family == "binary2" || a.family == "binary3" || a.family == "binary") {
        const std::size_t n = a.family == "binary" ? dim : static_cast<std::size_t>(a.family.back() - '0');
        if (n != dim) throw UsageError("family " + a.family + " does not match trajectory dimension " + std::to_string(dim));
        if (n > 4) throw UsageError("binary families are limited to dimension 4");
        family = m::binary_family(n);
        family_name = "binary" + std::to_string(n);
    } else {
        throw UsageError("unknown family '" + a.family + "'");
    }

    const auto matches = m::hypothesis_search(traj, family, {a.workers, a.partial});
    const auto rep = m::hypothesis_report(traj, family_name, matches);
    std::ostringstream text;
    text << matches.size() << " operator(s) from " << family.size() << " in " << family_name << "\n";
    for (const auto& mt : rep["matches"])
        text << "  " << matrix_text(mt["operator"]) << (mt["exact"].get<bool>() ? "  exact" : "  partial")
             << "  pairs " << mt["pairs_matched"] << "\n";
    out.emit(rep, text.str());
    return kOk;
}

// ---------------------------------------------------------------------------

int cmd_fmt(const std::string& path, bool check, const Output& out) {
    const auto parsed = beta::dsl::parse({read_file(path), path});
    if (!parsed.ok()) {
        print_diagnostics(path, parsed.diagnostics);
        return kDiagnostics;
    }
    const std::string text = beta::dsl::format(parsed.ast);
    if (check) {
        if (text != read_file(path)) {
            std::cerr << path << ": not in canonical form\n";
            return kDiagnostics;
        }
        return kOk;
    }
    out.emit(text);
    return kOk;
}

void apply_dim_cap_env() {
    const char* env = std::getenv("BETA_DIM_CAP");
    if (!env || !*env) return;
    char* end = nullptr;
    const unsigned long long cap = std::strtoull(env, &end, 10);
    if (*end != '\0' || cap == 0) throw UsageError(std::string("BETA_DIM_CAP must be a positive integer, got '") + env + "'");
    beta::set_dim_cap(static_cast<std::size_t>(cap));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulator for composite event-state machines and the beta language"};
    app.require_subcommand(1);
    Output out;
    app.add_flag("--json", out.json, "Emit the JSON report instead of text");
    app.add_option("--out", out.out_path, "Write the report to this file instead of stdout");

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "Parse, resolve and execute a .beta program");
    run->fallthrough();
    run->add_option("file", run_args.path, "Program file")->required();
    run->add_option("--shots", run_args.shots, "Measurements per step");
    run->add_option("--seed", run_args.seed, "Seed for sampled spectra");
    run->add_option("--epsilon", run_args.epsilon, "Entropy threshold in bits");
    run->add_option("--max-steps", run_args.max_steps, "Step limit");
    run->add_option("--mode", run_args.mode, "Spectrum mode")->check(CLI::IsMember({"exact", "sampled"}));

    auto* omega = app.add_subcommand("omega", "Quasi-periodic operator class analysis");
    omega->fallthrough();
    omega->require_subcommand(1);
    auto* classify = omega->add_subcommand("classify", "Classify all 16 binary 2x2 matrices");
    classify->fallthrough();
    int fib_n = 0;
    auto* fib = omega->add_subcommand("fib", "Exact Fibonacci number and golden-ratio gap");
    fib->fallthrough();
    fib->add_option("n", fib_n)->required();
    std::int64_t eu_p = 0, eu_q = 0;
    auto* euclid = omega->add_subcommand("euclid", "Euclid quotient trace");
    euclid->fallthrough();
    euclid->add_option("p", eu_p)->required();
    euclid->add_option("q", eu_q)->required();
    int word_k = 0;
    auto* word = omega->add_subcommand("word", "Fibonacci word after k rewritings");
    word->fallthrough();
    word->add_option("k", word_k)->required();
    std::string ca_arith = "integer";
    int ca_code = 110;
    auto* ca = omega->add_subcommand("ca", "Linear impossibility of an elementary automaton step");
    ca->fallthrough();
    ca->add_option("--arith", ca_arith)->check(CLI::IsMember({"integer", "mod2"}));
    ca->add_option("--code", ca_code)->check(CLI::Range(0, 255));
    beta::omega::AlmostPeriodConfig ap;
    auto* almost = omega->add_subcommand("almost-period", "Almost-period search for sin(x) + sin(tau x)");
    almost->fallthrough();
    almost->add_option("--epsilon", ap.epsilon);
    almost->add_option("--shift-max", ap.shifts.stop);
    almost->add_option("--shift-step", ap.shifts.step);
    almost->add_option("--sample-max", ap.samples.stop);
    almost->add_option("--sample-step", ap.samples.step);
    almost->add_option("--min-shift", ap.min_shift);

    int lat_dim = 2, lat_trials = 1000;
    std::uint64_t lat_seed = 0;
    auto* lattice = app.add_subcommand("lattice", "Distributivity witness and orthomodular spot checks");
    lattice->fallthrough();
    lattice->add_option("--dim", lat_dim);
    lattice->add_option("--trials", lat_trials);
    lattice->add_option("--seed", lat_seed);

    HypothesizeArgs hyp;
    auto* hypothesize = app.add_subcommand("hypothesize", "Recover operators from an integer trajectory");
    hypothesize->fallthrough();
    hypothesize->add_option("file", hyp.path, "JSON list of integer vectors")->required();
    hypothesize->add_option("--family", hyp.family, "binary, binary2 or binary3");
    hypothesize->add_option("--family-file", hyp.family_file, "JSON list of square integer matrices");
    hypothesize->add_option("--workers", hyp.workers)->check(CLI::Range(1u, 64u));
    hypothesize->add_flag("--partial", hyp.partial, "Also list operators matching some pairs");

    std::string fmt_path;
    bool fmt_check = false;
    auto* fmt = app.add_subcommand("fmt", "Print a .beta program in canonical form");
    fmt->fallthrough();
    fmt->add_option("file", fmt_path)->required();
    fmt->add_flag("--check", fmt_check, "Exit 1 unless the file is already canonical");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        apply_dim_cap_env();
        if (*run) return cmd_run(run_args, out);
        if (*classify) return cmd_classify(out);
        if (*fib) return cmd_fib(fib_n, out);
        if (*euclid) return cmd_euclid(eu_p, eu_q, out);
        if (*word) return cmd_word(word_k, out);
        if (*ca) return cmd_ca(ca_arith, ca_code, out);
        if (*almost) return cmd_almost_period(ap, out);
        if (*lattice) return cmd_lattice(lat_dim, lat_trials, lat_seed, out);
        if (*hypothesize) return cmd_hypothesize(hyp, out);
        if (*fmt) return cmd_fmt(fmt_path, fmt_check, out);
    } catch (const UsageError& e) {
        std::cerr << "beta: " << e.what() << "\n";
        return kUsage;
    } catch (const DataError& e) {
        std::cerr << "beta: " << e.what() << "\n";
        return kDiagnostics;
    } catch (const beta::error& e) {
        std::cerr << "beta: " << e.what() << "\n";
        switch (e.code()) {
            case beta::errc::numeric:
                return kInternal;
            case beta::errc::validation:
                return kDiagnostics;
            default:
                return kUsage;
        }
    } catch (const std::exception& e) {
        std::cerr << "beta: internal error: " << e.what() << "\n";
        return kInternal;
    }
    return kUsage;
}
