#pragma once

#include <optional>
#include <string>
#include <vector>

#include "beta/dsl/parser.hpp"
#include "beta/dsl/resolver.hpp"
#include "beta/logic.hpp"
#include "beta/machine.hpp"
#include "json.hpp"

namespace beta::dsl {

/// Command-line overrides of the program's run statement.
struct RunOverrides {
    std::optional<double> epsilon;
    std::optional<std::int64_t> max_steps;
    std::optional<std::int64_t> shots;
    std::optional<std::uint64_t> seed;
    std::optional<machine::SampleMode::Kind> mode;
    std::optional<machine::MachineState> initial;
};

struct ExecuteResult {
    std::optional<machine::RunResult> run;
    nlohmann::json report;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return run.has_value(); }
};

inline machine::RunConfig effective_config(const BoundProgram& prog, const RunOverrides& o) {
    machine::RunConfig cfg = prog.run;
    if (o.epsilon) cfg.epsilon = *o.epsilon;
    if (o.max_steps) cfg.max_steps = *o.max_steps;
    if (o.shots) cfg.shots = *o.shots;
    if (o.seed) cfg.mode.seed = *o.seed;
    if (o.mode) cfg.mode.kind = *o.mode;
    return cfg;
}

inline nlohmann::json run_report(const BoundProgram& prog, const machine::RunConfig& cfg,
                                 const machine::RunResult& run) {
    using nlohmann::json;
    const auto selected = prog.selected_program();
    json out;
    out["schema"] = logic::kSchema;
    out["kind"] = "run";
    json system = logic::to_json(prog.system, prog.combined);
    system["subsystems"] = prog.subsystem_names;
    system["combined_names"] = prog.combined_names;
    out["system"] = std::move(system);
    out["program_digest"] = prog.digest;
    out["rule"] = prog.run_target;
    out["seed"] = cfg.mode.seed;
    out["shots"] = cfg.shots;
    out["epsilon"] = cfg.epsilon;
    out["max_steps"] = cfg.max_steps;
    out["mode"] = cfg.mode.kind == machine::SampleMode::Kind::exact ? "exact" : "sampled";

    json steps = json::array();
    json fired_all = json::array();
    json prints_all = json::array();
    for (const auto& st : run.steps) {
        json fired = json::array();
        for (const auto& f : st.fired) {
            json entry{{"rule", selected.rules[f.rule].name}, {"branch", f.branch + 1}};
            fired.push_back(entry);
            entry["t"] = st.t;
            fired_all.push_back(entry);
        }
        for (const auto& p : st.prints) prints_all.push_back({{"t", st.t}, {"text", p}});
        steps.push_back({{"t", st.t},
                         {"spectrum", st.spectrum.entries},
                         {"entropy", st.entropy},
                         {"branches_fired", fired},
                         {"prints", st.prints}});
    }
    out["steps"] = std::move(steps);
    out["entropy_trace"] = run.report.entropy;
    out["T"] = run.report.depth ? json(*run.report.depth) : json(nullptr);
    out["converged"] = run.report.converged;
    out["decided_class"] = run.report.converged ? json(run.report.decided_class) : json(nullptr);
    out["branches_fired"] = std::move(fired_all);
    out["prints"] = std::move(prints_all);
    return out;
}

/// Runs the selected rules until the spectrum entropy drops below epsilon.
inline ExecuteResult execute(const BoundProgram& prog, const RunOverrides& overrides = {}) {
    ExecuteResult out;
    const machine::RunConfig cfg = effective_config(prog, overrides);
    const machine::MachineState initial = overrides.initial ? *overrides.initial : prog.initial;
    try {
        if (initial.standard_dim() != prog.standard_dim() || initial.combined.size() != prog.combined.size())
            fail(errc::dimension, "initial state does not match the program's system");
        auto run = machine::run_until_converged(prog.selected_program(), initial, cfg,
                                                [&](std::size_t m) { return prog.slot_label(m); });
        out.report = run_report(prog, cfg, run);
        out.run = std::move(run);
    } catch (const error& e) {
        out.diagnostics.push_back({Diagnostic::Severity::error, e.what(), prog.run_pos.line, prog.run_pos.column});
    }
    return out;
}

/// Parse, resolve and execute in one call; the first stage with diagnostics stops the pipeline.
inline ExecuteResult run_source(const SourceProgram& src, const RunOverrides& overrides = {}) {
    auto parsed = parse(src);
    if (!parsed.ok()) return {std::nullopt, {}, std::move(parsed.diagnostics)};
    auto bound = resolve(parsed.ast);
    if (!bound.ok()) return {std::nullopt, {}, std::move(bound.diagnostics)};
    return execute(*bound.program, overrides);
}

}  // namespace beta::dsl
