#pragma once

/**
 * @file resolver.hpp
 * @brief Binds a parsed program to a composite system and a machine program.
 *
 * A state reference `a.x & b.y` names one standard basis state: every listed
 * subsystem takes the listed state and every other subsystem its first
 * declared state.
 */

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "beta/dsl/ast.hpp"
#include "beta/dsl/format.hpp"
#include "beta/logic.hpp"
#include "beta/machine.hpp"

namespace beta::dsl {

struct BoundProgram {
    logic::CompositeSystem system;
    std::vector<std::string> subsystem_names;
    std::vector<std::vector<std::string>> state_names;
    std::vector<logic::CombinedState> combined;
    std::vector<std::string> combined_names;
    std::vector<std::string> rule_names;
    machine::HypothesisProgram program;  // every rule, in source order
    machine::MachineState initial;
    machine::RunConfig run;
    std::string run_target = "all";
    SourcePos run_pos;
    std::string digest;

    std::size_t standard_dim() const { return system.total_dim; }
    std::size_t slots() const { return system.total_dim + combined.size(); }
    std::size_t combined_slot(std::size_t i) const { return system.total_dim + i + 1; }

    /// "c.h & d.on" for standard slots, the declared name for combined slots.
    std::string slot_label(std::size_t slot) const {
        if (slot >= 1 && slot <= system.total_dim) {
            const auto locals = system.local_states(slot);
            std::string out;
            for (std::size_t n = 0; n < locals.size(); ++n) {
                if (n) out += " & ";
                out += subsystem_names[n] + "." + state_names[n][locals[n]];
            }
            return out;
        }
        if (slot > system.total_dim && slot <= slots()) return combined_names[slot - system.total_dim - 1];
        return "slot " + std::to_string(slot);
    }

    /// The rules selected by the run statement.
    machine::HypothesisProgram selected_program() const {
        if (run_target == "all") return program;
        machine::HypothesisProgram out;
        for (std::size_t r = 0; r < rule_names.size(); ++r)
            if (rule_names[r] == run_target) out.rules.push_back(program.rules[r]);
        return out;
    }
};

struct ResolveResult {
    std::optional<BoundProgram> program;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return program.has_value(); }
};

namespace detail {

class Resolver {
public:
    explicit Resolver(std::vector<Diagnostic>& diags) : diags_(diags) {}

    std::optional<BoundProgram> run(const Ast& ast) {
        if (ast.systems.empty()) {
            report({1, 1}, "program has no system block");
            return std::nullopt;
        }
        for (std::size_t i = 1; i < ast.systems.size(); ++i) report(ast.systems[i].pos, "only one system block is allowed");
        if (!bind_system(ast.systems.front())) return std::nullopt;

        for (const auto& decl : ast.decls)
            if (const auto* c = std::get_if<CombineDecl>(&decl)) bind_combined(*c);
        for (const auto& decl : ast.decls)
            if (const auto* o = std::get_if<OperatorDecl>(&decl)) bind_operator(*o);

        std::size_t inits = 0;
        bound_.initial.amplitudes = linalg::Vector::basis(bound_.standard_dim(), 0);
        bound_.initial.combined.assign(bound_.combined.size(), 0.0);
        for (const auto& decl : ast.decls) {
            if (const auto* i = std::get_if<InitDecl>(&decl)) {
                if (inits++) report(i->pos, "only one init statement is allowed");
                else bind_init(*i);
            }
        }

        std::set<std::string> rule_seen;
        for (const auto& rule : ast.rules) {
            if (rule.name == "all") report(rule.pos, "'all' is reserved and cannot name a rule");
            if (!rule_seen.insert(rule.name).second) report(rule.pos, "duplicate rule '" + rule.name + "'");
            bound_.rule_names.push_back(rule.name);
            bound_.program.rules.push_back(bind_rule(rule));
        }

        if (ast.runs.size() > 1) report(ast.runs[1].pos, "only one run statement is allowed");
        if (!ast.runs.empty()) bind_run(ast.runs.front());

        if (!clean_) return std::nullopt;
        try {
            machine::validate_program(bound_.program, bound_.standard_dim(), bound_.slots());
        } catch (const error& e) {
            report({1, 1}, e.what());
            return std::nullopt;
        }
        bound_.digest = program_digest(ast);
        return std::move(bound_);
    }

private:
    void report(const SourcePos& p, std::string msg) {
        diags_.push_back({Diagnostic::Severity::error, std::move(msg), p.line, p.column});
        clean_ = false;
    }

    bool bind_system(const SystemNode& sys) {
        std::set<std::string> names;
        std::vector<std::size_t> dims;
        bool ok = true;
        for (const auto& sub : sys.subsystems) {
            if (!names.insert(sub.name).second) {
                report(sub.pos, "duplicate subsystem '" + sub.name + "'");
                ok = false;
            }
            std::set<std::string> states;
            for (const auto& s : sub.states)
                if (!states.insert(s).second) {
                    report(sub.pos, "duplicate state '" + s + "' in subsystem '" + sub.name + "'");
                    ok = false;
                }
            if (sub.states.size() % 2 != 0) {
                report(sub.pos, "subsystem '" + sub.name + "' has " + std::to_string(sub.states.size()) +
                                   " states; subsystem dimensions must be even");
                ok = false;
            }
            dims.push_back(sub.states.size());
            bound_.subsystem_names.push_back(sub.name);
            bound_.state_names.push_back(sub.states);
        }
        if (!ok) return false;
        try {
            bound_.system = logic::build_composite(dims, bound_.state_names);
            registry_.emplace(bound_.system.total_dim);
        } catch (const error& e) {
            report(sys.pos, e.what());
            return false;
        }
        return true;
    }

    std::optional<std::size_t> standard_index(const StateRef& ref) {
        std::vector<std::size_t> locals(bound_.subsystem_names.size(), 0);
        std::vector<bool> given(locals.size(), false);
        bool ok = true;
        for (const auto& [sub, state] : ref.parts) {
            auto it = std::find(bound_.subsystem_names.begin(), bound_.subsystem_names.end(), sub);
            if (it == bound_.subsystem_names.end()) {
                report(ref.pos, "unknown subsystem '" + sub + "'");
                ok = false;
                continue;
            }
            const auto n = static_cast<std::size_t>(it - bound_.subsystem_names.begin());
            const auto& states = bound_.state_names[n];
            auto st = std::find(states.begin(), states.end(), state);
            if (st == states.end()) {
                report(ref.pos, "unknown state '" + state + "' in subsystem '" + sub + "'");
                ok = false;
                continue;
            }
            if (given[n]) {
                report(ref.pos, "subsystem '" + sub + "' appears twice in one state reference");
                ok = false;
                continue;
            }
            given[n] = true;
            locals[n] = static_cast<std::size_t>(st - states.begin());
        }
        if (!ok) return std::nullopt;
        return bound_.system.standard_index(locals);
    }

    std::optional<std::size_t> combined_by_name(const std::string& name) const {
        for (std::size_t i = 0; i < bound_.combined_names.size(); ++i)
            if (bound_.combined_names[i] == name) return i;
        return std::nullopt;
    }

    bool name_taken(const std::string& name) const {
        return combined_by_name(name).has_value() || operators_.count(name) > 0;
    }

    void bind_combined(const CombineDecl& d) {
        if (name_taken(d.name)) {
            report(d.pos, "name '" + d.name + "' is already declared");
            return;
        }
        std::vector<std::size_t> support;
        bool ok = true;
        for (const auto& ref : d.refs) {
            auto m = standard_index(ref);
            if (!m) {
                ok = false;
                continue;
            }
            if (std::find(support.begin(), support.end(), *m) != support.end()) {
                report(ref.pos, "'" + format_ref(ref) + "' repeats a constituent of '" + d.name + "'");
                ok = false;
                continue;
            }
            support.push_back(*m);
        }
        if (!ok) return;
        if (support.size() < 2) {
            report(d.pos, "combined state '" + d.name + "' needs at least two distinct constituents");
            return;
        }
        const std::set<std::size_t> key(support.begin(), support.end());
        if (!supports_.insert(key).second) {
            report(d.pos, "combined state '" + d.name + "' duplicates the support of an earlier combined state");
            return;
        }
        std::vector<linalg::Scalar> amps;
        if (d.amps) {
            if (d.amps->size() != support.size()) {
                report(d.pos, "combined state '" + d.name + "' has " + std::to_string(support.size()) +
                                 " constituents but " + std::to_string(d.amps->size()) + " amplitudes");
                return;
            }
            for (double a : *d.amps) amps.emplace_back(a, 0.0);
        } else {
            amps.assign(support.size(), linalg::Scalar{1.0 / std::sqrt(static_cast<double>(support.size())), 0.0});
        }
        try {
            auto cs = logic::make_combined_state(bound_.system, support, amps);
            registry_->add(cs);
            bound_.combined.push_back(std::move(cs));
            bound_.combined_names.push_back(d.name);
        } catch (const error& e) {
            report(d.pos, e.what());
        }
    }

    void bind_operator(const OperatorDecl& d) {
        if (name_taken(d.name)) {
            report(d.pos, "name '" + d.name + "' is already declared");
            return;
        }
        const std::size_t n = bound_.standard_dim();
        if (d.rows.size() != n) {
            report(d.pos, "operator '" + d.name + "' must be " + std::to_string(n) + "x" + std::to_string(n));
            return;
        }
        linalg::Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            if (d.rows[i].size() != n) {
                report(d.pos, "operator '" + d.name + "' must be " + std::to_string(n) + "x" + std::to_string(n));
                return;
            }
            for (std::size_t j = 0; j < n; ++j) m(i, j) = d.rows[i][j];
        }
        if (!linalg::is_invertible(m)) {
            report(d.pos, "operator '" + d.name + "' is not invertible");
            return;
        }
        operators_.emplace(d.name, std::move(m));
    }

    void bind_init(const InitDecl& d) {
        std::vector<std::size_t> standard;
        for (const auto& t : d.targets) {
            if (t.state) {
                if (auto m = standard_index(*t.state)) {
                    if (std::find(standard.begin(), standard.end(), *m) == standard.end()) standard.push_back(*m);
                }
            } else if (auto c = combined_by_name(t.name)) {
                bound_.initial.combined[*c] = 1.0;
            } else {
                report(t.pos, "unknown state or combined state '" + t.name + "'");
            }
        }
        if (standard.empty()) return;
        linalg::Vector v(bound_.standard_dim());
        for (auto m : standard) v[m - 1] = 1.0 / std::sqrt(static_cast<double>(standard.size()));
        bound_.initial.amplitudes = v;
    }

    machine::GateExpr lower(const Cond& c, bool negated) {
        using machine::GateExpr;
        switch (c.kind) {
            case Cond::Kind::any:
            case Cond::Kind::all: {
                std::vector<GateExpr> kids;
                for (const auto& ch : c.children) kids.push_back(lower(ch, negated));
                // not any(a, b) = all(not a, not b) and the dual.
                const bool disjunction = (c.kind == Cond::Kind::any) != negated;
                return disjunction ? GateExpr::any(std::move(kids)) : GateExpr::all(std::move(kids));
            }
            case Cond::Kind::negate:
                return lower(c.children.front(), !negated);
            case Cond::Kind::state: {
                auto m = standard_index(c.ref);
                return GateExpr::leaf(m.value_or(1), !negated);
            }
            case Cond::Kind::name: {
                auto i = combined_by_name(c.name);
                if (!i) {
                    report(c.pos, "unknown combined state '" + c.name + "'");
                    return GateExpr::leaf(1, !negated);
                }
                return GateExpr::leaf(bound_.combined_slot(*i), !negated);
            }
            case Cond::Kind::complement: {
                auto i = combined_by_name(c.name);
                if (!i) {
                    report(c.pos, "unknown combined state '" + c.name + "'");
                    return GateExpr::leaf(1, negated);
                }
                // The complementary pair is false exactly when the combined state is true,
                // so it reads the false side of the same register slot.
                const auto pair = logic::complementary_pair(bound_.combined[*i]);
                if (pair.rank() + 1 != bound_.combined[*i].support.size())
                    report(c.pos, "complement of '" + c.name + "' is degenerate");
                return GateExpr::leaf(bound_.combined_slot(*i), negated);
            }
        }
        return GateExpr::leaf(1);
    }

    std::vector<std::size_t> pair_swap(const StateRef& ref, std::size_t m) {
        // The subsystem of the single listed part exchanges the listed state with its partner j ^ 1.
        const auto& [sub, state] = ref.parts.front();
        const auto n = static_cast<std::size_t>(
            std::find(bound_.subsystem_names.begin(), bound_.subsystem_names.end(), sub) - bound_.subsystem_names.begin());
        const std::size_t local = bound_.system.local_states(m)[n];
        const std::size_t partner = local ^ 1u;
        std::vector<std::size_t> perm(bound_.standard_dim());
        for (std::size_t i = 1; i <= bound_.standard_dim(); ++i) {
            auto locals = bound_.system.local_states(i);
            if (locals[n] == local)
                locals[n] = partner;
            else if (locals[n] == partner)
                locals[n] = local;
            perm[i - 1] = bound_.system.standard_index(locals) - 1;
        }
        return perm;
    }

    std::optional<machine::Action> bind_action(const ActionNode& a) {
        using machine::Action;
        switch (a.kind) {
            case ActionNode::Kind::print:
                return Action::print(a.text);
            case ActionNode::Kind::apply: {
                auto it = operators_.find(a.target.name);
                if (it == operators_.end()) {
                    report(a.target.pos, "unknown operator '" + a.target.name + "'");
                    return std::nullopt;
                }
                return Action::apply_operator(it->second, it->first);
            }
            case ActionNode::Kind::set:
            case ActionNode::Kind::swap: {
                const bool set = a.kind == ActionNode::Kind::set;
                if (a.target.state) {
                    if (!set && a.target.state->parts.size() != 1) {
                        report(a.target.pos, "swap takes a single subsystem.state reference");
                        return std::nullopt;
                    }
                    auto m = standard_index(*a.target.state);
                    if (!m) return std::nullopt;
                    if (set) return Action::set_state(*m);
                    return Action::permute(pair_swap(*a.target.state, *m), "swap " + format_ref(*a.target.state));
                }
                auto c = combined_by_name(a.target.name);
                if (!c) {
                    report(a.target.pos, "unknown combined state '" + a.target.name + "'");
                    return std::nullopt;
                }
                const std::size_t slot = bound_.combined_slot(*c);
                return set ? Action::set_combined(slot) : Action::flip_combined(slot);
            }
        }
        return std::nullopt;
    }

    machine::Rule bind_rule(const RuleNode& rule) {
        machine::Rule out;
        out.name = rule.name;
        for (std::size_t b = 0; b < rule.branches.size(); ++b) {
            const auto& br = rule.branches[b];
            if (b == 0 && br.is_elif) report(br.pos, "rule '" + rule.name + "' starts with 'elif'");
            if (b > 0 && !br.is_elif) report(br.pos, "'if' after the first branch; use 'elif' or a new rule");
            machine::Branch bound;
            bound.condition = lower(br.cond, false);
            for (const auto& a : br.actions)
                if (auto act = bind_action(a)) bound.actions.push_back(std::move(*act));
            out.branches.push_back(std::move(bound));
        }
        return out;
    }

    void bind_run(const RunNode& r) {
        bound_.run_pos = r.pos;
        bound_.run_target = r.rule;
        if (r.rule != "all" && std::find(bound_.rule_names.begin(), bound_.rule_names.end(), r.rule) == bound_.rule_names.end())
            report(r.pos, "run refers to unknown rule '" + r.rule + "'");
        if (!(r.epsilon > 0.0) || !std::isfinite(r.epsilon)) report(r.pos, "entropy threshold must be positive");
        if (r.max_steps < 1) report(r.pos, "max must be at least 1");
        if (r.shots && *r.shots < 1) report(r.pos, "shots must be at least 1");
        if (r.seed && *r.seed < 0) report(r.pos, "seed must be non-negative");
        bound_.run.epsilon = r.epsilon;
        bound_.run.max_steps = r.max_steps;
        if (r.shots) bound_.run.shots = *r.shots;
        if (r.seed) bound_.run.mode.seed = static_cast<std::uint64_t>(*r.seed);
        if (r.mode) {
            if (*r.mode == "exact")
                bound_.run.mode.kind = machine::SampleMode::Kind::exact;
            else if (*r.mode == "sampled")
                bound_.run.mode.kind = machine::SampleMode::Kind::sampled;
            else
                report(r.pos, "mode must be 'exact' or 'sampled'");
        }
    }

    std::vector<Diagnostic>& diags_;
    BoundProgram bound_;
    std::optional<logic::CombinedRegistry> registry_;
    std::map<std::string, linalg::Matrix> operators_;
    std::set<std::set<std::size_t>> supports_;
    bool clean_ = true;
};

}  // namespace detail

inline ResolveResult resolve(const Ast& ast) {
    ResolveResult out;
    try {
        detail::Resolver r(out.diagnostics);
        out.program = r.run(ast);
    } catch (const std::exception& e) {
        out.diagnostics.push_back({Diagnostic::Severity::error, std::string("internal resolver error: ") + e.what(), 1, 1});
        out.program.reset();
    }
    return out;
}

}  // namespace beta::dsl
