#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace beta::dsl {

/// 1-based line and code-point column. Positions never take part in AST equality.
struct SourcePos {
    std::size_t line = 1;
    std::size_t column = 1;

    bool operator==(const SourcePos&) const { return true; }
};

struct Diagnostic {
    enum class Severity { error, warning };
    Severity severity = Severity::error;
    std::string message;
    std::size_t line = 1;
    std::size_t column = 1;
};

struct SourceProgram {
    std::string text;
    std::optional<std::string> path;
};

/// `sub.state (& sub.state)*`
struct StateRef {
    std::vector<std::pair<std::string, std::string>> parts;
    SourcePos pos;

    bool operator==(const StateRef&) const = default;
};

/// Either a state reference or a bare name (combined state or operator).
struct Target {
    std::optional<StateRef> state;
    std::string name;
    SourcePos pos;

    bool operator==(const Target&) const = default;
};

struct Cond {
    enum class Kind { any, all, negate, complement, state, name };
    Kind kind = Kind::name;
    std::vector<Cond> children;
    StateRef ref;
    std::string name;
    SourcePos pos;

    bool operator==(const Cond&) const = default;
};

struct ActionNode {
    enum class Kind { set, swap, apply, print };
    Kind kind = Kind::print;
    Target target;
    std::string text;
    SourcePos pos;

    bool operator==(const ActionNode&) const = default;
};

struct BranchNode {
    bool is_elif = false;
    Cond cond;
    std::vector<ActionNode> actions;
    SourcePos pos;

    bool operator==(const BranchNode&) const = default;
};

struct RuleNode {
    std::string name;
    std::vector<BranchNode> branches;
    SourcePos pos;

    bool operator==(const RuleNode&) const = default;
};

struct SubsystemNode {
    std::string name;
    std::vector<std::string> states;
    SourcePos pos;

    bool operator==(const SubsystemNode&) const = default;
};

struct SystemNode {
    std::vector<SubsystemNode> subsystems;
    SourcePos pos;

    bool operator==(const SystemNode&) const = default;
};

struct CombineDecl {
    std::string name;
    std::vector<StateRef> refs;
    std::optional<std::vector<double>> amps;
    SourcePos pos;

    bool operator==(const CombineDecl&) const = default;
};

struct OperatorDecl {
    std::string name;
    std::vector<std::vector<double>> rows;
    SourcePos pos;

    bool operator==(const OperatorDecl&) const = default;
};

struct InitDecl {
    std::vector<Target> targets;
    SourcePos pos;

    bool operator==(const InitDecl&) const = default;
};

using Decl = std::variant<CombineDecl, OperatorDecl, InitDecl>;

struct RunNode {
    std::string rule;  // rule name or "all"
    double epsilon = 0.0;
    std::int64_t max_steps = 0;
    std::optional<std::int64_t> shots;
    std::optional<std::int64_t> seed;
    std::optional<std::string> mode;
    SourcePos pos;

    bool operator==(const RunNode&) const = default;
};

struct Ast {
    std::vector<SystemNode> systems;  // the resolver requires exactly one
    std::vector<Decl> decls;
    std::vector<RuleNode> rules;
    std::vector<RunNode> runs;  // the resolver allows at most one

    bool empty() const { return systems.empty() && decls.empty() && rules.empty() && runs.empty(); }
    bool operator==(const Ast&) const = default;
};

}  // namespace beta::dsl
