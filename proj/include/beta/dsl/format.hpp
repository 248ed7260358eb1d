#pragma once

/**
 * @file format.hpp
 * @brief Canonical pretty-printer for `.beta` programs.
 *
 * Output order is: system block, declarations in source order, rules, run
 * statement. Blocks indent by two spaces. An any/all whose arguments contain
 * another any/all is broken over several lines, one argument per line.
 */

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <string>
#include <type_traits>
#include <variant>

#include "beta/dsl/ast.hpp"

namespace beta::dsl {

namespace detail {

inline std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    std::string out(buf, res.ptr);
    // to_chars pads the exponent to two digits; "1e-9" reads better than "1e-09".
    if (const auto e = out.find('e'); e != std::string::npos) {
        std::size_t digits = e + 1;
        if (digits < out.size() && (out[digits] == '-' || out[digits] == '+')) ++digits;
        while (digits + 1 < out.size() && out[digits] == '0') out.erase(digits, 1);
    }
    return out;
}

inline std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    return out + "\"";
}

inline std::string format_ref(const StateRef& r) {
    std::string out;
    for (std::size_t i = 0; i < r.parts.size(); ++i) {
        if (i) out += " & ";
        out += r.parts[i].first + "." + r.parts[i].second;
    }
    return out;
}

inline std::string format_target(const Target& t) { return t.state ? format_ref(*t.state) : t.name; }

inline bool is_compound(const Cond& c) { return c.kind == Cond::Kind::any || c.kind == Cond::Kind::all; }

inline bool has_compound_child(const Cond& c) {
    for (const auto& ch : c.children) {
        const Cond* inner = &ch;
        while (inner->kind == Cond::Kind::negate) inner = &inner->children.front();
        if (is_compound(*inner)) return true;
    }
    return false;
}

inline std::string format_cond(const Cond& c, int indent) {
    switch (c.kind) {
        case Cond::Kind::state: return format_ref(c.ref);
        case Cond::Kind::name: return c.name;
        case Cond::Kind::complement: return "complement(" + c.name + ")";
        case Cond::Kind::negate: return "not " + format_cond(c.children.front(), indent);
        case Cond::Kind::any:
        case Cond::Kind::all: {
            std::string out = c.kind == Cond::Kind::any ? "any(" : "all(";
            if (!has_compound_child(c)) {
                for (std::size_t i = 0; i < c.children.size(); ++i) {
                    if (i) out += ", ";
                    out += format_cond(c.children[i], indent);
                }
                return out + ")";
            }
            const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
            for (std::size_t i = 0; i < c.children.size(); ++i) {
                out += "\n" + pad + format_cond(c.children[i], indent + 2);
                if (i + 1 < c.children.size()) out += ",";
            }
            return out + "\n" + std::string(static_cast<std::size_t>(indent), ' ') + ")";
        }
    }
    return {};
}

inline std::string format_action(const ActionNode& a) {
    switch (a.kind) {
        case ActionNode::Kind::set: return "set(" + format_target(a.target) + ")";
        case ActionNode::Kind::swap: return "swap(" + format_target(a.target) + ")";
        case ActionNode::Kind::apply: return "apply(" + a.target.name + ")";
        case ActionNode::Kind::print: return "print(" + quote(a.text) + ")";
    }
    return {};
}

}  // namespace detail

inline std::string format(const Ast& ast) {
    using namespace detail;
    std::string out;
    for (const auto& sys : ast.systems) {
        out += "system {\n";
        for (const auto& sub : sys.subsystems) {
            out += "  subsystem " + sub.name + " { states: ";
            for (std::size_t i = 0; i < sub.states.size(); ++i) {
                if (i) out += ", ";
                out += sub.states[i];
            }
            out += " }\n";
        }
        out += "}\n";
    }
    for (const auto& decl : ast.decls) {
        std::visit(
            [&](const auto& d) {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, CombineDecl>) {
                    out += "let " + d.name + " = combine(";
                    for (std::size_t i = 0; i < d.refs.size(); ++i) {
                        if (i) out += ", ";
                        out += format_ref(d.refs[i]);
                    }
                    out += ")";
                    if (d.amps) {
                        out += " amps(";
                        for (std::size_t i = 0; i < d.amps->size(); ++i) {
                            if (i) out += ", ";
                            out += format_number((*d.amps)[i]);
                        }
                        out += ")";
                    }
                } else if constexpr (std::is_same_v<T, OperatorDecl>) {
                    out += "let " + d.name + " = operator [";
                    for (std::size_t r = 0; r < d.rows.size(); ++r) {
                        if (r) out += ", ";
                        out += "[";
                        for (std::size_t c = 0; c < d.rows[r].size(); ++c) {
                            if (c) out += ", ";
                            out += format_number(d.rows[r][c]);
                        }
                        out += "]";
                    }
                    out += "]";
                } else {
                    out += "init ";
                    for (std::size_t i = 0; i < d.targets.size(); ++i) {
                        if (i) out += ", ";
                        out += format_target(d.targets[i]);
                    }
                }
                out += "\n";
            },
            decl);
    }
    for (const auto& rule : ast.rules) {
        out += "rule " + rule.name + " {\n";
        for (const auto& br : rule.branches) {
            out += std::string("  ") + (br.is_elif ? "elif " : "if ") + format_cond(br.cond, 2) + " -> ";
            for (std::size_t i = 0; i < br.actions.size(); ++i) {
                if (i) out += ", ";
                out += format_action(br.actions[i]);
            }
            out += "\n";
        }
        out += "}\n";
    }
    for (const auto& run : ast.runs) {
        out += "run " + run.rule + " until entropy < " + format_number(run.epsilon) + " max " +
               std::to_string(run.max_steps);
        if (run.shots) out += " shots " + std::to_string(*run.shots);
        if (run.seed) out += " seed " + std::to_string(*run.seed);
        if (run.mode) out += " mode " + *run.mode;
        out += "\n";
    }
    return out;
}

/// FNV-1a over the canonical text, as 16 hex digits.
inline std::string program_digest(const Ast& ast) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : format(ast)) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace beta::dsl
