#pragma once

/**
 * @file parser.hpp
 * @brief Recursive-descent parser for `.beta` programs.
 *
 * The parser is total: every input yields an Ast plus a (possibly empty)
 * diagnostic list. After an error it skips to the next line that starts with
 * a top-level keyword and keeps going.
 */

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "beta/dsl/ast.hpp"
#include "beta/dsl/lexer.hpp"

namespace beta::dsl {

struct ParseResult {
    Ast ast;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return diagnostics.empty(); }
};

namespace detail {

class Parser {
public:
    Parser(std::vector<Token> tokens, std::vector<Diagnostic>& diags) : toks_(std::move(tokens)), diags_(diags) {}

    Ast program() {
        Ast ast;
        while (!at_end()) {
            const std::size_t errors_before = diags_.size();
            try {
                top_level(ast);
            } catch (const Abort&) {
                if (diags_.size() == errors_before) error_here("syntax error");
                synchronize();
            }
        }
        return ast;
    }

private:
    struct Abort {};
    static constexpr int kMaxDepth = 200;

    const Token& cur() const { return toks_[i_]; }
    const Token& ahead(std::size_t k) const { return toks_[std::min(i_ + k, toks_.size() - 1)]; }
    bool at_end() const { return cur().kind == Token::Kind::end; }
    Token take() {
        Token t = cur();
        if (!at_end()) ++i_;
        return t;
    }

    bool is_word(std::string_view w) const { return cur().kind == Token::Kind::ident && cur().text == w; }
    bool is_punct(std::string_view p) const { return cur().kind == Token::Kind::punct && cur().text == p; }

    static std::string describe(const Token& t) {
        switch (t.kind) {
            case Token::Kind::end: return "end of input";
            case Token::Kind::string: return "string";
            case Token::Kind::number: return "number '" + t.text + "'";
            default: return "'" + t.text + "'";
        }
    }

    [[noreturn]] void error_at(const SourcePos& p, const std::string& msg) {
        diags_.push_back({Diagnostic::Severity::error, msg, p.line, p.column});
        throw Abort{};
    }
    [[noreturn]] void error_here(const std::string& msg) { error_at(cur().pos, msg + ", found " + describe(cur())); }

    void expect_word(std::string_view w) {
        if (!is_word(w)) error_here("expected '" + std::string(w) + "'");
        take();
    }
    void expect_punct(std::string_view p) {
        if (!is_punct(p)) error_here("expected '" + std::string(p) + "'");
        take();
    }
    void expect_close(std::string_view close, const SourcePos& open, std::string_view open_text) {
        if (at_end()) error_at(open, "unclosed '" + std::string(open_text) + "'");
        expect_punct(close);
    }
    std::string ident(const char* what) {
        if (cur().kind != Token::Kind::ident) error_here(std::string("expected ") + what);
        return take().text;
    }
    double number(const char* what) {
        if (cur().kind != Token::Kind::number) error_here(std::string("expected ") + what);
        return take().number;
    }
    std::int64_t integer(const char* what) {
        if (cur().kind != Token::Kind::number || !cur().integral) error_here(std::string("expected integer ") + what);
        const Token t = take();
        std::int64_t v = 0;
        const auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (res.ec != std::errc{}) error_at(t.pos, "integer out of range: " + t.text);
        return v;
    }

    static bool starts_top_level(const Token& t) {
        if (t.kind != Token::Kind::ident) return false;
        for (std::string_view w : {"system", "let", "init", "rule", "run"})
            if (t.text == w) return true;
        return false;
    }

    void synchronize() {
        const std::size_t line = cur().pos.line;
        if (!at_end()) take();
        while (!at_end()) {
            if (cur().pos.line != line && starts_top_level(cur()) && (i_ == 0 || toks_[i_ - 1].pos.line != cur().pos.line))
                return;
            take();
        }
    }

    void top_level(Ast& ast) {
        if (is_word("system")) {
            ast.systems.push_back(system_block());
        } else if (is_word("let")) {
            ast.decls.push_back(let_decl());
        } else if (is_word("init")) {
            ast.decls.push_back(init_decl());
        } else if (is_word("rule")) {
            ast.rules.push_back(rule());
        } else if (is_word("run")) {
            ast.runs.push_back(run_stmt());
        } else if (is_word("if") || is_word("elif")) {
            // Parse the stray branch anyway so errors inside it are reported too.
            const SourcePos p = cur().pos;
            const std::size_t before = diags_.size();
            try {
                branch();
            } catch (const Abort&) {
            }
            diags_.insert(diags_.begin() + static_cast<std::ptrdiff_t>(before),
                          Diagnostic{Diagnostic::Severity::error, "branch outside a rule block", p.line, p.column});
            throw Abort{};
        } else {
            error_here("expected 'system', 'let', 'init', 'rule' or 'run'");
        }
    }

    SystemNode system_block() {
        SystemNode s;
        s.pos = take().pos;
        const SourcePos open = cur().pos;
        expect_punct("{");
        while (!is_punct("}")) {
            if (at_end()) error_at(open, "unclosed '{'");
            s.subsystems.push_back(subsystem());
        }
        take();
        if (s.subsystems.empty()) error_at(s.pos, "system block declares no subsystems");
        return s;
    }

    SubsystemNode subsystem() {
        SubsystemNode n;
        n.pos = cur().pos;
        expect_word("subsystem");
        n.name = ident("subsystem name");
        const SourcePos open = cur().pos;
        expect_punct("{");
        expect_word("states");
        expect_punct(":");
        n.states.push_back(ident("state label"));
        while (is_punct(",")) {
            take();
            n.states.push_back(ident("state label"));
        }
        if (n.states.size() < 2) error_at(n.pos, "subsystem '" + n.name + "' needs at least two states");
        expect_close("}", open, "{");
        return n;
    }

    StateRef state_ref() {
        StateRef r;
        r.pos = cur().pos;
        do {
            if (!r.parts.empty()) take();  // '&'
            std::string sub = ident("subsystem name");
            expect_punct(".");
            std::string st = ident("state label");
            r.parts.emplace_back(std::move(sub), std::move(st));
        } while (is_punct("&"));
        return r;
    }

    Target target() {
        Target t;
        t.pos = cur().pos;
        if (cur().kind == Token::Kind::ident && ahead(1).kind == Token::Kind::punct && ahead(1).text == ".")
            t.state = state_ref();
        else
            t.name = ident("state reference or name");
        return t;
    }

    template <class F>
    void comma_list(const SourcePos& open, F&& item) {
        while (true) {
            if (at_end()) error_at(open, "unclosed '('");
            item();
            if (is_punct(",")) {
                take();
                continue;
            }
            expect_close(")", open, "(");
            return;
        }
    }

    Decl let_decl() {
        const SourcePos p = take().pos;
        std::string name = ident("name after 'let'");
        expect_punct("=");
        if (is_word("combine")) {
            CombineDecl d;
            d.pos = p;
            d.name = std::move(name);
            take();
            const SourcePos open = cur().pos;
            expect_punct("(");
            comma_list(open, [&] { d.refs.push_back(state_ref()); });
            if (d.refs.size() < 2) error_at(p, "combine needs at least two state references");
            if (is_word("amps")) {
                take();
                const SourcePos aopen = cur().pos;
                expect_punct("(");
                std::vector<double> amps;
                comma_list(aopen, [&] { amps.push_back(number("amplitude")); });
                d.amps = std::move(amps);
            }
            return d;
        }
        if (is_word("operator")) {
            OperatorDecl d;
            d.pos = p;
            d.name = std::move(name);
            take();
            const SourcePos open = cur().pos;
            expect_punct("[");
            while (true) {
                if (at_end()) error_at(open, "unclosed '['");
                const SourcePos ropen = cur().pos;
                expect_punct("[");
                std::vector<double> row;
                while (true) {
                    if (at_end()) error_at(ropen, "unclosed '['");
                    row.push_back(number("matrix entry"));
                    if (is_punct(",")) {
                        take();
                        continue;
                    }
                    expect_close("]", ropen, "[");
                    break;
                }
                d.rows.push_back(std::move(row));
                if (is_punct(",")) {
                    take();
                    continue;
                }
                expect_close("]", open, "[");
                break;
            }
            return d;
        }
        error_here("expected 'combine' or 'operator'");
    }

    Decl init_decl() {
        InitDecl d;
        d.pos = take().pos;
        d.targets.push_back(target());
        while (is_punct(",")) {
            take();
            d.targets.push_back(target());
        }
        return d;
    }

    Cond cond(int depth = 0) {
        if (depth > kMaxDepth) error_here("condition nested too deeply");
        Cond c;
        c.pos = cur().pos;
        if (cur().kind != Token::Kind::ident) error_here("expected condition");
        const bool call = ahead(1).kind == Token::Kind::punct && ahead(1).text == "(";
        const bool member = ahead(1).kind == Token::Kind::punct && ahead(1).text == ".";
        if (call && (is_word("any") || is_word("all"))) {
            c.kind = is_word("any") ? Cond::Kind::any : Cond::Kind::all;
            take();
            const SourcePos open = cur().pos;
            take();
            comma_list(open, [&] { c.children.push_back(cond(depth + 1)); });
            return c;
        }
        if (call && is_word("complement")) {
            c.kind = Cond::Kind::complement;
            take();
            const SourcePos open = cur().pos;
            take();
            if (at_end()) error_at(open, "unclosed '('");
            c.name = ident("combined-state name");
            expect_close(")", open, "(");
            return c;
        }
        if (!member && is_word("not")) {
            c.kind = Cond::Kind::negate;
            take();
            c.children.push_back(cond(depth + 1));
            return c;
        }
        if (member) {
            c.kind = Cond::Kind::state;
            c.ref = state_ref();
            return c;
        }
        c.kind = Cond::Kind::name;
        c.name = take().text;
        return c;
    }

    ActionNode action() {
        ActionNode a;
        a.pos = cur().pos;
        if (is_word("set"))
            a.kind = ActionNode::Kind::set;
        else if (is_word("swap"))
            a.kind = ActionNode::Kind::swap;
        else if (is_word("apply"))
            a.kind = ActionNode::Kind::apply;
        else if (is_word("print"))
            a.kind = ActionNode::Kind::print;
        else
            error_here("expected action 'set', 'swap', 'apply' or 'print'");
        take();
        const SourcePos open = cur().pos;
        expect_punct("(");
        if (at_end()) error_at(open, "unclosed '('");
        switch (a.kind) {
            case ActionNode::Kind::print:
                if (cur().kind != Token::Kind::string) error_here("expected string");
                a.text = take().text;
                break;
            case ActionNode::Kind::apply:
                a.target.pos = cur().pos;
                a.target.name = ident("operator name");
                break;
            default:
                a.target = target();
        }
        expect_close(")", open, "(");
        return a;
    }

    BranchNode branch() {
        BranchNode b;
        b.pos = cur().pos;
        b.is_elif = is_word("elif");
        take();
        b.cond = cond();
        expect_punct("->");
        b.actions.push_back(action());
        while (is_punct(",")) {
            take();
            b.actions.push_back(action());
        }
        return b;
    }

    RuleNode rule() {
        RuleNode r;
        r.pos = take().pos;
        r.name = ident("rule name");
        const SourcePos open = cur().pos;
        expect_punct("{");
        while (!is_punct("}")) {
            if (at_end()) error_at(open, "unclosed '{'");
            if (!is_word("if") && !is_word("elif")) error_here("expected 'if' or 'elif'");
            r.branches.push_back(branch());
        }
        take();
        if (r.branches.empty()) error_at(r.pos, "rule '" + r.name + "' has no branches");
        return r;
    }

    RunNode run_stmt() {
        RunNode r;
        r.pos = take().pos;
        r.rule = ident("rule name or 'all'");
        expect_word("until");
        expect_word("entropy");
        expect_punct("<");
        r.epsilon = number("epsilon");
        expect_word("max");
        r.max_steps = integer("step limit");
        while (is_word("shots") || is_word("seed") || is_word("mode")) {
            const Token key = take();
            auto dup = [&](bool present) {
                if (present) error_at(key.pos, "duplicate '" + key.text + "' option");
            };
            if (key.text == "shots") {
                dup(r.shots.has_value());
                r.shots = integer("shot count");
            } else if (key.text == "seed") {
                dup(r.seed.has_value());
                r.seed = integer("seed");
            } else {
                dup(r.mode.has_value());
                r.mode = ident("'exact' or 'sampled'");
            }
        }
        return r;
    }

    std::vector<Token> toks_;
    std::size_t i_ = 0;
    std::vector<Diagnostic>& diags_;
};

}  // namespace detail

inline ParseResult parse(const SourceProgram& src) {
    ParseResult out;
    try {
        Lexer lex(src.text);
        auto tokens = lex.run(out.diagnostics);
        detail::Parser p(std::move(tokens), out.diagnostics);
        out.ast = p.program();
    } catch (const std::exception& e) {
        out.diagnostics.push_back({Diagnostic::Severity::error, std::string("internal parser error: ") + e.what(), 1, 1});
    }
    return out;
}

inline ParseResult parse(std::string_view text) { return parse(SourceProgram{std::string(text), std::nullopt}); }

}  // namespace beta::dsl
