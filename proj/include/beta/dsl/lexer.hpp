#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "beta/dsl/ast.hpp"

namespace beta::dsl {

struct Token {
    enum class Kind { ident, number, string, punct, end };
    Kind kind = Kind::end;
    std::string text;  // identifier (NFC), punctuation, decoded string, or number spelling
    double number = 0.0;
    bool integral = false;
    SourcePos pos;
};

/// NFC form of a UTF-8 string; returns the input unchanged if ICU rejects it.
inline std::string nfc(std::string_view s) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) return std::string(s);
    icu::UnicodeString in = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
    icu::UnicodeString out = norm->normalize(in, status);
    if (U_FAILURE(status)) return std::string(s);
    std::string result;
    out.toUTF8String(result);
    return result;
}

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    /// Tokenizes the whole input; lexical errors are appended to `diags`.
    std::vector<Token> run(std::vector<Diagnostic>& diags) {
        std::vector<Token> out;
        while (true) {
            skip_space_and_comments();
            if (at_end()) break;
            const SourcePos start = pos_;
            const std::size_t begin = i_;
            const UChar32 c = peek_cp();
            if (c == '"') {
                out.push_back(string_token(start, diags));
            } else if (is_digit(c) || (c == '-' && i_ + 1 < src_.size() && is_digit(src_[i_ + 1]))) {
                out.push_back(number_token(start, diags));
            } else if (c >= 0 && (c == '_' || u_hasBinaryProperty(c, UCHAR_XID_START))) {
                while (!at_end()) {
                    const UChar32 d = peek_cp();
                    if (d < 0 || !(d == '_' || u_hasBinaryProperty(d, UCHAR_XID_CONTINUE))) break;
                    next_cp();
                }
                Token t;
                t.kind = Token::Kind::ident;
                t.text = nfc(src_.substr(begin, i_ - begin));
                t.pos = start;
                out.push_back(std::move(t));
            } else if (c == '-' && i_ + 1 < src_.size() && src_[i_ + 1] == '>') {
                next_cp();
                next_cp();
                out.push_back({Token::Kind::punct, "->", 0.0, false, start});
            } else if (c >= 0 && c < 0x80 && std::string_view("{}()[],.&=<:").find(static_cast<char>(c)) != std::string_view::npos) {
                next_cp();
                out.push_back({Token::Kind::punct, std::string(1, static_cast<char>(c)), 0.0, false, start});
            } else {
                next_cp();
                if (c < 0)
                    diags.push_back({Diagnostic::Severity::error, "invalid UTF-8 byte", start.line, start.column});
                else
                    diags.push_back({Diagnostic::Severity::error, "unexpected character '" +
                                                                      std::string(src_.substr(begin, i_ - begin)) + "'",
                                     start.line, start.column});
            }
        }
        out.push_back({Token::Kind::end, "", 0.0, false, pos_});
        return out;
    }

private:
    static bool is_digit(UChar32 c) { return c >= '0' && c <= '9'; }

    bool at_end() const { return i_ >= src_.size(); }

    UChar32 peek_cp() const {
        int32_t i = static_cast<int32_t>(i_);
        UChar32 c;
        U8_NEXT(reinterpret_cast<const uint8_t*>(src_.data()), i, static_cast<int32_t>(src_.size()), c);
        return c;
    }

    UChar32 next_cp() {
        int32_t i = static_cast<int32_t>(i_);
        UChar32 c;
        U8_NEXT(reinterpret_cast<const uint8_t*>(src_.data()), i, static_cast<int32_t>(src_.size()), c);
        i_ = static_cast<std::size_t>(i);
        if (c == '\n') {
            ++pos_.line;
            pos_.column = 1;
        } else {
            ++pos_.column;
        }
        return c;
    }

    void skip_space_and_comments() {
        while (!at_end()) {
            const char c = src_[i_];
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                next_cp();
            } else if (c == '#') {
                while (!at_end() && src_[i_] != '\n') next_cp();
            } else {
                break;
            }
        }
    }

    Token string_token(SourcePos start, std::vector<Diagnostic>& diags) {
        next_cp();  // opening quote
        Token t;
        t.kind = Token::Kind::string;
        t.pos = start;
        while (true) {
            if (at_end() || src_[i_] == '\n') {
                diags.push_back({Diagnostic::Severity::error, "unterminated string", start.line, start.column});
                break;
            }
            const std::size_t begin = i_;
            const UChar32 c = next_cp();
            if (c == '"') break;
            if (c == '\\') {
                if (at_end()) continue;
                const char e = src_[i_];
                next_cp();
                switch (e) {
                    case 'n': t.text += '\n'; break;
                    case 't': t.text += '\t'; break;
                    case '"': t.text += '"'; break;
                    case '\\': t.text += '\\'; break;
                    default:
                        diags.push_back({Diagnostic::Severity::error, std::string("unknown escape '\\") + e + "'",
                                         pos_.line, pos_.column - 1});
                }
                continue;
            }
            if (c < 0) {
                diags.push_back({Diagnostic::Severity::error, "invalid UTF-8 byte", pos_.line, pos_.column - 1});
                continue;
            }
            t.text.append(src_.substr(begin, i_ - begin));
        }
        return t;
    }

    Token number_token(SourcePos start, std::vector<Diagnostic>& diags) {
        const std::size_t begin = i_;
        bool integral = true;
        if (src_[i_] == '-') next_cp();
        auto digits = [&] {
            while (!at_end() && is_digit(src_[i_])) next_cp();
        };
        digits();
        if (!at_end() && src_[i_] == '.' && i_ + 1 < src_.size() && is_digit(src_[i_ + 1])) {
            integral = false;
            next_cp();
            digits();
        }
        if (!at_end() && (src_[i_] == 'e' || src_[i_] == 'E')) {
            std::size_t j = i_ + 1;
            if (j < src_.size() && (src_[j] == '+' || src_[j] == '-')) ++j;
            if (j < src_.size() && is_digit(src_[j])) {
                integral = false;
                while (i_ < j) next_cp();
                digits();
            }
        }
        Token t;
        t.kind = Token::Kind::number;
        t.text = std::string(src_.substr(begin, i_ - begin));
        t.integral = integral;
        t.pos = start;
        const auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
        if (res.ec != std::errc{})
            diags.push_back({Diagnostic::Severity::error, "number out of range: " + t.text, start.line, start.column});
        return t;
    }

    std::string_view src_;
    std::size_t i_ = 0;
    SourcePos pos_;
};

}  // namespace beta::dsl
