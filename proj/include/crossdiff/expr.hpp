#pragma once

#include <cctype>
#include <cmath>
#include <functional>
#include <memory>
#include <string>

#include "crossdiff/errors.hpp"

namespace crossdiff {

/// Restricted coefficient grammar: +, -, *, /, min(,), exp(), numeric
/// constants and the variables u, v. Deliberately not a scripting hook so
/// that every parsed coefficient stays auditable by check_assumptions.
///
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := '-' unary | primary
///   primary := number | 'u' | 'v' | 'min' '(' expr ',' expr ')'
///            | 'exp' '(' expr ')' | '(' expr ')'
class ExprParser {
public:
    /// Parse one expression; line is only used for error reporting.
    static std::function<double(double, double)> parse(const std::string& text, int line = 1) {
        ExprParser p(text, line);
        auto e = p.parse_expr();
        p.skip_ws();
        if (p.pos_ < p.text_.size()) p.fail("trailing characters after expression");
        return e;
    }

private:
    using Fn = std::function<double(double, double)>;

    ExprParser(std::string text, int line) : text_(std::move(text)), line_(line) {}

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(msg, line_, static_cast<int>(pos_) + 1);
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!eat(c)) fail(std::string("expected '") + c + "'");
    }

    Fn parse_expr() {
        Fn lhs = parse_term();
        for (;;) {
            if (eat('+')) {
                Fn rhs = parse_term();
                lhs = [lhs, rhs](double u, double v) { return lhs(u, v) + rhs(u, v); };
            } else if (eat('-')) {
                Fn rhs = parse_term();
                lhs = [lhs, rhs](double u, double v) { return lhs(u, v) - rhs(u, v); };
            } else {
                return lhs;
            }
        }
    }

    Fn parse_term() {
        Fn lhs = parse_unary();
        for (;;) {
            if (eat('*')) {
                Fn rhs = parse_unary();
                lhs = [lhs, rhs](double u, double v) { return lhs(u, v) * rhs(u, v); };
            } else if (eat('/')) {
                Fn rhs = parse_unary();
                lhs = [lhs, rhs](double u, double v) { return lhs(u, v) / rhs(u, v); };
            } else {
                return lhs;
            }
        }
    }

    Fn parse_unary() {
        if (eat('-')) {
            Fn inner = parse_unary();
            return [inner](double u, double v) { return -inner(u, v); };
        }
        return parse_primary();
    }

    Fn parse_primary() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of expression");
        const char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (c == '(') {
            ++pos_;
            Fn e = parse_expr();
            expect(')');
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::string id = parse_ident();
            if (id == "u") return [](double u, double) { return u; };
            if (id == "v") return [](double, double v) { return v; };
            if (id == "min") {
                expect('(');
                Fn a = parse_expr();
                expect(',');
                Fn b = parse_expr();
                expect(')');
                return [a, b](double u, double v) { return std::min(a(u, v), b(u, v)); };
            }
            if (id == "exp") {
                expect('(');
                Fn a = parse_expr();
                expect(')');
                return [a](double u, double v) { return std::exp(a(u, v)); };
            }
            fail("unknown identifier '" + id + "'");
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    Fn parse_number() {
        size_t end = 0;
        double value = 0.0;
        try {
            value = std::stod(text_.substr(pos_), &end);
        } catch (const std::exception&) {
            fail("malformed number");
        }
        pos_ += end;
        return [value](double, double) { return value; };
    }

    std::string parse_ident() {
        size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        return text_.substr(start, pos_ - start);
    }

    std::string text_;
    int line_;
    size_t pos_ = 0;
};

} // namespace crossdiff
