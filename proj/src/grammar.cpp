#include "smallgain/grammar.hpp"

#include <cctype>
#include <cstdlib>
#include <optional>
#include <vector>

namespace smallgain {

namespace {

struct Token {
    enum class Type { Num, Sym, Ident, End };
    Type type;
    double num = 0;
    char sym = 0;
    std::string ident;
};

class Lexer {
public:
    explicit Lexer(const std::string& text) : s_(text) { advance(); }

    const Token& peek() const { return tok_; }

    Token take() {
        Token t = tok_;
        advance();
        return t;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError("at offset " + std::to_string(pos_) + ": " + msg + " in \"" + s_ + "\"");
    }

private:
    void advance() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (pos_ >= s_.size()) {
            tok_ = Token{Token::Type::End, 0, 0, {}};
            return;
        }
        char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && pos_ + 1 < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])))) {
            const char* begin = s_.c_str() + pos_;
            char* end = nullptr;
            double v = std::strtod(begin, &end);
            pos_ += static_cast<size_t>(end - begin);
            tok_ = Token{Token::Type::Num, v, 0, {}};
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            size_t start = pos_;
            while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            tok_ = Token{Token::Type::Ident, 0, 0, s_.substr(start, pos_ - start)};
            return;
        }
        ++pos_;
        tok_ = Token{Token::Type::Sym, 0, c, {}};
    }

    std::string s_;
    size_t pos_ = 0;
    Token tok_;
};

class Parser {
public:
    Parser(const std::string& text, double cap) : lex_(text), cap_(cap) {}

    ScalarFn run() {
        ScalarFn f = parse_expr();
        std::optional<FnClass> declared;
        if (is_sym(':')) {
            lex_.take();
            Token t = lex_.take();
            if (t.type != Token::Type::Ident) lex_.fail("expected class name after ':'");
            if (t.ident == "K")
                declared = FnClass::K;
            else if (t.ident == "Kinf")
                declared = FnClass::Kinf;
            else
                lex_.fail("unknown class annotation '" + t.ident + "' (expected K or Kinf)");
        }
        if (lex_.peek().type != Token::Type::End) lex_.fail("trailing input");
        return declared ? f.with_class(*declared) : f;
    }

private:
    bool is_sym(char c) const {
        return lex_.peek().type == Token::Type::Sym && lex_.peek().sym == c;
    }

    ScalarFn parse_expr() {
        ScalarFn f = parse_term();
        while (is_sym('+')) {
            lex_.take();
            f = sum(f, parse_term());
        }
        return f;
    }

    ScalarFn parse_term() {
        ScalarFn f = parse_factor();
        while (is_sym('.')) {
            lex_.take();
            f = compose(f, parse_factor());
        }
        return f;
    }

    // after NUM '*' 's': optional '^ p' or '/(1+s)'
    ScalarFn finish_var_suffix(double coef) {
        if (is_sym('^')) {
            lex_.take();
            Token p = lex_.take();
            if (p.type != Token::Type::Num) lex_.fail("expected exponent");
            ScalarFn pw = ScalarFn::power(p.num, cap_);
            return coef == 1.0 ? pw : scaled(coef, pw);
        }
        if (is_sym('/')) {
            lex_.take();
            expect_denominator();
            return ScalarFn::saturation(coef, cap_);
        }
        return coef == 1.0 ? ScalarFn::identity(cap_) : ScalarFn::linear(coef, cap_);
    }

    void expect_denominator() {
        // the literal token sequence ( 1 + s )
        if (!is_sym('(')) lex_.fail("expected '(1+s)' denominator");
        lex_.take();
        Token one = lex_.take();
        if (one.type != Token::Type::Num || one.num != 1.0) lex_.fail("expected '1' in denominator");
        if (!is_sym('+')) lex_.fail("expected '+' in denominator");
        lex_.take();
        Token v = lex_.take();
        if (v.type != Token::Type::Ident || v.ident != "s") lex_.fail("expected 's' in denominator");
        if (!is_sym(')')) lex_.fail("expected ')' closing the denominator");
        lex_.take();
    }

    ScalarFn parse_factor() {
        const Token& t = lex_.peek();
        if (t.type == Token::Type::Num) {
            double v = lex_.take().num;
            if (v < 0) lex_.fail("negative constants are not in the grammar");
            if (is_sym('*')) {
                lex_.take();
                Token var = lex_.take();
                if (var.type != Token::Type::Ident || var.ident != "s") lex_.fail("expected 's' after '*'");
                if (v == 0.0) {
                    // 0*s collapses to the zero function regardless of suffix
                    ScalarFn z = finish_zero_suffix();
                    return z;
                }
                return finish_var_suffix(v);
            }
            return ScalarFn::constant(v, cap_);
        }
        if (t.type == Token::Type::Ident) {
            std::string name = lex_.take().ident;
            if (name == "id") return ScalarFn::identity(cap_);
            if (name == "s") return finish_var_suffix(1.0);
            if (name == "inv") {
                expect('(');
                ScalarFn inner = parse_expr();
                expect(')');
                return ScalarFn::inverse_of(inner);
            }
            if (name == "min") {
                expect('(');
                ScalarFn a = parse_expr();
                expect(',');
                ScalarFn b = parse_expr();
                expect(')');
                return fn_min(a, b);
            }
            lex_.fail("unknown identifier '" + name + "'");
        }
        if (t.type == Token::Type::Sym && t.sym == '(') {
            lex_.take();
            ScalarFn f = parse_expr();
            expect(')');
            return f;
        }
        lex_.fail("expected a factor");
    }

    ScalarFn finish_zero_suffix() {
        if (is_sym('^')) {
            lex_.take();
            if (lex_.take().type != Token::Type::Num) lex_.fail("expected exponent");
        } else if (is_sym('/')) {
            lex_.take();
            expect_denominator();
        }
        return ScalarFn::zero(cap_);
    }

    void expect(char c) {
        if (!is_sym(c)) lex_.fail(std::string("expected '") + c + "'");
        lex_.take();
    }

    Lexer lex_;
    double cap_;
};

}  // namespace

ScalarFn parse_scalar_fn(const std::string& text, double cap) {
    return Parser(text, cap).run();
}

}  // namespace smallgain
