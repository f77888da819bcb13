#include "cspath/operator_parser.hpp"

#include <cctype>
#include <charconv>
#include <string>

#include "cspath/errors.hpp"

namespace cspath {

namespace {

class Parser {
public:
    Parser(std::string_view text, const ModeSpace& space) : text_(text), space_(space) {}

    PolynomialOperator parse() {
        skip_space();
        if (at_end()) fail("empty operator expression");
        PolynomialOperator op = expr();
        skip_space();
        if (!at_end()) fail(std::string("unexpected '") + text_[pos_] + "'");
        return op;
    }

private:
    std::string_view text_;
    const ModeSpace& space_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError("column " + std::to_string(pos_ + 1) + ": " + what, pos_ + 1);
    }

    bool at_end() const { return pos_ >= text_.size(); }

    void skip_space() {
        while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_space();
        if (!at_end() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    PolynomialOperator constant(Complex c, unsigned hbar_order = 0) const {
        PolynomialOperator op(space_);
        op.add_term(Monomial{hbar_order, std::vector<LadderPowers>(space_.modes())}, c);
        return op;
    }

    PolynomialOperator expr() {
        PolynomialOperator acc = term();
        for (;;) {
            if (accept('+'))
                acc += term();
            else if (accept('-'))
                acc -= term();
            else
                return acc;
        }
    }

    PolynomialOperator term() {
        PolynomialOperator acc = unary();
        for (;;) {
            if (accept('*')) {
                acc = acc * unary();
            } else if (accept('/')) {
                const std::size_t at = pos_;
                const PolynomialOperator d = unary();
                const auto& terms = d.terms();
                if (terms.size() != 1 || !terms.begin()->first.is_constant() || terms.begin()->first.hbar_order != 0) {
                    pos_ = at;
                    fail("division is only allowed by a nonzero hbar-free constant");
                }
                acc *= 1.0 / terms.begin()->second;
            } else {
                return acc;
            }
        }
    }

    PolynomialOperator unary() {
        if (accept('-')) return -unary();
        if (accept('+')) return unary();
        return power();
    }

    PolynomialOperator power() {
        PolynomialOperator base = primary();
        if (accept('^')) {
            skip_space();
            return base.pow(uint_value("exponent"));
        }
        return base;
    }

    unsigned uint_value(const char* what) {
        skip_space();
        unsigned value = 0;
        const char* first = text_.data() + pos_;
        const char* last = text_.data() + text_.size();
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc() || ptr == first) fail(std::string("expected unsigned integer ") + what);
        pos_ += static_cast<std::size_t>(ptr - first);
        return value;
    }

    std::size_t mode_index() {
        const std::size_t at = pos_;
        const unsigned k = uint_value("mode index");
        if (k >= space_.modes()) {
            pos_ = at;
            fail("mode index " + std::to_string(k) + " out of range (modes: " + std::to_string(space_.modes()) + ")");
        }
        return k;
    }

    PolynomialOperator primary() {
        skip_space();
        if (at_end()) fail("unexpected end of expression");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            PolynomialOperator inner = expr();
            if (!accept(')')) fail("expected ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            double value = 0.0;
            const char* first = text_.data() + pos_;
            const char* last = text_.data() + text_.size();
            auto [ptr, ec] = std::from_chars(first, last, value);
            if (ec != std::errc() || ptr == first) fail("malformed number");
            pos_ += static_cast<std::size_t>(ptr - first);
            return constant(value);
        }
        if (text_.substr(pos_, 4) == "hbar") {
            pos_ += 4;
            return constant(1.0, 1);
        }
        if (text_.substr(pos_, 2) == "Ad") {
            pos_ += 2;
            return PolynomialOperator::raising(space_, mode_index());
        }
        switch (c) {
            case 'i':
                ++pos_;
                return constant(Complex(0.0, 1.0));
            case 'Q':
                ++pos_;
                return PolynomialOperator::position(space_, mode_index());
            case 'P':
                ++pos_;
                return PolynomialOperator::momentum(space_, mode_index());
            case 'A':
                ++pos_;
                return PolynomialOperator::lowering(space_, mode_index());
            default:
                fail(std::string("unexpected '") + c + "'");
        }
    }
};

}  // namespace

PolynomialOperator parse_operator(std::string_view text, const ModeSpace& space) {
    return Parser(text, space).parse();
}

}  // namespace cspath
