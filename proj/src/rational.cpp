#include "farkas/rational.hpp"

#include "farkas/errors.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>

namespace farkas {

namespace {

bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

Rational pow10(long exponent) {
    mpz_class p;
    mpz_ui_pow_ui(p.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exponent)));
    return exponent >= 0 ? Rational(p) : Rational(mpz_class(1), p);
}

[[noreturn]] void bad(std::string_view text) {
    throw Error(ErrorCode::Parse, "not a number: '" + std::string(text) + "'");
}

}  // namespace

Rational parse_rational(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    if (text.empty()) bad(text);
    std::string_view body = text;
    bool negative = false;
    if (body.front() == '-' || body.front() == '+') {
        negative = body.front() == '-';
        body.remove_prefix(1);
    }

    Rational result;
    if (auto slash = body.find('/'); slash != std::string_view::npos) {
        auto num = body.substr(0, slash);
        auto den = body.substr(slash + 1);
        if (!all_digits(num) || !all_digits(den)) bad(text);
        mpz_class d(std::string(den), 10);
        if (d == 0) bad(text);
        result = Rational(mpz_class(std::string(num), 10), d);
        result.canonicalize();
    } else {
        long exponent = 0;
        if (auto e = body.find_first_of("eE"); e != std::string_view::npos) {
            auto expText = body.substr(e + 1);
            bool expNeg = false;
            if (!expText.empty() && (expText.front() == '-' || expText.front() == '+')) {
                expNeg = expText.front() == '-';
                expText.remove_prefix(1);
            }
            if (!all_digits(expText) || expText.size() > 6) bad(text);
            exponent = std::stol(std::string(expText));
            if (expNeg) exponent = -exponent;
            body = body.substr(0, e);
        }
        std::string digits;
        if (auto dot = body.find('.'); dot != std::string_view::npos) {
            auto whole = body.substr(0, dot);
            auto frac = body.substr(dot + 1);
            if ((!whole.empty() && !all_digits(whole)) || (!frac.empty() && !all_digits(frac)) ||
                (whole.empty() && frac.empty())) {
                bad(text);
            }
            digits = std::string(whole) + std::string(frac);
            exponent -= static_cast<long>(frac.size());
        } else {
            if (!all_digits(body)) bad(text);
            digits = std::string(body);
        }
        result = Rational(mpz_class(digits, 10)) * pow10(exponent);
        result.canonicalize();
    }
    return negative ? Rational(-result) : result;
}

std::string to_string(const Rational& value) {
    if (value.get_den() == 1) return value.get_num().get_str();
    return value.get_num().get_str() + "/" + value.get_den().get_str();
}

Rational rationalize(double value, unsigned long denominator) {
    if (denominator == 0 || !std::isfinite(value)) {
        throw Error(ErrorCode::Parse, "cannot rationalize value");
    }
    double scaled = std::round(value * static_cast<double>(denominator));
    Rational r{mpz_class{scaled}, mpz_class{denominator}};
    r.canonicalize();
    return r;
}

Rational approximate(double value, unsigned long maxDenominator) {
    if (!std::isfinite(value)) throw Error(ErrorCode::Parse, "cannot approximate non-finite value");
    Rational x(value);
    // Continued-fraction convergents of the exact binary value.
    mpz_class h0 = 0, h1 = 1, k0 = 1, k1 = 0;
    Rational rest = x;
    Rational best = Rational(mpz_class{std::round(value)});
    for (int iter = 0; iter < 64; ++iter) {
        mpz_class a;
        mpz_fdiv_q(a.get_mpz_t(), rest.get_num_mpz_t(), rest.get_den_mpz_t());
        mpz_class h2 = a * h1 + h0;
        mpz_class k2 = a * k1 + k0;
        if (k2 > maxDenominator) break;
        best = Rational(h2, k2);
        best.canonicalize();
        h0 = h1; h1 = h2; k0 = k1; k1 = k2;
        Rational frac = rest - Rational(a);
        if (frac == 0) break;
        rest = 1 / frac;
    }
    return best;
}

std::string format_double(double value) {
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), res.ptr);
}

}  // namespace farkas
