#pragma once

#include <gmpxx.h>

#include <compare>
#include <concepts>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace splc {

/// Exact arbitrary-precision rational number, always held in canonical form
/// (denominator > 0, gcd(num, den) = 1).
///
/// Text form is "p/q" or "p" when the denominator is 1; decimals are not
/// accepted anywhere so that boundary comparisons are never rounded.
class Rational {
public:
    Rational() = default;

    template <std::integral I>
    Rational(I value) {  // NOLINT(google-explicit-constructor)
        if constexpr (std::is_signed_v<I>) {
            value_ = static_cast<long>(value);
        } else {
            value_ = static_cast<unsigned long>(value);
        }
    }

    Rational(long num, long den) {
        if (den == 0) {
            throw std::domain_error("rational with zero denominator");
        }
        value_ = mpq_class(num, den);
        value_.canonicalize();
    }

    explicit Rational(mpq_class value) : value_(std::move(value)) { value_.canonicalize(); }
    explicit Rational(const mpz_class &value) : value_(value) {}

    static Rational from_parts(const mpz_class &num, const mpz_class &den) {
        if (den == 0) {
            throw std::domain_error("rational with zero denominator");
        }
        mpq_class q(num, den);
        q.canonicalize();
        return Rational(std::move(q));
    }

    /// Parses "p/q", "-p/q", "p" or "-p". Throws std::invalid_argument.
    static Rational parse(std::string_view text) {
        auto fail = [&]() -> Rational {
            throw std::invalid_argument("not an exact rational: \"" + std::string(text) + "\"");
        };
        if (text.empty()) {
            return fail();
        }
        std::size_t pos = 0;
        bool negative = false;
        if (text[0] == '-') {
            negative = true;
            pos = 1;
        }
        auto digits = [&](std::size_t from) {
            std::size_t end = from;
            while (end < text.size() && text[end] >= '0' && text[end] <= '9') {
                ++end;
            }
            return end;
        };
        std::size_t num_end = digits(pos);
        if (num_end == pos) {
            return fail();
        }
        mpz_class num(std::string(text.substr(pos, num_end - pos)), 10);
        mpz_class den = 1;
        if (num_end < text.size()) {
            if (text[num_end] != '/') {
                return fail();
            }
            std::size_t den_end = digits(num_end + 1);
            if (den_end == num_end + 1 || den_end != text.size()) {
                return fail();
            }
            den = mpz_class(std::string(text.substr(num_end + 1)), 10);
            if (den == 0) {
                return fail();
            }
        }
        if (negative) {
            num = -num;
        }
        return from_parts(num, den);
    }

    std::string str() const {
        if (value_.get_den() == 1) {
            return value_.get_num().get_str();
        }
        return value_.get_num().get_str() + "/" + value_.get_den().get_str();
    }

    const mpq_class &raw() const { return value_; }
    mpz_class numerator() const { return value_.get_num(); }
    mpz_class denominator() const { return value_.get_den(); }

    int sign() const { return sgn(value_); }
    bool is_zero() const { return sign() == 0; }
    bool is_positive() const { return sign() > 0; }
    bool is_negative() const { return sign() < 0; }
    bool is_integer() const { return value_.get_den() == 1; }

    Rational abs() const { return Rational(::abs(value_)); }

    mpz_class floor() const {
        mpz_class out;
        mpz_fdiv_q(out.get_mpz_t(), value_.get_num_mpz_t(), value_.get_den_mpz_t());
        return out;
    }

    mpz_class ceil() const {
        mpz_class out;
        mpz_cdiv_q(out.get_mpz_t(), value_.get_num_mpz_t(), value_.get_den_mpz_t());
        return out;
    }

    double to_double() const { return value_.get_d(); }

    Rational &operator+=(const Rational &o) {
        value_ += o.value_;
        return *this;
    }
    Rational &operator-=(const Rational &o) {
        value_ -= o.value_;
        return *this;
    }
    Rational &operator*=(const Rational &o) {
        value_ *= o.value_;
        return *this;
    }
    Rational &operator/=(const Rational &o) {
        if (o.is_zero()) {
            throw std::domain_error("rational division by zero");
        }
        value_ /= o.value_;
        return *this;
    }

    friend Rational operator+(Rational a, const Rational &b) { return a += b; }
    friend Rational operator-(Rational a, const Rational &b) { return a -= b; }
    friend Rational operator*(Rational a, const Rational &b) { return a *= b; }
    friend Rational operator/(Rational a, const Rational &b) { return a /= b; }
    friend Rational operator-(const Rational &a) { return Rational(mpq_class(-a.value_)); }

    friend bool operator==(const Rational &a, const Rational &b) { return a.value_ == b.value_; }
    friend std::strong_ordering operator<=>(const Rational &a, const Rational &b) {
        int c = cmp(a.value_, b.value_);
        if (c < 0) {
            return std::strong_ordering::less;
        }
        if (c > 0) {
            return std::strong_ordering::greater;
        }
        return std::strong_ordering::equal;
    }

    friend std::ostream &operator<<(std::ostream &out, const Rational &r) { return out << r.str(); }

private:
    mpq_class value_{0};
};

inline Rational min(const Rational &a, const Rational &b) { return b < a ? b : a; }
inline Rational max(const Rational &a, const Rational &b) { return a < b ? b : a; }

/// 2^exponent (exponent may be negative).
inline Rational pow2(long exponent) {
    mpq_class q(1);
    if (exponent >= 0) {
        mpq_mul_2exp(q.get_mpq_t(), q.get_mpq_t(), static_cast<mp_bitcnt_t>(exponent));
    } else {
        mpq_div_2exp(q.get_mpq_t(), q.get_mpq_t(), static_cast<mp_bitcnt_t>(-exponent));
    }
    return Rational(std::move(q));
}

inline Rational pow(const Rational &base, unsigned long exponent) {
    Rational out = 1;
    Rational b = base;
    while (exponent != 0) {
        if (exponent & 1UL) {
            out *= b;
        }
        exponent >>= 1UL;
        if (exponent != 0) {
            b *= b;
        }
    }
    return out;
}

/// Largest e with 2^e <= x, for x > 0.
inline long floor_log2(const Rational &x) {
    if (!x.is_positive()) {
        throw std::domain_error("floor_log2 of a non-positive rational");
    }
    long e = static_cast<long>(mpz_sizeinbase(x.raw().get_num_mpz_t(), 2)) -
             static_cast<long>(mpz_sizeinbase(x.raw().get_den_mpz_t(), 2));
    while (pow2(e) > x) {
        --e;
    }
    while (pow2(e + 1) <= x) {
        ++e;
    }
    return e;
}

/// Smallest m >= 0 with 2^m >= x.
inline unsigned long ceil_log2(const Rational &x) {
    if (x <= Rational(1)) {
        return 0;
    }
    long e = floor_log2(x);
    return static_cast<unsigned long>(pow2(e) == x ? e : e + 1);
}

/// Rounds x to the nearest dyadic rational with `bits` significant bits
/// (ties away from zero). Used to bound denominator growth in iterative
/// price updates; never used on verification paths.
inline Rational round_significant_bits(const Rational &x, unsigned bits) {
    if (x.is_zero() || bits == 0) {
        return x;
    }
    Rational mag = x.abs();
    long shift = static_cast<long>(bits) - 1 - floor_log2(mag);
    Rational scaled = mag * pow2(shift) + Rational(1, 2);
    Rational rounded = Rational(scaled.floor()) * pow2(-shift);
    return x.is_negative() ? -rounded : rounded;
}

inline std::uint64_t to_u64(const mpz_class &value) {
    if (value < 0 || value > mpz_class(std::to_string(std::numeric_limits<std::uint64_t>::max()))) {
        throw std::out_of_range("integer does not fit in 64 bits: " + value.get_str());
    }
    return std::stoull(value.get_str());
}

}  // namespace splc
