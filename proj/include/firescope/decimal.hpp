#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "firescope/errors.hpp"

namespace firescope {

/// Fixed-point decimal with 12 fractional digits, used for currency so token
/// prices and totals carry no binary-float error. Range is ~ +/- 9.2e6
/// dollars, plenty for per-run cost accounting.
class Decimal {
public:
    static constexpr int kFracDigits = 12;
    static constexpr std::int64_t kOne = 1000000000000LL;  // 10^12

    constexpr Decimal() = default;

    static constexpr Decimal from_units(std::int64_t units) {
        Decimal d;
        d.units_ = units;
        return d;
    }

    /// Parses plain and scientific decimal notation ("0.01328", "2.5e-6").
    /// Rejects values that do not fit 12 fractional digits exactly.
    static Decimal parse(std::string_view text) {
        std::size_t i = 0;
        bool negative = false;
        if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
            negative = text[i] == '-';
            ++i;
        }
        unsigned __int128 mantissa = 0;
        int frac_digits = 0;
        bool seen_digit = false;
        bool in_frac = false;
        for (; i < text.size(); ++i) {
            const char c = text[i];
            if (c >= '0' && c <= '9') {
                mantissa = mantissa * 10 + static_cast<unsigned>(c - '0');
                if (mantissa > (static_cast<unsigned __int128>(1) << 100)) {
                    throw Error("decimal out of range: " + std::string(text));
                }
                if (in_frac) ++frac_digits;
                seen_digit = true;
            } else if (c == '.' && !in_frac) {
                in_frac = true;
            } else if (c == 'e' || c == 'E') {
                break;
            } else {
                throw Error("bad decimal: " + std::string(text));
            }
        }
        if (!seen_digit) throw Error("bad decimal: " + std::string(text));
        int exponent = 0;
        if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
            ++i;
            bool exp_neg = false;
            if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
                exp_neg = text[i] == '-';
                ++i;
            }
            if (i >= text.size()) throw Error("bad decimal exponent: " + std::string(text));
            for (; i < text.size(); ++i) {
                if (text[i] < '0' || text[i] > '9') {
                    throw Error("bad decimal exponent: " + std::string(text));
                }
                exponent = exponent * 10 + (text[i] - '0');
                if (exponent > 40) throw Error("decimal exponent out of range");
            }
            if (exp_neg) exponent = -exponent;
        } else if (i != text.size()) {
            throw Error("bad decimal: " + std::string(text));
        }

        int power = kFracDigits + exponent - frac_digits;
        unsigned __int128 units = mantissa;
        for (; power > 0; --power) {
            units *= 10;
            if (units > static_cast<unsigned __int128>(INT64_MAX)) {
                throw Error("decimal out of range: " + std::string(text));
            }
        }
        for (; power < 0; ++power) {
            if (units % 10 != 0) {
                throw Error("decimal needs more than 12 fractional digits: " +
                            std::string(text));
            }
            units /= 10;
        }
        if (units > static_cast<unsigned __int128>(INT64_MAX)) {
            throw Error("decimal out of range: " + std::string(text));
        }
        Decimal d;
        d.units_ = negative ? -static_cast<std::int64_t>(units)
                            : static_cast<std::int64_t>(units);
        return d;
    }

    std::int64_t units() const { return units_; }

    Decimal operator+(Decimal o) const { return from_units(checked_add(units_, o.units_)); }
    Decimal operator-(Decimal o) const { return from_units(checked_add(units_, -o.units_)); }
    Decimal& operator+=(Decimal o) {
        units_ = checked_add(units_, o.units_);
        return *this;
    }

    /// Exact scaling by an integer count (e.g. price-per-token * tokens).
    Decimal times(std::int64_t n) const {
        const __int128 prod = static_cast<__int128>(units_) * n;
        if (prod > INT64_MAX || prod < INT64_MIN) throw Error("decimal overflow");
        return from_units(static_cast<std::int64_t>(prod));
    }

    /// Scales by n/d. Exact when the product divides evenly (the only case
    /// the stock cost tables produce); otherwise rounds half away from zero.
    Decimal times_ratio(std::int64_t n, std::int64_t d) const {
        if (d == 0) throw Error("decimal division by zero");
        __int128 prod = static_cast<__int128>(units_) * n;
        const bool neg = (prod < 0) != (d < 0);
        unsigned __int128 p = prod < 0 ? static_cast<unsigned __int128>(-prod)
                                       : static_cast<unsigned __int128>(prod);
        const unsigned __int128 ud = d < 0 ? static_cast<unsigned __int128>(-static_cast<__int128>(d))
                                           : static_cast<unsigned __int128>(d);
        unsigned __int128 q = p / ud;
        const unsigned __int128 r = p % ud;
        if (2 * r >= ud) ++q;
        if (q > static_cast<unsigned __int128>(INT64_MAX)) throw Error("decimal overflow");
        const std::int64_t v = static_cast<std::int64_t>(q);
        return from_units(neg ? -v : v);
    }

    bool operator==(const Decimal&) const = default;
    auto operator<=>(const Decimal&) const = default;

    bool is_zero() const { return units_ == 0; }

    /// Canonical form: minus sign, integer part, fraction with trailing
    /// zeros trimmed ("0.01328", "2.5635", "0").
    std::string to_string() const {
        std::int64_t u = units_;
        std::string sign;
        if (u < 0) {
            sign = "-";
            u = -u;
        }
        const std::int64_t whole = u / kOne;
        std::int64_t frac = u % kOne;
        std::string out = sign + std::to_string(whole);
        if (frac != 0) {
            std::string digits(static_cast<std::size_t>(kFracDigits), '0');
            for (int pos = kFracDigits - 1; pos >= 0; --pos) {
                digits[static_cast<std::size_t>(pos)] =
                    static_cast<char>('0' + (frac % 10));
                frac /= 10;
            }
            while (!digits.empty() && digits.back() == '0') digits.pop_back();
            out += "." + digits;
        }
        return out;
    }

private:
    static std::int64_t checked_add(std::int64_t a, std::int64_t b) {
        std::int64_t out;
        if (__builtin_add_overflow(a, b, &out)) throw Error("decimal overflow");
        return out;
    }

    std::int64_t units_ = 0;
};

}  // namespace firescope
