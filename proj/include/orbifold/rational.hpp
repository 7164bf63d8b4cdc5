#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace orb {

using Int = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline Int rat_num(const Rational& q) { return numerator(q); }
inline Int rat_den(const Rational& q) { return denominator(q); }

inline int sign_of(const Rational& q) { return q.sign(); }
inline Rational rat_abs(const Rational& q) { return q < 0 ? Rational(-q) : q; }

Int floor_div(const Int& a, const Int& b);
Rational rat_floor(const Rational& q);

// q^e for integer e (e may be negative; q must be nonzero then)
Rational rat_pow(const Rational& q, const Int& e);

// exact n-th root of a nonnegative integer, if it exists
std::optional<Int> exact_nth_root(const Int& v, unsigned n);

// exact q^(p/s) when the result is rational; q must be >= 0 unless p/s is integral
std::optional<Rational> exact_rat_pow(const Rational& q, const Rational& e);

// trial-division factorization; inputs stay tiny in this library
std::vector<std::pair<Int, unsigned>> factorize(Int v);

std::string rat_str(const Rational& q);
Rational parse_rational(const std::string& s);  // "p/q" or "p"

struct NotInFragment : std::runtime_error {
    explicit NotInFragment(const std::string& what) : std::runtime_error(what) {}
};

struct OutOfDomain : std::runtime_error {
    explicit OutOfDomain(const std::string& what) : std::runtime_error(what) {}
};

struct MalformedInput : std::runtime_error {
    explicit MalformedInput(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace orb
