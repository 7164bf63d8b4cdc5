#include "orbifold/rational.hpp"

namespace orb {

Int floor_div(const Int& a, const Int& b) {
    Int q = a / b, r = a % b;
    if (r != 0 && ((r < 0) != (b < 0))) --q;
    return q;
}

Rational rat_floor(const Rational& q) { return Rational(floor_div(rat_num(q), rat_den(q))); }

Rational rat_pow(const Rational& q, const Int& e) {
    if (e == 0) return Rational(1);
    if (q == 0 && e < 0) throw std::domain_error("rat_pow: 0 to negative power");
    Int n = rat_num(q), d = rat_den(q);
    Int ae = e < 0 ? Int(-e) : e;
    unsigned long ue = ae.convert_to<unsigned long>();
    Int np = boost::multiprecision::pow(n, ue);
    Int dp = boost::multiprecision::pow(d, ue);
    if (e < 0) return Rational(dp, np);
    return Rational(np, dp);
}

std::optional<Int> exact_nth_root(const Int& v, unsigned n) {
    if (v < 0) return std::nullopt;
    if (v == 0 || v == 1 || n == 1) return v;
    // binary search
    Int lo = 1, hi = v;
    while (lo <= hi) {
        Int mid = (lo + hi) / 2;
        Int p = boost::multiprecision::pow(mid, n);
        if (p == v) return mid;
        if (p < v)
            lo = mid + 1;
        else
            hi = mid - 1;
    }
    return std::nullopt;
}

std::optional<Rational> exact_rat_pow(const Rational& q, const Rational& e) {
    Int p = rat_num(e), s = rat_den(e);
    if (q < 0 && s != 1) return std::nullopt;
    if (q == 0) {
        if (e <= 0) return std::nullopt;
        return Rational(0);
    }
    unsigned us = s.convert_to<unsigned>();
    auto rn = exact_nth_root(rat_num(rat_abs(q)), us);
    auto rd = exact_nth_root(rat_den(q), us);
    if (!rn || !rd) return std::nullopt;
    Rational root(*rn, *rd);
    if (q < 0) root = -root;  // s==1 here
    return rat_pow(root, p);
}

std::vector<std::pair<Int, unsigned>> factorize(Int v) {
    std::vector<std::pair<Int, unsigned>> out;
    if (v < 0) v = -v;
    for (Int p = 2; p * p <= v; p += (p == 2 ? 1 : 2)) {
        if (v % p == 0) {
            unsigned e = 0;
            while (v % p == 0) {
                v /= p;
                ++e;
            }
            out.push_back({p, e});
        }
    }
    if (v > 1) out.push_back({v, 1});
    return out;
}

std::string rat_str(const Rational& q) {
    std::string s = rat_num(q).str();
    if (rat_den(q) != 1) s += "/" + rat_den(q).str();
    return s;
}

Rational parse_rational(const std::string& s) {
    auto bad = [&] { throw MalformedInput("bad rational: '" + s + "'"); };
    if (s.empty()) bad();
    auto slash = s.find('/');
    try {
        if (slash == std::string::npos) return Rational(Int(s));
        Int n(s.substr(0, slash)), d(s.substr(slash + 1));
        if (d == 0) bad();
        return Rational(n, d);
    } catch (const std::exception&) {
        bad();
    }
    return {};
}

}  // namespace orb
