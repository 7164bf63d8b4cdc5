#include "orbifold/power_value.hpp"

#include <map>
#include <numeric>

namespace orb {

Int int_floor_nth_root(const Int& v, unsigned n) {
    if (v < 0) throw std::domain_error("int_floor_nth_root: negative");
    if (v <= 1 || n == 1) return v;
    Int lo = 0, hi = v;
    while (lo < hi) {
        Int mid = (lo + hi + 1) / 2;
        if (boost::multiprecision::pow(mid, n) <= v)
            lo = mid;
        else
            hi = mid - 1;
    }
    return lo;
}

static Int gcd_int(Int a, Int b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
        Int t = a % b;
        a = b;
        b = t;
    }
    return a;
}

PowerValue PowerValue::make(const Rational& coeff, const Rational& base, const Rational& expo,
                            const Rational& offset) {
    if (base < 0) throw std::domain_error("PowerValue: negative base");
    PowerValue out;
    out.offset_ = offset;
    if (coeff == 0) return out;
    if (base == 0) {
        if (expo <= 0) throw std::domain_error("PowerValue: 0^(e<=0)");
        return out;  // coeff * 0 + offset
    }
    if (base == 1 || expo == 0) {
        out.offset_ += coeff;
        return out;
    }
    if (rat_den(expo) == 1) {  // integer exponent: no radical appears
        out.offset_ += coeff * rat_pow(base, rat_num(expo));
        return out;
    }
    // per-prime fractional exponents
    auto numf = factorize(rat_num(base));
    auto denf = factorize(rat_den(base));
    std::map<Int, Rational> exps;
    for (auto& [p, e] : numf) exps[p] += Rational(e) * expo;
    for (auto& [p, e] : denf) exps[p] -= Rational(e) * expo;

    Rational c = coeff;
    std::map<Int, Int> frac_num;  // prime -> numerator of fractional exponent
    Int lcm_den = 1;
    for (auto& [p, e] : exps) {
        Rational fl = rat_floor(e);
        Rational fr = e - fl;
        c *= rat_pow(Rational(p), rat_num(fl));
        if (fr != 0) {
            Int d = rat_den(fr);
            lcm_den = lcm_den / gcd_int(lcm_den, d) * d;
            frac_num[p] = rat_num(fr);  // store against own denominator for now
        }
    }
    if (frac_num.empty()) {
        out.offset_ += c;
        return out;
    }
    // rescale numerators to the common denominator, reduce common gcd
    Int g = lcm_den;
    std::map<Int, Int> scaled;
    for (auto& [p, n] : frac_num) {
        Int d = rat_den(exps[p] - rat_floor(exps[p]));
        Int sn = n * (lcm_den / d);
        scaled[p] = sn;
        g = gcd_int(g, sn);
    }
    Int idx = lcm_den / g;
    Int rad = 1;
    for (auto& [p, sn] : scaled) rad *= rat_num(rat_pow(Rational(p), sn / g));
    out.coeff_ = c;
    out.rad_ = rad;
    out.idx_ = idx.convert_to<unsigned>();
    return out;
}

const Rational& PowerValue::rational() const {
    if (!is_rational()) throw std::domain_error("PowerValue: not rational: " + str());
    return offset_;
}

std::optional<Rational> PowerValue::as_rational() const {
    if (is_rational()) return offset_;
    return std::nullopt;
}

PowerValue PowerValue::operator-() const {
    PowerValue out = *this;
    out.coeff_ = -out.coeff_;
    out.offset_ = -out.offset_;
    return out;
}

PowerValue PowerValue::plus(const Rational& r) const {
    PowerValue out = *this;
    out.offset_ += r;
    return out;
}

PowerValue PowerValue::times(const Rational& r) const {
    if (r == 0) return PowerValue(Rational(0));
    PowerValue out = *this;
    out.coeff_ *= r;
    out.offset_ *= r;
    return out;
}

bool PowerValue::operator==(const PowerValue& o) const {
    return coeff_ == o.coeff_ && rad_ == o.rad_ && idx_ == o.idx_ && offset_ == o.offset_;
}

// dyadic bounds lo/2^k <= rad^(1/idx) <= hi/2^k
static void root_bounds(const Int& rad, unsigned idx, unsigned k, Int& lo, Int& hi) {
    Int scaled = rad << (k * idx);
    lo = int_floor_nth_root(scaled, idx);
    hi = lo + 1;
}

int PowerValue::compare(const PowerValue& o) const {
    if (*this == o) return 0;
    if (is_rational() && o.is_rational()) return offset_ < o.offset_ ? -1 : 1;
    // this - o == c*R + (offset_ - o.offset_) when the radical parts coincide or
    // one side is rational; decide sign of c*R vs t exactly by raising to idx.
    bool same_rad = rad_ == o.rad_ && idx_ == o.idx_;
    if (same_rad || is_rational() || o.is_rational()) {
        Rational c, t = o.offset_ - offset_;
        Int rad;
        unsigned idx;
        if (same_rad) {
            c = coeff_ - o.coeff_;
            rad = rad_;
            idx = idx_;
        } else if (o.is_rational()) {
            c = coeff_;
            rad = rad_;
            idx = idx_;
        } else {
            c = -o.coeff_;
            rad = o.rad_;
            idx = o.idx_;
        }
        if (c == 0) return t > 0 ? -1 : (t < 0 ? 1 : 0);
        int cs = sign_of(c), ts = sign_of(t);
        if (ts * cs <= 0) return cs;  // signs differ (or t == 0): sign(c*R - t) == cs
        // same strict sign: compare |c*R|^idx == |c|^idx*rad against |t|^idx
        Rational labs = rat_pow(rat_abs(c), idx) * Rational(rad);
        Rational rabs = rat_pow(rat_abs(t), idx);
        if (labs == rabs) return 0;  // unreachable for canonical radicals
        return (labs > rabs) == (cs > 0) ? 1 : -1;
    }
    // distinct canonical radicals are linearly independent over Q with 1,
    // so the difference is nonzero; refine dyadic bounds until it resolves.
    for (unsigned k = 4;; k += 8) {
        Rational lo1 = offset_, hi1 = offset_, lo2 = o.offset_, hi2 = o.offset_;
        auto widen = [&](const Rational& c, const Int& rad, unsigned idx, Rational& lo,
                         Rational& hi) {
            if (c == 0) return;
            Int bl, bh;
            root_bounds(rad, idx, k, bl, bh);
            Rational rl(bl, Int(1) << k), rh(bh, Int(1) << k);
            if (c > 0) {
                lo += c * rl;
                hi += c * rh;
            } else {
                lo += c * rh;
                hi += c * rl;
            }
        };
        widen(coeff_, rad_, idx_, lo1, hi1);
        widen(o.coeff_, o.rad_, o.idx_, lo2, hi2);
        if (hi1 < lo2) return -1;
        if (hi2 < lo1) return 1;
        if (k > 512) throw std::runtime_error("PowerValue::compare failed to resolve");
    }
}

std::string PowerValue::str() const {
    if (is_rational()) return rat_str(offset_);
    std::string s = rat_str(coeff_) + "*" + rad_.str() + "^(1/" + std::to_string(idx_) + ")";
    if (offset_ != 0) s += (offset_ > 0 ? "+" : "") + rat_str(offset_);
    return s;
}

}  // namespace orb
