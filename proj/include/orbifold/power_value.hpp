#pragma once

#include "orbifold/rational.hpp"

namespace orb {

// Exact value of the form  coeff * rad^(1/idx) + offset  with the radical part
// kept in a canonical form (rad an integer >= 2, idx >= 2, prime exponents of rad
// reduced mod idx and coprime to it as a tuple). Values that turn out rational
// collapse to coeff == 0.
class PowerValue {
  public:
    PowerValue() = default;
    PowerValue(const Rational& r) : offset_(r) {}  // NOLINT: implicit by design

    // coeff * base^expo + offset, base >= 0
    static PowerValue make(const Rational& coeff, const Rational& base, const Rational& expo,
                           const Rational& offset);

    bool is_rational() const { return coeff_ == 0; }
    const Rational& rational() const;
    std::optional<Rational> as_rational() const;

    const Rational& coeff() const { return coeff_; }
    const Int& radicand() const { return rad_; }
    unsigned index() const { return idx_; }
    const Rational& offset() const { return offset_; }

    PowerValue operator-() const;
    PowerValue plus(const Rational& r) const;
    PowerValue times(const Rational& r) const;

    bool operator==(const PowerValue& o) const;
    bool operator!=(const PowerValue& o) const { return !(*this == o); }

    // total order; exact
    int compare(const PowerValue& o) const;
    bool operator<(const PowerValue& o) const { return compare(o) < 0; }
    bool operator<=(const PowerValue& o) const { return compare(o) <= 0; }
    bool operator>(const PowerValue& o) const { return compare(o) > 0; }
    bool operator>=(const PowerValue& o) const { return compare(o) >= 0; }

    std::string str() const;

  private:
    Rational coeff_ = 0;  // 0 means the value is plain rational
    Int rad_ = 1;
    unsigned idx_ = 1;
    Rational offset_ = 0;
};

// floor of v^(1/n) for v >= 0
Int int_floor_nth_root(const Int& v, unsigned n);

}  // namespace orb
