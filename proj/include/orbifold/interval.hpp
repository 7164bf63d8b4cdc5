#pragma once

#include "orbifold/power_value.hpp"
#include "orbifold/rational.hpp"

#include <vector>

namespace orb {

// One connected interval with rational or infinite endpoints. Never empty;
// single points [a,a] are allowed (set operations produce them) but most
// callers reject them for function supports.
struct Interval {
    bool lo_inf = false, hi_inf = false;
    Rational lo = 0, hi = 0;       // ignored on the infinite side
    bool lo_open = true, hi_open = true;  // infinite ends are open

    static Interval open(const Rational& a, const Rational& b) { return {false, false, a, b, true, true}; }
    static Interval closed_open(const Rational& a, const Rational& b) {
        return {false, false, a, b, false, true};
    }
    static Interval open_closed(const Rational& a, const Rational& b) {
        return {false, false, a, b, true, false};
    }
    static Interval closed(const Rational& a, const Rational& b) { return {false, false, a, b, false, false}; }
    static Interval whole() { return {true, true, 0, 0, true, true}; }

    void check() const;  // throws MalformedInput if empty
    bool is_point() const;
    bool contains(const Rational& x) const;
    bool contains(const PowerValue& x) const;
    bool is_open_set() const { return (lo_inf || lo_open) && (hi_inf || hi_open); }
    bool bounded() const { return !lo_inf && !hi_inf; }
    Rational midpoint() const;  // some interior rational, also for unbounded sides

    bool operator==(const Interval& o) const;
    bool operator!=(const Interval& o) const { return !(*this == o); }
    std::string str() const;
};

std::optional<Interval> intersect(const Interval& a, const Interval& b);
bool subset(const Interval& a, const Interval& b);
// true if a ∪ b is a single interval (overlap or touching without a gap)
bool mergeable(const Interval& a, const Interval& b);
Interval merge(const Interval& a, const Interval& b);

Interval parse_interval(const std::string& s);

// Finite union of intervals, normalized: sorted, pairwise disjoint with gaps
// between consecutive members.
class DomainSet {
  public:
    DomainSet() = default;
    DomainSet(const Interval& iv) : parts_{iv} {}  // NOLINT
    explicit DomainSet(std::vector<Interval> parts);

    const std::vector<Interval>& parts() const { return parts_; }
    bool empty() const { return parts_.empty(); }
    bool contains(const Rational& x) const;
    bool is_open_set() const;

    bool operator==(const DomainSet& o) const { return parts_ == o.parts_; }
    bool operator!=(const DomainSet& o) const { return !(*this == o); }
    std::string str() const;

    friend DomainSet set_union(const DomainSet& a, const DomainSet& b);
    friend DomainSet set_intersect(const DomainSet& a, const DomainSet& b);
    friend DomainSet set_minus(const DomainSet& a, const DomainSet& b);

  private:
    std::vector<Interval> parts_;
};

bool subset(const DomainSet& a, const DomainSet& b);
DomainSet parse_domain_set(const std::string& s);

}  // namespace orb
