#include "orbifold/interval.hpp"

#include <algorithm>

namespace orb {

void Interval::check() const {
    if (lo_inf && !lo_open) throw MalformedInput("interval: closed infinite end");
    if (hi_inf && !hi_open) throw MalformedInput("interval: closed infinite end");
    if (!lo_inf && !hi_inf) {
        if (lo > hi || (lo == hi && (lo_open || hi_open)))
            throw MalformedInput("interval: empty: " + str());
    }
}

bool Interval::is_point() const { return !lo_inf && !hi_inf && lo == hi; }

bool Interval::contains(const Rational& x) const {
    if (!lo_inf) {
        if (x < lo || (x == lo && lo_open)) return false;
    }
    if (!hi_inf) {
        if (x > hi || (x == hi && hi_open)) return false;
    }
    return true;
}

bool Interval::contains(const PowerValue& x) const {
    if (!lo_inf) {
        int c = x.compare(PowerValue(lo));
        if (c < 0 || (c == 0 && lo_open)) return false;
    }
    if (!hi_inf) {
        int c = x.compare(PowerValue(hi));
        if (c > 0 || (c == 0 && hi_open)) return false;
    }
    return true;
}

Rational Interval::midpoint() const {
    if (lo_inf && hi_inf) return 0;
    if (lo_inf) return hi - 1;
    if (hi_inf) return lo + 1;
    return (lo + hi) / 2;
}

bool Interval::operator==(const Interval& o) const {
    if (lo_inf != o.lo_inf || hi_inf != o.hi_inf) return false;
    if (!lo_inf && (lo != o.lo || lo_open != o.lo_open)) return false;
    if (!hi_inf && (hi != o.hi || hi_open != o.hi_open)) return false;
    return true;
}

std::string Interval::str() const {
    std::string s;
    s += lo_open || lo_inf ? '(' : '[';
    s += lo_inf ? "-inf" : rat_str(lo);
    s += ",";
    s += hi_inf ? "inf" : rat_str(hi);
    s += hi_open || hi_inf ? ')' : ']';
    return s;
}

// which interval's lower end reaches further down: -1 means a's
static int cmp_lo(const Interval& a, const Interval& b) {
    if (a.lo_inf && b.lo_inf) return 0;
    if (a.lo_inf) return -1;
    if (b.lo_inf) return 1;
    if (a.lo != b.lo) return a.lo < b.lo ? -1 : 1;
    if (a.lo_open == b.lo_open) return 0;
    return a.lo_open ? 1 : -1;
}

static int cmp_hi(const Interval& a, const Interval& b) {
    if (a.hi_inf && b.hi_inf) return 0;
    if (a.hi_inf) return 1;
    if (b.hi_inf) return -1;
    if (a.hi != b.hi) return a.hi < b.hi ? -1 : 1;
    if (a.hi_open == b.hi_open) return 0;
    return a.hi_open ? -1 : 1;
}

static std::optional<Interval> checked(Interval r) {
    if (!r.lo_inf && !r.hi_inf && (r.lo > r.hi || (r.lo == r.hi && (r.lo_open || r.hi_open))))
        return std::nullopt;
    return r;
}

std::optional<Interval> intersect(const Interval& a, const Interval& b) {
    Interval r;
    const Interval& lo_src = cmp_lo(a, b) >= 0 ? a : b;
    const Interval& hi_src = cmp_hi(a, b) <= 0 ? a : b;
    r.lo_inf = lo_src.lo_inf;
    r.lo = lo_src.lo;
    r.lo_open = lo_src.lo_open;
    r.hi_inf = hi_src.hi_inf;
    r.hi = hi_src.hi;
    r.hi_open = hi_src.hi_open;
    return checked(r);
}

bool subset(const Interval& a, const Interval& b) {
    auto i = intersect(a, b);
    return i && *i == a;
}

bool mergeable(const Interval& a, const Interval& b) {
    const Interval& x = cmp_lo(a, b) <= 0 ? a : b;
    const Interval& y = cmp_lo(a, b) <= 0 ? b : a;
    if (x.hi_inf || y.lo_inf) return true;
    if (x.hi > y.lo) return true;
    if (x.hi == y.lo) return !(x.hi_open && y.lo_open);
    return false;
}

Interval merge(const Interval& a, const Interval& b) {
    Interval r;
    const Interval& lo_src = cmp_lo(a, b) <= 0 ? a : b;
    const Interval& hi_src = cmp_hi(a, b) >= 0 ? a : b;
    r.lo_inf = lo_src.lo_inf;
    r.lo = lo_src.lo;
    r.lo_open = lo_src.lo_open;
    r.hi_inf = hi_src.hi_inf;
    r.hi = hi_src.hi;
    r.hi_open = hi_src.hi_open;
    return r;
}

Interval parse_interval(const std::string& in) {
    auto fail = [&] { throw MalformedInput("bad interval: '" + in + "'"); };
    std::string s;
    for (char c : in)
        if (!isspace((unsigned char)c)) s += c;
    if (s.size() < 5) fail();
    char open = s.front(), close = s.back();
    if ((open != '(' && open != '[') || (close != ')' && close != ']')) fail();
    auto comma = s.find(',');
    if (comma == std::string::npos) fail();
    std::string ls = s.substr(1, comma - 1), hs = s.substr(comma + 1, s.size() - comma - 2);
    Interval r;
    if (ls == "-inf") {
        r.lo_inf = true;
    } else {
        r.lo = parse_rational(ls);
    }
    if (hs == "inf" || hs == "+inf") {
        r.hi_inf = true;
    } else {
        r.hi = parse_rational(hs);
    }
    r.lo_open = open == '(';
    r.hi_open = close == ')';
    r.check();
    return r;
}

DomainSet::DomainSet(std::vector<Interval> parts) {
    for (auto& p : parts) p.check();
    std::sort(parts.begin(), parts.end(), [](const Interval& a, const Interval& b) {
        int c = cmp_lo(a, b);
        if (c != 0) return c < 0;
        return cmp_hi(a, b) < 0;
    });
    for (auto& p : parts) {
        if (!parts_.empty() && mergeable(parts_.back(), p))
            parts_.back() = merge(parts_.back(), p);
        else
            parts_.push_back(p);
    }
}

bool DomainSet::contains(const Rational& x) const {
    for (auto& p : parts_)
        if (p.contains(x)) return true;
    return false;
}

bool DomainSet::is_open_set() const {
    for (auto& p : parts_)
        if (!p.is_open_set()) return false;
    return true;
}

std::string DomainSet::str() const {
    if (parts_.empty()) return "{}";
    std::string s;
    for (size_t i = 0; i < parts_.size(); ++i) {
        if (i) s += " u ";
        s += parts_[i].str();
    }
    return s;
}

DomainSet set_union(const DomainSet& a, const DomainSet& b) {
    std::vector<Interval> all = a.parts_;
    all.insert(all.end(), b.parts_.begin(), b.parts_.end());
    return DomainSet(all);
}

DomainSet set_intersect(const DomainSet& a, const DomainSet& b) {
    std::vector<Interval> out;
    for (auto& x : a.parts_)
        for (auto& y : b.parts_)
            if (auto i = intersect(x, y)) out.push_back(*i);
    return DomainSet(out);
}

static std::vector<Interval> interval_minus(const Interval& a, const Interval& b) {
    auto i = intersect(a, b);
    if (!i) return {a};
    std::vector<Interval> out;
    if (cmp_lo(a, *i) < 0) {
        Interval left = a;
        left.hi_inf = false;
        left.hi = i->lo;
        left.hi_open = !i->lo_open;
        if (auto ok = checked(left)) out.push_back(*ok);
    }
    if (cmp_hi(a, *i) > 0) {
        Interval right = a;
        right.lo_inf = false;
        right.lo = i->hi;
        right.lo_open = !i->hi_open;
        if (auto ok = checked(right)) out.push_back(*ok);
    }
    return out;
}

DomainSet set_minus(const DomainSet& a, const DomainSet& b) {
    std::vector<Interval> cur = a.parts_;
    for (auto& y : b.parts_) {
        std::vector<Interval> next;
        for (auto& x : cur)
            for (auto& part : interval_minus(x, y)) next.push_back(part);
        cur = next;
    }
    return DomainSet(cur);
}

bool subset(const DomainSet& a, const DomainSet& b) { return set_minus(a, b).empty(); }

DomainSet parse_domain_set(const std::string& in) {
    std::string s;
    for (char c : in)
        if (!isspace((unsigned char)c)) s += c;
    if (s == "{}" || s.empty()) return DomainSet();
    std::vector<Interval> parts;
    size_t pos = 0;
    while (pos < s.size()) {
        size_t end = s.find_first_of(")]", pos);
        if (end == std::string::npos) throw MalformedInput("bad domain set: '" + in + "'");
        parts.push_back(parse_interval(s.substr(pos, end - pos + 1)));
        pos = end + 1;
        if (pos < s.size()) {
            if (s[pos] != 'u') throw MalformedInput("bad domain set separator in '" + in + "'");
            ++pos;
        }
    }
    return DomainSet(parts);
}

}  // namespace orb
