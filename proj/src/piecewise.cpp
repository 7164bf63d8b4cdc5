#include "orbifold/piecewise.hpp"

#include <algorithm>
#include <set>

namespace orb {

static bool is_integer(const Rational& q) { return rat_den(q) == 1; }

// ---------- Piece ----------

bool Piece::straddles() const {
    bool has_left = support.lo_inf || support.lo < h;
    bool has_right = support.hi_inf || support.hi > h;
    return has_left && has_right;
}

PowerValue Piece::eval(const Rational& x) const {
    if (a == 0) return PowerValue(k);
    if (x == h) return PowerValue(k);
    int sigma = (parity == Parity::Odd && x < h) ? -1 : 1;
    return PowerValue::make(a * sigma, rat_abs(x - h), r, k);
}

bool Piece::increasing_at(const Rational& x) const {
    if (a == 0) return false;
    if (parity == Parity::Odd) return a > 0;
    return x < h ? a < 0 : a > 0;
}

Piece canon_piece(Piece p) {
    p.support.check();
    if (p.support.is_point()) throw MalformedInput("piece support degenerate: " + p.support.str());
    if (p.r <= 0) throw MalformedInput("piece exponent must be positive");
    if (p.a == 0) {
        p.h = 0;
        p.r = 1;
        p.parity = Parity::Odd;
        return p;
    }
    bool has_left = p.support.lo_inf || p.support.lo < p.h;
    bool has_right = p.support.hi_inf || p.support.hi > p.h;
    if (!has_left) {
        p.parity = Parity::Odd;
    } else if (!has_right) {
        if (p.parity == Parity::Even) p.a = -p.a;
        p.parity = Parity::Odd;
    }
    if (p.r == 1 && p.parity == Parity::Odd) {
        p.k -= p.a * p.h;
        p.h = 0;
    }
    return p;
}

Piece make_piece(const Rational& a, Parity parity, const Rational& h, const Rational& r,
                 const Rational& k, const Interval& support) {
    Piece p;
    p.a = a;
    p.parity = parity;
    p.h = h;
    p.r = r;
    p.k = k;
    p.support = support;
    return canon_piece(p);
}

// ---------- assembly ----------

static bool supports_touch(const Interval& a, const Interval& b) {
    // a entirely before b, no gap, no overlap
    if (a.hi_inf || b.lo_inf) return false;
    return a.hi == b.lo && (a.hi_open != b.lo_open);
}

// try to merge q onto p (p's support before q's); 3 rules: identical forms,
// power pieces gluing to an even piece across their shared center, affine
// pieces gluing to a kink
static std::optional<Piece> try_merge(const Piece& p, const Piece& q) {
    if (!supports_touch(p.support, q.support)) return std::nullopt;
    Interval s = merge(p.support, q.support);
    if (p.same_form(q)) {
        Piece out = p;
        out.support = s;
        return out;
    }
    if (p.constant() || q.constant()) return std::nullopt;
    Rational b = p.support.hi;
    if (p.parity == Parity::Odd && q.parity == Parity::Odd && p.a == -q.a) {
        if (p.r != 1 && p.r == q.r && p.h == b && q.h == b && p.k == q.k)
            return make_piece(q.a, Parity::Even, b, q.r, q.k, s);
        if (p.r == 1 && q.r == 1) {
            PowerValue vl = p.eval(b), vr = q.eval(b);
            if (vl == vr) return make_piece(q.a, Parity::Even, b, 1, vl.rational(), s);
        }
    }
    return std::nullopt;
}

PiecewiseFn make_piecewise(std::vector<Piece> pieces) {
    for (auto& p : pieces) p = canon_piece(p);
    std::sort(pieces.begin(), pieces.end(), [](const Piece& a, const Piece& b) {
        if (a.support.lo_inf != b.support.lo_inf) return a.support.lo_inf;
        if (a.support.lo_inf) return false;
        if (a.support.lo != b.support.lo) return a.support.lo < b.support.lo;
        return !a.support.lo_open && b.support.lo_open;
    });
    for (size_t i = 0; i + 1 < pieces.size(); ++i)
        if (intersect(pieces[i].support, pieces[i + 1].support))
            throw MalformedInput("piece supports overlap: " + pieces[i].support.str() + " and " +
                                 pieces[i + 1].support.str());
    PiecewiseFn f;
    for (auto& p : pieces) {
        if (!f.pieces.empty()) {
            if (auto m = try_merge(f.pieces.back(), p)) {
                f.pieces.back() = *m;
                continue;
            }
        }
        f.pieces.push_back(p);
    }
    // a glue may enable another one
    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t i = 0; i + 1 < f.pieces.size(); ++i) {
            if (auto m = try_merge(f.pieces[i], f.pieces[i + 1])) {
                f.pieces[i] = *m;
                f.pieces.erase(f.pieces.begin() + i + 1);
                changed = true;
                break;
            }
        }
    }
    return f;
}

PiecewiseFn identity_on(const Interval& iv) {
    return make_piecewise({make_piece(1, Parity::Odd, 0, 1, 0, iv)});
}

PiecewiseFn constant_on(const Interval& iv, const Rational& k) {
    return make_piecewise({make_piece(0, Parity::Odd, 0, 1, k, iv)});
}

DomainSet PiecewiseFn::domain() const {
    std::vector<Interval> parts;
    for (auto& p : pieces) parts.push_back(p.support);
    return DomainSet(parts);
}

std::string PiecewiseFn::str() const {
    if (pieces.empty()) return "empty";
    std::string s;
    for (size_t i = 0; i < pieces.size(); ++i) {
        if (i) s += "; ";
        s += piece_str(pieces[i]);
    }
    return s;
}

const Piece* piece_at(const PiecewiseFn& f, const Rational& x) {
    for (auto& p : f.pieces)
        if (p.support.contains(x)) return &p;
    return nullptr;
}

PowerValue evaluate(const PiecewiseFn& f, const Rational& x) {
    const Piece* p = piece_at(f, x);
    if (!p) throw OutOfDomain(rat_str(x) + " outside domain " + f.domain().str());
    return p->eval(x);
}

PiecewiseFn restrict_fn(const PiecewiseFn& f, const DomainSet& d) {
    std::vector<Piece> out;
    for (auto& p : f.pieces)
        for (auto& part : d.parts())
            if (auto i = intersect(p.support, part)) {
                if (i->is_point())
                    throw NotInFragment("restriction leaves an isolated point at " +
                                        rat_str(i->lo));
                Piece q = p;
                q.support = *i;
                out.push_back(q);
            }
    return make_piecewise(out);
}

// ---------- ranges and images ----------

namespace {

struct RangeEnd {
    bool inf = false;
    PowerValue v{Rational(0)};
    bool att = false;
};

struct Range {
    RangeEnd lo, hi;
};

RangeEnd support_value(const Piece& p, bool lo_side) {
    const Interval& s = p.support;
    if (lo_side ? s.lo_inf : s.hi_inf) return {true, PowerValue(Rational(0)), false};
    Rational x = lo_side ? s.lo : s.hi;
    return {false, p.eval(x), !(lo_side ? s.lo_open : s.hi_open)};
}

Range piece_range(const Piece& p) {
    if (p.constant()) {
        RangeEnd e{false, PowerValue(p.k), true};
        return {e, e};
    }
    RangeEnd e1 = support_value(p, true), e2 = support_value(p, false);
    if (p.parity == Parity::Even && p.straddles()) {
        RangeEnd center{false, PowerValue(p.k), true};
        RangeEnd outer;
        if (e1.inf || e2.inf) {
            outer = {true, PowerValue(Rational(0)), false};
        } else {
            int c = e1.v.compare(e2.v);
            bool pick1 = p.a > 0 ? c >= 0 : c <= 0;
            outer = pick1 ? e1 : e2;
            if (c == 0) outer.att = e1.att || e2.att;
        }
        return p.a > 0 ? Range{center, outer} : Range{outer, center};
    }
    bool incr = p.a > 0;  // odd pieces are globally monotone
    return incr ? Range{e1, e2} : Range{e2, e1};
}

Interval range_to_interval(const Range& r) {
    Interval iv;
    iv.lo_inf = r.lo.inf;
    iv.hi_inf = r.hi.inf;
    if (!r.lo.inf) {
        auto q = r.lo.v.as_rational();
        if (!q) throw NotInFragment("irrational image endpoint " + r.lo.v.str());
        iv.lo = *q;
        iv.lo_open = !r.lo.att;
    }
    if (!r.hi.inf) {
        auto q = r.hi.v.as_rational();
        if (!q) throw NotInFragment("irrational image endpoint " + r.hi.v.str());
        iv.hi = *q;
        iv.hi_open = !r.hi.att;
    }
    return iv;
}

// is v strictly below the low end / within the range etc.
int cmp_value_lo(const PowerValue& v, const RangeEnd& lo) {
    // -1: v below every range point; 0: v == lo boundary; 1: v above lo end
    if (lo.inf) return 1;
    int c = v.compare(lo.v);
    return c;
}

int cmp_value_hi(const PowerValue& v, const RangeEnd& hi) {
    if (hi.inf) return -1;
    return v.compare(hi.v);
}

bool range_contains(const Range& r, const PowerValue& v) {
    int cl = cmp_value_lo(v, r.lo);
    if (cl < 0 || (cl == 0 && !r.lo.att)) return false;
    int ch = cmp_value_hi(v, r.hi);
    if (ch > 0 || (ch == 0 && !r.hi.att)) return false;
    return true;
}

}  // namespace

DomainSet image(const PiecewiseFn& f) {
    std::vector<Interval> parts;
    for (auto& p : f.pieces) parts.push_back(range_to_interval(piece_range(p)));
    return DomainSet(parts);
}

DomainSet image_on(const PiecewiseFn& f, const DomainSet& d) { return image(restrict_fn(f, d)); }

// ---------- preimages ----------

std::vector<Rational> piece_preimages(const Piece& p, const Rational& v) {
    if (p.constant()) {
        if (v == p.k)
            throw NotInFragment("preimage of a constant piece is an interval");
        return {};
    }
    if (!range_contains(piece_range(p), PowerValue(v))) return {};
    Rational w = (v - p.k) / p.a;
    std::vector<Rational> out;
    if (p.parity == Parity::Odd) {
        if (w == 0) {
            if (p.support.contains(p.h)) out.push_back(p.h);
        } else {
            auto rho = exact_rat_pow(rat_abs(w), Rational(1) / p.r);
            if (!rho) throw NotInFragment("irrational preimage of " + rat_str(v));
            Rational x = p.h + (w > 0 ? *rho : -*rho);
            if (p.support.contains(x)) out.push_back(x);
        }
    } else {
        if (w < 0) return {};
        if (w == 0) {
            if (p.support.contains(p.h)) out.push_back(p.h);
        } else {
            auto rho = exact_rat_pow(w, Rational(1) / p.r);
            if (!rho) throw NotInFragment("irrational preimage of " + rat_str(v));
            for (const Rational& x : {Rational(p.h - *rho), Rational(p.h + *rho)})
                if (p.support.contains(x)) out.push_back(x);
        }
    }
    return out;
}

std::vector<Rational> preimages(const PiecewiseFn& f, const Rational& v) {
    std::vector<Rational> out;
    for (auto& p : f.pieces)
        for (auto& x : piece_preimages(p, v)) out.push_back(x);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// ---------- composition ----------

namespace {

// monotone segments of a piece: split straddling non-affine pieces at the center
std::vector<Piece> monotone_segments(const Piece& p) {
    if (p.affine() || !p.straddles()) return {p};
    Interval left = p.support, right = p.support;
    left.hi_inf = false;
    left.hi = p.h;
    left.hi_open = false;
    right.lo_inf = false;
    right.lo = p.h;
    right.lo_open = true;
    Piece pl = p, pr = p;
    pl.support = left;
    pr.support = right;
    return {canon_piece(pl), canon_piece(pr)};
}

Rational preimage_in_segment(const Piece& seg, const Rational& v) {
    auto xs = piece_preimages(seg, v);
    if (xs.size() != 1)
        throw NotInFragment("expected unique preimage of " + rat_str(v) + " in segment");
    return xs[0];
}

// x-interval of points of seg's support mapped into J by seg
std::optional<Interval> segment_preimage(const Piece& seg, const Interval& J) {
    const Interval& S = seg.support;
    Range R = piece_range(seg);
    // empty value overlap?
    if (!J.hi_inf) {
        int c = cmp_value_lo(PowerValue(J.hi), R.lo);
        if (c < 0 || (c == 0 && (J.hi_open || !R.lo.att))) return std::nullopt;
    }
    if (!J.lo_inf) {
        int c = cmp_value_hi(PowerValue(J.lo), R.hi);
        if (c > 0 || (c == 0 && (J.lo_open || !R.hi.att))) return std::nullopt;
    }
    Interval T = S;
    bool incr = seg.a > 0;
    auto apply = [&](bool j_lo_side) {
        bool j_inf = j_lo_side ? J.lo_inf : J.hi_inf;
        if (j_inf) return;
        Rational jv = j_lo_side ? J.lo : J.hi;
        bool j_open = j_lo_side ? J.lo_open : J.hi_open;
        // which side of T this value bound constrains
        bool t_lo_side = (j_lo_side == incr);
        const RangeEnd& rend = j_lo_side ? R.lo : R.hi;
        int c =
            j_lo_side ? cmp_value_lo(PowerValue(jv), rend) : -cmp_value_hi(PowerValue(jv), rend);
        // c < 0: bound falls outside the range on its own side: no constraint
        // c == 0: bound sits exactly at the range end
        // c > 0: bound cuts strictly into the range
        if (c < 0) return;
        if (c == 0) {
            if (j_open) {
                if (t_lo_side)
                    T.lo_open = true;
                else
                    T.hi_open = true;
            }
            return;
        }
        Rational x = preimage_in_segment(seg, jv);
        if (t_lo_side) {
            T.lo_inf = false;
            T.lo = x;
            T.lo_open = j_open;
        } else {
            T.hi_inf = false;
            T.hi = x;
            T.hi_open = j_open;
        }
    };
    apply(true);
    apply(false);
    if (!T.lo_inf && !T.hi_inf && (T.lo > T.hi || (T.lo == T.hi && (T.lo_open || T.hi_open))))
        return std::nullopt;
    if (!T.lo_inf && !T.hi_inf && T.lo == T.hi)
        throw NotInFragment("composite domain has an isolated point at " + rat_str(T.lo));
    return T;
}

// inner segment q (monotone, canonical on S) under outer piece; sigma = sign of
// q(x) - outer.h on the interior of S, used only for the even kink outer
Piece compose_on(const Piece& outer, Piece q, const Interval& S, int sigma) {
    q.support = S;
    q = canon_piece(q);
    if (outer.constant()) return make_piece(0, Parity::Odd, 0, 1, outer.k, S);
    if (q.constant()) throw std::logic_error("constant segment reached compose_on");
    if (outer.affine())  // a2*y + k2
        return make_piece(outer.a * q.a, q.parity, q.h, q.r, outer.a * q.k + outer.k, S);
    if (q.affine()) {
        // a1*x + k1 into a power: recenter at the preimage of the outer center
        Rational hh = (outer.h - q.k) / q.a;
        auto c = exact_rat_pow(rat_abs(q.a), outer.r);
        if (!c)
            throw NotInFragment("coefficient |" + rat_str(q.a) + "|^" + rat_str(outer.r) +
                                " leaves the rationals");
        Rational a_out = outer.a * *c;
        if (outer.parity == Parity::Odd) a_out *= sign_of(q.a);
        return make_piece(a_out, outer.parity, hh, outer.r, outer.k, S);
    }
    if (outer.r == 1 && outer.parity == Parity::Even) {
        // |y - h2| with constant sign of y - h2 on this segment: affine absorb
        Rational a2 = outer.a * sigma;
        return make_piece(a2 * q.a, q.parity, q.h, q.r, a2 * (q.k - outer.h) + outer.k, S);
    }
    if (q.k != outer.h)
        throw NotInFragment("power composition misaligned: inner offset " + rat_str(q.k) +
                            " vs outer center " + rat_str(outer.h));
    if (q.parity != Parity::Odd) throw std::logic_error("segment not odd-canonical");
    auto c = exact_rat_pow(rat_abs(q.a), outer.r);
    if (!c)
        throw NotInFragment("coefficient |" + rat_str(q.a) + "|^" + rat_str(outer.r) +
                            " leaves the rationals");
    if (outer.parity == Parity::Even)
        return make_piece(outer.a * *c, Parity::Even, q.h, q.r * outer.r, outer.k, S);
    return make_piece(outer.a * sign_of(q.a) * *c, Parity::Odd, q.h, q.r * outer.r, outer.k, S);
}

}  // namespace

PiecewiseFn compose(const PiecewiseFn& outer, const PiecewiseFn& inner) {
    std::vector<Piece> out;
    for (auto& p1 : inner.pieces) {
        for (auto& seg0 : monotone_segments(p1)) {
            if (seg0.constant()) {
                const Piece* p2 = piece_at(outer, seg0.k);
                if (!p2) continue;
                PowerValue w = p2->eval(seg0.k);
                auto q = w.as_rational();
                if (!q)
                    throw NotInFragment("constant segment maps to irrational value " + w.str());
                out.push_back(make_piece(0, Parity::Odd, 0, 1, *q, seg0.support));
                continue;
            }
            for (auto& p2 : outer.pieces) {
                auto T = segment_preimage(seg0, p2.support);
                if (!T) continue;
                Piece seg = seg0;
                seg.support = *T;
                seg = canon_piece(seg);
                bool kink_split = !p2.constant() && !p2.affine() && p2.r == 1 &&
                                  p2.parity == Parity::Even && !seg.affine();
                std::vector<std::pair<Interval, int>> cells;
                if (!kink_split) {
                    cells.push_back({*T, 0});
                } else {
                    // split where the segment crosses the kink center
                    Range RT = piece_range(seg);
                    PowerValue hv{p2.h};
                    bool inside = cmp_value_lo(hv, RT.lo) > 0 && cmp_value_hi(hv, RT.hi) < 0;
                    if (inside) {
                        auto xs = piece_preimages(seg, p2.h);
                        if (xs.size() != 1)
                            throw NotInFragment("irrational crossing of outer center " +
                                                rat_str(p2.h));
                        Rational z = xs[0];
                        Interval L = *T, Rr = *T;
                        L.hi_inf = false;
                        L.hi = z;
                        L.hi_open = false;
                        Rr.lo_inf = false;
                        Rr.lo = z;
                        Rr.lo_open = true;
                        int sl = seg.eval(L.midpoint()).compare(hv);
                        int sr = seg.eval(Rr.midpoint()).compare(hv);
                        cells.push_back({L, sl});
                        cells.push_back({Rr, sr});
                    } else {
                        int s = seg.eval(T->midpoint()).compare(hv);
                        cells.push_back({*T, s});
                    }
                }
                for (auto& [cell, sigma] : cells) out.push_back(compose_on(p2, seg, cell, sigma));
            }
        }
    }
    return make_piecewise(out);
}

// ---------- injectivity / inversion ----------

namespace {

std::vector<Rational> dyadic_samples(const Interval& s, unsigned depth) {
    Rational lo = s.lo_inf ? Rational(-(1 << 10)) : s.lo;
    Rational hi = s.hi_inf ? Rational(1 << 10) : s.hi;
    std::vector<Rational> out;
    Int den = Int(1) << depth;
    for (Int n = 1; n < den; n += 2) out.push_back(lo + (hi - lo) * Rational(n, den));
    return out;
}

std::optional<std::pair<Rational, Rational>> cross_collision(const Piece& pi, const Piece& pj) {
    Range ri = piece_range(pi), rj = piece_range(pj);
    // overlap of the two ranges
    const RangeEnd& lo = [&]() -> const RangeEnd& {
        if (ri.lo.inf) return rj.lo;
        if (rj.lo.inf) return ri.lo;
        return ri.lo.v.compare(rj.lo.v) >= 0 ? ri.lo : rj.lo;
    }();
    const RangeEnd& hi = [&]() -> const RangeEnd& {
        if (ri.hi.inf) return rj.hi;
        if (rj.hi.inf) return ri.hi;
        return ri.hi.v.compare(rj.hi.v) <= 0 ? ri.hi : rj.hi;
    }();
    if (!lo.inf && !hi.inf) {
        int c = lo.v.compare(hi.v);
        if (c > 0) return std::nullopt;
        if (c == 0) {
            // single shared value: collision iff both pieces attain it
            PowerValue v = lo.v;
            if (!range_contains(ri, v) || !range_contains(rj, v)) return std::nullopt;
            auto attained_at = [&](const Piece& p) -> Rational {
                for (bool side : {true, false}) {
                    RangeEnd e = support_value(p, side);
                    if (!e.inf && e.att && e.v == v) return side ? p.support.lo : p.support.hi;
                }
                if (p.eval(p.h) == v) return p.h;  // even extremum
                throw std::logic_error("attained value not located");
            };
            return std::pair{attained_at(pi), attained_at(pj)};
        }
    }
    // interior overlap: search a rational collision pair
    for (unsigned depth = 1; depth <= 14; ++depth) {
        for (auto [p, q] : {std::pair{&pi, &pj}, std::pair{&pj, &pi}}) {
            for (auto& x : dyadic_samples(p->support, depth)) {
                if (!p->support.contains(x)) continue;
                PowerValue v = p->eval(x);
                auto vr = v.as_rational();
                if (!vr || !range_contains(piece_range(*q), v)) continue;
                std::vector<Rational> ys;
                try {
                    ys = piece_preimages(*q, *vr);
                } catch (const NotInFragment&) {
                    continue;
                }
                if (!ys.empty()) {
                    if (p == &pi) return std::pair{x, ys[0]};
                    return std::pair{ys[0], x};
                }
            }
        }
    }
    throw NotInFragment("injectivity collision exists but no rational witness found");
}

}  // namespace

std::optional<std::pair<Rational, Rational>> injectivity_collision(const PiecewiseFn& f) {
    for (auto& p : f.pieces) {
        if (p.constant()) {
            Rational x1 = p.support.midpoint();
            Rational x2;
            if (p.support.hi_inf)
                x2 = x1 + 1;
            else
                x2 = (x1 + p.support.hi) / 2;
            return std::pair{x1, x2};
        }
        if (p.parity == Parity::Even) {  // canonical even pieces straddle
            Rational dl = p.support.lo_inf ? Rational(1) : p.h - p.support.lo;
            Rational dr = p.support.hi_inf ? Rational(1) : p.support.hi - p.h;
            Rational d = (dl < dr ? dl : dr) / 2;
            return std::pair{p.h - d, p.h + d};
        }
    }
    for (size_t i = 0; i < f.pieces.size(); ++i)
        for (size_t j = i + 1; j < f.pieces.size(); ++j)
            if (auto c = cross_collision(f.pieces[i], f.pieces[j])) return c;
    return std::nullopt;
}

PiecewiseFn invert(const PiecewiseFn& f) {
    if (auto c = injectivity_collision(f)) throw NotInjective(c->first, c->second);
    std::vector<Piece> out;
    for (auto& p : f.pieces) {
        auto t = exact_rat_pow(rat_abs(p.a), Rational(1) / p.r);
        if (!t)
            throw NotInFragment("inverse coefficient |" + rat_str(p.a) + "|^(1/" + rat_str(p.r) +
                                ") leaves the rationals");
        Rational ainv = Rational(sign_of(p.a)) / *t;
        out.push_back(make_piece(ainv, Parity::Odd, p.k, Rational(1) / p.r, p.h,
                                 range_to_interval(piece_range(p))));
    }
    return make_piecewise(out);
}

// ---------- germs ----------

enum class Side { Left, Right };

static const Piece* find_side_piece(const PiecewiseFn& f, const Rational& x, Side side) {
    for (auto& p : f.pieces) {
        const Interval& s = p.support;
        bool ok;
        if (side == Side::Left)
            ok = (s.lo_inf || s.lo < x) && (s.hi_inf || s.hi >= x);
        else
            ok = (s.hi_inf || s.hi > x) && (s.lo_inf || s.lo <= x);
        if (ok) return &p;
    }
    return nullptr;
}

static SideGerm side_canon(const Piece& p, const Rational& x, Side side) {
    if (p.constant()) return {0, 0, 1, p.k};
    Rational a = p.a, h = p.h, r = p.r, k = p.k;
    bool left_of_center = (side == Side::Left) ? (h >= x) : (h > x);
    if (p.parity == Parity::Even && left_of_center) a = -a;
    if (r == 1) {
        k -= a * h;
        h = 0;
    }
    return {a, h, r, k};
}

Germ germ_at(const PiecewiseFn& f, const Rational& x) {
    Germ g;
    g.base = x;
    g.value = evaluate(f, x);
    if (const Piece* p = find_side_piece(f, x, Side::Left)) g.left = side_canon(*p, x, Side::Left);
    if (const Piece* p = find_side_piece(f, x, Side::Right))
        g.right = side_canon(*p, x, Side::Right);
    return g;
}

bool germ_equal(const PiecewiseFn& f, const PiecewiseFn& g, const Rational& x) {
    return germ_at(f, x) == germ_at(g, x);
}

bool Germ::identity() const {
    SideGerm id{1, 0, 1, 0};
    if (left && !(*left == id)) return false;
    if (right && !(*right == id)) return false;
    return value == PowerValue(base);
}

static std::string side_str(const std::optional<SideGerm>& s) {
    if (!s) return "-";
    return rat_str(s->a) + "," + rat_str(s->h) + "," + rat_str(s->r) + "," + rat_str(s->k);
}

std::string Germ::str() const {
    return "germ@" + rat_str(base) + "[" + side_str(left) + "|" + side_str(right) +
           "|v=" + value.str() + "]";
}

// ---------- smoothness ----------

namespace {

struct SideJet {
    enum Kind { Missing, NonIntCenter, Analytic } kind = Missing;
    // Analytic: c*(x-h)^r + k, or c*(h-x)^r + k when left_of_center; c == 0 constant
    Rational c, h, r, k;
    bool left_of_center = false;
    unsigned first_bad = 0;  // NonIntCenter
};

SideJet side_jet(const PiecewiseFn& f, const Rational& b, Side side) {
    const Piece* p = find_side_piece(f, b, side);
    if (!p) return {};
    SideJet j;
    j.kind = SideJet::Analytic;
    j.k = p->k;
    if (p->constant()) {
        j.c = 0;
        return j;
    }
    j.r = p->r;
    if (p->h == b) {
        if (!is_integer(p->r)) {
            j.kind = SideJet::NonIntCenter;
            j.first_bad = (rat_floor(p->r) + 1).convert_to<unsigned>();
            return j;
        }
        j.h = b;
        j.left_of_center = side == Side::Left;
        if (side == Side::Right)
            j.c = p->a;
        else
            j.c = p->parity == Parity::Even ? p->a : -p->a;
        return j;
    }
    j.h = p->h;
    j.left_of_center = p->h > b;
    if (!j.left_of_center)
        j.c = p->a;
    else
        j.c = p->parity == Parity::Even ? p->a : -p->a;
    return j;
}

// m-th one-sided derivative at b as an exact value
PowerValue analytic_jet(const SideJet& j, const Rational& b, unsigned m) {
    Rational base_k = m == 0 ? j.k : Rational(0);
    if (j.c == 0) return PowerValue(base_k);
    if (j.h == b) {  // integer exponent, centered
        Int n = rat_num(j.r);
        if (Int(m) < n) return PowerValue(base_k);
        if (Int(m) > n) return PowerValue(Rational(0));
        Rational fact = 1;
        for (Int i = 1; i <= n; ++i) fact *= Rational(i);
        Rational v = j.c * fact;
        if (j.left_of_center && n % 2 != 0) v = -v;
        return PowerValue(v + base_k);
    }
    Rational falling = 1;
    for (unsigned i = 0; i < m; ++i) falling *= j.r - i;
    if (falling == 0) return PowerValue(base_k);  // integer r, m > r
    Rational coeff = j.c * falling;
    Rational base = j.left_of_center ? j.h - b : b - j.h;
    if (j.left_of_center && m % 2 != 0) coeff = -coeff;
    return PowerValue::make(coeff, base, j.r - Rational(m), base_k);
}

std::optional<SmoothResult> check_point(const PiecewiseFn& f, const Rational& b) {
    SideJet l = side_jet(f, b, Side::Left), r = side_jet(f, b, Side::Right);
    auto fail = [&](unsigned order, bool unb) {
        SmoothResult s;
        s.smooth = false;
        s.point = b;
        s.order = order;
        s.unbounded = unb;
        return s;
    };
    if (l.kind == SideJet::Missing && r.kind == SideJet::Missing)
        throw std::logic_error("point not adjacent to any piece");
    if (l.kind == SideJet::Missing || r.kind == SideJet::Missing) {
        const SideJet& s = l.kind == SideJet::Missing ? r : l;
        if (s.kind == SideJet::NonIntCenter) return fail(s.first_bad, true);
        return std::nullopt;
    }
    unsigned bad_l = l.kind == SideJet::NonIntCenter ? l.first_bad : UINT32_MAX;
    unsigned bad_r = r.kind == SideJet::NonIntCenter ? r.first_bad : UINT32_MAX;
    unsigned bad = std::min(bad_l, bad_r);
    unsigned limit = 3;
    for (const SideJet* s : {&l, &r})
        if (s->kind == SideJet::Analytic && s->c != 0 && s->h == b)
            limit = std::max(limit, rat_num(s->r).convert_to<unsigned>());
    auto jet = [&](const SideJet& s, unsigned m) -> PowerValue {
        if (s.kind == SideJet::NonIntCenter) return PowerValue(m == 0 ? s.k : Rational(0));
        return analytic_jet(s, b, m);
    };
    for (unsigned m = 0; m <= limit; ++m) {
        if (m == bad) return fail(m, true);
        if (jet(l, m) != jet(r, m)) return fail(m, false);
    }
    if (bad != UINT32_MAX) return fail(bad, true);
    return std::nullopt;
}

}  // namespace

SmoothResult is_smooth(const PiecewiseFn& f) {
    DomainSet dom = f.domain();
    std::set<Rational> crits;
    for (auto& p : f.pieces) {
        if (p.affine()) continue;
        bool in_closure = (p.support.lo_inf || p.support.lo <= p.h) &&
                          (p.support.hi_inf || p.support.hi >= p.h);
        if (in_closure && dom.contains(p.h)) crits.insert(p.h);
    }
    for (size_t i = 0; i + 1 < f.pieces.size(); ++i)
        if (supports_touch(f.pieces[i].support, f.pieces[i + 1].support))
            crits.insert(f.pieces[i].support.hi);
    for (auto& b : crits)
        if (auto bad = check_point(f, b)) return *bad;
    return SmoothResult{};
}

std::string SmoothResult::str() const {
    if (smooth) return "smooth";
    std::string s = "not smooth at " + rat_str(point) + ", order " + std::to_string(order);
    if (unbounded) s += " (unbounded)";
    return s;
}

DiffeoResult is_diffeomorphism(const PiecewiseFn& f) {
    DiffeoResult res;
    res.smooth = is_smooth(f);
    if (!res.smooth.smooth) {
        res.kind = DiffeoResult::NotSmooth;
        return res;
    }
    DomainSet dom = f.domain();
    for (auto& p : f.pieces) {
        if (p.constant()) {
            res.kind = DiffeoResult::CriticalPoint;
            res.x = p.support.midpoint();
            return res;
        }
        if (p.r > 1) {
            bool in_closure = (p.support.lo_inf || p.support.lo <= p.h) &&
                              (p.support.hi_inf || p.support.hi >= p.h);
            if (in_closure && dom.contains(p.h)) {
                res.kind = DiffeoResult::CriticalPoint;
                res.x = p.h;
                return res;
            }
        }
    }
    if (auto c = injectivity_collision(f)) {
        res.kind = DiffeoResult::NotInjectiveAt;
        res.x = c->first;
        res.y = c->second;
        return res;
    }
    return res;
}

std::string DiffeoResult::str() const {
    switch (kind) {
        case Diffeo:
            return "diffeo";
        case NotSmooth:
            return smooth.str();
        case CriticalPoint:
            return "critical point at " + rat_str(x);
        case NotInjectiveAt:
            return "not injective: " + rat_str(x) + " and " + rat_str(y) + " collide";
    }
    return "?";
}

bool is_continuous(const PiecewiseFn& f) {
    for (size_t i = 0; i + 1 < f.pieces.size(); ++i) {
        const Piece& p = f.pieces[i];
        const Piece& q = f.pieces[i + 1];
        if (!supports_touch(p.support, q.support)) continue;
        Rational b = p.support.hi;
        if (p.eval(b) != q.eval(b)) return false;
    }
    return true;
}

// ---------- probe grid ----------

std::vector<Rational> grid_from_points(const std::vector<Rational>& pts, const DomainSet& dom) {
    std::set<Rational> base(pts.begin(), pts.end());
    for (auto& part : dom.parts()) {
        if (!part.lo_inf) base.insert(part.lo);
        if (!part.hi_inf) base.insert(part.hi);
        if (part.lo_inf) base.insert(part.hi_inf ? Rational(0) : part.hi - 1);
        if (part.hi_inf) base.insert(part.lo_inf ? Rational(0) : part.lo + 1);
    }
    std::vector<Rational> sorted(base.begin(), base.end());
    std::vector<Rational> out;
    for (size_t i = 0; i < sorted.size(); ++i) {
        out.push_back(sorted[i]);
        if (i + 1 < sorted.size()) out.push_back((sorted[i] + sorted[i + 1]) / 2);
    }
    std::vector<Rational> in_dom;
    for (auto& x : out)
        if (dom.contains(x)) in_dom.push_back(x);
    return in_dom;
}

std::vector<Rational> probe_grid(const PiecewiseFn& f) {
    std::vector<Rational> pts;
    for (auto& p : f.pieces) {
        if (!p.support.lo_inf) pts.push_back(p.support.lo);
        if (!p.support.hi_inf) pts.push_back(p.support.hi);
        if (!p.affine()) pts.push_back(p.h);
    }
    return grid_from_points(pts, f.domain());
}

// ---------- text form ----------

std::string piece_str(const Piece& p) {
    return "piece(" + rat_str(p.a) + ", " + (p.parity == Parity::Even ? "even" : "odd") + ", " +
           rat_str(p.h) + ", " + rat_str(p.r) + ", " + rat_str(p.k) + ") on " + p.support.str();
}

Piece parse_piece(const std::string& in) {
    auto fail = [&] { throw MalformedInput("bad piece: '" + in + "'"); };
    auto lp = in.find("piece(");
    auto rp = in.find(')', lp);
    auto on = in.find(" on ", rp);
    if (lp == std::string::npos || rp == std::string::npos || on == std::string::npos) fail();
    std::string args = in.substr(lp + 6, rp - lp - 6);
    std::vector<std::string> parts;
    size_t pos = 0;
    while (true) {
        auto c = args.find(',', pos);
        if (c == std::string::npos) {
            parts.push_back(args.substr(pos));
            break;
        }
        parts.push_back(args.substr(pos, c - pos));
        pos = c + 1;
    }
    if (parts.size() != 5) fail();
    auto trim = [](std::string s) {
        size_t b = s.find_first_not_of(" \t");
        size_t e = s.find_last_not_of(" \t");
        if (b == std::string::npos) return std::string();
        return s.substr(b, e - b + 1);
    };
    std::string eps = trim(parts[1]);
    Parity parity;
    if (eps == "even")
        parity = Parity::Even;
    else if (eps == "odd")
        parity = Parity::Odd;
    else {
        fail();
        return {};
    }
    return make_piece(parse_rational(trim(parts[0])), parity, parse_rational(trim(parts[2])),
                      parse_rational(trim(parts[3])), parse_rational(trim(parts[4])),
                      parse_interval(in.substr(on + 4)));
}

PiecewiseFn parse_piecewise(const std::string& in) {
    std::string s = in;
    if (s.find_first_not_of(" \t") == std::string::npos || s == "empty") return PiecewiseFn{};
    std::vector<Piece> pieces;
    size_t pos = 0;
    while (pos < s.size()) {
        auto sc = s.find(';', pos);
        std::string part = sc == std::string::npos ? s.substr(pos) : s.substr(pos, sc - pos);
        if (part.find_first_not_of(" \t") != std::string::npos) pieces.push_back(parse_piece(part));
        if (sc == std::string::npos) break;
        pos = sc + 1;
    }
    return make_piecewise(pieces);
}

}  // namespace orb
