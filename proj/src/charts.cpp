#include "orbifold/charts.hpp"

#include <algorithm>
#include <map>
#include <mutex>

namespace orb {

namespace {

Rational rmin(const Rational& a, const Rational& b) { return a < b ? a : b; }

std::vector<Rational> sorted_unique(std::vector<Rational> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

// finite support endpoints and non-affine centers
void collect_breakpoints(const PiecewiseFn& f, std::vector<Rational>& out) {
    for (const Piece& p : f.pieces) {
        if (!p.support.lo_inf) out.push_back(p.support.lo);
        if (!p.support.hi_inf) out.push_back(p.support.hi);
        if (!p.affine()) out.push_back(p.h);
    }
}

// fixed points of the affine pieces (a x + k = x); non-affine pieces
// contribute their center as a node
void collect_fixed_points(const PiecewiseFn& g, std::vector<Rational>& out) {
    for (const Piece& p : g.pieces) {
        if (!p.affine()) {
            out.push_back(p.h);
            continue;
        }
        if (p.constant() || p.a == 1) continue;
        Rational x = p.k / (1 - p.a);
        if (p.support.contains(x)) out.push_back(x);
    }
}

Rational boundary_gap(const Interval& v, const Rational& x) {
    std::optional<Rational> d;
    if (!v.lo_inf) d = x - v.lo;
    if (!v.hi_inf) {
        Rational t = v.hi - x;
        if (!d || t < *d) d = t;
    }
    return d ? *d : Rational(1);
}

// largest radius around x keeping (x-r, x+r) inside dom and clear of f's
// breakpoints other than x itself
Rational monotone_radius(const PiecewiseFn& f, const Interval& dom, const Rational& x, Rational r) {
    std::vector<Rational> bps;
    collect_breakpoints(f, bps);
    for (const Rational& b : bps) {
        if (b == x) continue;
        Rational d = rat_abs(b - x);
        if (d < r) r = d;
    }
    return rmin(r, boundary_gap(dom, x));
}

}  // namespace

bool Chart::operator==(const Chart& o) const {
    return id == o.id && domain == o.domain && group == o.group && proj == o.proj &&
           fdom == o.fdom;
}

std::string ValidationReport::str() const {
    if (issues.empty()) return "ok";
    std::string s;
    for (const auto& i : issues) {
        if (!s.empty()) s += "; ";
        s += i;
    }
    return s;
}

const Chart* find_chart(const Atlas& a, const std::string& id) {
    for (const Chart& c : a.charts)
        if (c.id == id) return &c;
    return nullptr;
}

const Chart& need_chart(const Atlas& a, const std::string& id) {
    const Chart* c = find_chart(a, id);
    if (!c) throw MalformedInput("unknown chart id: " + id);
    return *c;
}

std::vector<Rational> chart_probes(const Chart& c) {
    std::vector<Rational> nodes;
    collect_breakpoints(c.proj, nodes);
    for (const PiecewiseFn& g : c.group) {
        collect_breakpoints(g, nodes);
        collect_fixed_points(g, nodes);
    }
    const Interval& V = c.domain;
    std::vector<Rational> inner;
    for (const Rational& x : nodes)
        if ((V.lo_inf || x >= V.lo) && (V.hi_inf || x <= V.hi)) inner.push_back(x);
    if (!V.lo_inf) inner.push_back(V.lo);
    if (!V.hi_inf) inner.push_back(V.hi);
    inner = sorted_unique(std::move(inner));
    if (inner.empty()) inner.push_back(V.midpoint());
    if (V.lo_inf) inner.insert(inner.begin(), inner.front() - 1);
    if (V.hi_inf) inner.push_back(inner.back() + 1);
    std::vector<Rational> probes;
    for (size_t i = 0; i < inner.size(); ++i) {
        if (V.contains(inner[i])) probes.push_back(inner[i]);
        if (i + 1 < inner.size()) {
            Rational m = (inner[i] + inner[i + 1]) / 2;
            if (V.contains(m)) probes.push_back(m);
        }
    }
    return sorted_unique(std::move(probes));
}

ValidationReport validate_chart(const Chart& c, const Space& sp) {
    ValidationReport rep;
    auto issue = [&](const std::string& s) { rep.issues.push_back(s); };

    if (sp.carrier.empty()) issue("carrier is empty");
    if (c.domain.is_point() || !c.domain.is_open_set()) issue("domain is not an open interval");
    DomainSet V(c.domain);

    if (c.group.empty()) issue("group is empty");
    PiecewiseFn ident = identity_on(c.domain);
    auto in_group = [&](const PiecewiseFn& f) {
        return std::find(c.group.begin(), c.group.end(), f) != c.group.end();
    };
    if (!in_group(ident)) issue("group does not contain the identity");
    for (size_t i = 0; i < c.group.size(); ++i)
        for (size_t j = i + 1; j < c.group.size(); ++j)
            if (c.group[i] == c.group[j]) issue("duplicate group element " + c.group[i].str());
    bool group_sane = true;
    for (const PiecewiseFn& g : c.group) {
        if (g.domain() != V) {
            issue("group element " + g.str() + " not defined on all of V");
            group_sane = false;
            continue;
        }
        DiffeoResult dr = is_diffeomorphism(g);
        if (!dr.ok()) {
            issue("group element " + g.str() + " is not a diffeomorphism: " + dr.str());
            group_sane = false;
            continue;
        }
        try {
            if (image(g) != V) issue("group element " + g.str() + " does not map V onto V");
            if (!in_group(invert(g))) issue("group not closed under inversion at " + g.str());
        } catch (const NotInFragment& ex) {
            issue("group element " + g.str() + " left the fragment: " + ex.what());
            group_sane = false;
        }
    }
    if (group_sane)
        for (const PiecewiseFn& g : c.group)
            for (const PiecewiseFn& h : c.group) {
                try {
                    if (!in_group(compose(g, h)))
                        issue("group not closed under composition at " + g.str() + " o " + h.str());
                } catch (const NotInFragment& ex) {
                    issue(std::string("group composition left the fragment: ") + ex.what());
                }
            }

    if (c.proj.domain() != V) issue("proj not defined on exactly V");
    for (const PiecewiseFn& g : c.group) {
        if (g.domain() != V) continue;
        try {
            if (compose(c.proj, g) != c.proj) issue("proj not invariant under " + g.str());
        } catch (const NotInFragment& ex) {
            issue(std::string("proj invariance check left the fragment: ") + ex.what());
        }
    }

    DomainSet img;
    try {
        img = image(c.proj);
        if (!subset(img, sp.carrier)) issue("proj image leaves the carrier");
        // openness of proj(V) in the carrier: the complement may not
        // accumulate onto proj(V) at one of its own open endpoints
        DomainSet rest = set_minus(sp.carrier, img);
        for (const Interval& k : rest.parts()) {
            if (!k.lo_inf && k.lo_open && img.contains(k.lo))
                issue("proj(V) not open in the carrier near " + rat_str(k.lo));
            if (!k.hi_inf && k.hi_open && img.contains(k.hi))
                issue("proj(V) not open in the carrier near " + rat_str(k.hi));
        }

        if (!subset(DomainSet(c.fdom), V)) issue("fundamental domain not inside V");
        PiecewiseFn pf = restrict_fn(c.proj, c.fdom);
        if (auto col = injectivity_collision(pf))
            issue("proj not injective on the fundamental domain: proj(" + rat_str(col->first) +
                  ") == proj(" + rat_str(col->second) + ")");
        if (image(pf) != img) issue("proj(F) != proj(V)");
    } catch (const NotInFragment& ex) {
        issue(std::string("proj image left the fragment: ") + ex.what());
    }

    // fibers must be group orbits (probe-based)
    if (group_sane && c.proj.domain() == V)
        for (const Rational& x : chart_probes(c)) {
            PowerValue q = evaluate(c.proj, x);
            if (!q.is_rational()) continue;
            std::vector<Rational> fib;
            try {
                fib = preimages(c.proj, q.rational());
            } catch (const NotInFragment&) {
                continue;
            }
            for (const Rational& y : fib) {
                bool hit = false;
                for (const PiecewiseFn& g : c.group)
                    if (evaluate(g, x) == PowerValue(y)) {
                        hit = true;
                        break;
                    }
                if (!hit)
                    issue("fiber exceeds the group orbit: proj(" + rat_str(x) + ") == proj(" +
                          rat_str(y) + ") with no group element in between");
            }
        }
    return rep;
}

StabilityResult stable_isotropy(const Interval& S, const Chart& c) {
    StabilityResult res;
    for (const PiecewiseFn& g : c.group) {
        DomainSet img = image_on(g, DomainSet(S));
        if (img == DomainSet(S)) {
            res.isotropy.push_back(g);
            continue;
        }
        DomainSet both = set_intersect(img, DomainSet(S));
        if (both.empty()) continue;
        res.stable = false;
        res.offender = g;
        res.overlap = both.parts().front();
        res.isotropy.clear();
        return res;
    }
    return res;
}

Chart restrict_chart(const Chart& c, const Interval& S) {
    StabilityResult st = stable_isotropy(S, c);
    if (!st.stable) throw NotStableError(st.offender, st.overlap);
    Chart out;
    out.id = c.id + "|" + S.str();
    out.domain = S;
    for (const PiecewiseFn& g : st.isotropy) out.group.push_back(restrict_fn(g, DomainSet(S)));
    out.proj = restrict_fn(c.proj, DomainSet(S));

    // fundamental domain: keep F n S when it still works, otherwise split S
    // at a fixed point of the restricted isotropy
    std::vector<Interval> cands;
    if (auto fs = intersect(c.fdom, S))
        if (!fs->is_point()) cands.push_back(*fs);
    std::vector<Rational> cuts;
    PiecewiseFn ident = identity_on(S);
    for (const PiecewiseFn& g : out.group)
        if (g != ident) collect_fixed_points(g, cuts);
    cuts.push_back(S.midpoint());
    for (const Rational& m : sorted_unique(std::move(cuts))) {
        if (!S.contains(m)) continue;
        Interval right = S;
        right.lo = m;
        right.lo_inf = false;
        right.lo_open = false;
        Interval left = S;
        left.hi = m;
        left.hi_inf = false;
        left.hi_open = false;
        if (!right.is_point()) cands.push_back(right);
        if (!left.is_point()) cands.push_back(left);
    }
    cands.push_back(S);
    DomainSet full = image(out.proj);
    for (const Interval& F : cands) {
        PiecewiseFn pf = restrict_fn(out.proj, DomainSet(F));
        try {
            if (injectivity_collision(pf)) continue;
            if (image(pf) != full) continue;
        } catch (const NotInFragment&) {
            continue;
        }
        out.fdom = F;
        return out;
    }
    throw MalformedInput("no fundamental domain found restricting " + c.id + " to " + S.str());
}

ValidationReport validate_embedding(const Embedding& e, const Atlas& ctx) {
    ValidationReport rep;
    auto issue = [&](const std::string& s) { rep.issues.push_back(s); };
    const Chart* src = find_chart(ctx, e.source);
    const Chart* dst = find_chart(ctx, e.target);
    if (!src) issue("unknown source chart " + e.source);
    if (!dst) issue("unknown target chart " + e.target);
    if (!src || !dst) return rep;

    DomainSet dom = e.map.domain();
    if (dom.empty()) {
        issue("map has empty domain");
        return rep;
    }
    if (!subset(dom, DomainSet(src->domain))) issue("map domain leaves the source chart");
    DiffeoResult dr = is_diffeomorphism(e.map);
    if (!dr.ok()) issue("map is not a diffeomorphism onto its image: " + dr.str());
    try {
        DomainSet img = image(e.map);
        if (!subset(img, DomainSet(dst->domain))) issue("map image leaves the target chart");
        if (compose(dst->proj, e.map) != restrict_fn(src->proj, dom))
            issue("target proj o map != source proj");
        if (dr.ok()) {
            if (img.parts().size() == 1 && !img.parts().front().is_point()) {
                StabilityResult st = stable_isotropy(img.parts().front(), *dst);
                if (!st.stable)
                    issue("image not stable under the target group: " + st.offender.str() +
                          " gives proper overlap " + st.overlap.str());
            } else {
                issue("image is not a single interval");
            }
        }
    } catch (const NotInFragment& ex) {
        issue(std::string("embedding checks left the fragment: ") + ex.what());
    }
    return rep;
}

GroupIso induced_group_iso(const Embedding& e, const Chart& src, const Chart& dst) {
    GroupIso iso;
    for (const PiecewiseFn& g : src.group) {
        PiecewiseFn lhs;
        try {
            lhs = compose(e.map, g);
        } catch (const NotInFragment&) {
            iso.unmatched = g;
            return iso;
        }
        bool found = false;
        for (const PiecewiseFn& h : dst.group) {
            try {
                if (compose(h, e.map) == lhs) {
                    iso.pairs.emplace_back(g, h);
                    found = true;
                    break;
                }
            } catch (const NotInFragment&) {
            }
        }
        if (!found) {
            iso.unmatched = g;
            return iso;
        }
    }
    return iso;
}

std::vector<PiecewiseFn> point_isotropy(const Chart& c, const Rational& x) {
    std::vector<PiecewiseFn> out;
    for (const PiecewiseFn& g : c.group)
        if (evaluate(g, x) == PowerValue(x)) out.push_back(g);
    return out;
}

Interval stable_neighborhood(const Rational& x, const Chart& c) {
    if (!c.domain.contains(x)) throw OutOfDomain(rat_str(x) + " outside chart " + c.id);
    std::optional<Rational> bound;
    auto tighten = [&](const Rational& d) {
        if (!bound || d < *bound) bound = d;
    };
    if (!c.domain.lo_inf) tighten(x - c.domain.lo);
    if (!c.domain.hi_inf) tighten(c.domain.hi - x);
    for (const PiecewiseFn& g : c.group) {
        PowerValue gx = evaluate(g, x);
        if (gx == PowerValue(x) || !gx.is_rational()) continue;
        tighten(rat_abs(gx.rational() - x) / 2);
    }
    Rational r = bound ? *bound / 4 : Rational(1);
    std::vector<PiecewiseFn> gx = point_isotropy(c, x);
    for (int i = 0; i < 64; ++i, r /= 2) {
        Interval S = Interval::open(x - r, x + r);
        StabilityResult st = stable_isotropy(S, c);
        if (st.stable && st.isotropy == gx) return S;
    }
    throw MalformedInput("no stable neighborhood found at " + rat_str(x) + " in " + c.id);
}

namespace {

struct PairOutcome {
    enum Kind { Pass, Fail, Undecided } kind = Undecided;
    Embedding witness;
    std::vector<BranchFailure> failures;
    std::string note;
};

// branch candidates h : nbhd(xf) in `from` -> `to` with to.proj o h =
// from.proj and h(xf) = xt, glued from one-sided inversions of to.proj
PairOutcome probe_fiber_pair(const Chart& from, const Chart& to, const Rational& xf,
                             const Rational& xt) {
    PairOutcome out;
    Rational rf = monotone_radius(from.proj, from.domain, xf, Rational(1));
    Rational rt = monotone_radius(to.proj, to.domain, xt, Rational(1));
    bool fragment_exit = false;

    Interval branches[2] = {Interval::open_closed(xt - rt, xt), Interval::closed_open(xt, xt + rt)};
    auto side_parts = [&](bool left) {
        std::vector<PiecewiseFn> parts;
        for (const Interval& br : branches) {
            PiecewiseFn inv;
            try {
                inv = invert(restrict_fn(to.proj, DomainSet(br)));
            } catch (const NotInFragment&) {
                fragment_exit = true;
                continue;
            } catch (const NotInjective&) {
                continue;
            }
            DomainSet invd = inv.domain();
            Rational r = rf;
            for (int step = 0; step < 60; ++step, r /= 2) {
                Interval side = left ? Interval::open_closed(xf - r, xf)
                                     : Interval::open(xf, xf + r);
                DomainSet j;
                try {
                    j = image_on(from.proj, DomainSet(side));
                } catch (const NotInFragment&) {
                    fragment_exit = true;
                    break;
                }
                if (!subset(j, invd)) {
                    DomainSet meet = set_intersect(j, invd);
                    if (meet.empty() ||
                        (meet.parts().size() == 1 && meet.parts().front().is_point()))
                        break;  // branch lives on the wrong side of the value
                    continue;   // shrink further
                }
                PiecewiseFn part;
                try {
                    part = compose(inv, restrict_fn(from.proj, DomainSet(side)));
                } catch (const NotInFragment&) {
                    fragment_exit = true;
                    break;
                }
                DomainSet d = part.domain();
                if (d.parts().size() != 1) break;
                const Interval& di = d.parts().front();
                bool touches = left ? (!di.hi_inf && di.hi == xf && !di.hi_open)
                                    : (!di.lo_inf && di.lo == xf && di.lo_open);
                if (!touches || di.is_point()) break;
                bool dup = false;
                for (const PiecewiseFn& q : parts) dup = dup || q == part;
                if (!dup) parts.push_back(part);
                break;
            }
        }
        return parts;
    };

    std::vector<PiecewiseFn> ls = side_parts(true), rs = side_parts(false);
    for (const PiecewiseFn& pl : ls)
        for (const PiecewiseFn& pr : rs) {
            std::vector<Piece> pieces = pl.pieces;
            pieces.insert(pieces.end(), pr.pieces.begin(), pr.pieces.end());
            PiecewiseFn h;
            try {
                h = make_piecewise(std::move(pieces));
            } catch (const std::exception&) {
                continue;
            }
            DomainSet d = h.domain();
            if (d.parts().size() != 1) continue;
            Interval di = d.parts().front();
            if (!(di.lo < xf && xf < di.hi)) continue;
            if (!di.lo_open || !di.hi_open)
                h = restrict_fn(h, DomainSet(Interval::open(di.lo, di.hi)));
            try {
                if (evaluate(h, xf) != PowerValue(xt)) continue;
                if (compose(to.proj, h) != restrict_fn(from.proj, h.domain())) continue;
            } catch (const NotInFragment&) {
                fragment_exit = true;
                continue;
            }
            DiffeoResult dr = is_diffeomorphism(h);
            if (dr.ok()) {
                out.kind = PairOutcome::Pass;
                out.witness = Embedding{from.id, to.id, h};
                return out;
            }
            bool dup = false;
            for (const BranchFailure& bf : out.failures) dup = dup || bf.candidate == h;
            if (!dup) out.failures.push_back({h, dr});
        }
    if (!out.failures.empty() && !fragment_exit) {
        out.kind = PairOutcome::Fail;
        return out;
    }
    out.kind = PairOutcome::Undecided;
    out.note = fragment_exit ? "branch enumeration left the fragment"
                             : "no branch candidate reaches the fiber point";
    return out;
}

CompatResult charts_compatible_impl(const Chart& c1, const Chart& c2) {
    CompatResult res;
    std::optional<std::pair<FiberPair, std::string>> unknown;
    // scan candidates mapping `from` into `to`; from_is_c2 fixes how a fiber
    // pair reads as (x1 in c1, x2 in c2)
    auto scan = [&](const Chart& from, const Chart& to, bool from_is_c2) {
        for (const Rational& xf : chart_probes(from)) {
            auto fp_of = [&](const Rational& xt) {
                return from_is_c2 ? FiberPair{c1.id, c2.id, xt, xf}
                                  : FiberPair{c1.id, c2.id, xf, xt};
            };
            PowerValue qv = evaluate(from.proj, xf);
            if (!qv.is_rational()) {
                if (!unknown) unknown = {fp_of(0), "irrational projection value at probe " + rat_str(xf)};
                continue;
            }
            std::vector<Rational> fib;
            try {
                fib = preimages(to.proj, qv.rational());
            } catch (const NotInFragment& ex) {
                if (!unknown) unknown = {fp_of(0), std::string("fiber enumeration left the fragment: ") + ex.what()};
                continue;
            }
            for (const Rational& xt : fib) {
                PairOutcome po = probe_fiber_pair(from, to, xf, xt);
                if (po.kind == PairOutcome::Pass) {
                    res.witnesses.push_back(po.witness);
                } else if (po.kind == PairOutcome::Fail) {
                    res.verdict = Compat::Incompatible;
                    res.at = fp_of(xt);
                    res.failures = po.failures;
                    res.witnesses.clear();
                    return true;
                } else if (!unknown) {
                    unknown = {fp_of(xt), po.note};
                }
            }
        }
        return false;
    };
    if (scan(c2, c1, true)) return res;
    if (scan(c1, c2, false)) return res;
    if (unknown) {
        res.verdict = Compat::Unknown;
        res.at = unknown->first;
        res.note = unknown->second;
        res.witnesses.clear();
        return res;
    }
    res.verdict = Compat::Compatible;
    return res;
}

}  // namespace

CompatResult charts_compatible(const Chart& c1, const Chart& c2) {
    static std::map<std::string, CompatResult> cache;
    static std::mutex cache_mu;
    std::string key = chart_signature(c1) + "##" + chart_signature(c2);
    {
        std::lock_guard<std::mutex> lock(cache_mu);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    CompatResult res = charts_compatible_impl(c1, c2);
    std::lock_guard<std::mutex> lock(cache_mu);
    cache.emplace(std::move(key), res);
    return res;
}

std::vector<Embedding> atlas_transitions(const Atlas& a) {
    std::vector<Embedding> out;
    for (const Chart& c : a.charts)
        for (const PiecewiseFn& g : c.group) out.push_back({c.id, c.id, g});
    for (const Embedding& w : a.witnesses) out.push_back(w);
    return out;
}

namespace {

ValidationReport quasi_pseudogroup_report_impl(const Atlas& a,
                                               const std::vector<Embedding>& elems) {
    ValidationReport rep;
    auto issue = [&](const std::string& s) { rep.issues.push_back(s); };
    for (const Embedding& f : elems) {
        if (!find_chart(a, f.source) || !find_chart(a, f.target)) {
            issue("unresolved chart id on element " + f.source + "->" + f.target);
            continue;
        }
        DiffeoResult dr = is_diffeomorphism(f.map);
        if (!dr.ok()) {
            issue("element " + f.map.str() + " is not a diffeomorphism: " + dr.str());
            continue;
        }
        PiecewiseFn finv;
        try {
            finv = invert(f.map);
        } catch (const NotInFragment& ex) {
            issue("cannot invert element " + f.map.str() + ": " + ex.what());
            continue;
        }
        for (const Rational& x : probe_grid(f.map)) {
            PowerValue yv = evaluate(f.map, x);
            if (!yv.is_rational()) continue;
            Rational y = yv.rational();
            bool inv_hit = false;
            for (const Embedding& g : elems) {
                if (g.source != f.target || g.target != f.source) continue;
                if (!g.map.domain().contains(y)) continue;
                if (germ_at(g.map, y) == germ_at(finv, y)) {
                    inv_hit = true;
                    break;
                }
            }
            if (!inv_hit)
                issue("no element inverts " + f.map.str() + " near " + rat_str(y));
            for (const Embedding& g : elems) {
                if (g.source != f.target) continue;
                if (!g.map.domain().contains(y)) continue;
                PiecewiseFn comp;
                try {
                    comp = compose(g.map, f.map);
                } catch (const NotInFragment& ex) {
                    issue(std::string("composition left the fragment: ") + ex.what());
                    continue;
                }
                if (!comp.domain().contains(x)) continue;
                bool hit = false;
                for (const Embedding& h : elems) {
                    if (h.source != f.source || h.target != g.target) continue;
                    if (!h.map.domain().contains(x)) continue;
                    if (germ_at(h.map, x) == germ_at(comp, x)) {
                        hit = true;
                        break;
                    }
                }
                if (!hit)
                    issue("no element matches " + g.map.str() + " o " + f.map.str() + " near " +
                          rat_str(x));
            }
        }
    }
    return rep;
}

}  // namespace

std::string chart_signature(const Chart& c) {
    std::string s = c.id;
    s += ';';
    s += c.domain.str();
    s += ';';
    for (const PiecewiseFn& g : c.group) {
        s += g.str();
        s += ',';
    }
    s += ';';
    s += c.proj.str();
    s += ';';
    s += c.fdom.str();
    return s;
}

std::string atlas_signature(const Atlas& a) {
    std::string s = a.space.carrier.str();
    for (const Chart& c : a.charts) {
        s += '|';
        s += chart_signature(c);
    }
    for (const Embedding& w : a.witnesses) {
        s += '|';
        s += w.source;
        s += '>';
        s += w.target;
        s += ':';
        s += w.map.str();
    }
    return s;
}

ValidationReport quasi_pseudogroup_report(const Atlas& a, const std::vector<Embedding>& elems) {
    static std::map<std::string, ValidationReport> cache;
    static std::mutex cache_mu;
    std::string key = atlas_signature(a);
    key += '#';
    for (const Embedding& e : elems) {
        key += e.source;
        key += '>';
        key += e.target;
        key += ':';
        key += e.map.str();
        key += '|';
    }
    {
        std::lock_guard<std::mutex> lock(cache_mu);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    ValidationReport rep = quasi_pseudogroup_report_impl(a, elems);
    std::lock_guard<std::mutex> lock(cache_mu);
    cache.emplace(std::move(key), rep);
    return rep;
}

namespace {

// some g_j o w o g_i built from one declared witness links x in ci to y in cj
bool witness_connects(const Atlas& a, const Chart& ci, const Chart& cj, const Rational& x,
                      const Rational& y) {
    std::vector<PiecewiseFn> ws;
    for (const Embedding& w : a.witnesses) {
        if (w.source == ci.id && w.target == cj.id) ws.push_back(w.map);
        if (w.source == cj.id && w.target == ci.id) {
            try {
                ws.push_back(invert(w.map));
            } catch (const std::exception&) {
            }
        }
    }
    for (const PiecewiseFn& gi : ci.group) {
        PowerValue x1 = evaluate(gi, x);
        if (!x1.is_rational()) continue;
        for (const PiecewiseFn& wm : ws) {
            if (!wm.domain().contains(x1.rational())) continue;
            PowerValue x2 = evaluate(wm, x1.rational());
            if (!x2.is_rational()) continue;
            for (const PiecewiseFn& gj : cj.group)
                if (evaluate(gj, x2.rational()) == PowerValue(y)) return true;
        }
    }
    return false;
}

}  // namespace

namespace {

ValidationReport validate_atlas_impl(const Atlas& a) {
    ValidationReport rep;
    auto issue = [&](const std::string& s) { rep.issues.push_back(s); };
    if (a.charts.empty()) issue("atlas has no charts");
    for (size_t i = 0; i < a.charts.size(); ++i)
        for (size_t j = i + 1; j < a.charts.size(); ++j)
            if (a.charts[i].id == a.charts[j].id) issue("duplicate chart id " + a.charts[i].id);
    for (const Chart& c : a.charts) {
        ValidationReport cr = validate_chart(c, a.space);
        for (const std::string& s : cr.issues) issue("chart " + c.id + ": " + s);
    }
    if (!rep.ok()) return rep;

    DomainSet cover;
    for (const Chart& c : a.charts) cover = set_union(cover, image(c.proj));
    if (cover != a.space.carrier)
        issue("charts do not cover the space: " + cover.str() + " != " + a.space.carrier.str());

    for (const Embedding& w : a.witnesses) {
        ValidationReport er = validate_embedding(w, a);
        for (const std::string& s : er.issues)
            issue("witness " + w.source + "->" + w.target + ": " + s);
    }

    for (size_t i = 0; i < a.charts.size(); ++i)
        for (size_t j = i + 1; j < a.charts.size(); ++j) {
            CompatResult cr = charts_compatible(a.charts[i], a.charts[j]);
            if (cr.verdict == Compat::Incompatible)
                issue("charts " + a.charts[i].id + " and " + a.charts[j].id +
                      " are incompatible at (" + rat_str(cr.at.x1) + ", " + rat_str(cr.at.x2) +
                      ")");
            else if (cr.verdict == Compat::Unknown)
                issue("compatibility of " + a.charts[i].id + " and " + a.charts[j].id +
                      " unknown: " + cr.note);
        }

    ValidationReport qr = quasi_pseudogroup_report(a, atlas_transitions(a));
    for (const std::string& s : qr.issues) issue("transitions: " + s);

    // generation: every cross-chart probe fiber pair is reached by a witness
    for (size_t i = 0; i < a.charts.size(); ++i)
        for (size_t j = 0; j < a.charts.size(); ++j) {
            if (i == j) continue;
            const Chart& ci = a.charts[i];
            const Chart& cj = a.charts[j];
            for (const Rational& x : chart_probes(ci)) {
                PowerValue q = evaluate(ci.proj, x);
                if (!q.is_rational()) continue;
                std::vector<Rational> fib;
                try {
                    fib = preimages(cj.proj, q.rational());
                } catch (const NotInFragment&) {
                    continue;
                }
                for (const Rational& y : fib)
                    if (!witness_connects(a, ci, cj, x, y))
                        issue("generation unknown: no witness connects " + ci.id + ":" +
                              rat_str(x) + " to " + cj.id + ":" + rat_str(y));
            }
        }
    return rep;
}

}  // namespace

ValidationReport validate_atlas(const Atlas& a) {
    static std::map<std::string, ValidationReport> cache;
    static std::mutex cache_mu;
    std::string key = atlas_signature(a);
    {
        std::lock_guard<std::mutex> lock(cache_mu);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    ValidationReport rep = validate_atlas_impl(a);
    std::lock_guard<std::mutex> lock(cache_mu);
    cache.emplace(std::move(key), rep);
    return rep;
}

}  // namespace orb
