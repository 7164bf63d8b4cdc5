// acceptance gate: one self-contained check per shipped guarantee, one line of
// output each.  exits 0 iff every criterion passes.
#include "orbifold/maps.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

using namespace orb;

namespace {

void check(bool ok, const std::string& what) {
    if (!ok) throw std::runtime_error(what);
}

PiecewiseFn pw(Piece p) { return make_piecewise({std::move(p)}); }

PiecewiseFn neg_id_on(const Interval& iv) {
    return pw(make_piece(-1, Parity::Odd, 0, 1, 0, iv));
}

PiecewiseFn abs_on(const Interval& iv) { return pw(make_piece(1, Parity::Even, 0, 1, 0, iv)); }

PiecewiseFn square_on(const Interval& iv) { return pw(make_piece(1, Parity::Even, 0, 2, 0, iv)); }

Space unit_space() { return Space{DomainSet(Interval::closed_open(0, 1))}; }

Chart make_v1() {
    Interval V = Interval::open(-1, 1);
    return Chart{"V1", V, {identity_on(V), neg_id_on(V)}, abs_on(V), Interval::closed_open(0, 1)};
}

Chart make_v2() {
    Interval V = Interval::open(-1, 1);
    return Chart{"V2", V, {identity_on(V), neg_id_on(V)}, square_on(V),
                 Interval::closed_open(0, 1)};
}

Atlas atlas_v1() {
    Atlas a;
    a.charts = {make_v1()};
    a.space = unit_space();
    return a;
}

Atlas atlas_v2() {
    Atlas a;
    a.charts = {make_v2()};
    a.space = unit_space();
    return a;
}

bool has_issue(const ValidationReport& r, const std::string& needle) {
    for (const auto& s : r.issues)
        if (s.find(needle) != std::string::npos) return true;
    return false;
}

MapRep zero_rep(bool twist) {
    Interval V = Interval::open(-1, 1);
    MapRep r;
    r.f = constant_on(Interval::closed_open(0, 1), 0);
    r.lifts = {{"V1", "V1", constant_on(V, 0)}};
    r.P.elements = {Embedding{"V1", "V1", identity_on(V)}, Embedding{"V1", "V1", neg_id_on(V)}};
    r.nu = {{r.P.elements[0], Embedding{"V1", "V1", identity_on(V)}},
            {r.P.elements[1], Embedding{"V1", "V1", twist ? neg_id_on(V) : identity_on(V)}}};
    return r;
}

ChartedMap zero1_map() { return {atlas_v1(), atlas_v1(), zero_rep(false)}; }
ChartedMap zero2_map() { return {atlas_v1(), atlas_v1(), zero_rep(true)}; }

MapRep square_rep() {
    Interval V = Interval::open(-1, 1);
    MapRep r;
    r.f = identity_on(Interval::closed_open(0, 1));
    r.lifts = {{"V2", "V1", square_on(V)}};
    r.P.elements = {Embedding{"V2", "V2", identity_on(V)}, Embedding{"V2", "V2", neg_id_on(V)}};
    r.nu = {{r.P.elements[0], Embedding{"V1", "V1", identity_on(V)}},
            {r.P.elements[1], Embedding{"V1", "V1", identity_on(V)}}};
    return r;
}

ChartedMap square_map() { return {atlas_v2(), atlas_v1(), square_rep()}; }

Atlas a3() {
    return restriction_atlas(make_v1(),
                             {Interval::open(Rational(-1, 2), Rational(1, 2)),
                              Interval::open(-1, 1)},
                             unit_space());
}

Atlas a5() {
    return restriction_atlas(make_v1(),
                             {Interval::open(Rational(-3, 4), Rational(3, 4)),
                              Interval::open(Rational(1, 4), 1)},
                             unit_space());
}

Atlas atlas_two_chart() {
    Interval va = Interval::open(0, Rational(3, 2));
    Interval vb = Interval::open(Rational(1, 2), 2);
    Interval ov = Interval::open(Rational(1, 2), Rational(3, 2));
    Atlas a;
    a.charts = {Chart{"A", va, {identity_on(va)}, identity_on(va), va},
                Chart{"B", vb, {identity_on(vb)}, identity_on(vb), vb}};
    a.witnesses = {Embedding{"A", "B", identity_on(ov)}, Embedding{"B", "A", identity_on(ov)}};
    a.space = Space{DomainSet(Interval::open(0, 2))};
    return a;
}

ChartedMap eps_id() { return identity_map(atlas_v1()); }

ChartedMap eps_neg() {
    Atlas v = atlas_v1();
    std::vector<LocalLift> L = {{"V1", "V1", neg_id_on(Interval::open(-1, 1))}};
    return {v, v, complete_identity_lift(L, v, v)};
}

ChartedMap incl_lift(const Atlas& w, bool flip0, bool flip1) {
    Atlas v = atlas_v1();
    std::vector<LocalLift> L;
    const Interval& d0 = w.charts[0].domain;
    const Interval& d1 = w.charts[1].domain;
    L.push_back({w.charts[0].id, "V1", flip0 ? neg_id_on(d0) : identity_on(d0)});
    L.push_back({w.charts[1].id, "V1", flip1 ? neg_id_on(d1) : identity_on(d1)});
    return {w, v, complete_identity_lift(L, w, v)};
}

ChartedMap eps3() { return incl_lift(a3(), false, false); }
ChartedMap eps4() { return incl_lift(a3(), true, true); }
ChartedMap eps5() { return incl_lift(a5(), false, false); }

std::vector<ChartedMap> five_lifts() { return {eps_id(), eps_neg(), eps3(), eps4(), eps5()}; }

// ---------------------------------------------------------------------------

void c1_incompatibility() {
    CompatResult cr = charts_compatible(make_v1(), make_v2());
    check(cr.verdict == Compat::Incompatible, "verdict is not Incompatible");
    check(cr.at.x1 == 0 && cr.at.x2 == 0, "failure is not located at the origin");
    check(cr.failures.size() == 4, "expected exactly four rejected branches");

    Interval V = Interval::open(-1, 1);
    std::vector<PiecewiseFn> expected = {
        pw(make_piece(1, Parity::Even, 0, 2, 0, V)), pw(make_piece(-1, Parity::Even, 0, 2, 0, V)),
        pw(make_piece(1, Parity::Odd, 0, 2, 0, V)), pw(make_piece(-1, Parity::Odd, 0, 2, 0, V))};
    int critical = 0, rough = 0;
    for (const BranchFailure& bf : cr.failures) {
        bool known = false;
        for (const auto& e : expected) known = known || bf.candidate == e;
        check(known, "unexpected branch candidate " + bf.candidate.str());
        if (bf.why.kind == DiffeoResult::CriticalPoint) {
            ++critical;
            check(bf.why.x == 0, "critical point is not at 0");
        } else if (bf.why.kind == DiffeoResult::NotSmooth) {
            ++rough;
            check(bf.why.smooth.point == 0, "smoothness defect is not at 0");
            check(bf.why.smooth.order == 2, "smoothness defect is not at order 2");
        } else {
            check(false, "branch rejected for an unexpected reason");
        }
    }
    check(critical == 2, "expected two critical-point rejections");
    check(rough == 2, "expected two smoothness rejections");
}

void c2_arrow_table() {
    MarkedAtlasGroupoid g1 = build_groupoid(atlas_v1());
    Interval V = Interval::open(-1, 1);

    ArrowSearch a00 = arrows_between(g1, {"V1", 0}, {"V1", 0});
    check(a00.arrows.size() == 2, "|arrows(0,0)| != 2");
    check(a00.saturated, "arrows(0,0) not saturated");
    bool saw_id = false, saw_neg = false;
    for (const GermArrow& ar : a00.arrows) {
        saw_id = saw_id || ar.germ == germ_at(identity_on(V), 0);
        saw_neg = saw_neg || ar.germ == germ_at(neg_id_on(V), 0);
    }
    check(saw_id && saw_neg, "origin vertex group misses a germ");

    for (const Rational& x :
         {Rational(1, 2), Rational(-1, 2), Rational(1, 4), Rational(-1, 4)}) {
        ArrowSearch self = arrows_between(g1, {"V1", x}, {"V1", x});
        check(self.arrows.size() == 1, "|arrows(x,x)| != 1 at " + rat_str(x));
        check(self.saturated && self.arrows[0].germ.identity(),
              "vertex arrow at " + rat_str(x) + " is not the saturated identity");
        ArrowSearch across = arrows_between(g1, {"V1", x}, {"V1", -x});
        check(across.arrows.size() == 1, "|arrows(x,-x)| != 1 at " + rat_str(x));
        check(across.saturated, "arrows(x,-x) not saturated at " + rat_str(x));
    }

    ArrowSearch none = arrows_between(g1, {"V1", Rational(1, 2)}, {"V1", Rational(1, 4)});
    check(none.arrows.empty(), "arrows(1/2,1/4) should be empty");
    check(none.saturated, "empty search is not saturated");
}

void c3_markings_differ() {
    MarkedAtlasGroupoid g1 = build_groupoid(atlas_v1());
    MarkedAtlasGroupoid g2 = build_groupoid(atlas_v2());
    check(marking_value(g1, {"V1", Rational(1, 2)}) == Rational(1, 2),
          "|x| marking at 1/2 is not 1/2");
    check(marking_value(g2, {"V2", Rational(1, 2)}) == Rational(1, 4),
          "x^2 marking at 1/2 is not 1/4");
    check(serialize_groupoid(g1, true) != serialize_groupoid(g2, true),
          "marked serializations should differ");
    check(serialize_groupoid(g1, false) == serialize_groupoid(g2, false),
          "unmarked serializations should agree");
}

void c4_no_root_lift() {
    Chart v1 = make_v1();
    Interval V = Interval::open(-1, 1);
    PiecewiseFn root =
        pw(make_piece(1, Parity::Odd, 0, Rational(1, 2), 0, Interval::closed_open(0, 1)));
    std::vector<PiecewiseFn> cands = {
        pw(make_piece(1, Parity::Even, 0, Rational(1, 2), 0, V)),
        pw(make_piece(-1, Parity::Even, 0, Rational(1, 2), 0, V)),
        pw(make_piece(1, Parity::Odd, 0, Rational(1, 2), 0, V)),
        pw(make_piece(-1, Parity::Odd, 0, Rational(1, 2), 0, V))};
    for (const auto& c : cands) {
        ValidationReport rep = verify_local_lift({"V1", "V1", c}, root, v1, v1);
        check(!rep.ok(), "candidate " + c.str() + " was accepted");
        check(has_issue(rep, "not smooth") && has_issue(rep, "0"),
              "candidate " + c.str() + " rejected for the wrong reason");
    }
}

void c5_two_homs() {
    Atlas v1a = atlas_v1();
    check(validate_representative(zero_rep(false), v1a, v1a).ok(), "plain rep fails validation");
    check(validate_representative(zero_rep(true), v1a, v1a).ok(), "twisted rep fails validation");

    MarkedAtlasGroupoid g1 = build_groupoid(v1a);
    GroupoidHom h1 = to_hom(zero_rep(false), v1a, v1a);
    GroupoidHom h2 = to_hom(zero_rep(true), v1a, v1a);
    check(validate_hom(h1, g1, g1).ok(), "plain hom fails validation");
    check(validate_hom(h2, g1, g1).ok(), "twisted hom fails validation");

    Interval V = Interval::open(-1, 1);
    Germ want1 = germ_at(identity_on(V), 0);
    Germ want2 = germ_at(neg_id_on(V), 0);
    for (const Rational& x : probe_grid(neg_id_on(V))) {
        GermArrow refl{{"V1", x}, {"V1", -x}, neg_id_on(V), germ_at(neg_id_on(V), x)};
        Germ p = hom_arrow_image(h1, g1, refl);
        Germ q = hom_arrow_image(h2, g1, refl);
        check(p == want1, "plain hom moves the reflection germ at " + rat_str(x));
        check(q == want2, "twisted hom drops the reflection germ at " + rat_str(x));
        check(p != q, "hom images coincide at probe " + rat_str(x));
    }
    check(!representatives_equivalent(zero1_map(), zero2_map()),
          "the two representatives must not be equivalent");
}

void c6_round_trips() {
    std::vector<ChartedMap> maps = {zero1_map(), zero2_map(), square_map(), eps_id(),
                                    eps_neg(),   eps3(),      eps4(),       eps5()};
    for (const auto& m : maps) {
        MarkedAtlasGroupoid src = build_groupoid(m.dom);
        MarkedAtlasGroupoid dst = build_groupoid(m.rng);
        GroupoidHom h = to_hom(m);
        MapRep back = from_hom(h, src, dst);
        check(back.f == m.rep.f, "carrier map changed across the round trip");
        check(reps_equivalent(m.rep, back, m.dom, m.rng),
              "rep -> hom -> rep left the equivalence class");

        GroupoidHom h2 = to_hom(back, m.dom, m.rng);
        check(h2.nu.size() == h.nu.size(), "generator rule count changed");
        for (size_t k = 0; k < h.nu.size(); ++k) {
            check(h2.nu[k].gen == h.nu[k].gen, "generator order changed");
            const HomObjComponent* oc = hom_component(h, h.nu[k].gen.source);
            check(oc != nullptr, "missing object component");
            for (const Rational& x : probe_grid(h.nu[k].gen.map)) {
                auto fx = evaluate(oc->fn, x).as_rational();
                if (!fx) continue;
                check(germ_at(h.nu[k].image.map, *fx) == germ_at(h2.nu[k].image.map, *fx),
                      "hom -> rep -> hom changed a generator germ");
            }
        }
    }
}

void c7_recover_atlases() {
    std::vector<Atlas> fixtures = {atlas_v1(), atlas_v2(), a3(), a5(), atlas_two_chart()};
    for (const Atlas& a : fixtures) {
        std::string s = serialize_groupoid(build_groupoid(a));
        Atlas r = recover_atlas(s);
        check(validate_atlas(r).ok(), "recovered atlas fails validation");
        check(serialize_groupoid(build_groupoid(r)) == s,
              "rebuild after recovery is not byte-identical");
    }
}

void c8_unit_weak_equivalences() {
    MarkedAtlasGroupoid gv1 = build_groupoid(atlas_v1());
    for (const auto& m : five_lifts()) {
        MarkedAtlasGroupoid src = build_groupoid(m.dom);
        GroupoidHom h = to_hom(m);
        bool full = is_unit_weak_equivalence(h, src, gv1);
        bool probe = uwe_structural_probe(h, src, gv1);
        check(full, "identity lift not recognized as unit weak equivalence");
        check(probe == full, "structural probe disagrees on an identity lift");
    }

    MarkedAtlasGroupoid g2 = build_groupoid(atlas_v2());
    GroupoidHom hs = to_hom(square_map());
    bool full_s = is_unit_weak_equivalence(hs, g2, gv1);
    bool probe_s = uwe_structural_probe(hs, g2, gv1);
    check(!full_s, "square lift wrongly accepted");
    check(probe_s == full_s, "structural probe disagrees on the square lift");

    GroupoidHom hz = to_hom(zero1_map());
    bool full_z = is_unit_weak_equivalence(hz, gv1, gv1);
    bool probe_z = uwe_structural_probe(hz, gv1, gv1);
    check(!full_z, "constant map wrongly accepted");
    check(probe_z == full_z, "structural probe disagrees on the constant map");
}

void c9_identity_class() {
    std::vector<ChartedMap> lifts = five_lifts();
    for (size_t i = 0; i < lifts.size(); ++i)
        for (size_t j = 0; j < lifts.size(); ++j) {
            auto w = common_refinement_witness(lifts[i], lifts[j]);
            check(w.has_value(), "no witness for pair (" + std::to_string(i) + "," +
                                     std::to_string(j) + ")");
            check(verify_equivalence_witness(lifts[i], lifts[j], *w),
                  "witness for pair (" + std::to_string(i) + "," + std::to_string(j) +
                      ") fails verification");
        }
}

void c10_refutation() {
    MarkedAtlasGroupoid gv1 = build_groupoid(atlas_v1());
    GroupoidHom hphi = to_hom(zero1_map());
    GroupoidHom hpsi = to_hom(zero2_map());

    auto cert = refute_hom_equivalence(hphi, gv1, gv1, hpsi, gv1, gv1);
    check(cert.has_value(), "twisted pair not refuted");
    check(cert->at1.x == 0 && cert->at2.x == 0, "certificate is not at the origin");
    check(cert->marking == 0, "certificate marking is not 0");
    check(cert->image1 == 1 && cert->image2 == 2, "isotropy image sizes are not 1 vs 2");

    auto rev = refute_hom_equivalence(hpsi, gv1, gv1, hphi, gv1, gv1);
    check(rev.has_value() && rev->image1 == 2 && rev->image2 == 1,
          "reversed refutation is not 2 vs 1");

    check(!refute_hom_equivalence(hphi, gv1, gv1, hphi, gv1, gv1).has_value(),
          "a hom was refuted against itself");

    // soundness: refutation stays silent across randomized witness-connected pairs
    std::mt19937 rng(20260815);
    std::vector<ChartedMap> ms;
    std::vector<GroupoidHom> hs;
    std::vector<MarkedAtlasGroupoid> srcs;
    for (int t = 0; t < 12; ++t) {
        Rational r(3 + (int)(rng() % 5), 8);
        Atlas w = restriction_atlas(make_v1(),
                                    {Interval::open(-r, r), Interval::open(-1, 1)},
                                    unit_space());
        ChartedMap m = incl_lift(w, rng() % 2 == 0, rng() % 2 == 0);
        check(is_identity_lift(m), "generated structure is not an identity lift");
        ms.push_back(m);
        hs.push_back(to_hom(m));
        srcs.push_back(build_groupoid(w));
    }
    // every structure carries a verified witness to the first, so any pair of
    // them is witness-connected through it
    for (size_t k = 1; k < ms.size(); ++k) {
        auto w = common_refinement_witness(ms[0], ms[k]);
        check(w.has_value(), "no witness to anchor structure " + std::to_string(k));
        check(verify_equivalence_witness(ms[0], ms[k], *w),
              "anchor witness " + std::to_string(k) + " fails verification");
    }
    for (int t = 0; t < 100; ++t) {
        size_t i = rng() % ms.size(), j = rng() % ms.size();
        check(!refute_hom_equivalence(hs[i], srcs[i], gv1, hs[j], srcs[j], gv1).has_value(),
              "witness-connected pair (" + std::to_string(i) + "," + std::to_string(j) +
                  ") was refuted");
    }
}

// randomized reflection structures for the groupoid law suite: a base chart,
// optionally a concentric window and/or a translated conjugate copy
Atlas random_reflection_atlas(std::mt19937& rng, int shape, std::vector<ObjPoint>* pts) {
    std::uniform_int_distribution<int> pick_b(1, 4), pick_r(1, 3), pick_t(1, 3);
    Rational b(pick_b(rng), rng() % 2 ? 2 : 1);
    int r = pick_r(rng);
    Interval V = Interval::open(-b, b);
    Chart base{"R", V, {identity_on(V), neg_id_on(V)},
               pw(make_piece(1, Parity::Even, 0, r, 0, V)), Interval::closed_open(0, b)};
    Space sp{DomainSet(Interval::closed_open(0, rat_pow(b, r)))};

    Atlas a;
    a.space = sp;
    auto sample = [&](const std::string& chart, const Rational& center) {
        pts->push_back({chart, center});
        pts->push_back({chart, center + b / 2});
        pts->push_back({chart, center - b / 4});
    };

    if (shape == 1) {
        // base chart plus a concentric window, glued by generated inclusions
        a = restriction_atlas(base, {Interval::open(-b / 2, b / 2), V}, sp);
        pts->push_back({a.charts[0].id, 0});
        pts->push_back({a.charts[0].id, b / 4});
        pts->push_back({a.charts[0].id, -b / 4});
        sample(a.charts[1].id, 0);
        return a;
    }

    a.charts = {base};
    sample("R", 0);
    if (shape == 0) return a;

    // translated copy: same structure conjugated by x -> x + t
    Rational t(pick_t(rng));
    Interval S = Interval::open(t - b, t + b);
    PiecewiseFn refl_t = pw(make_piece(-1, Parity::Odd, 0, 1, 2 * t, S));
    Chart conj{"S", S, {identity_on(S), refl_t},
               pw(make_piece(1, Parity::Even, t, r, 0, S)),
               Interval::closed_open(t, t + b)};
    a.charts.push_back(conj);
    a.witnesses.push_back(Embedding{"S", "R", pw(make_piece(1, Parity::Odd, 0, 1, -t, S))});
    a.witnesses.push_back(Embedding{"S", "R", pw(make_piece(-1, Parity::Odd, 0, 1, t, S))});
    a.witnesses.push_back(Embedding{"R", "S", pw(make_piece(1, Parity::Odd, 0, 1, t, V))});
    a.witnesses.push_back(Embedding{"R", "S", pw(make_piece(-1, Parity::Odd, 0, 1, t, V))});
    sample("S", t);

    if (shape == 3) {
        Interval W = Interval::open(-b / 2, b / 2);
        Chart win{"W", W, {identity_on(W), neg_id_on(W)},
                  pw(make_piece(1, Parity::Even, 0, r, 0, W)), Interval::closed_open(0, b / 2)};
        a.charts.push_back(win);
        a.witnesses.push_back(Embedding{"W", "R", identity_on(W)});
        a.witnesses.push_back(Embedding{"W", "R", neg_id_on(W)});
        a.witnesses.push_back(Embedding{"R", "W", identity_on(W)});
        a.witnesses.push_back(Embedding{"R", "W", neg_id_on(W)});
        Interval WS = Interval::open(t - b / 2, t + b / 2);
        a.witnesses.push_back(Embedding{"W", "S", pw(make_piece(1, Parity::Odd, 0, 1, t, W))});
        a.witnesses.push_back(Embedding{"W", "S", pw(make_piece(-1, Parity::Odd, 0, 1, t, W))});
        a.witnesses.push_back(Embedding{"S", "W", pw(make_piece(1, Parity::Odd, 0, 1, -t, WS))});
        a.witnesses.push_back(Embedding{"S", "W", pw(make_piece(-1, Parity::Odd, 0, 1, t, WS))});
        pts->push_back({"W", 0});
        pts->push_back({"W", b / 4});
        pts->push_back({"W", -b / 4});
    }
    return a;
}

void c11_groupoid_laws() {
    std::mt19937 rng(20260816);
    for (int trial = 0; trial < 12; ++trial) {
        std::vector<ObjPoint> pts;
        Atlas a = random_reflection_atlas(rng, trial % 4, &pts);
        ValidationReport vr = validate_atlas(a);
        check(vr.ok(), "random atlas fails validation: " +
                           (vr.issues.empty() ? std::string("?") : vr.issues.front()));
        MarkedAtlasGroupoid g = build_groupoid(a);

        // arrow pool over all sampled point pairs
        std::vector<GermArrow> pool;
        for (const ObjPoint& p : pts)
            for (const ObjPoint& q : pts) {
                ArrowSearch s = arrows_between(g, p, q);
                check(s.saturated, "arrow search not saturated at " + p.str());
                pool.insert(pool.end(), s.arrows.begin(), s.arrows.end());
            }
        check(!pool.empty(), "no arrows found on sampled points");

        // (i) a unit arrow sits at every sampled object and stays there
        for (const ObjPoint& p : pts) {
            GermArrow u = unit_arrow(g, p);
            check(u.source == p && u.target == p, "unit arrow moves its object");
            check(u.germ.identity(), "unit arrow carries a non-identity germ");
        }
        // brute-force isotropy oracle: vertex arrows match the chart group
        for (const ObjPoint& p : pts) {
            const Chart* c = find_chart(a, p.chart);
            check(c != nullptr, "sampled point lost its chart");
            size_t want = point_isotropy(*c, p.x).size();
            check(arrows_between(g, p, p).arrows.size() == want,
                  "vertex arrow count differs from the chart-group oracle at " + p.str());
        }

        int triples = 0;
        for (const GermArrow& f : pool) {
            // (iv) unit laws
            GermArrow us = unit_arrow(g, f.source);
            GermArrow ut = unit_arrow(g, f.target);
            check(compose_arrows(f, us).germ == f.germ, "right unit law fails");
            check(compose_arrows(ut, f).germ == f.germ, "left unit law fails");
            // (v) inversion swaps endpoints and cancels on both sides
            GermArrow fi = invert_arrow(f);
            check(fi.source == f.target && fi.target == f.source,
                  "inverse does not swap endpoints");
            check(compose_arrows(fi, f).germ == us.germ, "left inverse law fails");
            check(compose_arrows(f, fi).germ == ut.germ, "right inverse law fails");
            for (const GermArrow& s : pool) {
                if (s.source != f.target) continue;
                // (ii) composition respects sources and targets
                GermArrow sf = compose_arrows(s, f);
                check(sf.source == f.source && sf.target == s.target,
                      "composite has wrong endpoints");
                for (const GermArrow& t : pool) {
                    if (t.source != s.target || triples >= 400) continue;
                    ++triples;
                    // (iii) associativity
                    check(compose_arrows(t, compose_arrows(s, f)).germ ==
                              compose_arrows(compose_arrows(t, s), f).germ,
                          "associativity fails on a sampled triple");
                }
            }
        }
        check(triples > 0, "no composable triples sampled");
    }
}

struct Criterion {
    const char* label;
    std::function<void()> body;
};

}  // namespace

int main() {
    std::vector<Criterion> gate = {
        {"incompatible projections are refused with all branches rejected", c1_incompatibility},
        {"reflection groupoid arrow table and saturation", c2_arrow_table},
        {"markings separate structures with identical arrows", c3_markings_differ},
        {"no candidate lift of the square root is smooth at 0", c4_no_root_lift},
        {"twisted transition assignments give distinct valid homs", c5_two_homs},
        {"rep-to-hom and hom-to-rep round trips are identities", c6_round_trips},
        {"atlas recovery from serialized groupoids is byte-exact", c7_recover_atlases},
        {"unit weak equivalence recognizes exactly the identity lifts", c8_unit_weak_equivalences},
        {"identity lifts are pairwise connected by verified witnesses", c9_identity_class},
        {"isotropy counts refute the twisted pair and never misfire", c10_refutation},
        {"groupoid laws and isotropy oracle hold on random atlases", c11_groupoid_laws},
    };

    auto t0 = std::chrono::steady_clock::now();
    int failed = 0;
    for (size_t i = 0; i < gate.size(); ++i) {
        try {
            gate[i].body();
            std::printf("criterion %2zu: PASS  %s\n", i + 1, gate[i].label);
        } catch (const std::exception& e) {
            ++failed;
            std::printf("criterion %2zu: FAIL  %s  (%s)\n", i + 1, gate[i].label, e.what());
        }
        std::fflush(stdout);
    }
    auto dt = std::chrono::duration_cast<std::chrono::milliseconds>(
                  std::chrono::steady_clock::now() - t0)
                  .count();
    std::printf("%zu/%zu criteria passed in %lld ms\n", gate.size() - failed, gate.size(),
                (long long)dt);
    return failed == 0 ? 0 : 1;
}
