#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "orbifold/groupoid.hpp"

#include <functional>
#include <random>

using namespace orb;

namespace {

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

// interval (0,2) covered by two trivially charted pieces glued by inclusions
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

bool has_issue(const ValidationReport& r, const std::string& needle) {
    for (const auto& s : r.issues)
        if (s.find(needle) != std::string::npos) return true;
    return false;
}

bool has_self_gen(const QuasiPseudogroup& p, const std::string& chart, const PiecewiseFn& f) {
    for (const Embedding& e : p.elements)
        if (e.source == chart && e.target == chart && e.map == f) return true;
    return false;
}

// one-chart source: a single object component plus one rule per generator
GroupoidHom one_chart_hom(const MarkedAtlasGroupoid& src, const std::string& tgt, PiecewiseFn fn,
                          const std::function<Embedding(const Embedding&)>& nu) {
    GroupoidHom h;
    h.obj = {HomObjComponent{src.atlas.charts[0].id, tgt, std::move(fn)}};
    for (const Embedding& gen : src.generators.elements) h.nu.push_back({gen, nu(gen)});
    return h;
}

GroupoidHom identity_hom(const MarkedAtlasGroupoid& g) {
    GroupoidHom h;
    for (const Chart& c : g.atlas.charts)
        h.obj.push_back(HomObjComponent{c.id, c.id, identity_on(c.domain)});
    for (const Embedding& gen : g.generators.elements) h.nu.push_back({gen, gen});
    return h;
}

// collapses every generator germ of the reflection groupoid to the identity
GroupoidHom hom_phi(const MarkedAtlasGroupoid& g1) {
    Interval V = Interval::open(-1, 1);
    return one_chart_hom(g1, "V1", constant_on(V, 0),
                         [&](const Embedding&) { return Embedding{"V1", "V1", identity_on(V)}; });
}

// keeps the reflection germ separate from the identity germ
GroupoidHom hom_psi(const MarkedAtlasGroupoid& g1) {
    Interval V = Interval::open(-1, 1);
    return one_chart_hom(g1, "V1", constant_on(V, 0), [&](const Embedding& gen) {
        return Embedding{"V1", "V1",
                         gen.map == neg_id_on(V) ? neg_id_on(V) : identity_on(V)};
    });
}

GroupoidHom hom_swap(const MarkedAtlasGroupoid& g1) {
    Interval V = Interval::open(-1, 1);
    return one_chart_hom(g1, "V1", constant_on(V, 0), [&](const Embedding& gen) {
        return Embedding{"V1", "V1",
                         gen.map == neg_id_on(V) ? identity_on(V) : neg_id_on(V)};
    });
}

// object map x^2 between the two reflection structures
GroupoidHom hom_square(const MarkedAtlasGroupoid& g2) {
    Interval V = Interval::open(-1, 1);
    return one_chart_hom(g2, "V1", square_on(V),
                         [&](const Embedding&) { return Embedding{"V1", "V1", identity_on(V)}; });
}

}  // namespace

TEST_CASE("validate_quasi_pseudogroup checks germ inverses and composites") {
    Atlas a1 = atlas_v1();
    Interval V = Interval::open(-1, 1);
    QuasiPseudogroup refl{{Embedding{"V1", "V1", identity_on(V)},
                           Embedding{"V1", "V1", neg_id_on(V)}}};
    CHECK(validate_quasi_pseudogroup(refl, a1).ok());

    Interval W = Interval::open(0, 2);
    Atlas tr;
    tr.charts = {Chart{"C", W, {identity_on(W)}, identity_on(W), W}};
    tr.space = Space{DomainSet(W)};
    QuasiPseudogroup trivial{{Embedding{"C", "C", identity_on(W)}}};
    CHECK(validate_quasi_pseudogroup(trivial, tr).ok());

    // a translation with no inverse element fails the inversion axiom
    QuasiPseudogroup bad{{Embedding{"C", "C",
                                    make_piecewise({make_piece(1, Parity::Odd, -1, 1, 0,
                                                               Interval::open(0, 1))})}}};
    ValidationReport r = validate_quasi_pseudogroup(bad, tr);
    CHECK(!r.ok());
    CHECK(has_issue(r, "inverts"));
}

TEST_CASE("psi_generators closes the atlas transitions") {
    QuasiPseudogroup p1 = psi_generators(atlas_v1());
    CHECK(p1.elements.size() == 2);
    Interval V = Interval::open(-1, 1);
    CHECK(has_self_gen(p1, "V1", identity_on(V)));
    CHECK(has_self_gen(p1, "V1", neg_id_on(V)));
    CHECK(validate_quasi_pseudogroup(p1, atlas_v1()).ok());

    Atlas two = atlas_two_chart();
    QuasiPseudogroup p2 = psi_generators(two);
    CHECK(p2.elements.size() == 4);
    Interval ov = Interval::open(Rational(1, 2), Rational(3, 2));
    int inclusions = 0;
    for (const Embedding& e : p2.elements)
        if (e.source != e.target) {
            CHECK(e.map == identity_on(ov));
            ++inclusions;
        }
    CHECK(inclusions == 2);
    CHECK(validate_quasi_pseudogroup(p2, two).ok());

    // incompatible charts cannot generate a groupoid
    Atlas bad;
    bad.charts = {make_v1(), make_v2()};
    bad.space = unit_space();
    CHECK_THROWS_AS(psi_generators(bad), InvalidAtlas);
}

TEST_CASE("arrows_between reproduces the reflection arrow table") {
    MarkedAtlasGroupoid g1 = build_groupoid(atlas_v1());
    Interval V = Interval::open(-1, 1);

    ArrowSearch a00 = arrows_between(g1, {"V1", 0}, {"V1", 0});
    CHECK(a00.arrows.size() == 2);
    CHECK(a00.saturated);
    bool saw_id = false, saw_neg = false;
    for (const GermArrow& ar : a00.arrows) {
        if (ar.germ == germ_at(identity_on(V), 0)) saw_id = true;
        if (ar.germ == germ_at(neg_id_on(V), 0)) saw_neg = true;
        CHECK(ar.source == ObjPoint{"V1", 0});
        CHECK(ar.target == ObjPoint{"V1", 0});
    }
    CHECK(saw_id);
    CHECK(saw_neg);

    ArrowSearch flip = arrows_between(g1, {"V1", Rational(1, 2)}, {"V1", Rational(-1, 2)});
    REQUIRE(flip.arrows.size() == 1);
    CHECK(flip.saturated);
    CHECK(flip.arrows[0].germ == germ_at(neg_id_on(V), Rational(1, 2)));
    CHECK(flip.arrows[0].target.x == Rational(-1, 2));

    for (const Rational& x : {Rational(1, 2), Rational(-1, 2), Rational(1, 4), Rational(-1, 4)}) {
        ArrowSearch self = arrows_between(g1, {"V1", x}, {"V1", x});
        CHECK(self.arrows.size() == 1);
        CHECK(self.arrows[0].germ.identity());
        ArrowSearch across = arrows_between(g1, {"V1", x}, {"V1", -x});
        CHECK(across.arrows.size() == 1);
    }

    ArrowSearch none = arrows_between(g1, {"V1", Rational(1, 2)}, {"V1", Rational(1, 4)});
    CHECK(none.arrows.empty());
    CHECK(none.saturated);

    CHECK_THROWS_AS(arrows_between(g1, {"V1", 2}, {"V1", 0}), OutOfDomain);
    CHECK_THROWS_AS(arrows_between(g1, {"V1", 0}, {"V1", 2}), OutOfDomain);

    // the x^2-marked structure has the same arrows
    MarkedAtlasGroupoid g2 = build_groupoid(atlas_v2());
    CHECK(arrows_between(g2, {"V2", 0}, {"V2", 0}).arrows.size() == 2);
    CHECK(arrows_between(g2, {"V2", Rational(1, 2)}, {"V2", Rational(1, 2)}).arrows.size() == 1);

    MarkedAtlasGroupoid gt = build_groupoid(atlas_two_chart());
    ArrowSearch incl = arrows_between(gt, {"A", Rational(3, 4)}, {"B", Rational(3, 4)});
    CHECK(incl.arrows.size() == 1);
    CHECK(incl.saturated);
    ArrowSearch far = arrows_between(gt, {"A", Rational(3, 4)}, {"B", Rational(5, 4)});
    CHECK(far.arrows.empty());
    CHECK(far.saturated);
}

TEST_CASE("orbit saturates the reflection orbits") {
    MarkedAtlasGroupoid g1 = build_groupoid(atlas_v1());
    OrbitSearch o = orbit(g1, {"V1", Rational(1, 2)});
    REQUIRE(o.points.size() == 2);
    CHECK(o.saturated);
    CHECK(o.points[0] == ObjPoint{"V1", Rational(-1, 2)});
    CHECK(o.points[1] == ObjPoint{"V1", Rational(1, 2)});

    OrbitSearch oz = orbit(g1, {"V1", 0});
    REQUIRE(oz.points.size() == 1);
    CHECK(oz.points[0] == ObjPoint{"V1", 0});

    MarkedAtlasGroupoid gt = build_groupoid(atlas_two_chart());
    OrbitSearch ot = orbit(gt, {"A", Rational(3, 4)});
    REQUIRE(ot.points.size() == 2);
    CHECK(ot.points[0] == ObjPoint{"A", Rational(3, 4)});
    CHECK(ot.points[1] == ObjPoint{"B", Rational(3, 4)});
    OrbitSearch of = orbit(gt, {"A", Rational(1, 4)});
    CHECK(of.points.size() == 1);
}

TEST_CASE("marking_value evaluates the chart projections on orbits") {
    MarkedAtlasGroupoid g1 = build_groupoid(atlas_v1());
    MarkedAtlasGroupoid g2 = build_groupoid(atlas_v2());
    CHECK(marking_value(g1, {"V1", Rational(1, 2)}) == Rational(1, 2));
    CHECK(marking_value(g2, {"V2", Rational(1, 2)}) == Rational(1, 4));
    CHECK(marking_value(g1, {"V1", 0}) == 0);

    // constant along orbits, injective across the sampled distinct orbits
    for (const Rational& x : {Rational(0), Rational(1, 2), Rational(1, 4), Rational(7, 8)}) {
        for (const MarkedAtlasGroupoid* g : {&g1, &g2}) {
            ObjPoint p{g->atlas.charts[0].id, x};
            Rational m = marking_value(*g, p);
            for (const ObjPoint& q : orbit(*g, p).points) CHECK(marking_value(*g, q) == m);
        }
    }
    CHECK(marking_value(g1, {"V1", 0}) != marking_value(g1, {"V1", Rational(1, 2)}));
    CHECK(marking_value(g1, {"V1", Rational(1, 4)}) != marking_value(g1, {"V1", Rational(1, 2)}));
    CHECK(marking_value(g2, {"V2", Rational(1, 4)}) != marking_value(g2, {"V2", Rational(1, 2)}));

    MarkedAtlasGroupoid gt = build_groupoid(atlas_two_chart());
    CHECK(marking_value(gt, {"B", Rational(7, 4)}) == Rational(7, 4));
}

TEST_CASE("arrow structure maps satisfy the groupoid laws") {
    MarkedAtlasGroupoid g1 = build_groupoid(atlas_v1());
    std::vector<ObjPoint> pts = {{"V1", 0}, {"V1", Rational(1, 2)}, {"V1", Rational(-1, 2)}};
    for (const ObjPoint& x : pts) {
        for (const ObjPoint& y : orbit(g1, x).points) {
            for (const GermArrow& ar : arrows_between(g1, x, y).arrows) {
                CHECK(ar.source == x);
                CHECK(ar.target == y);
                // unit laws
                GermArrow us = unit_arrow(g1, x), ut = unit_arrow(g1, y);
                CHECK(compose_arrows(ar, us).germ == ar.germ);
                CHECK(compose_arrows(ut, ar).germ == ar.germ);
                // inverse laws
                GermArrow inv = invert_arrow(ar);
                CHECK(inv.source == y);
                CHECK(inv.target == x);
                CHECK(compose_arrows(inv, ar).germ == us.germ);
                CHECK(compose_arrows(ar, inv).germ == ut.germ);
            }
        }
    }
    // associativity over composable triples through the origin orbit
    ObjPoint z{"V1", Rational(1, 2)}, w{"V1", Rational(-1, 2)};
    for (const GermArrow& a : arrows_between(g1, z, w).arrows)
        for (const GermArrow& b : arrows_between(g1, w, w).arrows)
            for (const GermArrow& c : arrows_between(g1, w, z).arrows)
                CHECK(compose_arrows(c, compose_arrows(b, a)).germ ==
                      compose_arrows(compose_arrows(c, b), a).germ);

    // vertex arrow counts match the chart isotropy for one-chart structures
    for (const Atlas& a : {atlas_v1(), atlas_v2()}) {
        MarkedAtlasGroupoid g = build_groupoid(a);
        const Chart& c = g.atlas.charts[0];
        for (const Rational& x :
             {Rational(0), Rational(1, 2), Rational(-1, 2), Rational(1, 4), Rational(3, 8)}) {
            ArrowSearch self = arrows_between(g, {c.id, x}, {c.id, x});
            CHECK(self.arrows.size() == point_isotropy(c, x).size());
        }
    }
}

TEST_CASE("serialization is canonical and distinguishes only markings") {
    MarkedAtlasGroupoid g1 = build_groupoid(atlas_v1());
    MarkedAtlasGroupoid g2 = build_groupoid(atlas_v2());
    CHECK(serialize_groupoid(g1, false) == serialize_groupoid(g2, false));
    CHECK(serialize_groupoid(g1, true) != serialize_groupoid(g2, true));
    CHECK(serialize_groupoid(g1, true) == serialize_groupoid(build_groupoid(atlas_v1()), true));
}

TEST_CASE("recover_atlas inverts build_groupoid") {
    MarkedAtlasGroupoid g1 = build_groupoid(atlas_v1());
    std::string s1 = serialize_groupoid(g1);
    Atlas r1 = recover_atlas(s1);
    REQUIRE(r1.charts.size() == 1);
    const Chart& c = r1.charts[0];
    CHECK(c.id == "c0");
    CHECK(c.domain == Interval::open(-1, 1));
    CHECK(c.group.size() == 2);
    CHECK(c.proj == abs_on(Interval::open(-1, 1)));
    CHECK(c.fdom == Interval::closed_open(0, 1));
    CHECK(r1.witnesses.empty());
    CHECK(r1.space.carrier == DomainSet(Interval::closed_open(0, 1)));
    CHECK(validate_atlas(r1).ok());
    // byte-exact once rebuilt
    CHECK(serialize_groupoid(build_groupoid(r1)) == s1);

    Atlas two = atlas_two_chart();
    std::string s2 = serialize_groupoid(build_groupoid(two));
    Atlas r2 = recover_atlas(s2);
    REQUIRE(r2.charts.size() == 2);
    CHECK(r2.charts[0].group.size() == 1);
    CHECK(r2.charts[1].group.size() == 1);
    CHECK(r2.witnesses.size() == 2);
    CHECK(validate_atlas(r2).ok());
    CHECK(serialize_groupoid(build_groupoid(r2)) == s2);

    CHECK_THROWS_AS(recover_atlas(serialize_groupoid(g1, false)), MalformedInput);
    CHECK_THROWS_AS(recover_atlas("garbage\n"), MalformedInput);
}

TEST_CASE("validate_hom accepts the reflection homomorphisms") {
    MarkedAtlasGroupoid g1 = build_groupoid(atlas_v1());
    MarkedAtlasGroupoid g2 = build_groupoid(atlas_v2());

    CHECK(validate_hom(identity_hom(g1), g1, g1).ok());
    CHECK(validate_hom(hom_phi(g1), g1, g1).ok());
    CHECK(validate_hom(hom_psi(g1), g1, g1).ok());
    CHECK(validate_hom(hom_square(g2), g2, g1).ok());

    MarkedAtlasGroupoid gt = build_groupoid(atlas_two_chart());
    CHECK(validate_hom(identity_hom(gt), gt, gt).ok());
}

TEST_CASE("validate_hom rejects broken homomorphisms") {
    MarkedAtlasGroupoid g1 = build_groupoid(atlas_v1());
    Interval V = Interval::open(-1, 1);

    // the unit law catches swapping the generator images
    ValidationReport swap = validate_hom(hom_swap(g1), g1, g1);
    CHECK(!swap.ok());
    CHECK(has_issue(swap, "identity germ"));

    // identity object map is not equivariant with a collapsed reflection
    GroupoidHom skew = one_chart_hom(g1, "V1", identity_on(V), [&](const Embedding&) {
        return Embedding{"V1", "V1", identity_on(V)};
    });
    ValidationReport r2 = validate_hom(skew, g1, g1);
    CHECK(!r2.ok());
    CHECK(has_issue(r2, "equivariant"));

    // component image must stay inside the target chart
    GroupoidHom off = one_chart_hom(g1, "V1", constant_on(V, 5), [&](const Embedding&) {
        return Embedding{"V1", "V1", identity_on(V)};
    });
    ValidationReport r3 = validate_hom(off, g1, g1);
    CHECK(!r3.ok());
    CHECK(has_issue(r3, "leaves chart"));

    // every generator needs exactly one arrow rule
    GroupoidHom missing = hom_phi(g1);
    missing.nu.pop_back();
    ValidationReport r4 = validate_hom(missing, g1, g1);
    CHECK(!r4.ok());
    CHECK(has_issue(r4, "expected one arrow rule"));
}

TEST_CASE("hom_arrow_image separates the two reflection homomorphisms") {
    MarkedAtlasGroupoid g1 = build_groupoid(atlas_v1());
    Interval V = Interval::open(-1, 1);
    GroupoidHom phi = hom_phi(g1), psi = hom_psi(g1);

    for (const Rational& x :
         {Rational(0), Rational(1, 2), Rational(1, 4), Rational(-3, 8)}) {
        GermArrow refl{{"V1", x}, {"V1", -x}, neg_id_on(V), germ_at(neg_id_on(V), x)};
        Germ p = hom_arrow_image(phi, g1, refl);
        Germ q = hom_arrow_image(psi, g1, refl);
        CHECK(p == germ_at(identity_on(V), 0));
        CHECK(q == germ_at(neg_id_on(V), 0));
        CHECK(p != q);

        GermArrow idar{{"V1", x}, {"V1", x}, identity_on(V), germ_at(identity_on(V), x)};
        CHECK(hom_arrow_image(phi, g1, idar) == hom_arrow_image(psi, g1, idar));
    }
}

TEST_CASE("induced_orbit_map assembles the carrier maps") {
    MarkedAtlasGroupoid g1 = build_groupoid(atlas_v1());
    MarkedAtlasGroupoid g2 = build_groupoid(atlas_v2());
    Interval Q = Interval::closed_open(0, 1);

    OrbitMapResult idm = induced_orbit_map(identity_hom(g1), g1, g1);
    CHECK(idm.check.ok());
    CHECK(idm.fn == identity_on(Q));

    OrbitMapResult zero = induced_orbit_map(hom_phi(g1), g1, g1);
    CHECK(zero.check.ok());
    CHECK(zero.fn == constant_on(Q, 0));
    OrbitMapResult zero2 = induced_orbit_map(hom_psi(g1), g1, g1);
    CHECK(zero2.check.ok());
    CHECK(zero2.fn == constant_on(Q, 0));

    // the square lift between the two markings induces the identity downstairs
    OrbitMapResult sq = induced_orbit_map(hom_square(g2), g2, g1);
    CHECK(sq.check.ok());
    CHECK(sq.fn == identity_on(Q));

    MarkedAtlasGroupoid gt = build_groupoid(atlas_two_chart());
    OrbitMapResult tid = induced_orbit_map(identity_hom(gt), gt, gt);
    CHECK(tid.check.ok());
    CHECK(tid.fn == identity_on(Interval::open(0, 2)));
}

TEST_CASE("randomized reflection structures match the isotropy oracle") {
    std::mt19937 rng(20250815);
    std::uniform_int_distribution<int> pick_b(1, 4), pick_r(1, 3), pick_j(-3, 3);
    for (int trial = 0; trial < 30; ++trial) {
        Rational b(pick_b(rng), trial % 2 ? 2 : 1);
        int r = pick_r(rng);
        Interval V = Interval::open(-b, b);
        Rational top = rat_pow(b, r);
        Chart c{"R", V, {identity_on(V), neg_id_on(V)},
                pw(make_piece(1, Parity::Even, 0, r, 0, V)), Interval::closed_open(0, b)};
        Atlas a;
        a.charts = {c};
        a.space = Space{DomainSet(Interval::closed_open(0, top))};
        REQUIRE(validate_atlas(a).ok());
        MarkedAtlasGroupoid g = build_groupoid(a);
        CHECK(g.generators.elements.size() == 2);

        Rational x = b * pick_j(rng) / 4;
        ArrowSearch self = arrows_between(g, {"R", x}, {"R", x});
        CHECK(self.saturated);
        CHECK(self.arrows.size() == point_isotropy(c, x).size());
        if (x != 0) {
            ArrowSearch across = arrows_between(g, {"R", x}, {"R", -x});
            CHECK(across.arrows.size() == 1);
            OrbitSearch o = orbit(g, {"R", x});
            CHECK(o.points.size() == 2);
            CHECK(marking_value(g, o.points[0]) == marking_value(g, o.points[1]));
        }
        for (const GermArrow& ar : self.arrows) {
            GermArrow u = unit_arrow(g, {"R", x});
            CHECK(compose_arrows(ar, u).germ == ar.germ);
            CHECK(compose_arrows(invert_arrow(ar), ar).germ == u.germ);
        }
    }
}
