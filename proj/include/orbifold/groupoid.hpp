#pragma once

#include "orbifold/charts.hpp"

namespace orb {

// point of the object space, the disjoint union of the chart domains
struct ObjPoint {
    std::string chart;
    Rational x;

    bool operator==(const ObjPoint& o) const { return chart == o.chart && x == o.x; }
    bool operator!=(const ObjPoint& o) const { return !(*this == o); }
    std::string str() const { return chart + ":" + rat_str(x); }
};

// arrow of the germ groupoid: the germ at source.x of a word in the
// generators, kept with a representing function
struct GermArrow {
    ObjPoint source, target;
    PiecewiseFn word;
    Germ germ;  // germ_at(word, source.x)

    std::string key() const { return target.chart + "|" + germ.str(); }
};

struct QuasiPseudogroup {
    std::vector<Embedding> elements;
};

struct InvalidAtlas : std::runtime_error {
    ValidationReport report;
    explicit InvalidAtlas(ValidationReport r)
        : std::runtime_error("invalid atlas: " + r.str()), report(std::move(r)) {}
};

// axioms: local inverses (i) and local compositions (ii) are represented
// inside the element list at the germ level, probed on a deterministic grid
ValidationReport validate_quasi_pseudogroup(const QuasiPseudogroup& p, const Atlas& a);

// chart group elements and atlas witnesses, closed up (inverses, missing
// germ composites) until the quasi-pseudogroup axioms hold
QuasiPseudogroup psi_generators(const Atlas& a);  // throws InvalidAtlas

// atlas groupoid of germs of the generated pseudogroup, marked by the chart
// projections into the carrier
struct MarkedAtlasGroupoid {
    Atlas atlas;
    QuasiPseudogroup generators;
    Space space;
};

MarkedAtlasGroupoid build_groupoid(const Atlas& a);  // throws InvalidAtlas

struct ArrowSearch {
    std::vector<GermArrow> arrows;
    bool saturated = true;  // false: the frontier still grew at the cap
    unsigned cap = 8;
};

// all distinct germ normal forms of generator words from x to y, found by
// saturation over words with a visited-germ set
ArrowSearch arrows_between(const MarkedAtlasGroupoid& g, const ObjPoint& x, const ObjPoint& y,
                           unsigned cap = 8);

struct OrbitSearch {
    std::vector<ObjPoint> points;  // sorted by (chart, x)
    bool saturated = true;
    unsigned cap = 8;
};

OrbitSearch orbit(const MarkedAtlasGroupoid& g, const ObjPoint& x, unsigned cap = 8);

// marking alpha([x]) = proj(x); NotInFragment when the value is irrational
Rational marking_value(const MarkedAtlasGroupoid& g, const ObjPoint& x);

// structure maps on arrows
GermArrow unit_arrow(const MarkedAtlasGroupoid& g, const ObjPoint& x);
GermArrow compose_arrows(const GermArrow& second, const GermArrow& first);
GermArrow invert_arrow(const GermArrow& a);

// ---- homomorphisms of marked atlas groupoids ----

// object map on one chart: everything lands in a single target chart
struct HomObjComponent {
    std::string chart, target_chart;
    PiecewiseFn fn;
};

// arrow map on one generator
struct HomArrowRule {
    Embedding gen;    // source generator
    Embedding image;  // its assigned target transition
};

struct GroupoidHom {
    std::vector<HomObjComponent> obj;
    std::vector<HomArrowRule> nu;
};

const HomObjComponent* hom_component(const GroupoidHom& h, const std::string& chart);

// smoothness of the object components, equivariance with every generator,
// germ functoriality on composable pairs and the unit law
ValidationReport validate_hom(const GroupoidHom& h, const MarkedAtlasGroupoid& src,
                              const MarkedAtlasGroupoid& dst);

// image of an arrow under the homomorphism: germ of nu(generator) at the
// mapped base point; the arrow must be germ-represented by a generator
Germ hom_arrow_image(const GroupoidHom& h, const MarkedAtlasGroupoid& src, const GermArrow& a);

struct OrbitMapResult {
    PiecewiseFn fn;  // induced map between the carriers
    ValidationReport check;
};

// the map beta o |phi| o alpha^{-1} assembled from fundamental domains,
// with the commutation square verified on the probe grid
OrbitMapResult induced_orbit_map(const GroupoidHom& h, const MarkedAtlasGroupoid& src,
                                 const MarkedAtlasGroupoid& dst);

// ---- canonical text form ----

// deterministic serialization; the marked form carries space, fundamental
// domains and markings and is the input recover_atlas accepts
std::string serialize_groupoid(const MarkedAtlasGroupoid& g, bool marked = true);

// charts from the object components with their markings as projections,
// chart groups from full-domain self-transitions, witnesses from the rest
Atlas recover_atlas(const std::string& text);  // throws MalformedInput

}  // namespace orb
