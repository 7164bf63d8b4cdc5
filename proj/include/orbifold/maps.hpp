#pragma once

#include "orbifold/groupoid.hpp"

#include <optional>

namespace orb {

// smooth lift of a carrier map over one chart pair, with proj' o map = f o proj
struct LocalLift {
    std::string src_chart, dst_chart;
    PiecewiseFn map;

    bool operator==(const LocalLift& o) const {
        return src_chart == o.src_chart && dst_chart == o.dst_chart && map == o.map;
    }
    bool operator!=(const LocalLift& o) const { return !(*this == o); }
};

// representative of a charted orbifold map: carrier map, one lift per domain
// chart, a quasi-pseudogroup of domain transitions and its transition
// assignment into the range structure
struct MapRep {
    PiecewiseFn f;
    std::vector<LocalLift> lifts;
    QuasiPseudogroup P;
    std::vector<HomArrowRule> nu;
};

// representative together with its domain and range atlases
struct ChartedMap {
    Atlas dom, rng;
    MapRep rep;
};

struct EquivalenceWitness {
    Atlas W, Wp;                   // common refinements of the domains / ranges
    ChartedMap eps1, eps2;         // identity lifts W -> dom(f1), W -> dom(f2)
    ChartedMap eps1p, eps2p;       // identity lifts Wp -> rng(f1), Wp -> rng(f2)
    ChartedMap bridge;             // h : W -> Wp closing both squares
};

struct RangeFamilyNotContained : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ImageNotContained : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotLocalDiffeo : std::runtime_error {
    std::string chart;
    explicit NotLocalDiffeo(const std::string& c, const std::string& why)
        : std::runtime_error("lift on chart " + c + " is not a local diffeomorphism: " + why),
          chart(c) {}
};
struct AtlasMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct AtlasChainMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct RefinementFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---- small builders ----

PiecewiseFn identity_on_set(const DomainSet& d);
bool same_atlas(const Atlas& a, const Atlas& b);

// atlas made of stable restrictions of one chart, with all group-conjugated
// inclusion transitions as witnesses
Atlas restriction_atlas(const Chart& base, const std::vector<Interval>& windows, const Space& sp);

// the identity representative on an atlas (identity lifts, transitions fixed)
MapRep identity_rep(const Atlas& a);
ChartedMap identity_map(const Atlas& a);

// ---- validation ----

// proj' o lift = f o proj on the whole chart, and the lift is smooth
ValidationReport verify_local_lift(const LocalLift& lift, const PiecewiseFn& f, const Chart& c,
                                   const Chart& cp);

// carrier continuity, one smooth lift per domain chart, transition set
// validity with point-reachability generation, and the germ equivariance laws
ValidationReport validate_representative(const MapRep& r, const Atlas& dom, const Atlas& rng);
ValidationReport validate_charted_map(const ChartedMap& m);

// ---- the two constructions between representatives and homomorphisms ----

// object map from the lifts, arrow map looked up through the transition
// assignment; the marking square is re-verified
GroupoidHom to_hom(const MapRep& r, const Atlas& dom, const Atlas& rng);
GroupoidHom to_hom(const ChartedMap& m);

// lifts from the object components, carrier map from the orbit map, and the
// stored arrow assignment as the transition assignment
MapRep from_hom(const GroupoidHom& h, const MarkedAtlasGroupoid& src,
                const MarkedAtlasGroupoid& dst);

// same carrier map and lifts, and germ-equal transition assignments wherever
// the two transition sets have germ-equal elements
bool reps_equivalent(const MapRep& r1, const MapRep& r2, const Atlas& dom, const Atlas& rng);
bool representatives_equivalent(const ChartedMap& a, const ChartedMap& b);  // AtlasMismatch

// ---- induced maps and identity lifts ----

// mu^{-1} o lift o lambda; the image condition is checked first
LocalLift induce_local_lift(const LocalLift& lift, const Embedding& lam, const Embedding& mu);

// completes a family of local-diffeomorphism lifts of the identity to a full
// representative by conjugating the domain transitions through the lifts
MapRep complete_identity_lift(const std::vector<LocalLift>& lifts, const Atlas& dom,
                              const Atlas& rng);

// identity carrier map, local-diffeomorphism lifts, and pairwise-compatible
// domain and range chart families
bool is_identity_lift(const ChartedMap& m);

// new domain atlas with per-chart embeddings into the old one; range charts
// embedded by mu and extended with the original range atlas
ChartedMap induce_charted_map(const ChartedMap& m, const Atlas& new_dom,
                              const std::vector<Chart>& rng_charts,
                              const std::vector<Embedding>& lams,
                              const std::vector<Embedding>& mus);

// ---- composition and equivalence ----

// chart-wise composite lifts; the transition assignment follows the middle
// transition germ-matched against the outer transition set, first in list
ChartedMap compose_reps(const ChartedMap& g, const ChartedMap& f);

// both squares f_j o eps_j == eps'_j o bridge, with all four eps identity lifts
bool verify_equivalence_witness(const ChartedMap& f1, const ChartedMap& f2,
                                const EquivalenceWitness& w);

// constructive search: trivial witness, inclusion ansatz, then the pullback
// refinement for identity lifts; every candidate is verified before returning.
// nullopt means unknown, never inequivalence
std::optional<EquivalenceWitness> common_refinement_witness(const ChartedMap& f1,
                                                            const ChartedMap& f2);

// composition across mismatched middle atlases: retargets the inner lifts
// into the finer middle atlas, then composes representatives
ChartedMap compose_orbifold_maps(const ChartedMap& g, const ChartedMap& f);

// ---- unit weak equivalence and the refuter ----

// the induced representative is an identity lift over the same carrier
bool is_unit_weak_equivalence(const GroupoidHom& h, const MarkedAtlasGroupoid& src,
                              const MarkedAtlasGroupoid& dst);

// direct probe: unit marking, essential surjectivity on probe orbits, and
// arrow-set bijections over probe pairs; cap bounds the word saturation
bool uwe_structural_probe(const GroupoidHom& h, const MarkedAtlasGroupoid& src,
                          const MarkedAtlasGroupoid& dst, unsigned cap = 8);

// marking-matched points whose isotropy arrow sets have different image sizes
struct RefuteCertificate {
    ObjPoint at1, at2;
    Rational marking;
    std::size_t image1 = 0, image2 = 0;
};

std::optional<RefuteCertificate> refute_hom_equivalence(
    const GroupoidHom& phi, const MarkedAtlasGroupoid& sphi, const MarkedAtlasGroupoid& dphi,
    const GroupoidHom& psi, const MarkedAtlasGroupoid& spsi, const MarkedAtlasGroupoid& dpsi,
    unsigned cap = 8);

}  // namespace orb
