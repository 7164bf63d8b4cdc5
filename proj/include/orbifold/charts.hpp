#pragma once

#include "orbifold/piecewise.hpp"

namespace orb {

// Underlying space: a subset of R carrying the subspace topology.
struct Space {
    DomainSet carrier;
};

// Reduced orbifold chart (V, G, proj): V an open interval, G a finite group of
// diffeomorphisms of V, proj a G-invariant map onto an open subset of the
// carrier that identifies V/G with its image. fdom is a user-supplied
// fundamental domain: proj|fdom injective with proj(fdom) = proj(V).
struct Chart {
    std::string id;
    Interval domain;
    std::vector<PiecewiseFn> group;
    PiecewiseFn proj;
    Interval fdom;

    bool operator==(const Chart& o) const;
    bool operator!=(const Chart& o) const { return !(*this == o); }
};

// Open embedding map : source -> target with target.proj o map = source.proj
// on dom map. Also used for partial transitions between chart domains.
struct Embedding {
    std::string source, target;
    PiecewiseFn map;

    bool operator==(const Embedding& o) const {
        return source == o.source && target == o.target && map == o.map;
    }
    bool operator!=(const Embedding& o) const { return !(*this == o); }
};

struct Atlas {
    std::vector<Chart> charts;
    std::vector<Embedding> witnesses;  // change-of-chart transitions
    Space space;
};

struct ValidationReport {
    std::vector<std::string> issues;
    bool ok() const { return issues.empty(); }
    std::string str() const;
};

const Chart* find_chart(const Atlas& a, const std::string& id);
const Chart& need_chart(const Atlas& a, const std::string& id);  // throws MalformedInput

ValidationReport validate_chart(const Chart& c, const Space& sp);

struct StabilityResult {
    bool stable = true;
    std::vector<PiecewiseFn> isotropy;  // G_S = {g : g(S) = S} when stable
    PiecewiseFn offender;               // g with g(S) neither S nor off S
    Interval overlap;                   // the proper overlap g(S) n S
};

// S stable iff every g in G maps S onto S or entirely off S
StabilityResult stable_isotropy(const Interval& S, const Chart& c);

struct NotStableError : std::runtime_error {
    PiecewiseFn offender;
    Interval overlap;
    NotStableError(PiecewiseFn g, const Interval& ov)
        : std::runtime_error("subset not stable: " + g.str() + " gives proper overlap " + ov.str()),
          offender(std::move(g)),
          overlap(ov) {}
};

// (S, G_S, proj|S) with a fundamental domain cut down to one G_S-transversal;
// throws NotStableError when S is not stable
Chart restrict_chart(const Chart& c, const Interval& S);

ValidationReport validate_embedding(const Embedding& e, const Atlas& ctx);

struct GroupIso {
    // g in source group -> the unique h in the target group with
    // map o g = h o map (piece-form equality); requires dom map = source domain
    std::vector<std::pair<PiecewiseFn, PiecewiseFn>> pairs;
    std::optional<PiecewiseFn> unmatched;  // first g without a partner, if any
    bool ok() const { return !unmatched; }
};

GroupIso induced_group_iso(const Embedding& e, const Chart& src, const Chart& dst);

std::vector<PiecewiseFn> point_isotropy(const Chart& c, const Rational& x);

// open stable S containing x with G_S equal to the isotropy of x; radius
// policy: min(distance to the domain boundary, half the distance to the
// nearest group translate that moves x) / 4, then halved until stable
Interval stable_neighborhood(const Rational& x, const Chart& c);

// probe points: domain endpoints, piece support endpoints, non-affine piece
// centers and group fixed points, plus midpoints of consecutive nodes,
// clipped to the open domain
std::vector<Rational> chart_probes(const Chart& c);

struct FiberPair {
    std::string chart1, chart2;
    Rational x1, x2;  // proj1(x1) == proj2(x2)
};

struct BranchFailure {
    PiecewiseFn candidate;
    DiffeoResult why;
};

enum class Compat { Compatible, Incompatible, Unknown };

struct CompatResult {
    Compat verdict = Compat::Compatible;
    std::vector<Embedding> witnesses;     // Compatible: one witness per probe fiber pair
    FiberPair at;                         // Incompatible / Unknown: offending fiber pair
    std::vector<BranchFailure> failures;  // Incompatible: every branch candidate with its defect
    std::string note;                     // Unknown: why enumeration stopped
};

// Probes fiber pairs over a deterministic grid on both charts. For each pair
// the finitely many local branch candidates h with proj_to o h = proj_from are
// enumerated by one-sided inversion of proj_to against proj_from and glued at
// the probe; Compatible needs a validated diffeomorphism witness per pair,
// Incompatible a pair where every candidate fails is_diffeomorphism, Unknown
// a pair where enumeration leaves the exactly representable fragment.
CompatResult charts_compatible(const Chart& c1, const Chart& c2);

// chart group elements as self-transitions plus the declared witnesses
std::vector<Embedding> atlas_transitions(const Atlas& a);

// quasi-pseudogroup axioms for a set of partial transitions over the atlas:
// at probe points, (i) inverses and (ii) compositions are represented inside
// the set at the germ level
ValidationReport quasi_pseudogroup_report(const Atlas& a, const std::vector<Embedding>& elems);

ValidationReport validate_atlas(const Atlas& a);

// structural fingerprints: equal strings iff the objects agree field for field;
// used to memoize chart- and atlas-level results
std::string chart_signature(const Chart& c);
std::string atlas_signature(const Atlas& a);

}  // namespace orb
