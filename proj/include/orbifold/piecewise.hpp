#pragma once

#include "orbifold/interval.hpp"

#include <variant>

namespace orb {

enum class Parity { Even, Odd };

// x |-> a * eps(x-h) * |x-h|^r + k on the support, where eps is 1 for Even
// and sign(x-h) for Odd. Always stored canonically:
//   * a == 0 collapses to (0, 0, 1, k, Odd)
//   * supports one side of the center use Odd (flipping a's sign on the left)
//   * Odd pieces with r == 1 are affine and fold h into k (h becomes 0)
struct Piece {
    Rational a = 0, h = 0, r = 1, k = 0;
    Parity parity = Parity::Odd;
    Interval support;

    bool constant() const { return a == 0; }
    bool affine() const { return a == 0 || (r == 1 && parity == Parity::Odd); }
    // center strictly between support endpoints
    bool straddles() const;
    PowerValue eval(const Rational& x) const;  // valid on all of R (pieces are continuous)
    bool increasing_at(const Rational& x) const;

    bool same_form(const Piece& o) const {
        return a == o.a && h == o.h && r == o.r && k == o.k && parity == o.parity;
    }
    bool operator==(const Piece& o) const { return same_form(o) && support == o.support; }
    bool operator!=(const Piece& o) const { return !(*this == o); }
};

Piece canon_piece(Piece p);
Piece make_piece(const Rational& a, Parity parity, const Rational& h, const Rational& r,
                 const Rational& k, const Interval& support);

struct NotInjective : std::runtime_error {
    Rational x, y;
    NotInjective(const Rational& x_, const Rational& y_)
        : std::runtime_error("not injective: collides at " + rat_str(x_) + " and " + rat_str(y_)),
          x(x_),
          y(y_) {}
};

// Piecewise signed-power function. Piece supports partition the domain; no
// continuity is implied across pieces. Construct through make_piecewise.
struct PiecewiseFn {
    std::vector<Piece> pieces;  // sorted, canonical, maximally merged

    DomainSet domain() const;
    bool operator==(const PiecewiseFn& o) const { return pieces == o.pieces; }
    bool operator!=(const PiecewiseFn& o) const { return !(*this == o); }
    std::string str() const;
};

PiecewiseFn make_piecewise(std::vector<Piece> pieces);
PiecewiseFn identity_on(const Interval& iv);
PiecewiseFn constant_on(const Interval& iv, const Rational& k);

PowerValue evaluate(const PiecewiseFn& f, const Rational& x);  // OutOfDomain if outside
const Piece* piece_at(const PiecewiseFn& f, const Rational& x);

PiecewiseFn restrict_fn(const PiecewiseFn& f, const DomainSet& d);
PiecewiseFn compose(const PiecewiseFn& outer, const PiecewiseFn& inner);
PiecewiseFn invert(const PiecewiseFn& f);  // throws NotInjective / NotInFragment

// image of f as a set; NotInFragment if an endpoint is irrational
DomainSet image(const PiecewiseFn& f);
DomainSet image_on(const PiecewiseFn& f, const DomainSet& d);

// rational preimages of v under one piece (0, 1 or 2 points); NotInFragment if
// a preimage exists but is irrational
std::vector<Rational> piece_preimages(const Piece& p, const Rational& v);
std::vector<Rational> preimages(const PiecewiseFn& f, const Rational& v);

// ---- germs ----

// One-sided germ data, always reduced to odd parity; affine sides have h == 0.
struct SideGerm {
    Rational a, h, r, k;
    bool operator==(const SideGerm& o) const {
        return a == o.a && h == o.h && r == o.r && k == o.k;
    }
};

struct Germ {
    Rational base;
    std::optional<SideGerm> left, right;  // absent side: base on domain boundary
    PowerValue value;

    bool operator==(const Germ& o) const {
        return base == o.base && left == o.left && right == o.right && value == o.value;
    }
    bool operator!=(const Germ& o) const { return !(*this == o); }
    bool identity() const;
    std::string str() const;
};

Germ germ_at(const PiecewiseFn& f, const Rational& x);
bool germ_equal(const PiecewiseFn& f, const PiecewiseFn& g, const Rational& x);

// ---- smoothness / diffeomorphism ----

struct SmoothResult {
    bool smooth = true;
    Rational point;     // failure point
    unsigned order = 0;  // first failing derivative order
    bool unbounded = false;
    std::string str() const;
};

SmoothResult is_smooth(const PiecewiseFn& f);

struct DiffeoResult {
    enum Kind { Diffeo, NotSmooth, CriticalPoint, NotInjectiveAt } kind = Diffeo;
    SmoothResult smooth;  // for NotSmooth
    Rational x, y;        // CriticalPoint: x; NotInjectiveAt: x, y
    bool ok() const { return kind == Diffeo; }
    std::string str() const;
};

DiffeoResult is_diffeomorphism(const PiecewiseFn& f);

// injectivity witness, if any
std::optional<std::pair<Rational, Rational>> injectivity_collision(const PiecewiseFn& f);

bool is_continuous(const PiecewiseFn& f);

// deterministic probe grid: support endpoints, centers, then midpoints of
// consecutive grid points, filtered to the domain
std::vector<Rational> probe_grid(const PiecewiseFn& f);
std::vector<Rational> grid_from_points(const std::vector<Rational>& pts, const DomainSet& dom);

// ---- text form ----
std::string piece_str(const Piece& p);
Piece parse_piece(const std::string& s);
PiecewiseFn parse_piecewise(const std::string& s);

}  // namespace orb
