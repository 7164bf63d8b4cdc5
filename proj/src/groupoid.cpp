#include "orbifold/groupoid.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

namespace orb {

namespace {

bool has_element(const std::vector<Embedding>& v, const Embedding& e) {
    return std::find(v.begin(), v.end(), e) != v.end();
}

// is some listed element germ-equal to f at x, with the given chart labels?
bool germ_represented(const std::vector<Embedding>& elems, const std::string& src,
                      const std::string& dst, const PiecewiseFn& f, const Rational& x) {
    Germ g = germ_at(f, x);
    for (const Embedding& h : elems) {
        if (h.source != src || h.target != dst) continue;
        if (!h.map.domain().contains(x)) continue;
        if (germ_at(h.map, x) == g) return true;
    }
    return false;
}

std::string trimmed(const std::string& s) {
    size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

}  // namespace

ValidationReport validate_quasi_pseudogroup(const QuasiPseudogroup& p, const Atlas& a) {
    return quasi_pseudogroup_report(a, p.elements);
}

namespace {

QuasiPseudogroup psi_generators_impl(const Atlas& a) {
    std::vector<Embedding> elems = atlas_transitions(a);
    for (int round = 0; round < 8; ++round) {
        bool changed = false;
        size_t n = elems.size();
        for (size_t i = 0; i < n; ++i) {
            Embedding inv{elems[i].target, elems[i].source, invert(elems[i].map)};
            if (!has_element(elems, inv)) {
                elems.push_back(inv);
                changed = true;
            }
        }
        n = elems.size();
        for (size_t i = 0; i < n; ++i) {
            for (size_t j = 0; j < n; ++j) {
                if (elems[i].target != elems[j].source) continue;
                PiecewiseFn comp;
                try {
                    comp = compose(elems[j].map, elems[i].map);
                } catch (const NotInFragment&) {
                    continue;
                }
                if (comp.domain().empty()) continue;
                bool missing = false;
                for (const Rational& x : probe_grid(comp))
                    if (!germ_represented(elems, elems[i].source, elems[j].target, comp, x)) {
                        missing = true;
                        break;
                    }
                if (!missing) continue;
                Embedding e{elems[i].source, elems[j].target, comp};
                if (!has_element(elems, e)) {
                    elems.push_back(e);
                    changed = true;
                }
            }
        }
        if (!changed) break;
    }
    return QuasiPseudogroup{std::move(elems)};
}

}  // namespace

QuasiPseudogroup psi_generators(const Atlas& a) {
    ValidationReport rep = validate_atlas(a);
    if (!rep.ok()) throw InvalidAtlas(rep);
    static std::map<std::string, QuasiPseudogroup> cache;
    static std::mutex cache_mu;
    std::string key = atlas_signature(a);
    {
        std::lock_guard<std::mutex> lock(cache_mu);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    QuasiPseudogroup p = psi_generators_impl(a);
    std::lock_guard<std::mutex> lock(cache_mu);
    cache.emplace(std::move(key), p);
    return p;
}

MarkedAtlasGroupoid build_groupoid(const Atlas& a) {
    MarkedAtlasGroupoid g;
    g.atlas = a;
    g.generators = psi_generators(a);
    g.space = a.space;
    return g;
}

namespace {

struct WordState {
    std::string chart;  // chart the word currently lands in
    Rational at;        // image of the base point
    PiecewiseFn word;
};

}  // namespace

ArrowSearch arrows_between(const MarkedAtlasGroupoid& g, const ObjPoint& x, const ObjPoint& y,
                           unsigned cap) {
    const Chart& cx = need_chart(g.atlas, x.chart);
    const Chart& cy = need_chart(g.atlas, y.chart);
    if (!cx.domain.contains(x.x))
        throw OutOfDomain("arrows_between: point " + x.str() + " outside its chart");
    if (!cy.domain.contains(y.x))
        throw OutOfDomain("arrows_between: point " + y.str() + " outside its chart");
    ArrowSearch out;
    out.cap = cap;
    std::set<std::string> seen;
    std::vector<WordState> cur;
    auto add = [&](const std::string& chart, const Rational& at, const PiecewiseFn& word,
                   std::vector<WordState>& next) {
        GermArrow ar{x, ObjPoint{chart, at}, word, germ_at(word, x.x)};
        if (!seen.insert(ar.key()).second) return;
        if (ar.target == y) out.arrows.push_back(ar);
        next.push_back(WordState{chart, at, word});
    };
    add(x.chart, x.x, identity_on(cx.domain), cur);
    for (unsigned depth = 1; depth <= cap && !cur.empty(); ++depth) {
        std::vector<WordState> next;
        for (const WordState& ws : cur)
            for (const Embedding& gen : g.generators.elements) {
                if (gen.source != ws.chart || !gen.map.domain().contains(ws.at)) continue;
                PiecewiseFn w2;
                try {
                    w2 = compose(gen.map, ws.word);
                } catch (const NotInFragment&) {
                    out.saturated = false;
                    continue;
                }
                if (!w2.domain().contains(x.x)) continue;
                auto t = evaluate(gen.map, ws.at).as_rational();
                if (!t) {
                    out.saturated = false;
                    continue;
                }
                add(gen.target, *t, w2, next);
            }
        cur = std::move(next);
    }
    if (!cur.empty()) out.saturated = false;  // frontier still grew at the cap
    return out;
}

OrbitSearch orbit(const MarkedAtlasGroupoid& g, const ObjPoint& x, unsigned cap) {
    const Chart& cx = need_chart(g.atlas, x.chart);
    if (!cx.domain.contains(x.x))
        throw OutOfDomain("orbit: point " + x.str() + " outside its chart");
    OrbitSearch out;
    out.cap = cap;
    std::set<std::pair<std::string, Rational>> seen{{x.chart, x.x}};
    std::vector<ObjPoint> cur{x};
    for (unsigned depth = 1; depth <= cap && !cur.empty(); ++depth) {
        std::vector<ObjPoint> next;
        for (const ObjPoint& p : cur)
            for (const Embedding& gen : g.generators.elements) {
                if (gen.source != p.chart || !gen.map.domain().contains(p.x)) continue;
                auto t = evaluate(gen.map, p.x).as_rational();
                if (!t) {
                    out.saturated = false;
                    continue;
                }
                if (seen.insert({gen.target, *t}).second)
                    next.push_back(ObjPoint{gen.target, *t});
            }
        cur = std::move(next);
    }
    if (!cur.empty()) out.saturated = false;
    for (const auto& p : seen) out.points.push_back(ObjPoint{p.first, p.second});
    return out;
}

Rational marking_value(const MarkedAtlasGroupoid& g, const ObjPoint& x) {
    const Chart& c = need_chart(g.atlas, x.chart);
    PowerValue v = evaluate(c.proj, x.x);
    auto q = v.as_rational();
    if (!q) throw NotInFragment("marking value is irrational: " + v.str());
    return *q;
}

GermArrow unit_arrow(const MarkedAtlasGroupoid& g, const ObjPoint& x) {
    const Chart& c = need_chart(g.atlas, x.chart);
    PiecewiseFn id = identity_on(c.domain);
    return GermArrow{x, x, id, germ_at(id, x.x)};
}

GermArrow compose_arrows(const GermArrow& second, const GermArrow& first) {
    if (!(first.target == second.source))
        throw MalformedInput("compose_arrows: target " + first.target.str() +
                             " != source " + second.source.str());
    PiecewiseFn w = compose(second.word, first.word);
    return GermArrow{first.source, second.target, w, germ_at(w, first.source.x)};
}

GermArrow invert_arrow(const GermArrow& a) {
    PiecewiseFn w = invert(a.word);
    return GermArrow{a.target, a.source, w, germ_at(w, a.target.x)};
}

const HomObjComponent* hom_component(const GroupoidHom& h, const std::string& chart) {
    for (const HomObjComponent& c : h.obj)
        if (c.chart == chart) return &c;
    return nullptr;
}

ValidationReport validate_hom(const GroupoidHom& h, const MarkedAtlasGroupoid& src,
                              const MarkedAtlasGroupoid& dst) {
    ValidationReport rep;
    auto issue = [&](const std::string& s) { rep.issues.push_back(s); };

    for (const Chart& c : src.atlas.charts) {
        size_t count = 0;
        for (const HomObjComponent& oc : h.obj)
            if (oc.chart == c.id) ++count;
        if (count != 1) {
            issue("chart " + c.id + ": expected one object component, found " +
                  std::to_string(count));
            continue;
        }
        const HomObjComponent* oc = hom_component(h, c.id);
        const Chart* tc = find_chart(dst.atlas, oc->target_chart);
        if (!tc) {
            issue("chart " + c.id + ": target chart " + oc->target_chart + " not in target atlas");
            continue;
        }
        if (!(oc->fn.domain() == DomainSet(c.domain)))
            issue("chart " + c.id + ": component domain " + oc->fn.domain().str() +
                  " != " + c.domain.str());
        SmoothResult sm = is_smooth(oc->fn);
        if (!sm.smooth) issue("chart " + c.id + ": component not smooth: " + sm.str());
        try {
            DomainSet img = image(oc->fn);
            if (img.parts().size() > 1)
                issue("chart " + c.id + ": component image " + img.str() + " is disconnected");
            if (!subset(img, DomainSet(tc->domain)))
                issue("chart " + c.id + ": component image " + img.str() + " leaves chart " +
                      tc->id);
        } catch (const NotInFragment& e) {
            issue("chart " + c.id + ": component image: " + e.what());
        }
    }
    for (const HomObjComponent& oc : h.obj)
        if (!find_chart(src.atlas, oc.chart))
            issue("object component names unknown chart " + oc.chart);
    if (!rep.ok()) return rep;

    // arrow rules: one per generator, landing on a transition of the target
    // structure, equivariant with the object map
    std::vector<const HomArrowRule*> rules;
    for (const Embedding& gen : src.generators.elements) {
        const HomArrowRule* rule = nullptr;
        size_t count = 0;
        for (const HomArrowRule& r : h.nu)
            if (r.gen == gen) {
                rule = &r;
                ++count;
            }
        std::string label = gen.source + "->" + gen.target + " " + gen.map.str();
        if (count != 1) {
            issue("generator " + label + ": expected one arrow rule, found " +
                  std::to_string(count));
            continue;
        }
        rules.push_back(rule);
        const HomObjComponent* oi = hom_component(h, gen.source);
        const HomObjComponent* oj = hom_component(h, gen.target);
        if (rule->image.source != oi->target_chart || rule->image.target != oj->target_chart) {
            issue("generator " + label + ": arrow image charts " + rule->image.source + "->" +
                  rule->image.target + " do not match the object map");
            continue;
        }
        const Chart& ts = need_chart(dst.atlas, rule->image.source);
        const Chart& tt = need_chart(dst.atlas, rule->image.target);
        DiffeoResult dr = is_diffeomorphism(rule->image.map);
        if (!dr.ok()) {
            issue("generator " + label + ": arrow image is not a diffeomorphism: " + dr.str());
            continue;
        }
        if (!subset(rule->image.map.domain(), DomainSet(ts.domain)))
            issue("generator " + label + ": arrow image domain leaves chart " + ts.id);
        try {
            if (!subset(image(rule->image.map), DomainSet(tt.domain)))
                issue("generator " + label + ": arrow image leaves chart " + tt.id);
            PiecewiseFn lhs = compose(tt.proj, rule->image.map);
            PiecewiseFn rhs = restrict_fn(ts.proj, rule->image.map.domain());
            if (!(lhs == rhs))
                issue("generator " + label + ": arrow image is not projection-compatible");
        } catch (const NotInFragment& e) {
            issue("generator " + label + ": arrow image check: " + std::string(e.what()));
        }
        // equivariance: component_j o gen == image o component_i on dom gen
        try {
            PiecewiseFn lhs = compose(oj->fn, gen.map);
            PiecewiseFn rhs =
                restrict_fn(compose(rule->image.map, oi->fn), gen.map.domain());
            if (!(lhs == rhs))
                issue("generator " + label + ": object map is not equivariant: " + lhs.str() +
                      " vs " + rhs.str());
        } catch (const NotInFragment& e) {
            issue("generator " + label + ": equivariance check: " + std::string(e.what()));
        }
        // unit law: identity germs on a chart's self-transitions are unit arrows;
        // a cross-chart transition is never a unit even when its germ is the identity
        for (const Rational& x : probe_grid(gen.map)) {
            if (gen.source != gen.target) break;
            if (!germ_at(gen.map, x).identity()) continue;
            auto fx = evaluate(oi->fn, x).as_rational();
            if (!fx) continue;
            if (!germ_at(rule->image.map, *fx).identity())
                issue("generator " + label + ": identity germ at " + rat_str(x) +
                      " maps to a non-identity germ at " + rat_str(*fx));
        }
    }
    if (!rep.ok()) return rep;

    // equal germs get equal arrow images
    for (size_t i = 0; i < rules.size(); ++i)
        for (size_t j = i + 1; j < rules.size(); ++j) {
            const HomArrowRule& r1 = *rules[i];
            const HomArrowRule& r2 = *rules[j];
            if (r1.gen.source != r2.gen.source || r1.gen.target != r2.gen.target) continue;
            const HomObjComponent* oi = hom_component(h, r1.gen.source);
            for (const Rational& x : probe_grid(r1.gen.map)) {
                if (!r2.gen.map.domain().contains(x)) continue;
                if (!(germ_at(r1.gen.map, x) == germ_at(r2.gen.map, x))) continue;
                auto fx = evaluate(oi->fn, x).as_rational();
                if (!fx) continue;
                if (!(germ_at(r1.image.map, *fx) == germ_at(r2.image.map, *fx)))
                    issue("generators with equal germs at " + rat_str(x) +
                          " have different arrow images at " + rat_str(*fx));
            }
        }

    // composition law at the germ level
    for (const HomArrowRule* ra : rules)
        for (const HomArrowRule* rb : rules) {
            if (ra->gen.target != rb->gen.source) continue;
            PiecewiseFn comp;
            try {
                comp = compose(rb->gen.map, ra->gen.map);
            } catch (const NotInFragment&) {
                continue;
            }
            if (comp.domain().empty()) continue;
            const HomObjComponent* oi = hom_component(h, ra->gen.source);
            for (const Rational& x : probe_grid(comp)) {
                Germ gc = germ_at(comp, x);
                const HomArrowRule* rc = nullptr;
                for (const HomArrowRule* r : rules) {
                    if (r->gen.source != ra->gen.source || r->gen.target != rb->gen.target)
                        continue;
                    if (!r->gen.map.domain().contains(x)) continue;
                    if (germ_at(r->gen.map, x) == gc) {
                        rc = r;
                        break;
                    }
                }
                if (!rc) continue;  // representation gaps belong to the generator axioms
                auto fx = evaluate(oi->fn, x).as_rational();
                if (!fx) continue;
                try {
                    PiecewiseFn ic = compose(rb->image.map, ra->image.map);
                    if (!ic.domain().contains(*fx) ||
                        !(germ_at(ic, *fx) == germ_at(rc->image.map, *fx)))
                        issue("arrow images break the composition law at " + rat_str(x));
                } catch (const NotInFragment& e) {
                    issue("composition law check: " + std::string(e.what()));
                }
            }
        }
    return rep;
}

Germ hom_arrow_image(const GroupoidHom& h, const MarkedAtlasGroupoid& src, const GermArrow& a) {
    need_chart(src.atlas, a.source.chart);
    const HomObjComponent* oc = hom_component(h, a.source.chart);
    if (!oc) throw MalformedInput("hom_arrow_image: no object component for " + a.source.chart);
    auto fx = evaluate(oc->fn, a.source.x).as_rational();
    if (!fx) throw NotInFragment("hom_arrow_image: mapped base point is irrational");
    for (const HomArrowRule& rule : h.nu) {
        if (rule.gen.source != a.source.chart || rule.gen.target != a.target.chart) continue;
        if (!rule.gen.map.domain().contains(a.source.x)) continue;
        if (germ_at(rule.gen.map, a.source.x) == a.germ) return germ_at(rule.image.map, *fx);
    }
    throw MalformedInput("hom_arrow_image: arrow is not the germ of a listed generator");
}

OrbitMapResult induced_orbit_map(const GroupoidHom& h, const MarkedAtlasGroupoid& src,
                                 const MarkedAtlasGroupoid& dst) {
    OrbitMapResult out;
    auto issue = [&](const std::string& s) { out.check.issues.push_back(s); };
    std::vector<Piece> pieces;
    DomainSet covered;
    std::vector<std::pair<const Chart*, PiecewiseFn>> pushed;
    for (const Chart& c : src.atlas.charts) {
        const HomObjComponent* oc = hom_component(h, c.id);
        if (!oc) {
            issue("chart " + c.id + ": no object component");
            continue;
        }
        const Chart* tc = find_chart(dst.atlas, oc->target_chart);
        if (!tc) {
            issue("chart " + c.id + ": target chart " + oc->target_chart + " missing");
            continue;
        }
        try {
            PiecewiseFn bphi = compose(tc->proj, oc->fn);
            pushed.emplace_back(&c, bphi);
            PiecewiseFn alpha_inv = invert(restrict_fn(c.proj, DomainSet(c.fdom)));
            PiecewiseFn f_c = compose(bphi, alpha_inv);
            DomainSet fresh = set_minus(f_c.domain(), covered);
            covered = set_union(covered, f_c.domain());
            if (fresh.empty()) continue;
            PiecewiseFn part = restrict_fn(f_c, fresh);
            pieces.insert(pieces.end(), part.pieces.begin(), part.pieces.end());
        } catch (const std::exception& e) {
            issue("chart " + c.id + ": carrier component failed: " + std::string(e.what()));
        }
    }
    if (!out.check.ok()) return out;
    try {
        out.fn = make_piecewise(pieces);
    } catch (const std::exception& e) {
        issue("carrier map assembly failed: " + std::string(e.what()));
        return out;
    }
    // the square beta o phi == fn o alpha must commute on the probe grid
    for (const auto& [cp, bphi] : pushed) {
        for (const Rational& x : chart_probes(*cp)) {
            auto q = evaluate(cp->proj, x).as_rational();
            if (!q) continue;
            try {
                if (!(evaluate(out.fn, *q) == evaluate(bphi, x)))
                    issue("square does not commute over " + cp->id + " at " + rat_str(x));
            } catch (const OutOfDomain&) {
                issue("carrier map misses the marking value " + rat_str(*q) + " of " + cp->id +
                      ":" + rat_str(x));
            }
        }
    }
    return out;
}

std::string serialize_groupoid(const MarkedAtlasGroupoid& g, bool marked) {
    std::vector<const Chart*> cs;
    for (const Chart& c : g.atlas.charts) cs.push_back(&c);
    std::sort(cs.begin(), cs.end(),
              [](const Chart* a, const Chart* b) { return a->id < b->id; });
    std::map<std::string, std::string> rename;
    for (size_t i = 0; i < cs.size(); ++i) rename[cs[i]->id] = "c" + std::to_string(i);
    std::ostringstream os;
    os << (marked ? "marked-groupoid" : "groupoid") << "\n";
    if (marked) os << "space " << g.space.carrier.str() << "\n";
    for (size_t i = 0; i < cs.size(); ++i) {
        os << "chart c" << i << " " << cs[i]->domain.str() << "\n";
        if (marked) {
            os << "fdom c" << i << " " << cs[i]->fdom.str() << "\n";
            os << "mark c" << i << " " << cs[i]->proj.str() << "\n";
        }
    }
    std::vector<std::string> gens;
    for (const Embedding& e : g.generators.elements)
        gens.push_back("gen " + rename.at(e.source) + " " + rename.at(e.target) + " " +
                       e.map.str());
    std::sort(gens.begin(), gens.end());
    for (const std::string& s : gens) os << s << "\n";
    return os.str();
}

Atlas recover_atlas(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || trimmed(line) != "marked-groupoid")
        throw MalformedInput("recover_atlas: expected a marked-groupoid serialization");
    Atlas a;
    std::vector<Embedding> gens;
    auto chart_ref = [&](const std::string& id) -> Chart& {
        for (Chart& c : a.charts)
            if (c.id == id) return c;
        throw MalformedInput("recover_atlas: unknown chart " + id);
    };
    while (std::getline(is, line)) {
        if (trimmed(line).empty()) continue;
        std::istringstream ls(line);
        std::string kw;
        ls >> kw;
        std::string id, rest;
        if (kw == "space") {
            std::getline(ls, rest);
            a.space.carrier = parse_domain_set(trimmed(rest));
        } else if (kw == "chart") {
            ls >> id;
            std::getline(ls, rest);
            Chart c;
            c.id = id;
            c.domain = parse_interval(trimmed(rest));
            a.charts.push_back(c);
        } else if (kw == "fdom") {
            ls >> id;
            std::getline(ls, rest);
            chart_ref(id).fdom = parse_interval(trimmed(rest));
        } else if (kw == "mark") {
            ls >> id;
            std::getline(ls, rest);
            chart_ref(id).proj = parse_piecewise(trimmed(rest));
        } else if (kw == "gen") {
            std::string src, dst;
            ls >> src >> dst;
            std::getline(ls, rest);
            gens.push_back(Embedding{src, dst, parse_piecewise(trimmed(rest))});
        } else {
            throw MalformedInput("recover_atlas: unknown line: " + line);
        }
    }
    // full-domain self-transitions rebuild the chart groups; the rest are
    // change-of-chart witnesses
    for (const Embedding& e : gens) {
        if (e.source == e.target) {
            Chart& c = chart_ref(e.source);
            bool full = e.map.domain() == DomainSet(c.domain);
            bool onto = false;
            if (full) {
                try {
                    onto = image(e.map) == DomainSet(c.domain);
                } catch (const NotInFragment&) {
                    onto = false;
                }
            }
            if (full && onto) {
                c.group.push_back(e.map);
                continue;
            }
        }
        a.witnesses.push_back(e);
    }
    return a;
}

}  // namespace orb
