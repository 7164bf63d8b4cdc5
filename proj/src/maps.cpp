#include "orbifold/maps.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <set>

namespace orb {

namespace {

const LocalLift* lift_for(const MapRep& r, const std::string& chart) {
    for (const auto& l : r.lifts)
        if (l.src_chart == chart) return &l;
    return nullptr;
}

const Embedding* nu_image(const MapRep& r, const Embedding& lam) {
    for (const auto& rule : r.nu)
        if (rule.gen == lam) return &rule.image;
    return nullptr;
}

// lam represents gen on all of gen's probe points
bool germ_covers(const Embedding& gen, const Embedding& lam) {
    if (gen.source != lam.source || gen.target != lam.target) return false;
    for (const Rational& x : probe_grid(gen.map)) {
        if (!lam.map.domain().contains(x)) return false;
        if (!germ_equal(gen.map, lam.map, x)) return false;
    }
    return true;
}

bool has_embedding(const std::vector<Embedding>& v, const Embedding& e) {
    return std::find(v.begin(), v.end(), e) != v.end();
}

// word-reachability of fiber points under a transition set
bool p_connects(const std::vector<Embedding>& elems, const ObjPoint& from, const ObjPoint& to) {
    std::set<std::pair<std::string, Rational>> seen;
    std::vector<ObjPoint> cur{from};
    seen.insert({from.chart, from.x});
    for (int depth = 0; depth < 8 && !cur.empty(); ++depth) {
        std::vector<ObjPoint> next;
        for (const auto& p : cur)
            for (const auto& e : elems) {
                if (e.source != p.chart || !e.map.domain().contains(p.x)) continue;
                auto v = evaluate(e.map, p.x).as_rational();
                if (!v) continue;
                if (seen.insert({e.target, *v}).second) next.push_back({e.target, *v});
            }
        cur = std::move(next);
    }
    return seen.count({to.chart, to.x}) != 0;
}

GroupoidHom hom_of_rep(const MapRep& r, const Atlas& dom) {
    GroupoidHom h;
    for (const auto& c : dom.charts) {
        const LocalLift* L = lift_for(r, c.id);
        if (!L) throw MalformedInput("no lift on chart " + c.id);
        h.obj.push_back({c.id, L->dst_chart, L->map});
    }
    h.nu = r.nu;
    return h;
}

}  // namespace

PiecewiseFn identity_on_set(const DomainSet& d) {
    std::vector<Piece> ps;
    for (const auto& iv : d.parts())
        for (const auto& p : identity_on(iv).pieces) ps.push_back(p);
    return make_piecewise(ps);
}

bool same_atlas(const Atlas& a, const Atlas& b) {
    return a.charts == b.charts && a.witnesses == b.witnesses &&
           a.space.carrier == b.space.carrier;
}

Atlas restriction_atlas(const Chart& base, const std::vector<Interval>& windows, const Space& sp) {
    Atlas a;
    a.space = sp;
    std::vector<PiecewiseFn> incl;
    for (const auto& w : windows) {
        Chart c = restrict_chart(base, w);
        if (find_chart(a, c.id)) continue;
        a.charts.push_back(c);
        incl.push_back(identity_on(w));
    }
    for (size_t j = 0; j < a.charts.size(); ++j)
        for (size_t k = 0; k < a.charts.size(); ++k) {
            if (j == k) continue;
            for (const auto& g : base.group) {
                try {
                    PiecewiseFn t = compose(invert(incl[k]), compose(g, incl[j]));
                    if (t.domain().empty()) continue;
                    Embedding e{a.charts[j].id, a.charts[k].id, t};
                    if (!has_embedding(a.witnesses, e)) a.witnesses.push_back(e);
                } catch (const std::exception&) {
                    // empty overlap for this group element
                }
            }
        }
    return a;
}

MapRep identity_rep(const Atlas& a) {
    std::vector<LocalLift> lifts;
    for (const auto& c : a.charts) lifts.push_back({c.id, c.id, identity_on(c.domain)});
    return complete_identity_lift(lifts, a, a);
}

ChartedMap identity_map(const Atlas& a) { return {a, a, identity_rep(a)}; }

ValidationReport verify_local_lift(const LocalLift& lift, const PiecewiseFn& f, const Chart& c,
                                   const Chart& cp) {
    ValidationReport rep;
    if (lift.map.domain() != DomainSet(c.domain))
        rep.issues.push_back("lift on " + c.id + " is not defined on the whole chart");
    auto sm = is_smooth(lift.map);
    if (!sm.smooth) rep.issues.push_back("lift on " + c.id + " is not smooth: " + sm.str());
    try {
        if (!subset(image(lift.map), DomainSet(cp.domain)))
            rep.issues.push_back("lift on " + c.id + " leaves the target chart " + cp.id);
    } catch (const NotInFragment& e) {
        rep.issues.push_back("lift image on " + c.id + " leaves the fragment: " + std::string(e.what()));
    }
    try {
        PiecewiseFn lhs = compose(cp.proj, lift.map);
        PiecewiseFn rhs = compose(f, c.proj);
        if (lhs != rhs)
            rep.issues.push_back("projection square fails on " + c.id + ": " + lhs.str() +
                                 " vs " + rhs.str());
    } catch (const std::exception& e) {
        rep.issues.push_back("projection square on " + c.id + " leaves the fragment: " +
                             std::string(e.what()));
    }
    return rep;
}

namespace {

std::string embedding_signature(const Embedding& e) {
    return e.source + ">" + e.target + ":" + e.map.str();
}

std::string rep_signature(const MapRep& r) {
    std::string s = r.f.str();
    for (const auto& l : r.lifts) {
        s += '|';
        s += l.src_chart;
        s += '>';
        s += l.dst_chart;
        s += ':';
        s += l.map.str();
    }
    s += '$';
    for (const auto& e : r.P.elements) {
        s += embedding_signature(e);
        s += ',';
    }
    s += '$';
    for (const auto& rule : r.nu) {
        s += embedding_signature(rule.gen);
        s += '~';
        s += embedding_signature(rule.image);
        s += ',';
    }
    return s;
}

ValidationReport validate_representative_impl(const MapRep& r, const Atlas& dom,
                                              const Atlas& rng) {
    ValidationReport rep;
    if (r.f.domain() != dom.space.carrier)
        rep.issues.push_back("carrier map is not defined on the whole carrier");
    if (!is_continuous(r.f)) rep.issues.push_back("carrier map is not continuous");
    try {
        if (!subset(image(r.f), rng.space.carrier))
            rep.issues.push_back("carrier map leaves the range carrier");
    } catch (const NotInFragment& e) {
        rep.issues.push_back("carrier image leaves the fragment: " + std::string(e.what()));
    }

    for (const auto& l : r.lifts)
        if (!find_chart(dom, l.src_chart))
            rep.issues.push_back("lift source " + l.src_chart + " is not in the domain atlas");
    for (const auto& c : dom.charts) {
        size_t n = 0;
        for (const auto& l : r.lifts)
            if (l.src_chart == c.id) ++n;
        if (n != 1) {
            rep.issues.push_back("expected one lift on chart " + c.id + ", found " +
                                 std::to_string(n));
            continue;
        }
        const LocalLift& L = *lift_for(r, c.id);
        const Chart* tc = find_chart(rng, L.dst_chart);
        if (!tc) {
            rep.issues.push_back("lift target " + L.dst_chart + " is not in the range atlas");
            continue;
        }
        auto lr = verify_local_lift(L, r.f, c, *tc);
        rep.issues.insert(rep.issues.end(), lr.issues.begin(), lr.issues.end());
    }

    for (const auto& lam : r.P.elements) {
        if (!find_chart(dom, lam.source) || !find_chart(dom, lam.target)) {
            rep.issues.push_back("transition " + lam.source + "->" + lam.target +
                                 " references a missing chart");
            continue;
        }
        auto er = validate_embedding(lam, dom);
        rep.issues.insert(rep.issues.end(), er.issues.begin(), er.issues.end());
    }
    {
        auto qr = quasi_pseudogroup_report(dom, r.P.elements);
        rep.issues.insert(rep.issues.end(), qr.issues.begin(), qr.issues.end());
    }
    // generation: the transitions connect every fiber pair over the probe values
    for (const auto& ci : dom.charts)
        for (const Rational& x : chart_probes(ci)) {
            auto mv = evaluate(ci.proj, x).as_rational();
            if (!mv) continue;
            for (const auto& cj : dom.charts) {
                std::vector<Rational> ys;
                try {
                    ys = preimages(cj.proj, *mv);
                } catch (const NotInFragment&) {
                    continue;
                }
                for (const Rational& y : ys)
                    if (!p_connects(r.P.elements, {ci.id, x}, {cj.id, y}))
                        rep.issues.push_back("transitions do not connect " + ci.id + ":" +
                                             rat_str(x) + " to " + cj.id + ":" + rat_str(y));
            }
        }
    if (!rep.ok()) return rep;

    // equivariance, germ well-definedness, multiplicativity and the unit law
    MarkedAtlasGroupoid srcg{dom, r.P, dom.space};
    MarkedAtlasGroupoid dstg{rng, {}, rng.space};
    auto hr = validate_hom(hom_of_rep(r, dom), srcg, dstg);
    rep.issues.insert(rep.issues.end(), hr.issues.begin(), hr.issues.end());
    return rep;
}

}  // namespace

ValidationReport validate_representative(const MapRep& r, const Atlas& dom, const Atlas& rng) {
    static std::map<std::string, ValidationReport> cache;
    static std::mutex cache_mu;
    std::string key = atlas_signature(dom) + "##" + atlas_signature(rng) + "##" + rep_signature(r);
    {
        std::lock_guard<std::mutex> lock(cache_mu);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    ValidationReport rep = validate_representative_impl(r, dom, rng);
    std::lock_guard<std::mutex> lock(cache_mu);
    cache.emplace(std::move(key), rep);
    return rep;
}

ValidationReport validate_charted_map(const ChartedMap& m) {
    ValidationReport rep;
    auto da = validate_atlas(m.dom);
    for (const auto& s : da.issues) rep.issues.push_back("domain atlas: " + s);
    auto ra = validate_atlas(m.rng);
    for (const auto& s : ra.issues) rep.issues.push_back("range atlas: " + s);
    if (!rep.ok()) return rep;
    auto rr = validate_representative(m.rep, m.dom, m.rng);
    rep.issues.insert(rep.issues.end(), rr.issues.begin(), rr.issues.end());
    return rep;
}

GroupoidHom to_hom(const MapRep& r, const Atlas& dom, const Atlas& rng) {
    for (const auto& l : r.lifts)
        if (!find_chart(rng, l.dst_chart))
            throw RangeFamilyNotContained("lift target " + l.dst_chart +
                                          " is not in the range atlas");
    GroupoidHom h = hom_of_rep(r, dom);
    h.nu.clear();
    QuasiPseudogroup gens = psi_generators(dom);
    for (const auto& g : gens.elements) {
        const Embedding* img = nullptr;
        for (const auto& lam : r.P.elements)
            if (germ_covers(g, lam)) {
                img = nu_image(r, lam);
                break;
            }
        Embedding image;
        if (img) {
            image = *img;
        } else {
            // two-step products of the transition set
            bool found = false;
            for (const auto& l2 : r.P.elements) {
                if (found) break;
                for (const auto& l1 : r.P.elements) {
                    if (l1.source != g.source || l2.target != g.target ||
                        l1.target != l2.source)
                        continue;
                    try {
                        Embedding w{g.source, g.target, compose(l2.map, l1.map)};
                        if (!germ_covers(g, w)) continue;
                        const Embedding* m1 = nu_image(r, l1);
                        const Embedding* m2 = nu_image(r, l2);
                        if (!m1 || !m2) continue;
                        image = {m1->source, m2->target, compose(m2->map, m1->map)};
                        found = true;
                        break;
                    } catch (const std::exception&) {
                        continue;
                    }
                }
            }
            if (!found)
                throw MalformedInput("generator " + g.source + "->" + g.target +
                                     " is not germ-covered by the transition set");
        }
        h.nu.push_back({g, image});
    }
    // the marking square: the induced carrier map must reproduce f
    MarkedAtlasGroupoid srcg{dom, gens, dom.space};
    MarkedAtlasGroupoid dstg{rng, {}, rng.space};
    auto om = induced_orbit_map(h, srcg, dstg);
    if (!om.check.ok() || om.fn != r.f)
        throw MalformedInput("marking square fails: induced carrier map " + om.fn.str() +
                             " vs " + r.f.str());
    return h;
}

GroupoidHom to_hom(const ChartedMap& m) { return to_hom(m.rep, m.dom, m.rng); }

MapRep from_hom(const GroupoidHom& h, const MarkedAtlasGroupoid& src,
                const MarkedAtlasGroupoid& dst) {
    MapRep r;
    for (const auto& c : src.atlas.charts) {
        const HomObjComponent* oc = hom_component(h, c.id);
        if (!oc) throw MalformedInput("no object component on chart " + c.id);
        r.lifts.push_back({c.id, oc->target_chart, oc->fn});
    }
    auto om = induced_orbit_map(h, src, dst);
    if (!om.check.ok())
        throw MalformedInput("induced carrier map does not verify: " + om.check.str());
    r.f = om.fn;
    r.P = src.generators;
    r.nu = h.nu;
    return r;
}

bool reps_equivalent(const MapRep& r1, const MapRep& r2, const Atlas& dom, const Atlas& rng) {
    (void)rng;
    if (r1.f != r2.f) return false;
    for (const auto& c : dom.charts) {
        const LocalLift* a = lift_for(r1, c.id);
        const LocalLift* b = lift_for(r2, c.id);
        if (!a || !b || *a != *b) return false;
    }
    // transition assignments must agree as germs wherever the sets do
    for (const auto& l1 : r1.P.elements)
        for (const auto& l2 : r2.P.elements) {
            if (l1.source != l2.source || l1.target != l2.target) continue;
            const Embedding* m1 = nu_image(r1, l1);
            const Embedding* m2 = nu_image(r2, l2);
            if (!m1 || !m2) continue;
            std::vector<Rational> pts = probe_grid(l1.map);
            for (const Rational& x : probe_grid(l2.map)) pts.push_back(x);
            for (const Rational& x : pts) {
                if (!l1.map.domain().contains(x) || !l2.map.domain().contains(x)) continue;
                if (!germ_equal(l1.map, l2.map, x)) continue;
                const LocalLift* L = lift_for(r1, l1.source);
                if (!L) return false;
                auto fx = evaluate(L->map, x).as_rational();
                if (!fx) continue;
                if (m1->source != m2->source || m1->target != m2->target) return false;
                if (!m1->map.domain().contains(*fx) || !m2->map.domain().contains(*fx))
                    return false;
                if (!germ_equal(m1->map, m2->map, *fx)) return false;
            }
        }
    return true;
}

bool representatives_equivalent(const ChartedMap& a, const ChartedMap& b) {
    if (!same_atlas(a.dom, b.dom)) throw AtlasMismatch("different domain atlases");
    if (!same_atlas(a.rng, b.rng)) throw AtlasMismatch("different range atlases");
    return reps_equivalent(a.rep, b.rep, a.dom, a.rng);
}

LocalLift induce_local_lift(const LocalLift& lift, const Embedding& lam, const Embedding& mu) {
    if (lam.target != lift.src_chart)
        throw MalformedInput("lambda lands in " + lam.target + " but the lift starts on " +
                             lift.src_chart);
    if (mu.target != lift.dst_chart)
        throw MalformedInput("mu lands in " + mu.target + " but the lift ends on " +
                             lift.dst_chart);
    DomainSet img = image_on(lift.map, image(lam.map));
    if (!subset(img, image(mu.map)))
        throw ImageNotContained("lift image " + img.str() + " is not inside " +
                                image(mu.map).str());
    return {lam.source, mu.source, compose(invert(mu.map), compose(lift.map, lam.map))};
}

namespace {

MapRep complete_identity_lift_impl(const std::vector<LocalLift>& lifts, const Atlas& dom,
                                   const Atlas& rng) {
    if (dom.space.carrier != rng.space.carrier)
        throw MalformedInput("identity lift between different carriers");
    MapRep r;
    r.f = identity_on_set(dom.space.carrier);
    for (const auto& c : dom.charts) {
        const LocalLift* L = nullptr;
        size_t n = 0;
        for (const auto& l : lifts)
            if (l.src_chart == c.id) {
                L = &l;
                ++n;
            }
        if (n != 1)
            throw MalformedInput("expected one lift on chart " + c.id + ", found " +
                                 std::to_string(n));
        auto dr = is_diffeomorphism(L->map);
        if (!dr.ok()) throw NotLocalDiffeo(c.id, dr.str());
        if (!find_chart(rng, L->dst_chart))
            throw MalformedInput("lift target " + L->dst_chart + " is not in the range atlas");
        r.lifts.push_back(*L);
    }
    r.P = psi_generators(dom);
    for (const auto& lam : r.P.elements) {
        const LocalLift* Ls = lift_for(r, lam.source);
        const LocalLift* Lt = lift_for(r, lam.target);
        PiecewiseFn m = compose(Lt->map, compose(lam.map, invert(Ls->map)));
        r.nu.push_back({lam, Embedding{Ls->dst_chart, Lt->dst_chart, m}});
    }
    return r;
}

}  // namespace

MapRep complete_identity_lift(const std::vector<LocalLift>& lifts, const Atlas& dom,
                              const Atlas& rng) {
    static std::map<std::string, MapRep> cache;
    static std::mutex cache_mu;
    std::string key = atlas_signature(dom) + "##" + atlas_signature(rng) + "##";
    for (const auto& l : lifts) key += l.src_chart + ">" + l.dst_chart + ":" + l.map.str() + "|";
    {
        std::lock_guard<std::mutex> lock(cache_mu);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    MapRep r = complete_identity_lift_impl(lifts, dom, rng);
    std::lock_guard<std::mutex> lock(cache_mu);
    cache.emplace(std::move(key), r);
    return r;
}

namespace {

bool is_identity_lift_impl(const ChartedMap& m) {
    if (m.dom.space.carrier != m.rng.space.carrier) return false;
    if (m.rep.f != identity_on_set(m.dom.space.carrier)) return false;
    for (const auto& l : m.rep.lifts)
        if (!is_diffeomorphism(l.map).ok()) return false;
    if (!validate_charted_map(m).ok()) return false;
    // the domain and range charts must define the same structure
    for (const auto& c : m.dom.charts)
        for (const auto& cp : m.rng.charts)
            if (charts_compatible(c, cp).verdict != Compat::Compatible) return false;
    return true;
}

}  // namespace

bool is_identity_lift(const ChartedMap& m) {
    static std::map<std::string, bool> cache;
    static std::mutex cache_mu;
    std::string key =
        atlas_signature(m.dom) + "##" + atlas_signature(m.rng) + "##" + rep_signature(m.rep);
    {
        std::lock_guard<std::mutex> lock(cache_mu);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    bool ok = is_identity_lift_impl(m);
    std::lock_guard<std::mutex> lock(cache_mu);
    cache.emplace(std::move(key), ok);
    return ok;
}

ChartedMap induce_charted_map(const ChartedMap& m, const Atlas& new_dom,
                              const std::vector<Chart>& rng_charts,
                              const std::vector<Embedding>& lams,
                              const std::vector<Embedding>& mus) {
    if (new_dom.charts.size() != lams.size() || lams.size() != mus.size() ||
        rng_charts.size() != mus.size())
        throw MalformedInput("induction data must pair one embedding with each new chart");
    MapRep r;
    r.f = m.rep.f;
    for (size_t j = 0; j < new_dom.charts.size(); ++j) {
        if (lams[j].source != new_dom.charts[j].id)
            throw MalformedInput("lambda does not start on " + new_dom.charts[j].id);
        if (mus[j].source != rng_charts[j].id)
            throw MalformedInput("mu does not start on " + rng_charts[j].id);
        const LocalLift* L = lift_for(m.rep, lams[j].target);
        if (!L) throw MalformedInput("no lift on chart " + lams[j].target);
        try {
            r.lifts.push_back(induce_local_lift(*L, lams[j], mus[j]));
        } catch (const ImageNotContained& e) {
            throw ImageNotContained("chart " + new_dom.charts[j].id + ": " + e.what());
        }
    }

    // range: the new charts, the whole original atlas, and the mu transitions
    Atlas rng;
    rng.space = m.rng.space;
    for (const auto& c : rng_charts)
        if (!find_chart(rng, c.id)) rng.charts.push_back(c);
    for (const auto& c : m.rng.charts)
        if (!find_chart(rng, c.id)) rng.charts.push_back(c);
    rng.witnesses = m.rng.witnesses;
    for (size_t j = 0; j < mus.size(); ++j) {
        const Chart& tgt = need_chart(rng, mus[j].target);
        for (const auto& g : tgt.group) {
            try {
                Embedding e{mus[j].source, mus[j].target, compose(g, mus[j].map)};
                if (e.map.domain().empty()) continue;
                if (!has_embedding(rng.witnesses, e)) rng.witnesses.push_back(e);
                Embedding inv{mus[j].target, mus[j].source, invert(e.map)};
                if (!has_embedding(rng.witnesses, inv)) rng.witnesses.push_back(inv);
            } catch (const std::exception&) {
            }
        }
        for (size_t k = 0; k < mus.size(); ++k) {
            if (k == j || mus[k].target != mus[j].target) continue;
            for (const auto& g : tgt.group) {
                try {
                    PiecewiseFn t = compose(invert(mus[k].map), compose(g, mus[j].map));
                    if (t.domain().empty()) continue;
                    Embedding e{mus[j].source, mus[k].source, t};
                    if (!has_embedding(rng.witnesses, e)) rng.witnesses.push_back(e);
                } catch (const std::exception&) {
                }
            }
        }
    }

    // transitions of the new domain, assigned through the old structure
    r.P = psi_generators(new_dom);
    auto index_of = [&](const std::string& id) {
        for (size_t i = 0; i < new_dom.charts.size(); ++i)
            if (new_dom.charts[i].id == id) return i;
        throw MalformedInput("unknown chart " + id);
    };
    for (const auto& lam : r.P.elements) {
        size_t i = index_of(lam.source), j = index_of(lam.target);
        PiecewiseFn lam_hat = compose(lams[j].map, compose(lam.map, invert(lams[i].map)));
        Embedding hat{lams[i].target, lams[j].target, lam_hat};
        const Embedding* img = nullptr;
        for (const auto& cand : m.rep.P.elements)
            if (germ_covers(hat, cand)) {
                img = nu_image(m.rep, cand);
                break;
            }
        if (!img)
            throw MalformedInput("no old transition matches the induced one on " + lam.source +
                                 "->" + lam.target);
        PiecewiseFn nm = compose(invert(mus[j].map), compose(img->map, mus[i].map));
        r.nu.push_back({lam, Embedding{mus[i].source, mus[j].source, nm}});
    }
    return {new_dom, rng, r};
}

ChartedMap compose_reps(const ChartedMap& g, const ChartedMap& f) {
    if (!same_atlas(f.rng, g.dom))
        throw AtlasChainMismatch("inner range and outer domain atlases differ");
    MapRep r;
    r.f = compose(g.rep.f, f.rep.f);
    for (const auto& c : f.dom.charts) {
        const LocalLift* Lf = lift_for(f.rep, c.id);
        if (!Lf) throw MalformedInput("no lift on chart " + c.id);
        const LocalLift* Lg = lift_for(g.rep, Lf->dst_chart);
        if (!Lg) throw AtlasChainMismatch("no outer lift on chart " + Lf->dst_chart);
        r.lifts.push_back({c.id, Lg->dst_chart, compose(Lg->map, Lf->map)});
    }
    r.P = f.rep.P;
    for (const auto& rule : f.rep.nu) {
        const Embedding& mid = rule.image;
        const LocalLift* Ls = lift_for(f.rep, rule.gen.source);
        if (!Ls) throw MalformedInput("no lift on chart " + rule.gen.source);
        const Embedding* img = nullptr;
        for (const Rational& x : probe_grid(rule.gen.map)) {
            auto fx = evaluate(Ls->map, x).as_rational();
            if (!fx || !mid.map.domain().contains(*fx)) continue;
            for (const auto& xi : g.rep.P.elements) {
                if (xi.source != mid.source || xi.target != mid.target) continue;
                if (!xi.map.domain().contains(*fx)) continue;
                if (!germ_equal(xi.map, mid.map, *fx)) continue;
                img = nu_image(g.rep, xi);
                break;
            }
            if (img) break;
        }
        if (!img)
            throw MalformedInput("no outer transition matches the image of " + rule.gen.source +
                                 "->" + rule.gen.target + " in the middle structure");
        r.nu.push_back({rule.gen, *img});
    }
    return {f.dom, g.rng, r};
}

bool verify_equivalence_witness(const ChartedMap& f1, const ChartedMap& f2,
                                const EquivalenceWitness& w) {
    try {
        if (!same_atlas(w.eps1.dom, w.W) || !same_atlas(w.eps2.dom, w.W)) return false;
        if (!same_atlas(w.eps1p.dom, w.Wp) || !same_atlas(w.eps2p.dom, w.Wp)) return false;
        if (!same_atlas(w.eps1.rng, f1.dom) || !same_atlas(w.eps2.rng, f2.dom)) return false;
        if (!same_atlas(w.eps1p.rng, f1.rng) || !same_atlas(w.eps2p.rng, f2.rng)) return false;
        if (!same_atlas(w.bridge.dom, w.W) || !same_atlas(w.bridge.rng, w.Wp)) return false;
        if (!is_identity_lift(w.eps1) || !is_identity_lift(w.eps2)) return false;
        if (!is_identity_lift(w.eps1p) || !is_identity_lift(w.eps2p)) return false;
        if (!validate_charted_map(w.bridge).ok()) return false;
        if (!representatives_equivalent(compose_reps(f1, w.eps1),
                                        compose_reps(w.eps1p, w.bridge)))
            return false;
        return representatives_equivalent(compose_reps(f2, w.eps2),
                                          compose_reps(w.eps2p, w.bridge));
    } catch (const std::exception&) {
        return false;
    }
}

namespace {

// identity lift sub -> sup whose components are plain inclusions
std::optional<ChartedMap> inclusion_identity(const Atlas& sub, const Atlas& sup) {
    std::vector<LocalLift> lifts;
    for (const auto& c : sub.charts) {
        const Chart* host = nullptr;
        for (const auto& d : sup.charts) {
            if (!subset(DomainSet(c.domain), DomainSet(d.domain))) continue;
            if (restrict_fn(d.proj, DomainSet(c.domain)) != c.proj) continue;
            host = &d;
            break;
        }
        if (!host) return std::nullopt;
        lifts.push_back({c.id, host->id, identity_on(c.domain)});
    }
    try {
        return ChartedMap{sub, sup, complete_identity_lift(lifts, sub, sup)};
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

// witness candidate with W = base.dom, Wp = base.rng and the base map itself
// as the bridge; the other side is reached by inclusion identity lifts
std::optional<EquivalenceWitness> inclusion_ansatz(const ChartedMap& base,
                                                   const ChartedMap& other, bool base_is_second) {
    auto eo = inclusion_identity(base.dom, other.dom);
    auto eop = inclusion_identity(base.rng, other.rng);
    if (!eo || !eop) return std::nullopt;
    EquivalenceWitness w;
    w.W = base.dom;
    w.Wp = base.rng;
    ChartedMap eb = identity_map(base.dom);
    ChartedMap ebp = identity_map(base.rng);
    w.bridge = base;
    if (base_is_second) {
        w.eps1 = *eo;
        w.eps2 = eb;
        w.eps1p = *eop;
        w.eps2p = ebp;
    } else {
        w.eps1 = eb;
        w.eps2 = *eo;
        w.eps1p = ebp;
        w.eps2p = *eop;
    }
    return w;
}

// refinement by pulling the pairwise lift-image overlaps back into the first
// domain atlas; both composite lifts over a piece agree with the first one
std::optional<EquivalenceWitness> identity_refinement(const ChartedMap& f1,
                                                      const ChartedMap& f2) {
    if (!same_atlas(f1.rng, f2.rng) || f1.rng.charts.size() != 1) return std::nullopt;
    if (!is_identity_lift(f1) || !is_identity_lift(f2)) return std::nullopt;
    const Chart& base = f1.rng.charts[0];
    Atlas W;
    W.space = f1.dom.space;
    struct PieceData {
        size_t i, j;
        Interval D;
        PiecewiseFn u;  // the first lift restricted to D
    };
    std::vector<PieceData> data;
    for (size_t i = 0; i < f1.dom.charts.size(); ++i) {
        const LocalLift& L1 = *lift_for(f1.rep, f1.dom.charts[i].id);
        DomainSet im1 = image(L1.map);
        PiecewiseFn inv1 = invert(L1.map);
        for (size_t j = 0; j < f2.dom.charts.size(); ++j) {
            const LocalLift& L2 = *lift_for(f2.rep, f2.dom.charts[j].id);
            DomainSet overlap = set_intersect(im1, image(L2.map));
            for (const Interval& t : overlap.parts()) {
                if (t.is_point() || !t.is_open_set()) continue;
                DomainSet dset = image_on(inv1, DomainSet(t));
                if (dset.parts().size() != 1) continue;
                Interval D = dset.parts()[0];
                Chart cw;
                try {
                    cw = restrict_chart(f1.dom.charts[i], D);
                } catch (const std::exception&) {
                    continue;
                }
                if (find_chart(W, cw.id)) continue;
                W.charts.push_back(cw);
                data.push_back({i, j, D, restrict_fn(L1.map, DomainSet(D))});
            }
        }
    }
    // transitions between the pieces, conjugated through the base chart
    for (size_t a = 0; a < data.size(); ++a)
        for (size_t b = 0; b < data.size(); ++b) {
            if (a == b) continue;
            for (const auto& g : base.group) {
                try {
                    PiecewiseFn t = compose(invert(data[b].u), compose(g, data[a].u));
                    if (t.domain().empty()) continue;
                    Embedding e{W.charts[a].id, W.charts[b].id, t};
                    if (!has_embedding(W.witnesses, e)) W.witnesses.push_back(e);
                } catch (const std::exception&) {
                }
            }
        }
    try {
        if (!validate_atlas(W).ok()) return std::nullopt;
        std::vector<LocalLift> l1, l2;
        for (size_t k = 0; k < data.size(); ++k) {
            const auto& d = data[k];
            l1.push_back({W.charts[k].id, f1.dom.charts[d.i].id, identity_on(d.D)});
            const LocalLift& L2 = *lift_for(f2.rep, f2.dom.charts[d.j].id);
            l2.push_back({W.charts[k].id, f2.dom.charts[d.j].id, compose(invert(L2.map), d.u)});
        }
        EquivalenceWitness w;
        w.W = W;
        w.Wp = f1.rng;
        w.eps1 = {W, f1.dom, complete_identity_lift(l1, W, f1.dom)};
        w.eps2 = {W, f2.dom, complete_identity_lift(l2, W, f2.dom)};
        w.eps1p = identity_map(f1.rng);
        w.eps2p = identity_map(f2.rng);
        w.bridge = compose_reps(f1, w.eps1);
        return w;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

}  // namespace

std::optional<EquivalenceWitness> common_refinement_witness(const ChartedMap& f1,
                                                            const ChartedMap& f2) {
    std::vector<EquivalenceWitness> cands;
    if (same_atlas(f1.dom, f2.dom) && same_atlas(f1.rng, f2.rng)) {
        EquivalenceWitness w;
        w.W = f1.dom;
        w.Wp = f1.rng;
        w.eps1 = w.eps2 = identity_map(f1.dom);
        w.eps1p = w.eps2p = identity_map(f1.rng);
        w.bridge = f1;
        cands.push_back(w);
    }
    if (auto w = inclusion_ansatz(f2, f1, true)) cands.push_back(*w);
    if (auto w = inclusion_ansatz(f1, f2, false)) cands.push_back(*w);
    if (auto w = identity_refinement(f1, f2)) cands.push_back(*w);
    for (const auto& w : cands)
        if (verify_equivalence_witness(f1, f2, w)) return w;
    return std::nullopt;
}

ChartedMap compose_orbifold_maps(const ChartedMap& g, const ChartedMap& f) {
    if (same_atlas(f.rng, g.dom)) return compose_reps(g, f);
    // retarget the inner lifts into the outer domain atlas
    MapRep r2 = f.rep;
    for (auto& L : r2.lifts) {
        const Chart& old = need_chart(f.rng, L.dst_chart);
        DomainSet img;
        try {
            img = image(L.map);
        } catch (const NotInFragment& e) {
            throw RefinementFailed("lift image on " + L.src_chart +
                                   " leaves the fragment: " + std::string(e.what()));
        }
        const Chart* pick = nullptr;
        for (const auto& k : g.dom.charts) {
            if (!subset(DomainSet(k.domain), DomainSet(old.domain))) continue;
            if (restrict_fn(old.proj, DomainSet(k.domain)) != k.proj) continue;
            if (!subset(img, DomainSet(k.domain))) continue;
            pick = &k;
            break;
        }
        if (!pick)
            throw RefinementFailed("no chart of the outer domain atlas contains the lift image on " +
                                   L.src_chart);
        L.dst_chart = pick->id;
    }
    for (auto& rule : r2.nu) {
        const LocalLift* Ls = lift_for(r2, rule.gen.source);
        const LocalLift* Lt = lift_for(r2, rule.gen.target);
        if (!Ls || !Lt) throw RefinementFailed("transition references a chart without a lift");
        const Chart& ns = need_chart(g.dom, Ls->dst_chart);
        const Chart& nt = need_chart(g.dom, Lt->dst_chart);
        try {
            PiecewiseFn m = restrict_fn(rule.image.map,
                                        set_intersect(rule.image.map.domain(),
                                                      DomainSet(ns.domain)));
            m = compose(identity_on(nt.domain), m);
            rule.image = {ns.id, nt.id, m};
        } catch (const std::exception& e) {
            throw RefinementFailed("cannot restrict a transition image into the middle atlas: " +
                                   std::string(e.what()));
        }
    }
    auto vr = validate_representative(r2, f.dom, g.dom);
    if (!vr.ok())
        throw RefinementFailed("retargeted representative does not validate: " + vr.str());
    return compose_reps(g, ChartedMap{f.dom, g.dom, r2});
}

bool is_unit_weak_equivalence(const GroupoidHom& h, const MarkedAtlasGroupoid& src,
                              const MarkedAtlasGroupoid& dst) {
    if (src.space.carrier != dst.space.carrier) return false;
    try {
        MapRep r = from_hom(h, src, dst);
        return is_identity_lift({src.atlas, dst.atlas, r});
    } catch (const std::exception&) {
        return false;
    }
}

bool uwe_structural_probe(const GroupoidHom& h, const MarkedAtlasGroupoid& src,
                          const MarkedAtlasGroupoid& dst, unsigned cap) {
    if (src.space.carrier != dst.space.carrier) return false;
    try {
        auto om = induced_orbit_map(h, src, dst);
        if (!om.check.ok()) return false;
        if (om.fn != identity_on_set(src.space.carrier)) return false;
        // essential surjectivity: every probe orbit is hit by the object map
        for (const auto& cp : dst.atlas.charts)
            for (const Rational& y : chart_probes(cp)) {
                auto oy = orbit(dst, {cp.id, y}, cap);
                if (!oy.saturated) return false;
                bool covered = false;
                for (const auto& z : oy.points) {
                    for (const auto& oc : h.obj) {
                        if (oc.target_chart != z.chart) continue;
                        if (!preimages(oc.fn, z.x).empty()) {
                            covered = true;
                            break;
                        }
                    }
                    if (covered) break;
                }
                if (!covered) return false;
            }
        // full faithfulness: arrow sets over probe pairs map bijectively
        for (const auto& c : src.atlas.charts) {
            const HomObjComponent* oc = hom_component(h, c.id);
            if (!oc) return false;
            for (const Rational& x : chart_probes(c)) {
                ObjPoint X{c.id, x};
                auto fx = evaluate(oc->fn, x).as_rational();
                if (!fx) return false;
                auto mates = orbit(src, X, cap);
                if (!mates.saturated) return false;
                for (const auto& Y : mates.points) {
                    const HomObjComponent* yc = hom_component(h, Y.chart);
                    if (!yc) return false;
                    auto fy = evaluate(yc->fn, Y.x).as_rational();
                    if (!fy) return false;
                    auto sa = arrows_between(src, X, Y, cap);
                    auto da = arrows_between(dst, {oc->target_chart, *fx},
                                             {yc->target_chart, *fy}, cap);
                    if (!sa.saturated || !da.saturated) return false;
                    std::set<std::string> imgs, want;
                    for (const auto& ar : sa.arrows)
                        imgs.insert(hom_arrow_image(h, src, ar).str());
                    for (const auto& ar : da.arrows) want.insert(ar.germ.str());
                    if (imgs != want) return false;
                }
            }
        }
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

std::optional<RefuteCertificate> refute_hom_equivalence(
    const GroupoidHom& phi, const MarkedAtlasGroupoid& sphi, const MarkedAtlasGroupoid& dphi,
    const GroupoidHom& psi, const MarkedAtlasGroupoid& spsi, const MarkedAtlasGroupoid& dpsi,
    unsigned cap) {
    (void)dphi;
    (void)dpsi;
    for (const auto& c1 : sphi.atlas.charts)
        for (const Rational& x : chart_probes(c1)) {
            ObjPoint p1{c1.id, x};
            Rational mark;
            try {
                mark = marking_value(sphi, p1);
            } catch (const NotInFragment&) {
                continue;
            }
            for (const auto& c2 : spsi.atlas.charts) {
                std::vector<Rational> ys;
                try {
                    ys = preimages(c2.proj, mark);
                } catch (const NotInFragment&) {
                    continue;
                }
                for (const Rational& y : ys) {
                    ObjPoint p2{c2.id, y};
                    auto a1 = arrows_between(sphi, p1, p1, cap);
                    auto a2 = arrows_between(spsi, p2, p2, cap);
                    if (!a1.saturated || !a2.saturated) continue;
                    std::set<std::string> s1, s2;
                    try {
                        for (const auto& ar : a1.arrows)
                            s1.insert(hom_arrow_image(phi, sphi, ar).str());
                        for (const auto& ar : a2.arrows)
                            s2.insert(hom_arrow_image(psi, spsi, ar).str());
                    } catch (const std::exception&) {
                        continue;
                    }
                    if (s1.size() != s2.size())
                        return RefuteCertificate{p1, p2, mark, s1.size(), s2.size()};
                }
            }
        }
    return std::nullopt;
}

}  // namespace orb
