#include "scenario.hpp"

#include "orbifold/maps.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace okit {

using nlohmann::ordered_json;

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// split at the first occurrence of sep, trimming both halves
bool split_first(const std::string& s, const std::string& sep, std::string& l, std::string& r) {
    size_t p = s.find(sep);
    if (p == std::string::npos) return false;
    l = trim(s.substr(0, p));
    r = trim(s.substr(p + sep.size()));
    return true;
}

std::vector<std::string> tokenize(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    std::string t;
    while (in >> t) out.push_back(t);
    return out;
}

// ---- parsed scenario items ----

struct KV {
    int line;
    std::string key, value;
};

struct BlockItem {
    int line = 0;
    std::string kind, id;
    std::vector<KV> kvs;
};

struct CmdItem {
    int line = 0;
    std::string verb, raw;
    std::vector<std::string> pos;
    std::map<std::string, std::string> kw;
};

struct Item {
    bool is_block = false;
    BlockItem block;
    CmdItem cmd;
};

struct CmdSpec {
    size_t npos;
    const char* key;  // the single key=value argument, if any
    const char* usage;
};

const std::map<std::string, CmdSpec>& cmd_specs() {
    static const std::map<std::string, CmdSpec> specs = {
        {"validate", {0, nullptr, "validate"}},
        {"check-compat", {2, "expect", "check-compat A B expect=(compatible|incompatible)"}},
        {"build-groupoid", {1, "out", "build-groupoid A out=FILE"}},
        {"recover", {1, "expect", "recover FILE expect=A"}},
        {"f1", {1, "out", "f1 REP out=HOM"}},
        {"f2", {1, "out", "f2 HOM out=REP"}},
        {"reps-equal", {2, "expect", "reps-equal R1 R2 expect=(true|false)"}},
        {"compose", {2, "out", "compose G F out=H"}},
        {"check-idlift", {1, "expect", "check-idlift M expect=(true|false)"}},
        {"check-uwe", {1, "expect", "check-uwe HOM expect=(true|false)"}},
        {"equiv", {2, "witness", "equiv F1 F2 witness=W"}},
        {"refute-equiv", {2, "expect", "refute-equiv H1 H2 expect=(certificate|none)"}},
    };
    return specs;
}

bool known_block_kind(const std::string& k) {
    return k == "space" || k == "fn" || k == "chart" || k == "atlas" || k == "rep" ||
           k == "hom" || k == "witness";
}

CmdItem parse_command(int line, const std::string& text, const std::vector<std::string>& toks) {
    const CmdSpec& spec = cmd_specs().at(toks[0]);
    CmdItem c;
    c.line = line;
    c.verb = toks[0];
    c.raw = text;
    for (size_t i = 1; i < toks.size(); ++i) {
        std::string k, v;
        if (split_first(toks[i], "=", k, v)) {
            if (!spec.key || k != spec.key || c.kw.count(k))
                throw ParseError(line, std::string("expected '") + spec.usage + "'");
            c.kw[k] = v;
        } else {
            c.pos.push_back(toks[i]);
        }
    }
    if (c.pos.size() != spec.npos || (spec.key && !c.kw.count(spec.key)))
        throw ParseError(line, std::string("expected '") + spec.usage + "'");
    // enum-valued keys are part of the grammar
    if (spec.key) {
        const std::string& v = c.kw[spec.key];
        bool ok = true;
        if (c.verb == "check-compat") ok = v == "compatible" || v == "incompatible";
        if (c.verb == "refute-equiv") ok = v == "certificate" || v == "none";
        if (c.verb == "reps-equal" || c.verb == "check-idlift" || c.verb == "check-uwe")
            ok = v == "true" || v == "false";
        if (!ok || v.empty()) throw ParseError(line, std::string("expected '") + spec.usage + "'");
    }
    return c;
}

// syntactic pass: the whole file must parse before anything executes
std::vector<Item> parse_items(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CommandError(0, "cannot open scenario file '" + path + "'");
    std::vector<Item> items;
    BlockItem* open = nullptr;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        size_t hash = raw.find('#');
        if (hash != std::string::npos) raw = raw.substr(0, hash);
        std::string s = trim(raw);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw ParseError(line, "expected '[kind id]' block header");
            auto toks = tokenize(s.substr(1, s.size() - 2));
            if (toks.size() != 2 || !known_block_kind(toks[0]))
                throw ParseError(line,
                                 "expected '[kind id]' with kind one of "
                                 "space|fn|chart|atlas|rep|hom|witness");
            Item it;
            it.is_block = true;
            it.block.line = line;
            it.block.kind = toks[0];
            it.block.id = toks[1];
            items.push_back(std::move(it));
            open = &items.back().block;
            continue;
        }
        auto toks = tokenize(s);
        if (cmd_specs().count(toks[0])) {
            Item it;
            it.cmd = parse_command(line, s, toks);
            items.push_back(std::move(it));
            open = nullptr;
            continue;
        }
        std::string k, v;
        if (open && split_first(s, "=", k, v) && !k.empty() && k.find(' ') == std::string::npos) {
            open->kvs.push_back({line, k, v});
            continue;
        }
        throw ParseError(line,
                         "expected a '[kind id]' block header, a 'key = value' entry inside a "
                         "block, or a command");
    }
    return items;
}

// ---- registry ----

struct HomEntry {
    orb::GroupoidHom h;
    orb::Atlas src, dst;
};

struct Entry {
    enum Kind { KSpace, KFn, KChart, KAtlas, KRep, KHom, KWitness } kind = KSpace;
    orb::Space space;
    orb::PiecewiseFn fn;
    orb::Chart chart;
    orb::Atlas atlas;
    orb::ChartedMap map;
    HomEntry hom;
    orb::EquivalenceWitness wit;
};

const char* kind_name(Entry::Kind k) {
    switch (k) {
        case Entry::KSpace: return "space";
        case Entry::KFn: return "function";
        case Entry::KChart: return "chart";
        case Entry::KAtlas: return "atlas";
        case Entry::KRep: return "map representative";
        case Entry::KHom: return "homomorphism";
        case Entry::KWitness: return "witness";
    }
    return "?";
}

struct Registry {
    std::map<std::string, Entry> entries;
    std::vector<std::string> order;

    void put(int line, const std::string& id, Entry e) {
        if (entries.count(id)) throw ParseError(line, "duplicate id '" + id + "'");
        entries.emplace(id, std::move(e));
        order.push_back(id);
    }
    const Entry& need(int line, const std::string& id, Entry::Kind k) const {
        auto it = entries.find(id);
        if (it == entries.end())
            throw UnknownId(line, std::string(kind_name(k)) + " '" + id + "' is not declared");
        if (it->second.kind != k)
            throw UnknownId(line, "'" + id + "' is declared as a " +
                                      kind_name(it->second.kind) + ", expected a " + kind_name(k));
        return it->second;
    }
};

// ---- value parsers ----

orb::PiecewiseFn resolve_fn(const Registry& reg, int line, const std::string& text) {
    std::string t = trim(text);
    auto it = reg.entries.find(t);
    if (it != reg.entries.end()) {
        if (it->second.kind != Entry::KFn)
            throw UnknownId(line, "'" + t + "' is declared as a " +
                                      kind_name(it->second.kind) + ", expected a function");
        return it->second.fn;
    }
    if (t.rfind("piece(", 0) == 0) {
        try {
            return orb::parse_piecewise(t);
        } catch (const orb::MalformedInput& e) {
            throw ParseError(line, e.what());
        }
    }
    throw UnknownId(line, "function '" + t + "' is not declared");
}

orb::Interval resolve_interval(int line, const std::string& text) {
    try {
        return orb::parse_interval(trim(text));
    } catch (const orb::MalformedInput& e) {
        throw ParseError(line, e.what());
    }
}

// SRC -> DST : FN
void parse_arrow(const Registry& reg, int line, const std::string& text, std::string& src,
                 std::string& dst, orb::PiecewiseFn& fn, const char* what) {
    std::string rest, fnpart;
    if (!split_first(text, "->", src, rest) || !split_first(rest, ":", dst, fnpart) ||
        src.empty() || dst.empty())
        throw ParseError(line, std::string("expected '") + what + "'");
    fn = resolve_fn(reg, line, fnpart);
}

orb::Embedding parse_embedding(const Registry& reg, int line, const std::string& text) {
    orb::Embedding e;
    parse_arrow(reg, line, text, e.source, e.target, e.map, "SRC -> DST : FN");
    return e;
}

orb::HomArrowRule parse_nu(const Registry& reg, int line, const std::string& text) {
    std::string l, r;
    if (!split_first(text, "=>", l, r))
        throw ParseError(line, "expected 'SRC -> DST : FN => SRC -> DST : FN'");
    return {parse_embedding(reg, line, l), parse_embedding(reg, line, r)};
}

// ---- block materialization ----

struct KVReader {
    const BlockItem& b;
    std::vector<bool> used;
    explicit KVReader(const BlockItem& b_) : b(b_), used(b_.kvs.size(), false) {}

    const KV* one(const char* key, bool required) {
        const KV* found = nullptr;
        for (size_t i = 0; i < b.kvs.size(); ++i)
            if (b.kvs[i].key == key) {
                if (found)
                    throw ParseError(b.kvs[i].line, std::string("key '") + key +
                                                        "' given more than once in [" + b.kind +
                                                        " " + b.id + "]");
                found = &b.kvs[i];
                used[i] = true;
            }
        if (!found && required)
            throw ParseError(b.line, "[" + b.kind + " " + b.id + "] is missing required key '" +
                                         key + "'");
        return found;
    }
    std::vector<const KV*> many(const char* key) {
        std::vector<const KV*> out;
        for (size_t i = 0; i < b.kvs.size(); ++i)
            if (b.kvs[i].key == key) {
                out.push_back(&b.kvs[i]);
                used[i] = true;
            }
        return out;
    }
    void done() {
        for (size_t i = 0; i < b.kvs.size(); ++i)
            if (!used[i])
                throw ParseError(b.kvs[i].line, "unexpected key '" + b.kvs[i].key + "' in [" +
                                                    b.kind + " " + b.id + "] block");
    }
};

void materialize(Registry& reg, const BlockItem& b) {
    KVReader kv(b);
    Entry e;
    if (b.kind == "space") {
        e.kind = Entry::KSpace;
        const KV* c = kv.one("carrier", true);
        try {
            e.space.carrier = orb::parse_domain_set(trim(c->value));
        } catch (const orb::MalformedInput& ex) {
            throw ParseError(c->line, ex.what());
        }
    } else if (b.kind == "fn") {
        e.kind = Entry::KFn;
        const KV* d = kv.one("def", true);
        e.fn = resolve_fn(reg, d->line, d->value);
    } else if (b.kind == "chart") {
        e.kind = Entry::KChart;
        e.chart.id = b.id;
        const KV* dv = kv.one("domain", true);
        e.chart.domain = resolve_interval(dv->line, dv->value);
        const KV* fv = kv.one("fdom", true);
        e.chart.fdom = resolve_interval(fv->line, fv->value);
        const KV* p = kv.one("proj", true);
        e.chart.proj = resolve_fn(reg, p->line, p->value);
        auto gs = kv.many("group");
        if (gs.empty())
            throw ParseError(b.line, "[chart " + b.id + "] needs at least one 'group' entry");
        for (const KV* g : gs) e.chart.group.push_back(resolve_fn(reg, g->line, g->value));
    } else if (b.kind == "atlas") {
        e.kind = Entry::KAtlas;
        const KV* sp = kv.one("space", true);
        e.atlas.space = reg.need(sp->line, trim(sp->value), Entry::KSpace).space;
        auto cs = kv.many("chart");
        if (cs.empty())
            throw ParseError(b.line, "[atlas " + b.id + "] needs at least one 'chart' entry");
        for (const KV* c : cs)
            e.atlas.charts.push_back(reg.need(c->line, trim(c->value), Entry::KChart).chart);
        for (const KV* w : kv.many("witness")) {
            orb::Embedding emb = parse_embedding(reg, w->line, w->value);
            if (!orb::find_chart(e.atlas, emb.source) || !orb::find_chart(e.atlas, emb.target))
                throw UnknownId(w->line, "witness endpoints must be charts of atlas '" + b.id +
                                             "'");
            e.atlas.witnesses.push_back(std::move(emb));
        }
    } else if (b.kind == "rep") {
        e.kind = Entry::KRep;
        const KV* dm = kv.one("dom", true);
        const KV* rn = kv.one("rng", true);
        e.map.dom = reg.need(dm->line, trim(dm->value), Entry::KAtlas).atlas;
        e.map.rng = reg.need(rn->line, trim(rn->value), Entry::KAtlas).atlas;
        std::vector<orb::LocalLift> lifts;
        for (const KV* l : kv.many("lift")) {
            orb::LocalLift ll;
            parse_arrow(reg, l->line, l->value, ll.src_chart, ll.dst_chart, ll.map,
                        "SRC -> DST : FN");
            lifts.push_back(std::move(ll));
        }
        const KV* comp = kv.one("complete", false);
        if (comp && trim(comp->value) == "true") {
            kv.done();
            try {
                e.map.rep = orb::complete_identity_lift(lifts, e.map.dom, e.map.rng);
            } catch (const std::exception& ex) {
                throw CommandError(b.line, "completing [rep " + b.id + "] failed: " + ex.what());
            }
        } else {
            if (comp && trim(comp->value) != "false")
                throw ParseError(comp->line, "expected 'complete = true' or 'complete = false'");
            const KV* f = kv.one("f", true);
            e.map.rep.f = resolve_fn(reg, f->line, f->value);
            e.map.rep.lifts = std::move(lifts);
            for (const KV* t : kv.many("trans"))
                e.map.rep.P.elements.push_back(parse_embedding(reg, t->line, t->value));
            for (const KV* n : kv.many("nu"))
                e.map.rep.nu.push_back(parse_nu(reg, n->line, n->value));
        }
    } else if (b.kind == "hom") {
        e.kind = Entry::KHom;
        const KV* of = kv.one("of", false);
        if (of) {
            kv.done();
            const Entry& m = reg.need(of->line, trim(of->value), Entry::KRep);
            try {
                e.hom.h = orb::to_hom(m.map);
            } catch (const std::exception& ex) {
                throw CommandError(of->line, std::string("building the homomorphism failed: ") +
                                                 ex.what());
            }
            e.hom.src = m.map.dom;
            e.hom.dst = m.map.rng;
        } else {
            const KV* s = kv.one("src", true);
            const KV* d = kv.one("dst", true);
            e.hom.src = reg.need(s->line, trim(s->value), Entry::KAtlas).atlas;
            e.hom.dst = reg.need(d->line, trim(d->value), Entry::KAtlas).atlas;
            for (const KV* o : kv.many("obj")) {
                orb::HomObjComponent oc;
                parse_arrow(reg, o->line, o->value, oc.chart, oc.target_chart, oc.fn,
                            "SRC -> DST : FN");
                e.hom.h.obj.push_back(std::move(oc));
            }
            for (const KV* n : kv.many("nu"))
                e.hom.h.nu.push_back(parse_nu(reg, n->line, n->value));
        }
    } else if (b.kind == "witness") {
        e.kind = Entry::KWitness;
        const KV* s = kv.one("search", true);
        std::string r1, r2;
        if (!split_first(s->value, ",", r1, r2) || r1.empty() || r2.empty())
            throw ParseError(s->line, "expected 'search = REP1, REP2'");
        const Entry& m1 = reg.need(s->line, r1, Entry::KRep);
        const Entry& m2 = reg.need(s->line, r2, Entry::KRep);
        std::optional<orb::EquivalenceWitness> w;
        try {
            w = orb::common_refinement_witness(m1.map, m2.map);
        } catch (const std::exception& ex) {
            throw CommandError(s->line, std::string("witness search failed: ") + ex.what());
        }
        if (!w)
            throw CommandError(s->line, "no common refinement witness found between '" + r1 +
                                            "' and '" + r2 + "'");
        e.wit = std::move(*w);
    }
    kv.done();
    reg.put(b.line, b.id, std::move(e));
}

// ---- command execution ----

struct Outcome {
    std::string outcome;  // pass | fail | unknown
    std::string note;
    ordered_json details;
};

std::string fiber_str(const orb::FiberPair& fp) {
    return fp.chart1 + ":" + orb::rat_str(fp.x1) + " ~ " + fp.chart2 + ":" + orb::rat_str(fp.x2);
}

orb::MarkedAtlasGroupoid groupoid_of(int line, const orb::Atlas& a) {
    try {
        return orb::build_groupoid(a);
    } catch (const orb::InvalidAtlas& ex) {
        throw CommandError(line, ex.what());
    }
}

Outcome exec_validate(const Registry& reg) {
    Outcome out;
    ordered_json checked = ordered_json::array();
    int bad = 0, total = 0;
    std::string first_bad;
    for (const std::string& id : reg.order) {
        const Entry& e = reg.entries.at(id);
        orb::ValidationReport r;
        if (e.kind == Entry::KAtlas) {
            r = orb::validate_atlas(e.atlas);
        } else if (e.kind == Entry::KRep) {
            r = orb::validate_charted_map(e.map);
        } else if (e.kind == Entry::KHom) {
            orb::QuasiPseudogroup gens;
            for (const auto& rule : e.hom.h.nu) gens.elements.push_back(rule.gen);
            orb::MarkedAtlasGroupoid sg{e.hom.src, gens, e.hom.src.space};
            orb::MarkedAtlasGroupoid dg{e.hom.dst, {}, e.hom.dst.space};
            r = orb::validate_hom(e.hom.h, sg, dg);
        } else {
            continue;
        }
        ++total;
        if (!r.ok()) {
            ++bad;
            if (first_bad.empty()) first_bad = id;
        }
        ordered_json item;
        item["id"] = id;
        item["kind"] = kind_name(e.kind);
        item["ok"] = r.ok();
        item["issues"] = r.issues;
        checked.push_back(std::move(item));
    }
    out.details["checked"] = std::move(checked);
    out.outcome = bad == 0 ? "pass" : "fail";
    out.note = bad == 0 ? std::to_string(total) + " declarations checked"
                        : "'" + first_bad + "' has issues";
    return out;
}

Outcome exec_check_compat(const Registry& reg, const CmdItem& c) {
    const orb::Chart& a = reg.need(c.line, c.pos[0], Entry::KChart).chart;
    const orb::Chart& b = reg.need(c.line, c.pos[1], Entry::KChart).chart;
    orb::CompatResult cr = orb::charts_compatible(a, b);
    std::string verdict = cr.verdict == orb::Compat::Compatible     ? "compatible"
                          : cr.verdict == orb::Compat::Incompatible ? "incompatible"
                                                                    : "unknown";
    Outcome out;
    out.details["verdict"] = verdict;
    out.details["expected"] = c.kw.at("expect");
    if (cr.verdict == orb::Compat::Compatible) {
        out.details["witnesses"] = cr.witnesses.size();
        out.note = "verdict compatible, " + std::to_string(cr.witnesses.size()) + " witnesses";
    } else if (cr.verdict == orb::Compat::Incompatible) {
        out.details["at"] = fiber_str(cr.at);
        ordered_json rejected = ordered_json::array();
        for (const auto& bf : cr.failures) {
            ordered_json item;
            item["candidate"] = bf.candidate.str();
            item["why"] = bf.why.str();
            rejected.push_back(std::move(item));
        }
        out.details["rejected"] = std::move(rejected);
        out.note = "verdict incompatible at " + fiber_str(cr.at) + ", " +
                   std::to_string(cr.failures.size()) + " candidates rejected";
    } else {
        out.details["at"] = fiber_str(cr.at);
        out.details["note"] = cr.note;
        out.note = "verdict unknown: " + cr.note;
    }
    out.outcome = cr.verdict == orb::Compat::Unknown ? "unknown"
                  : verdict == c.kw.at("expect")     ? "pass"
                                                     : "fail";
    return out;
}

Outcome exec_build_groupoid(const Registry& reg, const CmdItem& c) {
    const orb::Atlas& a = reg.need(c.line, c.pos[0], Entry::KAtlas).atlas;
    orb::MarkedAtlasGroupoid g = groupoid_of(c.line, a);
    std::string text = orb::serialize_groupoid(g);
    const std::string& file = c.kw.at("out");
    std::ofstream f(file);
    f << text;
    if (!f) throw CommandError(c.line, "cannot write '" + file + "'");
    Outcome out;
    out.outcome = "pass";
    out.details["file"] = file;
    out.details["charts"] = g.atlas.charts.size();
    out.details["generators"] = g.generators.elements.size();
    out.details["bytes"] = text.size();
    out.note = "wrote " + file + " (" + std::to_string(text.size()) + " bytes, " +
               std::to_string(g.generators.elements.size()) + " generators)";
    return out;
}

Outcome exec_recover(const Registry& reg, const CmdItem& c) {
    const std::string& file = c.pos[0];
    std::ifstream f(file);
    if (!f) throw CommandError(c.line, "cannot read '" + file + "'");
    std::stringstream buf;
    buf << f.rdbuf();
    orb::Atlas got;
    try {
        got = orb::recover_atlas(buf.str());
    } catch (const orb::MalformedInput& ex) {
        throw CommandError(c.line, "'" + file + "': " + ex.what());
    }
    const orb::Atlas& want = reg.need(c.line, c.kw.at("expect"), Entry::KAtlas).atlas;
    // compare in canonical form: serialize the rebuilt groupoids of both sides
    bool match = orb::serialize_groupoid(groupoid_of(c.line, got)) ==
                 orb::serialize_groupoid(groupoid_of(c.line, want));
    Outcome out;
    out.outcome = match ? "pass" : "fail";
    out.details["file"] = file;
    out.details["match"] = match;
    out.note = match ? "matches " + c.kw.at("expect") : "differs from " + c.kw.at("expect");
    return out;
}

Outcome exec_f1(Registry& reg, const CmdItem& c) {
    const Entry& m = reg.need(c.line, c.pos[0], Entry::KRep);
    Entry e;
    e.kind = Entry::KHom;
    try {
        e.hom.h = orb::to_hom(m.map);
    } catch (const std::exception& ex) {
        throw CommandError(c.line, std::string("building the homomorphism failed: ") + ex.what());
    }
    e.hom.src = m.map.dom;
    e.hom.dst = m.map.rng;
    Outcome out;
    out.outcome = "pass";
    out.details["hom"] = c.kw.at("out");
    out.details["components"] = e.hom.h.obj.size();
    out.details["rules"] = e.hom.h.nu.size();
    out.note = "registered hom " + c.kw.at("out") + " (" + std::to_string(e.hom.h.nu.size()) +
               " arrow rules)";
    reg.put(c.line, c.kw.at("out"), std::move(e));
    return out;
}

Outcome exec_f2(Registry& reg, const CmdItem& c) {
    const HomEntry he = reg.need(c.line, c.pos[0], Entry::KHom).hom;
    orb::MarkedAtlasGroupoid sg = groupoid_of(c.line, he.src);
    orb::MarkedAtlasGroupoid dg = groupoid_of(c.line, he.dst);
    Entry e;
    e.kind = Entry::KRep;
    try {
        e.map.rep = orb::from_hom(he.h, sg, dg);
    } catch (const std::exception& ex) {
        throw CommandError(c.line, std::string("building the representative failed: ") + ex.what());
    }
    e.map.dom = he.src;
    e.map.rng = he.dst;
    Outcome out;
    out.outcome = "pass";
    out.details["rep"] = c.kw.at("out");
    out.details["lifts"] = e.map.rep.lifts.size();
    out.note = "registered map " + c.kw.at("out") + " (" + std::to_string(e.map.rep.lifts.size()) +
               " lifts)";
    reg.put(c.line, c.kw.at("out"), std::move(e));
    return out;
}

Outcome exec_reps_equal(const Registry& reg, const CmdItem& c) {
    const orb::ChartedMap& m1 = reg.need(c.line, c.pos[0], Entry::KRep).map;
    const orb::ChartedMap& m2 = reg.need(c.line, c.pos[1], Entry::KRep).map;
    bool eq;
    try {
        eq = orb::representatives_equivalent(m1, m2);
    } catch (const std::exception& ex) {
        throw CommandError(c.line, ex.what());
    }
    bool want = c.kw.at("expect") == "true";
    Outcome out;
    out.outcome = eq == want ? "pass" : "fail";
    out.details["equal"] = eq;
    out.details["expected"] = want;
    out.note = std::string("equal=") + (eq ? "true" : "false");
    return out;
}

Outcome exec_compose(Registry& reg, const CmdItem& c) {
    const orb::ChartedMap& g = reg.need(c.line, c.pos[0], Entry::KRep).map;
    const orb::ChartedMap& f = reg.need(c.line, c.pos[1], Entry::KRep).map;
    Entry e;
    e.kind = Entry::KRep;
    try {
        e.map = orb::compose_orbifold_maps(g, f);
    } catch (const std::exception& ex) {
        throw CommandError(c.line, std::string("composition failed: ") + ex.what());
    }
    Outcome out;
    out.outcome = "pass";
    out.details["rep"] = c.kw.at("out");
    out.details["lifts"] = e.map.rep.lifts.size();
    out.note = "registered map " + c.kw.at("out");
    reg.put(c.line, c.kw.at("out"), std::move(e));
    return out;
}

Outcome exec_check_idlift(const Registry& reg, const CmdItem& c) {
    const orb::ChartedMap& m = reg.need(c.line, c.pos[0], Entry::KRep).map;
    bool is;
    try {
        is = orb::is_identity_lift(m);
    } catch (const std::exception& ex) {
        throw CommandError(c.line, ex.what());
    }
    bool want = c.kw.at("expect") == "true";
    Outcome out;
    out.outcome = is == want ? "pass" : "fail";
    out.details["identity_lift"] = is;
    out.details["expected"] = want;
    out.note = std::string("identity lift: ") + (is ? "true" : "false");
    return out;
}

Outcome exec_check_uwe(const Registry& reg, const CmdItem& c, const RunFlags& flags) {
    const HomEntry& he = reg.need(c.line, c.pos[0], Entry::KHom).hom;
    orb::MarkedAtlasGroupoid sg = groupoid_of(c.line, he.src);
    orb::MarkedAtlasGroupoid dg = groupoid_of(c.line, he.dst);
    bool u = orb::is_unit_weak_equivalence(he.h, sg, dg);
    bool p = orb::uwe_structural_probe(he.h, sg, dg, flags.depth_cap);
    bool want = c.kw.at("expect") == "true";
    Outcome out;
    out.details["unit_weak_equivalence"] = u;
    out.details["structural_probe"] = p;
    out.details["expected"] = want;
    if (u != p) {
        out.outcome = "fail";
        out.note = "construction check and structural probe disagree";
    } else {
        out.outcome = u == want ? "pass" : "fail";
        out.note = std::string("unit weak equivalence: ") + (u ? "true" : "false");
    }
    return out;
}

Outcome exec_equiv(const Registry& reg, const CmdItem& c) {
    const orb::ChartedMap& m1 = reg.need(c.line, c.pos[0], Entry::KRep).map;
    const orb::ChartedMap& m2 = reg.need(c.line, c.pos[1], Entry::KRep).map;
    const orb::EquivalenceWitness& w = reg.need(c.line, c.kw.at("witness"), Entry::KWitness).wit;
    bool ok;
    try {
        ok = orb::verify_equivalence_witness(m1, m2, w);
    } catch (const std::exception& ex) {
        throw CommandError(c.line, ex.what());
    }
    Outcome out;
    out.outcome = ok ? "pass" : "fail";
    out.details["witness"] = c.kw.at("witness");
    out.details["verified"] = ok;
    out.note = ok ? "witness " + c.kw.at("witness") + " verified" : "witness rejected";
    return out;
}

Outcome exec_refute(const Registry& reg, const CmdItem& c, const RunFlags& flags) {
    const HomEntry& h1 = reg.need(c.line, c.pos[0], Entry::KHom).hom;
    const HomEntry& h2 = reg.need(c.line, c.pos[1], Entry::KHom).hom;
    auto cert = orb::refute_hom_equivalence(h1.h, groupoid_of(c.line, h1.src),
                                            groupoid_of(c.line, h1.dst), h2.h,
                                            groupoid_of(c.line, h2.src),
                                            groupoid_of(c.line, h2.dst), flags.depth_cap);
    bool want_cert = c.kw.at("expect") == "certificate";
    Outcome out;
    out.details["expected"] = c.kw.at("expect");
    if (cert) {
        ordered_json j;
        j["at1"] = cert->at1.str();
        j["at2"] = cert->at2.str();
        j["marking"] = orb::rat_str(cert->marking);
        j["image1"] = cert->image1;
        j["image2"] = cert->image2;
        out.details["certificate"] = std::move(j);
        out.note = "certificate at " + cert->at1.str() + " / " + cert->at2.str() + " (sizes " +
                   std::to_string(cert->image1) + " vs " + std::to_string(cert->image2) + ")";
    } else {
        out.details["certificate"] = nullptr;
        out.note = "no certificate";
    }
    out.outcome = cert.has_value() == want_cert ? "pass" : "fail";
    return out;
}

Outcome exec_command(Registry& reg, const CmdItem& c, const RunFlags& flags) {
    if (c.verb == "validate") return exec_validate(reg);
    if (c.verb == "check-compat") return exec_check_compat(reg, c);
    if (c.verb == "build-groupoid") return exec_build_groupoid(reg, c);
    if (c.verb == "recover") return exec_recover(reg, c);
    if (c.verb == "f1") return exec_f1(reg, c);
    if (c.verb == "f2") return exec_f2(reg, c);
    if (c.verb == "reps-equal") return exec_reps_equal(reg, c);
    if (c.verb == "compose") return exec_compose(reg, c);
    if (c.verb == "check-idlift") return exec_check_idlift(reg, c);
    if (c.verb == "check-uwe") return exec_check_uwe(reg, c, flags);
    if (c.verb == "equiv") return exec_equiv(reg, c);
    return exec_refute(reg, c, flags);
}

}  // namespace

std::string ScenarioReport::human() const {
    std::string s = "scenario " + path + "\n";
    for (const CommandResult& cr : commands) {
        s += "  [" + cr.outcome + "]";
        for (size_t i = cr.outcome.size(); i < 7; ++i) s += ' ';
        s += ' ' + cr.command;
        std::string note = cr.details.value("_note", "");
        if (!note.empty()) s += " -- " + note;
        s += '\n';
    }
    s += "  " + std::to_string(commands.size()) + " commands: " + std::to_string(passed) +
         " passed, " + std::to_string(failed) + " failed, " + std::to_string(unknown) +
         " unknown\n";
    return s;
}

nlohmann::ordered_json ScenarioReport::machine() const {
    ordered_json j;
    j["path"] = path;
    ordered_json cmds = ordered_json::array();
    for (const CommandResult& cr : commands) {
        ordered_json c;
        c["command"] = cr.command;
        c["outcome"] = cr.outcome;
        ordered_json det = cr.details;
        det.erase("_note");
        c["details"] = std::move(det);
        cmds.push_back(std::move(c));
    }
    j["commands"] = std::move(cmds);
    j["summary"] = {{"passed", passed}, {"failed", failed}, {"unknown", unknown}};
    return j;
}

ScenarioReport run_scenario(const std::string& path, const RunFlags& flags) {
    std::vector<Item> items = parse_items(path);
    Registry reg;
    ScenarioReport rep;
    rep.path = path;
    for (const Item& it : items) {
        if (it.is_block) {
            materialize(reg, it.block);
            continue;
        }
        Outcome out = exec_command(reg, it.cmd, flags);
        if (out.outcome == "pass")
            ++rep.passed;
        else if (out.outcome == "fail")
            ++rep.failed;
        else
            ++rep.unknown;
        CommandResult cr;
        cr.command = it.cmd.raw;
        cr.outcome = out.outcome;
        cr.details = std::move(out.details);
        cr.details["_note"] = out.note;
        rep.commands.push_back(std::move(cr));
    }
    return rep;
}

}  // namespace okit
