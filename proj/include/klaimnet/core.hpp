#pragma once

// Core model for service-oriented sensor-actuator nets: sites, tuples,
// process terms, nodes and whole-net states, plus the canonical text
// rendering that doubles as the state identity used for deduplication.

#include <algorithm>
#include <cassert>
#include <cctype>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace klaimnet {

// ---------------------------------------------------------------------------
// Sites and values
// ---------------------------------------------------------------------------

// A site is the physical name of a node. Localities (logical names) are kept
// as plain strings inside allocation environments and expressions.
struct Site {
    std::string name;
    auto operator<=>(const Site&) const = default;
};

// Runtime values that may live inside tuples: integers, strings, symbols
// (interned tags written `name` in the surface syntax) and site references.
class Value {
public:
    enum class Kind { Int, Str, Sym, SiteV };

    static Value integer(std::int64_t v) { return Value(Kind::Int, v, {}); }
    static Value str(std::string v) { return Value(Kind::Str, 0, std::move(v)); }
    static Value sym(std::string v) { return Value(Kind::Sym, 0, std::move(v)); }
    static Value site(Site s) { return Value(Kind::SiteV, 0, std::move(s.name)); }

    Kind kind() const { return kind_; }
    std::int64_t as_int() const { return int_; }
    const std::string& text() const { return text_; }
    Site as_site() const { return Site{text_}; }

    auto operator<=>(const Value&) const = default;

    void render(std::string& out) const {
        switch (kind_) {
        case Kind::Int:
            out += std::to_string(int_);
            break;
        case Kind::Str:
            out += '"';
            for (char c : text_) {
                switch (c) {
                case '"': out += "\\\""; break;
                case '\\': out += "\\\\"; break;
                case '\n': out += "\\n"; break;
                case '\t': out += "\\t"; break;
                default: out += c; break;
                }
            }
            out += '"';
            break;
        case Kind::Sym:
            out += '`';
            out += text_;
            out += '`';
            break;
        case Kind::SiteV:
            out += text_;
            break;
        }
    }

    std::string render() const {
        std::string out;
        render(out);
        return out;
    }

private:
    Value(Kind k, std::int64_t i, std::string t) : kind_(k), int_(i), text_(std::move(t)) {}
    Kind kind_;
    std::int64_t int_ = 0;
    std::string text_;
};

using Tuple = std::vector<Value>;

inline void render_tuple(const Tuple& t, std::string& out) {
    out += '(';
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (i) out += ", ";
        t[i].render(out);
    }
    out += ')';
}

inline std::string render_tuple(const Tuple& t) {
    std::string out;
    render_tuple(t, out);
    return out;
}

// ---------------------------------------------------------------------------
// Expressions and templates
// ---------------------------------------------------------------------------

// An expression appears in tuple positions, action targets and call
// arguments. `self` is represented as a locality reference named "self".
struct Expr {
    enum class Kind {
        Lit,     // ground value
        LocRef,  // locality name, resolved through the node's environment
        VarRef,  // variable bound by a template formal or definition parameter
        Raw,     // unclassified identifier (parser-internal, never reaches the engine)
    };

    Kind kind = Kind::Lit;
    Value value = Value::integer(0);
    std::string name;

    static Expr lit(Value v) {
        Expr e;
        e.kind = Kind::Lit;
        e.value = std::move(v);
        return e;
    }
    static Expr loc(std::string n) {
        Expr e;
        e.kind = Kind::LocRef;
        e.name = std::move(n);
        return e;
    }
    static Expr var(std::string n) {
        Expr e;
        e.kind = Kind::VarRef;
        e.name = std::move(n);
        return e;
    }
    static Expr raw(std::string n) {
        Expr e;
        e.kind = Kind::Raw;
        e.name = std::move(n);
        return e;
    }
    static Expr self() { return loc("self"); }

    bool is_self() const { return kind == Kind::LocRef && name == "self"; }

    void render(std::string& out) const {
        if (kind == Kind::Lit) {
            value.render(out);
        } else {
            out += name;
        }
    }
    std::string render() const {
        std::string out;
        render(out);
        return out;
    }
};

// One field of an input template: either a formal (`!x`, binds x) or an
// actual expression that must equal the corresponding tuple element.
struct TField {
    bool formal = false;
    std::string var;  // formal only
    Expr actual;      // actual only

    static TField mk_formal(std::string v) {
        TField f;
        f.formal = true;
        f.var = std::move(v);
        return f;
    }
    static TField mk_actual(Expr e) {
        TField f;
        f.actual = std::move(e);
        return f;
    }

    void render(std::string& out) const {
        if (formal) {
            out += '!';
            out += var;
        } else {
            actual.render(out);
        }
    }
};

inline void render_template(const std::vector<TField>& tmpl, std::string& out) {
    out += '(';
    for (std::size_t i = 0; i < tmpl.size(); ++i) {
        if (i) out += ", ";
        tmpl[i].render(out);
    }
    out += ')';
}

// ---------------------------------------------------------------------------
// Actions and process terms
// ---------------------------------------------------------------------------

struct TermNode;
using TermPtr = std::shared_ptr<const TermNode>;

// One action prefix. A single struct covers all kinds; unused fields stay
// empty. `proc` carries the shipped process of eval and the coordinator
// installed by newloc.
struct Action {
    enum class Kind { Out, In, Read, Eval, Bind, Newloc, Login, Accept, Logout, Exec };

    Kind kind = Kind::Out;
    std::vector<Expr> args;               // Out: tuple to emit; Exec: arguments
    std::vector<TField> tmpl;             // In/Read template
    Expr target;                          // Out/In/Read/Eval/Login/Logout target, Bind site
    std::string loc;                      // Bind/Newloc: locality being (re)bound
    std::string site_name;                // Newloc: explicit `as` name ("" = generated)
    TermPtr proc;                         // Eval payload / Newloc coordinator (may be null)
    std::vector<std::string> accept_sites;  // Accept: admissible sites
    bool accept_any = false;              // Accept: `accept *`
    std::string exec_name;                // Exec: uninterpreted computation tag

    bool privileged() const {
        return kind == Kind::Newloc || kind == Kind::Login || kind == Kind::Accept ||
               kind == Kind::Logout;
    }
};

inline void render_action(const Action& a, std::string& out);  // defined after TermNode

// Immutable process term. The canonical rendering is computed once at
// construction and doubles as structural identity: parallel and choice are
// flattened and sorted, nil is absorbed by parallel.
struct TermNode {
    enum class Kind { Nil, Prefix, Par, Choice, Call };

    Kind kind;
    Action act;                   // Prefix
    TermPtr cont;                 // Prefix continuation
    TermPtr left, right;          // Par / Choice
    std::string callee;           // Call
    std::vector<Expr> call_args;  // Call
    std::string canon;            // cached canonical rendering
};

inline bool term_is_nil(const TermPtr& t) { return !t || t->kind == TermNode::Kind::Nil; }

inline TermPtr mk_nil() {
    static const TermPtr nil = [] {
        auto n = std::make_shared<TermNode>();
        n->kind = TermNode::Kind::Nil;
        n->canon = "nil";
        return n;
    }();
    return nil;
}

namespace detail {

inline void collect_par_leaves(const TermPtr& t, std::vector<TermPtr>& out) {
    if (term_is_nil(t)) return;
    if (t->kind == TermNode::Kind::Par) {
        collect_par_leaves(t->left, out);
        collect_par_leaves(t->right, out);
    } else {
        out.push_back(t);
    }
}

inline void collect_choice_leaves(const TermPtr& t, std::vector<TermPtr>& out) {
    if (t->kind == TermNode::Kind::Choice) {
        collect_choice_leaves(t->left, out);
        collect_choice_leaves(t->right, out);
    } else {
        out.push_back(t);
    }
}

}  // namespace detail

inline TermPtr mk_prefix(Action act, TermPtr cont) {
    auto n = std::make_shared<TermNode>();
    n->kind = TermNode::Kind::Prefix;
    n->act = std::move(act);
    n->cont = cont ? std::move(cont) : mk_nil();
    render_action(n->act, n->canon);
    n->canon += " . ";
    if (n->cont->kind == TermNode::Kind::Par || n->cont->kind == TermNode::Kind::Choice) {
        n->canon += '(';
        n->canon += n->cont->canon;
        n->canon += ')';
    } else {
        n->canon += n->cont->canon;
    }
    return n;
}

inline TermPtr mk_par(TermPtr a, TermPtr b) {
    if (term_is_nil(a)) return b ? b : mk_nil();
    if (term_is_nil(b)) return a;
    auto n = std::make_shared<TermNode>();
    n->kind = TermNode::Kind::Par;
    n->left = std::move(a);
    n->right = std::move(b);
    std::vector<TermPtr> leaves;
    detail::collect_par_leaves(n->left, leaves);
    detail::collect_par_leaves(n->right, leaves);
    std::vector<std::string> parts;
    parts.reserve(leaves.size());
    for (const auto& l : leaves) parts.push_back(l->canon);
    std::sort(parts.begin(), parts.end());
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) n->canon += " | ";
        n->canon += parts[i];
    }
    return n;
}

inline TermPtr mk_choice(TermPtr a, TermPtr b) {
    auto n = std::make_shared<TermNode>();
    n->kind = TermNode::Kind::Choice;
    n->left = std::move(a);
    n->right = std::move(b);
    std::vector<TermPtr> leaves;
    detail::collect_choice_leaves(n->left, leaves);
    detail::collect_choice_leaves(n->right, leaves);
    std::vector<std::string> parts;
    parts.reserve(leaves.size());
    for (const auto& l : leaves) {
        if (l->kind == TermNode::Kind::Par) {
            parts.push_back('(' + l->canon + ')');
        } else {
            parts.push_back(l->canon);
        }
    }
    std::sort(parts.begin(), parts.end());
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) n->canon += " + ";
        n->canon += parts[i];
    }
    return n;
}

inline TermPtr mk_call(std::string name, std::vector<Expr> args) {
    auto n = std::make_shared<TermNode>();
    n->kind = TermNode::Kind::Call;
    n->callee = std::move(name);
    n->call_args = std::move(args);
    n->canon = n->callee;
    n->canon += '(';
    for (std::size_t i = 0; i < n->call_args.size(); ++i) {
        if (i) n->canon += ", ";
        n->call_args[i].render(n->canon);
    }
    n->canon += ')';
    return n;
}

inline void render_action(const Action& a, std::string& out) {
    using K = Action::Kind;
    switch (a.kind) {
    case K::Out:
        out += "out(";
        for (std::size_t i = 0; i < a.args.size(); ++i) {
            if (i) out += ", ";
            a.args[i].render(out);
        }
        out += ")@";
        a.target.render(out);
        break;
    case K::In:
    case K::Read:
        out += (a.kind == K::In) ? "in" : "read";
        render_template(a.tmpl, out);
        out += '@';
        a.target.render(out);
        break;
    case K::Eval:
        out += "eval(";
        out += a.proc ? a.proc->canon : "nil";
        out += ")@";
        a.target.render(out);
        break;
    case K::Bind:
        out += "bind(";
        out += a.loc;
        out += ", ";
        a.target.render(out);
        out += ')';
        break;
    case K::Newloc:
        out += "newloc(";
        out += a.loc;
        if (!a.site_name.empty()) {
            out += " as ";
            out += a.site_name;
        }
        if (a.proc && a.proc->kind != TermNode::Kind::Nil) {
            out += ", ";
            out += a.proc->canon;
        }
        out += ')';
        break;
    case K::Login:
        out += "login(";
        a.target.render(out);
        out += ')';
        break;
    case K::Accept:
        out += "accept ";
        if (a.accept_any) {
            out += '*';
        } else {
            out += "{ ";
            std::vector<std::string> sites = a.accept_sites;
            std::sort(sites.begin(), sites.end());
            for (std::size_t i = 0; i < sites.size(); ++i) {
                if (i) out += ", ";
                out += sites[i];
            }
            out += " }";
        }
        break;
    case K::Logout:
        out += "logout(";
        a.target.render(out);
        out += ')';
        break;
    case K::Exec:
        out += "exec ";
        out += a.exec_name;
        if (!a.args.empty()) {
            out += '(';
            for (std::size_t i = 0; i < a.args.size(); ++i) {
                if (i) out += ", ";
                a.args[i].render(out);
            }
            out += ')';
        }
        break;
    }
}

// ---------------------------------------------------------------------------
// Definitions
// ---------------------------------------------------------------------------

struct Def {
    std::string name;
    std::vector<std::string> params;
    TermPtr body;
    bool coord = false;  // coordinator definitions may use privileged actions

    std::string render() const {
        std::string out;
        if (coord) out += "coord ";
        out += "def ";
        out += name;
        out += '(';
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (i) out += ", ";
            out += params[i];
        }
        out += ") = ";
        out += body ? body->canon : "nil";
        return out;
    }
};

// Definitions are global to a net and immutable while it runs.
struct Defs {
    std::map<std::string, Def> map;

    const Def* find(const std::string& name) const {
        auto it = map.find(name);
        return it == map.end() ? nullptr : &it->second;
    }
};

using DefsPtr = std::shared_ptr<const Defs>;

inline DefsPtr empty_defs() {
    static const DefsPtr d = std::make_shared<Defs>();
    return d;
}

// ---------------------------------------------------------------------------
// Nodes and net states
// ---------------------------------------------------------------------------

// A node: site, acquaintances (links), allocation environment mapping
// localities to site names, running processes (a flattened multiset kept
// sorted by canonical form) and the local tuple space (sorted likewise).
struct Node {
    Site site;
    std::set<std::string> links;
    std::map<std::string, std::string> env;
    std::vector<TermPtr> soup;
    std::vector<Tuple> ts;
};

inline void soup_insert(std::vector<TermPtr>& soup, const TermPtr& t) {
    if (term_is_nil(t)) return;
    if (t->kind == TermNode::Kind::Par) {
        soup_insert(soup, t->left);
        soup_insert(soup, t->right);
        return;
    }
    auto it = std::lower_bound(soup.begin(), soup.end(), t,
                               [](const TermPtr& a, const TermPtr& b) { return a->canon < b->canon; });
    soup.insert(it, t);
}

inline void ts_insert(std::vector<Tuple>& ts, Tuple t) {
    auto key = render_tuple(t);
    auto it = std::lower_bound(ts.begin(), ts.end(), key, [](const Tuple& a, const std::string& k) {
        return render_tuple(a) < k;
    });
    ts.insert(it, std::move(t));
}

struct NetState {
    std::map<std::string, Node> nodes;
    DefsPtr defs = empty_defs();

    Node* find(const std::string& site) {
        auto it = nodes.find(site);
        return it == nodes.end() ? nullptr : &it->second;
    }
    const Node* find(const std::string& site) const {
        auto it = nodes.find(site);
        return it == nodes.end() ? nullptr : &it->second;
    }
};

// Every site name mentioned by a state: node names, link members,
// environment images, site values in tuple spaces and site literals in
// process terms.
namespace detail {

inline void collect_term_sites(const TermPtr& t, std::set<std::string>& out);

inline void collect_expr_sites(const Expr& e, std::set<std::string>& out) {
    if (e.kind == Expr::Kind::Lit && e.value.kind() == Value::Kind::SiteV) {
        out.insert(e.value.text());
    }
}

inline void collect_action_sites(const Action& a, std::set<std::string>& out) {
    for (const auto& e : a.args) collect_expr_sites(e, out);
    for (const auto& f : a.tmpl) {
        if (!f.formal) collect_expr_sites(f.actual, out);
    }
    collect_expr_sites(a.target, out);
    if (a.proc) collect_term_sites(a.proc, out);
    for (const auto& s : a.accept_sites) out.insert(s);
    if (a.kind == Action::Kind::Newloc && !a.site_name.empty()) out.insert(a.site_name);
}

inline void collect_term_sites(const TermPtr& t, std::set<std::string>& out) {
    if (!t) return;
    switch (t->kind) {
    case TermNode::Kind::Nil:
        return;
    case TermNode::Kind::Prefix:
        collect_action_sites(t->act, out);
        collect_term_sites(t->cont, out);
        return;
    case TermNode::Kind::Par:
    case TermNode::Kind::Choice:
        collect_term_sites(t->left, out);
        collect_term_sites(t->right, out);
        return;
    case TermNode::Kind::Call:
        for (const auto& e : t->call_args) collect_expr_sites(e, out);
        return;
    }
}

}  // namespace detail

inline std::set<std::string> mentioned_sites(const NetState& s) {
    std::set<std::string> out;
    for (const auto& [name, node] : s.nodes) {
        out.insert(name);
        for (const auto& l : node.links) out.insert(l);
        for (const auto& [loc, site] : node.env) out.insert(site);
        for (const auto& t : node.ts) {
            for (const auto& v : t) {
                if (v.kind() == Value::Kind::SiteV) out.insert(v.text());
            }
        }
        for (const auto& p : node.soup) detail::collect_term_sites(p, out);
    }
    for (const auto& [name, def] : s.defs->map) {
        (void)name;
        detail::collect_term_sites(def.body, out);
    }
    return out;
}

// Fresh sites created at runtime are named "s#0", "s#1", ...; the next free
// index is derived from every mention in the state, so it needs no separate
// counter and survives rendering round-trips.
inline std::uint64_t fresh_site_index(const NetState& s) {
    std::uint64_t next = 0;
    for (const auto& name : mentioned_sites(s)) {
        if (name.size() > 2 && name[0] == 's' && name[1] == '#') {
            bool digits = true;
            for (std::size_t i = 2; i < name.size(); ++i) {
                if (!std::isdigit(static_cast<unsigned char>(name[i]))) {
                    digits = false;
                    break;
                }
            }
            if (digits) {
                std::uint64_t idx = std::strtoull(name.c_str() + 2, nullptr, 10);
                next = std::max(next, idx + 1);
            }
        }
    }
    return next;
}

// ---------------------------------------------------------------------------
// Canonical rendering
// ---------------------------------------------------------------------------

inline void render_node(const Node& n, std::string& out) {
    out += "node ";
    out += n.site.name;
    out += " links { ";
    {
        bool first = true;
        for (const auto& l : n.links) {
            if (!first) out += ", ";
            out += l;
            first = false;
        }
        out += first ? "}" : " }";
    }
    out += " env { ";
    {
        bool first = true;
        for (const auto& [loc, site] : n.env) {
            if (!first) out += ", ";
            out += loc;
            out += " -> ";
            out += site;
            first = false;
        }
        out += first ? "}" : " }";
    }
    out += " procs { ";
    if (n.soup.empty()) {
        out += "nil";
    } else {
        for (std::size_t i = 0; i < n.soup.size(); ++i) {
            if (i) out += " | ";
            out += n.soup[i]->canon;
        }
    }
    out += " }";
    if (!n.ts.empty()) {
        out += " ts { ";
        for (std::size_t i = 0; i < n.ts.size(); ++i) {
            if (i) out += ", ";
            render_tuple(n.ts[i], out);
        }
        out += " }";
    }
}

// Canonical textual form of a whole state. Deterministic, structural-
// congruence-stable, and re-parseable: sites that are referenced but have no
// node are emitted as `external` declarations.
inline std::string render_state(const NetState& s) {
    std::string out;
    for (const auto& name : mentioned_sites(s)) {
        if (!s.nodes.count(name)) {
            out += "external ";
            out += name;
            out += '\n';
        }
    }
    for (const auto& [name, def] : s.defs->map) {
        (void)name;
        out += def.render();
        out += '\n';
    }
    for (const auto& [name, node] : s.nodes) {
        (void)name;
        render_node(node, out);
        out += '\n';
    }
    return out;
}

inline std::string canonical_form(const NetState& s) { return render_state(s); }

// Structural sanity: link symmetry, link targets exist, process soups and
// tuple spaces sorted, no self-binding in environments. The engine keeps all
// of these invariant; tests and debug builds check them after every step.
inline void check_state_invariants(const NetState& s) {
    for (const auto& [name, node] : s.nodes) {
        if (node.site.name != name) throw std::logic_error("node key mismatch: " + name);
        for (const auto& l : node.links) {
            auto other = s.nodes.find(l);
            if (other == s.nodes.end())
                throw std::logic_error("link target missing: " + name + " -> " + l);
            if (!other->second.links.count(name))
                throw std::logic_error("asymmetric link: " + name + " -> " + l);
            if (l == name) throw std::logic_error("self link at " + name);
        }
        if (node.env.count("self")) throw std::logic_error("environment binds self at " + name);
        for (std::size_t i = 1; i < node.soup.size(); ++i) {
            if (node.soup[i - 1]->canon > node.soup[i]->canon)
                throw std::logic_error("soup unsorted at " + name);
        }
        for (std::size_t i = 1; i < node.ts.size(); ++i) {
            if (render_tuple(node.ts[i - 1]) > render_tuple(node.ts[i]))
                throw std::logic_error("tuple space unsorted at " + name);
        }
        for (const auto& p : node.soup) {
            if (term_is_nil(p) || p->kind == TermNode::Kind::Par)
                throw std::logic_error("unflattened soup at " + name);
        }
    }
}

// ---------------------------------------------------------------------------
// Transition labels and traces
// ---------------------------------------------------------------------------

// A label names one step: the acting site, a rendered action descriptor and,
// for synchronisations (login/accept) and faults, the partner site. Within
// one state, labels are unique (ties get an ordinal suffix), so a sequence
// of labels replays to exactly one run.
struct Label {
    std::string site;
    std::string action;
    std::string partner;

    auto operator<=>(const Label&) const = default;

    std::string render() const {
        std::string out = site;
        out += ": ";
        out += action;
        if (!partner.empty()) {
            out += " <-> ";
            out += partner;
        }
        return out;
    }
};

struct Transition {
    Label label;
    NetState next;
};

struct Trace {
    std::uint64_t seed = 0;
    std::vector<Label> steps;
    std::string final_state;  // canonical form of the last state
};

// ---------------------------------------------------------------------------
// Assertions
// ---------------------------------------------------------------------------

// Atomic state predicates checkable during exploration.
struct Predicate {
    enum class Kind {
        TupleAt,       // ts(site) contains (template)
        LinkBetween,   // link(a, b)
        ActionEnabled, // action(kind, site): some such prefix is enabled
        NoBlocked,     // no_blocked(kind, site): every such prefix present is enabled
        NoDeadlock,    // state has a transition or is fully terminated
        Terminated,    // every process soup is empty
        LinkSymmetry,  // the acquaintance relation is symmetric
    };

    Kind kind = Kind::NoDeadlock;
    bool negated = false;
    std::string site, site2;
    std::vector<TField> tmpl;
    std::string action_name;

    std::string render() const {
        std::string out;
        if (negated) out += "not ";
        switch (kind) {
        case Kind::TupleAt:
            out += "ts(";
            out += site;
            out += ") contains ";
            render_template(tmpl, out);
            break;
        case Kind::LinkBetween:
            out += "link(";
            out += site;
            out += ", ";
            out += site2;
            out += ')';
            break;
        case Kind::ActionEnabled:
            out += "action(";
            out += action_name;
            out += ", ";
            out += site;
            out += ')';
            break;
        case Kind::NoBlocked:
            out += "no_blocked(";
            out += action_name;
            out += ", ";
            out += site;
            out += ')';
            break;
        case Kind::NoDeadlock: out += "no_deadlock"; break;
        case Kind::Terminated: out += "terminated"; break;
        case Kind::LinkSymmetry: out += "link_symmetry"; break;
        }
        return out;
    }
};

enum class AssertMode { Reachable, Invariant, BlockedForever, Terminal };

struct Assertion {
    AssertMode mode = AssertMode::Reachable;
    Predicate pred;

    std::string render() const {
        std::string out;
        switch (mode) {
        case AssertMode::Reachable: out = "reachable "; break;
        case AssertMode::Invariant: out = "invariant "; break;
        case AssertMode::BlockedForever: out = "blocked_forever "; break;
        case AssertMode::Terminal: out = "terminal "; break;
        }
        out += pred.render();
        return out;
    }
};

// ---------------------------------------------------------------------------
// 128-bit state hashing (MurmurHash3 x64_128)
// ---------------------------------------------------------------------------

struct Hash128 {
    std::uint64_t hi = 0, lo = 0;
    auto operator<=>(const Hash128&) const = default;
};

namespace detail {

inline std::uint64_t rotl64(std::uint64_t x, int r) { return (x << r) | (x >> (64 - r)); }

inline std::uint64_t fmix64(std::uint64_t k) {
    k ^= k >> 33;
    k *= 0xff51afd7ed558ccdULL;
    k ^= k >> 33;
    k *= 0xc4ceb9fe1a85ec53ULL;
    k ^= k >> 33;
    return k;
}

inline std::uint64_t load64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

}  // namespace detail

inline Hash128 hash128(std::string_view data, std::uint32_t seed = 0) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
    const std::size_t len = data.size();
    const std::size_t nblocks = len / 16;

    std::uint64_t h1 = seed, h2 = seed;
    const std::uint64_t c1 = 0x87c37b91114253d5ULL;
    const std::uint64_t c2 = 0x4cf5ad432745937fULL;

    for (std::size_t i = 0; i < nblocks; ++i) {
        std::uint64_t k1 = detail::load64(bytes + i * 16);
        std::uint64_t k2 = detail::load64(bytes + i * 16 + 8);
        k1 *= c1;
        k1 = detail::rotl64(k1, 31);
        k1 *= c2;
        h1 ^= k1;
        h1 = detail::rotl64(h1, 27);
        h1 += h2;
        h1 = h1 * 5 + 0x52dce729;
        k2 *= c2;
        k2 = detail::rotl64(k2, 33);
        k2 *= c1;
        h2 ^= k2;
        h2 = detail::rotl64(h2, 31);
        h2 += h1;
        h2 = h2 * 5 + 0x38495ab5;
    }

    const unsigned char* tail = bytes + nblocks * 16;
    std::uint64_t k1 = 0, k2 = 0;
    switch (len & 15) {
    case 15: k2 ^= std::uint64_t(tail[14]) << 48; [[fallthrough]];
    case 14: k2 ^= std::uint64_t(tail[13]) << 40; [[fallthrough]];
    case 13: k2 ^= std::uint64_t(tail[12]) << 32; [[fallthrough]];
    case 12: k2 ^= std::uint64_t(tail[11]) << 24; [[fallthrough]];
    case 11: k2 ^= std::uint64_t(tail[10]) << 16; [[fallthrough]];
    case 10: k2 ^= std::uint64_t(tail[9]) << 8; [[fallthrough]];
    case 9:
        k2 ^= std::uint64_t(tail[8]);
        k2 *= c2;
        k2 = detail::rotl64(k2, 33);
        k2 *= c1;
        h2 ^= k2;
        [[fallthrough]];
    case 8: k1 ^= std::uint64_t(tail[7]) << 56; [[fallthrough]];
    case 7: k1 ^= std::uint64_t(tail[6]) << 48; [[fallthrough]];
    case 6: k1 ^= std::uint64_t(tail[5]) << 40; [[fallthrough]];
    case 5: k1 ^= std::uint64_t(tail[4]) << 32; [[fallthrough]];
    case 4: k1 ^= std::uint64_t(tail[3]) << 24; [[fallthrough]];
    case 3: k1 ^= std::uint64_t(tail[2]) << 16; [[fallthrough]];
    case 2: k1 ^= std::uint64_t(tail[1]) << 8; [[fallthrough]];
    case 1:
        k1 ^= std::uint64_t(tail[0]);
        k1 *= c1;
        k1 = detail::rotl64(k1, 31);
        k1 *= c2;
        h1 ^= k1;
        break;
    case 0: break;
    }

    h1 ^= len;
    h2 ^= len;
    h1 += h2;
    h2 += h1;
    h1 = detail::fmix64(h1);
    h2 = detail::fmix64(h2);
    h1 += h2;
    h2 += h1;
    return Hash128{h1, h2};
}

struct Hash128Hasher {
    std::size_t operator()(const Hash128& h) const { return static_cast<std::size_t>(h.hi ^ h.lo); }
};

}  // namespace klaimnet
