#pragma once

// Small-step operational semantics. `enabled` enumerates every transition of
// a state deterministically; `step` fires one by label; the `apply_*` family
// exposes each rule as a checked state transformer that throws ModelError
// when a precondition fails (where `enabled` silently skips).

#include <functional>

#include "core.hpp"
#include "match.hpp"

namespace klaimnet {

struct EngineConfig {
    bool strict_connectivity = false;  // out/in/read/eval targets limited to links + self
    bool fault_injection = false;      // spontaneous link-failure transitions
    bool open_accept = false;          // `accept *` synchronises with strangers
};

// One action prefix reachable as a first step of a soup element, together
// with the rebuild function that produces the element's replacement once the
// prefix fires with continuation `cont`.
struct Head {
    Action act;
    TermPtr cont;
    std::function<TermPtr(TermPtr)> wrap;
};

namespace engine_detail {

inline void first_actions_into(const TermPtr& t, const Defs& defs,
                               const std::function<TermPtr(TermPtr)>& wrap, std::vector<Head>& out,
                               int depth) {
    if (!t) return;
    if (depth > 512)
        throw std::logic_error("definition unfolding exceeded depth limit (unguarded recursion?)");
    switch (t->kind) {
    case TermNode::Kind::Nil:
        return;
    case TermNode::Kind::Prefix:
        out.push_back({t->act, t->cont, wrap});
        return;
    case TermNode::Kind::Par: {
        TermPtr left = t->left, right = t->right;
        first_actions_into(
            left, defs, [wrap, right](TermPtr c) { return wrap(mk_par(std::move(c), right)); }, out,
            depth + 1);
        first_actions_into(
            right, defs, [wrap, left](TermPtr c) { return wrap(mk_par(left, std::move(c))); }, out,
            depth + 1);
        return;
    }
    case TermNode::Kind::Choice:
        // Committing to a branch discards the other one.
        first_actions_into(t->left, defs, wrap, out, depth + 1);
        first_actions_into(t->right, defs, wrap, out, depth + 1);
        return;
    case TermNode::Kind::Call:
        first_actions_into(unfold(*t, defs), defs, wrap, out, depth + 1);
        return;
    }
}

}  // namespace engine_detail

// All action prefixes a soup element can fire first, with rebuild contexts.
inline std::vector<Head> first_actions(const TermPtr& t, const Defs& defs) {
    std::vector<Head> out;
    engine_detail::first_actions_into(t, defs, [](TermPtr c) { return c; }, out, 0);
    return out;
}

namespace engine_detail {

inline std::string join_values(const std::vector<Value>& vals) {
    std::string out;
    for (std::size_t i = 0; i < vals.size(); ++i) {
        if (i) out += ", ";
        vals[i].render(out);
    }
    return out;
}

inline NetState replace_elem(const NetState& s, const std::string& site, std::size_t idx,
                             const TermPtr& repl) {
    NetState next = s;
    Node& node = next.nodes.at(site);
    node.soup.erase(node.soup.begin() + static_cast<std::ptrdiff_t>(idx));
    soup_insert(node.soup, repl);
    return next;
}

inline Site resolve_site_expr(const Node& node, const Expr& e) {
    Value v = eval_expr(e, node);
    if (v.kind() != Value::Kind::SiteV)
        throw ModelError(ErrKind::TargetNotSite, e.render() + " = " + v.render() + " at " + node.site.name);
    return v.as_site();
}

inline const Node& require_node(const NetState& s, const Site& site, const char* what) {
    const Node* n = s.find(site.name);
    if (!n) throw ModelError(ErrKind::UnknownSite, std::string(what) + " '" + site.name + "'");
    return *n;
}

inline void require_connectivity(const EngineConfig& cfg, const Node& from, const Site& to) {
    if (!cfg.strict_connectivity) return;
    if (to.name == from.site.name) return;
    if (!from.links.count(to.name))
        throw ModelError(ErrKind::StrictConnectivity,
                         from.site.name + " is not acquainted with " + to.name);
}

inline std::string fresh_site_name(const NetState& s) {
    std::uint64_t idx = fresh_site_index(s);
    std::string name = "s#" + std::to_string(idx);
    while (s.nodes.count(name)) name = "s#" + std::to_string(++idx);
    return name;
}

// Fire one head of one soup element. Returns every resulting transition
// (input actions produce one per matching tuple). Precondition failures
// throw ModelError; `enabled` catches them to mean "not enabled".
inline std::vector<Transition> fire_head(const NetState& s, const std::string& siteName,
                                         std::size_t idx, const Head& h, const EngineConfig& cfg) {
    const Node& node = s.nodes.at(siteName);
    const Action& a = h.act;
    std::vector<Transition> out;
    using K = Action::Kind;

    switch (a.kind) {
    case K::Out: {
        Tuple vals;
        vals.reserve(a.args.size());
        for (const auto& e : a.args) vals.push_back(eval_expr(e, node));
        Site target = resolve_site_expr(node, a.target);
        require_node(s, target, "output target");
        require_connectivity(cfg, node, target);
        NetState next = replace_elem(s, siteName, idx, h.wrap(h.cont));
        ts_insert(next.nodes.at(target.name).ts, vals);
        out.push_back({Label{siteName, "out(" + join_values(vals) + ")@" + target.name, ""},
                       std::move(next)});
        return out;
    }
    case K::In:
    case K::Read: {
        Site target = resolve_site_expr(node, a.target);
        const Node& tnode = require_node(s, target, "input target");
        require_connectivity(cfg, node, target);
        for (std::size_t ti = 0; ti < tnode.ts.size(); ++ti) {
            auto binds = match_template(a.tmpl, tnode.ts[ti], node);
            if (!binds) continue;
            TermPtr cont = substitute(h.cont, *binds);
            NetState next = replace_elem(s, siteName, idx, h.wrap(cont));
            if (a.kind == K::In) {
                Node& tn = next.nodes.at(target.name);
                tn.ts.erase(tn.ts.begin() + static_cast<std::ptrdiff_t>(ti));
            }
            const char* word = (a.kind == K::In) ? "in(" : "read(";
            out.push_back({Label{siteName, word + join_values(tnode.ts[ti]) + ")@" + target.name, ""},
                           std::move(next)});
        }
        return out;
    }
    case K::Eval: {
        Site target = resolve_site_expr(node, a.target);
        require_node(s, target, "eval target");
        require_connectivity(cfg, node, target);
        TermPtr shipped = resolve_for_ship(a.proc ? a.proc : mk_nil(), node);
        NetState next = replace_elem(s, siteName, idx, h.wrap(h.cont));
        soup_insert(next.nodes.at(target.name).soup, shipped);
        out.push_back({Label{siteName, "eval(" + shipped->canon + ")@" + target.name, ""},
                       std::move(next)});
        return out;
    }
    case K::Bind: {
        if (a.loc == "self") throw ModelError(ErrKind::SelfRebind, "at " + siteName);
        Value v = eval_expr(a.target, node);
        if (v.kind() != Value::Kind::SiteV)
            throw ModelError(ErrKind::TargetNotSite, a.target.render() + " = " + v.render());
        auto it = node.env.find(a.loc);
        if (it != node.env.end() && it->second != v.text())
            throw ModelError(ErrKind::ConflictingBind,
                             a.loc + " is already bound to " + it->second + " at " + siteName);
        NetState next = replace_elem(s, siteName, idx, h.wrap(h.cont));
        next.nodes.at(siteName).env[a.loc] = v.text();
        out.push_back({Label{siteName, "bind(" + a.loc + ", " + v.text() + ")", ""}, std::move(next)});
        return out;
    }
    case K::Newloc: {
        std::string name;
        if (!a.site_name.empty()) {
            if (s.nodes.count(a.site_name))
                throw ModelError(ErrKind::DuplicateSite, a.site_name);
            name = a.site_name;
        } else {
            name = fresh_site_name(s);
        }
        NetState next = replace_elem(s, siteName, idx, h.wrap(h.cont));
        Node fresh;
        fresh.site = Site{name};
        fresh.links.insert(siteName);
        if (a.proc) soup_insert(fresh.soup, a.proc);
        next.nodes.emplace(name, std::move(fresh));
        Node& creator = next.nodes.at(siteName);
        creator.links.insert(name);
        creator.env[a.loc] = name;
        out.push_back({Label{siteName, "newloc(" + a.loc + " as " + name + ")", ""}, std::move(next)});
        return out;
    }
    case K::Login: {
        Site target = resolve_site_expr(node, a.target);
        const Node& tnode = require_node(s, target, "login target");
        if (target.name == siteName)
            throw ModelError(ErrKind::NotLinked, "login to self at " + siteName);
        // Two-party rendezvous: every matching accept prefix at the target
        // yields one transition.
        for (std::size_t j = 0; j < tnode.soup.size(); ++j) {
            for (const Head& h2 : first_actions(tnode.soup[j], *s.defs)) {
                if (h2.act.kind != K::Accept) continue;
                bool admits = h2.act.accept_any
                                  ? cfg.open_accept
                                  : std::count(h2.act.accept_sites.begin(),
                                               h2.act.accept_sites.end(), siteName) > 0;
                if (!admits) continue;
                NetState next = replace_elem(s, siteName, idx, h.wrap(h.cont));
                // Recompute the accept element's position: replacing the
                // login element cannot reorder another node's soup.
                next = replace_elem(next, target.name, j, h2.wrap(h2.cont));
                next.nodes.at(siteName).links.insert(target.name);
                next.nodes.at(target.name).links.insert(siteName);
                out.push_back({Label{siteName, "login", target.name}, std::move(next)});
            }
        }
        return out;
    }
    case K::Accept:
        return out;  // passive: fires only as the partner of a login
    case K::Logout: {
        Site target = resolve_site_expr(node, a.target);
        require_node(s, target, "logout target");
        NetState next = replace_elem(s, siteName, idx, h.wrap(h.cont));
        next.nodes.at(siteName).links.erase(target.name);
        next.nodes.at(target.name).links.erase(siteName);
        out.push_back({Label{siteName, "logout(" + target.name + ")", ""}, std::move(next)});
        return out;
    }
    case K::Exec: {
        std::vector<Value> vals;
        vals.reserve(a.args.size());
        for (const auto& e : a.args) vals.push_back(eval_expr(e, node));
        NetState next = replace_elem(s, siteName, idx, h.wrap(h.cont));
        std::string label = "exec " + a.exec_name;
        if (!vals.empty()) label += "(" + join_values(vals) + ")";
        out.push_back({Label{siteName, std::move(label), ""}, std::move(next)});
        return out;
    }
    }
    return out;
}

}  // namespace engine_detail

// Every transition enabled in `s`, sorted by (label, successor canonical
// form) and deduplicated; transitions sharing a label get ordinal suffixes
// (" #2", " #3", ...) so each label identifies exactly one successor.
inline std::vector<Transition> enabled(const NetState& s, const EngineConfig& cfg = {}) {
    std::vector<Transition> raw;
    for (const auto& [siteName, node] : s.nodes) {
        for (std::size_t i = 0; i < node.soup.size(); ++i) {
            for (const Head& h : first_actions(node.soup[i], *s.defs)) {
                try {
                    auto fired = engine_detail::fire_head(s, siteName, i, h, cfg);
                    for (auto& t : fired) raw.push_back(std::move(t));
                } catch (const ModelError&) {
                    // precondition failed: the prefix is simply not enabled
                }
            }
        }
    }
    if (cfg.fault_injection) {
        for (const auto& [siteName, node] : s.nodes) {
            for (const auto& other : node.links) {
                if (siteName >= other) continue;
                NetState next = s;
                next.nodes.at(siteName).links.erase(other);
                next.nodes.at(other).links.erase(siteName);
                raw.push_back({Label{siteName, "fault", other}, std::move(next)});
            }
        }
    }

    std::vector<std::pair<std::string, std::size_t>> order;  // successor canon, index
    order.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) order.emplace_back(canonical_form(raw[i].next), i);
    std::vector<std::size_t> idx(raw.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const Label& la = raw[a].label;
        const Label& lb = raw[b].label;
        if (la != lb) return la < lb;
        return order[a].first < order[b].first;
    });

    std::vector<Transition> out;
    out.reserve(raw.size());
    std::vector<std::string> canons;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        std::size_t i = idx[k];
        if (!out.empty() && out.back().label == raw[i].label && canons.back() == order[i].first)
            continue;  // identical (label, successor): one transition
        out.push_back(std::move(raw[i]));
        canons.push_back(std::move(order[i].first));
    }
    // Ordinal suffixes for label ties (distinct successors, same label).
    std::size_t runStart = 0;
    for (std::size_t k = 1; k <= out.size(); ++k) {
        if (k == out.size() || out[k].label != out[runStart].label) {
            if (k - runStart > 1) {
                for (std::size_t j = runStart + 1; j < k; ++j)
                    out[j].label.action += " #" + std::to_string(j - runStart + 1);
            }
            runStart = k;
        }
    }
#ifndef NDEBUG
    for (const auto& t : out) check_state_invariants(t.next);
#endif
    return out;
}

// Fire the transition carrying this label. Labels come from `enabled` on the
// same state; anything else is stale.
inline NetState step(const NetState& s, const Label& label, const EngineConfig& cfg = {}) {
    for (auto& t : enabled(s, cfg)) {
        if (t.label == label) return std::move(t.next);
    }
    throw ModelError(ErrKind::StaleTransition, label.render());
}

// ---------------------------------------------------------------------------
// Rule-by-rule application (throwing variants)
// ---------------------------------------------------------------------------

namespace engine_detail {

// Find the first soup element/head at `site` matching `pred` (canonical
// order); NoSuchAction if absent.
inline std::pair<std::size_t, Head> locate_head(const NetState& s, const std::string& site,
                                                const std::function<bool(const Action&)>& pred,
                                                const char* what) {
    const Node& node = require_node(s, Site{site}, "acting site");
    for (std::size_t i = 0; i < node.soup.size(); ++i) {
        for (const Head& h : first_actions(node.soup[i], *s.defs)) {
            if (pred(h.act)) return {i, h};
        }
    }
    throw ModelError(ErrKind::NoSuchAction, std::string(what) + " at " + site);
}

inline std::string action_text(const Action& a) {
    std::string out;
    render_action(a, out);
    return out;
}

}  // namespace engine_detail

inline NetState apply_out(const NetState& s, const std::string& site, const std::vector<Expr>& args,
                          const Expr& target, const EngineConfig& cfg = {}) {
    Action want;
    want.kind = Action::Kind::Out;
    want.args = args;
    want.target = target;
    auto [i, h] = engine_detail::locate_head(
        s, site,
        [&](const Action& a) {
            return a.kind == Action::Kind::Out &&
                   engine_detail::action_text(a) == engine_detail::action_text(want);
        },
        "no matching out prefix");
    return std::move(engine_detail::fire_head(s, site, i, h, cfg).at(0).next);
}

// One successor per matching tuple, in tuple-space order.
inline std::vector<NetState> apply_in(const NetState& s, const std::string& site,
                                      const std::vector<TField>& tmpl, const Expr& target,
                                      const EngineConfig& cfg = {}) {
    Action want;
    want.kind = Action::Kind::In;
    want.tmpl = tmpl;
    want.target = target;
    auto [i, h] = engine_detail::locate_head(
        s, site,
        [&](const Action& a) {
            return a.kind == Action::Kind::In &&
                   engine_detail::action_text(a) == engine_detail::action_text(want);
        },
        "no matching in prefix");
    std::vector<NetState> out;
    for (auto& t : engine_detail::fire_head(s, site, i, h, cfg)) out.push_back(std::move(t.next));
    return out;
}

inline std::vector<NetState> apply_read(const NetState& s, const std::string& site,
                                        const std::vector<TField>& tmpl, const Expr& target,
                                        const EngineConfig& cfg = {}) {
    Action want;
    want.kind = Action::Kind::Read;
    want.tmpl = tmpl;
    want.target = target;
    auto [i, h] = engine_detail::locate_head(
        s, site,
        [&](const Action& a) {
            return a.kind == Action::Kind::Read &&
                   engine_detail::action_text(a) == engine_detail::action_text(want);
        },
        "no matching read prefix");
    std::vector<NetState> out;
    for (auto& t : engine_detail::fire_head(s, site, i, h, cfg)) out.push_back(std::move(t.next));
    return out;
}

inline NetState apply_eval(const NetState& s, const std::string& site, const Expr& target,
                           const EngineConfig& cfg = {}) {
    auto [i, h] = engine_detail::locate_head(
        s, site,
        [&](const Action& a) {
            return a.kind == Action::Kind::Eval && a.target.render() == target.render();
        },
        "no matching eval prefix");
    return std::move(engine_detail::fire_head(s, site, i, h, cfg).at(0).next);
}

inline NetState apply_bind(const NetState& s, const std::string& site, const std::string& loc,
                           const Expr& siteExpr, const EngineConfig& cfg = {}) {
    auto [i, h] = engine_detail::locate_head(
        s, site,
        [&](const Action& a) {
            return a.kind == Action::Kind::Bind && a.loc == loc &&
                   a.target.render() == siteExpr.render();
        },
        "no matching bind prefix");
    return std::move(engine_detail::fire_head(s, site, i, h, cfg).at(0).next);
}

inline NetState apply_newloc(const NetState& s, const std::string& site, const std::string& loc,
                             const EngineConfig& cfg = {}) {
    auto [i, h] = engine_detail::locate_head(
        s, site, [&](const Action& a) { return a.kind == Action::Kind::Newloc && a.loc == loc; },
        "no matching newloc prefix");
    return std::move(engine_detail::fire_head(s, site, i, h, cfg).at(0).next);
}

// Atomic login/accept rendezvous with a named acceptor.
inline NetState apply_login_accept(const NetState& s, const std::string& loginSite,
                                   const Expr& target, const std::string& acceptSite,
                                   const EngineConfig& cfg = {}) {
    auto [i, h] = engine_detail::locate_head(
        s, loginSite,
        [&](const Action& a) {
            return a.kind == Action::Kind::Login && a.target.render() == target.render();
        },
        "no matching login prefix");
    auto fired = engine_detail::fire_head(s, loginSite, i, h, cfg);
    for (auto& t : fired) {
        if (t.label.partner == acceptSite) return std::move(t.next);
    }
    throw ModelError(ErrKind::NoSuchAction,
                     "no accept at " + acceptSite + " admits " + loginSite);
}

inline NetState apply_logout(const NetState& s, const std::string& site, const Expr& target,
                             const EngineConfig& cfg = {}) {
    auto [i, h] = engine_detail::locate_head(
        s, site,
        [&](const Action& a) {
            return a.kind == Action::Kind::Logout && a.target.render() == target.render();
        },
        "no matching logout prefix");
    return std::move(engine_detail::fire_head(s, site, i, h, cfg).at(0).next);
}

inline NetState apply_exec(const NetState& s, const std::string& site, const std::string& name,
                           const EngineConfig& cfg = {}) {
    auto [i, h] = engine_detail::locate_head(
        s, site, [&](const Action& a) { return a.kind == Action::Kind::Exec && a.exec_name == name; },
        "no matching exec prefix");
    return std::move(engine_detail::fire_head(s, site, i, h, cfg).at(0).next);
}

// Drop the link between two acquainted nodes (fault injection).
inline NetState apply_link_failure(const NetState& s, const std::string& a, const std::string& b) {
    const Node& na = engine_detail::require_node(s, Site{a}, "fault endpoint");
    engine_detail::require_node(s, Site{b}, "fault endpoint");
    if (!na.links.count(b)) throw ModelError(ErrKind::NotLinked, a + " <-> " + b);
    NetState next = s;
    next.nodes.at(a).links.erase(b);
    next.nodes.at(b).links.erase(a);
    return next;
}

// A state is terminated when no process remains anywhere; a state with
// processes but no transitions is deadlocked.
inline bool is_terminated(const NetState& s) {
    for (const auto& [name, node] : s.nodes) {
        (void)name;
        if (!node.soup.empty()) return false;
    }
    return true;
}

}  // namespace klaimnet
