#pragma once

// Exhaustive interleaving exploration: breadth-first search over canonical
// state identities with assertion checking, shortest witness/counterexample
// traces, terminal classification and deterministic results independent of
// the worker count.

#include <thread>
#include <unordered_map>

#include "core.hpp"
#include "engine.hpp"

namespace klaimnet {

struct Bounds {
    std::uint64_t max_states = 200000;
    std::uint32_t max_depth = 0xffffffffu;
    unsigned workers = 1;
};

enum class Verdict { Pass, Fail };

inline const char* verdict_name(Verdict v) { return v == Verdict::Pass ? "pass" : "fail"; }

struct AssertionResult {
    Assertion assertion;
    Verdict verdict = Verdict::Pass;
    std::optional<Trace> witness;  // reachable: witness; invariant/terminal: counterexample
};

struct ExploreResult {
    std::uint64_t states = 0;       // unique states expanded (including the initial one)
    std::uint64_t transitions = 0;  // transitions enumerated from expanded states
    bool truncated = false;
    std::uint64_t terminated = 0, deadlocked = 0;
    std::vector<std::pair<std::string, bool>> terminals;  // canonical form, deadlocked?
    std::vector<AssertionResult> verdicts;
};

// ---------------------------------------------------------------------------
// Predicate evaluation
// ---------------------------------------------------------------------------

namespace explore_detail {

inline std::optional<Action::Kind> action_kind_by_name(const std::string& name) {
    using K = Action::Kind;
    if (name == "out") return K::Out;
    if (name == "in") return K::In;
    if (name == "read") return K::Read;
    if (name == "eval") return K::Eval;
    if (name == "bind") return K::Bind;
    if (name == "newloc") return K::Newloc;
    if (name == "login") return K::Login;
    if (name == "accept") return K::Accept;
    if (name == "logout") return K::Logout;
    if (name == "exec") return K::Exec;
    return std::nullopt;
}

inline bool head_fires(const NetState& s, const std::string& site, std::size_t idx, const Head& h,
                       const EngineConfig& cfg) {
    try {
        return !engine_detail::fire_head(s, site, idx, h, cfg).empty();
    } catch (const ModelError&) {
        return false;
    }
}

}  // namespace explore_detail

// Evaluate a predicate on a state. `en` must be enabled(s, cfg).
inline bool eval_predicate(const Predicate& p, const NetState& s, const std::vector<Transition>& en,
                           const EngineConfig& cfg) {
    bool base = false;
    switch (p.kind) {
    case Predicate::Kind::TupleAt: {
        const Node* node = s.find(p.site);
        if (node) {
            for (const auto& t : node->ts) {
                if (match_template(p.tmpl, t, *node)) {
                    base = true;
                    break;
                }
            }
        }
        break;
    }
    case Predicate::Kind::LinkBetween: {
        const Node* a = s.find(p.site);
        base = a && a->links.count(p.site2) > 0;
        break;
    }
    case Predicate::Kind::ActionEnabled:
    case Predicate::Kind::NoBlocked: {
        auto kind = explore_detail::action_kind_by_name(p.action_name);
        const Node* node = s.find(p.site);
        bool some_enabled = false, all_enabled = true;
        if (node && kind) {
            for (std::size_t i = 0; i < node->soup.size(); ++i) {
                for (const Head& h : first_actions(node->soup[i], *s.defs)) {
                    if (h.act.kind != *kind) continue;
                    if (explore_detail::head_fires(s, p.site, i, h, cfg)) {
                        some_enabled = true;
                    } else {
                        all_enabled = false;
                    }
                }
            }
        }
        base = (p.kind == Predicate::Kind::ActionEnabled) ? some_enabled : all_enabled;
        break;
    }
    case Predicate::Kind::NoDeadlock:
        base = !en.empty() || is_terminated(s);
        break;
    case Predicate::Kind::Terminated:
        base = is_terminated(s);
        break;
    case Predicate::Kind::LinkSymmetry: {
        base = true;
        for (const auto& [name, node] : s.nodes) {
            for (const auto& l : node.links) {
                const Node* other = s.find(l);
                if (!other || !other->links.count(name)) {
                    base = false;
                    break;
                }
            }
            if (!base) break;
        }
        break;
    }
    }
    return p.negated ? !base : base;
}

// ---------------------------------------------------------------------------
// Exploration
// ---------------------------------------------------------------------------

namespace explore_detail {

struct Meta {
    Hash128 parent;
    Label label;
    std::uint32_t depth = 0;
};

// Does this state decide the assertion, and if so which way?
// reachable: predicate true  -> Pass (witness)
// invariant: predicate false -> Fail (counterexample)
// blocked_forever: predicate true -> Fail (the action fired / was enabled)
// terminal: terminal state violating the predicate -> Fail
inline bool assertion_event(const Assertion& a, const NetState& s, const std::vector<Transition>& en,
                            const EngineConfig& cfg) {
    switch (a.mode) {
    case AssertMode::Reachable: return eval_predicate(a.pred, s, en, cfg);
    case AssertMode::Invariant: return !eval_predicate(a.pred, s, en, cfg);
    case AssertMode::BlockedForever: return eval_predicate(a.pred, s, en, cfg);
    case AssertMode::Terminal: return en.empty() && !eval_predicate(a.pred, s, en, cfg);
    }
    return false;
}

inline Verdict event_verdict(AssertMode mode) {
    return mode == AssertMode::Reachable ? Verdict::Pass : Verdict::Fail;
}

inline Verdict default_verdict(AssertMode mode) {
    return mode == AssertMode::Reachable ? Verdict::Fail : Verdict::Pass;
}

struct ExpandRes {
    std::vector<Transition> trans;
    std::vector<std::string> succ_canons;
    std::string self_canon;
    std::vector<char> events;
};

}  // namespace explore_detail

inline ExploreResult explore(const NetState& s0, const EngineConfig& cfg = {},
                             const Bounds& bounds = {},
                             const std::vector<Assertion>& assertions = {}) {
    using explore_detail::ExpandRes;
    using explore_detail::Meta;

    ExploreResult res;
    res.verdicts.reserve(assertions.size());
    for (const auto& a : assertions)
        res.verdicts.push_back({a, explore_detail::default_verdict(a.mode), std::nullopt});
    std::vector<char> decided(assertions.size(), 0);
    std::vector<Hash128> event_state(assertions.size());
    std::vector<std::string> event_canon(assertions.size());

    std::unordered_map<Hash128, Meta, Hash128Hasher> visited;
    std::vector<std::pair<NetState, Hash128>> frontier;

    {
        Hash128 h0 = hash128(canonical_form(s0));
        visited.emplace(h0, Meta{h0, Label{}, 0});
        frontier.emplace_back(s0, h0);
    }

    std::uint32_t depth = 0;
    while (!frontier.empty()) {
        // Expand the whole level; merging stays sequential and in frontier
        // order, so results do not depend on the worker count.
        std::vector<ExpandRes> results(frontier.size());
        auto expand = [&](std::size_t lo, std::size_t hi) {
            for (std::size_t i = lo; i < hi; ++i) {
                ExpandRes& r = results[i];
                const NetState& st = frontier[i].first;
                r.trans = enabled(st, cfg);
                r.succ_canons.reserve(r.trans.size());
                for (const auto& t : r.trans) r.succ_canons.push_back(canonical_form(t.next));
                if (r.trans.empty()) r.self_canon = canonical_form(st);
                r.events.resize(assertions.size());
                for (std::size_t a = 0; a < assertions.size(); ++a) {
                    r.events[a] =
                        explore_detail::assertion_event(assertions[a], st, r.trans, cfg) ? 1 : 0;
                }
            }
        };
        unsigned workers = std::max(1u, bounds.workers);
        if (workers <= 1 || frontier.size() < 2) {
            expand(0, frontier.size());
        } else {
            unsigned n = std::min<unsigned>(workers, static_cast<unsigned>(frontier.size()));
            std::vector<std::thread> pool;
            pool.reserve(n);
            std::size_t chunk = (frontier.size() + n - 1) / n;
            for (unsigned w = 0; w < n; ++w) {
                std::size_t lo = w * chunk;
                std::size_t hi = std::min(frontier.size(), lo + chunk);
                if (lo >= hi) break;
                pool.emplace_back(expand, lo, hi);
            }
            for (auto& th : pool) th.join();
        }

        std::vector<std::pair<NetState, Hash128>> nextFrontier;
        for (std::size_t i = 0; i < frontier.size(); ++i) {
            ExpandRes& r = results[i];
            const Hash128 selfHash = frontier[i].second;
            res.states += 1;
            res.transitions += r.trans.size();

            if (r.trans.empty()) {
                bool term = is_terminated(frontier[i].first);
                (term ? res.terminated : res.deadlocked) += 1;
                res.terminals.emplace_back(std::move(r.self_canon), !term);
            }
            for (std::size_t a = 0; a < assertions.size(); ++a) {
                if (!decided[a] && r.events[a]) {
                    decided[a] = 1;
                    res.verdicts[a].verdict = explore_detail::event_verdict(assertions[a].mode);
                    event_state[a] = selfHash;
                    event_canon[a] = canonical_form(frontier[i].first);
                }
            }
            if (depth >= bounds.max_depth) {
                if (!r.trans.empty()) res.truncated = true;
                continue;
            }
            for (std::size_t k = 0; k < r.trans.size(); ++k) {
                Hash128 h = hash128(r.succ_canons[k]);
                if (visited.count(h)) continue;
                if (visited.size() >= bounds.max_states) {
                    res.truncated = true;
                    continue;
                }
                visited.emplace(h, Meta{selfHash, r.trans[k].label, depth + 1});
                nextFrontier.emplace_back(std::move(r.trans[k].next), h);
            }
        }
        frontier = std::move(nextFrontier);
        ++depth;
    }

    // Reconstruct shortest traces for the decided assertions.
    for (std::size_t a = 0; a < assertions.size(); ++a) {
        if (!decided[a]) continue;
        std::vector<Label> labels;
        Hash128 cur = event_state[a];
        for (;;) {
            const Meta& m = visited.at(cur);
            if (m.parent == cur) break;
            labels.push_back(m.label);
            cur = m.parent;
        }
        std::reverse(labels.begin(), labels.end());
        Trace t;
        t.steps = std::move(labels);
        t.final_state = std::move(event_canon[a]);
        res.verdicts[a].witness = std::move(t);
    }
    return res;
}

// Check a single assertion.
inline AssertionResult check(const NetState& s0, const Assertion& a, const EngineConfig& cfg = {},
                             const Bounds& bounds = {}) {
    return explore(s0, cfg, bounds, {a}).verdicts.at(0);
}

// Shortest trace to a state satisfying the predicate, if one is reachable
// within bounds.
inline std::optional<Trace> shortest_trace(const NetState& s0, const Predicate& p,
                                           const EngineConfig& cfg = {}, const Bounds& bounds = {}) {
    Assertion a;
    a.mode = AssertMode::Reachable;
    a.pred = p;
    AssertionResult r = check(s0, a, cfg, bounds);
    if (r.verdict == Verdict::Pass) return r.witness;
    return std::nullopt;
}

}  // namespace klaimnet
