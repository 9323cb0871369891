#pragma once

// Template matching, expression evaluation, substitution and definition
// unfolding. All functions are pure; errors are reported as exceptions so
// the engine can turn them into disabled transitions or surfaced faults.

#include <map>
#include <optional>

#include "core.hpp"

namespace klaimnet {

enum class ErrKind {
    UnboundLocality,
    UnboundVariable,
    UnknownSite,
    StrictConnectivity,
    TargetNotSite,
    ConflictingBind,
    SelfRebind,
    DuplicateSite,
    NotLinked,
    NoSuchAction,
    StaleTransition,
    UndefinedDefinition,
    ArityMismatch,
};

inline const char* err_name(ErrKind k) {
    switch (k) {
    case ErrKind::UnboundLocality: return "UnboundLocality";
    case ErrKind::UnboundVariable: return "UnboundVariable";
    case ErrKind::UnknownSite: return "UnknownSite";
    case ErrKind::StrictConnectivity: return "StrictConnectivity";
    case ErrKind::TargetNotSite: return "TargetNotSite";
    case ErrKind::ConflictingBind: return "ConflictingBind";
    case ErrKind::SelfRebind: return "SelfRebind";
    case ErrKind::DuplicateSite: return "DuplicateSite";
    case ErrKind::NotLinked: return "NotLinked";
    case ErrKind::NoSuchAction: return "NoSuchAction";
    case ErrKind::StaleTransition: return "StaleTransition";
    case ErrKind::UndefinedDefinition: return "UndefinedDefinition";
    case ErrKind::ArityMismatch: return "ArityMismatch";
    }
    return "?";
}

class ModelError : public std::runtime_error {
public:
    ModelError(ErrKind kind, const std::string& what)
        : std::runtime_error(std::string(err_name(kind)) + ": " + what), kind_(kind) {}
    ErrKind kind() const { return kind_; }

private:
    ErrKind kind_;
};

// Variable bindings produced by template matching.
using Bindings = std::map<std::string, Value>;

// Resolve a locality name at a node: `self` names the node's own site;
// anything else goes through the allocation environment.
inline std::optional<Site> resolve_loc(const Node& node, const std::string& name) {
    if (name == "self") return node.site;
    auto it = node.env.find(name);
    if (it == node.env.end()) return std::nullopt;
    return Site{it->second};
}

// Evaluate an expression to a ground value at a node under variable
// bindings. Locality references resolve through the node's environment.
inline Value eval_expr(const Expr& e, const Node& node, const Bindings& binds = {}) {
    switch (e.kind) {
    case Expr::Kind::Lit:
        return e.value;
    case Expr::Kind::LocRef: {
        auto site = resolve_loc(node, e.name);
        if (!site) throw ModelError(ErrKind::UnboundLocality, e.name + " at " + node.site.name);
        return Value::site(*site);
    }
    case Expr::Kind::VarRef: {
        auto it = binds.find(e.name);
        if (it == binds.end()) throw ModelError(ErrKind::UnboundVariable, e.name);
        return it->second;
    }
    case Expr::Kind::Raw:
        throw std::logic_error("unclassified identifier reached evaluation: " + e.name);
    }
    throw std::logic_error("unreachable");
}

// Match a template against a tuple at a node. Fields are processed left to
// right: formals bind, actuals must evaluate to an equal value; an actual
// may refer to a formal bound earlier in the same template. Deterministic
// and total: returns the bindings on success, nullopt on mismatch.
inline std::optional<Bindings> match_template(const std::vector<TField>& tmpl, const Tuple& tuple,
                                              const Node& node, const Bindings& outer = {}) {
    if (tmpl.size() != tuple.size()) return std::nullopt;
    Bindings binds = outer;
    for (std::size_t i = 0; i < tmpl.size(); ++i) {
        if (tmpl[i].formal) {
            binds.insert_or_assign(tmpl[i].var, tuple[i]);
        } else {
            if (eval_expr(tmpl[i].actual, node, binds) != tuple[i]) return std::nullopt;
        }
    }
    return binds;
}

// ---------------------------------------------------------------------------
// Substitution
// ---------------------------------------------------------------------------

// Substitution maps variable names to expressions (values are the common
// case; definition unfolding passes arbitrary argument expressions).
using ExprSubst = std::map<std::string, Expr>;

namespace detail {

inline Expr subst_expr(const Expr& e, const ExprSubst& sub) {
    if (e.kind == Expr::Kind::VarRef) {
        auto it = sub.find(e.name);
        if (it != sub.end()) return it->second;
    }
    return e;
}

inline TermPtr subst_term(const TermPtr& t, const ExprSubst& sub);

inline Action subst_action(const Action& a, const ExprSubst& sub, ExprSubst& contSub) {
    Action out = a;
    for (auto& e : out.args) e = subst_expr(e, sub);
    out.target = subst_expr(out.target, sub);
    // Template formals shadow outer bindings in every later field and in the
    // continuation.
    if (a.kind == Action::Kind::In || a.kind == Action::Kind::Read) {
        ExprSubst inner = sub;
        for (auto& f : out.tmpl) {
            if (f.formal) {
                inner.erase(f.var);
            } else {
                f.actual = subst_expr(f.actual, inner);
            }
        }
        contSub = inner;
    } else {
        contSub = sub;
    }
    if (out.proc) out.proc = subst_term(out.proc, sub);
    return out;
}

inline TermPtr subst_term(const TermPtr& t, const ExprSubst& sub) {
    if (!t || sub.empty()) return t;
    switch (t->kind) {
    case TermNode::Kind::Nil:
        return t;
    case TermNode::Kind::Prefix: {
        ExprSubst contSub;
        Action act = subst_action(t->act, sub, contSub);
        return mk_prefix(std::move(act), subst_term(t->cont, contSub));
    }
    case TermNode::Kind::Par:
        return mk_par(subst_term(t->left, sub), subst_term(t->right, sub));
    case TermNode::Kind::Choice:
        return mk_choice(subst_term(t->left, sub), subst_term(t->right, sub));
    case TermNode::Kind::Call: {
        std::vector<Expr> args;
        args.reserve(t->call_args.size());
        for (const auto& e : t->call_args) args.push_back(subst_expr(e, sub));
        return mk_call(t->callee, std::move(args));
    }
    }
    throw std::logic_error("unreachable");
}

}  // namespace detail

inline TermPtr substitute(const TermPtr& t, const ExprSubst& sub) {
    return detail::subst_term(t, sub);
}

inline TermPtr substitute(const TermPtr& t, const Bindings& binds) {
    ExprSubst sub;
    for (const auto& [name, v] : binds) sub.emplace(name, Expr::lit(v));
    return detail::subst_term(t, sub);
}

// Unfold a definition call: parameters are replaced by the argument
// expressions. Guarded recursion (checked statically) keeps this finite.
inline TermPtr unfold(const TermNode& call, const Defs& defs) {
    const Def* def = defs.find(call.callee);
    if (!def) throw ModelError(ErrKind::UndefinedDefinition, call.callee);
    if (def->params.size() != call.call_args.size())
        throw ModelError(ErrKind::ArityMismatch,
                         call.callee + " expects " + std::to_string(def->params.size()) +
                             " arguments, got " + std::to_string(call.call_args.size()));
    ExprSubst sub;
    for (std::size_t i = 0; i < def->params.size(); ++i) sub.emplace(def->params[i], call.call_args[i]);
    return substitute(def->body, sub);
}

// ---------------------------------------------------------------------------
// Ship-time resolution
// ---------------------------------------------------------------------------

namespace detail {

inline TermPtr ship_term(const TermPtr& t, const Node& node, std::set<std::string>& shadowed);

inline Expr ship_expr(const Expr& e, const Node& node, const std::set<std::string>& shadowed) {
    if (e.kind == Expr::Kind::LocRef && !shadowed.count(e.name)) {
        auto site = resolve_loc(node, e.name);
        if (!site)
            throw ModelError(ErrKind::UnboundLocality, e.name + " at " + node.site.name);
        return Expr::lit(Value::site(*site));
    }
    return e;
}

inline TermPtr ship_term(const TermPtr& t, const Node& node, std::set<std::string>& shadowed) {
    if (!t) return t;
    switch (t->kind) {
    case TermNode::Kind::Nil:
        return t;
    case TermNode::Kind::Prefix: {
        Action act = t->act;
        for (auto& e : act.args) e = ship_expr(e, node, shadowed);
        for (auto& f : act.tmpl) {
            if (!f.formal) f.actual = ship_expr(f.actual, node, shadowed);
        }
        if (act.kind != Action::Kind::Bind && act.kind != Action::Kind::Newloc) {
            act.target = ship_expr(act.target, node, shadowed);
        }
        if (act.kind == Action::Kind::Bind) {
            act.target = ship_expr(act.target, node, shadowed);
        }
        if (act.proc) act.proc = ship_term(act.proc, node, shadowed);
        if (act.kind == Action::Kind::Newloc) {
            // The fresh locality is bound by this prefix: occurrences below
            // it stay symbolic until the new node is allocated.
            bool inserted = shadowed.insert(act.loc).second;
            TermPtr cont = ship_term(t->cont, node, shadowed);
            if (inserted) shadowed.erase(act.loc);
            return mk_prefix(std::move(act), std::move(cont));
        }
        return mk_prefix(std::move(act), ship_term(t->cont, node, shadowed));
    }
    case TermNode::Kind::Par:
        return mk_par(ship_term(t->left, node, shadowed), ship_term(t->right, node, shadowed));
    case TermNode::Kind::Choice:
        return mk_choice(ship_term(t->left, node, shadowed), ship_term(t->right, node, shadowed));
    case TermNode::Kind::Call: {
        std::vector<Expr> args;
        args.reserve(t->call_args.size());
        for (const auto& e : t->call_args) args.push_back(ship_expr(e, node, shadowed));
        return mk_call(t->callee, std::move(args));
    }
    }
    throw std::logic_error("unreachable");
}

}  // namespace detail

// Resolve the free locality references of a process against the sender's
// environment before shipping it to another node (eval). Localities bound
// by an inner newloc stay symbolic; definition bodies are not entered, so a
// shipped call unfolds at the destination under the destination's
// environment.
inline TermPtr resolve_for_ship(const TermPtr& t, const Node& sender) {
    std::set<std::string> shadowed;
    return detail::ship_term(t, sender, shadowed);
}

}  // namespace klaimnet
