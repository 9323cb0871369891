#pragma once

// Net-description language: lexer, recursive-descent parser with panic-mode
// recovery at declaration boundaries, identifier classification and static
// checks. The surface syntax round-trips with render_state.

#include <functional>
#include <memory>

#include "core.hpp"
#include "match.hpp"

namespace klaimnet {

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

struct SourceSpan {
    std::string file;
    int line = 1;
    int column = 1;
    int length = 0;
};

struct ParseError {
    SourceSpan span;
    std::string message;

    std::string render() const {
        std::string out = span.file.empty() ? "<input>" : span.file;
        out += ':' + std::to_string(span.line) + ':' + std::to_string(span.column) + ": " + message;
        return out;
    }
};

struct ParseResult {
    NetState net;
    std::vector<Assertion> assertions;
    std::vector<ParseError> errors;
    std::vector<ParseError> warnings;

    bool ok() const { return errors.empty(); }
};

namespace parse_detail {

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

enum class Tok {
    Ident, Int, Str, Sym,
    LParen, RParen, LBrace, RBrace,
    Comma, Dot, At, Bang, Pipe, Plus, Star, Eq, Arrow,
    End,
};

struct Token {
    Tok type = Tok::End;
    std::string text;
    std::int64_t ival = 0;
    SourceSpan span;
};

inline bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '#';
}

struct Lexer {
    std::string_view src;
    std::string file;
    std::size_t pos = 0;
    int line = 1, col = 1;
    std::vector<ParseError>* errors;

    SourceSpan here(int len = 1) const { return SourceSpan{file, line, col, len}; }

    char peek() const { return pos < src.size() ? src[pos] : '\0'; }
    char peek2() const { return pos + 1 < src.size() ? src[pos + 1] : '\0'; }

    void advance() {
        if (pos < src.size()) {
            if (src[pos] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
            ++pos;
        }
    }

    void error(const SourceSpan& span, std::string msg) { errors->push_back({span, std::move(msg)}); }

    std::vector<Token> run() {
        std::vector<Token> out;
        while (pos < src.size()) {
            char c = peek();
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                advance();
                continue;
            }
            if (c == '/' && peek2() == '/') {
                while (pos < src.size() && peek() != '\n') advance();
                continue;
            }
            SourceSpan start = here();
            if (ident_start(c)) {
                std::string text;
                while (pos < src.size() && ident_char(peek())) {
                    text += peek();
                    advance();
                }
                start.length = static_cast<int>(text.size());
                out.push_back({Tok::Ident, std::move(text), 0, start});
                continue;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) ||
                (c == '-' && std::isdigit(static_cast<unsigned char>(peek2())))) {
                std::string text;
                if (c == '-') {
                    text += c;
                    advance();
                }
                while (pos < src.size() && std::isdigit(static_cast<unsigned char>(peek()))) {
                    text += peek();
                    advance();
                }
                start.length = static_cast<int>(text.size());
                out.push_back({Tok::Int, text, std::strtoll(text.c_str(), nullptr, 10), start});
                continue;
            }
            if (c == '"') {
                advance();
                std::string text;
                bool closed = false;
                while (pos < src.size()) {
                    char d = peek();
                    if (d == '"') {
                        advance();
                        closed = true;
                        break;
                    }
                    if (d == '\n') break;
                    if (d == '\\') {
                        advance();
                        char e = peek();
                        switch (e) {
                        case 'n': text += '\n'; break;
                        case 't': text += '\t'; break;
                        case '"': text += '"'; break;
                        case '\\': text += '\\'; break;
                        default:
                            error(here(), std::string("unknown escape '\\") + e + "' in string");
                            text += e;
                            break;
                        }
                        advance();
                        continue;
                    }
                    text += d;
                    advance();
                }
                if (!closed) error(start, "unterminated string literal");
                start.length = static_cast<int>(text.size()) + 2;
                out.push_back({Tok::Str, std::move(text), 0, start});
                continue;
            }
            if (c == '`') {
                advance();
                std::string text;
                while (pos < src.size() && ident_char(peek())) {
                    text += peek();
                    advance();
                }
                if (peek() == '`') {
                    advance();
                } else {
                    error(start, "unterminated symbol literal");
                }
                if (text.empty()) error(start, "empty symbol literal");
                start.length = static_cast<int>(text.size()) + 2;
                out.push_back({Tok::Sym, std::move(text), 0, start});
                continue;
            }
            if (c == '-' && peek2() == '>') {
                advance();
                advance();
                start.length = 2;
                out.push_back({Tok::Arrow, "->", 0, start});
                continue;
            }
            Tok t;
            switch (c) {
            case '(': t = Tok::LParen; break;
            case ')': t = Tok::RParen; break;
            case '{': t = Tok::LBrace; break;
            case '}': t = Tok::RBrace; break;
            case ',': t = Tok::Comma; break;
            case '.': t = Tok::Dot; break;
            case '@': t = Tok::At; break;
            case '!': t = Tok::Bang; break;
            case '|': t = Tok::Pipe; break;
            case '+': t = Tok::Plus; break;
            case '*': t = Tok::Star; break;
            case '=': t = Tok::Eq; break;
            default:
                error(start, std::string("unexpected character '") + c + "'");
                advance();
                continue;
            }
            advance();
            out.push_back({t, std::string(1, c), 0, start});
        }
        out.push_back({Tok::End, "", 0, here(0)});
        return out;
    }
};

// ---------------------------------------------------------------------------
// Raw syntax tree (identifiers not yet classified, spans attached)
// ---------------------------------------------------------------------------

struct RExpr {
    enum class Kind { Int, Str, Sym, Name, Formal };
    Kind kind = Kind::Int;
    std::int64_t ival = 0;
    std::string text;  // Str/Sym payload, Name, Formal variable
    SourceSpan span;
};

struct RTerm;
using RTermPtr = std::unique_ptr<RTerm>;

struct RAction {
    Action::Kind kind = Action::Kind::Out;
    std::vector<RExpr> args;    // Out tuple / Exec args
    std::vector<RExpr> tmpl;    // In/Read fields (Formal or value/name)
    RExpr target;               // Out/In/Read/Eval/Login/Logout target, Bind site
    std::string loc;            // Bind/Newloc locality
    SourceSpan loc_span;
    std::string site_name;      // Newloc `as`
    RTermPtr proc;              // Eval payload / Newloc coordinator
    std::vector<std::string> accept_sites;
    bool accept_any = false;
    std::string exec_name;
    SourceSpan span;
};

struct RTerm {
    enum class Kind { Nil, Prefix, Par, Choice, Call };
    Kind kind = Kind::Nil;
    RAction act;
    RTermPtr cont, left, right;
    std::string callee;
    std::vector<RExpr> call_args;
    SourceSpan span;
};

struct RNode {
    std::string site;
    SourceSpan span;
    std::vector<std::pair<std::string, SourceSpan>> links;
    std::vector<std::tuple<std::string, std::string, SourceSpan>> env;
    RTermPtr procs;
    std::vector<std::pair<std::vector<RExpr>, SourceSpan>> ts;
    bool has_links = false, has_env = false, has_procs = false, has_ts = false;
};

struct RDef {
    std::string name;
    std::vector<std::string> params;
    std::vector<SourceSpan> param_spans;
    RTermPtr body;
    bool coord = false;
    SourceSpan span;
};

struct RAssert {
    Assertion assertion;  // template fields classified later
    std::vector<RExpr> raw_tmpl;
    std::vector<std::pair<std::string, SourceSpan>> sites;
    SourceSpan span;
};

inline const std::set<std::string>& reserved_words() {
    static const std::set<std::string> words = {
        "node", "def", "coord", "nil", "as", "assert", "external", "not", "self",
        "out", "in", "read", "eval", "bind", "newloc", "login", "accept", "logout", "exec",
        "links", "env", "procs", "ts", "reachable", "invariant", "blocked_forever", "terminal",
        "contains", "link", "action", "no_blocked", "no_deadlock", "terminated", "link_symmetry",
    };
    return words;
}

struct ParsePanic {};

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser {
    std::vector<Token> toks;
    std::size_t pos = 0;
    std::vector<ParseError>* errors;

    std::vector<RNode> nodes;
    std::vector<RDef> defs;
    std::vector<RAssert> asserts;
    std::vector<std::pair<std::string, SourceSpan>> externals;

    const Token& peek(int off = 0) const {
        std::size_t i = pos + off;
        return i < toks.size() ? toks[i] : toks.back();
    }
    const Token& advance() { return toks[pos < toks.size() - 1 ? pos++ : pos]; }

    bool at(Tok t) const { return peek().type == t; }
    bool at_word(const char* w) const { return peek().type == Tok::Ident && peek().text == w; }

    bool eat(Tok t) {
        if (at(t)) {
            advance();
            return true;
        }
        return false;
    }
    bool eat_word(const char* w) {
        if (at_word(w)) {
            advance();
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const SourceSpan& span, std::string msg) {
        errors->push_back({span, std::move(msg)});
        throw ParsePanic{};
    }

    void expect(Tok t, const char* what) {
        if (!eat(t)) fail(peek().span, std::string("expected ") + what + ", found '" + describe(peek()) + "'");
    }

    static std::string describe(const Token& t) {
        switch (t.type) {
        case Tok::End: return "end of input";
        case Tok::Str: return "\"" + t.text + "\"";
        case Tok::Sym: return "`" + t.text + "`";
        default: return t.text;
        }
    }

    std::string expect_ident(const char* what) {
        if (!at(Tok::Ident)) fail(peek().span, std::string("expected ") + what + ", found '" + describe(peek()) + "'");
        return advance().text;
    }

    std::string expect_name(const char* what) {
        const Token& t = peek();
        std::string text = expect_ident(what);
        if (reserved_words().count(text))
            fail(t.span, "'" + text + "' is a reserved word and cannot be used as " + what);
        return text;
    }

    void sync() {
        while (!at(Tok::End)) {
            if (at_word("node") || at_word("def") || at_word("coord") || at_word("assert") ||
                at_word("external"))
                return;
            advance();
        }
    }

    void run() {
        while (!at(Tok::End)) {
            try {
                if (at_word("node")) {
                    parse_node();
                } else if (at_word("def") || (at_word("coord"))) {
                    parse_def();
                } else if (at_word("assert")) {
                    parse_assert();
                } else if (at_word("external")) {
                    advance();
                    SourceSpan sp = peek().span;
                    externals.emplace_back(expect_name("a site name"), sp);
                } else {
                    fail(peek().span,
                         "expected a declaration (node, def, coord def, external or assert), found '" +
                             describe(peek()) + "'");
                }
            } catch (const ParsePanic&) {
                sync();
            }
        }
    }

    // ----- declarations -----

    void parse_node() {
        advance();  // node
        RNode n;
        n.span = peek().span;
        n.site = expect_name("a site name");
        for (;;) {
            if (at_word("links")) {
                if (n.has_links) fail(peek().span, "duplicate links section");
                n.has_links = true;
                advance();
                expect(Tok::LBrace, "'{'");
                if (!at(Tok::RBrace)) {
                    do {
                        SourceSpan sp = peek().span;
                        n.links.emplace_back(expect_name("a site name"), sp);
                    } while (eat(Tok::Comma));
                }
                expect(Tok::RBrace, "'}'");
            } else if (at_word("env")) {
                if (n.has_env) fail(peek().span, "duplicate env section");
                n.has_env = true;
                advance();
                expect(Tok::LBrace, "'{'");
                if (!at(Tok::RBrace)) {
                    do {
                        SourceSpan sp = peek().span;
                        std::string loc = expect_name("a locality name");
                        expect(Tok::Arrow, "'->'");
                        std::string site = expect_name("a site name");
                        n.env.emplace_back(loc, site, sp);
                    } while (eat(Tok::Comma));
                }
                expect(Tok::RBrace, "'}'");
            } else if (at_word("procs")) {
                if (n.has_procs) fail(peek().span, "duplicate procs section");
                n.has_procs = true;
                advance();
                expect(Tok::LBrace, "'{'");
                n.procs = parse_term();
                expect(Tok::RBrace, "'}'");
            } else if (at_word("ts")) {
                if (n.has_ts) fail(peek().span, "duplicate ts section");
                n.has_ts = true;
                advance();
                expect(Tok::LBrace, "'{'");
                if (!at(Tok::RBrace)) {
                    do {
                        SourceSpan sp = peek().span;
                        expect(Tok::LParen, "'('");
                        std::vector<RExpr> vals;
                        if (!at(Tok::RParen)) {
                            do {
                                // parse_tfield so a stray formal gets the
                                // dedicated not-storable diagnostic later.
                                vals.push_back(parse_tfield());
                            } while (eat(Tok::Comma));
                        }
                        expect(Tok::RParen, "')'");
                        n.ts.emplace_back(std::move(vals), sp);
                    } while (eat(Tok::Comma));
                }
                expect(Tok::RBrace, "'}'");
            } else {
                break;
            }
        }
        nodes.push_back(std::move(n));
    }

    void parse_def() {
        RDef d;
        d.span = peek().span;
        if (eat_word("coord")) {
            d.coord = true;
            if (!at_word("def")) fail(peek().span, "expected 'def' after 'coord'");
        }
        advance();  // def
        d.name = expect_name("a definition name");
        expect(Tok::LParen, "'('");
        if (!at(Tok::RParen)) {
            do {
                SourceSpan sp = peek().span;
                d.params.push_back(expect_name("a parameter name"));
                d.param_spans.push_back(sp);
            } while (eat(Tok::Comma));
        }
        expect(Tok::RParen, "')'");
        expect(Tok::Eq, "'='");
        d.body = parse_term();
        defs.push_back(std::move(d));
    }

    void parse_assert() {
        advance();  // assert
        RAssert a;
        a.span = peek().span;
        Assertion& as = a.assertion;
        if (eat_word("reachable")) {
            as.mode = AssertMode::Reachable;
        } else if (eat_word("invariant")) {
            as.mode = AssertMode::Invariant;
        } else if (eat_word("blocked_forever")) {
            as.mode = AssertMode::BlockedForever;
        } else if (eat_word("terminal")) {
            as.mode = AssertMode::Terminal;
        } else {
            fail(peek().span, "expected an assertion mode (reachable, invariant, blocked_forever, terminal)");
        }
        as.pred.negated = eat_word("not");
        Predicate& p = as.pred;
        if (eat_word("ts")) {
            p.kind = Predicate::Kind::TupleAt;
            expect(Tok::LParen, "'('");
            SourceSpan sp = peek().span;
            p.site = expect_name("a site name");
            a.sites.emplace_back(p.site, sp);
            expect(Tok::RParen, "')'");
            if (!eat_word("contains")) fail(peek().span, "expected 'contains'");
            expect(Tok::LParen, "'('");
            if (!at(Tok::RParen)) {
                do {
                    a.raw_tmpl.push_back(parse_tfield());
                } while (eat(Tok::Comma));
            }
            expect(Tok::RParen, "')'");
        } else if (eat_word("link")) {
            p.kind = Predicate::Kind::LinkBetween;
            expect(Tok::LParen, "'('");
            SourceSpan sp1 = peek().span;
            p.site = expect_name("a site name");
            a.sites.emplace_back(p.site, sp1);
            expect(Tok::Comma, "','");
            SourceSpan sp2 = peek().span;
            p.site2 = expect_name("a site name");
            a.sites.emplace_back(p.site2, sp2);
            expect(Tok::RParen, "')'");
        } else if (at_word("action") || at_word("no_blocked")) {
            p.kind = at_word("action") ? Predicate::Kind::ActionEnabled : Predicate::Kind::NoBlocked;
            advance();
            expect(Tok::LParen, "'('");
            SourceSpan spa = peek().span;
            p.action_name = expect_ident("an action kind");
            static const std::set<std::string> kinds = {"out", "in", "read", "eval", "bind",
                                                        "newloc", "login", "accept", "logout", "exec"};
            if (!kinds.count(p.action_name))
                fail(spa, "unknown action kind '" + p.action_name + "'");
            expect(Tok::Comma, "','");
            SourceSpan sp = peek().span;
            p.site = expect_name("a site name");
            a.sites.emplace_back(p.site, sp);
            expect(Tok::RParen, "')'");
        } else if (eat_word("no_deadlock")) {
            p.kind = Predicate::Kind::NoDeadlock;
        } else if (eat_word("terminated")) {
            p.kind = Predicate::Kind::Terminated;
        } else if (eat_word("link_symmetry")) {
            p.kind = Predicate::Kind::LinkSymmetry;
        } else {
            fail(peek().span, "expected a predicate (ts, link, action, no_blocked, no_deadlock, "
                              "terminated, link_symmetry)");
        }
        asserts.push_back(std::move(a));
    }

    // ----- terms -----

    RTermPtr parse_term() {
        RTermPtr left = parse_choice();
        while (at(Tok::Pipe)) {
            advance();
            RTermPtr right = parse_choice();
            auto n = std::make_unique<RTerm>();
            n->kind = RTerm::Kind::Par;
            n->span = left->span;
            n->left = std::move(left);
            n->right = std::move(right);
            left = std::move(n);
        }
        return left;
    }

    RTermPtr parse_choice() {
        RTermPtr left = parse_seq();
        while (at(Tok::Plus)) {
            advance();
            RTermPtr right = parse_seq();
            auto n = std::make_unique<RTerm>();
            n->kind = RTerm::Kind::Choice;
            n->span = left->span;
            n->left = std::move(left);
            n->right = std::move(right);
            left = std::move(n);
        }
        return left;
    }

    static bool is_action_word(const std::string& w) {
        return w == "out" || w == "in" || w == "read" || w == "eval" || w == "bind" ||
               w == "newloc" || w == "login" || w == "accept" || w == "logout" || w == "exec";
    }

    RTermPtr parse_seq() {
        SourceSpan sp = peek().span;
        if (eat_word("nil")) {
            auto n = std::make_unique<RTerm>();
            n->kind = RTerm::Kind::Nil;
            n->span = sp;
            return n;
        }
        if (eat(Tok::LParen)) {
            RTermPtr inner = parse_term();
            expect(Tok::RParen, "')'");
            return inner;
        }
        if (at(Tok::Ident) && is_action_word(peek().text)) {
            RAction act = parse_action();
            expect(Tok::Dot, "'.' after action");
            RTermPtr cont = parse_seq();
            auto n = std::make_unique<RTerm>();
            n->kind = RTerm::Kind::Prefix;
            n->span = sp;
            n->act = std::move(act);
            n->cont = std::move(cont);
            return n;
        }
        if (at(Tok::Ident)) {
            auto n = std::make_unique<RTerm>();
            n->kind = RTerm::Kind::Call;
            n->span = peek().span;
            n->callee = expect_name("a definition name");
            expect(Tok::LParen, "'(' after definition name");
            if (!at(Tok::RParen)) {
                do {
                    n->call_args.push_back(parse_expr("an argument"));
                } while (eat(Tok::Comma));
            }
            expect(Tok::RParen, "')'");
            return n;
        }
        fail(peek().span, "expected a process term, found '" + describe(peek()) + "'");
    }

    RAction parse_action() {
        RAction a;
        a.span = peek().span;
        std::string w = advance().text;
        if (w == "out") {
            a.kind = Action::Kind::Out;
            expect(Tok::LParen, "'('");
            if (!at(Tok::RParen)) {
                do {
                    a.args.push_back(parse_expr("a tuple value"));
                } while (eat(Tok::Comma));
            }
            expect(Tok::RParen, "')'");
            expect(Tok::At, "'@'");
            a.target = parse_expr("a target locality");
        } else if (w == "in" || w == "read") {
            a.kind = (w == "in") ? Action::Kind::In : Action::Kind::Read;
            expect(Tok::LParen, "'('");
            if (!at(Tok::RParen)) {
                do {
                    a.tmpl.push_back(parse_tfield());
                } while (eat(Tok::Comma));
            }
            expect(Tok::RParen, "')'");
            expect(Tok::At, "'@'");
            a.target = parse_expr("a target locality");
        } else if (w == "eval") {
            a.kind = Action::Kind::Eval;
            expect(Tok::LParen, "'('");
            a.proc = parse_term();
            expect(Tok::RParen, "')'");
            expect(Tok::At, "'@'");
            a.target = parse_expr("a target locality");
        } else if (w == "bind") {
            a.kind = Action::Kind::Bind;
            expect(Tok::LParen, "'('");
            a.loc_span = peek().span;
            a.loc = expect_ident("a locality name");
            if (a.loc == "self") fail(a.loc_span, "cannot rebind 'self'");
            if (reserved_words().count(a.loc))
                fail(a.loc_span, "'" + a.loc + "' is a reserved word and cannot be used as a locality");
            expect(Tok::Comma, "','");
            a.target = parse_expr("a site");
            expect(Tok::RParen, "')'");
        } else if (w == "newloc") {
            a.kind = Action::Kind::Newloc;
            expect(Tok::LParen, "'('");
            a.loc_span = peek().span;
            a.loc = expect_name("a locality name");
            if (eat_word("as")) a.site_name = expect_name("a site name");
            if (eat(Tok::Comma)) a.proc = parse_term();
            expect(Tok::RParen, "')'");
        } else if (w == "login") {
            a.kind = Action::Kind::Login;
            expect(Tok::LParen, "'('");
            a.target = parse_expr("a target locality");
            expect(Tok::RParen, "')'");
        } else if (w == "accept") {
            a.kind = Action::Kind::Accept;
            if (eat(Tok::Star)) {
                a.accept_any = true;
            } else {
                expect(Tok::LBrace, "'{' or '*'");
                SourceSpan setSpan = peek().span;
                if (!at(Tok::RBrace)) {
                    do {
                        a.accept_sites.push_back(expect_name("a site name"));
                    } while (eat(Tok::Comma));
                }
                expect(Tok::RBrace, "'}'");
                if (a.accept_sites.empty()) fail(setSpan, "accept set must not be empty");
            }
        } else if (w == "logout") {
            a.kind = Action::Kind::Logout;
            expect(Tok::LParen, "'('");
            a.target = parse_expr("a target locality");
            expect(Tok::RParen, "')'");
        } else if (w == "exec") {
            a.kind = Action::Kind::Exec;
            a.exec_name = expect_name("a computation name");
            if (eat(Tok::LParen)) {
                if (!at(Tok::RParen)) {
                    do {
                        a.args.push_back(parse_expr("an argument"));
                    } while (eat(Tok::Comma));
                }
                expect(Tok::RParen, "')'");
            }
        } else {
            fail(a.span, "unknown action '" + w + "'");
        }
        return a;
    }

    RExpr parse_tfield() {
        if (eat(Tok::Bang)) {
            RExpr e;
            e.kind = RExpr::Kind::Formal;
            e.span = peek().span;
            e.text = expect_name("a variable name");
            return e;
        }
        return parse_expr("a template value");
    }

    RExpr parse_expr(const char* what) {
        RExpr e;
        e.span = peek().span;
        const Token& t = peek();
        switch (t.type) {
        case Tok::Int:
            e.kind = RExpr::Kind::Int;
            e.ival = t.ival;
            advance();
            return e;
        case Tok::Str:
            e.kind = RExpr::Kind::Str;
            e.text = t.text;
            advance();
            return e;
        case Tok::Sym:
            e.kind = RExpr::Kind::Sym;
            e.text = t.text;
            advance();
            return e;
        case Tok::Ident: {
            const std::string& w = t.text;
            if (w != "self" && reserved_words().count(w))
                fail(t.span, "'" + w + "' is a reserved word and cannot be used here");
            e.kind = RExpr::Kind::Name;
            e.text = w;
            advance();
            return e;
        }
        default:
            fail(t.span, std::string("expected ") + what + ", found '" + describe(t) + "'");
        }
    }
};

}  // namespace parse_detail

// ---------------------------------------------------------------------------
// Classification and static checks
// ---------------------------------------------------------------------------

namespace parse_detail {

struct Analyzer {
    ParseResult& res;
    const std::vector<RNode>& nodes;
    const std::vector<RDef>& defs;
    const std::vector<RAssert>& asserts;
    const std::vector<std::pair<std::string, SourceSpan>>& externals;

    std::set<std::string> site_names;       // every name used in a site position
    std::set<std::string> node_names;
    std::map<std::string, const RDef*> def_table;

    void error(const SourceSpan& span, std::string msg) { res.errors.push_back({span, std::move(msg)}); }
    void warn(const SourceSpan& span, std::string msg) { res.warnings.push_back({span, std::move(msg)}); }

    // ----- site-position name collection -----

    void collect_sites_term(const RTerm* t) {
        if (!t) return;
        switch (t->kind) {
        case RTerm::Kind::Prefix: {
            const RAction& a = t->act;
            for (const auto& s : a.accept_sites) site_names.insert(s);
            if (a.kind == Action::Kind::Newloc && !a.site_name.empty()) site_names.insert(a.site_name);
            collect_sites_term(a.proc.get());
            collect_sites_term(t->cont.get());
            return;
        }
        case RTerm::Kind::Par:
        case RTerm::Kind::Choice:
            collect_sites_term(t->left.get());
            collect_sites_term(t->right.get());
            return;
        default:
            return;
        }
    }

    void collect_sites() {
        for (const auto& [name, span] : externals) {
            (void)span;
            site_names.insert(name);
        }
        for (const auto& n : nodes) {
            node_names.insert(n.site);
            site_names.insert(n.site);
            for (const auto& [l, sp] : n.links) {
                (void)sp;
                site_names.insert(l);
            }
            for (const auto& [loc, site, sp] : n.env) {
                (void)loc;
                (void)sp;
                site_names.insert(site);
            }
            for (const auto& [vals, sp] : n.ts) {
                (void)sp;
                for (const auto& v : vals) {
                    if (v.kind == RExpr::Kind::Name && v.text != "self") site_names.insert(v.text);
                }
            }
            collect_sites_term(n.procs.get());
        }
        for (const auto& d : defs) collect_sites_term(d.body.get());
    }

    // ----- classification -----

    Expr classify_name(const RExpr& e, const std::set<std::string>& vars) {
        if (vars.count(e.text)) return Expr::var(e.text);
        if (e.text == "self") return Expr::self();
        if (site_names.count(e.text)) return Expr::lit(Value::site(Site{e.text}));
        return Expr::loc(e.text);
    }

    Expr classify_expr(const RExpr& e, const std::set<std::string>& vars) {
        switch (e.kind) {
        case RExpr::Kind::Int: return Expr::lit(Value::integer(e.ival));
        case RExpr::Kind::Str: return Expr::lit(Value::str(e.text));
        case RExpr::Kind::Sym: return Expr::lit(Value::sym(e.text));
        case RExpr::Kind::Name: return classify_name(e, vars);
        case RExpr::Kind::Formal: break;
        }
        throw std::logic_error("formal outside template");
    }

    // Fields classify left to right: an actual may refer to formals bound
    // earlier in the same template.
    std::vector<TField> classify_template_ordered(const std::vector<RExpr>& raw,
                                                  std::set<std::string>& vars) {
        std::vector<TField> out;
        std::set<std::string> seen;
        for (const auto& f : raw) {
            if (f.kind == RExpr::Kind::Formal) {
                if (!seen.insert(f.text).second)
                    error(f.span, "duplicate formal '!" + f.text + "' in one template");
                out.push_back(TField::mk_formal(f.text));
                vars.insert(f.text);
            } else {
                out.push_back(TField::mk_actual(classify_expr(f, vars)));
            }
        }
        return out;
    }

    TermPtr classify_term(const RTerm* t, std::set<std::string> vars, bool coordCtx) {
        if (!t) return mk_nil();
        switch (t->kind) {
        case RTerm::Kind::Nil:
            return mk_nil();
        case RTerm::Kind::Par:
            return mk_par(classify_term(t->left.get(), vars, coordCtx),
                          classify_term(t->right.get(), vars, coordCtx));
        case RTerm::Kind::Choice:
            return mk_choice(classify_term(t->left.get(), vars, coordCtx),
                             classify_term(t->right.get(), vars, coordCtx));
        case RTerm::Kind::Call: {
            auto it = def_table.find(t->callee);
            if (it == def_table.end()) {
                error(t->span, "call to undefined definition '" + t->callee + "'");
            } else if (it->second->params.size() != t->call_args.size()) {
                error(t->span, "'" + t->callee + "' expects " +
                                   std::to_string(it->second->params.size()) + " argument(s), got " +
                                   std::to_string(t->call_args.size()));
            }
            std::vector<Expr> args;
            for (const auto& e : t->call_args) args.push_back(classify_expr(e, vars));
            return mk_call(t->callee, std::move(args));
        }
        case RTerm::Kind::Prefix: {
            const RAction& ra = t->act;
            Action act;
            act.kind = ra.kind;
            act.loc = ra.loc;
            act.site_name = ra.site_name;
            act.accept_sites = ra.accept_sites;
            act.accept_any = ra.accept_any;
            act.exec_name = ra.exec_name;
            if (act.privileged() && !coordCtx)
                error(ra.span, std::string("privileged action '") + action_word(ra.kind) +
                                   "' outside a coordinator definition");
            std::set<std::string> contVars = vars;
            switch (ra.kind) {
            case Action::Kind::Out:
            case Action::Kind::Exec:
                for (const auto& e : ra.args) act.args.push_back(classify_expr(e, vars));
                if (ra.kind == Action::Kind::Out) act.target = classify_expr(ra.target, vars);
                break;
            case Action::Kind::In:
            case Action::Kind::Read:
                act.tmpl = classify_template_ordered(ra.tmpl, contVars);
                act.target = classify_expr(ra.target, vars);
                break;
            case Action::Kind::Eval:
                act.proc = classify_term(ra.proc.get(), vars, coordCtx);
                act.target = classify_expr(ra.target, vars);
                break;
            case Action::Kind::Bind:
                act.target = classify_expr(ra.target, vars);
                break;
            case Action::Kind::Newloc:
                if (ra.proc) act.proc = classify_term(ra.proc.get(), vars, coordCtx);
                break;
            case Action::Kind::Login:
            case Action::Kind::Logout:
                act.target = classify_expr(ra.target, vars);
                break;
            case Action::Kind::Accept:
                break;
            }
            return mk_prefix(std::move(act), classify_term(t->cont.get(), contVars, coordCtx));
        }
        }
        throw std::logic_error("unreachable");
    }

    static const char* action_word(Action::Kind k) {
        switch (k) {
        case Action::Kind::Out: return "out";
        case Action::Kind::In: return "in";
        case Action::Kind::Read: return "read";
        case Action::Kind::Eval: return "eval";
        case Action::Kind::Bind: return "bind";
        case Action::Kind::Newloc: return "newloc";
        case Action::Kind::Login: return "login";
        case Action::Kind::Accept: return "accept";
        case Action::Kind::Logout: return "logout";
        case Action::Kind::Exec: return "exec";
        }
        return "?";
    }

    // ----- guardedness -----

    void unguarded_calls(const RTerm* t, std::vector<std::pair<std::string, SourceSpan>>& out) {
        if (!t) return;
        switch (t->kind) {
        case RTerm::Kind::Call:
            out.emplace_back(t->callee, t->span);
            return;
        case RTerm::Kind::Par:
        case RTerm::Kind::Choice:
            unguarded_calls(t->left.get(), out);
            unguarded_calls(t->right.get(), out);
            return;
        default:
            return;  // Nil, Prefix: a prefix guards everything below it
        }
    }

    void check_guardedness() {
        std::map<std::string, std::vector<std::string>> graph;
        std::map<std::string, SourceSpan> spans;
        for (const auto& d : defs) {
            std::vector<std::pair<std::string, SourceSpan>> calls;
            unguarded_calls(d.body.get(), calls);
            for (auto& [callee, sp] : calls) {
                (void)sp;
                graph[d.name].push_back(callee);
            }
            spans[d.name] = d.span;
        }
        // DFS cycle detection over unguarded-call edges.
        std::set<std::string> done, onPath;
        std::set<std::string> reported;
        std::function<void(const std::string&)> visit = [&](const std::string& n) {
            if (done.count(n) || !graph.count(n)) {
                done.insert(n);
                return;
            }
            onPath.insert(n);
            for (const auto& m : graph[n]) {
                if (onPath.count(m)) {
                    if (reported.insert(n).second)
                        error(spans[n], "unguarded recursion through '" + n +
                                            "': every recursive call must appear under an action prefix");
                } else if (!done.count(m)) {
                    visit(m);
                }
            }
            onPath.erase(n);
            done.insert(n);
        };
        for (const auto& d : defs) visit(d.name);
    }

    // ----- lints -----

    void lint_term(const RTerm* t) {
        if (!t) return;
        switch (t->kind) {
        case RTerm::Kind::Prefix:
            if (t->act.kind == Action::Kind::Newloc && t->act.site_name.empty())
                warn(t->act.span, "newloc without 'as' creates engine-named sites; give the site an "
                                  "explicit name if the net is meant for exhaustive exploration");
            lint_term(t->act.proc.get());
            lint_term(t->cont.get());
            return;
        case RTerm::Kind::Par:
        case RTerm::Kind::Choice:
            lint_term(t->left.get());
            lint_term(t->right.get());
            return;
        default:
            return;
        }
    }

    // ----- whole-net analysis -----

    void run() {
        collect_sites();

        for (const auto& d : defs) {
            if (def_table.count(d.name)) {
                error(d.span, "duplicate definition '" + d.name + "'");
            } else {
                def_table[d.name] = &d;
            }
            std::set<std::string> seen;
            for (std::size_t i = 0; i < d.params.size(); ++i) {
                if (!seen.insert(d.params[i]).second)
                    error(d.param_spans[i], "duplicate parameter '" + d.params[i] + "'");
            }
        }

        check_guardedness();

        auto defsOut = std::make_shared<Defs>();
        for (const auto& d : defs) {
            Def out;
            out.name = d.name;
            out.params = d.params;
            out.coord = d.coord;
            std::set<std::string> vars(d.params.begin(), d.params.end());
            out.body = classify_term(d.body.get(), vars, d.coord);
            lint_term(d.body.get());
            defsOut->map[out.name] = std::move(out);
        }
        res.net.defs = defsOut;

        for (const auto& n : nodes) {
            if (res.net.nodes.count(n.site)) {
                error(n.span, "duplicate node '" + n.site + "'");
                continue;
            }
            Node node;
            node.site = Site{n.site};
            for (const auto& [l, sp] : n.links) {
                if (l == n.site) {
                    error(sp, "node '" + n.site + "' cannot link to itself");
                    continue;
                }
                node.links.insert(l);
            }
            for (const auto& [loc, site, sp] : n.env) {
                if (loc == "self") {
                    error(sp, "the locality 'self' is implicit and cannot be bound");
                    continue;
                }
                if (node.env.count(loc)) {
                    error(sp, "duplicate locality '" + loc + "' in env of '" + n.site + "'");
                    continue;
                }
                if (node_names.count(loc))
                    warn(sp, "locality '" + loc + "' shadows a site of the same name");
                node.env[loc] = site;
            }
            if (n.procs) {
                // A procs section is a state snapshot, not reusable process
                // code: it may legitimately hold the continuation of an
                // already-unfolded coordinator, so the coordinator-only
                // restriction on privileged actions applies to plain
                // definitions, never here.
                TermPtr p = classify_term(n.procs.get(), {}, true);
                lint_term(n.procs.get());
                soup_insert(node.soup, p);
            }
            for (const auto& [vals, sp] : n.ts) {
                Tuple t;
                bool bad = false;
                for (const auto& v : vals) {
                    switch (v.kind) {
                    case RExpr::Kind::Int: t.push_back(Value::integer(v.ival)); break;
                    case RExpr::Kind::Str: t.push_back(Value::str(v.text)); break;
                    case RExpr::Kind::Sym: t.push_back(Value::sym(v.text)); break;
                    case RExpr::Kind::Name:
                        if (v.text == "self") {
                            error(v.span, "'self' is not a value; tuples hold ground site names");
                            bad = true;
                        } else {
                            t.push_back(Value::site(Site{v.text}));
                        }
                        break;
                    case RExpr::Kind::Formal:
                        error(v.span, "templates cannot be stored in a tuple space");
                        bad = true;
                        break;
                    }
                }
                (void)sp;
                if (!bad) ts_insert(node.ts, std::move(t));
            }
            res.net.nodes.emplace(n.site, std::move(node));
        }

        // Declared links must reference declared nodes, symmetrically.
        for (const auto& n : nodes) {
            for (const auto& [l, sp] : n.links) {
                if (!node_names.count(l)) {
                    error(sp, "link target '" + l + "' is not a declared node");
                } else if (l != n.site) {
                    const Node* other = res.net.find(l);
                    if (other && !other->links.count(n.site))
                        error(sp, "asymmetric link: '" + n.site + "' lists '" + l + "' but not vice versa");
                }
            }
        }

        for (const auto& a : asserts) {
            Assertion as = a.assertion;
            bool bad = false;
            for (const auto& [site, sp] : a.sites) {
                if (!site_names.count(site)) {
                    error(sp, "assertion references unknown site '" + site + "'");
                    bad = true;
                }
            }
            if (as.pred.kind == Predicate::Kind::TupleAt) {
                std::set<std::string> vars;
                as.pred.tmpl = classify_template_ordered(a.raw_tmpl, vars);
                for (const auto& f : as.pred.tmpl) {
                    if (!f.formal && f.actual.kind == Expr::Kind::LocRef && !f.actual.is_self()) {
                        error(a.span, "assertion templates may hold ground values, formals and "
                                      "site names only (unknown name '" +
                                          f.actual.name + "')");
                        bad = true;
                    }
                }
            }
            if (!bad) res.assertions.push_back(std::move(as));
        }

        if (res.errors.empty()) check_state_invariants(res.net);
    }
};

}  // namespace parse_detail

// Parse a net description. All recoverable errors are collected; the
// returned net is meaningful only when ok().
inline ParseResult parse_net(std::string_view text, const std::string& filename = "") {
    ParseResult res;
    parse_detail::Lexer lex{text, filename, 0, 1, 1, &res.errors};
    std::vector<parse_detail::Token> toks = lex.run();
    parse_detail::Parser parser{std::move(toks), 0, &res.errors, {}, {}, {}, {}};
    parser.run();
    parse_detail::Analyzer analyzer{res, parser.nodes, parser.defs, parser.asserts, parser.externals,
                                    {}, {}, {}};
    analyzer.run();
    return res;
}

}  // namespace klaimnet
