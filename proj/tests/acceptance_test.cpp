// Acceptance gate: one pass/fail line per criterion, exit code = number of
// failures. Bounds and tolerances are pinned as constants next to each
// criterion.

#include <klaimnet/klaimnet.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace klaimnet;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;
std::vector<std::string> g_notes;

void note(const std::string& s) { g_notes.push_back(s); }

void report(int number, const std::string& name, bool ok) {
    std::printf("%s  criterion %2d: %s\n", ok ? "PASS" : "FAIL", number, name.c_str());
    for (const auto& n : g_notes) std::printf("      - %s\n", n.c_str());
    g_notes.clear();
    if (!ok) ++g_failures;
}

std::string slurp_scenario(const std::string& name) {
    std::ifstream f(std::filesystem::path(SCENARIO_DIR) / name);
    if (!f.good()) {
        note("cannot open scenario " + name);
        return "";
    }
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

ParseResult parse_scenario(const std::string& name) {
    ParseResult r = parse_net(slurp_scenario(name), name);
    for (const auto& e : r.errors) note("parse error: " + e.render());
    return r;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

const AssertionResult* verdict_for(const ExploreResult& res, const std::string& rendered) {
    for (const auto& v : res.verdicts)
        if (v.assertion.render() == rendered) return &v;
    return nullptr;
}

bool all_pass(const ExploreResult& res) {
    for (const auto& v : res.verdicts)
        if (v.verdict != Verdict::Pass) return false;
    return true;
}

// --------------------------------------------------------------------------
// 1. The driver-assistance net parses to exactly the expected canonical form.
// --------------------------------------------------------------------------
bool criterion_parse_reference_net() {
    const double kMaxSeconds = 1.0;
    const std::string expected =
        "node s_ampl links { s_cu, s_ecg } env { l_cu -> s_cu, l_ecg -> s_ecg } procs { nil }\n"
        "node s_cu links { s_ampl, s_pm } env { l_ampl -> s_ampl, l_pm -> s_pm } procs { nil }\n"
        "node s_ecg links { s_ampl, s_pm } env { l_ampl -> s_ampl, l_pm -> s_pm } procs { nil }\n"
        "node s_pm links { s_cu, s_ecg } env { l_cu -> s_cu, l_ecg -> s_ecg } procs { nil }\n";

    auto t0 = Clock::now();
    ParseResult r = parse_scenario("driver_assist.klaim");
    const double dt = seconds_since(t0);
    if (!r.ok()) return false;
    if (dt >= kMaxSeconds) {
        note("parse took too long");
        return false;
    }
    if (canonical_form(r.net) != expected) {
        note("canonical form differs from the expected reference net");
        return false;
    }
    if (r.assertions.size() != 1) {
        note("expected exactly one assertion in the scenario");
        return false;
    }
    return true;
}

// --------------------------------------------------------------------------
// 2. Joining the net: both links become reachable; symmetry is invariant.
// --------------------------------------------------------------------------
bool criterion_join() {
    const std::uint64_t kMaxStates = 100000;
    const double kMaxSeconds = 10.0;

    ParseResult r = parse_scenario("join.klaim");
    if (!r.ok()) return false;
    auto t0 = Clock::now();
    Bounds b;
    b.max_states = kMaxStates;
    ExploreResult res = explore(r.net, {}, b, r.assertions);
    const double dt = seconds_since(t0);
    if (dt >= kMaxSeconds) {
        note("exploration took too long");
        return false;
    }
    if (res.truncated) {
        note("exploration truncated");
        return false;
    }
    bool ok = all_pass(res);
    const AssertionResult* cu = verdict_for(res, "reachable link(s_cu, s_pm)");
    const AssertionResult* ecg = verdict_for(res, "reachable link(s_ecg, s_pm)");
    ok = ok && cu && ecg && cu->witness && ecg->witness;
    if (ok) {
        note("states=" + std::to_string(res.states) +
             ", witnesses: " + std::to_string(cu->witness->steps.size()) + " and " +
             std::to_string(ecg->witness->steps.size()) + " steps");
    }
    return ok;
}

// --------------------------------------------------------------------------
// 3. Access control: the stranger's login is permanently blocked under the
//    default semantics and becomes possible with the open-accept extension.
// --------------------------------------------------------------------------
bool criterion_stranger() {
    ParseResult r = parse_scenario("stranger.klaim");
    if (!r.ok()) return false;
    ExploreResult closed = explore(r.net, {}, {}, r.assertions);
    const AssertionResult* blocked =
        verdict_for(closed, "blocked_forever action(login, s_stranger)");
    if (!blocked || blocked->verdict != Verdict::Pass || !all_pass(closed)) {
        note("closed-membership run must keep the stranger out");
        return false;
    }
    EngineConfig open;
    open.open_accept = true;
    ExploreResult opened = explore(r.net, open, {}, r.assertions);
    const AssertionResult* admitted =
        verdict_for(opened, "blocked_forever action(login, s_stranger)");
    if (!admitted || admitted->verdict != Verdict::Fail || !admitted->witness) {
        note("open-accept run must enable the stranger's login");
        return false;
    }
    note("login enabled after " + std::to_string(admitted->witness->steps.size()) + " step(s)");
    return true;
}

// --------------------------------------------------------------------------
// 4. Leaving the net: in every complete run both links are gone at the end.
// --------------------------------------------------------------------------
bool criterion_leave() {
    ParseResult r = parse_scenario("leave.klaim");
    if (!r.ok()) return false;
    ExploreResult res = explore(r.net, {}, {}, r.assertions);
    if (res.truncated) {
        note("exploration truncated");
        return false;
    }
    if (!verdict_for(res, "terminal not link(s_cu, s_pm)") ||
        !verdict_for(res, "terminal not link(s_ecg, s_pm)")) {
        note("scenario must carry the two terminal assertions");
        return false;
    }
    return all_pass(res);
}

// --------------------------------------------------------------------------
// 5. Publication flood: exhaustive, every terminal is quiescent (not
//    deadlocked) and each node ends with exactly one registry record.
// --------------------------------------------------------------------------
bool criterion_publish() {
    const std::uint64_t kMaxStates = 200000;
    const double kMaxSeconds = 60.0;
    const char* kNodes[] = {"s_ampl", "s_cu", "s_ecg", "s_pm"};

    ParseResult r = parse_scenario("publish.klaim");
    if (!r.ok()) return false;
    auto t0 = Clock::now();
    Bounds b;
    b.max_states = kMaxStates;
    ExploreResult res = explore(r.net, {}, b, r.assertions);
    const double dt = seconds_since(t0);
    if (dt >= kMaxSeconds) {
        note("exploration took too long");
        return false;
    }
    if (res.truncated || !all_pass(res)) {
        note("must explore exhaustively with all assertions passing");
        return false;
    }
    if (res.terminals.empty()) {
        note("no terminal states found");
        return false;
    }
    for (const auto& [canon, deadlocked] : res.terminals) {
        if (deadlocked) {
            note("a terminal state is deadlocked");
            return false;
        }
        ParseResult term = parse_net(canon, "terminal");
        if (!term.ok()) {
            note("a terminal state does not re-parse");
            return false;
        }
        for (const char* nodeName : kNodes) {
            const Node* n = term.net.find(nodeName);
            if (!n) {
                note(std::string("terminal state lost node ") + nodeName);
                return false;
            }
            int records = 0;
            for (const auto& t : n->ts) {
                if (t.size() == 3 && t[0] == Value::str("measure pulse") &&
                    t[1] == Value::integer(1) && t[2].kind() == Value::Kind::SiteV)
                    ++records;
            }
            if (records != 1) {
                note(std::string(nodeName) + " holds " + std::to_string(records) +
                     " registry records instead of 1");
                return false;
            }
        }
    }
    note("states=" + std::to_string(res.states) + ", terminals=" +
         std::to_string(res.terminals.size()) + ", all quiescent");
    return true;
}

// --------------------------------------------------------------------------
// 6. Discovery: the provider's address reaches the reply node via at least
//    one migration step.
// --------------------------------------------------------------------------
bool criterion_discover() {
    ParseResult r = parse_scenario("discover.klaim");
    if (!r.ok()) return false;
    ExploreResult res = explore(r.net, {}, {}, r.assertions);
    if (!all_pass(res)) {
        note("discover assertions must pass");
        return false;
    }
    const AssertionResult* reply = verdict_for(res, "reachable ts(s_reply) contains (s_pm)");
    if (!reply || !reply->witness) {
        note("missing witness for the reply tuple");
        return false;
    }
    int migrations = 0;
    for (const Label& l : reply->witness->steps)
        if (l.action.rfind("eval(", 0) == 0) ++migrations;
    if (migrations < 1) {
        note("witness contains no process migration");
        return false;
    }
    note("witness has " + std::to_string(reply->witness->steps.size()) + " steps, " +
         std::to_string(migrations) + " migrations");
    return true;
}

// --------------------------------------------------------------------------
// 7. Request/response: the result is reachable and the witness orders the
//    request, the service execution and the client-side evaluation causally.
// --------------------------------------------------------------------------
bool criterion_request() {
    ParseResult r = parse_scenario("request.klaim");
    if (!r.ok()) return false;
    ExploreResult res = explore(r.net, {}, {}, r.assertions);
    if (!all_pass(res)) {
        note("request assertions must pass");
        return false;
    }
    const AssertionResult* got = verdict_for(res, "reachable ts(s_cu) contains (`result`)");
    if (!got || !got->witness) {
        note("missing witness for the result tuple");
        return false;
    }
    std::ptrdiff_t iRequest = -1, iServe = -1, iEval = -1;
    const auto& steps = got->witness->steps;
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(steps.size()); ++i) {
        const std::string& a = steps[i].action;
        if (a.rfind("out(\"measurePulse\"", 0) == 0 && iRequest < 0) iRequest = i;
        if (a == "exec reqService" && iServe < 0) iServe = i;
        if (a.rfind("exec evalPulse", 0) == 0 && iEval < 0) iEval = i;
    }
    if (iRequest < 0 || iServe < 0 || iEval < 0) {
        note("witness misses one of request/serve/evaluate");
        return false;
    }
    if (!(iRequest < iServe && iServe < iEval)) {
        note("causal order violated in the witness");
        return false;
    }
    note("request(" + std::to_string(iRequest) + ") < serve(" + std::to_string(iServe) +
         ") < evaluate(" + std::to_string(iEval) + ")");
    return true;
}

// --------------------------------------------------------------------------
// 8. Hand-enumerated micro nets: exact state and transition counts.
// --------------------------------------------------------------------------
bool criterion_micro_counts() {
    struct Case {
        const char* name;
        const char* text;
        std::uint64_t states, transitions, terminated, deadlocked;
    };
    const Case cases[] = {
        {"message",
         "node s_a links { s_b } env { l_b -> s_b } procs { out(`m`) @ l_b . nil }\n"
         "node s_b links { s_a } procs { in(`m`) @ self . nil }\n",
         3, 2, 1, 0},
        {"choice", "node s_a procs { out(`a`) @ self . nil + out(`b`) @ self . nil }\n", 3, 2, 2,
         0},
        {"read", "node s_a procs { read(!x) @ self . nil } ts { (`t`) }\n", 2, 1, 1, 0},
        {"diamond", "node s_a procs { out(`a`) @ self . nil | out(`b`) @ self . nil }\n", 4, 4, 1,
         0},
        {"blocked", "node s_a procs { in(`never`) @ self . nil }\n", 1, 0, 0, 1},
    };
    bool ok = true;
    for (const auto& c : cases) {
        ParseResult r = parse_net(c.text, c.name);
        if (!r.ok()) {
            note(std::string(c.name) + ": does not parse");
            ok = false;
            continue;
        }
        ExploreResult res = explore(r.net);
        if (res.states != c.states || res.transitions != c.transitions ||
            res.terminated != c.terminated || res.deadlocked != c.deadlocked) {
            note(std::string(c.name) + ": got states=" + std::to_string(res.states) +
                 " transitions=" + std::to_string(res.transitions) +
                 " terminated=" + std::to_string(res.terminated) +
                 " deadlocked=" + std::to_string(res.deadlocked));
            ok = false;
        }
    }
    return ok;
}

// --------------------------------------------------------------------------
// 9. Determinism: equal seeds give byte-identical traces; exploration
//    results do not depend on the worker count.
// --------------------------------------------------------------------------
bool criterion_determinism() {
    const std::uint64_t kSeed = 42;
    const unsigned kWorkersA = 1, kWorkersB = 8;

    ParseResult pub = parse_scenario("publish.klaim");
    if (!pub.ok()) return false;
    SimResult s1 = run_simulation(pub.net, kSeed, 10000);
    SimResult s2 = run_simulation(pub.net, kSeed, 10000);
    if (trace_to_json(s1.trace).dump(2) != trace_to_json(s2.trace).dump(2)) {
        note("equal seeds produced different traces");
        return false;
    }
    if (s1.stop != StopReason::Terminated) {
        note("seeded publish run should terminate");
        return false;
    }

    ParseResult jl = parse_scenario("join_leave.klaim");
    if (!jl.ok()) return false;
    Bounds ba, bb;
    ba.workers = kWorkersA;
    bb.workers = kWorkersB;
    ExploreResult ra = explore(jl.net, {}, ba, jl.assertions);
    ExploreResult rb = explore(jl.net, {}, bb, jl.assertions);
    ExploreResult pa = explore(pub.net, {}, ba, pub.assertions);
    ExploreResult pb = explore(pub.net, {}, bb, pub.assertions);
    auto same = [&](const ExploreResult& x, const ExploreResult& y) {
        if (x.states != y.states || x.transitions != y.transitions || x.terminals != y.terminals ||
            x.truncated != y.truncated || x.verdicts.size() != y.verdicts.size())
            return false;
        for (std::size_t i = 0; i < x.verdicts.size(); ++i) {
            if (x.verdicts[i].verdict != y.verdicts[i].verdict) return false;
            const auto& wx = x.verdicts[i].witness;
            const auto& wy = y.verdicts[i].witness;
            if (wx.has_value() != wy.has_value()) return false;
            if (wx && trace_to_json(*wx) != trace_to_json(*wy)) return false;
        }
        return true;
    };
    if (!same(ra, rb) || !same(pa, pb)) {
        note("worker counts 1 and 8 disagree");
        return false;
    }
    note("seed-42 trace stable; workers 1 vs 8 identical on two scenarios");
    return true;
}

// --------------------------------------------------------------------------
// 10. Randomised semantic laws, 1000 cases each.
// --------------------------------------------------------------------------
bool criterion_property_suites() {
    const int kCases = 1000;
    bool ok = true;
    SplitMix64 rng(0xfeedface);

    // (a) Matching law: an all-formal template binds exactly the tuple, and
    //     substituting those bindings into an emission reproduces the tuple.
    {
        Node scratch;
        scratch.site = Site{"s_x"};
        auto rand_value = [&]() {
            switch (rng.next() % 4) {
            case 0: return Value::integer(static_cast<std::int64_t>(rng.next() % 9) - 4);
            case 1: return Value::str(std::string(1, static_cast<char>('a' + rng.next() % 4)));
            case 2: return Value::sym(std::string(1, static_cast<char>('s' + rng.next() % 3)));
            default:
                return Value::site(Site{"s_" + std::string(1, static_cast<char>('a' + rng.next() % 3))});
            }
        };
        for (int i = 0; i < kCases && ok; ++i) {
            const std::size_t len = rng.next() % 4;
            Tuple t;
            for (std::size_t k = 0; k < len; ++k) t.push_back(rand_value());
            std::vector<TField> tmpl;
            std::vector<Expr> emit;
            for (std::size_t k = 0; k < len; ++k) {
                tmpl.push_back(TField::mk_formal("v" + std::to_string(k)));
                emit.push_back(Expr::var("v" + std::to_string(k)));
            }
            auto m = match_template(tmpl, t, scratch);
            if (!m || m->size() != len) {
                note("matching law violated (case " + std::to_string(i) + ")");
                ok = false;
                break;
            }
            Action a;
            a.kind = Action::Kind::Out;
            a.args = emit;
            a.target = Expr::self();
            TermPtr term = substitute(mk_prefix(a, mk_nil()), *m);
            if (term->canon != "out" + render_tuple(t) + "@self . nil") {
                note("substitution law violated (case " + std::to_string(i) + ")");
                ok = false;
            }
        }
    }

    // (b) Structural congruence of the canonical form.
    {
        auto leaf = [&]() {
            Action a;
            a.kind = Action::Kind::Out;
            a.args = {Expr::lit(Value::integer(static_cast<std::int64_t>(rng.next() % 6)))};
            a.target = Expr::self();
            return mk_prefix(a, mk_nil());
        };
        for (int i = 0; i < kCases && ok; ++i) {
            TermPtr x = leaf(), y = leaf(), z = leaf();
            const bool comm = mk_par(x, y)->canon == mk_par(y, x)->canon &&
                              mk_choice(x, y)->canon == mk_choice(y, x)->canon;
            const bool assoc = mk_par(mk_par(x, y), z)->canon == mk_par(x, mk_par(y, z))->canon &&
                               mk_choice(mk_choice(x, y), z)->canon ==
                                   mk_choice(x, mk_choice(y, z))->canon;
            const bool unit = mk_par(x, mk_nil())->canon == x->canon;
            if (!comm || !assoc || !unit) {
                note("congruence law violated (case " + std::to_string(i) + ")");
                ok = false;
            }
        }
    }

    // (c) Render/parse fixed point on states sampled from random walks, and
    //     the frame property: an idle bystander never changes the enabled
    //     set.
    {
        const char* files[] = {"join.klaim", "publish.klaim", "request.klaim", "discover.klaim"};
        int sampled = 0;
        for (const char* f : files) {
            ParseResult r = parse_scenario(f);
            if (!r.ok()) return false;
            for (std::uint64_t seed = 1; seed <= 40 && ok; ++seed) {
                NetState s = r.net;
                for (int stepNo = 0; stepNo < 50 && ok; ++stepNo) {
                    const std::string canon = canonical_form(s);
                    ParseResult back = parse_net(canon, "canon");
                    if (!back.ok() || canonical_form(back.net) != canon) {
                        note(std::string(f) + ": canonical form not a fixed point");
                        ok = false;
                        break;
                    }
                    auto en = enabled(s);
                    ++sampled;
                    // Frame property on a sample of states.
                    if (stepNo % 7 == 0 && !s.nodes.count("s_idle")) {
                        NetState bigger = s;
                        Node idle;
                        idle.site = Site{"s_idle"};
                        ts_insert(idle.ts, Tuple{Value::integer(1)});
                        bigger.nodes["s_idle"] = std::move(idle);
                        auto en2 = enabled(bigger);
                        bool sameLabels = en.size() == en2.size();
                        for (std::size_t k = 0; sameLabels && k < en.size(); ++k)
                            sameLabels = en[k].label == en2[k].label;
                        if (!sameLabels) {
                            note(std::string(f) + ": frame property violated");
                            ok = false;
                            break;
                        }
                    }
                    if (en.empty()) break;
                    s = en[rng.next() % en.size()].next;
                }
            }
        }
        if (ok && sampled < kCases) {
            note("sampled only " + std::to_string(sampled) + " states");
            ok = false;
        }
        if (ok) note("sampled " + std::to_string(sampled) + " reachable states");
    }
    return ok;
}

// --------------------------------------------------------------------------
// 11. Fault injection: with faults the heartbeat invariant breaks (witness
//     contains the fault), without faults it holds exhaustively.
// --------------------------------------------------------------------------
bool criterion_link_failure() {
    ParseResult r = parse_scenario("link_failure.klaim");
    if (!r.ok()) return false;

    EngineConfig strict;
    strict.strict_connectivity = true;
    ExploreResult healthy = explore(r.net, strict, {}, r.assertions);
    if (healthy.truncated || !all_pass(healthy)) {
        note("fault-free strict run must pass exhaustively");
        return false;
    }

    EngineConfig faulty = strict;
    faulty.fault_injection = true;
    ExploreResult broken = explore(r.net, faulty, {}, r.assertions);
    const AssertionResult* inv = verdict_for(broken, "invariant no_blocked(out, s_pm)");
    if (!inv || inv->verdict != Verdict::Fail || !inv->witness) {
        note("fault injection must break the heartbeat invariant");
        return false;
    }
    bool sawFault = false;
    for (const Label& l : inv->witness->steps) sawFault = sawFault || l.action == "fault";
    if (!sawFault) {
        note("counterexample does not contain a fault");
        return false;
    }
    const AssertionResult* sym = verdict_for(broken, "invariant link_symmetry");
    if (!sym || sym->verdict != Verdict::Pass) {
        note("faults must preserve link symmetry");
        return false;
    }
    note("counterexample of " + std::to_string(inv->witness->steps.size()) +
         " step(s) includes the fault");
    return true;
}

}  // namespace

int main() {
    std::printf("acceptance: sensor-network calculus workbench\n");
    report(1, "reference net parses to its exact canonical form (<1s)",
           criterion_parse_reference_net());
    report(2, "join scenario: links reachable, symmetry invariant (<=1e5 states, <10s)",
           criterion_join());
    report(3, "stranger stays out by default, enters with open-accept", criterion_stranger());
    report(4, "leave scenario: links gone in every terminal state", criterion_leave());
    report(5, "publish flood: quiescent terminals, one registry record per node (<=2e5, <60s)",
           criterion_publish());
    report(6, "discover: provider address reaches the reply node via migration",
           criterion_discover());
    report(7, "request: result reachable, causally ordered witness", criterion_request());
    report(8, "micro nets: exact hand-enumerated state counts", criterion_micro_counts());
    report(9, "determinism: stable seeds, worker-count independence", criterion_determinism());
    report(10, "randomised semantic laws (1000 cases per suite)", criterion_property_suites());
    report(11, "fault injection breaks the heartbeat; fault-free run is exhaustive",
           criterion_link_failure());

    if (g_failures == 0)
        std::printf("all 11 criteria satisfied\n");
    else
        std::printf("%d criteria FAILED\n", g_failures);
    return g_failures;
}
