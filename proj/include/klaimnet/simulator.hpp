#pragma once

// Seeded random walks and exact trace replay. The generator is SplitMix64;
// each step picks uniformly (modulo reduction) among the enabled
// transitions, so a (net, seed) pair always yields the same run.

#include "core.hpp"
#include "engine.hpp"

namespace klaimnet {

struct SplitMix64 {
    std::uint64_t state = 0;

    explicit SplitMix64(std::uint64_t seed = 0) : state(seed) {}

    std::uint64_t next() {
        state += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
};

enum class StopReason { Terminated, Deadlocked, Cutoff };

inline const char* stop_name(StopReason r) {
    switch (r) {
    case StopReason::Terminated: return "terminated";
    case StopReason::Deadlocked: return "deadlocked";
    case StopReason::Cutoff: return "cutoff";
    }
    return "?";
}

struct SimResult {
    Trace trace;
    NetState final;
    StopReason stop = StopReason::Terminated;
};

// Random walk from s0: up to max_steps transitions, chosen by seed.
inline SimResult run_simulation(const NetState& s0, std::uint64_t seed, std::uint64_t max_steps,
                                const EngineConfig& cfg = {}) {
    SimResult res;
    res.trace.seed = seed;
    SplitMix64 rng(seed);
    NetState cur = s0;
    for (std::uint64_t i = 0; i < max_steps; ++i) {
        std::vector<Transition> en = enabled(cur, cfg);
        if (en.empty()) {
            res.stop = is_terminated(cur) ? StopReason::Terminated : StopReason::Deadlocked;
            res.trace.final_state = canonical_form(cur);
            res.final = std::move(cur);
            return res;
        }
        std::size_t pick = static_cast<std::size_t>(rng.next() % en.size());
        res.trace.steps.push_back(en[pick].label);
        cur = std::move(en[pick].next);
    }
    res.stop = StopReason::Cutoff;
    res.trace.final_state = canonical_form(cur);
    res.final = std::move(cur);
    return res;
}

// Replay a label sequence exactly. Throws StaleTransition (naming the
// 1-based step) if some label is not enabled where the trace claims.
inline NetState replay(const NetState& s0, const std::vector<Label>& steps,
                       const EngineConfig& cfg = {}) {
    NetState cur = s0;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        try {
            cur = step(cur, steps[i], cfg);
        } catch (const ModelError& e) {
            if (e.kind() == ErrKind::StaleTransition)
                throw ModelError(ErrKind::StaleTransition,
                                 "step " + std::to_string(i + 1) + ": " + steps[i].render());
            throw;
        }
    }
    return cur;
}

}  // namespace klaimnet
