#pragma once

// Service-oriented patterns over tuple spaces: publication flooding,
// discovery by registry hops, and request/reply with fresh reply nodes.
// Builders emit ordinary definitions in the surface syntax (and the parsed
// form), so generated and hand-written nets interoperate.

#include "core.hpp"
#include "parser.hpp"

namespace klaimnet {

enum class PublishMode { HopRouted, Direct };

// A registry entry: (description, id, route) stored at `node`. Routes are
// next hops toward the provider (hop-routed) or the provider itself
// (direct).
struct ServiceRecord {
    std::string node;
    std::string description;
    std::int64_t id = 0;
    std::string route;

    auto operator<=>(const ServiceRecord&) const = default;
};

struct GeneratedDefs {
    std::string text;  // surface syntax, one definition per line
    DefsPtr defs;      // the same definitions, parsed
};

namespace services_detail {

inline GeneratedDefs finish(std::string text) {
    ParseResult r = parse_net(text, "<generated>");
    if (!r.ok()) {
        std::string msg = "generated definitions failed to parse:";
        for (const auto& e : r.errors) msg += "\n  " + e.render();
        throw std::logic_error(msg);
    }
    return GeneratedDefs{std::move(text), r.net.defs};
}

inline std::string params_list(unsigned degree) {
    std::string out;
    for (unsigned i = 1; i <= degree; ++i) {
        if (i > 1) out += ", ";
        out += "n" + std::to_string(i);
    }
    return out;
}

}  // namespace services_detail

// Publication: the provider stores its own registry record and floods
// wrapped copies (`pub`, desc, id, route) to its neighbours. A forwarder
// arms a one-shot `pubnew` flag; the first copy it consumes is stored (with
// the received route in direct mode, the sending neighbour in hop-routed
// mode, i.e. the forwarder itself when it re-floods) and re-flooded, any
// later copy is recognised against the stored record and terminates the
// forwarder. Definitions are generated per node degree.
inline GeneratedDefs build_publish(const std::string& desc, std::int64_t id,
                                   PublishMode mode = PublishMode::HopRouted,
                                   std::vector<unsigned> degrees = {1, 2, 3}) {
    std::string d = Value::str(desc).render();
    std::string n = std::to_string(id);
    std::string text;
    for (unsigned k : degrees) {
        std::string ps = services_detail::params_list(k);
        std::string kk = std::to_string(k);

        text += "def provide" + kk + "(" + ps + ") = out(" + d + ", " + n + ", self) @ self";
        for (unsigned i = 1; i <= k; ++i)
            text += " . out(`pub`, " + d + ", " + n + ", self) @ n" + std::to_string(i);
        text += " . nil\n";

        const bool hop = mode == PublishMode::HopRouted;
        std::string fwd = hop ? "forward" + kk : "forwardDirect" + kk;
        std::string loop = hop ? "forwardLoop" + kk : "forwardDirectLoop" + kk;
        std::string route = hop ? "self" : "r";  // what gets re-flooded

        text += "def " + fwd + "(" + ps + ") = out(`pubnew`) @ self . " + loop + "(" + ps + ")\n";
        text += "def " + loop + "(" + ps + ") = in(`pub`, " + d + ", " + n + ", !r) @ self . " +
                "( in(`pubnew`) @ self . out(" + d + ", " + n + ", r) @ self";
        for (unsigned i = 1; i <= k; ++i)
            text += " . out(`pub`, " + d + ", " + n + ", " + route + ") @ n" + std::to_string(i);
        text += " . " + loop + "(" + ps + ")";
        if (hop) {
            text += " + read(" + d + ", " + n + ", !r2) @ self . nil )\n";
        } else {
            text += " + read(" + d + ", " + n + ", r) @ self . nil )\n";
        }
    }
    return services_detail::finish(std::move(text));
}

// Discovery: follow stored routes toward the provider; when the local
// registry names this very site, report it to the reply locality.
inline GeneratedDefs build_discover(const std::string& desc, std::int64_t id) {
    std::string d = Value::str(desc).render();
    std::string n = std::to_string(id);
    std::string text = "def discover(reply) = read(" + d + ", " + n +
                       ", self) @ self . out(self) @ reply . nil + read(" + d + ", " + n +
                       ", !route) @ self . eval(discover(reply)) @ route . nil\n";
    return services_detail::finish(std::move(text));
}

// Request/reply: the client spins up a fresh reply node, posts the request
// at the provider, waits for data on the reply node and evaluates it; the
// provider serves each request and stays available.
inline GeneratedDefs build_request(const std::string& serviceName) {
    std::string n = Value::str(serviceName).render();
    std::string text =
        "coord def requestClient(provider) = newloc(l_rep) . out(" + n +
        ", l_rep) @ provider . in(!data) @ l_rep . exec evalPulse(data) . out(`result`) @ self . nil\n"
        "def serveRequests() = in(!req, !replyTo) @ self . ( exec reqService . out(`pulseData`) @ "
        "replyTo . nil | serveRequests() )\n";
    return services_detail::finish(std::move(text));
}

// Registry records present in a state, across all nodes (sorted).
inline std::vector<ServiceRecord> list_services(const NetState& s) {
    std::vector<ServiceRecord> out;
    for (const auto& [name, node] : s.nodes) {
        for (const auto& t : node.ts) {
            if (t.size() == 3 && t[0].kind() == Value::Kind::Str &&
                t[1].kind() == Value::Kind::Int && t[2].kind() == Value::Kind::SiteV) {
                out.push_back({name, t[0].text(), t[1].as_int(), t[2].text()});
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Registry records of a single node.
inline std::vector<ServiceRecord> list_services(const NetState& s, const std::string& site) {
    if (!s.find(site)) throw ModelError(ErrKind::UnknownSite, "no node named '" + site + "'");
    std::vector<ServiceRecord> out;
    for (auto& r : list_services(s))
        if (r.node == site) out.push_back(std::move(r));
    return out;
}

}  // namespace klaimnet
