#include "tdsim/mapping.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace tdsim {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool valid_port(std::string_view port) {
    if (port.empty() || port.size() > 5) return false;
    if (!std::all_of(port.begin(), port.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
        return false;
    }
    return std::stoi(std::string(port)) <= 65535;
}

std::string canonical_ip(const std::string& text) {
    unsigned char buf[16];
    char out[INET6_ADDRSTRLEN];
    if (inet_pton(AF_INET, text.c_str(), buf) == 1) {
        inet_ntop(AF_INET, buf, out, sizeof out);
        return out;
    }
    if (inet_pton(AF_INET6, text.c_str(), buf) == 1) {
        inet_ntop(AF_INET6, buf, out, sizeof out);
        return out;
    }
    return {};
}

bool is_onion(std::string_view host) {
    constexpr std::string_view suffix = ".onion";
    if (host.size() <= suffix.size() || host.substr(host.size() - suffix.size()) != suffix) return false;
    const auto label = host.substr(0, host.size() - suffix.size());
    return std::all_of(label.begin(), label.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) != 0;
    });
}

}  // namespace

std::string normalize_host(std::string_view endpoint) {
    endpoint = trim(endpoint);
    if (endpoint.empty()) return {};

    if (endpoint.front() == '[') {
        const auto close = endpoint.find(']');
        if (close == std::string_view::npos) return {};
        const auto rest = endpoint.substr(close + 1);
        if (!rest.empty() && (rest.front() != ':' || !valid_port(rest.substr(1)))) return {};
        return canonical_ip(std::string(endpoint.substr(1, close - 1)));
    }

    const auto colons = std::count(endpoint.begin(), endpoint.end(), ':');
    if (colons > 1) return canonical_ip(std::string(endpoint));  // bare IPv6, no port

    std::string_view host = endpoint;
    if (colons == 1) {
        const auto pos = endpoint.find(':');
        if (!valid_port(endpoint.substr(pos + 1))) return {};
        host = endpoint.substr(0, pos);
    }
    if (is_onion(host)) return std::string(host);
    return canonical_ip(std::string(host));
}

NodeList parse_node_list(std::istream& in) {
    NodeList list;
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto comma = line.find(',');
        if (comma == std::string_view::npos) {
            list.issues.push_back({line_no, "expected 'id,endpoint'"});
            continue;
        }
        const auto id = trim(line.substr(0, comma));
        const auto endpoint = trim(line.substr(comma + 1));
        if (id.empty()) {
            list.issues.push_back({line_no, "empty node id"});
            continue;
        }
        std::string host = normalize_host(endpoint);
        if (host.empty()) {
            list.issues.push_back({line_no, "malformed endpoint '" + std::string(endpoint) + "'"});
            continue;
        }
        list.records.push_back({std::string(id), std::string(endpoint), std::move(host)});
    }
    return list;
}

MatchReport correlate_by_ip(const std::vector<NodeRecord>& bitcoin, const std::vector<NodeRecord>& lightning) {
    MatchReport report;
    report.bitcoin_total = bitcoin.size();
    report.lightning_total = lightning.size();

    std::map<std::string, std::vector<const NodeRecord*>> by_host;
    for (const auto& r : bitcoin) by_host[r.host].push_back(&r);

    std::set<std::string> shared;
    for (const auto& ln : lightning) {
        auto it = by_host.find(ln.host);
        if (it == by_host.end()) continue;
        shared.insert(ln.host);
        for (const NodeRecord* btc : it->second) report.pairs.push_back({btc->id, ln.id, ln.host});
    }
    std::sort(report.pairs.begin(), report.pairs.end(), [](const MatchPair& a, const MatchPair& b) {
        return std::tie(a.endpoint, a.bitcoin_id, a.lightning_id) < std::tie(b.endpoint, b.bitcoin_id, b.lightning_id);
    });
    report.matches = shared.size();
    return report;
}

std::string match_report_csv(const MatchReport& report) {
    std::ostringstream out;
    out << "bitcoin_id,lightning_id,endpoint\n";
    for (const auto& p : report.pairs) out << p.bitcoin_id << ',' << p.lightning_id << ',' << p.endpoint << '\n';
    return out.str();
}

double first_spy_direct_probability(const SybilPool& pool) {
    pool.validate();
    return 1.0 - std::pow(1.0 - pool.attacker_share(), pool.outbound_count);
}

namespace {

bool origin_inferred(const SybilPool& pool, std::uint64_t seed) {
    RandomSource rng(seed);
    const auto total = static_cast<std::uint64_t>(pool.attacker_nodes + pool.honest_nodes);
    const auto sybils = static_cast<std::uint64_t>(pool.attacker_nodes);
    for (int peer = 0; peer < pool.outbound_count; ++peer) {
        if (rng.below(total) < sybils) return true;
    }
    return false;
}

void check_trials(const SybilPool& pool, long trials) {
    pool.validate();
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
}

}  // namespace

double simulate_origin_inference_serial(const SybilPool& pool, long trials, std::uint64_t seed) {
    check_trials(pool, trials);
    long hits = 0;
    for (long i = 0; i < trials; ++i) hits += origin_inferred(pool, mix_seed(seed, static_cast<std::uint64_t>(i)));
    return static_cast<double>(hits) / static_cast<double>(trials);
}

double simulate_origin_inference(const SybilPool& pool, long trials, std::uint64_t seed) {
    check_trials(pool, trials);
    long hits = 0;
#pragma omp parallel for reduction(+ : hits) schedule(static)
    for (long i = 0; i < trials; ++i) hits += origin_inferred(pool, mix_seed(seed, static_cast<std::uint64_t>(i)));
    return static_cast<double>(hits) / static_cast<double>(trials);
}

}  // namespace tdsim
