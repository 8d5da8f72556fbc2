#pragma once

// Node mapping: matching Bitcoin and Lightning node dumps by IP address,
// and first-spy origin inference against light clients.

#include <istream>
#include <string>
#include <vector>

#include "tdsim/eclipse.hpp"

namespace tdsim {

struct NodeRecord {
    std::string id;
    /// Endpoint as written in the input: IPv4, IPv6 (bracketed when a port
    /// follows) or an onion address, each with an optional port.
    std::string endpoint;
    /// Normalized host used for matching: canonical IP text, or the onion
    /// address verbatim.
    std::string host;
};

struct ParseIssue {
    int line = 0;
    std::string message;
};

struct NodeList {
    std::vector<NodeRecord> records;
    std::vector<ParseIssue> issues;
};

/// Extracts the matchable host from an endpoint. Returns an empty string if
/// the endpoint is not a valid IP or onion address.
std::string normalize_host(std::string_view endpoint);

/// Reads `id,endpoint` lines; blank lines and `#` comments are skipped and
/// malformed lines are reported with their line number.
NodeList parse_node_list(std::istream& in);

struct MatchPair {
    std::string bitcoin_id;
    std::string lightning_id;
    std::string endpoint;
};

struct MatchReport {
    std::vector<MatchPair> pairs;
    std::size_t bitcoin_total = 0;
    std::size_t lightning_total = 0;
    /// Distinct hosts present in both lists.
    std::size_t matches = 0;
};

/// Pairs every Bitcoin and Lightning record sharing a host (ports ignored),
/// ordered by host, then Bitcoin id, then Lightning id.
MatchReport correlate_by_ip(const std::vector<NodeRecord>& bitcoin, const std::vector<NodeRecord>& lightning);

/// CSV with header bitcoin_id,lightning_id,endpoint.
std::string match_report_csv(const MatchReport& report);

/// 1 - (N_h / (N_h + N_a))^C: the light client opened at least one
/// connection to a sybil.
double first_spy_direct_probability(const SybilPool& pool);

/// Monte-Carlo estimate of first_spy_direct_probability: each trial draws C
/// peers uniformly (with replacement) and succeeds if any is a sybil.
/// Trial i uses its own generator seeded with mix_seed(seed, i).
double simulate_origin_inference_serial(const SybilPool& pool, long trials, std::uint64_t seed);

/// Same estimate with trials split across OpenMP threads. Bit-identical to
/// the serial kernel for any thread count.
double simulate_origin_inference(const SybilPool& pool, long trials, std::uint64_t seed);

}  // namespace tdsim
