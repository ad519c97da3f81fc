#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nidm/document.hpp"
#include "nidm/query.hpp"
#include "nidm/terminology.hpp"

namespace nidm::mediate {

struct EndpointDescriptor {
  std::string tag;
  std::string base_url;  // http://host:port
  std::chrono::milliseconds deadline{5000};
  std::optional<terms::Registry> overlay;
};

/// Federation file lines: `endpoint <tag> <url> [deadlineMs] [overlay-registry-path]`
/// with `#` comments. Overlay paths are relative to `base_dir`. Tags must be
/// unique and deadlines positive (ParseError otherwise).
std::vector<EndpointDescriptor> parse_federation(std::string_view text, const std::filesystem::path& base_dir = {});
std::vector<EndpointDescriptor> load_federation(const std::filesystem::path& path);

struct SourceStatus {
  bool ok = false;
  std::size_t rows = 0;
  std::string error;  // empty when ok
  std::chrono::milliseconds elapsed{0};
  /// Canonical terms whose datatype this endpoint's registry defines
  /// differently from another endpoint that returned rows typed with them.
  std::vector<std::string> conflicts;
};

struct FederatedRow {
  std::string endpoint;  // federation tag
  std::string source;    // source tag inside the endpoint's store
  std::string id;
  Record record;  // original ids, harmonized with the endpoint's registry
  friend bool operator==(const FederatedRow&, const FederatedRow&) = default;
};

struct FederatedResult {
  std::vector<FederatedRow> rows;  // ordered by (endpoint, source, id)
  std::map<std::string, SourceStatus> per_source;
  std::map<std::string, NamespaceMap> namespaces;  // per endpoint with rows
};

struct FederationOptions {
  /// Base registry; each endpoint's overlay is layered on top of it.
  terms::Registry registry;
  /// Throw NoEndpoints for an empty federation instead of returning nothing.
  bool strict = false;
  /// Upper bound on the type-filter expansions sent to one endpoint.
  std::size_t max_expansions = 16;
};

/// Sends `q` to every endpoint concurrently, each bounded by its deadline.
/// With an overlay, top-level type filters are also sent in their source-term
/// spellings, returned records are harmonized with the layered registry and
/// re-checked against the canonical filters. Failed or late endpoints are
/// reported in per_source and contribute no rows.
FederatedResult federated_query(const std::vector<EndpointDescriptor>& endpoints, const query::Query& q,
                                const FederationOptions& options = {});

/// `endpoint.id`, or `endpoint.source.id` when the endpoint's store tags the
/// row with a different source name.
std::string merged_id(const FederatedRow& row);

/// The federated rows as one fragment document under merged ids.
Document merged_document(const FederatedResult& result);

struct ProbeReport {
  bool reachable = false;
  bool deadline_exceeded = false;
  std::string error;
  std::vector<std::string> formats;
  std::map<std::string, std::size_t> counts;  // entities, activities, agents, relations
  std::chrono::milliseconds elapsed{0};
};

/// Fetches /v1/info. Never throws.
ProbeReport probe(const EndpointDescriptor& endpoint);

}  // namespace nidm::mediate
