#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nidm/document.hpp"
#include "nidm/query.hpp"
#include "nidm/terminology.hpp"

namespace nidm {

struct IngestSummary {
  std::string source;
  std::size_t entities = 0;
  std::size_t activities = 0;
  std::size_t agents = 0;
  std::size_t relations = 0;
  std::size_t collections = 0;
  std::size_t harmonized = 0;  // prov:type attributes added by harmonization
  friend bool operator==(const IngestSummary&, const IngestSummary&) = default;
};

struct ResultRow {
  std::string source;
  std::string id;             // relation rows carry the relId, possibly empty
  std::size_t position = 0;   // index of the record in its source document
  Record record;
  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

/// Rows ordered by (source, id); relation listings by (source, position).
/// `total` counts every match, `rows` may be cut at the result cap.
struct ResultSet {
  std::vector<ResultRow> rows;
  std::size_t total = 0;
  bool truncated = false;
  std::map<std::string, NamespaceMap> namespaces;  // per source with rows
};

struct StoreLimits {
  std::size_t max_path_length = 8;
  std::size_t max_results = 10000;
};

/// One ingested, harmonized document with its indexes.
class SourceSnapshot {
 public:
  SourceSnapshot(std::string tag, Document harmonized, std::size_t harmonized_count);

  const std::string& tag() const noexcept { return tag_; }
  const Document& document() const noexcept { return doc_; }
  const IngestSummary& summary() const noexcept { return summary_; }

  /// Record positions carrying this prov:type term.
  const std::vector<std::size_t>* with_type(const QualifiedName& t) const;
  /// Ids one relation step away from `id`.
  const std::vector<std::string>& neighbours(const std::string& id, RelationKind kind, query::Direction dir) const;

 private:
  using Adjacency = std::unordered_map<std::string, std::vector<std::string>>;

  std::string tag_;
  Document doc_;
  IngestSummary summary_;
  std::map<QualifiedName, std::vector<std::size_t>> type_index_;
  std::array<Adjacency, std::size(kAllRelationKinds)> forward_;   // subject -> objects
  std::array<Adjacency, std::size(kAllRelationKinds)> backward_;  // object -> subjects
};

/// Immutable view of every source at one point in time.
struct StoreState {
  std::map<std::string, std::shared_ptr<const SourceSnapshot>> sources;
};

/// In-memory provenance store. Readers take a snapshot and never block on
/// writers; ingest and remove are serialized and replace a source atomically.
class Store {
 public:
  explicit Store(terms::Registry registry = {}, StoreLimits limits = {});

  const terms::Registry& registry() const noexcept { return registry_; }
  const StoreLimits& limits() const noexcept { return limits_; }

  /// Validates, harmonizes and stores `doc` under `tag`, replacing any
  /// previous document with that tag. Throws InvalidDocument.
  IngestSummary ingest(const std::string& tag, const Document& doc);
  bool remove(const std::string& tag);

  std::shared_ptr<const StoreState> snapshot() const;

  /// Throws BadQuery.
  ResultSet run_query(const query::Query& q) const;
  ResultSet run_query(std::string_view text) const;

  /// Relations whose attributes satisfy `filter` (prov:type and attr filters).
  ResultSet list_relations(const query::RecordFilter& filter = {}) const;

  /// Entity/activity/agent rows with this id, across sources or in one source.
  ResultSet lookup(std::string_view id, const std::optional<std::string>& source = {}) const;

  /// hadMember objects of a collection. Without `source` every source holding
  /// a collection with that id contributes. Throws UnknownId, NotACollection.
  ResultSet members(std::string_view collection_id, const std::optional<std::string>& source = {}) const;

 private:
  terms::Registry registry_;
  StoreLimits limits_;
  std::mutex write_mu_;
  mutable std::mutex state_mu_;
  std::shared_ptr<const StoreState> state_;
};

/// Evaluates a query against one source; shared by the store and its tests.
bool record_matches(const SourceSnapshot& src, std::size_t position, const query::Query& q,
                    const terms::Registry& reg);

}  // namespace nidm
