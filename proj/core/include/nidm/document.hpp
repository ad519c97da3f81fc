#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "nidm/decimal.hpp"
#include "nidm/qualified_name.hpp"
#include "nidm/timestamp.hpp"

namespace nidm {

struct Text {
  std::string value;
  friend bool operator==(const Text&, const Text&) = default;
};

struct Uri {
  std::string value;
  friend bool operator==(const Uri&, const Uri&) = default;
};

enum class ValueKind { Text, Number, Term, Uri };

std::string_view to_string(ValueKind kind);
std::optional<ValueKind> value_kind_from_string(std::string_view name);

/// True for absolute URIs of the form `scheme://...`, `urn:...` or `mailto:...`
/// with no whitespace. This is the sniffing rule the codecs use to tell a URI
/// string from plain text.
bool looks_like_uri(std::string_view text);

class AttributeValue {
 public:
  using Storage = std::variant<Text, Decimal, QualifiedName, Uri>;

  AttributeValue() : v_(Text{}) {}
  AttributeValue(Text t) : v_(std::move(t)) {}
  AttributeValue(Decimal d) : v_(std::move(d)) {}
  AttributeValue(QualifiedName q) : v_(std::move(q)) {}
  AttributeValue(Uri u) : v_(std::move(u)) {}

  ValueKind kind() const noexcept { return static_cast<ValueKind>(v_.index()); }
  const Storage& storage() const noexcept { return v_; }

  const Text* text() const { return std::get_if<Text>(&v_); }
  const Decimal* number() const { return std::get_if<Decimal>(&v_); }
  const QualifiedName* term() const { return std::get_if<QualifiedName>(&v_); }
  const Uri* uri() const { return std::get_if<Uri>(&v_); }

  /// Text form independent of the kind: the string, the decimal literal,
  /// `prefix:local`, or the URI.
  std::string lexical() const;

  /// Numeric view: the Number itself, or a Text whose content is a decimal.
  std::optional<Decimal> as_decimal() const;

  friend bool operator==(const AttributeValue&, const AttributeValue&) = default;

 private:
  Storage v_;
};

struct Attribute {
  QualifiedName key;
  AttributeValue value;
  friend bool operator==(const Attribute&, const Attribute&) = default;
};

using Attributes = std::vector<Attribute>;

struct Entity {
  std::string id;
  Attributes attributes;
  friend bool operator==(const Entity&, const Entity&) = default;
};

struct Activity {
  std::string id;
  std::optional<Timestamp> start;
  std::optional<Timestamp> end;
  Attributes attributes;
  friend bool operator==(const Activity&, const Activity&) = default;
};

struct Agent {
  std::string id;
  Attributes attributes;
  friend bool operator==(const Agent&, const Agent&) = default;
};

enum class RelationKind {
  Used,
  WasGeneratedBy,
  WasDerivedFrom,
  WasInformedBy,
  WasAssociatedWith,
  ActedOnBehalfOf,
  WasAttributedTo,
  HadMember,
};

inline constexpr RelationKind kAllRelationKinds[] = {
    RelationKind::Used,              RelationKind::WasGeneratedBy,  RelationKind::WasDerivedFrom,
    RelationKind::WasInformedBy,     RelationKind::WasAssociatedWith, RelationKind::ActedOnBehalfOf,
    RelationKind::WasAttributedTo,   RelationKind::HadMember,
};

std::string_view to_string(RelationKind kind);
std::optional<RelationKind> relation_kind_from_string(std::string_view name);
/// Only used and wasGeneratedBy carry a time.
bool relation_has_time(RelationKind kind);

/// A binary PROV relation. `rel_id` is decorative: it is carried through the
/// codecs but never used for identity, and may repeat within a document.
struct Relation {
  RelationKind kind = RelationKind::Used;
  std::optional<std::string> rel_id;
  std::string subject;
  std::string object;
  std::optional<std::string> plan;  // wasAssociatedWith only
  std::optional<Timestamp> time;    // used / wasGeneratedBy only
  Attributes attributes;
  friend bool operator==(const Relation&, const Relation&) = default;
};

using Record = std::variant<Entity, Activity, Agent, Relation>;

enum class Category { Entity, Activity, Agent, Relation };

std::string_view to_string(Category c);
std::optional<Category> category_from_string(std::string_view name);

Category category_of(const Record& r);
/// Empty for relations.
const std::string& record_id(const Record& r);
const Attributes& record_attributes(const Record& r);
Attributes& record_attributes(Record& r);

inline const QualifiedName& prov_type_key() {
  static const QualifiedName k("prov", "type");
  return k;
}

/// (prov:type, prov:Collection) present.
bool is_collection(const Entity& e);
/// Every Term value stored under prov:type, in order.
std::vector<QualifiedName> prov_types(const Attributes& attrs);

using NamespaceMap = std::map<std::string, std::string>;

/// A namespace context plus an ordered list of records. Immutable once built;
/// construction enforces id uniqueness across entities, activities and agents
/// and nothing else (see validate()).
class Document {
 public:
  Document() = default;

  /// Throws DuplicateId.
  Document(NamespaceMap namespaces, std::vector<Record> records);

  const NamespaceMap& namespaces() const noexcept { return namespaces_; }
  const std::vector<Record>& records() const noexcept { return records_; }
  bool empty() const noexcept { return records_.empty(); }

  /// Index of the entity/activity/agent with this id.
  std::optional<std::size_t> find(std::string_view id) const;
  const Record* lookup(std::string_view id) const;

  std::size_t count(Category c) const;
  std::size_t count(RelationKind k) const;

  friend bool operator==(const Document& a, const Document& b) {
    return a.namespaces_ == b.namespaces_ && a.records_ == b.records_;
  }

 private:
  NamespaceMap namespaces_;
  std::vector<Record> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Builds a document preserving record order without validating it.
/// Throws DuplicateId naming the first repeated id.
Document build_document(NamespaceMap namespaces, std::vector<Record> records);

}  // namespace nidm
