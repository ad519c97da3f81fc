#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nidm/document.hpp"

namespace nidm::query {

enum class Comparator { Eq, Ne, Lt, Le, Gt, Ge, Contains, Exists };

std::string_view to_string(Comparator c);
bool is_ordering(Comparator c);

/// `forward` reads a relation in active voice: used and hadMember go from
/// subject to object (activity -> input, collection -> member), while the
/// passive "was..." relations go from object to subject (wasGeneratedBy:
/// activity -> generated entity). `backward` is the reverse walk, so
/// wasGeneratedBy.backward leads from an entity to the activity that made it.
enum class Direction { Forward, Backward };

std::string_view to_string(Direction d);
/// True when walking `kind` in `dir` goes from the relation's subject to its object.
bool walks_subject_to_object(RelationKind kind, Direction dir);

struct AttrFilter {
  QualifiedName key;
  Comparator op = Comparator::Eq;
  AttributeValue value;
  friend bool operator==(const AttrFilter&, const AttrFilter&) = default;
};

/// Conjunction of type and attribute filters.
struct RecordFilter {
  std::vector<QualifiedName> types;
  std::vector<AttrFilter> attrs;
  friend bool operator==(const RecordFilter&, const RecordFilter&) = default;
};

struct PathStep {
  RelationKind kind = RelationKind::Used;
  Direction direction = Direction::Forward;
  friend bool operator==(const PathStep&, const PathStep&) = default;
};

struct PathConstraint {
  std::vector<PathStep> chain;
  std::optional<Category> target;  // nullopt: any record category
  RecordFilter filter;
  friend bool operator==(const PathConstraint&, const PathConstraint&) = default;
};

struct Query {
  Category select = Category::Entity;
  RecordFilter filter;
  std::vector<PathConstraint> paths;
  friend bool operator==(const Query&, const Query&) = default;
};

/// Parses the query text form, e.g.
///   select entity where type=neurolex:T1 and attr[prov:value]>6000
///     and path(wasGeneratedBy.backward -> activity[type=fs:FreeSurfer])
/// Throws BadQuery with a span into `text`.
Query parse_query(std::string_view text);

/// Text form accepted by parse_query; parse_query(format_query(q)) == q.
std::string format_query(const Query& q);

/// Structural checks independent of syntax: entity/activity/agent selection,
/// ordering comparators only against numbers, path length within `max_path`.
void check_query(const Query& q, std::size_t max_path = 8);

/// Whether one attribute filter holds for a record's attributes.
///  =, <, <=, >, >=, contains: some attribute with the key satisfies it.
///  !=: the key is present and no attribute with the key equals the value.
///  exists (written `attr[key]` with no comparator): the key is present.
/// Equality is numeric when both sides read as decimals, otherwise it compares
/// the lexical forms; ordering only considers numeric attribute values.
bool holds(const AttrFilter& f, const Attributes& attrs);

/// Value comparison used by `holds`.
bool values_equal(const AttributeValue& a, const AttributeValue& b);

}  // namespace nidm::query
