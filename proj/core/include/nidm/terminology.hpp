#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nidm/document.hpp"

namespace nidm::terms {

enum class Datatype { String, Integer, Decimal, Datetime, Uri, Term };

std::string_view to_string(Datatype d);
std::optional<Datatype> datatype_from_string(std::string_view name);

struct TermDefinition {
  QualifiedName term;
  std::string label;
  std::string definition;
  Datatype datatype = Datatype::String;
  std::optional<std::string> source_url;
  friend bool operator==(const TermDefinition&, const TermDefinition&) = default;
};

/// Directed link from a source-specific term to a lexicon term.
struct TermMapping {
  QualifiedName source;
  QualifiedName canonical;
  friend bool operator==(const TermMapping&, const TermMapping&) = default;
};

/// Namespaces, term definitions and source-to-canonical mappings. Immutable
/// once built; every constructor path checks that prefixes resolve, each
/// source maps at most once, every mapping target is defined and the mapping
/// graph is acyclic.
class Registry {
 public:
  Registry() = default;

  /// Throws ParseError (duplicates, undeclared prefixes), UnknownCanonical or
  /// CycleDetected.
  static Registry build(NamespaceMap namespaces, std::vector<TermDefinition> definitions,
                        std::vector<TermMapping> mappings);

  const NamespaceMap& namespaces() const noexcept { return namespaces_; }
  const std::map<QualifiedName, TermDefinition>& definitions() const noexcept { return definitions_; }
  const std::map<QualifiedName, QualifiedName>& mappings() const noexcept { return mappings_; }
  bool empty() const noexcept { return namespaces_.empty() && definitions_.empty() && mappings_.empty(); }

  const TermDefinition* definition(const QualifiedName& term) const;

  /// Follows mappings to their fixpoint; unmapped terms come back unchanged.
  const QualifiedName& resolve(const QualifiedName& term) const;

  /// Layers `top` over this registry; on a conflicting source mapping or
  /// definition, `top` wins. The result is re-checked.
  Registry overlay(const Registry& top) const;

 private:
  NamespaceMap namespaces_;
  std::map<QualifiedName, TermDefinition> definitions_;
  std::map<QualifiedName, QualifiedName> mappings_;
  std::map<QualifiedName, QualifiedName> resolved_;
};

/// Line-oriented registry text:
///   ns <prefix> <uri>
///   term <qname> <datatype> "label" "definition" [url]
///   map <source-qname> <canonical-qname>
/// with `#` comments and blank lines.
Registry parse_registry(std::string_view text);

/// Throws LoadError when the file cannot be read, otherwise as parse_registry.
Registry load_registry(const std::filesystem::path& path);

inline const QualifiedName& resolve(const Registry& reg, const QualifiedName& term) { return reg.resolve(term); }

struct HarmonizeOptions {
  /// Also harmonize prov:role values (off by default).
  bool roles = false;
};

/// For every prov:type term t with resolve(t) != t, appends (prov:type,
/// resolve(t)) unless the record already carries it. Existing attributes are
/// never touched; namespaces needed by the added terms are declared.
Document harmonize(const Registry& reg, const Document& doc, HarmonizeOptions options = {});

/// Number of attributes harmonize() would add.
std::size_t harmonized_count(const Document& before, const Document& after);

}  // namespace nidm::terms
