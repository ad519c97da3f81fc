#include "nidm/document.hpp"

#include <algorithm>
#include <array>

#include "nidm/error.hpp"

namespace nidm {
namespace {

constexpr std::array<std::string_view, 8> kRelationNames = {
    "used",           "wasGeneratedBy",  "wasDerivedFrom",  "wasInformedBy",
    "wasAssociatedWith", "actedOnBehalfOf", "wasAttributedTo", "hadMember",
};

constexpr std::array<std::string_view, 4> kValueKindNames = {"text", "number", "term", "uri"};
constexpr std::array<std::string_view, 4> kCategoryNames = {"entity", "activity", "agent", "relation"};

const std::string kNoId;

}  // namespace

std::string_view to_string(ValueKind kind) { return kValueKindNames[static_cast<std::size_t>(kind)]; }

std::optional<ValueKind> value_kind_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kValueKindNames.size(); ++i) {
    if (kValueKindNames[i] == name) return static_cast<ValueKind>(i);
  }
  return std::nullopt;
}

bool looks_like_uri(std::string_view text) {
  if (text.empty()) return false;
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '"' || c == '\'' || c == '<' || c == '>') {
      return false;
    }
  }
  if (text.starts_with("urn:") && text.size() > 4) return true;
  if (text.starts_with("mailto:") && text.size() > 7) return true;
  auto sep = text.find("://");
  if (sep == std::string_view::npos || sep == 0 || sep + 3 == text.size()) return false;
  auto scheme = text.substr(0, sep);
  auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); };
  if (!alpha(scheme[0])) return false;
  return std::all_of(scheme.begin(), scheme.end(), [&](char c) {
    return alpha(c) || (c >= '0' && c <= '9') || c == '+' || c == '-' || c == '.';
  });
}

std::string AttributeValue::lexical() const {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Decimal>) {
          return v.text();
        } else if constexpr (std::is_same_v<T, QualifiedName>) {
          return v.str();
        } else {
          return v.value;
        }
      },
      v_);
}

std::optional<Decimal> AttributeValue::as_decimal() const {
  if (auto* n = number()) return *n;
  if (auto* t = text()) return Decimal::parse(t->value);
  return std::nullopt;
}

std::string_view to_string(RelationKind kind) { return kRelationNames[static_cast<std::size_t>(kind)]; }

std::optional<RelationKind> relation_kind_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kRelationNames.size(); ++i) {
    if (kRelationNames[i] == name) return static_cast<RelationKind>(i);
  }
  return std::nullopt;
}

bool relation_has_time(RelationKind kind) {
  return kind == RelationKind::Used || kind == RelationKind::WasGeneratedBy;
}

std::string_view to_string(Category c) { return kCategoryNames[static_cast<std::size_t>(c)]; }

std::optional<Category> category_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
    if (kCategoryNames[i] == name) return static_cast<Category>(i);
  }
  return std::nullopt;
}

Category category_of(const Record& r) { return static_cast<Category>(r.index()); }

const std::string& record_id(const Record& r) {
  return std::visit(
      [](const auto& rec) -> const std::string& {
        if constexpr (std::is_same_v<std::decay_t<decltype(rec)>, Relation>) {
          return kNoId;
        } else {
          return rec.id;
        }
      },
      r);
}

const Attributes& record_attributes(const Record& r) {
  return std::visit([](const auto& rec) -> const Attributes& { return rec.attributes; }, r);
}

Attributes& record_attributes(Record& r) {
  return std::visit([](auto& rec) -> Attributes& { return rec.attributes; }, r);
}

bool is_collection(const Entity& e) {
  static const QualifiedName collection("prov", "Collection");
  return std::any_of(e.attributes.begin(), e.attributes.end(), [](const Attribute& a) {
    return a.key == prov_type_key() && a.value.term() && *a.value.term() == collection;
  });
}

std::vector<QualifiedName> prov_types(const Attributes& attrs) {
  std::vector<QualifiedName> out;
  for (const auto& a : attrs) {
    if (a.key == prov_type_key()) {
      if (auto* t = a.value.term()) out.push_back(*t);
    }
  }
  return out;
}

Document::Document(NamespaceMap namespaces, std::vector<Record> records)
    : namespaces_(std::move(namespaces)), records_(std::move(records)) {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& id = record_id(records_[i]);
    if (category_of(records_[i]) == Category::Relation) continue;
    if (!index_.emplace(id, i).second) throw DuplicateId(id);
  }
}

std::optional<std::size_t> Document::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const Record* Document::lookup(std::string_view id) const {
  auto i = find(id);
  return i ? &records_[*i] : nullptr;
}

std::size_t Document::count(Category c) const {
  return static_cast<std::size_t>(
      std::count_if(records_.begin(), records_.end(), [c](const Record& r) { return category_of(r) == c; }));
}

std::size_t Document::count(RelationKind k) const {
  return static_cast<std::size_t>(std::count_if(records_.begin(), records_.end(), [k](const Record& r) {
    auto* rel = std::get_if<Relation>(&r);
    return rel && rel->kind == k;
  }));
}

Document build_document(NamespaceMap namespaces, std::vector<Record> records) {
  return Document(std::move(namespaces), std::move(records));
}

}  // namespace nidm
