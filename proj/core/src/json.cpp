#include <algorithm>

#include "json.hpp"

#include "nidm/codecs.hpp"
#include "nidm/error.hpp"

namespace nidm {
namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json attributes_json(const Attributes& attrs) {
  auto arr = ordered_json::array();
  for (const auto& a : attrs) {
    arr.push_back({{"key", a.key.str()}, {"valueKind", to_string(a.value.kind())}, {"value", a.value.lexical()}});
  }
  return arr;
}

class JsonReader {
 public:
  Document run(const nlohmann::json& root) {
    if (!root.is_object()) fail("", "object");
    NamespaceMap namespaces;
    const auto& nsj = member(root, "", "namespaces");
    if (!nsj.is_object()) fail("/namespaces", "object");
    for (const auto& [p, uri] : nsj.items()) {
      if (!QualifiedName::valid_prefix(p) || !uri.is_string()) fail("/namespaces/" + p, "prefix mapped to a URI string");
      namespaces[p] = uri.get<std::string>();
    }
    namespaces_ = &namespaces;

    std::vector<std::pair<std::optional<std::size_t>, Record>> items;
    for (std::string_view section : {"entities", "activities", "agents", "relations"}) {
      const std::string where = "/" + std::string(section);
      const auto& arr = member(root, "", section);
      if (!arr.is_array()) fail(where, "array");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string at = where + "/" + std::to_string(i);
        const auto& obj = arr[i];
        if (!obj.is_object()) fail(at, "object");
        std::optional<std::size_t> position;
        if (obj.contains("position")) {
          if (!obj["position"].is_number_unsigned()) fail(at + "/position", "non-negative integer");
          position = obj["position"].get<std::size_t>();
        }
        items.emplace_back(position, record(section, obj, at));
      }
    }
    const bool positioned = std::all_of(items.begin(), items.end(), [](const auto& p) { return p.first.has_value(); });
    if (positioned) {
      std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return *a.first < *b.first; });
    }
    std::vector<Record> records;
    records.reserve(items.size());
    for (auto& [_, r] : items) records.push_back(std::move(r));
    try {
      return Document(std::move(namespaces), std::move(records));
    } catch (const DuplicateId& e) {
      throw ParseError({}, "unique identifier", e.id(), "/");
    }
  }

 private:
  [[noreturn]] static void fail(const std::string& pointer, const std::string& expected, const std::string& found = {}) {
    throw ParseError({}, expected, found, pointer.empty() ? "/" : pointer);
  }

  static const nlohmann::json& member(const nlohmann::json& obj, const std::string& at, std::string_view key) {
    auto it = obj.find(std::string(key));
    if (it == obj.end()) fail(at + "/" + std::string(key), "member \"" + std::string(key) + "\"");
    return *it;
  }

  static std::string string_member(const nlohmann::json& obj, const std::string& at, std::string_view key) {
    const auto& v = member(obj, at, key);
    if (!v.is_string()) fail(at + "/" + std::string(key), "string");
    return v.get<std::string>();
  }

  static std::optional<std::string> optional_string(const nlohmann::json& obj, const std::string& at,
                                                    std::string_view key) {
    auto it = obj.find(std::string(key));
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) fail(at + "/" + std::string(key), "string");
    return it->get<std::string>();
  }

  static std::string id_member(const nlohmann::json& obj, const std::string& at, std::string_view key) {
    auto id = string_member(obj, at, key);
    if (!valid_local_id(id)) fail(at + "/" + std::string(key), "identifier", id);
    return id;
  }

  static std::optional<Timestamp> time_member(const nlohmann::json& obj, const std::string& at, std::string_view key) {
    auto s = optional_string(obj, at, key);
    if (!s) return std::nullopt;
    auto t = Timestamp::parse(*s);
    if (!t) fail(at + "/" + std::string(key), "timestamp", *s);
    return t;
  }

  QualifiedName qname(const std::string& text, const std::string& at) const {
    auto q = QualifiedName::parse(text);
    if (!q) fail(at, "qualified name", text);
    if (!namespaces_->contains(q->prefix())) throw UndeclaredPrefix(q->prefix());
    return *q;
  }

  Attributes attributes(const nlohmann::json& obj, const std::string& at) const {
    Attributes out;
    auto it = obj.find("attributes");
    if (it == obj.end()) return out;
    if (!it->is_array()) fail(at + "/attributes", "array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string where = at + "/attributes/" + std::to_string(i);
      const auto& a = (*it)[i];
      if (!a.is_object()) fail(where, "object");
      auto key = qname(string_member(a, where, "key"), where + "/key");
      auto kind_name = string_member(a, where, "valueKind");
      auto value = string_member(a, where, "value");
      auto kind = value_kind_from_string(kind_name);
      if (!kind) fail(where + "/valueKind", "text, number, term or uri", kind_name);
      switch (*kind) {
        case ValueKind::Text: out.push_back({key, Text{value}}); break;
        case ValueKind::Uri: out.push_back({key, Uri{value}}); break;
        case ValueKind::Term: out.push_back({key, qname(value, where + "/value")}); break;
        case ValueKind::Number: {
          auto d = Decimal::parse(value);
          if (!d) fail(where + "/value", "decimal", value);
          out.push_back({key, *d});
          break;
        }
      }
    }
    return out;
  }

  Record record(std::string_view section, const nlohmann::json& obj, const std::string& at) const {
    if (section == "entities") return Entity{id_member(obj, at, "id"), attributes(obj, at)};
    if (section == "agents") return Agent{id_member(obj, at, "id"), attributes(obj, at)};
    if (section == "activities") {
      return Activity{id_member(obj, at, "id"), time_member(obj, at, "startTime"), time_member(obj, at, "endTime"),
                      attributes(obj, at)};
    }
    Relation rel;
    auto kind_name = string_member(obj, at, "kind");
    auto kind = relation_kind_from_string(kind_name);
    if (!kind) fail(at + "/kind", "relation kind", kind_name);
    rel.kind = *kind;
    if (auto id = optional_string(obj, at, "id")) {
      if (!valid_local_id(*id)) fail(at + "/id", "identifier", *id);
      rel.rel_id = id;
    }
    rel.subject = id_member(obj, at, "subject");
    rel.object = id_member(obj, at, "object");
    if (obj.contains("plan") && !obj["plan"].is_null()) rel.plan = id_member(obj, at, "plan");
    rel.time = time_member(obj, at, "time");
    rel.attributes = attributes(obj, at);
    return rel;
  }

  const NamespaceMap* namespaces_ = nullptr;
};

SourceSpan span_at(std::string_view text, std::size_t byte) {
  SourceSpan span{1, 1, 1};
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++span.line;
      span.column = 1;
    } else {
      ++span.column;
    }
  }
  return span;
}

}  // namespace

std::string serialize_json(const Document& doc) {
  ordered_json root;
  root["namespaces"] = ordered_json::object();
  for (const auto& [p, uri] : doc.namespaces()) root["namespaces"][p] = uri;
  root["entities"] = ordered_json::array();
  root["activities"] = ordered_json::array();
  root["agents"] = ordered_json::array();
  root["relations"] = ordered_json::array();
  for (std::size_t i = 0; i < doc.records().size(); ++i) {
    std::visit(
        [&](const auto& r) {
          using T = std::decay_t<decltype(r)>;
          ordered_json j;
          if constexpr (std::is_same_v<T, Relation>) {
            j["kind"] = to_string(r.kind);
            if (r.rel_id) j["id"] = *r.rel_id;
            j["position"] = i;
            j["subject"] = r.subject;
            j["object"] = r.object;
            if (r.plan) j["plan"] = *r.plan;
            if (r.time) j["time"] = r.time->iso();
            j["attributes"] = attributes_json(r.attributes);
            root["relations"].push_back(std::move(j));
          } else {
            j["id"] = r.id;
            j["position"] = i;
            if constexpr (std::is_same_v<T, Activity>) {
              if (r.start) j["startTime"] = r.start->iso();
              if (r.end) j["endTime"] = r.end->iso();
            }
            j["attributes"] = attributes_json(r.attributes);
            if constexpr (std::is_same_v<T, Entity>) root["entities"].push_back(std::move(j));
            if constexpr (std::is_same_v<T, Activity>) root["activities"].push_back(std::move(j));
            if constexpr (std::is_same_v<T, Agent>) root["agents"].push_back(std::move(j));
          }
        },
        doc.records()[i]);
  }
  return root.dump();
}

Document parse_json(std::string_view text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(span_at(text, e.byte == 0 ? 0 : e.byte - 1), "well-formed JSON", e.what(), "/");
  }
  return JsonReader().run(root);
}

// ---------------------------------------------------------------------------

std::string_view to_string(Format f) {
  switch (f) {
    case Format::Provn: return "provn";
    case Format::Xml: return "xml";
    case Format::Json: return "json";
  }
  return "?";
}

std::optional<Format> format_from_string(std::string_view name) {
  if (name == "provn") return Format::Provn;
  if (name == "xml") return Format::Xml;
  if (name == "json") return Format::Json;
  return std::nullopt;
}

Format sniff_format(std::string_view text) {
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') continue;
    if (c == '<') return Format::Xml;
    if (c == '{') return Format::Json;
    break;
  }
  return Format::Provn;
}

Document parse_document(std::string_view text, Format format) {
  switch (format) {
    case Format::Provn: return parse_provn(text);
    case Format::Xml: return parse_xml(text);
    case Format::Json: return parse_json(text);
  }
  return {};
}

std::string serialize_document(const Document& doc, Format format, Check check) {
  switch (format) {
    case Format::Provn: return serialize_provn(doc, check);
    case Format::Xml: return serialize_xml(doc, XmlMode::Canonical, check);
    case Format::Json: return serialize_json(doc);
  }
  return {};
}

}  // namespace nidm
