#include <expat.h>

#include <memory>
#include <set>
#include <sstream>

#include "nidm/codecs.hpp"
#include "nidm/error.hpp"
#include "nidm/validate.hpp"

namespace nidm {
namespace {

// Relation element children, in the order they are written.
struct RoleNames {
  std::string_view subject;
  std::string_view object;
};

RoleNames roles(RelationKind kind) {
  switch (kind) {
    case RelationKind::Used: return {"activity", "entity"};
    case RelationKind::WasGeneratedBy: return {"entity", "activity"};
    case RelationKind::WasDerivedFrom: return {"generatedEntity", "usedEntity"};
    case RelationKind::WasInformedBy: return {"informed", "informant"};
    case RelationKind::WasAssociatedWith: return {"activity", "agent"};
    case RelationKind::ActedOnBehalfOf: return {"delegate", "responsible"};
    case RelationKind::WasAttributedTo: return {"entity", "agent"};
    case RelationKind::HadMember: return {"collection", "entity"};
  }
  return {"subject", "object"};
}

constexpr std::string_view kImplicitAttr = "implicitPrefixes";

// ---------------------------------------------------------------------------
// Writer

std::string escape(std::string_view s, bool attribute) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '\r': out += "&#13;"; break;
      case '"':
        out += attribute ? "&quot;" : "\"";
        break;
      case '\n':
        out += attribute ? "&#10;" : "\n";
        break;
      case '\t':
        out += attribute ? "&#9;" : "\t";
        break;
      default: out += c;
    }
  }
  return out;
}

class XmlWriter {
 public:
  XmlWriter(const Document& doc, XmlMode mode) : doc_(doc), mode_(mode) {
    if (mode_ == XmlMode::SpmLegacy && doc.namespaces().contains("nidm") && !doc.namespaces().contains("ni")) {
      rename_nidm_ = true;
    }
  }

  std::string write() {
    out_ << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<prov:document";
    NamespaceMap decl;
    for (const auto& [p, uri] : doc_.namespaces()) decl[prefix(p)] = uri;
    std::vector<std::string> implicit;
    if (!decl.contains("prov")) {
      decl["prov"] = std::string(ns::kProv);
      implicit.push_back("prov");
    }
    if (!decl.contains("xsd")) decl["xsd"] = std::string(ns::kXsd);
    if (!decl.contains("xsi")) decl["xsi"] = std::string(ns::kXsi);
    for (const auto& [p, uri] : decl) out_ << " xmlns:" << p << "=\"" << escape(uri, true) << "\"";
    if (!implicit.empty()) out_ << " " << kImplicitAttr << "=\"prov\"";
    out_ << ">\n";
    for (const auto& rec : doc_.records()) std::visit([this](const auto& r) { record(r); }, rec);
    out_ << "</prov:document>\n";
    return out_.str();
  }

 private:
  std::string prefix(const std::string& p) const { return rename_nidm_ && p == "nidm" ? "ni" : p; }
  std::string name(const QualifiedName& q) const { return prefix(q.prefix()) + ":" + q.local(); }

  std::string time(const Timestamp& t) const { return mode_ == XmlMode::SpmLegacy ? t.spm() : t.iso(); }

  void attribute(const Attribute& a) {
    static const QualifiedName label("prov", "label");
    const std::string tag = name(a.key);
    out_ << "    <" << tag;
    std::string_view type;
    if (a.key == label && a.value.text()) {
      type = {};
    } else if (mode_ == XmlMode::SpmLegacy) {
      type = "xsd:string";
    } else {
      switch (a.value.kind()) {
        case ValueKind::Text: type = "xsd:string"; break;
        case ValueKind::Number: type = "xsd:decimal"; break;
        case ValueKind::Term: type = "xsd:QName"; break;
        case ValueKind::Uri: type = "xsd:anyURI"; break;
      }
    }
    if (!type.empty()) out_ << " xsi:type=\"" << type << "\"";
    std::string value = a.value.term() ? name(*a.value.term()) : a.value.lexical();
    out_ << ">" << escape(value, false) << "</" << tag << ">\n";
  }

  void open(std::string_view element, const std::optional<std::string>& id, bool empty) {
    out_ << "  <prov:" << element;
    if (id) out_ << " prov:id=\"" << escape(*id, true) << "\"";
    out_ << (empty ? "/>\n" : ">\n");
  }

  template <typename R>
  void simple(std::string_view element, const R& r) {
    open(element, r.id, r.attributes.empty());
    if (r.attributes.empty()) return;
    for (const auto& a : r.attributes) attribute(a);
    out_ << "  </prov:" << element << ">\n";
  }

  void record(const Entity& e) { simple("entity", e); }
  void record(const Agent& a) { simple("agent", a); }

  void record(const Activity& act) {
    bool empty = !act.start && !act.end && act.attributes.empty();
    open("activity", act.id, empty);
    if (empty) return;
    if (act.start) out_ << "    <prov:startTime>" << time(*act.start) << "</prov:startTime>\n";
    if (act.end) out_ << "    <prov:endTime>" << time(*act.end) << "</prov:endTime>\n";
    for (const auto& a : act.attributes) attribute(a);
    out_ << "  </prov:activity>\n";
  }

  void record(const Relation& rel) {
    const auto element = to_string(rel.kind);
    const auto names = roles(rel.kind);
    open(element, rel.rel_id, false);
    out_ << "    <prov:" << names.subject << " prov:ref=\"" << escape(rel.subject, true) << "\"/>\n";
    out_ << "    <prov:" << names.object << " prov:ref=\"" << escape(rel.object, true) << "\"/>\n";
    if (rel.plan) out_ << "    <prov:plan prov:ref=\"" << escape(*rel.plan, true) << "\"/>\n";
    if (rel.time) out_ << "    <prov:time>" << time(*rel.time) << "</prov:time>\n";
    for (const auto& a : rel.attributes) attribute(a);
    out_ << "  </prov:" << element << ">\n";
  }

  const Document& doc_;
  XmlMode mode_;
  bool rename_nidm_ = false;
  std::ostringstream out_;
};

// ---------------------------------------------------------------------------
// Reader: expat builds a small element tree, then the tree is interpreted.

struct Element {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attrs;
  std::vector<Element> children;
  std::string text;
  SourceSpan span;

  const std::string* attr(std::string_view key) const {
    for (const auto& [k, v] : attrs) {
      if (k == key) return &v;
    }
    return nullptr;
  }
};

class TreeBuilder {
 public:
  Element parse(std::string_view text) {
    std::unique_ptr<XML_ParserStruct, decltype(&XML_ParserFree)> parser(XML_ParserCreate("UTF-8"),
                                                                       &XML_ParserFree);
    if (!parser) throw std::bad_alloc();
    XML_SetUserData(parser.get(), this);
    XML_SetElementHandler(parser.get(), &TreeBuilder::on_start, &TreeBuilder::on_end);
    XML_SetCharacterDataHandler(parser.get(), &TreeBuilder::on_text);
    parser_ = parser.get();
    if (XML_Parse(parser.get(), text.data(), static_cast<int>(text.size()), XML_TRUE) == XML_STATUS_ERROR) {
      SourceSpan span{XML_GetCurrentLineNumber(parser.get()), XML_GetCurrentColumnNumber(parser.get()) + 1, 1};
      std::string path;
      for (const auto* e : stack_) path += "/" + e->name;
      throw ParseError(span, "well-formed XML", XML_ErrorString(XML_GetErrorCode(parser.get())), path);
    }
    if (!root_) throw ParseError({}, "root element", "empty input");
    return std::move(*root_);
  }

 private:
  static void on_start(void* self_ptr, const XML_Char* name, const XML_Char** atts) {
    auto* self = static_cast<TreeBuilder*>(self_ptr);
    Element e;
    e.name = name;
    e.span = {XML_GetCurrentLineNumber(self->parser_), XML_GetCurrentColumnNumber(self->parser_) + 1, 0};
    for (std::size_t i = 0; atts[i]; i += 2) e.attrs.emplace_back(atts[i], atts[i + 1]);
    if (self->stack_.empty()) {
      self->root_ = std::make_unique<Element>(std::move(e));
      self->stack_.push_back(self->root_.get());
    } else {
      auto& siblings = self->stack_.back()->children;
      siblings.push_back(std::move(e));
      self->stack_.push_back(&siblings.back());
    }
  }

  static void on_end(void* self_ptr, const XML_Char*) { static_cast<TreeBuilder*>(self_ptr)->stack_.pop_back(); }

  static void on_text(void* self_ptr, const XML_Char* s, int len) {
    auto* self = static_cast<TreeBuilder*>(self_ptr);
    if (!self->stack_.empty()) self->stack_.back()->text.append(s, static_cast<std::size_t>(len));
  }

  XML_Parser parser_ = nullptr;
  std::unique_ptr<Element> root_;
  std::vector<Element*> stack_;
};

class Interpreter {
 public:
  Document run(const Element& root) {
    path_ = "/" + root.name;
    std::set<std::string> implicit;
    if (auto* imp = root.attr(kImplicitAttr)) {
      std::istringstream words(*imp);
      for (std::string w; words >> w;) implicit.insert(w);
    }
    for (const auto& [k, v] : root.attrs) {
      if (!k.starts_with("xmlns:")) continue;
      auto p = k.substr(6);
      if (implicit.contains(p)) continue;
      if ((p == "xsd" && v == ns::kXsd) || (p == "xsi" && v == ns::kXsi)) continue;
      namespaces_[p] = v;
    }
    legacy_ = namespaces_.contains("ni") && !namespaces_.contains("nidm");

    std::vector<Record> records;
    std::size_t n = 0;
    for (const auto& child : root.children) {
      path_ = "/" + root.name + "/" + child.name + "[" + std::to_string(++n) + "]";
      records.push_back(record(child));
    }
    if (prov_used_ && !namespaces_.contains("prov") && !implicit.contains("prov")) {
      namespaces_["prov"] = std::string(ns::kProv);
    }
    try {
      return Document(std::move(namespaces_), std::move(records));
    } catch (const DuplicateId& e) {
      throw ParseError({}, "unique identifier", e.id(), "/" + root.name);
    }
  }

 private:
  [[noreturn]] void fail(const Element& e, std::string expected, std::string found) const {
    throw ParseError(e.span, std::move(expected), std::move(found), path_);
  }

  std::string required_id(const Element& e) const {
    const std::string* id = e.attr("prov:id");
    if (!id) fail(e, "prov:id attribute", "<" + e.name + ">");
    if (!valid_local_id(*id)) fail(e, "identifier", *id);
    return *id;
  }

  QualifiedName key(const Element& e) {
    auto q = QualifiedName::parse(e.name);
    if (!q) fail(e, "qualified element name", e.name);
    check_prefix(*q, e);
    return *q;
  }

  void check_prefix(const QualifiedName& q, const Element& e) {
    if (q.prefix() == "prov" && !namespaces_.contains("prov")) {
      prov_used_ = true;
      return;
    }
    if (!namespaces_.contains(q.prefix())) throw UndeclaredPrefix(q.prefix(), e.span);
  }

  Attribute attribute(const Element& e) {
    Attribute a{key(e), Text{}};
    const std::string* type = e.attr("xsi:type");
    const std::string& v = e.text;
    if (!type) {
      a.value = Text{v};
    } else if (*type == "xsd:string") {
      auto d = legacy_ ? Decimal::parse(v) : std::nullopt;
      a.value = d ? AttributeValue(*d) : AttributeValue(Text{v});
    } else if (*type == "xsd:decimal") {
      auto d = Decimal::parse(v);
      if (!d) fail(e, "decimal content", v);
      a.value = *d;
    } else if (*type == "xsd:QName") {
      auto q = QualifiedName::parse(v);
      if (!q) fail(e, "qualified name content", v);
      check_prefix(*q, e);
      a.value = *q;
    } else if (*type == "xsd:anyURI") {
      a.value = Uri{v};
    } else {
      fail(e, "xsi:type of xsd:string, xsd:decimal, xsd:QName or xsd:anyURI", *type);
    }
    return a;
  }

  Timestamp timestamp(const Element& e) const {
    auto t = Timestamp::parse(e.text);
    if (!t) fail(e, "timestamp", e.text);
    return *t;
  }

  static bool structural(const Element& e) { return e.attr("xsi:type") == nullptr; }

  Record record(const Element& e) {
    if (e.name == "prov:entity" || e.name == "prov:agent") {
      Attributes attrs;
      for (const auto& c : e.children) attrs.push_back(attribute(c));
      if (e.name == "prov:entity") return Entity{required_id(e), std::move(attrs)};
      return Agent{required_id(e), std::move(attrs)};
    }
    if (e.name == "prov:activity") {
      Activity act{required_id(e), std::nullopt, std::nullopt, {}};
      for (const auto& c : e.children) {
        if (c.name == "prov:startTime" && structural(c)) {
          act.start = timestamp(c);
        } else if (c.name == "prov:endTime" && structural(c)) {
          act.end = timestamp(c);
        } else {
          act.attributes.push_back(attribute(c));
        }
      }
      return act;
    }
    if (e.name.starts_with("prov:")) {
      if (auto kind = relation_kind_from_string(std::string_view(e.name).substr(5))) return relation(*kind, e);
    }
    throw UnknownElement(e.name, path_);
  }

  Relation relation(RelationKind kind, const Element& e) {
    Relation rel;
    rel.kind = kind;
    if (auto* id = e.attr("prov:id")) {
      if (!valid_local_id(*id)) fail(e, "identifier", *id);
      rel.rel_id = *id;
    }
    const auto names = roles(kind);
    bool have_subject = false, have_object = false;
    for (const auto& c : e.children) {
      const std::string* ref = c.attr("prov:ref");
      if (ref) {
        if (!valid_local_id(*ref)) fail(c, "identifier", *ref);
        std::string_view local = std::string_view(c.name).substr(c.name.starts_with("prov:") ? 5 : 0);
        if (!have_subject && local == names.subject) {
          rel.subject = *ref;
          have_subject = true;
        } else if (!have_object && local == names.object) {
          rel.object = *ref;
          have_object = true;
        } else if (kind == RelationKind::WasAssociatedWith && local == "plan" && !rel.plan) {
          rel.plan = *ref;
        } else {
          throw UnknownElement(c.name, path_ + "/" + c.name);
        }
      } else if (c.name == "prov:time" && structural(c)) {
        rel.time = timestamp(c);
      } else {
        rel.attributes.push_back(attribute(c));
      }
    }
    if (!have_subject) fail(e, "<prov:" + std::string(names.subject) + " prov:ref=...>", e.name);
    if (!have_object) fail(e, "<prov:" + std::string(names.object) + " prov:ref=...>", e.name);
    return rel;
  }

  NamespaceMap namespaces_;
  bool legacy_ = false;
  bool prov_used_ = false;
  std::string path_;
};

}  // namespace

std::string serialize_xml(const Document& doc, XmlMode mode, Check check) {
  if (check == Check::Strict) require_valid(doc, "serialize_xml");
  return XmlWriter(doc, mode).write();
}

Document parse_xml(std::string_view text) {
  Element root = TreeBuilder().parse(text);
  return Interpreter().run(root);
}

}  // namespace nidm
