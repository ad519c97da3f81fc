#include "nidm/terminology.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "nidm/error.hpp"

namespace nidm::terms {
namespace {

constexpr std::string_view kDatatypes[] = {"string", "integer", "decimal", "datetime", "uri", "term"};

struct Word {
  std::string text;
  SourceSpan span;
  bool quoted = false;
};

std::vector<Word> split_line(std::string_view line, std::size_t line_no) {
  std::vector<Word> out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (line[i] == ' ' || line[i] == '\t' || line[i] == '\r') {
      ++i;
      continue;
    }
    if (line[i] == '#') break;
    Word w;
    w.span = {line_no, i + 1, 0};
    const std::size_t start = i;
    if (line[i] == '"') {
      w.quoted = true;
      ++i;
      bool closed = false;
      while (i < line.size()) {
        if (line[i] == '\\' && i + 1 < line.size()) {
          w.text += line[i + 1];
          i += 2;
          continue;
        }
        if (line[i] == '"') {
          closed = true;
          ++i;
          break;
        }
        w.text += line[i++];
      }
      if (!closed) throw ParseError(w.span, "closing '\"'", std::string(line.substr(start)));
    } else {
      while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') w.text += line[i++];
    }
    w.span.length = i - start;
    out.push_back(std::move(w));
  }
  return out;
}

QualifiedName qname(const Word& w) {
  auto q = QualifiedName::parse(w.text);
  if (!q || w.quoted) throw ParseError(w.span, "qualified name prefix:local", w.text);
  return *q;
}

void check_acyclic(const std::map<QualifiedName, QualifiedName>& mappings) {
  // Each source has one outgoing edge, so walking from every node finds any cycle.
  std::set<QualifiedName> done;
  for (const auto& [start, _] : mappings) {
    std::set<QualifiedName> seen;
    const QualifiedName* cur = &start;
    while (true) {
      if (done.contains(*cur)) break;
      if (!seen.insert(*cur).second) throw CycleDetected(cur->str());
      auto it = mappings.find(*cur);
      if (it == mappings.end()) break;
      cur = &it->second;
    }
    done.insert(seen.begin(), seen.end());
  }
}

}  // namespace

std::string_view to_string(Datatype d) { return kDatatypes[static_cast<std::size_t>(d)]; }

std::optional<Datatype> datatype_from_string(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kDatatypes); ++i) {
    if (kDatatypes[i] == name) return static_cast<Datatype>(i);
  }
  return std::nullopt;
}

Registry Registry::build(NamespaceMap namespaces, std::vector<TermDefinition> definitions,
                         std::vector<TermMapping> mappings) {
  Registry reg;
  reg.namespaces_ = std::move(namespaces);
  auto declared = [&reg](const QualifiedName& q) {
    if (!reg.namespaces_.contains(q.prefix())) throw UndeclaredPrefix(q.prefix());
  };
  for (auto& d : definitions) {
    declared(d.term);
    auto term = d.term;
    if (!reg.definitions_.emplace(term, std::move(d)).second) {
      throw ParseError({}, "unique term definition", term.str());
    }
  }
  for (auto& m : mappings) {
    declared(m.source);
    declared(m.canonical);
    if (!reg.definitions_.contains(m.canonical)) throw UnknownCanonical(m.canonical.str());
    if (!reg.mappings_.emplace(m.source, m.canonical).second) {
      throw ParseError({}, "at most one mapping per source term", m.source.str());
    }
  }
  check_acyclic(reg.mappings_);
  for (const auto& [source, _] : reg.mappings_) {
    const QualifiedName* cur = &source;
    for (auto it = reg.mappings_.find(*cur); it != reg.mappings_.end(); it = reg.mappings_.find(*cur)) {
      cur = &it->second;
    }
    reg.resolved_.emplace(source, *cur);
  }
  return reg;
}

const TermDefinition* Registry::definition(const QualifiedName& term) const {
  auto it = definitions_.find(term);
  return it == definitions_.end() ? nullptr : &it->second;
}

const QualifiedName& Registry::resolve(const QualifiedName& term) const {
  auto it = resolved_.find(term);
  return it == resolved_.end() ? term : it->second;
}

Registry Registry::overlay(const Registry& top) const {
  NamespaceMap ns = namespaces_;
  for (const auto& [p, uri] : top.namespaces_) ns[p] = uri;
  std::map<QualifiedName, TermDefinition> defs = definitions_;
  for (const auto& [t, d] : top.definitions_) defs[t] = d;
  std::map<QualifiedName, QualifiedName> maps = mappings_;
  for (const auto& [s, c] : top.mappings_) maps[s] = c;

  std::vector<TermDefinition> def_list;
  for (auto& [_, d] : defs) def_list.push_back(std::move(d));
  std::vector<TermMapping> map_list;
  for (auto& [s, c] : maps) map_list.push_back({s, c});
  return build(std::move(ns), std::move(def_list), std::move(map_list));
}

Registry parse_registry(std::string_view text) {
  NamespaceMap namespaces;
  std::vector<TermDefinition> definitions;
  std::vector<TermMapping> mappings;
  std::vector<SourceSpan> mapping_spans;
  std::vector<SourceSpan> term_spans;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    auto words = split_line(line, line_no);
    if (words.empty()) continue;
    const auto& kw = words[0];
    auto need = [&](std::size_t lo, std::size_t hi, std::string_view what) {
      if (words.size() < lo || words.size() > hi) {
        throw ParseError(kw.span, std::string(what), std::string(line));
      }
    };
    if (kw.text == "ns") {
      need(3, 3, "ns <prefix> <uri>");
      if (!QualifiedName::valid_prefix(words[1].text)) throw ParseError(words[1].span, "namespace prefix", words[1].text);
      auto uri = words[2].text;
      if (uri.size() >= 2 && uri.front() == '<' && uri.back() == '>') uri = uri.substr(1, uri.size() - 2);
      auto [it, fresh] = namespaces.emplace(words[1].text, uri);
      if (!fresh && it->second != uri) throw ParseError(words[1].span, "consistent namespace declaration", words[1].text);
    } else if (kw.text == "term") {
      need(5, 6, "term <qname> <datatype> \"label\" \"definition\" [url]");
      TermDefinition d;
      d.term = qname(words[1]);
      auto dt = datatype_from_string(words[2].text);
      if (!dt) throw ParseError(words[2].span, "string, integer, decimal, datetime, uri or term", words[2].text);
      d.datatype = *dt;
      if (!words[3].quoted) throw ParseError(words[3].span, "quoted label", words[3].text);
      if (!words[4].quoted) throw ParseError(words[4].span, "quoted definition", words[4].text);
      d.label = words[3].text;
      d.definition = words[4].text;
      if (words.size() == 6) d.source_url = words[5].text;
      if (!namespaces.contains(d.term.prefix())) throw UndeclaredPrefix(d.term.prefix(), words[1].span);
      definitions.push_back(std::move(d));
      term_spans.push_back(words[1].span);
    } else if (kw.text == "map") {
      need(3, 3, "map <source-qname> <canonical-qname>");
      TermMapping m{qname(words[1]), qname(words[2])};
      if (!namespaces.contains(m.source.prefix())) throw UndeclaredPrefix(m.source.prefix(), words[1].span);
      if (!namespaces.contains(m.canonical.prefix())) throw UndeclaredPrefix(m.canonical.prefix(), words[2].span);
      mappings.push_back(std::move(m));
      mapping_spans.push_back(words[1].span);
    } else {
      throw ParseError(kw.span, "ns, term or map", kw.text);
    }
  }

  // Duplicate checks here so the error carries the offending line.
  std::set<QualifiedName> seen;
  for (std::size_t i = 0; i < definitions.size(); ++i) {
    if (!seen.insert(definitions[i].term).second) {
      throw ParseError(term_spans[i], "unique term definition", definitions[i].term.str());
    }
  }
  seen.clear();
  for (std::size_t i = 0; i < mappings.size(); ++i) {
    if (!seen.insert(mappings[i].source).second) {
      throw ParseError(mapping_spans[i], "at most one mapping per source term", mappings[i].source.str());
    }
  }
  return Registry::build(std::move(namespaces), std::move(definitions), std::move(mappings));
}

Registry load_registry(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(path.string(), "cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_registry(buf.str());
}

Document harmonize(const Registry& reg, const Document& doc, HarmonizeOptions options) {
  static const QualifiedName role_key("prov", "role");
  NamespaceMap namespaces = doc.namespaces();
  std::vector<Record> records = doc.records();
  for (auto& rec : records) {
    auto& attrs = record_attributes(rec);
    const std::size_t original = attrs.size();
    for (std::size_t i = 0; i < original; ++i) {
      const bool eligible = attrs[i].key == prov_type_key() || (options.roles && attrs[i].key == role_key);
      const QualifiedName* term = attrs[i].value.term();
      if (!eligible || !term) continue;
      const QualifiedName& canonical = reg.resolve(*term);
      if (canonical == *term) continue;
      Attribute added{attrs[i].key, canonical};
      if (std::find(attrs.begin(), attrs.end(), added) != attrs.end()) continue;
      if (!namespaces.contains(canonical.prefix())) {
        auto it = reg.namespaces().find(canonical.prefix());
        if (it != reg.namespaces().end()) namespaces.emplace(it->first, it->second);
      }
      attrs.push_back(std::move(added));
    }
  }
  return Document(std::move(namespaces), std::move(records));
}

std::size_t harmonized_count(const Document& before, const Document& after) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < before.records().size() && i < after.records().size(); ++i) {
    n += record_attributes(after.records()[i]).size() - record_attributes(before.records()[i]).size();
  }
  return n;
}

}  // namespace nidm::terms
