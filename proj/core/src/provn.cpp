#include <algorithm>
#include <sstream>

#include "nidm/codecs.hpp"
#include "nidm/error.hpp"
#include "nidm/validate.hpp"

namespace nidm {
namespace {

// ---------------------------------------------------------------------------
// Lexer

enum class Tok { LParen, RParen, LBracket, RBracket, Comma, Semicolon, Equals, TypeMark, Word, DString, SString, Iri, End };

std::string_view describe(Tok t) {
  switch (t) {
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::LBracket: return "'['";
    case Tok::RBracket: return "']'";
    case Tok::Comma: return "','";
    case Tok::Semicolon: return "';'";
    case Tok::Equals: return "'='";
    case Tok::TypeMark: return "'%%'";
    case Tok::Word: return "identifier";
    case Tok::DString: return "string";
    case Tok::SString: return "quoted name";
    case Tok::Iri: return "<iri>";
    case Tok::End: return "end of input";
  }
  return "token";
}

struct Token {
  Tok kind = Tok::End;
  std::string text;  // decoded payload for strings and IRIs, raw otherwise
  SourceSpan span;
};

bool word_char(unsigned char c) {
  if (c <= ' ') return false;
  switch (c) {
    case '(': case ')': case '[': case ']': case ',': case ';':
    case '=': case '"': case '\'': case '<': case '>': case '%':
      return false;
    default:
      return c != 0x7f;
  }
}

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    skip_blank();
    Token t;
    t.span = {line_, column_, 0};
    if (pos_ >= text_.size()) return t;
    const std::size_t start = pos_;
    const char c = text_[pos_];
    auto single = [&](Tok k) {
      advance();
      t.kind = k;
      t.text = std::string(1, c);
    };
    switch (c) {
      case '(': single(Tok::LParen); break;
      case ')': single(Tok::RParen); break;
      case '[': single(Tok::LBracket); break;
      case ']': single(Tok::RBracket); break;
      case ',': single(Tok::Comma); break;
      case ';': single(Tok::Semicolon); break;
      case '=': single(Tok::Equals); break;
      case '%':
        if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '%') {
          advance();
          advance();
          t.kind = Tok::TypeMark;
          t.text = "%%";
        } else {
          fail(t.span, "token", "%");
        }
        break;
      case '"':
      case '\'':
        t.kind = c == '"' ? Tok::DString : Tok::SString;
        t.text = quoted(c, t.span);
        break;
      case '<': {
        advance();
        while (pos_ < text_.size() && text_[pos_] != '>') {
          if (text_[pos_] == '\n' || text_[pos_] == ' ' || text_[pos_] == '\t') {
            fail(t.span, "'>' closing the IRI", std::string(text_.substr(start, pos_ - start)));
          }
          advance();
        }
        if (pos_ >= text_.size()) fail(t.span, "'>' closing the IRI", std::string(text_.substr(start)));
        t.kind = Tok::Iri;
        t.text = std::string(text_.substr(start + 1, pos_ - start - 1));
        advance();
        break;
      }
      default:
        if (!word_char(static_cast<unsigned char>(c))) fail(t.span, "token", std::string(1, c));
        while (pos_ < text_.size() && word_char(static_cast<unsigned char>(text_[pos_]))) advance();
        t.kind = Tok::Word;
        t.text = std::string(text_.substr(start, pos_ - start));
    }
    t.span.length = pos_ - start;
    return t;
  }

  [[noreturn]] static void fail(SourceSpan span, std::string expected, std::string found) {
    throw ParseError(span, std::move(expected), std::move(found));
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else if ((static_cast<unsigned char>(text_[pos_]) & 0xC0) != 0x80) {
      ++column_;  // count code points, not UTF-8 continuation bytes
    }
    ++pos_;
  }

  void skip_blank() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '/') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else {
        break;
      }
    }
  }

  std::string quoted(char quote, SourceSpan span) {
    advance();
    std::string out;
    while (true) {
      if (pos_ >= text_.size()) fail(span, std::string("closing ") + quote, "end of input");
      char c = text_[pos_];
      if (c == quote) {
        advance();
        return out;
      }
      if (c == '\\') {
        advance();
        if (pos_ >= text_.size()) fail(span, "escape sequence", "end of input");
        char e = text_[pos_];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          case '\\': case '"': case '\'': out += e; break;
          default: fail({line_, column_, 1}, "escape sequence", std::string("\\") + e);
        }
        advance();
        continue;
      }
      out += c;
      advance();
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

// ---------------------------------------------------------------------------
// Parser

struct Positional {
  std::string text;  // "-" for the absent marker
  SourceSpan span;
  bool dash() const { return text == "-"; }
};

class Parser {
 public:
  explicit Parser(std::string_view text) : lex_(text) { shift(); }

  Document parse() {
    while (tok_.kind == Tok::Word && tok_.text == "prefix") parse_prefix();
    std::vector<Record> records;
    while (tok_.kind != Tok::End) {
      if (tok_.kind == Tok::Word && tok_.text == "prefix") {
        Lexer::fail(tok_.span, "statement (prefix declarations must precede statements)", "prefix");
      }
      records.push_back(parse_statement());
    }
    try {
      return Document(std::move(namespaces_), std::move(records));
    } catch (const DuplicateId& e) {
      auto it = id_spans_.find(e.id());
      throw ParseError(it != id_spans_.end() ? it->second : SourceSpan{}, "unique identifier", e.id());
    }
  }

 private:
  void shift() { tok_ = lex_.next(); }

  [[noreturn]] void unexpected(std::string expected) const {
    Lexer::fail(tok_.span, std::move(expected), tok_.kind == Tok::End ? std::string("end of input") : tok_.text);
  }

  Token expect(Tok kind, std::string_view what = {}) {
    if (tok_.kind != kind) unexpected(what.empty() ? std::string(describe(kind)) : std::string(what));
    Token t = std::move(tok_);
    shift();
    return t;
  }

  void parse_prefix() {
    shift();
    Token name = expect(Tok::Word, "namespace prefix");
    if (!QualifiedName::valid_prefix(name.text)) Lexer::fail(name.span, "namespace prefix", name.text);
    std::string uri;
    if (tok_.kind == Tok::Iri || tok_.kind == Tok::Word) {
      uri = tok_.text;
      shift();
    } else {
      unexpected("namespace URI");
    }
    if (uri.empty()) Lexer::fail(name.span, "namespace URI", "<>");
    if (auto [it, fresh] = namespaces_.emplace(name.text, uri); !fresh && it->second != uri) {
      Lexer::fail(name.span, "consistent namespace declaration", name.text);
    }
  }

  QualifiedName qname(const Token& t) {
    auto q = QualifiedName::parse(t.text);
    if (!q) Lexer::fail(t.span, "qualified name prefix:local", t.text);
    declared(*q, t.span);
    return *q;
  }

  void declared(const QualifiedName& q, SourceSpan span) const {
    if (!namespaces_.contains(q.prefix())) throw UndeclaredPrefix(q.prefix(), span);
  }

  AttributeValue value() {
    Token t = std::move(tok_);
    shift();
    switch (t.kind) {
      case Tok::SString: {
        if (looks_like_uri(t.text)) return Uri{t.text};
        if (auto d = Decimal::parse(t.text)) return *d;
        if (auto q = QualifiedName::parse(t.text)) {
          declared(*q, t.span);
          return *q;
        }
        return Text{t.text};
      }
      case Tok::DString: {
        if (tok_.kind == Tok::TypeMark) {
          shift();
          Token type = expect(Tok::Word, "datatype");
          if (type.text == "xsd:string") return Text{t.text};
          if (type.text == "xsd:anyURI") return Uri{t.text};
          if (type.text == "xsd:decimal") {
            if (auto d = Decimal::parse(t.text)) return *d;
            Lexer::fail(t.span, "decimal literal", t.text);
          }
          if (type.text == "xsd:QName") {
            auto q = QualifiedName::parse(t.text);
            if (!q) Lexer::fail(t.span, "qualified name", t.text);
            declared(*q, t.span);
            return *q;
          }
          Lexer::fail(type.span, "xsd:string, xsd:anyURI, xsd:decimal or xsd:QName", type.text);
        }
        if (looks_like_uri(t.text)) return Uri{t.text};
        return Text{t.text};
      }
      case Tok::Word:
        if (auto d = Decimal::parse(t.text)) return *d;
        Lexer::fail(t.span, "attribute value", t.text);
      default:
        Lexer::fail(t.span, "attribute value", t.kind == Tok::End ? "end of input" : t.text);
    }
    return Text{};
  }

  Attributes attributes() {
    expect(Tok::LBracket);
    Attributes out;
    if (tok_.kind == Tok::RBracket) {
      shift();
      return out;
    }
    while (true) {
      Token key = expect(Tok::Word, "attribute name");
      auto k = qname(key);
      expect(Tok::Equals);
      out.push_back({std::move(k), value()});
      if (tok_.kind == Tok::Comma) {
        shift();
        continue;
      }
      if (tok_.kind == Tok::RBracket) {
        shift();
        return out;
      }
      unexpected("',' or ']'");
    }
  }

  // Reads one positional argument; joins the two words of an SPM timestamp.
  Positional positional() {
    if (tok_.kind != Tok::Word) unexpected("identifier, timestamp or '-'");
    Positional p{tok_.text, tok_.span};
    shift();
    if (tok_.kind == Tok::Word && Timestamp::parse_spm(p.text + " " + tok_.text)) {
      p.text += " " + tok_.text;
      p.span.length = tok_.span.column + tok_.span.length - p.span.column;
      shift();
    }
    return p;
  }

  struct Args {
    std::optional<Positional> semicolon_id;
    std::vector<Positional> items;
    Attributes attrs;
    SourceSpan open;
  };

  Args arguments() {
    Args a;
    a.open = tok_.span;
    expect(Tok::LParen);
    bool first = true;
    while (true) {
      if (tok_.kind == Tok::LBracket) {
        a.attrs = attributes();
        expect(Tok::RParen, "')' after the attribute list");
        return a;
      }
      auto p = positional();
      if (first && tok_.kind == Tok::Semicolon) {
        shift();
        a.semicolon_id = std::move(p);
        first = false;
        continue;
      }
      first = false;
      a.items.push_back(std::move(p));
      if (tok_.kind == Tok::Comma) {
        shift();
        continue;
      }
      if (tok_.kind == Tok::RParen) {
        shift();
        return a;
      }
      unexpected("',' or ')'");
    }
  }

  std::string id(const Positional& p) {
    if (!valid_local_id(p.text)) Lexer::fail(p.span, "identifier", p.text);
    return p.text;
  }

  std::optional<std::string> optional_id(const Positional& p) {
    if (p.dash()) return std::nullopt;
    return id(p);
  }

  std::optional<Timestamp> time(const Positional& p) {
    if (p.dash()) return std::nullopt;
    auto t = Timestamp::parse(p.text);
    if (!t) Lexer::fail(p.span, "timestamp or '-'", p.text);
    return t;
  }

  static bool time_like(const Positional& p) { return p.dash() || Timestamp::parse(p.text).has_value(); }

  void arity(const Args& a, std::size_t lo, std::size_t hi, std::string_view statement) {
    if (a.items.size() < lo || a.items.size() > hi) {
      SourceSpan at = a.items.empty() ? a.open : a.items.back().span;
      Lexer::fail(at, std::to_string(lo) + (lo == hi ? "" : "-" + std::to_string(hi)) +
                          " positional arguments for " + std::string(statement),
                  std::to_string(a.items.size()));
    }
  }

  void remember(const std::string& rid, SourceSpan span) { id_spans_.emplace(rid, span); }

  Record parse_statement() {
    Token kw = expect(Tok::Word, "statement keyword");
    Args a = arguments();

    if (kw.text == "entity" || kw.text == "agent") {
      if (a.semicolon_id) Lexer::fail(a.semicolon_id->span, "identifier without ';'", a.semicolon_id->text);
      arity(a, 1, 1, kw.text);
      auto rid = id(a.items[0]);
      remember(rid, a.items[0].span);
      if (kw.text == "entity") return Entity{rid, std::move(a.attrs)};
      return Agent{rid, std::move(a.attrs)};
    }
    if (kw.text == "activity") {
      if (a.semicolon_id) Lexer::fail(a.semicolon_id->span, "identifier without ';'", a.semicolon_id->text);
      arity(a, 1, 3, kw.text);
      if (a.items.size() == 2) Lexer::fail(a.items[1].span, "start and end timestamps", a.items[1].text);
      Activity act{id(a.items[0]), std::nullopt, std::nullopt, std::move(a.attrs)};
      remember(act.id, a.items[0].span);
      if (a.items.size() == 3) {
        act.start = time(a.items[1]);
        act.end = time(a.items[2]);
      }
      return act;
    }
    auto kind = relation_kind_from_string(kw.text);
    if (!kind) Lexer::fail(kw.span, "statement keyword", kw.text);
    return relation(*kind, std::move(a), kw.text);
  }

  Relation relation(RelationKind kind, Args a, std::string_view name) {
    Relation rel;
    rel.kind = kind;
    rel.attributes = std::move(a.attrs);
    std::vector<Positional> items = std::move(a.items);
    if (a.semicolon_id) rel.rel_id = optional_id(*a.semicolon_id);

    // Number of slots after an optional leading relation id.
    const std::size_t slots = kind == RelationKind::WasAssociatedWith ? 3 : relation_has_time(kind) ? 3 : 2;
    const std::size_t required = 2;
    bool leading_id = false;
    if (!a.semicolon_id) {
      if (items.size() == slots + 1) {
        leading_id = true;
      } else if (relation_has_time(kind) && items.size() == 3 && !time_like(items[2])) {
        leading_id = true;  // used(u_1, a_1, e_1)
      }
    }
    if (leading_id) {
      rel.rel_id = optional_id(items.front());
      items.erase(items.begin());
    }
    if (items.size() < required || items.size() > slots) {
      a.items = items;
      arity(a, required, slots, name);
    }
    rel.subject = id(items[0]);
    rel.object = id(items[1]);
    if (items.size() == 3) {
      if (kind == RelationKind::WasAssociatedWith) {
        rel.plan = optional_id(items[2]);
      } else {
        rel.time = time(items[2]);
      }
    }
    return rel;
  }

  Lexer lex_;
  Token tok_;
  NamespaceMap namespaces_;
  std::unordered_map<std::string, SourceSpan> id_spans_;
};

// ---------------------------------------------------------------------------
// Serializer

std::string quote(std::string_view s, char q) {
  std::string out(1, q);
  for (char c : s) {
    switch (c) {
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      case '\\': out += "\\\\"; break;
      default:
        if (c == q) out += '\\';
        out += c;
    }
  }
  out += q;
  return out;
}

std::string value_text(const AttributeValue& v) {
  switch (v.kind()) {
    case ValueKind::Term:
      if (looks_like_uri(v.term()->str())) return quote(v.term()->str(), '"') + " %% xsd:QName";
      return "'" + v.term()->str() + "'";
    case ValueKind::Number: return v.number()->text();
    case ValueKind::Uri:
      if (looks_like_uri(v.uri()->value)) return quote(v.uri()->value, '"');
      return quote(v.uri()->value, '"') + " %% xsd:anyURI";
    case ValueKind::Text:
      if (looks_like_uri(v.text()->value)) return quote(v.text()->value, '"') + " %% xsd:string";
      return quote(v.text()->value, '"');
  }
  return {};
}

std::string attribute_list(const Attributes& attrs, std::size_t indent) {
  std::string out = "[";
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    if (i) out += ",\n" + std::string(indent + 1, ' ');
    out += attrs[i].key.str() + "=" + value_text(attrs[i].value);
  }
  return out + "]";
}

std::string time_text(const std::optional<Timestamp>& t) { return t ? t->iso() : "-"; }

void write_record(std::ostream& out, const Record& rec) {
  std::visit(
      [&out](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, Entity> || std::is_same_v<T, Agent>) {
          std::string head = std::string(std::is_same_v<T, Entity> ? "entity(" : "agent(") + r.id;
          if (r.attributes.empty()) {
            out << head << ")";
          } else {
            head += ",";
            out << head << attribute_list(r.attributes, head.size()) << ")";
          }
        } else if constexpr (std::is_same_v<T, Activity>) {
          const std::string pad(8, ' ');
          out << "activity(" << r.id << ",\n" << pad << time_text(r.start) << ",\n" << pad << time_text(r.end);
          if (!r.attributes.empty()) out << ",\n" << pad << attribute_list(r.attributes, pad.size());
          out << ")";
        } else {
          const auto name = to_string(r.kind);
          std::vector<std::string> items;
          if (r.rel_id) items.push_back(*r.rel_id);
          items.push_back(r.subject);
          items.push_back(r.object);
          if (r.kind == RelationKind::WasAssociatedWith) {
            items.push_back(r.plan.value_or("-"));
          } else if (relation_has_time(r.kind) && (r.time || r.rel_id)) {
            items.push_back(time_text(r.time));
          }
          out << name << "(";
          for (std::size_t i = 0; i < items.size(); ++i) out << (i ? ", " : "") << items[i];
          if (!r.attributes.empty()) {
            const std::size_t indent = name.size() + 1;
            out << ",\n" << std::string(indent, ' ') << attribute_list(r.attributes, indent);
          }
          out << ")";
        }
      },
      rec);
}

}  // namespace

Document parse_provn(std::string_view text) { return Parser(text).parse(); }

std::string serialize_provn(const Document& doc, Check check) {
  if (check == Check::Strict) {
    auto report = validate(doc);
    std::erase_if(report, [](const Violation& v) { return v.code != ViolationCode::DanglingRef; });
    if (!report.empty()) throw InvalidDocument(std::move(report), "serialize_provn");
  }
  std::ostringstream out;
  for (const auto& [prefix, uri] : doc.namespaces()) out << "prefix " << prefix << " <" << uri << ">\n";
  for (const auto& rec : doc.records()) {
    out << "\n";
    write_record(out, rec);
    out << "\n";
  }
  return out.str();
}

}  // namespace nidm
