#include "nidm/query.hpp"

#include <algorithm>
#include <cctype>

#include "nidm/error.hpp"

namespace nidm::query {

std::string_view to_string(Comparator c) {
  switch (c) {
    case Comparator::Eq: return "=";
    case Comparator::Ne: return "!=";
    case Comparator::Lt: return "<";
    case Comparator::Le: return "<=";
    case Comparator::Gt: return ">";
    case Comparator::Ge: return ">=";
    case Comparator::Contains: return "~";
    case Comparator::Exists: return "";
  }
  return "?";
}

bool is_ordering(Comparator c) {
  return c == Comparator::Lt || c == Comparator::Le || c == Comparator::Gt || c == Comparator::Ge;
}

std::string_view to_string(Direction d) { return d == Direction::Forward ? "forward" : "backward"; }

bool walks_subject_to_object(RelationKind kind, Direction dir) {
  const bool active = kind == RelationKind::Used || kind == RelationKind::HadMember ||
                      kind == RelationKind::ActedOnBehalfOf;
  return active == (dir == Direction::Forward);
}

bool values_equal(const AttributeValue& a, const AttributeValue& b) {
  auto da = a.as_decimal();
  auto db = b.as_decimal();
  if (da && db) return da->numerically_equal(*db);
  return a.lexical() == b.lexical();
}

bool holds(const AttrFilter& f, const Attributes& attrs) {
  bool present = false;
  for (const auto& a : attrs) {
    if (a.key != f.key) continue;
    present = true;
    if (f.op == Comparator::Exists) return true;
    switch (f.op) {
      case Comparator::Eq:
        if (values_equal(a.value, f.value)) return true;
        break;
      case Comparator::Ne:
        if (values_equal(a.value, f.value)) return false;
        break;
      case Comparator::Contains:
        if (a.value.lexical().find(f.value.lexical()) != std::string::npos) return true;
        break;
      default: {
        auto lhs = a.value.as_decimal();
        auto rhs = f.value.as_decimal();
        if (!lhs || !rhs) break;
        auto c = lhs->compare(*rhs);
        bool ok = (f.op == Comparator::Lt && c < 0) || (f.op == Comparator::Le && c <= 0) ||
                  (f.op == Comparator::Gt && c > 0) || (f.op == Comparator::Ge && c >= 0);
        if (ok) return true;
      }
    }
  }
  return f.op == Comparator::Ne && present;
}

void check_query(const Query& q, std::size_t max_path) {
  if (q.select == Category::Relation) throw BadQuery("select must be entity, activity or agent");
  auto check_filter = [](const RecordFilter& f) {
    for (const auto& a : f.attrs) {
      if (is_ordering(a.op) && !a.value.number()) {
        throw BadQuery("comparator " + std::string(to_string(a.op)) + " on " + a.key.str() +
                       " needs a number, got '" + a.value.lexical() + "'");
      }
    }
  };
  check_filter(q.filter);
  for (const auto& p : q.paths) {
    if (p.chain.empty()) throw BadQuery("path needs at least one step");
    if (p.chain.size() > max_path) {
      throw BadQuery("path of " + std::to_string(p.chain.size()) + " steps exceeds the cap of " +
                     std::to_string(max_path));
    }
    if (p.target == Category::Relation) throw BadQuery("path target must be entity, activity, agent or any");
    check_filter(p.filter);
  }
}

// ---------------------------------------------------------------------------
// Text form

namespace {

enum class Tok { Word, String, Op, LParen, RParen, LBracket, RBracket, Arrow, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  SourceSpan span;
};

bool word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == ':' || c == '.' || c == '-' || c == '+';
}

class Lexer {
 public:
  explicit Lexer(std::string_view s) : s_(s) {}

  Token next() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) step();
    Token t;
    t.span = {line_, col_, 0};
    if (pos_ >= s_.size()) return t;
    const std::size_t start = pos_;
    auto take = [&](Tok k, std::size_t n) {
      t.kind = k;
      t.text = std::string(s_.substr(pos_, n));
      for (std::size_t i = 0; i < n; ++i) step();
    };
    const char c = s_[pos_];
    auto rest = s_.substr(pos_);
    if (rest.starts_with("->")) {
      take(Tok::Arrow, 2);
    } else if (rest.starts_with("!=") || rest.starts_with("<=") || rest.starts_with(">=") || rest.starts_with("<>")) {
      take(Tok::Op, 2);
    } else if (rest.starts_with("≠") || rest.starts_with("≤") || rest.starts_with("≥")) {
      take(Tok::Op, 3);
    } else if (c == '=' || c == '<' || c == '>' || c == '~') {
      take(Tok::Op, 1);
    } else if (c == '(') {
      take(Tok::LParen, 1);
    } else if (c == ')') {
      take(Tok::RParen, 1);
    } else if (c == '[') {
      take(Tok::LBracket, 1);
    } else if (c == ']') {
      take(Tok::RBracket, 1);
    } else if (c == '"') {
      step();
      t.kind = Tok::String;
      while (true) {
        if (pos_ >= s_.size()) throw BadQuery("unterminated string", t.span, "closing '\"'", "end of query");
        char d = s_[pos_];
        if (d == '"') {
          step();
          break;
        }
        if (d == '\\' && pos_ + 1 < s_.size()) {
          step();
          d = s_[pos_];
        }
        t.text += d;
        step();
      }
    } else if (word_char(c)) {
      t.kind = Tok::Word;
      while (pos_ < s_.size() && word_char(s_[pos_]) && !s_.substr(pos_).starts_with("->")) t.text += s_[pos_], step();
    } else {
      throw BadQuery("unexpected character", t.span, "query token", std::string(1, c));
    }
    t.span.length = pos_ - start;
    return t;
  }

 private:
  void step() {
    if (s_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else if ((static_cast<unsigned char>(s_[pos_]) & 0xC0) != 0x80) {
      ++col_;
    }
    ++pos_;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : lex_(text) { shift(); }

  Query parse() {
    keyword("select");
    Query q;
    Token cat = expect(Tok::Word, "entity, activity or agent");
    auto c = category_from_string(lower(cat.text));
    if (!c || *c == Category::Relation) fail(cat, "entity, activity or agent");
    q.select = *c;
    if (tok_.kind != Tok::End) {
      keyword("where");
      condition(q.filter, &q.paths);
      while (is_keyword("and")) {
        shift();
        condition(q.filter, &q.paths);
      }
    }
    if (tok_.kind != Tok::End) fail(tok_, "'and' or end of query");
    check_query(q, 64);
    return q;
  }

 private:
  void shift() { tok_ = lex_.next(); }

  [[noreturn]] void fail(const Token& t, std::string expected) const {
    std::string found = t.kind == Tok::End ? "end of query" : t.text;
    std::string message = "expected " + expected + ", found '" + found + "' at column " + std::to_string(t.span.column);
    throw BadQuery(message, t.span, std::move(expected), found);
  }

  bool is_keyword(std::string_view kw) const { return tok_.kind == Tok::Word && lower(tok_.text) == kw; }

  void keyword(std::string_view kw) {
    if (!is_keyword(kw)) fail(tok_, "'" + std::string(kw) + "'");
    shift();
  }

  Token expect(Tok kind, std::string expected) {
    if (tok_.kind != kind) fail(tok_, std::move(expected));
    Token t = std::move(tok_);
    shift();
    return t;
  }

  QualifiedName qname(const Token& t) const {
    auto q = QualifiedName::parse(t.text);
    if (!q) fail(t, "qualified name prefix:local");
    return *q;
  }

  AttributeValue value() {
    Token t = std::move(tok_);
    if (t.kind == Tok::String) {
      shift();
      if (looks_like_uri(t.text)) return Uri{t.text};
      return Text{t.text};
    }
    if (t.kind != Tok::Word) fail(t, "value (number, prefix:local or \"string\")");
    shift();
    if (auto d = Decimal::parse(t.text)) return *d;
    if (auto q = QualifiedName::parse(t.text)) return *q;
    fail(t, "value (number, prefix:local or \"string\")");
  }

  Comparator comparator() {
    if (tok_.kind == Tok::Word && lower(tok_.text) == "contains") {
      shift();
      return Comparator::Contains;
    }
    Token t = expect(Tok::Op, "comparator");
    if (t.text == "=") return Comparator::Eq;
    if (t.text == "!=" || t.text == "<>" || t.text == "≠") return Comparator::Ne;
    if (t.text == "<") return Comparator::Lt;
    if (t.text == "<=" || t.text == "≤") return Comparator::Le;
    if (t.text == ">") return Comparator::Gt;
    if (t.text == ">=" || t.text == "≥") return Comparator::Ge;
    if (t.text == "~") return Comparator::Contains;
    fail(t, "comparator");
  }

  // type=... | attr[...]op value | path(...) when `paths` is non-null
  void condition(RecordFilter& filter, std::vector<PathConstraint>* paths) {
    if (is_keyword("type")) {
      shift();
      Token op = expect(Tok::Op, "'='");
      if (op.text != "=") fail(op, "'='");
      filter.types.push_back(qname(expect(Tok::Word, "type term")));
      return;
    }
    if (is_keyword("attr")) {
      shift();
      expect(Tok::LBracket, "'['");
      auto key = qname(expect(Tok::Word, "attribute name"));
      expect(Tok::RBracket, "']'");
      if (tok_.kind != Tok::Op && !is_keyword("contains")) {
        filter.attrs.push_back({std::move(key), Comparator::Exists, AttributeValue{Text{}}});
        return;
      }
      Token at = tok_;
      auto op = comparator();
      auto v = value();
      if (is_ordering(op) && !v.number()) {
        throw BadQuery("comparator " + std::string(to_string(op)) + " needs a number", at.span, "number",
                       v.lexical());
      }
      filter.attrs.push_back({std::move(key), op, std::move(v)});
      return;
    }
    if (paths && is_keyword("path")) {
      shift();
      paths->push_back(path());
      return;
    }
    fail(tok_, paths ? "type=, attr[...] or path(...)" : "type= or attr[...]");
  }

  PathConstraint path() {
    expect(Tok::LParen, "'('");
    PathConstraint p;
    while (true) {
      Token t = expect(Tok::Word, "relation step or target");
      auto dot = t.text.rfind('.');
      std::optional<RelationKind> kind;
      if (dot != std::string::npos) kind = relation_kind_from_string(std::string_view(t.text).substr(0, dot));
      if (kind) {
        auto dir = lower(t.text.substr(dot + 1));
        if (dir != "forward" && dir != "backward") fail(t, "<relation>.forward or <relation>.backward");
        p.chain.push_back({*kind, dir == "forward" ? Direction::Forward : Direction::Backward});
        expect(Tok::Arrow, "'->'");
        continue;
      }
      if (p.chain.empty()) fail(t, "<relation>.forward or <relation>.backward");
      auto name = lower(t.text);
      if (name != "any") {
        auto c = category_from_string(name);
        if (!c || *c == Category::Relation) fail(t, "entity, activity, agent or any");
        p.target = *c;
      }
      break;
    }
    if (tok_.kind == Tok::LBracket) {
      shift();
      condition(p.filter, nullptr);
      while (is_keyword("and")) {
        shift();
        condition(p.filter, nullptr);
      }
      expect(Tok::RBracket, "'and' or ']'");
    }
    expect(Tok::RParen, "')'");
    return p;
  }

  Lexer lex_;
  Token tok_;
};

std::string value_text(const AttributeValue& v) {
  switch (v.kind()) {
    case ValueKind::Number: return v.number()->text();
    case ValueKind::Term: return v.term()->str();
    default: {
      std::string out = "\"";
      for (char c : v.lexical()) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
      }
      return out + "\"";
    }
  }
}

void format_filter(std::vector<std::string>& parts, const RecordFilter& f) {
  for (const auto& t : f.types) parts.push_back("type=" + t.str());
  for (const auto& a : f.attrs) {
    std::string s = "attr[" + a.key.str() + "]";
    if (a.op != Comparator::Exists) s += std::string(to_string(a.op)) + value_text(a.value);
    parts.push_back(s);
  }
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace

Query parse_query(std::string_view text) { return Parser(text).parse(); }

std::string format_query(const Query& q) {
  std::string out = "select " + std::string(to_string(q.select));
  std::vector<std::string> parts;
  format_filter(parts, q.filter);
  for (const auto& p : q.paths) {
    std::string s = "path(";
    for (const auto& step : p.chain) s += std::string(to_string(step.kind)) + "." + std::string(to_string(step.direction)) + " -> ";
    s += p.target ? std::string(to_string(*p.target)) : "any";
    std::vector<std::string> inner;
    format_filter(inner, p.filter);
    if (!inner.empty()) s += "[" + join(inner, " and ") + "]";
    parts.push_back(s + ")");
  }
  if (!parts.empty()) out += " where " + join(parts, " and ");
  return out;
}

}  // namespace nidm::query
