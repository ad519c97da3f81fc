#include "nidm/extractors.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <boost/regex.hpp>

#include "nidm/error.hpp"
#include "nidm/validate.hpp"

namespace nidm::extract {

namespace {

const QualifiedName& key_label() {
  static const QualifiedName k("prov", "label");
  return k;
}
const QualifiedName& key_location() {
  static const QualifiedName k("prov", "location");
  return k;
}
const QualifiedName& key_name() {
  static const QualifiedName k("nidm", "name");
  return k;
}
const QualifiedName& key_value() {
  static const QualifiedName k("nidm", "value");
  return k;
}

constexpr std::string_view kParamPrefix = "par: ";

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    out.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return out;
}

// first word and the trimmed rest
std::pair<std::string_view, std::string_view> head(std::string_view s) {
  auto sp = s.find_first_of(" \t");
  if (sp == std::string_view::npos) return {s, {}};
  return {s.substr(0, sp), trim(s.substr(sp))};
}

AttributeValue param_value(std::string_view v) {
  if (auto d = Decimal::parse(v)) return *d;
  return Text{std::string(v)};
}

NamespaceMap base_namespaces() { return {{"prov", std::string(ns::kProv)}, {"nidm", std::string(ns::kNidm)}}; }

/// Shared record builder for both extractors.
class Builder {
 public:
  explicit Builder(NamespaceMap namespaces) : namespaces_(std::move(namespaces)) {}

  std::size_t next_activity = 1, next_entity = 1, next_used = 1, next_generation = 1;

  std::size_t open_activity(std::string label, std::optional<Timestamp> start, Attributes extra_types) {
    Activity a;
    a.id = "a_" + std::to_string(next_activity++);
    a.start = start;
    a.attributes = std::move(extra_types);
    a.attributes.push_back({key_label(), Text{std::move(label)}});
    records_.push_back(std::move(a));
    return records_.size() - 1;
  }

  Activity& activity(std::size_t pos) { return std::get<Activity>(records_[pos]); }

  std::string parameter(const std::string& name, std::string_view value, Attributes types) {
    Entity e;
    e.id = "e_" + std::to_string(next_entity++);
    e.attributes = std::move(types);
    e.attributes.push_back({key_name(), Text{std::string(kParamPrefix) + name}});
    e.attributes.push_back({key_value(), param_value(value)});
    records_.push_back(e);
    return e.id;
  }

  std::string file(const std::string& path, Attributes types) {
    auto it = files_.find(path);
    if (it != files_.end()) return it->second;
    Entity e;
    e.id = "e_" + std::to_string(next_entity++);
    e.attributes = std::move(types);
    e.attributes.push_back({key_location(), Text{path}});
    files_.emplace(path, e.id);
    records_.push_back(e);
    return e.id;
  }

  void used(const std::string& act, const std::string& ent) {
    Relation r;
    r.kind = RelationKind::Used;
    r.rel_id = "u_" + std::to_string(next_used++);
    r.subject = act;
    r.object = ent;
    relations_.push_back(std::move(r));
  }

  void generated(const std::string& ent, const std::string& act) {
    Relation r;
    r.kind = RelationKind::WasGeneratedBy;
    r.rel_id = "g_" + std::to_string(next_generation++);
    r.subject = ent;
    r.object = act;
    relations_.push_back(std::move(r));
  }

  // Relations follow the records of the step that produced them.
  void flush_relations() {
    for (auto& r : relations_) records_.push_back(std::move(r));
    relations_.clear();
  }

  Document finish() {
    flush_relations();
    return build_document(std::move(namespaces_), std::move(records_));
  }

 private:
  NamespaceMap namespaces_;
  std::vector<Record> records_;
  std::vector<Relation> relations_;
  std::map<std::string, std::string> files_;
};

[[noreturn]] void line_error(std::size_t line, std::string expected, std::string_view found) {
  throw ParseError({line, 1, found.size()}, std::move(expected), std::string(found));
}

Timestamp need_time(std::size_t line, std::string_view text) {
  if (auto t = Timestamp::parse(text)) return *t;
  line_error(line, "timestamp (07-Jun-2012 14:06:39 or 2012-06-07T14:06:39)", text);
}

}  // namespace

Document extract_spm_batch(std::string_view log) {
  Builder b(base_namespaces());
  const Attributes param_type{{prov_type_key(), Text{"parameter"}}};
  const Attributes file_type{{prov_type_key(), Text{"file"}}};

  std::optional<std::size_t> open;
  std::size_t open_line = 0;
  std::size_t lineno = 0;
  for (auto raw : split_lines(log)) {
    ++lineno;
    auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto [kw, rest] = head(line);
    if (kw == "COUNTER") {
      auto [which, num] = head(rest);
      if (num.empty() || num.find_first_not_of("0123456789") != std::string_view::npos || num == "0") {
        line_error(lineno, "positive counter value", num);
      }
      const std::size_t v = std::stoul(std::string(num));
      if (which == "activity") b.next_activity = v;
      else if (which == "entity") b.next_entity = v;
      else if (which == "used") b.next_used = v;
      else if (which == "generation") b.next_generation = v;
      else line_error(lineno, "activity, entity, used or generation", which);
    } else if (kw == "BEGIN") {
      if (open) throw UnbalancedStep(open_line, "BEGIN at line " + std::to_string(lineno) + " before END of the step");
      auto [module, when] = head(rest);
      if (module.empty()) line_error(lineno, "module path", rest);
      open = b.open_activity(std::string(module), need_time(lineno, when), {});
      open_line = lineno;
    } else if (kw == "END") {
      if (!open) throw UnbalancedStep(lineno, "END without BEGIN");
      auto t = need_time(lineno, rest);
      b.activity(*open).end = t;
      b.flush_relations();
      open.reset();
    } else if (kw == "PARAM" || kw == "IN" || kw == "OUT") {
      if (!open) line_error(lineno, "BEGIN", kw);
      const std::string act = b.activity(*open).id;
      if (kw == "PARAM") {
        auto [name, value] = head(rest);
        if (name.empty() || value.empty()) line_error(lineno, "PARAM <name> <value>", line);
        b.used(act, b.parameter(std::string(name), value, param_type));
      } else {
        if (rest.empty()) line_error(lineno, "path", line);
        auto id = b.file(std::string(rest), file_type);
        if (kw == "IN") b.used(act, id);
        else b.generated(id, act);
      }
    } else {
      line_error(lineno, "BEGIN, END, PARAM, IN, OUT or COUNTER", kw);
    }
  }
  if (open) throw UnbalancedStep(open_line, "BEGIN without END");
  return b.finish();
}

// ---------------------------------------------------------------------------
// Rule-driven extraction

std::string_view to_string(EmitKind k) {
  switch (k) {
    case EmitKind::ActivityStart: return "activity-start";
    case EmitKind::ActivityEnd: return "activity-end";
    case EmitKind::Parameter: return "parameter";
    case EmitKind::InputFile: return "input-file";
    case EmitKind::OutputFile: return "output-file";
  }
  return "?";
}

std::optional<EmitKind> emit_kind_from_string(std::string_view name) {
  for (auto k : {EmitKind::ActivityStart, EmitKind::ActivityEnd, EmitKind::Parameter, EmitKind::InputFile,
                 EmitKind::OutputFile}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

struct RuleSet::Compiled {
  struct Rule {
    boost::regex re;
    bool has_time = false;
  };
  std::vector<Rule> rules;
};

namespace {

bool has_group(const std::string& pattern, std::string_view name) {
  const std::string n(name);
  return pattern.find("(?<" + n + ">") != std::string::npos || pattern.find("(?P<" + n + ">") != std::string::npos ||
         pattern.find("(?'" + n + "'") != std::string::npos;
}

std::vector<std::string_view> required_groups(EmitKind k) {
  switch (k) {
    case EmitKind::ActivityStart: return {"label"};
    case EmitKind::Parameter: return {"name", "value"};
    case EmitKind::InputFile:
    case EmitKind::OutputFile: return {"path"};
    case EmitKind::ActivityEnd: return {};
  }
  return {};
}

}  // namespace

RuleSet RuleSet::build(std::string name, NamespaceMap namespaces, std::vector<ExtractionRule> rules) {
  auto compiled = std::make_shared<Compiled>();
  bool any_start = false;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const auto& r = rules[i];
    if (!namespaces.contains(r.type_tag.prefix()) && r.type_tag.prefix() != "prov" && r.type_tag.prefix() != "nidm") {
      throw RuleError(i + 1, "type prefix '" + r.type_tag.prefix() + "' is not declared");
    }
    Compiled::Rule c;
    try {
      c.re = boost::regex(r.pattern, boost::regex::perl);
    } catch (const boost::regex_error& e) {
      throw RuleError(i + 1, std::string("pattern does not compile: ") + e.what());
    }
    for (auto g : required_groups(r.emit)) {
      if (!has_group(r.pattern, g)) {
        throw RuleError(i + 1, std::string(to_string(r.emit)) + " rule needs a named capture '" + std::string(g) + "'");
      }
    }
    c.has_time = has_group(r.pattern, "time");
    any_start = any_start || r.emit == EmitKind::ActivityStart;
    compiled->rules.push_back(std::move(c));
  }
  if (!any_start) throw RuleError(0, "rule set '" + name + "' has no activity-start rule");
  RuleSet out;
  out.name_ = std::move(name);
  out.namespaces_ = std::move(namespaces);
  out.rules_ = std::move(rules);
  out.compiled_ = std::move(compiled);
  return out;
}

RuleSet parse_rules(std::string_view text) {
  std::string name;
  NamespaceMap namespaces;
  std::vector<ExtractionRule> rules;
  std::size_t lineno = 0;
  for (auto raw : split_lines(text)) {
    ++lineno;
    auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto [kw, rest] = head(line);
    if (kw == "name") {
      name = std::string(rest);
    } else if (kw == "ns") {
      auto [prefix, uri] = head(rest);
      if (uri.size() >= 2 && uri.front() == '<' && uri.back() == '>') uri = uri.substr(1, uri.size() - 2);
      if (prefix.empty() || uri.empty()) line_error(lineno, "ns <prefix> <uri>", line);
      namespaces[std::string(prefix)] = std::string(uri);
    } else if (kw == "rule") {
      auto [kind_text, after_kind] = head(rest);
      auto [type_text, pattern] = head(after_kind);
      auto kind = emit_kind_from_string(kind_text);
      if (!kind) line_error(lineno, "activity-start, activity-end, parameter, input-file or output-file", kind_text);
      auto type = QualifiedName::parse(type_text);
      if (!type) line_error(lineno, "type qname", type_text);
      if (pattern.size() < 2 || pattern.front() != '/' || pattern.back() != '/') {
        line_error(lineno, "/regex/", pattern);
      }
      rules.push_back({*kind, *type, std::string(pattern.substr(1, pattern.size() - 2))});
    } else {
      line_error(lineno, "name, ns or rule", kw);
    }
  }
  for (const auto& [p, uri] : base_namespaces()) namespaces.emplace(p, uri);
  return RuleSet::build(std::move(name), std::move(namespaces), std::move(rules));
}

RuleSet load_rules(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(path.string(), "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_rules(ss.str());
}

RuleExtraction extract_with_rules(std::string_view log, const RuleSet& rules) {
  RuleExtraction out;
  Builder b(rules.namespaces());
  const auto& compiled = rules.compiled().rules;
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::size_t open = kNone;

  auto time_of = [&](const boost::smatch& m, std::size_t rule, std::size_t lineno) -> std::optional<Timestamp> {
    if (!compiled[rule].has_time || !m["time"].matched) return std::nullopt;
    const std::string t = m["time"].str();
    if (auto ts = Timestamp::parse(t)) return ts;
    if (auto ts = Timestamp::parse_ctime(t)) return ts;
    line_error(lineno, "timestamp", t);
  };

  std::size_t lineno = 0;
  for (auto raw : split_lines(log)) {
    ++lineno;
    ++out.total_lines;
    const std::string line(trim(raw));
    std::optional<std::size_t> hit;
    boost::smatch m;
    for (std::size_t i = 0; i < compiled.size(); ++i) {
      if (boost::regex_search(line, m, compiled[i].re)) {
        hit = i;
        break;
      }
    }
    const auto& rule = hit ? rules.rules()[*hit] : ExtractionRule{};
    const bool needs_open = hit && rule.emit != EmitKind::ActivityStart;
    if (!hit || (needs_open && open == kNone)) {
      ++out.unmatched_lines;
      continue;
    }
    ++out.matched_lines;
    const Attributes types{{prov_type_key(), rule.type_tag}};
    switch (rule.emit) {
      case EmitKind::ActivityStart: {
        auto t = time_of(m, *hit, lineno);
        if (open != kNone && t && !b.activity(open).end) b.activity(open).end = t;
        b.flush_relations();
        open = b.open_activity(m["label"].str(), t, types);
        break;
      }
      case EmitKind::ActivityEnd:
        b.activity(open).end = time_of(m, *hit, lineno);
        b.flush_relations();
        open = kNone;
        break;
      case EmitKind::Parameter:
        b.used(b.activity(open).id, b.parameter(m["name"].str(), std::string(trim(m["value"].str())), types));
        break;
      case EmitKind::InputFile:
        b.used(b.activity(open).id, b.file(m["path"].str(), types));
        break;
      case EmitKind::OutputFile: {
        const std::string act = b.activity(open).id;
        b.generated(b.file(m["path"].str(), types), act);
        break;
      }
    }
  }
  out.document = b.finish();
  return out;
}

// ---------------------------------------------------------------------------
// Replay

namespace {

const AttributeValue* first_value(const Attributes& attrs, const QualifiedName& key) {
  for (const auto& a : attrs) {
    if (a.key == key) return &a.value;
  }
  return nullptr;
}

}  // namespace

std::vector<ReplayStep> replay_plan(const Document& doc) {
  require_valid(doc, "replay");
  std::vector<const Activity*> acts;
  for (const auto& r : doc.records()) {
    if (const auto* a = std::get_if<Activity>(&r)) acts.push_back(a);
  }
  std::stable_sort(acts.begin(), acts.end(), [](const Activity* x, const Activity* y) {
    if (x->start != y->start) return x->start < y->start;
    return x->id < y->id;
  });

  std::vector<ReplayStep> steps;
  for (const auto* a : acts) {
    ReplayStep s;
    const auto* label = first_value(a->attributes, key_label());
    s.label = label ? label->lexical() : a->id;
    s.start = a->start;
    s.end = a->end;
    for (const auto& r : doc.records()) {
      const auto* rel = std::get_if<Relation>(&r);
      if (!rel) continue;
      const bool input = rel->kind == RelationKind::Used && rel->subject == a->id;
      const bool output = rel->kind == RelationKind::WasGeneratedBy && rel->object == a->id;
      if (!input && !output) continue;
      const auto* ent = std::get_if<Entity>(doc.lookup(input ? rel->object : rel->subject));
      if (!ent) continue;
      const auto* name = first_value(ent->attributes, key_name());
      const auto* value = first_value(ent->attributes, key_value());
      const auto* location = first_value(ent->attributes, key_location());
      if (input && name && value) {
        std::string n = name->lexical();
        if (n.starts_with(kParamPrefix)) n.erase(0, kParamPrefix.size());
        s.parameters.emplace_back(std::move(n), value->lexical());
      } else if (location) {
        (input ? s.inputs : s.outputs).push_back(location->lexical());
      }
    }
    steps.push_back(std::move(s));
  }
  return steps;
}

std::string to_command(const ReplayStep& step) {
  std::string out = step.label;
  for (const auto& [n, v] : step.parameters) out += " " + n + "=" + v;
  for (const auto& p : step.inputs) out += " in=" + p;
  for (const auto& p : step.outputs) out += " out=" + p;
  return out;
}

std::string regenerate_spm_log(const std::vector<ReplayStep>& steps) {
  std::ostringstream out;
  Timestamp clock = *Timestamp::parse_iso("2000-01-01T00:00:00");
  for (const auto& s : steps) {
    const Timestamp start = s.start.value_or(clock);
    const Timestamp end = s.end.value_or(start);
    clock = Timestamp(end.time() + std::chrono::seconds(1));
    out << "BEGIN " << s.label << ' ' << start.spm() << '\n';
    for (const auto& [n, v] : s.parameters) out << "PARAM " << n << ' ' << v << '\n';
    for (const auto& p : s.inputs) out << "IN " << p << '\n';
    for (const auto& p : s.outputs) out << "OUT " << p << '\n';
    out << "END " << end.spm() << '\n';
  }
  return out.str();
}

}  // namespace nidm::extract
