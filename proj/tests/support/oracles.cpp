#include "oracles.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <unordered_map>

namespace nidm::testing {
namespace {

bool decimal_text(const std::string& s) {
  std::size_t i = 0;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
  std::size_t digits = 0;
  while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i, ++digits;
  if (digits == 0) return false;
  if (i == s.size()) return true;
  if (s[i] != '.') return false;
  ++i;
  digits = 0;
  while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i, ++digits;
  return digits > 0 && i == s.size();
}

std::string lexical_of(const AttributeValue& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Decimal>) return x.text();
        else if constexpr (std::is_same_v<T, QualifiedName>) return x.prefix() + ":" + x.local();
        else return x.value;
      },
      v.storage());
}

std::optional<std::string> numeric_of(const AttributeValue& v) {
  if (auto* d = std::get_if<Decimal>(&v.storage())) return d->text();
  if (auto* t = std::get_if<Text>(&v.storage()); t && decimal_text(t->value)) return t->value;
  return std::nullopt;
}

bool equal_values(const AttributeValue& a, const AttributeValue& b) {
  auto na = numeric_of(a), nb = numeric_of(b);
  if (na && nb) return compare_decimal_text(*na, *nb) == 0;
  return lexical_of(a) == lexical_of(b);
}

bool filter_holds(const query::AttrFilter& f, const Attributes& attrs) {
  using query::Comparator;
  std::vector<const AttributeValue*> vals;
  for (const auto& a : attrs) {
    if (a.key == f.key) vals.push_back(&a.value);
  }
  auto any = [&](auto pred) { return std::any_of(vals.begin(), vals.end(), [&](auto* v) { return pred(*v); }); };
  switch (f.op) {
    case Comparator::Exists: return !vals.empty();
    case Comparator::Eq: return any([&](const AttributeValue& v) { return equal_values(v, f.value); });
    case Comparator::Ne:
      return !vals.empty() && !any([&](const AttributeValue& v) { return equal_values(v, f.value); });
    case Comparator::Contains:
      return any([&](const AttributeValue& v) { return lexical_of(v).find(lexical_of(f.value)) != std::string::npos; });
    default: {
      auto rhs = numeric_of(f.value);
      if (!rhs) return false;
      return any([&](const AttributeValue& v) {
        auto lhs = numeric_of(v);
        if (!lhs) return false;
        int c = compare_decimal_text(*lhs, *rhs);
        switch (f.op) {
          case Comparator::Lt: return c < 0;
          case Comparator::Le: return c <= 0;
          case Comparator::Gt: return c > 0;
          case Comparator::Ge: return c >= 0;
          default: return false;
        }
      });
    }
  }
}

QualifiedName canonical_term(const terms::Registry& reg, QualifiedName t) {
  const auto& m = reg.mappings();
  for (int hops = 0; hops < 64; ++hops) {
    auto it = m.find(t);
    if (it == m.end()) break;
    t = it->second;
  }
  return t;
}

/// Attributes as a query sees them: each source-term type gains its canonical term.
Attributes with_canonical_types(const terms::Registry& reg, const Attributes& attrs) {
  Attributes out = attrs;
  for (const auto& a : attrs) {
    if (a.key.prefix() != "prov" || a.key.local() != "type") continue;
    auto* t = std::get_if<QualifiedName>(&a.value.storage());
    if (!t) continue;
    out.push_back({a.key, canonical_term(reg, *t)});
  }
  return out;
}

bool record_filter_holds(const terms::Registry& reg, const query::RecordFilter& f, const Attributes& raw) {
  auto attrs = with_canonical_types(reg, raw);
  for (const auto& want : f.types) {
    auto c = canonical_term(reg, want);
    bool found = std::any_of(attrs.begin(), attrs.end(), [&](const Attribute& a) {
      auto* t = std::get_if<QualifiedName>(&a.value.storage());
      return a.key.prefix() == "prov" && a.key.local() == "type" && t && *t == c;
    });
    if (!found) return false;
  }
  return std::all_of(f.attrs.begin(), f.attrs.end(), [&](const auto& af) { return filter_holds(af, attrs); });
}

bool active_voice(RelationKind k) {
  return k == RelationKind::Used || k == RelationKind::HadMember || k == RelationKind::ActedOnBehalfOf;
}

bool path_holds(const Document& doc, const terms::Registry& reg, const std::string& start,
                const query::PathConstraint& p) {
  std::set<std::string> frontier{start};
  for (const auto& step : p.chain) {
    const bool subject_first = active_voice(step.kind) == (step.direction == query::Direction::Forward);
    std::set<std::string> next;
    for (const auto& rec : doc.records()) {
      auto* r = std::get_if<Relation>(&rec);
      if (!r || r->kind != step.kind) continue;
      const auto& from = subject_first ? r->subject : r->object;
      const auto& to = subject_first ? r->object : r->subject;
      if (frontier.contains(from)) next.insert(to);
    }
    frontier = std::move(next);
  }
  for (const auto& id : frontier) {
    for (const auto& rec : doc.records()) {
      if (std::holds_alternative<Relation>(rec) || record_id(rec) != id) continue;
      if (p.target && category_of(rec) != *p.target) continue;
      if (record_filter_holds(reg, p.filter, record_attributes(rec))) return true;
    }
  }
  return false;
}

}  // namespace

int compare_decimal_text(const std::string& a, const std::string& b) {
  auto split = [](const std::string& s) {
    bool neg = !s.empty() && s[0] == '-';
    std::string body = (!s.empty() && (s[0] == '-' || s[0] == '+')) ? s.substr(1) : s;
    auto dot = body.find('.');
    std::string ip = body.substr(0, dot);
    std::string fp = dot == std::string::npos ? "" : body.substr(dot + 1);
    ip.erase(0, std::min(ip.find_first_not_of('0'), ip.size()));
    while (!fp.empty() && fp.back() == '0') fp.pop_back();
    if (ip.empty() && fp.empty()) neg = false;
    return std::tuple{neg, ip, fp};
  };
  auto [na, ia, fa] = split(a);
  auto [nb, ib, fb] = split(b);
  if (na != nb) return na ? -1 : 1;
  int mag = 0;
  if (ia.size() != ib.size()) {
    mag = ia.size() < ib.size() ? -1 : 1;
  } else if (ia != ib) {
    mag = ia < ib ? -1 : 1;
  } else {
    auto n = std::max(fa.size(), fb.size());
    fa.resize(n, '0');
    fb.resize(n, '0');
    mag = fa == fb ? 0 : (fa < fb ? -1 : 1);
  }
  return na ? -mag : mag;
}

std::vector<Hit> brute_force_query(const std::map<std::string, Document>& sources, const terms::Registry& reg,
                                   const query::Query& q) {
  std::set<Hit> hits;
  for (const auto& [tag, doc] : sources) {
    for (const auto& rec : doc.records()) {
      if (category_of(rec) != q.select) continue;
      if (!record_filter_holds(reg, q.filter, record_attributes(rec))) continue;
      const auto& id = record_id(rec);
      bool ok = std::all_of(q.paths.begin(), q.paths.end(),
                            [&](const auto& p) { return path_holds(doc, reg, id, p); });
      if (ok) hits.insert({tag, id});
    }
  }
  return {hits.begin(), hits.end()};
}

ClosureSet brute_force_closure(const Document& doc, const std::string& id) {
  std::set<std::string> known;
  for (const auto& rec : doc.records()) {
    if (!std::holds_alternative<Relation>(rec)) known.insert(record_id(rec));
  }
  ClosureSet out;
  out.ids.insert(id);
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& rec : doc.records()) {
      auto* r = std::get_if<Relation>(&rec);
      if (!r || !out.ids.contains(r->subject)) continue;
      for (const auto* next : {&r->object, r->plan ? &*r->plan : nullptr}) {
        if (next && known.contains(*next) && out.ids.insert(*next).second) changed = true;
      }
    }
  }
  for (std::size_t i = 0; i < doc.records().size(); ++i) {
    auto* r = std::get_if<Relation>(&doc.records()[i]);
    if (!r) continue;
    if (out.ids.contains(r->subject) && out.ids.contains(r->object) && (!r->plan || out.ids.contains(*r->plan))) {
      out.relations.insert(i);
    }
  }
  return out;
}

ClosureSet closure_set_of(const Document& source, const Document& closure) {
  ClosureSet out;
  std::set<std::size_t> used;
  for (const auto& rec : closure.records()) {
    if (!std::holds_alternative<Relation>(rec)) {
      out.ids.insert(record_id(rec));
      continue;
    }
    for (std::size_t i = 0; i < source.records().size(); ++i) {
      if (!used.contains(i) && source.records()[i] == rec) {
        used.insert(i);
        out.relations.insert(i);
        break;
      }
    }
  }
  return out;
}

std::string canonical_form(const Document& doc) {
  auto attrs_text = [](const Attributes& attrs) {
    std::vector<std::string> parts;
    for (const auto& a : attrs) {
      parts.push_back(a.key.str() + "=" + std::to_string(a.value.storage().index()) + ":" + lexical_of(a.value));
    }
    std::sort(parts.begin(), parts.end());
    std::string out;
    for (const auto& p : parts) out += p + ";";
    return out;
  };
  auto time_text = [](const std::optional<Timestamp>& t) { return t ? t->iso() : std::string("-"); };

  std::map<std::string, std::string> content;
  for (const auto& rec : doc.records()) {
    if (auto* a = std::get_if<Activity>(&rec)) {
      content[a->id] = "activity " + time_text(a->start) + " " + time_text(a->end) + " " + attrs_text(a->attributes);
    } else if (auto* e = std::get_if<Entity>(&rec)) {
      content[e->id] = "entity " + attrs_text(e->attributes);
    } else if (auto* g = std::get_if<Agent>(&rec)) {
      content[g->id] = "agent " + attrs_text(g->attributes);
    }
  }

  std::vector<const Relation*> rels;
  for (const auto& rec : doc.records()) {
    if (auto* r = std::get_if<Relation>(&rec)) rels.push_back(r);
  }

  std::map<std::string, std::string> label = content;
  for (int round = 0; round < 6; ++round) {
    std::map<std::string, std::vector<std::string>> around;
    for (const auto* r : rels) {
      auto extra = std::string(to_string(r->kind)) + " " + time_text(r->time) + " " + attrs_text(r->attributes);
      around[r->subject].push_back("out " + extra + " " + label[r->object]);
      around[r->object].push_back("in " + extra + " " + label[r->subject]);
      if (r->plan) around[*r->plan].push_back("plan " + extra + " " + label[r->subject]);
    }
    std::map<std::string, std::string> sig;
    for (const auto& [id, l] : label) {
      auto& ns = around[id];
      std::sort(ns.begin(), ns.end());
      std::string s = content[id] + " |";
      for (const auto& n : ns) s += " {" + n + "}";
      sig[id] = s;
    }
    std::vector<std::string> distinct;
    for (const auto& [id, s] : sig) distinct.push_back(s);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    for (auto& [id, l] : label) {
      l = "n" + std::to_string(std::lower_bound(distinct.begin(), distinct.end(), sig[id]) - distinct.begin());
    }
  }

  std::vector<std::string> lines;
  for (const auto& [id, c] : content) lines.push_back(label[id] + " " + c);
  for (const auto* r : rels) {
    lines.push_back(std::string(to_string(r->kind)) + "(" + label[r->subject] + ", " + label[r->object] + ", " +
                    (r->plan ? label[*r->plan] : "-") + ", " + time_text(r->time) + ") " + attrs_text(r->attributes));
  }
  std::sort(lines.begin(), lines.end());
  std::ostringstream out;
  for (const auto& [p, u] : doc.namespaces()) out << "prefix " << p << " " << u << "\n";
  for (const auto& l : lines) out << l << "\n";
  return out.str();
}

}  // namespace nidm::testing
