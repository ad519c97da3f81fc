#include "nidm/store.hpp"

#include <algorithm>
#include <set>

#include "nidm/error.hpp"
#include "nidm/validate.hpp"

namespace nidm {

namespace {

std::size_t kind_index(RelationKind k) { return static_cast<std::size_t>(k); }

bool filter_matches(const Attributes& attrs, const query::RecordFilter& f, const terms::Registry& reg) {
  if (!f.types.empty()) {
    auto types = prov_types(attrs);
    for (const auto& t : f.types) {
      const auto& want = reg.resolve(t);
      if (std::find(types.begin(), types.end(), want) == types.end()) return false;
    }
  }
  for (const auto& a : f.attrs) {
    if (!query::holds(a, attrs)) return false;
  }
  return true;
}

bool path_holds(const SourceSnapshot& src, const std::string& start, const query::PathConstraint& p,
                const terms::Registry& reg) {
  std::set<std::string> frontier{start};
  for (const auto& step : p.chain) {
    std::set<std::string> next;
    for (const auto& id : frontier) {
      for (const auto& n : src.neighbours(id, step.kind, step.direction)) next.insert(n);
    }
    if (next.empty()) return false;
    frontier = std::move(next);
  }
  const auto& doc = src.document();
  for (const auto& id : frontier) {
    const Record* r = doc.lookup(id);
    if (!r) continue;
    if (p.target && category_of(*r) != *p.target) continue;
    if (filter_matches(record_attributes(*r), p.filter, reg)) return true;
  }
  return false;
}

ResultRow make_row(const SourceSnapshot& src, std::size_t pos) {
  const auto& r = src.document().records()[pos];
  std::string id;
  if (const auto* rel = std::get_if<Relation>(&r)) {
    id = rel->rel_id.value_or("");
  } else {
    id = record_id(r);
  }
  return ResultRow{src.tag(), std::move(id), pos, r};
}

void finish(ResultSet& rs, const StoreState& state, std::size_t cap, bool by_position) {
  std::sort(rs.rows.begin(), rs.rows.end(), [by_position](const ResultRow& a, const ResultRow& b) {
    if (a.source != b.source) return a.source < b.source;
    if (by_position) return a.position < b.position;
    return a.id < b.id;
  });
  rs.total = rs.rows.size();
  if (rs.rows.size() > cap) {
    rs.rows.resize(cap);
    rs.truncated = true;
  }
  for (const auto& row : rs.rows) {
    if (!rs.namespaces.contains(row.source)) {
      rs.namespaces.emplace(row.source, state.sources.at(row.source)->document().namespaces());
    }
  }
}

}  // namespace

SourceSnapshot::SourceSnapshot(std::string tag, Document harmonized, std::size_t harmonized_count)
    : tag_(std::move(tag)), doc_(std::move(harmonized)) {
  summary_.source = tag_;
  summary_.harmonized = harmonized_count;
  const auto& recs = doc_.records();
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& r = recs[i];
    switch (category_of(r)) {
      case Category::Entity:
        ++summary_.entities;
        if (is_collection(std::get<Entity>(r))) ++summary_.collections;
        break;
      case Category::Activity: ++summary_.activities; break;
      case Category::Agent: ++summary_.agents; break;
      case Category::Relation: {
        ++summary_.relations;
        const auto& rel = std::get<Relation>(r);
        forward_[kind_index(rel.kind)][rel.subject].push_back(rel.object);
        backward_[kind_index(rel.kind)][rel.object].push_back(rel.subject);
        break;
      }
    }
    for (const auto& t : prov_types(record_attributes(r))) {
      auto& v = type_index_[t];
      if (v.empty() || v.back() != i) v.push_back(i);
    }
  }
}

const std::vector<std::size_t>* SourceSnapshot::with_type(const QualifiedName& t) const {
  auto it = type_index_.find(t);
  return it == type_index_.end() ? nullptr : &it->second;
}

const std::vector<std::string>& SourceSnapshot::neighbours(const std::string& id, RelationKind kind,
                                                           query::Direction dir) const {
  static const std::vector<std::string> none;
  const auto& adj = query::walks_subject_to_object(kind, dir) ? forward_[kind_index(kind)] : backward_[kind_index(kind)];
  auto it = adj.find(id);
  return it == adj.end() ? none : it->second;
}

bool record_matches(const SourceSnapshot& src, std::size_t position, const query::Query& q,
                    const terms::Registry& reg) {
  const auto& r = src.document().records()[position];
  if (category_of(r) != q.select) return false;
  if (!filter_matches(record_attributes(r), q.filter, reg)) return false;
  for (const auto& p : q.paths) {
    if (!path_holds(src, record_id(r), p, reg)) return false;
  }
  return true;
}

Store::Store(terms::Registry registry, StoreLimits limits)
    : registry_(std::move(registry)), limits_(limits), state_(std::make_shared<StoreState>()) {}

std::shared_ptr<const StoreState> Store::snapshot() const {
  std::lock_guard lock(state_mu_);
  return state_;
}

IngestSummary Store::ingest(const std::string& tag, const Document& doc) {
  require_valid(doc, "ingest " + tag);
  Document h = terms::harmonize(registry_, doc);
  auto added = terms::harmonized_count(doc, h);
  auto src = std::make_shared<const SourceSnapshot>(tag, std::move(h), added);

  std::lock_guard writer(write_mu_);
  auto next = std::make_shared<StoreState>(*snapshot());
  next->sources[tag] = src;
  {
    std::lock_guard lock(state_mu_);
    state_ = std::move(next);
  }
  return src->summary();
}

bool Store::remove(const std::string& tag) {
  std::lock_guard writer(write_mu_);
  auto next = std::make_shared<StoreState>(*snapshot());
  if (next->sources.erase(tag) == 0) return false;
  std::lock_guard lock(state_mu_);
  state_ = std::move(next);
  return true;
}

ResultSet Store::run_query(const query::Query& q) const {
  query::check_query(q, limits_.max_path_length);
  auto state = snapshot();
  ResultSet rs;
  for (const auto& [tag, src] : state->sources) {
    const auto& recs = src->document().records();
    std::vector<std::size_t> candidates;
    if (q.filter.types.empty()) {
      candidates.resize(recs.size());
      for (std::size_t i = 0; i < recs.size(); ++i) candidates[i] = i;
    } else {
      const auto* first = src->with_type(registry_.resolve(q.filter.types.front()));
      if (!first) continue;
      candidates = *first;
    }
    for (auto pos : candidates) {
      if (record_matches(*src, pos, q, registry_)) rs.rows.push_back(make_row(*src, pos));
    }
  }
  finish(rs, *state, limits_.max_results, false);
  return rs;
}

ResultSet Store::run_query(std::string_view text) const { return run_query(query::parse_query(text)); }

ResultSet Store::list_relations(const query::RecordFilter& filter) const {
  auto state = snapshot();
  ResultSet rs;
  for (const auto& [tag, src] : state->sources) {
    const auto& recs = src->document().records();
    for (std::size_t i = 0; i < recs.size(); ++i) {
      if (category_of(recs[i]) != Category::Relation) continue;
      if (filter_matches(record_attributes(recs[i]), filter, registry_)) rs.rows.push_back(make_row(*src, i));
    }
  }
  finish(rs, *state, limits_.max_results, true);
  return rs;
}

ResultSet Store::lookup(std::string_view id, const std::optional<std::string>& source) const {
  auto state = snapshot();
  ResultSet rs;
  for (const auto& [tag, src] : state->sources) {
    if (source && tag != *source) continue;
    if (auto pos = src->document().find(id)) rs.rows.push_back(make_row(*src, *pos));
  }
  finish(rs, *state, limits_.max_results, false);
  return rs;
}

ResultSet Store::members(std::string_view collection_id, const std::optional<std::string>& source) const {
  auto state = snapshot();
  ResultSet rs;
  bool found = false;
  bool collection = false;
  const std::string id(collection_id);
  for (const auto& [tag, src] : state->sources) {
    if (source && tag != *source) continue;
    const auto& doc = src->document();
    const Record* r = doc.lookup(id);
    if (!r) continue;
    found = true;
    const auto* e = std::get_if<Entity>(r);
    if (!e || !is_collection(*e)) continue;
    collection = true;
    std::set<std::string> seen;
    for (const auto& m : src->neighbours(id, RelationKind::HadMember, query::Direction::Forward)) {
      if (!seen.insert(m).second) continue;
      if (auto pos = doc.find(m)) rs.rows.push_back(make_row(*src, *pos));
    }
  }
  if (!found) throw UnknownId(id, source ? "no record in source " + *source : "no record in any source");
  if (!collection) throw NotACollection(id);
  finish(rs, *state, limits_.max_results, false);
  return rs;
}

}  // namespace nidm
