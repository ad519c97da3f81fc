#include "nidm/validate.hpp"

#include <deque>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace nidm {
namespace {

struct Endpoints {
  Category subject;
  Category object;
};

Endpoints endpoints_for(RelationKind kind) {
  switch (kind) {
    case RelationKind::Used: return {Category::Activity, Category::Entity};
    case RelationKind::WasGeneratedBy: return {Category::Entity, Category::Activity};
    case RelationKind::WasDerivedFrom: return {Category::Entity, Category::Entity};
    case RelationKind::WasInformedBy: return {Category::Activity, Category::Activity};
    case RelationKind::WasAssociatedWith: return {Category::Activity, Category::Agent};
    case RelationKind::ActedOnBehalfOf: return {Category::Agent, Category::Agent};
    case RelationKind::WasAttributedTo: return {Category::Entity, Category::Agent};
    case RelationKind::HadMember: return {Category::Entity, Category::Entity};
  }
  return {Category::Entity, Category::Entity};
}

class Checker {
 public:
  explicit Checker(const Document& doc) : doc_(doc) {}

  ValidationReport run() {
    for (std::size_t i = 0; i < doc_.records().size(); ++i) {
      index_ = i;
      const auto& rec = doc_.records()[i];
      check_prefixes(record_attributes(rec));
      if (auto* act = std::get_if<Activity>(&rec)) {
        if (act->start && act->end && *act->start > *act->end) {
          add(ViolationCode::BadInterval, "activity '" + act->id + "' ends (" + act->end->iso() +
                                              ") before it starts (" + act->start->iso() + ")");
        }
      } else if (auto* rel = std::get_if<Relation>(&rec)) {
        check_relation(*rel);
      }
    }
    return std::move(report_);
  }

 private:
  void add(ViolationCode code, std::string message) { report_.push_back({index_, code, std::move(message)}); }

  void check_prefix(const QualifiedName& q) {
    if (!doc_.namespaces().contains(q.prefix())) {
      add(ViolationCode::UndeclaredPrefix, "prefix '" + q.prefix() + "' of '" + q.str() + "' is not declared");
    }
  }

  void check_prefixes(const Attributes& attrs) {
    for (const auto& a : attrs) {
      check_prefix(a.key);
      if (auto* t = a.value.term()) check_prefix(*t);
    }
  }

  const Record* endpoint(const Relation& rel, const std::string& id, Category want, std::string_view role) {
    const Record* target = doc_.lookup(id);
    if (!target) {
      add(ViolationCode::DanglingRef, std::string(to_string(rel.kind)) + " " + std::string(role) + " '" + id +
                                          "' does not resolve");
      return nullptr;
    }
    if (category_of(*target) != want) {
      add(ViolationCode::KindMismatch, std::string(to_string(rel.kind)) + " " + std::string(role) + " '" + id +
                                           "' is an " + std::string(to_string(category_of(*target))) +
                                           ", expected " + std::string(to_string(want)));
      return nullptr;
    }
    return target;
  }

  void check_relation(const Relation& rel) {
    auto ends = endpoints_for(rel.kind);
    const Record* subject = endpoint(rel, rel.subject, ends.subject, "subject");
    endpoint(rel, rel.object, ends.object, "object");
    if (rel.plan) {
      if (rel.kind != RelationKind::WasAssociatedWith) {
        add(ViolationCode::KindMismatch, std::string(to_string(rel.kind)) + " cannot carry a plan");
      } else {
        endpoint(rel, *rel.plan, Category::Entity, "plan");
      }
    }
    if (rel.time && !relation_has_time(rel.kind)) {
      add(ViolationCode::KindMismatch, std::string(to_string(rel.kind)) + " cannot carry a time");
    }
    if (rel.kind == RelationKind::HadMember && subject) {
      if (!is_collection(std::get<Entity>(*subject))) {
        add(ViolationCode::NotACollection,
            "hadMember subject '" + rel.subject + "' lacks prov:type prov:Collection");
      }
    }
  }

  const Document& doc_;
  ValidationReport report_;
  std::size_t index_ = 0;
};

}  // namespace

std::string_view to_string(ViolationCode code) {
  switch (code) {
    case ViolationCode::DanglingRef: return "DanglingRef";
    case ViolationCode::KindMismatch: return "KindMismatch";
    case ViolationCode::NotACollection: return "NotACollection";
    case ViolationCode::BadInterval: return "BadInterval";
    case ViolationCode::UndeclaredPrefix: return "UndeclaredPrefix";
  }
  return "?";
}

ValidationReport validate(const Document& doc) { return Checker(doc).run(); }

namespace {

std::string summarize(const ValidationReport& report, const std::string& context) {
  std::string msg = context.empty() ? "invalid document" : context;
  msg += ": " + std::to_string(report.size()) + " violation(s)";
  if (!report.empty()) {
    msg += "; first: [" + std::string(to_string(report.front().code)) + "] " + report.front().message;
  }
  return msg;
}

}  // namespace

InvalidDocument::InvalidDocument(ValidationReport report, const std::string& context)
    : Error("InvalidDocument", summarize(report, context)), report_(std::move(report)) {}

void require_valid(const Document& doc, const std::string& context) {
  auto report = validate(doc);
  if (!report.empty()) throw InvalidDocument(std::move(report), context);
}

Document provenance_closure(const Document& doc, std::string_view entity_id) {
  const Record* root = doc.lookup(entity_id);
  if (!root || category_of(*root) != Category::Entity) {
    throw UnknownId(std::string(entity_id), "no entity with id");
  }

  std::unordered_map<std::string, std::vector<const Relation*>> by_subject;
  for (const auto& rec : doc.records()) {
    if (auto* rel = std::get_if<Relation>(&rec)) by_subject[rel->subject].push_back(rel);
  }

  std::unordered_set<std::string> included{std::string(entity_id)};
  std::deque<std::string> work{std::string(entity_id)};
  auto visit = [&](const std::string& id) {
    if (doc.lookup(id) && included.insert(id).second) work.push_back(id);
  };

  while (!work.empty()) {
    auto id = work.front();
    work.pop_front();
    auto it = by_subject.find(id);
    if (it == by_subject.end()) continue;
    for (const Relation* rel : it->second) {
      switch (rel->kind) {
        case RelationKind::WasGeneratedBy:
        case RelationKind::WasDerivedFrom:
        case RelationKind::WasAttributedTo:
        case RelationKind::Used:
        case RelationKind::WasInformedBy:
        case RelationKind::ActedOnBehalfOf:
        case RelationKind::HadMember:
          visit(rel->object);
          break;
        case RelationKind::WasAssociatedWith:
          visit(rel->object);
          if (rel->plan) visit(*rel->plan);
          break;
      }
    }
  }

  std::vector<Record> kept;
  for (const auto& rec : doc.records()) {
    if (auto* rel = std::get_if<Relation>(&rec)) {
      bool inside = included.contains(rel->subject) && included.contains(rel->object) &&
                    (!rel->plan || included.contains(*rel->plan));
      if (inside) kept.push_back(rec);
    } else if (included.contains(record_id(rec))) {
      kept.push_back(rec);
    }
  }
  return Document(doc.namespaces(), std::move(kept));
}

}  // namespace nidm
