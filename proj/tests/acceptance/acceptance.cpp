// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "generator.hpp"
#include "httplib.h"
#include "json.hpp"
#include "nidm/error.hpp"
#include "nidm/api.hpp"
#include "nidm/codecs.hpp"
#include "nidm/extractors.hpp"
#include "nidm/mediator.hpp"
#include "nidm/store.hpp"
#include "nidm/validate.hpp"
#include "oracles.hpp"

using namespace nidm;
using namespace std::chrono_literals;
namespace t = nidm::testing;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

/// Collects the first few failures of a criterion.
struct Checker {
  Outcome out;
  int failures = 0;
  void expect(bool cond, const std::string& what) {
    if (cond) return;
    out.ok = false;
    if (++failures <= 3) out.detail += (out.detail.empty() ? "" : "; ") + what;
  }
};

std::size_t typed(const Document& doc, const QualifiedName& want) {
  std::size_t n = 0;
  for (const auto& r : doc.records()) {
    if (category_of(r) != Category::Entity) continue;
    auto ts = prov_types(record_attributes(r));
    if (std::find(ts.begin(), ts.end(), want) != ts.end()) ++n;
  }
  return n;
}

std::size_t value_entities(const Document& doc) {
  std::size_t n = 0;
  for (const auto& r : doc.records()) {
    if (category_of(r) == Category::Entity && record_id(r).starts_with("value_")) ++n;
  }
  return n;
}

Outcome golden_fixture() {
  Checker c;
  auto doc = parse_provn(t::read_file(t::fixture_path("worked-example.provn")));
  auto report = validate(doc);
  c.expect(report.empty(), std::to_string(report.size()) + " violations");
  auto tally = [&](const char* what, std::size_t got, std::size_t want) {
    c.expect(got == want, std::string(what) + " " + std::to_string(got) + " != " + std::to_string(want));
  };
  tally("plans", typed(doc, QualifiedName("prov", "Plan")), 2);
  tally("values", value_entities(doc), 6);
  tally("collections", typed(doc, QualifiedName("prov", "Collection")), 2);
  tally("activities", doc.count(Category::Activity), 4);
  tally("agents", doc.count(Category::Agent), 4);
  tally("wasAssociatedWith", doc.count(RelationKind::WasAssociatedWith), 8);
  tally("hadMember", doc.count(RelationKind::HadMember), 4);
  tally("wasGeneratedBy", doc.count(RelationKind::WasGeneratedBy), 4);
  tally("records", doc.records().size(), 34);
  if (c.out.ok) c.out.detail = "34 records, 0 violations";
  return c.out;
}

Outcome round_trip() {
  Checker c;
  std::mt19937_64 rng(20120607);
  std::size_t records = 0;
  for (int i = 0; i < 1000; ++i) {
    auto doc = t::random_document(rng, {.max_records = 200});
    records += doc.records().size();
    auto text = serialize_provn(doc);
    auto back = parse_provn(text);
    c.expect(back == doc, "document " + std::to_string(i) + ": PROV-N parse differs");
    c.expect(serialize_provn(back) == text, "document " + std::to_string(i) + ": PROV-N bytes differ");
    c.expect(parse_xml(serialize_xml(doc)) == doc, "document " + std::to_string(i) + ": XML differs");
    c.expect(parse_json(serialize_json(doc)) == doc, "document " + std::to_string(i) + ": JSON differs");
  }
  if (c.out.ok) c.out.detail = "1000 documents, " + std::to_string(records) + " records";
  return c.out;
}

std::string squash(const std::string& s) {
  std::string out;
  bool gap = false;
  for (char ch : s) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      gap = true;
      continue;
    }
    if (gap && !out.empty() && out.back() != '>' && ch != '<') out += ' ';
    gap = false;
    out += ch;
  }
  return out;
}

Outcome spm_legacy_blocks() {
  Checker c;
  auto doc = extract::extract_spm_batch(t::read_file(t::fixture_path("spm-slice-timing.log")));
  auto xml = squash(serialize_xml(doc, XmlMode::SpmLegacy));
  const char* blocks[] = {
      R"(<prov:activity prov:id="a_1">
  <prov:startTime>07-Jun-2012 14:06:39</prov:startTime>
  <prov:endTime>07-Jun-2012 14:09:00</prov:endTime>
  <prov:label>matlabbatch{2}.spm.temporal.st</prov:label>
</prov:activity>)",
      R"(<prov:entity prov:id="e_30">
  <prov:type xsi:type="xsd:string">parameter</prov:type>
  <ni:name xsi:type="xsd:string">par: tr</ni:name>
  <ni:value xsi:type="xsd:string">2</ni:value>
</prov:entity>)",
      R"(<prov:used prov:id="u_20">
  <prov:activity prov:ref="a_1"/>
  <prov:entity prov:ref="e_30"/>
</prov:used>)",
  };
  const char* names[] = {"activity a_1", "entity e_30", "used u_20"};
  for (int i = 0; i < 3; ++i) c.expect(xml.find(squash(blocks[i])) != std::string::npos, std::string(names[i]) + " block missing");
  if (c.out.ok) c.out.detail = "3 blocks found";
  return c.out;
}

std::set<std::pair<std::string, std::string>> keys(const ResultSet& rs) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& r : rs.rows) out.emplace(r.source, r.id);
  return out;
}

std::unique_ptr<Store> halves_store() {
  auto s = std::make_unique<Store>(t::fixture_registry());
  s->ingest("hid", t::load_fixture("hid.provn"));
  s->ingest("xnat", t::load_fixture("xnat.provn"));
  return s;
}

Outcome harmonized_query() {
  Checker c;
  auto store = halves_store();
  auto& s = *store;
  auto hand = keys(s.run_query(t::kHandednessQuery));
  c.expect(hand == std::set<std::pair<std::string, std::string>>{{"hid", "value_1"}, {"xnat", "value_2"}},
           "handedness query returned " + std::to_string(hand.size()) + " rows");
  auto cols = keys(s.run_query(t::kT1CollectionQuery));
  c.expect(cols == std::set<std::pair<std::string, std::string>>{{"hid", "collection_1"}, {"xnat", "collection_2"}},
           "T1 collection query returned " + std::to_string(cols.size()) + " rows");
  std::set<std::string> m1, m2;
  for (const auto& r : s.members("collection_1").rows) m1.insert(r.id);
  for (const auto& r : s.members("collection_2").rows) m2.insert(r.id);
  c.expect(m1 == std::set<std::string>{"value_3", "value_4"}, "collection_1 members differ");
  c.expect(m2 == std::set<std::string>{"value_5", "value_6"}, "collection_2 members differ");
  if (c.out.ok) c.out.detail = "2 handedness rows, members {value_3,value_4} and {value_5,value_6}";
  return c.out;
}

Outcome query_oracle() {
  Checker c;
  auto reg = t::fixture_registry();
  std::mt19937_64 rng(2012);
  auto derived = t::derived_fixture(rng, 500);

  std::vector<std::pair<std::string, std::map<std::string, Document>>> fixtures{
      {"halves", {{"hid", t::load_fixture("hid.provn")}, {"xnat", t::load_fixture("xnat.provn")}}},
      {"worked-example", {{"wx", t::load_fixture("worked-example.provn")}}},
      {"derived", {{"site", derived.doc}}},
      {"random", {{"r1", t::random_document(rng)}, {"r2", t::random_document(rng)}}},
  };
  auto corpus = t::query_corpus();
  std::size_t runs = 0, rows = 0;
  for (const auto& [name, docs] : fixtures) {
    std::size_t size = 0;
    for (const auto& [tag, d] : docs) size += d.records().size();
    c.expect(size <= 10000, name + " has " + std::to_string(size) + " records");
    Store s(reg);
    for (const auto& [tag, d] : docs) s.ingest(tag, d);
    for (const auto& text : corpus) {
      auto q = query::parse_query(text);
      std::vector<t::Hit> got;
      for (const auto& r : s.run_query(q).rows) got.push_back({r.source, r.id});
      auto want = t::brute_force_query(docs, reg, q);
      c.expect(got == want, name + ": '" + text + "' " + std::to_string(got.size()) + " rows, oracle " +
                                std::to_string(want.size()));
      ++runs;
      rows += got.size();
    }
  }

  Store s(reg);
  s.ingest("site", derived.doc);
  auto ids = [&](const char* text) {
    std::set<std::string> out;
    for (const auto& r : s.run_query(text).rows) out.insert(r.id);
    return out;
  };
  c.expect(ids(t::kPutamenQuery) == derived.young_large_putamen, "putamen shape misses planted subjects");
  c.expect(ids(t::kCorticalQuery) == derived.young_cortical_fs5, "cortical shape misses planted volumes");
  c.expect(ids(t::kCaudateQuery) == derived.low_mmse_caudate, "MMSE/caudate shape misses planted volumes");
  if (c.out.ok) {
    c.out.detail = std::to_string(corpus.size()) + " queries x " + std::to_string(fixtures.size()) + " fixtures, " +
                   std::to_string(rows) + " rows; planted " + std::to_string(derived.young_large_putamen.size()) +
                   "/" + std::to_string(derived.young_cortical_fs5.size()) + "/" +
                   std::to_string(derived.low_mmse_caudate.size());
  }
  (void)runs;
  return c.out;
}

std::unique_ptr<api::Service> serve(const std::string& tag, const std::string& file, const terms::Registry& reg) {
  auto store = std::make_shared<Store>(reg);
  store->ingest(tag, t::load_fixture(file));
  api::ApiConfig cfg;
  cfg.port = 0;
  return api::Service::start(cfg, store);
}

Outcome federation() {
  Checker c;
  auto reg = t::fixture_registry();
  auto hid = serve("hid", "hid.provn", reg);
  auto xnat = serve("xnat", "xnat.provn", reg);
  auto local = halves_store();
  std::vector<mediate::EndpointDescriptor> eps{{"hid", hid->base_url(), 5000ms, {}},
                                               {"xnat", xnat->base_url(), 5000ms, {}}};
  auto normalized = [](const mediate::FederatedResult& fed) {
    std::set<std::pair<std::string, std::string>> out;
    for (const auto& r : fed.rows) out.emplace(r.endpoint == r.source ? r.endpoint : r.endpoint + "." + r.source, r.id);
    return out;
  };
  auto corpus = t::query_corpus();
  std::size_t rows = 0;
  for (const auto& text : corpus) {
    auto q = query::parse_query(text);
    auto fed = mediate::federated_query(eps, q, {.registry = reg});
    auto want = keys(local->run_query(q));
    c.expect(normalized(fed) == want, "'" + text + "' differs from local store");
    c.expect(fed.per_source.at("hid").ok && fed.per_source.at("xnat").ok, "'" + text + "' endpoint failed");
    rows += want.size();
  }

  xnat->stop();
  for (const auto& text : corpus) {
    auto q = query::parse_query(text);
    auto fed = mediate::federated_query(eps, q, {.registry = reg});
    std::set<std::pair<std::string, std::string>> want;
    for (const auto& k : keys(local->run_query(q))) {
      if (k.first == "hid") want.insert(k);
    }
    c.expect(normalized(fed) == want, "'" + text + "' after kill: rows differ from surviving source");
    const auto& st = fed.per_source.at("xnat");
    c.expect(!st.ok && !st.error.empty(), "'" + text + "' after kill: no error entry for xnat");
    c.expect(fed.per_source.at("hid").ok, "'" + text + "' after kill: hid reported failing");
  }
  hid->stop();
  if (c.out.ok) c.out.detail = std::to_string(corpus.size()) + " queries, " + std::to_string(rows) + " rows; kill run clean";
  return c.out;
}

Outcome api_formats() {
  Checker c;
  auto reg = t::fixture_registry();
  auto golden = t::load_fixture("worked-example.provn");
  auto harmonized = terms::harmonize(reg, golden);
  auto svc = serve("wx", "worked-example.provn", reg);
  httplib::Client http("127.0.0.1", svc->port());

  auto fetch = [&](const std::string& path, Format f) -> std::optional<Document> {
    auto res = http.Get(path + (path.find('?') == std::string::npos ? "?" : "&") + "format=" + std::string(to_string(f)));
    if (!res || res->status != 200) return std::nullopt;
    return parse_document(res->body, f);
  };
  const char* segment[] = {"entities", "activities", "agents"};
  std::size_t checked = 0;
  for (std::size_t i = 0; i < golden.records().size(); ++i) {
    const auto& rec = golden.records()[i];
    if (category_of(rec) == Category::Relation) continue;
    const auto& id = record_id(rec);
    auto path = "/v1/" + std::string(segment[static_cast<int>(category_of(rec))]) + "/" + id;
    auto p = fetch(path, Format::Provn), x = fetch(path, Format::Xml), j = fetch(path, Format::Json);
    if (!p || !x || !j) {
      c.expect(false, id + ": request failed");
      continue;
    }
    c.expect(p->records() == x->records() && p->records() == j->records(), id + ": formats disagree");
    c.expect(p->records().size() == 1 && p->records()[0] == harmonized.records()[i], id + ": not the stored record");
    const auto& orig = record_attributes(rec);
    const auto& got = record_attributes(p->records()[0]);
    c.expect(got.size() >= orig.size() && std::equal(orig.begin(), orig.end(), got.begin()),
             id + ": original attributes changed");
    ++checked;
  }

  // relation ids are optional and may repeat: each id route returns every relation
  // carrying it, and the listing covers the relations without one
  std::map<std::string, std::vector<Record>> by_rel_id;
  for (const auto& r : harmonized.records()) {
    if (auto* rel = std::get_if<Relation>(&r); rel && rel->rel_id) by_rel_id[*rel->rel_id].push_back(r);
  }
  for (const auto& [rid, want] : by_rel_id) {
    auto path = "/v1/relations/" + rid;
    auto p = fetch(path, Format::Provn), x = fetch(path, Format::Xml), j = fetch(path, Format::Json);
    if (!p || !x || !j) {
      c.expect(false, rid + ": request failed");
      continue;
    }
    c.expect(p->records() == x->records() && p->records() == j->records(), rid + ": formats disagree");
    c.expect(p->records() == want, rid + ": not the stored relations");
  }

  auto p = fetch("/v1/relations?pageSize=1000", Format::Provn);
  auto x = fetch("/v1/relations?pageSize=1000", Format::Xml);
  auto envelope = http.Get("/v1/relations?pageSize=1000&format=json");
  if (!p || !x || !envelope || envelope->status != 200) {
    c.expect(false, "relation listing failed");
  } else {
    c.expect(p->records() == x->records(), "relation listing: provn and xml disagree");
    auto doc = parse_json(nlohmann::json::parse(envelope->body)["document"].dump());
    c.expect(p->records() == doc.records(), "relation listing: provn and json disagree");
    std::vector<Record> want;
    for (const auto& r : harmonized.records()) {
      if (auto* rel = std::get_if<Relation>(&r)) {
        Relation copy = *rel;
        copy.subject = "wx." + copy.subject;
        copy.object = "wx." + copy.object;
        if (copy.plan) copy.plan = "wx." + *copy.plan;
        want.push_back(copy);
      }
    }
    c.expect(p->records() == want, "relation listing differs from the fixture");
    checked += want.size();
  }
  svc->stop();
  if (c.out.ok) {
    c.out.detail = std::to_string(checked) + " records agree in provn, xml and json; " +
                   std::to_string(by_rel_id.size()) + " relation ids fetched";
  }
  return c.out;
}

Outcome replay_closure() {
  Checker c;
  auto first = extract::extract_spm_batch(t::read_file(t::fixture_path("spm-chained.log")));
  c.expect(validate(first).empty(), "chained extraction is invalid");
  auto steps = extract::replay_plan(first);
  auto log = extract::regenerate_spm_log(steps);
  auto second = extract::extract_spm_batch(log);
  c.expect(t::canonical_form(first) == t::canonical_form(second), "re-extracted document is not isomorphic");
  c.expect(extract::replay_plan(second) == steps, "replay plans differ");
  if (c.out.ok) {
    c.out.detail = std::to_string(steps.size()) + " steps, " + std::to_string(first.records().size()) + " records";
  }
  return c.out;
}

}  // namespace

int main() {
  struct Criterion {
    int number;
    const char* name;
    std::function<Outcome()> run;
    std::chrono::milliseconds budget;
  };
  const Criterion criteria[] = {
      {1, "golden fixture fidelity", golden_fixture, 1000ms},
      {2, "randomized round-trip", round_trip, 30000ms},
      {3, "SPM legacy XML blocks", spm_legacy_blocks, 0ms},
      {4, "harmonized query", harmonized_query, 0ms},
      {5, "query engine vs full scan", query_oracle, 60000ms},
      {6, "federation equivalence", federation, 60000ms},
      {7, "API format agreement", api_formats, 0ms},
      {8, "replay closure", replay_closure, 0ms},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0);
    if (cr.budget.count() > 0 && ms > cr.budget) {
      o.ok = false;
      o.detail += (o.detail.empty() ? "" : "; ") + std::string("over the ") + std::to_string(cr.budget.count()) +
                  " ms budget";
    }
    std::cout << "criterion " << cr.number << " " << (o.ok ? "PASS" : "FAIL") << "  " << cr.name << "  ("
              << o.detail << ", " << ms.count() << " ms)" << std::endl;
    if (!o.ok) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
