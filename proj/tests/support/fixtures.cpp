#include "fixtures.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "nidm/api.hpp"

namespace nidm::testing {

std::filesystem::path fixture_path(const std::string& name) { return std::filesystem::path(NIDM_FIXTURE_DIR) / name; }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Document load_fixture(const std::string& name) { return api::load_document(fixture_path(name)); }

terms::Registry fixture_registry() { return terms::load_registry(fixture_path("registry.terms")); }

namespace {

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}
bool coin(std::mt19937_64& rng, double p) { return std::bernoulli_distribution(p)(rng); }

/// Hundredths, printed as the shortest exact decimal literal.
std::string cents(long v) {
  std::string s = std::to_string(v / 100);
  if (v % 100) {
    auto frac = std::to_string(100 + v % 100).substr(1);
    if (frac.back() == '0') frac.pop_back();
    s += "." + frac;
  }
  return s;
}

QualifiedName q(const char* p, const char* l) { return QualifiedName(p, l); }
Attribute type(const char* p, const char* l) { return {prov_type_key(), q(p, l)}; }
Attribute value(const std::string& literal) { return {q("prov", "value"), Decimal(literal)}; }

}  // namespace

DerivedFixture derived_fixture(std::mt19937_64& rng, std::size_t participants) {
  NamespaceMap ns{
      {"prov", "http://www.w3.org/ns/prov#"},
      {"nidm", "http://www.incf.org/ns/nidash/nidm#"},
      {"neurolex", "http://neurolex.org/wiki/"},
      {"hid", "http://www.birncommunity.org/ns/hid#"},
      {"xnat", "http://www.xnat.org/ns/xnat#"},
      {"fs", "http://surfer.nmr.mgh.harvard.edu/fs/terms#"},
      {"fsl", "http://www.fmrib.ox.ac.uk/fsl/terms#"},
  };
  DerivedFixture fx;
  std::vector<Record> recs;
  recs.push_back(Agent{"operator_1", {type("prov", "Person"), {q("prov", "label"), Text{"Analyst"}}}});

  const char* diagnoses[] = {"Control", "Autism", "Alzheimer", "MCI"};
  const char* scan_types[][2] = {{"neurolex", "T1"}, {"hid", "spgr"}, {"xnat", "mprage"}};
  const std::pair<const char*, int> fs_versions[] = {{"4.5", 45}, {"4.9", 49}, {"5", 50}, {"5.0", 50},
                                                     {"5.3", 53}, {"6.0", 60}};
  const std::pair<const char*, int> fsl_versions[] = {{"3.9", 39}, {"4", 40}, {"4.0", 40}, {"4.1", 41}, {"5.0", 50}};
  const int edge_ages[] = {14, 15, 17, 18};

  for (std::size_t i = 1; i <= participants; ++i) {
    const auto n = std::to_string(i);
    const int age = coin(rng, 0.2) ? edge_ages[pick(rng, 4)] : 6 + static_cast<int>(pick(rng, 75));
    const auto subj = "subj_" + n;
    recs.push_back(Agent{subj,
                         {type("prov", "Person"), type("neurolex", "Participant"),
                          {q("nidm", "age"), Decimal(std::to_string(age))},
                          {q("nidm", "diagnosis"), Text{diagnoses[pick(rng, 4)]}}}});

    bool low_mmse = false;
    if (coin(rng, 0.8)) {
      const int score = coin(rng, 0.15) ? 26 : 10 + static_cast<int>(pick(rng, 21));
      low_mmse = score < 26;
      recs.push_back(Entity{"mmse_" + n, {type("nidm", "MMSE"), value(std::to_string(score))}});
      recs.push_back(Relation{RelationKind::WasAttributedTo, std::nullopt, "mmse_" + n, subj, {}, {}, {}});
    }

    const auto scan = "scan_" + n;
    const auto& st = scan_types[pick(rng, 3)];
    recs.push_back(Entity{scan,
                          {type("nidm", "acquisition"), type(st[0], st[1]),
                           {q("prov", "location"), Uri{"http://example.org/scans/" + n + ".nii"}}}});
    recs.push_back(Relation{RelationKind::WasAttributedTo, std::nullopt, scan, subj, {}, {}, {}});

    const std::size_t fs_runs = pick(rng, 3);
    for (std::size_t k = 1; k <= fs_runs; ++k) {
      const auto tag = n + "_" + std::to_string(k);
      const auto& [vtext, vnum] = fs_versions[pick(rng, std::size(fs_versions))];
      const auto run = "fs_" + tag;
      recs.push_back(Activity{run, {}, {}, {type("fs", "FreeSurfer"), {q("fs", "version"), Decimal(vtext)}}});
      recs.push_back(Relation{RelationKind::Used, std::nullopt, run, scan, {}, {}, {}});
      recs.push_back(Relation{RelationKind::WasAssociatedWith, std::nullopt, run, "operator_1", {}, {}, {}});

      const long putamen = coin(rng, 0.1) ? 600000 : 400000 + static_cast<long>(pick(rng, 400000));
      recs.push_back(Entity{"lpv_" + tag, {type("fs", "left_putamen_volume"), value(cents(putamen))}});
      recs.push_back(Relation{RelationKind::WasGeneratedBy, std::nullopt, "lpv_" + tag, run, {}, {}, {}});
      if (age < 18 && putamen > 600000) fx.young_large_putamen.insert(subj);

      const long cortex = 45000000 + static_cast<long>(pick(rng, 10000000));
      recs.push_back(Entity{"ctx_" + tag, {type("fs", "cortical_volume"), value(cents(cortex))}});
      recs.push_back(Relation{RelationKind::WasGeneratedBy, std::nullopt, "ctx_" + tag, run, {}, {}, {}});
      if (age < 15 && vnum >= 50) fx.young_cortical_fs5.insert("ctx_" + tag);
    }

    if (coin(rng, 0.6)) {
      const auto& [vtext, vnum] = fsl_versions[pick(rng, std::size(fsl_versions))];
      const auto run = "fast_" + n;
      recs.push_back(Activity{run, {}, {}, {type("fsl", "FAST"), {q("fsl", "version"), Decimal(vtext)}}});
      recs.push_back(Relation{RelationKind::Used, std::nullopt, run, scan, {}, {}, {}});
      const long caudate = 300000 + static_cast<long>(pick(rng, 150000));
      recs.push_back(Entity{"caud_" + n, {type("fsl", "caudate_volume"), value(cents(caudate))}});
      recs.push_back(Relation{RelationKind::WasGeneratedBy, std::nullopt, "caud_" + n, run, {}, {}, {}});
      // a large putamen estimate from FSL; not a FreeSurfer result
      recs.push_back(Entity{"fslput_" + n, {type("fsl", "left_putamen_volume"), value("7000")}});
      recs.push_back(Relation{RelationKind::WasGeneratedBy, std::nullopt, "fslput_" + n, run, {}, {}, {}});
      if (vnum >= 40 && low_mmse) fx.low_mmse_caudate.insert("caud_" + n);
    }
  }
  fx.doc = Document(std::move(ns), std::move(recs));
  fx.registry = fixture_registry();
  return fx;
}

std::vector<std::string> query_corpus() {
  std::vector<std::string> c{
      kHandednessQuery,
      kT1CollectionQuery,
      kPutamenQuery,
      kCorticalQuery,
      kCaudateQuery,
      // worked example shapes
      "select entity where type=neurolex:T1",
      "select entity where type=hid:spgr",
      "select activity where type=neurolex:T1",
      "select activity where type=nidm:acquisition",
      "select agent where type=prov:Person",
      "select entity where type=prov:Collection",
      "select entity where type=prov:Plan",
      "select entity where attr[prov:value]",
      "select entity where attr[prov:value] != neurolex:right_handed",
      "select entity where attr[prov:label] contains \"Form\"",
      "select entity where attr[nidm:url] contains \"http\"",
      "select entity where attr[prov:type] = neurolex:Handedness",
      "select activity where attr[prov:type] != nidm:acquisition",
      "select activity where path(wasAssociatedWith.backward -> agent[type=prov:Person])",
      "select activity where path(wasAssociatedWith.forward -> agent)",
      "select agent where path(wasAssociatedWith.forward -> activity[type=neurolex:T1])",
      "select entity where path(wasGeneratedBy.backward -> activity[type=neurolex:Handedness])",
      "select entity where path(hadMember.backward -> entity[type=prov:Collection])",
      "select entity where path(hadMember.backward -> wasGeneratedBy.backward -> wasAssociatedWith.backward -> agent)",
      "select activity where path(wasGeneratedBy.forward -> hadMember.forward -> entity)",
      "select agent where path(wasAssociatedWith.forward -> wasGeneratedBy.forward -> any[attr[prov:value]])",
      // derived data
      "select agent where attr[nidm:age] < 18",
      "select agent where attr[nidm:age] <= 18",
      "select agent where attr[nidm:age] >= 65",
      "select agent where attr[nidm:age] = 15",
      "select agent where attr[nidm:age] != 15",
      "select agent where attr[nidm:diagnosis] = \"Autism\"",
      "select agent where attr[nidm:diagnosis] contains \"ut\"",
      "select entity where type=xnat:mprage",
      "select entity where type=neurolex:T1 and path(used.backward -> activity[type=fsl:FAST])",
      "select activity where type=fs:FreeSurfer and attr[fs:version] >= 5",
      "select activity where attr[fs:version] = 5",
      "select activity where type=fsl:FAST and attr[fsl:version] < 4",
      "select entity where type=fsl:left_putamen_volume and attr[prov:value] > 6000",
      "select agent where path(wasAttributedTo.forward -> entity[type=nidm:MMSE and attr[prov:value] < 26])",
      "select agent where path(wasAssociatedWith.forward -> activity[type=fs:FreeSurfer])",
      "select entity where path(wasGeneratedBy.backward -> used.forward -> entity[type=neurolex:T1])",
      "select activity where path(used.forward -> wasAttributedTo.backward -> agent[attr[nidm:age] >= 60])",
      "select agent where attr[nidm:age] < 18 and path(wasAttributedTo.forward -> used.backward -> "
      "activity[type=fs:FreeSurfer])",
      "select agent where path(wasAttributedTo.forward -> wasAttributedTo.backward -> wasAttributedTo.forward -> "
      "used.backward -> wasGeneratedBy.forward -> wasGeneratedBy.backward -> used.forward -> "
      "wasAttributedTo.backward -> agent[attr[nidm:diagnosis] = \"Control\"])",
      "select entity where attr[prov:location] contains \"scans/1\"",
      "select entity where type=fs:cortical_volume and attr[prov:value] >= 500000",
  };
  for (const char* t : {"6000", "6000.0", "6500.5"}) {
    for (const char* op : {"<", "<=", ">", ">=", "=", "!="}) {
      c.push_back(std::string("select entity where type=fs:left_putamen_volume and attr[prov:value] ") + op + " " + t);
    }
  }
  return c;
}

}  // namespace nidm::testing
