#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "nidm/error.hpp"
#include "nidm/query.hpp"

using namespace nidm;
using namespace nidm::query;

namespace {

QualifiedName qn(const char* s) { return *QualifiedName::parse(s); }

BadQuery bad(std::string_view text) {
  try {
    check_query(parse_query(text));
  } catch (const BadQuery& e) {
    return e;
  }
  ADD_FAILURE() << "accepted: " << text;
  return BadQuery("");
}

}  // namespace

TEST(QueryParse, FlagshipExample) {
  auto q = parse_query(
      "select entity where type=neurolex:T1 and attr[prov:value]>6000 "
      "and path(wasGeneratedBy.backward -> activity[type=fs:FreeSurfer])");
  EXPECT_EQ(q.select, Category::Entity);
  EXPECT_EQ(q.filter.types, std::vector<QualifiedName>{qn("neurolex:T1")});
  ASSERT_EQ(q.filter.attrs.size(), 1u);
  EXPECT_EQ(q.filter.attrs[0].op, Comparator::Gt);
  EXPECT_EQ(q.filter.attrs[0].value, AttributeValue(Decimal("6000")));
  ASSERT_EQ(q.paths.size(), 1u);
  EXPECT_EQ(q.paths[0].chain, (std::vector<PathStep>{{RelationKind::WasGeneratedBy, Direction::Backward}}));
  EXPECT_EQ(q.paths[0].target, Category::Activity);
  EXPECT_EQ(q.paths[0].filter.types, std::vector<QualifiedName>{qn("fs:FreeSurfer")});
}

TEST(QueryParse, OperatorSpellingsAndValues) {
  auto q = parse_query(
      "SELECT agent WHERE attr[a:x] ≠ 1 AND attr[a:y] <> 2 AND attr[a:z] ≤ 3 AND attr[a:w] ≥ 4 "
      "and attr[a:s] ~ \"sub\" and attr[a:t] contains \"q\" and attr[a:u] = \"http://x.org/y\" and attr[a:v]");
  ASSERT_EQ(q.filter.attrs.size(), 8u);
  EXPECT_EQ(q.filter.attrs[0].op, Comparator::Ne);
  EXPECT_EQ(q.filter.attrs[1].op, Comparator::Ne);
  EXPECT_EQ(q.filter.attrs[2].op, Comparator::Le);
  EXPECT_EQ(q.filter.attrs[3].op, Comparator::Ge);
  EXPECT_EQ(q.filter.attrs[4].op, Comparator::Contains);
  EXPECT_EQ(q.filter.attrs[5].op, Comparator::Contains);
  EXPECT_EQ(q.filter.attrs[6].value, AttributeValue(Uri{"http://x.org/y"}));
  EXPECT_EQ(q.filter.attrs[7].op, Comparator::Exists);
}

TEST(QueryParse, FormatRoundTripsTheCorpus) {
  for (const auto& text : nidm::testing::query_corpus()) {
    auto q = parse_query(text);
    EXPECT_EQ(parse_query(format_query(q)), q) << text;
  }
}

TEST(QueryParse, ErrorsPointIntoTheText) {
  try {
    parse_query("select entity where typ=neurolex:T1");
    FAIL();
  } catch (const BadQuery& e) {
    EXPECT_EQ(e.span().line, 1u);
    EXPECT_EQ(e.span().column, 21u);
    EXPECT_NE(std::string(e.what()).find("typ"), std::string::npos);
  }
  EXPECT_THROW(parse_query(""), BadQuery);
  EXPECT_THROW(parse_query("select widget"), BadQuery);
  EXPECT_THROW(parse_query("select entity where path(frobnicates.forward -> entity)"), BadQuery);
  EXPECT_THROW(parse_query("select entity where path(used.sideways -> entity)"), BadQuery);
  EXPECT_THROW(parse_query("select entity where attr[prov:value] = "), BadQuery);
  EXPECT_THROW(parse_query("select entity trailing"), BadQuery);
}

TEST(QueryCheck, StructuralRules) {
  EXPECT_NE(std::string(bad("select entity where attr[prov:value] > \"big\"").what()).find("number"),
            std::string::npos);
  bad("select relation");
  bad("select entity where path(used.forward -> entity[attr[a:b] < neurolex:x])");
  std::string long_path = "select entity where path(used.forward";
  for (int i = 0; i < 8; ++i) long_path += " -> used.forward";
  bad(long_path + " -> entity)");
  Query empty_path;
  empty_path.paths.push_back({});
  EXPECT_THROW(check_query(empty_path), BadQuery);
  EXPECT_NO_THROW(check_query(parse_query(nidm::testing::kCaudateQuery)));
}

TEST(QueryDirection, ActiveAndPassiveRelations) {
  EXPECT_TRUE(walks_subject_to_object(RelationKind::Used, Direction::Forward));
  EXPECT_TRUE(walks_subject_to_object(RelationKind::HadMember, Direction::Forward));
  EXPECT_TRUE(walks_subject_to_object(RelationKind::ActedOnBehalfOf, Direction::Forward));
  EXPECT_FALSE(walks_subject_to_object(RelationKind::WasGeneratedBy, Direction::Forward));
  EXPECT_TRUE(walks_subject_to_object(RelationKind::WasGeneratedBy, Direction::Backward));
  EXPECT_FALSE(walks_subject_to_object(RelationKind::WasAttributedTo, Direction::Forward));
  EXPECT_FALSE(walks_subject_to_object(RelationKind::Used, Direction::Backward));
}

TEST(QueryHolds, ComparatorSemantics) {
  Attributes attrs{{qn("a:v"), Decimal("6000.5")}, {qn("a:v"), Text{"12"}}, {qn("a:t"), Text{"Edinburgh"}},
                   {qn("a:q"), qn("neurolex:right_handed")}};
  auto f = [](const char* key, Comparator op, AttributeValue v) { return AttrFilter{qn(key), op, std::move(v)}; };
  EXPECT_TRUE(holds(f("a:v", Comparator::Gt, Decimal("6000")), attrs));
  EXPECT_TRUE(holds(f("a:v", Comparator::Lt, Decimal("13")), attrs));
  EXPECT_FALSE(holds(f("a:v", Comparator::Gt, Decimal("6000.5")), attrs));
  EXPECT_TRUE(holds(f("a:v", Comparator::Eq, Decimal("12.00")), attrs));
  EXPECT_TRUE(holds(f("a:v", Comparator::Eq, Decimal("6000.50")), attrs));
  EXPECT_FALSE(holds(f("a:v", Comparator::Ne, Decimal("12")), attrs));
  EXPECT_TRUE(holds(f("a:v", Comparator::Ne, Decimal("7")), attrs));
  EXPECT_FALSE(holds(f("a:missing", Comparator::Ne, Decimal("7")), attrs));
  EXPECT_TRUE(holds(f("a:t", Comparator::Contains, Text{"burgh"}), attrs));
  EXPECT_TRUE(holds(f("a:q", Comparator::Eq, qn("neurolex:right_handed")), attrs));
  EXPECT_TRUE(holds(f("a:q", Comparator::Contains, Text{"right"}), attrs));
  EXPECT_TRUE(holds(f("a:t", Comparator::Exists, Text{}), attrs));
  EXPECT_FALSE(holds(f("a:missing", Comparator::Exists, Text{}), attrs));
  EXPECT_FALSE(holds(f("a:t", Comparator::Gt, Decimal("1")), attrs));
}
