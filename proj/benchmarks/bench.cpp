#include <benchmark/benchmark.h>

#include <random>

#include "fixtures.hpp"
#include "generator.hpp"
#include "nidm/codecs.hpp"
#include "nidm/store.hpp"
#include "nidm/validate.hpp"

using namespace nidm;
namespace t = nidm::testing;

namespace {

Document sample(std::size_t records) {
  std::mt19937_64 rng(records);
  return t::random_document(rng, {.max_records = records});
}

const t::DerivedFixture& derived() {
  static const auto fx = [] {
    std::mt19937_64 rng(7);
    return t::derived_fixture(rng, 500);
  }();
  return fx;
}

void BM_ParseProvn(benchmark::State& state) {
  auto text = serialize_provn(sample(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(parse_provn(text));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_ParseProvn)->Arg(200)->Arg(2000);

void BM_ParseXml(benchmark::State& state) {
  auto text = serialize_xml(sample(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(parse_xml(text));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_ParseXml)->Arg(200)->Arg(2000);

void BM_ParseJson(benchmark::State& state) {
  auto text = serialize_json(sample(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(parse_json(text));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_ParseJson)->Arg(200)->Arg(2000);

void BM_Serialize(benchmark::State& state) {
  auto doc = sample(2000);
  auto format = static_cast<Format>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(serialize_document(doc, format));
  state.SetLabel(std::string(to_string(format)));
}
BENCHMARK(BM_Serialize)->DenseRange(0, 2);

void BM_Validate(benchmark::State& state) {
  const auto& doc = derived().doc;
  for (auto _ : state) benchmark::DoNotOptimize(validate(doc));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(doc.records().size()));
}
BENCHMARK(BM_Validate);

void BM_Ingest(benchmark::State& state) {
  const auto& fx = derived();
  for (auto _ : state) {
    Store s(fx.registry);
    benchmark::DoNotOptimize(s.ingest("site", fx.doc));
  }
}
BENCHMARK(BM_Ingest)->Unit(benchmark::kMillisecond);

void BM_Query(benchmark::State& state) {
  const auto& fx = derived();
  Store s(fx.registry);
  s.ingest("site", fx.doc);
  const char* queries[] = {t::kPutamenQuery, t::kCorticalQuery, t::kCaudateQuery};
  auto q = query::parse_query(queries[state.range(0)]);
  for (auto _ : state) benchmark::DoNotOptimize(s.run_query(q));
}
BENCHMARK(BM_Query)->DenseRange(0, 2)->Unit(benchmark::kMicrosecond);

void BM_Closure(benchmark::State& state) {
  const auto& doc = derived().doc;
  std::string target;
  for (const auto& r : doc.records()) {
    if (category_of(r) == Category::Entity && record_id(r).starts_with("lpv_")) target = record_id(r);
  }
  for (auto _ : state) benchmark::DoNotOptimize(provenance_closure(doc, target));
}
BENCHMARK(BM_Closure)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
