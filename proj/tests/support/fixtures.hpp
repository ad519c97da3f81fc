#pragma once

#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "nidm/document.hpp"
#include "nidm/terminology.hpp"

namespace nidm::testing {

std::filesystem::path fixture_path(const std::string& name);
std::string read_file(const std::filesystem::path& path);
Document load_fixture(const std::string& name);
terms::Registry fixture_registry();

/// Participants (agents with nidm:age and nidm:diagnosis), their T1 scans and
/// MMSE assessments, FreeSurfer runs producing putamen and cortical volumes
/// and FSL FAST runs producing caudate volumes plus an FSL putamen estimate
/// that must not count as a FreeSurfer result. The answer sets are worked out
/// while generating, from the generator's own bookkeeping.
struct DerivedFixture {
  Document doc;
  terms::Registry registry;
  /// Participants under 18 with a FreeSurfer left putamen volume over 6000.
  std::set<std::string> young_large_putamen;
  /// Cortical volumes from FreeSurfer 5 or later for participants under 15.
  std::set<std::string> young_cortical_fs5;
  /// Caudate volumes from FSL FAST 4 or later for participants with an MMSE score under 26.
  std::set<std::string> low_mmse_caudate;
};

DerivedFixture derived_fixture(std::mt19937_64& rng, std::size_t participants);

inline const char* kPutamenQuery =
    "select agent where attr[nidm:age] < 18"
    " and path(wasAttributedTo.forward -> used.backward -> wasGeneratedBy.forward"
    " -> entity[type=fs:left_putamen_volume and attr[prov:value] > 6000])";

inline const char* kCorticalQuery =
    "select entity where type=fs:cortical_volume"
    " and path(wasGeneratedBy.backward -> activity[type=fs:FreeSurfer and attr[fs:version] >= 5])"
    " and path(wasGeneratedBy.backward -> used.forward -> wasAttributedTo.backward -> agent[attr[nidm:age] < 15])";

inline const char* kCaudateQuery =
    "select entity where type=fsl:caudate_volume"
    " and path(wasGeneratedBy.backward -> activity[type=fsl:FAST and attr[fsl:version] >= 4])"
    " and path(wasGeneratedBy.backward -> used.forward -> wasAttributedTo.backward -> wasAttributedTo.forward"
    " -> entity[type=nidm:MMSE and attr[prov:value] < 26])";

inline const char* kHandednessQuery =
    "select entity where type=neurolex:Handedness and attr[prov:value]=neurolex:right_handed";

inline const char* kT1CollectionQuery =
    "select entity where type=neurolex:T1 and path(hadMember.forward -> entity[attr[prov:value]])";

/// Queries over the worked example halves and the derived fixture, covering
/// every comparator, both directions, multi-step paths and source-term types.
std::vector<std::string> query_corpus();

}  // namespace nidm::testing
