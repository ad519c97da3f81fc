#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "nidm/document.hpp"
#include "nidm/error.hpp"

namespace nidm {

enum class ViolationCode { DanglingRef, KindMismatch, NotACollection, BadInterval, UndeclaredPrefix };

std::string_view to_string(ViolationCode code);

struct Violation {
  std::size_t record_index = 0;
  ViolationCode code = ViolationCode::DanglingRef;
  std::string message;
  friend bool operator==(const Violation&, const Violation&) = default;
};

/// Empty report means the document is valid.
using ValidationReport = std::vector<Violation>;

/// Checks reference resolution, endpoint categories per relation kind,
/// collection membership, activity intervals and prefix declarations.
/// Never throws; violations are reported in record order.
ValidationReport validate(const Document& doc);

/// Raised by operations whose precondition is a valid document.
class InvalidDocument : public Error {
 public:
  explicit InvalidDocument(ValidationReport report, const std::string& context = {});
  const ValidationReport& report() const noexcept { return report_; }

 private:
  ValidationReport report_;
};

/// Throws InvalidDocument when `validate(doc)` is non-empty.
void require_valid(const Document& doc, const std::string& context = {});

/// Transitive ancestry of an entity: generating activities, what they used,
/// associated agents and plans, attributed agents, derivation sources,
/// delegation chains, informing activities and collection members, closed to a
/// fixpoint. Relations are kept when all of their endpoints are in the set.
/// Throws UnknownId when `entity_id` is absent or not an entity.
Document provenance_closure(const Document& doc, std::string_view entity_id);

}  // namespace nidm
