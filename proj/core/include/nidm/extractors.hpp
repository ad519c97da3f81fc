#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nidm/document.hpp"

namespace nidm::extract {

/// Reads the SPM batch log format:
///   BEGIN <module-path> <timestamp>
///   PARAM <name> <value>
///   IN <path>
///   OUT <path>
///   END <timestamp>
///   COUNTER <activity|entity|used|generation> <next-number>
/// with `#` comments. Each step becomes an activity a_N labelled with the
/// module path, one parameter entity per PARAM, one file entity per distinct
/// path, used relations for parameters and inputs and wasGeneratedBy relations
/// for outputs. Throws ParseError (line numbered) and UnbalancedStep.
Document extract_spm_batch(std::string_view log);

enum class EmitKind { ActivityStart, ActivityEnd, Parameter, InputFile, OutputFile };

std::string_view to_string(EmitKind k);
std::optional<EmitKind> emit_kind_from_string(std::string_view name);

struct ExtractionRule {
  EmitKind emit = EmitKind::ActivityStart;
  QualifiedName type_tag;
  std::string pattern;  // regular expression with named captures
};

/// Ordered rules, compiled once. Required captures per kind:
/// activity-start `label` (optional `time`), activity-end optional `time`,
/// parameter `name` and `value`, input-file and output-file `path`.
class RuleSet {
 public:
  RuleSet() = default;

  /// Throws RuleError naming the 1-based rule index (0 for the set itself).
  static RuleSet build(std::string name, NamespaceMap namespaces, std::vector<ExtractionRule> rules);

  const std::string& name() const noexcept { return name_; }
  const NamespaceMap& namespaces() const noexcept { return namespaces_; }
  const std::vector<ExtractionRule>& rules() const noexcept { return rules_; }

  struct Compiled;
  const Compiled& compiled() const { return *compiled_; }

 private:
  std::string name_;
  NamespaceMap namespaces_;
  std::vector<ExtractionRule> rules_;
  std::shared_ptr<const Compiled> compiled_;
};

/// Rule file lines: `name <text>`, `ns <prefix> <uri>`,
/// `rule <emit-kind> <type-qname> /<regex>/`, `#` comments.
RuleSet parse_rules(std::string_view text);
RuleSet load_rules(const std::filesystem::path& path);

struct RuleExtraction {
  Document document;
  std::size_t total_lines = 0;
  std::size_t matched_lines = 0;
  std::size_t unmatched_lines = 0;
};

/// First matching rule wins per line. An activity-start closes any open
/// activity; parameter and file lines outside an activity count as unmatched.
/// Ids are a_1, e_1, u_1, g_1... in emission order.
RuleExtraction extract_with_rules(std::string_view log, const RuleSet& rules);

struct ReplayStep {
  std::string label;
  std::optional<Timestamp> start;
  std::optional<Timestamp> end;
  std::vector<std::pair<std::string, std::string>> parameters;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  friend bool operator==(const ReplayStep&, const ReplayStep&) = default;
};

/// One step per activity ordered by (start, id). Throws InvalidDocument.
std::vector<ReplayStep> replay_plan(const Document& doc);

/// `label name=value ... in=<path> ... out=<path>`
std::string to_command(const ReplayStep& step);

/// A log in the SPM batch format that extract_spm_batch turns back into an
/// equivalent document. Steps without times get consecutive synthetic ones.
std::string regenerate_spm_log(const std::vector<ReplayStep>& steps);

}  // namespace nidm::extract
