#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "nidm/document.hpp"

namespace nidm {

enum class Format { Provn, Xml, Json };

std::string_view to_string(Format f);
std::optional<Format> format_from_string(std::string_view name);
/// Guess from the first non-blank character: '<' xml, '{' json, otherwise provn.
Format sniff_format(std::string_view text);

/// Whether a serializer enforces its validity precondition. `Fragment` is
/// used for partial views (e.g. a page of relations without their endpoints).
enum class Check { Strict, Fragment };

// --- PROV-N subset -------------------------------------------------------

/// Throws ParseError (with line/column) or UndeclaredPrefix.
Document parse_provn(std::string_view text);

/// Deterministic multi-line positional layout; Strict throws InvalidDocument
/// when validate() reports a DanglingRef.
std::string serialize_provn(const Document& doc, Check check = Check::Strict);

// --- provenance XML ------------------------------------------------------

/// Canonical: ISO timestamps, stored prefixes, typed values.
/// SpmLegacy: "07-Jun-2012 14:06:39" timestamps, the nidm prefix written as
/// "ni", every typed value tagged xsd:string.
enum class XmlMode { Canonical, SpmLegacy };

std::string serialize_xml(const Document& doc, XmlMode mode = XmlMode::Canonical, Check check = Check::Strict);

/// Accepts both modes. Throws ParseError (with element path), UnknownElement or
/// UndeclaredPrefix.
Document parse_xml(std::string_view text);

// --- JSON ----------------------------------------------------------------

std::string serialize_json(const Document& doc);
/// Throws ParseError whose path() is a JSON pointer.
Document parse_json(std::string_view text);

// --- format dispatch -----------------------------------------------------

Document parse_document(std::string_view text, Format format);
std::string serialize_document(const Document& doc, Format format, Check check = Check::Strict);

}  // namespace nidm
