#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nidm/codecs.hpp"
#include "nidm/store.hpp"

namespace nidm::api {

struct ApiConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  Format default_format = Format::Json;
  std::size_t max_page_size = 1000;
  /// Document files to load at startup, as `tag=path` or `path` (tag = file stem).
  std::vector<std::string> store_paths;
  std::optional<std::filesystem::path> registry_path;
  bool allow_external = false;
  StoreLimits limits;
  /// Receives one JSON object per request; null disables logging.
  std::function<void(const std::string&)> request_log;
};

/// Splits "host:port"; a bare port keeps the loopback host.
void parse_bind_address(std::string_view text, ApiConfig& config);

/// Source tags double as id prefixes in merged listings: [A-Za-z_][A-Za-z0-9_]*.
bool valid_source_tag(std::string_view tag);

/// `tag=path` or `path`; the tag defaults to the file stem.
std::pair<std::string, std::filesystem::path> split_store_path(const std::string& spec);

/// Reads a document in any codec format (chosen by extension, then by sniffing).
Document load_document(const std::filesystem::path& path);

/// Documents and registry that make up a store on disk: a directory holding a
/// `store.list` manifest (`registry <path>`, `source <tag> <path>`), a
/// directory of .provn/.xml/.json files (tag = file stem), or one file.
struct StoreSpec {
  std::vector<std::pair<std::string, std::filesystem::path>> sources;
  std::optional<std::filesystem::path> registry;
};

StoreSpec resolve_store(const std::filesystem::path& path);

/// Loads every source of `spec` into a new store. `registry` overrides the
/// spec's registry. Throws LoadError naming the failing file.
std::shared_ptr<Store> open_store(const StoreSpec& spec, const std::optional<std::filesystem::path>& registry = {},
                                  StoreLimits limits = {});

std::string_view content_type(Format f);

/// `format` parameter, then the Accept header, then the fallback.
std::optional<Format> negotiate(std::string_view format_param, std::string_view accept, Format fallback);

struct PageRequest {
  std::size_t page = 1;  // 1-based
  std::size_t size = 0;  // 0: everything
};

struct Encoded {
  std::string body;
  std::string content_type;
  std::map<std::string, std::string> headers;
};

/// Records of the selected rows as one fragment document. Ids, and the ids
/// relations refer to, become `<source>.<id>` so rows from several sources
/// cannot clash.
Document results_document(const ResultSet& rs, std::size_t first, std::size_t count);

/// Wire form of a result page. JSON is an envelope
///   {"total", "page", "pageSize", "next", "truncated", "rows":[{source,id,category,position}], "document"}
/// where document.records[i] holds rows[i]. PROV-N and XML carry just the
/// document, with X-Total-Count and X-Next-Page headers.
Encoded encode_results(const ResultSet& rs, Format f, PageRequest page = {});

/// One HTTP server over a Store. Endpoints:
///   GET  /v1/info
///   GET  /v1/{entities|activities|agents|relations}?type=&attr.<key>=&page=&pageSize=&format=
///   GET  /v1/{category}/{id}[?source=]
///   GET  /v1/entities/{id}/provenance[?source=]
///   GET  /v1/collections/{id}/members[?source=]
///   POST /v1/query            body: query text
///   POST /v1/documents?source=<tag>   body: document in any format
/// Errors are {"code","message","detail"} with a 4xx status.
class Service {
 public:
  /// Loads the registry and store files, binds and starts serving on a
  /// background thread. Throws LoadError or BindError.
  static std::unique_ptr<Service> start(ApiConfig config);
  /// Serves an existing store.
  static std::unique_ptr<Service> start(ApiConfig config, std::shared_ptr<Store> store);

  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  int port() const noexcept;
  std::string base_url() const;
  Store& store() noexcept;
  const ApiConfig& config() const noexcept;

  /// Stops accepting requests and joins the server thread.
  void stop();
  /// Blocks until stop() is called from elsewhere.
  void wait();

  struct Impl;

 private:
  explicit Service(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

}  // namespace nidm::api
