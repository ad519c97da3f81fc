#include "nidm/api.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <condition_variable>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "nidm/error.hpp"
#include "nidm/validate.hpp"

namespace nidm::api {

using nlohmann::ordered_json;

bool valid_source_tag(std::string_view tag) {
  if (tag.empty()) return false;
  auto first = static_cast<unsigned char>(tag.front());
  if (!(std::isalpha(first) || first == '_')) return false;
  return std::all_of(tag.begin(), tag.end(), [](unsigned char c) { return std::isalnum(c) || c == '_'; });
}

void parse_bind_address(std::string_view text, ApiConfig& config) {
  auto colon = text.rfind(':');
  std::string_view port_text = text;
  if (colon != std::string_view::npos) {
    std::string_view host = text.substr(0, colon);
    if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
    if (!host.empty()) config.host = std::string(host);
    port_text = text.substr(colon + 1);
  }
  int port = -1;
  auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port < 0 || port > 65535) {
    throw BindError("invalid bind address '" + std::string(text) + "'");
  }
  config.port = port;
}

std::pair<std::string, std::filesystem::path> split_store_path(const std::string& spec) {
  auto eq = spec.find('=');
  if (eq != std::string::npos && valid_source_tag(std::string_view(spec).substr(0, eq))) {
    return {spec.substr(0, eq), spec.substr(eq + 1)};
  }
  std::filesystem::path p(spec);
  std::string stem = p.filename().string();
  stem = stem.substr(0, stem.find('.'));
  return {stem, p};
}

Document load_document(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(path.string(), "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const std::string name = path.filename().string();
  std::optional<Format> f;
  if (name.ends_with(".provn")) f = Format::Provn;
  else if (name.ends_with(".xml")) f = Format::Xml;
  else if (name.ends_with(".json")) f = Format::Json;
  return parse_document(text, f.value_or(sniff_format(text)));
}

StoreSpec resolve_store(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  StoreSpec spec;
  if (!fs::is_directory(path)) {
    if (!fs::exists(path)) throw LoadError(path.string(), "no such file or directory");
    spec.sources.push_back(split_store_path(path.string()));
    return spec;
  }
  const auto manifest = path / "store.list";
  if (fs::exists(manifest)) {
    std::ifstream in(manifest);
    if (!in) throw LoadError(manifest.string(), "cannot open file");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::istringstream ls(line);
      std::string kw, a, b;
      if (!(ls >> kw) || kw.front() == '#') continue;
      if (kw == "registry" && (ls >> a)) {
        spec.registry = path / a;
      } else if (kw == "source" && (ls >> a >> b) && valid_source_tag(a)) {
        spec.sources.emplace_back(a, path / b);
      } else {
        throw LoadError(manifest.string(), "line " + std::to_string(lineno) +
                                               ": expected 'registry <path>' or 'source <tag> <path>'");
      }
    }
    return spec;
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(path)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && (name.ends_with(".provn") || name.ends_with(".xml") || name.ends_with(".json"))) {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) spec.sources.push_back(split_store_path(f.string()));
  return spec;
}

std::shared_ptr<Store> open_store(const StoreSpec& spec, const std::optional<std::filesystem::path>& registry,
                                  StoreLimits limits) {
  terms::Registry reg;
  if (auto path = registry ? registry : spec.registry) {
    try {
      reg = terms::load_registry(*path);
    } catch (const LoadError&) {
      throw;
    } catch (const Error& e) {
      throw LoadError(path->string(), e.what());
    }
  }
  auto store = std::make_shared<Store>(std::move(reg), limits);
  for (const auto& [tag, path] : spec.sources) {
    if (!valid_source_tag(tag)) throw LoadError(path.string(), "source tag '" + tag + "' is not a valid identifier");
    try {
      store->ingest(tag, load_document(path));
    } catch (const LoadError&) {
      throw;
    } catch (const Error& e) {
      throw LoadError(path.string(), e.what());
    }
  }
  return store;
}

std::string_view content_type(Format f) {
  switch (f) {
    case Format::Provn: return "text/provenance-notation; charset=utf-8";
    case Format::Xml: return "application/xml; charset=utf-8";
    case Format::Json: return "application/json";
  }
  return "application/octet-stream";
}

namespace {

std::optional<Format> format_from_media(std::string_view media) {
  auto semi = media.find(';');
  if (semi != std::string_view::npos) media = media.substr(0, semi);
  while (!media.empty() && media.front() == ' ') media.remove_prefix(1);
  while (!media.empty() && media.back() == ' ') media.remove_suffix(1);
  if (media == "application/json" || media.ends_with("+json")) return Format::Json;
  if (media == "application/xml" || media == "text/xml" || media.ends_with("+xml")) return Format::Xml;
  if (media == "text/provenance-notation" || media == "text/provn") return Format::Provn;
  return std::nullopt;
}

}  // namespace

std::optional<Format> negotiate(std::string_view format_param, std::string_view accept, Format fallback) {
  if (!format_param.empty()) return format_from_string(format_param);
  while (!accept.empty()) {
    auto comma = accept.find(',');
    auto item = accept.substr(0, comma);
    if (auto f = format_from_media(item)) return f;
    if (comma == std::string_view::npos) break;
    accept.remove_prefix(comma + 1);
  }
  return fallback;
}

Document results_document(const ResultSet& rs, std::size_t first, std::size_t count) {
  NamespaceMap ns;
  std::vector<Record> records;
  const std::size_t last = std::min(rs.rows.size(), first + count);
  for (std::size_t i = first; i < last; ++i) {
    const auto& row = rs.rows[i];
    auto it = rs.namespaces.find(row.source);
    if (it != rs.namespaces.end()) {
      for (const auto& [p, uri] : it->second) ns.emplace(p, uri);
    }
    const std::string prefix = row.source + ".";
    Record r = row.record;
    std::visit(
        [&](auto& rec) {
          using T = std::decay_t<decltype(rec)>;
          if constexpr (std::is_same_v<T, Relation>) {
            rec.subject = prefix + rec.subject;
            rec.object = prefix + rec.object;
            if (rec.plan) rec.plan = prefix + *rec.plan;
          } else {
            rec.id = prefix + rec.id;
          }
        },
        r);
    records.push_back(std::move(r));
  }
  return build_document(std::move(ns), std::move(records));
}

Encoded encode_results(const ResultSet& rs, Format f, PageRequest page) {
  const std::size_t size = page.size == 0 ? rs.rows.size() : page.size;
  const std::size_t first = page.size == 0 ? (page.page > 1 ? rs.rows.size() : 0) : (page.page - 1) * page.size;
  const bool more = page.size != 0 && first + size < rs.rows.size();
  Document doc = results_document(rs, std::min(first, rs.rows.size()), size);

  Encoded out;
  out.content_type = std::string(content_type(f));
  out.headers["X-Total-Count"] = std::to_string(rs.total);
  if (more) out.headers["X-Next-Page"] = std::to_string(page.page + 1);
  if (f != Format::Json) {
    out.body = serialize_document(doc, f, Check::Fragment);
    return out;
  }
  ordered_json j;
  j["total"] = rs.total;
  j["page"] = page.page;
  j["pageSize"] = page.size;
  j["next"] = more ? ordered_json(page.page + 1) : ordered_json(nullptr);
  j["truncated"] = rs.truncated;
  j["rows"] = ordered_json::array();
  const std::size_t last = std::min(rs.rows.size(), first + size);
  for (std::size_t i = first; i < last; ++i) {
    const auto& row = rs.rows[i];
    j["rows"].push_back({{"source", row.source},
                         {"id", row.id},
                         {"category", std::string(to_string(category_of(row.record)))},
                         {"position", row.position}});
  }
  j["document"] = ordered_json::parse(serialize_json(doc));
  out.body = j.dump();
  return out;
}

// ---------------------------------------------------------------------------
// Service

namespace {

struct HttpError {
  int status;
  std::string code;
  std::string message;
  ordered_json detail = ordered_json::object();
};

ordered_json span_json(const SourceSpan& s) { return {{"line", s.line}, {"column", s.column}, {"length", s.length}}; }

HttpError to_http(const std::exception& e) {
  if (const auto* q = dynamic_cast<const BadQuery*>(&e)) {
    auto d = span_json(q->span());
    d["expected"] = q->expected();
    d["found"] = q->found();
    return {400, q->code(), q->what(), d};
  }
  if (const auto* p = dynamic_cast<const ParseError*>(&e)) {
    auto d = span_json(p->span());
    d["expected"] = p->expected();
    d["found"] = p->found();
    if (!p->path().empty()) d["path"] = p->path();
    return {400, p->code(), p->what(), d};
  }
  if (const auto* u = dynamic_cast<const UndeclaredPrefix*>(&e)) {
    auto d = span_json(u->span());
    d["prefix"] = u->prefix();
    return {400, u->code(), u->what(), d};
  }
  if (const auto* v = dynamic_cast<const InvalidDocument*>(&e)) {
    ordered_json list = ordered_json::array();
    for (const auto& viol : v->report()) {
      list.push_back({{"record", viol.record_index}, {"code", std::string(to_string(viol.code))}, {"message", viol.message}});
    }
    return {422, v->code(), v->what(), {{"violations", list}}};
  }
  if (const auto* u = dynamic_cast<const UnknownId*>(&e)) return {404, u->code(), u->what(), {{"id", u->id()}}};
  if (const auto* n = dynamic_cast<const NotACollection*>(&e)) return {409, n->code(), n->what()};
  if (const auto* err = dynamic_cast<const Error*>(&e)) return {400, err->code(), err->what()};
  return {500, "Internal", e.what()};
}

void send_error(httplib::Response& res, const HttpError& e) {
  ordered_json body{{"code", e.code}, {"message", e.message}, {"detail", e.detail}};
  res.status = e.status;
  res.set_content(body.dump(), "application/json");
}

std::optional<Category> category_from_path(std::string_view seg) {
  if (seg == "entities") return Category::Entity;
  if (seg == "activities") return Category::Activity;
  if (seg == "agents") return Category::Agent;
  if (seg == "relations") return Category::Relation;
  return std::nullopt;
}

std::size_t count_param(const httplib::Request& req, const char* name, std::size_t fallback) {
  if (!req.has_param(name)) return fallback;
  const std::string v = req.get_param_value(name);
  std::size_t n = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
  if (ec != std::errc{} || ptr != v.data() + v.size() || n == 0) {
    throw HttpError{400, "BadRequest", std::string(name) + " must be a positive integer, got '" + v + "'"};
  }
  return n;
}

AttributeValue param_value(const std::string& v) {
  if (auto d = Decimal::parse(v)) return *d;
  if (looks_like_uri(v)) return Uri{v};
  if (auto q = QualifiedName::parse(v)) return *q;
  return Text{v};
}

QualifiedName param_qname(const std::string& name, const std::string& v) {
  auto q = QualifiedName::parse(v);
  if (!q) throw HttpError{400, "BadRequest", name + " must be a prefix:local term, got '" + v + "'"};
  return *q;
}

query::RecordFilter filter_from(const httplib::Request& req) {
  query::RecordFilter f;
  for (const auto& [k, v] : req.params) {
    if (k == "type") {
      f.types.push_back(param_qname("type", v));
    } else if (k.starts_with("attr.")) {
      f.attrs.push_back({param_qname("attribute key", k.substr(5)), query::Comparator::Eq, param_value(v)});
    }
  }
  return f;
}

thread_local std::chrono::steady_clock::time_point request_start;

std::string now_iso() {
  auto now = std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
  return Timestamp(now).iso() + "Z";
}

bool loopback(const std::string& host) {
  return host == "localhost" || host == "::1" || host.starts_with("127.");
}

}  // namespace

struct Service::Impl {
  ApiConfig config;
  std::shared_ptr<Store> store;
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::mutex mu;
  std::mutex join_mu;
  std::condition_variable cv;
  bool stopped = false;

  Format format_for(const httplib::Request& req) const {
    auto f = negotiate(req.get_param_value("format"), req.get_header_value("Accept"), config.default_format);
    if (!f) throw HttpError{400, "BadRequest", "unknown format '" + req.get_param_value("format") + "'"};
    return *f;
  }

  std::optional<std::string> source_param(const httplib::Request& req) const {
    if (!req.has_param("source")) return std::nullopt;
    return req.get_param_value("source");
  }

  void reply(httplib::Response& res, const Encoded& e) {
    for (const auto& [k, v] : e.headers) res.set_header(k, v);
    res.set_content(e.body, e.content_type);
  }

  void reply_document(httplib::Response& res, const Document& doc, Format f) {
    res.set_content(serialize_document(doc, f, Check::Fragment), std::string(content_type(f)));
  }

  template <typename F>
  httplib::Server::Handler guard(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const HttpError& e) {
        send_error(res, e);
      } catch (const std::exception& e) {
        send_error(res, to_http(e));
      }
    };
  }

  // The record with this id in one source, or an error when absent or ambiguous.
  ResultRow single(const httplib::Request& req, const std::string& id, std::optional<Category> want) {
    auto rs = store->lookup(id, source_param(req));
    std::vector<ResultRow> hits;
    for (auto& r : rs.rows) {
      if (!want || category_of(r.record) == *want) hits.push_back(std::move(r));
    }
    if (hits.empty()) {
      throw HttpError{404, "UnknownId",
                      "no " + std::string(want ? to_string(*want) : "record") + " with id '" + id + "'",
                      {{"id", id}}};
    }
    if (hits.size() > 1) {
      ordered_json sources = ordered_json::array();
      for (const auto& h : hits) sources.push_back(h.source);
      throw HttpError{409, "AmbiguousId", "id '" + id + "' exists in several sources; pass source=",
                      {{"id", id}, {"sources", sources}}};
    }
    return hits.front();
  }

  NamespaceMap namespaces_of(const std::string& source) {
    auto state = store->snapshot();
    return state->sources.at(source)->document().namespaces();
  }

  void routes() {
    server.Get("/v1/info", guard([this](const httplib::Request&, httplib::Response& res) {
      auto state = store->snapshot();
      ordered_json sources = ordered_json::object();
      std::size_t ent = 0, act = 0, ag = 0, rel = 0;
      for (const auto& [tag, src] : state->sources) {
        const auto& s = src->summary();
        sources[tag] = {{"entities", s.entities}, {"activities", s.activities}, {"agents", s.agents},
                        {"relations", s.relations}, {"collections", s.collections}};
        ent += s.entities;
        act += s.activities;
        ag += s.agents;
        rel += s.relations;
      }
      ordered_json j{{"service", "nidm"},
                     {"version", "0.1.0"},
                     {"formats", {"provn", "xml", "json"}},
                     {"defaultFormat", std::string(to_string(config.default_format))},
                     {"maxPageSize", config.max_page_size},
                     {"counts", {{"entities", ent}, {"activities", act}, {"agents", ag}, {"relations", rel}}},
                     {"sources", sources}};
      res.set_content(j.dump(), "application/json");
    }));

    server.Get(R"(/v1/(entities|activities|agents|relations))",
               guard([this](const httplib::Request& req, httplib::Response& res) {
                 const auto cat = *category_from_path(req.matches[1].str());
                 const auto f = format_for(req);
                 auto filter = filter_from(req);
                 ResultSet rs;
                 if (cat == Category::Relation) {
                   rs = store->list_relations(filter);
                 } else {
                   query::Query q;
                   q.select = cat;
                   q.filter = std::move(filter);
                   rs = store->run_query(q);
                 }
                 reply(res, encode_results(rs, f, page(req, std::min<std::size_t>(100, config.max_page_size))));
               }));

    server.Get(R"(/v1/entities/([^/]+)/provenance)", guard([this](const httplib::Request& req, httplib::Response& res) {
                 const auto f = format_for(req);
                 auto row = single(req, req.matches[1].str(), Category::Entity);
                 auto state = store->snapshot();
                 const auto& doc = state->sources.at(row.source)->document();
                 res.set_header("X-Source", row.source);
                 reply_document(res, provenance_closure(doc, row.id), f);
               }));

    server.Get(R"(/v1/collections/([^/]+)/members)", guard([this](const httplib::Request& req, httplib::Response& res) {
                 const auto f = format_for(req);
                 auto rs = store->members(req.matches[1].str(), source_param(req));
                 reply(res, encode_results(rs, f, page(req, 0)));
               }));

    server.Get(R"(/v1/(entities|activities|agents|relations)/([^/]+))",
               guard([this](const httplib::Request& req, httplib::Response& res) {
                 const auto cat = *category_from_path(req.matches[1].str());
                 const auto f = format_for(req);
                 const std::string id = req.matches[2].str();
                 if (cat == Category::Relation) {
                   // relIds may repeat; every relation carrying the id is returned
                   auto all = store->list_relations();
                   auto src = source_param(req);
                   std::vector<Record> recs;
                   std::optional<std::string> from;
                   for (auto& r : all.rows) {
                     if (r.id != id || (src && r.source != *src)) continue;
                     if (from && *from != r.source) {
                       throw HttpError{409, "AmbiguousId", "relation id '" + id + "' exists in several sources; pass source=",
                                       {{"id", id}}};
                     }
                     from = r.source;
                     recs.push_back(std::move(r.record));
                   }
                   if (!from) throw HttpError{404, "UnknownId", "no relation with id '" + id + "'", {{"id", id}}};
                   res.set_header("X-Source", *from);
                   reply_document(res, build_document(namespaces_of(*from), std::move(recs)), f);
                   return;
                 }
                 auto row = single(req, id, cat);
                 res.set_header("X-Source", row.source);
                 reply_document(res, build_document(namespaces_of(row.source), {row.record}), f);
               }));

    server.Post("/v1/query", guard([this](const httplib::Request& req, httplib::Response& res) {
      const auto f = format_for(req);
      auto rs = store->run_query(req.body);
      reply(res, encode_results(rs, f, page(req, 0)));
    }));

    server.Post("/v1/documents", guard([this](const httplib::Request& req, httplib::Response& res) {
      const std::string tag = req.get_param_value("source");
      if (!valid_source_tag(tag)) {
        throw HttpError{400, "BadRequest", "source must match [A-Za-z_][A-Za-z0-9_]*, got '" + tag + "'"};
      }
      std::optional<Format> f;
      if (req.has_param("format")) {
        f = format_from_string(req.get_param_value("format"));
        if (!f) throw HttpError{400, "BadRequest", "unknown format '" + req.get_param_value("format") + "'"};
      } else {
        f = format_from_media(req.get_header_value("Content-Type"));
      }
      Document doc = parse_document(req.body, f.value_or(sniff_format(req.body)));
      auto s = store->ingest(tag, doc);
      ordered_json j{{"source", s.source},         {"entities", s.entities},   {"activities", s.activities},
                     {"agents", s.agents},         {"relations", s.relations}, {"collections", s.collections},
                     {"harmonized", s.harmonized}};
      res.set_content(j.dump(), "application/json");
    }));

    server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
      if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
      send_error(res, {res.status, res.status == 404 ? "NotFound" : "HttpError",
                       "no route for " + req.method + " " + req.path});
      return httplib::Server::HandlerResponse::Handled;
    });

    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        send_error(res, to_http(e));
      } catch (...) {
        send_error(res, {500, "Internal", "unknown failure"});
      }
    });

    if (config.request_log) {
      server.set_pre_routing_handler([](const httplib::Request&, httplib::Response&) {
        request_start = std::chrono::steady_clock::now();
        return httplib::Server::HandlerResponse::Unhandled;
      });
      server.set_logger([this](const httplib::Request& req, const httplib::Response& res) {
        auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - request_start).count();
        ordered_json j{{"time", now_iso()},    {"method", req.method}, {"path", req.path},
                       {"status", res.status}, {"ms", ms},             {"remote", req.remote_addr}};
        config.request_log(j.dump());
      });
    }
  }

  PageRequest page(const httplib::Request& req, std::size_t default_size) const {
    PageRequest p;
    p.page = count_param(req, "page", 1);
    p.size = count_param(req, "pageSize", default_size);
    if (p.size > config.max_page_size) {
      throw HttpError{400, "BadRequest",
                      "pageSize " + std::to_string(p.size) + " exceeds the maximum of " + std::to_string(config.max_page_size)};
    }
    return p;
  }
};

Service::Service(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}

Service::~Service() { stop(); }

std::unique_ptr<Service> Service::start(ApiConfig config) {
  StoreSpec spec;
  for (const auto& p : config.store_paths) spec.sources.push_back(split_store_path(p));
  auto store = open_store(spec, config.registry_path, config.limits);
  return start(std::move(config), std::move(store));
}

std::unique_ptr<Service> Service::start(ApiConfig config, std::shared_ptr<Store> store) {
  if (config.max_page_size == 0) throw BindError("maxPageSize must be at least 1");
  if (!loopback(config.host) && !config.allow_external) {
    throw BindError("refusing to bind to non-loopback address " + config.host + " without allow-external");
  }
  auto impl = std::make_unique<Impl>();
  impl->config = std::move(config);
  impl->store = std::move(store);
  impl->routes();
  const auto& host = impl->config.host;
  if (impl->config.port == 0) {
    impl->port = impl->server.bind_to_any_port(host);
    if (impl->port <= 0) throw BindError("cannot bind " + host + " to a free port");
  } else {
    if (!impl->server.bind_to_port(host, impl->config.port)) {
      throw BindError("cannot bind " + host + ":" + std::to_string(impl->config.port));
    }
    impl->port = impl->config.port;
  }
  Impl* raw = impl.get();
  impl->thread = std::thread([raw] {
    raw->server.listen_after_bind();
    std::lock_guard lock(raw->mu);
    raw->stopped = true;
    raw->cv.notify_all();
  });
  impl->server.wait_until_ready();
  return std::unique_ptr<Service>(new Service(std::move(impl)));
}

int Service::port() const noexcept { return impl_->port; }

std::string Service::base_url() const {
  const auto& h = impl_->config.host;
  const std::string host = h.find(':') != std::string::npos ? "[" + h + "]" : h;
  return "http://" + host + ":" + std::to_string(impl_->port);
}

Store& Service::store() noexcept { return *impl_->store; }
const ApiConfig& Service::config() const noexcept { return impl_->config; }

void Service::stop() {
  if (!impl_) return;
  impl_->server.stop();
  std::lock_guard lock(impl_->join_mu);
  if (impl_->thread.joinable()) impl_->thread.join();
}

void Service::wait() {
  std::unique_lock lock(impl_->mu);
  impl_->cv.wait(lock, [this] { return impl_->stopped; });
}

}  // namespace nidm::api
