#include "nidm/mediator.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <set>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "nidm/codecs.hpp"
#include "nidm/error.hpp"

namespace nidm::mediate {

using Clock = std::chrono::steady_clock;
using std::chrono::milliseconds;

std::vector<EndpointDescriptor> parse_federation(std::string_view text, const std::filesystem::path& base_dir) {
  std::vector<EndpointDescriptor> out;
  std::set<std::string> tags;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string kw;
    if (!(ls >> kw) || kw.front() == '#') continue;
    auto fail = [&](const std::string& expected, const std::string& found) {
      throw ParseError({lineno, 1, line.size()}, expected, found);
    };
    if (kw != "endpoint") fail("endpoint", kw);
    EndpointDescriptor e;
    if (!(ls >> e.tag >> e.base_url)) fail("endpoint <tag> <url>", line);
    if (!tags.insert(e.tag).second) fail("unique endpoint tag", e.tag);
    if (!e.base_url.starts_with("http://")) fail("http:// URL", e.base_url);
    std::string word;
    if (ls >> word) {
      if (word.find_first_not_of("0123456789") != std::string::npos || std::stol(word) <= 0) {
        fail("positive deadline in milliseconds", word);
      }
      e.deadline = milliseconds(std::stol(word));
      if (ls >> word) {
        std::filesystem::path p(word);
        if (p.is_relative()) p = base_dir / p;
        e.overlay = terms::load_registry(p);
      }
    }
    if (ls >> word) fail("end of line", word);
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<EndpointDescriptor> load_federation(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(path.string(), "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_federation(ss.str(), path.parent_path());
}

namespace {

struct Target {
  std::string origin;  // scheme://host:port
  std::string prefix;  // path prefix, no trailing slash
};

Target split_url(const std::string& url) {
  auto scheme = url.find("://");
  auto slash = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  Target t;
  t.origin = url.substr(0, slash);
  if (slash != std::string::npos) t.prefix = url.substr(slash);
  while (!t.prefix.empty() && t.prefix.back() == '/') t.prefix.pop_back();
  return t;
}

void set_timeouts(httplib::Client& c, milliseconds budget) {
  auto us = std::chrono::duration_cast<std::chrono::microseconds>(std::max(budget, milliseconds(1)));
  c.set_connection_timeout(us);
  c.set_read_timeout(us);
  c.set_write_timeout(us);
}

milliseconds since(Clock::time_point t0) { return std::chrono::duration_cast<milliseconds>(Clock::now() - t0); }

struct Outcome {
  bool ok = false;
  std::string error;
  milliseconds elapsed{0};
  std::vector<FederatedRow> rows;
  NamespaceMap namespaces;
};

std::string describe_failure(const httplib::Result& res, milliseconds elapsed, milliseconds deadline) {
  if (res) {
    std::string msg = "HTTP " + std::to_string(res->status);
    try {
      auto j = nlohmann::json::parse(res->body);
      msg += " " + j.value("code", std::string()) + ": " + j.value("message", std::string());
    } catch (const std::exception&) {
    }
    return msg;
  }
  // socket timeouts fire against a budget rounded to whole milliseconds
  const bool timeout = res.error() == httplib::Error::Read || res.error() == httplib::Error::ConnectionTimeout;
  if (elapsed >= deadline || (timeout && elapsed + milliseconds(2) >= deadline)) {
    return "deadline exceeded after " + std::to_string(elapsed.count()) + " ms";
  }
  return "connection error: " + httplib::to_string(res.error());
}

std::string strip(const std::string& id, const std::string& prefix) {
  return id.starts_with(prefix) ? id.substr(prefix.size()) : id;
}

// Top-level type filters rewritten to every source term that resolves to the
// same canonical term, as a cartesian product of alternatives.
std::vector<query::Query> expansions(const query::Query& q, const terms::Registry& reg, std::size_t cap) {
  std::vector<std::vector<QualifiedName>> alts;
  std::size_t product = 1;
  for (const auto& t : q.filter.types) {
    const auto& canonical = reg.resolve(t);
    std::vector<QualifiedName> a{t};
    if (canonical != t) a.push_back(canonical);
    for (const auto& [src, _] : reg.mappings()) {
      if (reg.resolve(src) == canonical && std::find(a.begin(), a.end(), src) == a.end()) a.push_back(src);
    }
    product *= a.size();
    alts.push_back(std::move(a));
  }
  if (product > cap) return {q};
  std::vector<query::Query> out{q};
  for (std::size_t i = 0; i < alts.size(); ++i) {
    std::vector<query::Query> next;
    for (const auto& base : out) {
      for (const auto& term : alts[i]) {
        auto v = base;
        v.filter.types[i] = term;
        next.push_back(std::move(v));
      }
    }
    out = std::move(next);
  }
  return out;
}

Outcome run_endpoint(const EndpointDescriptor& ep, const query::Query& q, const terms::Registry& reg,
                     std::size_t max_expansions) {
  const auto t0 = Clock::now();
  const auto deadline_at = t0 + ep.deadline;
  Outcome out;
  const auto target = split_url(ep.base_url);
  httplib::Client client(target.origin);
  client.set_keep_alive(true);

  const bool overlay = ep.overlay.has_value();
  const auto queries = overlay ? expansions(q, reg, max_expansions) : std::vector<query::Query>{q};
  std::set<std::pair<std::string, std::string>> seen;

  for (const auto& sub : queries) {
    const auto remaining = std::chrono::ceil<milliseconds>(deadline_at - Clock::now());
    if (remaining.count() <= 0) {
      out.error = "deadline exceeded after " + std::to_string(since(t0).count()) + " ms";
      out.elapsed = since(t0);
      return out;
    }
    set_timeouts(client, remaining);
    auto res = client.Post(target.prefix + "/v1/query?format=json", query::format_query(sub), "text/plain");
    if (!res || res->status != 200) {
      out.elapsed = since(t0);
      out.error = describe_failure(res, out.elapsed, ep.deadline);
      return out;
    }
    try {
      auto j = nlohmann::json::parse(res->body);
      Document doc = parse_json(j.at("document").dump());
      const auto& rows = j.at("rows");
      if (rows.size() != doc.records().size()) throw std::runtime_error("row and record counts differ");
      for (const auto& [p, uri] : doc.namespaces()) out.namespaces.emplace(p, uri);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        FederatedRow row;
        row.endpoint = ep.tag;
        row.source = rows[i].at("source").get<std::string>();
        row.id = rows[i].at("id").get<std::string>();
        if (!seen.insert({row.source, row.id}).second) continue;
        Record r = doc.records()[i];
        std::visit(
            [&](auto& rec) {
              if constexpr (!std::is_same_v<std::decay_t<decltype(rec)>, Relation>) {
                rec.id = strip(rec.id, row.source + ".");
              }
            },
            r);
        row.record = std::move(r);
        out.rows.push_back(std::move(row));
      }
    } catch (const std::exception& e) {
      out.elapsed = since(t0);
      out.error = std::string("malformed response: ") + e.what();
      out.rows.clear();
      return out;
    }
  }

  // Harmonize with the layered registry and re-check the canonical filters.
  std::vector<FederatedRow> kept;
  for (auto& row : out.rows) {
    Document one = build_document(out.namespaces, {row.record});
    Document h = terms::harmonize(reg, one);
    for (const auto& [p, uri] : h.namespaces()) out.namespaces.emplace(p, uri);
    row.record = h.records().front();
    if (overlay) {
      auto types = prov_types(record_attributes(row.record));
      bool pass = std::all_of(q.filter.types.begin(), q.filter.types.end(), [&](const QualifiedName& t) {
        return std::find(types.begin(), types.end(), reg.resolve(t)) != types.end();
      });
      if (!pass) continue;
    }
    kept.push_back(std::move(row));
  }
  out.rows = std::move(kept);
  out.ok = true;
  out.elapsed = since(t0);
  return out;
}

}  // namespace

FederatedResult federated_query(const std::vector<EndpointDescriptor>& endpoints, const query::Query& q,
                                const FederationOptions& options) {
  if (endpoints.empty() && options.strict) throw NoEndpoints();
  query::check_query(q);

  struct Pending {
    const EndpointDescriptor* ep;
    terms::Registry reg;
    std::future<Outcome> result;
    Clock::time_point deadline_at;
  };
  std::vector<Pending> pending;
  const auto t0 = Clock::now();
  for (const auto& ep : endpoints) {
    Pending p{&ep, ep.overlay ? options.registry.overlay(*ep.overlay) : options.registry, {}, t0 + ep.deadline};
    auto promise = std::make_shared<std::promise<Outcome>>();
    p.result = promise->get_future();
    // Detached so that a hung endpoint cannot hold up the merge; the worker
    // owns copies of everything it touches.
    std::thread([promise, ep, q, reg = p.reg, cap = options.max_expansions] {
      try {
        promise->set_value(run_endpoint(ep, q, reg, cap));
      } catch (const std::exception& e) {
        Outcome o;
        o.error = e.what();
        promise->set_value(std::move(o));
      }
    }).detach();
    pending.push_back(std::move(p));
  }

  FederatedResult out;
  std::map<std::string, Outcome> done;
  for (auto& p : pending) {
    // small grace period for the worker to report its own timeout
    if (p.result.wait_until(p.deadline_at + milliseconds(200)) != std::future_status::ready) {
      Outcome o;
      o.elapsed = since(t0);
      o.error = "deadline exceeded after " + std::to_string(o.elapsed.count()) + " ms";
      done.emplace(p.ep->tag, std::move(o));
      continue;
    }
    done.emplace(p.ep->tag, p.result.get());
  }

  // datatype disagreements between endpoints on the canonical terms they returned
  std::map<QualifiedName, std::map<std::string, terms::Datatype>> datatypes;
  for (const auto& p : pending) {
    const auto& o = done.at(p.ep->tag);
    if (!o.ok) continue;
    std::set<QualifiedName> canonical_targets;
    for (const auto& [src, dst] : p.reg.mappings()) canonical_targets.insert(p.reg.resolve(src));
    for (const auto& row : o.rows) {
      for (const auto& t : prov_types(record_attributes(row.record))) {
        if (!canonical_targets.contains(t)) continue;
        if (const auto* def = p.reg.definition(t)) datatypes[t][p.ep->tag] = def->datatype;
      }
    }
  }

  for (const auto& p : pending) {
    auto& o = done.at(p.ep->tag);
    SourceStatus s;
    s.ok = o.ok;
    s.error = o.error;
    s.elapsed = o.elapsed;
    s.rows = o.ok ? o.rows.size() : 0;
    for (const auto& [term, by_tag] : datatypes) {
      auto mine = by_tag.find(p.ep->tag);
      if (mine == by_tag.end()) continue;
      for (const auto& [other, dt] : by_tag) {
        if (other == p.ep->tag || dt == mine->second) continue;
        s.conflicts.push_back(term.str() + ": " + std::string(terms::to_string(mine->second)) + " here, " +
                              std::string(terms::to_string(dt)) + " at " + other);
      }
    }
    out.per_source[p.ep->tag] = std::move(s);
    if (!o.ok) continue;
    if (!o.rows.empty()) out.namespaces[p.ep->tag] = o.namespaces;
    for (auto& r : o.rows) out.rows.push_back(std::move(r));
  }
  std::sort(out.rows.begin(), out.rows.end(), [](const FederatedRow& a, const FederatedRow& b) {
    return std::tie(a.endpoint, a.source, a.id) < std::tie(b.endpoint, b.source, b.id);
  });
  return out;
}

std::string merged_id(const FederatedRow& row) {
  if (row.source == row.endpoint) return row.endpoint + "." + row.id;
  return row.endpoint + "." + row.source + "." + row.id;
}

Document merged_document(const FederatedResult& result) {
  NamespaceMap ns;
  for (const auto& [tag, m] : result.namespaces) {
    for (const auto& [p, uri] : m) ns.emplace(p, uri);
  }
  std::vector<Record> records;
  for (const auto& row : result.rows) {
    Record r = row.record;
    std::visit(
        [&](auto& rec) {
          if constexpr (!std::is_same_v<std::decay_t<decltype(rec)>, Relation>) rec.id = merged_id(row);
        },
        r);
    records.push_back(std::move(r));
  }
  return build_document(std::move(ns), std::move(records));
}

ProbeReport probe(const EndpointDescriptor& endpoint) {
  ProbeReport r;
  const auto t0 = Clock::now();
  try {
    const auto target = split_url(endpoint.base_url);
    httplib::Client client(target.origin);
    set_timeouts(client, endpoint.deadline);
    auto res = client.Get(target.prefix + "/v1/info");
    r.elapsed = since(t0);
    if (!res) {
      r.error = describe_failure(res, r.elapsed, endpoint.deadline);
      r.deadline_exceeded = r.error.starts_with("deadline");
      return r;
    }
    r.reachable = true;
    if (res->status != 200) {
      r.error = describe_failure(res, r.elapsed, endpoint.deadline);
      return r;
    }
    auto j = nlohmann::json::parse(res->body);
    for (const auto& f : j.at("formats")) r.formats.push_back(f.get<std::string>());
    for (const auto& [k, v] : j.at("counts").items()) r.counts[k] = v.get<std::size_t>();
  } catch (const std::exception& e) {
    r.elapsed = since(t0);
    r.error = std::string("malformed response: ") + e.what();
  }
  return r;
}

}  // namespace nidm::mediate
