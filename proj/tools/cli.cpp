#include "cli.hpp"

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "nidm/api.hpp"
#include "nidm/codecs.hpp"
#include "nidm/error.hpp"
#include "nidm/extractors.hpp"
#include "nidm/mediator.hpp"
#include "nidm/store.hpp"
#include "nidm/terminology.hpp"
#include "nidm/validate.hpp"

namespace nidm::cli {

namespace {

namespace fs = std::filesystem;

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const std::map<std::string, Format> kFormats{{"provn", Format::Provn}, {"xml", Format::Xml}, {"json", Format::Json}};
const std::map<std::string, XmlMode> kXmlModes{{"canonical", XmlMode::Canonical}, {"spm-legacy", XmlMode::SpmLegacy}};

std::string read_input(const std::string& path) {
  std::stringstream ss;
  if (path == "-") {
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(path, "cannot open file");
  ss << in.rdbuf();
  return ss.str();
}

Document read_document(const std::string& path, const std::optional<Format>& from) {
  if (path != "-" && !from) return api::load_document(path);
  const std::string text = read_input(path);
  return parse_document(text, from.value_or(sniff_format(text)));
}

std::string write_document(const Document& doc, Format to, XmlMode mode, Check check) {
  if (to == Format::Xml) return serialize_xml(doc, mode, check);
  return serialize_document(doc, to, check);
}

void emit(const std::string& text, const std::string& output, std::ostream& out) {
  if (output.empty() || output == "-") {
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
    return;
  }
  std::ofstream f(output, std::ios::binary);
  if (!f) throw LoadError(output, "cannot write file");
  f << text;
}

std::string label_of(const Record& r) {
  static const QualifiedName label("prov", "label");
  for (const auto& a : record_attributes(r)) {
    if (a.key == label) return a.value.lexical();
  }
  return {};
}

terms::Registry need_registry(const std::string& path) {
  if (path.empty()) throw UsageError("no registry: pass --registry or set NIDM_REGISTRY");
  return terms::load_registry(path);
}

std::string dot(const Document& doc) {
  std::ostringstream o;
  auto q = [](const std::string& s) {
    std::string r = "\"";
    for (char c : s) {
      if (c == '"' || c == '\\') r += '\\';
      r += c;
    }
    return r + "\"";
  };
  o << "digraph provenance {\n";
  for (const auto& r : doc.records()) {
    switch (category_of(r)) {
      case Category::Entity: o << "  " << q(record_id(r)) << " [shape=box];\n"; break;
      case Category::Activity: o << "  " << q(record_id(r)) << " [shape=ellipse];\n"; break;
      case Category::Agent: o << "  " << q(record_id(r)) << " [shape=house];\n"; break;
      case Category::Relation: {
        const auto& rel = std::get<Relation>(r);
        o << "  " << q(rel.subject) << " -> " << q(rel.object) << " [label=" << q(std::string(to_string(rel.kind)))
          << "];\n";
        if (rel.plan) o << "  " << q(rel.subject) << " -> " << q(*rel.plan) << " [label=\"plan\", style=dashed];\n";
      }
    }
  }
  o << "}\n";
  return o.str();
}

struct Options {
  // shared
  std::string input = "-";
  std::string output;
  std::string from;
  std::string to;
  std::string xml_mode = "canonical";
  std::string registry;
  bool fragment = false;
  // query / serve / mediate
  std::vector<std::string> stores;
  std::string query_text;
  std::string format;
  std::size_t limit = 10000;
  std::string bind = "127.0.0.1:8080";
  std::string default_format = "json";
  std::size_t max_page_size = 1000;
  bool allow_external = false;
  bool quiet = false;
  std::string federation;
  bool strict = false;
  std::vector<std::string> urls;
  long deadline_ms = 5000;
  // extract / closure / terms
  std::string log;
  std::string rules;
  std::string id;
  bool dot = false;
  bool regenerate = false;
  std::vector<std::string> terms;
};

std::optional<Format> opt_format(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return kFormats.at(s);
}

int cmd_validate(const Options& o, std::ostream& out, std::ostream& err) {
  Document doc = read_document(o.input, opt_format(o.from));
  auto report = validate(doc);
  for (const auto& v : report) {
    err << "record " << v.record_index << ": " << to_string(v.code) << ": " << v.message << "\n";
  }
  if (!report.empty()) {
    err << report.size() << " violation" << (report.size() == 1 ? "" : "s") << "\n";
    return 1;
  }
  out << "valid: " << doc.records().size() << " records (" << doc.count(Category::Entity) << " entities, "
      << doc.count(Category::Activity) << " activities, " << doc.count(Category::Agent) << " agents, "
      << doc.count(Category::Relation) << " relations)\n";
  return 0;
}

int cmd_convert(const Options& o, std::ostream& out, std::ostream&) {
  Document doc = read_document(o.input, opt_format(o.from));
  emit(write_document(doc, kFormats.at(o.to), kXmlModes.at(o.xml_mode), o.fragment ? Check::Fragment : Check::Strict),
       o.output, out);
  return 0;
}

int cmd_extract_spm(const Options& o, std::ostream& out, std::ostream&) {
  Document doc = extract::extract_spm_batch(read_input(o.log));
  emit(write_document(doc, kFormats.at(o.to), kXmlModes.at(o.xml_mode), Check::Strict), o.output, out);
  return 0;
}

int cmd_extract_rules(const Options& o, std::ostream& out, std::ostream& err) {
  auto rules = extract::load_rules(o.rules);
  auto result = extract::extract_with_rules(read_input(o.log), rules);
  err << rules.name() << ": " << result.matched_lines << " of " << result.total_lines << " lines matched, "
      << result.unmatched_lines << " unmatched\n";
  emit(write_document(result.document, kFormats.at(o.to), kXmlModes.at(o.xml_mode), Check::Strict), o.output, out);
  return 0;
}

int cmd_extract_replay(const Options& o, std::ostream& out, std::ostream&) {
  auto steps = extract::replay_plan(read_document(o.input, opt_format(o.from)));
  if (o.regenerate) {
    emit(extract::regenerate_spm_log(steps), o.output, out);
    return 0;
  }
  std::string text;
  for (const auto& s : steps) text += extract::to_command(s) + "\n";
  emit(text, o.output, out);
  return 0;
}

std::shared_ptr<Store> store_from(const Options& o) {
  api::StoreSpec spec;
  for (const auto& s : o.stores) {
    if (fs::is_directory(s)) {
      auto sub = api::resolve_store(s);
      spec.sources.insert(spec.sources.end(), sub.sources.begin(), sub.sources.end());
      if (!spec.registry) spec.registry = sub.registry;
    } else {
      spec.sources.push_back(api::split_store_path(s));
    }
  }
  std::optional<fs::path> reg;
  if (!o.registry.empty()) reg = o.registry;
  StoreLimits limits;
  limits.max_results = o.limit;
  return api::open_store(spec, reg, limits);
}

int cmd_query(const Options& o, std::ostream& out, std::ostream& err) {
  auto store = store_from(o);
  auto rs = store->run_query(o.query_text);
  if (!o.format.empty()) {
    out << api::encode_results(rs, kFormats.at(o.format)).body;
    if (o.format == "json") out << "\n";
  } else {
    out << "source\tid\tcategory\tlabel\n";
    for (const auto& row : rs.rows) {
      out << row.source << '\t' << row.id << '\t' << to_string(category_of(row.record)) << '\t' << label_of(row.record)
          << '\n';
    }
  }
  if (rs.truncated) err << "showing " << rs.rows.size() << " of " << rs.total << " matches\n";
  return 0;
}

int cmd_closure(const Options& o, std::ostream& out, std::ostream&) {
  Document doc = read_document(o.input, opt_format(o.from));
  Document c = provenance_closure(doc, o.id);
  if (o.dot) {
    emit(dot(c), o.output, out);
  } else {
    emit(write_document(c, kFormats.at(o.to.empty() ? "provn" : o.to), kXmlModes.at(o.xml_mode), Check::Strict),
         o.output, out);
  }
  return 0;
}

int cmd_terms_resolve(const Options& o, std::ostream& out, std::ostream&) {
  auto reg = need_registry(o.registry);
  for (const auto& t : o.terms) {
    auto q = QualifiedName::parse(t);
    if (!q) throw UsageError("'" + t + "' is not a prefix:local term");
    out << t << '\t' << reg.resolve(*q).str() << '\n';
  }
  return 0;
}

int cmd_terms_list(const Options& o, std::ostream& out, std::ostream&) {
  auto reg = need_registry(o.registry);
  out << "term\tdatatype\tlabel\tdefinition\n";
  for (const auto& [q, d] : reg.definitions()) {
    out << q.str() << '\t' << terms::to_string(d.datatype) << '\t' << d.label << '\t' << d.definition << '\n';
  }
  out << "\nsource\tcanonical\n";
  for (const auto& [src, dst] : reg.mappings()) out << src.str() << '\t' << reg.resolve(src).str() << '\n';
  return 0;
}

int cmd_serve(const Options& o, std::ostream&, std::ostream& err) {
  api::ApiConfig cfg;
  api::parse_bind_address(o.bind, cfg);
  cfg.default_format = kFormats.at(o.default_format);
  cfg.max_page_size = o.max_page_size;
  cfg.allow_external = o.allow_external;
  if (!o.quiet) {
    static std::mutex log_mu;
    cfg.request_log = [&err](const std::string& line) {
      std::lock_guard lock(log_mu);
      err << line << std::endl;
    };
  }
  auto service = api::Service::start(cfg, store_from(o));
  err << "listening on " << service->base_url() << std::endl;
  g_interrupted = false;
  auto prev_int = std::signal(SIGINT, on_signal);
  auto prev_term = std::signal(SIGTERM, on_signal);
  while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  service->stop();
  std::signal(SIGINT, prev_int);
  std::signal(SIGTERM, prev_term);
  err << "stopped" << std::endl;
  return 0;
}

void report_status(const mediate::FederatedResult& r, std::ostream& err) {
  for (const auto& [tag, s] : r.per_source) {
    err << tag << '\t' << (s.ok ? "ok" : "error") << '\t' << s.rows << " rows\t" << s.elapsed.count() << " ms";
    if (!s.ok) err << '\t' << s.error;
    err << '\n';
    for (const auto& c : s.conflicts) err << tag << "\tdatatype conflict\t" << c << '\n';
  }
}

int cmd_mediate(const Options& o, std::ostream& out, std::ostream& err) {
  auto endpoints = mediate::load_federation(o.federation);
  mediate::FederationOptions opts;
  if (!o.registry.empty()) opts.registry = terms::load_registry(o.registry);
  opts.strict = o.strict;
  auto result = mediate::federated_query(endpoints, query::parse_query(o.query_text), opts);
  if (!o.format.empty()) {
    out << serialize_document(mediate::merged_document(result), kFormats.at(o.format), Check::Fragment);
  } else {
    out << "endpoint\tsource\tid\tcategory\tlabel\n";
    for (const auto& row : result.rows) {
      out << row.endpoint << '\t' << row.source << '\t' << row.id << '\t' << to_string(category_of(row.record)) << '\t'
          << label_of(row.record) << '\n';
    }
  }
  report_status(result, err);
  return 0;
}

int cmd_probe(const Options& o, std::ostream& out, std::ostream&) {
  std::vector<mediate::EndpointDescriptor> eps;
  if (!o.federation.empty()) eps = mediate::load_federation(o.federation);
  for (const auto& u : o.urls) eps.push_back({u, u, std::chrono::milliseconds(o.deadline_ms), {}});
  if (eps.empty()) throw UsageError("nothing to probe: pass URLs or --federation");
  out << "endpoint\treachable\tformats\tentities\tactivities\tagents\trelations\tms\terror\n";
  for (const auto& ep : eps) {
    auto r = mediate::probe(ep);
    std::string formats;
    for (const auto& f : r.formats) formats += (formats.empty() ? "" : ",") + f;
    auto count = [&](const char* k) {
      auto it = r.counts.find(k);
      return it == r.counts.end() ? std::string("-") : std::to_string(it->second);
    };
    out << ep.tag << '\t' << (r.reachable ? "yes" : "no") << '\t' << (formats.empty() ? "-" : formats) << '\t'
        << count("entities") << '\t' << count("activities") << '\t' << count("agents") << '\t' << count("relations")
        << '\t' << r.elapsed.count() << '\t' << (r.error.empty() ? "-" : r.error) << '\n';
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"NI-DM provenance toolkit", "nidm"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", "nidm 0.1.0");
  app.failure_message(CLI::FailureMessage::help);
  Options o;
  std::function<int()> action;

  auto formats = CLI::IsMember({"provn", "xml", "json"});
  auto modes = CLI::IsMember({"canonical", "spm-legacy"});
  auto add_registry = [&](CLI::App* c) {
    c->add_option("--registry", o.registry, "Terminology registry file")->envname("NIDM_REGISTRY");
  };

  auto* validate_cmd = app.add_subcommand("validate", "Check a document and report violations");
  validate_cmd->add_option("input", o.input, "Document file or - for stdin");
  validate_cmd->add_option("--from", o.from, "Input format (default: by extension or content)")->check(formats);
  validate_cmd->callback([&] { action = [&] { return cmd_validate(o, out, err); }; });

  auto* convert_cmd = app.add_subcommand("convert", "Convert a document between formats");
  convert_cmd->add_option("input", o.input, "Document file or - for stdin");
  convert_cmd->add_option("--from", o.from, "Input format")->check(formats);
  convert_cmd->add_option("--to", o.to, "Output format")->required()->check(formats);
  convert_cmd->add_option("--xml-mode", o.xml_mode, "XML flavour")->check(modes);
  convert_cmd->add_flag("--fragment", o.fragment, "Allow references to records outside the document");
  convert_cmd->add_option("-o,--output", o.output, "Output file (default stdout)");
  convert_cmd->callback([&] { action = [&] { return cmd_convert(o, out, err); }; });

  auto* extract_cmd = app.add_subcommand("extract", "Build provenance from analysis logs");
  extract_cmd->require_subcommand(1, 1);
  auto* spm = extract_cmd->add_subcommand("spm", "SPM batch log");
  spm->add_option("log", o.log, "Log file or -")->required();
  auto* rules = extract_cmd->add_subcommand("rules", "Generic log with a rule file");
  rules->add_option("log", o.log, "Log file or -")->required();
  rules->add_option("--rules", o.rules, "Rule file")->required();
  for (auto* c : {spm, rules}) {
    c->add_option("--to", o.to, "Output format")->check(formats)->default_str("xml");
    c->add_option("--xml-mode", o.xml_mode, "XML flavour")->check(modes);
    c->add_option("-o,--output", o.output, "Output file (default stdout)");
  }
  spm->callback([&] {
    if (o.to.empty()) o.to = "xml";
    action = [&] { return cmd_extract_spm(o, out, err); };
  });
  rules->callback([&] {
    if (o.to.empty()) o.to = "xml";
    action = [&] { return cmd_extract_rules(o, out, err); };
  });
  auto* replay = extract_cmd->add_subcommand("replay", "List the commands that re-run an extracted pipeline");
  replay->add_option("input", o.input, "Document file or -");
  replay->add_option("--from", o.from, "Input format")->check(formats);
  replay->add_flag("--log", o.regenerate, "Print a regenerated SPM batch log instead");
  replay->add_option("-o,--output", o.output, "Output file (default stdout)");
  replay->callback([&] { action = [&] { return cmd_extract_replay(o, out, err); }; });

  auto* query_cmd = app.add_subcommand("query", "Query documents loaded into an in-memory store");
  query_cmd->add_option("query", o.query_text, "Query text")->required();
  query_cmd->add_option("--store", o.stores, "Store directory, document file, or tag=file (repeatable)")->required();
  query_cmd->add_option("--format", o.format, "Emit results as a document instead of a table")->check(formats);
  query_cmd->add_option("--limit", o.limit, "Result cap")->check(CLI::PositiveNumber);
  add_registry(query_cmd);
  query_cmd->callback([&] { action = [&] { return cmd_query(o, out, err); }; });

  auto* closure_cmd = app.add_subcommand("closure", "Provenance ancestry of one entity");
  closure_cmd->add_option("input", o.input, "Document file or -")->required();
  closure_cmd->add_option("id", o.id, "Entity id")->required();
  closure_cmd->add_option("--from", o.from, "Input format")->check(formats);
  closure_cmd->add_option("--to", o.to, "Output format (default provn)")->check(formats);
  closure_cmd->add_option("--xml-mode", o.xml_mode, "XML flavour")->check(modes);
  closure_cmd->add_flag("--dot", o.dot, "Emit Graphviz DOT text");
  closure_cmd->add_option("-o,--output", o.output, "Output file (default stdout)");
  closure_cmd->callback([&] { action = [&] { return cmd_closure(o, out, err); }; });

  auto* terms_cmd = app.add_subcommand("terms", "Inspect a terminology registry");
  terms_cmd->require_subcommand(1, 1);
  auto* resolve = terms_cmd->add_subcommand("resolve", "Canonical term for each source term");
  resolve->add_option("terms", o.terms, "prefix:local terms")->required();
  add_registry(resolve);
  resolve->callback([&] { action = [&] { return cmd_terms_resolve(o, out, err); }; });
  auto* list = terms_cmd->add_subcommand("list", "Definitions and mappings");
  add_registry(list);
  list->callback([&] { action = [&] { return cmd_terms_list(o, out, err); }; });

  auto* serve_cmd = app.add_subcommand("serve", "Run the REST service until interrupted");
  serve_cmd->add_option("--bind", o.bind, "host:port (port 0 picks a free port)")->capture_default_str();
  serve_cmd->add_option("--store", o.stores, "Store directory, document file, or tag=file (repeatable)");
  serve_cmd->add_option("--default-format", o.default_format, "Format when the request names none")
      ->check(formats)
      ->capture_default_str();
  serve_cmd->add_option("--max-page-size", o.max_page_size, "Largest accepted pageSize")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  serve_cmd->add_flag("--allow-external", o.allow_external, "Permit binding to non-loopback addresses");
  serve_cmd->add_flag("--quiet", o.quiet, "No request log");
  add_registry(serve_cmd);
  serve_cmd->callback([&] { action = [&] { return cmd_serve(o, out, err); }; });

  auto* mediate_cmd = app.add_subcommand("mediate", "Run a query across the endpoints of a federation");
  mediate_cmd->add_option("query", o.query_text, "Query text")->required();
  mediate_cmd->add_option("--federation", o.federation, "Federation file")->required();
  mediate_cmd->add_option("--format", o.format, "Emit merged results as a document")->check(formats);
  mediate_cmd->add_flag("--strict", o.strict, "Fail when the federation is empty");
  add_registry(mediate_cmd);
  mediate_cmd->callback([&] { action = [&] { return cmd_mediate(o, out, err); }; });

  auto* probe_cmd = app.add_subcommand("probe", "Report what endpoints serve");
  probe_cmd->add_option("urls", o.urls, "Endpoint base URLs");
  probe_cmd->add_option("--federation", o.federation, "Federation file");
  probe_cmd->add_option("--deadline", o.deadline_ms, "Milliseconds per URL")->check(CLI::PositiveNumber);
  probe_cmd->callback([&] { action = [&] { return cmd_probe(o, out, err); }; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return e.get_exit_code() == 0 ? app.exit(e, out, err) : (app.exit(e, out, err), 2);
  }
  try {
    return action();
  } catch (const UsageError& e) {
    err << "nidm: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "nidm: " << e.code() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "nidm: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace nidm::cli
