#include <httplib.h>

#include "hmit/error.hpp"
#include "hmit/jsonl.hpp"
#include "hmit/proofread_codes.hpp"
#include "hmit/service.hpp"
#include "hmit/text.hpp"

namespace hmit::service {

using jsonl::Json;
using memory::SegmentKey;

namespace {

Json annotation_json(const codes::AnnotationRecord& r) {
  Json j{{"code", r.code}, {"excerpt", r.excerpt}};
  j["suggestion"] = r.suggestion ? Json(*r.suggestion) : Json(nullptr);
  j["note"] = r.note ? Json(*r.note) : Json(nullptr);
  return j;
}

Json view_json(const SegmentView& v) {
  Json j{{"doc_id", v.key.doc_id}, {"seg_id", v.key.seg_id}, {"source", v.source_text}};
  if (v.entry) {
    const auto& e = *v.entry;
    j["machine_translation"] = e.machine_translation;
    j["annotations"] = Json::array();
    for (const auto& r : e.annotated_errors) j["annotations"].push_back(annotation_json(r));
    j["annotations_line"] = codes::format_annotations(e.annotated_errors);
    j["final_translation"] = e.final_translation;
    j["origin"] = memory::to_string(e.origin);
    j["version"] = e.version;
  } else {
    j["machine_translation"] = nullptr;
    j["annotations"] = Json::array();
    j["annotations_line"] = nullptr;
    j["final_translation"] = nullptr;
    j["origin"] = nullptr;
    j["version"] = 0;
  }
  return j;
}

Json job_json(const JobStatus& s) {
  Json failed = Json::array();
  for (const auto& k : s.failed) failed.push_back(k.seg_id);
  Json j{{"job_id", s.job_id}, {"doc_id", s.doc_id},       {"config", s.config_name}, {"state", to_string(s.state)},
         {"done", s.done},     {"total", s.total},         {"failed", failed}};
  j["error"] = s.error.empty() ? Json(nullptr) : Json(s.error);
  return j;
}

void send_json(httplib::Response& res, const Json& j, int status = 200) {
  res.status = status;
  res.set_content(j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, Json{{"error", message}}, status);
}

Json parse_body(const httplib::Request& req) {
  try {
    auto j = Json::parse(req.body);
    if (!j.is_object()) throw ValidationError("request body must be a JSON object");
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
}

// Document ids contain '/', so document routes are regexes: group 1 is the
// document, group 2 the paragraph.
std::string doc_param(const httplib::Request& req) { return req.matches[1].str(); }

std::int64_t seg_param(const httplib::Request& req) {
  const auto s = req.matches[2].str();
  try {
    std::size_t used = 0;
    auto v = std::stoll(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw NotFoundError("unknown segment \"" + s + "\"");
}

std::vector<codes::AnnotationRecord> annotations_from(const Json& j) {
  if (j.is_string()) {
    auto parsed = codes::parse_canonical(j.get<std::string>());
    if (!parsed) throw ValidationError("annotations are not in canonical form");
    return *parsed;
  }
  std::vector<codes::AnnotationRecord> out;
  for (const auto& a : j) {
    codes::AnnotationRecord r;
    r.code = a.at("code").get<std::string>();
    r.excerpt = a.at("excerpt").get<std::string>();
    if (a.contains("suggestion") && !a["suggestion"].is_null()) r.suggestion = a["suggestion"].get<std::string>();
    if (a.contains("note") && !a["note"].is_null()) r.note = a["note"].get<std::string>();
    out.push_back(std::move(r));
  }
  return out;
}

/// Maps library exceptions onto status codes.
template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const NotFoundError& e) {
      send_error(res, 404, e.what());
    } catch (const ConflictError& e) {
      send_error(res, 409, e.what());
    } catch (const ValidationError& e) {
      send_error(res, 422, e.what());
    } catch (const ParseError& e) {
      send_error(res, 400, e.what());
    } catch (const nlohmann::json::exception& e) {
      send_error(res, 422, std::string("invalid submission: ") + e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  };
}

}  // namespace

void mount_api(httplib::Server& server, Workspace& ws) {
  server.Get("/api/health", guarded([](const httplib::Request&, httplib::Response& res) {
               send_json(res, Json{{"status", "ok"}});
             }));

  server.Get("/api/registry", guarded([](const httplib::Request&, httplib::Response& res) {
               Json a = Json::array();
               for (const auto& c : codes::registry())
                 a.push_back(Json{{"code", c.code}, {"category", codes::to_string(c.category)}, {"description", c.description}});
               send_json(res, a);
             }));

  server.Get("/api/documents", guarded([&ws](const httplib::Request&, httplib::Response& res) {
               Json a = Json::array();
               for (const auto& d : ws.documents()) {
                 auto views = ws.segments(d);
                 std::size_t translated = 0;
                 for (const auto& v : views) translated += v.entry ? 1 : 0;
                 a.push_back(Json{{"doc_id", d}, {"segments", views.size()}, {"translated", translated}});
               }
               send_json(res, a);
             }));

  server.Get(R"(/api/documents/(.+)/segments)", guarded([&ws](const httplib::Request& req, httplib::Response& res) {
               Json a = Json::array();
               for (const auto& v : ws.segments(doc_param(req))) a.push_back(view_json(v));
               send_json(res, a);
             }));

  server.Get(R"(/api/documents/(.+)/segments/([^/]+))", guarded([&ws](const httplib::Request& req, httplib::Response& res) {
               send_json(res, view_json(ws.segment({doc_param(req), seg_param(req)})));
             }));

  server.Post(R"(/api/documents/(.+)/segments/([^/]+)/edit)", guarded([&ws](const httplib::Request& req, httplib::Response& res) {
                auto body = parse_body(req);
                PostEditSubmission sub;
                sub.key = {doc_param(req), seg_param(req)};
                sub.scope = EditScope::Segment;
                sub.edited_translation = body.at("translation").get<std::string>();
                if (body.contains("version") && !body["version"].is_null())
                  sub.expected_version = body["version"].get<std::uint64_t>();
                if (body.contains("annotations") && !body["annotations"].is_null())
                  sub.editor_annotations = annotations_from(body["annotations"]);
                ws.submit(sub);
                send_json(res, view_json(ws.segment(sub.key)));
              }));

  server.Post(R"(/api/documents/(.+)/replace)", guarded([&ws](const httplib::Request& req, httplib::Response& res) {
                auto body = parse_body(req);
                PostEditSubmission sub;
                sub.key = {doc_param(req), 0};
                sub.scope = EditScope::ReplaceAll;
                sub.find = body.at("find").get<std::string>();
                sub.replace = body.at("replace").get<std::string>();
                auto r = ws.submit(sub);
                Json segs = Json::array();
                for (const auto& e : r.updated) segs.push_back(Json{{"seg_id", e.key.seg_id}, {"version", e.version}});
                send_json(res, Json{{"changes", r.changes}, {"segments", segs}});
              }));

  server.Get(R"(/api/documents/(.+)/vetting-bundle)", guarded([&ws](const httplib::Request& req, httplib::Response& res) {
               res.set_content(ws.vetting_bundle(doc_param(req)), "application/x-ndjson");
             }));

  server.Post("/api/runs", guarded([&ws](const httplib::Request& req, httplib::Response& res) {
                auto body = parse_body(req);
                auto doc = body.at("doc_id").get<std::string>();
                auto config = agents::PipelineConfig::from_json(body.at("config"), ws.config().root);
                std::vector<std::int64_t> segs;
                if (body.contains("seg_ids")) segs = body["seg_ids"].get<std::vector<std::int64_t>>();
                auto id = ws.start_job(doc, config, segs);
                send_json(res, job_json(*ws.job(id)), 202);
              }));

  server.Get("/api/jobs", guarded([&ws](const httplib::Request&, httplib::Response& res) {
               Json a = Json::array();
               for (const auto& j : ws.jobs()) a.push_back(job_json(j));
               send_json(res, a);
             }));

  auto job_or_404 = [&ws](const std::string& id) {
    auto j = ws.job(id);
    if (!j) throw NotFoundError("unknown job \"" + id + "\"");
    return *j;
  };

  server.Get("/api/jobs/:id", guarded([job_or_404](const httplib::Request& req, httplib::Response& res) {
               send_json(res, job_json(job_or_404(req.path_params.at("id"))));
             }));

  server.Get("/api/jobs/:id/runlog", guarded([&ws, job_or_404](const httplib::Request& req, httplib::Response& res) {
               auto j = job_or_404(req.path_params.at("id"));
               auto path = ws.run_log_path(j.job_id);
               if (!std::filesystem::exists(path)) throw ConflictError("run log is written when the job finishes");
               res.set_content(jsonl::read_file(path), "application/x-ndjson");
             }));

  server.Get("/api/jobs/:id/usage", guarded([&ws, job_or_404](const httplib::Request& req, httplib::Response& res) {
               auto j = job_or_404(req.path_params.at("id"));
               auto path = ws.usage_path(j.job_id);
               if (!std::filesystem::exists(path)) throw ConflictError("usage ledger is written when the job finishes");
               res.set_content(jsonl::read_file(path), "application/x-ndjson");
             }));

  server.Get("/api/cost", guarded([&ws](const httplib::Request& req, httplib::Response& res) {
               std::vector<std::string> runs;
               for (auto& r : text::split_whitespace(std::string(req.get_param_value("runs")) + " ")) {
                 std::size_t start = 0;
                 for (;;) {
                   auto comma = r.find(',', start);
                   auto part = r.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
                   if (!part.empty()) runs.push_back(part);
                   if (comma == std::string::npos) break;
                   start = comma + 1;
                 }
               }
               res.set_content(ws.cost_report(runs), "text/plain; charset=utf-8");
             }));

  server.Post("/api/eval-sheets", guarded([&ws](const httplib::Request& req, httplib::Response& res) {
                auto body = parse_body(req);
                std::vector<std::pair<std::string, std::string>> systems;
                for (const auto& s : body.at("systems"))
                  systems.emplace_back(s.at("system_id").get<std::string>(), s.at("run_id").get<std::string>());
                auto id = ws.export_eval_sheet(systems, body.at("sample_size").get<std::size_t>(),
                                               body.value("seed", std::uint64_t{0}));
                send_json(res, Json{{"sheet_id", id}}, 201);
              }));

  // the sealed mapping stays on disk; only the blinded sheet is served
  server.Get("/api/eval-sheets/:id", guarded([&ws](const httplib::Request& req, httplib::Response& res) {
               const auto& id = req.path_params.at("id");
               if (id.find('/') != std::string::npos || id.find("..") != std::string::npos || id.find('.') != std::string::npos)
                 throw NotFoundError("unknown sheet");
               auto path = ws.eval_sheet_path(id);
               if (!std::filesystem::exists(path)) throw NotFoundError("unknown sheet \"" + id + "\"");
               res.set_content(jsonl::read_file(path), "text/tab-separated-values; charset=utf-8");
             }));
}

}  // namespace hmit::service
