#include "hierflow/api/server.hpp"

#include <charconv>
#include <optional>
#include <string>

#include <httplib.h>

namespace hierflow::api {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound:
    case ErrorCode::UnknownCode:
    case ErrorCode::UnknownTypeCode:
    case ErrorCode::UnknownAttribute:
    case ErrorCode::UnknownSelection:
    case ErrorCode::UnknownEdge:
      return 404;
    case ErrorCode::NoMatchingEntities:
    case ErrorCode::EmptyCohort:
      return 409;
    case ErrorCode::IoError:
      return 500;
    default:
      return 400;
  }
}

namespace {

using Request = httplib::Request;
using Response = httplib::Response;

void send_json(Response& res, const Json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(Response& res, ErrorCode code, const std::string& message, const Json& extra = {}) {
  Json body = {{"error", std::string(to_string(code))}, {"message", message}};
  if (extra.is_object())
    for (auto it = extra.begin(); it != extra.end(); ++it) body[it.key()] = it.value();
  send_json(res, body, http_status(code));
}

Json body_json(const Request& req) {
  if (req.body.empty()) return Json::object();
  try {
    return Json::parse(req.body);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("request body is not JSON: ") + e.what());
  }
}

std::optional<double> query_double(const Request& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  const std::string text = req.get_param_value(name);
  double value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    fail(ErrorCode::InvalidArgument, std::string("parameter ") + name + " is not a number");
  return value;
}

std::string query_string(const Request& req, const char* name, const std::string& fallback) {
  return req.has_param(name) ? req.get_param_value(name) : fallback;
}

bool query_flag(const Request& req, const char* name) {
  if (!req.has_param(name)) return false;
  const std::string v = req.get_param_value(name);
  return v.empty() || v == "1" || v == "true" || v == "yes";
}

template <class F>
httplib::Server::Handler guarded(F f, const char* echo = nullptr) {
  return [f, echo](const Request& req, Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      Json extra = Json::object();
      if (echo && req.path_params.count(echo)) extra["code"] = req.path_params.at(echo);
      send_error(res, e.code(), e.what(), extra);
    } catch (const std::exception& e) {
      send_error(res, ErrorCode::InvalidArgument, e.what());
    }
  };
}

}  // namespace

Server::Server(ServerConfig config)
    : config_(std::move(config)),
      service_(std::make_unique<Service>(config_.service)),
      http_(std::make_unique<httplib::Server>()) {
  if (config_.port < 0 || config_.port > 65535) fail(ErrorCode::BadConfig, "port out of range");
  if (config_.host.empty()) fail(ErrorCode::BadConfig, "host is empty");
  // Without SO_REUSEPORT a second server on the same port fails to bind.
  http_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
  });
  routes();
}

Server::~Server() { stop(); }

int Server::bind() {
  if (port_ >= 0) return port_;
  if (config_.port == 0) {
    port_ = http_->bind_to_any_port(config_.host);
  } else {
    port_ = http_->bind_to_port(config_.host, config_.port) ? config_.port : -1;
  }
  if (port_ < 0)
    fail(ErrorCode::PortInUse,
         "cannot bind " + config_.host + ":" + std::to_string(config_.port));
  return port_;
}

void Server::listen() {
  bind();
  http_->listen_after_bind();
}

void Server::stop() {
  if (http_) http_->stop();
}

void Server::routes() {
  Service& s = *service_;
  auto& h = *http_;

  h.Get("/health", guarded([](const Request&, Response& res) {
          send_json(res, {{"status", "ok"}});
        }));

  h.Get("/datasets", guarded([&s](const Request&, Response& res) {
          send_json(res, s.datasets());
        }));
  h.Post("/datasets", guarded([&s](const Request& req, Response& res) {
           send_json(res, s.add_dataset(body_json(req)), 201);
         }));
  h.Get("/datasets/:d", guarded([&s](const Request& req, Response& res) {
          send_json(res, dataset_json(*s.dataset(req.path_params.at("d"))));
        }));
  h.Post("/datasets/:d/query", guarded([&s](const Request& req, Response& res) {
           const QuerySpec spec = parse_query_spec(req.body.empty() ? "{}" : req.body);
           send_json(res, s.query(req.path_params.at("d"), spec), 201);
         }));

  h.Get("/cohorts/:c", guarded([&s](const Request& req, Response& res) {
          send_json(res, cohort_json(*s.cohort(req.path_params.at("c"))));
        }));
  h.Post("/cohorts/:c/filter", guarded([&s](const Request& req, Response& res) {
           const AttributeConstraint c = parse_attribute_constraint(req.body);
           send_json(res, s.filter(req.path_params.at("c"), c), 201);
         }));
  h.Get("/cohorts/:c/timeline", guarded([&s](const Request& req, Response& res) {
          send_json(res, s.timeline(req.path_params.at("c"), query_flag(req, "detail")));
        }));
  h.Post("/cohorts/:c/selection", guarded([&s](const Request& req, Response& res) {
           const Json b = body_json(req);
           std::string selection = "whole";
           if (b.contains("selection")) selection = b.at("selection").get<std::string>();
           else if (b.contains("milestone")) selection = "milestone:" + b.at("milestone").get<std::string>();
           else if (b.contains("edge")) selection = "edge:" + b.at("edge").get<std::string>();
           std::optional<double> r;
           if (b.contains("r")) r = b.at("r").get<double>();
           else if (b.contains("R")) r = b.at("R").get<double>();
           send_json(res, s.select(req.path_params.at("c"), selection, r));
         }));
  h.Post("/cohorts/:c/milestones", guarded([&s](const Request& req, Response& res) {
           const Json b = body_json(req);
           if (!b.contains("edge") || !b.contains("code"))
             fail(ErrorCode::InvalidArgument, "body needs 'edge' and 'code'");
           send_json(res,
                     s.add_milestone(req.path_params.at("c"), b.at("edge").get<std::string>(),
                                     b.at("code").get<std::string>()),
                     201);
         }));
  h.Post("/cohorts/:c/locks", guarded([&s](const Request& req, Response& res) {
           const Json b = body_json(req);
           std::vector<std::string> codes;
           if (b.contains("codes")) codes = b.at("codes").get<std::vector<std::string>>();
           send_json(res, s.lock(req.path_params.at("c"), codes));
         }));
  h.Get("/cohorts/:c/scatter", guarded([&s](const Request& req, Response& res) {
          send_json(res, s.scatter(req.path_params.at("c"), query_double(req, "R")));
        }));
  h.Get("/cohorts/:c/cut", guarded([&s](const Request& req, Response& res) {
          const std::string c = req.path_params.at("c");
          const auto r = query_double(req, "R");
          if (query_string(req, "format", "json") == "csv") {
            res.set_content(s.cut_csv(c, r), "text/csv");
          } else {
            send_json(res, s.cut(c, r));
          }
        }));
  h.Get("/cohorts/:c/focus/:code", guarded(
                                         [&s](const Request& req, Response& res) {
                                           send_json(res, s.focus(req.path_params.at("c"),
                                                                  req.path_params.at("code")));
                                         },
                                         "code"));
  h.Get("/cohorts/:c/survival", guarded([&s](const Request& req, Response& res) {
          send_json(res, s.survival(req.path_params.at("c")));
        }));
  h.Get("/cohorts/:c/attributes", guarded([&s](const Request& req, Response& res) {
          send_json(res, s.attributes(req.path_params.at("c")));
        }));
  h.Get("/cohorts/:c/events/table", guarded([&s](const Request& req, Response& res) {
          const TableSort sort = parse_table_sort(query_string(req, "sort", "seq_count"));
          const std::string order = query_string(req, "order", "desc");
          if (order != "asc" && order != "desc")
            fail(ErrorCode::InvalidArgument, "order must be asc or desc");
          const std::string scope = query_string(req, "scope", "cut");
          if (scope != "cut" && scope != "all")
            fail(ErrorCode::InvalidArgument, "scope must be cut or all");
          send_json(res, s.events_table(req.path_params.at("c"), sort, order == "asc", scope == "all"));
        }));
  h.Get("/cohorts/:c/stats.csv", guarded([&s](const Request& req, Response& res) {
          res.set_content(s.stats_csv(req.path_params.at("c")), "text/csv");
        }));
}

}  // namespace hierflow::api
