#pragma once

#include <memory>
#include <string>

#include "hierflow/api/service.hpp"
#include "hierflow/error.hpp"

namespace httplib {
class Server;
}

namespace hierflow::api {

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  ServiceConfig service;
};

// HTTP JSON front end over a Service. Errors are returned as
// {"error": <code>, "message": ...} with a 4xx status.
class Server {
 public:
  explicit Server(ServerConfig config);
  ~Server();

  Service& service() { return *service_; }
  // Binds the socket; returns the bound port. Throws PortInUse.
  int bind();
  // Serves until stop(); bind() is called first when needed.
  void listen();
  void stop();

 private:
  void routes();

  ServerConfig config_;
  std::unique_ptr<Service> service_;
  std::unique_ptr<httplib::Server> http_;
  int port_ = -1;
};

// HTTP status for an engine error code.
int http_status(ErrorCode code);

}  // namespace hierflow::api
