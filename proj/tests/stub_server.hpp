#pragma once

// In-process HTTP stub for exercising the encoder / judge / NLI clients
// against a real socket.

#include <atomic>
#include <functional>
#include <string>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace testing {

class StubServer {
 public:
  using Handler = std::function<nlohmann::json(const nlohmann::json& request)>;

  // Mounts a POST handler at `path` that answers with handler(request)
  // unless fail_after_ is hit, in which case it returns 500.
  StubServer(const std::string& path, Handler handler) : handler_(std::move(handler)) {
    server_.Post(path, [this](const httplib::Request& req, httplib::Response& res) {
      const int call = ++calls_;
      if (fail_after_ >= 0 && call > fail_after_) {
        res.status = 500;
        res.set_content("{\"error\":\"stub failure\"}", "application/json");
        return;
      }
      const auto body = nlohmann::json::parse(req.body);
      res.set_content(handler_(body).dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string url(const std::string& path) const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }

  int calls() const { return calls_.load(); }
  void fail_after(int successful_calls) { fail_after_ = successful_calls; }

 private:
  httplib::Server server_;
  Handler handler_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> calls_{0};
  std::atomic<int> fail_after_{-1};
};

}  // namespace testing
