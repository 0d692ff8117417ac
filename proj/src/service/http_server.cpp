#include <httplib.h>

#include <chrono>
#include <ctime>
#include <mutex>
#include <ostream>

#include "chessrl/errors.hpp"
#include "chessrl/service/service.hpp"

namespace chessrl::service {
namespace {

constexpr const char* kLatencyHeader = "X-Latency-Ms";

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

}  // namespace

struct HttpServer::Impl {
  const RewardService& service;
  std::ostream* log;
  std::mutex log_mu;
  httplib::Server server;

  Impl(const RewardService& s, std::ostream* l) : service(s), log(l) {}

  using Handler = std::pair<int, nlohmann::ordered_json> (RewardService::*)(const std::string&) const;

  void post(const std::string& path, Handler h) {
    server.Post(path, [this, h](const httplib::Request& req, httplib::Response& res) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto [status, body] = (service.*h)(req.body);
      res.status = status;
      res.set_content(body.dump(), "application/json");
      const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      res.set_header(kLatencyHeader, std::to_string(ms));
    });
  }

  void write_log(const httplib::Request& req, const httplib::Response& res) {
    if (log == nullptr) return;
    nlohmann::ordered_json line;
    line["ts"] = utc_timestamp();
    line["method"] = req.method;
    line["path"] = req.path;
    line["status"] = res.status;
    line["request_bytes"] = req.body.size();
    line["response_bytes"] = res.body.size();
    if (res.has_header(kLatencyHeader))
      line["latency_ms"] = std::stod(res.get_header_value(kLatencyHeader));
    else
      line["latency_ms"] = nullptr;
    line["remote"] = req.remote_addr;
    const std::lock_guard<std::mutex> lock(log_mu);
    *log << line.dump() << '\n' << std::flush;
  }
};

HttpServer::HttpServer(const RewardService& service, std::ostream* access_log)
    : impl_(std::make_unique<Impl>(service, access_log)) {
  auto& svr = impl_->server;
  const auto& cfg = service.config();
  const int threads = cfg.http_threads;
  svr.new_task_queue = [threads] { return new httplib::ThreadPool(static_cast<std::size_t>(threads)); };
  const auto timeout_s = static_cast<time_t>((cfg.request_timeout_ms + 999) / 1000);
  svr.set_read_timeout(timeout_s);
  svr.set_write_timeout(timeout_s);
  svr.set_payload_max_length(64u << 20);
  // SO_REUSEADDR only: the library default also sets SO_REUSEPORT, which
  // would let a second server share the port instead of raising BindError.
  svr.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  });

  impl_->post("/v1/score", &RewardService::handle_score);
  impl_->post("/v1/legal", &RewardService::handle_legal);
  impl_->post("/v1/diag/board-state", &RewardService::handle_board_state);
  impl_->post("/v1/diag/two-candidate", &RewardService::handle_two_candidate);
  auto health = [this](const httplib::Request&, httplib::Response& res) {
    res.status = 200;
    res.set_content(impl_->service.health().dump(), "application/json");
  };
  svr.Get("/v1/healthz", health);
  svr.Get("/healthz", health);
  svr.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    const std::string category = res.status == 404 ? "NotFound" : "HttpError";
    res.set_content(RequestError{res.status, category, req.method + " " + req.path, {}}.to_json().dump(),
                    "application/json");
  });
  svr.set_logger([this](const httplib::Request& req, const httplib::Response& res) { impl_->write_log(req, res); });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  auto& svr = impl_->server;
  if (port == 0) {
    const int bound = svr.bind_to_any_port(host);
    if (bound < 0) throw BindError("cannot bind " + host + ":0");
    return bound;
  }
  if (!svr.bind_to_port(host, port)) throw BindError("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace chessrl::service
