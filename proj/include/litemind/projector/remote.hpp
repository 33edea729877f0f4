#pragma once

// HTTP transport for the KNN wire protocol: a client that POSTs to
// <endpoint>/knn, and a loopback-capable server wrapping a local index.

#include <chrono>
#include <memory>
#include <regex>
#include <thread>

#include "httplib.h"

#include "litemind/projector/knn.hpp"

namespace litemind {

struct RemoteKnnOptions {
  double timeout_seconds = 10.0;
};

namespace detail {

struct Endpoint {
  std::string base;    // scheme://host:port
  std::string prefix;  // path prefix without trailing slash
};

inline Endpoint parse_endpoint(const std::string& url) {
  static const std::regex re(R"(^(http://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) {
    throw RemoteError(RemoteError::Kind::validation, "knn endpoint must look like http://host:port[/path]: " + url);
  }
  std::string prefix = m[2].matched ? m[2].str() : "";
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {m[1].str(), prefix};
}

}  // namespace detail

// Parses and checks a response body: every hit has a string id and numeric
// score, at most k hits, scores non-increasing, and at least one hit.
inline KnnResult parse_knn_result(const std::string& body, std::size_t k) {
  using K = RemoteError::Kind;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw RemoteError(K::malformed, "knn response: JSON parse error at byte " + std::to_string(e.byte) + ": " +
                                        e.what());
  }
  if (!j.is_object() || !j.contains("results") || !j["results"].is_array()) {
    throw RemoteError(K::malformed, "knn response: missing array 'results'");
  }
  KnnResult out;
  for (std::size_t i = 0; i < j["results"].size(); ++i) {
    const auto& h = j["results"][i];
    if (!h.is_object() || !h.contains("id") || !h["id"].is_string() || !h.contains("score") ||
        !h["score"].is_number()) {
      throw RemoteError(K::malformed, "knn response: results[" + std::to_string(i) + "] needs string id and score");
    }
    out.push_back({h["id"].get<std::string>(), h["score"].get<double>()});
    if (i > 0 && out[i].score > out[i - 1].score) {
      throw RemoteError(K::malformed, "knn response: scores increase at results[" + std::to_string(i) + "]");
    }
  }
  if (out.empty()) throw RemoteError(K::malformed, "knn response: empty result list");
  if (out.size() > k) {
    throw RemoteError(K::malformed, "knn response: " + std::to_string(out.size()) + " results for k = " +
                                        std::to_string(k));
  }
  return out;
}

template <typename T>
KnnResult remote_knn_search(const std::string& endpoint, std::span<const T> embedding, std::size_t k,
                            const RemoteKnnOptions& opt = {}) {
  using K = RemoteError::Kind;
  if (k < 1) throw RemoteError(K::validation, "knn: k must be >= 1");
  if (embedding.empty()) throw RemoteError(K::validation, "knn: empty query embedding");
  const auto ep = detail::parse_endpoint(endpoint);
  httplib::Client cli(ep.base);
  const auto secs = static_cast<time_t>(opt.timeout_seconds);
  const auto usecs = static_cast<time_t>((opt.timeout_seconds - static_cast<double>(secs)) * 1e6);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);

  const auto start = std::chrono::steady_clock::now();
  auto res = cli.Post(ep.prefix + "/knn", knn_query_json(embedding, k).dump(), "application/json");
  if (!res) {
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const auto err = res.error();
    const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                           (err == httplib::Error::Read && elapsed >= 0.9 * opt.timeout_seconds);
    throw RemoteError(timed_out ? K::timeout : K::connection,
                      "knn request to " + endpoint + " failed: " + httplib::to_string(err));
  }
  if (res->status >= 400) {
    throw RemoteError(K::http_status, "knn request to " + endpoint + " returned HTTP " +
                                          std::to_string(res->status) + ": " + res->body.substr(0, 200));
  }
  return parse_knn_result(res->body, k);
}

// Serves POST <prefix>/knn from a local index. Malformed requests get 400
// with {"error": "..."}.
template <typename T>
class KnnServer {
 public:
  explicit KnnServer(const KnnIndex<T>& idx, std::string prefix = "") : idx_(idx), prefix_(std::move(prefix)) {
    server_.Post(prefix_ + "/knn", [this](const httplib::Request& req, httplib::Response& res) {
      try {
        const auto q = parse_knn_query<T>(nlohmann::json::parse(req.body));
        res.set_content(to_json(knn_search<T>(idx_, q.embedding, q.k)).dump(), "application/json");
      } catch (const nlohmann::json::parse_error& e) {
        res.status = 400;
        res.set_content(nlohmann::json{{"error", std::string("parse error at byte ") + std::to_string(e.byte)}}.dump(),
                        "application/json");
      } catch (const std::exception& e) {
        res.status = 400;
        res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
      }
    });
  }

  ~KnnServer() { stop(); }

  // Binds (port 0 picks a free port) and serves on a background thread.
  int start(const std::string& host = "127.0.0.1", int port = 0) {
    port_ = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (port_ < 0) throw RemoteError(RemoteError::Kind::connection, "cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port_;
  }

  // Serves on the calling thread until stop() is called elsewhere.
  void run(const std::string& host, int port) {
    if (!server_.listen(host, port)) {
      throw RemoteError(RemoteError::Kind::connection, "cannot listen on " + host + ":" + std::to_string(port));
    }
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const { return port_; }

 private:
  const KnnIndex<T>& idx_;
  std::string prefix_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = -1;
};

}  // namespace litemind
