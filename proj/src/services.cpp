#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "spcc/services.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <json.hpp>

#include "spcc/digest.hpp"
#include "spcc/error.hpp"

namespace spcc {

using nlohmann::json;

namespace {

std::atomic<std::size_t> g_requests{0};

struct SplitUrl {
  std::string base;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint URL lacks a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string post_json(const EndpointConfig& config, const json& body) {
  const SplitUrl u = split_url(config.url);
  httplib::Client client(u.base);
  client.set_connection_timeout(config.timeout);
  client.set_read_timeout(config.timeout);
  client.set_write_timeout(config.timeout);
  httplib::Headers headers;
  if (!config.api_key.empty()) headers.emplace("Authorization", "Bearer " + config.api_key);
  ++g_requests;
  auto res = client.Post(u.path, headers, body.dump(), "application/json");
  if (!res) throw ServiceError("request to " + config.url + " failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw ServiceError("request to " + config.url + " returned HTTP " + std::to_string(res->status));
  }
  return res->body;
}

json parse_reply(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw ServiceError(std::string("service reply is not JSON: ") + e.what());
  }
}

template <typename Fn>
auto with_retries(const RetryPolicy& policy, Fn&& fn) {
  std::chrono::milliseconds delay = policy.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      return fn();
    } catch (const ServiceError& e) {
      if (attempt >= policy.max_attempts) throw;
      spdlog::warn("service call failed (attempt {}/{}): {}", attempt, policy.max_attempts, e.what());
      if (policy.sleep) {
        policy.sleep(delay);
      } else {
        std::this_thread::sleep_for(delay);
      }
      delay *= 2;
    }
  }
}

}  // namespace

RetryingVlmClient::RetryingVlmClient(std::shared_ptr<VlmClient> inner, RetryPolicy policy)
    : inner_(std::move(inner)), policy_(std::move(policy)) {}

std::string RetryingVlmClient::complete(const std::vector<ChatMessage>& messages) {
  return with_retries(policy_, [&] { return inner_->complete(messages); });
}

EndpointConfig endpoint_from_env(const std::string& prefix, const std::string& default_model) {
  EndpointConfig c;
  const char* url = std::getenv((prefix + "_URL").c_str());
  if (!url || !*url) throw ConfigError(prefix + "_URL is not set");
  c.url = url;
  if (const char* key = std::getenv((prefix + "_KEY").c_str())) c.api_key = key;
  const char* model = std::getenv((prefix + "_MODEL").c_str());
  c.model = model && *model ? model : default_model;
  return c;
}

HttpVlmClient::HttpVlmClient(EndpointConfig config) : config_(std::move(config)) {}

std::string HttpVlmClient::complete(const std::vector<ChatMessage>& messages) {
  json msgs = json::array();
  for (const auto& m : messages) {
    json content = json::array();
    for (const auto& part : m.content) {
      if (part.kind == ContentPart::Kind::Text) {
        content.push_back({{"type", "text"}, {"text", part.text}});
      } else {
        content.push_back({{"type", "image"}, {"data", base64_encode(part.png)}});
      }
    }
    msgs.push_back({{"role", m.role}, {"content", content}});
  }
  const json reply = parse_reply(post_json(config_, {{"model", config_.model}, {"messages", msgs}}));
  if (!reply.is_object() || !reply.contains("text") || !reply["text"].is_string()) {
    throw ServiceError("service reply lacks a 'text' field");
  }
  return reply["text"].get<std::string>();
}

std::size_t http_request_count() { return g_requests.load(); }

MockVlmClient::MockVlmClient(VlmResponder responder) : responder_(std::move(responder)) {}

std::string MockVlmClient::complete(const std::vector<ChatMessage>& messages) {
  {
    std::lock_guard lock(mutex_);
    requests_.push_back(messages);
  }
  return responder_(messages);
}

std::vector<std::vector<ChatMessage>> MockVlmClient::requests() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

std::size_t MockVlmClient::call_count() const {
  std::lock_guard lock(mutex_);
  return requests_.size();
}

std::string request_text(const std::vector<ChatMessage>& messages) {
  std::string out;
  for (const auto& m : messages) {
    for (const auto& part : m.content) {
      if (part.kind != ContentPart::Kind::Text) continue;
      if (!out.empty()) out += '\n';
      out += part.text;
    }
  }
  return out;
}

std::size_t request_image_count(const std::vector<ChatMessage>& messages) {
  std::size_t n = 0;
  for (const auto& m : messages) {
    for (const auto& part : m.content) n += part.kind == ContentPart::Kind::Image;
  }
  return n;
}

std::vector<double> MockEmbeddingClient::embed(const RasterImage& image) {
  constexpr int kSide = 8;
  std::vector<double> v(kSide * kSide, 0.0);
  std::vector<int> counts(v.size(), 0);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const std::uint8_t* p = image.pixel(x, y);
      const std::size_t cell = static_cast<std::size_t>(y * kSide / image.height) * kSide +
                               static_cast<std::size_t>(x * kSide / image.width);
      v[cell] += (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]) / 255.0;
      ++counts[cell];
    }
  }
  double mean = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (counts[i] > 0) v[i] /= counts[i];
    mean += v[i];
  }
  mean /= static_cast<double>(v.size());
  double norm = 0;
  for (auto& x : v) {
    x -= mean;
    norm += x * x;
  }
  norm = std::sqrt(norm);
  if (norm > 0) {
    for (auto& x : v) x /= norm;
  }
  return v;
}

HttpEmbeddingClient::HttpEmbeddingClient(EndpointConfig config, RetryPolicy policy)
    : config_(std::move(config)), policy_(std::move(policy)) {}

std::vector<double> HttpEmbeddingClient::embed(const RasterImage& image) {
  const json body = {{"model", config_.model}, {"image", base64_encode(encode_png(image))}};
  return with_retries(policy_, [&] {
    const json reply = parse_reply(post_json(config_, body));
    if (!reply.is_object() || !reply.contains("embedding") || !reply["embedding"].is_array()) {
      throw ServiceError("embedding reply lacks an 'embedding' array");
    }
    std::vector<double> v = reply["embedding"].get<std::vector<double>>();
    double norm = 0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0) {
      for (auto& x : v) x /= norm;
    }
    return v;
  });
}

}  // namespace spcc
