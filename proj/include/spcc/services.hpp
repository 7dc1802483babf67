#pragma once

// Clients for the external chat-with-images and image-embedding services.
//
// Chat wire format (POST to the endpoint URL):
//   {"model": ..., "messages": [{"role": ..., "content": [
//       {"type": "text", "text": ...} | {"type": "image", "data": <base64 png>}]}]}
//   -> {"text": ...}
// Embedding wire format:
//   {"model": ..., "image": <base64 png>} -> {"embedding": [...]}

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "spcc/render.hpp"

namespace spcc {

struct ContentPart {
  enum class Kind { Text, Image };
  Kind kind = Kind::Text;
  std::string text;
  std::vector<std::uint8_t> png;

  static ContentPart of_text(std::string t) { return {Kind::Text, std::move(t), {}}; }
  static ContentPart of_image(std::vector<std::uint8_t> bytes) { return {Kind::Image, {}, std::move(bytes)}; }
};

struct ChatMessage {
  std::string role = "user";
  std::vector<ContentPart> content;
};

class VlmClient {
 public:
  virtual ~VlmClient() = default;
  // Throws ServiceError on transport or protocol failure.
  virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{250};
  // Overridable so tests do not sleep.
  std::function<void(std::chrono::milliseconds)> sleep;
};

// Retries ServiceError failures with exponential backoff, then rethrows.
class RetryingVlmClient : public VlmClient {
 public:
  RetryingVlmClient(std::shared_ptr<VlmClient> inner, RetryPolicy policy = {});
  std::string complete(const std::vector<ChatMessage>& messages) override;

 private:
  std::shared_ptr<VlmClient> inner_;
  RetryPolicy policy_;
};

struct EndpointConfig {
  std::string url;  // scheme://host[:port]/path
  std::string model;
  std::string api_key;
  std::chrono::seconds timeout{60};
};

// Reads <prefix>_URL, <prefix>_KEY and optionally <prefix>_MODEL. Throws
// ConfigError when the URL is unset.
EndpointConfig endpoint_from_env(const std::string& prefix, const std::string& default_model);

class HttpVlmClient : public VlmClient {
 public:
  explicit HttpVlmClient(EndpointConfig config);
  std::string complete(const std::vector<ChatMessage>& messages) override;

 private:
  EndpointConfig config_;
};

// Total HTTP requests issued by any client in this process.
std::size_t http_request_count();

using VlmResponder = std::function<std::string(const std::vector<ChatMessage>&)>;

// Deterministic in-process stand-in that records every request.
class MockVlmClient : public VlmClient {
 public:
  explicit MockVlmClient(VlmResponder responder);
  std::string complete(const std::vector<ChatMessage>& messages) override;

  std::vector<std::vector<ChatMessage>> requests() const;
  std::size_t call_count() const;

 private:
  VlmResponder responder_;
  mutable std::mutex mutex_;
  std::vector<std::vector<ChatMessage>> requests_;
};

// All text parts of a request joined with newlines.
std::string request_text(const std::vector<ChatMessage>& messages);
std::size_t request_image_count(const std::vector<ChatMessage>& messages);

class EmbeddingClient {
 public:
  virtual ~EmbeddingClient() = default;
  virtual std::vector<double> embed(const RasterImage& image) = 0;
};

// 8x8 grayscale thumbnail of the image, mean-centred and unit-normalized.
class MockEmbeddingClient : public EmbeddingClient {
 public:
  std::vector<double> embed(const RasterImage& image) override;
};

class HttpEmbeddingClient : public EmbeddingClient {
 public:
  explicit HttpEmbeddingClient(EndpointConfig config, RetryPolicy policy = {});
  std::vector<double> embed(const RasterImage& image) override;

 private:
  EndpointConfig config_;
  RetryPolicy policy_;
};

}  // namespace spcc
