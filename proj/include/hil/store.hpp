#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace httplib {
class Server;
}

namespace hil {

/// Bucket plus slash-separated object key; key characters restricted to
/// [A-Za-z0-9._/-], no empty segments, no "." or ".." segments.
struct StoreKey {
  std::string bucket;
  std::string key;
};

/// Throws InvalidArgument on malformed keys.
void validate_key(const StoreKey& key);

/// Minimal object-store contract: durable puts (last-writer-wins), byte
/// reads, lexicographically sorted prefix listing.
class ObjectStore {
 public:
  virtual ~ObjectStore() = default;

  /// Stores bytes under key; returns the SHA-256 hex of the bytes.
  virtual std::string put(const StoreKey& key, const std::string& bytes) = 0;

  /// Returns stored bytes or nullopt when absent.
  virtual std::optional<std::string> get(const StoreKey& key) = 0;

  /// Sorted keys under prefix (possibly empty) inside the bucket.
  virtual std::vector<std::string> list(const std::string& bucket,
                                        const std::string& prefix) = 0;
};

/// Directory-backed store: object bytes live at root/bucket/key.
class LocalDirStore : public ObjectStore {
 public:
  explicit LocalDirStore(std::filesystem::path root);

  std::string put(const StoreKey& key, const std::string& bytes) override;
  std::optional<std::string> get(const StoreKey& key) override;
  std::vector<std::string> list(const std::string& bucket, const std::string& prefix) override;

  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
};

/// HTTP/1.1 client for the S3-style subset:
///   PUT /v1/{bucket}/{key}          -> 200/201, x-content-sha256 header
///   GET /v1/{bucket}/{key}          -> 200 bytes | 404
///   GET /v1/{bucket}?prefix={p}     -> 200 JSON array of sorted keys
/// Optional bearer-token auth. Idempotent requests are retried on transport
/// failures and 5xx responses: `max_attempts` tries, backoff doubling from
/// `initial_backoff_ms`.
class HttpStore : public ObjectStore {
 public:
  explicit HttpStore(std::string endpoint, std::string token = {}, int max_attempts = 3,
                     int initial_backoff_ms = 200);

  std::string put(const StoreKey& key, const std::string& bytes) override;
  std::optional<std::string> get(const StoreKey& key) override;
  std::vector<std::string> list(const std::string& bucket, const std::string& prefix) override;

 private:
  struct Response {
    int status = 0;
    std::string body;
    std::string content_sha256;
  };
  Response request(const std::string& method, const std::string& path, const std::string& body);

  std::string endpoint_;
  std::string token_;
  int max_attempts_;
  int initial_backoff_ms_;
};

/// Serves a LocalDirStore over the HTTP subset above; used as the stub
/// backend in tests and for ad-hoc sharing between machines.
class StoreServer {
 public:
  StoreServer(std::filesystem::path root, std::string token = {});
  ~StoreServer();

  /// Binds to 127.0.0.1 on an ephemeral port and serves on a background
  /// thread; returns the bound port.
  int start();
  void stop();
  int port() const { return port_; }

 private:
  LocalDirStore store_;
  std::string token_;
  std::unique_ptr<httplib::Server> server_;
  int port_ = 0;
  std::unique_ptr<std::thread> thread_;
};

/// Builds a store from the environment: SKILLCLOUD_LOCAL_DIR selects the
/// local backend; otherwise SKILLCLOUD_ENDPOINT (+ optional SKILLCLOUD_TOKEN)
/// selects HTTP. Returns nullptr when neither is set.
std::unique_ptr<ObjectStore> store_from_env();

}  // namespace hil
