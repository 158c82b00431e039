#include "hil/store.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "hil/errors.hpp"
#include "hil/util.hpp"

namespace hil {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool valid_name_char(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '.' ||
         c == '_' || c == '-';
}

void check_segments(const std::string& s, bool allow_slash, const char* what) {
  if (s.empty()) throw InvalidArgument(std::string(what) + " must not be empty");
  std::string segment;
  auto flush = [&]() {
    if (segment.empty()) throw InvalidArgument(std::string(what) + " has an empty segment");
    if (segment == "." || segment == "..") {
      throw InvalidArgument(std::string(what) + " must not contain '.' or '..' segments");
    }
    segment.clear();
  };
  for (char c : s) {
    if (c == '/') {
      if (!allow_slash) throw InvalidArgument(std::string(what) + " must not contain '/'");
      flush();
    } else if (valid_name_char(c)) {
      segment += c;
    } else {
      throw InvalidArgument(std::string(what) + " has invalid character");
    }
  }
  flush();
}

}  // namespace

void validate_key(const StoreKey& key) {
  check_segments(key.bucket, false, "bucket");
  check_segments(key.key, true, "key");
}

LocalDirStore::LocalDirStore(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_);
}

std::string LocalDirStore::put(const StoreKey& key, const std::string& bytes) {
  validate_key(key);
  fs::path path = root_ / key.bucket / key.key;
  fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw TransportError("local store: cannot open " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw TransportError("local store: short write to " + tmp.string());
  }
  fs::rename(tmp, path);
  return sha256_hex(bytes);
}

std::optional<std::string> LocalDirStore::get(const StoreKey& key) {
  validate_key(key);
  fs::path path = root_ / key.bucket / key.key;
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

std::vector<std::string> LocalDirStore::list(const std::string& bucket,
                                             const std::string& prefix) {
  check_segments(bucket, false, "bucket");
  std::vector<std::string> keys;
  fs::path dir = root_ / bucket;
  if (!fs::exists(dir)) return keys;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string rel = fs::relative(entry.path(), dir).generic_string();
    if (rel.size() >= 4 && rel.ends_with(".tmp")) continue;
    if (rel.rfind(prefix, 0) == 0) keys.push_back(rel);
  }
  std::sort(keys.begin(), keys.end());
  return keys;
}

HttpStore::HttpStore(std::string endpoint, std::string token, int max_attempts,
                     int initial_backoff_ms)
    : endpoint_(std::move(endpoint)),
      token_(std::move(token)),
      max_attempts_(max_attempts),
      initial_backoff_ms_(initial_backoff_ms) {
  if (endpoint_.empty()) throw InvalidArgument("http store: empty endpoint");
  while (!endpoint_.empty() && endpoint_.back() == '/') endpoint_.pop_back();
}

HttpStore::Response HttpStore::request(const std::string& method, const std::string& path,
                                       const std::string& body) {
  int backoff = initial_backoff_ms_;
  std::string last_error;
  for (int attempt = 1; attempt <= max_attempts_; ++attempt) {
    httplib::Client client(endpoint_);
    client.set_connection_timeout(5, 0);
    client.set_read_timeout(30, 0);
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

    httplib::Result result = method == "PUT"
                                 ? client.Put(path, headers, body, "application/octet-stream")
                                 : client.Get(path, headers);
    if (result) {
      if (result->status == 401 || result->status == 403) {
        throw PermissionError("store auth failed: HTTP " + std::to_string(result->status));
      }
      if (result->status < 500) {
        Response r;
        r.status = result->status;
        r.body = result->body;
        r.content_sha256 = result->get_header_value("x-content-sha256");
        return r;
      }
      last_error = "HTTP " + std::to_string(result->status);
    } else {
      last_error = to_string(result.error());
    }
    if (attempt < max_attempts_) {
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
      backoff *= 2;
    }
  }
  throw TransportError("store " + method + " " + path + " failed after " +
                           std::to_string(max_attempts_) + " attempts: " + last_error,
                       max_attempts_);
}

std::string HttpStore::put(const StoreKey& key, const std::string& bytes) {
  validate_key(key);
  Response r = request("PUT", "/v1/" + key.bucket + "/" + key.key, bytes);
  if (r.status != 200 && r.status != 201) {
    throw TransportError("store put: HTTP " + std::to_string(r.status), max_attempts_);
  }
  std::string local = sha256_hex(bytes);
  if (!r.content_sha256.empty() && r.content_sha256 != local) {
    throw TransportError("store put: content hash mismatch", 1);
  }
  return local;
}

std::optional<std::string> HttpStore::get(const StoreKey& key) {
  validate_key(key);
  Response r = request("GET", "/v1/" + key.bucket + "/" + key.key, {});
  if (r.status == 404) return std::nullopt;
  if (r.status != 200) {
    throw TransportError("store get: HTTP " + std::to_string(r.status), max_attempts_);
  }
  return r.body;
}

std::vector<std::string> HttpStore::list(const std::string& bucket, const std::string& prefix) {
  check_segments(bucket, false, "bucket");
  std::string path = "/v1/" + bucket;
  if (!prefix.empty()) path += "?prefix=" + httplib::detail::encode_query_param(prefix);
  Response r = request("GET", path, {});
  if (r.status != 200) {
    throw TransportError("store list: HTTP " + std::to_string(r.status), max_attempts_);
  }
  json j = json::parse(r.body, nullptr, false);
  if (j.is_discarded() || !j.is_array()) throw TransportError("store list: malformed body", 1);
  std::vector<std::string> keys;
  for (const json& k : j) keys.push_back(k.get<std::string>());
  return keys;
}

StoreServer::StoreServer(fs::path root, std::string token)
    : store_(std::move(root)), token_(std::move(token)) {}

StoreServer::~StoreServer() { stop(); }

int StoreServer::start() {
  server_ = std::make_unique<httplib::Server>();

  auto authorized = [this](const httplib::Request& req, httplib::Response& res) {
    if (token_.empty()) return true;
    if (req.get_header_value("Authorization") == "Bearer " + token_) return true;
    res.status = 401;
    res.set_content("unauthorized", "text/plain");
    return false;
  };

  // PUT /v1/{bucket}/{key...}
  server_->Put(R"(/v1/([^/]+)/(.+))", [this, authorized](const httplib::Request& req,
                                                         httplib::Response& res) {
    if (!authorized(req, res)) return;
    try {
      std::string hash = store_.put({req.matches[1], req.matches[2]}, req.body);
      res.status = 201;
      res.set_header("x-content-sha256", hash);
    } catch (const InvalidArgument& e) {
      res.status = 400;
      res.set_content(e.what(), "text/plain");
    }
  });

  // GET /v1/{bucket}/{key...}
  server_->Get(R"(/v1/([^/]+)/(.+))", [this, authorized](const httplib::Request& req,
                                                         httplib::Response& res) {
    if (!authorized(req, res)) return;
    try {
      std::optional<std::string> bytes = store_.get({req.matches[1], req.matches[2]});
      if (!bytes) {
        res.status = 404;
        res.set_content("not found", "text/plain");
        return;
      }
      res.set_content(*bytes, "application/octet-stream");
    } catch (const InvalidArgument& e) {
      res.status = 400;
      res.set_content(e.what(), "text/plain");
    }
  });

  // GET /v1/{bucket}?prefix=...
  server_->Get(R"(/v1/([^/]+))", [this, authorized](const httplib::Request& req,
                                                    httplib::Response& res) {
    if (!authorized(req, res)) return;
    try {
      std::string prefix = req.get_param_value("prefix");
      json out = json::array();
      for (const std::string& k : store_.list(req.matches[1], prefix)) out.push_back(k);
      res.set_content(out.dump(), "application/json");
    } catch (const InvalidArgument& e) {
      res.status = 400;
      res.set_content(e.what(), "text/plain");
    }
  });

  port_ = server_->bind_to_any_port("127.0.0.1");
  if (port_ <= 0) throw TransportError("store server: bind failed");
  thread_ = std::make_unique<std::thread>([this]() { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void StoreServer::stop() {
  if (server_) server_->stop();
  if (thread_ && thread_->joinable()) thread_->join();
  thread_.reset();
  server_.reset();
}

std::unique_ptr<ObjectStore> store_from_env() {
  if (const char* dir = std::getenv("SKILLCLOUD_LOCAL_DIR"); dir && *dir) {
    return std::make_unique<LocalDirStore>(dir);
  }
  if (const char* endpoint = std::getenv("SKILLCLOUD_ENDPOINT"); endpoint && *endpoint) {
    const char* token = std::getenv("SKILLCLOUD_TOKEN");
    return std::make_unique<HttpStore>(endpoint, token ? token : "");
  }
  return nullptr;
}

}  // namespace hil
