#pragma once
// Shared fixtures for the unit suites.

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <thread>

#include <httplib.h>

#include "toxigan/corpus.hpp"
#include "toxigan/generator.hpp"

namespace testing {

namespace fs = std::filesystem;

/// Fresh directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("toxigan_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

/// Local HTTP server on an ephemeral port, running until destroyed.
class MockServer {
 public:
  explicit MockServer(const std::function<void(httplib::Server&)>& routes) {
    routes(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    for (int i = 0; i < 200 && !server_.is_running(); ++i) {
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
  }
  ~MockServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  std::string url(const std::string& path) const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

inline void write_file(const fs::path& path, const std::string& text) {
  std::ofstream(path) << text;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

/// Enumerable generator: V-token vocabulary, no end token.
inline toxigan::Generator tiny_generator(std::size_t vocab, std::size_t len,
                                         std::size_t hidden = 4, std::uint64_t seed = 7,
                                         std::size_t embed = 3) {
  toxigan::GeneratorShape shape;
  shape.vocab_size = vocab;
  shape.embed_dim = embed;
  shape.hidden = hidden;
  shape.max_len = len;
  return toxigan::Generator(1, shape, seed);
}

}  // namespace testing
