#pragma once

// Client side of the external-scorer wire protocol (version 1): newline-
// delimited JSON over a child process's stdio or a TCP stream.
//
//   -> {"type":"hello","version":1,"tasks":[...]}
//   <- {"type":"ready","tasks":[...]}
//   -> {"type":"score","id":N,"image":{"encoding":"png-base64"|"path","data":...},"tasks":[...]}
//   <- {"type":"result","id":N,"scores":{...},"detections":[...],"mask_path":...}
//   <- {"type":"error","id":N,"message":"..."}

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lidas/image.hpp"
#include "lidas/scorer.hpp"

namespace lidas {

inline constexpr int kProtocolVersion = 1;

/// Remote side answered with an error message for a request.
class RemoteError : public ScorerError {
 public:
  using ScorerError::ScorerError;
};

enum class ImageEncoding { png_base64, path };

struct ExternalScorerConfig {
  /// "tcp://host:port", "exec:<command>" or a bare command line.
  std::string endpoint;
  std::vector<std::string> tasks{"detection"};
  int timeout_ms = 10000;
  ImageEncoding encoding = ImageEncoding::png_base64;
  /// Directory for images sent with the "path" encoding.
  std::filesystem::path scratch_dir = std::filesystem::temp_directory_path();

  /// Applies LIDAS_SCORER_TIMEOUT_MS when set.
  void apply_environment();
};

/// Byte stream carrying one protocol message per line.
class LineChannel {
 public:
  virtual ~LineChannel() = default;
  virtual void write_line(const std::string& line, std::chrono::steady_clock::time_point deadline) = 0;
  /// Returns the next line without its terminator; throws TimeoutError at the deadline.
  virtual std::string read_line(std::chrono::steady_clock::time_point deadline) = 0;
};

std::unique_ptr<LineChannel> open_channel(const std::string& endpoint);

// Message (de)serialization, exposed for golden-transcript tests.
nlohmann::json make_hello(const std::vector<std::string>& tasks);
nlohmann::json make_score_request(std::uint64_t id, ImageEncoding encoding, const std::string& data,
                                  const std::vector<std::string>& tasks);
/// Validates a "ready" reply against the requested tasks.
void parse_ready(const std::string& line, const std::vector<std::string>& tasks);
/// Parses a "result" line for request `id`; "error" lines become RemoteError.
ScoreReport parse_result(const std::string& line, std::uint64_t id);

class ExternalScorer {
 public:
  /// Opens the channel and performs the handshake.
  explicit ExternalScorer(ExternalScorerConfig config);
  /// Uses an already open channel (tests).
  ExternalScorer(ExternalScorerConfig config, std::unique_ptr<LineChannel> channel);
  ~ExternalScorer();

  ExternalScorer(const ExternalScorer&) = delete;
  ExternalScorer& operator=(const ExternalScorer&) = delete;

  ScoreReport score(const Image& image, const std::vector<std::string>& tasks);
  ScoreReport score(const Image& image) { return score(image, config_.tasks); }

  const ExternalScorerConfig& config() const { return config_; }
  std::uint64_t requests_sent() const { return next_id_ - 1; }

 private:
  void handshake();
  std::chrono::steady_clock::time_point deadline() const;

  ExternalScorerConfig config_;
  std::unique_ptr<LineChannel> channel_;
  std::uint64_t next_id_ = 1;
};

}  // namespace lidas
