#include "lidas/external_scorer.hpp"

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <cstring>

#include "lidas/image_io.hpp"

namespace lidas {

namespace {

using Clock = std::chrono::steady_clock;

int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  return static_cast<int>(std::clamp<long long>(left, 0, 1'000'000));
}

// Line-oriented I/O over a pair of file descriptors.
class FdChannel : public LineChannel {
 public:
  FdChannel(int read_fd, int write_fd, pid_t child, bool is_socket)
      : read_fd_(read_fd), write_fd_(write_fd), child_(child), socket_(is_socket) {}

  ~FdChannel() override {
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    if (child_ > 0) {
      // Closing stdin asks the server to exit; give it a moment, then kill.
      int status = 0;
      for (int i = 0; i < 50; ++i) {
        if (::waitpid(child_, &status, WNOHANG) == child_) return;
        ::usleep(2000);
      }
      ::kill(child_, SIGKILL);
      ::waitpid(child_, &status, 0);
    }
  }

  void write_line(const std::string& line, Clock::time_point deadline) override {
    if (write_fd_ < 0) throw TransportError("scorer channel is closed");
    std::string msg = line + "\n";
    std::size_t off = 0;
    while (off < msg.size()) {
      pollfd pfd{write_fd_, POLLOUT, 0};
      const int rc = ::poll(&pfd, 1, remaining_ms(deadline));
      if (rc == 0) throw TimeoutError("scorer write timed out");
      if (rc < 0) {
        if (errno == EINTR) continue;
        fail("poll");
      }
      const ssize_t n = socket_ ? ::send(write_fd_, msg.data() + off, msg.size() - off, MSG_NOSIGNAL)
                                : ::write(write_fd_, msg.data() + off, msg.size() - off);
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        fail("write");
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::string read_line(Clock::time_point deadline) override {
    while (true) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      if (read_fd_ < 0) throw TransportError("scorer channel is closed");
      pollfd pfd{read_fd_, POLLIN, 0};
      const int rc = ::poll(&pfd, 1, remaining_ms(deadline));
      if (rc == 0) throw TimeoutError("scorer did not answer before the deadline");
      if (rc < 0) {
        if (errno == EINTR) continue;
        fail("poll");
      }
      char chunk[65536];
      const ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
      if (n == 0) {
        close_all();
        throw TransportError("scorer closed the stream");
      }
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        fail("read");
      }
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  [[noreturn]] void fail(const char* what) {
    const std::string msg = std::string("scorer ") + what + " failed: " + std::strerror(errno);
    close_all();
    throw TransportError(msg);
  }

  void close_all() {
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    write_fd_ = -1;
    read_fd_ = -1;
  }

  int read_fd_;
  int write_fd_;
  pid_t child_;
  bool socket_;
  std::string buffer_;
};

std::unique_ptr<LineChannel> open_tcp(const std::string& hostport) {
  const auto colon = hostport.rfind(':');
  if (colon == std::string::npos) throw TransportError("tcp endpoint needs host:port");
  const std::string host = hostport.substr(0, colon);
  const std::string port = hostport.substr(colon + 1);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), port.c_str(), &hints, &res) != 0 || res == nullptr) {
    throw TransportError("cannot resolve " + hostport);
  }
  int fd = -1;
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw TransportError("cannot connect to " + hostport);
  return std::make_unique<FdChannel>(fd, fd, -1, true);
}

std::unique_ptr<LineChannel> open_process(const std::string& command) {
  int to_child[2];
  int from_child[2];
  if (::pipe(to_child) != 0) throw TransportError("pipe failed");
  if (::pipe(from_child) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw TransportError("pipe failed");
  }
  // A dead child must surface as EPIPE, not terminate the engine.
  ::signal(SIGPIPE, SIG_IGN);
  const pid_t pid = ::fork();
  if (pid < 0) throw TransportError("fork failed");
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  ::fcntl(to_child[1], F_SETFD, FD_CLOEXEC);
  ::fcntl(from_child[0], F_SETFD, FD_CLOEXEC);
  return std::make_unique<FdChannel>(from_child[0], to_child[1], pid, false);
}

nlohmann::json parse_line(const std::string& line) {
  try {
    nlohmann::json j = nlohmann::json::parse(line);
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
      throw ProtocolError("scorer message lacks a string \"type\": " + line.substr(0, 200));
    }
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError("malformed scorer message: " + std::string(e.what()));
  }
}

}  // namespace

void ExternalScorerConfig::apply_environment() {
  if (const char* env = std::getenv("LIDAS_SCORER_TIMEOUT_MS")) {
    try {
      const int v = std::stoi(env);
      if (v <= 0) throw std::invalid_argument("non-positive");
      timeout_ms = v;
    } catch (const std::exception&) {
      throw ConfigError(std::string("LIDAS_SCORER_TIMEOUT_MS must be a positive integer, got '") + env + "'");
    }
  }
}

std::unique_ptr<LineChannel> open_channel(const std::string& endpoint) {
  if (endpoint.rfind("tcp://", 0) == 0) return open_tcp(endpoint.substr(6));
  if (endpoint.rfind("exec:", 0) == 0) return open_process(endpoint.substr(5));
  if (endpoint.empty()) throw ConfigError("external scorer endpoint is empty");
  return open_process(endpoint);
}

nlohmann::json make_hello(const std::vector<std::string>& tasks) {
  return {{"type", "hello"}, {"version", kProtocolVersion}, {"tasks", tasks}};
}

nlohmann::json make_score_request(std::uint64_t id, ImageEncoding encoding, const std::string& data,
                                  const std::vector<std::string>& tasks) {
  return {{"type", "score"},
          {"id", id},
          {"image", {{"encoding", encoding == ImageEncoding::png_base64 ? "png-base64" : "path"}, {"data", data}}},
          {"tasks", tasks}};
}

void parse_ready(const std::string& line, const std::vector<std::string>& tasks) {
  const nlohmann::json j = parse_line(line);
  const std::string type = j["type"];
  if (type == "error") {
    const std::string msg = j.value("message", std::string{});
    if (msg.find("version") != std::string::npos) throw VersionMismatchError("scorer rejected handshake: " + msg);
    throw RemoteError("scorer rejected handshake: " + msg);
  }
  if (type != "ready") throw ProtocolError("expected \"ready\", got \"" + type + "\"");
  if (j.contains("version") && j["version"] != kProtocolVersion) {
    throw VersionMismatchError("scorer speaks protocol version " + j["version"].dump());
  }
  try {
    const auto offered = j.at("tasks").get<std::vector<std::string>>();
    for (const auto& t : tasks) {
      if (std::find(offered.begin(), offered.end(), t) == offered.end()) {
        throw ProtocolError("scorer does not offer task '" + t + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed ready message: ") + e.what());
  }
}

ScoreReport parse_result(const std::string& line, std::uint64_t id) {
  const nlohmann::json j = parse_line(line);
  const std::string type = j["type"];
  try {
    if (type == "error") {
      throw RemoteError("scorer error for request " + std::to_string(id) + ": " +
                        j.value("message", std::string{"(no message)"}));
    }
    if (type != "result") throw ProtocolError("expected \"result\", got \"" + type + "\"");
    if (j.at("id").get<std::uint64_t>() != id) {
      throw ProtocolError("result id " + j["id"].dump() + " does not match request " + std::to_string(id));
    }
    ScoreReport report;
    for (const auto& [task, value] : j.at("scores").items()) {
      if (!value.is_number()) throw ProtocolError("score for '" + task + "' is not a number");
      const double v = value.get<double>();
      if (!std::isfinite(v)) throw ProtocolError("score for '" + task + "' is not finite");
      report.tasks.push_back({task, v, true});
    }
    if (j.contains("detections")) {
      for (const auto& d : j["detections"]) {
        const auto box = d.at("box").get<std::vector<double>>();
        if (box.size() != 4) throw ProtocolError("detection box needs 4 numbers");
        Detection det{d.at("cls").get<int>(), {box[0], box[1], box[2], box[3]}, d.at("conf").get<double>()};
        if (!(det.conf >= 0.0 && det.conf <= 1.0)) throw ProtocolError("detection confidence outside [0,1]");
        report.detections.push_back(det);
      }
    }
    if (j.contains("mask_path") && j["mask_path"].is_string()) report.mask_path = j["mask_path"].get<std::string>();
    if (j.contains("timing_ms") && j["timing_ms"].is_number()) report.timing_ms = j["timing_ms"].get<double>();
    double total = 0.0;
    for (const auto& t : report.tasks) total += t.score;
    report.total = total;
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed result message: ") + e.what());
  }
}

ExternalScorer::ExternalScorer(ExternalScorerConfig config)
    : ExternalScorer(config, open_channel(config.endpoint)) {}

ExternalScorer::ExternalScorer(ExternalScorerConfig config, std::unique_ptr<LineChannel> channel)
    : config_(std::move(config)), channel_(std::move(channel)) {
  if (config_.timeout_ms <= 0) throw ConfigError("external scorer timeout must be positive");
  handshake();
}

ExternalScorer::~ExternalScorer() = default;

Clock::time_point ExternalScorer::deadline() const {
  return Clock::now() + std::chrono::milliseconds(config_.timeout_ms);
}

void ExternalScorer::handshake() {
  const auto dl = deadline();
  channel_->write_line(make_hello(config_.tasks).dump(), dl);
  parse_ready(channel_->read_line(dl), config_.tasks);
}

ScoreReport ExternalScorer::score(const Image& image, const std::vector<std::string>& tasks) {
  const auto start = Clock::now();
  const auto dl = deadline();
  const std::uint64_t id = next_id_++;
  std::string data;
  struct ScratchFile {
    std::filesystem::path path;
    ~ScratchFile() {
      std::error_code ec;
      if (!path.empty()) std::filesystem::remove(path, ec);
    }
  } scratch;
  if (config_.encoding == ImageEncoding::png_base64) {
    data = io::base64_encode(io::encode_png(image, 8));
  } else {
    scratch.path = config_.scratch_dir / ("lidas_score_" + std::to_string(::getpid()) + "_" +
                                          std::to_string(id) + ".png");
    io::write_png(scratch.path, image, 16);
    data = scratch.path.string();
  }
  channel_->write_line(make_score_request(id, config_.encoding, data, tasks).dump(), dl);
  // Late answers to requests that already timed out carry smaller ids; drop them.
  while (true) {
    const std::string line = channel_->read_line(dl);
    const nlohmann::json peek = parse_line(line);
    if (peek.contains("id") && peek["id"].is_number_unsigned() && peek["id"].get<std::uint64_t>() < id) continue;
    ScoreReport report = parse_result(line, id);
    if (report.timing_ms == 0.0) {
      report.timing_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    }
    return report;
  }
}

}  // namespace lidas
