// Minimal scorer server for tests. Speaks protocol version 1 on stdio.
//
//   scorer_stub [mode] [arg]
//     luminance   score = mean luminance of the decoded image (default)
//     fixed       score = 0.42
//     malformed   answers score requests with a non-JSON line
//     version     rejects the handshake with a version-mismatch error
//     newer       answers the handshake with version 2
//     sleep MS    waits MS milliseconds before every result
//     remote      answers score requests with an error message
//     exit        exits right after the handshake
//     stale       sends a result for the previous id before the real one
//     notask      offers no tasks

#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>
#include <thread>

#include <json.hpp>

#include "lidas/image_io.hpp"

using nlohmann::json;

namespace {

void send(const json& j) {
  std::cout << j.dump() << "\n" << std::flush;
}

double mean_luminance(const lidas::Image& im) {
  const auto l = im.luminance();
  double s = 0.0;
  for (double v : l) s += v;
  return l.empty() ? 0.0 : s / static_cast<double>(l.size());
}

}  // namespace

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "luminance";
  const int sleep_ms = argc > 2 ? std::stoi(argv[2]) : 0;
  std::string line;
  while (std::getline(std::cin, line)) {
    json msg;
    try {
      msg = json::parse(line);
    } catch (const json::exception&) {
      send({{"type", "error"}, {"message", "unparseable request"}});
      continue;
    }
    const std::string type = msg.value("type", "");
    if (type == "hello") {
      if (mode == "version" || msg.value("version", 0) != 1) {
        send({{"type", "error"}, {"message", "version mismatch: server speaks 1"}});
        return 0;
      }
      json ready{{"type", "ready"}, {"tasks", mode == "notask" ? json::array() : msg["tasks"]}};
      if (mode == "newer") ready["version"] = 2;
      send(ready);
      if (mode == "exit") return 0;
      continue;
    }
    if (type != "score") {
      send({{"type", "error"}, {"message", "unknown message type"}});
      continue;
    }
    const auto id = msg.at("id").get<std::uint64_t>();
    if (mode == "malformed") {
      std::cout << "this is not json\n" << std::flush;
      continue;
    }
    if (mode == "remote") {
      send({{"type", "error"}, {"id", id}, {"message", "inference failed"}});
      continue;
    }
    if (sleep_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(sleep_ms));
    double score = 0.42;
    if (mode != "fixed") {
      const auto& image = msg.at("image");
      const std::string enc = image.at("encoding");
      const std::string data = image.at("data");
      const lidas::Image im = enc == "path" ? lidas::io::read_png(data) : lidas::io::decode_png(lidas::io::base64_decode(data));
      score = mean_luminance(im);
    }
    json scores = json::object();
    for (const auto& t : msg.at("tasks")) scores[t.get<std::string>()] = score;
    json result{{"type", "result"}, {"id", id}, {"scores", scores}, {"timing_ms", 0.5}};
    result["detections"] = json::array({{{"cls", 0}, {"box", {1.0, 2.0, 5.0, 9.0}}, {"conf", 0.9}}});
    if (mode == "stale" && id > 1) {
      json old = result;
      old["id"] = id - 1;
      old["scores"] = json::object();
      send(old);
    }
    send(result);
  }
  return 0;
}
