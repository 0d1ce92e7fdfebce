#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pack/episode.hpp"
#include "pack/manifest.hpp"

namespace pack {

inline std::string base64_encode(std::string_view in) {
  static constexpr char tbl[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((in.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < in.size(); i += 3) {
    const std::uint32_t v = (std::uint8_t(in[i]) << 16) | (std::uint8_t(in[i + 1]) << 8) | std::uint8_t(in[i + 2]);
    out += {tbl[v >> 18], tbl[(v >> 12) & 63], tbl[(v >> 6) & 63], tbl[v & 63]};
  }
  if (i + 1 == in.size()) {
    const std::uint32_t v = std::uint8_t(in[i]) << 16;
    out += {tbl[v >> 18], tbl[(v >> 12) & 63], '=', '='};
  } else if (i + 2 == in.size()) {
    const std::uint32_t v = (std::uint8_t(in[i]) << 16) | (std::uint8_t(in[i + 1]) << 8);
    out += {tbl[v >> 18], tbl[(v >> 12) & 63], tbl[(v >> 6) & 63], '='};
  }
  return out;
}

inline std::string base64_decode(std::string_view in) {
  auto val = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  if (in.size() % 4 != 0) throw ProtocolError("base64 length is not a multiple of 4");
  std::string out;
  out.reserve(in.size() / 4 * 3);
  for (std::size_t i = 0; i < in.size(); i += 4) {
    int v[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      if (in[i + k] == '=' && i + 4 == in.size() && k >= 2) {
        v[k] = 0;
        ++pad;
      } else if ((v[k] = val(in[i + k])) < 0) {
        throw ProtocolError("invalid base64 character");
      }
    }
    const std::uint32_t w = (v[0] << 18) | (v[1] << 12) | (v[2] << 6) | v[3];
    out.push_back(static_cast<char>(w >> 16));
    if (pad < 2) out.push_back(static_cast<char>((w >> 8) & 0xff));
    if (pad < 1) out.push_back(static_cast<char>(w & 0xff));
  }
  return out;
}

// 224 x 224 little-endian float32, row-major.
inline std::string encode_observation(const Observation& obs) {
  std::string bytes(obs.image.size() * 4, '\0');
  for (std::size_t i = 0; i < obs.image.size(); ++i) {
    const float f = static_cast<float>(obs.image.values()[i]);
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    for (int k = 0; k < 4; ++k) bytes[i * 4 + k] = static_cast<char>((u >> (8 * k)) & 0xff);
  }
  return base64_encode(bytes);
}

inline std::vector<float> decode_observation(std::string_view b64) {
  const std::string bytes = base64_decode(b64);
  if (bytes.size() != kObservationSize * kObservationSize * 4) throw ProtocolError("observation has wrong size");
  std::vector<float> out(kObservationSize * kObservationSize);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t u = 0;
    for (int k = 0; k < 4; ++k) u |= std::uint32_t(std::uint8_t(bytes[i * 4 + k])) << (8 * k);
    std::memcpy(&out[i], &u, 4);
  }
  return out;
}

// Engine side of the newline-delimited JSON protocol.  Requests:
//   {"cmd":"reset","seed":int,"episode":[ids]}
//   {"cmd":"step","action":[x,y,theta]}      (optional "orientation": int)
//   {"cmd":"close"}
// Responses to reset/step:
//   {"obs":base64,"reward":num,"terminated":bool,"info":{"outcome","C","S"}}
// Every failure (malformed JSON, unknown ids, protocol misuse) produces
// {"error": message}; exactly one response line per request line.
class WireSession {
 public:
  WireSession(const ObjectLibrary& lib, EnvConfig cfg) : lib_(lib), env_(std::move(cfg)) {}

  bool closed() const { return closed_; }
  const PackingEnv& env() const { return env_; }

  std::string handle(std::string_view line) {
    auto dump = [](const nlohmann::json& j) { return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace); };
    try {
      const auto req = nlohmann::json::parse(line);
      if (!req.is_object() || !req.contains("cmd") || !req["cmd"].is_string())
        throw ProtocolError("request needs a string 'cmd'");
      const std::string cmd = req["cmd"];
      if (cmd == "reset") return dump(on_reset(req));
      if (cmd == "step") return dump(on_step(req));
      if (cmd == "close") {
        closed_ = true;
        return dump({{"closed", true}});
      }
      throw ProtocolError("unknown cmd '" + cmd + "'");
    } catch (const nlohmann::json::exception& e) {
      return dump({{"error", std::string("bad request: ") + e.what()}});
    } catch (const std::exception& e) {
      return dump({{"error", e.what()}});
    }
  }

  void serve(std::istream& in, std::ostream& out) {
    std::string line;
    while (!closed_ && std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      out << handle(line) << '\n';
      out.flush();
    }
  }

 private:
  nlohmann::json on_reset(const nlohmann::json& req) {
    const auto ids = req.at("episode").get<std::vector<std::string>>();
    std::uint64_t seed = 0;
    if (req.contains("seed")) {
      const auto& s = req["seed"];
      if (!s.is_number_unsigned()) throw ProtocolError("seed must be a non-negative integer");
      seed = s.get<std::uint64_t>();
    }
    auto objects = lib_.resolve(ids);
    const Observation obs = env_.reset(std::move(objects), seed);
    active_ = true;
    return {{"obs", encode_observation(obs)},
            {"reward", 0.0},
            {"terminated", false},
            {"info", {{"outcome", "reset"}, {"C", 0.0}, {"S", 0}}}};
  }

  nlohmann::json on_step(const nlohmann::json& req) {
    if (!active_) throw ProtocolError("step before reset");
    const auto a = req.at("action").get<std::vector<double>>();
    if (a.size() != 3) throw ProtocolError("action must be [x, y, theta]");
    const Action action{a[0], a[1], a[2], req.value("orientation", 0)};
    const StepResult r = env_.step(action);
    return {{"obs", encode_observation(r.observation)},
            {"reward", r.reward},
            {"terminated", r.terminated},
            {"info", {{"outcome", to_string(r.outcome)}, {"C", r.record.compactness}, {"S", r.record.stable ? 1 : 0}}}};
  }

  const ObjectLibrary& lib_;
  PackingEnv env_;
  bool active_ = false;
  bool closed_ = false;
};

}  // namespace pack
