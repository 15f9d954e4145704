#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nep/dynamics.hpp"
#include "nep/errors.hpp"

namespace nep {

inline std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct Checkpoint {
  int epoch = 0;
  std::string config_digest = "-";
  std::string pca_ref = "-";
  std::string rng_state = "-";
  Trainables trainables;
};

// Canonical text format; save -> load -> save is byte-identical. Doubles are
// written as hexfloats so no precision is lost.
inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint " + path);
  out << "nep-checkpoint v1\n";
  out << "epoch " << ck.epoch << "\n";
  out << "digest " << (ck.config_digest.empty() ? "-" : ck.config_digest) << "\n";
  out << "pca " << (ck.pca_ref.empty() ? "-" : ck.pca_ref) << "\n";
  out << "rng " << (ck.rng_state.empty() ? "-" : ck.rng_state) << "\n";
  char buf[64];
  auto emit_vec = [&](const char* tag, const std::vector<double>& v) {
    out << tag << " " << v.size();
    for (double x : v) {
      std::snprintf(buf, sizeof buf, "%a", x);
      out << " " << buf;
    }
    out << "\n";
  };
  emit_vec("V", ck.trainables.potential);
  emit_vec("w", ck.trainables.pump_weights);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read checkpoint " + path);
  std::string line;
  if (!std::getline(in, line) || line != "nep-checkpoint v1")
    throw Error("unrecognized checkpoint format in " + path);
  Checkpoint ck;
  auto expect_key = [&](const char* key) {
    if (!std::getline(in, line)) throw Error("truncated checkpoint " + path);
    const std::string prefix = std::string(key) + " ";
    if (line.rfind(prefix, 0) != 0)
      throw Error("checkpoint " + path + ": expected '" + key + "' line");
    return line.substr(prefix.size());
  };
  ck.epoch = std::atoi(expect_key("epoch").c_str());
  ck.config_digest = expect_key("digest");
  ck.pca_ref = expect_key("pca");
  ck.rng_state = expect_key("rng");
  auto parse_vec = [&](const char* key, std::vector<double>& v) {
    std::istringstream is(expect_key(key));
    std::size_t count = 0;
    if (!(is >> count)) throw Error("checkpoint " + path + ": bad " + key + " count");
    v.resize(count);
    std::string tok;
    for (std::size_t i = 0; i < count; ++i) {
      if (!(is >> tok)) throw Error("checkpoint " + path + ": truncated " + key + " data");
      v[i] = std::strtod(tok.c_str(), nullptr);
    }
  };
  parse_vec("V", ck.trainables.potential);
  parse_vec("w", ck.trainables.pump_weights);
  return ck;
}

}  // namespace nep
