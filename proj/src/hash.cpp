#include "rme/hash.hpp"

namespace rme {
namespace {

constexpr std::int64_t kPoison = INT64_MIN;

template <class T>
std::int64_t reg(const Register<T>& r) {
  return r.poisoned() ? kPoison : static_cast<std::int64_t>(*r.raw());
}

std::uint64_t mix(std::uint64_t h, std::uint64_t w) {
  // splitmix64 finaliser over a running xor
  h ^= w + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ULL;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebULL;
  h ^= h >> 31;
  return h;
}

}  // namespace

void encode(const Configuration& cfg, std::vector<std::int64_t>& out) {
  const SharedMemory& m = cfg.shared;
  out.push_back(cfg.n());
  out.push_back(m.token);
  out.push_back(m.seq);
  out.push_back(m.csowner.encode());
  for (auto g : m.go) out.push_back(g);
  for (const Pair& r : m.registry) out.push_back(r.tok);
  for (Pid p = 1; p <= cfg.n(); ++p) {
    const ProcessState& s = cfg.proc(p);
    out.push_back(static_cast<std::int64_t>(s.pc.line) | static_cast<std::int64_t>(s.pc.caller) << 8 |
                  static_cast<std::int64_t>(s.abort_from) << 12 | static_cast<std::int64_t>(s.spin) << 16 |
                  static_cast<std::int64_t>(s.status) << 20 | static_cast<std::int64_t>(s.abortsig) << 24 |
                  static_cast<std::int64_t>(cfg.hist(p).in_attempt) << 25 |
                  static_cast<std::int64_t>(cfg.hist(p).abort_observed) << 26);
    out.push_back(reg(s.tok));
    out.push_back(reg(s.myseq));
    out.push_back(reg(s.peer));
    out.push_back(reg(s.mygo));
    out.push_back(reg(s.bit));
    out.push_back(reg(s.isaborting));
    out.push_back(reg(s.min_tok));
  }
}

Fingerprint fingerprint_words(const std::vector<std::int64_t>& words) {
  std::uint64_t a = 0x243f6a8885a308d3ULL, b = 0x13198a2e03707344ULL;
  for (auto w : words) {
    a = mix(a, static_cast<std::uint64_t>(w));
    b = mix(b ^ 0xa4093822299f31d0ULL, static_cast<std::uint64_t>(w) * 0xff51afd7ed558ccdULL);
  }
  return {a, b};
}

Fingerprint fingerprint(const Configuration& cfg) {
  std::vector<std::int64_t> w;
  w.reserve(8 + 12 * cfg.n());
  encode(cfg, w);
  return fingerprint_words(w);
}

std::uint64_t hash64(const Configuration& cfg) { return fingerprint(cfg).lo; }

}  // namespace rme
