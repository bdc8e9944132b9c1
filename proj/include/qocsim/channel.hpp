#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "qocsim/errors.hpp"
#include "qocsim/types.hpp"

namespace qocsim {

/// Latency plugin selector.
///
///   zero    - identity channel, messages pass with no introduced latency
///   queue   - fixed-length shift queue advanced one slot per tick; a
///             message exits after queue_len ticks
///   jitter  - gaussian delay around base_delay, optional loss and optional
///             reorder suppression
///   goodbad - periodic alternation between a high-rate/low-delay mode and
///             a low-rate/high-delay mode with a rate limiter; transitions
///             can reorder messages
///   trace   - per-message delays replayed from a file exported by an
///             external network simulator
enum class ChannelKind { zero, queue, jitter, goodbad, trace };

inline const char* to_string(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::zero: return "zero";
    case ChannelKind::queue: return "queue";
    case ChannelKind::jitter: return "jitter";
    case ChannelKind::goodbad: return "goodbad";
    case ChannelKind::trace: return "trace";
  }
  return "?";
}

inline ChannelKind channel_kind_from_string(const std::string& s) {
  if (s == "zero") return ChannelKind::zero;
  if (s == "queue") return ChannelKind::queue;
  if (s == "jitter") return ChannelKind::jitter;
  if (s == "goodbad") return ChannelKind::goodbad;
  if (s == "trace") return ChannelKind::trace;
  throw ConfigError("unknown channel kind '" + s +
                    "' (want zero|queue|jitter|goodbad|trace)");
}

struct ChannelConfig {
  ChannelKind kind{ChannelKind::zero};

  // queue
  std::int64_t queue_len{0};  // ticks

  // jitter (base_delay also serves as the trace fallback delay)
  double base_delay{0.0};    // s
  double jitter_sigma{0.0};  // s
  double loss_prob{0.0};     // [0,1]
  bool allow_reorder{false};

  // goodbad
  double good_rate{1e6};    // bit/s
  double bad_rate{1e5};     // bit/s
  double good_delay{0.05};  // s
  double bad_delay{0.5};    // s
  double period{60.0};      // s per mode window
  double msg_size{8000.0};  // bits

  // trace
  std::string trace_path;

  // Unset: the scenario seed decides (cmd: seed, status: seed^1).
  std::optional<std::uint64_t> seed;

  void validate() const {
    switch (kind) {
      case ChannelKind::zero:
        break;
      case ChannelKind::queue:
        if (queue_len < 0) throw ConfigError("channel: queue_len must be >= 0");
        break;
      case ChannelKind::jitter:
        if (base_delay < 0) throw ConfigError("channel: base_delay must be >= 0");
        if (jitter_sigma < 0) throw ConfigError("channel: jitter_sigma must be >= 0");
        if (loss_prob < 0 || loss_prob > 1) {
          throw ConfigError("channel: loss_prob must be in [0,1]");
        }
        break;
      case ChannelKind::goodbad:
        if (!(good_rate > 0) || !(bad_rate > 0)) {
          throw ConfigError("channel: good_rate and bad_rate must be > 0");
        }
        if (good_delay < 0 || bad_delay < 0) {
          throw ConfigError("channel: good_delay and bad_delay must be >= 0");
        }
        if (!(period > 0)) throw ConfigError("channel: period must be > 0");
        if (msg_size < 0) throw ConfigError("channel: msg_size must be >= 0");
        break;
      case ChannelKind::trace:
        if (trace_path.empty()) throw ConfigError("channel: trace kind needs trace_path");
        if (base_delay < 0) throw ConfigError("channel: base_delay must be >= 0");
        break;
    }
  }
};

/// Envelope the channels manipulate. The payload is copied in, never shared.
template <class Payload>
struct StampedMessage {
  Payload payload;
  std::int64_t seq{0};
  Tick send_tick{0};
  Tick deliver_tick{0};  // assigned by the channel
};

struct ChannelStats {
  std::uint64_t pushed{0};
  std::uint64_t delivered{0};
  std::uint64_t lost{0};

  std::uint64_t in_flight() const { return pushed - delivered - lost; }
};

namespace detail {

/// Engine-pinned uniforms and gaussians so the delivery schedule is
/// reproducible bit for bit from the seed alone, independent of the
/// standard library's distribution implementations.
class ChannelRng {
 public:
  explicit ChannelRng(std::uint64_t seed) : engine_(seed) {}

  double uniform01() {  // [0,1)
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double gaussian() {  // Box-Muller, two draws per sample
    const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace detail

/// Trace file: one `seq delay_ms` pair per line, `#` comments ignored.
inline std::unordered_map<std::int64_t, double> load_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("trace file missing: " + path);
  std::unordered_map<std::int64_t, double> delays;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    std::int64_t seq = 0;
    double delay_ms = 0.0;
    if (!(row >> seq)) {
      if (row.eof()) continue;  // blank or comment-only line
      throw ConfigError(path + ":" + std::to_string(lineno) + ": malformed trace line");
    }
    std::string rest;
    if (!(row >> delay_ms) || delay_ms < 0.0 || (row >> rest)) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": malformed trace line");
    }
    delays[seq] = delay_ms;
  }
  return delays;
}

/// One direction of the impairable link. Single-owner mutable state,
/// advanced strictly in tick order within a run.
template <class Payload>
class Channel {
 public:
  Channel(ChannelConfig cfg, double tick_dt, std::uint64_t fallback_seed)
      : cfg_(std::move(cfg)), dt_(tick_dt), rng_(cfg_.seed.value_or(fallback_seed)) {
    cfg_.validate();
    if (!(tick_dt > 0.0)) throw ConfigError("channel: tick dt must be > 0");
    if (cfg_.kind == ChannelKind::trace) trace_ = load_trace_file(cfg_.trace_path);
  }

  /// Stamp a message sent now. Lost messages are dropped here; everything
  /// else receives its deliver_tick and joins the in-flight set.
  void push(const Payload& payload, std::int64_t seq, Tick now) {
    ++stats_.pushed;

    Tick deliver = now;
    switch (cfg_.kind) {
      case ChannelKind::zero:
        deliver = now;
        break;
      case ChannelKind::queue:
        deliver = now + cfg_.queue_len;
        break;
      case ChannelKind::jitter: {
        if (cfg_.loss_prob > 0.0 && rng_.uniform01() < cfg_.loss_prob) {
          ++stats_.lost;
          return;
        }
        double delay = cfg_.base_delay;
        if (cfg_.jitter_sigma > 0.0) delay += cfg_.jitter_sigma * rng_.gaussian();
        delay = std::max(0.0, delay);
        deliver = now + std::llround(delay / dt_);
        if (!cfg_.allow_reorder) deliver = std::max(deliver, last_assigned_deliver_);
        break;
      }
      case ChannelKind::goodbad: {
        const double t = static_cast<double>(now) * dt_;
        const bool good =
            static_cast<std::int64_t>(std::floor(t / cfg_.period)) % 2 == 0;
        const double rate = good ? cfg_.good_rate : cfg_.bad_rate;
        const double base = good ? cfg_.good_delay : cfg_.bad_delay;
        // Rate limiter: capacity of one message passes free after idle,
        // sustained load queues behind the serializer.
        const double start = std::max(t, serializer_free_at_);
        const double wait = start - t;
        serializer_free_at_ = start + cfg_.msg_size / rate;
        deliver = now + std::llround((base + wait) / dt_);
        break;
      }
      case ChannelKind::trace: {
        const auto it = trace_.find(seq);
        const double delay =
            it != trace_.end() ? it->second / 1000.0 : cfg_.base_delay;
        deliver = now + std::llround(delay / dt_);
        break;
      }
    }

    last_assigned_deliver_ = std::max(last_assigned_deliver_, deliver);
    in_flight_.push_back(StampedMessage<Payload>{payload, seq, now, deliver});
  }

  /// Remove and return every in-flight message due by `now`, ordered by seq.
  std::vector<StampedMessage<Payload>> deliver(Tick now) {
    std::vector<StampedMessage<Payload>> due;
    auto keep = in_flight_.begin();
    for (auto it = in_flight_.begin(); it != in_flight_.end(); ++it) {
      if (it->deliver_tick <= now) {
        due.push_back(std::move(*it));
      } else {
        *keep++ = std::move(*it);
      }
    }
    in_flight_.erase(keep, in_flight_.end());
    std::sort(due.begin(), due.end(),
              [](const auto& a, const auto& b) { return a.seq < b.seq; });
    stats_.delivered += due.size();
    return due;
  }

  const ChannelStats& stats() const { return stats_; }
  const ChannelConfig& config() const { return cfg_; }
  std::size_t in_flight_size() const { return in_flight_.size(); }

 private:
  ChannelConfig cfg_;
  double dt_;
  detail::ChannelRng rng_;
  std::vector<StampedMessage<Payload>> in_flight_;  // push (= seq) order
  Tick last_assigned_deliver_{std::numeric_limits<Tick>::min()};
  double serializer_free_at_{0.0};  // s, goodbad rate limiter
  std::unordered_map<std::int64_t, double> trace_;
  ChannelStats stats_;
};

/// Receiver-side stale-message policy: the payload with the highest seq
/// strictly newer than the last accepted one, if any. Applying only this
/// keeps the consumed seq monotone even when the channel reorders.
template <class Payload>
std::optional<Payload> freshest(const std::vector<StampedMessage<Payload>>& delivered,
                                std::int64_t last_accepted_seq) {
  const StampedMessage<Payload>* best = nullptr;
  for (const auto& msg : delivered) {
    if (msg.seq > last_accepted_seq && (!best || msg.seq > best->seq)) {
      best = &msg;
    }
  }
  if (!best) return std::nullopt;
  return best->payload;
}

}  // namespace qocsim
