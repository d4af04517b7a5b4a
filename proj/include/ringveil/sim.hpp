#pragma once

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <functional>
#include <istream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ringveil/entities.hpp"
#include "ringveil/wire.hpp"

// Scenario driver, benchmarks and key-update size sweeps behind the CLI.
namespace ringveil::sim {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Configuration

struct ScenarioConfig {
  std::string suite = "bls12-381";
  unsigned height = 10;
  std::size_t vehicles = 50;
  std::size_t rsus = 2;
  std::vector<std::size_t> ring_sizes = {5, 10, 20};
  std::vector<std::size_t> batch_sizes = {10, 20};
  double loss = 0.0;
  std::uint64_t freshness = kFreshnessWindow;
  std::uint64_t seed = 1;
  std::size_t ring_list_size = kDefaultRingListSize;
  std::size_t revocations = 2;
  std::uint64_t start_time = 1'700'000'000;

  void validate() const;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || p != end) throw Error(Errc::InvalidConfig, std::string(key) + ": not a number: " + std::string(v));
  return out;
}

inline double parse_double(std::string_view key, std::string_view v) {
  try {
    std::size_t used = 0;
    const std::string s(v);
    const double d = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return d;
  } catch (const std::logic_error&) {
    throw Error(Errc::InvalidConfig, std::string(key) + ": not a number: " + std::string(v));
  }
}

}  // namespace detail

/// Parses "2-30", "5,10,20" or a mix such as "2-4,8".
inline std::vector<std::size_t> parse_size_list(std::string_view key, std::string_view v) {
  std::vector<std::size_t> out;
  std::stringstream ss{std::string(v)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = detail::trim(item);
    if (item.empty()) continue;
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      out.push_back(detail::parse_number<std::size_t>(key, item));
      continue;
    }
    const auto lo = detail::parse_number<std::size_t>(key, detail::trim(item.substr(0, dash)));
    const auto hi = detail::parse_number<std::size_t>(key, detail::trim(item.substr(dash + 1)));
    if (lo > hi || hi - lo > 100000) throw Error(Errc::InvalidConfig, std::string(key) + ": bad range " + item);
    for (auto x = lo; x <= hi; ++x) out.push_back(x);
  }
  if (out.empty()) throw Error(Errc::InvalidConfig, std::string(key) + ": empty list");
  return out;
}

/// Sets one field by its config-file key. Unknown keys are errors.
inline void apply_setting(ScenarioConfig& c, std::string_view key, std::string_view value) {
  const std::string v = detail::trim(value);
  if (key == "suite") c.suite = v;
  else if (key == "height") c.height = detail::parse_number<unsigned>(key, v);
  else if (key == "vehicles") c.vehicles = detail::parse_number<std::size_t>(key, v);
  else if (key == "rsus") c.rsus = detail::parse_number<std::size_t>(key, v);
  else if (key == "ring_sizes") c.ring_sizes = parse_size_list(key, v);
  else if (key == "batch_sizes") c.batch_sizes = parse_size_list(key, v);
  else if (key == "loss") c.loss = detail::parse_double(key, v);
  else if (key == "freshness") c.freshness = detail::parse_number<std::uint64_t>(key, v);
  else if (key == "seed") c.seed = detail::parse_number<std::uint64_t>(key, v);
  else if (key == "ring_list_size") c.ring_list_size = detail::parse_number<std::size_t>(key, v);
  else if (key == "revocations") c.revocations = detail::parse_number<std::size_t>(key, v);
  else if (key == "start_time") c.start_time = detail::parse_number<std::uint64_t>(key, v);
  else throw Error(Errc::InvalidConfig, "unknown key: " + std::string(key));
}

inline constexpr std::string_view kConfigKeys[] = {"suite",     "height", "vehicles", "rsus",           "ring_sizes",
                                                   "batch_sizes", "loss", "freshness", "seed", "ring_list_size",
                                                   "revocations", "start_time"};

/// `key = value` lines; `#` starts a comment.
inline void load_config(ScenarioConfig& c, std::istream& in) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(Errc::InvalidConfig, "line " + std::to_string(lineno) + ": expected key = value");
    apply_setting(c, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

/// RINGVEIL_<KEY> overrides, e.g. RINGVEIL_SEED=7 or RINGVEIL_RING_SIZES=2-30.
inline void apply_env(ScenarioConfig& c, const std::function<const char*(const char*)>& getenv_fn) {
  for (auto key : kConfigKeys) {
    std::string name = "RINGVEIL_";
    for (char ch : key) name.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
    if (const char* v = getenv_fn(name.c_str())) apply_setting(c, key, v);
  }
}

inline void ScenarioConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(Errc::InvalidConfig, what); };
  if (suite != Bls12381::name && suite != Bls12381Swapped::name) fail("unknown suite: " + suite);
  if (height < 1 || height > 20) fail("height must be in 1..20");
  if (vehicles < 2) fail("vehicles must be at least 2");
  if (vehicles > (std::size_t{1} << height)) fail("more vehicles than tree leaves");
  if (rsus < 1) fail("rsus must be positive");
  if (!(loss >= 0.0 && loss < 1.0)) fail("loss must be in [0,1)");
  if (freshness < 1) fail("freshness must be positive");
  if (ring_list_size < 1) fail("ring_list_size must be positive");
  if (revocations >= vehicles) fail("revocations must leave at least one vehicle");
  if (ring_sizes.empty() || batch_sizes.empty()) fail("ring_sizes and batch_sizes must be nonempty");
  for (auto n : ring_sizes)
    if (n < 1 || n > std::min(vehicles, ring_list_size)) fail("ring size out of range: " + std::to_string(n));
  for (auto b : batch_sizes)
    if (b < 1 || b > 1000) fail("batch size out of range: " + std::to_string(b));
}

/// Calls `f(S{})` for the suite named `name`.
template <class F>
decltype(auto) with_suite(std::string_view name, F&& f) {
  if (name == Bls12381::name) return f(Bls12381{});
  if (name == Bls12381Swapped::name) return f(Bls12381Swapped{});
  throw Error(Errc::InvalidConfig, "unknown suite: " + std::string(name));
}

// ---------------------------------------------------------------------------
// Deployment and channel

/// TRC, LEA, RSUs and OBUs after setup and registration.
template <PairingSuite S>
struct Deployment {
  Lea<S> lea;
  Trc<S> trc;
  std::vector<Rsu<S>> rsus;
  std::vector<Obu<S>> obus;
  std::vector<Bytes> vids;

  template <Rng64 G>
  static Deployment create(unsigned height, std::size_t vehicles, std::size_t rsu_count, G& rng,
                           std::size_t ring_list_size = kDefaultRingListSize,
                           std::uint64_t freshness = kFreshnessWindow) {
    auto lea = Lea<S>::keygen(rng);
    auto trc = Trc<S>::setup(height, lea.public_key(), rng);
    Deployment d{std::move(lea), std::move(trc), {}, {}, {}};
    for (std::size_t j = 0; j < rsu_count; ++j)
      d.rsus.emplace_back(d.trc.params(), d.trc.register_rsu(to_bytes("region-" + std::to_string(j))),
                          ring_list_size);
    for (std::size_t i = 0; i < vehicles; ++i) {
      char vid[32];
      std::snprintf(vid, sizeof vid, "VIN%014zu", i);
      d.vids.push_back(to_bytes(vid));
      d.obus.emplace_back(d.trc.params(), HsmBoundary<S>(d.trc.params(), d.trc.register_vehicle(d.vids.back())),
                          freshness);
    }
    return d;
  }

  void refresh_all(std::uint64_t now) {
    for (auto& r : rsus) r.refresh(trc, now);
  }
};

/// Drops whole frames with probability `loss`; never reorders.
class LossyChannel {
 public:
  LossyChannel(double loss, std::uint64_t seed) : loss_(loss), rng_(seed) {}

  std::optional<Bytes> transmit(Bytes frame) {
    ++sent_;
    bytes_ += frame.size();
    if (loss_ > 0 && bernoulli(rng_, loss_)) {
      ++dropped_;
      return std::nullopt;
    }
    return frame;
  }

  std::uint64_t sent() const noexcept { return sent_; }
  std::uint64_t dropped() const noexcept { return dropped_; }
  std::uint64_t bytes() const noexcept { return bytes_; }

 private:
  double loss_;
  SimRng rng_;
  std::uint64_t sent_ = 0;
  std::uint64_t dropped_ = 0;
  std::uint64_t bytes_ = 0;
};

// ---------------------------------------------------------------------------
// Scenario

namespace detail {

inline constexpr int kMaxAttempts = 3;

enum class RequestOutcome { Granted, Rejected, Undelivered };

struct RequestResult {
  RequestOutcome outcome = RequestOutcome::Undelivered;
  std::optional<Errc> reason;
  int attempts = 0;
};

template <PairingSuite S, Rng64 G>
RequestResult request_grant(Deployment<S>& d, std::size_t v, std::size_t j, std::uint64_t now, LossyChannel& ch,
                            G& rng) {
  RequestResult res;
  auto& obu = d.obus[v];
  auto& rsu = d.rsus[j];
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    ++res.attempts;
    auto up = ch.transmit(wire::encode(obu.ring_request(rsu.rid(), rng)));
    if (!up) continue;
    RingGrant grant;
    try {
      grant = rsu.ring_gen(wire::decode_ring_request<S>(*up), now, rng);
    } catch (const Error& e) {
      res.outcome = RequestOutcome::Rejected;
      res.reason = e.code();
      return res;
    }
    auto down = ch.transmit(wire::encode(grant));
    if (!down) continue;
    obu.accept_grant(wire::decode_ring_grant(*down), now);
    res.outcome = RequestOutcome::Granted;
    return res;
  }
  return res;
}

inline void tally(Json& obj, std::string_view key) {
  const std::string k(key);
  obj[k] = obj.contains(k) ? obj[k].get<std::uint64_t>() + 1 : 1;
}

}  // namespace detail

/// Full life cycle: setup, ring requests, broadcast rounds with replay and
/// tamper probes, tracing, revocation and re-request. The report depends
/// only on the config (no wall-clock values).
template <PairingSuite S>
Json run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  PairingCounter pairings;
  SimRng rng(cfg.seed);
  LossyChannel ch(cfg.loss, cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uint64_t now = cfg.start_time;

  auto d = Deployment<S>::create(cfg.height, cfg.vehicles, cfg.rsus, rng, cfg.ring_list_size, cfg.freshness);
  d.refresh_all(now);
  auto home = [&](std::size_t v) { return v % cfg.rsus; };

  Json report;
  report["suite"] = S::name;
  report["seed"] = cfg.seed;
  report["config"] = {{"height", cfg.height},          {"vehicles", cfg.vehicles},
                      {"rsus", cfg.rsus},              {"ring_sizes", cfg.ring_sizes},
                      {"batch_sizes", cfg.batch_sizes}, {"loss", cfg.loss},
                      {"freshness", cfg.freshness},    {"ring_list_size", cfg.ring_list_size},
                      {"revocations", cfg.revocations}};
  report["setup"] = {{"vehicles_registered", d.vids.size()},
                     {"rsus_registered", d.rsus.size()},
                     {"tree_capacity", d.trc.tree().capacity()},
                     {"params_consistent", d.trc.params().consistent()}};

  // Ring list acquisition.
  Json requests = {{"granted", 0}, {"rejected", 0}, {"undelivered", 0}, {"attempts", 0}};
  std::vector<std::size_t> holders;
  for (std::size_t v = 0; v < d.obus.size(); ++v) {
    const auto r = detail::request_grant(d, v, home(v), now, ch, rng);
    requests["attempts"] = requests["attempts"].get<int>() + r.attempts;
    if (r.outcome == detail::RequestOutcome::Granted) {
      holders.push_back(v);
      detail::tally(requests, "granted");
    } else if (r.outcome == detail::RequestOutcome::Rejected) {
      detail::tally(requests, "rejected");
    } else {
      detail::tally(requests, "undelivered");
    }
  }
  report["ring_requests"] = requests;

  // Broadcast rounds.
  struct Sent {
    std::size_t sender;
    BroadcastMsg<S> msg;
  };
  std::vector<Sent> accepted_log;
  Json bc = {{"rounds", 0},       {"sent", 0},          {"delivered", 0}, {"dropped", 0},
             {"accepted", 0},     {"false_rejects", 0}, {"skipped_rounds", 0}};
  Json probes = {{"replay_duplicate", 0}, {"replay_stale", 0}, {"stale_pairings", 0}, {"tampered_time", 0},
                 {"protocol_violations", 0}};
  now += 60;
  for (auto eta : cfg.batch_sizes) {
    for (auto n : cfg.ring_sizes) {
      now += 1;
      std::vector<std::size_t> eligible;
      for (auto v : holders)
        if (d.obus[v].grant() && d.obus[v].grant()->list.size() >= n && now < d.obus[v].grant()->expiry)
          eligible.push_back(v);
      if (eligible.size() < 2) {
        detail::tally(bc, "skipped_rounds");
        continue;
      }
      detail::tally(bc, "rounds");
      const std::size_t receiver = eligible[uniform_index(rng, eligible.size())];
      std::vector<Sent> delivered;
      std::vector<BroadcastMsg<S>> queue;
      for (std::size_t i = 0; i < eta; ++i) {
        std::size_t sender = receiver;
        while (sender == receiver) sender = eligible[uniform_index(rng, eligible.size())];
        const Bytes m = to_bytes("beacon r" + std::to_string(n) + " b" + std::to_string(eta) + " #" + std::to_string(i));
        auto msg = d.obus[sender].sign_broadcast(m, now, n, rng);
        detail::tally(bc, "sent");
        auto frame = ch.transmit(wire::encode(msg));
        if (!frame) {
          detail::tally(bc, "dropped");
          continue;
        }
        detail::tally(bc, "delivered");
        queue.push_back(wire::decode_broadcast<S>(*frame));
        delivered.push_back({sender, queue.back()});
      }
      if (queue.empty()) continue;
      const auto verdicts = d.obus[receiver].batch_process(std::span<const BroadcastMsg<S>>(queue), now, rng);
      for (std::size_t i = 0; i < verdicts.size(); ++i) {
        if (verdicts[i] == Verdict::Accept) {
          detail::tally(bc, "accepted");
          accepted_log.push_back(delivered[i]);
        } else {
          detail::tally(bc, "false_rejects");
        }
      }

      // Replay and tamper probes against the same receiver.
      const auto& probe = queue.front();
      auto& rx = d.obus[receiver];
      if (rx.receive(probe, now) == Verdict::Duplicate) {
        detail::tally(probes, "replay_duplicate");
      } else {
        detail::tally(probes, "protocol_violations");
      }
      PairingCounter stale_cost;
      if (rx.receive(probe, now + cfg.freshness + 1) == Verdict::Stale) {
        detail::tally(probes, "replay_stale");
      } else {
        detail::tally(probes, "protocol_violations");
      }
      probes["stale_pairings"] = probes["stale_pairings"].get<std::uint64_t>() + stale_cost.count();
      // A vehicle that never saw the original judges the re-stamped copy.
      auto tampered = probe;
      tampered.t = now + 1;
      auto& witness = d.obus[delivered.front().sender];
      if (witness.receive(wire::decode_broadcast<S>(wire::encode(tampered)), now + 1) == Verdict::BadSignature) {
        detail::tally(probes, "tampered_time");
      } else {
        detail::tally(probes, "protocol_violations");
      }
    }
  }
  report["broadcasts"] = bc;
  report["probes"] = probes;

  // Tracing every accepted broadcast.
  std::size_t traced_ok = 0;
  std::vector<std::size_t> traced_senders;
  for (const auto& s : accepted_log) {
    try {
      const auto pid = d.lea.trace(s.msg, d.trc);
      const auto vid = d.trc.resolve(pid);
      if (pid == d.obus[s.sender].pid() && vid && *vid == d.vids[s.sender]) {
        ++traced_ok;
        if (std::find(traced_senders.begin(), traced_senders.end(), s.sender) == traced_senders.end())
          traced_senders.push_back(s.sender);
      }
    } catch (const Error&) {
    }
  }
  report["tracing"] = {{"attempted", accepted_log.size()},
                       {"succeeded", traced_ok},
                       {"success_rate", accepted_log.empty() ? 0.0
                                                             : static_cast<double>(traced_ok) /
                                                                   static_cast<double>(accepted_log.size())}};

  // Revocation of traced senders, checked before and after the RSU refresh.
  std::vector<std::size_t> revoked;
  for (auto v : traced_senders) {
    if (revoked.size() == cfg.revocations) break;
    revoked.push_back(v);
  }
  for (std::size_t v = 0; revoked.size() < cfg.revocations && v < d.obus.size(); ++v)
    if (std::find(revoked.begin(), revoked.end(), v) == revoked.end()) revoked.push_back(v);
  for (auto v : revoked) d.trc.revoke_vid(d.vids[v], epoch_of(now));

  Json rev = {{"revoked", revoked.size()}, {"pre_refresh_granted", 0},  {"post_refresh_rejected", 0},
              {"post_refresh_other", 0},    {"survivors_granted", 0},    {"survivors_other", 0}};
  if (!revoked.empty()) {
    const auto v = revoked.front();
    if (detail::request_grant(d, v, home(v), now, ch, rng).outcome == detail::RequestOutcome::Granted)
      detail::tally(rev, "pre_refresh_granted");
  }
  now = (epoch_of(now) + 1) * kEpochLength + 1;
  d.refresh_all(now);
  for (auto v : revoked) {
    const auto r = detail::request_grant(d, v, home(v), now, ch, rng);
    if (r.outcome == detail::RequestOutcome::Rejected && r.reason == Errc::RevokedVehicle) {
      detail::tally(rev, "post_refresh_rejected");
    } else {
      detail::tally(rev, "post_refresh_other");
    }
  }
  std::size_t checked = 0;
  for (std::size_t v = 0; v < d.obus.size() && checked < 5; ++v) {
    if (std::find(revoked.begin(), revoked.end(), v) != revoked.end()) continue;
    ++checked;
    const auto r = detail::request_grant(d, v, home(v), now, ch, rng);
    if (r.outcome == detail::RequestOutcome::Granted) {
      detail::tally(rev, "survivors_granted");
    } else {
      detail::tally(rev, "survivors_other");
    }
  }
  report["revocation"] = rev;
  report["key_update"] = {{"epoch", d.rsus.front().key_update()->epoch},
                          {"cover_size", d.rsus.front().key_update()->cover.size()}};
  report["channel"] = {{"frames_sent", ch.sent()}, {"frames_dropped", ch.dropped()}, {"bytes_sent", ch.bytes()}};
  report["pairings"] = pairings.count();
  report["final_time"] = now;
  return report;
}

// ---------------------------------------------------------------------------
// Benchmarks

struct BenchConfig {
  std::vector<std::string> ops = {"sign", "verify", "batch"};
  std::vector<std::size_t> ring_sizes = parse_size_list("ring_sizes", "2-30");
  std::vector<std::size_t> batch_sizes = {10, 20};
  std::size_t repetitions = 100;
  unsigned height = 10;
  std::uint64_t seed = 1;

  void validate() const {
    if (repetitions < 30) throw Error(Errc::InvalidConfig, "repetitions must be at least 30");
    for (const auto& op : ops)
      if (op != "sign" && op != "verify" && op != "batch" && op != "keyupdate")
        throw Error(Errc::InvalidConfig, "unknown bench op: " + op);
    for (auto n : ring_sizes)
      if (n < 1 || n > 1000) throw Error(Errc::InvalidConfig, "ring size out of range");
    for (auto b : batch_sizes)
      if (b < 1 || b > 1000) throw Error(Errc::InvalidConfig, "batch size out of range");
    if (height < 1 || height > 20) throw Error(Errc::InvalidConfig, "height must be in 1..20");
  }
};

struct BenchRecord {
  std::string operation;
  std::string suite;
  std::size_t ring_size = 0;
  std::size_t batch_size = 0;
  unsigned height = 0;
  std::size_t revoked = 0;
  std::size_t repetitions = 0;
  double mean_wall_us = 0;
  double median_wall_us = 0;
  double mean_cpu_us = 0;
  double median_cpu_us = 0;
  std::uint64_t pairings = 0;
  std::size_t bytes = 0;
};

inline constexpr std::string_view kBenchCsvHeader =
    "operation,suite,ring_size,batch_size,height,revoked,repetitions,mean_wall_us,median_wall_us,mean_cpu_us,"
    "median_cpu_us,pairings,bytes";

inline std::string to_csv_row(const BenchRecord& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%s,%s,%zu,%zu,%u,%zu,%zu,%.3f,%.3f,%.3f,%.3f,%llu,%zu", r.operation.c_str(),
                r.suite.c_str(), r.ring_size, r.batch_size, r.height, r.revoked, r.repetitions, r.mean_wall_us,
                r.median_wall_us, r.mean_cpu_us, r.median_cpu_us, static_cast<unsigned long long>(r.pairings),
                r.bytes);
  return buf;
}

/// Wall and process-CPU samples in microseconds.
class Samples {
 public:
  template <class F>
  void time(F&& f) {
    const auto c0 = std::clock();
    const auto w0 = std::chrono::steady_clock::now();
    f();
    const auto w1 = std::chrono::steady_clock::now();
    const auto c1 = std::clock();
    wall_.push_back(std::chrono::duration<double, std::micro>(w1 - w0).count());
    cpu_.push_back(1e6 * static_cast<double>(c1 - c0) / CLOCKS_PER_SEC);
  }

  void fill(BenchRecord& r) const {
    r.repetitions = wall_.size();
    r.mean_wall_us = mean(wall_);
    r.median_wall_us = median(wall_);
    r.mean_cpu_us = mean(cpu_);
    r.median_cpu_us = median(cpu_);
  }

 private:
  static double mean(const std::vector<double>& v) {
    return v.empty() ? 0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  }
  static double median(std::vector<double> v) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
  }
  std::vector<double> wall_;
  std::vector<double> cpu_;
};

/// Runs the selected operations; each record is one parameter point.
/// Batch points time the hardened check, the plain aggregate check and the
/// equivalent sequence of single verifications in interleaved repetitions.
template <PairingSuite S>
std::vector<BenchRecord> run_bench(const BenchConfig& cfg, const std::function<void(const BenchRecord&)>& sink = {}) {
  using G1 = typename S::G1;
  cfg.validate();
  SimRng rng(cfg.seed);
  const MasterSecret ms = MasterSecret::generate(rng);
  const auto pp = make_params<S>(ms, S::G2::random(rng));
  const std::size_t max_n = *std::max_element(cfg.ring_sizes.begin(), cfg.ring_sizes.end());
  std::vector<G1> pids;
  std::vector<G1> psks;
  for (std::size_t i = 0; i < max_n; ++i) {
    pids.push_back(pseudonym_of<S>(to_bytes("bench-" + std::to_string(i))));
    psks.push_back(pids.back() * ms.value());
  }
  auto ring_of = [&](std::size_t n) { return SubRing<S>(std::vector(pids.begin(), pids.begin() + n)); };
  auto payload = [&](std::size_t i) {
    return SignedPayload{to_bytes("bench message " + std::to_string(i)), Gt::random(rng), 1'700'000'000 + i};
  };

  std::vector<BenchRecord> out;
  auto emit = [&](BenchRecord r) {
    r.suite = std::string(S::name);
    r.height = cfg.height;
    if (sink) sink(r);
    out.push_back(std::move(r));
  };
  auto has = [&](std::string_view op) { return std::find(cfg.ops.begin(), cfg.ops.end(), op) != cfg.ops.end(); };

  // Per ring size state. Repetitions run round-robin over every size so
  // slow drift in machine speed lands on all points alike.
  struct Batch {
    std::size_t eta;
    std::vector<SignedPayload> ps;
    std::vector<SubRing<S>> rings;
    std::vector<RingSignature<S>> sigs;
    std::size_t bytes = 0;
    Samples hardened, plain, singles;
    std::uint64_t ph = 0, pl = 0, psg = 0;
  };
  struct SizePoint {
    std::size_t n;
    SubRing<S> ring;
    Samples sign, verify;
    std::uint64_t sign_pairings = 0, verify_pairings = 0;
    std::size_t sign_bytes = 0;
    SignedPayload vp;
    RingSignature<S> vsig;
    std::vector<Batch> batches;
  };
  std::vector<SizePoint> points;
  for (auto n : cfg.ring_sizes) {
    SizePoint pt{n, ring_of(n)};
    if (has("verify")) {
      pt.vp = payload(0);
      pt.vsig = ring_sign(pp, psks[0], 0, pt.vp, pt.ring, rng);
    }
    if (has("batch")) {
      for (auto eta : cfg.batch_sizes) {
        Batch b{eta};
        for (std::size_t i = 0; i < eta; ++i) {
          b.ps.push_back(payload(i));
          b.rings.push_back(pt.ring);
          b.sigs.push_back(ring_sign(pp, psks[i % n], i % n, b.ps.back(), pt.ring, rng));
          b.bytes += wire::encode_signature(b.sigs.back()).size();
        }
        pt.batches.push_back(std::move(b));
      }
    }
    points.push_back(std::move(pt));
  }

  bool ok = true;
  for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
    for (auto& pt : points) {
      PairingCounter c;
      if (has("sign")) {
        const auto p = payload(rep);
        const std::size_t k = rep % pt.n;
        c.reset();
        pt.sign.time([&] { pt.sign_bytes = wire::encode_signature(ring_sign(pp, psks[k], k, p, pt.ring, rng)).size(); });
        pt.sign_pairings = c.count();
      }
      if (has("verify")) {
        c.reset();
        pt.verify.time([&] { ok &= ring_verify(pp, pt.vp, pt.ring, pt.vsig); });
        pt.verify_pairings = c.count();
      }
      for (auto& b : pt.batches) {
        c.reset();
        b.hardened.time([&] { ok &= random_scaling_batch_verify<S>(pp, b.ps, b.rings, b.sigs, rng); });
        b.ph = c.count();
        c.reset();
        b.plain.time([&] { ok &= batch_verify<S>(pp, b.ps, b.rings, b.sigs); });
        b.pl = c.count();
        c.reset();
        b.singles.time([&] {
          for (std::size_t i = 0; i < b.eta; ++i) ok &= ring_verify(pp, b.ps[i], b.rings[i], b.sigs[i]);
        });
        b.psg = c.count();
      }
    }
  }
  if (!ok) throw Error(Errc::InvalidArgument, "benchmark signature failed to verify");

  for (auto& pt : points) {
    if (has("sign")) {
      BenchRecord r{"sign", "", pt.n, 1};
      pt.sign.fill(r);
      r.pairings = pt.sign_pairings;
      r.bytes = pt.sign_bytes;
      emit(r);
    }
    if (has("verify")) {
      BenchRecord r{"verify", "", pt.n, 1};
      pt.verify.fill(r);
      r.pairings = pt.verify_pairings;
      r.bytes = wire::encode_signature(pt.vsig).size();
      emit(r);
    }
    for (auto& b : pt.batches) {
      const std::pair<const char*, std::pair<Samples*, std::uint64_t>> kinds[] = {
          {"batch-verify", {&b.hardened, b.ph}},
          {"batch-verify-plain", {&b.plain, b.pl}},
          {"single-verify-total", {&b.singles, b.psg}}};
      for (const auto& [name, sample] : kinds) {
        BenchRecord r{name, "", pt.n, b.eta};
        sample.first->fill(r);
        r.pairings = sample.second;
        r.bytes = b.bytes;
        emit(r);
      }
    }
  }

  if (has("keyupdate")) {
    revocation::RevocationTree bt(cfg.height);
    for (std::size_t r : {std::size_t{0}, std::size_t{1}, static_cast<std::size_t>(bt.capacity() / 8),
                          static_cast<std::size_t>(bt.capacity() / 2)}) {
      revocation::RevocationList rl;
      std::vector<revocation::NodeId> leaves(bt.capacity());
      std::iota(leaves.begin(), leaves.end(), bt.first_leaf());
      for (std::size_t i = 0; i < r; ++i) {
        std::swap(leaves[i], leaves[i + uniform_index(rng, leaves.size() - i)]);
        rl.add(leaves[i], 0);
      }
      Samples s;
      std::size_t cover = 0;
      for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) s.time([&] { cover = revocation::kunodes(bt, rl, 0).cover.size(); });
      BenchRecord rec{"keyupdate"};
      s.fill(rec);
      rec.revoked = r;
      rec.bytes = wire::encode(revocation::kunodes(bt, rl, 0)).size();
      (void)cover;
      emit(rec);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Key-update size sweep

struct KeyUpdateRow {
  std::uint64_t n = 0;
  std::uint64_t r = 0;
  std::uint64_t kunodes = 0;
  std::uint64_t bf_ribe = 0;
  std::optional<double> bound;  // r (log2(N/r) + 1), defined for r >= 1
};

inline constexpr std::string_view kKeyUpdateCsvHeader = "N,r,kunodes,bf_ribe,bound";

inline std::string to_csv_row(const KeyUpdateRow& row) {
  char buf[128];
  if (row.bound) {
    std::snprintf(buf, sizeof buf, "%llu,%llu,%llu,%llu,%.3f", static_cast<unsigned long long>(row.n),
                  static_cast<unsigned long long>(row.r), static_cast<unsigned long long>(row.kunodes),
                  static_cast<unsigned long long>(row.bf_ribe), *row.bound);
  } else {
    std::snprintf(buf, sizeof buf, "%llu,%llu,%llu,%llu,", static_cast<unsigned long long>(row.n),
                  static_cast<unsigned long long>(row.r), static_cast<unsigned long long>(row.kunodes),
                  static_cast<unsigned long long>(row.bf_ribe));
  }
  return buf;
}

/// 0, 1, 2, 4, ..., N plus N-1.
inline std::vector<std::uint64_t> default_revocation_sweep(std::uint64_t n) {
  std::vector<std::uint64_t> rs{0};
  for (std::uint64_t r = 1; r <= n; r *= 2) rs.push_back(r);
  if (n > 2) rs.push_back(n - 1);
  std::sort(rs.begin(), rs.end());
  return rs;
}

/// For each r, revokes a seeded random set of r leaves out of N and reports
/// the cover size next to the per-user update count N - r.
inline std::vector<KeyUpdateRow> keyupdate_sizes(std::uint64_t n, const std::vector<std::uint64_t>& rs,
                                                 std::uint64_t seed) {
  if (n < 2 || !std::has_single_bit(n) || n > (std::uint64_t{1} << 20))
    throw Error(Errc::InvalidConfig, "N must be a power of two in [2, 2^20]");
  const unsigned h = static_cast<unsigned>(std::countr_zero(n));
  revocation::RevocationTree bt(h);
  SimRng rng(seed);
  std::vector<KeyUpdateRow> out;
  for (auto r : rs) {
    if (r > n) throw Error(Errc::InvalidConfig, "r exceeds N");
    std::vector<revocation::NodeId> leaves(n);
    std::iota(leaves.begin(), leaves.end(), bt.first_leaf());
    revocation::RevocationList rl;
    for (std::uint64_t i = 0; i < r; ++i) {
      std::swap(leaves[i], leaves[i + uniform_index(rng, leaves.size() - i)]);
      rl.add(leaves[i], 0);
    }
    KeyUpdateRow row{n, r, revocation::kunodes(bt, rl, 0).cover.size(), n - r, std::nullopt};
    if (r >= 1) row.bound = static_cast<double>(r) * (std::log2(static_cast<double>(n) / static_cast<double>(r)) + 1);
    out.push_back(row);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Statistics

struct LinearFit {
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
};

/// Ordinary least squares y = slope x + intercept.
inline LinearFit fit_linear(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(Errc::InvalidArgument, "fit needs two or more points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) throw Error(Errc::InvalidArgument, "fit needs distinct x values");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (f.slope * x[i] + f.intercept);
    ss_res += e * e;
  }
  f.r2 = syy == 0 ? 1.0 : 1.0 - ss_res / syy;
  return f;
}

}  // namespace ringveil::sim
