#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "ringveil/sim.hpp"

using namespace ringveil;

namespace {

struct Options {
  std::optional<std::string> config_path;
  std::optional<std::string> suite;
  std::optional<unsigned> height;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;

  // scenario
  std::optional<std::size_t> vehicles;
  std::optional<std::size_t> rsus;
  std::optional<std::string> ring_sizes;
  std::optional<std::string> batch_sizes;
  std::optional<double> loss;
  std::optional<std::uint64_t> freshness;
  std::optional<std::size_t> revocations;

  // bench
  std::vector<std::string> ops{"sign", "verify", "batch"};
  std::size_t reps = 100;

  // keyupdate-size
  std::uint64_t n = 1024;
  std::optional<std::string> r_list;

  // trace-demo
  std::size_t ring_size = 10;
};

// defaults < config file < RINGVEIL_* environment < command-line flags
sim::ScenarioConfig resolve_config(const Options& o) {
  sim::ScenarioConfig c;
  if (o.config_path) {
    std::ifstream in(*o.config_path);
    if (!in) throw Error(Errc::InvalidConfig, "cannot open config file " + *o.config_path);
    sim::load_config(c, in);
  }
  sim::apply_env(c, [](const char* name) { return std::getenv(name); });
  if (o.suite) c.suite = *o.suite;
  if (o.height) c.height = *o.height;
  if (o.seed) c.seed = *o.seed;
  if (o.vehicles) c.vehicles = *o.vehicles;
  if (o.rsus) c.rsus = *o.rsus;
  if (o.ring_sizes) c.ring_sizes = sim::parse_size_list("ring-sizes", *o.ring_sizes);
  if (o.batch_sizes) c.batch_sizes = sim::parse_size_list("batch-sizes", *o.batch_sizes);
  if (o.loss) c.loss = *o.loss;
  if (o.freshness) c.freshness = *o.freshness;
  if (o.revocations) c.revocations = *o.revocations;
  return c;
}

std::optional<std::string> resolve_out(const Options& o) {
  if (o.out) return o.out;
  if (const char* env = std::getenv("RINGVEIL_OUT")) return std::string(env);
  return std::nullopt;
}

class Output {
 public:
  explicit Output(const std::optional<std::string>& path) {
    if (path && *path != "-") {
      file_.open(*path);
      if (!file_) throw Error(Errc::InvalidConfig, "cannot open output " + *path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

int cmd_setup(const Options& o) {
  const auto cfg = resolve_config(o);
  if (cfg.height < 1 || cfg.height > revocation::kMaxHeight) throw Error(Errc::InvalidConfig, "height out of range");
  return sim::with_suite(cfg.suite, [&]<class S>(S) {
    SimRng rng(cfg.seed);
    const auto lea = Lea<S>::keygen(rng);
    const auto trc = Trc<S>::setup(cfg.height, lea.public_key(), rng);
    const auto& pp = trc.params();
    sim::Json j;
    j["suite"] = S::name;
    j["height"] = cfg.height;
    j["capacity"] = trc.tree().capacity();
    j["params_consistent"] = pp.consistent();
    j["pk1"] = to_hex(pp.pk1.to_bytes());
    j["pk2"] = to_hex(pp.pk2.to_bytes());
    j["pk_trac"] = to_hex(pp.pk_trac.to_bytes());
    j["system_params_frame"] = to_hex(wire::encode(pp));
    Output(resolve_out(o)).stream() << j.dump(2) << "\n";
    return 0;
  });
}

int cmd_scenario(const Options& o) {
  const auto cfg = resolve_config(o);
  cfg.validate();
  return sim::with_suite(cfg.suite, [&]<class S>(S) {
    const auto report = sim::run_scenario<S>(cfg);
    Output(resolve_out(o)).stream() << report.dump(2) << "\n";
    const bool clean = report["probes"]["protocol_violations"].template get<int>() == 0 &&
                       report["broadcasts"]["false_rejects"].template get<int>() == 0;
    return clean ? 0 : 3;
  });
}

int cmd_bench(const Options& o) {
  const auto cfg = resolve_config(o);
  sim::BenchConfig b;
  b.ops = o.ops;
  if (o.ring_sizes) b.ring_sizes = cfg.ring_sizes;
  if (o.batch_sizes) b.batch_sizes = cfg.batch_sizes;
  b.repetitions = o.reps;
  b.height = cfg.height;
  b.seed = cfg.seed;
  b.validate();
  Output out(resolve_out(o));
  auto& os = out.stream();
  os << sim::kBenchCsvHeader << "\n";
  return sim::with_suite(cfg.suite, [&]<class S>(S) {
    sim::run_bench<S>(b, [&](const sim::BenchRecord& r) { os << sim::to_csv_row(r) << "\n" << std::flush; });
    return 0;
  });
}

int cmd_keyupdate_size(const Options& o) {
  const auto cfg = resolve_config(o);
  std::vector<std::uint64_t> rs;
  if (o.r_list) {
    for (auto r : sim::parse_size_list("r", *o.r_list)) rs.push_back(r);
  } else {
    rs = sim::default_revocation_sweep(o.n);
  }
  const auto rows = sim::keyupdate_sizes(o.n, rs, cfg.seed);
  Output out(resolve_out(o));
  out.stream() << sim::kKeyUpdateCsvHeader << "\n";
  for (const auto& row : rows) out.stream() << sim::to_csv_row(row) << "\n";
  return 0;
}

int cmd_trace_demo(const Options& o) {
  auto cfg = resolve_config(o);
  if (!o.height && !std::getenv("RINGVEIL_HEIGHT")) cfg.height = 6;
  if (!o.vehicles && !std::getenv("RINGVEIL_VEHICLES")) cfg.vehicles = 24;
  if (cfg.height < 1 || cfg.height > 20 || cfg.vehicles < 2 || cfg.vehicles > (std::size_t{1} << cfg.height))
    throw Error(Errc::InvalidConfig, "vehicles must fit in the tree");
  if (o.ring_size < 1 || o.ring_size > cfg.vehicles) throw Error(Errc::InvalidConfig, "ring size out of range");
  return sim::with_suite(cfg.suite, [&]<class S>(S) {
    SimRng rng(cfg.seed);
    auto d = sim::Deployment<S>::create(cfg.height, cfg.vehicles, 1, rng);
    const std::uint64_t now = cfg.start_time;
    d.refresh_all(now);

    const std::size_t signer = uniform_index(rng, cfg.vehicles);
    std::size_t receiver = signer;
    while (receiver == signer) receiver = uniform_index(rng, cfg.vehicles);
    auto& obu = d.obus[signer];
    const auto req = obu.ring_request(d.rsus[0].rid(), rng);
    obu.accept_grant(d.rsus[0].ring_gen(req, now, rng), now);
    const auto msg = obu.sign_broadcast(to_bytes("hazard: debris in lane 2"), now, o.ring_size, rng);
    const auto verdict = d.obus[receiver].receive(wire::decode_broadcast<S>(wire::encode(msg)), now);

    const auto traced = d.lea.trace(msg, d.trc);
    const auto vid = d.trc.resolve(traced);
    std::size_t position = 0;
    while (!(msg.ring[position] == traced)) ++position;

    sim::Json j;
    j["suite"] = S::name;
    j["ring_size"] = msg.ring.size();
    j["ring_list_size"] = obu.grant()->list.size();
    j["receiver_verdict"] = to_string(verdict);
    j["broadcast_bytes"] = wire::encode(msg).size();
    j["traced_position"] = position;
    j["traced_pid"] = to_hex(traced.to_bytes());
    j["resolved_vid"] = vid ? std::string(vid->begin(), vid->end()) : std::string();
    j["matches_signer"] = vid && *vid == d.vids[signer];
    Output(resolve_out(o)).stream() << j.dump(2) << "\n";
    return j["matches_signer"].template get<bool>() ? 0 : 3;
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pseudonymous V2V authentication with identity-based ring signatures"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;

  app.add_option("--config", o.config_path, "key = value configuration file");
  app.add_option("--suite", o.suite, "pairing suite: bls12-381 or bls12-381-swap");
  app.add_option("--height", o.height, "revocation tree height");
  app.add_option("--seed", o.seed, "seed for all randomness");
  app.add_option("--out", o.out, "output file (default stdout)");

  auto* setup = app.add_subcommand("setup", "run TRC and LEA setup and print public parameters");

  auto* scenario = app.add_subcommand("scenario", "simulate the full protocol life cycle, JSON report");
  scenario->add_option("--vehicles", o.vehicles);
  scenario->add_option("--rsus", o.rsus);
  scenario->add_option("--ring-sizes", o.ring_sizes, "e.g. 5,10,20 or 2-30");
  scenario->add_option("--batch-sizes", o.batch_sizes);
  scenario->add_option("--loss", o.loss, "frame loss probability in [0,1)");
  scenario->add_option("--freshness", o.freshness, "timestamp window in seconds");
  scenario->add_option("--revocations", o.revocations);

  auto* bench = app.add_subcommand("bench", "time signing and verification, CSV output");
  bench->add_option("--op", o.ops, "sign, verify, batch, keyupdate")->delimiter(',');
  bench->add_option("--ring-sizes", o.ring_sizes, "default 2-30");
  bench->add_option("--batch-sizes", o.batch_sizes, "default 10,20");
  bench->add_option("--reps", o.reps, "repetitions per point (>= 30)");

  auto* ku = app.add_subcommand("keyupdate-size", "cover size versus per-user updates, CSV output");
  ku->add_option("--n", o.n, "number of leaves, a power of two");
  ku->add_option("--r", o.r_list, "revocation counts, e.g. 0,1,2-8 (default 0,1,2,4,...,N)");

  auto* trace = app.add_subcommand("trace-demo", "sign one broadcast and trace it back to the vehicle");
  trace->add_option("--ring-size", o.ring_size);
  trace->add_option("--vehicles", o.vehicles);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*setup) return cmd_setup(o);
    if (*scenario) return cmd_scenario(o);
    if (*bench) return cmd_bench(o);
    if (*ku) return cmd_keyupdate_size(o);
    if (*trace) return cmd_trace_demo(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == Errc::InvalidConfig ? 2 : 1;
  }
  return 1;
}
