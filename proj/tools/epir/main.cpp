// Copyright 2026 The epir Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// epir: analytic sweeps, figure data, simulations, exact oracle runs, demos
// and a database server.
//
// Exit codes: 0 success, 1 check failed, 2 usage error, 3 instance too large.

#include <chrono>
#include <csignal>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "epir/analysis.hpp"
#include "epir/core.hpp"
#include "epir/error.hpp"
#include "epir/execute.hpp"
#include "epir/game.hpp"
#include "epir/mechanisms.hpp"
#include "epir/report.hpp"
#include "epir/rng.hpp"
#include "epir/service.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitCapability = 3;

constexpr std::uint64_t kDefaultSeed = 0x5eed;

// Raw string flags; numbers go through epir::parse_* so "1e6" works.
struct Flags {
  std::string mech;
  std::string n = "1e6";
  std::string d = "100";
  std::string da = "0";
  std::string u = "1";
  std::string b = "64";
  std::string p, theta, t;
  std::string sweep;
  std::string trials = "1e5";
  std::string seed;
  std::string out;
  std::string qi = "0", qj = "1", q0 = "2";
  std::string pop_order = "shuffled";
  std::string sampler = "rejection";
  std::string mode = "reduced";
  std::string endpoints;
  std::string listen = "127.0.0.1:0";
  std::string records;
  std::string record_size_bits = "64";
};

std::size_t Count(const std::string& text, const char* flag) {
  try {
    return static_cast<std::size_t>(epir::parse_count(text));
  } catch (const epir::ParameterError&) {
    throw epir::ParameterError(std::string("--") + flag + ": expected an integer, got '" + text + "'");
  }
}

std::uint64_t Seed(const Flags& f) {
  if (!f.seed.empty()) return epir::parse_count(f.seed);
  if (const char* env = std::getenv("EPIR_SEED"); env != nullptr && *env != '\0') {
    try {
      return std::stoull(env, nullptr, 0);
    } catch (const std::exception&) {
      throw epir::ParameterError("EPIR_SEED is not a 64-bit integer");
    }
  }
  return kDefaultSeed;
}

epir::SystemParams Params(const Flags& f, std::size_t d_a) {
  epir::SystemParams sp;
  sp.n = Count(f.n, "n");
  sp.d = Count(f.d, "d");
  sp.d_a = d_a;
  sp.u = Count(f.u, "u");
  sp.b = Count(f.b, "b");
  sp.Validate();
  return sp;
}

std::vector<std::size_t> DaList(const Flags& f) {
  std::vector<std::size_t> out;
  for (const auto& item : epir::split(f.da, ',')) out.push_back(Count(item, "da"));
  return out;
}

std::optional<double> FixedValue(epir::Mechanism m, const Flags& f) {
  const std::string name = epir::param_name(m);
  const std::string& text = name == "p" ? f.p : name == "theta" ? f.theta : f.t;
  if (name.empty() || text.empty()) return std::nullopt;
  return epir::parse_double(text);
}

epir::MechanismParams Mechanism(const Flags& f, epir::Mechanism m) {
  const auto value = FixedValue(m, f);
  if (!epir::param_name(m).empty() && !value) {
    throw epir::ParameterError("--" + epir::param_name(m) + " is required for " +
                               std::string(epir::mechanism_name(m)));
  }
  epir::MechanismParams mech = epir::make_mechanism(m, value.value_or(0.0));
  epir::PopOrder order;
  if (f.pop_order == "shuffled") {
    order = epir::PopOrder::kShuffled;
  } else if (f.pop_order == "ascending") {
    order = epir::PopOrder::kAscending;
  } else {
    throw epir::ParameterError("--pop-order must be shuffled or ascending");
  }
  epir::ColumnSampler sampler;
  if (f.sampler == "rejection") {
    sampler = epir::ColumnSampler::kRejection;
  } else if (f.sampler == "weight-first") {
    sampler = epir::ColumnSampler::kWeightFirst;
  } else {
    throw epir::ParameterError("--sampler must be rejection or weight-first");
  }
  if (auto* d = std::get_if<epir::Direct>(&mech)) d->pop_order = order;
  if (auto* b = std::get_if<epir::BundledAnon>(&mech)) b->pop_order = order;
  if (auto* s = std::get_if<epir::Sparse>(&mech)) s->sampler = sampler;
  if (auto* s = std::get_if<epir::AnonSparse>(&mech)) s->sampler = sampler;
  return mech;
}

epir::GameConfig Game(const Flags& f) {
  const epir::Mechanism m = epir::parse_mechanism(f.mech);
  const auto das = DaList(f);
  if (das.size() != 1) throw epir::ParameterError("--da takes a single value here");
  epir::SystemParams sp = Params(f, das.front());
  epir::GameConfig cfg = epir::GameConfig::Make(Mechanism(f, m), sp, Count(f.qi, "qi"),
                                                Count(f.qj, "qj"), Count(f.q0, "q0"));
  cfg.Validate();
  return cfg;
}

// Writes CSV to --out or standard output.
void Emit(const Flags& f, const std::vector<epir::CsvRow>& rows) {
  if (f.out.empty()) {
    epir::write_csv(std::cout, rows);
    return;
  }
  std::ofstream out(f.out);
  if (!out) throw epir::ParameterError("cannot write '" + f.out + "'");
  epir::write_csv(out, rows);
}

int RunAnalyze(const Flags& f) {
  const epir::Mechanism m = epir::parse_mechanism(f.mech);
  const epir::SystemParams sp = Params(f, 0);
  std::optional<epir::SweepSpec> sweep;
  if (!f.sweep.empty()) sweep = epir::parse_sweep(f.sweep);
  Emit(f, epir::analyze_rows(m, sp, DaList(f), sweep, FixedValue(m, f)));
  return kExitOk;
}

int RunFigures(const Flags& f) {
  const std::filesystem::path dir = f.out.empty() ? "." : f.out;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  for (const auto& fig : epir::figure_data()) {
    const auto path = dir / (fig.id + ".csv");
    std::ofstream out(path);
    if (!out) throw epir::ParameterError("cannot write '" + path.string() + "'");
    epir::write_csv(out, fig.rows);
    if (!out) throw epir::ParameterError("write failed for '" + path.string() + "'");
    std::cerr << "wrote " << path.string() << " (" << fig.rows.size() << " rows)\n";
  }
  return kExitOk;
}

int RunSimulate(const Flags& f) {
  const epir::GameConfig cfg = Game(f);
  epir::RngStream rng(Seed(f), 0);
  const epir::CsvRow row = epir::simulate_row(cfg, epir::parse_count(f.trials), rng);
  Emit(f, {row});
  return row.verdict == "FAIL" ? kExitCheckFailed : kExitOk;
}

int RunOracle(const Flags& f) {
  const epir::GameConfig cfg = Game(f);
  epir::ObservationMode mode;
  if (f.mode == "reduced") {
    mode = epir::ObservationMode::kReduced;
  } else if (f.mode == "full") {
    mode = epir::ObservationMode::kFull;
  } else {
    throw epir::ParameterError("--mode must be reduced or full");
  }
  const epir::CsvRow row = epir::oracle_row(cfg, mode);
  Emit(f, {row});
  return row.verdict == "VIOLATED" ? kExitCheckFailed : kExitOk;
}

int RunDemo(const Flags& f) {
  const epir::Mechanism m = epir::parse_mechanism(f.mech);
  const auto das = DaList(f);
  epir::SystemParams sp = Params(f, das.front());
  const epir::MechanismParams mech = Mechanism(f, m);
  epir::validate_mechanism(mech, sp);
  epir::RngStream rng(Seed(f), 0);
  epir::RngStream data_rng = rng.Derive(1);
  epir::RngStream query_rng = rng.Derive(2);

  const epir::Database master = epir::Database::Random(sp.n, sp.record_bytes(), data_rng);
  const std::size_t q = query_rng.UniformIndex(sp.n);
  const epir::QueryPlan plan = epir::make_plan(mech, q, sp, query_rng);
  const std::size_t servers = m == epir::Mechanism::kNaiveDummy || m == epir::Mechanism::kNaiveAnon ? 1 : sp.d;

  std::cout << "mechanism " << epir::mechanism_name(m) << ", n=" << sp.n << ", d=" << servers
            << ", b=" << sp.b << ", target " << q << "\n";
  epir::Record got;
  std::vector<std::uint64_t> accesses(servers, 0);
  if (!f.endpoints.empty()) {
    std::vector<epir::Endpoint> endpoints;
    for (const auto& item : epir::split(f.endpoints, ',')) endpoints.push_back(epir::Endpoint::Parse(item));
    got = epir::remote_execute(plan, endpoints, sp.record_bytes());
    std::cout << "executed against " << endpoints.size() << " live server(s)\n";
    // The live servers hold their own data; compare against what they serve
    // for the target via a plain fetch.
    epir::Connection check(endpoints.front());
    const auto resp = check.Call(epir::FetchIndices{{static_cast<std::uint32_t>(q)}}, sp.record_bytes());
    const auto& expect = std::get<epir::RecordsResponse>(resp).entries.front().record;
    if (!(got == expect)) {
      std::cout << "record MISMATCH\n";
      return kExitCheckFailed;
    }
    std::cout << "record verified\n";
    return kExitOk;
  }

  std::vector<epir::Database> dbs;
  dbs.reserve(servers);
  for (std::size_t s = 0; s < servers; ++s) dbs.emplace_back(master);
  got = epir::execute_plan(plan, dbs, query_rng);
  std::uint64_t total = 0;
  for (const auto& db : dbs) total += db.access_count();
  std::vector<bool> addressed(servers, false);
  for (const auto& dispatch : plan.dispatches) addressed[dispatch.server] = true;
  for (std::size_t s = 0; s < servers; ++s) {
    std::cout << "server " << s << ": " << (addressed[s] ? "contacted" : "idle") << ", "
              << dbs[s].access_count() << " record accesses\n";
  }
  const epir::CostEstimate cost = epir::cost_model(mech, sp, 1.0, 0.0);
  std::cout << "servers contacted: "
            << std::count(addressed.begin(), addressed.end(), true) << "\n";
  std::cout << "total accesses " << total << ", cost model expects "
            << epir::format_double(cost.cp_accesses) << "\n";
  if (!(got == master.At(q))) {
    std::cout << "record MISMATCH\n";
    return kExitCheckFailed;
  }
  std::cout << "record verified\n";
  return kExitOk;
}

volatile std::sig_atomic_t g_stop = 0;

int RunServe(const Flags& f) {
  if (f.records.empty()) throw epir::ParameterError("--records is required");
  auto db = std::make_shared<const epir::Database>(
      epir::load_records(f.records, Count(f.record_size_bits, "record-size-bits")));
  epir::DatabaseServer server(db);
  std::signal(SIGINT, [](int) { g_stop = 1; });
  std::signal(SIGTERM, [](int) { g_stop = 1; });
  const epir::Endpoint listen = epir::Endpoint::Parse(f.listen);
  server.Start(listen);
  std::cout << "listening on " << (listen.host.empty() ? "0.0.0.0" : listen.host) << ":"
            << server.port() << " with " << db->size() << " records of "
            << db->record_bytes() * 8 << " bits" << std::endl;
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  server.Stop();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"epsilon-private PIR toolkit"};
  app.require_subcommand(1);
  Flags f;

  auto add_system = [&](CLI::App* cmd) {
    cmd->add_option("--mech", f.mech, "mechanism name")->required();
    cmd->add_option("--n", f.n, "record count");
    cmd->add_option("--d", f.d, "database count");
    cmd->add_option("--da", f.da, "corrupt database count (comma list for analyze)");
    cmd->add_option("--u", f.u, "user count");
    cmd->add_option("--b", f.b, "record size in bits");
    cmd->add_option("--p", f.p, "request count p");
    cmd->add_option("--theta", f.theta, "Sparse-PIR theta");
    cmd->add_option("--t", f.t, "Subset-PIR t");
    cmd->add_option("--pop-order", f.pop_order, "shuffled or ascending");
    cmd->add_option("--sampler", f.sampler, "rejection or weight-first");
    cmd->add_option("--seed", f.seed, "seed (default: EPIR_SEED)");
    cmd->add_option("--out", f.out, "output file");
  };
  auto add_game = [&](CLI::App* cmd) {
    cmd->add_option("--qi", f.qi, "candidate query Q_i");
    cmd->add_option("--qj", f.qj, "candidate query Q_j");
    cmd->add_option("--q0", f.q0, "query of the other users");
  };

  auto* analyze = app.add_subcommand("analyze", "analytic bounds and costs over a sweep");
  add_system(analyze);
  analyze->add_option("--sweep", f.sweep, "name=start:stop:steps[log|lin]");

  auto* figures = app.add_subcommand("figures", "write fig1..fig5 and fig6a..fig6d CSV files");
  figures->add_option("--out", f.out, "output directory");

  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo distinguishability game");
  add_system(simulate);
  add_game(simulate);
  simulate->add_option("--trials", f.trials, "trials per arm");

  auto* oracle = app.add_subcommand("oracle", "exact likelihood ratios by enumeration");
  add_system(oracle);
  add_game(oracle);
  oracle->add_option("--mode", f.mode, "reduced or full observations");

  auto* demo = app.add_subcommand("demo", "one retrieval with access accounting");
  add_system(demo);
  demo->add_option("--endpoints", f.endpoints, "host:port list, one per server");

  auto* serve = app.add_subcommand("serve", "serve a records file over the wire protocol");
  serve->add_option("--listen", f.listen, "addr:port (port 0 picks one)");
  serve->add_option("--records", f.records, "raw concatenated records");
  serve->add_option("--record-size-bits", f.record_size_bits, "record size b");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  // Small defaults for the game commands, whose instances must stay small.
  if (simulate->parsed() || oracle->parsed() || demo->parsed()) {
    if (simulate->count("--n") + oracle->count("--n") + demo->count("--n") == 0) f.n = "16";
    if (simulate->count("--d") + oracle->count("--d") + demo->count("--d") == 0) f.d = "2";
  }

  try {
    if (analyze->parsed()) return RunAnalyze(f);
    if (figures->parsed()) return RunFigures(f);
    if (simulate->parsed()) return RunSimulate(f);
    if (oracle->parsed()) return RunOracle(f);
    if (demo->parsed()) return RunDemo(f);
    if (serve->parsed()) return RunServe(f);
  } catch (const epir::SizeError& e) {
    std::cerr << "epir: " << e.what() << "\n";
    return kExitCapability;
  } catch (const epir::ParameterError& e) {
    std::cerr << "epir: " << e.what() << "\n";
    return kExitUsage;
  } catch (const epir::Error& e) {
    std::cerr << "epir: " << e.what() << "\n";
    return kExitCheckFailed;
  }
  return kExitUsage;
}
