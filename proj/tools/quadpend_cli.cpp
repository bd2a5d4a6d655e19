// quadpend: run, validate and list simulation scenarios.
//
// Exit status: 0 ok, 1 output could not be written, 2 invalid scenario or
// usage, 3 a simulation aborted (its partial log is still written).

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "quadpend/quadpend.hpp"

namespace fs = std::filesystem;
using namespace quadpend;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOutput = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitAbort = 3;

struct RunOptions {
  std::string file;
  std::string out = ".";
  std::string format = "csv";
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
  unsigned jobs = 1;
};

std::vector<io::ScenarioRun> load_runs(const std::string& file,
                                       const std::vector<std::string>& sets,
                                       std::optional<std::uint64_t> seed) {
  const io::ScenarioDocument doc = io::load_scenario_file(file);
  std::vector<io::Entry> overrides;
  for (const auto& s : sets) overrides.push_back(io::parse_override(s));
  if (seed) overrides.push_back({"noise.seed", std::to_string(*seed), "--seed"});
  return io::expand_document(doc, overrides);
}

struct Outcome {
  int status = kExitOk;
  std::string message;
};

Outcome run_one(const harness::Scenario& sc, const fs::path& out, io::Format format) {
  Outcome o;
  harness::SimLog log;
  try {
    log = harness::run_scenario(sc);
  } catch (const Error& e) {
    o.status = kExitAbort;
    o.message = "scenario '" + sc.name + "': " + e.what();
    return o;
  }
  harness::MetricSpec spec;
  spec.tail_fraction = sc.tail_fraction;
  spec.settle_band = sc.settle_band;
  try {
    const harness::Metrics m = harness::compute_metrics(log, spec);
    const io::EmittedFiles files = io::emit_log(log, m, out, format);
    if (log.aborted) {
      o.status = kExitAbort;
      o.message = "scenario '" + sc.name + "' aborted at t=" +
                  io::format_double(log.abort_time) + ": " + log.abort_reason +
                  " (partial log in " + files.series.string() + ")";
    } else {
      o.message = "scenario '" + sc.name + "' -> " + files.series.string();
    }
  } catch (const io::OutputError& e) {
    o.status = kExitOutput;
    o.message = "scenario '" + sc.name + "': " + e.what();
  } catch (const Error& e) {
    o.status = kExitAbort;
    o.message = "scenario '" + sc.name + "': " + e.what();
  }
  return o;
}

int cmd_run(const RunOptions& opt) {
  std::vector<io::ScenarioRun> runs;
  io::Format format;
  try {
    format = io::format_from_string(opt.format);
    runs = load_runs(opt.file, opt.sets, opt.seed);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  std::vector<Outcome> outcomes(runs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      outcomes[i] = run_one(runs[i].scenario, opt.out, format);
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(opt.jobs, runs.size()));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  int status = kExitOk;
  for (const Outcome& o : outcomes) {
    (o.status == kExitOk ? std::cout : std::cerr) << o.message << "\n";
    if (o.status == kExitOutput || status == kExitOutput) {
      status = kExitOutput;
    } else {
      status = std::max(status, o.status);
    }
  }
  return status;
}

int cmd_validate(const std::string& file, const std::vector<std::string>& sets) {
  try {
    const auto runs = load_runs(file, sets, std::nullopt);
    for (const auto& r : runs) std::cout << "ok: " << r.scenario.name << "\n";
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitOk;
}

int cmd_list(const std::string& dir) {
  std::vector<fs::path> files;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.path().extension() == ".scn") files.push_back(entry.path());
  }
  if (ec) {
    std::cerr << "error: cannot list '" << dir << "'\n";
    return kExitOutput;
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::string description;
    try {
      const auto doc = io::load_scenario_file(f.string());
      for (const auto& e : doc.entries) {
        if (e.key == "description") description = e.value;
      }
    } catch (const Error&) {
      description = "(invalid)";
    }
    std::cout << f.stem().string();
    if (!description.empty()) std::cout << "  " << description;
    std::cout << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quadrotor and inverted pendulum simulator"};
  app.require_subcommand(1);

  RunOptions run_opt;
  auto* run = app.add_subcommand("run", "Simulate a scenario file and write its logs");
  run->add_option("file", run_opt.file, "Scenario file")->required();
  run->add_option("--out", run_opt.out, "Output directory")->capture_default_str();
  run->add_option("--format", run_opt.format, "Time-series format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  run->add_option("--seed", run_opt.seed, "Noise seed");
  run->add_option("--set", run_opt.sets, "Override key=value (repeatable)");
  run->add_option("--jobs", run_opt.jobs, "Concurrent runs for batch sections")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  std::string validate_file;
  std::vector<std::string> validate_sets;
  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("file", validate_file, "Scenario file")->required();
  validate->add_option("--set", validate_sets, "Override key=value (repeatable)");

  std::string list_dir = QUADPEND_SCENARIO_DIR;
  auto* list = app.add_subcommand("list-scenarios", "List shipped scenario files");
  list->add_option("--dir", list_dir, "Scenario directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  if (*run) return cmd_run(run_opt);
  if (*validate) return cmd_validate(validate_file, validate_sets);
  return cmd_list(list_dir);
}
