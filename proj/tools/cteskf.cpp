// Command-line front end: simulate, run, sweep, verify.

#include "cteskf/config.h"
#include "cteskf/dataset_io.h"
#include "cteskf/experiments.h"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>

using namespace cteskf;
namespace fs = std::filesystem;

namespace {

// Exit codes.
constexpr int kOk = 0;
constexpr int kFailed = 1;      // verification failure
constexpr int kBadInput = 2;    // configuration or data errors
constexpr int kDiverged = 3;    // a filter run diverged

void setupLogging() {
  auto logger = spdlog::stderr_color_mt("cteskf");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("CTESKF_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps anything unknown to off; only accept "off" when spelled out.
    if (level == spdlog::level::off && std::string(env) != "off") {
      spdlog::warn("ignoring unknown CTESKF_LOG level '{}'", env);
    } else {
      spdlog::set_level(level);
    }
  }
}

struct Common {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> injection;
  int jobs = 1;
};

config::RunConfig loadWithOverrides(const Common& c) {
  config::RunConfig cfg = config::loadConfig(c.config);
  if (c.seed) cfg.scenario.seed = *c.seed;
  if (c.injection) cfg.injection = parseInjectionMode(*c.injection);
  config::validate(cfg);
  return cfg;
}

int cmdSimulate(const Common& c) {
  const auto cfg = loadWithOverrides(c);
  const ins::EarthModel earth;
  spdlog::info("simulating {} s of {} data, seed {}", cfg.scenario.duration,
               sim::toString(cfg.scenario.trajectory.kind), cfg.scenario.seed);
  const sim::Dataset d = sim::makeDataset(cfg.scenario, earth);
  io::writeDataset(c.out, d);
  spdlog::info("wrote {} IMU samples, {} GNSS and {} odometer observations to {}", d.streams.imu.size(),
               d.streams.gnss.size(), d.streams.odo.size(), c.out);
  return kOk;
}

int cmdRun(const Common& c, const std::string& data_dir) {
  const auto cfg = loadWithOverrides(c);
  const ins::EarthModel earth;
  const sim::Dataset d = data_dir.empty() ? sim::makeDataset(cfg.scenario, earth) : io::replayDataset(data_dir);
  if (d.truth.size() != d.streams.imu.size()) {
    throw io::ParseError("truth.csv and imu.csv must have the same number of rows");
  }

  std::vector<sim::ScenarioResult> results;
  for (const auto& name : cfg.variants) {
    spdlog::info("running {}", name);
    results.push_back(sim::runScenario(cfg.scenario, d, sim::parseVariant(name), earth, cfg.injection));
    if (results.back().diverged) spdlog::error("{} diverged: {}", name, results.back().failure);
  }

  // Outputs only after every run finished.
  fs::create_directories(c.out);
  bool diverged = false;
  std::FILE* summary = std::fopen((fs::path(c.out) / "summary.csv").c_str(), "w");
  if (!summary) throw std::runtime_error("cannot write summary.csv in " + c.out);
  std::fprintf(summary, "variant,diverged,roll_deg,pitch_deg,yaw_deg,vn,ve,vd,pn,pe,pd\n");
  std::printf("%-14s %10s %10s %10s %10s %10s\n", "variant", "roll", "pitch", "yaw", "|vel|", "|pos|");
  for (const auto& r : results) {
    io::writeEstimatesCsv(fs::path(c.out) / ("estimates_" + r.variant + ".csv"), r.records);
    const auto& m = r.rmse;
    std::fprintf(summary, "%s,%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.variant.c_str(),
                 r.diverged ? 1 : 0, m.att_deg.x(), m.att_deg.y(), m.att_deg.z(), m.vel.x(), m.vel.y(),
                 m.vel.z(), m.pos.x(), m.pos.y(), m.pos.z());
    std::printf("%-14s %10.4f %10.4f %10.4f %10.4f %10.4f%s\n", r.variant.c_str(), m.att_deg.x(),
                m.att_deg.y(), m.att_deg.z(), m.vel.norm(), m.pos.norm(), r.diverged ? "  diverged" : "");
    diverged = diverged || r.diverged;
  }
  std::fclose(summary);
  return diverged ? kDiverged : kOk;
}

int cmdSweep(const Common& c) {
  const auto cfg = loadWithOverrides(c);
  const ins::EarthModel earth;
  sim::SweepConfig sc;
  sc.base = cfg.scenario;
  sc.yaw_grid_deg = sim::yawGrid(cfg.sweep.yaw_min, cfg.sweep.yaw_max, cfg.sweep.yaw_step);
  sc.seeds = cfg.sweep.seeds;
  sc.variants = cfg.variants;
  sc.injection = cfg.injection;
  sc.jobs = c.jobs;
  spdlog::info("sweeping {} yaw cells x {} seeds x {} variants", sc.yaw_grid_deg.size(), sc.seeds,
               sc.variants.size());
  const sim::SweepTable t = sim::monteCarloSweep(sc, earth);
  fs::create_directories(c.out);
  io::writeRmseCsv(fs::path(c.out) / "rmse.csv", t);
  return kOk;
}

int cmdVerify(const std::string& level, int jobs, bool flip, bool json) {
  exp::VerifyOptions opt;
  opt.level = level == "full" ? exp::VerifyLevel::Full : exp::VerifyLevel::Fast;
  opt.jobs = jobs;
  opt.flip_ekf_to_right = flip;
  int failed = 0;
  exp::verifyAll(opt, [&](const exp::PropertyResult& r) {
    failed += r.pass ? 0 : 1;
    if (json) {
      std::printf("{\"property\":\"%s\",\"pass\":%s,\"value\":%.6e,\"tolerance\":%.6e,\"seconds\":%.3f}\n",
                  r.name.c_str(), r.pass ? "true" : "false", r.value, r.tolerance, r.seconds);
    } else {
      std::printf("%s %s value=%.3e tol=%.0e time=%.2fs %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.value,
                  r.tolerance, r.seconds, r.detail.c_str());
    }
    std::fflush(stdout);
  });
  return failed ? kFailed : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  setupLogging();
  CLI::App app{"Error-state Kalman filters with covariance transformation for INS/GNSS/odometer"};
  app.require_subcommand(1);

  Common common;
  std::string data_dir;
  auto addCommon = [&](CLI::App* sub, bool with_jobs) {
    sub->add_option("--config", common.config, "configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", common.out, "output directory")->capture_default_str();
    sub->add_option("--seed", common.seed, "override scenario.seed");
    sub->add_option("--injection", common.injection, "override filter.injection")
        ->check(CLI::IsMember({"first-order", "retraction"}));
    if (with_jobs) sub->add_option("--jobs", common.jobs, "worker threads")->check(CLI::PositiveNumber);
  };

  auto* simulate = app.add_subcommand("simulate", "write a synthetic dataset");
  addCommon(simulate, false);
  auto* run = app.add_subcommand("run", "run filter variants over one scenario");
  addCommon(run, false);
  run->add_option("--data", data_dir, "replay a dataset directory instead of simulating")
      ->check(CLI::ExistingDirectory);
  auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep over the initial yaw error");
  addCommon(sweep, true);

  auto* verify = app.add_subcommand("verify", "run the property checks");
  std::string level = "fast";
  bool flip = false, json = false;
  int verify_jobs = 1;
  verify->add_option("--level", level, "fast or full")->check(CLI::IsMember({"fast", "full"}))->capture_default_str();
  verify->add_option("--jobs", verify_jobs, "worker threads")->check(CLI::PositiveNumber);
  verify->add_flag("--json", json, "one JSON object per property");
  verify->add_flag("--flip-ekf-to-right", flip, "negate the coupling blocks of the ekf->r transform (test hook)")
      ->group("");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) return cmdSimulate(common);
    if (*run) return cmdRun(common, data_dir);
    if (*sweep) return cmdSweep(common);
    if (*verify) return cmdVerify(level, verify_jobs, flip, json);
  } catch (const config::ConfigError& e) {
    spdlog::error("{}", e.what());
    return kBadInput;
  } catch (const io::ParseError& e) {
    spdlog::error("{}", e.what());
    return kBadInput;
  } catch (const std::invalid_argument& e) {
    spdlog::error("{}", e.what());
    return kBadInput;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kFailed;
  }
  return kOk;
}
