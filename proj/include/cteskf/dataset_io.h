#pragma once

#include "cteskf/sim.h"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace cteskf::io {

/// Malformed input; the message carries file and line.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void writeImuCsv(const std::filesystem::path& p, const std::vector<ins::ImuSample>& imu);
void writeGnssCsv(const std::filesystem::path& p, const std::vector<GnssVelObs>& obs);
void writeOdoCsv(const std::filesystem::path& p, const std::vector<OdoObs>& obs);
void writeTruthCsv(const std::filesystem::path& p, const std::vector<ins::NavState>& truth);
void writeEstimatesCsv(const std::filesystem::path& p, const std::vector<sim::EstimateRecord>& records);
void writeRmseCsv(const std::filesystem::path& p, const sim::SweepTable& table);

std::vector<ins::ImuSample> readImuCsv(const std::filesystem::path& p);
std::vector<GnssVelObs> readGnssCsv(const std::filesystem::path& p);
std::vector<OdoObs> readOdoCsv(const std::filesystem::path& p);
std::vector<ins::NavState> readTruthCsv(const std::filesystem::path& p);

/// imu.csv, gnss_vel.csv, odo.csv, truth.csv in one directory.
void writeDataset(const std::filesystem::path& dir, const sim::Dataset& d);

/// Reads the four files; missing observation files give empty streams.
sim::Dataset replayDataset(const std::filesystem::path& dir);

}  // namespace cteskf::io
