#include "cteskf/dataset_io.h"

#include <Eigen/Geometry>

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

namespace cteskf::io {

namespace fs = std::filesystem;
using ins::NavState;

namespace {

std::string num(double v) {
  std::array<char, 32> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), r.ptr);
}

class CsvWriter {
 public:
  CsvWriter(const fs::path& p, const std::string& header) : path_(p), out_(p) {
    if (!out_) throw std::runtime_error("cannot open " + p.string() + " for writing");
    out_ << header << '\n';
  }
  CsvWriter& row(std::initializer_list<double> vals) {
    bool first = true;
    for (double v : vals) {
      if (!first) out_ << ',';
      out_ << num(v);
      first = false;
    }
    out_ << '\n';
    return *this;
  }
  void close() {
    out_.close();
    if (!out_) throw std::runtime_error("failed writing " + path_.string());
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

// Rows of numbers with their 1-based line numbers; '#' lines and the header are skipped.
struct Row {
  std::size_t line = 0;
  std::vector<double> v;
};

std::vector<Row> readRows(const fs::path& p, std::size_t columns) {
  std::ifstream in(p);
  if (!in) throw ParseError("cannot open " + p.string());
  std::vector<Row> rows;
  std::string line;
  std::size_t n = 0;
  bool header = true;
  const std::string where = p.filename().string() + ":";
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    Row r;
    r.line = n;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const std::size_t end = std::min(line.find(',', pos), line.size());
      std::size_t b = pos, e = end;
      while (b < e && line[b] == ' ') ++b;
      while (e > b && line[e - 1] == ' ') --e;
      double v = 0.0;
      const auto res = std::from_chars(line.data() + b, line.data() + e, v);
      if (b == e || res.ec != std::errc() || res.ptr != line.data() + e) {
        throw ParseError(where + std::to_string(n) + ": bad number in column " +
                         std::to_string(r.v.size() + 1));
      }
      r.v.push_back(v);
      pos = end + 1;
    }
    if (r.v.size() != columns) {
      throw ParseError(where + std::to_string(n) + ": expected " + std::to_string(columns) +
                       " columns, got " + std::to_string(r.v.size()));
    }
    if (!rows.empty() && !(r.v[0] > rows.back().v[0])) {
      throw ParseError(where + std::to_string(n) + ": timestamp not increasing");
    }
    rows.push_back(std::move(r));
  }
  if (header) throw ParseError(where + " missing header row");
  return rows;
}

Vec3 v3(const Row& r, std::size_t i) { return Vec3(r.v[i], r.v[i + 1], r.v[i + 2]); }

Vec3 sigma3(const Row& r, std::size_t i, const fs::path& p) {
  const Vec3 s = v3(r, i);
  if (!(s.minCoeff() > 0.0)) {
    throw ParseError(p.filename().string() + ":" + std::to_string(r.line) + ": sigma must be positive");
  }
  return s;
}

}  // namespace

void writeImuCsv(const fs::path& p, const std::vector<ins::ImuSample>& imu) {
  CsvWriter w(p, "t,gx,gy,gz,ax,ay,az");
  for (const auto& u : imu) {
    w.row({u.time, u.gyro.x(), u.gyro.y(), u.gyro.z(), u.accel.x(), u.accel.y(), u.accel.z()});
  }
  w.close();
}

void writeGnssCsv(const fs::path& p, const std::vector<GnssVelObs>& obs) {
  CsvWriter w(p, "t,vx,vy,vz,sx,sy,sz");
  for (const auto& o : obs) {
    w.row({o.time, o.vel.x(), o.vel.y(), o.vel.z(), o.sigma.x(), o.sigma.y(), o.sigma.z()});
  }
  w.close();
}

void writeOdoCsv(const fs::path& p, const std::vector<OdoObs>& obs) {
  CsvWriter w(p, "t,vf,vl,vd,sx,sy,sz");
  for (const auto& o : obs) {
    w.row({o.time, o.vel_body.x(), o.vel_body.y(), o.vel_body.z(), o.sigma.x(), o.sigma.y(),
           o.sigma.z()});
  }
  w.close();
}

void writeTruthCsv(const fs::path& p, const std::vector<NavState>& truth) {
  CsvWriter w(p, "t,qw,qx,qy,qz,vx,vy,vz,rx,ry,rz");
  for (const auto& x : truth) {
    const Eigen::Quaterniond q(x.att);
    w.row({x.time, q.w(), q.x(), q.y(), q.z(), x.vel.x(), x.vel.y(), x.vel.z(), x.pos.x(), x.pos.y(),
           x.pos.z()});
  }
  w.close();
}

void writeEstimatesCsv(const fs::path& p, const std::vector<sim::EstimateRecord>& records) {
  CsvWriter w(p, "t,qw,qx,qy,qz,vx,vy,vz,rx,ry,rz,p_att,p_vel,p_pos,p_bg,p_ba");
  for (const auto& r : records) {
    const auto& x = r.x;
    const Eigen::Quaterniond q(x.att);
    w.row({x.time, q.w(), q.x(), q.y(), q.z(), x.vel.x(), x.vel.y(), x.vel.z(), x.pos.x(), x.pos.y(),
           x.pos.z(), r.trace[0], r.trace[1], r.trace[2], r.trace[3], r.trace[4]});
  }
  w.close();
}

void writeRmseCsv(const fs::path& p, const sim::SweepTable& table) {
  std::string header = "yaw_deg";
  for (const auto& v : table.variants) header += "," + v;
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot open " + p.string() + " for writing");
  out << header << '\n';
  for (std::size_t i = 0; i < table.yaw_deg.size(); ++i) {
    out << num(table.yaw_deg[i]);
    for (double v : table.yaw_rmse[i]) out << ',' << num(v);
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + p.string());
}

std::vector<ins::ImuSample> readImuCsv(const fs::path& p) {
  std::vector<ins::ImuSample> out;
  for (const auto& r : readRows(p, 7)) out.push_back({r.v[0], v3(r, 1), v3(r, 4)});
  return out;
}

std::vector<GnssVelObs> readGnssCsv(const fs::path& p) {
  std::vector<GnssVelObs> out;
  for (const auto& r : readRows(p, 7)) out.push_back({r.v[0], v3(r, 1), sigma3(r, 4, p)});
  return out;
}

std::vector<OdoObs> readOdoCsv(const fs::path& p) {
  std::vector<OdoObs> out;
  for (const auto& r : readRows(p, 7)) out.push_back({r.v[0], v3(r, 1), sigma3(r, 4, p)});
  return out;
}

std::vector<NavState> readTruthCsv(const fs::path& p) {
  std::vector<NavState> out;
  for (const auto& r : readRows(p, 11)) {
    Eigen::Quaterniond q(r.v[1], r.v[2], r.v[3], r.v[4]);
    if (std::abs(q.norm() - 1.0) > 1e-6) {
      throw ParseError(p.filename().string() + ":" + std::to_string(r.line) + ": quaternion not unit");
    }
    NavState x;
    x.time = r.v[0];
    x.att = q.normalized().toRotationMatrix();
    x.vel = v3(r, 5);
    x.pos = v3(r, 8);
    out.push_back(x);
  }
  return out;
}

void writeDataset(const fs::path& dir, const sim::Dataset& d) {
  fs::create_directories(dir);
  writeImuCsv(dir / "imu.csv", d.streams.imu);
  writeGnssCsv(dir / "gnss_vel.csv", d.streams.gnss);
  writeOdoCsv(dir / "odo.csv", d.streams.odo);
  writeTruthCsv(dir / "truth.csv", d.truth);
}

sim::Dataset replayDataset(const fs::path& dir) {
  sim::Dataset d;
  d.streams.imu = readImuCsv(dir / "imu.csv");
  d.truth = readTruthCsv(dir / "truth.csv");
  if (fs::exists(dir / "gnss_vel.csv")) d.streams.gnss = readGnssCsv(dir / "gnss_vel.csv");
  if (fs::exists(dir / "odo.csv")) d.streams.odo = readOdoCsv(dir / "odo.csv");
  return d;
}

}  // namespace cteskf::io
