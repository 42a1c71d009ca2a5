#include "xmr/trajectory.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace xmr {

GripperTrajectory::GripperTrajectory(std::vector<GripperSample> samples) : samples_(std::move(samples)) {
  if (samples_.empty()) throw std::invalid_argument("GripperTrajectory: at least one sample required");
  for (std::size_t i = 1; i < samples_.size(); ++i) {
    if (!(samples_[i].t > samples_[i - 1].t)) {
      throw std::invalid_argument("GripperTrajectory: timestamps must be strictly increasing (sample " +
                                  std::to_string(i) + ")");
    }
  }
}

std::vector<Posed> GripperTrajectory::poses() const {
  std::vector<Posed> out;
  out.reserve(samples_.size());
  for (const auto& s : samples_) out.push_back(s.pose);
  return out;
}

namespace {

GripperSample parse_sample(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  if (!j.is_object()) throw std::runtime_error("expected a JSON object");
  const auto& p = j.at("p");
  const auto& q = j.at("q");
  if (!p.is_array() || p.size() != 3) throw std::runtime_error("\"p\" must have 3 entries");
  if (!q.is_array() || q.size() != 4) throw std::runtime_error("\"q\" must have 4 entries");
  GripperSample s;
  s.t = j.at("t").get<double>();
  const Eigen::Vector3d t(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
  Eigen::Quaterniond rot(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>());
  if (!(rot.norm() > 1e-12)) throw std::runtime_error("quaternion has zero norm");
  s.pose = Posed(t, rot);
  if (j.contains("grasp")) {
    const auto& g = j.at("grasp");
    if (g.is_boolean()) {
      s.grasp = g.get<bool>();
    } else {
      const int v = g.get<int>();
      if (v != 0 && v != 1) throw std::runtime_error("\"grasp\" must be 0 or 1");
      s.grasp = v == 1;
    }
  }
  return s;
}

}  // namespace

GripperTrajectory read_trajectory_jsonl(std::istream& in) {
  std::vector<GripperSample> samples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      samples.push_back(parse_sample(line));
    } catch (const std::exception& e) {
      throw std::runtime_error("trajectory line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return GripperTrajectory(std::move(samples));
}

GripperTrajectory read_trajectory_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trajectory file: " + path);
  return read_trajectory_jsonl(in);
}

void write_trajectory_jsonl(std::ostream& out, const GripperTrajectory& traj) {
  char buf[512];
  for (const auto& s : traj.samples()) {
    const auto& t = s.pose.translation();
    const auto& q = s.pose.rotation();
    std::snprintf(buf, sizeof(buf),
                  "{\"t\": %.17g, \"p\": [%.17g, %.17g, %.17g], \"q\": [%.17g, %.17g, %.17g, %.17g], "
                  "\"grasp\": %d}\n",
                  s.t, t.x(), t.y(), t.z(), q.w(), q.x(), q.y(), q.z(), s.grasp ? 1 : 0);
    out << buf;
  }
}

}  // namespace xmr
