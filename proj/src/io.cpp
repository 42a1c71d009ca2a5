#include "xmr/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace xmr {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string slurp(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(std::string("cannot open ") + what + " file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_document(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string(what) + ": " + e.what());
  }
}

double number(const json& j, const std::string& field) {
  if (!j.is_number()) throw std::runtime_error(field + " must be a number");
  return j.get<double>();
}

Eigen::VectorXd vector(const json& j, const std::string& field, Eigen::Index expected = -1) {
  if (!j.is_array()) throw std::runtime_error(field + " must be an array");
  if (expected >= 0 && static_cast<Eigen::Index>(j.size()) != expected) {
    throw std::runtime_error(field + " must have " + std::to_string(expected) + " entries");
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], field);
  return v;
}

/// A scalar becomes a one-entry vector, which the pipeline broadcasts.
Eigen::VectorXd scalar_or_vector(const json& j, const std::string& field) {
  if (j.is_number()) return Eigen::VectorXd::Constant(1, j.get<double>());
  return vector(j, field);
}

Posed pose(const json& j, const std::string& field) {
  if (!j.is_object()) throw std::runtime_error(field + " must be an object with p and q");
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
  if (j.contains("p")) p = vector(j.at("p"), field + ".p", 3);
  if (j.contains("q")) {
    const Eigen::VectorXd w = vector(j.at("q"), field + ".q", 4);
    q = Eigen::Quaterniond(w[0], w[1], w[2], w[3]);
    if (!(q.norm() > 1e-12)) throw std::runtime_error(field + ".q has zero norm");
  }
  return Posed(p, q);
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw std::runtime_error(where + ": unknown key \"" + key + "\"");
  }
}

DofLimits dof_limits(const json& j, const std::string& field) {
  if (!j.is_object()) throw std::runtime_error(field + " must be an object");
  reject_unknown(j, {"q", "v", "a"}, field);
  DofLimits lim;
  if (j.contains("q")) {
    const json& q = j.at("q");
    if (!q.is_array() || q.size() != 2) throw std::runtime_error(field + ".q must be [lo, hi]");
    lim.q_min = q[0].is_null() ? -kInf : number(q[0], field + ".q");
    lim.q_max = q[1].is_null() ? kInf : number(q[1], field + ".q");
  }
  if (j.contains("v")) lim.v_max = number(j.at("v"), field + ".v");
  if (j.contains("a")) lim.a_max = number(j.at("a"), field + ".a");
  return lim;
}

JointSpec joint(const json& j, std::size_t index) {
  const std::string field = "joints[" + std::to_string(index) + "]";
  if (!j.is_object()) throw std::runtime_error(field + " must be an object");
  reject_unknown(j, {"name", "kind", "parent", "child", "origin", "axis", "limits"}, field);
  JointSpec s;
  s.name = j.at("name").get<std::string>();
  s.kind = joint_kind_from_string(j.at("kind").get<std::string>());
  s.parent = j.at("parent").get<std::string>();
  s.child = j.at("child").get<std::string>();
  if (j.contains("origin")) s.origin = pose(j.at("origin"), field + ".origin");
  if (j.contains("axis")) s.axis = vector(j.at("axis"), field + ".axis", 3);
  if (j.contains("limits")) {
    const json& l = j.at("limits");
    if (l.is_array()) {
      for (std::size_t d = 0; d < l.size(); ++d) {
        s.limits.push_back(dof_limits(l[d], field + ".limits[" + std::to_string(d) + "]"));
      }
    } else {
      s.limits.push_back(dof_limits(l, field + ".limits"));
    }
  } else if (dof_count(s.kind) > 0) {
    s.limits.push_back(DofLimits{});
  }
  return s;
}

void write_pose(std::ostream& out, const Posed& p) {
  const auto& q = p.rotation();
  out << "{\"p\": " << format_array(p.translation()) << ", \"q\": ["
      << format_number(q.w()) << ", " << format_number(q.x()) << ", " << format_number(q.y()) << ", "
      << format_number(q.z()) << "]}";
}

std::string json_string(const std::string& s) { return json(s).dump(); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string format_number(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_array(const Eigen::Ref<const Eigen::VectorXd>& v) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_number(v[i]);
  }
  return out + "]";
}

std::string format_array(std::span<const int> v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(v[i]);
  }
  return out + "]";
}

RobotModel parse_model_json(const std::string& text, const std::string& fallback_name) {
  const json doc = parse_document(text, "model");
  try {
    if (!doc.is_object()) throw std::runtime_error("top level must be an object");
    reject_unknown(doc, {"name", "joints", "gripper"}, "model");
    const json& js = doc.at("joints");
    if (!js.is_array()) throw std::runtime_error("joints must be an array");
    std::vector<JointSpec> joints;
    for (std::size_t i = 0; i < js.size(); ++i) joints.push_back(joint(js[i], i));
    const json& g = doc.at("gripper");
    GripperFrame gripper;
    gripper.link = g.at("link").get<std::string>();
    if (g.contains("offset")) gripper.offset = pose(g.at("offset"), "gripper.offset");
    const std::string name = doc.contains("name") ? doc.at("name").get<std::string>() : fallback_name;
    return RobotModel(std::move(joints), std::move(gripper), name);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("model: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("model: ") + e.what());
  }
}

RobotModel read_model_json(const std::string& path) {
  try {
    return parse_model_json(slurp(path, "model"), std::filesystem::path(path).stem().string());
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void write_model_json(std::ostream& out, const RobotModel& model) {
  out << "{\"name\": " << json_string(model.name()) << ",\n \"joints\": [";
  const auto& joints = model.joints();
  for (std::size_t i = 0; i < joints.size(); ++i) {
    const JointSpec& j = joints[i];
    out << (i ? ",\n  " : "\n  ") << "{\"name\": " << json_string(j.name) << ", \"kind\": \"" << to_string(j.kind)
        << "\", \"parent\": " << json_string(j.parent) << ", \"child\": " << json_string(j.child)
        << ", \"origin\": ";
    write_pose(out, j.origin);
    out << ", \"axis\": " << format_array(j.axis) << ", \"limits\": [";
    for (std::size_t d = 0; d < j.limits.size(); ++d) {
      const DofLimits& l = j.limits[d];
      out << (d ? ", " : "") << "{\"q\": [" << format_number(l.q_min) << ", " << format_number(l.q_max)
          << "], \"v\": " << format_number(l.v_max) << ", \"a\": " << format_number(l.a_max) << "}";
    }
    out << "]}";
  }
  out << "\n ],\n \"gripper\": {\"link\": " << json_string(model.gripper().link) << ", \"offset\": ";
  write_pose(out, model.gripper().offset);
  out << "}}\n";
}

PipelineConfig parse_pipeline_config_json(const std::string& text) {
  const json doc = parse_document(text, "pipeline config");
  PipelineConfig c;
  try {
    if (!doc.is_object()) throw std::runtime_error("top level must be an object");
    reject_unknown(doc, {"policy_rate", "ik_rate", "k_grip", "k_bias", "h", "q0", "q_bias", "latency", "walls"},
                   "pipeline config");
    if (doc.contains("policy_rate")) c.policy_rate = number(doc.at("policy_rate"), "policy_rate");
    if (doc.contains("ik_rate")) c.ik_rate = number(doc.at("ik_rate"), "ik_rate");
    if (doc.contains("k_grip")) {
      const json& k = doc.at("k_grip");
      c.k_grip = k.is_number() ? Vector6d::Constant(k.get<double>()) : Vector6d(vector(k, "k_grip", 6));
    }
    if (doc.contains("k_bias")) c.k_bias = scalar_or_vector(doc.at("k_bias"), "k_bias");
    if (doc.contains("h")) c.h = scalar_or_vector(doc.at("h"), "h");
    if (doc.contains("q0")) c.q0 = vector(doc.at("q0"), "q0");
    if (doc.contains("q_bias")) c.q_bias = vector(doc.at("q_bias"), "q_bias");
    if (doc.contains("latency")) {
      const json& l = doc.at("latency");
      reject_unknown(l, {"tau", "delay"}, "latency");
      if (l.contains("tau")) c.latency.tau = scalar_or_vector(l.at("tau"), "latency.tau");
      if (l.contains("delay")) {
        if (!l.at("delay").is_number_integer()) throw std::runtime_error("latency.delay must be an integer");
        c.latency.delay = l.at("delay").get<int>();
      }
    }
    if (doc.contains("walls")) {
      for (const json& w : doc.at("walls")) {
        reject_unknown(w, {"normal", "offset"}, "walls");
        WallSpec s;
        s.normal = vector(w.at("normal"), "walls.normal", 3);
        s.offset = number(w.at("offset"), "walls.offset");
        c.walls.push_back(s);
      }
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("pipeline config: ") + e.what());
  }
  return c;
}

PipelineConfig read_pipeline_config_json(const std::string& path) {
  try {
    return parse_pipeline_config_json(slurp(path, "pipeline config"));
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void write_report_jsonl(std::ostream& out, const RetargetReport& report) {
  for (std::size_t i = 0; i < report.ticks.size(); ++i) {
    const TickRecord& r = report.ticks[i];
    out << "{\"tick\": " << i << ", \"t\": " << format_number(r.t) << ", \"q\": " << format_array(r.q)
        << ", \"qdot\": " << format_array(r.qdot) << ", \"c1\": " << format_number(r.c1)
        << ", \"saturated\": " << format_array(r.saturated) << "}\n";
  }
}

void write_summary_json(std::ostream& out, const RetargetSummary& s) {
  out << "{\n"
      << "  \"ticks\": " << s.ticks << ",\n"
      << "  \"setpoints\": " << s.setpoints << ",\n"
      << "  \"max_position_error\": " << format_number(s.max_position_error) << ",\n"
      << "  \"mean_position_error\": " << format_number(s.mean_position_error) << ",\n"
      << "  \"max_orientation_error\": " << format_number(s.max_orientation_error) << ",\n"
      << "  \"mean_orientation_error\": " << format_number(s.mean_orientation_error) << ",\n"
      << "  \"limit_violations\": " << s.limit_violations << ",\n"
      << "  \"clamp_events\": " << s.clamp_events << ",\n"
      << "  \"saturated_fraction\": " << format_number(s.saturated_fraction) << "\n"
      << "}\n";
}

void write_tracking_csv(std::ostream& out, const RetargetReport& report) {
  out << "t,position_error,orientation_error\n";
  for (const auto& e : report.tracking) {
    out << format_number(e.t) << ',' << format_number(e.position) << ',' << format_number(e.orientation) << '\n';
  }
}

void write_comparison_csv(std::ostream& out, std::span<const EmbodimentResult> rows) {
  out << "model,ok,max_position_error,mean_position_error,max_orientation_error,mean_orientation_error,"
         "limit_violations,clamp_events,saturated_fraction,invariant_distance,error\n";
  for (const auto& r : rows) {
    out << csv_field(r.model) << ',' << (r.summary ? 1 : 0) << ',';
    if (r.summary) {
      const RetargetSummary& s = *r.summary;
      out << format_number(s.max_position_error) << ',' << format_number(s.mean_position_error) << ','
          << format_number(s.max_orientation_error) << ',' << format_number(s.mean_orientation_error) << ','
          << s.limit_violations << ',' << s.clamp_events << ',' << format_number(s.saturated_fraction) << ','
          << format_number(r.invariant_distance);
    } else {
      out << ",,,,,,,";
    }
    out << ',' << csv_field(r.error) << '\n';
  }
}

LossProblem parse_loss_params_json(const std::string& text) {
  const json doc = parse_document(text, "loss params");
  LossProblem p;
  try {
    if (!doc.is_object()) throw std::runtime_error("top level must be an object");
    reject_unknown(doc, {"modes", "grasp_logit", "predicted", "weights", "history_length"}, "loss params");
    const json& modes = doc.at("modes");
    if (!modes.is_array() || modes.empty()) throw std::runtime_error("modes must be a non-empty array");
    for (std::size_t k = 0; k < modes.size(); ++k) {
      const std::string field = "modes[" + std::to_string(k) + "]";
      reject_unknown(modes[k], {"logit", "mean", "std"}, field);
      GmmParams::Mode m;
      m.logit = number(modes[k].at("logit"), field + ".logit");
      m.mean = vector(modes[k].at("mean"), field + ".mean", 6);
      m.std = vector(modes[k].at("std"), field + ".std", 6);
      if ((m.std.array() < 0.0).any()) throw std::runtime_error(field + ".std must be non-negative");
      p.gmm.modes.push_back(m);
    }
    if (doc.contains("grasp_logit")) p.grasp_logit = number(doc.at("grasp_logit"), "grasp_logit");
    if (doc.contains("predicted")) {
      const json& pr = doc.at("predicted");
      if (!pr.is_array() || pr.empty()) throw std::runtime_error("predicted must be a non-empty array");
      if (pr[0].is_array()) {
        for (std::size_t k = 0; k < pr.size(); ++k) {
          p.predicted.push_back(
              DifferentialPosed::FromVector(vector(pr[k], "predicted[" + std::to_string(k) + "]", 6)));
        }
      } else {
        p.predicted.push_back(DifferentialPosed::FromVector(vector(pr, "predicted", 6)));
      }
    } else {
      const GmmParams::Mode* best = &p.gmm.modes.front();
      for (const auto& m : p.gmm.modes) {
        if (m.logit > best->logit) best = &m;
      }
      p.predicted.push_back(DifferentialPosed::FromVector(best->mean));
    }
    if (doc.contains("weights")) {
      const json& w = doc.at("weights");
      reject_unknown(w, {"nll", "invar", "ce"}, "weights");
      if (w.contains("nll")) p.weights.nll = number(w.at("nll"), "weights.nll");
      if (w.contains("invar")) p.weights.invar = number(w.at("invar"), "weights.invar");
      if (w.contains("ce")) p.weights.ce = number(w.at("ce"), "weights.ce");
    }
    if (doc.contains("history_length")) {
      const json& t = doc.at("history_length");
      if (!t.is_number_integer() || t.get<long long>() < 3) {
        throw std::runtime_error("history_length must be an integer >= 3");
      }
      p.history_length = t.get<std::size_t>();
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("loss params: ") + e.what());
  }
  return p;
}

LossProblem read_loss_params_json(const std::string& path) {
  try {
    return parse_loss_params_json(slurp(path, "loss params"));
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

LossEpisode split_episode(const GripperTrajectory& episode, std::size_t history_length, std::size_t horizon) {
  const std::size_t needed = history_length + horizon + 1;
  if (episode.size() < needed) {
    throw std::runtime_error("episode has " + std::to_string(episode.size()) + " samples, needs " +
                             std::to_string(needed) + " (history " + std::to_string(history_length) +
                             " + " + std::to_string(horizon + 1) + " demonstrated steps)");
  }
  LossEpisode out;
  const std::size_t first = episode.size() - needed;
  for (std::size_t k = first; k < first + history_length; ++k) out.history.push_back(episode[k].pose);
  for (std::size_t k = first + history_length; k < episode.size(); ++k) {
    out.demo.push_back(difference(episode[k - 1].pose, episode[k].pose));
  }
  out.grasp_label = episode[episode.size() - 1].grasp;
  return out;
}

void write_loss_json(std::ostream& out, const LossBreakdown& loss) {
  out << "{\"nll\": " << format_number(loss.nll) << ", \"invar\": " << format_number(loss.invar)
      << ", \"ce\": " << format_number(loss.ce) << ", \"total\": " << format_number(loss.total) << "}\n";
}

}  // namespace xmr
