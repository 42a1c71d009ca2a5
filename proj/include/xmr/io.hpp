#pragma once

// File formats of the command-line tools. Readers throw std::runtime_error
// with a message naming the file and the offending field.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xmr/ik.hpp"
#include "xmr/kinematics.hpp"
#include "xmr/losses.hpp"
#include "xmr/retarget.hpp"
#include "xmr/trajectory.hpp"

namespace xmr {

/// %.17g, with null for NaN and infinities.
std::string format_number(double v);
std::string format_array(const Eigen::Ref<const Eigen::VectorXd>& v);
std::string format_array(std::span<const int> v);

// Robot model ---------------------------------------------------------------
//
// {"name": "...",
//  "joints": [{"name", "kind", "parent", "child",
//              "origin": {"p": [x,y,z], "q": [w,x,y,z]}, "axis": [x,y,z],
//              "limits": {"q": [lo, hi], "v": vmax, "a": amax}}, ...],
//  "gripper": {"link": "...", "offset": {"p": [...], "q": [...]}}}
//
// kind is revolute, prismatic, planar, floating or fixed. Multi-DOF joints take
// either one limits object for every DOF or an array with one per DOF. A null
// position bound is unbounded. origin, axis and offset are optional.

RobotModel parse_model_json(const std::string& text, const std::string& fallback_name = {});
RobotModel read_model_json(const std::string& path);
void write_model_json(std::ostream& out, const RobotModel& model);

// Pipeline configuration -----------------------------------------------------
//
// {"policy_rate": 10, "ik_rate": 100, "k_grip": 10 | [6], "k_bias": s | [n],
//  "h": s | [n], "q0": [n], "q_bias": [n],
//  "latency": {"tau": s | [n], "delay": ticks},
//  "walls": [{"normal": [x,y,z], "offset": d}]}
//
// Every key is optional; unknown keys are rejected.

PipelineConfig parse_pipeline_config_json(const std::string& text);
PipelineConfig read_pipeline_config_json(const std::string& path);

// Retargeting output -----------------------------------------------------------

/// One line per IK tick: {"tick", "t", "q", "qdot", "c1", "saturated"}.
void write_report_jsonl(std::ostream& out, const RetargetReport& report);
void write_summary_json(std::ostream& out, const RetargetSummary& summary);
/// t,position_error,orientation_error per setpoint.
void write_tracking_csv(std::ostream& out, const RetargetReport& report);
/// One row per model of a compare_embodiments run.
void write_comparison_csv(std::ostream& out, std::span<const EmbodimentResult> rows);

// Losses -----------------------------------------------------------------------
//
// {"modes": [{"logit": w, "mean": [6], "std": [6]}, ...],
//  "grasp_logit": z,
//  "predicted": [6] | [[6], ...],
//  "weights": {"nll": 1, "invar": 1, "ce": 1},
//  "history_length": 10}
//
// predicted defaults to the mean of the mode with the largest logit. A list of
// P + 1 steps selects the receding-horizon invariant loss.

struct LossProblem {
  GmmParams gmm;
  double grasp_logit = 0.0;
  std::vector<DifferentialPosed> predicted;
  LossWeights weights;
  std::size_t history_length = kDefaultHistoryLength;
};

LossProblem parse_loss_params_json(const std::string& text);
LossProblem read_loss_params_json(const std::string& path);

/// History window and demonstrated steps cut from the tail of an episode: the
/// last `horizon` + 1 increments are the demonstration, the `history_length`
/// poses before them the history. The grasp label is that of the final sample.
struct LossEpisode {
  std::vector<Posed> history;
  std::vector<DifferentialPosed> demo;
  bool grasp_label = false;
};

LossEpisode split_episode(const GripperTrajectory& episode, std::size_t history_length, std::size_t horizon);

void write_loss_json(std::ostream& out, const LossBreakdown& loss);

}  // namespace xmr
