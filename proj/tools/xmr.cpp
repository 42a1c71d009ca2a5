// Command-line front end: retargeting runs, invariant exports and comparisons,
// single IK steps and loss evaluation.
//
// Exit codes: 0 success, 1 input or parse error, 2 IK infeasible.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "xmr/dhb.hpp"
#include "xmr/ik.hpp"
#include "xmr/io.hpp"
#include "xmr/kinematics.hpp"
#include "xmr/losses.hpp"
#include "xmr/retarget.hpp"
#include "xmr/trajectory.hpp"

namespace fs = std::filesystem;
using namespace xmr;

namespace {

constexpr int kExitInput = 1;
constexpr int kExitInfeasible = 2;

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Infeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Verbosity from XMR_LOG: error, warn (default), info or debug.
enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

Level log_level() {
  const char* env = std::getenv("XMR_LOG");
  const std::string v = env ? env : "";
  if (v == "error") return Level::Error;
  if (v == "info") return Level::Info;
  if (v == "debug") return Level::Debug;
  return Level::Warn;
}

void log(Level level, const std::string& message) {
  static const Level threshold = log_level();
  if (level > threshold) return;
  static constexpr const char* names[] = {"error", "warn", "info", "debug"};
  std::cerr << "xmr: " << names[static_cast<int>(level)] << ": " << message << '\n';
}

struct Globals {
  std::string config;
  std::uint64_t seed = 0;
  std::string output_dir;
};

/// Writes to output_dir/name when an output directory is set, else to stdout.
void emit(const Globals& g, const std::string& name, const std::function<void(std::ostream&)>& write) {
  if (g.output_dir.empty()) {
    write(std::cout);
    return;
  }
  const fs::path path = fs::path(g.output_dir) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  write(out);
  log(Level::Info, "wrote " + path.string());
}

PipelineConfig load_config(const Globals& g) {
  if (g.config.empty()) return PipelineConfig{};
  return read_pipeline_config_json(g.config);
}

std::vector<Posed> load_poses(const std::string& path) { return read_trajectory_jsonl(path).poses(); }

int cmd_retarget(const Globals& g, const std::string& model_path, const std::string& traj_path) {
  const RobotModel model = read_model_json(model_path);
  const PipelineConfig config = load_config(g);
  const GripperTrajectory commands = read_trajectory_jsonl(traj_path);
  log(Level::Info, "model " + model.name() + " with " + std::to_string(model.dof()) + " DOF, " +
                       std::to_string(commands.size()) + " setpoints");
  RetargetReport report;
  try {
    report = run_pipeline(model, config, commands);
  } catch (const PipelineInfeasible& e) {
    throw Infeasible("IK infeasible at tick " + std::to_string(e.tick()));
  }
  if (!g.output_dir.empty()) {
    emit(g, "report.jsonl", [&](std::ostream& o) { write_report_jsonl(o, report); });
    emit(g, "tracking.csv", [&](std::ostream& o) { write_tracking_csv(o, report); });
  }
  emit(g, "summary.json", [&](std::ostream& o) { write_summary_json(o, report.summary); });
  return 0;
}

int cmd_invariants(const Globals& g, const std::string& traj_path, std::size_t window, bool single) {
  const std::vector<Posed> poses = load_poses(traj_path);
  if (window < 3) throw InputError("window must be at least 3");
  if (poses.size() < window) {
    throw InputError("trajectory has " + std::to_string(poses.size()) + " samples, shorter than window " +
                     std::to_string(window));
  }
  emit(g, "invariants.csv", [&](std::ostream& o) {
    if (single) {
      write_invariants_csv(o, dhb_transform<double>(std::span<const Posed>(poses).first(window)));
    } else {
      write_sliding_invariants_csv(o, poses, window);
    }
  });
  return 0;
}

int cmd_compare(const Globals& g, const std::string& a_path, const std::string& b_path, std::size_t window) {
  const std::vector<Posed> a = load_poses(a_path);
  const std::vector<Posed> b = load_poses(b_path);
  if (a.size() != b.size()) {
    throw InputError("trajectories differ in length (" + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + ")");
  }
  if (window < 3 || a.size() < window) throw InputError("window must be in [3, trajectory length]");
  const double d = trajectory_invariant_distance(a, b, window);
  emit(g, "compare.json", [&](std::ostream& o) {
    o << "{\"window\": " << window << ", \"windows\": " << a.size() - window + 1
      << ", \"distance\": " << format_number(d) << "}\n";
  });
  return 0;
}

Posed target_pose(const std::vector<double>& v) {
  if (v.size() != 3 && v.size() != 7) throw InputError("--target takes x y z or x y z qw qx qy qz");
  Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
  if (v.size() == 7) {
    q = Eigen::Quaterniond(v[3], v[4], v[5], v[6]);
    if (!(q.norm() > 1e-12)) throw InputError("--target quaternion has zero norm");
  }
  return Posed(Eigen::Vector3d(v[0], v[1], v[2]), q);
}

int cmd_ik_solve(const Globals& g, const std::string& model_path, const std::vector<double>& target_values,
                 const std::vector<double>& q0_values) {
  const RobotModel model = read_model_json(model_path);
  PipelineConfig raw = load_config(g);
  if (!q0_values.empty()) raw.q0 = Eigen::Map<const Eigen::VectorXd>(q0_values.data(), Eigen::Index(q0_values.size()));
  const PipelineConfig config = resolve_config(model, raw);
  const Posed target = target_pose(target_values);
  const double dt = 1.0 / config.ik_rate;

  const JointState state{config.q0, Eigen::VectorXd::Zero(model.dof())};
  const auto tasks = build_tasks(model, state.q, target, config.q_bias, config.k_grip, config.k_bias);
  const VelocityBounds box = velocity_bounds(model, state, dt);
  ConstraintSet constraints{box.lower, box.upper, {}};
  for (const auto& w : config.walls) {
    constraints.cartesian.push_back(virtual_wall_row(model, state.q, w.normal, w.offset, dt));
  }
  const IkSolution sol = solve_esns(tasks, constraints, config.h);
  if (sol.status == IkStatus::Infeasible) throw Infeasible("IK infeasible at tick 0");

  const Eigen::VectorXd q_next = integrate(model, state.q, sol.a, dt);
  const auto position_error = [&](const Eigen::VectorXd& q) {
    return (target.translation() - forward_kinematics(model, q).translation()).norm();
  };
  const Eigen::VectorXd scales = Eigen::Map<const Eigen::VectorXd>(sol.scales.data(), Eigen::Index(sol.scales.size()));
  emit(g, "ik.json", [&](std::ostream& o) {
    o << "{\n  \"status\": \"" << to_string(sol.status) << "\",\n"
      << "  \"scales\": " << format_array(scales) << ",\n"
      << "  \"a\": " << format_array(sol.a) << ",\n"
      << "  \"saturated_joints\": " << format_array(sol.saturated_joints) << ",\n"
      << "  \"q\": " << format_array(state.q) << ",\n"
      << "  \"q_next\": " << format_array(q_next) << ",\n"
      << "  \"position_error\": " << format_number(position_error(state.q)) << ",\n"
      << "  \"position_error_next\": " << format_number(position_error(q_next)) << "\n}\n";
  });
  return 0;
}

int cmd_loss_eval(const Globals& g, const std::string& params_path, const std::string& episode_path) {
  const LossProblem problem = read_loss_params_json(params_path);
  const GripperTrajectory episode = read_trajectory_jsonl(episode_path);
  const LossEpisode cut = split_episode(episode, problem.history_length, problem.predicted.size() - 1);
  const LossBreakdown loss = total_loss(problem.gmm, cut.history, problem.predicted, cut.demo, problem.grasp_logit,
                                        cut.grasp_label, problem.weights);
  emit(g, "loss.json", [&](std::ostream& o) { write_loss_json(o, loss); });
  return 0;
}

int cmd_compare_embodiments(const Globals& g, const std::string& traj_path, const std::vector<std::string>& models,
                            const std::vector<std::string>& model_configs, std::size_t window) {
  std::vector<RobotModel> robots;
  for (const auto& m : models) robots.push_back(read_model_json(m));
  std::vector<PipelineConfig> configs;
  if (model_configs.empty()) {
    configs.push_back(load_config(g));
  } else {
    if (model_configs.size() != models.size()) throw InputError("need one --model-config per model");
    for (const auto& c : model_configs) configs.push_back(read_pipeline_config_json(c));
  }
  const GripperTrajectory commands = read_trajectory_jsonl(traj_path);
  const auto rows = compare_embodiments(robots, configs, commands, window);
  for (const auto& r : rows) {
    if (!r.error.empty()) log(Level::Warn, r.model + ": " + r.error);
  }
  emit(g, "comparison.csv", [&](std::ostream& o) { write_comparison_csv(o, rows); });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Whole-body retargeting, motion invariants and imitation losses"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config, "Pipeline config JSON")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Seed for randomized commands (none of the current commands draw numbers)");
  app.add_option("--output-dir", g.output_dir, "Write output files here instead of standard output")
      ->check(CLI::ExistingDirectory);

  std::string model, traj, traj_b, params;
  std::size_t window = 10;
  bool single = false;
  std::vector<double> target, q0;
  std::vector<std::string> models, model_configs;
  std::function<int()> run;

  auto* retarget = app.add_subcommand("retarget", "Stream a trajectory through the IK pipeline");
  retarget->add_option("model", model, "Robot model JSON")->required()->check(CLI::ExistingFile);
  retarget->add_option("trajectory", traj, "Gripper command JSONL")->required()->check(CLI::ExistingFile);
  retarget->callback([&] { run = [&] { return cmd_retarget(g, model, traj); }; });

  auto* invariants = app.add_subcommand("invariants", "Export DHB invariants as CSV");
  invariants->add_option("trajectory", traj, "Trajectory JSONL")->required()->check(CLI::ExistingFile);
  invariants->add_option("--window,-T", window, "Window length in poses")->capture_default_str();
  invariants->add_flag("--single", single, "Only the first window, without index columns");
  invariants->callback([&] { run = [&] { return cmd_invariants(g, traj, window, single); }; });

  auto* compare = app.add_subcommand("compare", "Sliding-window invariant distance between two trajectories");
  compare->add_option("a", traj, "First trajectory JSONL")->required()->check(CLI::ExistingFile);
  compare->add_option("b", traj_b, "Second trajectory JSONL")->required()->check(CLI::ExistingFile);
  compare->add_option("--window,-T", window, "Window length in poses")->capture_default_str();
  compare->callback([&] { run = [&] { return cmd_compare(g, traj, traj_b, window); }; });

  auto* ik = app.add_subcommand("ik-solve", "One IK tick toward a gripper target");
  ik->add_option("model", model, "Robot model JSON")->required()->check(CLI::ExistingFile);
  ik->add_option("--target", target, "x y z [qw qx qy qz]")->required()->expected(3, 7);
  ik->add_option("--q0", q0, "Start configuration")->expected(1, -1);
  ik->callback([&] { run = [&] { return cmd_ik_solve(g, model, target, q0); }; });

  auto* loss = app.add_subcommand("loss-eval", "Evaluate the imitation loss on an episode");
  loss->add_option("params", params, "GMM and prediction JSON")->required()->check(CLI::ExistingFile);
  loss->add_option("episode", traj, "Episode JSONL")->required()->check(CLI::ExistingFile);
  loss->callback([&] { run = [&] { return cmd_loss_eval(g, params, traj); }; });

  auto* emb = app.add_subcommand("compare-embodiments", "Retarget one trajectory onto several robots");
  emb->add_option("trajectory", traj, "Gripper command JSONL")->required()->check(CLI::ExistingFile);
  emb->add_option("models", models, "Robot model JSON files")->required()->expected(2, -1)->check(CLI::ExistingFile);
  emb->add_option("--model-config", model_configs, "Pipeline config per model, in model order")
      ->check(CLI::ExistingFile);
  emb->add_option("--window,-T", window, "Invariant window length")->capture_default_str();
  emb->callback([&] { run = [&] { return cmd_compare_embodiments(g, traj, models, model_configs, window); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    return run();
  } catch (const Infeasible& e) {
    std::cerr << "xmr: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "xmr: " << e.what() << '\n';
    return kExitInput;
  }
}
