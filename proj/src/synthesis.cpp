#include "hil/synthesis.hpp"

#include <cstdlib>

#include "hil/errors.hpp"
#include "hil/util.hpp"

namespace hil {

Trajectory chain_segments(const std::vector<Trajectory>& segments) {
  if (segments.empty()) throw InvalidArgument("chain_segments: no segments");
  for (const Trajectory& s : segments) {
    if (s.empty()) throw InvalidArgument("chain_segments: empty segment");
  }

  Trajectory out;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const Trajectory& seg = segments[i];
    Vec3 shift = Vec3::Zero();
    std::size_t first = 0;
    if (!out.empty()) {
      shift = out.back().position - seg.front().position;
      first = 1;  // junction waypoint coincides after the shift
    }
    for (std::size_t j = first; j < seg.size(); ++j) {
      Waypoint w = seg.waypoints[j];
      w.position += shift;
      out.waypoints.push_back(w);
    }
  }
  for (std::size_t j = 0; j < out.size(); ++j) {
    out.waypoints[j].t = static_cast<double>(j) * kSegmentDt;
  }
  return out;
}

RolloutResult synthesize_rollout(const SkillModelBundle& bundle,
                                 const SynthesisRequest& request) {
  if (request.max_steps < kNumPrimitives) {
    throw InvalidArgument("synthesize: max_steps must be >= 8");
  }
  if (bundle.reactive.size() != kNumPrimitives) {
    throw InvalidArgument("synthesize: bundle must hold 8 reactive models");
  }

  RolloutResult result;
  std::vector<Trajectory> segments;
  Waypoint current = request.start_pose;
  nn::Vector z = nn::Vector::Zero(kLatentDim);

  for (int step = 0; step < request.max_steps; ++step) {
    auto [label, prob] = predict_next(bundle.sequential, result.sequence);
    if (label == kDoneLabel) {
      result.done_reached = true;
      break;
    }
    nn::Vector cond = make_condition(request.params, current, label);
    Trajectory segment =
        decode_segment(bundle.reactive[static_cast<std::size_t>(label - 1)], bundle.norm, cond, z);
    current = segment.back();
    segments.push_back(std::move(segment));
    result.sequence.push_back(label);
  }

  if (segments.empty()) {
    result.trajectory.waypoints.push_back(request.start_pose);
    result.trajectory.waypoints.back().t = 0.0;
  } else {
    result.trajectory = smooth_adaptive(chain_segments(segments), kSmoothingThreshold);
    for (std::size_t j = 0; j < result.trajectory.size(); ++j) {
      result.trajectory.waypoints[j].t = static_cast<double>(j) * kSegmentDt;
    }
  }
  if (result.done_reached) result.sequence.push_back(kDoneLabel);
  return result;
}

std::pair<Trajectory, std::vector<int>> synthesize_trajectory(const SkillModelBundle& bundle,
                                                              const SynthesisRequest& request) {
  RolloutResult rollout = synthesize_rollout(bundle, request);
  if (!rollout.done_reached) {
    throw SynthesisFailure("synthesis did not reach DONE within " +
                               std::to_string(request.max_steps) + " steps",
                           rollout.sequence);
  }
  return {std::move(rollout.trajectory), std::move(rollout.sequence)};
}

std::string export_waypoints_csv(const Trajectory& traj) {
  validate_trajectory(traj);
  std::string out = "t,x,y,z,qx,qy,qz,qw\n";
  for (const Waypoint& w : traj.waypoints) {
    out += fmt_double(w.t);
    out += ',';
    out += fmt_double(w.position.x());
    out += ',';
    out += fmt_double(w.position.y());
    out += ',';
    out += fmt_double(w.position.z());
    out += ',';
    out += fmt_double(w.orientation.x());
    out += ',';
    out += fmt_double(w.orientation.y());
    out += ',';
    out += fmt_double(w.orientation.z());
    out += ',';
    out += fmt_double(w.orientation.w());
    out += '\n';
  }
  return out;
}

Trajectory parse_waypoints_csv(const std::string& bytes) {
  Trajectory out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < bytes.size()) {
    std::size_t end = bytes.find('\n', pos);
    if (end == std::string::npos) end = bytes.size();
    std::string line = bytes.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line_no == 1) {
      if (line != "t,x,y,z,qx,qy,qz,qw") throw ParseError("bad waypoint CSV header", 1, "header");
      continue;
    }
    if (line.empty()) continue;
    double vals[8];
    const char* cursor = line.c_str();
    for (int i = 0; i < 8; ++i) {
      char* next = nullptr;
      vals[i] = std::strtod(cursor, &next);
      if (next == cursor || (i < 7 && *next != ',')) {
        throw ParseError("malformed waypoint row at line " + std::to_string(line_no), line_no,
                         "row");
      }
      cursor = next + (i < 7 ? 1 : 0);
    }
    Waypoint w;
    w.t = vals[0];
    w.position = Vec3(vals[1], vals[2], vals[3]);
    w.orientation = Quat(vals[7], vals[4], vals[5], vals[6]);
    out.waypoints.push_back(w);
  }
  validate_trajectory(out);
  return out;
}

}  // namespace hil
