#include "hil/calibration.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

#include "hil/demo.hpp"
#include "hil/errors.hpp"
#include "hil/util.hpp"

namespace hil {

using nlohmann::json;

HomTransform pose_to_matrix(const Waypoint& w) {
  Quat q = w.orientation.normalized();
  return HomTransform::rigid(q.toRotationMatrix(), w.position);
}

CalibrationResult estimate_transform(const std::vector<PairedReading>& readings) {
  if (readings.size() < 3) {
    throw InsufficientData("estimate_transform: need at least 3 readings, got " +
                           std::to_string(readings.size()));
  }

  // Filter each frame independently, keep readings surviving in both.
  std::vector<Waypoint> unity(readings.size()), world(readings.size());
  for (std::size_t i = 0; i < readings.size(); ++i) {
    unity[i] = readings[i].unity_pose;
    world[i] = readings[i].world_pose;
  }
  std::vector<std::size_t> keep;
  if (readings.size() >= 4) {
    std::vector<std::size_t> ku = remove_outlier_indices(unity);
    std::vector<std::size_t> kw = remove_outlier_indices(world);
    std::set_intersection(ku.begin(), ku.end(), kw.begin(), kw.end(), std::back_inserter(keep));
  } else {
    for (std::size_t i = 0; i < readings.size(); ++i) keep.push_back(i);
  }
  if (keep.size() < 3) {
    throw InsufficientData("estimate_transform: fewer than 3 readings survive outlier removal");
  }

  Vec3 t_sum = Vec3::Zero();
  Eigen::Vector4d q_sum = Eigen::Vector4d::Zero();
  Eigen::Vector4d q_ref = Eigen::Vector4d::Zero();
  bool have_ref = false;
  for (std::size_t i : keep) {
    HomTransform per = pose_to_matrix(readings[i].world_pose) *
                       pose_to_matrix(readings[i].unity_pose).inverse();
    t_sum += per.translation_part();
    Quat q(per.rotation());
    q.normalize();
    Eigen::Vector4d c = q.coeffs();
    if (!have_ref) {
      q_ref = c;
      have_ref = true;
    }
    if (c.dot(q_ref) < 0.0) c = -c;
    q_sum += c;
  }

  const double n = static_cast<double>(keep.size());
  Vec3 t_mean = t_sum / n;
  double q_norm = q_sum.norm();
  Quat q_mean = q_norm > 1e-12 ? Quat(Eigen::Vector4d(q_sum / q_norm)) : Quat::Identity();

  CalibrationResult result;
  result.transform = HomTransform::rigid(q_mean.toRotationMatrix(), t_mean);
  result.n_readings = keep.size();

  double err_sum = 0.0;
  for (std::size_t i : keep) {
    Vec3 mapped = result.transform.apply(readings[i].unity_pose.position);
    double err = (mapped - readings[i].world_pose.position).norm();
    result.per_location_errors.push_back(err);
    err_sum += err;
  }
  result.mean_error = err_sum / n;
  return result;
}

namespace {

void append_pose(std::string& out, const Waypoint& w) {
  out += "{\"p\":[";
  out += fmt_double(w.position.x());
  out += ',';
  out += fmt_double(w.position.y());
  out += ',';
  out += fmt_double(w.position.z());
  out += "],\"q\":[";
  out += fmt_double(w.orientation.x());
  out += ',';
  out += fmt_double(w.orientation.y());
  out += ',';
  out += fmt_double(w.orientation.z());
  out += ',';
  out += fmt_double(w.orientation.w());
  out += "]}";
}

Waypoint parse_pose(const json& j, std::size_t line_no, const char* field) {
  if (!j.is_object()) throw ParseError("pose must be an object", line_no, field);
  auto pit = j.find("p");
  auto qit = j.find("q");
  if (pit == j.end() || !pit->is_array() || pit->size() != 3) {
    throw ParseError("pose 'p' must be a 3-array at line " + std::to_string(line_no), line_no,
                     "p");
  }
  if (qit == j.end() || !qit->is_array() || qit->size() != 4) {
    throw ParseError("pose 'q' must be a 4-array at line " + std::to_string(line_no), line_no,
                     "q");
  }
  Waypoint w;
  w.position = Vec3((*pit)[0].get<double>(), (*pit)[1].get<double>(), (*pit)[2].get<double>());
  w.orientation = Quat((*qit)[3].get<double>(), (*qit)[0].get<double>(), (*qit)[1].get<double>(),
                       (*qit)[2].get<double>());
  double norm = w.orientation.norm();
  if (!std::isfinite(norm) || norm < 1e-6) {
    throw ParseError("degenerate quaternion at line " + std::to_string(line_no), line_no, "q");
  }
  w.orientation.normalize();
  return w;
}

}  // namespace

std::string write_paired_readings(const std::vector<PairedReading>& readings) {
  std::string out;
  for (const PairedReading& r : readings) {
    out += "{\"u\":";
    append_pose(out, r.unity_pose);
    out += ",\"w\":";
    append_pose(out, r.world_pose);
    out += "}\n";
  }
  return out;
}

std::vector<PairedReading> parse_paired_readings(const std::string& bytes) {
  std::vector<PairedReading> readings;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < bytes.size()) {
    std::size_t end = bytes.find('\n', start);
    if (end == std::string::npos) end = bytes.size();
    std::string line = bytes.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw ParseError("malformed JSON at line " + std::to_string(line_no), line_no, "");
    }
    auto uit = j.find("u");
    auto wit = j.find("w");
    if (uit == j.end()) throw ParseError("missing 'u' pose", line_no, "u");
    if (wit == j.end()) throw ParseError("missing 'w' pose", line_no, "w");
    PairedReading r;
    r.unity_pose = parse_pose(*uit, line_no, "u");
    r.world_pose = parse_pose(*wit, line_no, "w");
    readings.push_back(r);
  }
  return readings;
}

}  // namespace hil
