#include "hil/demo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

#include "hil/errors.hpp"
#include "hil/util.hpp"

namespace hil {

using nlohmann::json;

std::string to_string(DemoSource s) {
  switch (s) {
    case DemoSource::kRecorded: return "recorded";
    case DemoSource::kSynthetic: return "synthetic";
    case DemoSource::kFederated: return "federated";
  }
  return "synthetic";
}

DemoSource demo_source_from_string(const std::string& s) {
  if (s == "recorded") return DemoSource::kRecorded;
  if (s == "synthetic") return DemoSource::kSynthetic;
  if (s == "federated") return DemoSource::kFederated;
  throw ParseError("unknown demo source '" + s + "'", 1, "source");
}

void validate_demonstration(const Demonstration& demo) {
  if (demo.demo_id.empty()) throw InvalidArgument("demonstration: empty demo_id");
  if (!(demo.params.tile_width > 0.0) || !(demo.params.tile_depth > 0.0)) {
    throw InvalidArgument("demonstration: tile dimensions must be positive");
  }
  if (!demo.params.grid_anchor.allFinite()) {
    throw InvalidArgument("demonstration: non-finite grid anchor");
  }
  validate_trajectory(demo.trajectory);
  if (demo.labels.size() != demo.trajectory.size()) {
    throw InvalidArgument("demonstration: label count does not match waypoint count");
  }
  std::array<bool, kNumPrimitives> seen{};
  int prev = 0;
  for (int label : demo.labels) {
    if (label < 1 || label > kNumPrimitives) {
      throw InvalidArgument("demonstration: label outside 1..8");
    }
    if (label < prev) throw InvalidArgument("demonstration: label sequence decreases");
    prev = label;
    seen[label - 1] = true;
  }
  for (int i = 0; i < kNumPrimitives; ++i) {
    if (!seen[i]) {
      throw InvalidArgument("demonstration: primitive " + std::to_string(i + 1) + " missing");
    }
  }
}

namespace {

void append_vec3(std::string& out, const Vec3& v) {
  out += '[';
  out += fmt_double(v.x());
  out += ',';
  out += fmt_double(v.y());
  out += ',';
  out += fmt_double(v.z());
  out += ']';
}

double require_number(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) {
    throw ParseError(std::string("missing or non-numeric field '") + key + "' at line " +
                         std::to_string(line),
                     line, key);
  }
  return it->get<double>();
}

std::string require_string(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw ParseError(std::string("missing or non-string field '") + key + "' at line " +
                         std::to_string(line),
                     line, key);
  }
  return it->get<std::string>();
}

Vec3 require_vec3(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_array() || it->size() != 3) {
    throw ParseError(std::string("field '") + key + "' must be a 3-array at line " +
                         std::to_string(line),
                     line, key);
  }
  Vec3 v((*it)[0].get<double>(), (*it)[1].get<double>(), (*it)[2].get<double>());
  if (!v.allFinite()) throw ParseError(std::string("non-finite '") + key + "'", line, key);
  return v;
}

json parse_json_line(const std::string& line, std::size_t line_no) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw ParseError("malformed JSON at line " + std::to_string(line_no), line_no, "");
  }
  return j;
}

std::vector<std::string> split_lines(const std::string& bytes) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : bytes) {
    if (c == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) lines.push_back(cur);
  return lines;
}

}  // namespace

std::string write_demo(const Demonstration& demo) {
  validate_demonstration(demo);
  std::string out;
  out.reserve(96 * (demo.trajectory.size() + 1));

  out += "{\"kind\":\"demo\",\"version\":1,\"demo_id\":";
  out += json_quote(demo.demo_id);
  out += ",\"task_id\":";
  out += json_quote(demo.params.task_id);
  out += ",\"tile_w\":";
  out += fmt_double(demo.params.tile_width);
  out += ",\"tile_d\":";
  out += fmt_double(demo.params.tile_depth);
  out += ",\"grid_anchor\":";
  append_vec3(out, demo.params.grid_anchor);
  out += ",\"source\":";
  out += json_quote(to_string(demo.source));
  out += "}\n";

  for (std::size_t i = 0; i < demo.trajectory.size(); ++i) {
    const Waypoint& w = demo.trajectory.waypoints[i];
    out += "{\"t\":";
    out += fmt_double(w.t);
    out += ",\"p\":";
    append_vec3(out, w.position);
    out += ",\"q\":[";
    out += fmt_double(w.orientation.x());
    out += ',';
    out += fmt_double(w.orientation.y());
    out += ',';
    out += fmt_double(w.orientation.z());
    out += ',';
    out += fmt_double(w.orientation.w());
    out += "],\"prim\":";
    out += std::to_string(demo.labels[i]);
    out += "}\n";
  }
  return out;
}

DemoHeader parse_demo_header(const std::string& bytes) {
  std::vector<std::string> lines = split_lines(bytes);
  if (lines.empty()) throw ParseError("empty demo file", 0, "");
  json h = parse_json_line(lines[0], 1);
  if (require_string(h, "kind", 1) != "demo") throw ParseError("not a demo file", 1, "kind");
  double version = require_number(h, "version", 1);
  if (version != 1.0) throw ParseError("unsupported demo version", 1, "version");

  DemoHeader header;
  header.demo_id = require_string(h, "demo_id", 1);
  header.task_id = require_string(h, "task_id", 1);
  header.tile_width = require_number(h, "tile_w", 1);
  header.tile_depth = require_number(h, "tile_d", 1);
  header.grid_anchor = require_vec3(h, "grid_anchor", 1);
  header.source = demo_source_from_string(require_string(h, "source", 1));
  return header;
}

Demonstration parse_demo(const std::string& bytes) {
  DemoHeader header = parse_demo_header(bytes);
  std::vector<std::string> lines = split_lines(bytes);

  Demonstration demo;
  demo.demo_id = header.demo_id;
  demo.source = header.source;
  demo.params.task_id = header.task_id;
  demo.params.tile_width = header.tile_width;
  demo.params.tile_depth = header.tile_depth;
  demo.params.grid_anchor = header.grid_anchor;

  double prev_t = -1.0;
  int prev_label = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (lines[i].empty()) continue;
    json j = parse_json_line(lines[i], line_no);

    Waypoint w;
    w.t = require_number(j, "t", line_no);
    if (!std::isfinite(w.t) || w.t < 0.0) {
      throw ParseError("bad timestamp at line " + std::to_string(line_no), line_no, "t");
    }
    if (w.t <= prev_t) {
      throw ParseError("timestamps not strictly increasing at line " + std::to_string(line_no),
                       line_no, "t");
    }
    prev_t = w.t;
    w.position = require_vec3(j, "p", line_no);

    auto qit = j.find("q");
    if (qit == j.end() || !qit->is_array() || qit->size() != 4) {
      throw ParseError("field 'q' must be a 4-array at line " + std::to_string(line_no), line_no,
                       "q");
    }
    w.orientation = Quat((*qit)[3].get<double>(), (*qit)[0].get<double>(),
                         (*qit)[1].get<double>(), (*qit)[2].get<double>());
    double norm = w.orientation.norm();
    if (!std::isfinite(norm) || std::abs(norm - 1.0) > 1e-3) {
      throw ParseError("quaternion norm off by more than 1e-3 at line " + std::to_string(line_no),
                       line_no, "q");
    }
    w.orientation.normalize();

    double prim = require_number(j, "prim", line_no);
    int label = static_cast<int>(prim);
    if (prim != label || label < 1 || label > kNumPrimitives) {
      throw ParseError("label outside 1..8 at line " + std::to_string(line_no), line_no, "prim");
    }
    if (label < prev_label) {
      throw ParseError("label sequence decreases at line " + std::to_string(line_no), line_no,
                       "prim");
    }
    prev_label = label;

    demo.trajectory.waypoints.push_back(w);
    demo.labels.push_back(label);
  }

  validate_demonstration(demo);
  return demo;
}

std::string write_manifest(const DatasetManifest& manifest) {
  std::vector<ManifestEntry> entries = manifest.entries;
  std::sort(entries.begin(), entries.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) { return a.demo_id < b.demo_id; });

  std::string out = "{\"kind\":\"manifest\",\"version\":1,\"dataset_id\":";
  out += json_quote(manifest.dataset_id);
  out += ",\"created_at\":";
  out += json_quote(manifest.created_at);
  out += ",\"entries\":[";
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const ManifestEntry& e = entries[i];
    if (i) out += ',';
    out += "{\"demo_id\":";
    out += json_quote(e.demo_id);
    out += ",\"task_id\":";
    out += json_quote(e.task_id);
    out += ",\"grid_anchor\":";
    append_vec3(out, e.grid_anchor);
    out += ",\"tile_w\":";
    out += fmt_double(e.tile_width);
    out += ",\"tile_d\":";
    out += fmt_double(e.tile_depth);
    out += ",\"sha256\":";
    out += json_quote(e.sha256);
    out += '}';
  }
  out += "]}\n";
  return out;
}

DatasetManifest parse_manifest(const std::string& bytes) {
  json j = json::parse(bytes, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ParseError("malformed manifest JSON", 1, "");
  if (require_string(j, "kind", 1) != "manifest") throw ParseError("not a manifest", 1, "kind");

  DatasetManifest m;
  m.dataset_id = require_string(j, "dataset_id", 1);
  m.created_at = require_string(j, "created_at", 1);
  auto it = j.find("entries");
  if (it == j.end() || !it->is_array()) throw ParseError("missing entries array", 1, "entries");
  for (const json& e : *it) {
    ManifestEntry entry;
    entry.demo_id = require_string(e, "demo_id", 1);
    entry.task_id = require_string(e, "task_id", 1);
    entry.grid_anchor = require_vec3(e, "grid_anchor", 1);
    entry.tile_width = require_number(e, "tile_w", 1);
    entry.tile_depth = require_number(e, "tile_d", 1);
    entry.sha256 = require_string(e, "sha256", 1);
    if (entry.sha256.size() != 64) throw ParseError("sha256 must be 64 hex chars", 1, "sha256");
    m.entries.push_back(entry);
  }
  for (std::size_t i = 1; i < m.entries.size(); ++i) {
    if (m.entries[i].demo_id == m.entries[i - 1].demo_id) {
      throw ParseError("duplicate demo_id in manifest", 1, "demo_id");
    }
  }
  return m;
}

std::vector<std::size_t> remove_outlier_indices(const std::vector<Waypoint>& readings) {
  const std::size_t n = readings.size();
  if (n < 4) throw InvalidArgument("remove_outliers: need at least 4 readings");

  auto axis_median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
  };

  Vec3 median, mad;
  for (int axis = 0; axis < 3; ++axis) {
    std::vector<double> vals(n);
    for (std::size_t i = 0; i < n; ++i) vals[i] = readings[i].position[axis];
    median[axis] = axis_median(vals);
    std::vector<double> devs(n);
    for (std::size_t i = 0; i < n; ++i) devs[i] = std::abs(vals[i] - median[axis]);
    mad[axis] = axis_median(devs);
  }

  std::vector<std::size_t> keep;
  keep.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    bool ok = true;
    for (int axis = 0; axis < 3; ++axis) {
      if (std::abs(readings[i].position[axis] - median[axis]) > 3.0 * mad[axis]) {
        ok = false;
        break;
      }
    }
    if (ok) keep.push_back(i);
  }

  const std::size_t min_keep = n - n / 5;  // drop at most 20%
  if (keep.size() < min_keep) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return (readings[a].position - median).norm() < (readings[b].position - median).norm();
    });
    order.resize(min_keep);
    std::sort(order.begin(), order.end());
    keep = order;
  }
  return keep;
}

std::vector<Waypoint> remove_outliers(const std::vector<Waypoint>& readings) {
  std::vector<std::size_t> keep = remove_outlier_indices(readings);
  std::vector<Waypoint> out;
  out.reserve(keep.size());
  for (std::size_t i : keep) out.push_back(readings[i]);
  return out;
}

std::array<Trajectory, kNumPrimitives> segment_by_label(const Demonstration& demo) {
  validate_demonstration(demo);
  std::array<Trajectory, kNumPrimitives> segments;
  for (std::size_t i = 0; i < demo.trajectory.size(); ++i) {
    segments[demo.labels[i] - 1].waypoints.push_back(demo.trajectory.waypoints[i]);
  }
  return segments;
}

}  // namespace hil
