// SPDX-License-Identifier: Apache-2.0
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "shellopt/nurbs.hpp"

namespace shellopt {

using nlohmann::json;

namespace {

json surface_to_json(const NurbsSurface& s) {
  json j;
  j["degree"] = {s.kv_u().degree(), s.kv_v().degree()};
  j["knots_u"] = s.kv_u().knots();
  j["knots_v"] = s.kv_v().knots();
  json cps = json::array();
  for (int k = 0; k < s.num_points(); ++k)
    cps.push_back({s.control_points()(k, 0), s.control_points()(k, 1),
                   s.control_points()(k, 2), s.weights()[k]});
  j["control_points"] = cps;
  return j;
}

NurbsSurface surface_from_json(const json& j) {
  const auto deg = j.at("degree");
  KnotVector ku(deg.at(0).get<int>(), j.at("knots_u").get<std::vector<double>>());
  KnotVector kv(deg.at(1).get<int>(), j.at("knots_v").get<std::vector<double>>());
  const auto& cps = j.at("control_points");
  MatX P(static_cast<int>(cps.size()), 3);
  VecX w(static_cast<int>(cps.size()));
  for (int k = 0; k < P.rows(); ++k) {
    const auto& row = cps.at(k);
    P(k, 0) = row.at(0).get<double>();
    P(k, 1) = row.at(1).get<double>();
    P(k, 2) = row.at(2).get<double>();
    w[k] = row.size() > 3 ? row.at(3).get<double>() : 1.0;
  }
  return NurbsSurface(std::move(ku), std::move(kv), std::move(P), std::move(w));
}

json load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

void save_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(1) << "\n";
}

} // namespace

NurbsSurface read_surface_json(const std::string& path) {
  return surface_from_json(load_file(path));
}

void write_surface_json(const NurbsSurface& s, const std::string& path) {
  save_file(surface_to_json(s), path);
}

NurbsSurface surface_from_json_text(const std::string& text) {
  return surface_from_json(json::parse(text));
}

std::string surface_to_json_text(const NurbsSurface& s) {
  return surface_to_json(s).dump(1);
}

BsplineVolume read_volume_json(const std::string& path) {
  const json j = load_file(path);
  const auto deg = j.at("degree");
  KnotVector ku(deg.at(0).get<int>(), j.at("knots_u").get<std::vector<double>>());
  KnotVector kv(deg.at(1).get<int>(), j.at("knots_v").get<std::vector<double>>());
  KnotVector kw(deg.at(2).get<int>(), j.at("knots_w").get<std::vector<double>>());
  const auto& cps = j.at("control_points");
  MatX Q(static_cast<int>(cps.size()), 3);
  for (int k = 0; k < Q.rows(); ++k)
    for (int c = 0; c < 3; ++c) Q(k, c) = cps.at(k).at(c).get<double>();
  return BsplineVolume(std::move(ku), std::move(kv), std::move(kw), std::move(Q));
}

void write_volume_json(const BsplineVolume& v, const std::string& path) {
  json j;
  j["degree"] = {v.kv(0).degree(), v.kv(1).degree(), v.kv(2).degree()};
  j["knots_u"] = v.kv(0).knots();
  j["knots_v"] = v.kv(1).knots();
  j["knots_w"] = v.kv(2).knots();
  json cps = json::array();
  for (int k = 0; k < v.num_points(); ++k)
    cps.push_back({v.control_points()(k, 0), v.control_points()(k, 1),
                   v.control_points()(k, 2)});
  j["control_points"] = cps;
  save_file(j, path);
}

} // namespace shellopt
