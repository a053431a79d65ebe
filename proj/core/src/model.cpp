#include "edgewbc/model.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace edgewbc {

using nlohmann::json;

double RobotModel::total_mass() const {
  double m = 0.0;
  for (const auto& l : links) m += l.mass;
  return m;
}

int RobotModel::contact_frame_index(const std::string& name) const {
  for (int i = 0; i < static_cast<int>(contact_frames.size()); ++i)
    if (contact_frames[i].name == name) return i;
  throw UnknownFrame("unknown contact frame: " + name);
}

void RobotModel::validate() const {
  if (links.empty()) throw InvalidInput("model has no links");
  if (static_cast<int>(joints.size()) != num_links() - 1)
    throw InvalidInput("model must have exactly one joint per non-root link");
  for (int j = 0; j < num_joints(); ++j) {
    const Joint& jt = joints[j];
    // Joint j drives link j+1; its parent must already exist in the tree.
    if (jt.parent < 0 || jt.parent > j)
      throw InvalidInput("joint " + jt.name + " has invalid parent link index");
    if (jt.pos_min > jt.pos_max) throw InvalidInput("joint " + jt.name + " has empty angle range");
    if (jt.torque_limit <= 0.0)
      throw InvalidInput("joint " + jt.name + " has non-positive torque limit");
  }
  for (const auto& l : links) {
    if (l.mass < 0.0 || l.inertia < 0.0)
      throw InvalidInput("link " + l.name + " has negative mass or inertia");
  }
  if (total_mass() <= 0.0) throw InvalidInput("model has non-positive total mass");
  for (const auto& c : contact_frames) {
    if (c.link < 0 || c.link >= num_links())
      throw InvalidInput("contact frame " + c.name + " references invalid link");
  }
  if (contact_frames.size() > 31) throw InvalidInput("too many contact frames for mode bitmask");
  if (friction_coeff <= 0.0) throw InvalidInput("friction coefficient must be positive");
}

namespace {

Vec2 vec2_from(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2) throw InvalidInput(what + " must be a 2-element array");
  return Vec2(j[0].get<double>(), j[1].get<double>());
}

json vec2_to(const Vec2& v) { return json::array({v.x(), v.y()}); }

}  // namespace

RobotModel model_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("model JSON parse error: ") + e.what());
  }
  if (!j.contains("schema") || j["schema"] != "rbd-model/1")
    throw InvalidInput("model file missing or unsupported schema (want rbd-model/1)");

  RobotModel m;
  m.gravity = j.contains("gravity") ? vec2_from(j["gravity"], "gravity") : Vec2(0, -9.81);
  m.friction_coeff = j.value("friction_coeff", 0.6);
  m.floating_base = j.value("floating_base", true);

  for (const auto& lj : j.at("links")) {
    Link l;
    l.name = lj.at("name").get<std::string>();
    l.mass = lj.at("mass").get<double>();
    l.inertia = lj.at("inertia").get<double>();
    l.com_offset = vec2_from(lj.at("com_offset"), "links[].com_offset");
    l.length = lj.value("length", 0.0);
    m.links.push_back(l);
  }
  if (j.contains("joints")) {
    for (const auto& jj : j["joints"]) {
      Joint jt;
      jt.name = jj.at("name").get<std::string>();
      jt.parent = jj.at("parent").get<int>();
      jt.mount = vec2_from(jj.at("mount"), "joints[].mount");
      if (jj.contains("position_limits")) {
        jt.pos_min = jj["position_limits"][0].get<double>();
        jt.pos_max = jj["position_limits"][1].get<double>();
      }
      jt.torque_limit = jj.value("torque_limit", 100.0);
      m.joints.push_back(jt);
    }
  }
  if (j.contains("contact_frames")) {
    for (const auto& cj : j["contact_frames"]) {
      ContactFrame c;
      c.name = cj.at("name").get<std::string>();
      c.link = cj.at("link").get<int>();
      c.offset = vec2_from(cj.at("offset"), "contact_frames[].offset");
      m.contact_frames.push_back(c);
    }
  }
  m.validate();
  return m;
}

std::string model_to_json_text(const RobotModel& m) {
  json j;
  j["schema"] = "rbd-model/1";
  j["gravity"] = vec2_to(m.gravity);
  j["friction_coeff"] = m.friction_coeff;
  j["floating_base"] = m.floating_base;
  j["links"] = json::array();
  for (const auto& l : m.links) {
    j["links"].push_back({{"name", l.name},
                          {"mass", l.mass},
                          {"inertia", l.inertia},
                          {"com_offset", vec2_to(l.com_offset)},
                          {"length", l.length}});
  }
  j["joints"] = json::array();
  for (const auto& jt : m.joints) {
    j["joints"].push_back({{"name", jt.name},
                           {"parent", jt.parent},
                           {"mount", vec2_to(jt.mount)},
                           {"position_limits", json::array({jt.pos_min, jt.pos_max})},
                           {"torque_limit", jt.torque_limit}});
  }
  j["contact_frames"] = json::array();
  for (const auto& c : m.contact_frames) {
    j["contact_frames"].push_back(
        {{"name", c.name}, {"link", c.link}, {"offset", vec2_to(c.offset)}});
  }
  return j.dump(2) + "\n";
}

RobotModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open model file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json_text(ss.str());
}

void save_model(const RobotModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write model file: " + path);
  out << model_to_json_text(m);
}

RobotModel default_biped_model() {
  RobotModel m;
  m.gravity = Vec2(0.0, -9.81);
  m.friction_coeff = 0.6;
  m.floating_base = true;

  auto link = [&](const std::string& name, double mass, double inertia, Vec2 com, double len) {
    Link l;
    l.name = name;
    l.mass = mass;
    l.inertia = inertia;
    l.com_offset = com;
    l.length = len;
    m.links.push_back(l);
  };
  auto joint = [&](const std::string& name, int parent, Vec2 mount, double lo, double hi,
                   double tmax) {
    Joint j;
    j.name = name;
    j.parent = parent;
    j.mount = mount;
    j.pos_min = lo;
    j.pos_max = hi;
    j.torque_limit = tmax;
    m.joints.push_back(j);
  };

  // Zero configuration: torso upright, legs straight down, feet flat.
  link("torso", 20.0, 0.8, Vec2(0.0, 0.25), 0.50);
  link("l_thigh", 4.0, 0.07, Vec2(0.0, -0.225), 0.45);
  link("l_shank", 2.5, 0.05, Vec2(0.0, -0.225), 0.45);
  link("l_foot", 1.0, 0.01, Vec2(0.02, -0.03), 0.12);
  link("r_thigh", 4.0, 0.07, Vec2(0.0, -0.225), 0.45);
  link("r_shank", 2.5, 0.05, Vec2(0.0, -0.225), 0.45);
  link("r_foot", 1.0, 0.01, Vec2(0.02, -0.03), 0.12);

  joint("l_hip", 0, Vec2(0.0, 0.0), -2.4, 2.4, 160.0);
  joint("l_knee", 1, Vec2(0.0, -0.45), -2.6, 0.05, 160.0);
  joint("l_ankle", 2, Vec2(0.0, -0.45), -1.2, 1.2, 80.0);
  joint("r_hip", 0, Vec2(0.0, 0.0), -2.4, 2.4, 160.0);
  joint("r_knee", 4, Vec2(0.0, -0.45), -2.6, 0.05, 160.0);
  joint("r_ankle", 5, Vec2(0.0, -0.45), -1.2, 1.2, 80.0);

  m.contact_frames = {
      {"l_foot_point", 3, Vec2(0.0, -0.06)}, {"r_foot_point", 6, Vec2(0.0, -0.06)},
      {"l_heel", 3, Vec2(-0.04, -0.06)},     {"l_toe", 3, Vec2(0.08, -0.06)},
      {"r_heel", 6, Vec2(-0.04, -0.06)},     {"r_toe", 6, Vec2(0.08, -0.06)},
  };

  m.validate();
  return m;
}

}  // namespace edgewbc
