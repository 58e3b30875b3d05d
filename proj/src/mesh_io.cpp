#include <ddr/mesh.hpp>

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ddr {

using nlohmann::json;

MeshDescription description_from_json(const std::string& text) {
  MeshDescription d;
  try {
    const json j = json::parse(text);
    for (const auto& p : j.at("vertices")) {
      if (p.size() != 3) {
        throw Error("mesh file: vertex with " + std::to_string(p.size()) + " coordinates");
      }
      d.points.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
    }
    for (const auto& f : j.at("faces")) {
      d.faces.push_back(f.get<std::vector<Index>>());
    }
    for (const auto& c : j.at("cells")) {
      std::vector<std::pair<Index, int>> cell;
      for (const auto& sf : c) {
        const long v = sf.get<long>();
        if (v == 0) {
          throw Error("mesh file: cell face entries are signed 1-based face ids");
        }
        cell.emplace_back(std::abs(v) - 1, v > 0 ? 1 : -1);
      }
      d.cells.push_back(cell);
    }
    if (j.contains("gamma_faces")) {
      d.gamma_faces = j.at("gamma_faces").get<std::vector<Index>>();
    }
    const auto& sub = j.at("submesh");
    for (const auto& s : sub.at("simplices")) {
      const auto v = s.get<std::vector<Index>>();
      if (v.size() != 4) {
        throw Error("mesh file: simplex with " + std::to_string(v.size()) + " vertices");
      }
      d.simplices.push_back({v[0], v[1], v[2], v[3]});
    }
    d.parent = sub.at("parent").get<std::vector<Index>>();
  } catch (const json::exception& e) {
    throw Error(std::string("mesh file: ") + e.what());
  }
  return d;
}

std::string description_to_json(const MeshDescription& d) {
  json j;
  j["vertices"] = json::array();
  for (const auto& p : d.points) {
    j["vertices"].push_back({p.x(), p.y(), p.z()});
  }
  j["faces"] = d.faces;
  j["cells"] = json::array();
  for (const auto& c : d.cells) {
    json cell = json::array();
    for (const auto& [f, o] : c) {
      cell.push_back(o * (f + 1));
    }
    j["cells"].push_back(cell);
  }
  j["gamma_faces"] = d.gamma_faces;
  j["submesh"]["simplices"] = d.simplices;
  j["submesh"]["parent"] = d.parent;
  return j.dump();
}

Mesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open mesh file " + path);
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return Mesh(description_from_json(ss.str()));
}

void save_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot write mesh file " + path);
  }
  out << description_to_json(mesh.description());
}

} // namespace ddr
