#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "pack/error.hpp"
#include "pack/mesh.hpp"

namespace pack {

struct ManifestEntry {
  std::string id;
  std::filesystem::path mesh_path;
  std::string category;
  double scale = 1.0;
};

// Object manifest: a JSON object mapping id -> {mesh_path, category, scale}.
// Relative mesh paths resolve against the manifest's directory.
inline std::vector<ManifestEntry> parse_manifest(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ManifestError("manifest must be a JSON object keyed by object id");
  std::vector<ManifestEntry> out;
  for (const auto& [id, v] : j.items()) {
    if (!v.is_object() || !v.contains("mesh_path"))
      throw ManifestError("manifest entry '" + id + "' needs a mesh_path");
    ManifestEntry e;
    e.id = id;
    e.mesh_path = v.at("mesh_path").get<std::string>();
    if (e.mesh_path.is_relative()) e.mesh_path = base_dir / e.mesh_path;
    e.category = v.value("category", id);
    e.scale = v.value("scale", 1.0);
    if (!(e.scale > 0)) throw ManifestError("manifest entry '" + id + "' has a non-positive scale");
    out.push_back(std::move(e));
  }
  return out;
}

// Id-indexed set of ready-to-pack object models.
class ObjectLibrary {
 public:
  ObjectLibrary() = default;

  static ObjectLibrary from_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ManifestError("cannot open manifest " + path.string());
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ManifestError("manifest " + path.string() + ": " + e.what());
    }
    ObjectLibrary lib;
    for (const auto& e : parse_manifest(j, path.parent_path())) {
      if (!std::filesystem::exists(e.mesh_path))
        throw ManifestError("object '" + e.id + "': mesh not found at " + e.mesh_path.string());
      try {
        lib.add(make_object(e.id, e.category, load_mesh(e.mesh_path, format_from_extension(e.mesh_path), e.scale)));
      } catch (const ManifestError&) {
        throw;
      } catch (const Error& err) {
        throw ManifestError("object '" + e.id + "': " + err.what());
      }
    }
    return lib;
  }

  void add(ObjectModel m) {
    const std::string id = m.id;
    objects_.insert_or_assign(id, std::move(m));
  }

  bool contains(const std::string& id) const { return objects_.contains(id); }

  const ObjectModel& at(const std::string& id) const {
    auto it = objects_.find(id);
    if (it == objects_.end()) throw ManifestError("unknown object id '" + id + "'");
    return it->second;
  }

  std::vector<ObjectModel> resolve(const std::vector<std::string>& ids) const {
    std::vector<ObjectModel> out;
    out.reserve(ids.size());
    for (const auto& id : ids) out.push_back(at(id));
    return out;
  }

  const std::map<std::string, ObjectModel>& all() const { return objects_; }

 private:
  std::map<std::string, ObjectModel> objects_;
};

}  // namespace pack
