#include "tsgatr/dataset.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace tsgatr {

namespace {

using nlohmann::json;

SignatureLabel parse_label(const std::string& s, const std::string& where) {
  if (s == "genuine") return SignatureLabel::kGenuine;
  if (s == "skilled_forgery") return SignatureLabel::kSkilledForgery;
  throw Error(where + ": unknown label '" + s + "'");
}

Split parse_split(const std::string& s, const std::string& where) {
  if (s == "train") return Split::kTrain;
  if (s == "test") return Split::kTest;
  throw Error(where + ": unknown split '" + s + "'");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string to_string(SignatureLabel label) {
  return label == SignatureLabel::kGenuine ? "genuine" : "skilled_forgery";
}

std::string to_string(Split split) { return split == Split::kTrain ? "train" : "test"; }

std::vector<std::size_t> Dataset::users_in(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < users.size(); ++k)
    if (users[k].split == split) out.push_back(k);
  return out;
}

std::string manifest_to_json(const DatasetManifest& manifest) {
  json doc;
  doc["format"] = "tsgatr-manifest";
  doc["version"] = manifest.version;
  doc["seed"] = manifest.seed;
  json users = json::array();
  for (const auto& u : manifest.users) {
    json ju;
    ju["user_id"] = u.user_id;
    ju["split"] = to_string(u.split);
    json sigs = json::array();
    for (const auto& e : u.signatures) {
      json js;
      js["sig_id"] = e.sig_id;
      js["session"] = e.session;
      js["path"] = e.path;
      js["label"] = to_string(e.label);
      js["forger_id"] = e.forger_id ? json(*e.forger_id) : json(nullptr);
      sigs.push_back(std::move(js));
    }
    ju["signatures"] = std::move(sigs);
    users.push_back(std::move(ju));
  }
  doc["users"] = std::move(users);
  return doc.dump(2) + "\n";
}

DatasetManifest manifest_from_json(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(source + ": malformed JSON: " + e.what());
  }
  DatasetManifest m;
  try {
    if (doc.at("format") != "tsgatr-manifest") throw Error(source + ": not a tsgatr manifest");
    m.version = doc.at("version").get<int>();
    if (m.version != 1) throw Error(source + ": unsupported manifest version " + std::to_string(m.version));
    m.seed = doc.value("seed", std::uint64_t{0});
    std::set<std::string> user_ids, sig_ids;
    for (const auto& ju : doc.at("users")) {
      ManifestUser u;
      u.user_id = ju.at("user_id").get<std::string>();
      const std::string where = source + ": user " + u.user_id;
      if (!user_ids.insert(u.user_id).second) throw Error(source + ": duplicate user id '" + u.user_id + "'");
      u.split = parse_split(ju.at("split").get<std::string>(), where);
      for (const auto& js : ju.at("signatures")) {
        ManifestEntry e;
        e.sig_id = js.at("sig_id").get<std::string>();
        if (!sig_ids.insert(e.sig_id).second) throw Error(source + ": duplicate signature id '" + e.sig_id + "'");
        e.user_id = u.user_id;
        e.session = js.value("session", 1);
        e.path = js.at("path").get<std::string>();
        e.label = parse_label(js.at("label").get<std::string>(), where + " signature " + e.sig_id);
        if (js.contains("forger_id") && !js["forger_id"].is_null()) e.forger_id = js["forger_id"].get<std::string>();
        u.signatures.push_back(std::move(e));
      }
      m.users.push_back(std::move(u));
    }
  } catch (const json::exception& e) {
    throw Error(source + ": invalid manifest: " + e.what());
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write manifest " + path.string());
  out << manifest_to_json(manifest);
  if (!out) throw Error("failed writing manifest " + path.string());
}

std::filesystem::path resolve_manifest_path(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) return path / "manifest.json";
  return path;
}

Dataset read_manifest(const std::filesystem::path& path) {
  const auto file = resolve_manifest_path(path);
  if (!std::filesystem::exists(file)) throw Error("manifest not found: " + file.string());
  const std::string text = read_file(file);
  const auto manifest = manifest_from_json(text, file.string());
  const auto root = file.parent_path();

  Dataset ds;
  ds.manifest_hash = fnv1a64(text);
  for (const auto& mu : manifest.users) {
    UserRecord u;
    u.user_id = mu.user_id;
    u.split = mu.split;
    for (const auto& e : mu.signatures) {
      const auto sig_path = root / e.path;
      if (!std::filesystem::exists(sig_path))
        throw Error("missing signature file " + sig_path.string() + " (" + e.sig_id + ")");
      SignatureRecord rec;
      rec.sig_id = e.sig_id;
      rec.user_id = e.user_id;
      rec.session = e.session;
      rec.label = e.label;
      rec.forger_id = e.forger_id;
      rec.signature = read_signature_csv(sig_path);
      (e.label == SignatureLabel::kGenuine ? u.genuine : u.skilled).push_back(ds.signatures.size());
      ds.signatures.push_back(std::move(rec));
    }
    ds.users.push_back(std::move(u));
  }
  return ds;
}

}  // namespace tsgatr
