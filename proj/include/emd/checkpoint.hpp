#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>

#include "emd/model.hpp"

#include "json.hpp"

namespace emd {

// Checkpoint = JSON manifest (tensor table, vocab, ontology, encoder config)
// plus one little-endian float32 blob holding all tensors in registration
// order. Round-trips are bit-exact for float models.

inline std::string checkpoint_blob_path(const std::string& manifest_path) {
  const auto dot = manifest_path.rfind('.');
  const auto slash = manifest_path.rfind('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return manifest_path + ".bin";
  return manifest_path.substr(0, dot) + ".bin";
}

template <typename T>
void save_checkpoint(const Model<T>& model, const std::string& manifest_path) {
  const std::string blob_path = checkpoint_blob_path(manifest_path);
  nlohmann::ordered_json manifest;
  manifest["format_version"] = 1;
  manifest["dtype"] = "f32";
  manifest["byte_order"] = "little-endian";
  const auto slash = blob_path.rfind('/');
  manifest["blob"] = slash == std::string::npos ? blob_path : blob_path.substr(slash + 1);
  manifest["encoder"] = model.config().to_json();
  manifest["ontology"] = nlohmann::ordered_json::parse(model.ontology().to_json_string());
  manifest["vocab"] = model.vocab().tokens();

  nlohmann::ordered_json tensors = nlohmann::ordered_json::array();
  uint64_t offset = 0;
  for (const auto& p : model.store().all()) {
    tensors.push_back({{"name", p->name},
                       {"rows", p->val.rows},
                       {"cols", p->val.cols},
                       {"offset", offset}});
    offset += p->val.size() * sizeof(float);
  }
  manifest["tensors"] = std::move(tensors);

  std::ofstream mf(manifest_path, std::ios::binary);
  if (!mf) throw std::runtime_error("cannot write checkpoint manifest: " + manifest_path);
  mf << manifest.dump(2) << "\n";

  std::ofstream bf(blob_path, std::ios::binary);
  if (!bf) throw std::runtime_error("cannot write checkpoint blob: " + blob_path);
  for (const auto& p : model.store().all()) {
    for (T v : p->val.data) {
      const float f = static_cast<float>(v);
      bf.write(reinterpret_cast<const char*>(&f), sizeof(float));
    }
  }
}

template <typename T>
Model<T> load_checkpoint(const std::string& manifest_path) {
  std::ifstream mf(manifest_path, std::ios::binary);
  if (!mf) throw std::runtime_error("cannot open checkpoint manifest: " + manifest_path);
  nlohmann::json manifest;
  try {
    mf >> manifest;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(manifest_path + ": " + e.what());
  }
  if (manifest.value("format_version", 0) != 1)
    throw std::runtime_error(manifest_path + ": unsupported checkpoint format version");
  if (manifest.value("dtype", "") != "f32")
    throw std::runtime_error(manifest_path + ": unsupported dtype");

  EncoderConfig cfg = EncoderConfig::from_json(manifest.at("encoder"));
  Ontology onto = Ontology::from_json_string(manifest.at("ontology").dump());
  Vocab vocab = Vocab::from_tokens(manifest.at("vocab").get<std::vector<std::string>>());
  Model<T> model(cfg, std::move(vocab), std::move(onto));

  const auto slash = manifest_path.rfind('/');
  const std::string dir = slash == std::string::npos ? "" : manifest_path.substr(0, slash + 1);
  const std::string blob_path = dir + manifest.at("blob").get<std::string>();
  std::ifstream bf(blob_path, std::ios::binary);
  if (!bf) throw std::runtime_error("cannot open checkpoint blob: " + blob_path);

  for (const auto& jt : manifest.at("tensors")) {
    const std::string name = jt.at("name").get<std::string>();
    Param<T>* p = model.store().find(name);
    if (!p) throw std::runtime_error(manifest_path + ": unknown tensor " + name);
    if (p->val.rows != jt.at("rows").get<int>() || p->val.cols != jt.at("cols").get<int>())
      throw std::runtime_error(manifest_path + ": shape mismatch for " + name);
    bf.seekg(static_cast<std::streamoff>(jt.at("offset").get<uint64_t>()));
    for (auto& v : p->val.data) {
      float f = 0;
      bf.read(reinterpret_cast<char*>(&f), sizeof(float));
      if (!bf) throw std::runtime_error(blob_path + ": blob truncated at tensor " + name);
      v = static_cast<T>(f);
    }
  }
  return model;
}

}  // namespace emd
