#pragma once

// On-disk corpus layout:
//
//   <root>/{train,val,test}/{real,fake}/img_%06d.ppm   (index = group id)
//   <root>/manifest.csv                                 path,label,group_id,seed
//
// Manifest paths are relative to <root>; rows follow split order (train, val,
// test) and, within a split, the in-memory sample order.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mdcs/data_synth.hpp"
#include "mdcs/image_io.hpp"

namespace mdcs {

inline constexpr const char* kManifestName = "manifest.csv";
inline constexpr const char* kManifestHeader = "path,label,group_id,seed";

inline std::string sample_relative_path(const std::string& split, const Sample& s) {
  char name[32];
  std::snprintf(name, sizeof name, "img_%06lld.ppm", static_cast<long long>(s.group_id));
  return split + "/" + label_name(s.label) + "/" + name;
}

inline void save_corpus(const Corpus& corpus, const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  std::error_code ec;
  for (const char* split : {"train", "val", "test"})
    for (const char* label : {"real", "fake"}) {
      fs::create_directories(root / split / label, ec);
      if (ec) throw IoError("cannot create " + (root / split / label).string() + ": " + ec.message());
    }
  std::ofstream manifest(root / kManifestName);
  if (!manifest) throw IoError("cannot open " + (root / kManifestName).string() + " for writing");
  manifest << kManifestHeader << '\n';
  const std::pair<const char*, const std::vector<Sample>*> splits[] = {
      {"train", &corpus.train}, {"val", &corpus.val}, {"test", &corpus.test}};
  for (const auto& [name, samples] : splits) {
    for (const Sample& s : *samples) {
      const std::string rel = sample_relative_path(name, s);
      write_ppm(root / rel, s.image);
      manifest << rel << ',' << label_name(s.label) << ',' << s.group_id << ',' << s.seed << '\n';
    }
  }
  if (!manifest) throw IoError("failed writing " + (root / kManifestName).string());
}

/// Reads a corpus written by save_corpus. Any malformed manifest row or image
/// raises IoError naming the offending path.
inline Corpus load_corpus(const std::filesystem::path& root) {
  const auto manifest_path = root / kManifestName;
  std::ifstream is(manifest_path);
  if (!is) throw IoError("cannot open " + manifest_path.string());
  std::string line;
  if (!std::getline(is, line) || line != kManifestHeader) {
    throw IoError("malformed manifest " + manifest_path.string() + ": bad header");
  }
  Corpus corpus;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    auto bad = [&](const std::string& why) {
      return IoError("malformed manifest " + manifest_path.string() + " row " + std::to_string(row) + ": " + why);
    };
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (fields.size() != 4) throw bad("expected 4 fields");
    Sample s;
    if (fields[1] == "real") s.label = Label::REAL;
    else if (fields[1] == "fake") s.label = Label::FAKE;
    else throw bad("unknown label '" + fields[1] + "'");
    try {
      std::size_t pos = 0;
      s.group_id = std::stoll(fields[2], &pos);
      if (pos != fields[2].size()) throw bad("bad group_id");
      s.seed = std::stoull(fields[3], &pos);
      if (pos != fields[3].size()) throw bad("bad seed");
    } catch (const IoError&) {
      throw;
    } catch (const std::exception&) {
      throw bad("non-numeric group_id or seed");
    }
    const std::string& rel = fields[0];
    const auto slash = rel.find('/');
    const std::string split = slash == std::string::npos ? "" : rel.substr(0, slash);
    std::vector<Sample>* dst = split == "train" ? &corpus.train
                               : split == "val" ? &corpus.val
                               : split == "test" ? &corpus.test
                                                 : nullptr;
    if (!dst) throw bad("path '" + rel + "' is not under train/, val/ or test/");
    s.image = read_ppm(root / rel);
    const std::size_t h = s.image.dim(1), w = s.image.dim(2);
    if (h != w) throw IoError("image " + (root / rel).string() + " is not square");
    if (corpus.image_size == 0) corpus.image_size = h;
    if (h != corpus.image_size) {
      throw IoError("image " + (root / rel).string() + " has size " + std::to_string(h) + ", corpus uses " +
                    std::to_string(corpus.image_size));
    }
    dst->push_back(std::move(s));
  }
  if (corpus.train.empty() && corpus.val.empty() && corpus.test.empty()) {
    throw IoError("manifest " + manifest_path.string() + " lists no samples");
  }
  return corpus;
}

/// Same corpus with every image rounded to 8-bit levels, i.e. exactly what
/// load_corpus returns after save_corpus.
inline Corpus quantized(Corpus corpus) {
  for (auto* split : {&corpus.train, &corpus.val, &corpus.test})
    for (Sample& s : *split) s.image = quantize_8bit(s.image);
  return corpus;
}

}  // namespace mdcs
