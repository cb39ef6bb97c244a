#include "dmsr/data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_map>

#include "dmsr/errors.hpp"
#include "json.hpp"

namespace dmsr {

using nlohmann::json;

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

namespace {

std::string build_label(const json& j) {
  std::ostringstream label;
  label << j.value("title", "");
  std::string desc = j.value("description", "");
  if (!desc.empty()) label << " " << desc;
  if (j.contains("keywords"))
    for (const auto& kw : j.at("keywords")) label << " " << kw.get<std::string>();
  return lowercase(label.str());
}

void finalize_catalog(Dataset& ds, std::unordered_map<std::string, CatalogItem>& items) {
  ds.catalog.reserve(items.size());
  for (auto& [id, item] : items) ds.catalog.push_back(std::move(item));
  std::sort(ds.catalog.begin(), ds.catalog.end(),
            [](const CatalogItem& a, const CatalogItem& b) { return a.item_id < b.item_id; });
}

}  // namespace

Dataset load_dataset(const std::string& path, Schema /*schema*/, int n, int* skipped) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file: " + path);
  Dataset ds;
  std::unordered_map<std::string, CatalogItem> items;
  std::string line;
  int line_no = 0;
  int skip_count = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("malformed record at line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.contains("slate_id") || !j.contains("items"))
      throw DataError("malformed record at line " + std::to_string(line_no) +
                      ": missing slate_id or items");
    const json& jitems = j.at("items");
    if (jitems.empty()) {
      ++skip_count;
      continue;
    }
    Slate s;
    s.slate_id = j.at("slate_id").get<std::string>();
    s.label = build_label(j);
    for (const auto& ji : jitems) {
      if (static_cast<int>(s.items.size()) >= n) break;  // truncate, order preserved
      std::string id = ji.at("item_id").get<std::string>();
      s.items.push_back(id);
      auto [it, inserted] = items.try_emplace(id);
      if (inserted) {
        it->second.item_id = id;
        it->second.display_name = ji.value("name", id);
        if (ji.contains("metadata"))
          for (const auto& [k, v] : ji.at("metadata").items()) {
            if (v.is_array())
              for (const auto& e : v) it->second.metadata[k].push_back(e.get<std::string>());
            else
              it->second.metadata[k].push_back(v.get<std::string>());
          }
      }
      ++it->second.popularity;
    }
    s.true_length = static_cast<int>(s.items.size());
    s.items.resize(n, kPadId);
    ds.slates.push_back(std::move(s));
  }
  if (skipped) *skipped = skip_count;
  finalize_catalog(ds, items);
  return ds;
}

DatasetSplit split(const std::vector<Slate>& slates, double ratio, uint64_t seed) {
  if (slates.size() < 2) throw DataError("split: need at least 2 slates");
  if (ratio <= 0.0 || ratio >= 1.0) throw ConfigError("split: ratio must be in (0,1)");
  std::vector<Slate> shuffled = slates;
  std::mt19937_64 rng(seed);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  size_t n_train = static_cast<size_t>(std::floor(slates.size() * ratio));
  DatasetSplit out;
  out.seed = seed;
  out.train.assign(shuffled.begin(), shuffled.begin() + n_train);
  out.test.assign(shuffled.begin() + n_train, shuffled.end());
  return out;
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.slate_len > spec.items_per_genre)
    throw DataError("generate_synthetic: slate_len exceeds items per genre");
  if (spec.n_genres < 1 || spec.slates_per_genre < 1)
    throw DataError("generate_synthetic: infeasible spec");
  static const std::vector<std::string> kGenreWords = {
      "rock", "jazz", "ambient", "electronic", "folk", "metal", "classical", "hiphop",
      "blues", "soul", "country", "reggae"};
  if (spec.n_genres > static_cast<int>(kGenreWords.size()))
    throw DataError("generate_synthetic: at most " + std::to_string(kGenreWords.size()) +
                    " genres supported");
  std::mt19937_64 rng(spec.seed);
  Dataset ds;
  std::unordered_map<std::string, CatalogItem> items;
  for (int g = 0; g < spec.n_genres; ++g) {
    const std::string& genre = kGenreWords[g];
    std::vector<std::string> genre_items;
    for (int i = 0; i < spec.items_per_genre; ++i) {
      std::string id = genre + "_track_" + std::to_string(i);
      CatalogItem ci;
      ci.item_id = id;
      ci.display_name = genre + " track " + std::to_string(i);
      ci.metadata["categories"] = {genre};
      ci.metadata["keywords"] = {genre, "track" + std::to_string(i)};
      items.emplace(id, std::move(ci));
      genre_items.push_back(id);
    }
    for (int s = 0; s < spec.slates_per_genre; ++s) {
      std::vector<std::string> pool = genre_items;
      std::shuffle(pool.begin(), pool.end(), rng);
      Slate sl;
      sl.slate_id = genre + "_slate_" + std::to_string(s);
      sl.items.assign(pool.begin(), pool.begin() + spec.slate_len);
      sl.true_length = spec.slate_len;
      sl.label = "a mix of " + genre + " music";
      for (const std::string& id : sl.items) ++items.at(id).popularity;
      ds.slates.push_back(std::move(sl));
    }
  }
  finalize_catalog(ds, items);
  return ds;
}

void write_canonical(const Dataset& ds, const std::string& slates_path,
                     const std::string& catalog_path) {
  std::unordered_map<std::string, const CatalogItem*> by_id;
  for (const CatalogItem& c : ds.catalog) by_id[c.item_id] = &c;
  std::ofstream sf(slates_path);
  if (!sf) throw DataError("cannot write " + slates_path);
  for (const Slate& s : ds.slates) {
    json j;
    j["slate_id"] = s.slate_id;
    j["title"] = s.label;
    j["items"] = json::array();
    for (int i = 0; i < s.true_length; ++i) {
      json ji;
      ji["item_id"] = s.items[i];
      auto it = by_id.find(s.items[i]);
      if (it != by_id.end()) {
        ji["name"] = it->second->display_name;
        json meta;
        for (const auto& [k, v] : it->second->metadata) meta[k] = v;
        ji["metadata"] = meta;
      }
      j["items"].push_back(ji);
    }
    sf << j.dump() << "\n";
  }
  std::ofstream cf(catalog_path);
  if (!cf) throw DataError("cannot write " + catalog_path);
  for (const CatalogItem& c : ds.catalog) {
    json j;
    j["item_id"] = c.item_id;
    j["name"] = c.display_name;
    j["popularity"] = c.popularity;
    json meta;
    for (const auto& [k, v] : c.metadata) meta[k] = v;
    j["metadata"] = meta;
    cf << j.dump() << "\n";
  }
}

}  // namespace dmsr
