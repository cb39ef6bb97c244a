#pragma once

#include <map>
#include <string>
#include <vector>

namespace dmsr {

// Reserved padding token; never a catalog item id.
inline const std::string kPadId = "<pad>";

struct CatalogItem {
  std::string item_id;
  std::string display_name;
  std::map<std::string, std::vector<std::string>> metadata;
  long popularity = 0;  // occurrence count across loaded slates
};

/// Ordered item list padded to a fixed length n, with its textual label.
struct Slate {
  std::string slate_id;
  std::vector<std::string> items;  // length exactly n; tail holds kPadId
  int true_length = 0;
  std::string label;
};

struct DatasetSplit {
  std::vector<Slate> train;
  std::vector<Slate> test;
  uint64_t seed = 0;
};

struct SyntheticSpec {
  int n_genres = 4;
  int items_per_genre = 50;
  int slates_per_genre = 500;
  int slate_len = 8;
  uint64_t seed = 13;
};

struct Dataset {
  std::vector<Slate> slates;
  std::vector<CatalogItem> catalog;  // sorted by item_id
};

enum class Schema { kPlaylist, kBundle };

// Reads the canonical JSON-lines slate file (one slate object per line),
// pads/truncates item lists to `n`, deduplicates the catalog and counts
// popularity. Malformed lines raise DataError with the line number; empty
// slates are skipped (count reported via `skipped` when non-null).
Dataset load_dataset(const std::string& path, Schema schema, int n, int* skipped = nullptr);

// Deterministic shuffle by seed, then partition: floor(N * ratio) slates go
// to train.
DatasetSplit split(const std::vector<Slate>& slates, double ratio, uint64_t seed);

// Genre-clustered verification corpus: each slate samples items without
// replacement from a single genre and its label names that genre.
Dataset generate_synthetic(const SyntheticSpec& spec);

// Writes a Dataset back out as canonical JSON-lines (slates) plus a catalog
// JSON-lines file.
void write_canonical(const Dataset& ds, const std::string& slates_path,
                     const std::string& catalog_path);

std::string lowercase(std::string s);

}  // namespace dmsr
