#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gated/rng.hpp"
#include "gated/tensor.hpp"

namespace gated {

enum class Layout { lolv1, lolv2_real, lolv2_syn, unpaired, generic_paired };

Layout layout_from_string(const std::string& s);  // throws ConfigError
std::string layout_to_string(Layout l);

struct ManifestEntry {
  std::string low_path;
  std::string ref_path;  // empty for unpaired entries
  std::string id;        // "<source>/<stem>"
  std::string source;    // dataset tag
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::string split;  // "train" | "test"
};

struct ScanResult {
  DatasetManifest train{{}, "train"};
  DatasetManifest test{{}, "test"};
  std::vector<std::string> warnings;  // e.g. known-corpus count mismatches
};

// Deterministic, lexicographically sorted scan. Paired layouts match files
// by normalized filename stem ("low00001" and "normal00001" pair up).
// Throws LayoutError when the expected directory structure is missing and
// PairingError when a stem has no counterpart.
ScanResult scan_dataset(const std::string& root, Layout layout);

// Combined-corpus mode: concatenates splits and re-sorts by id.
ScanResult merge_scans(const std::vector<ScanResult>& scans);

struct PairedSample {
  Tensor low;
  std::optional<Tensor> ref;
  std::string id, source;
};

// Loads and resizes an entry. native=true keeps the file's own resolution.
PairedSample load_pair(const ManifestEntry& e, int h = 128, int w = 128, bool native = false,
                       bool replicate_gray = false);

// Index batches: seeded shuffle when a seed is given, identity order
// otherwise; the last partial batch is retained.
std::vector<std::vector<int>> make_batches(size_t n, int batch_size,
                                           std::optional<uint64_t> shuffle_seed);

struct Batch {
  Tensor low, ref;  // (N, 3, H, W); ref is empty if any entry lacks one
  std::vector<std::string> ids;
};

// Loads the given entries as one batch. If aug_rng is non-null each sample
// is horizontally flipped with probability 1/2.
Batch load_batch(const DatasetManifest& m, const std::vector<int>& idx, int h, int w,
                 Rng* aug_rng = nullptr, bool replicate_gray = false);

// One JSON object per entry: {"id", "low", "ref", "split", "source"}.
void export_manifest_jsonl(const ScanResult& scan, std::ostream& out);

}  // namespace gated
