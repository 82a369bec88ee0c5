#include "gated/dataset.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <map>

#include <nlohmann/json.hpp>

#include "gated/errors.hpp"
#include "gated/image_io.hpp"

namespace fs = std::filesystem;

namespace gated {

Layout layout_from_string(const std::string& s) {
  if (s == "lolv1") return Layout::lolv1;
  if (s == "lolv2_real") return Layout::lolv2_real;
  if (s == "lolv2_syn") return Layout::lolv2_syn;
  if (s == "unpaired") return Layout::unpaired;
  if (s == "generic_paired") return Layout::generic_paired;
  throw ConfigError("unknown dataset layout: " + s +
                    " (expected lolv1|lolv2_real|lolv2_syn|unpaired|generic_paired)");
}

std::string layout_to_string(Layout l) {
  switch (l) {
    case Layout::lolv1: return "lolv1";
    case Layout::lolv2_real: return "lolv2_real";
    case Layout::lolv2_syn: return "lolv2_syn";
    case Layout::unpaired: return "unpaired";
    case Layout::generic_paired: return "generic_paired";
  }
  return "?";
}

namespace {

bool is_raster(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  for (const char* e : {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"})
    if (ext == e) return true;
  return false;
}

std::vector<fs::path> list_rasters(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && is_raster(e.path())) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

// Lowercased stem with a leading "low"/"normal"/"high" tag stripped when it
// prefixes a delimiter or digits, so "low00001" pairs with "normal00001".
std::string normalized_stem(const fs::path& p) {
  std::string s = p.stem().string();
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  for (const char* tag : {"low", "normal", "high"}) {
    const size_t n = std::strlen(tag);
    if (s.size() > n && s.compare(0, n, tag) == 0 &&
        (std::isdigit(static_cast<unsigned char>(s[n])) || s[n] == '_' || s[n] == '-')) {
      size_t start = n;
      while (start < s.size() && (s[start] == '_' || s[start] == '-')) ++start;
      return s.substr(start);
    }
  }
  return s;
}

void require_dir(const fs::path& p) {
  if (!fs::is_directory(p)) throw LayoutError("expected directory missing: " + p.string());
}

// Pairs <dir>/low-ish with <dir>/ref-ish by normalized stem.
std::vector<ManifestEntry> pair_dirs(const fs::path& low_dir, const fs::path& ref_dir,
                                     const std::string& source) {
  require_dir(low_dir);
  require_dir(ref_dir);
  std::map<std::string, fs::path> refs;
  for (const auto& p : list_rasters(ref_dir)) {
    auto stem = normalized_stem(p);
    if (!refs.emplace(stem, p).second)
      throw PairingError("duplicate reference stem '" + stem + "' in " + ref_dir.string());
  }
  std::vector<ManifestEntry> out;
  std::map<std::string, int> used;
  for (const auto& p : list_rasters(low_dir)) {
    const auto stem = normalized_stem(p);
    auto it = refs.find(stem);
    if (it == refs.end())
      throw PairingError("no reference counterpart for '" + p.filename().string() + "' in " +
                         ref_dir.string());
    ++used[stem];
    out.push_back({p.string(), it->second.string(), source + "/" + stem, source});
  }
  if (used.size() != refs.size())
    for (const auto& [stem, p] : refs)
      if (!used.count(stem))
        throw PairingError("reference '" + p.filename().string() + "' has no low-light counterpart");
  std::sort(out.begin(), out.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) { return a.id < b.id; });
  return out;
}

void check_counts(ScanResult& r, size_t want_train, size_t want_test, const std::string& name) {
  if (r.train.entries.size() != want_train)
    r.warnings.push_back(name + ": expected " + std::to_string(want_train) +
                         " train pairs, found " + std::to_string(r.train.entries.size()));
  if (r.test.entries.size() != want_test)
    r.warnings.push_back(name + ": expected " + std::to_string(want_test) +
                         " test pairs, found " + std::to_string(r.test.entries.size()));
}

}  // namespace

ScanResult scan_dataset(const std::string& root_s, Layout layout) {
  const fs::path root(root_s);
  if (!fs::is_directory(root)) throw LayoutError("dataset root is not a directory: " + root_s);
  ScanResult r;
  switch (layout) {
    case Layout::lolv1: {
      r.train.entries = pair_dirs(root / "our485" / "low", root / "our485" / "high", "lolv1");
      r.test.entries = pair_dirs(root / "eval15" / "low", root / "eval15" / "high", "lolv1");
      check_counts(r, 485, 15, "lolv1");
      break;
    }
    case Layout::lolv2_real: {
      const fs::path base = fs::is_directory(root / "Real_captured") ? root / "Real_captured" : root;
      r.train.entries = pair_dirs(base / "Train" / "Low", base / "Train" / "Normal", "lolv2_real");
      r.test.entries = pair_dirs(base / "Test" / "Low", base / "Test" / "Normal", "lolv2_real");
      check_counts(r, 689, 100, "lolv2_real");
      break;
    }
    case Layout::lolv2_syn: {
      const fs::path base = fs::is_directory(root / "Synthetic") ? root / "Synthetic" : root;
      r.train.entries = pair_dirs(base / "Train" / "Low", base / "Train" / "Normal", "lolv2_syn");
      r.test.entries = pair_dirs(base / "Test" / "Low", base / "Test" / "Normal", "lolv2_syn");
      check_counts(r, 900, 100, "lolv2_syn");
      break;
    }
    case Layout::unpaired: {
      auto files = list_rasters(root);
      if (files.empty()) throw LayoutError("no raster files in unpaired root: " + root_s);
      for (const auto& p : files)
        r.test.entries.push_back({p.string(), "", "unpaired/" + normalized_stem(p), "unpaired"});
      break;
    }
    case Layout::generic_paired: {
      r.train.entries = pair_dirs(root / "low", root / "high", "generic");
      break;
    }
  }
  if (r.train.entries.empty() && r.test.entries.empty())
    throw LayoutError("no entries found under " + root_s);
  return r;
}

ScanResult merge_scans(const std::vector<ScanResult>& scans) {
  ScanResult out;
  for (const auto& s : scans) {
    out.train.entries.insert(out.train.entries.end(), s.train.entries.begin(),
                             s.train.entries.end());
    out.test.entries.insert(out.test.entries.end(), s.test.entries.begin(), s.test.entries.end());
    out.warnings.insert(out.warnings.end(), s.warnings.begin(), s.warnings.end());
  }
  auto by_id = [](const ManifestEntry& a, const ManifestEntry& b) { return a.id < b.id; };
  std::sort(out.train.entries.begin(), out.train.entries.end(), by_id);
  std::sort(out.test.entries.begin(), out.test.entries.end(), by_id);
  return out;
}

PairedSample load_pair(const ManifestEntry& e, int h, int w, bool native, bool replicate_gray) {
  PairedSample s;
  s.id = e.id;
  s.source = e.source;
  s.low = load_image(e.low_path, replicate_gray);
  if (!native) s.low = resize_bilinear(s.low, h, w);
  if (!e.ref_path.empty()) {
    Tensor ref = load_image(e.ref_path, replicate_gray);
    if (!native) ref = resize_bilinear(ref, h, w);
    s.ref = std::move(ref);
  }
  return s;
}

std::vector<std::vector<int>> make_batches(size_t n, int batch_size,
                                           std::optional<uint64_t> shuffle_seed) {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  std::vector<int> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
  if (shuffle_seed) {
    Rng rng(*shuffle_seed);
    rng.shuffle(order);
  }
  std::vector<std::vector<int>> out;
  for (size_t i = 0; i < n; i += batch_size) {
    const size_t j = std::min(n, i + batch_size);
    out.emplace_back(order.begin() + i, order.begin() + j);
  }
  return out;
}

namespace {
void hflip_inplace(Tensor& t, int sample) {
  const int w = t.w();
  for (int c = 0; c < t.c(); ++c) {
    float* p = t.plane(sample, c);
    for (int y = 0; y < t.h(); ++y)
      for (int x = 0; x < w / 2; ++x) std::swap(p[y * w + x], p[y * w + (w - 1 - x)]);
  }
}
}  // namespace

Batch load_batch(const DatasetManifest& m, const std::vector<int>& idx, int h, int w,
                 Rng* aug_rng, bool replicate_gray) {
  Batch b;
  const int n = static_cast<int>(idx.size());
  b.low = Tensor(n, 3, h, w);
  bool all_ref = true;
  std::vector<PairedSample> samples;
  samples.reserve(n);
  for (int i = 0; i < n; ++i) {
    samples.push_back(load_pair(m.entries.at(idx[i]), h, w, false, replicate_gray));
    if (!samples.back().ref) all_ref = false;
    b.ids.push_back(samples.back().id);
  }
  if (all_ref) b.ref = Tensor(n, 3, h, w);
  for (int i = 0; i < n; ++i) {
    const bool flip = aug_rng && aug_rng->uniform() < 0.5;
    std::copy(samples[i].low.data(), samples[i].low.data() + samples[i].low.numel(),
              b.low.plane(i, 0));
    if (flip) hflip_inplace(b.low, i);
    if (all_ref) {
      std::copy(samples[i].ref->data(), samples[i].ref->data() + samples[i].ref->numel(),
                b.ref.plane(i, 0));
      if (flip) hflip_inplace(b.ref, i);
    }
  }
  return b;
}

void export_manifest_jsonl(const ScanResult& scan, std::ostream& out) {
  auto dump = [&](const DatasetManifest& m) {
    for (const auto& e : m.entries) {
      nlohmann::json j{{"id", e.id}, {"low", e.low_path}, {"split", m.split}, {"source", e.source}};
      if (!e.ref_path.empty()) j["ref"] = e.ref_path;
      out << j.dump() << "\n";
    }
  };
  dump(scan.train);
  dump(scan.test);
}

}  // namespace gated
