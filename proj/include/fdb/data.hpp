#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fdb/blur.hpp"
#include "fdb/rng.hpp"
#include "fdb/tensor.hpp"

namespace fdb {

struct ManifestEntry {
    std::string sharp;
    std::string blurry;
    std::string kernel_field;  // empty when absent
    std::uint64_t seed = 0;
};

struct DatasetManifest {
    std::string root;  // directory the entry paths are relative to
    std::string split;
    std::vector<ManifestEntry> entries;

    std::string sharp_path(std::size_t i) const { return root + "/" + entries[i].sharp; }
    std::string blurry_path(std::size_t i) const { return root + "/" + entries[i].blurry; }
    std::string field_path(std::size_t i) const { return root + "/" + entries[i].kernel_field; }
};

struct SynthParams {
    int k = 13;
    double max_len = 4.0;
    double smoothness = 2.0;
};

// Line-delimited records: `sharp=<p> blurry=<p> [kernel_field=<p>] seed=<n>`,
// optionally preceded by a `split=<tag>` line.
DatasetManifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const DatasetManifest& m);

// For every PNM image under sharp_dir (sorted by name): synthesize a kernel
// field, reblur, store blurry (16-bit) and the field, write manifest.
// Deterministic in (contents of sharp_dir, params, seed).
template <typename T>
DatasetManifest synth_dataset(const std::string& sharp_dir, const std::string& out_dir,
                              const SynthParams& params, std::uint64_t seed,
                              const std::string& split = "train");

// Aligned random crop of sharp/blurry (and kernel-field channels when
// present), with optional consistent flip augmentation.
template <typename T>
struct PatchT {
    TensorT<T> sharp;   // [C,s,s]
    TensorT<T> blurry;  // [C,s,s]
    std::optional<TensorT<T>> field_channels;  // [1,k*k,s,s]
};

template <typename T>
PatchT<T> sample_patch(const TensorT<T>& sharp, const TensorT<T>& blurry,
                       const TensorT<T>* field_channels, int size, Rng& rng, bool augment);

}  // namespace fdb
